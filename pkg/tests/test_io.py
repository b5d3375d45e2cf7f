import json
import math

import numpy as np
import pytest

from sigplusnoise import io
from sigplusnoise.inference.gibbs import SamplerConfig, sample_posterior
from sigplusnoise.model import PARAM_NAMES


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_bundled_dataset_shape(nao):
    assert (nao.n_years, nao.n_members) == (20, 24)
    assert list(nao.years) == list(range(1992, 2012))
    prov = io.read_provenance(io.reference_dataset_path())
    assert prov["seed"] == "1" and "member_mean_var_source" in prov


def test_round_trip_is_exact(tmp_path, nao):
    p = io.write_dataset(nao, tmp_path / "x.csv", {"note": "copy"})
    back = io.load_dataset(p)
    np.testing.assert_array_equal(back.obs, nao.obs)
    np.testing.assert_array_equal(back.ens, nao.ens)
    np.testing.assert_array_equal(back.years, nao.years)
    assert io.read_provenance(p) == {"note": "copy"}


def test_rows_sorted_by_year(tmp_path):
    d = io.load_dataset(write(tmp_path, "year,obs,m1,m2\n2001,1,2,3\n1999,4,5,6\n2000,7,8,9\n"))
    assert list(d.years) == [1999, 2000, 2001]
    assert list(d.obs) == [4.0, 7.0, 1.0]


@pytest.mark.parametrize("text, line, column", [
    ("year,obs,m1,m2\n2000,1,2,3\n2001,1,,3\n2002,1,2,3\n", 3, "m1"),
    ("year,obs,m1,m2\n2000,1,2,3\n2001,1,2\n2002,1,2,3\n", 3, None),
    ("year,obs,m1,m2\n2000,1,2,3\n2001,abc,2,3\n2002,1,2,3\n", 3, "obs"),
    ("year,obs,m1,m2\n2000,1,2,3\n2000,1,2,3\n2002,1,2,3\n", 3, "year"),
    ("year,obs,m1,m2\n2000,1,2,3\n2001,1,nan,3\n2002,1,2,3\n", 3, "m1"),
])
def test_malformed_rows_are_located(tmp_path, text, line, column):
    with pytest.raises(io.DatasetParseError) as e:
        io.load_dataset(write(tmp_path, text))
    assert e.value.line == line
    assert e.value.column == column
    assert f"line {line}" in str(e.value)


def test_bad_header_and_sizes(tmp_path):
    with pytest.raises(io.DatasetParseError):
        io.load_dataset(write(tmp_path, "yr,obs,m1,m2\n2000,1,2,3\n"))
    with pytest.raises(ValueError, match="years"):
        io.load_dataset(write(tmp_path, "year,obs,m1,m2\n2000,1,2,3\n2001,1,2,3\n"))
    with pytest.raises(ValueError, match="members"):
        io.load_dataset(write(tmp_path, "year,obs,m1\n2000,1,2\n2001,1,2\n2002,1,2\n"))
    with pytest.raises(ValueError):
        io.load_dataset(write(tmp_path, "year,obs,m1,m2\n2000,1,2,3\n"), format="netcdf")
    with pytest.raises(io.DatasetParseError, match="not found"):
        io.load_dataset(tmp_path / "missing.csv")


def test_provenance_lines_skipped(tmp_path):
    d = io.load_dataset(write(tmp_path, "# a: 1\n#b: two\nyear,obs,m1,m2\n1,1,2,3\n2,1,2,3\n3,4,5,6\n"))
    assert d.n_years == 3
    assert io.read_provenance(tmp_path / "d.csv") == {"a": "1", "b": "two"}


def test_samples_round_trip(tmp_path, nao):
    ch = sample_posterior(nao, cfg=SamplerConfig(chains=3, iterations=200, warmup=50, seed=2))
    p = io.write_samples(ch, tmp_path / "s.csv")
    header = p.read_text().splitlines()[0].split(",")
    assert header[:8] == ["chain", "iter", *PARAM_NAMES]
    assert header[-1] == f"s_{nao.n_years}"
    back = io.read_samples(p)
    for k in PARAM_NAMES:
        np.testing.assert_array_equal(back.draws[k], ch.draws[k])
    np.testing.assert_array_equal(back.signal, ch.signal)


def test_json_schema_and_non_finite(tmp_path):
    p = io.write_json({"a": np.float64(0.1), "b": math.inf, "c": np.arange(3), "d": np.bool_(True)},
                      tmp_path / "x.json")
    doc = json.loads(p.read_text())
    assert doc["schema_version"] == io.SCHEMA_VERSION
    assert doc["a"] == 0.1 and doc["b"] == "inf" and doc["c"] == [0, 1, 2] and doc["d"] is True


def test_table_formatting(tmp_path):
    p = io.write_table(tmp_path / "t.csv", ["k", "v"], [["x", 1 / 3], ["y", 2]])
    rows = p.read_text().splitlines()
    assert rows[1] == "x,0.33333333333333331" and rows[2] == "y,2"
    assert float(rows[1].split(",")[1]) == 1 / 3


def test_output_lock(tmp_path):
    with io.output_lock(tmp_path / "out") as d:
        assert (d / io.LOCK_NAME).exists()
        with pytest.raises(io.OutputLockedError):
            with io.output_lock(tmp_path / "out"):
                pass
    assert not (tmp_path / "out" / io.LOCK_NAME).exists()


def test_default_output_dir(monkeypatch, tmp_path):
    monkeypatch.delenv(io.OUTPUT_DIR_ENV, raising=False)
    assert str(io.default_output_dir()) == io.DEFAULT_OUTPUT_DIR
    monkeypatch.setenv(io.OUTPUT_DIR_ENV, str(tmp_path / "elsewhere"))
    assert io.default_output_dir() == tmp_path / "elsewhere"
