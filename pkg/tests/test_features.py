import numpy as np
import pytest

from scheds.features import (GSOD_MAPPING, build_temperature_design, build_variance_dictionary, load_csv,
                             load_mapping, synthetic_daily_weather, temperature_covariates, time_basis)


def _write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_load_well_formed(tmp_path):
    path = _write(tmp_path, "y,a,b\n" + "".join(f"{i},{2 * i},{i * i}\n" for i in range(5)))
    ds = load_csv(path, "y", ["a", "b"])
    assert ds.T == 5 and ds.dropped == 0
    np.testing.assert_array_equal(ds.matrix(), np.column_stack([2.0 * np.arange(5), np.arange(5.0) ** 2]))
    np.testing.assert_array_equal(ds.t, np.arange(1, 6))


def test_empty_cell_dropped(tmp_path):
    path = _write(tmp_path, "y,a\n1,2\n3,\n5,6\n")
    ds = load_csv(path, "y", ["a"])
    assert ds.T == 2 and ds.dropped == 1


def test_non_numeric_cell_named(tmp_path):
    path = _write(tmp_path, "y,a\n1,2\n3,abc\n")
    with pytest.raises(ValueError, match=r"row 3, column 'a'"):
        load_csv(path, "y", ["a"])


def test_missing_column(tmp_path):
    path = _write(tmp_path, "y,a\n1,2\n")
    with pytest.raises(ValueError, match="missing column 'b'"):
        load_csv(path, "y", ["b"])


def test_delimiter_and_time_column(tmp_path):
    path = _write(tmp_path, "t;y;a\n10;1;2\n20;3;4\n")
    ds = load_csv(path, "y", ["a"], time_column="t", delimiter=";")
    np.testing.assert_array_equal(ds.t, [10.0, 20.0])


def test_gsod_mapping(tmp_path):
    path = _write(tmp_path, "YEARMODA,TEMP,MAX,MIN,WDSP\n20100101,30.1,35.0*,20.0,5.0\n"
                            "20100102,31.0,9999.9,21.0,4.0\n20100103,29.5,33.0,19.0,999.9\n"
                            "20100104,28.0,32.0,18.5,3.0\n")
    ds = load_csv(path, "temp", ["max", "min", "wind"], mapping=GSOD_MAPPING)
    assert ds.T == 2 and ds.dropped == 2
    np.testing.assert_array_equal(ds.columns["max"], [35.0, 32.0])


def test_mapping_file(tmp_path):
    path = _write(tmp_path, '{"columns": {"temp": "T"}}', "m.json")
    assert load_mapping(path)["columns"]["temp"] == "T"
    bad = _write(tmp_path, '{"cols": {}}', "bad.json")
    with pytest.raises(ValueError):
        load_mapping(bad)


def test_design_shape_and_groups():
    rng = np.random.default_rng(0)
    t = np.arange(1, 31, dtype=float)
    X, part = build_temperature_design(t, rng.normal(size=(30, 16)))
    assert X.shape == (30, 2176)
    assert part.K == 136 and all(g.size == 16 for g in part.groups)
    part.check(2176)


def test_design_unit_covariates_first_group():
    t = np.array([100.0, 200.0, 365.0])
    X, _ = build_temperature_design(t, np.ones((3, 16)))
    np.testing.assert_allclose(X[:, :16], time_basis(t))


def test_time_basis_values():
    psi = time_basis([365.0])[0]
    assert psi[0] == 1.0
    assert psi[1] == pytest.approx(365.0)
    assert psi[2] == pytest.approx(np.sqrt(365.0), rel=1e-12)
    assert psi[2] == pytest.approx(19.105, abs=1e-3)
    assert psi[3] == pytest.approx(365.0 ** (1 / 3))


def test_variance_dictionary_values():
    R = build_variance_dictionary([365.0 / 2, 365.0])
    assert R.shape == (2, 11)
    np.testing.assert_array_equal(R[:, 0], 1.0)
    assert R[0, 3] == pytest.approx(0.0, abs=1e-15)
    assert R[1, 2] == pytest.approx(1 / np.sqrt(3 * 365.0))
    assert R[1, 2] == pytest.approx(0.03022, abs=1e-5)


def test_variance_dictionary_nonnegative_distinct():
    t = np.arange(1, 2000, dtype=float)
    R = build_variance_dictionary(t)
    assert R.min() >= 0.0
    for i in range(11):
        for j in range(i + 1, 11):
            assert not np.allclose(R[:, i], R[:, j])


def test_nonpositive_t_rejected():
    with pytest.raises(ValueError):
        build_variance_dictionary([0.0, 1.0])
    with pytest.raises(ValueError):
        time_basis([-1.0])


def test_builders_deterministic():
    rng = np.random.default_rng(1)
    t, U = np.arange(1, 11, dtype=float), rng.normal(size=(10, 16))
    np.testing.assert_array_equal(build_temperature_design(t, U)[0], build_temperature_design(t, U)[0])


def test_temperature_covariates_layout():
    n = 20
    temp = np.arange(n, dtype=float) ** 2
    tmax, tmin, wind = temp + 5, temp - 3, np.arange(n, dtype=float)
    t, U, y = temperature_covariates(temp, tmax, tmin, wind)
    assert U.shape == (n - 8, 16) and y.size == n - 8
    # first usable day is index 8: y = temp[8] - temp[7]
    assert y[0] == temp[8] - temp[7]
    assert U[0, 0] == 1.0
    assert U[0, 1] == temp[7] - temp[6]          # y_{t-1}
    assert U[0, 7] == temp[1] - temp[0]          # y_{t-7}
    np.testing.assert_array_equal(U[:, 8:15], 8.0)  # intraday range
    assert U[0, 15] == wind[7]
    assert t[0] == 9.0


def test_synthetic_weather_deterministic():
    a = synthetic_daily_weather(50, seed=3)
    b = synthetic_daily_weather(50, seed=3)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
    temp, tmax, tmin, wind = a
    assert np.all(tmax > tmin) and np.all(wind >= 0)
