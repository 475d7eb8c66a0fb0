import math

import numpy as np
import pytest

import mesoclt


def test_semicircle():
    assert mesoclt.semicircle_density(0.0) == pytest.approx(1.0 / math.pi)
    assert mesoclt.semicircle_density(2.5) == 0.0
    m = mesoclt.stieltjes_m(1j)
    assert m.imag > 0
    assert abs(m * m + 1j * m + 1) < 1e-14
    with pytest.raises(ValueError):
        mesoclt.stieltjes_m(0.5)


def test_resolvent_covariance():
    cov, pseudo = mesoclt.resolvent_covariance(1j, 1 + 1j)
    assert cov == pytest.approx(0.24 - 0.32j)
    assert pseudo == 0
    with pytest.raises(mesoclt.DomainError):
        mesoclt.resolvent_covariance(1.0, 1j)


def test_spectrum():
    spec = mesoclt.EnsembleSpec.goe(64, seed=5)
    h = mesoclt.sample_matrix(spec, 3)
    assert h.shape == (64, 64)
    assert np.allclose(h, h.T)
    eigs = np.asarray(mesoclt.eigenvalues(spec, 3))
    assert np.all(np.diff(eigs) >= 0)
    assert np.allclose(eigs, np.linalg.eigvalsh(h), atol=1e-10)
    again = np.asarray(mesoclt.eigenvalues(spec, 3))
    assert np.array_equal(eigs, again)


def test_gue_sample_is_hermitian():
    h = mesoclt.sample_matrix(mesoclt.EnsembleSpec.gue(16, seed=1), 0)
    assert np.iscomplexobj(h)
    assert np.allclose(h, h.conj().T)


def test_test_functions_and_h_half():
    f = mesoclt.test_function("cauchy")
    assert f(0.0) == pytest.approx(1.0)
    assert mesoclt.h_half_covariance(f, f) == pytest.approx(0.25, abs=1e-7)
    assert mesoclt.h_half_variance_fourier("cauchy") == pytest.approx(0.25, abs=1e-10)


def test_sample_Y():
    y = np.asarray(mesoclt.sample_Y([1j, 1 + 1j], 20000, seed=2))
    assert y.shape == (20000, 2)
    assert np.mean(np.abs(y[:, 0]) ** 2) == pytest.approx(0.5, rel=0.05)
    assert abs(np.mean(y[:, 0] * np.conj(y[:, 1])) - (0.24 - 0.32j)) < 0.03


def test_cumulants():
    # N(0, 2): raw moments 0, 2, 0, 12
    k = mesoclt.cumulants_from_moments([0.0, 2.0, 0.0, 12.0])
    assert k[0] == pytest.approx(0.0)
    assert k[1] == pytest.approx(2.0)
    assert abs(k[3]) < 1e-12


def test_run_summary():
    s = mesoclt.run_summary(
        {
            "experiment": "resolvent_clt",
            "num_samples": 64,
            "b_points": [1j, 1 + 1j],
            "ensemble.dimension": 16,
            "ensemble.master_seed": 3,
        }
    )
    assert s["experiment"] == "resolvent_clt"
    for key in ("config", "results", "provenance"):
        assert key in s


def test_config_error():
    with pytest.raises(mesoclt.ConfigError):
        mesoclt.run_summary({"experiment": "resolvent_clt", "num_samples": 10})
