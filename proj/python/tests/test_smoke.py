import math

import numpy as np
import pytest

import doilab


def test_order_parameter_limits():
    assert abs(doilab.s2(0.0)) < 1e-14
    assert 0.0 < doilab.s2(5.0) < 1.0
    assert doilab.partition_function(0.0) == pytest.approx(4 * math.pi, rel=1e-12)


def test_roots_and_coefficients():
    assert doilab.alpha_star() < 7.5
    for eta in doilab.solve_eta(8.0):
        assert abs(eta - 8.0 * doilab.s2(eta)) < 1e-10
    params = doilab.equilibrium_params(8.0)
    kernel = doilab.KernelSpec.gaussian(1.0, 2)
    c = doilab.lambda_coefficient(params, kernel)
    assert c.gamma == pytest.approx(doilab.gamma_constant(params), rel=1e-14)
    assert c.Lambda == pytest.approx(2 * c.alpha * c.mu * c.S2**2 / (c.gamma * kernel.d), rel=1e-12)
    assert c.gamma > 0 and c.Lambda > 0


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        doilab.parse_config("nodes = 48")
    with pytest.raises(ValueError):
        doilab.KernelSpec.gaussian(5.0, 1)
    assert issubclass(doilab.NumericalError, RuntimeError)


def test_config_round_trip():
    cfg = doilab.parse_config("alpha = 10\nepsilons = 0.2, 0.1\n")
    assert cfg.alpha == 10.0
    assert cfg.epsilons == [0.2, 0.1]
    again = doilab.parse_config(str(cfg))
    assert str(again) == str(cfg)


def test_harmonic_map_flow_keeps_unit_length():
    cfg = doilab.ExperimentConfig()
    cfg.dim, cfg.n, cfg.length = 2, 16, 1.0
    n = doilab.initial_director(cfg)
    assert n.shape == (16, 16, 3)
    dt = 0.5 * doilab.hmhf_stable_dt(2, 1.0, 16, 1.0)
    e0 = doilab.dirichlet_energy(n, 1.0)
    out = doilab.hmhf(n, 1.0, dt, 50, 1.0)
    assert np.max(np.abs(np.linalg.norm(out, axis=-1) - 1.0)) < 1e-15
    assert doilab.dirichlet_energy(out, 1.0) < e0


def test_small_sweep():
    cfg = doilab.parse_config("length = 5\nnodes = 16\nt_final = 0.02\nsamples = 4\n")
    report = doilab.epsilon_sweep(cfg)
    assert [r.eps for r in report.rows] == cfg.epsilons
    assert all(r.status == "ok" for r in report.rows)
    errs = [r.sup_error_solvability for r in report.rows]
    assert errs[0] > errs[1] > errs[2]
    assert report.solvability_lambda == pytest.approx(0.5 * report.coefficients.Lambda)


def test_bifurcation_rows():
    rows = doilab.bifurcation_table(8.0, 8.0, 1)
    assert [r.branch for r in rows] == ["unstable", "isotropic", "stable"]
