import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from shadowlab.kernels import (
    BETA_MIN,
    Covariance,
    FamilyError,
    Kernel,
    KernelError,
    ModeError,
    OrderError,
    covariance_at,
    default_trunc_radius,
    eval_kernel,
    make_kernel,
    validate_assumptions,
)


def quadrature_oracle(k, z=(0.0, 0.0)):
    """Independent (q*q)(z) via adaptive 2-D quadrature."""
    t = k.trunc_radius
    z = np.asarray(z, dtype=float)

    def integrand(y, x):
        p = np.array([x, y])
        return eval_kernel(k, p) * eval_kernel(k, p - z)

    val, err = dblquad(integrand, -t, t, -t, t, epsabs=1e-10, epsrel=1e-10)
    assert err < 1e-8
    return val


def test_unit_gaussian_covariance_at_zero_is_pi() -> None:
    k = make_kernel("gaussian", (1.0, 1.0))
    oracle = quadrature_oracle(k)
    assert oracle == pytest.approx(3.141592653589793, abs=1e-6)
    cf = covariance_at(Covariance(k, mode="closed_form"), np.zeros(2))
    num = covariance_at(Covariance(k, mode="numeric"), np.zeros(2))
    assert cf == pytest.approx(oracle, rel=1e-9)
    assert num == pytest.approx(oracle, rel=1e-6)


def test_gaussian_closed_form_matches_numeric_on_lags() -> None:
    k = make_kernel("gaussian", (0.8, 1.3))
    cov_cf = Covariance(k, mode="closed_form")
    cov_num = Covariance(k, mode="numeric")
    lags = np.array([[0.0, 0.0], [0.5, 0.0], [1.0, 1.0], [-2.0, 0.7]])
    cf = covariance_at(cov_cf, lags)
    num = covariance_at(cov_num, lags)
    assert np.allclose(cf, num, rtol=1e-6)


def test_bump_covariance_matches_quadrature_oracle() -> None:
    k = make_kernel("bump", (1.5, 2.0))
    num = covariance_at(Covariance(k, mode="numeric"), np.zeros(2))
    assert num == pytest.approx(quadrature_oracle(k), rel=1e-6)


def test_default_trunc_radius_gaussian_is_about_7_4_scales() -> None:
    r = default_trunc_radius("gaussian", (1.0, 1.0))
    assert r == pytest.approx(math.sqrt(-2.0 * math.log(1e-12)), rel=1e-12)
    assert 7.4 < r < 7.5
    assert default_trunc_radius("gaussian", (2.0, 1.0)) == pytest.approx(2 * r)


def test_kernel_vanishes_beyond_trunc_radius() -> None:
    k = make_kernel("gaussian", (1.0, 1.0), trunc_radius=3.0)
    pts = np.array([[3.001, 0.0], [0.0, -5.0], [2.5, 2.5]])
    assert np.all(eval_kernel(k, pts) == 0.0)
    assert eval_kernel(k, np.array([2.999, 0.0])) > 0.0


@pytest.mark.parametrize(
    "family,params",
    [
        ("gaussian", (1.0, 1.0)),
        ("bump", (2.0, 1.5)),
        ("power_tail", (1.0, 1.0, 3.0)),
    ],
)
def test_symmetry_is_exact(family, params) -> None:
    k = make_kernel(family, params)
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(64, 2)) * k.trunc_radius / 3.0
    assert np.array_equal(eval_kernel(k, pts), eval_kernel(k, -pts))


@pytest.mark.parametrize(
    "family,params,probe",
    [
        ("gaussian", (1.0, 1.0), (0.7, -0.4)),
        ("gaussian", (0.6, 2.0), (0.3, 0.5)),
        ("bump", (2.0, 1.0), (0.8, -0.3)),
        ("power_tail", (1.0, 1.0, 3.0), (0.4, 0.2)),
        ("power_tail", (1.0, 1.0, 3.0), (1.7, -0.9)),
    ],
)
def test_derivatives_match_finite_differences(family, params, probe) -> None:
    k = make_kernel(family, params)
    z = np.array(probe)
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    h = 1e-5

    def q(p):
        return eval_kernel(k, p)

    fd = {
        (1, 0): (q(z + h * e1) - q(z - h * e1)) / (2 * h),
        (0, 1): (q(z + h * e2) - q(z - h * e2)) / (2 * h),
        (2, 0): (q(z + h * e1) - 2 * q(z) + q(z - h * e1)) / h**2,
        (0, 2): (q(z + h * e2) - 2 * q(z) + q(z - h * e2)) / h**2,
        (1, 1): (
            q(z + h * (e1 + e2)) - q(z + h * (e1 - e2))
            - q(z - h * (e1 - e2)) + q(z - h * (e1 + e2))
        ) / (4 * h**2),
    }
    for order, approx in fd.items():
        exact = eval_kernel(k, z, order)
        assert exact == pytest.approx(approx, rel=5e-5, abs=5e-6)


def test_power_tail_is_exactly_polynomial_outside_scale() -> None:
    k = make_kernel("power_tail", (1.0, 2.0, 3.0), trunc_radius=50.0)
    for r in (1.0, 1.5, 4.0, 20.0):
        assert eval_kernel(k, np.array([r, 0.0])) == pytest.approx(
            2.0 * r**-3.0, rel=1e-14)


def test_power_tail_second_derivative_continuous_at_glue() -> None:
    k = make_kernel("power_tail", (1.0, 1.0, 3.0), trunc_radius=50.0)
    eps = 1e-7
    for order in [(0, 0), (1, 0), (2, 0), (1, 1), (0, 2)]:
        lo = eval_kernel(k, np.array([1.0 - eps, 0.3]), order)
        hi = eval_kernel(k, np.array([1.0 + eps, 0.3]), order)
        assert lo == pytest.approx(hi, rel=1e-5, abs=1e-8)


def test_profile_decreases_from_origin() -> None:
    for family, params in [
        ("gaussian", (1.0, 1.0)),
        ("bump", (1.0, 1.0)),
        ("power_tail", (1.0, 1.0, 3.0)),
    ]:
        k = make_kernel(family, params)
        r = np.linspace(0, min(k.trunc_radius, 10.0), 200)
        pts = np.stack([r, np.zeros_like(r)], axis=-1)
        v = eval_kernel(k, pts)
        assert v[0] == max(v)
        assert np.all(np.diff(v) <= 1e-15)


def test_validate_gaussian_passes_everything() -> None:
    rep = validate_assumptions(make_kernel("gaussian", (1.0, 1.0)))
    assert rep.passed
    assert [it.name for it in rep.items] == [
        "smooth_c4", "symmetric", "beta_above_5_2",
        "decay_bound", "covariance_positive",
    ]


def test_validate_bump_passes_everything() -> None:
    assert validate_assumptions(make_kernel("bump", (0.8, 1.0))).passed
    assert validate_assumptions(make_kernel("bump", (3.0, 1.0))).passed


def test_validate_power_tail_beta3_passes() -> None:
    k = make_kernel("power_tail", (1.0, 1.0, 3.0), trunc_radius=200.0)
    rep = validate_assumptions(k)
    assert rep.passed


def test_validate_power_tail_beta2_fails_beta_item() -> None:
    k = make_kernel("power_tail", (1.0, 1.0, 2.0), trunc_radius=200.0)
    rep = validate_assumptions(k)
    assert not rep.passed
    names = [it.name for it in rep.failures()]
    assert "beta_above_5_2" in names
    assert BETA_MIN == 2.5


def test_validate_zero_kernel_fails_positivity() -> None:
    k = make_kernel("gaussian", (1.0, 0.0))
    rep = validate_assumptions(k)
    failed = [it.name for it in rep.failures()]
    assert "covariance_positive" in failed


def test_eval_kernel_rejects_high_orders() -> None:
    k = make_kernel("gaussian", (1.0, 1.0))
    with pytest.raises(OrderError):
        eval_kernel(k, np.zeros(2), order=(2, 1))
    with pytest.raises(OrderError):
        eval_kernel(k, np.zeros(2), order=(-1, 0))


def test_unknown_family_rejected() -> None:
    with pytest.raises(FamilyError):
        make_kernel("matern", (1.0, 1.0))


def test_param_count_enforced() -> None:
    with pytest.raises(KernelError):
        make_kernel("gaussian", (1.0, 1.0, 3.0))
    with pytest.raises(KernelError):
        make_kernel("power_tail", (1.0, 1.0))


def test_covariance_mode_validation_and_fallback_flag() -> None:
    k = make_kernel("bump", (1.0, 1.0))
    with pytest.raises(ModeError):
        Covariance(k, mode="magic")
    cov = Covariance(k, mode="closed_form")
    assert cov.fallback_warning
    assert cov.resolved_mode == "numeric"
    g = Covariance(make_kernel("gaussian", (1.0, 1.0)), mode="auto")
    assert g.resolved_mode == "closed_form"
    assert not g.fallback_warning


def test_kernel_dict_roundtrip() -> None:
    k = make_kernel("power_tail", (1.2, 0.5, 3.5), trunc_radius=40.0)
    assert Kernel.from_dict(k.to_dict()) == k
