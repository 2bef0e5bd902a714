import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curveflow.errors import BracketError, ConvergenceError, DomainError
from curveflow.specfun import (
    EllipticArgs,
    Tolerance,
    elliptic_f,
    elliptic_k,
    erf,
    erfc,
    gauss_legendre,
    invert_monotone,
    jacobi_sn_cn_dn,
    quad_singular,
)

mp.mp.dps = 30

# frozen from an mpmath findroot on the mpmath quadrature of (cos s)^(-3/2)
SEC32_ROOT_AT_2 = 1.1892421925866496502


def taylor_erf(x: float) -> float:
    """Maclaurin series summed in extended precision."""
    x = mp.mpf(x)
    total, term, n = mp.mpf(0), x, 0
    while True:
        add = term / (2 * n + 1)
        total += add
        if abs(add) < mp.mpf(10) ** -28:
            break
        n += 1
        term *= -x * x / n
    return float(2 / mp.sqrt(mp.pi) * total)


class TestTolerance:
    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            Tolerance(0.0, 1e-3)
        with pytest.raises(ValueError):
            Tolerance(1e-3, -1.0)
        with pytest.raises(ValueError):
            Tolerance(1e-3, 1e-3, 0)

    def test_bound_and_halved(self):
        t = Tolerance(1e-8, 1e-6)
        assert t.bound(1.0) == 1e-6
        assert t.bound(1e-4) == 1e-8
        assert t.halved().abs_tol == 5e-9


class TestErf:
    def test_zero(self):
        assert erf(0.0) == 0.0

    def test_odd(self):
        assert erf(0.7) == -erf(-0.7)

    def test_value_at_one(self):
        assert abs(erf(1.0) - 0.8427007929) <= 1e-9

    @pytest.mark.parametrize("x", [0.05, 0.5, 1.0, 2.0, 2.9, 3.1, 4.5, 6.0])
    def test_against_taylor_oracle(self, x):
        assert abs(erf(x) - taylor_erf(x)) <= 1e-14

    @pytest.mark.parametrize("x", [0.5, 2.0, 3.5, 5.0, 10.0, 20.0])
    def test_erfc_relative_tail(self, x):
        ref = float(mp.erfc(x))
        assert abs(erfc(x) - ref) <= 1e-13 * ref

    def test_array_input(self):
        xs = np.linspace(-3, 3, 13)
        assert np.allclose(erf(xs), [float(mp.erf(v)) for v in xs], atol=1e-15)

    @given(st.floats(-8, 8, allow_nan=False))
    def test_bounded_and_odd(self, x):
        v = erf(x)
        assert abs(v) <= 1.0
        assert v == -erf(-x)

    @given(st.floats(-6, 6), st.floats(1e-3, 1.0))
    def test_increasing(self, x, dx):
        assert erf(x + dx) >= erf(x)


class TestElliptic:
    def test_identity_at_zero_parameter(self):
        assert elliptic_f(0.3, 0.0) == pytest.approx(0.3, abs=1e-15)

    def test_zero_amplitude(self):
        assert elliptic_f(0.0, 0.5) == 0.0

    def test_complete_value(self):
        agm_oracle = float(mp.pi / (2 * mp.agm(1, mp.sqrt(0.5))))
        assert abs(elliptic_f(math.pi / 2, 0.5) - agm_oracle) <= 1e-12
        assert abs(elliptic_f(math.pi / 2, 0.5) - 1.8540746773) <= 1e-9
        assert elliptic_k(0.5) == pytest.approx(agm_oracle, abs=1e-14)

    def test_dataclass_args(self):
        assert elliptic_f(EllipticArgs(0.4, 0.5)) == elliptic_f(0.4, 0.5)

    @pytest.mark.parametrize("phi", [-1.5, -0.4, 0.2, 0.9, 1.4])
    @pytest.mark.parametrize("m", [0.1, 0.5, 0.9])
    def test_against_mpmath(self, phi, m):
        assert abs(elliptic_f(phi, m) - float(mp.ellipf(phi, m))) <= 1e-14

    def test_domain(self):
        with pytest.raises(DomainError):
            elliptic_f(0.3, 1.0)
        with pytest.raises(DomainError):
            elliptic_f(2.0, 0.5)
        with pytest.raises(DomainError):
            jacobi_sn_cn_dn(0.3, -0.1)

    def test_monotone_on_dense_grid(self):
        phis = np.linspace(-math.pi / 2, math.pi / 2, 1000)
        assert np.all(np.diff(elliptic_f(phis, 0.5)) > 0)

    def test_origin_values(self):
        assert jacobi_sn_cn_dn(0.0, 0.5) == (0.0, 1.0, 1.0)

    def test_sn_inverts_f(self):
        sn, _, _ = jacobi_sn_cn_dn(elliptic_f(0.4, 0.5), 0.5)
        assert abs(sn - math.sin(0.4)) <= 1e-12

    def test_sn_at_quarter_period(self):
        sn, cn, dn = jacobi_sn_cn_dn(1.8540746773, 0.5)
        assert abs(sn - 1.0) <= 1e-9

    @pytest.mark.parametrize("X", [-7.1, -0.3, 0.8, 2.5, 11.0])
    def test_against_mpmath_ellipfun(self, X):
        sn, cn, dn = jacobi_sn_cn_dn(X, 0.5)
        assert abs(sn - float(mp.ellipfun("sn", X, m=0.5))) <= 1e-13
        assert abs(cn - float(mp.ellipfun("cn", X, m=0.5))) <= 1e-13
        assert abs(dn - float(mp.ellipfun("dn", X, m=0.5))) <= 1e-13

    def test_quarter_period(self):
        K = elliptic_k(0.5)
        X = np.linspace(-3, 3, 17)
        s0, _, _ = jacobi_sn_cn_dn(X, 0.5)
        s4, _, _ = jacobi_sn_cn_dn(X + 4 * K, 0.5)
        assert np.max(np.abs(s0 - s4)) <= 1e-12

    @given(st.floats(-50, 50), st.floats(0.0, 0.99))
    def test_identities(self, X, m):
        sn, cn, dn = jacobi_sn_cn_dn(X, m)
        assert abs(sn * sn + cn * cn - 1) < 1e-12
        assert abs(dn * dn - (1 - m * sn * sn)) < 1e-12

    @given(st.floats(-math.pi / 2 + 0.01, math.pi / 2 - 0.01), st.sampled_from([0.0, 0.25, 0.5]))
    def test_round_trip(self, phi, m):
        sn, _, _ = jacobi_sn_cn_dn(elliptic_f(phi, m), m)
        assert abs(sn - math.sin(phi)) < 1e-12


class TestQuadrature:
    def test_linear(self):
        assert quad_singular(lambda s: s, 0.0, 1.0) == pytest.approx(0.5, abs=1e-14)

    def test_empty(self):
        assert quad_singular(lambda s: 1 / s, 0.0, 0.0) == 0.0

    def test_inverse_sqrt_cos(self):
        beta_oracle = math.gamma(0.25) * math.gamma(0.5) / (2 * math.gamma(0.75))
        val = quad_singular(lambda s: np.cos(s) ** -0.5, 0.0, math.pi / 2)
        assert abs(val - beta_oracle) <= 1e-12
        assert abs(val - 2.6220575543) <= 1e-8

    def test_reversed_limits(self):
        f = lambda s: np.exp(s)  # noqa: E731
        assert quad_singular(f, 1.0, 0.0) == pytest.approx(-(math.e - 1), abs=1e-13)

    def test_divergent_reports_non_convergence(self):
        with pytest.raises(ConvergenceError):
            quad_singular(lambda s: 1.0 / s**1.5, 0.0, 1.0, Tolerance(1e-10, 1e-10, 60), "none")

    def test_bad_endpoint_option(self):
        with pytest.raises(ValueError):
            quad_singular(lambda s: s, 0.0, 1.0, endpoints="middle")

    @pytest.mark.parametrize("tol", [1e-6, 1e-8, 1e-10])
    def test_halving_tolerance_is_stable(self, tol):
        f = lambda s: np.cos(s) ** -0.5 + np.sin(3 * s)  # noqa: E731
        a = quad_singular(f, 0.0, 1.5, Tolerance(tol, tol))
        b = quad_singular(f, 0.0, 1.5, Tolerance(tol, tol).halved())
        assert abs(a - b) <= tol

    def test_gauss_legendre_vectorized_limits(self):
        b = np.array([0.5, 1.0, 2.0])
        vals = gauss_legendre(lambda s: s**3, 0.0, b, 8)
        assert np.allclose(vals, b**4 / 4, rtol=1e-14)


class TestInversion:
    def test_identity(self):
        assert invert_monotone(lambda x: x, 0.3, (0.0, 1.0)) == pytest.approx(0.3, abs=1e-15)

    def test_arctan(self):
        assert abs(invert_monotone(math.atan, math.pi / 4, (0.0, 10.0)) - 1.0) <= 1e-12

    def test_nested_quadrature(self):
        g = lambda z: quad_singular(lambda s: np.cos(s) ** -1.5, 0.0, z, endpoints="none")  # noqa: E731
        z = invert_monotone(g, 2.0, (0.0, 1.5))
        assert abs(z - SEC32_ROOT_AT_2) <= 1e-12

    def test_bracket_error(self):
        with pytest.raises(BracketError):
            invert_monotone(math.atan, 2.0, (0.0, 10.0))

    def test_root_at_exact_zero(self):
        assert abs(invert_monotone(lambda x: x + 1e-18 * math.sin(1e6 * x), 0.0, (-1e-3, 1e-3))) < 1e-15

    @given(st.floats(-1.5, 1.5))
    @settings(max_examples=50)
    def test_tan_round_trip(self, target):
        x = invert_monotone(math.atan, target, (-100.0, 100.0))
        assert abs(math.atan(x) - target) <= 1e-12
