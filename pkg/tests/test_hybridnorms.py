"""Analytic-norm contracts: hand-computed oracles, invariances, battery.

Oracle policy: every frozen expectation below was evaluated by hand from the
norm definitions (single-mode fields keep the sums to one or two terms)
before the implementation existed.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vpkit.errors import SeriesNotConverged, TailNotResolved
from vpkit.hybridnorms import (
    NormParams,
    SpectralDistribution,
    density_trace,
    f_norm,
    free_transport_shift,
    from_v_grid,
    prop13_battery,
    pure_v_field,
    pure_x_field,
    random_field,
    to_v_grid,
    y_norm,
    z_norm,
)


def eta_grid(n=128, eta_max=4.0):
    d = 2 * eta_max / n
    return (np.arange(n) - n // 2) * d


def gaussian_v_field(k_max=4, n=128, eta_max=4.0, sigma=0.5, k_amp=None):
    """Mixed field: per-mode Gaussian eta profiles with known coefficients."""
    grid = eta_grid(n, eta_max)
    coeffs = np.zeros((2 * k_max + 1, n), dtype=complex)
    k_amp = k_amp or {1: 0.5, -1: 0.5, 2: 0.25, -2: 0.25, 0: 1.0}
    for k, a in k_amp.items():
        coeffs[k + k_max] = a * np.exp(-(grid**2) / (2 * sigma**2))
    return SpectralDistribution(k_max, grid, coeffs)


class TestFNorm:
    def test_cosine_in_x(self):
        # f(x) = cos(2 pi x): modes +-1 with coefficient 1/2 each.
        # lam=0: value = 2 * (1/2) e^{2 pi mu} = e^{2 pi mu}.
        f = pure_x_field({1: 0.5, -1: 0.5}, k_max=3, eta_grid=eta_grid())
        for mu in (0.0, 0.1, 0.4):
            val = f_norm(f, NormParams(lam=0.0, mu=mu))
            assert np.isclose(val, np.exp(2 * np.pi * mu), rtol=1e-13)

    def test_unweighted_is_plain_l1(self, rng):
        f = random_field(rng, k_max=4, eta_grid=eta_grid())
        val = f_norm(f, NormParams(0.0, 0.0, 0.0))
        direct = np.abs(f.coeffs).sum() * f.d_eta
        assert np.isclose(val, direct, rtol=1e-12)

    def test_pure_v_independent_of_mu_tau(self):
        grid = eta_grid()
        f = pure_v_field(np.exp(-2 * grid**2), k_max=3, eta_grid=grid)
        base = f_norm(f, NormParams(0.05, 0.0, 0.0))
        assert f_norm(f, NormParams(0.05, 0.7, 0.0)) == base
        assert f_norm(f, NormParams(0.05, 0.7, 2.5)) == base

    def test_tail_guard(self):
        grid = eta_grid(64, 2.0)
        f = pure_v_field(np.ones(64), k_max=1, eta_grid=grid)
        with pytest.raises(TailNotResolved):
            f_norm(f, NormParams(0.1, 0.0, 0.0))

    def test_lambda_weight_single_bump(self):
        # single eta bump at eta0 with unit mass: value = e^{2 pi lam |eta0|}
        grid = eta_grid()
        j = 96  # eta = (96-64)*0.0625 = 2.0
        coeffs = np.zeros((3, grid.size), dtype=complex)
        coeffs[1, j] = 1.0 / (grid[1] - grid[0])
        f = SpectralDistribution(1, grid, coeffs)
        val = f_norm(f, NormParams(lam=0.1, mu=0.0))
        assert np.isclose(val, np.exp(2 * np.pi * 0.1 * 2.0), rtol=1e-12)


class TestYNorm:
    def test_single_mode(self):
        grid = eta_grid()
        coeffs = np.zeros((5, grid.size), dtype=complex)
        j = 80  # eta = 1.0
        coeffs[2 + 1, j] = 0.7
        f = SpectralDistribution(2, grid, coeffs)
        params = NormParams(lam=0.1, mu=0.2, tau=0.5)
        expected = 0.7 * np.exp(2 * np.pi * 0.2 * 1) * np.exp(
            2 * np.pi * 0.1 * abs(1.0 + 1 * 0.5)
        )
        assert np.isclose(y_norm(f, params), expected, rtol=1e-13)

    def test_below_z_on_smooth_data(self, rng):
        f = random_field(rng, k_max=4, eta_grid=eta_grid())
        for tau in (0.0, 0.5, -1.0):
            params = NormParams(lam=0.03, mu=0.1, tau=tau, p=1.0)
            assert y_norm(f, params) <= z_norm(f, params) * (1 + 1e-12)


class TestZNorm:
    def test_lambda_zero_single_term(self):
        grid = eta_grid()
        sigma = 0.5
        f = pure_v_field(np.exp(-grid**2 / (2 * sigma**2)), k_max=2, eta_grid=grid)
        val = z_norm(f, NormParams(0.0, 0.3, 1.2, p=1.0))
        _, g = to_v_grid(f)
        dv = 1.0 / (grid.size * f.d_eta)
        assert np.isclose(val, dv * np.abs(g[2]).sum(), rtol=1e-12)

    def test_gaussian_oracle_all_n(self):
        # f_hat(0,eta) = e^{-pi eta^2} transforms to f(v) = e^{-pi v^2}; each
        # series term is lam^n/n! * ||(2 pi eta)^n e^{-pi eta^2}|| mapped to v.
        # Cross-check the n<=2 partial sums against direct quadrature values.
        grid = eta_grid(256, 8.0)
        f = pure_v_field(np.exp(-np.pi * grid**2), k_max=0, eta_grid=grid)
        lam = 0.05
        val = z_norm(f, NormParams(lam, 0.0, 0.0, p=1.0))
        v, g = to_v_grid(f)
        dv = v[1] - v[0]
        # d/dv e^{-pi v^2} = -2 pi v e^{-pi v^2}; d2/dv2 = (4 pi^2 v^2 - 2 pi) e
        t0 = dv * np.sum(np.abs(np.exp(-np.pi * v**2)))
        t1 = lam * dv * np.sum(np.abs(-2 * np.pi * v * np.exp(-np.pi * v**2)))
        t2 = (lam**2 / 2) * dv * np.sum(
            np.abs((4 * np.pi**2 * v**2 - 2 * np.pi) * np.exp(-np.pi * v**2))
        )
        assert val >= t0 + t1 + t2 - 1e-10
        # the n=3 term is ~lam^3/6 * 20 pi ~ 1.3e-3; everything after is smaller
        assert val == pytest.approx(t0 + t1 + t2, rel=5e-3)

    def test_series_guard(self):
        grid = eta_grid(128, 4.0)
        f = pure_v_field(np.exp(-grid**2 / 8), k_max=0, eta_grid=grid)
        with pytest.raises(SeriesNotConverged):
            z_norm(f, NormParams(lam=1.5, mu=0.0, tau=0.0, n_max=10))

    def test_pure_x_matches_f_norm(self):
        f = pure_x_field({1: 0.3, -1: 0.3, 2: 0.1j, -2: -0.1j}, 3, eta_grid())
        for params in (
            NormParams(0.0, 0.2, 0.0),
            NormParams(0.05, 0.1, 0.8),
            NormParams(0.02, 0.0, -1.5),
        ):
            assert np.isclose(z_norm(f, params), f_norm(f, params), rtol=1e-12)

    def test_p_infinity_is_grid_max(self):
        grid = eta_grid()
        f = pure_v_field(np.exp(-grid**2), k_max=1, eta_grid=grid)
        val = z_norm(f, NormParams(0.0, 0.0, 0.0, p=np.inf))
        _, g = to_v_grid(f)
        assert np.isclose(val, np.abs(g[1]).max(), rtol=1e-12)


class TestTransformRoundTrip:
    def test_v_grid_round_trip(self, rng):
        f = random_field(rng, k_max=3, eta_grid=eta_grid())
        _, g = to_v_grid(f)
        back = from_v_grid(f, g)
        assert np.allclose(back.coeffs, f.coeffs, atol=1e-13)

    def test_parseval(self, rng):
        f = random_field(rng, k_max=3, eta_grid=eta_grid())
        v, g = to_v_grid(f)
        dv = v[1] - v[0]
        lhs = f.d_eta * np.sum(np.abs(f.coeffs) ** 2)
        rhs = dv * np.sum(np.abs(g) ** 2)
        assert np.isclose(lhs, rhs, rtol=1e-12)

    def test_hermitian_field_is_real_on_v_grid(self, rng):
        f = random_field(rng, k_max=3, eta_grid=eta_grid(), hermitian=True)
        assert f.is_hermitian()
        _, g = to_v_grid(f)
        # sum over k of f_hat(k,v) e^{2 pi i k x} at x=0 must be real
        phys = g.sum(axis=0)
        assert np.abs(phys.imag).max() < 1e-12 * max(np.abs(phys.real).max(), 1e-30)


class TestInvariances:
    def test_homogeneity(self, rng):
        f = random_field(rng, k_max=4, eta_grid=eta_grid())
        params = NormParams(0.03, 0.15, 0.5)
        for c in (0.0, 0.25, 3.0, 17.5):
            g = f.with_coeffs(c * f.coeffs)
            for norm in (f_norm, y_norm, z_norm):
                assert np.isclose(norm(g, params), c * norm(f, params), rtol=1e-12, atol=1e-300)

    def test_triangle(self, rng):
        params = NormParams(0.03, 0.1, -0.5)
        for _ in range(5):
            a = random_field(rng, k_max=4, eta_grid=eta_grid())
            b = random_field(rng, k_max=4, eta_grid=eta_grid())
            s = a.with_coeffs(a.coeffs + b.coeffs)
            for norm in (f_norm, y_norm, z_norm):
                assert norm(s, params) <= norm(a, params) + norm(b, params) + 1e-10

    @given(c=st.floats(0.0, 50.0), lam=st.floats(0.0, 0.05), mu=st.floats(0.0, 0.3))
    @settings(max_examples=25, deadline=None)
    def test_homogeneity_property(self, c, lam, mu):
        rng = np.random.default_rng(7)
        f = random_field(rng, k_max=2, eta_grid=eta_grid())
        g = f.with_coeffs(c * f.coeffs)
        params = NormParams(lam, mu, 0.25)
        assert np.isclose(f_norm(g, params), c * f_norm(f, params), rtol=1e-12, atol=1e-280)

    def test_monotone_in_widths(self, rng):
        f = random_field(rng, k_max=4, eta_grid=eta_grid())
        lams = [0.0, 0.02, 0.05]
        mus = [0.0, 0.2, 0.4]
        for norm in (f_norm, y_norm, z_norm):
            vals = [[norm(f, NormParams(l, m, 0.3)) for m in mus] for l in lams]
            arr = np.array(vals)
            assert np.all(np.diff(arr, axis=0) >= 0)
            assert np.all(np.diff(arr, axis=1) >= 0)

    def test_reduction_order_independence(self, rng):
        # the point reflection (k,eta) -> (-k,-eta) leaves every norm weight
        # invariant but reverses the order in which identical magnitudes are
        # accumulated, so it exercises the compensated summation directly
        f = random_field(rng, k_max=6, eta_grid=eta_grid())
        coeffs = f.coeffs.copy()
        coeffs[:, 0] = 0.0
        f = f.with_coeffs(coeffs)
        flipped = f.with_coeffs(np.roll(coeffs[::-1, ::-1], 1, axis=1))
        for params in (NormParams(0.03, 0.2, 0.0), NormParams(0.0, 0.0, 0.0)):
            a, b = f_norm(f, params), f_norm(flipped, params)
            assert abs(a - b) <= 1e-13 * max(1.0, a)

    def test_free_transport_identity(self, rng):
        f = random_field(rng, k_max=3, eta_grid=eta_grid())
        t = 4 * f.d_eta  # whole-bin shift for every mode
        g = free_transport_shift(f, t)
        for tau in (0.0, 0.5, -1.0):
            a = f_norm(g, NormParams(0.03, 0.1, tau + t))
            b = f_norm(f, NormParams(0.03, 0.1, tau))
            assert np.isclose(a, b, rtol=1e-11)
            ya = y_norm(g, NormParams(0.03, 0.1, tau + t))
            yb = y_norm(f, NormParams(0.03, 0.1, tau))
            assert np.isclose(ya, yb, rtol=1e-11)
            za = z_norm(g, NormParams(0.03, 0.1, tau + t))
            zb = z_norm(f, NormParams(0.03, 0.1, tau))
            assert np.isclose(za, zb, rtol=1e-9)

    def test_density_trace_pure_x(self):
        f = pure_x_field({1: 0.5, -1: 0.5}, 2, eta_grid())
        rho = density_trace(f)
        assert np.allclose(rho, [0, 0.5, 0, 0.5, 0])


class TestBattery:
    def build_suite(self, rng, n_fields=20):
        grid = eta_grid()
        suite = []
        for i in range(n_fields):
            kind = i % 3
            if kind == 0:
                amps = {k: rng.normal() + 1j * rng.normal() for k in (-2, -1, 1, 2)}
                amps = {k: v * 0.3 for k, v in amps.items()}
                suite.append(pure_x_field(amps, 4, grid))
            elif kind == 1:
                sigma = rng.uniform(0.3, 0.55)
                prof = rng.uniform(0.3, 1.0) * np.exp(-grid**2 / (2 * sigma**2))
                suite.append(pure_v_field(prof, 4, grid))
            else:
                suite.append(random_field(rng, k_max=4, eta_grid=grid))
        return suite

    def params_grid(self):
        return [
            NormParams(0.0, 0.0, 0.0),
            NormParams(0.02, 0.1, 0.5),
            NormParams(0.05, 0.0, -1.0),
            NormParams(0.03, 0.2, 0.0, p=2.0),
            NormParams(0.02, 0.05, 1.0, p=np.inf),
        ]

    def test_battery_passes(self, rng):
        suite = self.build_suite(rng)
        report = prop13_battery(suite, self.params_grid())
        for name in ("i", "ii", "viii", "viiii", "iX"):
            assert name in report.items, f"item {name} never exercised"
            entry = report.items[name]
            assert entry["cases"] > 0
            assert entry["passed"], f"item {name} slack {entry['slack']:.3e}"
            assert entry["slack"] < 1e-9
        assert report.passed
        assert "iii" in report.observed and "vi" in report.observed

    def test_battery_observational_ratios(self, rng):
        suite = self.build_suite(rng, n_fields=6)
        report = prop13_battery(suite, [NormParams(0.03, 0.1, 0.5)])
        assert "iv" in report.observed
        assert "v" in report.observed
        assert "vii" in report.observed

    def test_delta_fields_scoped_out_of_viiii(self, rng):
        # x-only data stores 1/d_eta spikes whose grid sup is not the
        # continuum Y norm; the battery must not assert (viiii) on them
        grid = eta_grid()
        suite = [pure_x_field({1: 0.5, -1: 0.5}, 2, grid)]
        report = prop13_battery(suite, [NormParams(0.02, 0.1, 0.5)])
        assert report.items.get("viiii", {"cases": 0})["cases"] == 0
        # and the skipped inequality really is grid-violated there, which is
        # why the scoping exists
        f = suite[0]
        p1 = NormParams(0.02, 0.1, 0.5, p=1.0)
        assert y_norm(f, p1) > z_norm(f, p1)
