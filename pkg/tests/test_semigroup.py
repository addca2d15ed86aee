"""Propagator laws, kernel quadrature, and smoothing-exponent oracles."""

from __future__ import annotations

import numpy as np
import pytest

from dbo_lab.core import SpectralField, dissipation_symbol, make_grid, single_mode
from dbo_lab.semigroup import (
    DissipationParams,
    apply_semigroup,
    default_t_schedule,
    heat_kernel_value,
    kernel_norm_samples,
    semigroup_multiplier,
    smoothing_exponent,
    smoothing_law_check,
)

from .test_core import random_real_field


class TestPropagator:
    def test_alpha_range(self):
        with pytest.raises(ValueError):
            DissipationParams(2.5)
        with pytest.raises(ValueError):
            DissipationParams(-0.1)

    def test_identity_at_t0(self):
        g = make_grid(64, 2.0 * np.pi)
        rng = np.random.default_rng(42)
        f = random_real_field(g, rng, 20)
        out = apply_semigroup(f, 0.0, DissipationParams(1.5))
        np.testing.assert_array_equal(out.coeffs, f.coeffs)

    def test_single_mode_multiplier(self):
        # xi=1, t=1, alpha=2: multiplier e^{i} e^{-1}
        g = make_grid(64, 2.0 * np.pi)
        f = single_mode(g, 1)
        out = apply_semigroup(f, 1.0, DissipationParams(2.0))
        expected = f.coeffs[1] * np.exp(1j - 1.0)
        assert out.coeffs[1] == pytest.approx(expected, rel=1e-14)
        assert abs(out.coeffs[1]) == pytest.approx(abs(f.coeffs[1]) * np.exp(-1.0), rel=1e-14)

    @pytest.mark.parametrize("t", [0.3, -0.7, 2.0])
    @pytest.mark.parametrize("alpha", [0.0, 1.0, 2.0])
    def test_damping_never_amplifies(self, t, alpha):
        g = make_grid(128, 20.0)
        rng = np.random.default_rng(5)
        f = random_real_field(g, rng, 60)
        out = apply_semigroup(f, t, DissipationParams(alpha))
        assert np.all(np.abs(out.coeffs) <= np.abs(f.coeffs) + 1e-16)

    def test_alpha0_damps_everything_but_mean(self):
        g = make_grid(32, 2.0 * np.pi)
        c = np.ones(32, dtype=complex)
        f = SpectralField(g, c)
        out = apply_semigroup(f, 3.0, DissipationParams(0.0))
        assert out.coeffs[0] == pytest.approx(1.0)
        others = np.abs(np.delete(np.asarray(out.coeffs), [0, 16]))
        np.testing.assert_allclose(others, np.exp(-3.0), rtol=1e-13)

    def test_composition_law(self):
        g = make_grid(4096, 100.0)
        rng = np.random.default_rng(42)
        f = random_real_field(g, rng, 2000)
        p = DissipationParams(1.5)
        a = apply_semigroup(apply_semigroup(f, 0.3, p), 0.45, p)
        b = apply_semigroup(f, 0.75, p)
        # atol floor absorbs subnormal garbage where the damping underflows
        np.testing.assert_allclose(a.coeffs, b.coeffs, rtol=1e-12, atol=1e-290)

    def test_magnitude_equals_heat_multiplier(self):
        g = make_grid(4096, 100.0)
        for alpha in (0.0, 0.7, 1.5, 2.0):
            m = semigroup_multiplier(g.xi, 0.37, alpha)
            heat = np.exp(-0.37 * dissipation_symbol(g.xi, alpha))
            np.testing.assert_allclose(np.abs(m), heat, rtol=1e-12, atol=1e-290)

    def test_strong_continuity(self):
        g = make_grid(256, 10.0)
        sup_dev = []
        for t in (1e-2, 1e-4, 1e-6):
            m = semigroup_multiplier(g.xi, t, 2.0)
            sup_dev.append(np.max(np.abs(m - 1.0)))
        assert sup_dev[0] > sup_dev[1] > sup_dev[2]
        assert sup_dev[2] < 1e-2

    def test_reality_preserved(self):
        g = make_grid(64, 2.0 * np.pi)
        rng = np.random.default_rng(9)
        f = random_real_field(g, rng, 20)
        out = apply_semigroup(f, 0.5, DissipationParams(1.0))
        assert out.reality_flag  # construction re-checks symmetry


class TestHeatKernel:
    def test_gaussian_closed_form(self):
        for t in (0.05, 0.3, 1.0):
            for x in (0.0, 0.4, 1.7, -2.2):
                expected = np.exp(-x * x / (4.0 * t)) / np.sqrt(4.0 * np.pi * t)
                assert heat_kernel_value(t, x, 2.0) == pytest.approx(expected, abs=1e-6)

    def test_gaussian_peak_normalization(self):
        assert heat_kernel_value(1.0 / (4.0 * np.pi), 0.0, 2.0) == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("alpha", [1.2, 1.5, 2.0])
    def test_even_in_x(self, alpha):
        for x in (0.3, 1.1, 4.0):
            assert heat_kernel_value(0.2, x, alpha) == heat_kernel_value(0.2, -x, alpha)

    def test_rejects_bad_t(self):
        with pytest.raises(ValueError):
            heat_kernel_value(0.0, 1.0, 2.0)
        with pytest.raises(ValueError):
            heat_kernel_value(-1.0, 1.0, 2.0)

    def test_rejects_alpha0(self):
        with pytest.raises(ValueError):
            heat_kernel_value(1.0, 1.0, 0.0)

    def test_matches_spectral_synthesis(self):
        # cross-check quadrature vs the torus synthesis used by the scans;
        # the 1e-6 floor covers the periodization tail at half-period
        g = make_grid(2**17, 1024.0)
        t, alpha = 0.5, 1.5
        coeffs = np.exp(-t * dissipation_symbol(g.xi, alpha))
        field = SpectralField(g, coeffs, True)
        u = np.real((g.n_modes / g.period) * np.fft.ifft(np.asarray(field.coeffs)))
        for j in (0, 5, 50):
            assert heat_kernel_value(t, g.x[j], alpha) == pytest.approx(u[j], abs=1e-6)


class TestSmoothing:
    @pytest.mark.parametrize(
        "rho,p,alpha,expected",
        [
            (0.0, 1.0, 1.3, 0.0),
            (1.0, 2.0, 2.0, -0.75),
            (0.0, np.inf, 2.0, -0.5),
            (0.5, 4.0, 1.5, -(3.0 / 4.0) / 1.5 - 0.5 / 1.5),
        ],
    )
    def test_exponent_formula(self, rho, p, alpha, expected):
        assert smoothing_exponent(rho, p, alpha) == pytest.approx(expected, rel=1e-14)

    def test_exponent_rejects_alpha0(self):
        with pytest.raises(ValueError):
            smoothing_exponent(0.0, 2.0, 0.0)

    def test_law_sup_norm_gaussian(self):
        slope = smoothing_law_check(0.0, np.inf, 2.0, default_t_schedule())
        assert slope == pytest.approx(-0.5, abs=0.02)

    def test_law_h1_gaussian(self):
        slope = smoothing_law_check(1.0, 2.0, 2.0, default_t_schedule())
        assert slope == pytest.approx(-0.75, abs=0.02)

    def test_law_fractional(self):
        slope = smoothing_law_check(0.5, 4.0, 1.5, default_t_schedule())
        assert slope == pytest.approx(-5.0 / 6.0, abs=0.03)

    def test_mass_is_conserved(self):
        norms = kernel_norm_samples(0.0, 1.0, 1.5, default_t_schedule())
        np.testing.assert_allclose(norms, 1.0, rtol=1e-6)

    def test_degenerate_schedule(self):
        with pytest.raises(ValueError):
            smoothing_law_check(0.0, 2.0, 2.0, [1.0, 0.5])
        with pytest.raises(ValueError):
            kernel_norm_samples(0.0, 2.0, 2.0, [0.5, 0.5, 0.5, 0.5, 0.5, 0.5])
