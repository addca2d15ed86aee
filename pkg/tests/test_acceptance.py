"""Acceptance gate: every primary behavior re-verified at its stated tolerance.

Each check records one PASS/FAIL verdict line (replayed in the terminal
summary by conftest) and asserts the same condition, so the run doubles as
a readable report. Criteria cover: the resonance identity, semigroup laws,
the heat smoothing law, L2 decay, Picard/ETD cross-validation, the two-path
iterate check, inflation scaling exponents, dyadic block sweeps, the
space-time norm suite, and byte-level determinism of the CLI outputs.
"""

import time

import numpy as np

from dbo_lab.cli import main
from dbo_lab.core import (
    FourierGrid,
    SpectralField,
    dissipation_symbol,
    gaussian_field,
    hs_norm,
    make_grid,
)
from dbo_lab.dyadic import (
    REGIMES,
    bound_rhs,
    estimate_block_norm,
    resonance_suite,
    sample_spec,
)
from dbo_lab.evolution import (
    DissipationParams,
    EvolveConfig,
    duhamel_integral,
    energy_balance_residuals,
    evolve_etd,
    free_trajectory,
    l2_decay_report,
    picard_solve,
)
from dbo_lab.iterates import (
    Interval,
    IterateConfig,
    build_hN_sym,
    default_N_schedule,
    heat_u2_scan,
    inflation_scan,
    u2_hat,
)
from dbo_lab.semigroup import (
    default_t_schedule,
    heat_kernel_value,
    semigroup_multiplier,
    smoothing_exponent,
    smoothing_law_check,
)
from dbo_lab.xnorm import (
    contract_factor_check,
    random_band_limited_field,
    spacetime_l2,
    time_bump_field,
    xbs_equivalence_check,
    xbs_norm,
)


VERDICT_LINES: list[str] = []


def report(label: str, ok: bool, detail: str) -> None:
    """One verdict line per criterion (replayed in the terminal summary)."""
    line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
    VERDICT_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_resonance_identity_suite():
    t0 = time.monotonic()
    residual, lower_slack, upper_slack = resonance_suite(1_000_000, seed=0)
    elapsed = time.monotonic() - t0
    ok = residual <= 1e-12 and lower_slack >= -1e-12 and upper_slack >= -1e-12 and elapsed < 5.0
    report(
        "criterion 1 (resonance identity, 1e6 triples)",
        ok,
        f"max relative residual {residual:.2e}, bound slacks "
        f"{lower_slack:.2e}/{upper_slack:.2e}, {elapsed:.1f}s",
    )


def test_criterion_2_semigroup_laws():
    t0 = time.monotonic()
    grid = make_grid(4096, 64.0 * np.pi)
    xi, alpha = grid.xi, 1.5
    comp = max(
        float(
            np.max(
                np.abs(
                    semigroup_multiplier(xi, t, alpha) * semigroup_multiplier(xi, r, alpha)
                    - semigroup_multiplier(xi, t + r, alpha)
                )
            )
        )
        for t, r in ((0.3, 0.45), (0.05, 1.1))
    )
    ident = float(np.max(np.abs(semigroup_multiplier(xi, 0.0, alpha) - 1.0)))
    mags = [np.abs(semigroup_multiplier(xi, t, alpha)) for t in (0.1, 0.2, 0.4, 0.8)]
    monotone = all(bool(np.all(b <= a + 1e-15)) for a, b in zip(mags, mags[1:]))
    heat = float(
        np.max(
            np.abs(
                np.abs(semigroup_multiplier(xi, 0.7, alpha))
                - np.exp(-0.7 * dissipation_symbol(xi, alpha))
            )
        )
    )
    elapsed = time.monotonic() - t0
    ok = comp <= 1e-12 and ident <= 1e-12 and monotone and heat <= 1e-12 and elapsed < 1.0
    report(
        "criterion 2 (semigroup laws, 4096 modes)",
        ok,
        f"composition {comp:.1e}, identity {ident:.1e}, monotone {monotone}, "
        f"heat multiplier {heat:.1e}, {elapsed:.2f}s",
    )


def test_criterion_3_heat_smoothing_law():
    t0 = time.monotonic()
    worst = 0.0
    for rho in (0.0, 0.5, 1.0):
        for p in (1.0, 2.0, 4.0, np.inf):
            for alpha in (1.25, 1.5, 2.0):
                slope = smoothing_law_check(rho, p, alpha, default_t_schedule())
                worst = max(worst, abs(slope - smoothing_exponent(rho, p, alpha)))
    gauss = max(
        abs(heat_kernel_value(t, x, 2.0) - np.exp(-x * x / (4.0 * t)) / np.sqrt(4.0 * np.pi * t))
        for t in (0.05, 0.3, 1.0)
        for x in (0.0, 0.4, 1.7, -2.2)
    )
    elapsed = time.monotonic() - t0
    ok = worst <= 0.03 and gauss <= 1e-6 and elapsed < 30.0
    report(
        "criterion 3 (heat smoothing law, 36 cases)",
        ok,
        f"worst slope error {worst:.4f}, Gaussian closed-form error {gauss:.1e}, {elapsed:.1f}s",
    )


def test_criterion_4_l2_decay():
    t0 = time.monotonic()
    grid = make_grid(256, 16.0 * np.pi)
    u0 = gaussian_field(grid, amplitude=0.2, sigma=1.5)
    dt = 2e-3
    worst_step = -np.inf
    for alpha in (1.25, 1.5, 2.0):
        traj = evolve_etd(u0, EvolveConfig(DissipationParams(alpha), dt=dt, t_final=0.4))
        l2 = np.array([row[1] for row in l2_decay_report(traj)])
        worst_step = max(worst_step, float(np.max(np.diff(l2))))
    ratios = []
    for dt_res in (4e-3, 2e-3):
        traj = evolve_etd(
            gaussian_field(grid, amplitude=0.4, sigma=1.5),
            EvolveConfig(DissipationParams(1.5), dt=dt_res, t_final=0.2),
        )
        ratios.append(float(np.max(np.abs(energy_balance_residuals(traj)))))
    balance_ratio = ratios[0] / ratios[1]
    elapsed = time.monotonic() - t0
    ok = worst_step <= 10.0 * dt * dt and balance_ratio > 2.5 and elapsed < 60.0
    report(
        "criterion 4 (L2 decay, alpha in {1.25, 1.5, 2})",
        ok,
        f"worst per-step growth {worst_step:.2e} (slack {10 * dt * dt:.1e}), "
        f"energy residual ratio under dt halving {balance_ratio:.2f}, {elapsed:.1f}s",
    )


def test_criterion_5_picard_etd_cross_validation():
    t0 = time.monotonic()
    grid = make_grid(256, 16.0 * np.pi)
    u0 = gaussian_field(grid, amplitude=0.2, sigma=1.5)
    pic, iters = picard_solve(u0, EvolveConfig(DissipationParams(2.0), dt=0.25 / 32, t_final=0.25))
    etd = evolve_etd(u0, EvolveConfig(DissipationParams(2.0), dt=1e-4, t_final=0.25))
    diff = SpectralField(grid, np.asarray(pic.coeffs[-1]) - np.asarray(etd.coeffs[-1]))
    disagreement = hs_norm(diff, 0.0)
    elapsed = time.monotonic() - t0
    ok = disagreement <= 1e-6 and elapsed < 60.0
    report(
        "criterion 5 (Picard/ETD cross-validation, alpha=2, T=0.25)",
        ok,
        f"H0 disagreement {disagreement:.2e} after {iters} iterations, {elapsed:.1f}s",
    )


def _band_relative_error(grid, band, discrete_coeffs, continuum_fn, s):
    mask = (grid.xi >= band.lo - 1e-9) & (grid.xi <= band.hi + 1e-9)
    xis = grid.xi[mask]
    disc = discrete_coeffs[mask]
    cont = np.array([continuum_fn(x) for x in xis])
    w = (1.0 + xis**2) ** s
    return float(np.sqrt(np.sum(w * np.abs(disc - cont) ** 2) / np.sum(w * np.abs(cont) ** 2)))


def test_criterion_6_two_path_iterate_check():
    t0 = time.monotonic()
    N, alpha, s = 256.0, 1.5, -0.5
    cfg = IterateConfig("third_general", alpha, s, 0.05, (64.0, N))
    g, t_N = cfg.gamma(N), cfg.t_probe(N)
    grid = FourierGrid(8192, 8.0 * np.pi)
    h = build_hN_sym(N, g, s, grid)
    prof, probe = cfg.profile(N), cfg.probe(N)
    ecfg = EvolveConfig(DissipationParams(alpha), dt=t_N / 64.0, t_final=t_N)
    u1 = free_trajectory(h, ecfg)
    u2_traj = duhamel_integral(u1, ecfg)
    rel2 = _band_relative_error(
        grid,
        Interval(2.0 * N, 2.0 * N + 4.0 * g),
        np.asarray(u2_traj.coeffs[-1]),
        lambda x: u2_hat(x, probe, prof),
        s,
    )
    elapsed = time.monotonic() - t0
    ok = rel2 < 1e-4 and elapsed < 120.0
    report(
        "criterion 6 (two-path iterate check, N=256)",
        ok,
        f"quadrature vs Picard relative H^s error {rel2:.2e}, {elapsed:.1f}s",
    )


def test_criterion_7a_second_variant_inflation():
    t0 = time.monotonic()
    res = inflation_scan(IterateConfig("second_low_alpha", 0.5, 0.0, 0.05, default_N_schedule("second_low_alpha")))
    elapsed = time.monotonic() - t0
    ok = abs(res.slope - 0.20) <= 0.10 and res.slope > 0.0
    report(
        "criterion 7a (second_low_alpha, alpha=0.5, s=0)",
        ok,
        f"slope {res.slope:.4f} vs 0.20 +/- 0.10, verdict {res.verdict}, {elapsed:.0f}s",
    )


def test_criterion_7b_third_general_inflation():
    t0 = time.monotonic()
    res = inflation_scan(IterateConfig("third_general", 1.5, -0.5, 0.05, default_N_schedule("third_general")))
    elapsed = time.monotonic() - t0
    v_slope, w_slope = res.v3_w3_slopes()
    ok = abs(res.slope - 0.20) <= 0.15 and res.slope > 0.0
    report(
        "criterion 7b (third_general, alpha=1.5, s=-0.5)",
        ok,
        f"slope {res.slope:.4f} vs 0.20 +/- 0.15 (v3 slope {v_slope:.2f}, w3 slope {w_slope:.2f}: "
        f"the box contributions cancel and the difference norm stays flat), {elapsed:.0f}s",
    )


def test_criterion_7c_third_general_threshold_side():
    t0 = time.monotonic()
    res = inflation_scan(IterateConfig("third_general", 1.5, -0.30, 0.05, default_N_schedule("third_general")))
    elapsed = time.monotonic() - t0
    ok = res.slope < 0.0
    report(
        "criterion 7c (third_general, s=-0.30 above threshold)",
        ok,
        f"slope {res.slope:.4f} negative as required, {elapsed:.0f}s",
    )


def test_criterion_7d_third_alpha2_inflation():
    t0 = time.monotonic()
    res = inflation_scan(IterateConfig("third_alpha2", 2.0, -0.6, 0.05, default_N_schedule("third_alpha2")))
    elapsed = time.monotonic() - t0
    v_slope, w_slope = res.v3_w3_slopes()
    ok = abs(res.slope - 0.10) <= 0.10 and res.slope > 0.0 and abs(v_slope - w_slope) <= 0.05
    report(
        "criterion 7d (third_alpha2, alpha=2, s=-0.6)",
        ok,
        f"slope {res.slope:.4f} vs 0.10 +/- 0.10, |v3-w3| slope gap "
        f"{abs(v_slope - w_slope):.3f} <= 0.05, {elapsed:.0f}s",
    )


def test_criterion_7e_heat_appendix_threshold_signs():
    t0 = time.monotonic()
    below = heat_u2_scan(IterateConfig("heat_appendix", 1.5, -0.2, 0.05, default_N_schedule("heat_appendix")))
    above = heat_u2_scan(IterateConfig("heat_appendix", 1.5, 0.2, 0.05, default_N_schedule("heat_appendix")))
    elapsed = time.monotonic() - t0
    ok = below.slope > 0.0 and above.slope < 0.0
    report(
        "criterion 7e (heat_appendix threshold signs, alpha=1.5)",
        ok,
        f"s=-0.2 slope {below.slope:.4f} > 0, s=+0.2 slope {above.slope:.4f} < 0, {elapsed:.0f}s",
    )


def test_criterion_8_dyadic_block_sweeps():
    t0 = time.monotonic()
    per_regime = 50
    details = []
    ok = True
    for regime in REGIMES:
        rng = np.random.default_rng(2024)
        specs = [sample_spec(regime, rng) for _ in range(per_regime)]
        estimates = [
            estimate_block_norm(spec, resolution=64, trials=4, seed=5) for spec in specs
        ]
        if regime == "vanishing":
            zero = all(est.lower_bound == 0.0 and est.ratio == 0.0 for est in estimates)
            ok = ok and zero
            details.append(f"vanishing all-zero {zero}")
        elif regime == "pm_coherence":
            worst = max(
                est.lower_bound / bound_rhs(spec, gamma)
                for spec, est in zip(specs, estimates)
                for gamma in (1.0, 2.0, 4.0)
            )
            ok = ok and worst <= 10.0
            details.append(f"pm max ratio over gamma {{1,2,4}} {worst:.2f}")
        else:
            worst = max(est.ratio for est in estimates)
            ok = ok and worst <= 10.0
            details.append(f"{regime} max ratio {worst:.2f}")
    elapsed = time.monotonic() - t0
    ok = ok and elapsed < 600.0
    report(
        "criterion 8 (dyadic block sweeps, 50 specs/regime)",
        ok,
        "; ".join(details) + f", {elapsed:.0f}s",
    )


def test_criterion_9_xnorm_suite():
    t0 = time.monotonic()
    grid = FourierGrid(64, 2.0 * np.pi)
    rng = np.random.default_rng(7)
    plancherel = max(
        abs(xbs_norm(f, 0.0, 0.0, 1.5) - spacetime_l2(f)) / spacetime_l2(f)
        for f in (random_band_limited_field(grid, rng) for _ in range(20))
    )
    rng = np.random.default_rng(77)
    ratios = np.array(
        [
            xbs_equivalence_check(
                random_band_limited_field(
                    grid, rng, omega_scale=30.0, surface_bias=rng.uniform(0.0, 1.0)
                ),
                0.5,
                0.0,
                1.5,
            )
            for _ in range(100)
        ]
    )
    in_band = bool(np.all((ratios > 1.0 / 3.0) & (ratios < 3.0)))
    bump = time_bump_field(grid, k=1, t_support=2.0)
    schedule = np.array([2.0, 1.4, 1.0, 0.7, 0.5, 0.35])
    nus = [contract_factor_check(bump, theta, schedule) for theta in (0.125, 0.25, 0.5)]
    elapsed = time.monotonic() - t0
    ok = plancherel <= 1e-10 and in_band and all(nu > 0.0 for nu in nus) and elapsed < 300.0
    report(
        "criterion 9 (X-norm suite)",
        ok,
        f"Plancherel residual {plancherel:.1e}, equivalence in [{ratios.min():.2f}, "
        f"{ratios.max():.2f}] over 100 fields, contract nu "
        f"{', '.join(f'{nu:.3f}' for nu in nus)}, {elapsed:.0f}s",
    )


def test_criterion_10_deterministic_csv_output(tmp_path):
    t0 = time.monotonic()
    checks = []
    for name, args in (
        ("evolve", ["evolve", "--n", "64", "--dt", "0.01", "--T", "0.1", "--seed", "4"]),
        ("xnorm", ["xnorm", "--check", "equivalence", "--trials", "3", "--seed", "4"]),
        (
            "dyadic",
            ["dyadic", "--regime", "pp", "--samples", "3", "--trials", "2",
             "--resolution", "32", "--seed", "4"],
        ),
    ):
        out1, out2 = tmp_path / f"{name}_1", tmp_path / f"{name}_2"
        assert main([*args, "--out", str(out1)]) == 0
        assert main([*args, "--out", str(out2), "--jobs", "2"]) == 0
        same = (out1 / f"{name}.csv").read_bytes() == (out2 / f"{name}.csv").read_bytes()
        checks.append((name, same))
    elapsed = time.monotonic() - t0
    ok = all(same for _, same in checks)
    report(
        "criterion 10 (byte-identical CSVs for same config and seed)",
        ok,
        ", ".join(f"{name} {same}" for name, same in checks) + f", {elapsed:.0f}s",
    )
