"""Batch experiment driver for the spectral laboratory.

Subcommands
-----------
evolve   damped ETD evolution of a preset initial field; trajectory CSV + figure
picard   Duhamel fixed-point solve with an a-posteriori residual certificate
heat     fractional heat kernel norms over a time schedule; CSV + slope plot
xnorm    space-time norm probes: plancherel, equivalence, linear, contract, bilinear
inflate  iterate norm-growth scan over a dyadic schedule; CSV + fit JSON + plot
dyadic   sampled multiplier-block lower bounds per regime; CSV

Settings resolve as defaults < --config file (key=value, # comments) < flags,
and every output embeds the resolved settings as # comments, so reruns from a
file's own preamble reproduce it byte for byte.  --jobs (or DBO_LAB_JOBS)
fans the xnorm and dyadic sweeps over a process pool; results keep their
sequential order, so parallel runs emit identical files.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure
(blow-up, Picard or quadrature divergence, block ratio above --ceiling).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Mapping, Sequence

import numpy as np

from .config import RunConfig, parse_config_file, resolve_settings
from .core import SpectralField, cosine_mode, gaussian_field, hs_norm, make_grid
from .dyadic import REGIMES, estimate_block_norm, sample_spec
from .evolution import (
    BlowUpError,
    EvolveConfig,
    PicardDivergenceError,
    duhamel_integral,
    evolve_etd,
    free_trajectory,
    l2_decay_report,
    picard_solve,
)
from .fitting import loglog_fit
from .iterates import (
    VARIANTS,
    IterateConfig,
    QuadratureError,
    default_N_schedule,
    inflation_scan,
)
from .report import (
    render_heat_png,
    render_scan_png,
    render_trajectory_png,
    write_csv,
    write_fit_json,
    write_heat_gnuplot,
    write_scan_gnuplot,
)
from .semigroup import (
    DissipationParams,
    default_t_schedule,
    kernel_norm_samples,
    smoothing_exponent,
)
from .xnorm import (
    bilinear_ratio_probe,
    contract_factor_check,
    linear_free_check,
    random_band_limited_field,
    spacetime_l2,
    time_bump_field,
    xbs_equivalence_check,
    xbs_norm,
)

__all__ = ["main"]

_NAN = float("nan")

_VARIANT_ALIASES = {
    "second": "second_low_alpha",
    "third": "third_general",
    "third2": "third_alpha2",
    "alpha2": "third_alpha2",
    "heat": "heat_appendix",
}
_REGIME_ALIASES = {
    "high": "high_modulation",
    "pp": "pp_coherence",
    "pm": "pm_coherence",
    "vanish": "vanishing",
}
_U0_PRESETS = ("gaussian", "zero", "cosine")
_XNORM_CHECKS = ("plancherel", "equivalence", "linear", "contract", "bilinear")

# theta grid and T schedule for the contraction-factor probe
_CONTRACT_THETAS = (0.125, 0.25, 0.5)
_CONTRACT_SCHEDULE = (2.0, 1.4, 1.0, 0.7, 0.5, 0.35)


def variant_name(text: str) -> str:
    name = _VARIANT_ALIASES.get(text, text)
    if name not in VARIANTS:
        known = ", ".join(sorted(set(_VARIANT_ALIASES) | set(VARIANTS)))
        raise ValueError(f"unknown variant {text!r}; choose from {known}")
    return name


def regime_name(text: str) -> str:
    name = _REGIME_ALIASES.get(text, text)
    if name not in REGIMES:
        known = ", ".join(sorted(set(_REGIME_ALIASES) | set(REGIMES)))
        raise ValueError(f"unknown regime {text!r}; choose from {known}")
    return name


def preset_name(text: str) -> str:
    if text not in _U0_PRESETS:
        raise ValueError(f"unknown initial data preset {text!r}; choose from {', '.join(_U0_PRESETS)}")
    return text


def check_name(text: str) -> str:
    if text not in _XNORM_CHECKS:
        raise ValueError(f"unknown check {text!r}; choose from {', '.join(_XNORM_CHECKS)}")
    return text


class _Setting:
    """One resolvable setting: coercer, default value, help text."""

    def __init__(self, coerce: Callable[[str], object], default: object, help: str):
        self.coerce = coerce
        self.default = default
        self.help = help


_TWO_PI = 2.0 * math.pi

_SUBCOMMAND_SETTINGS: dict[str, dict[str, _Setting]] = {
    "evolve": {
        "seed": _Setting(int, 0, "run seed, recorded in all outputs"),
        "alpha": _Setting(float, 1.0, "dissipation exponent in [0, 2]"),
        "s": _Setting(float, 0.0, "Sobolev index for the reported hs_norm column"),
        "n": _Setting(int, 256, "spatial modes"),
        "L": _Setting(float, _TWO_PI, "spatial period"),
        "dt": _Setting(float, 1e-3, "time step"),
        "T": _Setting(float, 0.5, "final time"),
        "u0": _Setting(preset_name, "gaussian", "initial data preset: gaussian, zero, cosine"),
        "amp": _Setting(float, 1.0, "initial data amplitude"),
        "sigma": _Setting(float, 1.0, "gaussian width"),
        "k": _Setting(int, 1, "cosine mode index"),
    },
    "picard": {
        "seed": _Setting(int, 0, "run seed, recorded in all outputs"),
        "alpha": _Setting(float, 1.0, "dissipation exponent in [0, 2]"),
        "s": _Setting(float, 0.0, "Sobolev index for the reported hs_norm column"),
        "n": _Setting(int, 128, "spatial modes"),
        "L": _Setting(float, _TWO_PI, "spatial period"),
        "dt": _Setting(float, 0.01, "trajectory time step"),
        "T": _Setting(float, 0.25, "final time"),
        "u0": _Setting(preset_name, "gaussian", "initial data preset: gaussian, zero, cosine"),
        "amp": _Setting(float, 0.25, "initial data amplitude"),
        "sigma": _Setting(float, 1.0, "gaussian width"),
        "k": _Setting(int, 1, "cosine mode index"),
        "tol": _Setting(float, 1e-10, "fixed-point tolerance (sup-t discrete L2)"),
        "max_iter": _Setting(int, 25, "iteration cap before divergence is declared"),
    },
    "heat": {
        "seed": _Setting(int, 0, "run seed, recorded in all outputs"),
        "rho": _Setting(float, 1.0, "derivative order |D|^rho applied to the kernel"),
        "p": _Setting(float, 2.0, "Lebesgue exponent of the kernel norm"),
        "alpha": _Setting(float, 1.5, "dissipation exponent in (0, 2]"),
        "points": _Setting(int, 6, "length of the geometric t schedule"),
    },
    "xnorm": {
        "seed": _Setting(int, 0, "run seed, recorded in all outputs"),
        "check": _Setting(check_name, "plancherel", "probe: " + ", ".join(_XNORM_CHECKS)),
        "b": _Setting(float, 0.5, "modulation exponent for the equivalence probe"),
        "s": _Setting(float, 0.0, "Sobolev index"),
        "alpha": _Setting(float, 1.5, "dissipation exponent"),
        "trials": _Setting(int, 8, "random fields per probe (ignored by contract)"),
        "delta": _Setting(float, 0.25, "modulation gain for the bilinear probe"),
        "n": _Setting(int, 64, "spatial modes"),
        "L": _Setting(float, _TWO_PI, "spatial period"),
        "k_max": _Setting(int, 8, "frequency band of the random fields"),
        "n_t": _Setting(int, 256, "time samples"),
        "t_window": _Setting(float, 4.0, "half-width of the time window"),
    },
    "inflate": {
        "seed": _Setting(int, 0, "run seed, recorded in all outputs"),
        "variant": _Setting(variant_name, "third_general", "iterate family (aliases: second, third, third2, heat)"),
        "alpha": _Setting(float, 1.5, "dissipation exponent"),
        "s": _Setting(float, -0.5, "Sobolev index of the scanned norm"),
        "eps": _Setting(float, 0.05, "profile amplitude parameter"),
        "Nmin": _Setting(float, 0.0, "lowest dyadic N (0 = variant default schedule)"),
        "Nmax": _Setting(float, 0.0, "highest dyadic N (0 = variant default schedule)"),
        "band_samples": _Setting(int, 64, "quadrature nodes per frequency band"),
    },
    "dyadic": {
        "seed": _Setting(int, 0, "run seed, recorded in all outputs"),
        "regime": _Setting(regime_name, "pm_coherence", "block regime (aliases: high, pp, pm, vanish)"),
        "gamma": _Setting(float, 2.0, "interpolation exponent of the coherent bound"),
        "samples": _Setting(int, 20, "number of sampled block specifications"),
        "resolution": _Setting(int, 64, "annulus cells per dyadic window"),
        "trials": _Setting(int, 4, "alternating-maximization restarts per spec"),
        "ceiling": _Setting(float, 10.0, "largest acceptable lower_bound / bound_rhs ratio"),
    },
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise _UsageError(message)


_SUBCOMMAND_HELP = {
    "evolve": "damped ETD evolution; trajectory CSV + figure",
    "picard": "Duhamel fixed-point solve with residual certificate",
    "heat": "fractional heat kernel norms over a time schedule",
    "xnorm": "space-time norm probes",
    "inflate": "iterate norm-growth scan over a dyadic schedule",
    "dyadic": "sampled multiplier-block lower bounds per regime",
}


def build_parser() -> _Parser:
    parser = _Parser(prog="dbo-lab", description=__doc__.splitlines()[0])
    subparsers = parser.add_subparsers(dest="subcommand", required=True, metavar="subcommand")
    for name, settings in _SUBCOMMAND_SETTINGS.items():
        sub = subparsers.add_parser(name, help=_SUBCOMMAND_HELP[name])
        sub.add_argument("--config", default=None, help="key=value settings file (# comments)")
        sub.add_argument("--out", default=".", help="output directory (default: current)")
        sub.add_argument(
            "--jobs",
            type=int,
            default=None,
            help="worker processes for xnorm/dyadic sweeps (default: DBO_LAB_JOBS or 1)",
        )
        for key, setting in settings.items():
            sub.add_argument(
                f"--{key}",
                dest=key,
                type=setting.coerce,
                default=None,
                help=f"{setting.help} (default: {setting.default})",
            )
    return parser


def _resolve_jobs(flag_value: int | None) -> int:
    if flag_value is None:
        env = os.environ.get("DBO_LAB_JOBS", "").strip()
        if not env:
            return 1
        try:
            flag_value = int(env)
        except ValueError as err:
            raise _UsageError(f"DBO_LAB_JOBS must be an integer, got {env!r}") from err
    if flag_value < 1:
        raise _UsageError(f"jobs must be >= 1, got {flag_value}")
    return flag_value


def _resolve_run(args: argparse.Namespace) -> tuple[RunConfig, int]:
    table = _SUBCOMMAND_SETTINGS[args.subcommand]
    defaults = {key: setting.default for key, setting in table.items()}
    coercers = {key: setting.coerce for key, setting in table.items()}
    file_values = parse_config_file(args.config) if args.config else None
    flag_values = {key: getattr(args, key) for key in table}
    settings = resolve_settings(defaults, coercers, file_values, flag_values)
    run = RunConfig(args.subcommand, int(settings["seed"]), args.out, settings)
    os.makedirs(run.out_dir, exist_ok=True)
    return run, _resolve_jobs(args.jobs)


def _map_ordered(fn: Callable, tasks: Sequence, jobs: int) -> list:
    """Apply fn over tasks, optionally on a process pool, preserving order."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


def _initial_field(grid, settings: Mapping[str, object]) -> SpectralField:
    preset = settings["u0"]
    if preset == "gaussian":
        return gaussian_field(grid, amplitude=settings["amp"], sigma=settings["sigma"])
    if preset == "cosine":
        return cosine_mode(grid, k=settings["k"], amplitude=settings["amp"])
    return SpectralField(grid, np.zeros(grid.n_modes, dtype=complex), True)


def _trajectory_rows(traj, s: float) -> list[tuple[float, float, float, float]]:
    decay = l2_decay_report(traj)
    return [
        (t, l2, hs_norm(traj.field_at(i), s), rate)
        for i, (t, l2, rate) in enumerate(decay)
    ]


_TRAJECTORY_HEADER = ("t", "l2_norm", "hs_norm", "dissipation_rate")


def cmd_evolve(run: RunConfig, jobs: int) -> int:
    st = run.settings
    grid = make_grid(st["n"], st["L"])
    params = DissipationParams(st["alpha"])
    cfg = EvolveConfig(params=params, dt=st["dt"], t_final=st["T"])
    traj = evolve_etd(_initial_field(grid, st), cfg)
    rows = _trajectory_rows(traj, st["s"])
    csv_path = os.path.join(run.out_dir, "evolve.csv")
    write_csv(csv_path, _TRAJECTORY_HEADER, rows, run.metadata())
    render_trajectory_png(
        os.path.join(run.out_dir, "evolve.png"),
        [r[0] for r in rows],
        [r[1] for r in rows],
        [r[2] for r in rows],
        st["s"],
    )
    print(f"wrote {csv_path} ({len(rows)} rows); final l2_norm {rows[-1][1]:.6e}")
    return 0


def cmd_picard(run: RunConfig, jobs: int) -> int:
    st = run.settings
    grid = make_grid(st["n"], st["L"])
    params = DissipationParams(st["alpha"])
    cfg = EvolveConfig(
        params=params,
        dt=st["dt"],
        t_final=st["T"],
        picard_max_iter=st["max_iter"],
        picard_tol=st["tol"],
    )
    u0 = _initial_field(grid, st)
    traj, iterations = picard_solve(u0, cfg)
    # a-posteriori certificate: one more Duhamel application must not move
    # the fixed point by more than the contraction allows
    free = free_trajectory(u0, cfg)
    correction = duhamel_integral(traj, cfg)
    image = np.asarray(free.coeffs) + np.asarray(correction.coeffs)
    defect = image - np.asarray(traj.coeffs)
    residual = float(np.sqrt(np.max(np.sum(np.abs(defect) ** 2, axis=1)) * grid.d_xi))
    rows = _trajectory_rows(traj, st["s"])
    meta = run.metadata()
    meta["iterations"] = iterations
    meta["residual"] = residual
    csv_path = os.path.join(run.out_dir, "picard.csv")
    write_csv(csv_path, _TRAJECTORY_HEADER, rows, meta)
    render_trajectory_png(
        os.path.join(run.out_dir, "picard.png"),
        [r[0] for r in rows],
        [r[1] for r in rows],
        [r[2] for r in rows],
        st["s"],
    )
    print(
        f"wrote {csv_path}; converged in {iterations} iterations, "
        f"residual {residual:.3e} (tol {st['tol']:.3e})"
    )
    return 0


def cmd_heat(run: RunConfig, jobs: int) -> int:
    st = run.settings
    t_schedule = default_t_schedule(st["points"])
    norms = kernel_norm_samples(st["rho"], st["p"], st["alpha"], t_schedule)
    slope, _, r_squared = loglog_fit(t_schedule, norms)
    predicted = smoothing_exponent(st["rho"], st["p"], st["alpha"])
    meta = run.metadata()
    meta["measured_slope"] = slope
    meta["predicted_slope"] = predicted
    meta["r_squared"] = r_squared
    rows = [
        (st["rho"], st["p"], st["alpha"], float(t), float(norm))
        for t, norm in zip(t_schedule, norms)
    ]
    csv_path = os.path.join(run.out_dir, "heat.csv")
    write_csv(csv_path, ("rho", "p", "alpha", "t", "kernel_norm"), rows, meta)
    write_heat_gnuplot(os.path.join(run.out_dir, "heat.gp"), "heat.csv", t_schedule, norms, predicted)
    render_heat_png(os.path.join(run.out_dir, "heat.png"), t_schedule, norms, slope, predicted)
    print(f"wrote {csv_path}; measured slope {slope:.4f}, predicted {predicted:.4f}")
    return 0


def _xnorm_task(task: tuple) -> tuple:
    """One probe row; rebuilt from plain values so pool workers stay deterministic."""
    check, st, seed, idx = task
    grid = make_grid(st["n"], st["L"])
    s, alpha = st["s"], st["alpha"]
    n, n_t, t_window = st["n"], st["n_t"], st["t_window"]
    if check == "plancherel":
        u = random_band_limited_field(grid, np.random.default_rng([seed, idx]), st["k_max"], t_window, n_t)
        ratio = xbs_norm(u, 0.0, 0.0, alpha) / spacetime_l2(u)
        return ("plancherel", 0.0, alpha, 0.0, _NAN, t_window, ratio, n, n_t)
    if check == "equivalence":
        u = random_band_limited_field(grid, np.random.default_rng([seed, idx]), st["k_max"], t_window, n_t)
        ratio = xbs_equivalence_check(u, st["b"], s, alpha)
        return ("equivalence", s, alpha, st["b"], _NAN, t_window, ratio, n, n_t)
    if check == "linear":
        rng = np.random.default_rng([seed, idx])
        phi = gaussian_field(
            grid,
            amplitude=rng.uniform(0.5, 2.0),
            sigma=rng.uniform(0.6, 1.5),
            center=rng.uniform(-0.25, 0.25) * st["L"],
        )
        ratio = linear_free_check(phi, s, alpha, t_window, n_t)
        return ("linear", s, alpha, _NAN, _NAN, t_window, ratio, n, n_t)
    if check == "bilinear":
        u = random_band_limited_field(grid, np.random.default_rng([seed, 2 * idx]), st["k_max"], t_window, n_t)
        v = random_band_limited_field(grid, np.random.default_rng([seed, 2 * idx + 1]), st["k_max"], t_window, n_t)
        ratio = bilinear_ratio_probe(u, v, s, alpha, st["delta"])
        return ("bilinear", s, alpha, _NAN, st["delta"], t_window, ratio, n, n_t)
    # contract rows scan the fixed theta grid; the delta column carries theta
    theta = _CONTRACT_THETAS[idx]
    bump = time_bump_field(grid, k=1, t_support=2.0, t_window=t_window, n_t=n_t)
    nu = contract_factor_check(bump, theta, np.asarray(_CONTRACT_SCHEDULE))
    return ("contract", s, alpha, _NAN, theta, max(_CONTRACT_SCHEDULE), nu, n, n_t)


_XNORM_HEADER = ("probe", "s", "alpha", "b", "delta", "T", "ratio", "grid_n", "grid_nt")


def cmd_xnorm(run: RunConfig, jobs: int) -> int:
    st = run.settings
    check = st["check"]
    if st["trials"] < 1:
        raise ValueError(f"trials must be >= 1, got {st['trials']}")
    count = len(_CONTRACT_THETAS) if check == "contract" else st["trials"]
    tasks = [(check, dict(st), run.seed, idx) for idx in range(count)]
    rows = _map_ordered(_xnorm_task, tasks, jobs)
    csv_path = os.path.join(run.out_dir, "xnorm.csv")
    write_csv(csv_path, _XNORM_HEADER, rows, run.metadata())
    ratios = [row[6] for row in rows]
    print(
        f"wrote {csv_path} ({len(rows)} rows); {check} ratio range "
        f"[{min(ratios):.4f}, {max(ratios):.4f}]"
    )
    return 0


def _dyadic_schedule(Nmin: float, Nmax: float, variant: str) -> tuple:
    if Nmin == 0.0 and Nmax == 0.0:
        return default_N_schedule(variant)
    if Nmin <= 0.0 or Nmax <= 0.0:
        raise ValueError("Nmin and Nmax must both be given (positive) or both omitted")
    lo = math.ceil(math.log2(Nmin))
    hi = math.floor(math.log2(Nmax))
    if hi - lo < 1:
        raise ValueError(f"need at least two dyadic values in [{Nmin}, {Nmax}]")
    return tuple(float(2**j) for j in range(lo, hi + 1))


_SCAN_HEADER = (
    "variant", "alpha", "s", "eps", "N", "gamma", "t_N",
    "hN_hs_norm", "uk_hs_norm", "v3_norm", "w3_norm",
)


def cmd_inflate(run: RunConfig, jobs: int) -> int:
    st = run.settings
    schedule = _dyadic_schedule(st["Nmin"], st["Nmax"], st["variant"])
    cfg = IterateConfig(st["variant"], st["alpha"], st["s"], st["eps"], schedule)

    def scan_rows(rows) -> list[tuple]:
        return [
            (
                st["variant"], st["alpha"], st["s"], st["eps"],
                row.N, row.gamma, row.t_N,
                row.hN_hs_norm, row.uk_hs_norm, row.v3_norm, row.w3_norm,
            )
            for row in rows
        ]

    csv_path = os.path.join(run.out_dir, "inflate.csv")
    try:
        result = inflation_scan(cfg, band_samples=st["band_samples"])
    except QuadratureError as err:
        write_csv(csv_path, _SCAN_HEADER, scan_rows(err.partial_rows), run.metadata())
        print(
            f"numerical failure: {err}; wrote {len(err.partial_rows)} partial rows to {csv_path}",
            file=sys.stderr,
        )
        return 2
    write_csv(csv_path, _SCAN_HEADER, scan_rows(result.rows), run.metadata())
    write_fit_json(os.path.join(run.out_dir, "inflate_fit.json"), result, result.verdict)
    write_scan_gnuplot(os.path.join(run.out_dir, "inflate.gp"), "inflate.csv", result)
    render_scan_png(os.path.join(run.out_dir, "inflate.png"), result)
    print(
        f"wrote {csv_path}; slope {result.slope:.4f}, predicted "
        f"{result.predicted_slope:.4f}, verdict: {result.verdict}"
    )
    return 0


def _dyadic_task(task: tuple):
    spec, resolution, trials, seed, gamma = task
    return estimate_block_norm(spec, resolution=resolution, trials=trials, seed=seed, gamma=gamma)


_DYADIC_HEADER = (
    "regime", "N1", "N2", "N3", "H", "L1", "L2", "L3",
    "lower_bound", "bound_rhs", "ratio", "trials", "resolution", "seed",
)


def cmd_dyadic(run: RunConfig, jobs: int) -> int:
    st = run.settings
    if st["samples"] < 1:
        raise ValueError(f"samples must be >= 1, got {st['samples']}")
    rng = np.random.default_rng(run.seed)
    specs = [sample_spec(st["regime"], rng) for _ in range(st["samples"])]
    tasks = [
        (spec, st["resolution"], st["trials"], (run.seed + i) % 2**64, st["gamma"])
        for i, spec in enumerate(specs)
    ]
    estimates = _map_ordered(_dyadic_task, tasks, jobs)
    rows = [
        (
            est.regime, spec.N1, spec.N2, spec.N3, spec.H, spec.L1, spec.L2, spec.L3,
            est.lower_bound, est.bound_rhs, est.ratio, est.trials, est.resolution, est.seed,
        )
        for spec, est in zip(specs, estimates)
    ]
    csv_path = os.path.join(run.out_dir, "dyadic.csv")
    write_csv(csv_path, _DYADIC_HEADER, rows, run.metadata())
    worst = max(est.ratio for est in estimates)
    print(
        f"wrote {csv_path} ({len(rows)} rows); max lower/upper ratio "
        f"{worst:.4f} against ceiling {st['ceiling']}"
    )
    if worst > st["ceiling"]:
        print(
            f"numerical failure: block ratio {worst:.4f} exceeds ceiling {st['ceiling']}",
            file=sys.stderr,
        )
        return 2
    return 0


_DISPATCH = {
    "evolve": cmd_evolve,
    "picard": cmd_picard,
    "heat": cmd_heat,
    "xnorm": cmd_xnorm,
    "inflate": cmd_inflate,
    "dyadic": cmd_dyadic,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        run, jobs = _resolve_run(args)
        return _DISPATCH[run.subcommand](run, jobs)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (BlowUpError, PicardDivergenceError, QuadratureError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
