"""Resonance identities and dyadic interaction-block norm estimation.

A dyadic block restricts the quadratic interaction multiplier to
frequency annuli |xi_j| ~ N_j, modulation annuli |lambda_j| ~ L_j
(lambda_j = tau_j - xi_j|xi_j|) and a resonance window |h(xi)| ~ H,
h = sum xi_j|xi_j| on the sum-zero hyperplane.  The trilinear norm of a
block is estimated FROM BELOW by alternating maximization over separable
nonnegative test functions g_j(xi_j) w_j(lambda_j): each factor update is
the exact maximizer (the normalized adjoint image) with the other five
factors fixed.  No upper bounds are certified; the falsifiable check is
that measured lower bounds never exceed a modest multiple of the regime
bounds

    high modulation:  L_min^{1/2} N_min^{1/2}
    (++) coherence:   L_min^{1/2} L_med^{1/4}
    (+-) coherence:   L_min^{1/2} min(N_min^{1/2},
                        N_max^{1/2-1/2g} N_min^{-1/2g} L_med^{1/2g})

The "~" windows are half-open [X, 2X); regime tests read "~" as within
factor 2 and ">>" as ratio >= 8, which keeps regimes disjoint on the
sampled lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import dispersion_p

__all__ = [
    "REGIMES",
    "FrequencyTriple",
    "DyadicBlockSpec",
    "MultiplierEstimate",
    "resonance",
    "resonance_identity_check",
    "resonance_suite",
    "block_indicator",
    "regime_classify",
    "bound_rhs",
    "estimate_block_norm",
    "sample_spec",
]

REGIMES = ("high_modulation", "pp_coherence", "pm_coherence", "vanishing")

_SUM_ATOL = 1e-12
_FINE_CAP = 1 << 19


@dataclass(frozen=True)
class FrequencyTriple:
    """Point (xi1, xi2, xi3) on the sum-zero hyperplane."""

    xi1: float
    xi2: float
    xi3: float

    def __post_init__(self) -> None:
        total = self.xi1 + self.xi2 + self.xi3
        if abs(total) > _SUM_ATOL:
            raise ValueError(f"frequencies must sum to zero, got residual {total:.3e}")

    def magnitudes(self) -> tuple[float, float, float]:
        """(N_min, N_med, N_max)."""
        a, b, c = sorted((abs(self.xi1), abs(self.xi2), abs(self.xi3)))
        return a, b, c


def resonance(t: FrequencyTriple) -> float:
    """h(xi) = xi1|xi1| + xi2|xi2| + xi3|xi3|."""
    return float(
        dispersion_p(t.xi1) + dispersion_p(t.xi2) + dispersion_p(t.xi3)
    )


def resonance_identity_check(t: FrequencyTriple) -> bool:
    """|h| = 2|xi_a xi_b| for the same-signed pair, and N_min N_max <= |h| <= 2 N_min N_max.

    On the sum-zero plane the same-signed pair is {N_min, N_med} and the
    product identity makes both window bounds exact (lower attained when
    N_min = N_med).
    """
    mags = t.magnitudes()
    if mags[2] == 0.0:
        raise ValueError("all-zero triple has no resonance window")
    h = abs(resonance(t))
    # the same-signed pair is the one with positive product
    pair = 2.0 * max(t.xi1 * t.xi2, t.xi1 * t.xi3, t.xi2 * t.xi3)
    scale = max(h, pair, 1e-300)
    identity_ok = abs(h - pair) <= 1e-12 * scale
    lo, hi = mags[0] * mags[2], 2.0 * mags[0] * mags[2]
    slack = 1e-12 * max(hi, 1e-300)
    return bool(identity_ok and h >= lo - slack and h <= hi + slack)


def resonance_suite(n_triples: int, seed: int = 0) -> tuple[float, float, float]:
    """Vectorized identity check over random sum-zero triples.

    Returns (max relative identity residual, min lower-window slack,
    min upper-window slack), slacks relative to N_min N_max.
    Frequencies are dyadic rationals m/2^13 with |m| <= 2^25, so every
    product and partial sum in the identity is exactly representable in
    a double: the measured residual isolates the algebra from summation
    roundoff (which for generic floats scales like eps N_max^2 and can
    swamp |h| ~ N_min N_max).
    """
    if n_triples < 1:
        raise ValueError("need at least one triple")
    rng = np.random.default_rng(seed)
    lattice = 2.0**-13
    xi1 = rng.integers(-(1 << 25), (1 << 25) + 1, n_triples) * lattice
    xi2 = rng.integers(-(1 << 25), (1 << 25) + 1, n_triples) * lattice
    xi3 = -(xi1 + xi2)
    h = np.abs(dispersion_p(xi1) + dispersion_p(xi2) + dispersion_p(xi3))
    pair = 2.0 * np.maximum.reduce([xi1 * xi2, xi1 * xi3, xi2 * xi3])
    mags = np.sort(np.abs(np.stack([xi1, xi2, xi3])), axis=0)
    prod = mags[0] * mags[2]
    scale = np.maximum(h, 1e-300)
    max_residual = float(np.max(np.abs(h - pair) / scale))
    safe = np.maximum(prod, 1e-300)
    min_lower = float(np.min((h - prod) / safe))
    min_upper = float(np.min((2.0 * prod - h) / safe))
    return max_residual, min_lower, min_upper


# ---------------------------------------------------------------- block specs


def _is_dyadic(x: float) -> bool:
    if not x > 0 or not math.isfinite(x):
        return False
    return math.frexp(x)[0] == 0.5


@dataclass(frozen=True)
class DyadicBlockSpec:
    """Window sizes (N1,N2,N3,H,L1,L2,L3), all powers of two.

    Construction enforces the two bookkeeping constraints that follow
    from the sum-zero identities: N_max ~ N_med and
    L_max ~ max(H, L_med), both within factor 2.  Whether H is
    compatible with the resonance size N_max N_min is a property of the
    support, read off by regime_classify.
    """

    N1: float
    N2: float
    N3: float
    H: float
    L1: float
    L2: float
    L3: float

    def __post_init__(self) -> None:
        for name in ("N1", "N2", "N3", "H", "L1", "L2", "L3"):
            v = float(getattr(self, name))
            if not _is_dyadic(v):
                raise ValueError(f"{name} must be a positive power of two, got {v!r}")
            object.__setattr__(self, name, v)
        n_min, n_med, n_max = self.n_sorted()
        if n_max > 2.0 * n_med:
            raise ValueError(
                f"N_max ~ N_med violated: {n_max} vs {n_med} (sum-zero forces the "
                "two largest frequencies comparable)"
            )
        l_max = self.l_sorted()[2]
        ref = max(self.H, self.l_sorted()[1])
        if not 0.5 * ref <= l_max <= 2.0 * ref:
            raise ValueError(
                f"L_max ~ max(H, L_med) violated: {l_max} vs {ref} (the lambda sum "
                "identity forces the largest modulation to balance the rest)"
            )

    def n_sorted(self) -> tuple[float, float, float]:
        return tuple(sorted((self.N1, self.N2, self.N3)))

    def l_sorted(self) -> tuple[float, float, float]:
        return tuple(sorted((self.L1, self.L2, self.L3)))

    @property
    def regime(self) -> str:
        return regime_classify(self)


def regime_classify(spec: DyadicBlockSpec) -> str:
    """Case split: high modulation, (++), (+-) (any leg permutation), or vanishing.

    Low-modulation regimes additionally require H ~ N_max N_min (factor
    4): outside that window the resonance identity makes the h-window
    unreachable, so the block vanishes.
    """
    n_min, n_med, n_max = spec.n_sorted()
    l_min, l_med, l_max = spec.l_sorted()
    if l_max <= 2.0 * l_med and l_max >= 8.0 * spec.H:
        return "high_modulation"
    low_modulation = 0.5 * spec.H <= l_max <= 2.0 * spec.H
    resonant = 0.25 * n_max * n_min <= spec.H <= 4.0 * n_max * n_min
    if low_modulation and resonant:
        if n_max <= 2.0 * n_min:
            return "pp_coherence"
        n_legs = (spec.N1, spec.N2, spec.N3)
        l_legs = (spec.L1, spec.L2, spec.L3)
        j_min = n_legs.index(n_min)
        small_l = l_legs[j_min]  # modulation window on the N_min leg
        other_l = max(l for j, l in enumerate(l_legs) if j != j_min)
        if (
            n_med >= 8.0 * n_min
            and 0.5 * spec.H <= small_l <= 2.0 * spec.H
            and small_l >= 0.5 * other_l
        ):
            return "pm_coherence"
    return "vanishing"


def bound_rhs(spec: DyadicBlockSpec, gamma: float = 2.0) -> float:
    """Regime bound for the block norm; 0 for vanishing specs.

    gamma only enters the (+-) bound; constants may depend on it, so
    sweeps report per-gamma ratios.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    n_min, _, n_max = spec.n_sorted()
    l_min, l_med, _ = spec.l_sorted()
    regime = regime_classify(spec)
    if regime == "high_modulation":
        return math.sqrt(l_min) * math.sqrt(n_min)
    if regime == "pp_coherence":
        return math.sqrt(l_min) * l_med**0.25
    if regime == "pm_coherence":
        interp = (
            n_max ** (0.5 - 0.5 / gamma) * n_min ** (-0.5 / gamma) * l_med ** (0.5 / gamma)
        )
        return math.sqrt(l_min) * min(math.sqrt(n_min), interp)
    return 0.0


def block_indicator(
    spec: DyadicBlockSpec,
    tau1: float,
    xi1: float,
    tau2: float,
    xi2: float,
    tau3: float,
    xi3: float,
) -> int:
    """Product of the seven window indicators at one hyperplane point."""
    xi_sum = xi1 + xi2 + xi3
    tau_sum = tau1 + tau2 + tau3
    scale = max(abs(xi1), abs(xi2), abs(xi3), 1.0)
    t_scale = max(abs(tau1), abs(tau2), abs(tau3), 1.0)
    if abs(xi_sum) > 1e-9 * scale or abs(tau_sum) > 1e-9 * t_scale:
        raise ValueError("tau and xi constraints must each sum to zero")
    h = dispersion_p(xi1) + dispersion_p(xi2) + dispersion_p(xi3)
    windows = (
        (abs(h), spec.H),
        (abs(xi1), spec.N1),
        (abs(xi2), spec.N2),
        (abs(xi3), spec.N3),
        (abs(tau1 - dispersion_p(xi1)), spec.L1),
        (abs(tau2 - dispersion_p(xi2)), spec.L2),
        (abs(tau3 - dispersion_p(xi3)), spec.L3),
    )
    return int(all(w <= v < 2.0 * w for v, w in windows))


# ---------------------------------------------------------------- estimation


@dataclass(frozen=True)
class MultiplierEstimate:
    """Lower-bound measurement of a block's trilinear norm."""

    lower_bound: float
    bound_rhs: float
    ratio: float
    trials: int
    resolution: int
    seed: int
    regime: str

    def __post_init__(self) -> None:
        if self.lower_bound < 0:
            raise ValueError("lower bound cannot be negative")


def _annulus_centers(w: float, res: int) -> np.ndarray:
    # positive cells ascending |c|, then negative cells ascending |c|
    inner = w * (1.0 + (np.arange(res) + 0.5) / res)
    return np.concatenate([inner, -inner])


def _fine_profile(cells: np.ndarray, w: float, res: int, d_s: float) -> np.ndarray:
    # piecewise-constant values on the fine lattice spanning [-2w, 2w)
    rep = int(round((w / res) / d_s))
    span = int(round(4.0 * w / d_s))
    out = np.zeros(span)
    out[3 * span // 4 :] = np.repeat(cells[:res], rep)
    out[: span // 4] = np.repeat(cells[res:][::-1], rep)
    return out


def _fft_conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.size + b.size - 1
    size = 1 << (n - 1).bit_length()
    out = np.fft.irfft(np.fft.rfft(a, size) * np.fft.rfft(b, size), size)[:n]
    return np.maximum(out, 0.0)  # clip FFT noise; operands are nonnegative


def _sample_at(arr: np.ndarray, start: float, d_s: float, c: np.ndarray) -> np.ndarray:
    idx = np.floor((c - start) / d_s).astype(np.int64)
    valid = (idx >= 0) & (idx < arr.size)
    out = np.zeros(c.shape)
    out[valid] = arr[idx[valid]]
    return out


def _unit(v: np.ndarray, d: float) -> np.ndarray | None:
    norm = math.sqrt(float(np.sum(v * v)) * d)
    if norm == 0.0:
        return None
    return v / norm


def estimate_block_norm(
    spec: DyadicBlockSpec,
    resolution: int = 64,
    trials: int = 16,
    seed: int = 0,
    gamma: float = 2.0,
) -> MultiplierEstimate:
    """Alternating-maximization lower bound for the block's trilinear norm.

    Legs 1 and 2 are discretized on (xi, lambda) cell grids covering
    their windows (resolution cells per half-axis); leg 3 lives on the
    induced cells.  With five factors fixed, the optimal sixth is its
    normalized adjoint image, so each sweep is monotone; the best value
    over 20 sweeps and `trials` restarts (rng streams (seed, trial)) is
    reported.  Empty support returns lower_bound 0.
    """
    if resolution < 8:
        raise ValueError(f"resolution must be >= 8 cells per axis, got {resolution}")
    if trials < 1:
        raise ValueError("need at least one restart")
    regime = regime_classify(spec)
    rhs = bound_rhs(spec, gamma)

    def result(lower: float) -> MultiplierEstimate:
        if rhs > 0.0:
            ratio = lower / rhs
        else:
            ratio = 0.0 if lower == 0.0 else math.inf
        return MultiplierEstimate(lower, rhs, ratio, trials, resolution, seed, regime)

    res = resolution
    n_windows = (spec.N1, spec.N2, spec.N3)
    l_windows = (spec.L1, spec.L2, spec.L3)
    xi_centers = [_annulus_centers(w, res) for w in n_windows]
    lam_centers = [_annulus_centers(w, res) for w in l_windows]
    d_n = [w / res for w in n_windows]
    d_l = [w / res for w in l_windows]
    d_s = min(d_l) / 2.0
    if 4.0 * sum(l_windows) / d_s > _FINE_CAP:
        raise ValueError(
            "modulation windows span too many fine-lattice points; "
            "keep the L dynamic range within ~2^6"
        )
    starts = [-2.0 * w for w in l_windows]

    # enumerate valid (cell1, cell2) pairs and the induced leg-3 cell
    xi1 = xi_centers[0][:, None]
    xi2 = xi_centers[1][None, :]
    xi3 = -(xi1 + xi2)
    h = dispersion_p(xi1) + dispersion_p(xi2) + dispersion_p(xi3)
    mask = (
        (np.abs(xi3) >= spec.N3)
        & (np.abs(xi3) < 2.0 * spec.N3)
        & (np.abs(h) >= spec.H)
        & (np.abs(h) < 2.0 * spec.H)
    )
    if not mask.any():
        return result(0.0)
    i1v, i2v = np.nonzero(mask)
    h_v = h[mask]
    band = np.minimum((np.abs(xi3[mask]) - spec.N3) // d_n[2], res - 1).astype(int)
    i3v = np.where(xi3[mask] > 0, band, res + band)
    area = d_n[0] * d_n[1]

    # bucket the resonance shifts -h onto the fine lattice once; every
    # lambda-factor update is then a single FFT cross-correlation of the
    # bucketed pair weights against the other two legs' convolution,
    # read off at the target leg's (exactly lattice-aligned) centers
    h_origin = d_s * math.floor(float(np.min(-h_v)) / d_s)
    bucket_v = np.floor((-h_v - h_origin) / d_s).astype(np.int64)
    h_len = int(bucket_v.max()) + 1
    pair_others = {j: tuple(k for k in range(3) if k != j) for j in range(3)}
    k_centers = {}
    for j in range(3):
        a, b = pair_others[j]
        k_centers[j] = np.rint(
            (h_origin - starts[a] - starts[b] - lam_centers[j]) / d_s
        ).astype(np.int64) + (h_len - 1)

    best = 0.0
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        gs = [rng.uniform(0.5, 1.5, 2 * res) for _ in range(3)]
        ws = [rng.uniform(0.5, 1.5, 2 * res) for _ in range(3)]
        gs = [_unit(g, d) for g, d in zip(gs, d_n)]
        ws = [_unit(w, d) for w, d in zip(ws, d_l)]
        fine = [_fine_profile(w, lw, res, d_s) for w, lw in zip(ws, l_windows)]
        t_prev = -1.0
        for _ in range(20):
            dead = False
            g_weight = gs[0][i1v] * gs[1][i2v] * gs[2][i3v]
            hist = np.bincount(bucket_v, weights=g_weight, minlength=h_len)
            for j in range(3):
                a, b = pair_others[j]
                conv = _fft_conv(fine[a], fine[b]) * d_s
                corr = _fft_conv(hist[::-1], conv)
                k = k_centers[j]
                direction = np.zeros(2 * res)
                valid = (k >= 0) & (k < corr.size)
                direction[valid] = corr[k[valid]]
                updated = _unit(direction, d_l[j])
                if updated is None:
                    dead = True
                    break
                ws[j] = updated
                fine[j] = _fine_profile(updated, l_windows[j], res, d_s)
            if dead:
                break
            # frequency-factor updates share the full triple convolution
            w_total = _fft_conv(_fft_conv(fine[0], fine[1]), fine[2]) * d_s * d_s
            w_start = starts[0] + starts[1] + starts[2]
            wt_v = _sample_at(w_total, w_start, d_s, -h_v)
            leg_idx = (i1v, i2v, i3v)
            for j in range(3):
                a, b = (k for k in range(3) if k != j)
                weights = gs[a][leg_idx[a]] * gs[b][leg_idx[b]] * wt_v
                direction = np.bincount(leg_idx[j], weights=weights, minlength=2 * res)
                updated = _unit(direction, d_n[j])
                if updated is None:
                    dead = True
                    break
                gs[j] = updated
            if dead:
                break
            t_val = float(
                np.sum(gs[0][i1v] * gs[1][i2v] * gs[2][i3v] * wt_v) * area
            )
            best = max(best, t_val)
            if t_prev > 0.0 and abs(t_val - t_prev) <= 1e-10 * t_prev:
                break
            t_prev = t_val
    return result(best)


# ---------------------------------------------------------------- samplers


def sample_spec(regime: str, rng: np.random.Generator) -> DyadicBlockSpec:
    """Random valid spec of the given regime, for sweeps.

    Shapes keep the L dynamic range within 2^6 (the estimator's fine
    lattice cap) and pick H inside the attainable resonance window, so
    non-vanishing samples have nonempty support; vanishing samples put
    the h-window provably below the resonance range.
    """
    if regime == "high_modulation":
        a = int(rng.integers(3, 7))
        b = int(rng.integers(1, a))
        # the top dyadic h-window [4 N_max N_min, 8 N_max N_min) empties out
        # when N_min ~ N_max/2: the third-leg sum constraint caps 2|xi_a xi_b|
        r = int(rng.integers(0, 2)) if b <= a - 2 else 0
        h_window = 2.0 ** (a + b + 1 + r)
        l_max = h_window * 2.0 ** int(rng.integers(3, 6))
        l_small = l_max / 2.0 ** int(rng.integers(0, 7))
        ns, ls = [2.0**a, 2.0**a, 2.0**b], [l_max, l_max, l_small]
        ls = [ls[i] for i in rng.permutation(3)]
    elif regime == "pp_coherence":
        a = int(rng.integers(2, 6))
        h_window = 2.0 ** (2 * a + 1 + int(rng.integers(0, 2)))
        c1 = int(rng.integers(0, 7))
        c2 = int(rng.integers(c1, 7))
        ns = [2.0**a, 2.0**a, 2.0 ** (a + 1)]
        ls = [h_window, h_window / 2.0**c1, h_window / 2.0**c2]
        ls = [ls[i] for i in rng.permutation(3)]
    elif regime == "pm_coherence":
        a = int(rng.integers(4, 7))
        # keep N_max/N_min <= 2^5 so the induced third-frequency lattice
        # (step N_max/resolution) still resolves the small window
        b = a - int(rng.integers(3, min(a, 5) + 1))
        h_window = 2.0 ** (a + b + 1 + int(rng.integers(0, 2)))
        ns = [2.0**b, 2.0**a, 2.0**a]  # the N_min leg carries ~H modulation
        ls = [
            h_window,
            h_window / 2.0 ** int(rng.integers(1, 7)),
            h_window / 2.0 ** int(rng.integers(1, 7)),
        ]
        order = rng.permutation(3)
        ns, ls = [ns[i] for i in order], [ls[i] for i in order]
        return DyadicBlockSpec(*ns, h_window, *ls)
    elif regime == "vanishing":
        a = int(rng.integers(4, 7))
        b = a - int(rng.integers(3, min(a, 6) + 1))
        h_window = 2.0 ** (a + b - 5 + int(rng.integers(0, 2)))
        c = int(rng.integers(0, 3))
        ns = [2.0**a, 2.0**a, 2.0**b]
        ls = [h_window, h_window / 2.0**c, h_window / 2.0 ** int(rng.integers(c, 7))]
        ls = [ls[i] for i in rng.permutation(3)]
    else:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    order = rng.permutation(3)
    return DyadicBlockSpec(
        *[ns[i] for i in order], h_window, *[ls[i] for i in order]
    )
