"""Scaling laboratory: band-limited data families whose Picard iterates inflate.

The data h_N are indicator profiles in frequency; the second and third
iterates then have closed convolution forms

    u2^(t, xi) = -(i xi / 4 pi) e^{t Lam(xi)}
                 int h^(xi1) h^(xi - xi1) phi_div(chi(xi, xi1), t) d xi1,

    u3^(t, xi) = -(xi / 8 pi^2) e^{t Lam(xi)}
                 int int h^(xi1) h^(xi2 - xi1) h^(xi - xi2)
                 (xi2 / chi(xi2, xi1))
                 [phi_div(lam, t) - phi_div(chi(xi, xi2), t)] d xi1 d xi2
               = v3 - w3,

with Lam(xi) = i p(xi) - |xi|^alpha, chi the two-leg phase/damping
mismatch, lam its three-leg analogue (lam - chi(xi, xi2) = chi(xi2, xi1)
identically), and phi_div(z, t) = (e^{tz} - 1)/z the time integral of
e^{t'z}.  Everything here is continuum Gauss-Legendre quadrature over the
profile's support intervals; no FFT grid is involved, which is exactly
why agreement with the discrete Picard solver is a meaningful
cross-check.  The scans measure the growth exponent of the band-restricted
H^s norm of u_k(t_N) against the data size ||h_N||_{H^s}^k as N grows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .core import FourierGrid, SpectralField, dispersion_p, dissipation_symbol
from .fitting import loglog_fit

__all__ = [
    "VARIANTS",
    "Interval",
    "HNProfile",
    "IterateProbe",
    "IterateConfig",
    "ScalingFit",
    "ScanRow",
    "ScanResult",
    "QuadratureError",
    "GridResolutionError",
    "hn_low_profile",
    "hn_sym_profile",
    "profile_hs_norm",
    "build_hN_low",
    "build_hN_sym",
    "chi2",
    "lambda3",
    "phi_div",
    "u2_hat",
    "u3_hat",
    "inflation_scan",
    "heat_u2_scan",
    "default_N_schedule",
]

VARIANTS = ("second_low_alpha", "third_general", "third_alpha2", "heat_appendix")


class QuadratureError(RuntimeError):
    """Gauss-Legendre doubling failed to converge; may carry partial scan rows."""

    def __init__(self, message: str, partial_rows: tuple = ()):
        super().__init__(message)
        self.partial_rows = partial_rows


class GridResolutionError(ValueError):
    """The FFT grid cannot resolve a profile interval (or its band)."""


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class HNProfile:
    """Piecewise-constant frequency profile: (interval, amplitude) pairs."""

    pieces: tuple


def hn_low_profile(N: float, gamma: float, s: float) -> HNProfile:
    """Low+high two-block family, real part taken.

    The complex original has amplitude gamma^{-1/2} on [gamma/2, gamma]
    and gamma^{-1/2} N^{-s} on [N, N+gamma]; taking the real part halves
    the amplitude and mirrors the support.
    """
    if not 0.0 < gamma < N:
        raise ValueError(f"need 0 < gamma < N, got gamma={gamma}, N={N}")
    low = 0.5 * gamma**-0.5
    high = 0.5 * gamma**-0.5 * N ** (-s)
    return HNProfile(
        (
            (Interval(0.5 * gamma, gamma), low),
            (Interval(N, N + gamma), high),
            (Interval(-gamma, -0.5 * gamma), low),
            (Interval(-N - gamma, -N), high),
        )
    )


def hn_sym_profile(N: float, gamma: float, s: float) -> HNProfile:
    """Symmetric single-block family: N^{-s} gamma^{-1/2} on +-[N, N+2 gamma]."""
    if not 0.0 < gamma < N:
        raise ValueError(f"need 0 < gamma < N, got gamma={gamma}, N={N}")
    amp = N ** (-s) * gamma**-0.5
    return HNProfile(
        (
            (Interval(N, N + 2.0 * gamma), amp),
            (Interval(-N - 2.0 * gamma, -N), amp),
        )
    )


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        _GL_CACHE[n] = leggauss(n)
    return _GL_CACHE[n]


def profile_hs_norm(h: HNProfile, s: float) -> float:
    """Continuum H^s norm (int <xi>^{2s} |h^|^2 d xi)^{1/2} of the profile."""
    nodes, wts = _gl(64)
    total = 0.0
    for iv, amp in h.pieces:
        half = 0.5 * iv.width
        x = 0.5 * (iv.lo + iv.hi) + half * nodes
        total += amp * amp * half * float(np.sum(wts * (1.0 + x * x) ** s))
    return float(np.sqrt(total))


def _build_from_profile(h: HNProfile, grid: FourierGrid, min_modes: int = 8) -> SpectralField:
    """Sample the profile on the grid, half-weighting exact boundary modes.

    Half weights make the discrete convolution a composite trapezoid rule
    for the continuum one, which is what the quadrature cross-check needs.
    """
    tol = 1e-9 * grid.d_xi
    coeffs = np.zeros(grid.n_modes, dtype=np.complex128)
    for iv, amp in h.pieces:
        if iv.width / grid.d_xi < min_modes:
            raise GridResolutionError(
                f"interval [{iv.lo}, {iv.hi}] spans {iv.width / grid.d_xi:.2f} modes, "
                f"need >= {min_modes}"
            )
        if max(abs(iv.lo), abs(iv.hi)) >= grid.xi_max - tol:
            raise GridResolutionError(
                f"interval [{iv.lo}, {iv.hi}] exceeds the grid band +-{grid.xi_max}"
            )
        inside = (grid.xi > iv.lo + tol) & (grid.xi < iv.hi - tol)
        coeffs[inside] += amp
        coeffs[np.abs(grid.xi - iv.lo) <= tol] += 0.5 * amp
        coeffs[np.abs(grid.xi - iv.hi) <= tol] += 0.5 * amp
    return SpectralField(grid, coeffs, True)


def build_hN_low(N: float, gamma: float, s: float, grid: FourierGrid) -> SpectralField:
    """Discrete low+high data on the grid; errors if gamma is unresolved."""
    return _build_from_profile(hn_low_profile(N, gamma, s), grid)


def build_hN_sym(N: float, gamma: float, s: float, grid: FourierGrid) -> SpectralField:
    """Discrete symmetric-block data on the grid; errors if gamma is unresolved."""
    return _build_from_profile(hn_sym_profile(N, gamma, s), grid)


def chi2(xi, xi1, alpha: float, dispersive: bool = True):
    """Two-leg mismatch i(p(xi1)+p(xi-xi1)-p(xi)) - (|xi1|^a+|xi-xi1|^a-|xi|^a).

    dispersive=False drops the phase part (pure heat comparison).
    """
    xi = np.asarray(xi, dtype=float)
    xi1 = np.asarray(xi1, dtype=float)
    rest = xi - xi1
    re = -(
        dissipation_symbol(xi1, alpha)
        + dissipation_symbol(rest, alpha)
        - dissipation_symbol(xi, alpha)
    )
    if dispersive:
        im = dispersion_p(xi1) + dispersion_p(rest) - dispersion_p(xi)
    else:
        im = np.zeros_like(re)
    out = re + 1j * im
    return complex(out) if np.ndim(out) == 0 else out


def lambda3(xi, xi1, xi2, alpha: float, dispersive: bool = True):
    """Three-leg mismatch; satisfies lambda3 - chi2(xi, xi2) = chi2(xi2, xi1)."""
    xi = np.asarray(xi, dtype=float)
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    mid = xi2 - xi1
    last = xi - xi2
    re = -(
        dissipation_symbol(xi1, alpha)
        + dissipation_symbol(mid, alpha)
        + dissipation_symbol(last, alpha)
        - dissipation_symbol(xi, alpha)
    )
    if dispersive:
        im = dispersion_p(xi1) + dispersion_p(mid) + dispersion_p(last) - dispersion_p(xi)
    else:
        im = np.zeros_like(re)
    out = re + 1j * im
    return complex(out) if np.ndim(out) == 0 else out


def phi_div(z, t: float):
    """(e^{tz} - 1)/z, with the Taylor series t(1 + tz/2 + (tz)^2/6 + (tz)^3/24)
    below |tz| = 1e-4 to dodge cancellation (covers z = 0)."""
    z = np.asarray(z, dtype=np.complex128)
    tz = t * z
    out = np.empty_like(z)
    small = np.abs(tz) < 1e-4
    w = tz[small]
    out[small] = t * (1.0 + w / 2.0 + w * w / 6.0 + w * w * w / 24.0)
    zb = z[~small]
    out[~small] = (np.exp(t * zb) - 1.0) / zb
    return complex(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class IterateProbe:
    """Per-N evaluation context: probe time, dissipation, phase on/off."""

    t: float
    alpha: float
    dispersive: bool = True


def _output_factor(xi: float, probe: IterateProbe) -> complex:
    damp = -probe.t * dissipation_symbol(xi, probe.alpha)
    if probe.dispersive:
        return np.exp(damp + 1j * probe.t * dispersion_p(xi))
    return np.exp(damp)


def _u2_integral(xi: float, probe: IterateProbe, h: HNProfile, n: int) -> complex:
    nodes, wts = _gl(n)
    total = 0.0 + 0.0j
    for a_iv, a_amp in h.pieces:
        for b_iv, b_amp in h.pieces:
            lo = max(a_iv.lo, xi - b_iv.hi)
            hi = min(a_iv.hi, xi - b_iv.lo)
            if hi <= lo:
                continue
            half = 0.5 * (hi - lo)
            x1 = 0.5 * (hi + lo) + half * nodes
            z = chi2(xi, x1, probe.alpha, probe.dispersive)
            total += a_amp * b_amp * half * complex(np.sum(wts * phi_div(z, probe.t)))
    return total


def _u3_integrals(xi: float, probe: IterateProbe, h: HNProfile, n: int) -> tuple[complex, complex]:
    nodes, wts = _gl(n)
    v_total = 0.0 + 0.0j
    w_total = 0.0 + 0.0j
    for a_iv, a_amp in h.pieces:
        for b_iv, b_amp in h.pieces:
            for c_iv, c_amp in h.pieces:
                amp = a_amp * b_amp * c_amp
                lo2 = max(xi - c_iv.hi, a_iv.lo + b_iv.lo)
                hi2 = min(xi - c_iv.lo, a_iv.hi + b_iv.hi)
                if hi2 <= lo2:
                    continue
                # inner xi1 bounds change form where a shifted-B endpoint
                # crosses an A endpoint
                cuts = [c for c in (a_iv.lo + b_iv.hi, a_iv.hi + b_iv.lo) if lo2 < c < hi2]
                edges = sorted([lo2, hi2] + cuts)
                for p, q in zip(edges[:-1], edges[1:]):
                    if q - p <= 1e-13 * max(abs(p), abs(q), 1.0):
                        continue
                    ohalf = 0.5 * (q - p)
                    x2 = 0.5 * (q + p) + ohalf * nodes
                    l1 = np.maximum(a_iv.lo, x2 - b_iv.hi)
                    u1 = np.minimum(a_iv.hi, x2 - b_iv.lo)
                    ihalf = 0.5 * (u1 - l1)
                    x1 = (0.5 * (u1 + l1))[:, None] + ihalf[:, None] * nodes[None, :]
                    wmat = (wts * ohalf)[:, None] * (wts[None, :] * ihalf[:, None])
                    chi21 = chi2(x2[:, None], x1, probe.alpha, probe.dispersive)
                    lam = lambda3(xi, x1, x2[:, None], probe.alpha, probe.dispersive)
                    chi_out = chi2(xi, x2, probe.alpha, probe.dispersive)
                    base = (x2[:, None] / chi21) * wmat
                    v_total += amp * complex(np.sum(base * phi_div(lam, probe.t)))
                    w_total += amp * complex(
                        np.sum(base * phi_div(chi_out, probe.t)[:, None])
                    )
    return v_total, w_total


def _agrees(a: complex, b: complex, rtol: float = 1e-8) -> bool:
    scale = max(abs(a), abs(b))
    return scale < 1e-300 or abs(a - b) <= rtol * scale


def u2_hat(
    xi: float,
    probe: IterateProbe,
    h: HNProfile,
    base_nodes: int = 32,
    max_nodes: int = 128,
) -> complex:
    """Second-iterate coefficient at xi by adaptive Gauss-Legendre.

    Node counts double until successive values agree to 1e-8 relative;
    non-convergence at max_nodes raises QuadratureError.
    """
    prev = _u2_integral(xi, probe, h, base_nodes)
    n = 2 * base_nodes
    while n <= max_nodes:
        cur = _u2_integral(xi, probe, h, n)
        if _agrees(cur, prev):
            return complex(-1j * xi / (4.0 * np.pi)) * _output_factor(xi, probe) * cur
        prev = cur
        n *= 2
    raise QuadratureError(
        f"u2 quadrature did not converge at xi={xi} with {max_nodes} nodes"
    )


def u3_hat(
    xi: float,
    probe: IterateProbe,
    h: HNProfile,
    base_nodes: int = 32,
    max_nodes: int = 128,
) -> tuple[complex, complex]:
    """Third-iterate pieces (v3, w3) at xi; u3 = v3 - w3.

    Both pieces are returned so the alpha=2 near-cancellation can be
    studied; adaptivity as in u2_hat, applied to each piece.
    """
    prev_v, prev_w = _u3_integrals(xi, probe, h, base_nodes)
    n = 2 * base_nodes
    while n <= max_nodes:
        cur_v, cur_w = _u3_integrals(xi, probe, h, n)
        if _agrees(cur_v, prev_v) and _agrees(cur_w, prev_w):
            pre = complex(-xi / (8.0 * np.pi**2)) * _output_factor(xi, probe)
            return pre * cur_v, pre * cur_w
        prev_v, prev_w = cur_v, cur_w
        n *= 2
    raise QuadratureError(
        f"u3 quadrature did not converge at xi={xi} with {max_nodes} nodes"
    )


@dataclass(frozen=True)
class IterateConfig:
    """One scaling experiment: variant, indices, and the N schedule.

    Per-N derived quantities (gamma, t_N, profile, output band) follow
    the variant's scaling relations.
    """

    variant: str
    alpha: float
    s: float
    eps: float
    N_schedule: tuple

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        a = self.alpha
        ok = {
            "second_low_alpha": 0.0 <= a <= 1.0,
            "third_general": 1.0 <= a < 2.0,
            "third_alpha2": a == 2.0,
            "heat_appendix": 1.0 < a <= 2.0,
        }[self.variant]
        if not ok:
            raise ValueError(f"alpha={a} outside the admissible range for {self.variant}")
        if not 0.0 < self.eps <= 0.5:
            raise ValueError(f"eps must lie in (0, 0.5], got {self.eps}")
        sched = tuple(float(N) for N in self.N_schedule)
        if len(sched) < 2 or any(N < 64.0 for N in sched) or any(
            b <= a_ for a_, b in zip(sched, sched[1:])
        ):
            raise ValueError("N_schedule must be >= 2 increasing values, each >= 64")
        object.__setattr__(self, "N_schedule", sched)

    def order(self) -> int:
        return 3 if self.variant in ("third_general", "third_alpha2") else 2

    def gamma(self, N: float) -> float:
        if self.variant == "second_low_alpha":
            return N ** (self.alpha - 1.0)
        if self.variant == "third_general":
            return N ** (self.alpha / 2.0)
        if self.variant == "third_alpha2":
            return self.eps * N
        return N ** (1.0 - self.eps)

    def t_probe(self, N: float) -> float:
        g = self.gamma(N)
        if self.variant == "second_low_alpha":
            return (N + 2.0 * g) ** (-self.alpha - self.eps)
        if self.variant == "third_general":
            return (N + 4.0 * g) ** (-self.alpha - self.eps)
        if self.variant == "third_alpha2":
            return N ** (-2.0 - self.eps)
        return (2.0 * N + 4.0 * g) ** (-self.alpha - self.eps)

    def profile(self, N: float) -> HNProfile:
        if self.variant == "second_low_alpha":
            return hn_low_profile(N, self.gamma(N), self.s)
        return hn_sym_profile(N, self.gamma(N), self.s)

    def band(self, N: float) -> Interval:
        g = self.gamma(N)
        if self.variant == "second_low_alpha":
            return Interval(N + 0.5 * g, N + 2.0 * g)
        if self.variant == "heat_appendix":
            return Interval(2.0 * N, 2.0 * N + 4.0 * g)
        return Interval(N + 3.0 * g, N + 4.0 * g)

    def probe(self, N: float) -> IterateProbe:
        return IterateProbe(
            t=self.t_probe(N),
            alpha=self.alpha,
            dispersive=self.variant != "heat_appendix",
        )

    def predicted_slope(self) -> float:
        if self.variant == "second_low_alpha":
            return 0.5 * (1.0 - self.alpha) - self.eps
        if self.variant == "third_general":
            return -2.0 * self.s - 0.5 * self.alpha - self.eps
        if self.variant == "third_alpha2":
            return -2.0 * self.s - 1.0 - 2.0 * self.eps
        return -self.s + 1.5 - self.alpha - 1.5 * self.eps


def default_N_schedule(variant: str) -> tuple:
    """Dyadic N schedules; the third-iterate variants start higher because
    their leading-order box cancellation needs larger N to settle."""
    if variant == "second_low_alpha":
        return tuple(2.0**k for k in range(6, 13))
    return tuple(2.0**k for k in range(8, 15))


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    r_squared: float
    N_range: tuple
    predicted_slope: float

    @property
    def verdict(self) -> str:
        return "inflation" if self.slope > 0.0 else "no inflation"


@dataclass(frozen=True)
class ScanRow:
    N: float
    gamma: float
    t_N: float
    hN_hs_norm: float
    uk_hs_norm: float
    v3_norm: float
    w3_norm: float


@dataclass(frozen=True)
class ScanResult(ScalingFit):
    """A ScalingFit that keeps the per-N rows and config it was fitted from."""

    config: IterateConfig
    rows: tuple

    def normalized(self) -> np.ndarray:
        """uk norms divided by ||h||^k: the quantity whose slope is fitted."""
        k = self.config.order()
        return np.array([r.uk_hs_norm / r.hN_hs_norm**k for r in self.rows])

    def v3_w3_slopes(self) -> tuple[float, float]:
        """Separate fitted slopes of the v3 and w3 band norms (third order only)."""
        if self.config.order() != 3:
            raise ValueError("v3/w3 slopes only exist for third-iterate variants")
        n_vals = np.array([r.N for r in self.rows])
        k = self.config.order()
        hn = np.array([r.hN_hs_norm for r in self.rows])
        v = np.array([r.v3_norm for r in self.rows]) / hn**k
        w = np.array([r.w3_norm for r in self.rows]) / hn**k
        return loglog_fit(n_vals, v)[0], loglog_fit(n_vals, w)[0]


def _band_hs_norm(xi: np.ndarray, mag: np.ndarray, s: float) -> float:
    return float(np.sqrt(np.trapezoid((1.0 + xi**2) ** s * mag**2, xi)))


def _scan(cfg: IterateConfig, band_samples: int = 64) -> ScanResult:
    rows: list[ScanRow] = []
    for N in cfg.N_schedule:
        g = cfg.gamma(N)
        t = cfg.t_probe(N)
        h = cfg.profile(N)
        hn = profile_hs_norm(h, cfg.s)
        band = cfg.band(N)
        xi_samples = np.linspace(band.lo, band.hi, band_samples)
        probe = cfg.probe(N)
        try:
            if cfg.order() == 2:
                mag = np.array([abs(u2_hat(x, probe, h)) for x in xi_samples])
                uk = _band_hs_norm(xi_samples, mag, cfg.s)
                v3n = w3n = float("nan")
            else:
                pairs = [u3_hat(x, probe, h) for x in xi_samples]
                v_mag = np.array([abs(v) for v, _ in pairs])
                w_mag = np.array([abs(w) for _, w in pairs])
                d_mag = np.array([abs(v - w) for v, w in pairs])
                uk = _band_hs_norm(xi_samples, d_mag, cfg.s)
                v3n = _band_hs_norm(xi_samples, v_mag, cfg.s)
                w3n = _band_hs_norm(xi_samples, w_mag, cfg.s)
        except QuadratureError as err:
            raise QuadratureError(
                f"scan aborted at N={N}: {err}", partial_rows=tuple(rows)
            ) from err
        rows.append(ScanRow(N, g, t, hn, uk, v3n, w3n))
    n_vals = np.array([r.N for r in rows])
    k = cfg.order()
    y = np.array([r.uk_hs_norm / r.hN_hs_norm**k for r in rows])
    slope, intercept, r2 = loglog_fit(n_vals, y)
    n_range = (float(n_vals.min()), float(n_vals.max()))
    return ScanResult(slope, intercept, r2, n_range, cfg.predicted_slope(), cfg, tuple(rows))


def inflation_scan(cfg: IterateConfig, band_samples: int = 64) -> ScanResult:
    """Measure the iterate-growth exponent across the config's N schedule."""
    return _scan(cfg, band_samples)


def heat_u2_scan(cfg: IterateConfig, band_samples: int = 64) -> ScanResult:
    """Dispersionless high-high u2 scan (heat_appendix variant only)."""
    if cfg.variant != "heat_appendix":
        raise ValueError(f"heat_u2_scan requires the heat_appendix variant, got {cfg.variant}")
    return _scan(cfg, band_samples)
