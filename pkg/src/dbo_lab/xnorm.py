"""Space-time weighted norms and probes of the linear and bilinear estimates.

The X^{b,s} norm weights the space-time Fourier transform by
<i(tau - xi|xi|) + |xi|^alpha>^b <xi>^s, so the "modulation"
tau - xi|xi| (distance from the dispersive surface) and the dissipative
scale |xi|^alpha enter on the same footing.  Probes here measure, at
desk scale, the norm equivalence with V(-t)-conjugated Sobolev norms,
the free-wave embedding, the small-time contraction factor, and the
bilinear product estimate.

All fields are sampled on a uniform time lattice over
[-t_window, t_window] and must vanish at the window boundary, so the
discrete (tau, xi) transform represents the continuum one.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import FourierGrid, SpectralField, dispersion_p, dissipation_symbol, hs_norm
from .evolution import CutoffPsi
from .fitting import loglog_fit

__all__ = [
    "SpaceTimeField",
    "spacetime_l2",
    "xbs_norm",
    "xbs_equivalence_check",
    "free_wave_field",
    "random_band_limited_field",
    "time_bump_field",
    "linear_free_check",
    "contract_factor_check",
    "bilinear_ratio_probe",
]

_psi = CutoffPsi()

_BOUNDARY_RTOL = 1e-12


def _time_lattice(t_window: float, n_t: int) -> np.ndarray:
    return -t_window + (2.0 * t_window / n_t) * np.arange(n_t)


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Complex samples u(t_i, x_j): a uniform time lattice times a FourierGrid.

    Time runs over n_t points t_i = -t_window + i*dt covering
    [-t_window, t_window); n_t must be a power of two.  The first and last
    rows must be below 1e-12 of the peak so the periodic time transform
    does not see the window edge.
    """

    grid: FourierGrid
    t_window: float
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.complex128)
        if v.ndim != 2 or v.shape[1] != self.grid.n_modes:
            raise ValueError(
                f"values shape {v.shape} does not match (n_t, {self.grid.n_modes})"
            )
        n_t = v.shape[0]
        if n_t < 8 or n_t & (n_t - 1):
            raise ValueError(f"n_t must be a power of two >= 8, got {n_t}")
        if not self.t_window > 0:
            raise ValueError(f"t_window must be positive, got {self.t_window!r}")
        object.__setattr__(self, "t_window", float(self.t_window))
        peak = float(np.max(np.abs(v)))
        if peak > 0.0:
            edge = max(float(np.max(np.abs(v[0]))), float(np.max(np.abs(v[-1]))))
            if edge > _BOUNDARY_RTOL * peak:
                raise ValueError(
                    "field does not vanish at the time-window boundary: "
                    f"edge/peak = {edge / peak:.3e}"
                )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_t(self) -> int:
        return self.values.shape[0]

    @property
    def dt(self) -> float:
        return 2.0 * self.t_window / self.n_t

    @property
    def d_tau(self) -> float:
        return np.pi / self.t_window

    @cached_property
    def times(self) -> np.ndarray:
        t = _time_lattice(self.t_window, self.n_t)
        t.setflags(write=False)
        return t

    @cached_property
    def tau(self) -> np.ndarray:
        # angular temporal frequencies, wrapped FFT order
        tau = 2.0 * np.pi * np.fft.fftfreq(self.n_t, self.dt)
        tau.setflags(write=False)
        return tau

    @cached_property
    def st_transform(self) -> np.ndarray:
        """F u(tau, xi) = sum e^{-i(tau t + xi x)} u dt dx on the lattice.

        Rolling t=0 to row zero makes the row DFT carry the e^{-i tau t}
        phases of the true (signed) times.
        """
        rolled = np.roll(self.values, -self.n_t // 2, axis=0)
        scale = (self.grid.period / self.grid.n_modes) * self.dt
        out = scale * np.fft.fft2(rolled)
        out.setflags(write=False)
        return out


def _same_lattice(u: SpaceTimeField, v: SpaceTimeField) -> bool:
    return (
        u.grid.n_modes == v.grid.n_modes
        and u.grid.period == v.grid.period
        and u.t_window == v.t_window
        and u.n_t == v.n_t
    )


def spacetime_l2(u: SpaceTimeField) -> float:
    """Space-time L^2 norm in the frequency-side measure of hs_norm.

    Equals (sum_t hs_norm(u(t), 0)^2 dt)^{1/2}; the 2 pi converts the
    physical sample sum to that measure (exact discrete Parseval).
    """
    return float(
        np.sqrt(2.0 * np.pi * np.sum(np.abs(u.values) ** 2) * u.grid.dx * u.dt)
    )


def _frequency_l2(u: SpaceTimeField, weight_sq: np.ndarray | float) -> float:
    # 1/(2 pi): one transform direction is inverted, so the discrete
    # (tau, xi) sum reproduces time-domain Parseval exactly
    total = np.sum(weight_sq * np.abs(u.st_transform) ** 2)
    return float(np.sqrt(total * u.d_tau * u.grid.d_xi / (2.0 * np.pi)))


def xbs_norm(u: SpaceTimeField, b: float, s: float, alpha: float) -> float:
    """Weighted norm with weight <i(tau - xi|xi|) + |xi|^alpha>^b <xi>^s.

    b=0 collapses to the L^2_t H^s_x norm exactly; b=s=0 is the discrete
    space-time L^2 norm.
    """
    xi = u.grid.xi
    lam = u.tau[:, None] - dispersion_p(xi)[None, :]
    r = dissipation_symbol(xi, alpha)
    w2 = (1.0 + lam * lam + (r * r)[None, :]) ** b * (1.0 + xi * xi) ** s
    return _frequency_l2(u, w2)


def xbs_equivalence_check(u: SpaceTimeField, b: float, s: float, alpha: float) -> float:
    """Ratio of xbs_norm to ||V(-t)u||_{H^{b,s}} + ||u||_{L^2_t H^{s+alpha b}}.

    V(-t) unwinds the dispersive phase, so the first term weights plain
    <tau>^b <xi>^s; the second trades the temporal weight for alpha*b
    spatial derivatives.  The pointwise weight comparison makes the ratio
    order one for any nonzero field.
    """
    if b < 0:
        raise ValueError(f"temporal exponent b must be >= 0, got {b}")
    if spacetime_l2(u) == 0.0:
        raise ValueError("zero field: equivalence ratio undefined")
    grid = u.grid
    n, L = grid.n_modes, grid.period
    c = (L / n) * np.fft.fft(u.values, axis=1)  # hat u(t, xi)
    phase = np.exp(-1j * u.times[:, None] * dispersion_p(grid.xi)[None, :])
    unwound = SpaceTimeField(grid, u.t_window, (n / L) * np.fft.ifft(c * phase, axis=1))
    w2 = (1.0 + unwound.tau[:, None] ** 2) ** b * (1.0 + grid.xi**2)[None, :] ** s
    sobolev_term = _frequency_l2(unwound, w2)
    w_x = (1.0 + grid.xi**2) ** (s + alpha * b)
    l2h_term = float(
        np.sqrt(np.sum(w_x[None, :] * np.abs(c) ** 2) * grid.d_xi * u.dt)
    )
    return xbs_norm(u, b, s, alpha) / (sobolev_term + l2h_term)


# ---------------------------------------------------------------- synthesis


def free_wave_field(
    phi: SpectralField, alpha: float, t_window: float = 4.0, n_t: int = 256
) -> SpaceTimeField:
    """psi(t) S_alpha(t) phi sampled on the space-time lattice.

    The damping uses |t| so the field is defined on the whole window; the
    psi cutoff (supported in [-2,2]) needs t_window > 2.
    """
    if t_window <= 2.0:
        raise ValueError(f"t_window must exceed the psi support radius 2, got {t_window}")
    grid = phi.grid
    t = _time_lattice(t_window, n_t)
    mult = np.exp(
        1j * t[:, None] * dispersion_p(grid.xi)[None, :]
        - np.abs(t)[:, None] * dissipation_symbol(grid.xi, alpha)[None, :]
    )
    rows = (grid.n_modes / grid.period) * np.fft.ifft(
        mult * np.asarray(phi.coeffs)[None, :], axis=1
    )
    values = _psi(t)[:, None] * rows
    return SpaceTimeField(grid, t_window, values)


def random_band_limited_field(
    grid: FourierGrid,
    rng: np.random.Generator,
    k_max: int = 8,
    t_window: float = 4.0,
    n_t: int = 256,
    omega_scale: float = 20.0,
    surface_bias: float = 0.0,
) -> SpaceTimeField:
    """Real psi-truncated superposition of modes e^{i(xi_k x + omega_k t)}.

    Temporal frequencies are uniform in [-omega_scale, omega_scale] around
    surface_bias * xi_k|xi_k|; bias 1 centers every mode on the dispersive
    surface, bias 0 scatters them.
    """
    if not 1 <= k_max < grid.n_modes // 2:
        raise ValueError(f"k_max must lie in [1, {grid.n_modes // 2}), got {k_max}")
    t = _time_lattice(t_window, n_t)
    xi_k = np.arange(1, k_max + 1) * grid.d_xi
    amps = (rng.standard_normal(k_max) + 1j * rng.standard_normal(k_max)) / np.sqrt(k_max)
    omegas = surface_bias * dispersion_p(xi_k) + omega_scale * rng.uniform(-1.0, 1.0, k_max)
    e_t = np.exp(1j * t[:, None] * omegas[None, :])
    e_x = np.exp(1j * grid.x[:, None] * xi_k[None, :])
    values = 2.0 * np.real((e_t * amps[None, :]) @ e_x.T)
    return SpaceTimeField(grid, t_window, _psi(t)[:, None] * values)


def time_bump_field(
    grid: FourierGrid,
    k: int = 1,
    t_support: float = 2.0,
    t_window: float = 4.0,
    n_t: int = 256,
) -> SpaceTimeField:
    """Separable bump psi(2t/t_support) cos(xi_k x), supported in [-t_support, t_support]."""
    if not 0.0 < t_support < t_window:
        raise ValueError(
            f"t_support must lie in (0, t_window={t_window}), got {t_support}"
        )
    t = _time_lattice(t_window, n_t)
    envelope = _psi(2.0 * t / t_support)
    return SpaceTimeField(
        grid, t_window, np.outer(envelope, np.cos(k * grid.d_xi * grid.x))
    )


# ---------------------------------------------------------------- probes


def linear_free_check(
    phi: SpectralField, s: float, alpha: float, t_window: float = 4.0, n_t: int = 256
) -> float:
    """||psi(t) S_alpha(t) phi||_{X^{1/2,s}} / ||phi||_{H^s}.

    Both sides are homogeneous of degree one in phi, so the ratio is
    scale-free; boundedness over data is the content of the free-wave
    embedding.
    """
    denom = hs_norm(phi, s)
    if denom == 0.0:
        raise ValueError("zero data: ratio undefined")
    u = free_wave_field(phi, alpha, t_window, n_t)
    return xbs_norm(u, 0.5, s, alpha) / denom


def _support_radius(f: SpaceTimeField) -> float:
    row_peak = np.max(np.abs(f.values), axis=1)
    peak = float(row_peak.max())
    if peak == 0.0:
        raise ValueError("zero field: contraction ratio undefined")
    supported = row_peak > _BOUNDARY_RTOL * peak
    return float(np.max(np.abs(f.times[supported])))


def contract_factor_check(f: SpaceTimeField, theta: float, T_schedule) -> float:
    """Fitted exponent nu of ||F^{-1}(f_hat / <tau - xi|xi|>^theta)|| ~ T^nu ||f||.

    The template f is rescaled in time (by trigonometric interpolation) so
    its support becomes [-T, T] for each T in the schedule; the measured
    damping ratio is fitted against T in log-log.  theta=0 returns 0.
    """
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    T = np.asarray(T_schedule, dtype=float)
    if T.ndim != 1 or np.unique(T).size < 2 or np.any(T <= 0):
        raise ValueError("degenerate schedule: need >= 2 distinct positive T values")
    if np.any(T > f.t_window - 4.0 * f.dt) or np.any(T < 8.0 * f.dt):
        raise ValueError(
            "schedule leaves the resolvable range "
            f"[{8.0 * f.dt:.4g}, {f.t_window - 4.0 * f.dt:.4g}]"
        )
    radius = _support_radius(f)
    if radius == 0.0:
        raise ValueError("field supported on a single time slice cannot be rescaled")

    # time-only transform of the template, t=0 rolled to row zero
    f_t = f.dt * np.fft.fft(np.roll(f.values, -f.n_t // 2, axis=0), axis=0)
    lam = f.tau[:, None] - dispersion_p(f.grid.xi)[None, :]
    damp_sq = (1.0 + lam * lam) ** (-theta)

    ratios = np.empty(T.size)
    for i, t_i in enumerate(T):
        t_new = f.times * (radius / t_i)
        interp = np.exp(1j * t_new[:, None] * f.tau[None, :]) / (2.0 * f.t_window)
        vals = interp @ f_t
        vals[np.abs(f.times) > t_i + f.dt] = 0.0  # exact support of the rescaling
        g = SpaceTimeField(f.grid, f.t_window, vals)
        spectrum = np.abs(g.st_transform) ** 2
        ratios[i] = np.sqrt(np.sum(damp_sq * spectrum) / np.sum(spectrum))
    slope, _, _ = loglog_fit(T, ratios)
    return slope


def _pad_rows(c: np.ndarray) -> np.ndarray:
    # rows of modes [-n/2, n/2) embedded into a 2n lattice; Nyquist splits
    # evenly, preserving the n-grid samples (matches core's padding)
    n = c.shape[1]
    half = n // 2
    big = np.zeros((c.shape[0], 2 * n), dtype=np.complex128)
    big[:, :half] = c[:, :half]
    big[:, -(half - 1):] = c[:, -(half - 1):]
    big[:, half] = 0.5 * c[:, half]
    big[:, -half] = 0.5 * c[:, half]
    return big


def bilinear_ratio_probe(
    u: SpaceTimeField, v: SpaceTimeField, s: float, alpha: float, delta: float
) -> float:
    """||d_x(uv)||_{X^{-1/2+delta,s}} / (||u||_{X^{1/2,s}} ||v||_{X^{1/2,s}}).

    The product is formed slice by slice on a spatially doubled grid, so
    the full convolution band of d_x(uv) is kept alias-free; inputs should
    stay a margin below their own spatial Nyquist.
    """
    if not 0.0 < delta < 0.5:
        raise ValueError(f"delta must lie in (0, 1/2), got {delta}")
    if not _same_lattice(u, v):
        raise ValueError("operands live on different space-time lattices")
    den = xbs_norm(u, 0.5, s, alpha) * xbs_norm(v, 0.5, s, alpha)
    if den == 0.0:
        raise ValueError("zero denominator")
    grid = u.grid
    n, L = grid.n_modes, grid.period
    scale_up = (2 * n) / L
    su = scale_up * np.fft.ifft(_pad_rows((L / n) * np.fft.fft(u.values, axis=1)), axis=1)
    sv = scale_up * np.fft.ifft(_pad_rows((L / n) * np.fft.fft(v.values, axis=1)), axis=1)
    big = FourierGrid(2 * n, L)
    c_prod = (L / (2 * n)) * np.fft.fft(su * sv, axis=1)
    c_prod *= 1j * big.xi[None, :]
    c_prod[:, n] = 0.0  # unpaired Nyquist of the doubled lattice
    w = SpaceTimeField(big, u.t_window, scale_up * np.fft.ifft(c_prod, axis=1))
    return xbs_norm(w, -0.5 + delta, s, alpha) / den
