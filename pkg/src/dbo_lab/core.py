"""Frequency-space foundation: grids, fields, multiplier symbols, norms.

Everything downstream (propagators, solvers, space-time norms, scaling
scans) builds on the transform contract fixed here.  The continuum
convention is the forward kernel e^{-ix xi} with the 1/(2 pi) on the
inverse, so on a period-L torus with n collocation points the discrete
coefficients are

    c_k = (L/n) * fft(samples)_k,     samples_j = (n/L) * ifft(c)_j,

indexed by frequencies k*d_xi, k in [-n/2, n/2), in wrapped FFT order.
With this normalization the discrete Parseval identity

    sum |u_j|^2 dx = (1/2pi) sum |c_k|^2 d_xi

is exact (roundoff only), and every norm below carries its Riemann
weight (dx or d_xi) explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FourierGrid",
    "SpectralField",
    "SobolevIndex",
    "make_grid",
    "from_samples",
    "to_samples",
    "single_mode",
    "cosine_mode",
    "gaussian_field",
    "hilbert_symbol",
    "dispersion_p",
    "dissipation_symbol",
    "hs_norm",
    "lp_norm",
    "l2_norm",
    "derivative_x",
    "quadratic_product",
]

_SYMMETRY_RTOL = 1e-12


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class FourierGrid:
    """Uniform discretization of a period-L torus and its dual lattice.

    Frequencies live at k*d_xi for integer k in [-n_modes/2, n_modes/2),
    stored in wrapped FFT order; samples live at x_j = j*period/n_modes.
    """

    n_modes: int
    period: float
    d_xi: float = field(init=False, repr=False)
    xi_max: float = field(init=False, repr=False)
    dx: float = field(init=False, repr=False)
    k: np.ndarray = field(init=False, repr=False)
    xi: np.ndarray = field(init=False, repr=False)
    x: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = self.n_modes
        if not isinstance(n, (int, np.integer)) or not _is_power_of_two(int(n)) or n < 8:
            raise ValueError(f"n_modes must be a power of two >= 8, got {n!r}")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period!r}")
        n = int(n)
        object.__setattr__(self, "n_modes", n)
        object.__setattr__(self, "period", float(self.period))
        object.__setattr__(self, "d_xi", 2.0 * np.pi / self.period)
        object.__setattr__(self, "xi_max", self.d_xi * (n // 2))
        object.__setattr__(self, "dx", self.period / n)
        k = np.fft.fftfreq(n, 1.0 / n).astype(np.int64)
        xi = k * self.d_xi
        x = np.arange(n) * self.dx
        for name, arr in (("k", k), ("xi", xi), ("x", x)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def make_grid(n_modes: int, period: float) -> FourierGrid:
    """Build a FourierGrid; n_modes must be a power of two >= 8."""
    return FourierGrid(n_modes, period)


def _hermitian_mismatch(coeffs: np.ndarray) -> float:
    # mirror[k] = coeffs[-k mod n]; Hermitian symmetry is c == conj(mirror)
    mirror = np.roll(coeffs[::-1], 1)
    scale = np.max(np.abs(coeffs))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(coeffs - np.conj(mirror))) / scale)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a function on the grid's torus.

    reality_flag records that the field represents a real-valued signal;
    construction then enforces conjugate symmetry c(-xi) = conj(c(xi))
    to relative 1e-12.
    """

    grid: FourierGrid
    coeffs: np.ndarray
    reality_flag: bool = False

    def __post_init__(self) -> None:
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.n_modes,):
            raise ValueError(
                f"coeffs shape {c.shape} does not match grid with {self.grid.n_modes} modes"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "reality_flag", bool(self.reality_flag))
        if self.reality_flag:
            mism = _hermitian_mismatch(c)
            if mism > _SYMMETRY_RTOL:
                raise ValueError(
                    f"reality_flag set but conjugate symmetry fails: relative mismatch {mism:.3e}"
                )


@dataclass(frozen=True)
class SobolevIndex:
    """Regularity pair: spatial exponent s and temporal weight exponent b."""

    s: float
    b: float = 0.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.s) and np.isfinite(self.b)):
            raise ValueError(f"indices must be finite, got s={self.s}, b={self.b}")


def from_samples(grid: FourierGrid, samples: np.ndarray, reality_flag: bool | None = None) -> SpectralField:
    """Transform physical samples to a SpectralField, c = (L/n)*fft(samples)."""
    u = np.asarray(samples)
    if u.shape != (grid.n_modes,):
        raise ValueError(f"samples shape {u.shape} does not match grid")
    if reality_flag is None:
        reality_flag = bool(np.isrealobj(u))
    coeffs = (grid.period / grid.n_modes) * np.fft.fft(u)
    return SpectralField(grid, coeffs, reality_flag)


def to_samples(f: SpectralField) -> np.ndarray:
    """Inverse transform to the physical grid, samples = (n/L)*ifft(c)."""
    u = (f.grid.n_modes / f.grid.period) * np.fft.ifft(np.asarray(f.coeffs))
    if f.reality_flag:
        return u.real
    return u


def single_mode(grid: FourierGrid, k: int, amplitude: complex = 1.0) -> SpectralField:
    """Field whose samples are amplitude * e^{i k d_xi x} (complex unless k=0)."""
    if not -grid.n_modes // 2 <= k < grid.n_modes // 2:
        raise ValueError(f"mode index {k} outside [-n/2, n/2)")
    coeffs = np.zeros(grid.n_modes, dtype=np.complex128)
    coeffs[k % grid.n_modes] = amplitude * grid.period
    real = k == 0 and np.imag(amplitude) == 0.0
    return SpectralField(grid, coeffs, bool(real))


def cosine_mode(grid: FourierGrid, k: int, amplitude: float = 1.0) -> SpectralField:
    """Real field amplitude * cos(k d_xi x)."""
    if not 0 <= k < grid.n_modes // 2:
        raise ValueError(f"cosine mode index {k} outside [0, n/2)")
    coeffs = np.zeros(grid.n_modes, dtype=np.complex128)
    half = 0.5 * amplitude * grid.period
    coeffs[k % grid.n_modes] += half
    coeffs[-k % grid.n_modes] += half
    return SpectralField(grid, coeffs, True)


def gaussian_field(
    grid: FourierGrid,
    amplitude: float = 1.0,
    sigma: float = 1.0,
    center: float | None = None,
) -> SpectralField:
    """Real Gaussian bump amplitude * exp(-(x-center)^2 / (2 sigma^2)).

    Defaults center the bump mid-domain; sigma should be << period so the
    periodization tail is negligible.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    c = 0.5 * grid.period if center is None else float(center)
    u = amplitude * np.exp(-((grid.x - c) ** 2) / (2.0 * sigma**2))
    return from_samples(grid, u)


def hilbert_symbol(xi):
    """Hilbert-transform symbol -i*sgn(xi), with sgn(0) = 0."""
    xi_arr = np.asarray(xi, dtype=float)
    out = -1j * np.sign(xi_arr)
    return complex(out) if xi_arr.ndim == 0 else out


def dispersion_p(xi):
    """Dispersion phase p(xi) = xi*|xi| (odd)."""
    xi_arr = np.asarray(xi, dtype=float)
    out = xi_arr * np.abs(xi_arr)
    return float(out) if xi_arr.ndim == 0 else out


def dissipation_symbol(xi, alpha: float):
    """Dissipation symbol |xi|^alpha for alpha in [0,2], with 0 at xi=0.

    The value 0 at the origin (also for alpha=0) keeps the mean mode
    undamped, matching the divergence form of the nonlinearity.
    """
    if not 0.0 <= alpha <= 2.0:
        raise ValueError(f"alpha must lie in [0, 2], got {alpha}")
    xi_arr = np.asarray(xi, dtype=float)
    out = np.where(xi_arr == 0.0, 0.0, np.abs(xi_arr) ** alpha)
    return float(out) if xi_arr.ndim == 0 else out


def hs_norm(f: SpectralField, s: float) -> float:
    """Sobolev norm (sum <xi>^{2s} |c_k|^2 d_xi)^{1/2}, <xi> = (1+xi^2)^{1/2}."""
    w = (1.0 + f.grid.xi**2) ** s
    return float(np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2) * f.grid.d_xi))


def l2_norm(f: SpectralField) -> float:
    """Physical L^2 norm computed spectrally: ((1/2pi) sum |c_k|^2 d_xi)^{1/2}."""
    return float(np.sqrt(np.sum(np.abs(f.coeffs) ** 2) * f.grid.d_xi / (2.0 * np.pi)))


def lp_norm(f: SpectralField, p: float) -> float:
    """Physical L^p norm on the sample grid with cell weight dx; p in [1, inf]."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    mag = np.abs(to_samples(f))
    if np.isinf(p):
        return float(np.max(mag))
    return float(np.sum(mag**p * f.grid.dx) ** (1.0 / p))


def _replace_coeffs(f: SpectralField, coeffs: np.ndarray, reality_flag: bool) -> SpectralField:
    return SpectralField(f.grid, coeffs, reality_flag)


def derivative_x(f: SpectralField) -> SpectralField:
    """Spatial derivative, multiplier i*xi.

    The unpaired Nyquist mode is zeroed: i*xi there has no conjugate
    partner and would break reality.
    """
    c = f.coeffs * (1j * f.grid.xi)
    c[f.grid.n_modes // 2] = 0.0
    return _replace_coeffs(f, c, f.reality_flag)


def _pad_coeffs(c: np.ndarray) -> np.ndarray:
    # Embed modes [-n/2, n/2) into a 2n lattice; the Nyquist coefficient
    # splits evenly between +-n/2, which preserves the n-grid samples.
    n = c.shape[0]
    half = n // 2
    big = np.zeros(2 * n, dtype=np.complex128)
    big[:half] = c[:half]
    big[-(half - 1):] = c[-(half - 1):]
    big[half] = 0.5 * c[half]
    big[-half] = 0.5 * c[half]
    return big


def quadratic_product(f: SpectralField, g: SpectralField, dealias: bool = True) -> SpectralField:
    """Pointwise product f*g as a SpectralField.

    dealias=True zero-pads both factors to a 2n lattice, multiplies
    there, and truncates back, which is the exact alias-free projection
    of the product onto the retained band.  dealias=False multiplies on
    the native grid and keeps the aliased spectrum.
    """
    if f.grid is not g.grid and (
        f.grid.n_modes != g.grid.n_modes or f.grid.period != g.grid.period
    ):
        raise ValueError("operands live on different grids")
    grid = f.grid
    n = grid.n_modes
    real_out = f.reality_flag and g.reality_flag
    if dealias:
        scale_up = (2 * n) / grid.period
        u = scale_up * np.fft.ifft(_pad_coeffs(np.asarray(f.coeffs)))
        v = scale_up * np.fft.ifft(_pad_coeffs(np.asarray(g.coeffs)))
        w = u * v
        if real_out:
            w = w.real
        cw = (grid.period / (2 * n)) * np.fft.fft(w)
        half = n // 2
        out = np.empty(n, dtype=np.complex128)
        out[:half] = cw[:half]
        out[-(half - 1):] = cw[-(half - 1):]
        # +-n/2 of the fine lattice both alias onto the coarse Nyquist slot
        out[half] = cw[half] + cw[-half]
    else:
        u = to_samples(f)
        v = to_samples(g)
        w = u * v
        out = (grid.period / n) * np.fft.fft(w)
    return SpectralField(grid, out, real_out)
