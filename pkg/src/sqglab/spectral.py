"""Spectral representation of mean-zero real fields on the 2-torus.

A field is stored through its Fourier coefficients on the full n x n FFT
lattice, with the convention

    theta(x) = sum_k theta_hat(k) exp(i k.x),
    theta_hat(k) = (2 pi)^-2 int theta(x) exp(-i k.x) dx,

so that ``theta_hat = fft2(values) / n**2``.  Collocation points are
x_j = 2 pi j / n, which is the periodic torus [-pi, pi)^2 shifted by pi.

Sobolev norms are coefficient sums, so the L^2 integral of a field equals
2 pi times its zero-order Sobolev norm.
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
import scipy.fft as sfft

_THREADS = 1


def set_threads(n: int | None) -> None:
    """Set the number of FFT worker threads (None reads SQGLAB_THREADS)."""
    global _THREADS
    if n is None:
        n = int(os.environ.get("SQGLAB_THREADS", "1") or 1)
    _THREADS = max(1, int(n))


def fft2(a):
    return sfft.fft2(a, workers=_THREADS)


def ifft2(a):
    return sfft.ifft2(a, workers=_THREADS)


def debug_enabled() -> bool:
    return os.environ.get("SQGLAB_DEBUG", "") not in ("", "0")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TorusGrid:
    """Uniform n x n collocation grid with its wavenumber lattice."""

    n: int
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise ValueError(f"grid size must be an even integer >= 8, got {self.n}")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @cached_property
    def k1(self) -> np.ndarray:
        k = np.fft.fftfreq(self.n, 1.0 / self.n)
        return _frozen(np.broadcast_to(k[:, None], (self.n, self.n)).copy())

    @cached_property
    def k2(self) -> np.ndarray:
        k = np.fft.fftfreq(self.n, 1.0 / self.n)
        return _frozen(np.broadcast_to(k[None, :], (self.n, self.n)).copy())

    @cached_property
    def kmod(self) -> np.ndarray:
        return np.hypot(self.k1, self.k2)

    @cached_property
    def kmod_inv(self) -> np.ndarray:
        # 1/|k| with the mean mode mapped to zero
        out = np.zeros_like(self.kmod)
        nz = self.kmod > 0
        out[nz] = 1.0 / self.kmod[nz]
        return out

    @cached_property
    def retained(self) -> np.ndarray:
        """Modes with |k_i| <= n/2 - 1 and k != 0."""
        half = self.n // 2
        m = (np.abs(self.k1) <= half - 1) & (np.abs(self.k2) <= half - 1)
        m[0, 0] = False
        return m

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        cut = self.dealias_fraction * (self.n / 2)
        keep = np.maximum(np.abs(self.k1), np.abs(self.k2)) <= cut
        return keep & self.retained

    @cached_property
    def dealias_radius(self) -> float:
        """Largest Euclidean |k| kept by the dealiasing mask."""
        return float(self.kmod[self.dealias_mask].max())

    @cached_property
    def packed_symbols(self) -> tuple[np.ndarray, np.ndarray]:
        # u1 + i u2 (u1 = i k2/|k| c, u2 = -i k1/|k| c) and d1 + i d2
        vel = self.kmod_inv * (self.k1 + 1j * self.k2)
        grad = 1j * self.k1 - self.k2
        return _frozen(vel), _frozen(grad)

    @cached_property
    def x(self) -> tuple[np.ndarray, np.ndarray]:
        s = 2 * np.pi * np.arange(self.n) / self.n
        return np.meshgrid(s, s, indexing="ij")

    @property
    def cell_area(self) -> float:
        return (2 * np.pi / self.n) ** 2

    def symbol_power(self, beta: float) -> np.ndarray:
        return _symbol_power(self, float(beta))

    def zeros(self) -> "SpectralField":
        return SpectralField(self, np.zeros((self.n, self.n), complex))


@lru_cache(maxsize=64)
def _symbol_power(grid: TorusGrid, beta: float) -> np.ndarray:
    out = np.zeros((grid.n, grid.n))
    nz = grid.kmod > 0
    out[nz] = grid.kmod[nz] ** beta
    out.setflags(write=False)
    return out


class SpectralField:
    """Fourier coefficients of a real mean-zero field.

    The coefficient array is owned by the field and made read-only.
    Arithmetic returns new fields.
    """

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid: TorusGrid, coeffs):
        c = np.asarray(coeffs, dtype=complex)
        if c.shape != (grid.n, grid.n):
            raise ValueError(f"coefficient array has shape {c.shape}, expected {(grid.n, grid.n)}")
        if c.flags.writeable:
            c = c.copy()
            c.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "coeffs", c)
        if debug_enabled():
            self.check()

    def __setattr__(self, name, value):
        raise AttributeError("SpectralField is immutable")

    def check(self, tol: float = 1e-12) -> None:
        c = self.coeffs
        scale = max(1.0, float(np.abs(c).max()))
        if abs(c[0, 0]) > tol * scale:
            raise ValueError("field has nonzero mean")
        if np.abs(c - conj_reflect(c)).max() > tol * scale:
            raise ValueError("field violates the reality condition")
        if np.abs(c[~self.grid.retained]).max(initial=0.0) > tol * scale:
            raise ValueError("field has energy outside the retained lattice")

    def __add__(self, other):
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, a):
        return SpectralField(self.grid, self.coeffs * float(a))

    __rmul__ = __mul__

    def __repr__(self):
        return f"SpectralField(n={self.grid.n}, l2={sobolev_norm(self, 0.0):.6g})"


@dataclass(frozen=True)
class PhysicalField:
    grid: TorusGrid
    values: np.ndarray


@dataclass(frozen=True)
class VelocityField:
    u1: PhysicalField
    u2: PhysicalField


def conj_reflect(c: np.ndarray) -> np.ndarray:
    """Return conj(c(-k)) on the FFT lattice."""
    return np.conj(np.roll(c[::-1, ::-1], 1, axis=(0, 1)))


def to_physical(f: SpectralField) -> PhysicalField:
    n = f.grid.n
    return PhysicalField(f.grid, np.real(ifft2(f.coeffs)) * n * n)


def spectral_coeffs(grid: TorusGrid, values: np.ndarray) -> np.ndarray:
    """Raw forward transform restricted to retained modes (mean removed)."""
    c = fft2(values) / grid.n**2
    c[~grid.retained] = 0.0
    return c


def to_spectral(f: PhysicalField) -> SpectralField:
    c = spectral_coeffs(f.grid, np.asarray(f.values, dtype=float))
    # symmetrize to remove rounding-level violations of reality
    c = 0.5 * (c + conj_reflect(c))
    return SpectralField(f.grid, c)


def from_function(grid: TorusGrid, func) -> SpectralField:
    """Sample func(x1, x2) on the grid and transform."""
    x1, x2 = grid.x
    return to_spectral(PhysicalField(grid, func(x1, x2)))


def fractional_laplacian(f: SpectralField, beta: float) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * f.grid.symbol_power(beta))


def riesz_velocity_coeffs(grid: TorusGrid, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u1 = 1j * grid.k2 * grid.kmod_inv * c
    u2 = -1j * grid.k1 * grid.kmod_inv * c
    return u1, u2


def riesz_velocity(theta: SpectralField) -> VelocityField:
    g, n = theta.grid, theta.grid.n
    u1, u2 = riesz_velocity_coeffs(g, theta.coeffs)
    return VelocityField(
        PhysicalField(g, np.real(ifft2(u1)) * n * n),
        PhysicalField(g, np.real(ifft2(u2)) * n * n),
    )


def advection_coeffs(grid: TorusGrid, c: np.ndarray) -> np.ndarray:
    """Dealiased coefficients of (R^perp theta).grad theta from raw coefficients.

    Two real fields are packed into one complex transform each, so the
    whole product costs two inverse and one forward FFT.
    """
    n2 = grid.n * grid.n
    vel, grad = grid.packed_symbols
    z_u = ifft2(c * vel)
    z_g = ifft2(c * grad)
    prod = z_u.real * z_g.real + z_u.imag * z_g.imag
    out = fft2(prod) * n2
    out *= grid.dealias_mask
    return out


def advection_term(theta: SpectralField) -> SpectralField:
    return SpectralField(theta.grid, advection_coeffs(theta.grid, theta.coeffs))


def sobolev_norm_coeffs(grid: TorusGrid, c: np.ndarray, sigma: float) -> float:
    w = grid.symbol_power(2.0 * sigma)
    return float(np.sqrt(np.sum(w * (c.real**2 + c.imag**2))))


def sobolev_norm(f: SpectralField, sigma: float) -> float:
    return sobolev_norm_coeffs(f.grid, f.coeffs, sigma)


def lebesgue_norm(f, p: float) -> float:
    """Riemann-sum L^p norm of a physical (or spectral) field."""
    if isinstance(f, SpectralField):
        f = to_physical(f)
    v = np.abs(f.values)
    if np.isinf(p):
        return float(v.max())
    if p < 1:
        raise ValueError("p must be >= 1")
    return float((f.grid.cell_area * np.sum(v**p)) ** (1.0 / p))


def project_modes(f: SpectralField, cutoff: float) -> SpectralField:
    """Sharp projection onto |k| <= cutoff."""
    keep = f.grid.kmod <= cutoff
    return SpectralField(f.grid, np.where(keep, f.coeffs, 0.0))


def inner(f: SpectralField, g: SpectralField) -> float:
    """Coefficient inner product sum_k f_hat(k) conj(g_hat(k))."""
    return float(np.real(np.vdot(g.coeffs, f.coeffs)))


def random_field(grid: TorusGrid, rng: np.random.Generator, kmax: float = 4.0,
                 sigma: float = 0.0, norm: float = 1.0, slope: float = 0.0) -> SpectralField:
    """Band-limited random field scaled to a given homogeneous Sobolev norm.

    Coefficients are unit complex Gaussians on 0 < |k| <= kmax (restricted
    to the dealiased band), multiplied by |k|^-slope, then symmetrized.
    """
    shape = (grid.n, grid.n)
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    band = grid.dealias_mask & (grid.kmod <= kmax)
    c = np.where(band, c * grid.symbol_power(-slope), 0.0)
    c = 0.5 * (c + conj_reflect(c))
    s = sobolev_norm_coeffs(grid, c, sigma)
    if s > 0:
        c *= norm / s
    return SpectralField(grid, c)


# snapshot files

MAGIC = b"SQGF"
FORMAT_VERSION = 1


def save_snapshot(path, f: SpectralField) -> None:
    """Write a field atomically in the little-endian SQGF format."""
    path = Path(path)
    n = f.grid.n
    buf = np.empty((n, n, 2), dtype="<f8")
    buf[..., 0] = f.coeffs.real
    buf[..., 1] = f.coeffs.imag
    tmp = path.with_name(path.name + ".partial")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, n))
        fh.write(buf.tobytes())
    os.replace(tmp, path)


def load_snapshot(path, dealias_fraction: float = 2.0 / 3.0, tol: float = 1e-12) -> SpectralField:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic {data[:4]!r}")
    version, n = struct.unpack("<II", data[4:12])
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    body = np.frombuffer(data[12:], dtype="<f8")
    if body.size != 2 * n * n:
        raise ValueError(f"{path}: expected {n * n} coefficients, found {body.size // 2}")
    body = body.reshape(n, n, 2)
    c = body[..., 0] + 1j * body[..., 1]
    field = SpectralField(TorusGrid(n, dealias_fraction), c)
    field.check(tol)
    return field
