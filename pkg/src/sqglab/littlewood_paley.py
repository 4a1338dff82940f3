"""Dyadic Littlewood-Paley multipliers on the discrete torus lattice.

Blocks are built from a radial profile psi0 equal to 1 on [0, 1/4] and 0
on [1/2, inf):

    phi_{-1}(k) = psi0(|k|)
    phi_j(k)    = psi0(|k| 2^{-j-1}) - psi0(|k| 2^{-j}),   j >= 0

so phi_j lives on the annulus 2^{j-2} <= |k| <= 2^j and the blocks
telescope to a partition of unity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .spectral import (
    PhysicalField, SpectralField, TorusGrid, fractional_laplacian, ifft2,
    lebesgue_norm, random_field, sobolev_norm, to_physical,
)


def _h(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def standard_psi0(r):
    """Smooth step: 1 for r <= 1/4, 0 for r >= 1/2, C-infinity in between."""
    r = np.asarray(r, dtype=float)
    a = _h((0.5 - r) / 0.25)
    b = _h((r - 0.25) / 0.25)
    return a / (a + b)


@dataclass(frozen=True)
class BumpProfile:
    psi0: Callable = standard_psi0
    name: str = "standard"

    def validate(self, samples: int = 4001) -> None:
        r = np.linspace(0.0, 1.0, samples)
        v = np.asarray(self.psi0(r), dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("bump profile produced non-finite values")
        if np.any(v < 0) or np.any(v > 1):
            raise ValueError("bump profile must take values in [0, 1]")
        if float(self.psi0(np.array([0.25]))[0]) != 1.0 or np.any(v[r <= 0.25] != 1.0):
            raise ValueError("bump profile must equal 1 on [0, 1/4]")
        if float(self.psi0(np.array([0.5]))[0]) != 0.0 or np.any(v[r >= 0.5] != 0.0):
            raise ValueError("bump profile must vanish on [1/2, inf)")
        if np.any(np.diff(v) > 1e-15):
            raise ValueError("bump profile must be non-increasing")


@dataclass(frozen=True)
class LPBlockSet:
    grid: TorusGrid
    j_max: int
    tables: dict = field(repr=False)
    profile: BumpProfile = field(default_factory=BumpProfile, repr=False)

    @property
    def indices(self) -> range:
        return range(-1, self.j_max + 1)

    def block_symbol(self, j: int) -> np.ndarray:
        if not -1 <= j <= self.j_max:
            raise IndexError(f"block index {j} outside [-1, {self.j_max}]")
        return self.tables[j]

    @cached_property
    def _cumulative(self) -> dict:
        out, acc = {}, np.zeros((self.grid.n, self.grid.n))
        for j in self.indices:
            acc = acc + self.tables[j]
            a = acc.copy()
            a.setflags(write=False)
            out[j] = a
        return out

    def lowpass_symbol(self, m: int) -> np.ndarray:
        if m < -1:
            raise ValueError(f"low-pass index must be >= -1, got {m}")
        return self._cumulative[min(m, self.j_max)]

    def highpass_symbol(self, m: int) -> np.ndarray:
        return 1.0 - self.lowpass_symbol(m)

    def tilde_symbol(self, j: int) -> np.ndarray:
        self.block_symbol(j)
        lo, hi = max(-1, j - 2), min(self.j_max, j + 2)
        return sum(self.tables[l] for l in range(lo, hi + 1))


def lattice_radius(grid: TorusGrid) -> float:
    return float(np.sqrt(2.0) * (grid.n // 2 - 1))


def build_blocks(grid: TorusGrid, profile: BumpProfile | None = None) -> LPBlockSet:
    profile = profile or BumpProfile()
    profile.validate()
    kmax = lattice_radius(grid)
    # largest j whose annulus (2^{j-2}, 2^j) meets the lattice
    j_max = 0
    while 2.0 ** (j_max + 1 - 2) < kmax:
        j_max += 1
    r = grid.kmod
    tables = {-1: np.asarray(profile.psi0(r), dtype=float)}
    for j in range(0, j_max + 1):
        tables[j] = (np.asarray(profile.psi0(r * 2.0 ** (-j - 1)))
                     - np.asarray(profile.psi0(r * 2.0 ** (-j))))
    for t in tables.values():
        t.setflags(write=False)
    blocks = LPBlockSet(grid, j_max, tables, profile)
    total = blocks.lowpass_symbol(j_max)
    lattice = grid.retained.copy()
    lattice[0, 0] = True
    err = np.abs(total[lattice] - 1.0).max()
    if err > 1e-12:
        raise ValueError(f"partition of unity fails by {err:.3e}")
    return blocks


def lp_block(blocks: LPBlockSet, f: SpectralField, j: int) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * blocks.block_symbol(j))


def lp_lowpass(blocks: LPBlockSet, f: SpectralField, m: int) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * blocks.lowpass_symbol(m))


def lp_highpass(blocks: LPBlockSet, f: SpectralField, m: int) -> SpectralField:
    return SpectralField(f.grid, f.coeffs - f.coeffs * blocks.lowpass_symbol(m))


def lp_tilde_block(blocks: LPBlockSet, f: SpectralField, j: int) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * blocks.tilde_symbol(j))


def square_function_values(blocks: LPBlockSet, c: np.ndarray, tilde: bool = False) -> np.ndarray:
    """Square function of raw coefficients c (mean allowed) on the block grid."""
    n = blocks.grid.n
    acc = np.zeros((n, n))
    for j in blocks.indices:
        sym = blocks.tilde_symbol(j) if tilde else blocks.tables[j]
        if not np.any(sym * (c != 0)):
            continue
        v = np.real(ifft2(c * sym)) * n * n
        acc += v * v
    return np.sqrt(acc)


def square_function(blocks: LPBlockSet, f: SpectralField, tilde: bool = False) -> PhysicalField:
    return PhysicalField(f.grid, square_function_values(blocks, f.coeffs, tilde))


@dataclass
class BernsteinReport:
    j: int
    beta: float
    p: float
    q: float
    lower: float
    upper: float
    lowpass: float
    ceiling: float

    @property
    def passed(self) -> bool:
        return max(self.lower, self.upper, self.lowpass) <= self.ceiling

    def as_dict(self) -> dict:
        d = dict(j=self.j, beta=self.beta, p=self.p, q=self.q, lower=self.lower,
                 upper=self.upper, lowpass=self.lowpass, ceiling=self.ceiling)
        d["passed"] = self.passed
        return d


def bernstein_check(blocks: LPBlockSet, ensemble_size: int, j: int, beta: float,
                    p: float, q: float, seed: int = 0, ceiling: float = 1e3,
                    fields: Sequence[SpectralField] | None = None) -> BernsteinReport:
    """Empirical constants in the Bernstein inequalities for block j.

    lower   : max 2^{j beta} |D_j g|_q / |L^beta D_j g|_q
    upper   : max |L^beta D_j g|_q / (2^{j(beta + 2(1/p - 1/q))} |D_j g|_p)
    lowpass : same as upper with S_j in place of D_j
    """
    if not 1 <= p <= q:
        raise ValueError("need 1 <= p <= q")
    if fields is None:
        if ensemble_size < 1:
            raise ValueError("ensemble must be non-empty")
        rng = np.random.Generator(np.random.Philox(seed))
        fields = [random_field(blocks.grid, rng, kmax=np.inf) for _ in range(ensemble_size)]
    if len(fields) == 0:
        raise ValueError("ensemble must be non-empty")
    blocks.block_symbol(j)
    inv_p = 0.0 if np.isinf(p) else 1.0 / p
    inv_q = 0.0 if np.isinf(q) else 1.0 / q
    scale = 2.0 ** (j * (beta + 2 * (inv_p - inv_q)))
    lower = upper = low = 0.0
    for g in fields:
        dj = lp_block(blocks, g, j)
        if sobolev_norm(dj, 0.0) == 0.0:
            continue
        ldj = fractional_laplacian(dj, beta)
        nq = lebesgue_norm(to_physical(dj), q)
        lq = lebesgue_norm(to_physical(ldj), q)
        lower = max(lower, 2.0 ** (j * beta) * nq / lq)
        upper = max(upper, lq / (scale * lebesgue_norm(to_physical(dj), p)))
        sj = lp_lowpass(blocks, g, j)
        low = max(low, lebesgue_norm(to_physical(fractional_laplacian(sj, beta)), q)
                  / (scale * lebesgue_norm(to_physical(sj), p)))
    return BernsteinReport(j, beta, p, q, lower, upper, low, ceiling)


def besov_ratio(blocks: LPBlockSet, f: SpectralField, beta: float) -> float:
    """sum_j 2^{2 j beta} |D_j f|^2 divided by |f|^2 in the beta Sobolev norm."""
    total = 0.0
    for j in blocks.indices:
        total += 2.0 ** (2 * j * beta) * sobolev_norm(lp_block(blocks, f, j), 0.0) ** 2
    return total / sobolev_norm(f, beta) ** 2
