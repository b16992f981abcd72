"""Cost-type distributions: CDF/density closed forms, virtual cost, ironing.

A distribution is a weighted mixture of closed-form continuous parts
(uniform, exponential, truncated normal, piecewise-constant density) plus a
finite list of atoms. Atoms support the smoothed-analysis mixtures and the
point-mass counterexamples; the virtual-cost machinery refuses them.

The virtual cost of type ``c`` is ``c + G(c)/g(c)``. Its ironed version is
obtained by integrating the virtual cost over cost space, taking the lower
convex hull of the integral on a kink-refined grid, and differentiating:
intervals where the hull leaves the integral become flats, everywhere else
the ironed function follows the raw virtual cost exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np
from scipy.special import erf, erfinv

__all__ = [
    "DistributionError",
    "AtomPresentError",
    "UndefinedAtAtomError",
    "ZeroDensityError",
    "ZeroCdfError",
    "TypeDistribution",
    "IronedVirtualCost",
    "uniform",
    "exponential",
    "truncated_normal",
    "piecewise",
    "mixture",
    "point_mass",
    "from_spec",
    "iron",
    "iron_inverse",
    "ironed",
    "rhr",
]

MASS_TOL = 1e-12
CDF_FLOOR = 1e-12
TAIL_EPS = 1e-9


class DistributionError(ValueError):
    """A distribution input or operation precondition is broken."""


class AtomPresentError(DistributionError):
    """Operation requires an atom-free distribution."""


class UndefinedAtAtomError(DistributionError):
    """Virtual cost evaluated exactly at an atom location."""


class ZeroDensityError(DistributionError):
    """Density vanishes where a positive value is required."""


class ZeroCdfError(DistributionError):
    """CDF vanishes where a positive value is required."""


def _phi_std(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + erf(z / math.sqrt(2.0)))


def _phi_std_inv(p: float) -> float:
    return math.sqrt(2.0) * float(erfinv(2.0 * p - 1.0))


@dataclass(frozen=True)
class UniformPart:
    low: float
    high: float

    def support(self) -> tuple[float, float]:
        return self.low, self.high

    def cdf(self, x: np.ndarray) -> np.ndarray:
        return np.clip((x - self.low) / (self.high - self.low), 0.0, 1.0)

    def pdf(self, x: np.ndarray, side: str) -> np.ndarray:
        d = 1.0 / (self.high - self.low)
        if side == "right":
            inside = (x >= self.low) & (x < self.high)
        else:
            inside = (x > self.low) & (x <= self.high)
        return np.where(inside, d, 0.0)

    def quantile(self, q: float) -> float:
        return self.low + q * (self.high - self.low)

    def kinks(self) -> tuple[float, ...]:
        return (self.low, self.high)


@dataclass(frozen=True)
class ExponentialPart:
    rate: float

    def support(self) -> tuple[float, float]:
        return 0.0, math.inf

    def cdf(self, x: np.ndarray) -> np.ndarray:
        return np.where(x <= 0.0, 0.0, -np.expm1(-self.rate * np.maximum(x, 0.0)))

    def pdf(self, x: np.ndarray, side: str) -> np.ndarray:
        inside = x >= 0.0 if side == "right" else x > 0.0
        return np.where(inside, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def quantile(self, q: float) -> float:
        if q >= 1.0:
            return math.inf
        return -math.log1p(-q) / self.rate

    def kinks(self) -> tuple[float, ...]:
        return (0.0,)


@dataclass(frozen=True)
class TruncatedNormalPart:
    """Normal(mu, sigma) conditioned on being at least ``low``."""

    mu: float
    sigma: float
    low: float

    def _z(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mu) / self.sigma

    def _tail(self) -> float:
        return float(1.0 - _phi_std(np.asarray((self.low - self.mu) / self.sigma)))

    def support(self) -> tuple[float, float]:
        return self.low, math.inf

    def cdf(self, x: np.ndarray) -> np.ndarray:
        lo_p = _phi_std(np.asarray((self.low - self.mu) / self.sigma))
        val = (_phi_std(self._z(np.maximum(x, self.low))) - lo_p) / self._tail()
        return np.where(x <= self.low, 0.0, np.clip(val, 0.0, 1.0))

    def pdf(self, x: np.ndarray, side: str) -> np.ndarray:
        inside = x >= self.low if side == "right" else x > self.low
        z = self._z(x)
        dens = np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi)) / self._tail()
        return np.where(inside, dens, 0.0)

    def quantile(self, q: float) -> float:
        if q >= 1.0:
            return math.inf
        lo_p = float(_phi_std(np.asarray((self.low - self.mu) / self.sigma)))
        return self.mu + self.sigma * _phi_std_inv(lo_p + q * self._tail())

    def kinks(self) -> tuple[float, ...]:
        return (self.low,)


@dataclass(frozen=True)
class PiecewisePart:
    """Piecewise-constant density: ``densities[k]`` on ``(bounds[k], bounds[k+1]]``."""

    bounds: tuple[float, ...]
    densities: tuple[float, ...]

    def __post_init__(self) -> None:
        b = np.asarray(self.bounds, dtype=float)
        d = np.asarray(self.densities, dtype=float)
        if len(b) != len(d) + 1 or len(d) == 0:
            raise DistributionError("piecewise needs len(bounds) == len(densities) + 1")
        if (np.diff(b) <= 0).any():
            raise DistributionError("piecewise bounds must be strictly increasing")
        if (d < 0).any():
            raise DistributionError("piecewise densities must be non-negative")
        total = float(np.dot(d, np.diff(b)))
        if abs(total - 1.0) > 1e-9:
            raise DistributionError(f"piecewise density integrates to {total:g}, expected 1")

    def _cum(self) -> np.ndarray:
        b = np.asarray(self.bounds)
        d = np.asarray(self.densities)
        return np.concatenate([[0.0], np.cumsum(d * np.diff(b))])

    def support(self) -> tuple[float, float]:
        return self.bounds[0], self.bounds[-1]

    def cdf(self, x: np.ndarray) -> np.ndarray:
        b = np.asarray(self.bounds)
        cum = self._cum()
        xc = np.clip(x, b[0], b[-1])
        idx = np.clip(np.searchsorted(b, xc, side="right") - 1, 0, len(self.densities) - 1)
        val = cum[idx] + np.asarray(self.densities)[idx] * (xc - b[idx])
        return np.clip(val, 0.0, 1.0)

    def pdf(self, x: np.ndarray, side: str) -> np.ndarray:
        b = np.asarray(self.bounds)
        d = np.asarray(self.densities)
        idx = np.searchsorted(b, x, side="right" if side == "right" else "left") - 1
        ok = (idx >= 0) & (idx < len(d))
        return np.where(ok, d[np.clip(idx, 0, len(d) - 1)], 0.0)

    def quantile(self, q: float) -> float:
        cum = self._cum()
        k = int(np.searchsorted(cum, q, side="left"))
        k = min(max(k - 1, 0), len(self.densities) - 1)
        while k < len(self.densities) - 1 and cum[k + 1] < q:
            k += 1
        d = self.densities[k]
        if d <= 0:
            return self.bounds[k + 1]
        return self.bounds[k] + (q - cum[k]) / d

    def kinks(self) -> tuple[float, ...]:
        return tuple(self.bounds)


_Part = UniformPart | ExponentialPart | TruncatedNormalPart | PiecewisePart


@dataclass(frozen=True)
class TypeDistribution:
    """Mixture of weighted continuous parts plus atoms, total mass one."""

    parts: tuple[tuple[float, _Part], ...]
    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        atoms = tuple(sorted((float(a), float(m)) for a, m in self.atoms))
        object.__setattr__(self, "atoms", atoms)
        total = sum(w for w, _ in self.parts) + sum(m for _, m in atoms)
        if abs(total - 1.0) > MASS_TOL:
            raise DistributionError(f"total mass is {total!r}, expected 1 within {MASS_TOL:g}")
        if any(w <= 0 for w, _ in self.parts) or any(m <= 0 for _, m in atoms):
            raise DistributionError("component weights must be positive")
        if self.c_low < 0:
            raise DistributionError("support must be non-negative")
        if not self.parts and not atoms:
            raise DistributionError("distribution has no components")

    @property
    def c_low(self) -> float:
        lows = [p.support()[0] for _, p in self.parts] + [a for a, _ in self.atoms]
        return min(lows)

    @property
    def c_high(self) -> float:
        highs = [p.support()[1] for _, p in self.parts] + [a for a, _ in self.atoms]
        return max(highs)

    @property
    def has_atoms(self) -> bool:
        return bool(self.atoms)

    def effective_high(self, tail: float = TAIL_EPS) -> float:
        """Finite upper bound for grids: the ``1 - tail`` quantile if unbounded."""
        hi = self.c_high
        return hi if math.isfinite(hi) else self.quantile(1.0 - tail)

    def kinks(self) -> tuple[float, ...]:
        pts: set[float] = set()
        for _, p in self.parts:
            pts.update(p.kinks())
        pts.update(a for a, _ in self.atoms)
        return tuple(sorted(pts))

    def cdf(self, x) -> np.ndarray | float:
        """Right-continuous CDF, clamped outside the support."""
        xa = np.asarray(x, dtype=float)
        out = np.zeros_like(xa)
        for w, p in self.parts:
            out = out + w * p.cdf(xa)
        for a, m in self.atoms:
            out = out + m * (xa >= a)
        out = np.clip(out, 0.0, 1.0)
        return float(out) if np.isscalar(x) or xa.ndim == 0 else out

    def cdf_left(self, x) -> np.ndarray | float:
        """Left limit of the CDF (atoms at exactly ``x`` excluded)."""
        xa = np.asarray(x, dtype=float)
        out = np.zeros_like(xa)
        for w, p in self.parts:
            out = out + w * p.cdf(xa)
        for a, m in self.atoms:
            out = out + m * (xa > a)
        out = np.clip(out, 0.0, 1.0)
        return float(out) if np.isscalar(x) or xa.ndim == 0 else out

    def cdf_continuous(self, x) -> np.ndarray | float:
        """CDF of the continuous part only (atom mass excluded)."""
        xa = np.asarray(x, dtype=float)
        out = np.zeros_like(xa)
        for w, p in self.parts:
            out = out + w * p.cdf(xa)
        return float(out) if np.isscalar(x) or xa.ndim == 0 else out

    def pdf(self, x, side: str = "right") -> np.ndarray | float:
        xa = np.asarray(x, dtype=float)
        out = np.zeros_like(xa)
        for w, p in self.parts:
            out = out + w * p.pdf(xa, side)
        return float(out) if np.isscalar(x) or xa.ndim == 0 else out

    def atom_mass_at(self, x: float, tol: float = 1e-12) -> float:
        return sum(m for a, m in self.atoms if abs(a - x) <= tol)

    def quantile(self, q: float) -> float:
        """Generalized inverse ``inf{c : G(c) >= q}``."""
        if not 0.0 <= q <= 1.0:
            raise ValueError("quantile level must be in [0, 1]")
        if q == 0.0:
            return self.c_low
        if len(self.parts) == 1 and not self.atoms:
            return self.parts[0][1].quantile(q)
        lo = self.c_low
        hi = self.c_high
        if math.isinf(hi):
            hi = max((p.quantile(min(q + (1 - q) / 2, 1 - 1e-15)) if math.isinf(p.support()[1]) else p.support()[1])
                     for _, p in self.parts)
            hi = max(hi, lo + 1.0)
            while float(self.cdf(hi)) < q and math.isfinite(hi):
                hi *= 2.0
        if float(self.cdf(hi)) < q:
            return math.inf
        if float(self.cdf(lo)) >= q:
            return lo
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(self.cdf(mid)) >= q:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-15 * max(1.0, abs(hi)):
                break
        for a, _ in self.atoms:
            if abs(hi - a) <= 1e-9 * max(1.0, abs(a)) and float(self.cdf_left(a)) < q <= float(self.cdf(a)):
                return a
        return hi

    def virtual_cost(self, x, side: str = "auto") -> np.ndarray | float:
        """Virtual cost ``c + G(c)/g(c)``.

        Undefined exactly at an atom; raises when the density vanishes.
        Atoms strictly below ``x`` are fine, their mass is folded into G.
        """
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        for a, _ in self.atoms:
            if np.any(np.abs(xa - a) <= 1e-12 * max(1.0, abs(a))):
                raise UndefinedAtAtomError(f"virtual cost undefined at atom {a:g}")
        if side == "auto":
            hi = self.c_high
            g = np.asarray(self.pdf(xa, side="right"), dtype=float)
            if math.isfinite(hi):
                at_top = xa >= hi
                if at_top.any():
                    g_left = np.asarray(self.pdf(xa, side="left"), dtype=float)
                    g = np.where(at_top, g_left, g)
        else:
            g = np.asarray(self.pdf(xa, side=side), dtype=float)
        if (g <= 0).any():
            bad = float(xa[np.argmax(g <= 0)])
            raise ZeroDensityError(f"density is zero at c={bad:g}")
        out = xa + np.asarray(self.cdf(xa), dtype=float) / g
        return float(out[0]) if np.isscalar(x) or np.asarray(x).ndim == 0 else out

    def reverse_hazard_rate(self, x) -> np.ndarray | float:
        """Reverse hazard rate ``g(c) / G(c)``; errors where G vanishes."""
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        G = np.asarray(self.cdf(xa), dtype=float)
        if (G <= CDF_FLOOR).any():
            bad = float(xa[np.argmax(G <= CDF_FLOOR)])
            raise ZeroCdfError(f"CDF below {CDF_FLOOR:g} at c={bad:g}")
        out = np.asarray(self.pdf(xa, side="right"), dtype=float) / G
        return float(out[0]) if np.isscalar(x) or np.asarray(x).ndim == 0 else out

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Inverse-CDF sampling, used by Monte-Carlo cross-checks."""
        comp_w = [w for w, _ in self.parts] + [m for _, m in self.atoms]
        cum = np.cumsum(comp_w)
        pick = np.searchsorted(cum, rng.random(size) * cum[-1], side="right")
        u = rng.random(size)
        out = np.empty(size)
        for k, (_, part) in enumerate(self.parts):
            mask = pick == k
            if mask.any():
                out[mask] = [part.quantile(v) for v in u[mask]]
        for j, (a, _) in enumerate(self.atoms):
            mask = pick == len(self.parts) + j
            out[mask] = a
        return out


def rhr(dist: TypeDistribution, c) -> np.ndarray | float:
    """Reverse hazard rate of ``dist`` at ``c``."""
    return dist.reverse_hazard_rate(c)


# ---------------------------------------------------------------------------
# constructors and the file-format parser


def uniform(low: float, high: float) -> TypeDistribution:
    if not low < high:
        raise DistributionError("uniform needs low < high")
    return TypeDistribution(parts=((1.0, UniformPart(float(low), float(high))),))


def exponential(rate: float) -> TypeDistribution:
    if rate <= 0:
        raise DistributionError("exponential rate must be positive")
    return TypeDistribution(parts=((1.0, ExponentialPart(float(rate))),))


def truncated_normal(mu: float, sigma: float, low: float = 0.0) -> TypeDistribution:
    if sigma <= 0:
        raise DistributionError("truncated_normal sigma must be positive")
    return TypeDistribution(parts=((1.0, TruncatedNormalPart(float(mu), float(sigma), float(low))),))


def piecewise(segments: Iterable[tuple[float, float, float]]) -> TypeDistribution:
    """Piecewise-constant density from ``(from, to, density)`` triples."""
    segs = sorted((float(a), float(b), float(d)) for a, b, d in segments)
    bounds = [segs[0][0]]
    dens = []
    for a, b, d in segs:
        if abs(a - bounds[-1]) > 1e-12:
            raise DistributionError(f"piecewise segments must be contiguous, gap at {a:g}")
        bounds.append(b)
        dens.append(d)
    return TypeDistribution(parts=((1.0, PiecewisePart(tuple(bounds), tuple(dens))),))


def point_mass(at: float) -> TypeDistribution:
    return TypeDistribution(parts=(), atoms=((float(at), 1.0),))


def mixture(components: Iterable[tuple[float, TypeDistribution]]) -> TypeDistribution:
    """Weighted mixture; nested mixtures flatten, equal-location atoms merge."""
    parts: list[tuple[float, _Part]] = []
    atom_mass: dict[float, float] = {}
    for w, sub in components:
        if w <= 0:
            raise DistributionError("mixture weights must be positive")
        for ws, p in sub.parts:
            parts.append((w * ws, p))
        for a, m in sub.atoms:
            atom_mass[a] = atom_mass.get(a, 0.0) + w * m
    return TypeDistribution(parts=tuple(parts), atoms=tuple(sorted(atom_mass.items())))


def from_spec(spec: dict) -> TypeDistribution:
    """Build a distribution from its tagged-record file representation."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise DistributionError("distribution spec must be an object with a 'kind' key")
    kind = spec["kind"]
    try:
        if kind == "uniform":
            return uniform(spec["low"], spec["high"])
        if kind == "exponential":
            return exponential(spec["rate"])
        if kind == "truncated_normal":
            return truncated_normal(spec["mu"], spec["sigma"], spec.get("low", 0.0))
        if kind == "piecewise":
            return piecewise((s["from"], s["to"], s["density"]) for s in spec["segments"])
        if kind == "mixture":
            return mixture((p["weight"], from_spec(p["dist"])) for p in spec["parts"])
        if kind == "atom":
            return point_mass(spec["at"])
    except KeyError as exc:
        raise DistributionError(f"distribution kind '{kind}' missing key {exc}") from None
    raise DistributionError(f"unknown distribution kind '{kind}'")


def to_spec(dist: TypeDistribution) -> dict:
    """File representation of ``dist`` (inverse of :func:`from_spec`)."""
    comps: list[dict] = []
    for w, p in dist.parts:
        if isinstance(p, UniformPart):
            d = {"kind": "uniform", "low": p.low, "high": p.high}
        elif isinstance(p, ExponentialPart):
            d = {"kind": "exponential", "rate": p.rate}
        elif isinstance(p, TruncatedNormalPart):
            d = {"kind": "truncated_normal", "mu": p.mu, "sigma": p.sigma, "low": p.low}
        else:
            d = {
                "kind": "piecewise",
                "segments": [
                    {"from": a, "to": b, "density": dd}
                    for a, b, dd in zip(p.bounds[:-1], p.bounds[1:], p.densities)
                ],
            }
        comps.append({"weight": w, "dist": d})
    for a, m in dist.atoms:
        comps.append({"weight": m, "dist": {"kind": "atom", "at": a}})
    if len(comps) == 1 and comps[0]["weight"] == 1.0:
        return comps[0]["dist"]
    return {"kind": "mixture", "parts": comps}


# ---------------------------------------------------------------------------
# ironing


@dataclass(frozen=True)
class IronedVirtualCost:
    """Ironed virtual cost: follows the raw virtual cost outside flats.

    Attributes:
        grid: ascending evaluation grid over the (effective) support.
        values: ironed virtual cost at the grid points.
        flats: ``(lo, hi, level)`` intervals where the convex hull of the
            integrated virtual cost departs from the integral itself.
    """

    grid: np.ndarray
    values: np.ndarray
    flats: tuple[tuple[float, float, float], ...]
    dist: TypeDistribution

    @property
    def c_low(self) -> float:
        return float(self.grid[0])

    @property
    def c_high(self) -> float:
        return float(self.grid[-1])

    @property
    def segments(self) -> tuple[tuple[float, float, str, float], ...]:
        """Piecewise description: ``(lo, hi, kind, level)`` with kind
        ``"flat"`` (constant at level) or ``"follow"`` (raw virtual cost;
        level is the value at the segment's upper end)."""
        out: list[tuple[float, float, str, float]] = []
        cursor = self.c_low
        for lo, hi, lev in self.flats:
            if lo > cursor:
                out.append((cursor, lo, "follow", float(self.value(lo))))
            out.append((lo, hi, "flat", lev))
            cursor = hi
        if cursor < self.c_high:
            out.append((cursor, self.c_high, "follow", float(self.value(self.c_high))))
        return tuple(out)

    def value(self, c) -> np.ndarray | float:
        """Ironed virtual cost, clamped to the grid's cost range."""
        scalar = np.isscalar(c) or np.asarray(c).ndim == 0
        xa = np.clip(np.atleast_1d(np.asarray(c, dtype=float)), self.c_low, self.c_high)
        out = np.asarray(self.dist.virtual_cost(xa, side="auto"), dtype=float)
        out = np.atleast_1d(out)
        for lo, hi, lev in self.flats:
            mask = (xa > lo) & (xa < hi)
            out[mask] = lev
        return float(out[0]) if scalar else out

    def inverse(self, q: float) -> float:
        """Largest cost whose ironed virtual cost does not exceed ``q``."""
        lo, hi = self.c_low, self.c_high
        if q < float(self.value(lo)):
            return lo
        if q >= float(self.value(hi)):
            return hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(self.value(mid)) <= q:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * max(1.0, abs(hi)):
                break
        # a bracket this tight that still contains a density kink means the
        # ironed virtual cost jumps across q there; the supremum is the kink
        for k in self.dist.kinks():
            if lo <= k <= hi:
                return float(k)
        return lo


def _lower_hull(x: np.ndarray, y: np.ndarray) -> list[int]:
    """Indices of the lower convex hull vertices via a monotone chain."""
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def iron(dist: TypeDistribution, grid_size: int = 4096) -> IronedVirtualCost:
    """Iron the virtual cost over cost space.

    Integrates the virtual cost on a uniform grid refined with the density
    kinks, takes the lower convex hull of the integral, and keeps the raw
    virtual cost wherever the hull touches it. When the virtual cost is
    already non-decreasing the result follows it pointwise.
    """
    if dist.has_atoms:
        raise AtomPresentError("ironing requires an atom-free distribution")
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    lo = dist.c_low
    hi = dist.effective_high()
    inner = [k for k in dist.kinks() if lo < k < hi]
    grid = np.unique(np.concatenate([np.linspace(lo, hi, grid_size), np.asarray(inner)]))

    phi_right = np.asarray(dist.virtual_cost(grid[:-1], side="right"), dtype=float)
    phi_top = float(dist.virtual_cost(grid[-1], side="left"))
    phi_at = np.concatenate([phi_right, [phi_top]])
    phi_left = np.asarray(dist.virtual_cost(grid[1:], side="left"), dtype=float)

    mid = 0.5 * (grid[:-1] + grid[1:])
    phi_mid = np.asarray(dist.virtual_cost(mid, side="right"), dtype=float)
    h = np.diff(grid)
    panel = h / 6.0 * (phi_right + 4.0 * phi_mid + phi_left)
    integral = np.concatenate([[0.0], np.cumsum(panel)])

    scale = max(1.0, float(np.max(np.abs(phi_at))))
    tol = 1e-10 * scale
    inside_ok = bool(np.all(phi_left >= phi_right - tol))
    across_ok = bool(np.all(phi_at[1:-1] >= phi_left[:-1] - tol))
    if inside_ok and across_ok:
        return IronedVirtualCost(grid=grid, values=phi_at.copy(), flats=(), dist=dist)

    hull = _lower_hull(grid, integral)
    flats: list[tuple[float, float, float]] = []
    for a, b in zip(hull[:-1], hull[1:]):
        if b > a + 1:
            level = (integral[b] - integral[a]) / (grid[b] - grid[a])
            flats.append((float(grid[a]), float(grid[b]), float(level)))
    values = phi_at.copy()
    for flo, fhi, lev in flats:
        mask = (grid > flo) & (grid < fhi)
        values[mask] = lev
    values = np.maximum.accumulate(values)
    return IronedVirtualCost(grid=grid, values=values, flats=tuple(flats), dist=dist)


def iron_inverse(iv: IronedVirtualCost, q: float) -> float:
    """Generalized inverse of the ironed virtual cost."""
    return iv.inverse(q)


@lru_cache(maxsize=64)
def ironed(dist: TypeDistribution, grid_size: int = 4096) -> IronedVirtualCost:
    """Cached :func:`iron`; distributions are immutable so this is safe."""
    return iron(dist, grid_size)
