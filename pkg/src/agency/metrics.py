"""Revenue, welfare, and virtual-welfare functionals plus the linear search.

Closed forms evaluate breakpoint sums using only CDF values; each has a
quadrature companion that integrates pointwise best responses instead, so
the two routes share no intermediate results. Welfare itself is defined by
quadrature (its integrand is the welfare envelope), split at breakpoints,
density kinks, and ironing flats so every panel is smooth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .allocation import AllocationRule, envelope_rule, virtual_rule
from .instance import Instance, best_response, linear_payments
from .typedist import AtomPresentError, IronedVirtualCost, TypeDistribution, ironed

SIMPSON_PANELS = 256
ALPHA_GRID = 2001


def simpson(f, a: float, b: float, panels: int = SIMPSON_PANELS) -> float:
    """Composite Simpson rule on [a, b] with ``panels`` panels."""
    if b <= a:
        return 0.0
    x = np.linspace(a, b, 2 * panels + 1)
    y = np.asarray(f(x), dtype=float)
    h = (b - a) / panels
    return float(h / 6.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-2:2].sum()))


def _split_points(a: float, b: float, extra) -> list[tuple[float, float]]:
    pts = sorted({a, b, *(p for p in extra if a < p < b)})
    return [(pts[i], pts[i + 1]) for i in range(len(pts) - 1) if pts[i + 1] > pts[i]]


def integrate_against(
    dist: TypeDistribution,
    f,
    a: float,
    b: float,
    extra_breaks=(),
    panels: int = SIMPSON_PANELS,
    include_atoms: bool = True,
    endpoint_inset: float = 1e-12,
) -> float:
    """Integrate ``f`` against the distribution over [a, b].

    The continuous part is integrated segment by segment (segments split at
    density kinks and any extra breakpoints); atoms in [a, b] contribute
    ``mass * f(location)``. Integrand and density are sampled a hair inside
    each segment (``endpoint_inset`` relative) so that nodes landing exactly
    on a kink take the segment-interior value.
    """
    total = 0.0
    for lo, hi in _split_points(a, b, list(dist.kinks()) + list(extra_breaks)):
        delta = endpoint_inset * (hi - lo)

        def y(x, lo=lo, hi=hi, delta=delta):
            xin = np.clip(np.asarray(x), lo + delta, hi - delta)
            return np.asarray(f(xin)) * np.asarray(dist.pdf(xin, side="right"))

        total += simpson(y, lo, hi, panels)
    if include_atoms:
        for loc, mass in dist.atoms:
            if a <= loc <= b:
                total += mass * float(np.asarray(f(np.asarray([loc])), dtype=float)[0])
    return total


# ---------------------------------------------------------------------------
# welfare


def welfare_rule(instance: Instance, dist: TypeDistribution) -> AllocationRule:
    """Welfare-maximizing rule over the distribution's (effective) support."""
    lo, hi = dist.c_low, dist.effective_high()
    if hi <= lo:
        hi = lo + 1.0  # pure point mass: any window containing it works
    return envelope_rule(instance, 1.0, (lo, hi))


def welfare(
    instance: Instance,
    dist: TypeDistribution,
    interval: tuple[float, float] | None = None,
) -> float:
    """Expected first-best welfare from types in ``interval`` (default all)."""
    rule = welfare_rule(instance, dist)
    lo, hi = interval if interval is not None else rule.support
    lo = max(lo, rule.support[0])
    hi = min(hi, rule.support[1])
    if hi < lo:
        return 0.0
    R = instance.expected_reward_array()
    g = instance.gamma_array()

    def f(c):
        a = rule.action_at(np.asarray(c))
        return R[a] - g[a] * np.asarray(c)

    return integrate_against(dist, f, lo, hi, extra_breaks=rule.breakpoints)


# ---------------------------------------------------------------------------
# linear-contract revenue


def linear_revenue(instance: Instance, dist: TypeDistribution, alpha: float) -> float:
    """Expected revenue of the linear contract with share ``alpha``.

    Closed form: the share-``alpha`` best-response rule's interval masses
    times ``(1 - alpha) * R``; atoms are resolved by the tie-broken best
    response so knife-edge incentives behave like the model says.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    lo, hi = dist.c_low, dist.effective_high()
    if hi <= lo:
        hi = lo + 1.0  # pure point mass: rule support is immaterial
    rule = envelope_rule(instance, alpha, (lo, hi))
    R = instance.expected_reward_array()
    total = 0.0
    for seg_lo, seg_hi, action in rule.intervals():
        mass = float(dist.cdf_continuous(seg_hi)) - float(dist.cdf_continuous(seg_lo))
        total += mass * (1.0 - alpha) * R[action]
    t = linear_payments(instance, alpha)
    for loc, mass in dist.atoms:
        total += mass * best_response(instance, t, loc).principal_utility
    return total


def linear_revenue_quadrature(
    instance: Instance, dist: TypeDistribution, alpha: float, panels: int = SIMPSON_PANELS
) -> float:
    """Quadrature route for the same quantity, via pointwise argmax."""
    R = instance.expected_reward_array()
    g = instance.gamma_array()

    def f(c):
        util = alpha * R[None, :] - g[None, :] * np.asarray(c, dtype=float)[:, None]
        return (1.0 - alpha) * R[np.argmax(util, axis=1)]

    lo, hi = dist.c_low, dist.effective_high()
    cont = 0.0
    if hi > lo:
        breaks = [alpha * z for z in _welfare_breakpoint_candidates(instance)]
        cont = integrate_against(
            dist, f, lo, hi, extra_breaks=breaks, panels=panels, include_atoms=False, endpoint_inset=1e-9
        )
    t = linear_payments(instance, alpha)
    for loc, mass in dist.atoms:
        cont += mass * best_response(instance, t, loc).principal_utility
    return cont


# ---------------------------------------------------------------------------
# virtual welfare


def _phibar_mass_integral(dist: TypeDistribution, iv: IronedVirtualCost, a: float, b: float) -> float:
    """Exact ``∫_a^b ironed_virtual_cost(c) g(c) dc`` using CDF values only.

    Off the flats the ironed function equals ``c + G/g``, whose density-
    weighted antiderivative is ``c G(c)``; on a flat the level is constant.
    """
    if b <= a:
        return 0.0
    total = 0.0
    cursor = a

    def follow(lo: float, hi: float) -> float:
        return hi * float(dist.cdf(hi)) - lo * float(dist.cdf(lo))

    for flo, fhi, level in iv.flats:
        s_lo, s_hi = max(flo, cursor), min(fhi, b)
        if s_hi <= s_lo:
            continue
        if s_lo > cursor:
            total += follow(cursor, s_lo)
        total += level * (float(dist.cdf(s_hi)) - float(dist.cdf(s_lo)))
        cursor = s_hi
    if b > cursor:
        total += follow(cursor, b)
    return total


def virtual_welfare(
    instance: Instance,
    dist: TypeDistribution,
    interval: tuple[float, float] | None = None,
    iv: IronedVirtualCost | None = None,
    grid_size: int = 4096,
) -> float:
    """Optimal expected (ironed) virtual welfare from types in ``interval``.

    Breakpoint closed form: summing interval masses of the virtual-welfare
    rule reproduces the telescoped breakpoint sums, including the boundary
    correction when the interval starts strictly inside an action's range.
    """
    if dist.has_atoms:
        raise AtomPresentError("virtual welfare requires an atom-free distribution")
    if iv is None:
        iv = ironed(dist, grid_size)
    rule = virtual_rule(instance, iv)
    lo, hi = interval if interval is not None else (iv.c_low, iv.c_high)
    lo = max(lo, iv.c_low)
    hi = min(hi, iv.c_high)
    if hi <= lo:
        return 0.0
    R = instance.expected_reward_array()
    g = instance.gamma_array()
    total = 0.0
    for seg_lo, seg_hi, action in rule.intervals():
        s_lo, s_hi = max(seg_lo, lo), min(seg_hi, hi)
        if s_hi <= s_lo:
            continue
        mass = float(dist.cdf(s_hi)) - float(dist.cdf(s_lo))
        total += R[action] * mass - g[action] * _phibar_mass_integral(dist, iv, s_lo, s_hi)
    return total


def virtual_welfare_quadrature(
    instance: Instance,
    dist: TypeDistribution,
    interval: tuple[float, float] | None = None,
    iv: IronedVirtualCost | None = None,
    panels: int = SIMPSON_PANELS,
) -> float:
    """Quadrature route: integrate ``R - gamma * ironed_virtual_cost`` under
    the pointwise virtual argmax."""
    if dist.has_atoms:
        raise AtomPresentError("virtual welfare requires an atom-free distribution")
    if iv is None:
        iv = ironed(dist)
    lo, hi = interval if interval is not None else (iv.c_low, iv.c_high)
    lo, hi = max(lo, iv.c_low), min(hi, iv.c_high)
    if hi <= lo:
        return 0.0
    R = instance.expected_reward_array()
    g = instance.gamma_array()

    def f(c):
        q = np.asarray(iv.value(np.asarray(c)), dtype=float)
        vwel = R[None, :] - g[None, :] * q[:, None]
        a = np.argmax(vwel, axis=1)
        return R[a] - g[a] * q

    breaks = list(virtual_rule(instance, iv).breakpoints)
    for flo, fhi, _ in iv.flats:
        breaks += [flo, fhi]
    return integrate_against(dist, f, lo, hi, extra_breaks=breaks, panels=panels)


# ---------------------------------------------------------------------------
# optimal linear contract


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-12) -> tuple[float, float]:
    """Golden-section maximization on [lo, hi]; returns (argmax, value)."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    best_x, best_v = (c, fc) if fc >= fd else (d, fd)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
        x, v = (c, fc) if fc >= fd else (d, fd)
        if v > best_v:
            best_x, best_v = x, v
    return best_x, best_v


def _welfare_breakpoint_candidates(instance: Instance) -> list[float]:
    """All pairwise welfare crossings (a superset of the true breakpoints)."""
    R = instance.expected_reward_array()
    g = instance.gamma_array()
    out = []
    for i in range(len(R)):
        for j in range(i + 1, len(R)):
            if g[j] > g[i]:
                z = (R[j] - R[i]) / (g[j] - g[i])
                if z > 0:
                    out.append(float(z))
    return sorted(set(out))


def best_linear(
    instance: Instance, dist: TypeDistribution, grid: int = ALPHA_GRID
) -> tuple[float, float]:
    """Revenue-maximizing linear share.

    Candidates: a uniform grid, plus every ratio q/z of a distribution
    landmark q (atom, kink, support end, or inverse-ironed welfare
    breakpoint) to a welfare crossing z; these are exactly where the
    revenue curve kinks. A golden-section pass then polishes the best
    bracket.
    """
    zs = _welfare_breakpoint_candidates(instance)
    landmarks: list[float] = [dist.c_low, dist.effective_high()]
    landmarks += [loc for loc, _ in dist.atoms]
    landmarks += [k for k in dist.kinks() if math.isfinite(k)]
    if not dist.has_atoms:
        iv = ironed(dist)
        landmarks += [iv.inverse(z) for z in zs]
    cands = set(np.linspace(0.0, 1.0, grid).tolist())
    for q in landmarks:
        for z in zs:
            a = q / z if z > 0 else math.inf
            if 0.0 < a <= 1.0:
                cands.add(float(a))
    alphas = sorted(cands)
    revs = [linear_revenue(instance, dist, a) for a in alphas]
    k = int(np.argmax(revs))
    best_a, best_v = alphas[k], revs[k]
    lo = alphas[k - 1] if k > 0 else 0.0
    hi = alphas[k + 1] if k + 1 < len(alphas) else 1.0
    ga, gv = golden_section_max(lambda a: linear_revenue(instance, dist, a), lo, hi)
    if gv > best_v:
        best_a, best_v = ga, gv
    return float(best_a), float(best_v)


# ---------------------------------------------------------------------------
# bundle


@dataclass(frozen=True)
class Metrics:
    """Headline functionals of an (instance, distribution) pair."""

    wel: float
    vwel: float | None
    alpha_best: float
    revenue_best: float
    apx_at: tuple[tuple[float, float], ...]

    def to_dict(self) -> dict:
        return {
            "welfare": self.wel,
            "virtual_welfare": self.vwel,
            "best_linear": {"alpha": self.alpha_best, "revenue": self.revenue_best},
            "revenue_at": [{"alpha": a, "revenue": r} for a, r in self.apx_at],
        }


def compute_metrics(
    instance: Instance,
    dist: TypeDistribution,
    alphas: tuple[float, ...] = (0.1, 0.25, 0.5, 0.75, 0.9),
) -> Metrics:
    wel = welfare(instance, dist)
    vwel = None if dist.has_atoms else virtual_welfare(instance, dist)
    a_star, rev = best_linear(instance, dist)
    apx = tuple((float(a), linear_revenue(instance, dist, a)) for a in alphas)
    return Metrics(wel=wel, vwel=vwel, alpha_best=a_star, revenue_best=rev, apx_at=apx)
