"""Shared battery generators for the randomized cross-checks.

Instances come with strictly increasing rewards and efforts; paired
distributions are scaled so their support comfortably covers the welfare
breakpoints, which keeps every approximation theorem's hypotheses live.
"""

import numpy as np
import pytest

from agency import Instance, exponential, piecewise, truncated_normal, uniform


def random_instance(rng: np.random.Generator, n: int | None = None, m: int | None = None) -> Instance:
    n = int(rng.integers(2, 6)) if n is None else n
    m = int(rng.integers(2, 5)) if m is None else m
    mid = np.sort(rng.uniform(1.0, 8.0, m - 1))
    top = float(rng.uniform(9.0, 20.0))
    rewards = np.concatenate([[0.0], mid, [top]])
    p = np.sort(rng.uniform(0.05, 0.95, n))
    while len(np.unique(p)) < n:
        p = np.sort(rng.uniform(0.05, 0.95, n))
    rows = [np.concatenate([[1.0], np.zeros(m)])]
    for pi in p:
        rows.append(np.concatenate([[0.0], np.full(m - 1, (1.0 - pi) / (m - 1)), [pi]]))
    gammas = np.concatenate([[0.0], np.cumsum(rng.uniform(0.2, 1.5, n))])
    inst = Instance(
        gammas=tuple(gammas),
        rewards=tuple(rewards),
        outcome_probs=tuple(tuple(r) for r in rows),
    )
    R = inst.expected_reward_array()
    if np.any(np.diff(R) <= 1e-9):  # rare: resample until rewards separate
        return random_instance(rng, n, m)
    return inst


def welfare_top(inst: Instance) -> float:
    """Cost where the welfare envelope hits the null action."""
    R = inst.expected_reward_array()
    g = inst.gamma_array()
    return float(max(R[i] / g[i] for i in range(1, inst.n + 1)))


def scaled_distribution(rng: np.random.Generator, inst: Instance, family: int):
    z = welfare_top(inst)
    if family == 0:
        return uniform(0.0, float(rng.uniform(1.2, 1.8)) * z)
    if family == 1:
        return exponential(float(rng.uniform(6.0, 10.0)) / z)
    if family == 2:
        mu = float(rng.uniform(0.1, 0.3)) * z
        return truncated_normal(mu, float(rng.uniform(2.0, 3.0)) * mu, 0.0)
    split = float(rng.uniform(0.3, 0.5)) * z
    hi = float(rng.uniform(1.2, 1.6)) * z
    w1 = float(rng.uniform(0.55, 0.8))
    return piecewise([(0.0, split, w1 / split), (split, hi, (1.0 - w1) / (hi - split))])


def battery(seed: int, count: int):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        inst = random_instance(rng)
        out.append((inst, scaled_distribution(rng, inst, k % 4)))
    return out


def random_binary_action_instance(rng: np.random.Generator) -> Instance:
    """n = 2 instance with a diagonal-dominant outcome matrix that satisfies
    the hazard-rent inequality."""
    while True:
        a = float(rng.uniform(0.15, 0.45))
        b = float(rng.uniform(a + 0.15, 0.95))
        r1 = float(rng.uniform(0.5, 4.0))
        r2 = float(rng.uniform(r1 + 1.0, r1 + 8.0))
        g1 = float(rng.uniform(0.3, 1.2))
        g2_cap = g1 * b / a
        if g2_cap <= g1 * 1.05:
            continue
        g2 = float(rng.uniform(g1 * 1.05, min(g2_cap, g1 * 3.0)))
        inst = Instance(
            gammas=(0.0, g1, g2),
            rewards=(0.0, r1, r2),
            outcome_probs=((1.0, 0.0, 0.0), (0.0, 1.0 - a, a), (0.0, 1.0 - b, b)),
        )
        if inst.expected_rewards[1] < inst.expected_rewards[2]:
            return inst


@pytest.fixture
def rng():
    return np.random.default_rng(42)
