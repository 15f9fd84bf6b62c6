"""Shared helpers for the test suite: canned instances, seeded sampling, and
naive reference implementations kept deliberately independent of the library
internals (plain loops over explicit sums)."""

from __future__ import annotations

import random
from fractions import Fraction

from ordfair import Allocation, GeneratorConfig, Instance, generate

# The two worked instances used throughout the suite (0-based goods).
I_A = Instance.from_rows([[3, 2, 2, 1, 1], [4, 3, 1, 1, 1]])
I_B = Instance.from_rows([[5, 4, 2, 1], [4, 5, 1, 2]])
EX51 = Instance.from_rows([[1, 1, 1, 1, 1], [1, 1, 1, 1, 1], [1, 1, 1, 2, 1]])
# Witness partitions the worked example fixes for EX51 (agents 0,1 then 2).
EX51_WITNESSES = {
    0: [{0, 1}, {2, 3}, {4}],
    1: [{0, 1}, {2, 3}, {4}],
    2: [{0, 1}, {2, 4}, {3}],
}


def seeded_instance(family: str, n: int, m: int, seed: int, max_value: int = 20) -> Instance:
    return generate(GeneratorConfig(family=family, n=n, m=m, max_value=max_value, seed=seed))


def positive_ordered_instance(n: int, m: int, seed: int, max_value: int = 8) -> Instance:
    """Ordered instance with strictly positive values (shares stay positive)."""
    inst = seeded_instance("ordered", n, m, seed, max_value)
    return inst.with_values([[v + 1 for v in row] for row in inst.values])


def random_partial_allocation(inst: Instance, rng: random.Random) -> Allocation:
    """Uniformly random partial allocation: each good to an agent or the pool."""
    bundles = [set() for _ in range(inst.n)]
    pool = set()
    for g in inst.goods:
        slot = rng.randrange(inst.n + 1)
        if slot == inst.n:
            pool.add(g)
        else:
            bundles[slot].add(g)
    return Allocation.make(bundles, pool)


# --- naive reference checkers (no shared code with ordfair.verification) ----


def naive_value(inst: Instance, agent: int, goods) -> Fraction:
    total = Fraction(0)
    for g in goods:
        total = total + inst.values[agent][g]
    return total


def naive_strong_envy(inst: Instance, alloc: Allocation, i: int, j: int) -> bool:
    own = naive_value(inst, i, alloc.bundles[i])
    found = False
    for g in alloc.bundles[j]:
        rest = [h for h in alloc.bundles[j] if h != g]
        if naive_value(inst, i, rest) > own:
            found = True
    return found


def naive_is_efx(inst: Instance, alloc: Allocation) -> bool:
    for i in range(inst.n):
        for j in range(inst.n):
            if i != j and naive_strong_envy(inst, alloc, i, j):
                return False
    return True


def naive_is_ef1(inst: Instance, alloc: Allocation) -> bool:
    for i in range(inst.n):
        own = naive_value(inst, i, alloc.bundles[i])
        for j in range(inst.n):
            if i == j:
                continue
            if own >= naive_value(inst, i, alloc.bundles[j]):
                continue
            fixable = False
            for g in alloc.bundles[j]:
                rest = [h for h in alloc.bundles[j] if h != g]
                if own >= naive_value(inst, i, rest):
                    fixable = True
            if not fixable:
                return False
    return True
