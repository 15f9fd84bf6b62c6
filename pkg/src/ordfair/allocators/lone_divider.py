"""Lone-divider allocation for top-n instances: EFX + 1-out-of-ceil(3n/2) MMS.

One unserved agent repeatedly partitions the remaining goods into bags worth
at least their own share, one designated top good per bag.  Bags are shrunk
to inclusion-minimal sets still acceptable to some unserved agent; if a
served agent strongly envies a shrunk bag they steal a minimal envied core
of it, otherwise an envy-free matching hands bags out.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from ..errors import (
    InvariantViolationError,
    PreconditionError,
    StructuralMismatchError,
)
from ..model import Allocation, Instance, top_k_set
from .. import shares
from .bagfill import ceil_3n_over_2, run_bag_fill
from .matching import ThresholdGraph, envy_free_matching
from .trace import AllocatorTrace


def lone_divider_partition(
    inst: Instance,
    divider: int,
    pool: Iterable[int],
    bag_count: int,
    top_goods: Iterable[int],
    tau: Fraction,
) -> list[frozenset[int]]:
    """Partition `pool` into `bag_count` bags, each worth >= tau to the
    divider and each holding exactly one good from `top_goods`.

    Runs the singleton-phase bag filler with `bag_count` copies of the
    divider (ordering the pool by the divider's values, top goods winning
    ties), then spreads leftover goods round-robin across the bags.
    """
    pool = sorted(set(pool))
    top = frozenset(top_goods)
    if len(top & set(pool)) != bag_count:
        raise PreconditionError("need exactly one top good per requested bag")
    row = inst.values[divider]
    order = sorted(pool, key=lambda g: (-row[g], g not in top, g))
    width = max(len(order), 2 * bag_count)

    def value_of(_copy: int, p: int) -> Fraction:
        return row[order[p]] if p < len(order) else Fraction(0)

    scratch = AllocatorTrace("lone_divider_partition")
    state = run_bag_fill(
        value_of, bag_count, width, [tau] * bag_count, True, scratch
    )
    used: set[int] = set()
    bags: list[set[int]] = []
    for copy in range(bag_count):
        bag_id = state.owner[copy]
        goods = {order[p] for p in state.bags[bag_id] if p < len(order)}
        bags.append(goods)
        used |= goods
    leftovers = [g for g in order if g not in used]
    for idx, g in enumerate(leftovers):
        bags[idx % bag_count].add(g)

    for bag in bags:
        if len(bag & top) != 1:
            raise InvariantViolationError("bag lost its top good")
        if inst.value(divider, bag) < tau:
            raise InvariantViolationError("divider bag fell below the share")
    return [frozenset(b) for b in bags]


def shrink_minimal(
    inst: Instance,
    bag: Iterable[int],
    protected: int,
    agents: Iterable[int],
    taus: Sequence[Fraction],
) -> frozenset[int]:
    """Inclusion-minimal subset keeping `protected` that some agent in
    `agents` still values at or above their threshold."""
    current = set(bag)
    agents = sorted(agents)
    if protected not in current:
        raise PreconditionError("protected good must be in the bag")
    if not any(inst.value(i, current) >= taus[i] for i in agents):
        raise PreconditionError("no agent accepts the bag to begin with")
    removed = True
    while removed:
        removed = False
        for x in sorted(current):
            if x == protected:
                continue
            trial = current - {x}
            if any(inst.value(i, trial) >= taus[i] for i in agents):
                current = trial
                removed = True
                break
    return frozenset(current)


def _envies(inst: Instance, agent: int, own: Iterable[int], target: Iterable[int]) -> bool:
    return inst.value(agent, target) > inst.value(agent, own)


def strongly_envies_bundle(
    inst: Instance, agent: int, own: Iterable[int], target: Iterable[int]
) -> bool:
    """Strong envy of a candidate bundle that is not (yet) anyone's."""
    target = set(target)
    own_value = inst.value(agent, own)
    for g in target:
        if inst.value(agent, target - {g}) > own_value:
            return True
    return False


def most_envious_shrink(
    inst: Instance,
    bag: Iterable[int],
    protected: int,
    holdings: Mapping[int, frozenset[int]],
) -> tuple[int, frozenset[int]]:
    """Shrink `bag` (keeping `protected`) to a minimal set some served agent
    still envies; return that agent and the set.

    Postcondition, checked explicitly: no served agent strongly envies the
    result, including via removal of the protected good.
    """
    z = set(bag)
    if protected not in z:
        raise PreconditionError("protected good must be in the bag")
    served = sorted(holdings)
    if not any(
        strongly_envies_bundle(inst, a, holdings[a], z) for a in served
    ):
        raise PreconditionError("nobody strongly envies the bag")
    removed = True
    while removed:
        removed = False
        for a in served:
            for x in sorted(z):
                if x == protected:
                    continue
                if _envies(inst, a, holdings[a], z - {x}):
                    z.remove(x)
                    removed = True
                    break
            if removed:
                break
    winner = None
    for a in served:
        if _envies(inst, a, holdings[a], z):
            winner = a
            break
    if winner is None:
        raise InvariantViolationError("envied core lost all its enviers")
    for a in served:
        if strongly_envies_bundle(inst, a, holdings[a], z):
            raise InvariantViolationError(
                "a served agent still strongly envies the shrunk bag"
            )
    return winner, frozenset(z)


def alloc_topn_lone_divider(
    inst: Instance, taus: Sequence[Fraction] | None = None
) -> tuple[Allocation, AllocatorTrace]:
    """Lone-divider allocation on a top-n instance (m >= 2n, pre-padded).

    Returns a partial allocation that is EFX with every agent's bundle at or
    above their 1-out-of-ceil(3n/2) share.
    """
    n = inst.n
    top = top_k_set(inst, n)
    if top is None:
        raise StructuralMismatchError("instance is not top-n")
    if inst.m < 2 * n:
        raise StructuralMismatchError(
            f"need at least {2 * n} goods, have {inst.m}; pad first"
        )
    if taus is None:
        taus = shares.thresholds(inst, ceil_3n_over_2(n))

    trace = AllocatorTrace("alloc_topn_lone_divider")
    bundles: dict[int, frozenset[int]] = {}
    unserved = set(range(n))
    pool = set(inst.goods)
    prev_measure: tuple[Fraction, int] | None = None
    iteration = 0

    while unserved:
        iteration += 1
        measure = (
            sum((inst.value(i, b) for i, b in bundles.items()), Fraction(0)),
            n - len(unserved),
        )
        if prev_measure is not None and measure <= prev_measure:
            raise InvariantViolationError("progress measure failed to increase")
        prev_measure = measure
        _assert_loop_invariants(inst, bundles, unserved, taus)

        divider = min(unserved)
        top_in_pool = top & pool
        if len(top_in_pool) != len(unserved):
            raise InvariantViolationError("top goods out of sync with unserved agents")
        trace.emit(iteration, "lone_divider", agent=divider)
        bags = lone_divider_partition(
            inst, divider, pool, len(unserved), top_in_pool, taus[divider]
        )
        for j, bag in enumerate(bags):
            trace.emit(iteration, "bag_init", bag=j, goods=bag)

        shrunk: list[frozenset[int]] = []
        protecteds: list[int] = []
        for j, bag in enumerate(bags):
            protected = next(iter(bag & top))
            kept = shrink_minimal(inst, bag, protected, unserved, taus)
            shrunk.append(kept)
            protecteds.append(protected)
            trace.emit(iteration, "shrink", bag=j, kept=kept)

        stolen = False
        for j, bag in enumerate(shrunk):
            if any(
                strongly_envies_bundle(inst, a, bundles[a], bag) for a in bundles
            ):
                winner, core = most_envious_shrink(
                    inst, bag, protecteds[j], bundles
                )
                pool |= bundles[winner]
                pool -= core
                bundles[winner] = core
                trace.emit(iteration, "swap", agent=winner, goods=core)
                stolen = True
                break
        if stolen:
            continue

        graph = ThresholdGraph.build(inst, shrunk, sorted(unserved), taus)
        pairs = envy_free_matching(graph)
        for agent, j in pairs:
            bundles[agent] = shrunk[j]
            unserved.remove(agent)
            pool -= shrunk[j]
        trace.emit(
            iteration,
            "matching",
            pairs=";".join(
                f"{agent}:" + ",".join(str(g) for g in sorted(shrunk[j]))
                for agent, j in pairs
            ),
        )

    alloc = Allocation(
        tuple(bundles.get(i, frozenset()) for i in range(n)), frozenset(pool)
    )
    for i in inst.agents:
        if inst.value(i, alloc.bundles[i]) < taus[i]:
            raise InvariantViolationError(f"agent {i} ended below their threshold")
    return alloc, trace


def _assert_loop_invariants(
    inst: Instance,
    bundles: Mapping[int, frozenset[int]],
    unserved: set[int],
    taus: Sequence[Fraction],
) -> None:
    """Served agents form an EFX sub-allocation; no unserved agent accepts
    any already-assigned bag."""
    served = sorted(bundles)
    for a in served:
        for b in served:
            if a != b and strongly_envies_bundle(
                inst, a, bundles[a], bundles[b]
            ):
                raise InvariantViolationError(
                    f"served agents lost EFX: {a} strongly envies {b}"
                )
    for i in unserved:
        for a in served:
            if inst.value(i, bundles[a]) >= taus[i]:
                raise InvariantViolationError(
                    f"unserved agent {i} accepts an assigned bag"
                )
