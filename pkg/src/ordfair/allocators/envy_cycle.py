"""Envy-cycle elimination: complete a partial allocation.

EF1 mode works on any instance and preserves EF1.  EFX mode additionally
requires an ordered instance whose allocated goods all weakly dominate the
pool for every agent (true for the bag fillers' outputs, whose pool is a
suffix of the common order); it preserves EFX.
"""

from __future__ import annotations

from fractions import Fraction

from ..errors import InvariantViolationError, PreconditionError
from ..model import Allocation, Instance, check_allocation, detect_structure
from ..verification import is_ef1, is_efx
from .trace import AllocatorTrace

EF1_MODE = "ef1"
EFX_ORDERED_MODE = "efx_ordered"


def _envy_edges(inst: Instance, bundles: list[set[int]]) -> list[set[int]]:
    """incoming[j] = agents that envy j."""
    own = [inst.value(i, bundles[i]) for i in inst.agents]
    incoming: list[set[int]] = [set() for _ in inst.agents]
    for i in inst.agents:
        for j in inst.agents:
            if i != j and inst.value(i, bundles[j]) > own[i]:
                incoming[j].add(i)
    return incoming


def _find_cycle(incoming: list[set[int]]) -> list[int]:
    """A directed envy cycle, found by walking predecessors from the lowest
    agent; returned in forward (envier -> envied) direction."""
    start = 0
    walk = [start]
    seen = {start: 0}
    while True:
        preds = incoming[walk[-1]]
        if not preds:
            raise InvariantViolationError("predecessor walk left the graph")
        nxt = min(preds)
        if nxt in seen:
            tail = walk[seen[nxt]:]
            return list(reversed(tail))
        seen[nxt] = len(walk)
        walk.append(nxt)


def envy_cycle_elimination(
    inst: Instance, alloc: Allocation, mode: str = EF1_MODE
) -> tuple[Allocation, AllocatorTrace]:
    """Hand pool goods to unenvied agents, rotating bundles along envy
    cycles when no such agent exists."""
    check_allocation(inst, alloc)
    if mode not in (EF1_MODE, EFX_ORDERED_MODE):
        raise PreconditionError(f"unknown mode {mode!r}")

    order = None
    if mode == EF1_MODE:
        ok, pair = is_ef1(inst, alloc)
        if not ok:
            raise PreconditionError(f"EF1 mode needs an EF1 input, witness {pair}")
    else:
        rep = detect_structure(inst)
        if not rep.ordered:
            raise PreconditionError("EFX mode needs an ordered instance")
        order = rep.order_witness
        ok, witness = is_efx(inst, alloc)
        if not ok:
            raise PreconditionError(f"EFX mode needs an EFX input, witness {witness}")
        for i in inst.agents:
            row = inst.values[i]
            lo = min((row[g] for g in alloc.allocated()), default=None)
            hi = max((row[g] for g in alloc.pool), default=None)
            if lo is not None and hi is not None and lo < hi:
                raise PreconditionError(
                    "EFX mode needs every allocated good to dominate the pool"
                )

    bundles = [set(b) for b in alloc.bundles]
    pool = set(alloc.pool)
    trace = AllocatorTrace(f"envy_cycle_elimination[{mode}]")
    start_values = [inst.value(i, bundles[i]) for i in inst.agents]
    iteration = 0
    cap = 10_000 + 100 * inst.n * inst.m

    while pool:
        iteration += 1
        if iteration > cap:
            raise InvariantViolationError("envy-cycle run exceeded its event cap")
        incoming = _envy_edges(inst, bundles)
        sources = [i for i in inst.agents if not incoming[i]]
        if not sources:
            cycle = _find_cycle(incoming)
            before = sum(
                (inst.value(i, bundles[i]) for i in inst.agents), Fraction(0)
            )
            saved = [set(bundles[a]) for a in cycle]
            for idx, a in enumerate(cycle):
                gained = saved[(idx + 1) % len(cycle)]
                if inst.value(a, gained) <= inst.value(a, bundles[a]):
                    raise InvariantViolationError("cycle member did not gain")
                bundles[a] = gained
            after = sum(
                (inst.value(i, bundles[i]) for i in inst.agents), Fraction(0)
            )
            if after <= before:
                raise InvariantViolationError("rotation did not raise total utility")
            trace.emit(iteration, "cycle_rotation", cycle=",".join(map(str, cycle)))
            continue
        source = min(sources)
        if order is not None:
            good = next(g for g in order if g in pool)
        else:
            row = inst.values[source]
            good = min(pool, key=lambda g: (-row[g], g))
        bundles[source].add(good)
        pool.remove(good)
        trace.emit(iteration, "source_gift", agent=source, good=good)

    result = Allocation(tuple(frozenset(b) for b in bundles), frozenset())
    for i in inst.agents:
        if inst.value(i, result.bundles[i]) < start_values[i]:
            raise InvariantViolationError(f"agent {i} lost value during completion")
    if mode == EFX_ORDERED_MODE:
        ok, witness = is_efx(inst, result)
        if not ok:
            raise InvariantViolationError(f"EFX lost during completion: {witness}")
    else:
        ok, pair = is_ef1(inst, result)
        if not ok:
            raise InvariantViolationError(f"EF1 lost during completion: {pair}")
    return result, trace
