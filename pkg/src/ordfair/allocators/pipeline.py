"""End-to-end solving: structure check, padding, thresholds, allocation,
completion, cleanup, and certification against the independent verifiers."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..errors import StructuralMismatchError
from ..model import (
    Allocation,
    Instance,
    detect_structure,
    pad_agents_to_multiple_of_three,
    pad_goods,
    strip_dummies,
    top_k_set,
)
from .. import shares
from ..verification import FairnessReport, report
from .bagfill import alloc_ordered_ef1_4n3, alloc_ordered_efx_3n2, ceil_3n_over_2
from .envy_cycle import EF1_MODE, EFX_ORDERED_MODE, envy_cycle_elimination
from .lone_divider import alloc_topn_lone_divider
from .trace import AllocatorTrace

ALGORITHMS = ("a1", "a2", "a3")


@dataclass(frozen=True)
class SolveResult:
    algorithm: str
    divisor: int
    thresholds: tuple[Fraction, ...]
    partial: Allocation
    allocation: Allocation
    partial_report: FairnessReport
    report: FairnessReport
    trace: AllocatorTrace
    certified: bool


def _unpermute(alloc: Allocation, order: tuple[int, ...]) -> Allocation:
    """Map positions back to original good indices."""
    return Allocation(
        tuple(frozenset(order[p] for p in b) for b in alloc.bundles),
        frozenset(order[p] for p in alloc.pool),
    )


def _cleared(inst: Instance) -> Instance:
    """Copy without dummy flags, so stripping later removes exactly the
    padding this pipeline adds.  Verdicts still use the caller's instance."""
    if not inst.dummy_goods and not inst.dummy_agents:
        return inst
    return Instance(
        values=inst.values,
        agent_labels=inst.agent_labels,
        good_labels=inst.good_labels,
    )


def solve_complete(inst: Instance, algorithm: str) -> SolveResult:
    """Run one of the three pipelines and certify its guarantee pair.

    a1: ordered instances, complete EFX + 1-out-of-ceil(3n/2) MMS.
    a2: top-n instances, partial EFX + MMS, completed to EF1 + MMS.
    a3: ordered instances, complete EF1 + 1-out-of-4*ceil(n/3) MMS.
    """
    if algorithm not in ALGORITHMS:
        raise StructuralMismatchError(f"unknown algorithm {algorithm!r}")
    if algorithm == "a1":
        return _solve_a1(inst)
    if algorithm == "a2":
        return _solve_a2(inst)
    return _solve_a3(inst)


def _solve_a1(inst: Instance) -> SolveResult:
    rep = detect_structure(inst)
    if not rep.ordered:
        raise StructuralMismatchError("algorithm a1 needs an ordered instance")
    assert rep.order_witness is not None
    order = rep.order_witness
    work = _cleared(inst).permute_goods(order)
    padded = pad_goods(work, max(work.m, 2 * work.n))
    d = ceil_3n_over_2(inst.n)
    taus = shares.thresholds(padded, d)
    partial_pos, trace = alloc_ordered_efx_3n2(padded, taus)
    complete_pos, completion_trace = envy_cycle_elimination(
        padded, partial_pos, EFX_ORDERED_MODE
    )
    trace.extend_offset(completion_trace)

    _, partial_stripped = strip_dummies(padded, partial_pos)
    _, complete_stripped = strip_dummies(padded, complete_pos)
    partial = _unpermute(partial_stripped, order)
    complete = _unpermute(complete_stripped, order)

    cache = {d: taus}
    partial_report = report(inst, partial, [d], cache)
    final_report = report(inst, complete, [d], cache)
    certified = (
        final_report.complete
        and final_report.efx
        and final_report.mms_ok(d)
        and partial_report.efx
        and partial_report.mms_ok(d)
    )
    return SolveResult(
        algorithm="a1",
        divisor=d,
        thresholds=taus,
        partial=partial,
        allocation=complete,
        partial_report=partial_report,
        report=final_report,
        trace=trace,
        certified=certified,
    )


def _solve_a2(inst: Instance) -> SolveResult:
    if top_k_set(inst, inst.n) is None:
        raise StructuralMismatchError("algorithm a2 needs a top-n instance")
    padded = pad_goods(_cleared(inst), max(inst.m, 2 * inst.n))
    d = ceil_3n_over_2(inst.n)
    taus = shares.thresholds(padded, d)
    partial_pad, trace = alloc_topn_lone_divider(padded, taus)
    complete_pad, completion_trace = envy_cycle_elimination(padded, partial_pad, EF1_MODE)
    trace.extend_offset(completion_trace)

    _, partial = strip_dummies(padded, partial_pad)
    _, complete = strip_dummies(padded, complete_pad)

    cache = {d: taus}
    partial_report = report(inst, partial, [d], cache)
    final_report = report(inst, complete, [d], cache)
    certified = (
        partial_report.efx
        and partial_report.mms_ok(d)
        and final_report.complete
        and final_report.ef1
        and final_report.mms_ok(d)
    )
    return SolveResult(
        algorithm="a2",
        divisor=d,
        thresholds=taus,
        partial=partial,
        allocation=complete,
        partial_report=partial_report,
        report=final_report,
        trace=trace,
        certified=certified,
    )


def _solve_a3(inst: Instance) -> SolveResult:
    rep = detect_structure(inst)
    if not rep.ordered:
        raise StructuralMismatchError("algorithm a3 needs an ordered instance")
    assert rep.order_witness is not None
    order = rep.order_witness
    work = _cleared(inst).permute_goods(order)
    grown = pad_agents_to_multiple_of_three(work)
    padded = pad_goods(grown, max(grown.m, 2 * grown.n))
    d = 4 * (grown.n // 3)
    taus_padded = shares.thresholds(padded, d)
    partial_pad, trace = alloc_ordered_ef1_4n3(padded, taus_padded)

    # Dummy agents' goods go back to the pool; completion then reallocates
    # them among real agents without breaking EF1.
    # The completion runs on the stripped instance (real agents only, the
    # dummy agents' goods back in the pool), a different coordinate space
    # from the allocator's run, so its events are not merged into the trace.
    stripped_inst, partial_stripped = strip_dummies(padded, partial_pad)
    complete_stripped, _ = envy_cycle_elimination(
        stripped_inst, partial_stripped, EF1_MODE
    )
    partial = _unpermute(partial_stripped, order)
    complete = _unpermute(complete_stripped, order)

    taus = taus_padded[: inst.n]
    cache = {d: taus}
    partial_report = report(inst, partial, [d], cache)
    final_report = report(inst, complete, [d], cache)
    certified = (
        final_report.complete and final_report.ef1 and final_report.mms_ok(d)
    )
    return SolveResult(
        algorithm="a3",
        divisor=d,
        thresholds=taus,
        partial=partial,
        allocation=complete,
        partial_report=partial_report,
        report=final_report,
        trace=trace,
        certified=certified,
    )
