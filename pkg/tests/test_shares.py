import random
from fractions import Fraction

import pytest

from ordfair import (
    Instance,
    detect_structure,
    mms_bruteforce,
    mms_exact,
    normalize_order_preserving,
    normalize_scale,
    thresholds,
)
from ordfair.errors import (
    OracleLimitError,
    PreconditionError,
    StructuralMismatchError,
    ZeroMaximinError,
)

from helpers import EX51, EX51_WITNESSES, I_A, positive_ordered_instance, seeded_instance


def nonempty(partition):
    return {p for p in partition if p}


class TestBruteforce:
    def test_three_unit_goods_three_bundles(self):
        inst = Instance.from_rows([[1, 1, 1]])
        res = mms_bruteforce(inst, 0, 3)
        assert res.value == 1
        assert nonempty(res.partition) == {
            frozenset({0}),
            frozenset({1}),
            frozenset({2}),
        }

    def test_three_unit_goods_four_bundles_pigeonhole(self):
        inst = Instance.from_rows([[1, 1, 1]])
        assert mms_bruteforce(inst, 0, 4).value == 0

    def test_ex51_agent2_d3(self):
        res = mms_bruteforce(EX51, 2, 3)
        assert res.value == 2
        assert min(EX51.value(2, p) for p in res.partition) == 2

    def test_oracle_limit_guard(self):
        inst = Instance.from_rows([[1] * 6])
        with pytest.raises(OracleLimitError):
            mms_bruteforce(inst, 0, 2, oracle_limit=5)


class TestExact:
    def test_i_a_values(self):
        assert mms_exact(I_A, 0, 3).value == 3
        assert mms_exact(I_A, 1, 3).value == 3

    def test_single_bundle_is_total(self):
        inst = seeded_instance("general", 2, 6, 31)
        for i in inst.agents:
            assert mms_exact(inst, i, 1).value == inst.value(i, inst.goods)

    def test_witness_achieves_value(self):
        rng = random.Random(4)
        for _ in range(40):
            inst = seeded_instance("general", 2, rng.randrange(1, 9), rng.randrange(2**32))
            d = rng.randrange(1, 6)
            for i in inst.agents:
                res = mms_exact(inst, i, d)
                assert len(res.partition) == d
                assert min(inst.value(i, p) for p in res.partition) == res.value

    def test_agrees_with_oracle(self):
        rng = random.Random(5)
        for _ in range(60):
            inst = seeded_instance("general", rng.randrange(1, 4), rng.randrange(1, 10), rng.randrange(2**32))
            d = rng.randrange(1, 6)
            for i in inst.agents:
                assert mms_exact(inst, i, d).value == mms_bruteforce(inst, i, d).value

    def test_monotone_in_divisor(self):
        rng = random.Random(6)
        for _ in range(20):
            inst = seeded_instance("general", 1, rng.randrange(1, 9), rng.randrange(2**32))
            values = [mms_exact(inst, 0, d).value for d in range(1, 6)]
            assert all(values[k] >= values[k + 1] for k in range(4))

    def test_scale_invariance(self):
        inst = Instance.from_rows([["3/7", "2/7", "1/3", "4/5"]])
        base = mms_exact(inst, 0, 2).value
        scaled = inst.with_values([[v * Fraction(9, 4) for v in inst.values[0]]])
        assert mms_exact(scaled, 0, 2).value == base * Fraction(9, 4)

    def test_fractional_values_exact(self):
        inst = Instance.from_rows([["1/2", "1/3", "1/6"]])
        assert mms_exact(inst, 0, 2).value == Fraction(1, 2)

    def test_rejects_bad_divisor(self):
        with pytest.raises(PreconditionError):
            mms_exact(I_A, 0, 0)

    def test_larger_instances_stay_tractable(self):
        # Shapes that once thrashed the search: identical values (symmetric
        # branching) and a long descending run (surplus absorption).
        import time

        cases = [
            ([7] * 16, 9, Fraction(7)),
            (list(range(40, 20, -1)), 10, Fraction(61)),
        ]
        started = time.perf_counter()
        for vals, d, expected in cases:
            res = mms_exact(Instance.from_rows([vals]), 0, d)
            assert res.value == expected
            assert min(
                sum(vals[g] for g in part) for part in res.partition
            ) == expected
        assert time.perf_counter() - started < 20


class TestMaximinSerialization:
    def test_round_trip(self):
        from ordfair.shares import read_maximin_result, write_maximin_result

        rng = random.Random(51)
        for _ in range(10):
            inst = seeded_instance("general", 2, rng.randrange(1, 8), rng.randrange(2**32))
            res = mms_exact(inst, rng.randrange(2), rng.randrange(1, 5))
            assert read_maximin_result(write_maximin_result(res)) == res


class TestThresholds:
    def test_ex51_d3(self):
        assert thresholds(EX51, 3) == (1, 1, 2)

    def test_all_zero_valuations(self):
        inst = Instance.from_rows([[0, 0, 0], [0, 0, 0]])
        assert thresholds(inst, 2) == (0, 0)

    def test_i_a_d3(self):
        assert thresholds(I_A, 3) == (3, 3)


class TestShareBandReduction:
    """Removing the second quality band [k+1, 3n-k] of an ordered instance
    leaves a 1-out-of-k share at least the 1-out-of-ceil(3n/2) share."""

    def test_reduction_preserves_share(self):
        rng = random.Random(7)
        for _ in range(25):
            n = rng.randrange(2, 4)
            m = rng.randrange(2 * n, 9)
            inst = positive_ordered_instance(n, m, rng.randrange(2**32))
            order = detect_structure(inst).order_witness
            d = (3 * n + 1) // 2
            for i in inst.agents:
                full = mms_bruteforce(inst, i, d).value
                for k in range(n, d + 1):
                    removed = {order[p] for p in range(k, min(3 * n - k, m))}
                    kept = [g for g in inst.goods if g not in removed]
                    reduced = mms_bruteforce(inst, i, k, goods=kept).value
                    assert reduced >= full, (n, m, i, k)


class TestNormalizeScale:
    def test_ex51_pinned_witnesses(self):
        out = normalize_scale(EX51, 3, EX51_WITNESSES)
        half = Fraction(1, 2)
        assert out.values[0] == (half, half, half, half, Fraction(1))
        assert out.values[1] == (half, half, half, half, Fraction(1))
        assert out.values[2] == (half, half, half, Fraction(1), half)

    def test_already_normalized_is_identity(self):
        inst = Instance.from_rows([[1, 1, 1]])
        out = normalize_scale(inst, 3)
        assert out.values == inst.values

    def test_zero_share_rejected(self):
        inst = Instance.from_rows([[1, 0, 0]])
        with pytest.raises(ZeroMaximinError):
            normalize_scale(inst, 2)

    def test_every_witness_bundle_becomes_one(self):
        rng = random.Random(9)
        for _ in range(15):
            inst = positive_ordered_instance(2, rng.randrange(3, 8), rng.randrange(2**32))
            d = rng.randrange(2, 4)
            out = normalize_scale(inst, d)
            for i in inst.agents:
                assert mms_exact(out, i, d).value == 1
                assert out.value(i, out.goods) == d

    def test_rejects_witness_not_achieving_share(self):
        with pytest.raises(PreconditionError):
            normalize_scale(EX51, 3, {0: [{0, 1, 2, 3, 4}, set(), set()]})
        with pytest.raises(PreconditionError):
            normalize_scale(EX51, 3, {0: [{0, 1}, {2, 3}]})


class TestNormalizeOrderPreserving:
    def test_hand_trace_all_ones(self):
        inst = Instance.from_rows([[1, 1, 1, 1, 1]])
        out = normalize_order_preserving(inst, 3, {0: [{0, 1}, {2, 3}, {4}]})
        half = Fraction(1, 2)
        assert out.values[0] == (Fraction(1), half, half, half, half)

    def test_identity_when_bundles_already_one(self):
        inst = Instance.from_rows([[2, 2, 2]])
        out = normalize_order_preserving(inst, 3)
        assert out.values[0] == (Fraction(1), Fraction(1), Fraction(1))

    def test_rejects_unordered(self):
        inst = Instance.from_rows([[5, 4, 2, 1], [4, 5, 1, 2]])
        with pytest.raises(StructuralMismatchError):
            normalize_order_preserving(inst, 2)

    def test_postconditions_on_random_ordered(self):
        rng = random.Random(10)
        for _ in range(30):
            n = rng.randrange(1, 4)
            m = rng.randrange(2, 9)
            d = rng.randrange(2, 5)
            inst = positive_ordered_instance(n, m, rng.randrange(2**32))
            if any(mms_exact(inst, i, d).value == 0 for i in inst.agents):
                continue
            out = normalize_order_preserving(inst, d)
            order = detect_structure(inst).order_witness
            for i in inst.agents:
                mu = mms_exact(inst, i, d).value
                assert mms_exact(out, i, d).value == 1
                assert out.value(i, out.goods) == d
                for g in inst.goods:
                    assert out.values[i][g] <= inst.values[i][g] / mu
                for p in range(m - 1):
                    assert out.values[i][order[p]] >= out.values[i][order[p + 1]]
