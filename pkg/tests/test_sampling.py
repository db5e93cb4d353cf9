import random
from collections import Counter
from decimal import Decimal

import pytest
from scipy import stats

from rlacsd.errors import FullCountRequiredError
from rlacsd.model import CardRef, CardStyleTable, Manifest
from rlacsd.sampling import (
    assign_numbers,
    assignment_to_csv,
    consistent_sample,
    retrieval_list,
    unit_interval_number,
    with_replacement_draws,
    with_replacement_sample,
)


class TestAssignNumbers:
    def test_deterministic(self):
        assert unit_interval_number("123", "1:2:3") == unit_interval_number("123", "1:2:3")
        a = assign_numbers("98765", ["a", "b", "c"])
        b = assign_numbers("98765", ["a", "b", "c"])
        assert a.numbers == b.numbers

    def test_separator_prevents_concatenation_collisions(self):
        assert unit_interval_number("12", "3:4:5") != unit_interval_number("123", ":4:5")
        assert unit_interval_number("1", "2:3:4") != unit_interval_number("1", "2:3:41")

    def test_seeds_give_uncorrelated_orderings(self):
        ids = [f"1:1:{i}" for i in range(1000)]
        a = assign_numbers("11111", ids)
        b = assign_numbers("22222", ids)
        rho = stats.spearmanr([a.numbers[i] for i in ids],
                              [b.numbers[i] for i in ids]).statistic
        assert abs(rho) < 0.1

    def test_uniformity_ks(self):
        ids = [f"1:1:{i}" for i in range(10000)]
        values = list(assign_numbers("935821604", ids).numbers.values())
        assert stats.kstest(values, "uniform").pvalue > 0.01

    def test_rejects_duplicates_and_empty_seed(self):
        with pytest.raises(ValueError):
            assign_numbers("", ["a"])
        with pytest.raises(ValueError):
            assign_numbers("1", ["a", "a"])

    def test_csv_dump_is_bit_exact(self):
        assignment = assign_numbers("31415926", [f"1:1:{i}" for i in range(50)])
        lines = assignment_to_csv(assignment).strip().splitlines()
        assert lines[0] == "card_id,number"
        for line in lines[1:]:
            cid, digits = line.split(",")
            assert len(digits.split(".")[1]) == 20
            recovered = int((Decimal(digits) * 2**64).to_integral_value())
            assert recovered == round(assignment.numbers[cid] * 2**64)


def _csd(spec):
    return CardStyleTable({cid: frozenset(style) for cid, style in spec.items()})


class TestConsistentSample:
    cards = {f"k{i}": {"K"} for i in range(10)}

    def test_smallest_numbers_win(self):
        csd = _csd(self.cards)
        assignment = assign_numbers("777", list(self.cards))
        sample = consistent_sample(assignment, csd, "K", 4)
        ranked = assignment.sorted_ids(self.cards)
        assert list(sample.card_ids) == ranked[:4]
        assert sample.threshold == assignment.numbers[ranked[3]]

    def test_empty_sample(self):
        sample = consistent_sample(assign_numbers("7", list(self.cards)),
                                   _csd(self.cards), "K", 0)
        assert sample.card_ids == ()
        assert sample.threshold == 0.0

    def test_exhaustive_sample(self):
        sample = consistent_sample(assign_numbers("7", list(self.cards)),
                                   _csd(self.cards), "K", 10)
        assert set(sample.card_ids) == set(self.cards)

    def test_oversized_request(self):
        with pytest.raises(FullCountRequiredError):
            consistent_sample(assign_numbers("7", list(self.cards)),
                              _csd(self.cards), "K", 11)

    def test_prefix_nesting_on_random_instances(self):
        rng = random.Random(20260809)
        for trial in range(200):
            n = rng.randint(2, 40)
            ids = [f"c{i}" for i in range(n)]
            csd = _csd({cid: {"K"} for cid in ids})
            assignment = assign_numbers(str(rng.getrandbits(40)), ids)
            previous: tuple = ()
            for size in range(n + 1):
                sample = consistent_sample(assignment, csd, "K", size)
                assert sample.card_ids[:len(previous)] == previous
                previous = sample.card_ids

    def test_cross_contest_threshold_independence(self):
        # membership in contest j's sample depends only on j's threshold
        ids = {f"b{i}": {"B"} for i in range(6)}
        ids.update({f"x{i}": {"B", "S"} for i in range(6)})
        ids.update({f"s{i}": {"S"} for i in range(4)})
        csd = _csd(ids)
        assignment = assign_numbers("5150", list(ids))
        b = consistent_sample(assignment, csd, "B", 5)
        s = consistent_sample(assignment, csd, "S", 3)
        for cid, style in ids.items():
            if "B" in style:
                assert (cid in b.card_ids) == (assignment.numbers[cid] <= b.threshold)
            if "S" in style:
                assert (cid in s.card_ids) == (assignment.numbers[cid] <= s.threshold)


class TestFig8Toy:
    """Partial-overlap layout: 5 cards B-only, 4 cards BS, 3 cards S-only."""

    def setup_method(self):
        spec = {f"b{i}": {"B"} for i in range(5)}
        spec.update({f"m{i}": {"B", "S"} for i in range(4)})
        spec.update({f"s{i}": {"S"} for i in range(3)})
        self.csd = _csd(spec)
        self.assignment = assign_numbers("8675309", list(spec))
        self.b_cards = [c for c, st in spec.items() if "B" in st]
        self.s_cards = [c for c, st in spec.items() if "S" in st]

    def test_samples_are_lowest_numbered_per_contest(self):
        b = consistent_sample(self.assignment, self.csd, "B", 5)
        s = consistent_sample(self.assignment, self.csd, "S", 2)
        assert list(b.card_ids) == self.assignment.sorted_ids(self.b_cards)[:5]
        assert list(s.card_ids) == self.assignment.sorted_ids(self.s_cards)[:2]

    def test_shared_card_serves_both_contests(self):
        b = consistent_sample(self.assignment, self.csd, "B", 5)
        s = consistent_sample(self.assignment, self.csd, "S", 2)
        for cid in set(self.b_cards) & set(self.s_cards):
            number = self.assignment.numbers[cid]
            if number <= b.threshold and number <= s.threshold:
                assert cid in b.card_ids and cid in s.card_ids


class TestRetrievalList:
    def _manifest(self):
        cards = [CardRef.located(2, 1, 5), CardRef.located(1, 3, 2),
                 CardRef.located(1, 2, 9), CardRef.phantom("phantom:K:1")]
        return Manifest(tuple(cards), 1, 4)

    def test_dedup_sort_and_phantoms_last(self):
        manifest = self._manifest()
        from rlacsd.sampling import ContestSample
        s1 = ContestSample("B", 2, 0.5, ("1:3:2", "2:1:5"))
        s2 = ContestSample("S", 3, 0.9, ("1:3:2", "phantom:K:1", "1:2:9"))
        refs = retrieval_list([s1, s2], manifest)
        assert [c.card_id for c in refs] == ["1:2:9", "1:3:2", "2:1:5", "phantom:K:1"]

    def test_already_audited_excluded(self):
        manifest = self._manifest()
        from rlacsd.sampling import ContestSample
        s1 = ContestSample("B", 2, 0.5, ("1:3:2", "2:1:5"))
        refs = retrieval_list([s1], manifest, audited={"1:3:2", "2:1:5"})
        assert refs == []


class TestWithReplacement:
    csd = _csd({f"c{i}": {"K"} for i in range(10)})

    def test_first_draw_is_smallest_first_index_number(self):
        draws = with_replacement_draws("246810", self.csd, "K", 1)
        first_numbers = {cid: unit_interval_number("246810", cid, 1)
                         for cid in self.csd.styles}
        assert draws == [min(first_numbers, key=first_numbers.get)]

    def test_prefix_property(self):
        for k in (1, 5, 20, 99):
            small = with_replacement_draws("13", self.csd, "K", k)
            big = with_replacement_draws("13", self.csd, "K", k + 1)
            assert big[:k] == small

    def test_repeats_possible_and_counts_match(self):
        sample, counts = with_replacement_sample("13", self.csd, "K", 200)
        assert sum(counts.values()) == 200
        assert max(counts.values()) > 1

    def test_uniform_across_cards_chi_square(self):
        draws = with_replacement_draws("314159", self.csd, "K", 100_000)
        counts = Counter(draws)
        expected = 100_000 / 10
        chi2 = sum((counts.get(f"c{i}", 0) - expected) ** 2 / expected
                   for i in range(10))
        assert chi2 < stats.chi2.ppf(0.99, 9)

    def test_thresholds_nondecreasing(self):
        sample5, _ = with_replacement_sample("99", self.csd, "K", 5)
        sample9, _ = with_replacement_sample("99", self.csd, "K", 9)
        assert sample5.threshold <= sample9.threshold
