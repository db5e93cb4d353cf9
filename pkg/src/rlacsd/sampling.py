"""Seeded card numbering and consistent sampling.

Every card gets a pseudo-random number in [0,1) derived from a 256-bit
cryptographic hash of ``seed:card_id``: the first 8 digest bytes, read
big-endian, divided by 2**64.  The construction is deliberately simple so
any independent implementation can reproduce the audit bit-for-bit from the
published seed.  Ties (already astronomically unlikely) break by card id,
so the ordering is always strict.

A contest's sample of size S is simply its S lowest-numbered cards.  Because
every contest reads the same per-card numbers, a card below two contests'
thresholds serves both samples, and nested sample sizes reuse all earlier
draws (escalation never wastes work).

For sampling with replacement each card instead carries an unbounded
increasing sequence of numbers ("tickets"): the first is the hash number for
index 1, and each later ticket is drawn uniformly from the interval between
its predecessor and 1, driven by the hash number for the next index.  The k
draws are the k smallest tickets across all cards, so a card can repeat.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Mapping, Optional, Sequence

from .errors import FullCountRequiredError
from .model import CardRef, CardStyleTable, Manifest

_TWO_64 = 2**64


def unit_interval_number(seed: str, card_id: str, index: Optional[int] = None) -> float:
    """Hash-derived number in [0,1); ``index`` selects the replacement stream."""
    preimage = f"{seed}:{card_id}" if index is None else f"{seed}:{card_id}:{index}"
    digest = hashlib.sha256(preimage.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / _TWO_64


def number_to_decimal(x: float) -> str:
    """20-digit decimal fraction; round-trips the underlying 64-bit value."""
    return f"{Decimal(round(x * _TWO_64)) / Decimal(_TWO_64):.20f}"


@dataclass(frozen=True)
class SeededAssignment:
    """One number per card for a given published seed."""

    seed: str
    numbers: Mapping[str, float]

    def order_key(self, card_id: str):
        return (self.numbers[card_id], card_id)

    def sorted_ids(self, card_ids: Iterable[str]) -> list[str]:
        return sorted(card_ids, key=self.order_key)


def assign_numbers(seed: str, card_ids: Iterable[str]) -> SeededAssignment:
    if not seed:
        raise ValueError("seed must be non-empty")
    ids = list(card_ids)
    if len(set(ids)) != len(ids):
        raise ValueError("card ids must be distinct")
    return SeededAssignment(seed, {cid: unit_interval_number(seed, cid) for cid in ids})


def assignment_to_csv(assignment: SeededAssignment) -> str:
    """``card_id,number`` rows, numbers as 20-digit decimal fractions."""
    out = ["card_id,number"]
    for cid in assignment.sorted_ids(assignment.numbers):
        out.append(f"{cid},{number_to_decimal(assignment.numbers[cid])}")
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class ContestSample:
    contest_id: str
    size: int
    threshold: float
    card_ids: tuple[str, ...]  # ordered by number; repeats possible with replacement

    @property
    def distinct_ids(self) -> frozenset[str]:
        return frozenset(self.card_ids)


def consistent_sample(assignment: SeededAssignment, csd: CardStyleTable,
                      contest_id: str, size: int) -> ContestSample:
    """The ``size`` lowest-numbered cards containing the contest."""
    pool = csd.cards_for(contest_id)
    if size > len(pool):
        raise FullCountRequiredError(
            f"contest {contest_id}: requested {size} of {len(pool)} cards",
            contest=contest_id, requested=size, available=len(pool))
    if size == 0:
        return ContestSample(contest_id, 0, 0.0, ())
    chosen = assignment.sorted_ids(pool)[:size]
    return ContestSample(contest_id, size, assignment.numbers[chosen[-1]], tuple(chosen))


def retrieval_list(samples: Sequence[ContestSample], manifest: Manifest,
                   audited: Iterable[str] = ()) -> list[CardRef]:
    """Deduplicated cards to pull, sorted by location, phantoms last."""
    skip = set(audited)
    wanted = {cid for s in samples for cid in s.card_ids} - skip
    return sorted((manifest.by_id[cid] for cid in wanted), key=lambda c: c.sort_key)


def _ticket_keys(seed: str, card_id: str):
    """Strictly increasing ticket keys, one stream per card.

    Ticket j has value t_j where t_1 is the card's first hash number and
    t_{j+1} is uniform on (t_j, 1).  Comparing t directly underflows once
    the gap to 1 drops below float resolution, so the stream yields
    kappa = -ln(1 - t), which orders identically and never saturates.
    """
    u = unit_interval_number(seed, card_id, 1)
    kappa = -math.log1p(-u) if u < 1.0 else math.inf
    index = 1
    while True:
        yield kappa
        index += 1
        u = unit_interval_number(seed, card_id, index)
        kappa += -math.log1p(-u) if u < 1.0 else math.inf


def _ticket_value(kappa: float) -> float:
    return -math.expm1(-kappa)


class ReplacementSampler:
    """Incremental with-replacement draws for one pool of cards.

    Draw j is the j-th smallest ticket across every card's ticket stream;
    extending the draw count never disturbs earlier draws.
    """

    def __init__(self, seed: str, pool: Sequence[str]):
        self._streams = {cid: _ticket_keys(seed, cid) for cid in pool}
        self._heap = [(next(self._streams[cid]), cid) for cid in pool]
        heapq.heapify(self._heap)
        self.draws: list[str] = []
        self.keys: list[float] = []

    def extend(self, k: int) -> None:
        while len(self.draws) < k:
            if not self._heap:
                raise FullCountRequiredError("no cards to draw from", requested=k)
            kappa, cid = heapq.heappop(self._heap)
            self.draws.append(cid)
            self.keys.append(kappa)
            heapq.heappush(self._heap, (next(self._streams[cid]), cid))

    def threshold(self, k: int) -> float:
        return _ticket_value(self.keys[k - 1]) if k else 0.0

    def sample(self, k: int) -> ContestSample:
        self.extend(k)
        return ContestSample("", k, self.threshold(k), tuple(self.draws[:k]))


def with_replacement_draws(seed: str, csd: CardStyleTable, contest_id: str,
                           k: int) -> list[str]:
    """The k with-replacement draws for a contest, in draw order.

    The multiset for k is always a prefix of the one for k+1, and a card
    below two contests' thresholds serves both, as in the one-number case.
    """
    sample, _ = with_replacement_sample(seed, csd, contest_id, k)
    return list(sample.card_ids)


def with_replacement_sample(seed: str, csd: CardStyleTable, contest_id: str,
                            k: int) -> tuple[ContestSample, dict[str, int]]:
    """k draws plus the per-card multiplicity map."""
    if k < 0:
        raise ValueError("draw count must be >= 0")
    pool = csd.cards_for(contest_id)
    if k and not pool:
        raise FullCountRequiredError(f"contest {contest_id} has no cards",
                                     contest=contest_id, requested=k, available=0)
    sampler = ReplacementSampler(seed, pool)
    sample = sampler.sample(k)
    counts: dict[str, int] = {}
    for cid in sample.card_ids:
        counts[cid] = counts.get(cid, 0) + 1
    return ContestSample(contest_id, k, sample.threshold, sample.card_ids), counts
