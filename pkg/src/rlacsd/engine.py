"""Multi-round audit engine.

The procedure, per audited contest k with risk limit alpha_k:

1. Abort if more CVRs contain k than the upper bound on cards containing k.
2. Add phantom CVRs until the CVR count reaches the bound.
3. Add phantom cards until the number of located cards reaches the bound.
4. Assign a seeded pseudo-random number to every card containing a contest
   under audit, phantoms included (several numbers per card when sampling
   with replacement).
5. While any contest is active: pick cumulative sample sizes, choose
   thresholds so each contest's sample is its lowest-numbered cards,
   retrieve the not-yet-audited cards, record the audit board's readings,
   update measured risks, and retire contests at or under their limits.

Phantom cards and cards that cannot be found are scored in the way that
casts the most doubt: a 2-vote overstatement for every contest the card was
supposed to contain (comparison), or a loser ballot in every pairwise test
(polling).  A real card with no matching CVR is compared against an implied
non-vote CVR.

Escalation: the next cumulative size re-plans from the observed
overstatement rate (never below the configured rate), with a floor of
``escalation_factor`` times the previous size so the audit always makes
progress.  A plan that reaches the contest's card population converts the
contest to a full hand count.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional

from . import model
from .errors import (
    AuditError,
    OutcomeNotConfirmableError,
    RhoUndefinedError,
    RoundIncompleteError,
    RoundStateError,
    UnexpectedCardError,
)
from .formulas import (
    GAMMA_DEFAULT,
    DiscrepancyCounts,
    S4Params,
    bravo_asn,
    km_risk,
    s4_sample_size,
    sprt_risk,
)
from .model import CardRef, CardStyleTable, Contest, Cvr, Manifest, MarginSet
from .sampling import ReplacementSampler, SeededAssignment, assign_numbers


class AuditMethod(str, enum.Enum):
    BALLOT_COMPARISON = "BALLOT_COMPARISON"
    BALLOT_POLLING = "BALLOT_POLLING"


class SamplingMode(str, enum.Enum):
    WITHOUT_REPLACEMENT = "WITHOUT_REPLACEMENT"
    WITH_REPLACEMENT = "WITH_REPLACEMENT"


class ContestStatus(str, enum.Enum):
    ACTIVE = "ACTIVE"
    CONFIRMED = "CONFIRMED"
    FULL_COUNT = "FULL_COUNT"


@dataclass(frozen=True)
class AuditConfig:
    method: AuditMethod
    seed: str
    sampling: Optional[SamplingMode] = None
    gamma: float = GAMMA_DEFAULT
    overstatement_rate: float = 0.001
    escalation_factor: float = 1.25

    def __post_init__(self):
        if not self.seed or not str(self.seed).isdigit():
            raise AuditError("seed must be a non-empty decimal digit string")
        if self.sampling is None:
            # polling assumes i.i.d. draws; comparison is conservative either way
            default = (SamplingMode.WITH_REPLACEMENT
                       if self.method is AuditMethod.BALLOT_POLLING
                       else SamplingMode.WITHOUT_REPLACEMENT)
            object.__setattr__(self, "sampling", default)
        if self.escalation_factor <= 1:
            raise AuditError("escalation_factor must exceed 1")

    @classmethod
    def from_dict(cls, d: Mapping) -> "AuditConfig":
        return cls(
            method=AuditMethod(d["method"]),
            seed=str(d["seed"]),
            sampling=SamplingMode(d["sampling"]) if d.get("sampling") else None,
            gamma=float(d.get("gamma", GAMMA_DEFAULT)),
            overstatement_rate=float(d.get("overstatement_rate", 0.001)),
            escalation_factor=float(d.get("escalation_factor", 1.25)),
        )

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "seed": self.seed,
            "sampling": self.sampling.value,
            "gamma": self.gamma,
            "overstatement_rate": self.overstatement_rate,
            "escalation_factor": self.escalation_factor,
        }


CONTEST_NOT_ON_CARD = None  # manual reading: the card does not show the contest


@dataclass(frozen=True)
class Interpretation:
    """The audit board's reading of one card.

    ``readings`` maps contest id to the selected candidates (empty set for
    no selection) or ``None`` for "contest not on this card".  ``not_found``
    marks a card that could not be retrieved; phantoms are always treated
    as not found regardless of what is submitted.
    """

    card_id: str
    not_found: bool = False
    readings: Mapping[str, Optional[frozenset[str]]] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: Mapping) -> "Interpretation":
        readings: dict[str, Optional[frozenset[str]]] = {}
        for contest, rec in (d.get("readings") or {}).items():
            if rec == "CONTEST_NOT_ON_CARD":
                readings[contest] = None
            elif rec == "NO_SELECTION":
                readings[contest] = frozenset()
            elif isinstance(rec, dict) and isinstance(rec.get("selected"), list):
                readings[contest] = frozenset(rec["selected"])
            else:
                raise AuditError(f"bad reading for contest {contest!r}: {rec!r}")
        return cls(card_id=d["card_id"], not_found=bool(d.get("not_found", False)),
                   readings=readings)

    def to_dict(self) -> dict:
        readings = {}
        for contest in sorted(self.readings):
            rec = self.readings[contest]
            if rec is None:
                readings[contest] = "CONTEST_NOT_ON_CARD"
            elif not rec:
                readings[contest] = "NO_SELECTION"
            else:
                readings[contest] = {"selected": sorted(rec)}
        return {"card_id": self.card_id, "not_found": self.not_found,
                "readings": readings}


def _pair_contribution(selection: Optional[frozenset[str]], winner: str, loser: str,
                       num_winners: int) -> int:
    """Margin contribution of one selection record for a (winner, loser) pair."""
    if not selection:  # absent contest, no CVR, or no selection
        return 0
    if len(selection) > num_winners:  # overvote: no valid vote
        return 0
    if winner in selection and loser not in selection:
        return 1
    if loser in selection and winner not in selection:
        return -1
    return 0


def score_comparison(cvr: Optional[Cvr], manual: Interpretation, contest: Contest,
                     pair: tuple[str, str]) -> int:
    """Overstatement of the reported (winner, loser) margin on one card.

    The CVR's contribution minus the manual reading's contribution, each in
    {-1, 0, 1}.  A missing CVR counts as a non-vote and is floored at zero
    (no credit for understatements against a record that never existed).
    A manual reading of "contest not on card" contributes zero; the caller
    flags the card-style error separately.
    """
    winner, loser = pair
    manual_sel = manual.readings.get(contest.id)
    manual_contrib = _pair_contribution(manual_sel, winner, loser, contest.num_winners)
    if cvr is None:
        return max(0, 0 - manual_contrib)
    cvr_contrib = _pair_contribution(cvr.interpretations.get(contest.id),
                                     winner, loser, contest.num_winners)
    return cvr_contrib - manual_contrib


@dataclass
class _ContestState:
    contest: Contest
    margins: MarginSet
    population: int          # cards that (reportedly) contain the contest
    status: ContestStatus = ContestStatus.ACTIVE
    cumulative_size: int = 0
    measured_risk: float = 1.0
    counts: DiscrepancyCounts = field(default_factory=lambda: DiscrepancyCounts(0))
    csd_errors: int = 0
    pair_stats: dict = field(default_factory=dict)  # (w,l) -> T statistic

    @property
    def mu(self) -> float:
        return self.margins.fully_diluted(self.population)


@dataclass
class Round:
    number: int
    sizes: dict[str, int]                  # contest -> cumulative draws
    thresholds: dict[str, float]
    new_full_count: list[str]
    retrieval: list[CardRef]
    interpretations: dict[str, Interpretation] = field(default_factory=dict)
    result: Optional[dict] = None

    @property
    def finalized(self) -> bool:
        return self.result is not None


class AuditState:
    """Everything the audit knows; mutated only through the round API."""

    def __init__(self, config: AuditConfig, manifest: Manifest, csd: CardStyleTable,
                 cvrs: Mapping[str, Cvr], contests: Iterable[Contest],
                 phantom_cvrs: Mapping[str, int], phantom_cards: Mapping[str, tuple[str, ...]]):
        self.config = config
        self.manifest = manifest
        self.csd = csd
        self.cvrs = dict(cvrs)
        self.contests: dict[str, Contest] = {c.id: c for c in contests}
        self.phantom_cvrs = dict(phantom_cvrs)
        self.phantom_cards = {k: tuple(v) for k, v in phantom_cards.items()}
        self.rounds: list[Round] = []
        self._wr_samplers: dict[str, ReplacementSampler] = {}

        audited_cards = sorted({cid for k in self.contests
                                for cid in csd.cards_for(k)})
        self.assignment: SeededAssignment = assign_numbers(config.seed, audited_cards)
        self._order = {k: self.assignment.sorted_ids(csd.cards_for(k))
                       for k in self.contests}

        self.progress: dict[str, _ContestState] = {}
        for contest in self.contests.values():
            margins = model.contest_margins(contest)
            pop = csd.count_for(contest.id)
            cs = _ContestState(contest, margins, pop)
            if config.method is AuditMethod.BALLOT_POLLING:
                cs.pair_stats = {(p.winner, p.loser): 1.0 for p in margins.pairs}
            self.progress[contest.id] = cs

    # -- round bookkeeping ---------------------------------------------------

    @property
    def active_contests(self) -> list[str]:
        return [k for k, cs in self.progress.items() if cs.status is ContestStatus.ACTIVE]

    @property
    def complete(self) -> bool:
        return not self.active_contests

    @property
    def open_round(self) -> Optional[Round]:
        if self.rounds and not self.rounds[-1].finalized:
            return self.rounds[-1]
        return None

    def all_interpretations(self) -> dict[str, Interpretation]:
        out: dict[str, Interpretation] = {}
        for rnd in self.rounds:
            out.update(rnd.interpretations)
        return out

    def _wr_sampler(self, contest_id: str) -> ReplacementSampler:
        if contest_id not in self._wr_samplers:
            self._wr_samplers[contest_id] = ReplacementSampler(
                self.config.seed, self.csd.cards_for(contest_id))
        return self._wr_samplers[contest_id]

    def _draw_sequence(self, contest_id: str, k: int) -> list[str]:
        """First k draws for a contest (with multiplicity when WR)."""
        if self.config.sampling is SamplingMode.WITHOUT_REPLACEMENT:
            return self._order[contest_id][:k]
        sampler = self._wr_sampler(contest_id)
        sampler.extend(k)
        return sampler.draws[:k]

    def _threshold(self, contest_id: str, k: int) -> float:
        if k == 0:
            return 0.0
        if self.config.sampling is SamplingMode.WITHOUT_REPLACEMENT:
            return self.assignment.numbers[self._order[contest_id][k - 1]]
        sampler = self._wr_sampler(contest_id)
        sampler.extend(k)
        return sampler.threshold(k)

    def next_sample_size(self, contest_id: str) -> int:
        """Planned cumulative draws for the next round (uncapped)."""
        cs = self.progress[contest_id]
        contest = cs.contest
        if self.config.method is AuditMethod.BALLOT_COMPARISON:
            observed = ((cs.counts.n1 + 2 * cs.counts.n2) / cs.counts.n
                        if cs.counts.n else 0.0)
            rate = max(self.config.overstatement_rate, observed)
            params = S4Params(alpha=contest.risk_limit, gamma=self.config.gamma,
                              overstatement_rate=rate)
            try:
                target = s4_sample_size(params, cs.mu)
            except RhoUndefinedError:
                target = cs.population  # anticipated errors overwhelm the margin
        else:
            target = 0
            tallies = contest.reported_tally
            for pair in cs.margins.pairs:
                votes = tallies[pair.winner] + tallies[pair.loser]
                m = pair.margin_votes / votes
                need = bravo_asn(contest.risk_limit, m, exact=True) * cs.population / votes
                target = max(target, math.ceil(need))
        if cs.cumulative_size:
            target = max(target,
                         math.ceil(self.config.escalation_factor * cs.cumulative_size))
        return max(int(target), 1)


def initialize_audit(config: AuditConfig, manifest: Manifest, csd: CardStyleTable,
                     cvrs: Mapping[str, Cvr], contests: Iterable[Contest]) -> AuditState:
    """Steps 1-5: bound checks, phantoms, numbering, all contests active."""
    contests = list(contests)
    phantom_cvrs: dict[str, int] = {}
    phantom_cards: dict[str, list[str]] = {}
    extra_refs: list[CardRef] = []
    extra_styles: dict[str, frozenset[str]] = {}

    for contest in contests:
        if config.method is AuditMethod.BALLOT_COMPARISON:
            cvr_count = sum(1 for c in cvrs.values() if contest.id in c.interpretations)
            if cvr_count > contest.card_upper_bound:
                raise OutcomeNotConfirmableError(
                    f"contest {contest.id}: {cvr_count} CVRs exceed the upper bound "
                    f"{contest.card_upper_bound} on cards containing the contest",
                    contest=contest.id, cvr_count=cvr_count,
                    bound=contest.card_upper_bound)
            phantom_cvrs[contest.id] = contest.card_upper_bound - cvr_count
        located = csd.count_for(contest.id)
        missing = max(0, contest.card_upper_bound - located)
        ids = [f"phantom:{contest.id}:{i}" for i in range(1, missing + 1)]
        phantom_cards[contest.id] = ids
        for cid in ids:
            extra_refs.append(CardRef.phantom(cid))
            extra_styles[cid] = frozenset({contest.id})

    return AuditState(
        config=config,
        manifest=manifest.with_phantoms(extra_refs),
        csd=csd.with_entries(extra_styles),
        cvrs=cvrs,
        contests=contests,
        phantom_cvrs=phantom_cvrs,
        phantom_cards=phantom_cards,
    )


def plan_round(state: AuditState) -> Round:
    """Pick cumulative sizes and thresholds; list the cards left to inspect."""
    if state.open_round is not None:
        raise RoundStateError("previous round not finalized")
    if state.complete:
        raise RoundStateError("audit complete; no active contests")

    sizes: dict[str, int] = {}
    thresholds: dict[str, float] = {}
    full_count: list[str] = []
    wanted: set[str] = set()
    for contest_id in state.active_contests:
        cs = state.progress[contest_id]
        target = state.next_sample_size(contest_id)
        if target >= cs.population:
            cs.status = ContestStatus.FULL_COUNT
            full_count.append(contest_id)
            continue
        sizes[contest_id] = target
        thresholds[contest_id] = state._threshold(contest_id, target)
        wanted.update(state._draw_sequence(contest_id, target))

    audited = set(state.all_interpretations())
    retrieval = sorted((state.manifest.by_id[cid] for cid in wanted - audited),
                       key=lambda c: c.sort_key)
    rnd = Round(number=len(state.rounds) + 1, sizes=sizes, thresholds=thresholds,
                new_full_count=sorted(full_count), retrieval=retrieval)
    state.rounds.append(rnd)
    return rnd


def record_interpretation(state: AuditState, interp: Interpretation) -> None:
    rnd = state.open_round
    if rnd is None:
        raise RoundStateError("no open round")
    allowed = {c.card_id for c in rnd.retrieval}
    if interp.card_id not in allowed:
        raise UnexpectedCardError(f"card {interp.card_id} is not in this round's "
                                  f"retrieval list", card_id=interp.card_id)
    if interp.card_id in rnd.interpretations:
        raise UnexpectedCardError(f"card {interp.card_id} already recorded this round",
                                  card_id=interp.card_id)
    ref = state.manifest.by_id[interp.card_id]
    if not interp.not_found and not ref.is_phantom:
        # the board must read every audited contest the card is supposed to
        # contain; "contest not on card" is an explicit reading, not a gap
        needed = state.csd.styles.get(interp.card_id, frozenset()) & set(rnd.sizes)
        gaps = sorted(needed - set(interp.readings))
        if gaps:
            raise AuditError(f"card {interp.card_id}: no reading for contests {gaps}",
                             card_id=interp.card_id, contests=gaps)
    rnd.interpretations[interp.card_id] = interp


def _score_contest_comparison(state: AuditState, contest_id: str, draws: list[str],
                              interps: Mapping[str, Interpretation]) -> tuple[DiscrepancyCounts, int]:
    cs = state.progress[contest_id]
    contest = cs.contest
    pairs = [(p.winner, p.loser) for p in cs.margins.pairs]
    n1 = n2 = u1 = u2 = csd_errors = 0
    for card_id in draws:
        ref = state.manifest.by_id[card_id]
        interp = interps[card_id]
        if ref.is_phantom or interp.not_found:
            n2 += 1  # worst case: 2-vote overstatement
            continue
        cvr = state.cvrs.get(card_id)
        if cvr is not None and interp.readings.get(contest.id, "") is None:
            # manual says the contest is not on a card the CVR put it on
            csd_errors += 1
        d = max(score_comparison(cvr, interp, contest, pair) for pair in pairs)
        if d == 1:
            n1 += 1
        elif d == 2:
            n2 += 1
        elif d == -1:
            u1 += 1
        elif d == -2:
            u2 += 1
    return DiscrepancyCounts(len(draws), n1, n2, u1, u2), csd_errors


def _score_contest_polling(state: AuditState, contest_id: str, draws: list[str],
                           interps: Mapping[str, Interpretation]) -> tuple[dict, int]:
    cs = state.progress[contest_id]
    contest = cs.contest
    tallies = contest.reported_tally
    csd_errors = 0
    winner_counts = {key: 0 for key in cs.pair_stats}
    loser_counts = {key: 0 for key in cs.pair_stats}
    for card_id in draws:
        ref = state.manifest.by_id[card_id]
        interp = interps[card_id]
        if ref.is_phantom or interp.not_found:
            for key in loser_counts:  # most doubt: a loser ballot everywhere
                loser_counts[key] += 1
            continue
        sel = interp.readings.get(contest.id)
        if sel is None:
            csd_errors += 1
            continue
        for winner, loser in winner_counts:
            contrib = _pair_contribution(sel, winner, loser, contest.num_winners)
            if contrib == 1:
                winner_counts[(winner, loser)] += 1
            elif contrib == -1:
                loser_counts[(winner, loser)] += 1
    stats = {}
    for (winner, loser) in winner_counts:
        s_w = tallies[winner] / (tallies[winner] + tallies[loser])
        t = ((2.0 * s_w) ** winner_counts[(winner, loser)]
             * (2.0 * (1.0 - s_w)) ** loser_counts[(winner, loser)])
        stats[(winner, loser)] = t
    return stats, csd_errors


def finalize_round(state: AuditState) -> dict:
    """Recompute measured risk for every planned contest and retire winners."""
    rnd = state.open_round
    if rnd is None:
        raise RoundStateError("no open round")
    missing = sorted({c.card_id for c in rnd.retrieval} - set(rnd.interpretations))
    if missing:
        raise RoundIncompleteError(
            f"{len(missing)} cards lack interpretations", missing=missing)

    interps = state.all_interpretations()
    result: dict[str, dict] = {}
    for contest_id, size in rnd.sizes.items():
        cs = state.progress[contest_id]
        draws = state._draw_sequence(contest_id, size)
        if state.config.method is AuditMethod.BALLOT_COMPARISON:
            counts, csd_errors = _score_contest_comparison(state, contest_id, draws, interps)
            risk = km_risk(cs.mu, state.config.gamma, counts)
            cs.counts = counts
        else:
            stats, csd_errors = _score_contest_polling(state, contest_id, draws, interps)
            risk = max(sprt_risk(t) for t in stats.values())
            cs.pair_stats = stats
            cs.counts = DiscrepancyCounts(len(draws))
        cs.cumulative_size = size
        cs.measured_risk = risk
        cs.csd_errors = csd_errors
        if risk <= cs.contest.risk_limit:
            cs.status = ContestStatus.CONFIRMED
        result[contest_id] = {
            "risk": risk,
            "status": cs.status.value,
            "draws": size,
            "n1": cs.counts.n1, "n2": cs.counts.n2,
            "u1": cs.counts.u1, "u2": cs.counts.u2,
            "csd_errors": csd_errors,
        }
    rnd.result = result
    return result


def audit_status(state: AuditState) -> dict:
    """Status report; pure, safe to call at any time."""
    contests = {}
    for contest_id, cs in state.progress.items():
        entry = {
            "status": cs.status.value,
            "measured_risk": cs.measured_risk,
            "risk_limit": cs.contest.risk_limit,
            "draws": cs.cumulative_size,
            "population": cs.population,
            "governing_margin": cs.mu,
            "phantom_cards": len(state.phantom_cards.get(contest_id, ())),
            "phantom_cvrs": state.phantom_cvrs.get(contest_id, 0),
            "discrepancies": {"n1": cs.counts.n1, "n2": cs.counts.n2,
                              "u1": cs.counts.u1, "u2": cs.counts.u2},
            "csd_errors": cs.csd_errors,
        }
        if cs.status is ContestStatus.ACTIVE:
            entry["next_sample_size"] = min(state.next_sample_size(contest_id),
                                            cs.population)
        if cs.status is ContestStatus.FULL_COUNT:
            entry["hand_count"] = {"cards_to_count": cs.population,
                                   "audited_so_far": cs.cumulative_size}
        contests[contest_id] = entry
    inspected = {cid for cid, interp in state.all_interpretations().items()
                 if not interp.not_found}
    return {
        "complete": state.complete,
        "rounds": sum(1 for r in state.rounds if r.finalized),
        "cards_inspected": len(inspected),
        "cards_drawn": len(state.all_interpretations()),
        "contests": contests,
    }


def run_audit(state: AuditState,
              reader: Callable[[CardRef, frozenset[str]], Interpretation],
              max_rounds: int = 50) -> AuditState:
    """Drive the audit to completion with an automated card reader.

    Phantom cards are recorded as not found without consulting the reader.
    """
    for _ in range(max_rounds):
        if state.open_round is None:
            if state.complete:
                break
            plan_round(state)
        rnd = state.open_round
        for ref in rnd.retrieval:
            if ref.card_id in rnd.interpretations:
                continue
            if ref.is_phantom:
                interp = Interpretation(card_id=ref.card_id, not_found=True)
            else:
                interp = reader(ref, state.csd.styles.get(ref.card_id, frozenset()))
            record_interpretation(state, interp)
        finalize_round(state)
    return state
