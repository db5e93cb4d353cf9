"""Monte Carlo validation: synthetic elections and simulated audits.

Used by the validation hooks and the acceptance suite to check the closed
forms against the behaviour of the full sampling and audit machinery, and
to exercise the risk-limit guarantee on elections whose reported outcome is
wrong.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from . import engine as eng
from .formulas import Layout, S4Params, TwoContestConfig
from .model import CardRef, CardStyleTable, Contest, Cvr, Manifest


def simulate_bravo_sample_mean(alpha: float, margin: float, trials: int,
                               seed: int, block: int = 2048) -> float:
    """Mean ballots until the polling test statistic reaches 1/alpha.

    Independent of the ASN formulas: draws i.i.d. ballots with the winner's
    share (1+margin)/2 and accumulates log-likelihood steps until crossing.
    """
    s_w = (1.0 + margin) / 2.0
    up, down = math.log(2.0 * s_w), math.log(2.0 * (1.0 - s_w))
    goal = math.log(1.0 / alpha)
    rng = np.random.default_rng(seed)
    totals = np.empty(trials)
    for i in range(trials):
        offset = 0.0
        drawn = 0
        while True:
            steps = np.where(rng.random(block) < s_w, up, down)
            walk = offset + np.cumsum(steps)
            hits = np.nonzero(walk >= goal)[0]
            if hits.size:
                totals[i] = drawn + hits[0] + 1
                break
            offset = walk[-1]
            drawn += block
    return float(totals.mean())


# ---------------------------------------------------------------------------
# synthetic two-contest elections


@dataclass
class SyntheticElection:
    manifest: Manifest
    csd: CardStyleTable
    cvrs: dict[str, Cvr]
    contests: list[Contest]
    truth: dict[str, dict[str, frozenset[str]]]  # card -> contest -> selection

    def reader(self):
        """An audit board that reads the true card contents."""
        def read(ref: CardRef, style: frozenset[str]) -> eng.Interpretation:
            actual = self.truth.get(ref.card_id, {})
            readings = {k: actual.get(k, None) for k in style}
            return eng.Interpretation(card_id=ref.card_id, readings=readings)
        return read


def _split_votes(n: int, margin: float) -> tuple[int, int]:
    winner = round(n * (1.0 + margin) / 2.0)
    return winner, n - winner


def build_two_contest_election(n_ballots: int, p: float, c: int, layout: Layout,
                               m_b: float, m_s: float, alpha: float = 0.05,
                               flipped_b: int = 0) -> SyntheticElection:
    """B on card 1 of every ballot; S on the first round(p*N) ballots.

    Every contest vote is recorded in the CVRs; ``flipped_b`` cards reported
    for B's winner actually show the loser (2-vote overstatements), which
    also flips the true outcome when it exceeds half the margin.
    """
    n_s_cards = round(p * n_ballots)
    s_card_index = 1 if layout is Layout.SAME_CARD else 2
    if layout is Layout.DIFFERENT_CARDS and c < 2:
        raise ValueError("different-card layout needs at least 2 cards per ballot")

    w_b, l_b = _split_votes(n_ballots, m_b)
    w_s, l_s = _split_votes(n_s_cards, m_s) if n_s_cards else (0, 0)

    cards: list[CardRef] = []
    styles: dict[str, frozenset[str]] = {}
    cvrs: dict[str, Cvr] = {}
    truth: dict[str, dict[str, frozenset[str]]] = {}
    b_cast = s_cast = 0
    for ballot in range(n_ballots):
        for page in range(1, c + 1):
            ref = CardRef.located(1 + ballot // 1000, 1 + (ballot // 100) % 10,
                                  (ballot % 100) * 10 + page)
            style = set()
            interp: dict[str, frozenset[str]] = {}
            if page == 1:
                style.add("B")
                interp["B"] = frozenset({"Bw" if b_cast < w_b else "Bl"})
                b_cast += 1
            if ballot < n_s_cards and page == min(s_card_index, c):
                style.add("S")
                interp["S"] = frozenset({"Sw" if s_cast < w_s else "Sl"})
                s_cast += 1
            if not style:
                continue
            cards.append(ref)
            styles[ref.card_id] = frozenset(style)
            cvrs[ref.card_id] = Cvr(ref.card_id, interp)
            truth[ref.card_id] = dict(interp)

    flipped = 0
    for ref in cards:
        if flipped >= flipped_b:
            break
        if truth[ref.card_id].get("B") == frozenset({"Bw"}):
            truth[ref.card_id]["B"] = frozenset({"Bl"})
            flipped += 1

    contests = [
        Contest(id="B", name="big", candidates=("Bw", "Bl"),
                reported_tally={"Bw": w_b, "Bl": l_b},
                risk_limit=alpha, card_upper_bound=n_ballots),
    ]
    if n_s_cards:
        contests.append(
            Contest(id="S", name="small", candidates=("Sw", "Sl"),
                    reported_tally={"Sw": w_s, "Sl": l_s},
                    risk_limit=alpha, card_upper_bound=n_s_cards))
    manifest = Manifest(tuple(cards), cards_per_ballot=c, ballot_count=n_ballots)
    return SyntheticElection(manifest, CardStyleTable(styles), cvrs, contests, truth)


def simulated_csd_retrievals(config: TwoContestConfig, params: S4Params,
                             n_ballots: int, seeds: list[str]) -> list[int]:
    """Round-1 retrieval-list sizes for a clean audit, one per seed."""
    election = build_two_contest_election(n_ballots, config.p, config.c,
                                          config.layout, config.m_b, config.m_s,
                                          alpha=params.alpha)
    out = []
    for seed in seeds:
        audit_config = eng.AuditConfig(
            method=eng.AuditMethod.BALLOT_COMPARISON, seed=seed,
            sampling=eng.SamplingMode.WITHOUT_REPLACEMENT,
            gamma=params.gamma, overstatement_rate=params.overstatement_rate)
        state = eng.initialize_audit(audit_config, election.manifest, election.csd,
                                     election.cvrs, election.contests)
        rnd = eng.plan_round(state)
        out.append(len(rnd.retrieval))
    return out


def blind_retrievals(config: TwoContestConfig, params: S4Params,
                     n_ballots: int, seed: str) -> int:
    """Retrieval count when styles are unknown: every card may hold anything.

    Modeled as a style table that lists both contests on every card, with
    bounds equal to the whole card population, so margins fully dilute.
    """
    election = build_two_contest_election(n_ballots, config.p, config.c,
                                          config.layout, config.m_b, config.m_s,
                                          alpha=params.alpha)
    total = n_ballots * config.c
    cards: list[CardRef] = []
    styles: dict[str, frozenset[str]] = {}
    cvrs: dict[str, Cvr] = {}
    every = frozenset({"B", "S"})
    for ballot in range(n_ballots):
        for page in range(1, config.c + 1):
            ref = CardRef.located(1 + ballot // 1000, 1 + (ballot // 100) % 10,
                                  (ballot % 100) * 10 + page)
            cards.append(ref)
            styles[ref.card_id] = every
            old = election.cvrs.get(ref.card_id)
            interp = dict(old.interpretations) if old else {}
            cvrs[ref.card_id] = Cvr(ref.card_id, interp)
    contests = [
        Contest(id=k.id, name=k.name, candidates=k.candidates,
                reported_tally=k.reported_tally, risk_limit=k.risk_limit,
                card_upper_bound=total)
        for k in election.contests]
    manifest = Manifest(tuple(cards), cards_per_ballot=config.c,
                        ballot_count=n_ballots)
    audit_config = eng.AuditConfig(
        method=eng.AuditMethod.BALLOT_COMPARISON, seed=seed,
        sampling=eng.SamplingMode.WITHOUT_REPLACEMENT,
        gamma=params.gamma, overstatement_rate=params.overstatement_rate)
    state = eng.initialize_audit(audit_config, manifest, CardStyleTable(styles),
                                 cvrs, contests)
    rnd = eng.plan_round(state)
    return len(rnd.retrieval)


def wrong_outcome_certified(method: eng.AuditMethod, seed: str,
                            n_cards: int = 400, reported_margin: float = 0.1,
                            true_winner_share: float = 0.48,
                            alpha: float = 0.05) -> bool:
    """Run one full audit of a single contest whose reported winner lost.

    Returns True when the audit (wrongly) confirms the reported outcome.
    For comparison audits the CVRs carry the reported result and the paper
    trail carries the truth, so the mismatches surface as 2-vote
    overstatements during the audit.
    """
    w_rep, l_rep = _split_votes(n_cards, reported_margin)
    w_true = round(true_winner_share * n_cards)
    assert 2 * w_true < n_cards, "true winner share must lose"
    flips = w_rep - w_true

    cards = []
    styles = {}
    cvrs = {}
    truth = {}
    flipped = 0
    for i in range(n_cards):
        ref = CardRef.located(1 + i // 100, 1 + (i // 10) % 10, i % 10)
        cards.append(ref)
        styles[ref.card_id] = frozenset({"B"})
        reported = frozenset({"Bw" if i < w_rep else "Bl"})
        cvrs[ref.card_id] = Cvr(ref.card_id, {"B": reported})
        actual = reported
        # spread the misreported cards evenly through the reported winners
        if reported == frozenset({"Bw"}) and flipped < flips and i % max(1, w_rep // max(flips, 1)) == 0:
            actual = frozenset({"Bl"})
            flipped += 1
        truth[ref.card_id] = {"B": actual}
    # guarantee exactly `flips` misreported cards
    for ref in cards:
        if flipped >= flips:
            break
        if cvrs[ref.card_id].interpretations["B"] == frozenset({"Bw"}) \
                and truth[ref.card_id]["B"] == frozenset({"Bw"}):
            truth[ref.card_id]["B"] = frozenset({"Bl"})
            flipped += 1

    contest = Contest(id="B", name="big", candidates=("Bw", "Bl"),
                      reported_tally={"Bw": w_rep, "Bl": l_rep},
                      risk_limit=alpha, card_upper_bound=n_cards)
    manifest = Manifest(tuple(cards), cards_per_ballot=1, ballot_count=n_cards)
    csd = CardStyleTable(styles)
    config = eng.AuditConfig(method=method, seed=seed, gamma=1.03905,
                             overstatement_rate=0.001)
    state = eng.initialize_audit(config, manifest, csd,
                                 cvrs if method is eng.AuditMethod.BALLOT_COMPARISON else {},
                                 [contest])

    def read(ref: CardRef, style: frozenset[str]) -> eng.Interpretation:
        return eng.Interpretation(card_id=ref.card_id,
                                  readings={k: truth[ref.card_id].get(k)
                                            for k in style})

    eng.run_audit(state, read)
    return state.progress["B"].status is eng.ContestStatus.CONFIRMED
