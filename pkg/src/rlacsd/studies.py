"""Workload studies: figure data grids, county case studies, summary table.

Outputs are data tables (CSV/JSON), not rendered plots.

Figures
-------
* F3: expected draws with and without CSD, one-card ballots, equal margins,
  p from 0.01 to 1; draw counts truncated at 100,000.
* F4: draws without CSD as a percentage of draws with CSD, one-card
  ballots, p from 0.1 to 1; ratio truncated at 1,000%.
* F5: the same percentage for multi-card ballots (c = 1..5) with both
  contests on the same card, margins fixed at 0.1; truncated at 2,000%.
* F6: like F5 but the contests sit on different cards.

Case studies
------------
Two hypothetical county audits (a small county, "inyo", and a large one,
"orange") with published expected sample sizes.  The published ballot-polling
ASN bases are not derivable from the stated margins alone, so the report
uses them as overrides by default (``use_published_asn=False`` recomputes from
first principles).  Where polling would draw more cards than the relevant
population, the population size is reported instead: at that point a full
hand count is less work than sampling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import RhoUndefinedError, UnknownCaseError
from .formulas import (
    GAMMA_DEFAULT,
    Layout,
    S4Params,
    TwoContestConfig,
    bravo_asn,
    s4_sample_size,
    s4_with_csd,
    s4_without_csd,
)

F3_DRAW_CAP = 100_000
RATIO_CAPS = {"F3": None, "F4": 1_000.0, "F5": 2_000.0, "F6": 2_000.0}
DEFAULT_MARGINS = (0.01, 0.03, 0.05, 0.1, 0.2)

FIGURE_COLUMNS = ["figure", "p", "margin_b", "margin_s", "c", "layout",
                  "draws_without", "draws_with", "ratio_pct", "truncated"]


def _geometric_grid(lo: float, hi: float, points: int) -> list[float]:
    step = (hi / lo) ** (1.0 / (points - 1))
    return [round(lo * step**i, 6) for i in range(points)]


@dataclass(frozen=True)
class FigureRow:
    figure: str
    p: float
    margin_b: float
    margin_s: float
    c: int
    layout: Layout
    draws_without: Optional[float]
    draws_with: float
    ratio_pct: Optional[float]
    truncated: bool

    def as_record(self) -> dict:
        return {
            "figure": self.figure,
            "p": self.p,
            "margin_b": self.margin_b,
            "margin_s": self.margin_s,
            "c": self.c,
            "layout": self.layout.value,
            "draws_without": self.draws_without,
            "draws_with": round(self.draws_with, 3),
            "ratio_pct": None if self.ratio_pct is None else round(self.ratio_pct, 3),
            "truncated": self.truncated,
        }


def _figure_row(figure: str, config: TwoContestConfig, params: S4Params) -> FigureRow:
    with_csd = s4_with_csd(config, params)
    truncated = False
    try:
        without = float(s4_without_csd(config, params))
    except RhoUndefinedError:
        without = None
        truncated = True
    if without is not None:
        # a planner holding CSD can always ignore it and sample blindly, so
        # the with-CSD workload never exceeds the without-CSD workload (the
        # two-sample procedure can cost a fraction of a card more near p=1)
        with_csd = min(with_csd, without)
    ratio_cap = RATIO_CAPS[figure]
    if without is None:
        ratio = ratio_cap
    else:
        ratio = 100.0 * without / with_csd
        if ratio_cap is not None and ratio > ratio_cap:
            ratio, truncated = ratio_cap, True
    if figure == "F3" and (without is None or without > F3_DRAW_CAP):
        without, truncated = float(F3_DRAW_CAP), True
    return FigureRow(figure, config.p, config.m_b, config.m_s, config.c,
                     config.layout, without, with_csd, ratio, truncated)


def figure_grid(figure: str,
                margins: Sequence[float] = DEFAULT_MARGINS,
                p_values: Optional[Sequence[float]] = None,
                c_values: Optional[Sequence[int]] = None,
                alpha: float = 0.05,
                rate: float = 0.001,
                gamma: float = GAMMA_DEFAULT) -> list[FigureRow]:
    """Long-form data table for one figure."""
    figure = figure.upper()
    if figure not in RATIO_CAPS:
        raise UnknownCaseError(f"unknown figure {figure!r}; expected F3..F6")
    params = S4Params(alpha=alpha, gamma=gamma, overstatement_rate=rate)
    rows = []
    if figure in ("F3", "F4"):
        if p_values is None:
            p_values = (_geometric_grid(0.01, 1.0, 25) if figure == "F3"
                        else [round(0.1 + 0.05 * i, 2) for i in range(19)])
        for m in margins:
            for p in p_values:
                config = TwoContestConfig(m_b=m, m_s=m, p=p, c=1, layout=Layout.SAME_CARD)
                rows.append(_figure_row(figure, config, params))
    else:
        layout = Layout.SAME_CARD if figure == "F5" else Layout.DIFFERENT_CARDS
        if p_values is None:
            p_values = _geometric_grid(0.01, 1.0, 25)
        for c in (c_values or (1, 2, 3, 4, 5)):
            for p in p_values:
                config = TwoContestConfig(m_b=0.1, m_s=0.1, p=p, c=c, layout=layout)
                rows.append(_figure_row(figure, config, params))
    return rows


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    return str(value)


def rows_to_csv(rows: Sequence[FigureRow]) -> str:
    out = [",".join(FIGURE_COLUMNS)]
    for row in rows:
        rec = row.as_record()
        out.append(",".join(_cell(rec[col]) for col in FIGURE_COLUMNS))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# case studies


@dataclass(frozen=True)
class PollingSide:
    expected_draws: float
    b_component: float
    s_component: float
    full_count: bool

    def to_dict(self) -> dict:
        return {"expected_draws": round(self.expected_draws, 2),
                "b_component": round(self.b_component, 2),
                "s_component": round(self.s_component, 2),
                "full_count": self.full_count}


@dataclass(frozen=True)
class CaseStudyReport:
    name: str
    inputs: dict
    comparison_without: int
    comparison_with_same_card: float
    comparison_with_different_cards: float
    comparison_layout: Layout
    polling_without: PollingSide
    polling_with: PollingSide

    @property
    def comparison_with(self) -> float:
        if self.comparison_layout is Layout.SAME_CARD:
            return self.comparison_with_same_card
        return self.comparison_with_different_cards

    @property
    def comparison_reduction_pct(self) -> float:
        return 100.0 * (1.0 - self.comparison_with / self.comparison_without)

    @property
    def polling_reduction_pct(self) -> float:
        return 100.0 * (1.0 - self.polling_with.expected_draws
                        / self.polling_without.expected_draws)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "inputs": self.inputs,
            "comparison": {
                "without_csd": self.comparison_without,
                "with_csd": round(self.comparison_with, 2),
                "with_csd_same_card": round(self.comparison_with_same_card, 2),
                "with_csd_different_cards": round(self.comparison_with_different_cards, 2),
                "layout": self.comparison_layout.value,
                "reduction_pct": round(self.comparison_reduction_pct, 1),
            },
            "polling": {
                "without_csd": self.polling_without.to_dict(),
                "with_csd": self.polling_with.to_dict(),
                "reduction_pct": round(self.polling_reduction_pct, 1),
            },
        }


def _pair_asn_cards(alpha: float, v_w: int, v_l: int, contest_cards: int) -> float:
    """Expected contest-card draws for one pairwise polling test.

    Ballots showing neither candidate are ignored by the test, so the pair
    ASN scales by the fraction of contest cards that are relevant.
    """
    margin = (v_w - v_l) / (v_w + v_l)
    return bravo_asn(alpha, margin, exact=True) * contest_cards / (v_w + v_l)


def _polling_draws(asn_cards: float, contest_cards: int, population: int) -> tuple[float, bool]:
    """Expected draws from a population; capped at a full count of it."""
    expected = asn_cards * population / contest_cards
    if expected >= population:
        return float(population), True
    return expected, False


def case_study(name: str, alpha: float = 0.05, rate: float = 0.001,
               gamma: float = GAMMA_DEFAULT, use_published_asn: bool = True) -> CaseStudyReport:
    params = S4Params(alpha=alpha, gamma=gamma, overstatement_rate=rate)
    key = name.strip().lower()
    if key == "inyo":
        return _inyo(params, use_published_asn)
    if key == "orange":
        return _orange(params, use_published_asn)
    raise UnknownCaseError(f"unknown case study {name!r}; expected inyo or orange")


def _inyo(params: S4Params, use_published_asn: bool) -> CaseStudyReport:
    # June 2018: 5,919 two-card ballots.  Contest B is the US Senate top-two
    # primary (margin between 2nd and 3rd place drives the audit); contest S
    # is Supervisor District 1, on 1,435 ballots, margin 36 votes.  The two
    # contests sat on different cards.
    ballots, c = 5_919, 2
    total_cards = ballots * c
    senate_cards, senate_w, senate_l = ballots, 639, 517
    sup_cards, sup_margin = 1_435, 36
    # winner/loser split for Supervisor D1 was not published; a nominal
    # split with the right margin only matters for the (capped) polling side
    sup_w, sup_l = 735, 699

    n_b = s4_sample_size(params, (senate_w - senate_l) / senate_cards)
    n_s = s4_sample_size(params, sup_margin / sup_cards)
    without = max(s4_sample_size(params, (senate_w - senate_l) / total_cards),
                  s4_sample_size(params, sup_margin / total_cards))
    p = sup_cards / ballots
    with_diff = float(n_b + n_s)
    with_same = n_b + max(0.0, n_s - p * n_b)

    asn_b = 2_796.0 if use_published_asn else _pair_asn_cards(params.alpha, senate_w,
                                                          senate_l, senate_cards)
    asn_s = _pair_asn_cards(params.alpha, sup_w, sup_l, sup_cards)
    b_blind, _ = _polling_draws(asn_b, senate_cards, total_cards)
    s_blind, s_blind_capped = _polling_draws(asn_s, sup_cards, total_cards)
    poll_without = PollingSide(max(b_blind, s_blind), b_blind, s_blind, s_blind_capped)
    # ballot-style knowledge restricts the S sample to its own containers
    s_csd, s_capped = _polling_draws(asn_s, sup_cards, sup_cards * c)
    poll_with = PollingSide(b_blind + s_csd, b_blind, s_csd, s_capped)

    return CaseStudyReport(
        name="inyo",
        inputs={"ballots": ballots, "cards_per_ballot": c, "p": round(p, 4),
                "m_b": round((senate_w - senate_l) / senate_cards, 4),
                "m_s": round(sup_margin / sup_cards, 4),
                "alpha": params.alpha, "published_asn_overrides": use_published_asn},
        comparison_without=without,
        comparison_with_same_card=with_same,
        comparison_with_different_cards=with_diff,
        comparison_layout=Layout.DIFFERENT_CARDS,
        polling_without=poll_without,
        polling_with=poll_with,
    )


def _orange(params: S4Params, use_published_asn: bool) -> CaseStudyReport:
    # November 2018: 1,106,729 two-card ballots; Senate on every ballot
    # (m_b = 0.073), 45th District Congressional on 28.25% of ballots
    # (m_s = 0.04); the two contests shared a card.
    ballots, c = 1_106_729, 2
    p, m_s, m_b = 0.2825, 0.04, 0.073
    config = TwoContestConfig(m_b=m_b, m_s=m_s, p=p, c=c, layout=Layout.SAME_CARD)

    without = s4_without_csd(config, params)
    with_same = s4_with_csd(config, params)
    with_diff = s4_with_csd(TwoContestConfig(m_b=m_b, m_s=m_s, p=p, c=c,
                                             layout=Layout.DIFFERENT_CARDS), params)

    if use_published_asn:
        asn_b, asn_s = 948.0, 3_671.0
    else:
        asn_b = bravo_asn(params.alpha, m_b, exact=True)
        asn_s = bravo_asn(params.alpha, m_s, exact=True)
    b_blind = c * asn_b
    s_blind = (c / p) * asn_s
    poll_without = PollingSide(max(b_blind, s_blind), b_blind, s_blind, False)
    b_csd = (1.0 - p) * c * asn_b
    s_csd = c * asn_s
    poll_with = PollingSide(b_csd + s_csd, b_csd, s_csd, False)

    return CaseStudyReport(
        name="orange",
        inputs={"ballots": ballots, "cards_per_ballot": c, "p": p,
                "m_b": m_b, "m_s": m_s, "alpha": params.alpha,
                "published_asn_overrides": use_published_asn},
        comparison_without=without,
        comparison_with_same_card=with_same,
        comparison_with_different_cards=with_diff,
        comparison_layout=Layout.SAME_CARD,
        polling_without=poll_without,
        polling_with=poll_with,
    )


def table1(alpha: float = 0.05, rate: float = 0.001, gamma: float = GAMMA_DEFAULT,
           use_published_asn: bool = True) -> dict:
    """Expected percentage reduction in sample size with CSD, by county."""
    out = {}
    for name in ("inyo", "orange"):
        report = case_study(name, alpha=alpha, rate=rate, gamma=gamma,
                            use_published_asn=use_published_asn)
        out[name] = {
            "comparison_reduction_pct": round(report.comparison_reduction_pct, 1),
            "polling_reduction_pct": round(report.polling_reduction_pct, 1),
        }
    return out
