"""Closed-form audit quantities.

Comparison-audit planning follows the super-simple sample-size multiplier

    rho = -ln(alpha) / [1/(2*gamma) + lambda * ln(1 - 1/(2*gamma))]

where gamma is the error-inflation factor and lambda is the anticipated
number of 1-vote overstatements as a fraction of the diluted margin.  The
number of cards to draw is rho divided by the fully diluted margin.

>>> round(rho(0.05, 1.03905, 0.01), 3)
6.312
>>> s4_sample_size(S4Params(alpha=0.05), 0.1)
64

Measured risk uses the matching Kaplan-Markov bound

    P = exp(-n*mu/(2*gamma)) * (1 - 1/(2*gamma))**(-n1) * (1 - 1/gamma)**(-n2)

capped at 1; the audit stops for a contest when P <= alpha.  Understatements
are tracked but never credited (conservative).

Ballot polling uses Wald's sequential probability ratio test: the test
statistic is multiplied by 2*s_w on a ballot for the reported winner and by
2*(1-s_w) on a ballot for the loser, where s_w is the winner's reported
share of the two candidates' votes.  The expected sample size is
approximately 2*ln(1/alpha)/m**2 for margin m.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import NotAReportedWinError, RhoUndefinedError

#: Default error-inflation factor; reproduces the published planning sizes
#: 64 / 721 / 1,712 for margins 0.1 / 0.01 / 0.005 at alpha=0.05, rate 0.001.
GAMMA_DEFAULT = 1.03905

#: Planning tables quote the sample-size multiplier to two decimals; sample
#: sizes divide the quoted value.  (Raw division would give 1,713 instead of
#: the published 1,712 at margin 0.005.)
RHO_PLANNING_DECIMALS = 2

_CEIL_FUZZ = 1e-9


def _ceil(x: float) -> int:
    """Ceiling with a guard against float noise just above an integer."""
    return math.ceil(x - _CEIL_FUZZ)


def rho(alpha: float, gamma: float = GAMMA_DEFAULT, lam: float = 0.0) -> float:
    """Sample-size multiplier.

    >>> round(rho(0.05, 1.03905, 0.0), 4)
    6.2254
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    if gamma <= 0.5:
        raise ValueError(f"gamma must exceed 0.5, got {gamma}")
    denom = 1.0 / (2.0 * gamma) + lam * math.log(1.0 - 1.0 / (2.0 * gamma))
    if denom <= 0:
        raise RhoUndefinedError(
            f"anticipated error rate too high relative to margin "
            f"(lambda={lam:.4g}); a full hand count is needed",
            alpha=alpha, gamma=gamma, lam=lam)
    return -math.log(alpha) / denom


def planning_rho(alpha: float, gamma: float, lam: float) -> float:
    return round(rho(alpha, gamma, lam), RHO_PLANNING_DECIMALS)


@dataclass(frozen=True)
class S4Params:
    """Comparison-audit planning parameters."""

    alpha: float
    gamma: float = GAMMA_DEFAULT
    overstatement_rate: float = 0.001

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if self.overstatement_rate < 0:
            raise ValueError("overstatement_rate must be >= 0")


def s4_sample_size(params: S4Params, fully_diluted_margin: float) -> int:
    """Cards to draw to confirm a contest with the given fully diluted margin.

    lambda is the anticipated overstatement rate divided by the same margin.
    """
    if not 0 < fully_diluted_margin <= 1:
        raise ValueError(f"margin must be in (0,1], got {fully_diluted_margin}")
    lam = params.overstatement_rate / fully_diluted_margin
    return _ceil(planning_rho(params.alpha, params.gamma, lam) / fully_diluted_margin)


class Layout(str, enum.Enum):
    """Where the two contests sit and how much style information exists."""

    SAME_CARD = "SAME_CARD"
    DIFFERENT_CARDS = "DIFFERENT_CARDS"
    NO_CSD = "NO_CSD"
    # ballot-style-only knowledge (which containers, not which cards)
    PARTIAL_CSD_SAME_CARD = "PARTIAL_CSD_SAME_CARD"
    PARTIAL_CSD_DIFFERENT_CARDS = "PARTIAL_CSD_DIFFERENT_CARDS"


@dataclass(frozen=True)
class TwoContestConfig:
    """A big contest B on every ballot plus a small contest S on a fraction p.

    m_b and m_s are partially diluted margins; c is cards per ballot.
    """

    m_b: float
    m_s: float
    p: float
    c: int = 1
    layout: Layout = Layout.SAME_CARD

    def __post_init__(self):
        if not 0 < self.m_b <= 1 or not 0 < self.m_s <= 1:
            raise ValueError("margins must be in (0,1]")
        if not 0 < self.p <= 1:
            raise ValueError(f"p must be in (0,1], got {self.p}")
        if self.c < 1:
            raise ValueError(f"c must be a positive integer, got {self.c}")


def s4_with_csd(config: TwoContestConfig, params: S4Params) -> float:
    """Expected distinct draws to confirm both contests with full CSD.

    Each contest is audited from its own cards at its partially diluted
    margin.  On the same card the B sample covers an expected p * n_b of the
    S sample, so only the shortfall costs extra draws.
    """
    if config.layout not in (Layout.SAME_CARD, Layout.DIFFERENT_CARDS):
        raise ValueError(f"with-CSD draws need a card layout, got {config.layout}")
    n_b = s4_sample_size(params, config.m_b)
    n_s = s4_sample_size(params, config.m_s)
    if config.layout is Layout.DIFFERENT_CARDS:
        return float(n_b + n_s)
    return n_b + max(0.0, n_s - config.p * n_b)


def s4_without_csd(config: TwoContestConfig, params: S4Params) -> int:
    """Cards to draw from the full population when styles are unknown.

    The fully diluted margins shrink to m_b/c and p*m_s/c; the audit of both
    contests rides along with whichever sample is larger.
    """
    n_b = s4_sample_size(params, config.m_b / config.c)
    n_s = s4_sample_size(params, config.p * config.m_s / config.c)
    return max(n_b, n_s)


def s4_savings(config: TwoContestConfig, params: S4Params) -> float:
    """Expected draws saved by having CSD; never negative."""
    return max(0.0, s4_without_csd(config, params) - s4_with_csd(config, params))


@dataclass(frozen=True)
class DiscrepancyCounts:
    """Draws and discrepancies observed so far for one contest.

    n1/n2 are 1- and 2-vote overstatements; u1/u2 are understatements,
    tracked for reporting but not credited against the risk.
    """

    n: int
    n1: int = 0
    n2: int = 0
    u1: int = 0
    u2: int = 0

    def __post_init__(self):
        if min(self.n, self.n1, self.n2, self.u1, self.u2) < 0:
            raise ValueError("counts must be non-negative")
        if self.n1 + self.n2 > self.n:
            raise ValueError("more overstatements than draws")


def km_risk(fully_diluted_margin: float, gamma: float, counts: DiscrepancyCounts) -> float:
    """Kaplan-Markov measured risk, capped at 1."""
    if not 0 < fully_diluted_margin <= 1:
        raise ValueError(f"margin must be in (0,1], got {fully_diluted_margin}")
    if counts.n2 > 0 and gamma <= 1:
        raise ValueError("gamma must exceed 1 to score 2-vote overstatements")
    log_p = (-counts.n * fully_diluted_margin / (2.0 * gamma)
             - counts.n1 * math.log(1.0 - 1.0 / (2.0 * gamma))
             - counts.n2 * math.log(1.0 - 1.0 / gamma))
    return min(1.0, math.exp(log_p))


# ---------------------------------------------------------------------------
# ballot polling


def bravo_asn(alpha: float, margin: float, exact: bool = False) -> float:
    """Expected ballots to confirm a two-candidate contest by ballot polling.

    The default is the familiar approximation 2*ln(1/alpha)/m**2.  The exact
    variant is ln(1/alpha) over the expected log-likelihood step
    s_w*ln(2*s_w) + s_l*ln(2*s_l) with s_w = (1+m)/2.
    """
    if not 0 < margin <= 1:
        raise ValueError(f"margin must be in (0,1], got {margin}")
    if not exact:
        return 2.0 * math.log(1.0 / alpha) / margin**2
    s_w = (1.0 + margin) / 2.0
    s_l = 1.0 - s_w
    step = s_w * math.log(2.0 * s_w)
    if s_l > 0:
        step += s_l * math.log(2.0 * s_l)
    return math.log(1.0 / alpha) / step


def _asn_pair(config: TwoContestConfig, alpha: float,
              base, exact: bool) -> tuple[float, float]:
    if base is None:
        return bravo_asn(alpha, config.m_b, exact), bravo_asn(alpha, config.m_s, exact)
    if isinstance(base, (tuple, list)):
        return float(base[0]), float(base[1])
    return float(base), float(base)


def bravo_expected_draws(config: TwoContestConfig, alpha: float,
                         base=None, exact: bool = False) -> float:
    """Expected cards drawn for a two-contest ballot-polling audit.

    ``base`` overrides the per-contest ASN (a scalar for both contests or a
    (big, small) pair), e.g. to reproduce published tables.
    """
    asn_b, asn_s = _asn_pair(config, alpha, base, exact)
    c, p = config.c, config.p
    if config.layout is Layout.NO_CSD:
        return max(c * asn_b, (c / p) * asn_s)
    if config.layout is Layout.PARTIAL_CSD_SAME_CARD:
        return (1.0 - p) * c * asn_b + c * asn_s
    if config.layout is Layout.PARTIAL_CSD_DIFFERENT_CARDS:
        return c * asn_b + c * asn_s
    raise ValueError(f"polling draws need NO_CSD or PARTIAL_CSD layout, got {config.layout}")


def bravo_savings(config: TwoContestConfig, alpha: float,
                  base=None, exact: bool = False) -> float:
    """Expected draws saved by ballot-style knowledge for a polling audit.

    With the default approximation this equals the closed form
    2*c*ln(1/alpha) * (1/(p*m_s^2) - [(1-p) or 1]/m_b^2 - 1/m_s^2).
    """
    if config.layout is Layout.PARTIAL_CSD_SAME_CARD:
        b_weight = 1.0 - config.p
    elif config.layout is Layout.PARTIAL_CSD_DIFFERENT_CARDS:
        b_weight = 1.0
    else:
        raise ValueError(f"savings need a PARTIAL_CSD layout, got {config.layout}")
    if base is None and not exact:
        return (2.0 * config.c * math.log(1.0 / alpha)
                * (1.0 / (config.p * config.m_s**2)
                   - b_weight / config.m_b**2
                   - 1.0 / config.m_s**2))
    blind = bravo_expected_draws(
        TwoContestConfig(config.m_b, config.m_s, config.p, config.c, Layout.NO_CSD),
        alpha, base, exact)
    return blind - bravo_expected_draws(config, alpha, base, exact)


class ObservedBallot(str, enum.Enum):
    WINNER = "WINNER"
    LOSER = "LOSER"


def bravo_sprt_update(t_stat: float, reported_winner_share: float,
                      observed: ObservedBallot) -> float:
    """One SPRT step for a (winner, loser) pair; returns the updated statistic."""
    if t_stat <= 0:
        raise ValueError(f"test statistic must be positive, got {t_stat}")
    if not 0.5 < reported_winner_share < 1:
        raise NotAReportedWinError(
            f"reported winner share {reported_winner_share} is not a reported win")
    if observed is ObservedBallot.WINNER:
        return t_stat * 2.0 * reported_winner_share
    return t_stat * 2.0 * (1.0 - reported_winner_share)


def sprt_risk(t_stat: float) -> float:
    """Measured risk for one SPRT pair."""
    return min(1.0, 1.0 / t_stat)
