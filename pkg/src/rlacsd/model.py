"""Election data model: contests, manifests, card-style data, CVRs, margins.

File formats
------------
* Ballot manifest: CSV with header ``cart,tray,position``, one row per cast
  card.  The (cart, tray, position) triple locates the physical card.
* Card-style data (CSD): CSV with header ``cart,tray,position,contests``
  where ``contests`` is a ``|``-separated list of contest ids (empty list
  allowed).  This is the long form of the usual wide yes/no table; a
  converter for the wide form lives in the CLI.
* Cast-vote records: JSON lines, one object per card:
  ``{"card_id": "1:4:96", "interpretations": {"GOV": {"selected": ["A"]},
  "MEASURE": "NO_SELECTION"}}``.  A contest key that is absent means the
  contest is not on the card; ``NO_SELECTION`` means the contest is on the
  card but the voter left it blank.  The distinction matters: card styles
  are inferred from CVR contest keys.
* Contest definitions: JSON array of objects
  ``{id, name, candidates[], tally{}, num_winners, risk_limit,
  card_upper_bound}``.

All types are immutable after construction and all operations are pure.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Optional

from .errors import (
    DuplicateCardError,
    DuplicateCvrError,
    ParseError,
    TiedOutcomeError,
    UnknownCardError,
    UnknownContestError,
)

MANIFEST_HEADER = ["cart", "tray", "position"]
CSD_HEADER = ["cart", "tray", "position", "contests"]

#: Selection record for "contest on card, no valid vote".
NO_SELECTION: frozenset[str] = frozenset()


def card_id_for(cart: int, tray: int, position: int) -> str:
    return f"{cart}:{tray}:{position}"


@dataclass(frozen=True)
class CardRef:
    """A physical card location, or a phantom placeholder."""

    cart: Optional[int]
    tray: Optional[int]
    position: Optional[int]
    card_id: str
    is_phantom: bool = False

    @property
    def sort_key(self) -> tuple:
        # phantoms sort after all located cards; located cards keep the
        # walkable cart/tray/position order
        if self.is_phantom:
            return (1, self.card_id, 0, 0)
        return (0, self.cart, self.tray, self.position)

    @classmethod
    def located(cls, cart: int, tray: int, position: int) -> "CardRef":
        return cls(cart=cart, tray=tray, position=position,
                   card_id=card_id_for(cart, tray, position))

    @classmethod
    def phantom(cls, card_id: str) -> "CardRef":
        return cls(cart=None, tray=None, position=None, card_id=card_id, is_phantom=True)


@dataclass(frozen=True)
class Manifest:
    """The sampling frame: where every cast card is stored."""

    cards: tuple[CardRef, ...]
    cards_per_ballot: int = 1
    ballot_count: int = 0

    def __post_init__(self):
        if self.cards_per_ballot < 1:
            raise ParseError("cards_per_ballot must be positive")
        if self.ballot_count == 0:
            located = sum(1 for c in self.cards if not c.is_phantom)
            n = -(-located // self.cards_per_ballot) if located else 0
            object.__setattr__(self, "ballot_count", n)
        located = sum(1 for c in self.cards if not c.is_phantom)
        if located > self.ballot_count * self.cards_per_ballot:
            raise ParseError(
                f"{located} located cards exceed ballot_count*cards_per_ballot "
                f"({self.ballot_count}*{self.cards_per_ballot})")

    @cached_property
    def by_id(self) -> Mapping[str, CardRef]:
        return {c.card_id: c for c in self.cards}

    @property
    def card_count(self) -> int:
        return len(self.cards)

    def with_phantoms(self, phantoms: Iterable[CardRef]) -> "Manifest":
        return Manifest(self.cards + tuple(phantoms), self.cards_per_ballot, self.ballot_count)


@dataclass(frozen=True)
class CardStyleTable:
    """Map from card id to the set of contest ids the card reportedly contains."""

    styles: Mapping[str, frozenset[str]]

    @cached_property
    def contest_cards(self) -> Mapping[str, tuple[str, ...]]:
        """Card ids per contest, in table order."""
        out: dict[str, list[str]] = {}
        for card_id, contests in self.styles.items():
            for k in contests:
                out.setdefault(k, []).append(card_id)
        return {k: tuple(v) for k, v in out.items()}

    def cards_for(self, contest_id: str) -> tuple[str, ...]:
        return self.contest_cards.get(contest_id, ())

    def count_for(self, contest_id: str) -> int:
        return len(self.cards_for(contest_id))

    def with_entries(self, extra: Mapping[str, frozenset[str]]) -> "CardStyleTable":
        merged = dict(self.styles)
        merged.update(extra)
        return CardStyleTable(merged)


@dataclass(frozen=True)
class Cvr:
    """Machine interpretation of one card.

    ``interpretations`` maps contest id to the set of candidates selected;
    an empty set is "no selection" (undervote).  Contests not present in
    the map are not on the card.
    """

    card_id: str
    interpretations: Mapping[str, frozenset[str]]

    def contests(self) -> frozenset[str]:
        return frozenset(self.interpretations)


@dataclass(frozen=True)
class Contest:
    id: str
    name: str
    candidates: tuple[str, ...]
    reported_tally: Mapping[str, int]
    num_winners: int = 1
    risk_limit: float = 0.05
    card_upper_bound: int = 0

    def __post_init__(self):
        if len(set(self.candidates)) != len(self.candidates):
            raise ParseError(f"contest {self.id}: duplicate candidates")
        if not 0 < self.num_winners < len(self.candidates):
            raise ParseError(f"contest {self.id}: num_winners must be in [1, #candidates)")
        if not 0 < self.risk_limit < 1:
            raise ParseError(f"contest {self.id}: risk_limit must be in (0,1)")
        if any(v < 0 for v in self.reported_tally.values()):
            raise ParseError(f"contest {self.id}: negative tally")
        if sum(self.reported_tally.values()) > self.card_upper_bound:
            raise ParseError(
                f"contest {self.id}: total votes exceed card upper bound "
                f"{self.card_upper_bound}")

    @classmethod
    def from_dict(cls, d: Mapping) -> "Contest":
        return cls(
            id=d["id"],
            name=d.get("name", d["id"]),
            candidates=tuple(d["candidates"]),
            reported_tally=dict(d["tally"]),
            num_winners=int(d.get("num_winners", 1)),
            risk_limit=float(d.get("risk_limit", 0.05)),
            card_upper_bound=int(d["card_upper_bound"]),
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "candidates": list(self.candidates),
            "tally": {c: self.reported_tally.get(c, 0) for c in self.candidates},
            "num_winners": self.num_winners,
            "risk_limit": self.risk_limit,
            "card_upper_bound": self.card_upper_bound,
        }


@dataclass(frozen=True)
class PairMargin:
    winner: str
    loser: str
    margin_votes: int
    partially_diluted: float


@dataclass(frozen=True)
class MarginSet:
    """All (winner, loser) pairwise margins for a contest.

    The governing pair is the minimum-margin pair; it drives sample sizes.
    """

    contest_id: str
    winners: tuple[str, ...]
    pairs: tuple[PairMargin, ...]
    contest_cards: int

    @property
    def governing(self) -> PairMargin:
        return min(self.pairs, key=lambda p: p.margin_votes)

    @property
    def governing_margin(self) -> float:
        return self.governing.partially_diluted

    def fully_diluted(self, population_size: int, pair: Optional[PairMargin] = None) -> float:
        pair = pair or self.governing
        return pair.margin_votes / population_size


def contest_margins(contest: Contest, tallies: Optional[Mapping[str, int]] = None,
                    population_size: Optional[int] = None) -> MarginSet:
    """Pairwise margins for the top-``num_winners`` winners vs every loser.

    Raises TIED_OUTCOME when the w-th place is tied (the audit cannot
    confirm such an outcome; a full count is required).
    """
    tallies = dict(tallies if tallies is not None else contest.reported_tally)
    for cand in contest.candidates:
        tallies.setdefault(cand, 0)
    ranked = sorted(contest.candidates, key=lambda c: (-tallies[c], c))
    w = contest.num_winners
    if tallies[ranked[w - 1]] == tallies[ranked[w]]:
        raise TiedOutcomeError(
            f"contest {contest.id}: tie for place {w} "
            f"({ranked[w - 1]} vs {ranked[w]})", contest=contest.id)
    winners, losers = ranked[:w], ranked[w:]
    n_k = population_size if population_size is not None else contest.card_upper_bound
    pairs = tuple(
        PairMargin(win, lose, tallies[win] - tallies[lose],
                   (tallies[win] - tallies[lose]) / n_k)
        for win in winners for lose in losers)
    return MarginSet(contest.id, tuple(winners), pairs, n_k)


# ---------------------------------------------------------------------------
# parsing


def _read_rows(text: str, header: list[str], op: str) -> Iterable[tuple[int, list[str]]]:
    reader = csv.reader(io.StringIO(text))
    try:
        first = next(reader)
    except StopIteration:
        raise ParseError(f"{op}: empty input, expected header {','.join(header)}", line=0)
    if [h.strip() for h in first] != header:
        raise ParseError(f"{op}: bad header {first!r}, expected {header}", line=1)
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        yield lineno, row


def _location(row: list[str], lineno: int, op: str, width: int) -> tuple[int, ...]:
    if len(row) != width:
        raise ParseError(f"{op}: expected {width} fields, got {len(row)}", line=lineno)
    try:
        return tuple(int(v.strip()) for v in row[:3])
    except ValueError:
        raise ParseError(f"{op}: non-integer location {row[:3]!r}", line=lineno)


def parse_manifest(text: str, cards_per_ballot: int = 1,
                   ballot_count: Optional[int] = None) -> Manifest:
    """Parse a ballot-manifest CSV into a Manifest."""
    cards: list[CardRef] = []
    seen: set[tuple[int, ...]] = set()
    for lineno, row in _read_rows(text, MANIFEST_HEADER, "manifest"):
        loc = _location(row, lineno, "manifest", 3)
        if loc in seen:
            raise DuplicateCardError(f"manifest: duplicate card {loc} at line {lineno}",
                                     line=lineno, location=loc)
        seen.add(loc)
        cards.append(CardRef.located(*loc))
    return Manifest(tuple(cards), cards_per_ballot, ballot_count or 0)


def serialize_manifest(manifest: Manifest) -> str:
    out = [",".join(MANIFEST_HEADER)]
    for c in manifest.cards:
        if not c.is_phantom:
            out.append(f"{c.cart},{c.tray},{c.position}")
    return "\n".join(out) + "\n"


def parse_csd(text: str, manifest: Manifest,
              contest_ids: Optional[Iterable[str]] = None) -> CardStyleTable:
    """Parse long-form CSD CSV; every location must exist in the manifest."""
    known = frozenset(contest_ids) if contest_ids is not None else None
    styles: dict[str, frozenset[str]] = {}
    for lineno, row in _read_rows(text, CSD_HEADER, "csd"):
        loc = _location(row, lineno, "csd", 4)
        card_id = card_id_for(*loc)
        if card_id not in manifest.by_id:
            raise UnknownCardError(f"csd: card {card_id} not in manifest (line {lineno})",
                                   line=lineno, card_id=card_id)
        if card_id in styles:
            raise DuplicateCardError(f"csd: duplicate entry for {card_id} at line {lineno}",
                                     line=lineno, card_id=card_id)
        raw = row[3].strip()
        contests = frozenset(c.strip() for c in raw.split("|") if c.strip()) if raw else frozenset()
        if known is not None:
            unknown = contests - known
            if unknown:
                raise UnknownContestError(
                    f"csd: unknown contest ids {sorted(unknown)} at line {lineno}",
                    line=lineno, contests=sorted(unknown))
        styles[card_id] = contests
    return CardStyleTable(styles)


def serialize_csd(csd: CardStyleTable, manifest: Manifest) -> str:
    """Canonical CSD CSV: manifest order, sorted contest lists, phantoms last."""
    out = [",".join(CSD_HEADER)]
    for c in manifest.cards:
        if c.card_id in csd.styles and not c.is_phantom:
            contests = "|".join(sorted(csd.styles[c.card_id]))
            out.append(f"{c.cart},{c.tray},{c.position},{contests}")
    return "\n".join(out) + "\n"


def parse_cvrs(text: str) -> dict[str, Cvr]:
    """Parse JSON-lines CVRs into a dict keyed by card id."""
    cvrs: dict[str, Cvr] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            card_id = obj["card_id"]
            raw = obj.get("interpretations", {})
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"cvrs: bad record at line {lineno}: {exc}", line=lineno)
        if card_id in cvrs:
            raise DuplicateCvrError(f"cvrs: duplicate CVR for {card_id} at line {lineno}",
                                    line=lineno, card_id=card_id)
        interpretations: dict[str, frozenset[str]] = {}
        for contest, record in raw.items():
            if record == "NO_SELECTION":
                interpretations[contest] = NO_SELECTION
            elif isinstance(record, dict) and isinstance(record.get("selected"), list):
                interpretations[contest] = frozenset(record["selected"])
            else:
                raise ParseError(
                    f"cvrs: bad selection record for {contest} at line {lineno}", line=lineno)
        cvrs[card_id] = Cvr(card_id, interpretations)
    return cvrs


def serialize_cvrs(cvrs: Mapping[str, Cvr]) -> str:
    lines = []
    for card_id in sorted(cvrs):
        cvr = cvrs[card_id]
        interp = {k: ("NO_SELECTION" if not v else {"selected": sorted(v)})
                  for k, v in sorted(cvr.interpretations.items())}
        lines.append(json.dumps({"card_id": card_id, "interpretations": interp},
                                sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def csd_from_cvrs(cvrs: Mapping[str, Cvr]) -> CardStyleTable:
    """Derive card styles from CVR contest keys."""
    return CardStyleTable({cid: cvr.contests() for cid, cvr in cvrs.items()})


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ContestCheck:
    contest_id: str
    cvr_count: int
    csd_count: int
    card_upper_bound: int

    @property
    def exceeds_bound(self) -> bool:
        return self.cvr_count > self.card_upper_bound


@dataclass(frozen=True)
class ValidationReport:
    contests: tuple[ContestCheck, ...]
    manifest_card_count: int
    csd_line_count: int

    @property
    def count_mismatch(self) -> bool:
        return self.csd_line_count != self.manifest_card_count

    @property
    def flags(self) -> list[str]:
        out = [f"EXCEEDS_BOUND:{c.contest_id}" for c in self.contests if c.exceeds_bound]
        if self.count_mismatch:
            out.append("COUNT_MISMATCH")
        return out

    @property
    def ok(self) -> bool:
        return not self.flags

    def to_dict(self) -> dict:
        return {
            "contests": [
                {"id": c.contest_id, "cvr_count": c.cvr_count, "csd_count": c.csd_count,
                 "card_upper_bound": c.card_upper_bound, "exceeds_bound": c.exceeds_bound}
                for c in self.contests],
            "manifest_card_count": self.manifest_card_count,
            "csd_line_count": self.csd_line_count,
            "count_mismatch": self.count_mismatch,
            "flags": self.flags,
        }


def validate_election(manifest: Manifest, csd: CardStyleTable,
                      cvrs: Mapping[str, Cvr],
                      contests: Iterable[Contest]) -> ValidationReport:
    """Cross-check counts; report-only, the engine acts on the flags."""
    checks = []
    for contest in contests:
        cvr_count = sum(1 for c in cvrs.values() if contest.id in c.interpretations)
        checks.append(ContestCheck(contest.id, cvr_count, csd.count_for(contest.id),
                                   contest.card_upper_bound))
    return ValidationReport(tuple(checks), manifest.card_count, len(csd.styles))


def parse_contests(text: str) -> list[Contest]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"contests: invalid JSON: {exc}")
    if isinstance(data, dict):
        data = [data]
    return [Contest.from_dict(d) for d in data]
