import json

import pytest

from rlacsd.model import (
    CardRef,
    CardStyleTable,
    Contest,
    Cvr,
    Manifest,
    serialize_csd,
    serialize_cvrs,
    serialize_manifest,
)


class ToyElection:
    """12-card election with partial overlap: 5 cards carry only contest B,
    4 carry both B and S, 3 carry only S.  B reads 8-1, S reads 6-1."""

    def __init__(self):
        cards, styles, cvrs = [], {}, {}
        b_votes = ["Bx"] * 8 + ["By"]
        s_votes = ["Sx"] * 6 + ["Sy"]
        bi = si = 0
        specs = [({"B"},) for _ in range(5)]
        specs += [({"B", "S"},) for _ in range(4)]
        specs += [({"S"},) for _ in range(3)]
        for i, (style,) in enumerate(specs):
            ref = CardRef.located(1, 1 + i // 6, i % 6)
            votes = {}
            if "B" in style:
                votes["B"] = frozenset({b_votes[bi]})
                bi += 1
            if "S" in style:
                votes["S"] = frozenset({s_votes[si]})
                si += 1
            cards.append(ref)
            styles[ref.card_id] = frozenset(style)
            cvrs[ref.card_id] = Cvr(ref.card_id, votes)
        self.manifest = Manifest(tuple(cards), cards_per_ballot=1, ballot_count=12)
        self.csd = CardStyleTable(styles)
        self.cvrs = cvrs
        self.contests = [
            Contest(id="B", name="Big", candidates=("Bx", "By"),
                    reported_tally={"Bx": 8, "By": 1},
                    risk_limit=0.15, card_upper_bound=9),
            Contest(id="S", name="Small", candidates=("Sx", "Sy"),
                    reported_tally={"Sx": 6, "Sy": 1},
                    risk_limit=0.15, card_upper_bound=7),
        ]

    def reader(self):
        from rlacsd.engine import Interpretation

        def read(ref, style):
            truth = self.cvrs[ref.card_id].interpretations
            return Interpretation(card_id=ref.card_id,
                                  readings={k: truth.get(k) for k in style})
        return read

    def files(self):
        return {
            "manifest_csv": serialize_manifest(self.manifest),
            "csd_csv": serialize_csd(self.csd, self.manifest),
            "cvrs_jsonl": serialize_cvrs(self.cvrs),
            "contests_json": json.dumps([c.to_dict() for c in self.contests]),
        }

    def write_files(self, directory, config=None):
        """Write the election inputs (and optionally an audit config) to disk."""
        paths = {}
        names = {"manifest_csv": "manifest.csv", "csd_csv": "csd.csv",
                 "cvrs_jsonl": "cvrs.jsonl", "contests_json": "contests.json"}
        for key, text in self.files().items():
            path = directory / names[key]
            path.write_text(text)
            paths[key] = str(path)
        if config is not None:
            path = directory / "config.json"
            path.write_text(json.dumps(config))
            paths["config"] = str(path)
        return paths


@pytest.fixture
def toy():
    return ToyElection()
