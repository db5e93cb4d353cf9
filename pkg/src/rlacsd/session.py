"""Audit session persistence.

One JSON document per audit with an append-only ``rounds`` array.  The file
embeds the input files verbatim so a session is self-contained: loading
replays the round log against a fresh engine and must land on the exact
same state (any divergence means the file was edited).  All reals are
serialized as decimal strings with 12 significant digits; files are written
atomically (write-temp then rename) and contain no timestamps, so identical
inputs always produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from typing import Optional

from . import engine as eng
from . import model
from .errors import SessionTamperedError
from .sampling import number_to_decimal

SCHEMA_ID = "rlacsd-session/1"


def real_str(x: float) -> str:
    return f"{x:.12g}"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ": "), indent=1,
                      ensure_ascii=False) + "\n"


def config_digest(config: eng.AuditConfig, contests, inputs: dict) -> str:
    payload = json.dumps(
        {"config": config.to_dict(),
         "contests": [c.to_dict() for c in contests],
         "inputs": inputs},
        sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


class Session:
    """An audit state plus the inputs it was built from."""

    def __init__(self, state: eng.AuditState, inputs: dict, session_id: Optional[str] = None):
        self.state = state
        self.inputs = inputs
        self.digest = config_digest(state.config, state.contests.values(), inputs)
        self.session_id = session_id or self.digest

    @classmethod
    def create(cls, config: eng.AuditConfig, manifest_csv: str, csd_csv: str,
               cvrs_jsonl: str, contests_json: str,
               session_id: Optional[str] = None) -> "Session":
        contests = model.parse_contests(contests_json)
        manifest = model.parse_manifest(manifest_csv)
        csd = model.parse_csd(csd_csv, manifest, [c.id for c in contests])
        cvrs = model.parse_cvrs(cvrs_jsonl) if cvrs_jsonl.strip() else {}
        state = eng.initialize_audit(config, manifest, csd, cvrs, contests)
        inputs = {"manifest_csv": manifest_csv, "csd_csv": csd_csv,
                  "cvrs_jsonl": cvrs_jsonl, "contests_json": contests_json}
        return cls(state, inputs, session_id)

    def envelope(self) -> dict:
        status = eng.audit_status(self.state)
        rnd = self.state.open_round
        return {
            "session_id": self.session_id,
            "config_digest": self.digest,
            "current_round": len(self.state.rounds),
            "round_open": rnd is not None,
            "complete": status["complete"],
            "contests": {k: {"status": v["status"],
                             "measured_risk": real_str(v["measured_risk"]),
                             "risk_limit": real_str(v["risk_limit"])}
                         for k, v in status["contests"].items()},
        }

    def to_dict(self) -> dict:
        rounds = []
        for rnd in self.state.rounds:
            result = None
            if rnd.result is not None:
                result = {k: {**v, "risk": real_str(v["risk"])}
                          for k, v in sorted(rnd.result.items())}
            rounds.append({
                "plan": {
                    "number": rnd.number,
                    "sizes": dict(sorted(rnd.sizes.items())),
                    "thresholds": {k: number_to_decimal(v)
                                   for k, v in sorted(rnd.thresholds.items())},
                    "full_count": rnd.new_full_count,
                    "retrieval": [c.card_id for c in rnd.retrieval],
                },
                "interpretations": [rnd.interpretations[cid].to_dict()
                                    for cid in sorted(rnd.interpretations)],
                "result": result,
            })
        return {
            "schema": SCHEMA_ID,
            "session_id": self.session_id,
            "config_digest": self.digest,
            "seed": self.state.config.seed,
            "config": self.state.config.to_dict(),
            "contests": [c.to_dict() for c in self.state.contests.values()],
            "inputs": self.inputs,
            "phantoms": {
                "cvrs": dict(sorted(self.state.phantom_cvrs.items())),
                "cards": {k: list(v) for k, v in sorted(self.state.phantom_cards.items())},
            },
            "rounds": rounds,
        }

    def save(self, path: str) -> None:
        data = canonical_json(self.to_dict()).encode("utf-8")
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".session-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def load(cls, path: str) -> "Session":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls.from_dict(doc)

    @classmethod
    def from_dict(cls, doc: dict) -> "Session":
        if doc.get("schema") != SCHEMA_ID:
            raise SessionTamperedError(f"unknown session schema {doc.get('schema')!r}")
        config = eng.AuditConfig.from_dict(doc["config"])
        inputs = doc["inputs"]
        session = cls.create(config, inputs["manifest_csv"], inputs["csd_csv"],
                             inputs["cvrs_jsonl"], inputs["contests_json"],
                             session_id=doc["session_id"])
        if session.digest != doc["config_digest"]:
            raise SessionTamperedError(
                f"config digest mismatch: {session.digest} != {doc['config_digest']}")
        for stored in doc["rounds"]:
            rnd = eng.plan_round(session.state)
            plan = stored["plan"]
            if (rnd.sizes != {k: int(v) for k, v in plan["sizes"].items()}
                    or [c.card_id for c in rnd.retrieval] != plan["retrieval"]):
                raise SessionTamperedError(
                    f"round {rnd.number} does not replay to the stored plan")
            for rec in stored["interpretations"]:
                eng.record_interpretation(session.state, eng.Interpretation.from_dict(rec))
            if stored["result"] is not None:
                result = eng.finalize_round(session.state)
                for contest_id, entry in result.items():
                    if real_str(entry["risk"]) != stored["result"][contest_id]["risk"]:
                        raise SessionTamperedError(
                            f"round {rnd.number}, contest {contest_id}: stored risk "
                            f"{stored['result'][contest_id]['risk']} does not replay")
        return session
