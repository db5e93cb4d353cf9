#!/usr/bin/env python3
"""Record real session-API responses as fixtures for the audit-board UI tests.

Runs the service in-process against the 12-card toy election, drives one
clean audit and one with a card marked not-found, and freezes the payloads
under frontend/tests/fixtures/.  Re-run after changing the API surface.
"""

import json
import os
import sys
import tempfile

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from fastapi.testclient import TestClient

from conftest import ToyElection
from rlacsd.service import create_app

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "..", "frontend", "tests", "fixtures")


def write(name, payload):
    path = os.path.join(FIXTURE_DIR, name)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {os.path.relpath(path)}")


def drive(client, toy, config, not_found_first=False):
    files = toy.files()
    body = {
        "config": config,
        "manifest_csv": files["manifest_csv"],
        "csd_csv": files["csd_csv"],
        "cvrs_jsonl": files["cvrs_jsonl"],
        "contests": json.loads(files["contests_json"]),
    }
    envelope = client.post("/sessions", json=body).json()
    sid = envelope["session_id"]
    rnd = client.post(f"/sessions/{sid}/rounds").json()
    reader = toy.reader()
    flat = [c for cart in rnd["groups"].values() for tray in cart.values() for c in tray]
    recorded = []
    for i, card in enumerate(flat):
        if not_found_first and i == 0:
            interp = {"card_id": card["card_id"], "not_found": True, "readings": {}}
        else:
            ref = toy.manifest.by_id[card["card_id"]]
            interp = reader(ref, toy.csd.styles[ref.card_id]).to_dict()
        res = client.post(f"/sessions/{sid}/rounds/1/interpretations", json=interp)
        assert res.status_code == 200, res.text
        recorded.append(interp)
    finalize = client.post(f"/sessions/{sid}/rounds/1/finalize").json()
    report = client.get(f"/sessions/{sid}/report").json()
    return envelope, rnd, recorded, finalize, report, flat[0]["card_id"]


def main():
    os.makedirs(FIXTURE_DIR, exist_ok=True)
    toy = ToyElection()
    write("toy_election.json", {
        **toy.files(),
        "contests": json.loads(toy.files()["contests_json"]),
        "config": {"method": "BALLOT_COMPARISON", "seed": "12345678901234567890"},
    })
    with tempfile.TemporaryDirectory() as tmp:
        app = create_app(tmp)
        with TestClient(app) as client:
            envelope, rnd, recorded, finalize, report, _ = drive(
                client, toy, {"method": "BALLOT_COMPARISON", "seed": "12345678901234567890"})
            write("envelope.json", envelope)
            write("round1.json", rnd)
            write("interpretations.json", recorded)
            write("finalize_clean.json", finalize)
            write("report_clean.json", report)

            _, _, _, finalize_nf, report_nf, lost = drive(
                client, toy, {"method": "BALLOT_COMPARISON", "seed": "999999999"},
                not_found_first=True)
            write("finalize_notfound.json", finalize_nf)
            write("report_notfound.json", {**report_nf, "_lost_card": lost})


if __name__ == "__main__":
    main()
