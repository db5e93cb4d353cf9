import json

import pytest
from fastapi.testclient import TestClient

from rlacsd.service import create_app

CONFIG = {"method": "BALLOT_COMPARISON", "seed": "12345678901234567890"}


@pytest.fixture
def client(tmp_path):
    app = create_app(str(tmp_path / "data"))
    with TestClient(app) as c:
        yield c


def create_body(toy, config=CONFIG):
    files = toy.files()
    return {
        "config": config,
        "manifest_csv": files["manifest_csv"],
        "csd_csv": files["csd_csv"],
        "cvrs_jsonl": files["cvrs_jsonl"],
        "contests": json.loads(files["contests_json"]),
    }


def enter_all(client, toy, sid, round_payload, skip=None, not_found=None):
    reader = toy.reader()
    responses = []
    for cart in round_payload["groups"].values():
        for tray in cart.values():
            for card in tray:
                cid = card["card_id"]
                if skip and cid in skip:
                    continue
                if not_found and cid in not_found:
                    body = {"card_id": cid, "not_found": True, "readings": {}}
                else:
                    ref = toy.manifest.by_id[cid]
                    body = reader(ref, toy.csd.styles[cid]).to_dict()
                responses.append(client.post(
                    f"/sessions/{sid}/rounds/{round_payload['round']}/interpretations",
                    json=body))
    return responses


class TestHappyPath:
    def test_full_audit_to_confirmation(self, client, toy):
        res = client.post("/sessions", json=create_body(toy))
        assert res.status_code == 200
        envelope = res.json()
        sid = envelope["session_id"]
        assert envelope["complete"] is False
        assert envelope["contests"]["B"]["measured_risk"] == "1"

        res = client.post(f"/sessions/{sid}/rounds")
        assert res.status_code == 200
        rnd = res.json()
        assert rnd["round"] == 1
        assert rnd["cards_total"] > 0

        cards = client.get(f"/sessions/{sid}/rounds/1/cards").json()
        assert cards["cards_total"] == rnd["cards_total"]
        flat = [c for cart in cards["groups"].values()
                for tray in cart.values() for c in tray]
        assert all(c["contests"] for c in flat)

        for res in enter_all(client, toy, sid, rnd):
            assert res.status_code == 200

        res = client.post(f"/sessions/{sid}/rounds/1/finalize")
        assert res.status_code == 200
        body = res.json()
        assert body["result"]["B"]["status"] == "CONFIRMED"
        assert body["result"]["S"]["status"] == "CONFIRMED"
        assert body["status"]["complete"] is True

        report = client.get(f"/sessions/{sid}/report").json()
        assert report["envelope"]["complete"] is True
        assert report["status"]["contests"]["B"]["status"] == "CONFIRMED"

    def test_create_is_idempotent(self, client, toy):
        first = client.post("/sessions", json=create_body(toy)).json()
        second = client.post("/sessions", json=create_body(toy)).json()
        assert first["session_id"] == second["session_id"]


class TestErrorContract:
    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope").status_code == 404

    def test_finalize_incomplete_409_with_missing_cards(self, client, toy):
        sid = client.post("/sessions", json=create_body(toy)).json()["session_id"]
        rnd = client.post(f"/sessions/{sid}/rounds").json()
        flat = [c["card_id"] for cart in rnd["groups"].values()
                for tray in cart.values() for c in tray]
        enter_all(client, toy, sid, rnd, skip={flat[0]})
        res = client.post(f"/sessions/{sid}/rounds/1/finalize")
        assert res.status_code == 409
        body = res.json()
        assert body["error"] == "ROUND_INCOMPLETE"
        assert body["details"]["missing"] == [flat[0]]

    def test_duplicate_interpretation_409(self, client, toy):
        sid = client.post("/sessions", json=create_body(toy)).json()["session_id"]
        rnd = client.post(f"/sessions/{sid}/rounds").json()
        flat = [c["card_id"] for cart in rnd["groups"].values()
                for tray in cart.values() for c in tray]
        body = {"card_id": flat[0], "not_found": True, "readings": {}}
        assert client.post(f"/sessions/{sid}/rounds/1/interpretations",
                           json=body).status_code == 200
        res = client.post(f"/sessions/{sid}/rounds/1/interpretations", json=body)
        assert res.status_code == 409
        assert res.json()["error"] == "UNEXPECTED_CARD"

    def test_interpretation_for_wrong_round_409(self, client, toy):
        sid = client.post("/sessions", json=create_body(toy)).json()["session_id"]
        rnd = client.post(f"/sessions/{sid}/rounds").json()
        enter_all(client, toy, sid, rnd)
        client.post(f"/sessions/{sid}/rounds/1/finalize")
        res = client.post(f"/sessions/{sid}/rounds/1/interpretations",
                          json={"card_id": "1:1:0", "readings": {}})
        assert res.status_code == 409

    def test_schema_violation_422(self, client, toy):
        sid = client.post("/sessions", json=create_body(toy)).json()["session_id"]
        client.post(f"/sessions/{sid}/rounds")
        res = client.post(f"/sessions/{sid}/rounds/1/interpretations",
                          json={"not_found": False})
        assert res.status_code == 422

    def test_plan_twice_409(self, client, toy):
        sid = client.post("/sessions", json=create_body(toy)).json()["session_id"]
        assert client.post(f"/sessions/{sid}/rounds").status_code == 200
        res = client.post(f"/sessions/{sid}/rounds")
        assert res.status_code == 409
        assert res.json()["error"] == "ROUND_STATE"

    def test_round_not_found_404(self, client, toy):
        sid = client.post("/sessions", json=create_body(toy)).json()["session_id"]
        assert client.get(f"/sessions/{sid}/rounds/4/cards").status_code == 404


class TestNotFoundRaisesRisk:
    def test_dashboard_risk_increases(self, client, toy):
        clean_sid = client.post("/sessions", json=create_body(toy)).json()["session_id"]
        rnd = client.post(f"/sessions/{clean_sid}/rounds").json()
        enter_all(client, toy, clean_sid, rnd)
        clean = client.post(f"/sessions/{clean_sid}/rounds/1/finalize").json()

        damaged_body = create_body(toy, config={**CONFIG, "seed": "999999999"})
        damaged_sid = client.post("/sessions", json=damaged_body).json()["session_id"]
        rnd = client.post(f"/sessions/{damaged_sid}/rounds").json()
        flat = [c["card_id"] for cart in rnd["groups"].values()
                for tray in cart.values() for c in tray]
        enter_all(client, toy, damaged_sid, rnd, not_found={flat[0]})
        damaged = client.post(f"/sessions/{damaged_sid}/rounds/1/finalize").json()

        lost_contests = toy.csd.styles[flat[0]]
        for k in lost_contests:
            assert (float(damaged["status"]["contests"][k]["measured_risk"])
                    > float(clean["status"]["contests"][k]["measured_risk"]))
            assert damaged["result"][k]["status"] == "ACTIVE"


class TestDeterminism:
    def test_cli_and_service_write_identical_session_files(self, tmp_path, toy):
        from rlacsd.cli import main as cli_main

        paths = toy.write_files(tmp_path, config=CONFIG)
        cli_session = tmp_path / "cli-session.json"
        assert cli_main(["audit", "init", "--config", paths["config"],
                         "--manifest", paths["manifest_csv"],
                         "--csd", paths["csd_csv"], "--cvrs", paths["cvrs_jsonl"],
                         "--contests", paths["contests_json"],
                         "--session", str(cli_session)]) == 0

        data = tmp_path / "service-data"
        with TestClient(create_app(str(data))) as client:
            sid = client.post("/sessions", json=create_body(toy)).json()["session_id"]
        assert cli_session.read_bytes() == (data / f"{sid}.json").read_bytes()

    def test_same_inputs_byte_identical_session_files(self, tmp_path, toy):
        paths = []
        for name in ("one", "two"):
            data = tmp_path / name
            app = create_app(str(data))
            with TestClient(app) as client:
                sid = client.post("/sessions", json=create_body(toy)).json()["session_id"]
                rnd = client.post(f"/sessions/{sid}/rounds").json()
                enter_all(client, toy, sid, rnd)
                client.post(f"/sessions/{sid}/rounds/1/finalize")
            paths.append(data / f"{sid}.json")
        assert paths[0].read_bytes() == paths[1].read_bytes()


class TestToken:
    def test_missing_token_rejected(self, tmp_path, toy):
        app = create_app(str(tmp_path / "data"), token="hunter2")
        with TestClient(app) as client:
            assert client.post("/sessions", json=create_body(toy)).status_code == 401
            res = client.post("/sessions", json=create_body(toy),
                              headers={"X-Audit-Token": "hunter2"})
            assert res.status_code == 200
