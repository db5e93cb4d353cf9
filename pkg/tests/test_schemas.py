"""The published JSON Schemas must accept what the service actually emits."""

import json
import os

import pytest
from fastapi.testclient import TestClient
from jsonschema import Draft202012Validator
from referencing import Registry, Resource

from rlacsd.service import create_app

SCHEMA_DIR = os.path.join(os.path.dirname(__file__), "..", "schemas")
CONFIG = {"method": "BALLOT_COMPARISON", "seed": "12345678901234567890"}


def load_schema(name):
    with open(os.path.join(SCHEMA_DIR, name)) as fh:
        return json.load(fh)


@pytest.fixture(scope="module")
def registry():
    reg = Registry()
    for name in os.listdir(SCHEMA_DIR):
        if name.endswith(".schema.json"):
            schema = load_schema(name)
            reg = reg.with_resource(schema["$id"], Resource.from_contents(schema))
    return reg


def validator(name, registry):
    return Draft202012Validator(load_schema(name), registry=registry)


class TestServicePayloadsMatchSchemas:
    def test_end_to_end_payloads(self, toy, tmp_path, registry):
        app = create_app(str(tmp_path / "data"))
        with TestClient(app) as client:
            body = {"config": CONFIG, "contests": json.loads(toy.files()["contests_json"]),
                    **{k: v for k, v in toy.files().items() if k != "contests_json"}}
            validator("create-session-request.schema.json", registry).validate(body)

            envelope = client.post("/sessions", json=body).json()
            validator("envelope.schema.json", registry).validate(envelope)
            sid = envelope["session_id"]

            rnd = client.post(f"/sessions/{sid}/rounds").json()
            validator("round.schema.json", registry).validate(rnd)

            reader = toy.reader()
            interp_validator = validator("interpretation.schema.json", registry)
            for cart in rnd["groups"].values():
                for tray in cart.values():
                    for card in tray:
                        ref = toy.manifest.by_id[card["card_id"]]
                        interp = reader(ref, toy.csd.styles[ref.card_id]).to_dict()
                        interp_validator.validate(interp)
                        client.post(f"/sessions/{sid}/rounds/1/interpretations",
                                    json=interp)
            finalized = client.post(f"/sessions/{sid}/rounds/1/finalize").json()
            validator("status.schema.json", registry).validate(finalized["status"])

            cards = client.get(f"/sessions/{sid}/rounds/1/cards").json()
            validator("round.schema.json", registry).validate(cards)

            report = client.get(f"/sessions/{sid}/report").json()
            validator("report.schema.json", registry).validate(report)

            session_path = next((tmp_path / "data").glob("*.json"))
            doc = json.loads(session_path.read_text())
            validator("session-file.schema.json", registry).validate(doc)

    def test_figure_columns_doc_matches_code(self):
        from rlacsd.studies import FIGURE_COLUMNS
        doc = load_schema("figure-grid.columns.json")
        assert [c["name"] for c in doc["columns"]] == FIGURE_COLUMNS
