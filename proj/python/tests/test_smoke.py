import hashlib
import json
import os
import struct
from pathlib import Path

import pytest

import clerms

FIXTURES = Path(os.environ.get("CLERMS_FIXTURES", Path(__file__).resolve().parents[2] / "tests" / "fixtures"))

TOKENS = {
    "le_agent": "py-le",
    "crisis_manager": "py-cm",
    "forensic_expert": "py-fe",
    "legal_advisor": "py-la",
}


def test_sha256_matches_hashlib():
    for data in [b"", b"abc", bytes(range(256)) * 10]:
        assert clerms.sha256_hex(data) == hashlib.sha256(data).hexdigest()


def test_line_costs_and_invoice():
    assert clerms.compute_line_cost("0.077", "5040", 5) == "1940.40"
    assert clerms.compute_line_cost("1.328", "5040") == "6693.12"
    inv = clerms.compute_invoice({"resource_lines": [
        {"name": "Osticket", "hourly_rate": "24.27", "hours": "1"},
        {"name": "Kirjuri", "hourly_rate": "24.27", "hours": "1"},
        {"name": "ELK", "hourly_rate": "165.63", "hours": "1"},
        {"name": "c5a", "hourly_rate": "0.077", "hours": "5040", "quantity": 5},
        {"name": "r3", "hourly_rate": "1.328", "hours": "5040"},
    ]})
    assert inv["total"] == "8847.69"
    with pytest.raises(clerms.ClermsError) as e:
        clerms.compute_line_cost("-1", "1")
    assert clerms.error_code(e.value) == "NegativeInput"


def test_frames_match_an_independent_encoding():
    payload = {"b": [1, 2], "a": "x"}
    body = json.dumps({"payload": payload, "type": "POLL", "v": 1}, sort_keys=True, separators=(",", ":")).encode()
    expected = struct.pack(">I", len(body)) + body
    frame = clerms.encode_frame("POLL", json.dumps(payload))
    assert frame == expected
    assert clerms.decode_frame(frame) == ("POLL", payload)
    with pytest.raises(clerms.ClermsError) as e:
        clerms.decode_frame(b"\x00\x00\x00\x02{}")
    assert clerms.error_code(e.value) == "MalformedFrame"


def test_validation_and_schema():
    body = json.loads((FIXTURES / "scenario1_request.json").read_text())
    assert clerms.validate_submission(body)["ok"]
    del body["requester"]["agency_country"]
    res = clerms.validate_submission(body)
    assert not res["ok"]
    assert res["errors"][0]["field"] == "agency_country"
    assert res["errors"][0]["block"] == "c"
    assert clerms.request_schema()["type"] == "object"
    edges = {(r["from"], r["to"]) for r in clerms.transition_table()}
    assert ("Rejected", "ActionApplied") not in edges


@pytest.fixture()
def service(tmp_path):
    lines = [f"data_dir = {tmp_path / 'data'}"]
    for i, (role, token) in enumerate(TOKENS.items()):
        pid = f"{i + 1:08d}-0000-4000-8000-000000000000"
        lines.append(f"principal.{pid} = {role}:{hashlib.sha256(token.encode()).hexdigest()}")
    conf = tmp_path / "clerms.conf"
    conf.write_text("\n".join(lines) + "\n")
    return conf


def test_scenario_through_the_service(service):
    s = clerms.Service(service)
    le, cm, fe = TOKENS["le_agent"], TOKENS["crisis_manager"], TOKENS["forensic_expert"]
    sub = s.submit_request(le, json.loads((FIXTURES / "scenario1_request.json").read_text()))
    rid = sub["request_id"]
    doc = s.upload_document(le, b"scan")["doc_id"]
    s.receive_documents(cm, rid, [doc])
    s.begin_evaluation(cm, rid)
    s.record_decision(cm, rid, {"decision": "approve", "rationale": "r", "public_summary": "p",
                                "response_data_class": "content"})
    case_id = s.escalate(cm, rid)["case_id"]

    reg = s.run_agent(str(FIXTURES / "sandbox"), logs_file=str(FIXTURES / "fluxbb_access.jsonl"), polls=1)
    agent_id = reg["agent_id"]
    flow = s.launch_flow(fe, {"agent_id": agent_id, "case_id": case_id,
                              "kind": {"type": "FileFinder", "glob": "/var/lib/mysql/fluxbb/**", "action": "fetch"}})
    out = s.run_agent(str(FIXTURES / "sandbox"), polls=1, agent_id=agent_id)
    assert out["agent_id"] == agent_id
    assert [r["flow_id"] for r in out["results"]] == [flow["flow_id"]]

    got = s.get_flow(fe, flow["flow_id"])
    items = got["result"]["items"]
    assert len(items) == 3
    for item in items:
        content = (FIXTURES / "sandbox" / item["path"].lstrip("/")).read_bytes()
        assert item["evidence_id"] == hashlib.sha256(content).hexdigest()
        assert s.verify_evidence(item["evidence_id"])["status"] == "Ok"
    assert len(s.query_logs(fe, client_ip="203.0.113.7")) == 2

    report = s.upload_document(fe, b"forensic report")["doc_id"]
    s.add_report(fe, case_id, report, "forensic_report")
    s.apply_action(cm, rid, "collected")
    s.close_case(cm, case_id)
    resp = s.issue_response(cm, rid, "attached")
    assert resp["response"]["data_class"] == "content"

    digest = s.state_digest()
    del s
    assert clerms.Service(service, read_only=True).state_digest() == digest

    with pytest.raises(clerms.ClermsError) as e:
        clerms.Service(service, read_only=True).read_case(le, case_id)
    assert clerms.error_code(e.value) == "Forbidden"
