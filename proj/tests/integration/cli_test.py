"""End-to-end checks of the clerms binary: exit codes, --json output, serve + agent-sim."""

import json
import os
import shutil
import signal
import subprocess
import time
import urllib.error
import urllib.request
from pathlib import Path

import pytest

BIN = os.environ.get("CLERMS_BIN", "clerms")
FIXTURES = Path(os.environ.get("CLERMS_FIXTURES", Path(__file__).resolve().parents[1] / "fixtures"))


def run(*args, conf=None, token=None, json_out=False, stdin=None):
    cmd = [BIN]
    if conf:
        cmd += ["--config", str(conf)]
    if token:
        cmd += ["--token", token]
    if json_out:
        cmd.append("--json")
    cmd += [str(a) for a in args]
    env = {k: v for k, v in os.environ.items() if k not in ("CLERMS_TOKEN", "CLERMS_CONFIG")}
    return subprocess.run(cmd, capture_output=True, text=True, input=stdin, timeout=60, env=env)


@pytest.fixture()
def deployment(tmp_path):
    conf = tmp_path / "clerms.conf"
    conf.write_text(
        f"listen_host = 127.0.0.1\nhttp_port = 0\nagent_port = 0\ndata_dir = {tmp_path / 'data'}\n"
        "hours_per_month = 720\n"
    )
    tokens = {}
    for role in ["le_agent", "crisis_manager", "forensic_expert", "legal_advisor", "admin"]:
        r = run("token", "new", "--role", role, "--name", role, "--append", conf=conf, json_out=True)
        assert r.returncode == 0, r.stderr
        out = json.loads(r.stdout)
        assert len(out["token"]) == 48
        tokens[role] = out["token"]
    return conf, tokens, tmp_path


def test_usage_errors_exit_2(deployment):
    conf, tokens, _ = deployment
    assert run().returncode == 2
    assert run("frobnicate").returncode == 2
    assert run("request", conf=conf).returncode == 2
    assert run("request", "list", conf=conf).returncode == 2  # no token
    assert run("report", "transparency", "--from", "x", conf=conf, token=tokens["legal_advisor"]).returncode == 2
    assert run("request", "list", conf="/nonexistent.conf", token="x").returncode == 2


def test_domain_errors_exit_1(deployment):
    conf, tokens, tmp = deployment
    bad = json.loads((FIXTURES / "scenario1_request.json").read_text())
    del bad["requester"]["agent_name"]
    path = tmp / "bad.json"
    path.write_text(json.dumps(bad))
    r = run("request", "submit", path, conf=conf, token=tokens["le_agent"], json_out=True)
    assert r.returncode == 1
    err = json.loads(r.stdout)
    assert err["error"] == "ValidationErrors"
    assert err["detail"]["errors"][0]["field"] == "agent_name"

    r = run("request", "list", conf=conf, token="not-a-token")
    assert r.returncode == 1
    assert "Unauthenticated" in r.stderr
    r = run("case", "show", "nope", conf=conf, token=tokens["crisis_manager"])
    assert r.returncode == 1


def test_submit_list_show_invoice_report(deployment):
    conf, tokens, _ = deployment
    r = run("request", "submit", "-", conf=conf, token=tokens["le_agent"], json_out=True,
            stdin=(FIXTURES / "scenario1_request.json").read_text())
    assert r.returncode == 0, r.stderr
    sub = json.loads(r.stdout)
    assert sub["state"] == "AwaitingDocuments"

    r = run("request", "list", conf=conf, token=tokens["crisis_manager"])
    assert r.returncode == 0
    assert sub["request_id"] in r.stdout
    assert r.stdout.splitlines()[0].split()[:2] == ["request_id", "state"]

    r = run("request", "show", sub["request_id"], conf=conf, token=tokens["le_agent"], json_out=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["request"]["requester"]["agent_name"] == "Mike Davies"

    body = {"resource_lines": [
        {"name": "Osticket", "hourly_rate": "24.27", "hours": "1"},
        {"name": "Kirjuri", "hourly_rate": "24.27", "hours": "1"},
        {"name": "ELK", "hourly_rate": "165.63", "hours": "1"},
        {"name": "Grr c5a.xlarge", "hourly_rate": "0.077", "months": "7", "quantity": 5},
        {"name": "Grr r3.4xlarge", "hourly_rate": "1.328", "months": "7", "quantity": 1},
    ]}
    inv = Path(conf).parent / "invoice.json"
    inv.write_text(json.dumps(body))
    r = run("invoice", "compute", inv, conf=conf, token=tokens["admin"], json_out=True)
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["total"] == "8847.69"
    r = run("invoice", "compute", inv, "--format", "csv", conf=conf, token=tokens["admin"])
    assert r.stdout.splitlines()[0] == "line_type,name,hourly_rate,hours,quantity,amount"
    assert r.stdout.splitlines()[-1] == "total,,,,,8847.69"

    r = run("report", "transparency", "--from", "2019-01-01T00:00:00Z", "--to", "2030-01-01T00:00:00Z",
            "--format", "csv", conf=conf, token=tokens["legal_advisor"])
    assert r.returncode == 0, r.stderr
    assert "received,total,1" in r.stdout
    assert "outcomes,undecided,1" in r.stdout


class Api:
    def __init__(self, port, tokens):
        self.base = f"http://127.0.0.1:{port}/api/v1"
        self.tokens = tokens

    def call(self, method, path, role, body=None, raw=None):
        data = raw if raw is not None else (json.dumps(body).encode() if body is not None else None)
        req = urllib.request.Request(self.base + path, data=data, method=method)
        req.add_header("Authorization", "Bearer " + self.tokens[role])
        req.add_header("Content-Type", "application/octet-stream" if raw is not None else "application/json")
        try:
            with urllib.request.urlopen(req, timeout=10) as resp:
                return resp.status, json.loads(resp.read())
        except urllib.error.HTTPError as e:
            return e.code, json.loads(e.read())


def test_serve_agent_sim_and_verify(deployment):
    conf, tokens, tmp = deployment
    server = subprocess.Popen([BIN, "--config", str(conf), "--json", "serve"], stdout=subprocess.PIPE, text=True)
    agent = None
    try:
        ready = json.loads(server.stdout.readline())
        api = Api(ready["http_port"], tokens)

        code, sub = api.call("POST", "/requests", "le_agent", json.loads((FIXTURES / "scenario1_request.json").read_text()))
        assert code == 201
        rid = sub["request_id"]
        code, doc = api.call("POST", "/documents", "le_agent", raw=b"court order scan")
        assert code == 201
        assert api.call("POST", f"/requests/{rid}/documents", "crisis_manager", {"document_refs": [doc["doc_id"]]})[0] == 200
        assert api.call("POST", f"/requests/{rid}/evaluation", "crisis_manager", {})[0] == 200
        code, _ = api.call("POST", f"/requests/{rid}/decision", "crisis_manager",
                           {"decision": "approve", "rationale": "ok", "public_summary": "ok",
                            "response_data_class": "content"})
        assert code == 200
        code, esc = api.call("POST", f"/requests/{rid}/escalate", "crisis_manager", {})
        assert code == 200
        case_id = esc["case_id"]

        agent = subprocess.Popen(
            [BIN, "agent-sim", "--server", f"127.0.0.1:{ready['agent_port']}", "--root", str(FIXTURES / "sandbox"),
             "--processes", str(FIXTURES / "processes.json"), "--logs", str(FIXTURES / "fluxbb_access.jsonl"),
             "--hostname", "forum-host", "--max-polls", "200", "--interval-ms", "50"],
            stdout=subprocess.PIPE, text=True)
        line = agent.stdout.readline()
        assert line.startswith("registered agent ")
        agent_id = line.split()[-1]

        code, flow = api.call("POST", "/flows", "forensic_expert",
                              {"agent_id": agent_id, "case_id": case_id,
                               "kind": {"type": "FileFinder", "glob": "/var/lib/mysql/fluxbb/**", "action": "fetch"}})
        assert code == 201
        done = agent.stdout.readline()
        assert done.strip() == f"flow {flow['flow_id']} complete"
        code, got = api.call("GET", f"/flows/{flow['flow_id']}", "forensic_expert")
        items = got["result"]["items"]
        assert len(items) == 3
        code, hits = api.call("GET", "/logs/query?client_ip=203.0.113.7", "forensic_expert")
        assert len(hits) == 2
    finally:
        if agent:
            agent.send_signal(signal.SIGTERM)
            agent.wait(timeout=10)
        server.send_signal(signal.SIGTERM)
        assert server.wait(timeout=20) == 0

    evidence = [i["evidence_id"] for i in items]
    for eid in evidence:
        r = run("evidence", "verify", eid, conf=conf)
        assert r.returncode == 0, r.stderr
        assert r.stdout.startswith("Ok (")
    r = run("evidence", "verify", evidence[0], conf=conf, json_out=True)
    assert json.loads(r.stdout)["status"] == "Ok"

    # Flip one byte inside the second custody event.
    chain = tmp / "data" / "chains" / f"{evidence[0]}.jsonl"
    lines = chain.read_text().splitlines(keepends=True)
    assert len(lines) >= 2
    lines[1] = lines[1].replace('"actor":"', '"actor":"X', 1)
    chain.write_text("".join(lines))
    r = run("evidence", "verify", evidence[0], conf=conf)
    assert r.returncode == 1
    assert r.stdout.startswith("BrokenAt(1)") or r.stderr.startswith("BrokenAt(1)")

    # Persisted state survives restart: the request is visible read-only.
    r = run("request", "show", rid, conf=conf, token=tokens["crisis_manager"], json_out=True)
    assert json.loads(r.stdout)["request"]["state"]["value"] == "Escalated"
