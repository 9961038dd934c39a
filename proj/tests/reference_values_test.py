"""Reference figures used by the acceptance binary, checked against the source text."""

import json
import re
from decimal import Decimal
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
SOURCE = ROOT / "paper.md"
FIXTURES = ROOT / "tests" / "fixtures"


def source_text():
    return SOURCE.read_text(encoding="utf-8")


def cost_table():
    text = source_text()
    start = text.index(r"\textbf{Module}")
    end = text.index(r"\end{tabular}", start)
    return text[start:end]


def to_decimal(cell):
    # "24,27" and "8.847,69" use a decimal comma; "1,940.4" and "6,693.12" a point.
    cell = cell.strip()
    if re.fullmatch(r"\d{1,3}(\.\d{3})*,\d+", cell):
        return Decimal(cell.replace(".", "").replace(",", "."))
    if re.fullmatch(r"\d+,\d{1,2}", cell):
        return Decimal(cell.replace(",", "."))
    return Decimal(cell.replace(",", ""))


def test_monthly_cost_cells():
    table = cost_table()
    assert re.search(r"Osticket\s*&[^&]*&\s*24,27", table)
    assert re.search(r"Kirjuri\s*&[^&]*&\s*24,27", table)
    assert re.search(r"&165,63", table)
    assert "1,940.4" in table
    assert "6,693.12" in table
    assert "8.847,69" in table


def test_rates_and_quantities():
    table = cost_table()
    assert r"5 AWS" in table
    assert r"c5a.xlarge (\$0.077 per hour)" in table
    assert r"one r3.4xlarge" in table
    assert r"(\$1.328 per Hour)" in table


def test_cells_add_up_with_5040_hours():
    # 5040 h is the hour count that reproduces both server lines.
    hours = Decimal(5040)
    assert Decimal("0.077") * hours * 5 == to_decimal("1,940.4")
    assert Decimal("1.328") * hours * 1 == to_decimal("6,693.12")
    cells = ["24,27", "24,27", "165,63", "1,940.4", "6,693.12"]
    assert sum(to_decimal(c) for c in cells) == to_decimal("8.847,69") == Decimal("8847.69")


def test_acceptance_constants_match_the_table():
    src = (ROOT / "tests" / "acceptance" / "acceptance.cpp").read_text(encoding="utf-8")
    for literal in ['"0.077"', '"1.328"', '"5040"', '"24.27"', '"165.63"', "194040", "669312", "884769"]:
        assert literal in src


def test_scenario_strings():
    text = source_text()
    assert "``Mike Davies''" in text
    assert "http://wwww.mydomain.com/fluxbb" in text
    assert "/var/lib/mysql/fluxbb" in text
    # The source writes the surname in lower case; fixtures use "John Smith".
    assert re.search(r"``John [sS]mith''", text)

    req = json.loads((FIXTURES / "scenario1_request.json").read_text())
    assert req["requester"]["agent_name"] == "Mike Davies"
    assert req["target"]["service_uri"] == "http://wwww.mydomain.com/fluxbb"
    assert req["target"]["identifiers"][0]["value"].lower() == "john smith"
    files = sorted(p.name for p in (FIXTURES / "sandbox/var/lib/mysql/fluxbb").iterdir())
    assert len(files) == 3
