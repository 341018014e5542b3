"""Registry serialization tests: the case registry round-trips through
JSON, and any edit to the stored expressions is detected on import.
"""

import json

import pytest

from chlax.reduction import CASE_IDS, ReductionError, export_cases, import_cases


def test_export_import_round_trip(tmp_path):
    path = tmp_path / "cases.json"
    payload = export_cases(str(path), n=1)
    assert set(payload["cases"]) == set(CASE_IDS)
    assert payload["schema_version"] == 1
    back = import_cases(str(path))
    assert back == json.loads(path.read_text())


@pytest.mark.parametrize("n", [1, 2])
def test_round_trip_per_order(tmp_path, n):
    path = tmp_path / f"cases_{n}.json"
    export_cases(str(path), n=n)
    assert import_cases(str(path))["n"] == n


def test_tampered_expression_is_detected(tmp_path):
    path = tmp_path / "cases.json"
    export_cases(str(path), n=1)
    payload = json.loads(path.read_text())
    payload["cases"]["I.1"]["z1"] = "x + t"
    path.write_text(json.dumps(payload))
    with pytest.raises(ReductionError, match="I.1"):
        import_cases(str(path))


def test_tampered_jacobian_entry_is_detected(tmp_path):
    path = tmp_path / "cases.json"
    export_cases(str(path), n=1)
    payload = json.loads(path.read_text())
    (zname, row), = list(payload["cases"]["IV.2"]["jacobian"].items())[:1]
    vname = next(iter(row))
    row[vname] = f"2*({row[vname]})"
    path.write_text(json.dumps(payload))
    with pytest.raises(ReductionError, match="IV.2"):
        import_cases(str(path))


def test_wrong_schema_version_is_rejected(tmp_path):
    path = tmp_path / "cases.json"
    export_cases(str(path), n=1)
    payload = json.loads(path.read_text())
    payload["schema_version"] = 99
    path.write_text(json.dumps(payload))
    with pytest.raises(ReductionError, match="schema"):
        import_cases(str(path))


def test_export_is_deterministic(tmp_path):
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    export_cases(str(p1), n=1)
    export_cases(str(p2), n=1)
    assert p1.read_text() == p2.read_text()
