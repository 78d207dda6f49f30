import json

import pytest
from sqlalchemy.orm import sessionmaker

from app import main, parse_range, render
from database import models
from verification import SUITES


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_vsc_json(capsys):
    code, out, _ = run(capsys, "vsc", "--N", "5", "--k", "5", "--d", "2", "--n", "0", "--format", "json")
    assert code == 0
    assert json.loads(out) == [{"kind": "virtual", "N": 5, "k": 5, "d": 2, "n": 0, "value": "113400/1"}]


def test_vsc_plain_range(capsys):
    code, out, _ = run(capsys, "vsc", "--N", "5", "--k", "5", "--d", "2", "--n-range", "0:2")
    assert code == 0
    assert out.splitlines() == [
        "virtual 5 5 2 0 113400",
        "virtual 5 5 2 1 1435650",
        "virtual 5 5 2 2 3296525",
    ]


def test_vsc_csv(capsys):
    code, out, _ = run(capsys, "vsc", "--N", "5", "--k", "5", "--d", "1", "--n", "1", "--format", "csv")
    assert code == 0
    assert out.splitlines() == ["kind,N,k,d,n,value", "virtual,5,5,1,1,770/1"]


def test_vsc_stable_range_prints_zeros(capsys):
    code, out, _ = run(capsys, "vsc", "--N", "30", "--k", "3", "--d", "2")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 29
    assert all(line.endswith(" 0") for line in lines)


@pytest.mark.parametrize("argv", [
    ["vsc", "--N", "3", "--k", "5", "--d", "1"],
    ["vsc", "--N", "5", "--k", "5", "--d", "1", "--dmax", "2"],
    ["vsc", "--N", "5", "--k", "5", "--d", "7"],
    ["vsc", "--N", "5", "--k", "5", "--d", "1", "--n", "0", "--n-range", "0:1"],
    ["verify", "nope"],
])
def test_validation_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err.startswith("[error]")


def test_gw_with_cache(capsys, tmp_path):
    cache = tmp_path / "quintic.cache"
    code, out, _ = run(capsys, "gw", "--N", "5", "--k", "5", "--d", "1", "--insertions", "1,1,1",
                       "--cache", str(cache), "--format", "json")
    assert code == 0
    assert json.loads(out)[0]["value"] == "2875/1"
    assert cache.read_text().splitlines()[0] == "# vgw-cache v1 N=5 k=5"

    code, out, _ = run(capsys, "gw", "--N", "5", "--k", "5", "--d", "1", "--insertions", "1,1,1",
                       "--cache", str(cache))
    assert code == 0
    assert out.strip() == "gw 5 5 1 1,1,1 2875"


def test_gw_selection_rule_note(capsys, tmp_path):
    code, out, _ = run(capsys, "gw", "--N", "5", "--k", "5", "--d", "1", "--insertions", "3,3,3",
                       "--cache", str(tmp_path / "c.cache"))
    assert code == 0
    assert out.strip() == "gw 5 5 1 3,3,3 0  (selection rule)"


def test_gw_rejects_out_of_range_insertions(capsys, tmp_path):
    code, _, _ = run(capsys, "gw", "--N", "5", "--k", "5", "--d", "1", "--insertions", "4,1,1",
                     "--cache", str(tmp_path / "c.cache"))
    assert code == 2


def test_lsc_calabi_yau(capsys):
    code, out, _ = run(capsys, "lsc", "--N", "5", "--k", "5", "--dmax", "2", "--n", "2")
    assert code == 0
    assert out.splitlines() == ["true 5 5 1 2 575", "true 5 5 2 2 975375"]


def test_lsc_near_fano(capsys):
    code, out, _ = run(capsys, "lsc", "--N", "5", "--k", "4", "--d", "1", "--n", "1")
    assert code == 0
    assert out.strip() == "true 5 4 1 1 80"


def test_lsc_out_of_scope_exits_3(capsys, tmp_path):
    code, _, err = run(capsys, "lsc", "--N", "5", "--k", "7", "--d", "4", "--n", "3",
                       "--cache", str(tmp_path / "c.cache"))
    assert code == 3
    assert "d=4" in err


def test_verify_relations(capsys):
    code, out, _ = run(capsys, "verify", "relations", "--N", "5", "--k", "4", "--dmax", "3")
    assert code == 0
    assert out.splitlines()[-1] == "[relations] OK (1 checks)"


def test_parse_range():
    assert list(parse_range("2:4")) == [2, 3, 4]


def test_render_formats():
    rows = [{"kind": "true", "N": 5, "k": 5, "d": 1, "n": 2, "value": 575}]
    assert render(rows, "plain") == "true 5 5 1 2 575"
    assert render(rows, "csv") == "kind,N,k,d,n,value\ntrue,5,5,1,2,575/1"
    assert json.loads(render(rows, "json"))[0]["value"] == "575/1"


def test_verify_po_alias(capsys):
    code, out, _ = run(capsys, "verify", "po", "--k", "5", "--dmax", "3")
    assert code == 0
    assert out.splitlines()[-1] == "[hypergeometric] OK (9 checks)"


def test_paper_numbers_alias():
    assert SUITES["paper-numbers"] is SUITES["published"]
    assert SUITES["po"] is SUITES["hypergeometric"]


@pytest.mark.slow
def test_verify_paper_numbers(capsys):
    code, out, _ = run(capsys, "verify", "paper-numbers")
    assert code == 0
    assert out.splitlines()[-1] == "[published] OK (4 checks)"


def use_results_database(monkeypatch, url):
    engine = models.make_engine(url)
    monkeypatch.setattr(models, "engine", engine)
    monkeypatch.setattr(models, "SessionLocal", sessionmaker(bind=engine))


def test_vsc_record(capsys, monkeypatch):
    use_results_database(monkeypatch, "sqlite:///:memory:")
    code, out, _ = run(capsys, "vsc", "--N", "5", "--k", "5", "--d", "2", "--n", "0", "--record")
    assert code == 0
    assert out.strip() == "virtual 5 5 2 0 113400"
    with models.get_db() as session:
        stored = models.fetch_rows(session, "virtual", 5, 5)
        assert [(r.N, r.k, r.d, r.n, r.value) for r in stored] == [(5, 5, 2, 0, "113400/1")]


def test_record_failure_exits_6(capsys, monkeypatch, tmp_path):
    use_results_database(monkeypatch, f"sqlite:///{tmp_path / 'missing' / 'results.db'}")
    code, _, err = run(capsys, "vsc", "--N", "5", "--k", "5", "--d", "2", "--n", "0", "--record")
    assert code == 6
    assert err.startswith("[error] could not record rows")
