from fractions import Fraction

import pytest
from sqlalchemy.orm import sessionmaker

from database import cache_file
from database import models
from database.models import StructureConstantRecord, fetch_rows, get_db, init_db, make_engine, record_rows
from errors import CacheFormatError
from gw_reconstruction import CorrelatorStore
from recursion_engine import HypersurfaceParams


def test_header():
    assert cache_file.format_header(5, 5) == "# vgw-cache v1 N=5 k=5"
    assert cache_file.parse_header("# vgw-cache v1 N=7 k=9") == (7, 9)


@pytest.mark.parametrize("line", [
    "vgw-cache v1 N=5 k=5",
    "# vgw-cache v2 N=5 k=5",
    "# vgw-cache v1 N=five k=5",
    "# vgw-cache v1 N=5",
])
def test_bad_headers(line):
    with pytest.raises(CacheFormatError):
        cache_file.parse_header(line)


def test_record_line():
    line = cache_file.format_record(cache_file.CORRELATOR, 2, (3, 2, 1), Fraction(-7, 2))
    assert line == "gw|2|3,2,1|-7/2"
    assert cache_file.parse_record(line, 2) == ("gw", 2, (3, 2, 1), Fraction(-7, 2))


@pytest.mark.parametrize("line", ["gw|1|1,1,1", "xx|1|1,1,1|1/1", "gw|1|1,1,1|2875", "gw|one|1|1/1"])
def test_bad_records(line):
    with pytest.raises(CacheFormatError):
        cache_file.parse_record(line, 3)


def test_save_load_apply(tmp_path, quintic_table):
    store = CorrelatorStore(HypersurfaceParams(5, 5), seed_table=quintic_table)
    store.value([1, 1, 1], 2)
    path = str(tmp_path / "nested" / "quintic.cache")
    cache_file.save(store, path, quintic_table)

    contents = cache_file.load(path)
    assert (contents.N, contents.k) == (5, 5)
    assert contents.table_entries[(2, 0)] == 113400

    fresh = CorrelatorStore(HypersurfaceParams(5, 5), seed_table=quintic_table)
    assert cache_file.apply(contents, fresh) == len(store)
    assert fresh.values == store.values
    assert fresh.status == store.status


def test_load_missing_file(tmp_path):
    assert cache_file.load(str(tmp_path / "absent.cache")) is None


def test_apply_rejects_other_hypersurface(quintic_table):
    contents = cache_file.loads("# vgw-cache v1 N=6 k=5\n")
    store = CorrelatorStore(HypersurfaceParams(5, 5), seed_table=quintic_table)
    with pytest.raises(CacheFormatError):
        cache_file.apply(contents, store)


def test_apply_rejects_stale_table(quintic_table):
    contents = cache_file.loads("# vgw-cache v1 N=5 k=5\nvsc|1|1|771/1\n")
    store = CorrelatorStore(HypersurfaceParams(5, 5), seed_table=quintic_table)
    with pytest.raises(CacheFormatError):
        cache_file.apply(contents, store)


def test_loads_rejects_empty_text():
    with pytest.raises(CacheFormatError):
        cache_file.loads("")


def test_results_database_upsert():
    engine = make_engine("sqlite:///:memory:")
    init_db(bind=engine)
    session = sessionmaker(bind=engine)()
    rows = [
        {"kind": "true", "N": 5, "k": 5, "d": 1, "n": 2, "value": Fraction(575)},
        {"kind": "true", "N": 5, "k": 5, "d": 2, "n": 2, "value": Fraction(975375)},
    ]
    assert record_rows(session, rows) == 2
    assert record_rows(session, [{**rows[0], "value": Fraction(1, 3)}]) == 1
    stored = fetch_rows(session, "true", 5, 5)
    assert [(r.d, r.value) for r in stored] == [(1, "1/3"), (2, "975375/1")]
    assert stored[0].exact_value == Fraction(1, 3)
    assert [r.d for r in fetch_rows(session, "true", 5, 5, d=2)] == [2]
    session.close()


def test_results_table_keeps_N_and_n_apart():
    columns = StructureConstantRecord.__table__.columns.keys()
    assert "ambient_n" in columns and "n" in columns
    assert "N" not in columns


def test_get_db_rolls_back_unfinished_writes(monkeypatch):
    engine = make_engine("sqlite:///:memory:")
    init_db(bind=engine)
    monkeypatch.setattr(models, "SessionLocal", sessionmaker(bind=engine))
    with pytest.raises(RuntimeError):
        with get_db() as session:
            session.add(StructureConstantRecord(kind="true", N=5, k=5, d=1, n=2, value="575/1"))
            session.flush()
            raise RuntimeError("interrupted")
    with get_db() as session:
        assert fetch_rows(session, "true", 5, 5) == []
