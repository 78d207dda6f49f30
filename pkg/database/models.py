"""
Database models for computed structure constants
Supports a configured database URL, a SQLite file, or in-memory SQLite
"""
import logging
from contextlib import contextmanager
from datetime import datetime
from fractions import Fraction
from typing import Iterable, List, Optional

from sqlalchemy import Column, DateTime, Integer, String, UniqueConstraint, create_engine
from sqlalchemy.orm import declarative_base, sessionmaker

from config import settings
from exact_core import format_rational, parse_rational

logger = logging.getLogger(__name__)

Base = declarative_base()


def make_engine(url: Optional[str] = None):
    if url:
        return create_engine(url, pool_pre_ping=True)
    if settings.RESULTS_DATABASE_URL:
        return create_engine(settings.RESULTS_DATABASE_URL, pool_pre_ping=True)
    if settings.USE_SQLITE:
        return create_engine(f"sqlite:///{settings.SQLITE_PATH}", connect_args={"check_same_thread": False})
    # In-memory fallback
    return create_engine("sqlite:///:memory:", connect_args={"check_same_thread": False})


engine = make_engine()
SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)


class StructureConstantRecord(Base):
    """One emitted (kind, N, k, d, n) value, stored as an exact "p/q" string"""
    __tablename__ = "structure_constants"
    __table_args__ = (UniqueConstraint("kind", "ambient_n", "k", "d", "n", name="uq_structure_constant"),)

    id = Column(Integer, primary_key=True, autoincrement=True)
    kind = Column(String, nullable=False, index=True)  # virtual | true
    # SQLite column names are case-insensitive, so N cannot share the name of n
    N = Column("ambient_n", Integer, nullable=False)
    k = Column(Integer, nullable=False)
    d = Column(Integer, nullable=False)
    n = Column(Integer, nullable=False)
    value = Column(String, nullable=False)
    created_at = Column(DateTime, default=datetime.utcnow)

    @property
    def exact_value(self) -> Fraction:
        return parse_rational(self.value)


def init_db(bind=None):
    """Initialize database tables"""
    Base.metadata.create_all(bind=bind or engine)
    logger.info("structure constant tables created/verified")


@contextmanager
def get_db():
    """Session for one batch of writes, rolled back on failure"""
    db = SessionLocal()
    try:
        yield db
    except Exception:
        db.rollback()
        raise
    finally:
        db.close()


def record_rows(session, rows: Iterable[dict]) -> int:
    """Upsert rows with keys kind, N, k, d, n, value (Fraction)"""
    count = 0
    for row in rows:
        existing = (
            session.query(StructureConstantRecord)
            .filter_by(kind=row["kind"], N=row["N"], k=row["k"], d=row["d"], n=row["n"])
            .one_or_none()
        )
        text = format_rational(row["value"])
        if existing is None:
            session.add(StructureConstantRecord(
                kind=row["kind"], N=row["N"], k=row["k"], d=row["d"], n=row["n"], value=text,
            ))
        else:
            existing.value = text
        count += 1
    session.commit()
    return count


def fetch_rows(session, kind: str, N: int, k: int, d: Optional[int] = None) -> List[StructureConstantRecord]:
    query = session.query(StructureConstantRecord).filter_by(kind=kind, N=N, k=k)
    if d is not None:
        query = query.filter_by(d=d)
    return query.order_by(StructureConstantRecord.d, StructureConstantRecord.n).all()
