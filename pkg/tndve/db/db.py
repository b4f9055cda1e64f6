import logging
import os

from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from sqlalchemy.pool import StaticPool

from ..config import DEFAULT_DATABASE_URL
from .models import Base

logger = logging.getLogger(__name__)

# Database URL from the environment, SQLite file otherwise
SQLALCHEMY_DATABASE_URL = os.getenv('TNDVE_DATABASE_URL', DEFAULT_DATABASE_URL)


def _make_engine(url: str):
    if url.startswith('sqlite'):
        kwargs = {'connect_args': {'check_same_thread': False}}
        if url in ('sqlite://', 'sqlite:///:memory:'):
            kwargs['poolclass'] = StaticPool
        return create_engine(url, **kwargs)
    return create_engine(url)


engine = _make_engine(SQLALCHEMY_DATABASE_URL)

SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)


def configure(url: str):
    """Point the engine and SessionLocal at another database URL."""
    global engine, SQLALCHEMY_DATABASE_URL
    SQLALCHEMY_DATABASE_URL = url
    engine = _make_engine(url)
    SessionLocal.configure(bind=engine)
    logger.debug(f"database configured: {url}")
    return engine


# Create all tables
def init_db():
    Base.metadata.create_all(bind=engine)


# Drop all tables
def drop_db():
    Base.metadata.drop_all(bind=engine)
