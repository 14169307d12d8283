import hashlib
import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import kent.database
import kent.sepeig
from kent.database import build_db, load_db, save_db
from kent.errors import KentError

settings.register_profile("kent", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("kent")

CACHE = Path(os.environ.get("KENT_TEST_CACHE", Path(__file__).parent / ".dbcache"))
# cached files are keyed by the source that produced them
_BUILD_TAG = hashlib.sha256(
    b"".join(Path(m.__file__).read_bytes() for m in (kent.database, kent.sepeig))
).hexdigest()[:10]


def cached_db(n, count, seed=0):
    """Build a random database once and reuse it across sessions."""
    CACHE.mkdir(parents=True, exist_ok=True)
    path = CACHE / f"n{n}_c{count}_s{seed}_{_BUILD_TAG}.kdb"
    if path.exists():
        try:
            return load_db(path)
        except KentError:
            path.unlink()
    db = build_db(n, count, master_seed=seed)
    save_db(db, path)
    return db


@pytest.fixture(scope="session")
def small_dbs():
    return {n: cached_db(n, 60, seed=11) for n in (2, 3, 4)}


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


REPORT = pytest.StashKey[dict]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(REPORT, None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(lines):
        parts = lines[criterion]
        verdict = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        detail = " | ".join(f"{p + ': ' if p else ''}{'pass' if ok else 'fail'}, {d}" for p, ok, d in parts)
        terminalreporter.write_line(f"criterion {criterion:>2}: {verdict}  {detail}")
