"""Shared helpers: a disk cache for the heavy acceptance ensembles.

Verdicts are deterministic functions of (package sources, experiment
kwargs); caching them under a source hash makes re-running the suite after
unrelated edits cheap while guaranteeing staleness is impossible.  Delete
.acceptance_cache/ to force recomputation.
"""

import hashlib
import json
from pathlib import Path

import partnersim

CACHE_DIR = Path(__file__).resolve().parent.parent / ".acceptance_cache"


# modules whose contents determine verdict values; presentation-layer
# modules (artifacts, cli, __init__) are deliberately excluded so cosmetic
# changes do not orphan multi-hour cached ensembles
_NUMERIC_MODULES = (
    "_kernels.py",
    "analytics.py",
    "experiments.py",
    "model_core.py",
    "rng.py",
    "sde.py",
    "simulator.py",
    "stats.py",
)


def _source_hash() -> str:
    pkg = Path(partnersim.__file__).parent
    digest = hashlib.sha256()
    for name in _NUMERIC_MODULES:
        path = pkg / name
        digest.update(name.encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()[:16]


def cached_verdict(name: str, fn, **kwargs) -> dict:
    """Run fn(**kwargs) (a verdict-returning experiment) with disk caching."""
    key = hashlib.sha256(
        json.dumps({"src": _source_hash(), "name": name, "kwargs": repr(sorted(kwargs.items()))}).encode()
    ).hexdigest()[:24]
    path = CACHE_DIR / f"{name}-{key}.json"
    if path.exists():
        return json.loads(path.read_text())
    verdict = fn(**kwargs)
    CACHE_DIR.mkdir(exist_ok=True)
    path.write_text(json.dumps(verdict, sort_keys=True, default=str))
    return verdict
