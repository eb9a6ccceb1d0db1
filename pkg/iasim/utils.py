"""Small helpers shared by the sweep runner and the CLI."""

import hashlib
import logging
import time
from contextlib import contextmanager
from typing import Dict, Iterator

logger = logging.getLogger(__name__)


def hash_text(text: str) -> str:
    """Fingerprint a sweep configuration so result files can be traced to it."""
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return f"sha256:{digest}"


@contextmanager
def timed(bucket: Dict[str, int], key: str) -> Iterator[None]:
    """
    Accumulate the wall time of a phase into ``bucket[key]``.

    Args:
        bucket: Per-phase totals in milliseconds
        key: Phase name, e.g. ``theory`` or ``monte_carlo``
    """
    start = time.perf_counter()
    try:
        yield
    finally:
        elapsed_ms = int((time.perf_counter() - start) * 1000)
        bucket[key] = bucket.get(key, 0) + elapsed_ms
        logger.debug("%s took %d ms", key, elapsed_ms)
