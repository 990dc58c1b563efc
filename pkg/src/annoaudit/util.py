"""Small shared helpers: exact fraction counts and thread resolution."""

from __future__ import annotations

import os
from fractions import Fraction

THREADS_ENV = "ANNOAUDIT_THREADS"


def scaled_count(fraction: float, population: int) -> int:
    """Exact floor(fraction * population) for a decimal fraction.

    The fraction is interpreted through its shortest decimal representation
    (str(0.3) == "0.3"), so 0.3 of 10 is 3 even though binary 0.3 * 10 can
    round just below 3.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    if population < 0:
        raise ValueError(f"population must be non-negative, got {population}")
    return int(Fraction(str(fraction)) * population)


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit argument, then ANNOAUDIT_THREADS, then all cores."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env is not None:
            threads = int(env)
    if threads is None:
        return os.cpu_count() or 1
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads
