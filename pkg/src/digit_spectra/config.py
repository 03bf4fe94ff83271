"""Configuration management for digit-spectra.

Handles environment variables, numeric limits and resource probes.
"""

from __future__ import annotations

import os

import psutil  # type: ignore[import-untyped]

# Environment variable names
ENV_THREADS = "DIGIT_SPECTRA_THREADS"
ENV_BLOCK_SIZE = "DIGIT_SPECTRA_BLOCK_SIZE"
ENV_MEMORY_FRACTION = "DIGIT_SPECTRA_MEMORY_FRACTION"

# Defaults
DEFAULT_BLOCK_SIZE = 1 << 20
DEFAULT_MEMORY_FRACTION = 0.5
DEFAULT_CHECKPOINTS = (10**3, 10**4, 10**5, 10**6, 10**7)
DEFAULT_DECAY_GRID = 1 << 18
DEFAULT_L_MAX = 12
DEFAULT_DELTA_MIN = 1e-4

# Numeric limits
MAX_DENOMINATOR = 1 << 31
EXACT_BUCKET_LIMIT = 1024
PERIODICITY_TOLERANCE = 1e-9
MAX_INPUT = (1 << 128) - 1
MAX_SIEVE_HI = 1 << 63
MAX_COMPONENT_SIDE = 10**6
MAX_DENSE_COMPONENT = 20000
MAX_DIRECT_TERMS = 1 << 24
MAX_CARRY_WORK = 1 << 32


def get_threads(override: int | None = None) -> int:
    """Get the worker count.

    Args:
        override: If provided, use this value instead of env/default.
    """
    if override:
        return max(1, int(override))
    env = os.environ.get(ENV_THREADS)
    if env:
        return max(1, int(env))
    return psutil.cpu_count(logical=True) or 1


def get_block_size(override: int | None = None) -> int:
    """Get the sieve block size in entries."""
    if override:
        return int(override)
    env = os.environ.get(ENV_BLOCK_SIZE)
    if env:
        return int(env)
    return DEFAULT_BLOCK_SIZE


def get_memory_budget() -> int:
    """Bytes a single computation may plan to hold resident."""
    fraction = float(os.environ.get(ENV_MEMORY_FRACTION, DEFAULT_MEMORY_FRACTION))
    return int(psutil.virtual_memory().available * fraction)
