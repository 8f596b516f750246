"""
Deterministic Random Streams
File: utils/rng.py

Every replication r of an experiment derives its seeds from (master_seed, r)
and a fixed stream label, so replications can run in any order or process.
"""

import numpy as np

from utils.errors import ParameterError

__all__ = [
    'POINT_STREAM', 'LINE_STREAM', 'FIELD_STREAM', 'SAMPLE_STREAM',
    'COLOUR_STREAM', 'MAX_SEED', 'validate_seed', 'stream_seed', 'generator',
]

POINT_STREAM = 0
LINE_STREAM = 1
FIELD_STREAM = 2
SAMPLE_STREAM = 3
COLOUR_STREAM = 4

MAX_SEED = 2 ** 64 - 1


def validate_seed(seed):
    """Return seed as int, rejecting anything outside [0, 2**64)"""
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise ParameterError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ParameterError(f"seed must lie in [0, 2**64), got {seed}")
    return seed


def stream_seed(master_seed, replication, label):
    """64-bit seed for one (replication, stream label) pair"""
    sequence = np.random.SeedSequence(
        entropy=validate_seed(master_seed),
        spawn_key=(int(replication), int(label)),
    )
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def generator(seed, *labels):
    """numpy Generator for seed, optionally split further by labels"""
    sequence = np.random.SeedSequence(
        entropy=validate_seed(seed),
        spawn_key=tuple(int(label) for label in labels),
    )
    return np.random.default_rng(sequence)
