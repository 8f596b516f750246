"""
Replication Runner
File: utils/parallel.py
"""

import logging
import os

from joblib import Parallel, delayed
from tqdm import tqdm

from utils.errors import GeopercError, ReplicationError

logger = logging.getLogger(__name__)

DEFAULT_THREADS = int(os.getenv('GEOPERC_THREADS', 1))


def _guarded(task, replication):
    try:
        return task(replication)
    except ReplicationError:
        raise
    except GeopercError as exc:
        raise ReplicationError(replication, exc) from exc


def run_replications(task, replications, n_jobs=None, start=0, progress=False, desc='replications'):
    """Run task(r) for r in [start, start + replications) and return results in index order

    The result list is identical for every n_jobs because each replication
    derives its own random streams from its index.
    """
    n_jobs = DEFAULT_THREADS if n_jobs is None else n_jobs
    indices = range(start, start + replications)
    if progress:
        indices = tqdm(indices, desc=desc, leave=False)
    if n_jobs == 1:
        return [_guarded(task, r) for r in indices]
    logger.debug("running %d replications on %d workers", replications, n_jobs)
    return Parallel(n_jobs=n_jobs)(delayed(_guarded)(task, r) for r in indices)
