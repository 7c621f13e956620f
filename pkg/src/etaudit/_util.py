"""Seed derivation, worker pooling and small shared numerics."""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def rng_for(seed, *key):
    """Deterministic generator for (seed, *key).

    Distinct keys give statistically independent streams, so results do not
    depend on how work is chunked across runs or workers.
    """
    entropy = (int(seed),) + tuple(int(k) for k in key)
    return np.random.default_rng(np.random.SeedSequence(entropy))


def seed_for(seed, *key):
    """A derived 63-bit integer seed for (seed, *key)."""
    entropy = (int(seed),) + tuple(int(k) for k in key)
    state = np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0]
    return int(state >> np.uint64(1))


def thread_cap():
    """Worker-count cap from the ETAUDIT_THREADS environment variable."""
    raw = os.environ.get("ETAUDIT_THREADS", "").strip()
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        return None
    return max(1, value)


def resolve_workers(requested):
    cap = thread_cap()
    workers = max(1, int(requested))
    if cap is not None:
        workers = min(workers, cap)
    return workers


def run_jobs(fn, items, workers=1):
    """Apply ``fn`` to each item, in order, optionally on a thread pool.

    Jobs must be pure functions of their item; output order is the input
    order, so results are invariant to the worker count.
    """
    workers = resolve_workers(workers)
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def sigmoid(t):
    """Numerically stable logistic function, output clipped inside (0, 1)."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return np.clip(out, 1e-12, 1.0 - 1e-12)
