"""Independent reference computations shared by several test modules."""

import numpy as np


def brownian_looks(fractions, n_draws, rng, chunk=1_000_000):
    """Yield chunks of standardized statistics ``W(t_k)/sqrt(t_k)`` at the given fractions."""
    t = np.asarray(fractions, dtype=float)
    dt = np.diff(np.concatenate([[0.0], t]))
    done = 0
    while done < n_draws:
        size = min(chunk, n_draws - done)
        w = np.cumsum(rng.standard_normal((size, t.size)) * np.sqrt(dt), axis=1)
        yield w / np.sqrt(t)
        done += size


def mc_first_crossing(fractions, values, n_draws, seed, two_sided=False):
    """Monte Carlo per-look first-crossing probabilities of fixed critical values."""
    rng = np.random.default_rng(seed)
    c = np.asarray(values, dtype=float)
    counts = np.zeros(c.size)
    for z in brownian_looks(fractions, n_draws, rng):
        stat = np.abs(z) if two_sided else z
        crossed = stat >= c
        first = np.where(crossed.any(axis=1), crossed.argmax(axis=1), -1)
        counts += np.bincount(first[first >= 0], minlength=c.size)
    return counts / n_draws
