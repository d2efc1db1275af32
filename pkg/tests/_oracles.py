"""Independent brute-force oracles shared by the test modules."""

import itertools

import numpy as np


def finest_triangular_split(nonzero: np.ndarray):
    """Exhaustive search over orderings for the finest block lower triangular form.

    For a fixed ordering a cut after position q is admissible iff the upper-right
    rectangle is empty; admissible cuts combine freely, so the finest split for an
    ordering keeps every admissible cut.  Returns (k, set of block families).
    """
    n = nonzero.shape[0]
    best_k, families = 0, set()
    for perm in itertools.permutations(range(n)):
        m = nonzero[np.ix_(perm, perm)]
        cuts = [q for q in range(n - 1) if not m[: q + 1, q + 1:].any()]
        bounds = [0] + [q + 1 for q in cuts] + [n]
        blocks = frozenset(frozenset(perm[a:b]) for a, b in zip(bounds, bounds[1:]))
        if len(blocks) > best_k:
            best_k, families = len(blocks), {blocks}
        elif len(blocks) == best_k:
            families.add(blocks)
    return best_k, families


def reachability_components(nonzero: np.ndarray):
    """Mutual-reachability classes from the transitive closure (edge j -> i iff nonzero[i, j])."""
    n = nonzero.shape[0]
    reach = nonzero.T.copy() | np.eye(n, dtype=bool)
    for k in range(n):
        reach |= reach[:, [k]] & reach[[k], :]
    mutual = reach & reach.T
    return frozenset(frozenset(np.flatnonzero(mutual[i]).tolist()) for i in range(n))


def random_pattern(rng, n, density=None):
    p = density if density is not None else rng.uniform(0.05, 0.6)
    m = rng.random((n, n)) < p
    np.fill_diagonal(m, False)
    return m


def steps_reference(t):
    """z' = -z(t) + 2 z(t - 1) with z = 1 on [-1, 0], solved by hand on [0, 2]."""
    t = np.asarray(t, dtype=float)
    first = 2.0 - np.exp(-t)
    second = 4.0 - (2.0 * np.e * t + 1.0) * np.exp(-t)
    return np.where(t <= 1.0, first, second)
