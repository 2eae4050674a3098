"""Complex dense linear algebra on Fock space: exact permanents, the Glynn
estimator and its Monte-Carlo mean (Gurvits), occupation-vector combinatorics
and amplitude submatrices.

Permanent conventions: ``permanent_ryser`` (Gray-code Ryser, O(2^n n)) is the
production oracle; ``permanent_naive`` (O(n!) sum over permutations) exists
purely as a cross-check.
"""

import itertools
import math
from typing import Sequence

import numpy as np

#: Largest dimension accepted by the exact-permanent oracles.  The oracles are
#: for verification, not production paths, so we refuse anything bigger.
ORACLE_DIM_CAP = 14


def _check_square(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"square matrix required, got shape {a.shape}")
    return a


def permanent_ryser(a: np.ndarray, dim_cap: int = ORACLE_DIM_CAP) -> complex:
    """Exact permanent via Ryser's formula with Gray-code column updates."""
    a = _check_square(a).astype(complex)
    n = a.shape[0]
    if n > dim_cap:
        raise ValueError(f"dimension {n} exceeds oracle cap {dim_cap}")
    if n == 0:
        return 1 + 0j
    col = np.zeros(n, dtype=complex)  # running row sums over the current subset
    total = 0j
    gray = 0
    for k in range(1, 1 << n):
        new_gray = k ^ (k >> 1)
        j = (new_gray ^ gray).bit_length() - 1
        if new_gray & (1 << j):
            col += a[:, j]
        else:
            col -= a[:, j]
        gray = new_gray
        sign = -1 if new_gray.bit_count() & 1 else 1
        total += sign * np.prod(col)
    return complex((-1) ** n * total)


def permanent_naive(a: np.ndarray, dim_cap: int = ORACLE_DIM_CAP) -> complex:
    """Permanent by direct sum over all n! permutations.  Cross-check oracle."""
    a = _check_square(a).astype(complex)
    n = a.shape[0]
    if n > dim_cap:
        raise ValueError(f"dimension {n} exceeds oracle cap {dim_cap}")
    rows = range(n)
    total = 0j
    for perm in itertools.permutations(range(n)):
        p = 1 + 0j
        for i in rows:
            p *= a[i, perm[i]]
        total += p
    return complex(total)


# Default exact oracle.
permanent_exact = permanent_ryser


def glynn_sample(a: np.ndarray, x: Sequence[int]) -> complex:
    """One Glynn term x1...xn * prod_i (row_i . x) for a sign vector x.

    The exact mean over all 2^n sign vectors equals Perm(a).
    """
    a = _check_square(a)
    x = np.asarray(x)
    if x.shape != (a.shape[0],):
        raise ValueError(f"sign vector length {x.shape} does not match {a.shape}")
    if not np.all(np.abs(x) == 1):
        raise ValueError("sign vector entries must be +-1")
    return complex(np.prod(x) * np.prod(a @ x))


def glynn_exhaustive_mean(a: np.ndarray) -> complex:
    """Exact mean of the Glynn estimator over all 2^n sign vectors."""
    a = _check_square(a)
    n = a.shape[0]
    total = 0j
    for bits in itertools.product((-1, 1), repeat=n):
        total += glynn_sample(a, bits)
    return complex(total / 2**n)


def gurvits_permanent_mc(
    a: np.ndarray, samples: int, rng: np.random.Generator
) -> tuple[complex, float]:
    """Monte-Carlo permanent estimate: mean and standard error of Glynn terms
    over `samples` uniform sign vectors.  Unbiased for Perm(a)."""
    a = _check_square(a).astype(complex)
    if samples < 2:
        raise ValueError("need samples >= 2 for a standard error")
    n = a.shape[0]
    signs = rng.integers(0, 2, size=(samples, n)) * 2 - 1
    vals = np.prod(signs, axis=1) * np.prod(signs @ a.T, axis=1)
    est = vals.mean()
    # Bessel-corrected variance of the complex samples.
    var = np.abs(vals - est) ** 2
    se = math.sqrt(var.sum() / (samples - 1) / samples)
    return complex(est), se


def build_submatrix(
    q: np.ndarray, s_in: Sequence[int], s_out: Sequence[int]
) -> np.ndarray:
    """Amplitude submatrix: row i of q repeated s_out[i] times, then column j
    of that intermediate repeated s_in[j] times."""
    q = _check_square(q)
    s_in = np.asarray(s_in, dtype=int)
    s_out = np.asarray(s_out, dtype=int)
    if s_in.sum() != s_out.sum():
        raise ValueError(f"photon totals differ: {s_in.sum()} vs {s_out.sum()}")
    rows = np.repeat(np.arange(q.shape[0]), s_out)
    cols = np.repeat(np.arange(q.shape[1]), s_in)
    return q[np.ix_(rows, cols)]


def enumerate_fock_space(
    m: int, n: int, collision_free: bool = False
) -> list[tuple[int, ...]]:
    """All occupation vectors of m modes and n photons, in a fixed
    (first-mode-descending) lexicographic order.

    Sizes: C(m+n-1, n) in general, C(m, n) when collision_free.
    """
    if m < 1:
        raise ValueError("m >= 1 required")
    if n < 0:
        raise ValueError("n >= 0 required")
    out: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...], modes_left: int, photons_left: int):
        if modes_left == 0:
            if photons_left == 0:
                out.append(prefix)
            return
        cap = min(photons_left, 1) if collision_free else photons_left
        for c in range(cap, -1, -1):
            rec(prefix + (c,), modes_left - 1, photons_left - c)

    rec((), m, n)
    return out


def fock_space_size(m: int, n: int, collision_free: bool = False) -> int:
    if collision_free:
        return math.comb(m, n)
    return math.comb(m + n - 1, n)


def occupancy_factorial(s: Sequence[int]) -> int:
    """Product of factorials of the occupation numbers (1 when collision-free)."""
    p = 1
    for c in s:
        p *= math.factorial(int(c))
    return p
