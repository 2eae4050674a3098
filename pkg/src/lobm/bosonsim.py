"""Exact brute-force boson-sampling simulation.

Desk-scale only: the full output distribution is enumerated and every
probability computed from a permanent.  This replaces dedicated sampling
algorithms as the oracle and dataset generator; the Fock-space cap refuses
configurations beyond what exact enumeration can handle.
"""

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuits import compose_unitary
from .core import (
    build_submatrix,
    enumerate_fock_space,
    fock_space_size,
    occupancy_factorial,
    permanent_ryser,
)
from .rng import substream

FOCK_SPACE_CAP = 200_000
_COLLISION_RETRY_CAP = 1_000_000


@dataclass
class OutputDistribution:
    domain: list[tuple[int, ...]]
    probabilities: np.ndarray

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return dict(zip(self.domain, self.probabilities))


def output_distribution(
    u: np.ndarray, s_in: Sequence[int], cap: int = FOCK_SPACE_CAP
) -> OutputDistribution:
    """Exact output distribution |Perm(U_{s_in,s_out})|^2 / (prod s_in! prod s_out!)
    over the full n-photon Fock space."""
    u = np.asarray(u)
    s_in = tuple(int(c) for c in s_in)
    m = u.shape[0]
    n = sum(s_in)
    size = fock_space_size(m, n)
    if size > cap:
        raise ValueError(
            f"Fock space size {size} exceeds cap {cap}; exact simulation is "
            "desk-scale only (paper-scale data requires a dedicated sampler)"
        )
    in_fact = occupancy_factorial(s_in)
    domain = enumerate_fock_space(m, n)
    probs = np.empty(len(domain))
    for i, s_out in enumerate(domain):
        amp = permanent_ryser(build_submatrix(u, s_in, s_out), dim_cap=n)
        probs[i] = abs(amp) ** 2 / (in_fact * occupancy_factorial(s_out))
    total = probs.sum()
    if abs(total - 1.0) > 1e-9:
        raise ArithmeticError(f"distribution normalization off by {total - 1.0:g}")
    probs /= total
    return OutputDistribution(domain=domain, probabilities=probs)


def draw_samples(
    dist: OutputDistribution, count: int, rng: np.random.Generator
) -> np.ndarray:
    """i.i.d. inverse-CDF samples as an (count, m) integer array."""
    cdf = np.cumsum(dist.probabilities)
    idx = np.searchsorted(cdf, rng.random(count), side="right")
    idx = np.minimum(idx, len(dist.domain) - 1)
    states = np.asarray(dist.domain, dtype=np.int64)
    return states[idx]


def haar_unitary(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via the Gaussian-parametrized QR ansatz."""
    return compose_unitary("qr_haar", m, rng.standard_normal(2 * m * m))


def generate_boson_dataset(
    m: int,
    n: int,
    dataset_size: int,
    seed: int,
    collision_free: bool = False,
):
    """Dataset sampled exactly from a seeded Haar-random interferometer.

    Returns a data-io Dataset carrying a generator record (seed, m, n,
    unitary checksum) in its provenance lines.
    """
    from .dataio import Dataset

    u = haar_unitary(m, substream(seed, "boson-unitary"))
    s_in = tuple([1] * n + [0] * (m - n))
    dist = output_distribution(u, s_in)
    rng = substream(seed, "boson-samples")
    if collision_free:
        records = []
        tries = 0
        while len(records) < dataset_size:
            batch = draw_samples(dist, max(dataset_size, 1024), rng)
            for row in batch:
                tries += 1
                if tries > _COLLISION_RETRY_CAP:
                    raise RuntimeError(
                        "collision-free rejection exceeded the retry cap"
                    )
                if row.max() <= 1:
                    records.append(tuple(int(c) for c in row))
                    if len(records) == dataset_size:
                        break
    else:
        records = [tuple(int(c) for c in row) for row in draw_samples(dist, dataset_size, rng)]
    checksum = hashlib.sha256(np.ascontiguousarray(u).tobytes()).hexdigest()[:16]
    provenance = [
        f"generator boson-exact seed={seed} m={m} n={n} "
        f"collision_free={int(collision_free)} unitary_sha256={checksum}",
    ]
    return Dataset(
        m=m,
        n=n,
        records=records,
        collision_flag=not collision_free and any(max(r) > 1 for r in records),
        provenance=provenance,
    )
