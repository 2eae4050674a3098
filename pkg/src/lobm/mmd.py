"""Maximum mean discrepancy machinery.

Covers the Gaussian and mod-2 kernels, the bandwidth-derived Bernoulli mask
distribution, exact MMD oracles on enumerated domains, the classical unbiased
sample estimator, the exact single-permanent observable expectation, and the
full permanent-free Monte-Carlo estimator of the squared MMD (masks x Glynn
sign vectors x data batch).
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import bosonsim
from .circuits import CircuitSpec
from .core import build_submatrix, occupancy_factorial, permanent_ryser
from .rng import substream


@dataclass(frozen=True)
class KernelConfig:
    sigma: float
    kind: str = "gaussian"  # "gaussian" | "mod2"

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("bandwidth sigma must be positive")
        if self.kind not in ("gaussian", "mod2"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")


@dataclass(frozen=True)
class MMDConfig:
    sigma: float
    mask_batch: int
    glynn_batch: int
    data_batch: int

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.mask_batch < 1:
            raise ValueError("mask batch must be >= 1")
        if self.glynn_batch < 2 or self.data_batch < 2:
            raise ValueError("glynn and data batches need >= 2 elements")


def _pair(x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    return x, y


def gaussian_kernel(x, y, sigma: float) -> float:
    """exp(-||x - y||^2 / 2 sigma^2)."""
    x, y = _pair(x, y)
    return float(np.exp(-np.sum((x - y) ** 2) / (2 * sigma**2)))


def mod2_kernel(x, y, sigma: float) -> float:
    """exp(-(sum_i (x_i + y_i) mod 2) / 2 sigma^2).

    Coincides with the Gaussian kernel on 0/1 vectors; this is the form the
    mask-observable decomposition reproduces at every collision level.
    """
    x, y = _pair(x, y)
    return float(np.exp(-np.sum((x + y) % 2) / (2 * sigma**2)))


def kernel_value(x, y, cfg: KernelConfig) -> float:
    if cfg.kind == "gaussian":
        return gaussian_kernel(x, y, cfg.sigma)
    return mod2_kernel(x, y, cfg.sigma)


def _gram(xs: np.ndarray, ys: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if cfg.kind == "gaussian":
        d = ((xs[:, None, :] - ys[None, :, :]) ** 2).sum(-1)
    else:
        d = ((xs[:, None, :] + ys[None, :, :]) % 2).sum(-1)
    return np.exp(-d / (2 * cfg.sigma**2))


def p_sigma(sigma: float) -> float:
    """Bernoulli bit probability (1 - e^{-1/2 sigma^2}) / 2 of the mask
    distribution; lies in (0, 1/2)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return (1.0 - math.exp(-1.0 / (2.0 * sigma**2))) / 2.0


def sample_mask(m: int, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """One mask of m i.i.d. Bernoulli(p_sigma) bits."""
    return (rng.random(m) < p_sigma(sigma)).astype(np.int64)


def sample_masks(m: int, sigma: float, count: int, rng) -> np.ndarray:
    return (rng.random((count, m)) < p_sigma(sigma)).astype(np.int64)


def sample_sign_vectors(n: int, count: int, rng) -> np.ndarray:
    return rng.integers(0, 2, size=(count, n)) * 2 - 1


# --- exact oracles ------------------------------------------------------------

def mmd_exact(p: dict, q: dict, cfg: KernelConfig) -> float:
    """Squared MMD between two normalized distributions given as
    {occupation tuple: probability} dicts over a common finite domain."""
    for name, dist in (("p", p), ("q", q)):
        total = sum(dist.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"distribution {name} is unnormalized: sum = {total}")
    domain = sorted(set(p) | set(q))
    xs = np.array(domain, dtype=float)
    gram = _gram(xs, xs, cfg)
    pv = np.array([p.get(x, 0.0) for x in domain])
    qv = np.array([q.get(x, 0.0) for x in domain])
    return float(pv @ gram @ pv - 2.0 * pv @ gram @ qv + qv @ gram @ qv)


def mmd_unbiased_samples(
    xs: Sequence, ys: Sequence, cfg: KernelConfig
) -> float:
    """The unbiased three-term sample estimator of the squared MMD (diagonal
    terms excluded); may be negative."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    nx, ny = len(xs), len(ys)
    if nx < 2 or ny < 2:
        raise ValueError("both batches need at least two samples")
    kxx = _gram(xs, xs, cfg)
    kyy = _gram(ys, ys, cfg)
    kxy = _gram(xs, ys, cfg)
    t1 = (kxx.sum() - np.trace(kxx)) / (nx * (nx - 1))
    t2 = -2.0 * kxy.mean()
    t3 = (kyy.sum() - np.trace(kyy)) / (ny * (ny - 1))
    return float(t1 + t2 + t3)


def expectation_wk_exact(
    u: np.ndarray, s: Sequence[int], k: Sequence[int]
) -> float:
    """Exact <s| U~^dag W~^k U~ |s> as a single permanent of the conjugated
    diagonal +-1 observable, divided by the occupancy factorials."""
    u = np.asarray(u)
    k = np.asarray(k, dtype=int)
    s = np.asarray(s, dtype=int)
    w = 1.0 - 2.0 * (k % 2)
    q = u.conj().T @ (w[:, None] * u)
    val = permanent_ryser(build_submatrix(q, s, s)) / occupancy_factorial(s)
    if abs(val.imag) > 1e-8:
        raise ArithmeticError(f"expectation has imaginary part {val.imag:g}")
    return float(val.real)


@dataclass(frozen=True)
class LoExactResult:
    value: float
    collision_mass: Optional[float] = None


def mmd_lo_exact(
    u: np.ndarray,
    s: Sequence[int],
    sigma: float,
    kernel_mode: str = "mod2",
    mask_cap: int = 16,
) -> LoExactResult:
    """Exact model-model MMD term of the linear-optical observable.

    kernel_mode "mod2": sum_k P_sigma(k) <W~^k>^2 over all 2^m masks; equals
    the mod-2-kernel model-model term at every collision level.

    kernel_mode "gaussian_collision_free": the Gaussian-kernel model-model
    term restricted to the collision-free part of the exact output
    distribution, with the probability mass lost to collisions reported.
    """
    u = np.asarray(u)
    s = np.asarray(s, dtype=int)
    m = u.shape[0]
    if m > mask_cap:
        raise ValueError(f"m={m} exceeds the exhaustive-mask cap {mask_cap}")
    if kernel_mode == "mod2":
        ps = p_sigma(sigma)
        total = 0.0
        for code in range(1 << m):
            k = np.array([(code >> i) & 1 for i in range(m)])
            weight = ps ** k.sum() * (1 - ps) ** (m - k.sum())
            total += weight * expectation_wk_exact(u, s, k) ** 2
        return LoExactResult(value=total)
    if kernel_mode == "gaussian_collision_free":
        dist = bosonsim.output_distribution(u, s)
        cf = [
            (np.array(x, dtype=float), pr)
            for x, pr in zip(dist.domain, dist.probabilities)
            if max(x) <= 1
        ]
        xs = np.array([x for x, _ in cf])
        pv = np.array([pr for _, pr in cf])
        gram = _gram(xs, xs, KernelConfig(sigma, "gaussian"))
        return LoExactResult(
            value=float(pv @ gram @ pv), collision_mass=float(1.0 - pv.sum())
        )
    raise ValueError(f"unknown kernel_mode {kernel_mode!r}")


# --- the Monte-Carlo estimator ------------------------------------------------

_CHUNK = 512  # mask-axis chunk; bounds the (chunk, n, |Z|) intermediate


def _glynn_scalar_sums(xp, v, wsigns, z, t, chunk=_CHUNK):
    """Accumulate sum_i S_i^2, sum_i sum_j F_ij^2 and sum_i S_i T_i, where
    F_ij is the Glynn sample of mask i with sign vector j and S_i its row sum.

    Works with xp = numpy or jax.numpy; the chunk loop is identical in both
    so the two paths evaluate the same association order.
    """
    nmask = wsigns.shape[0]
    n = v.shape[1]
    nz = z.shape[0]
    zt = (z + 0j).T
    zprod = xp.prod(z, axis=1)
    ss = 0.0 + 0j
    f2 = 0.0 + 0j
    st = 0.0 + 0j
    for lo in range(0, nmask, chunk):
        w = wsigns[lo : lo + chunk]
        a = xp.einsum("mi,km,mj->kij", xp.conj(v), w, v)
        r = (a.reshape(-1, n) @ zt).reshape(len(w), n, nz)
        f = xp.prod(r, axis=1) * zprod[None, :]
        s = f.sum(axis=1)
        ss = ss + (s * s).sum()
        f2 = f2 + (f * f).sum()
        st = st + (s * t[lo : lo + chunk]).sum()
    return ss, f2, st


def _assemble_mmd_hat(xp, ss, f2, st, t2sum, nmask, nz, nx):
    t1 = (ss - f2) / (nmask * nz * (nz - 1))
    t2 = -2.0 * st / (nmask * nz * nx)
    t3 = (t2sum - nmask * nx) / (nmask * nx * (nx - 1))
    return xp.real(t1 + t2) + t3


def _data_mask_sums(masks: np.ndarray, xs: np.ndarray):
    """Per-mask sums T_i of the data signs (-1)^{x.k} and sum_i T_i^2."""
    g = 1.0 - 2.0 * ((xs @ masks.T) % 2)  # (|X|, |K|)
    t = g.sum(axis=0)
    return t, float((t * t).sum())


def mmd_hat_figure1(
    xs: Sequence, masks: Sequence, signs: Sequence, spec: CircuitSpec
) -> float:
    """Unbiased Monte-Carlo estimate of the squared MMD between the circuit's
    output distribution and the data batch.

    xs: data batch of length-m bitstrings; masks: 0/1 mask batch of length m;
    signs: +-1 Glynn sign vectors of length n.  Two independent sign vectors
    estimate the squared observable expectation without bias; the estimator's
    imaginary part has zero mean and is discarded.
    """
    xs = np.asarray(xs, dtype=np.int64)
    masks = np.asarray(masks, dtype=np.int64)
    signs = np.asarray(signs, dtype=np.int64)
    nx, nk, nz = len(xs), len(masks), len(signs)
    if nk < 1:
        raise ValueError("mask batch must be >= 1")
    if nz < 2 or nx < 2:
        raise ValueError("glynn and data batches need >= 2 elements")
    if masks.shape[1] != spec.m or xs.shape[1] != spec.m:
        raise ValueError("masks and data must have length m")
    if signs.shape[1] != spec.n:
        raise ValueError("sign vectors must have length n")
    v = spec.unitary()[:, spec.photon_modes]
    wsigns = (1.0 - 2.0 * (masks % 2)).astype(float)
    t, t2sum = _data_mask_sums(masks, xs)
    ss, f2, st = _glynn_scalar_sums(np, v, wsigns, signs.astype(float), t)
    return float(_assemble_mmd_hat(np, ss, f2, st, t2sum, nk, nz, nx))


def draw_batches(
    spec_m: int,
    spec_n: int,
    data: np.ndarray,
    cfg: MMDConfig,
    seed: int,
    *path,
):
    """(X, K, Z) batches from dedicated substreams of (seed, path)."""
    data = np.asarray(data, dtype=np.int64)
    masks = sample_masks(spec_m, cfg.sigma, cfg.mask_batch, substream(seed, *path, "masks"))
    signs = sample_sign_vectors(spec_n, cfg.glynn_batch, substream(seed, *path, "signs"))
    rng = substream(seed, *path, "data")
    nbatch = min(cfg.data_batch, len(data))
    idx = rng.choice(len(data), size=nbatch, replace=False)
    return data[idx], masks, signs


def estimate_mmd(
    spec: CircuitSpec, data: np.ndarray, cfg: MMDConfig, seed: int
) -> float:
    xs, masks, signs = draw_batches(spec.m, spec.n, data, cfg, seed)
    return mmd_hat_figure1(xs, masks, signs, spec)
