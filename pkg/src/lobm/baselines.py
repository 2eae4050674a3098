"""Classical comparison models: a CD-1 restricted Boltzmann machine, a
uniform fixed-Hamming-weight sampler, and the test-to-test ground-truth MMD.

All samplers emit only weight-n bitstrings so their output lives on the same
domain as the photonic model.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .mmd import KernelConfig, mmd_unbiased_samples

_GIBBS_BURN_IN = 50
_GIBBS_THIN = 5
_WEIGHT_RETRY_CAP = 200


@dataclass
class RbmModel:
    weights: np.ndarray  # (visible, hidden)
    visible_bias: np.ndarray
    hidden_bias: np.ndarray

    @property
    def visible_count(self) -> int:
        return self.weights.shape[0]

    @property
    def hidden_count(self) -> int:
        return self.weights.shape[1]

    def free_energy(self, v: np.ndarray) -> np.ndarray:
        v = np.atleast_2d(v).astype(float)
        act = v @ self.weights + self.hidden_bias
        return -(v @ self.visible_bias) - np.logaddexp(0.0, act).sum(axis=1)


def rbm_init(m: int, hidden_count: int, rng: np.random.Generator) -> RbmModel:
    return RbmModel(
        weights=0.01 * rng.standard_normal((m, hidden_count)),
        visible_bias=np.zeros(m),
        hidden_bias=np.zeros(hidden_count),
    )


def rbm_train(
    data: np.ndarray,
    hidden_count: int,
    epochs: int,
    lr: float,
    rng: np.random.Generator,
    batch_size: int = 64,
    model: RbmModel | None = None,
) -> tuple[RbmModel, list[float]]:
    """CD-1 training on binary data; returns the model and the per-epoch
    reconstruction-error trace."""
    data = np.asarray(data)
    if not np.isin(data, (0, 1)).all():
        raise ValueError("RBM training requires binary data")
    data = data.astype(float)
    m = data.shape[1]
    if model is None:
        model = rbm_init(m, hidden_count, rng)
    w, vb, hb = model.weights, model.visible_bias, model.hidden_bias
    errors: list[float] = []
    for _ in range(epochs):
        order = rng.permutation(len(data))
        epoch_err = 0.0
        for lo in range(0, len(data), batch_size):
            v0 = data[order[lo : lo + batch_size]]
            ph0 = expit(v0 @ w + hb)
            h0 = (rng.random(ph0.shape) < ph0).astype(float)
            pv1 = expit(h0 @ w.T + vb)
            v1 = (rng.random(pv1.shape) < pv1).astype(float)
            ph1 = expit(v1 @ w + hb)
            k = len(v0)
            w += lr * (v0.T @ ph0 - v1.T @ ph1) / k
            vb += lr * (v0 - v1).mean(axis=0)
            hb += lr * (ph0 - ph1).mean(axis=0)
            epoch_err += np.sum((v0 - pv1) ** 2)
        errors.append(epoch_err / data.size)
    return RbmModel(weights=w, visible_bias=vb, hidden_bias=hb), errors


def _project_to_weight(pv: np.ndarray, n: int) -> np.ndarray:
    """Keep the n largest visible activations (the rejection fallback)."""
    out = np.zeros_like(pv)
    out[np.argsort(-pv, kind="stable")[:n]] = 1
    return out


def rbm_sample(
    model: RbmModel, count: int, hamming_weight: int, rng: np.random.Generator
) -> tuple[np.ndarray, dict]:
    """Gibbs-chain samples post-selected to the fixed Hamming weight.

    If rejection exceeds the per-sample retry cap, the sample falls back to
    the n largest visible activations; the fallback count is reported in the
    returned metadata.
    """
    m, n = model.visible_count, hamming_weight
    v = (rng.random(m) < 0.5).astype(float)
    samples = np.empty((count, m), dtype=np.int64)
    fallbacks = 0

    def gibbs(v):
        ph = expit(v @ model.weights + model.hidden_bias)
        h = (rng.random(ph.shape) < ph).astype(float)
        pv = expit(h @ model.weights.T + model.visible_bias)
        return (rng.random(pv.shape) < pv).astype(float), pv

    for _ in range(_GIBBS_BURN_IN):
        v, _ = gibbs(v)
    for i in range(count):
        got = None
        for _ in range(_WEIGHT_RETRY_CAP):
            for _ in range(_GIBBS_THIN):
                v, pv = gibbs(v)
            if int(v.sum()) == n:
                got = v
                break
        if got is None:
            got = _project_to_weight(pv, n)
            fallbacks += 1
        samples[i] = got.astype(np.int64)
    return samples, {"fallbacks": fallbacks}


def uniform_fixed_hw_sample(
    m: int, n: int, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Uniform samples over the C(m, n) weight-n binary strings."""
    if n > m:
        raise ValueError("n <= m required")
    out = np.zeros((count, m), dtype=np.int64)
    for i in range(count):
        out[i, rng.permutation(m)[:n]] = 1
    return out


def test_to_test_mmd(
    test_set: np.ndarray,
    sigma: float,
    repeats: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Ground-truth baseline: MMD between two halves of the shuffled test
    set, repeated; returns (mean, std over repeats)."""
    test_set = np.asarray(test_set)
    if len(test_set) < 4:
        raise ValueError("test set too small to split")
    cfg = KernelConfig(sigma, "gaussian")
    vals = []
    half = len(test_set) // 2
    for _ in range(repeats):
        idx = rng.permutation(len(test_set))
        vals.append(
            mmd_unbiased_samples(test_set[idx[:half]], test_set[idx[half : 2 * half]], cfg)
        )
    return float(np.mean(vals)), float(np.std(vals, ddof=1)) if repeats > 1 else 0.0
