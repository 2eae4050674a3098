"""Optimization loop: Adam over circuit parameters, bandwidth warm-start
schedules, per-step batch resampling, and loss/evaluation traces.

Everything is a deterministic function of (config, seed): batches come from
named substreams indexed by step, so reruns are bit-identical.
"""

import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import bosonsim
from .circuits import CircuitSpec
from .dataio import Dataset
from .gradients import mmd_gradient
from .mmd import KernelConfig, MMDConfig, draw_batches, mmd_unbiased_samples
from .rng import substream


@dataclass(frozen=True)
class TrainConfig:
    steps: int
    mmd: MMDConfig
    seed: int
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    sigma_schedule: Optional[Sequence[tuple[float, int]]] = None
    eval_every: int = 0
    eval_repeats: int = 5
    frozen_batches: bool = False

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps >= 1 required")
        if self.sigma_schedule is not None:
            total = sum(s for _, s in self.sigma_schedule)
            if total != self.steps:
                raise ValueError(
                    f"sigma schedule covers {total} steps, config has {self.steps}"
                )

    def sigma_at(self, step: int) -> float:
        if self.sigma_schedule is None:
            return self.mmd.sigma
        done = 0
        for sigma, count in self.sigma_schedule:
            done += count
            if step < done:
                return sigma
        return self.sigma_schedule[-1][0]


@dataclass
class StepRecord:
    step: int
    sigma: float
    mmd_estimate: float
    grad_norm: float
    wall_ms: float


@dataclass
class EvalRecord:
    step: int
    sigma: float
    mean: float
    std: float
    repeats: int


@dataclass
class TrainResult:
    final_spec: CircuitSpec
    trace: list[StepRecord]
    evals: list[EvalRecord]
    checkpoints: list[tuple[int, CircuitSpec]] = field(default_factory=list)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(m=np.zeros(size), v=np.zeros(size))


def adam_step(
    params: np.ndarray,
    grad: np.ndarray,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update."""
    params = np.asarray(params, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if params.shape != grad.shape:
        raise ValueError("parameter/gradient length mismatch")
    if not (np.isfinite(params).all() and np.isfinite(grad).all()):
        raise ValueError("non-finite parameters or gradient")
    t = state.t + 1
    m = beta1 * state.m + (1 - beta1) * grad
    v = beta2 * state.v + (1 - beta2) * grad**2
    m_hat = m / (1 - beta1**t)
    v_hat = v / (1 - beta2**t)
    return params - lr * m_hat / (np.sqrt(v_hat) + eps), AdamState(m=m, v=v, t=t)


def _as_array(dataset) -> np.ndarray:
    if isinstance(dataset, Dataset):
        return dataset.as_array()
    return np.asarray(dataset, dtype=np.int64)


def train(
    spec: CircuitSpec,
    dataset,
    cfg: TrainConfig,
    test_set=None,
) -> TrainResult:
    """Adam training of the sampled MMD loss.

    Per step: fresh mask / sign / data substreams (unless frozen), one
    gradient evaluation, one Adam update.  Bandwidth switches at schedule
    boundaries preserve Adam moment state.  With eval_every > 0 and a test
    set, a held-out sample-based MMD evaluation is recorded periodically.
    """
    data = _as_array(dataset)
    if data.shape[1] != spec.m:
        raise ValueError(f"dataset has m={data.shape[1]}, circuit has m={spec.m}")
    if int(data[0].sum()) != spec.n:
        raise ValueError(
            f"dataset weight {int(data[0].sum())} != circuit photon count {spec.n}"
        )
    params = spec.params.copy()
    state = AdamState.zeros(params.size)
    trace: list[StepRecord] = []
    evals: list[EvalRecord] = []
    checkpoints: list[tuple[int, CircuitSpec]] = []
    for step in range(cfg.steps):
        t0 = time.perf_counter()
        sigma = cfg.sigma_at(step)
        mmd_cfg = replace(cfg.mmd, sigma=sigma)
        batch_step = 0 if cfg.frozen_batches else step
        current = CircuitSpec(spec.mesh, spec.m, params, spec.input_state)
        batches = draw_batches(
            spec.m, spec.n, data, mmd_cfg, cfg.seed, "train", batch_step
        )
        loss, grad = mmd_gradient(current, batches)
        params, state = adam_step(
            params, grad, state, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps
        )
        wall_ms = (time.perf_counter() - t0) * 1e3
        trace.append(
            StepRecord(step, sigma, loss, float(np.linalg.norm(grad)), wall_ms)
        )
        if cfg.eval_every and (step + 1) % cfg.eval_every == 0:
            snapshot = CircuitSpec(spec.mesh, spec.m, params, spec.input_state)
            checkpoints.append((step + 1, snapshot))
            if test_set is not None:
                mean, std = evaluate_model(
                    snapshot, _as_array(test_set), sigma, cfg.eval_repeats,
                    seed=cfg.seed, label=step,
                )
                evals.append(EvalRecord(step + 1, sigma, mean, std, cfg.eval_repeats))
    final = CircuitSpec(spec.mesh, spec.m, params, spec.input_state)
    checkpoints.append((cfg.steps, final))
    return TrainResult(final_spec=final, trace=trace, evals=evals, checkpoints=checkpoints)


def evaluate_model(
    spec: CircuitSpec,
    test_set,
    sigma: float,
    repeats: int,
    seed: int,
    label=0,
    kernel_kind: str = "mod2",
) -> tuple[float, float]:
    """Sample-based MMD between exact model samples and the test set,
    repeated with fresh substreams; returns (mean, std over repeats).

    The mod-2 kernel is the default: it matches the Gaussian kernel exactly
    on collision-free samples and stays certified when model samples carry
    collisions (the Gaussian kernel is available but biased there).
    """
    test = _as_array(test_set)
    dist = bosonsim.output_distribution(spec.unitary(), spec.input_state)
    cfg = KernelConfig(sigma, kernel_kind)
    vals = []
    for r in range(repeats):
        rng = substream(seed, "evaluate", label, r)
        model_samples = bosonsim.draw_samples(dist, len(test), rng)
        vals.append(mmd_unbiased_samples(model_samples, test, cfg))
    std = float(np.std(vals, ddof=1)) if repeats > 1 else 0.0
    return float(np.mean(vals)), std
