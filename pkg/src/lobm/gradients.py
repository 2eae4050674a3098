"""Exact gradients of the Monte-Carlo MMD estimator with respect to all
circuit parameters, plus a central finite-difference verifier.

Differentiation is reverse-mode via JAX over the same composition and
estimator code the forward path uses; the loss value reported alongside the
gradient is the numpy forward evaluation itself, so it is bit-identical to
``mmd_hat_figure1`` on the same batches.  Finite differences are taken on the
sampled loss with frozen batches -- the only deterministic function of the
parameters available.
"""

import time
from functools import lru_cache

import numpy as np

from ._backend import jax, jnp
from .circuits import CircuitSpec, _compiled_compose
from .mmd import _assemble_mmd_hat, _data_mask_sums, _glynn_scalar_sums, mmd_hat_figure1


@lru_cache(maxsize=None)
def _grad_fn(mesh: str, m: int, pos: tuple[int, ...]):
    compose = _compiled_compose(mesh, m)
    posj = np.array(pos)

    # the data-batch size enters only through normalization; close over it
    def make(nx):
        def loss(params, wsigns, z, t, t2sum):
            u = compose(params)
            v = u[:, posj]
            ss, f2, st = _glynn_scalar_sums(jnp, v, wsigns, z, t)
            return _assemble_mmd_hat(
                jnp, ss, f2, st, t2sum, wsigns.shape[0], z.shape[0], nx
            )

        return jax.jit(jax.grad(loss))

    return lru_cache(maxsize=None)(make)


def _unpack(batches):
    xs, masks, signs = batches
    xs = np.asarray(xs, dtype=np.int64)
    masks = np.asarray(masks, dtype=np.int64)
    signs = np.asarray(signs, dtype=np.int64)
    return xs, masks, signs


def mmd_gradient(
    spec: CircuitSpec, batches
) -> tuple[float, np.ndarray]:
    """(loss, gradient) of the sampled MMD estimator at `spec.params`.

    The gradient is the exact derivative of the estimator on these frozen
    batches, not of the true MMD.
    """
    xs, masks, signs = _unpack(batches)
    loss = mmd_hat_figure1(xs, masks, signs, spec)
    wsigns = (1.0 - 2.0 * (masks % 2)).astype(float)
    t, t2sum = _data_mask_sums(masks, xs)
    fn = _grad_fn(spec.mesh, spec.m, tuple(int(p) for p in spec.photon_modes))(len(xs))
    grad = np.asarray(
        fn(jnp.asarray(spec.params), jnp.asarray(wsigns),
           jnp.asarray(signs.astype(float)), jnp.asarray(t), t2sum)
    )
    bad = np.flatnonzero(~np.isfinite(grad))
    if bad.size:
        raise ArithmeticError(f"non-finite gradient at parameter index {bad[0]}")
    return loss, grad


def central_difference(f, x: np.ndarray, h: float) -> np.ndarray:
    """Central finite differences of a scalar function, one parameter at a time."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for j in range(x.size):
        xp_ = x.copy()
        xp_[j] += h
        xm = x.copy()
        xm[j] -= h
        g[j] = (f(xp_) - f(xm)) / (2 * h)
    return g


def max_scaled_error(a: np.ndarray, b: np.ndarray) -> float:
    """Worst per-entry deviation scaled by the larger gradient's sup norm
    (entries with zero true gradient would make a plain relative error
    meaningless)."""
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-12)
    return float(np.max(np.abs(a - b)) / scale)


def finite_difference_check(spec: CircuitSpec, batches, h: float = 1e-6) -> float:
    """Worst scaled deviation between the reverse-mode gradient and central
    finite differences of the sampled loss on the same frozen batches."""
    xs, masks, signs = _unpack(batches)
    _, grad = mmd_gradient(spec, (xs, masks, signs))

    def f(params):
        probe = CircuitSpec(spec.mesh, spec.m, params, spec.input_state)
        return mmd_hat_figure1(xs, masks, signs, probe)

    fd = central_difference(f, spec.params, h)
    return max_scaled_error(grad, fd)


def gradient_timing_ratio(spec: CircuitSpec, batches, repeats: int = 3) -> float:
    """Wall-time ratio of one gradient evaluation to one forward evaluation,
    measured after warmup (jit compilation excluded)."""
    xs, masks, signs = _unpack(batches)
    mmd_hat_figure1(xs, masks, signs, spec)
    mmd_gradient(spec, (xs, masks, signs))
    t0 = time.perf_counter()
    for _ in range(repeats):
        mmd_hat_figure1(xs, masks, signs, spec)
    fwd = time.perf_counter() - t0
    t0 = time.perf_counter()
    for _ in range(repeats):
        mmd_gradient(spec, (xs, masks, signs))
    grd = time.perf_counter() - t0
    return grd / max(fwd, 1e-9)
