"""Parametrized linear-optical interferometers.

Four unitary parametrizations are provided:

* ``clements_rectangular`` -- the rectangular MZI brick pattern plus a final
  diagonal phase layer; m^2 phases.
* ``butterfly`` -- log2(m) FFT-style stages coupling modes that differ in one
  bit, plus a final diagonal layer; m*log2(m) + m phases (m a power of two).
* ``three_mzi`` -- the rectangular layout with each block replaced by
  B P(theta) B P(phi) B (three 50:50 beam splitters enclosing the phases);
  m^2 phases, identity point at theta = phi = pi/2.
* ``qr_haar`` -- 2 m^2 unconstrained reals mapped to a complex matrix and
  orthonormalized by modified Gram-Schmidt with a real-positive implicit R
  diagonal; Haar-distributed when the parameters are standard Gaussian.

All composition goes through a single jitted JAX implementation so that the
production unitaries and the differentiable path in :mod:`lobm.gradients` are
the same function.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from ._backend import jax, jnp

MESH_KINDS = ("clements_rectangular", "butterfly", "three_mzi", "qr_haar")

_BS_5050 = np.array([[1, 1j], [1j, 1]]) / np.sqrt(2)  # symmetric beam splitter


def mzi_block(theta: float, theta_prime: float) -> np.ndarray:
    """2x2 MZI transfer matrix with external phase theta and splitting angle
    theta_prime."""
    c = np.cos(theta_prime / 2)
    s = np.sin(theta_prime / 2)
    e = np.exp(1j * theta)
    return np.array([[e * c, -s], [e * s, c]])


def _rectangular_layers(m: int) -> list[list[tuple[int, int]]]:
    """Mode pairs per layer for the rectangular brick pattern (m layers)."""
    layers = []
    for ell in range(m):
        start = ell % 2
        layers.append([(a, a + 1) for a in range(start, m - 1, 2)])
    return layers


def _butterfly_layers(m: int) -> list[list[tuple[int, int]]]:
    stages = int(math.log2(m))
    layers = []
    for s in range(stages):
        layers.append([(i, i | (1 << s)) for i in range(m) if not (i >> s) & 1])
    return layers


def _mesh_layers(mesh: str, m: int) -> list[list[tuple[int, int]]]:
    if mesh in ("clements_rectangular", "three_mzi"):
        return _rectangular_layers(m)
    if mesh == "butterfly":
        if m < 2 or m & (m - 1):
            raise ValueError(f"butterfly mesh requires m a power of two, got {m}")
        return _butterfly_layers(m)
    raise ValueError(f"mesh {mesh!r} has no layer structure")


def parameter_count(mesh: str, m: int) -> int:
    if mesh == "qr_haar":
        return 2 * m * m
    blocks = sum(len(layer) for layer in _mesh_layers(mesh, m))
    return 2 * blocks + m


def _mzi_blocks_jnp(theta, theta_prime):
    """(p, 2, 2) MZI matrices from phase vectors of length p."""
    c = jnp.cos(theta_prime / 2)
    s = jnp.sin(theta_prime / 2)
    e = jnp.exp(1j * theta)
    return jnp.stack(
        [jnp.stack([e * c, -s + 0j], axis=-1), jnp.stack([e * s, c + 0j], axis=-1)],
        axis=-2,
    )


def _three_mzi_blocks_jnp(theta, phi):
    """(p, 2, 2) blocks B P(theta) B P(phi) B."""
    b = jnp.asarray(_BS_5050)
    pt = jnp.zeros(theta.shape + (2, 2), dtype=complex)
    pt = pt.at[..., 0, 0].set(jnp.exp(1j * theta)).at[..., 1, 1].set(1.0)
    pp = jnp.zeros(phi.shape + (2, 2), dtype=complex)
    pp = pp.at[..., 0, 0].set(jnp.exp(1j * phi)).at[..., 1, 1].set(1.0)
    return b @ pt @ b @ pp @ b


def _apply_blocks(u, a_idx, b_idx, blocks):
    """Left-multiply u by the layer unitary holding 2x2 `blocks` on disjoint
    mode pairs (a_idx, b_idx)."""
    ua = u[a_idx, :]
    ub = u[b_idx, :]
    new_a = blocks[:, 0, 0, None] * ua + blocks[:, 0, 1, None] * ub
    new_b = blocks[:, 1, 0, None] * ua + blocks[:, 1, 1, None] * ub
    return u.at[a_idx, :].set(new_a).at[b_idx, :].set(new_b)


def _gram_schmidt(mat):
    """Modified Gram-Schmidt on columns; the implicit R diagonal is the
    (real, positive) column norm, which is the Haar-compatible convention."""
    m = mat.shape[0]
    cols = []
    for j in range(m):
        v = mat[:, j]
        for q in cols:
            v = v - jnp.vdot(q, v) * q
        v = v / jnp.linalg.norm(v)
        cols.append(v)
    return jnp.stack(cols, axis=1)


@lru_cache(maxsize=None)
def _compiled_compose(mesh: str, m: int):
    if mesh == "qr_haar":

        def compose(params):
            x = params[: m * m].reshape(m, m)
            y = params[m * m :].reshape(m, m)
            return _gram_schmidt(x + 1j * y)

        return jax.jit(compose)

    layers = _mesh_layers(mesh, m)
    a_idx = [np.array([p[0] for p in layer]) for layer in layers]
    b_idx = [np.array([p[1] for p in layer]) for layer in layers]
    sizes = [len(layer) for layer in layers]
    offsets = np.concatenate([[0], 2 * np.cumsum(sizes)])
    block_fn = _mzi_blocks_jnp if mesh != "three_mzi" else _three_mzi_blocks_jnp

    def compose(params):
        u = jnp.eye(m, dtype=complex)
        for ell in range(len(layers)):
            if sizes[ell] == 0:
                continue
            ph = params[offsets[ell] : offsets[ell + 1]].reshape(sizes[ell], 2)
            blocks = block_fn(ph[:, 0], ph[:, 1])
            u = _apply_blocks(u, a_idx[ell], b_idx[ell], blocks)
        diag = jnp.exp(1j * params[offsets[-1] :])
        return diag[:, None] * u

    return jax.jit(compose)


def compose_unitary(mesh: str, m: int, params: np.ndarray) -> np.ndarray:
    """U_theta for the given mesh kind and parameter vector."""
    params = np.asarray(params, dtype=float)
    expected = parameter_count(mesh, m)
    if params.shape != (expected,):
        raise ValueError(
            f"{mesh} at m={m} needs {expected} parameters, got {params.shape}"
        )
    return np.asarray(_compiled_compose(mesh, m)(jnp.asarray(params)))


@dataclass
class CircuitSpec:
    """Mesh kind + parameters + input state; fully determines the model."""

    mesh: str
    m: int
    params: np.ndarray
    input_state: tuple[int, ...] = field(default=None)

    def __post_init__(self):
        if self.mesh not in MESH_KINDS:
            raise ValueError(f"unknown mesh {self.mesh!r}")
        self.params = np.asarray(self.params, dtype=float)
        expected = parameter_count(self.mesh, self.m)
        if self.params.shape != (expected,):
            raise ValueError(
                f"{self.mesh} at m={self.m} needs {expected} parameters, "
                f"got {self.params.shape}"
            )
        self.input_state = tuple(int(c) for c in self.input_state)
        if len(self.input_state) != self.m:
            raise ValueError("input state length must equal m")
        if any(c not in (0, 1) for c in self.input_state):
            raise ValueError("input state allows at most one photon per mode")
        if sum(self.input_state) < 1:
            raise ValueError("at least one photon required")

    @property
    def n(self) -> int:
        return sum(self.input_state)

    @property
    def photon_modes(self) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.input_state))

    def unitary(self) -> np.ndarray:
        return compose_unitary(self.mesh, self.m, self.params)


def compose_mesh(spec: CircuitSpec) -> np.ndarray:
    return spec.unitary()


def make_input_state(
    m: int, n: int, positions: Optional[Sequence[int]] = None
) -> tuple[int, ...]:
    """Input occupation vector: photons in modes 1..n by default, or at the
    given 1-based positions."""
    if n > m:
        raise ValueError(f"cannot place {n} photons in {m} modes")
    if positions is None:
        positions = range(1, n + 1)
    positions = [int(p) for p in positions]
    if len(positions) != n or len(set(positions)) != n:
        raise ValueError("positions must be n distinct mode indices")
    if any(p < 1 or p > m for p in positions):
        raise ValueError("positions must lie in 1..m")
    s = [0] * m
    for p in positions:
        s[p - 1] = 1
    return tuple(s)


def identity_point(mesh: str, m: int) -> np.ndarray:
    """Parameter vector at which the mesh composes to the identity (up to the
    documented caveats: for butterfly/three_mzi blocks this is the close-to-
    identity reference point; three_mzi's residual diagonal is cancelled by
    the final phase layer)."""
    count = parameter_count(mesh, m)
    if mesh == "qr_haar":
        p = np.zeros(count)
        p[: m * m] = np.eye(m).ravel()
        return p
    p = np.zeros(count)
    if mesh == "three_mzi":
        p[: count - m] = np.pi / 2
        # cancel the diagonal the pi/2 blocks produce
        u0 = compose_unitary(mesh, m, p)
        p[count - m :] = -np.angle(np.diag(u0))
    return p


def initialize_parameters(
    mesh: str,
    m: int,
    strategy: str,
    rng: np.random.Generator,
    epsilon: float = 0.0,
) -> np.ndarray:
    """Parameter initialization.

    strategy "identity_perturbed": the mesh's identity point plus i.i.d.
    uniform perturbations in [-epsilon, epsilon].
    strategy "random": phases uniform over their natural ranges ([0, 2pi) for
    external/diagonal phases, [0, pi] for MZI splitting angles); standard
    Gaussian for qr_haar (the Haar-compatible draw).
    """
    count = parameter_count(mesh, m)
    if strategy == "identity_perturbed":
        if epsilon < 0:
            raise ValueError("epsilon >= 0 required")
        return identity_point(mesh, m) + rng.uniform(-epsilon, epsilon, size=count)
    if strategy == "random":
        if mesh == "qr_haar":
            return rng.standard_normal(count)
        p = np.empty(count)
        nblocks = (count - m) // 2
        for b in range(nblocks):
            p[2 * b] = rng.uniform(0, 2 * np.pi)
            if mesh == "three_mzi":
                p[2 * b + 1] = rng.uniform(0, 2 * np.pi)
            else:
                p[2 * b + 1] = rng.uniform(0, np.pi)
        p[count - m :] = rng.uniform(0, 2 * np.pi, size=m)
        return p
    raise ValueError(f"unknown strategy {strategy!r}")


def qr_haar_statistics_probe(
    m: int, draws: int, rng: np.random.Generator
) -> np.ndarray:
    """Per-entry mean of |u_ij|^2 over qr_haar unitaries with standard-Gaussian
    parameters.  Haar sampling gives E|u_ij|^2 = 1/m."""
    if draws < 1:
        raise ValueError("draws >= 1 required")
    params = rng.standard_normal((draws, 2 * m * m))
    compose = _compiled_compose("qr_haar", m)
    us = jax.vmap(compose)(jnp.asarray(params))
    return np.asarray(jnp.mean(jnp.abs(us) ** 2, axis=0))


# --- checkpoint serialization -------------------------------------------------

def serialize_spec(spec: CircuitSpec) -> str:
    state = "".join(str(c) for c in spec.input_state)
    params = " ".join(format(v, ".17g") for v in spec.params)
    return f"mesh {spec.mesh}\nm {spec.m}\ninput {state}\nparams {params}\n"


def deserialize_spec(text: str) -> CircuitSpec:
    fields = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        fields[key] = rest
    try:
        mesh = fields["mesh"]
        m = int(fields["m"])
        state = tuple(int(c) for c in fields["input"])
        params = np.array([float(v) for v in fields["params"].split()])
    except KeyError as exc:
        raise ValueError(f"checkpoint missing field {exc}") from exc
    return CircuitSpec(mesh=mesh, m=m, params=params, input_state=state)
