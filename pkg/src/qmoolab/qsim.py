"""Exact statevector simulation of the layered phase/mixer ansatz.

States are dense complex128 arrays of 2**n amplitudes indexed by solution
index. Phase gates multiply amplitude x by exp(-i * gamma * f_k(x)) using a
precomputed table of objective values; the transverse mixer exp(-i * beta *
sum_j X_j) factorizes into one 2x2 butterfly pass per qubit. Norm drift is
asserted, never silently renormalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .core import MAX_ENUM_BITS, CapabilityError, ProblemInstance, objective_image

NORM_TOL = 1e-9


class NormDriftError(RuntimeError):
    """Accumulated floating-point drift pushed the state norm outside tolerance."""


@dataclass(frozen=True, eq=False)
class AnsatzParams:
    """Angle vector of one ansatz: 2*K*L angles laid out layer by layer.

    theta = (gamma_{1,1}, beta_{1,1}, ..., gamma_{1,K}, beta_{1,K}, ...,
    gamma_{L,K}, beta_{L,K}).
    """

    layers: int
    K: int
    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.shape != (2 * self.K * self.layers,):
            raise ValueError(
                f"theta must have length {2 * self.K * self.layers}, got {theta.size}"
            )
        object.__setattr__(self, "theta", theta)

    @property
    def gammas(self) -> np.ndarray:
        """(L, K) phase angles."""
        return self.theta.reshape(self.layers, self.K, 2)[:, :, 0]

    @property
    def betas(self) -> np.ndarray:
        """(L, K) mixer angles."""
        return self.theta.reshape(self.layers, self.K, 2)[:, :, 1]


@numba.njit(cache=True)
def _phase_kernel(state, table, gamma):  # pragma: no cover - exercised via wrappers
    for x in range(state.size):
        a = gamma * table[x]
        state[x] = state[x] * complex(np.cos(a), -np.sin(a))


@numba.njit(cache=True)
def _mixer_kernel(state, beta, n):  # pragma: no cover - exercised via wrappers
    c = np.cos(beta)
    s = complex(0.0, -np.sin(beta))
    for j in range(n):
        stride = 1 << j
        block = stride << 1
        for base in range(0, state.size, block):
            for off in range(base, base + stride):
                a0 = state[off]
                a1 = state[off + stride]
                state[off] = c * a0 + s * a1
                state[off + stride] = s * a0 + c * a1


def _qubit_count(size: int) -> int:
    n = size.bit_length() - 1
    if size <= 0 or (1 << n) != size:
        raise ValueError(f"state length {size} is not a power of two")
    return n


def build_phase_tables(instance: ProblemInstance) -> np.ndarray:
    """(K, 2**n) table of objective values; row k is the diagonal of H_k."""
    return np.ascontiguousarray(objective_image(instance).T)


def init_plus_state(n: int) -> np.ndarray:
    """Uniform superposition over all 2**n basis states."""
    if n < 1:
        raise ValueError("n must be positive")
    if n > MAX_ENUM_BITS:
        raise CapabilityError(f"statevector capped at n={MAX_ENUM_BITS}, got {n}")
    return np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128)


def apply_phase(state: np.ndarray, table: np.ndarray, gamma: float) -> np.ndarray:
    """Multiply amplitude x by exp(-i * gamma * table[x]); returns a new state."""
    if state.size != table.size:
        raise ValueError("phase table length does not match state length")
    out = np.array(state, dtype=np.complex128)
    _phase_kernel(out, np.ascontiguousarray(table, dtype=float), float(gamma))
    return out


def apply_mixer(state: np.ndarray, beta: float) -> np.ndarray:
    """Apply exp(-i * beta * sum_j X_j) via per-qubit butterflies; returns a new state."""
    n = _qubit_count(state.size)
    out = np.array(state, dtype=np.complex128)
    _mixer_kernel(out, float(beta), n)
    return out


def apply_ansatz(tables: np.ndarray, params: AnsatzParams) -> np.ndarray:
    """Run the full layered ansatz from the uniform superposition.

    Within each layer the objective-k phase gate is applied before its mixer,
    for k = 1..K in order; layers compose left to right.
    """
    tables = np.ascontiguousarray(tables, dtype=float)
    if tables.ndim != 2 or tables.shape[0] != params.K:
        raise ValueError("need one phase table per objective")
    n = _qubit_count(tables.shape[1])
    state = init_plus_state(n)
    gammas, betas = params.gammas, params.betas
    for layer in range(params.layers):
        for k in range(params.K):
            _phase_kernel(state, tables[k], float(gammas[layer, k]))
            _mixer_kernel(state, float(betas[layer, k]), n)
    drift = abs(float(np.vdot(state, state).real) - 1.0)
    if drift > NORM_TOL:
        raise NormDriftError(f"state norm drifted by {drift:.3e}")
    return state


def probabilities(state: np.ndarray) -> np.ndarray:
    return state.real ** 2 + state.imag ** 2


def top_p_solutions(state: np.ndarray, P: int) -> np.ndarray:
    """Indices of the P most probable basis states, most probable first.

    Ties are broken by ascending solution index both when selecting the set
    and when ordering it, so the result is deterministic (e.g. the uniform
    state yields 0..P-1).
    """
    N = state.size
    if not 1 <= P <= N:
        raise ValueError(f"P must lie in [1, {N}], got {P}")
    probs = probabilities(state)
    if P == N:
        chosen = np.arange(N)
    else:
        part = np.argpartition(-probs, P - 1)[:P]
        threshold = probs[part].min()
        greater = np.flatnonzero(probs > threshold)
        equal = np.flatnonzero(probs == threshold)
        chosen = np.concatenate([greater, equal[: P - greater.size]])
    order = np.lexsort((chosen, -probs[chosen]))
    return chosen[order]


def sample_shots(state: np.ndarray, shots: int, seed: int) -> np.ndarray:
    """Simulate `shots` measurements; opt-in path, the default pipeline is exact."""
    if shots < 1:
        raise ValueError("shots must be positive")
    probs = probabilities(state)
    probs = probs / probs.sum()
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    return rng.choice(state.size, size=shots, p=probs)
