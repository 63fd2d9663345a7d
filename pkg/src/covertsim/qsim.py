"""Exact small-n quantum state engine on dense amplitude vectors.

Qubit j is bit j of the little-endian basis index (qubit 0 = least
significant). All operations are pure functions returning new states; states
are value-semantic and safe to share across concurrent trials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .boolfunc import BooleanFunction, eval_all, evaluate

PURE_QUBIT_CAP = 24
MIXED_QUBIT_CAP = 12
NORM_TOL = 1e-10
PSD_FLOOR = -1e-8

_INV_SQRT2 = 1.0 / math.sqrt(2.0)

GATES_1Q = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _INV_SQRT2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
}
# two-qubit gate matrices indexed with qubits[0] as the LOW bit; CNOT control
# is qubits[0], target qubits[1]
GATES_2Q = {
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
    ),
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
}

# measurement-basis rotations: columns of V are the +1/-1 eigenvectors,
# so measuring Pauli P == apply V^dagger, Z-measure, apply V
_BASIS_V = {
    "Z": np.eye(2, dtype=complex),
    "X": GATES_1Q["H"],
    "Y": GATES_1Q["S"] @ GATES_1Q["H"],
}


@dataclass(frozen=True)
class PureState:
    n: int
    vec: np.ndarray  # 2^n complex amplitudes

    def __post_init__(self):
        if self.n > PURE_QUBIT_CAP:
            raise ValueError(f"pure-state cap is {PURE_QUBIT_CAP} qubits")
        if self.vec.shape != (1 << self.n,):
            raise ValueError("amplitude vector has wrong length")
        sq = np.vdot(self.vec, self.vec).real
        if abs(sq - 1.0) > 2e-8:
            raise ValueError(f"state not normalized: |norm^2-1| = {abs(sq-1.0):.3g}")

    def density(self) -> "MixedState":
        return MixedState(self.n, np.outer(self.vec, self.vec.conj()))


@dataclass(frozen=True)
class MixedState:
    n: int
    mat: np.ndarray  # 2^n x 2^n density operator

    def __post_init__(self):
        if self.n > MIXED_QUBIT_CAP:
            raise ValueError(f"mixed-state cap is {MIXED_QUBIT_CAP} qubits")
        dim = 1 << self.n
        if self.mat.shape != (dim, dim):
            raise ValueError("density matrix has wrong shape")
        if np.abs(self.mat - self.mat.conj().T).max() > 1e-8:
            raise ValueError("density matrix not Hermitian")
        if abs(np.trace(self.mat).real - 1.0) > 1e-8:
            raise ValueError("density matrix trace != 1")
        if np.linalg.eigvalsh(self.mat).min() < PSD_FLOOR:
            raise ValueError("density matrix not positive semidefinite")


State = Union[PureState, MixedState]


@dataclass(frozen=True)
class Povm:
    """POVM on m copies of an n-qubit system, with outcome labels."""

    copies: int
    qubits_per_copy: int
    elements: tuple[np.ndarray, ...]
    labels: tuple

    def __post_init__(self):
        dim = 1 << (self.copies * self.qubits_per_copy)
        total = np.zeros((dim, dim), dtype=complex)
        for e in self.elements:
            if e.shape != (dim, dim):
                raise ValueError("POVM element has wrong shape")
            total = total + e
        if np.abs(total - np.eye(dim)).max() > 1e-8:
            raise ValueError("POVM elements do not sum to the identity")


# --- state constructors ------------------------------------------------------


def basis_state(n: int, x: int = 0) -> PureState:
    vec = np.zeros(1 << n, dtype=complex)
    vec[x] = 1.0
    return PureState(n, vec)


def uniform_state(n: int) -> PureState:
    vec = np.full(1 << n, 2 ** (-n / 2), dtype=complex)
    return PureState(n, vec)


def tensor(*states: PureState) -> PureState:
    """Product state; the first argument occupies the low qubits."""
    vec = states[0].vec
    n = states[0].n
    for s in states[1:]:
        vec = np.kron(s.vec, vec)  # little-endian: later registers are high bits
        n += s.n
    return PureState(n, vec)


def prepare_phase_state(f: BooleanFunction) -> PureState:
    """2^{-n/2} sum_x (-1)^{f(x)} |x> for a width-1 function."""
    if f.w != 1:
        raise ValueError("phase states need width-1 functions")
    if f.n > PURE_QUBIT_CAP:
        raise ValueError("arity over cap")
    signs = 1.0 - 2.0 * eval_all(f).astype(np.float64)
    return PureState(f.n, signs.astype(complex) * 2 ** (-f.n / 2))


def prepare_example_state(f: BooleanFunction) -> PureState:
    """2^{-n/2} sum_x |x, f(x)> on n + w qubits (input register low)."""
    n, w = f.n, f.w
    if n + w > PURE_QUBIT_CAP:
        raise ValueError("arity over cap")
    vec = np.zeros(1 << (n + w), dtype=complex)
    vals = eval_all(f)
    xs = np.arange(1 << n, dtype=np.uint64)
    vec[(vals << np.uint64(n)) | xs] = 2 ** (-n / 2)
    return PureState(n + w, vec)


# --- unitaries ---------------------------------------------------------------


def _axes(n: int, qubits: Sequence[int]) -> list[int]:
    return [n - 1 - q for q in qubits]


def apply_unitary(state: PureState, u: np.ndarray, qubits: Sequence[int]) -> PureState:
    """Apply a 2^k x 2^k unitary to the listed qubits (qubits[0] = low bit)."""
    k = len(qubits)
    if u.shape != (1 << k, 1 << k):
        raise ValueError("unitary has wrong shape")
    if len(set(qubits)) != k or any(q < 0 or q >= state.n for q in qubits):
        raise IndexError("bad qubit indices")
    n = state.n
    t = state.vec.reshape([2] * n)
    # u's row/col index has qubits[0] as the LOW bit -> axis order reversed
    axes = _axes(n, qubits)[::-1]
    t = np.moveaxis(t, axes, range(k))
    t = (u @ t.reshape(1 << k, -1)).reshape([2] * n)
    t = np.moveaxis(t, range(k), axes)
    return PureState(n, np.ascontiguousarray(t.reshape(-1)))


def apply_gate(state: PureState, gate: str, qubits: Sequence[int]) -> PureState:
    """Standard gate from {H, X, Z, S, CZ, CNOT, SWAP}.

    For CNOT, qubits = (control, target).
    """
    if gate in GATES_1Q:
        if len(qubits) != 1:
            raise ValueError(f"{gate} is a single-qubit gate")
        return apply_unitary(state, GATES_1Q[gate], qubits)
    if gate in GATES_2Q:
        if len(qubits) != 2:
            raise ValueError(f"{gate} is a two-qubit gate")
        return apply_unitary(state, GATES_2Q[gate], qubits)
    raise ValueError(f"unknown gate {gate!r}")


def apply_hadamards(state: PureState, qubits: Sequence[int]) -> PureState:
    for q in qubits:
        state = apply_gate(state, "H", [q])
    return state


_Z_SIGN_CACHE: dict[tuple[int, int], np.ndarray] = {}


def apply_z_mask(state: PureState, r: int, qubits: Sequence[int]) -> PureState:
    """Z^r on the listed qubits: Z on qubits[j] where bit j of r is set.

    Diagonal, so applied in one vectorized pass; sign vectors are cached.
    """
    mask = 0
    for j, q in enumerate(qubits):
        if (r >> j) & 1:
            mask |= 1 << q
    if mask == 0:
        return state
    signs = _Z_SIGN_CACHE.get((state.n, mask))
    if signs is None:
        idx = np.arange(1 << state.n, dtype=np.uint64)
        signs = 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(mask)) & 1).astype(np.float64)
        if state.n <= 12 and len(_Z_SIGN_CACHE) < 4096:
            _Z_SIGN_CACHE[(state.n, mask)] = signs
    return PureState(state.n, state.vec * signs)


def apply_phase_oracle(
    state: PureState, f: BooleanFunction, qubits: Sequence[int]
) -> PureState:
    """|x> -> (-1)^{f(x)} |x> on the designated qubits (qubits[j] = input bit j)."""
    if f.w != 1:
        raise ValueError("phase oracles need width-1 functions")
    if len(qubits) != f.n:
        raise ValueError("target set must match the oracle arity")
    n = state.n
    if list(qubits) == list(range(n)):
        signs = 1.0 - 2.0 * eval_all(f).astype(np.float64)
        return PureState(n, state.vec * signs)
    idx = np.arange(1 << n, dtype=np.uint64)
    x = np.zeros(1 << n, dtype=np.uint64)
    for j, q in enumerate(qubits):
        x |= ((idx >> np.uint64(q)) & 1) << np.uint64(j)
    signs = 1.0 - 2.0 * eval_all(f)[x].astype(np.float64)
    return PureState(n, state.vec * signs)


def apply_qmem_oracle(
    state: PureState,
    f: BooleanFunction,
    in_qubits: Sequence[int],
    out_qubits: Sequence[int],
) -> PureState:
    """|x, y> -> |x, y xor f(x)>; input and output registers must be disjoint."""
    if len(in_qubits) != f.n or len(out_qubits) != f.w:
        raise ValueError("register sizes must match the oracle signature")
    if set(in_qubits) & set(out_qubits):
        raise ValueError("input and output registers overlap")
    n = state.n
    idx = np.arange(1 << n, dtype=np.uint64)
    x = np.zeros(1 << n, dtype=np.uint64)
    for j, q in enumerate(in_qubits):
        x |= ((idx >> np.uint64(q)) & 1) << np.uint64(j)
    fx = eval_all(f)[x]
    flip = np.zeros(1 << n, dtype=np.uint64)
    for j, q in enumerate(out_qubits):
        flip |= ((fx >> np.uint64(j)) & 1) << np.uint64(q)
    new_vec = np.zeros_like(state.vec)
    new_vec[idx ^ flip] = state.vec
    return PureState(n, new_vec)


def permute_qubits(state: PureState, perm: Sequence[int]) -> PureState:
    """Move qubit j to position perm[j]."""
    n = state.n
    t = state.vec.reshape([2] * n)
    # axis of old qubit j is n-1-j; its new axis must be n-1-perm[j]
    t = np.moveaxis(t, [n - 1 - j for j in range(n)], [n - 1 - perm[j] for j in range(n)])
    return PureState(n, np.ascontiguousarray(t.reshape(-1)))


def swap_registers(state: PureState, reg_a: Sequence[int], reg_b: Sequence[int]) -> PureState:
    if len(reg_a) != len(reg_b):
        raise ValueError("register length mismatch")
    out = state
    for a, b in zip(reg_a, reg_b):
        out = apply_gate(out, "SWAP", [a, b])
    return out


# --- measurement -------------------------------------------------------------


def sample_index(probs: np.ndarray, rng) -> int:
    """Draw one index from an unnormalized nonnegative weight vector."""
    cum = np.cumsum(probs)
    return int(np.searchsorted(cum, rng.random() * cum[-1], side="right").clip(0, len(probs) - 1))


def _marginal_probs(state: PureState, qubits: Sequence[int]) -> np.ndarray:
    """Outcome distribution of a Z measurement on the listed qubits.

    Entry o corresponds to outcome bits with bit j of o observed on qubits[j].
    """
    n = state.n
    p = np.abs(state.vec.reshape([2] * n)) ** 2
    axes = _axes(n, qubits)[::-1]  # qubits[0] = low bit of the outcome
    p = np.moveaxis(p, axes, range(len(qubits)))
    p = p.reshape(1 << len(qubits), -1).sum(axis=1)
    return p


def _project_z(state: PureState, qubits: Sequence[int], outcome: int) -> PureState:
    n = state.n
    t = state.vec.reshape([2] * n).copy()
    sl: list = [slice(None)] * n
    for j, q in enumerate(qubits):
        sl[n - 1 - q] = 1 - ((outcome >> j) & 1)
        t[tuple(sl)] = 0.0
        sl[n - 1 - q] = slice(None)
    v = t.reshape(-1)
    nrm = np.linalg.norm(v)
    if nrm < 1e-12:
        raise ValueError("projection onto a zero-probability branch")
    return PureState(n, v / nrm)


def measure_qubits(
    state: PureState, qubits: Sequence[int], basis: str, rng
) -> tuple[int, PureState]:
    """Projective single-qubit-basis measurement of the listed qubits.

    Returns (outcome, post-state); bit j of the outcome belongs to qubits[j],
    with 0 the +1 eigenvalue (e.g. '+' for the X basis). Deterministic given
    the rng state.
    """
    if basis not in _BASIS_V:
        raise ValueError(f"unknown basis {basis!r}")
    if len(set(qubits)) != len(qubits) or any(q >= state.n for q in qubits):
        raise IndexError("bad qubit indices")
    v = _BASIS_V[basis]
    work = state
    if basis != "Z":
        for q in qubits:
            work = apply_unitary(work, v.conj().T, [q])
    probs = np.clip(_marginal_probs(work, qubits), 0.0, None)
    outcome = sample_index(probs, rng)
    post = _project_z(work, qubits, outcome)
    if basis != "Z":
        for q in qubits:
            post = apply_unitary(post, v, [q])
    return outcome, post


def measure_qubits_mixed(
    state: MixedState, qubits: Sequence[int], basis: str, rng
) -> tuple[int, MixedState]:
    """measure_qubits for density operators."""
    if basis not in _BASIS_V:
        raise ValueError(f"unknown basis {basis!r}")
    v = _BASIS_V[basis]
    dim = 1 << state.n
    rho = state.mat
    if basis != "Z":
        u = _embed_single(v.conj().T, state.n, qubits)
        rho = u @ rho @ u.conj().T
    idx = np.arange(dim, dtype=np.uint64)
    key = np.zeros(dim, dtype=np.uint64)
    for j, q in enumerate(qubits):
        key |= ((idx >> np.uint64(q)) & 1) << np.uint64(j)
    diag = np.real(np.diag(rho))
    k = len(qubits)
    probs = np.bincount(key.astype(np.int64), weights=diag, minlength=1 << k)
    probs = np.clip(probs, 0.0, None)
    outcome = sample_index(probs, rng)
    mask = key == outcome
    proj = rho * mask[:, None] * mask[None, :]
    proj = proj / np.trace(proj).real
    if basis != "Z":
        u = _embed_single(v, state.n, qubits)
        proj = u @ proj @ u.conj().T
    return outcome, MixedState(state.n, proj)


def _embed_single(u2: np.ndarray, n: int, qubits: Sequence[int]) -> np.ndarray:
    """Tensor a single-qubit unitary onto each listed qubit of an n-qubit system."""
    full = np.eye(1, dtype=complex)
    for q in range(n - 1, -1, -1):
        full = np.kron(full, u2 if q in qubits else np.eye(2, dtype=complex))
    return full


def remove_qubits(state: PureState, qubits: Sequence[int], outcome: int) -> PureState:
    """Drop qubits known to be in the given computational basis state."""
    n = state.n
    t = state.vec.reshape([2] * n)
    sl: list = [slice(None)] * n
    for j, q in enumerate(qubits):
        sl[n - 1 - q] = (outcome >> j) & 1
    v = np.ascontiguousarray(t[tuple(sl)].reshape(-1))
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > 1e-6:
        raise ValueError("removed qubits were not in the stated basis state")
    return PureState(n - len(qubits), v / nrm)


def sample_povm(states, povm: Povm, rng):
    """Sample an outcome label of an m-copy POVM on the given copies.

    `states` is a list of m PureStates (tensored in order, first = low
    qubits) or a single MixedState of the full dimension.
    """
    if isinstance(states, MixedState):
        dim = 1 << states.n
        if dim != povm.elements[0].shape[0]:
            raise ValueError("dimension mismatch")
        probs = np.array([np.trace(e @ states.mat).real for e in povm.elements])
    else:
        joint = tensor(*states) if len(states) > 1 else states[0]
        if joint.vec.shape[0] != povm.elements[0].shape[0]:
            raise ValueError("dimension mismatch")
        probs = np.array(
            [np.vdot(joint.vec, e @ joint.vec).real for e in povm.elements]
        )
    if abs(probs.sum() - 1.0) > 1e-8:
        raise ValueError("POVM probabilities do not sum to 1")
    i = int(rng.choice(len(probs), p=np.clip(probs, 0, None) / probs.sum()))
    return povm.labels[i]


# --- diagnostics -------------------------------------------------------------


def fidelity(state: State, target: PureState) -> float:
    """<target| rho |target>; for pure inputs the squared overlap."""
    if isinstance(state, PureState):
        if state.n != target.n:
            raise ValueError("dimension mismatch")
        return float(abs(np.vdot(target.vec, state.vec)) ** 2)
    if state.n != target.n:
        raise ValueError("dimension mismatch")
    return float(np.real(np.vdot(target.vec, state.mat @ target.vec)))


def partial_trace(state: State, keep: Sequence[int]) -> MixedState:
    """Reduced state on the listed qubits; keep[j] becomes qubit j."""
    n = state.n
    k = len(keep)
    if isinstance(state, PureState):
        t = state.vec.reshape([2] * n)
        order = _axes(n, keep)[::-1] + [n - 1 - q for q in range(n) if q not in keep]
        m = np.transpose(t, order).reshape(1 << k, -1)
        rho = m @ m.conj().T
    else:
        t = state.mat.reshape([2] * (2 * n))
        keep_axes = _axes(n, keep)[::-1]
        drop_axes = [n - 1 - q for q in range(n) if q not in keep]
        order = (
            keep_axes
            + drop_axes
            + [a + n for a in keep_axes]
            + [a + n for a in drop_axes]
        )
        t = np.transpose(t, order).reshape(1 << k, 1 << (n - k), 1 << k, 1 << (n - k))
        rho = np.einsum("ajbj->ab", t)
    return MixedState(k, rho)


def schmidt_rank(state: PureState, cut: Sequence[int], tol: float = 1e-9) -> int:
    """Schmidt rank across cut : rest; singular values below tol count as zero."""
    n = state.n
    t = state.vec.reshape([2] * n)
    order = _axes(n, cut)[::-1] + [n - 1 - q for q in range(n) if q not in cut]
    m = np.transpose(t, order).reshape(1 << len(cut), -1)
    sv = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(sv > tol))


def _as_density(state: State) -> np.ndarray:
    return state.mat if isinstance(state, MixedState) else np.outer(
        state.vec, state.vec.conj()
    )


def trace_distance(a: State, b: State) -> float:
    """(1/2) || a - b ||_1 via eigendecomposition."""
    if a.n != b.n:
        raise ValueError("dimension mismatch")
    diff = _as_density(a) - _as_density(b)
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def helstrom_guess_probability(p: float, a: State, b: State) -> float:
    """Optimal binary discrimination: 1/2 (1 + || p a - (1-p) b ||_1)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("prior must be in [0, 1]")
    m = p * _as_density(a) - (1 - p) * _as_density(b)
    return float(0.5 * (1.0 + np.abs(np.linalg.eigvalsh(m)).sum()))


def states_equal(a: PureState, b: PureState, tol: float = 1e-10) -> bool:
    """Equality up to global phase."""
    if a.n != b.n:
        return False
    return abs(abs(np.vdot(a.vec, b.vec)) - 1.0) <= tol


# --- two-copy Bell sampling on example-state pairs ----------------------------
#
# Realized as a measurement circuit, unitarily equivalent to the POVM
# {E_{y,z,b}}: per-copy Hadamard on the label qubit, Z-measure both labels to
# get b; on b = 11, transversal CNOTs copy1 -> copy2 followed by Hadamards on
# copy 1's data register, then Z-measurements yielding (y, z) with
# z = (A+A^T)y for quadratic-function example states.


def bell_sample_example_pair(joint: PureState, n: int, rng) -> tuple[int, int, tuple[int, int]]:
    """One Bell-sampling draw on a 2(n+1)-qubit pair of example-state copies.

    Copy 1 occupies qubits 0..n (label qubit n), copy 2 qubits n+1..2n+1
    (label qubit 2n+1). Returns (y, z, b) with y from copy 2's data register,
    z from copy 1's, and b the two label bits.
    """
    if joint.n != 2 * (n + 1):
        raise ValueError("joint state must hold two (n+1)-qubit copies")
    lab1, lab2 = n, 2 * n + 1
    st = apply_gate(apply_gate(joint, "H", [lab1]), "H", [lab2])
    b_bits, st = measure_qubits(st, [lab1, lab2], "Z", rng)
    b = (b_bits & 1, (b_bits >> 1) & 1)
    data1 = list(range(n))
    data2 = list(range(n + 1, 2 * n + 1))
    if b == (1, 1):
        for i in range(n):
            st = apply_gate(st, "CNOT", [data1[i], data2[i]])
        st = apply_hadamards(st, data1)
    out, _ = measure_qubits(st, data1 + data2, "Z", rng)
    z = out & ((1 << n) - 1)
    y = out >> n
    return y, z, b


def bell_pair_distribution(copy: PureState, n: int) -> np.ndarray:
    """Exact joint distribution P[b, z, y] of one Bell-sampling draw.

    b indexes (b1, b2) as b1 + 2*b2; the result sums to 1.
    """
    joint = tensor(copy, copy)
    lab1, lab2 = n, 2 * n + 1
    st = apply_gate(apply_gate(joint, "H", [lab1]), "H", [lab2])
    data1 = list(range(n))
    data2 = list(range(n + 1, 2 * n + 1))
    out = np.empty((4, 1 << n, 1 << n))
    for b2 in (0, 1):
        for b1 in (0, 1):
            t = st.vec.reshape([2] * st.n)
            sl: list = [slice(None)] * st.n
            sl[st.n - 1 - lab1] = b1
            sl[st.n - 1 - lab2] = b2
            sub = np.ascontiguousarray(t[tuple(sl)].reshape(-1))  # 2n data qubits
            if (b1, b2) == (1, 1):
                nrm = np.linalg.norm(sub)
                if nrm > 1e-14:
                    work = PureState(2 * n, sub / nrm)
                    for i in range(n):
                        work = apply_gate(work, "CNOT", [i, n + i])
                    work = apply_hadamards(work, range(n))
                    sub = work.vec * nrm
            probs = np.abs(sub) ** 2  # little-endian data index = z | (y << n)
            out[b1 + 2 * b2] = probs.reshape(1 << n, 1 << n).T  # [z, y]
    return out


def bell_povm(n: int) -> Povm:
    """Explicitly materialized POVM elements E_{y,z,b} (test oracle, n <= 3)."""
    if n > 3:
        raise ValueError("materialized Bell POVM is for n <= 3")
    n_tot = 2 * (n + 1)
    dim = 1 << n_tot
    lab1, lab2 = n, 2 * n + 1
    h_labels = _embed_single(GATES_1Q["H"], n_tot, [lab1, lab2])
    idx = np.arange(dim)
    # transversal CNOTs copy1 -> copy2 as a permutation matrix
    targ = idx ^ ((idx & ((1 << n) - 1)) << (n + 1))
    cnots = np.zeros((dim, dim), dtype=complex)
    cnots[targ, idx] = 1.0
    h_data1 = _embed_single(GATES_1Q["H"], n_tot, list(range(n)))

    def proj(qubits: Sequence[int], value: int) -> np.ndarray:
        key = np.zeros(dim, dtype=np.int64)
        for j, q in enumerate(qubits):
            key |= ((idx >> q) & 1) << j
        return np.diag((key == value).astype(complex))

    elements = []
    labels = []
    data1 = list(range(n))
    data2 = list(range(n + 1, 2 * n + 1))
    for b2 in (0, 1):
        for b1 in (0, 1):
            p_label = proj([lab1, lab2], b1 | (b2 << 1))
            for y in range(1 << n):
                for z in range(1 << n):
                    if (b1, b2) == (1, 1):
                        b_op = proj(data1, z) @ h_data1 @ proj(data2, y) @ cnots
                    else:
                        b_op = proj(data1, z) @ proj(data2, y)
                    f_op = b_op @ p_label @ h_labels
                    elements.append(f_op.conj().T @ f_op)
                    labels.append((y, z, (b1, b2)))
    return Povm(copies=2, qubits_per_copy=n + 1, elements=tuple(elements), labels=tuple(labels))


def snapshot_json(state: PureState) -> dict:
    """Debug snapshot: interleaved re/im amplitudes, little-endian index."""
    flat = np.empty(2 * len(state.vec))
    flat[0::2] = state.vec.real
    flat[1::2] = state.vec.imag
    return {"n": state.n, "amplitudes": flat.tolist()}
