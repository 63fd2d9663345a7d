"""The oracle zoo: statistical, example, membership, measurement-example and
quantum-channel oracles, with query counting, tolerance policies, and tap
points for adversaries on the quantum channels.

Statistical oracles always compute the exact underlying quantity alongside
the emitted answer and assert the tolerance contract |v - exact| <= tau.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import adversary as adv
from . import qsim
from .boolfunc import (
    BooleanFunction,
    eval_all,
    evaluate,
    sign_vector,
    walsh_hadamard,
)
from .gf2 import dot
from .qsim import MixedState, Povm, PureState

PUBLIC = "public"
PRIVATE = "private"


class Transcript:
    """JSON-lines event log with public/private visibility tags."""

    def __init__(self):
        self.events: list[dict] = []

    def log(self, oracle_kind: str, visibility: str, direction: str, payload, counters: dict):
        digest = hashlib.sha256(
            json.dumps(payload, sort_keys=True, default=str).encode()
        ).hexdigest()[:16]
        self.events.append(
            {
                "seq": len(self.events),
                "oracle_kind": oracle_kind,
                "visibility": visibility,
                "direction": direction,
                "payload": payload,
                "payload_digest": digest,
                "counters": dict(counters),
            }
        )

    def public_events(self) -> list[dict]:
        return [e for e in self.events if e["visibility"] == PUBLIC]

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(e, default=str) for e in self.events)


# --- answer policies ---------------------------------------------------------

EXACT = "exact"
GRID = "grid"
PERTURB = "perturb"


def _policy_answer(policy: str, truth: float, tau: float, rng) -> float:
    if policy == EXACT:
        v = truth
    elif policy == GRID:
        # deterministic worst-case flavor: snap to the grid of spacing tau
        v = tau * round(truth / tau)
    elif policy == PERTURB:
        if rng is None:
            raise ValueError("perturb policy needs an rng")
        v = truth + tau * float(rng.uniform(-1.0, 1.0))
    else:
        raise ValueError(f"unknown policy {policy!r}")
    assert abs(v - truth) <= tau + 1e-12, "tolerance audit failed"
    return v


# --- SQ queries --------------------------------------------------------------


class SqQuery:
    """A statistical query; subclasses know their exact expectation."""

    def exact_expectation(self, f: BooleanFunction) -> float:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class CallableSqQuery(SqQuery):
    """Brute-force query q(x, label); exact value by 2^n enumeration."""

    fn: Callable[[int, int], float]
    name: str = "callable"

    def exact_expectation(self, f: BooleanFunction) -> float:
        table = eval_all(f)
        return float(
            np.mean([self.fn(x, int(table[x])) for x in range(1 << f.n)])
        )

    def describe(self) -> dict:
        return {"query": self.name}


_MOMENT_CACHE: dict[tuple[int, ...], np.ndarray] = {}


@dataclass(frozen=True)
class PolynomialSqQuery(SqQuery):
    """Multilinear polynomial over the input bits, q(x) = sum_k c_k prod_{i in S_k} x_i.

    Label-independent; the exact expectation under uniform inputs is the
    closed form sum_k c_k 2^{-|S_k|}.
    """

    supports: tuple[int, ...]  # monomial supports as bit masks
    coeffs: tuple[float, ...]

    def exact_expectation(self, f: BooleanFunction) -> float:
        moments = _MOMENT_CACHE.get(self.supports)
        if moments is None:
            moments = np.array([2.0 ** (-s.bit_count()) for s in self.supports])
            _MOMENT_CACHE[self.supports] = moments
        return float(np.dot(self.coeffs, moments))

    def value(self, x: int) -> float:
        return float(
            sum(c for s, c in zip(self.supports, self.coeffs) if (x & s) == s)
        )

    def range_bound(self) -> float:
        """B with |q(x)| <= B for all x (monomials take values in {0,1})."""
        return float(sum(abs(c) for c in self.coeffs))

    def affine_normalized(self) -> tuple["PolynomialSqQuery", float, float]:
        """Map into [0, 1] via q' = (q + B) / 2B; returns (q', scale, shift)
        with q = scale * q' + shift."""
        b = self.range_bound()
        if b == 0:
            return self, 1.0, 0.0
        coeffs = tuple(c / (2 * b) for c in self.coeffs)
        if 0 in self.supports:
            idx = self.supports.index(0)
            coeffs = tuple(
                c + 0.5 if i == idx else c for i, c in enumerate(coeffs)
            )
            supports = self.supports
        else:
            supports = self.supports + (0,)
            coeffs = coeffs + (0.5,)
        return PolynomialSqQuery(supports, coeffs), 2 * b, -b

    def describe(self) -> dict:
        return {"query": "polynomial", "supports": list(self.supports), "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class ParityPairSqQuery(SqQuery):
    """Tournament query q_{t1,t2}(x, y) = 1[t1·x != t2·x] * 1[t1·x = y]."""

    t1: int
    t2: int

    def exact_expectation(self, f: BooleanFunction) -> float:
        body = f.body
        from .boolfunc import Parity

        if isinstance(body, Parity):
            u = self.t1 ^ self.t2
            v = self.t1 ^ body.s
            if u == 0:
                return 0.0
            if v == 0:
                return 0.5
            if v == u:
                return 0.0
            return 0.25
        table = eval_all(f)
        hits = 0
        for x in range(1 << f.n):
            a = dot(self.t1, x)
            if a != dot(self.t2, x) and a == int(table[x]):
                hits += 1
        return hits / (1 << f.n)

    def describe(self) -> dict:
        return {"query": "parity_pair", "t1": self.t1, "t2": self.t2}


class SqOracle:
    """Classical statistical query oracle with a tolerance policy."""

    def __init__(
        self,
        f: BooleanFunction,
        policy: str = GRID,
        rng=None,
        transcript: Optional[Transcript] = None,
        visibility: str = PRIVATE,
    ):
        self.f = f
        self.policy = policy
        self.rng = rng
        self.transcript = transcript
        self.visibility = visibility
        self.count = 0

    def query(self, q: SqQuery, tau: float) -> float:
        if not 0.0 < tau < 1.0:
            raise ValueError("tolerance must lie in (0, 1)")
        truth = q.exact_expectation(self.f)
        v = _policy_answer(self.policy, truth, tau, self.rng)
        self.count += 1
        if self.transcript is not None:
            self.transcript.log(
                "SQ", self.visibility, "response",
                {**q.describe(), "tau": tau, "answer": v},
                {"sq": self.count},
            )
        return v


# --- QSQ queries -------------------------------------------------------------


@dataclass(frozen=True)
class ExplicitObservable:
    matrix: np.ndarray  # Hermitian, ||M|| <= 1 not enforced here

    def describe(self):
        return {"query": "explicit", "dim": self.matrix.shape[0]}


@dataclass(frozen=True)
class FourierMassQuery:
    """sum_{S in T} fhat(S)^2 for the example state of a width-1 function."""

    mask_predicate: Callable[[int], bool]
    name: str = "fourier_mass"

    def describe(self):
        return {"query": self.name}


@dataclass(frozen=True)
class InfluenceQuery:
    """Influence of variable i, optionally of the off-diagonal-corrected
    function x -> f(x) xor sum_{i<j} x_i A_ij x_j (the conjugating unitary of
    the quadratic learner folded into the symbolic query)."""

    i: int
    offdiag_rows: Optional[tuple[int, ...]] = None

    def describe(self):
        return {"query": "influence", "i": self.i, "corrected": self.offdiag_rows is not None}


QsqObservable = Union[ExplicitObservable, FourierMassQuery, InfluenceQuery]


def influence_exact(f: BooleanFunction, i: int) -> float:
    """Inf_i(f) = Pr_x[f(x) != f(x xor e_i)], exactly."""
    table = eval_all(f)
    xs = np.arange(1 << f.n, dtype=np.uint64)
    return float(np.mean(table[xs] != table[xs ^ np.uint64(1 << i)]))


def fourier_masses(f: BooleanFunction) -> np.ndarray:
    """fhat(S)^2 over all masks S for F = (-1)^f (Parseval: sums to 1)."""
    coef = walsh_hadamard(sign_vector(f)) / (1 << f.n)
    return coef**2


class QsqOracle:
    """Quantum statistical query oracle over a state descriptor.

    The descriptor is ('phase', f), ('example', f) or an explicit MixedState.
    Symbolic observables are evaluated against the underlying function
    exactly; explicit matrices are traced against the density operator.
    """

    def __init__(
        self,
        descriptor,
        policy: str = GRID,
        rng=None,
        transcript: Optional[Transcript] = None,
        visibility: str = PRIVATE,
    ):
        self.descriptor = descriptor
        self.policy = policy
        self.rng = rng
        self.transcript = transcript
        self.visibility = visibility
        self.count = 0

    def _state(self) -> PureState:
        kind, f = self.descriptor
        if kind == "phase":
            return qsim.prepare_phase_state(f)
        if kind == "example":
            return qsim.prepare_example_state(f)
        raise ValueError(f"unknown encoding {kind!r}")

    def exact_value(self, obs: QsqObservable) -> float:
        if isinstance(obs, ExplicitObservable):
            if isinstance(self.descriptor, MixedState):
                return float(np.trace(obs.matrix @ self.descriptor.mat).real)
            psi = self._state()
            if obs.matrix.shape[0] != len(psi.vec):
                raise ValueError("observable dimension mismatch")
            return float(np.vdot(psi.vec, obs.matrix @ psi.vec).real)
        if isinstance(self.descriptor, MixedState):
            raise ValueError("symbolic queries need a function descriptor")
        kind, f = self.descriptor
        if isinstance(obs, FourierMassQuery):
            if kind != "example" or f.w != 1:
                raise ValueError("fourier-mass queries apply to width-1 example states")
            masses = fourier_masses(f)
            return float(
                sum(masses[s] for s in range(1 << f.n) if obs.mask_predicate(s))
            )
        if isinstance(obs, InfluenceQuery):
            if kind != "example" or f.w != 1:
                raise ValueError("influence queries apply to width-1 example states")
            g = f
            if obs.offdiag_rows is not None:
                g = _xor_quadratic(f, obs.offdiag_rows)
            return influence_exact(g, obs.i)
        raise ValueError(f"unsupported symbolic form {type(obs)}")

    def query(self, obs: QsqObservable, tau: float) -> float:
        if not 0.0 < tau < 1.0:
            raise ValueError("tolerance must lie in (0, 1)")
        truth = self.exact_value(obs)
        v = _policy_answer(self.policy, truth, tau, self.rng)
        self.count += 1
        if self.transcript is not None:
            self.transcript.log(
                "QSQ", self.visibility, "response",
                {**obs.describe(), "tau": tau, "answer": v},
                {"qsq": self.count},
            )
        return v


def _xor_quadratic(f: BooleanFunction, offdiag_rows: Sequence[int]) -> BooleanFunction:
    """x -> f(x) xor sum_{i<j} x_i A_ij x_j as a truth table."""
    from .boolfunc import quadratic_fn, truth_table

    q = quadratic_fn(tuple(offdiag_rows), f.n)
    tf = eval_all(f)
    tq = eval_all(q)
    return truth_table([int(a ^ b) for a, b in zip(tf, tq)], w=1)


# --- example / membership ----------------------------------------------------


class ExOracle:
    """Random example oracle: uniform x with its label; logged publicly."""

    def __init__(self, f: BooleanFunction, rng, transcript=None, visibility=PUBLIC):
        self.f = f
        self.rng = rng
        self.transcript = transcript
        self.visibility = visibility
        self.count = 0

    def sample(self) -> tuple[int, int]:
        x = int(self.rng.integers(0, 1 << self.f.n))
        y = evaluate(self.f, x)
        self.count += 1
        if self.transcript is not None:
            self.transcript.log(
                "Ex", self.visibility, "response",
                {"x": x, "y": y}, {"ex": self.count},
            )
        return x, y


class MemOracle:
    """Classical membership query oracle; one count per base-function query."""

    def __init__(self, f: BooleanFunction, transcript=None, visibility=PRIVATE):
        self.f = f
        self.transcript = transcript
        self.visibility = visibility
        self.count = 0

    def query(self, x: int) -> int:
        y = evaluate(self.f, x)
        self.count += 1
        if self.transcript is not None:
            self.transcript.log(
                "Mem", self.visibility, "response",
                {"x": x, "y": y}, {"mem": self.count},
            )
        return y


class TensorMemView:
    """Membership view of f^(x)m: one view query costs m base queries."""

    def __init__(self, base, m: int, n_base: int):
        self.base = base
        self.m = m
        self.n_base = n_base
        self.n = m * n_base

    def query(self, x: int) -> int:
        acc = 0
        mask = (1 << self.n_base) - 1
        for _ in range(self.m):
            acc ^= self.base.query(x & mask)
            x >>= self.n_base
        return acc


class MaskedMemView:
    """Membership view of g(r, x) = r·x xor f(x) on 2n bits (mask register low).

    The bilinear part is computed locally; each view query costs one base query.
    """

    def __init__(self, base, n: int):
        self.base = base
        self.n_base = n
        self.n = 2 * n

    def query(self, z: int) -> int:
        r = z & ((1 << self.n_base) - 1)
        x = z >> self.n_base
        return dot(r, x) ^ self.base.query(x)


class ExampleMemView:
    """Membership view of f~(x, y) = y·f(x) on n+w bits (x register low)."""

    def __init__(self, base, n: int, w: int):
        self.base = base
        self.n = n + w
        self._n_in = n

    def query(self, z: int) -> int:
        x = z & ((1 << self._n_in) - 1)
        y = z >> self._n_in
        return dot(y, self.base.query(x))


# --- quantum measurement examples --------------------------------------------

_PAULI_AXES = "XYZ"


class QMeasExOracle:
    """Raw measurement outcomes of specified POVMs on copies of a state."""

    def __init__(self, state_descriptor, transcript=None, visibility=PUBLIC,
                 log_shots: bool = False):
        # descriptor: PureState, MixedState, or ('phase'|'example', f)
        self.descriptor = state_descriptor
        self.transcript = transcript
        self.visibility = visibility
        self.log_shots = log_shots
        self.count = 0  # weighted: an m-copy POVM counts m
        self._pauli_tables: Optional[np.ndarray] = None

    def state(self) -> PureState:
        if isinstance(self.descriptor, (PureState, MixedState)):
            return self.descriptor
        kind, f = self.descriptor
        if kind == "phase":
            return qsim.prepare_phase_state(f)
        if kind == "example":
            return qsim.prepare_example_state(f)
        raise ValueError(f"unknown descriptor {kind!r}")

    def query(self, povm: Povm, rng):
        st = self.state()
        if isinstance(st, MixedState):
            label = qsim.sample_povm(st, povm, rng)
        else:
            label = qsim.sample_povm([st] * povm.copies, povm, rng)
        self.count += povm.copies
        if self.transcript is not None:
            self.transcript.log(
                "QMeasEx", self.visibility, "response",
                {"copies": povm.copies, "outcome": str(label)},
                {"qmeasex_weighted": self.count},
            )
        return label

    def _basis_probability_tables(self) -> np.ndarray:
        """probs[basis_index, outcome] for all 3^n product-Pauli bases."""
        st = self.state()
        if isinstance(st, MixedState):
            raise ValueError("bulk Pauli sampling implemented for pure sources")
        n = st.n
        tables = np.empty((3**n, 1 << n))
        for b_idx in range(3**n):
            rotated = st
            rem = b_idx
            for q in range(n):
                axis = _PAULI_AXES[rem % 3]
                rem //= 3
                if axis != "Z":
                    v = qsim._BASIS_V[axis]
                    rotated = qsim.apply_unitary(rotated, v.conj().T, [q])
            tables[b_idx] = np.abs(rotated.vec) ** 2
        return tables

    def sample_product_pauli(self, shots: int, rng) -> tuple[np.ndarray, np.ndarray]:
        """Single-copy POVM 'every qubit in an independently uniform Pauli
        basis', repeated `shots` times. Returns (bases, bits) arrays of shape
        (shots, n); bases hold 0/1/2 = X/Y/Z, bits the outcomes (0 = +1).
        """
        st = self.state()
        n = st.n
        if self._pauli_tables is None:
            self._pauli_tables = self._basis_probability_tables()
        axes = rng.integers(0, 3, size=(shots, n))
        basis_idx = (axes * (3 ** np.arange(n))).sum(axis=1)
        outcomes = np.empty(shots, dtype=np.int64)
        for b in np.unique(basis_idx):
            sel = basis_idx == b
            p = np.clip(self._pauli_tables[b], 0, None)
            outcomes[sel] = rng.choice(1 << n, size=sel.sum(), p=p / p.sum())
        bits = (outcomes[:, None] >> np.arange(n)) & 1
        self.count += shots
        if self.transcript is not None and self.log_shots:
            for i in range(shots):
                self.transcript.log(
                    "QMeasEx", self.visibility, "response",
                    {"bases": "".join(_PAULI_AXES[a] for a in axes[i]),
                     "bits": int(outcomes[i])},
                    {"qmeasex_weighted": self.count},
                )
        elif self.transcript is not None:
            self.transcript.log(
                "QMeasEx", self.visibility, "response",
                {"bulk_pauli_shots": shots}, {"qmeasex_weighted": self.count},
            )
        return axes, bits


# --- quantum channel oracles with tap points ---------------------------------


class TapChannel:
    """Interception point on learner<->oracle quantum traffic."""

    def __init__(self, strategy: Optional[adv.AdversaryStrategy] = None):
        self.strategy = strategy or adv.identity()
        self.memory = adv.TapMemory(self.strategy)

    def apply(self, direction: str, state: PureState, qubits, rng) -> PureState:
        out = adv.apply_tap(self.strategy, direction, state, qubits, self.memory, rng)
        if direction == "response":
            self.memory.round += 1
        return out


class QuantumChannelOracle:
    """QPh or QMem oracle whose quantum traffic passes through a tap channel."""

    def __init__(
        self,
        f: BooleanFunction,
        kind: str,
        tap: Optional[TapChannel] = None,
        transcript: Optional[Transcript] = None,
        visibility: str = PUBLIC,
    ):
        if kind not in ("QPh", "QMem"):
            raise ValueError("oracle kind must be QPh or QMem")
        if kind == "QPh" and f.w != 1:
            raise ValueError("QPh oracles need width-1 functions")
        self.f = f
        self.kind = kind
        self.tap = tap or TapChannel()
        self.transcript = transcript
        self.visibility = visibility
        self.count = 0

    def query(
        self,
        state: PureState,
        in_qubits: Sequence[int],
        out_qubits: Optional[Sequence[int]] = None,
        rng=None,
    ) -> PureState:
        """Tap -> oracle unitary -> tap round trip on the designated register."""
        tapped = list(in_qubits) + (list(out_qubits) if out_qubits else [])
        state = self.tap.apply("query", state, tapped, rng)
        if self.kind == "QPh":
            state = qsim.apply_phase_oracle(state, self.f, in_qubits)
        else:
            if out_qubits is None:
                raise ValueError("QMem queries need an output register")
            state = qsim.apply_qmem_oracle(state, self.f, in_qubits, out_qubits)
        state = self.tap.apply("response", state, tapped, rng)
        self.count += 1
        if self.transcript is not None:
            self.transcript.log(
                self.kind, self.visibility, "roundtrip",
                {"in_qubits": list(in_qubits),
                 "out_qubits": list(out_qubits) if out_qubits else None},
                {"quantum": self.count},
            )
        return state
