"""Strategy-covert statistical queries.

Two pipelines: a sketching compiler that turns one low-degree polynomial SQ
into a batch of random dense polynomial SQs whose distribution carries no
information about the target (the public queries are rows of a Gaussian
random projection), and the random-Pauli classical-shadows pipeline that
answers k-local QSQs from observable-agnostic public measurement examples.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Optional, Sequence

import numpy as np

from .oracles import PolynomialSqQuery, QMeasExOracle, SqOracle

JL_CONSTANT = 8  # declared implementation constant in the sketch-width formula

# --- monomial basis -----------------------------------------------------------


def monomial_basis(n: int, d: int) -> list[tuple[int, ...]]:
    """Formal monomials of degree <= d over n variables, graded order.

    Monomials are exponent multisets (tuples of variable indices, repeats
    allowed); the count is C(n+d, d). Over {0,1}^n a monomial evaluates as
    the product over its support, so repeated variables collapse in value but
    remain distinct basis elements. Order: by degree, then lexicographic;
    recorded in the plan for reproducibility.
    """
    basis: list[tuple[int, ...]] = []
    for deg in range(d + 1):
        basis.extend(sorted(combinations_with_replacement(range(n), deg)))
    return basis


def monomial_count(n: int, d: int) -> int:
    return math.comb(n + d, d)


def support_mask(monomial: tuple[int, ...]) -> int:
    mask = 0
    for i in monomial:
        mask |= 1 << i
    return mask


def exact_moment_vector(n: int, d: int) -> np.ndarray:
    """E[monomial] under uniform bits: 2^{-|support|} per basis element."""
    return np.array(
        [2.0 ** (-support_mask(m).bit_count()) for m in monomial_basis(n, d)]
    )


# --- sketch plans -------------------------------------------------------------


@dataclass
class SketchPlan:
    n: int
    degree: int
    basis: list[tuple[int, ...]]
    m_e: int
    tau_e: float
    b_c: float
    b_m: float
    projection: np.ndarray  # m_e x N, private
    projected_coeffs: Optional[np.ndarray]  # R c, private; None for the simulator
    scales: np.ndarray  # per-query affine de-normalization y = scale*resp + shift
    shifts: np.ndarray
    queries: list[PolynomialSqQuery]
    oracle_taus: np.ndarray


def sketch_width(delta: float, delta_c: float, b_c: float, b_m: float) -> tuple[int, float, float]:
    """(m_e, eps0, tau_e) from the declared-constant formulas."""
    eps0 = delta / (2.0 * b_c * b_m)
    m_e = math.ceil(JL_CONSTANT * math.log(1.0 / delta_c) / eps0**2)
    tau_e = delta / (4.0 * b_c * math.sqrt(m_e))
    return m_e, eps0, tau_e


def _build_plan(
    n: int,
    d: int,
    delta: float,
    delta_c: float,
    b_c: float,
    b_m: float,
    rng,
    coeffs: Optional[np.ndarray],
    projection_override: Optional[np.ndarray] = None,
) -> SketchPlan:
    basis = monomial_basis(n, d)
    big_n = len(basis)
    m_e, _, tau_e = sketch_width(delta, delta_c, b_c, b_m)
    if projection_override is not None:
        projection = np.asarray(projection_override, dtype=float)
        m_e = projection.shape[0]
    else:
        # drawn before any target-dependent work: the simulator runs this
        # exact code path, so equal seeds give bit-identical query streams
        projection = rng.normal(size=(m_e, big_n)) / math.sqrt(m_e)
    supports = tuple(support_mask(m) for m in basis)
    # vectorized affine normalization into [0, 1]: q' = (q + B) / 2B with
    # B = sum |coeffs| (monomials take values in {0, 1})
    bounds = np.abs(projection).sum(axis=1)
    bounds[bounds == 0.0] = 1.0
    norm_coeffs = projection / (2.0 * bounds[:, None])
    const_col = supports.index(0)  # graded order starts with the empty monomial
    norm_coeffs[:, const_col] += 0.5
    queries = [
        PolynomialSqQuery(supports, tuple(row)) for row in norm_coeffs
    ]
    scales = 2.0 * bounds
    shifts = -bounds
    taus = tau_e / scales
    projected = None if coeffs is None else projection @ coeffs
    return SketchPlan(
        n=n, degree=d, basis=basis, m_e=m_e, tau_e=tau_e, b_c=b_c, b_m=b_m,
        projection=projection, projected_coeffs=projected,
        scales=scales, shifts=shifts, queries=queries, oracle_taus=taus,
    )


def sketch_encode(
    coeffs: Sequence[float],
    n: int,
    d: int,
    delta: float,
    delta_c: float,
    b_c: float,
    b_m: float,
    rng,
    projection_override: Optional[np.ndarray] = None,
) -> SketchPlan:
    """Compile the private target polynomial into m_e public dense queries.

    `coeffs` is aligned with monomial_basis(n, d) and must satisfy
    ||c||_2 <= b_c. The public queries (plan.queries with plan.oracle_taus)
    are affine-normalized into [0, 1]; the plan privately retains R and R c.
    """
    c = np.asarray(coeffs, dtype=float)
    if len(c) != monomial_count(n, d):
        raise ValueError("coefficient vector does not match the monomial basis")
    if np.linalg.norm(c) > b_c + 1e-12:
        raise ValueError("||c||_2 exceeds the public bound B_c")
    return _build_plan(n, d, delta, delta_c, b_c, b_m, rng, c, projection_override)


def sketch_simulator(
    n: int, d: int, delta: float, delta_c: float, b_c: float, b_m: float, rng
) -> SketchPlan:
    """Target-independent query stream from the encoder's own sampler."""
    return _build_plan(n, d, delta, delta_c, b_c, b_m, rng, coeffs=None)


def sketch_decode(plan: SketchPlan, responses: Sequence[float]) -> float:
    """(R c) · y where y undoes the per-query affine normalization."""
    if plan.projected_coeffs is None:
        raise ValueError("simulator plans hold no private coefficients")
    resp = np.asarray(responses, dtype=float)
    if resp.shape != (plan.m_e,):
        raise ValueError("response length mismatch")
    y = plan.scales * resp + plan.shifts
    return float(plan.projected_coeffs @ y)


def run_sketched_query(plan: SketchPlan, oracle: SqOracle) -> float:
    """Send every public query, decode the responses."""
    responses = [
        oracle.query(q, tau) for q, tau in zip(plan.queries, plan.oracle_taus)
    ]
    return sketch_decode(plan, responses)


# --- classical shadows --------------------------------------------------------


@dataclass
class ShadowSet:
    """Per-shot Pauli bases (0/1/2 = X/Y/Z) and outcome bits (0 = +1)."""

    n: int
    bases: np.ndarray  # (shots, n) int
    bits: np.ndarray  # (shots, n) int

    @property
    def shots(self) -> int:
        return self.bases.shape[0]


@dataclass(frozen=True)
class PauliObservable:
    """Tensor of Paulis on a support set, identity elsewhere; ||M|| = |coefficient|."""

    axes: tuple[tuple[int, int], ...]  # (qubit, axis 0/1/2 = X/Y/Z), sorted
    coefficient: float = 1.0

    @property
    def locality(self) -> int:
        return len(self.axes)


def pauli_observable(spec: dict[int, str], coefficient: float = 1.0) -> PauliObservable:
    axes = tuple(sorted((q, "XYZ".index(a)) for q, a in spec.items()))
    return PauliObservable(axes=axes, coefficient=coefficient)


def shadow_batches(m_targets: int, delta_p: float) -> int:
    """Median-of-means batch count K = ceil(8 log(2 m / delta_p))."""
    return math.ceil(8.0 * math.log(2.0 * m_targets / delta_p))


def shadow_shot_count(m_targets: int, k: int, tau: float, delta_p: float) -> tuple[int, int]:
    """(total shots, batch count) for m_targets k-local queries at tolerance tau."""
    batches = shadow_batches(m_targets, delta_p)
    per_batch = math.ceil(4.0 * 4**k / tau**2)
    return batches * per_batch, batches


def shadow_collect(source: QMeasExOracle, shots: int, rng) -> ShadowSet:
    """Collect observable-agnostic random-Pauli measurement examples.

    Every shot queries the public oracle with the same single-copy POVM
    (measure each qubit in an independently uniform Pauli basis); the public
    transcript holds only basis labels and outcome bits.
    """
    bases, bits = source.sample_product_pauli(shots, rng)
    return ShadowSet(n=bases.shape[1], bases=bases, bits=bits)


def shadow_single_shot_estimates(shadows: ShadowSet, obs: PauliObservable) -> np.ndarray:
    """Inverse-channel single-shot estimators: 3^k * prod of outcomes on the
    support when every support qubit was measured in the matching basis,
    else 0."""
    if obs.locality > 4:
        raise ValueError("supported locality is k <= 4")
    est = np.full(shadows.shots, obs.coefficient * 3.0**obs.locality)
    match = np.ones(shadows.shots, dtype=bool)
    for q, axis in obs.axes:
        match &= shadows.bases[:, q] == axis
        est *= 1.0 - 2.0 * shadows.bits[:, q]
    est[~match] = 0.0
    return est


def shadow_estimate(shadows: ShadowSet, obs: PauliObservable, batches: int) -> float:
    """Median of `batches` batch means of the single-shot estimators."""
    est = shadow_single_shot_estimates(shadows, obs)
    if batches <= 1:
        return float(est.mean())
    usable = (len(est) // batches) * batches
    if usable == 0:
        raise ValueError("fewer shots than batches")
    return float(np.median(est[:usable].reshape(batches, -1).mean(axis=1)))


def pauli_expectation_exact(state, obs: PauliObservable) -> float:
    """tr[M rho] by materializing the Pauli string (test oracle, small n)."""
    mats = {
        0: np.array([[0, 1], [1, 0]], dtype=complex),
        1: np.array([[0, -1j], [1j, 0]], dtype=complex),
        2: np.array([[1, 0], [0, -1]], dtype=complex),
    }
    lookup = dict(obs.axes)
    full = np.eye(1, dtype=complex)
    for q in range(state.n):
        m = mats[lookup[q]] if q in lookup else np.eye(2, dtype=complex)
        full = np.kron(m, full)  # little-endian: qubit q at bit q
    vec = getattr(state, "vec", None)
    if vec is not None:
        return float(obs.coefficient * np.vdot(vec, full @ vec).real)
    return float(obs.coefficient * np.trace(full @ state.mat).real)


def shadow_set_to_jsonl(shadows: ShadowSet) -> str:
    lines = []
    for i in range(shadows.shots):
        bits_int = int((shadows.bits[i] * (1 << np.arange(shadows.n))).sum())
        lines.append(
            json.dumps(
                {
                    "shot": i,
                    "bases": "".join("XYZ"[a] for a in shadows.bases[i]),
                    "bits": format(bits_int, "x"),
                }
            )
        )
    return "\n".join(lines)


def shadow_set_from_jsonl(text: str) -> ShadowSet:
    bases, bits = [], []
    n = None
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        n = len(rec["bases"])
        bases.append(["XYZ".index(c) for c in rec["bases"]])
        bits_int = int(rec["bits"], 16)
        bits.append([(bits_int >> j) & 1 for j in range(n)])
    return ShadowSet(n=n, bases=np.array(bases), bits=np.array(bits))
