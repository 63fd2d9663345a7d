"""Covert verifiable acquisition of quantum data from public oracles.

Masked queries hide the target behind fresh private randomness (send
Z^r |+...+>, undo Z^r on return) or behind entanglement with a private
register (CZ-coupled halves of a maximally entangled pair). Acquisition
wrappers collect masked blocks, certify them with the shadow-overlap
machinery, and emit the untouched output block; task wrappers robustify a
decision algorithm on top.

Block register layout: in entangled modes the private mask register occupies
the low qubits of every copy, the oracle-facing register the high ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import certify, qsim
from .boolfunc import BooleanFunction
from .certify import CertificationRecord, ProductBlock
from .oracles import (
    ExampleMemView,
    MaskedMemView,
    MemOracle,
    QuantumChannelOracle,
    TensorMemView,
)
from .qsim import PureState

# shrink factor c in the accuracy margin min{eps, (1-c) eps_leak}
AMPLIFICATION_SHRINK = 0.25
DEFAULT_BLOCKS = 20  # desk-scale override of the paper-formula block counts

RANDOMNESS = "randomness"
ENTANGLED = "entangled"
QMEM_RANDOMNESS = "qmem-randomness"
QMEM_ENTANGLED = "qmem-entangled"


@dataclass
class MaskedQueryContext:
    """Mask-discipline bookkeeping: one fresh mask or register per query."""

    mode: str
    n: int
    w: int = 0
    queries_made: int = 0
    _used_masks: set = field(default_factory=set)

    def check_fresh(self, mask: Optional[int]):
        self.queries_made += 1
        if mask is None:
            return
        if mask in self._used_masks:
            raise RuntimeError("mask reuse violates the fresh-mask discipline")
        self._used_masks.add(mask)


def paper_block_count_noniid(n_block: int, eps: float, delta: float) -> int:
    """Theta-tilde(n_block^5 / (delta^2 eps^6)) schedule of the non-i.i.d.
    lift, with unit constant; reported alongside the override in use."""
    k_l = certify.iid_copy_count(n_block, eps / 2.0, delta / 6.0)
    return math.ceil(
        n_block * k_l**2 * math.log(2.0 / delta) ** 2 / (delta**2 * eps**2)
    )


def eps_leak(delta_leak: float, m: int) -> float:
    """1 - (1 - delta_leak/2)^m, the per-block fidelity gap a measuring
    ancilla-free adversary cannot avoid."""
    return 1.0 - (1.0 - delta_leak / 2.0) ** m


# --- masked queries -----------------------------------------------------------


def masked_query_phase_randomness(
    oracle: QuantumChannelOracle, n: int, rng, mask: Optional[int] = None,
    ctx: Optional[MaskedQueryContext] = None,
) -> PureState:
    """One covert phase-oracle query from classical randomness.

    Send Z^r |+>^n with private uniform r, undo Z^r on the response; with no
    adversary the result is exactly the target phase state.
    """
    if ctx is not None:
        ctx.check_fresh(mask)
    r = int(rng.integers(0, 1 << n)) if mask is None else mask
    sent = qsim.apply_z_mask(qsim.uniform_state(n), r, range(n))
    got = oracle.query(sent, list(range(n)), rng=rng)
    return qsim.apply_z_mask(got, r, range(n))


def masked_query_phase_entangled(
    oracle: QuantumChannelOracle, n: int, rng,
    ctx: Optional[MaskedQueryContext] = None,
) -> PureState:
    """One covert phase-oracle query from entanglement.

    Prepare a CZ-coupled pair of uniform registers (mask register low, query
    register high), send the query half; unmasking is deferred. The ideal
    2n-qubit response is the phase state of g(r, x) = r·x xor f(x).
    """
    if ctx is not None:
        ctx.check_fresh(None)
    state = qsim.tensor(qsim.uniform_state(n), qsim.uniform_state(n))
    for i in range(n):
        state = qsim.apply_gate(state, "CZ", [i, n + i])
    return oracle.query(state, list(range(n, 2 * n)), rng=rng)


def unmask_entangled(state: PureState, n: int, rng) -> PureState:
    """Measure the mask register, apply the Z^r correction, drop the mask."""
    r, post = qsim.measure_qubits(state, list(range(n)), "Z", rng)
    post = qsim.apply_z_mask(post, r, range(n, 2 * n))
    return qsim.remove_qubits(post, list(range(n)), r)


def uncompute_entangled(state: PureState, n: int) -> PureState:
    """Alternative unmask: undo the CZ coupling, leaving |+>^n (x) target."""
    for i in range(n):
        state = qsim.apply_gate(state, "CZ", [i, n + i])
    return state


def _kickback_wrap(state: PureState, n: int, w: int, aux_base: int) -> PureState:
    """CNOT out->aux then Hadamards on aux (and the inverse, it is an
    involution). The out register sits at aux_base - w."""
    for j in range(w):
        state = qsim.apply_gate(state, "CNOT", [aux_base - w + j, aux_base + j])
    return qsim.apply_hadamards(state, range(aux_base, aux_base + w))


def _unkickback(state: PureState, n: int, w: int, aux_base: int, rng) -> PureState:
    state = qsim.apply_hadamards(state, range(aux_base, aux_base + w))
    for j in range(w):
        state = qsim.apply_gate(state, "CNOT", [aux_base - w + j, aux_base + j])
    # honest runs return the ancilla to |0^w> exactly; under attack the
    # Z-measurement is local post-processing and can only lower fidelity
    a, state = qsim.measure_qubits(state, list(range(aux_base, aux_base + w)), "Z", rng)
    return qsim.remove_qubits(state, list(range(aux_base, aux_base + w)), a)


def masked_query_qmem_randomness(
    oracle: QuantumChannelOracle, n: int, w: int, rng,
    masks: Optional[tuple[int, int]] = None,
    ctx: Optional[MaskedQueryContext] = None,
) -> PureState:
    """Covert quantum-membership query from classical randomness.

    Phase kickback turns one QMem(f) query into a phase-oracle query for
    f~(x, y) = y·f(x) on the (in, out) pair; masking and unmasking work
    exactly as in the randomness-based phase query. Returns the (n+w)-qubit
    phase state of f~, i.e. (1 x H^w) applied to the example state.
    """
    if ctx is not None:
        ctx.check_fresh(masks)
    if masks is None:
        r = int(rng.integers(0, 1 << n))
        rt = int(rng.integers(0, 1 << w))
    else:
        r, rt = masks
    state = qsim.tensor(
        qsim.apply_z_mask(qsim.uniform_state(n), r, range(n)),
        qsim.apply_z_mask(qsim.uniform_state(w), rt, range(w)),
        qsim.basis_state(w),
    )
    aux_base = n + w
    state = _kickback_wrap(state, n, w, aux_base)
    state = oracle.query(
        state, list(range(n)), list(range(aux_base, aux_base + w)), rng=rng
    )
    state = _unkickback(state, n, w, aux_base, rng)
    return qsim.apply_z_mask(state, r | (rt << n), range(n + w))


def masked_query_qmem_entangled(
    oracle: QuantumChannelOracle, n: int, w: int, rng,
    ctx: Optional[MaskedQueryContext] = None,
) -> PureState:
    """Entangled covert QMem query: the (n+w)-qubit mask register stays
    local while the kicked-back target register visits the oracle. Returns
    the 2(n+w)-qubit joint state; the ideal response is the phase state of
    G(rho, zeta) = rho·zeta xor f~(zeta)."""
    if ctx is not None:
        ctx.check_fresh(None)
    nw = n + w
    state = qsim.tensor(qsim.uniform_state(nw), qsim.uniform_state(nw))
    for i in range(nw):
        state = qsim.apply_gate(state, "CZ", [i, nw + i])
    state = qsim.tensor(state, qsim.basis_state(w))
    aux_base = 2 * nw
    state = _kickback_wrap(state, n, w, aux_base)
    in_qubits = list(range(nw, nw + n))
    state = oracle.query(
        state, in_qubits, list(range(aux_base, aux_base + w)), rng=rng
    )
    return _unkickback(state, n, w, aux_base, rng)


# --- acquisition protocols ----------------------------------------------------


@dataclass
class AcquisitionResult:
    accepted: bool
    output: Optional[list[PureState]]  # m copies on acceptance
    record: Optional[CertificationRecord]
    pub_queries: int
    pri_queries: int
    blocks_used: int
    paper_blocks: int


def acquire_unidirectional(
    oracle: QuantumChannelOracle,
    mem: MemOracle,
    n: int,
    m: int,
    eps: float,
    delta: float,
    rng,
    n_blocks: int = DEFAULT_BLOCKS,
    mode: str = RANDOMNESS,
) -> AcquisitionResult:
    """Covert verifiable phase states against unidirectional adversaries.

    N m masked queries assemble N blocks of m n-qubit copies (either masking
    mode unmasks at query time here); non-i.i.d. certification against the
    m-fold tensor-power function gates the output block.
    """
    pub0, pri0 = oracle.count, mem.count
    ctx = MaskedQueryContext(mode=mode, n=n)
    blocks = []
    for _ in range(n_blocks):
        copies = []
        for _ in range(m):
            if mode == RANDOMNESS:
                copies.append(
                    masked_query_phase_randomness(oracle, n, rng, ctx=ctx)
                )
            elif mode == ENTANGLED:
                joint = masked_query_phase_entangled(oracle, n, rng, ctx=ctx)
                copies.append(unmask_entangled(joint, n, rng))
            else:
                raise ValueError(f"bad mode {mode!r} for phase acquisition")
        blocks.append(ProductBlock(copies))
    view = TensorMemView(mem, m=m, n_base=n)
    record, out = certify.certify_state_noniid(blocks, view, eps, delta, rng)
    return AcquisitionResult(
        accepted=record.accepted,
        output=None if out is None else list(out.copies),
        record=record,
        pub_queries=oracle.count - pub0,
        pri_queries=mem.count - pri0,
        blocks_used=n_blocks,
        paper_blocks=paper_block_count_noniid(n * m, eps, delta),
    )


def amplification_rounds(delta: float, delta_a: float) -> int:
    """ell = ceil(2 ln(1/delta) / (1 - 4 delta_a)^2); needs delta_a < 1/4."""
    if not 0 < delta_a < 0.25:
        raise ValueError("the task confidence must satisfy delta_a < 1/4")
    return math.ceil(2.0 * math.log(1.0 / delta) / (1.0 - 4.0 * delta_a) ** 2)


@dataclass
class TaskOutcome:
    rejected: bool
    answer: Optional[object] = None
    rounds: int = 0
    votes: Optional[list] = None


def majority_vote(votes: Sequence[int]):
    counts: dict = {}
    for v in votes:
        counts[v] = counts.get(v, 0) + 1
    return max(counts, key=counts.get)


def cluster_estimate(votes: Sequence[float], eps_a: float) -> Optional[float]:
    """Estimation-mode combiner: average a >= 2/3 cluster of pairwise
    4 eps_a / 5-close round estimates; None when no such cluster exists."""
    xs = np.asarray(votes, dtype=float)
    ell = len(xs)
    need = math.ceil(2 * ell / 3)
    order = np.sort(xs)
    for i in range(ell - need + 1):
        window = order[i : i + need]
        if window[-1] - window[0] <= 4.0 * eps_a / 5.0:
            sel = (xs >= window[0]) & (xs <= window[0] + 4.0 * eps_a / 5.0)
            return float(xs[sel].mean())
    return None


def amplified_task_unidirectional(
    task: Callable[[list[PureState]], object],
    oracle: QuantumChannelOracle,
    mem: MemOracle,
    n: int,
    m: int,
    eps_a: float,
    delta_a: float,
    delta: float,
    rng,
    n_blocks: int = DEFAULT_BLOCKS,
    mode: str = RANDOMNESS,
    combiner: str = "majority",
) -> TaskOutcome:
    """ell certify-then-run rounds with immediate halt on any rejection,
    then a majority vote (or the cluster rule for estimation tasks)."""
    ell = amplification_rounds(delta, delta_a)
    votes = []
    for j in range(ell):
        res = acquire_unidirectional(
            oracle, mem, n, m, eps_a, delta_a, rng, n_blocks=n_blocks, mode=mode
        )
        if not res.accepted:
            return TaskOutcome(rejected=True, rounds=j + 1, votes=votes)
        votes.append(task(res.output))
    if combiner == "majority":
        return TaskOutcome(rejected=False, answer=majority_vote(votes), rounds=ell, votes=votes)
    est = cluster_estimate(votes, eps_a)
    if est is None:
        return TaskOutcome(rejected=True, rounds=ell, votes=votes)
    return TaskOutcome(rejected=False, answer=est, rounds=ell, votes=votes)


def acquire_ancilla_free(
    oracle: QuantumChannelOracle,
    mem: MemOracle,
    n: int,
    m: int,
    eps: float,
    delta: float,
    delta_leak: float,
    rng,
    n_blocks: Optional[int] = None,
) -> AcquisitionResult:
    """Covert verifiable phase states against i.i.d. ancilla-free adversaries.

    (N+1) m entangled masked queries with deferred unmasking; i.i.d.
    shadow-overlap certification of the N certification blocks against the
    2n-qubit-per-copy masked phase state at accuracy min{eps, (1-c) eps_leak};
    on acceptance the output block is unmasked and returned.
    """
    pub0, pri0 = oracle.count, mem.count
    e_leak = eps_leak(delta_leak, m)
    accuracy = min(eps, (1.0 - AMPLIFICATION_SHRINK) * e_leak) if e_leak > 0 else eps
    n_cert = (
        n_blocks
        if n_blocks is not None
        else certify.adaptive_copy_count(2 * n * m, accuracy, delta)
    )
    ctx = MaskedQueryContext(mode=ENTANGLED, n=n)
    blocks = []
    for _ in range(n_cert + 1):
        copies = [
            masked_query_phase_entangled(oracle, n, rng, ctx=ctx) for _ in range(m)
        ]
        blocks.append(ProductBlock(copies))
    view = TensorMemView(MaskedMemView(mem, n), m=m, n_base=2 * n)
    record = certify.overlap_estimate_iid(
        blocks[:n_cert], view, accuracy, delta, rng, rounds_override=n_cert
    )
    output = None
    if record.accepted:
        output = [unmask_entangled(c, n, rng) for c in blocks[n_cert].copies]
    return AcquisitionResult(
        accepted=record.accepted, output=output, record=record,
        pub_queries=oracle.count - pub0, pri_queries=mem.count - pri0,
        blocks_used=n_cert + 1,
        paper_blocks=certify.adaptive_copy_count(2 * n * m, accuracy, delta),
    )


def task_ancilla_free(
    task: Callable[[list[PureState]], object],
    oracle: QuantumChannelOracle,
    mem: MemOracle,
    n: int,
    m: int,
    eps_a: float,
    delta: float,
    delta_leak: float,
    rng,
    n_blocks: Optional[int] = None,
    repeats: int = 1,
) -> TaskOutcome:
    """One certified acquisition feeding the task algorithm; optional
    ell-fold repetition with a majority vote for amplification."""
    votes = []
    for j in range(repeats):
        res = acquire_ancilla_free(
            oracle, mem, n, m, eps_a, delta, delta_leak, rng, n_blocks=n_blocks
        )
        if not res.accepted:
            return TaskOutcome(rejected=True, rounds=j + 1, votes=votes)
        votes.append(task(res.output))
    return TaskOutcome(
        rejected=False, answer=majority_vote(votes), rounds=repeats, votes=votes
    )


# --- QMem-backed acquisition (example states) ---------------------------------


def acquire_unidirectional_qmem(
    oracle: QuantumChannelOracle,
    mem: MemOracle,
    n: int,
    w: int,
    m: int,
    eps: float,
    delta: float,
    rng,
    n_blocks: int = DEFAULT_BLOCKS,
) -> AcquisitionResult:
    """Covert verifiable quantum example states from a public QMem oracle.

    Copies are acquired as phase states of f~(x, y) = y·f(x) via the
    kickback masking, certified against f~ with membership queries simulated
    from the base function, and converted back to example states by the
    output-register Hadamards on acceptance.
    """
    pub0, pri0 = oracle.count, mem.count
    ctx = MaskedQueryContext(mode=QMEM_RANDOMNESS, n=n, w=w)
    blocks = []
    for _ in range(n_blocks):
        copies = [
            masked_query_qmem_randomness(oracle, n, w, rng, ctx=ctx)
            for _ in range(m)
        ]
        blocks.append(ProductBlock(copies))
    view = TensorMemView(ExampleMemView(mem, n, w), m=m, n_base=n + w)
    record, out = certify.certify_state_noniid(blocks, view, eps, delta, rng)
    output = None
    if out is not None:
        output = [
            qsim.apply_hadamards(c, range(n, n + w)) for c in out.copies
        ]
    return AcquisitionResult(
        accepted=record.accepted, output=output, record=record,
        pub_queries=oracle.count - pub0, pri_queries=mem.count - pri0,
        blocks_used=n_blocks,
        paper_blocks=paper_block_count_noniid((n + w) * m, eps, delta),
    )


def acquire_ancilla_free_qmem(
    oracle: QuantumChannelOracle,
    mem: MemOracle,
    n: int,
    w: int,
    m: int,
    eps: float,
    delta: float,
    delta_leak: float,
    rng,
    n_blocks: Optional[int] = None,
) -> AcquisitionResult:
    """Ancilla-free variant over a public QMem oracle: entangled kickback
    masking on the (n+w)-qubit target, certification on 2(n+w)-qubit copies."""
    pub0, pri0 = oracle.count, mem.count
    nw = n + w
    e_leak = eps_leak(delta_leak, m)
    accuracy = min(eps, (1.0 - AMPLIFICATION_SHRINK) * e_leak) if e_leak > 0 else eps
    n_cert = (
        n_blocks
        if n_blocks is not None
        else certify.adaptive_copy_count(2 * nw * m, accuracy, delta)
    )
    ctx = MaskedQueryContext(mode=QMEM_ENTANGLED, n=n, w=w)
    blocks = []
    for _ in range(n_cert + 1):
        copies = [
            masked_query_qmem_entangled(oracle, n, w, rng, ctx=ctx)
            for _ in range(m)
        ]
        blocks.append(ProductBlock(copies))
    view = TensorMemView(
        MaskedMemView(ExampleMemView(mem, n, w), nw), m=m, n_base=2 * nw
    )
    record = certify.overlap_estimate_iid(
        blocks[:n_cert], view, accuracy, delta, rng, rounds_override=n_cert
    )
    output = None
    if record.accepted:
        output = [
            qsim.apply_hadamards(unmask_entangled(c, nw, rng), range(n, n + w))
            for c in blocks[n_cert].copies
        ]
    return AcquisitionResult(
        accepted=record.accepted, output=output, record=record,
        pub_queries=oracle.count - pub0, pri_queries=mem.count - pri0,
        blocks_used=n_cert + 1,
        paper_blocks=certify.adaptive_copy_count(2 * nw * m, accuracy, delta),
    )
