"""Experiment harness: configuration, seeded Monte-Carlo trials, aggregate
statistics with Wilson intervals, and JSON/CSV report emission.

Every trial derives its generator from SeedSequence([master seed, trial
index]), so any single trial replays bit-exactly from (seed, index).
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import acquire, adversary as adv
from . import boolfunc as bf
from . import certify, covertex, covertsq, oracles, qsim, tasks
from .gf2 import dot

REPORT_SCHEMA = {
    "type": "object",
    "required": ["scenario", "params", "seed", "trials", "aggregate", "records"],
    "properties": {
        "scenario": {"type": "string"},
        "params": {"type": "object"},
        "adversary": {"type": ["object", "null"]},
        "seed": {"type": "integer"},
        "trials": {"type": "integer"},
        "aggregate": {"type": "object"},
        "resources": {"type": "object"},
        "records": {"type": "array", "items": {"type": "object"}},
        "wall_clock_s": {"type": "number"},
    },
}


def wilson_interval(successes: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """95% Wilson score interval for a binomial rate."""
    if n == 0:
        return 0.0, 1.0
    p = successes / n
    denom = 1 + z**2 / n
    center = (p + z**2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z**2 / (4 * n**2)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def trial_rng(master_seed: int, trial_index: int):
    return np.random.default_rng(np.random.SeedSequence([master_seed, trial_index]))


@dataclass
class ExperimentConfig:
    scenario: str
    params: dict = field(default_factory=dict)
    adversary: Optional[dict] = None
    seed: int = 0
    trials: int = 100

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {"scenario", "params", "adversary", "seed", "trials"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "scenario" not in d:
            raise ConfigError("config needs a scenario")
        cfg = cls(
            scenario=d["scenario"],
            params=dict(d.get("params", {})),
            adversary=d.get("adversary"),
            seed=int(d.get("seed", 0)),
            trials=int(d.get("trials", 100)),
        )
        validate_config(cfg)
        return cfg


class ConfigError(ValueError):
    pass


def build_adversary(spec: Optional[dict]) -> Optional[adv.AdversaryStrategy]:
    if spec is None:
        return None
    kind = spec.get("kind")
    if kind in (None, "none", "identity"):
        return adv.identity() if kind == "identity" else None
    if kind == "depolarize":
        return adv.response_depolarize(float(spec["p"]))
    if kind == "replace_zero":
        return adv.response_replace(qsim.basis_state(int(spec["n"]), 0))
    if kind == "measure_z":
        return adv.response_measure_z()
    if kind == "swap_attack":
        return adv.swap_attack()
    if kind == "ancilla_free":
        return adv.ancilla_free_iid(
            float(spec["delta_leak"]),
            extract_post=bool(spec.get("extract_post", True)),
        )
    raise ConfigError(f"unknown adversary kind {kind!r}")


# --- scenario runners ----------------------------------------------------------


def _run_parity(params, adversary_spec, rng) -> dict:
    n = params["n"]
    cfg = covertex.ParityLearnerConfig(
        n=n, delta_c=params["delta_c"], delta_p=params["delta_p"]
    )
    s = int(rng.integers(0, 1 << n))
    f = bf.parity_fn(s, n)
    pub = oracles.ExOracle(f, rng)
    pri = oracles.SqOracle(f, policy=params.get("sq_policy", oracles.GRID), rng=rng)
    res = covertex.covert_parity_learn(pub, pri, cfg)
    guess_ok = False
    if not res.aborted:
        guess = covertex.parity_adversary_guess(res.public_samples, n, rng)
        guess_ok = guess == s
    return {
        "success": bool(not res.aborted and res.s_hat == s),
        "aborted": res.aborted,
        "adversary_correct": bool(guess_ok),
        "pub_count": res.pub_count,
        "pri_count": res.pri_count,
        "pri_within_cap": res.pri_count <= cfg.m_pri_cap,
    }


def _run_quadratic(params, adversary_spec, rng) -> dict:
    n = params["n"]
    rows = covertex.random_quadratic_rows(n, rng)
    f = bf.quadratic_fn(rows, n)
    pub = oracles.QMeasExOracle(("example", f))
    pri = oracles.QsqOracle(
        ("example", f), policy=params.get("qsq_policy", oracles.GRID), rng=rng
    )
    res = covertex.covert_quadratic_learn(pub, pri, n, params["delta_c"], rng)
    return {
        "success": bool(res.a_rows == rows),
        "aborted": res.a_rows is None,
        "pri_count": res.pri_count,
        "pri_exactly_n": res.pri_count == (0 if res.a_rows is None else n),
        "pub_queries": res.pub_queries,
        "pub_weighted": res.pub_weighted,
    }


def _run_covert_sq(params, adversary_spec, rng) -> dict:
    n, d = params["n"], params["d"]
    delta = params["delta"]
    c = rng.normal(size=covertsq.monomial_count(n, d))
    c = c / np.linalg.norm(c) * params["b_c"] * rng.uniform(0.3, 1.0)
    plan = covertsq.sketch_encode(
        c, n, d, delta, params["delta_c"], params["b_c"], params["b_m"], rng
    )
    oracle = oracles.SqOracle(bf.constant_fn(n), policy=oracles.GRID)
    est = covertsq.run_sketched_query(plan, oracle)
    truth = float(c @ covertsq.exact_moment_vector(n, d))
    return {
        "within_delta": bool(abs(est - truth) <= delta),
        "abs_error": abs(est - truth),
        "m_e": plan.m_e,
    }


def _run_shadows(params, adversary_spec, rng) -> dict:
    n = params["n"]
    k = params["k"]
    tau = params["tau"]
    n_obs = params["n_observables"]
    shots, batches = covertsq.shadow_shot_count(n_obs, k, tau, params["delta_p"])
    ok = 0
    total = 0
    for _ in range(params["n_states"]):
        v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        psi = qsim.PureState(n, v / np.linalg.norm(v))
        src = oracles.QMeasExOracle(psi)
        shadows = covertsq.shadow_collect(src, shots, rng)
        for _ in range(n_obs):
            qubits = rng.choice(n, size=k, replace=False)
            axes = rng.integers(0, 3, size=k)
            obs = covertsq.PauliObservable(
                axes=tuple(sorted((int(q), int(a)) for q, a in zip(qubits, axes)))
            )
            est = covertsq.shadow_estimate(shadows, obs, batches)
            exact = covertsq.pauli_expectation_exact(psi, obs)
            ok += abs(est - exact) <= tau
            total += 1
    return {"pairs_ok": ok, "pairs": total, "all_ok": bool(ok == total), "shots": shots}


def _run_certify(params, adversary_spec, rng) -> dict:
    n_block = params["n_block"]
    eps, delta = params["eps"], params["delta"]
    f = bf.random_truth_table(n_block, rng)
    mode = params.get("state", "exact")
    if mode == "exact":
        state = qsim.prepare_phase_state(f)
    elif mode.startswith("flip:"):
        flips = int(mode.split(":")[1])
        table = [int(v) for v in bf.eval_all(f)]
        for x in range(flips):
            table[x] ^= 1
        state = qsim.prepare_phase_state(bf.truth_table(table))
    elif mode == "zero":
        state = qsim.basis_state(n_block, 0)
    else:
        raise ConfigError(f"unknown certify state mode {mode!r}")
    rec = certify.overlap_estimate_iid_state(
        state, f, eps, delta, rng, rounds_override=params.get("rounds")
    )
    return {
        "accepted": rec.accepted,
        "omega_hat": rec.omega_hat,
        "rounds": rec.rounds_used,
        "fidelity": qsim.fidelity(state, qsim.prepare_phase_state(f)),
    }


def _tapped_phase_oracle(f, adversary_spec):
    strategy = build_adversary(adversary_spec)
    tap = oracles.TapChannel(strategy) if strategy else None
    return oracles.QuantumChannelOracle(f, "QPh", tap=tap)


def _run_acquire_uni(params, adversary_spec, rng) -> dict:
    n, m = params["n"], params["m"]
    f = bf.random_truth_table(n, rng)
    oracle = _tapped_phase_oracle(f, adversary_spec)
    mem = oracles.MemOracle(f)
    res = acquire.acquire_unidirectional(
        oracle, mem, n, m, params["eps"], params["delta"], rng,
        n_blocks=params.get("n_blocks", acquire.DEFAULT_BLOCKS),
        mode=params.get("mode", acquire.RANDOMNESS),
    )
    fid = 0.0
    if res.accepted:
        target = qsim.prepare_phase_state(f)
        fid = float(np.prod([qsim.fidelity(c, target) for c in res.output]))
    return {
        "accepted": res.accepted,
        "fidelity": fid,
        "accept_and_bad": bool(res.accepted and fid < params.get("bad_below", 0.8)),
        "pub_queries": res.pub_queries,
        "pri_queries": res.pri_queries,
        "omega_hat": res.record.omega_hat,
    }


def _run_acquire_af(params, adversary_spec, rng) -> dict:
    n, m = params["n"], params["m"]
    f = bf.random_truth_table(n, rng)
    oracle = _tapped_phase_oracle(f, adversary_spec)
    mem = oracles.MemOracle(f)
    res = acquire.acquire_ancilla_free(
        oracle, mem, n, m, params["eps"], params["delta"],
        params["delta_leak"], rng, n_blocks=params.get("n_blocks"),
    )
    fid = 0.0
    if res.accepted:
        target = qsim.prepare_phase_state(f)
        fid = float(np.prod([qsim.fidelity(c, target) for c in res.output]))
    return {
        "accepted": res.accepted,
        "fidelity": fid,
        "blocks": res.blocks_used,
        "omega_hat": res.record.omega_hat,
    }


def _run_forrelation(params, adversary_spec, rng) -> dict:
    n = params["n"]
    case = tasks.PHI_LARGE if rng.integers(2) else tasks.PHI_SMALL
    inst = tasks.gen_forrelation_instance(n, case, rng)
    out = tasks.covert_forrelation(
        inst, rng, delta=params["delta"],
        adversary=build_adversary(adversary_spec),
        ancilla_free=params.get("ancilla_free", False),
        delta_leak=params.get("delta_leak"),
        copies=params.get("copies", tasks.FORRELATION_COPIES),
        base_error=params.get("base_error", tasks.FORRELATION_BASE_ERROR),
        n_blocks=params.get("n_blocks", acquire.DEFAULT_BLOCKS),
    )
    return {
        "rejected": out.rejected,
        "correct": bool(not out.rejected and out.answer == case),
        "accept_and_wrong": bool(not out.rejected and out.answer != case),
        "case": case,
        "phi": inst.phi,
        "rounds": out.rounds,
    }


def _run_simon(params, adversary_spec, rng) -> dict:
    n = params["n"]
    case = tasks.SIMON_PERIODIC if rng.integers(2) else tasks.SIMON_ONE_TO_ONE
    inst = tasks.gen_simon_instance(n, case, rng)
    out = tasks.covert_simon(
        inst, rng, delta=params["delta"],
        adversary=build_adversary(adversary_spec),
        ancilla_free=params.get("ancilla_free", False),
        delta_leak=params.get("delta_leak"),
        copy_budget=params.get("copy_budget"),
        n_blocks=params.get("n_blocks", acquire.DEFAULT_BLOCKS),
    )
    orthogonal_ok = True
    if case == tasks.SIMON_PERIODIC and out.decision is not None:
        orthogonal_ok = all(
            dot(y, inst.period) == 0 for y in out.decision.harvested
        )
    return {
        "rejected": out.rejected,
        "correct": bool(
            not out.rejected
            and out.decision is not None
            and out.decision.label == case
        ),
        "inconclusive": bool(
            out.decision is not None
            and out.decision.label == tasks.SIMON_INCONCLUSIVE
        ),
        "orthogonal_ok": bool(orthogonal_ok),
        "decision_mem": 0 if out.decision is None else out.decision.decision_mem_queries,
        "case": case,
    }


def _run_nogo_swap(params, adversary_spec, rng) -> dict:
    n = params["n"]
    s = int(rng.integers(0, 1 << n))
    f = bf.parity_fn(s, n)
    tap = oracles.TapChannel(adv.swap_attack())
    oracle = oracles.QuantumChannelOracle(f, "QPh", tap=tap)
    mem = oracles.MemOracle(f)
    res = acquire.acquire_unidirectional(
        oracle, mem, n, params.get("m", 1), params["eps"], params["delta"], rng,
        n_blocks=params.get("n_blocks", acquire.DEFAULT_BLOCKS),
    )
    learned = [r[1] for r in tap.memory.records if r[0] == "learned_parity"]
    fid = 0.0
    if res.accepted:
        target = qsim.prepare_phase_state(f)
        fid = float(np.prod([qsim.fidelity(c, target) for c in res.output]))
    return {
        "accepted": res.accepted,
        "adversary_learned": bool(learned and learned[0] == s),
        "accept_and_learned": bool(
            res.accepted and learned and learned[0] == s
        ),
        "fidelity": fid,
    }


@dataclass(frozen=True)
class Scenario:
    runner: Callable
    required: tuple[str, ...]
    defaults: dict
    description: str
    asserts: Optional[Callable] = None


def _assert_parity(agg, params):
    ok = agg["rates"]["success"]["rate"] >= 1 - params["delta_c"] - 0.05
    return ok, f"parity success rate {agg['rates']['success']['rate']:.3f}"


def _assert_acquire_uni(agg, params):
    bad = agg["rates"].get("accept_and_bad", {"rate": 0.0})
    return bad["wilson_high"] <= 0.05 or bad["rate"] == 0.0, (
        f"accept-and-bad Wilson upper {bad['wilson_high']:.3f}"
    )


SCENARIOS: dict[str, Scenario] = {
    "parity": Scenario(
        _run_parity, ("n", "delta_c", "delta_p"),
        {"n": 8, "delta_c": 0.1, "delta_p": 1 / 8},
        "covert parity learning from public examples and private SQs",
        _assert_parity,
    ),
    "quadratic": Scenario(
        _run_quadratic, ("n", "delta_c"), {"n": 4, "delta_c": 0.1},
        "covert quadratic-function learning from public Bell samples",
    ),
    "covert-sq": Scenario(
        _run_covert_sq, ("n", "d", "delta", "delta_c", "b_c", "b_m"),
        {"n": 4, "d": 2, "delta": 0.1, "delta_c": 0.05, "b_c": 1.0, "b_m": 1.0},
        "JL-sketched covert polynomial statistical queries",
    ),
    "shadows-qsq": Scenario(
        _run_shadows, ("n", "k", "tau", "delta_p", "n_states", "n_observables"),
        {"n": 4, "k": 2, "tau": 0.1, "delta_p": 0.01, "n_states": 5,
         "n_observables": 20},
        "classical-shadows covert QSQs from public Pauli measurement examples",
    ),
    "certify": Scenario(
        _run_certify, ("n_block", "eps", "delta"),
        {"n_block": 4, "eps": 0.1, "delta": 0.05, "state": "exact"},
        "shadow-overlap certification dichotomy",
    ),
    "acquire-uni": Scenario(
        _run_acquire_uni, ("n", "m", "eps", "delta"),
        {"n": 3, "m": 1, "eps": 0.1, "delta": 0.1, "n_blocks": 20},
        "covert verifiable phase states vs unidirectional adversaries",
        _assert_acquire_uni,
    ),
    "acquire-af": Scenario(
        _run_acquire_af, ("n", "m", "eps", "delta", "delta_leak"),
        {"n": 3, "m": 1, "eps": 0.1, "delta": 0.1, "delta_leak": 0.5},
        "covert verifiable phase states vs i.i.d. ancilla-free adversaries",
    ),
    "forrelation": Scenario(
        _run_forrelation, ("n", "delta"), {"n": 4, "delta": 0.1},
        "covert verifiable Forrelation end to end",
    ),
    "simon": Scenario(
        _run_simon, ("n", "delta"), {"n": 4, "delta": 0.1},
        "covert verifiable Simon end to end",
    ),
    "nogo-swap": Scenario(
        _run_nogo_swap, ("n", "eps", "delta"),
        {"n": 4, "eps": 0.1, "delta": 0.1, "n_blocks": 20},
        "swap-attack impossibility reproduction",
    ),
}


def validate_config(cfg: ExperimentConfig):
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}")
    sc = SCENARIOS[cfg.scenario]
    merged = {**sc.defaults, **cfg.params}
    missing = [k for k in sc.required if k not in merged]
    if missing:
        raise ConfigError(f"missing params for {cfg.scenario}: {missing}")
    if cfg.trials <= 0:
        raise ConfigError("trials must be positive")
    if cfg.adversary is not None:
        strategy = build_adversary(cfg.adversary)
        if (
            strategy is not None
            and cfg.scenario in ("acquire-af",)
            and strategy.kind == "swap_attack"
        ):
            raise ConfigError("swap attack needs bidirectional taps; "
                              "acquire-af models i.i.d. ancilla-free adversaries")


def run_trial(cfg: ExperimentConfig, index: int) -> dict:
    sc = SCENARIOS[cfg.scenario]
    params = {**sc.defaults, **cfg.params}
    rng = trial_rng(cfg.seed, index)
    record = sc.runner(params, cfg.adversary, rng)
    record["trial"] = index
    return record


def aggregate_records(records: list[dict]) -> dict:
    agg: dict = {"trials": len(records), "rates": {}, "numeric": {}}
    if not records:
        return agg
    keys = records[0].keys()
    for k in keys:
        if k == "trial":
            continue
        vals = [r[k] for r in records]
        if all(isinstance(v, (bool, np.bool_)) for v in vals):
            succ = int(sum(vals))
            lo, hi = wilson_interval(succ, len(vals))
            agg["rates"][k] = {
                "successes": succ,
                "rate": succ / len(vals),
                "wilson_low": lo,
                "wilson_high": hi,
            }
        elif all(isinstance(v, (int, float, np.integer, np.floating)) for v in vals):
            arr = np.asarray(vals, dtype=float)
            agg["numeric"][k] = {
                "mean": float(arr.mean()),
                "min": float(arr.min()),
                "max": float(arr.max()),
            }
    return agg


def resource_table(cfg: ExperimentConfig) -> dict:
    """Paper-formula resource counts next to the configured overrides."""
    sc = SCENARIOS[cfg.scenario]
    p = {**sc.defaults, **cfg.params}
    out: dict = {"scenario": cfg.scenario}
    n = p.get("n")
    m = p.get("m", 1)
    eps = p.get("eps", p.get("delta", 0.1))
    delta = p.get("delta", 0.1)
    if cfg.scenario in ("acquire-uni", "nogo-swap", "forrelation", "simon"):
        n_block = (n or 4) * m
        out["paper_blocks_noniid"] = acquire.paper_block_count_noniid(
            n_block, eps, delta
        )
        out["paper_pub_queries"] = out["paper_blocks_noniid"] * m
        out["configured_blocks"] = p.get("n_blocks", acquire.DEFAULT_BLOCKS)
        out["iid_copy_formula"] = certify.iid_copy_count(n_block, eps, delta)
    if cfg.scenario in ("acquire-af",):
        dl = p.get("delta_leak", 0.5)
        el = acquire.eps_leak(dl, m)
        out["eps_leak"] = el
        acc = min(eps, (1 - acquire.AMPLIFICATION_SHRINK) * el)
        out["accuracy"] = acc
        out["paper_blocks_adaptive"] = certify.adaptive_copy_count(
            2 * (n or 3) * m, acc, delta
        )
        out["configured_blocks"] = p.get("n_blocks") or out["paper_blocks_adaptive"]
    if cfg.scenario == "forrelation":
        base = p.get("base_error", tasks.FORRELATION_BASE_ERROR)
        out["ell"] = acquire.amplification_rounds(delta, 2 * base)
    if cfg.scenario == "parity":
        c = covertex.ParityLearnerConfig(
            n=p["n"], delta_c=p["delta_c"], delta_p=p["delta_p"]
        )
        out.update({"k": c.k, "m_pub": c.m_pub, "m_pri_cap": c.m_pri_cap})
    if cfg.scenario == "quadratic":
        out["m_pub_bell_pairs"] = covertex.quadratic_public_budget(
            p["n"], p["delta_c"]
        )
        out["m_pri"] = p["n"]
    if cfg.scenario == "covert-sq":
        m_e, eps0, tau_e = covertsq.sketch_width(
            p["delta"], p["delta_c"], p["b_c"], p["b_m"]
        )
        out.update({"m_e": m_e, "eps0": eps0, "tau_e": tau_e})
    if cfg.scenario == "shadows-qsq":
        shots, batches = covertsq.shadow_shot_count(
            p["n_observables"], p["k"], p["tau"], p["delta_p"]
        )
        out.update({"shots": shots, "batches": batches})
    return out


@dataclass
class ExperimentReport:
    scenario: str
    params: dict
    adversary: Optional[dict]
    seed: int
    trials: int
    records: list[dict]
    aggregate: dict
    resources: dict
    wall_clock_s: float

    def to_dict(self) -> dict:
        return asdict(self)

    def summary_row(self) -> dict:
        row = {
            "scenario": self.scenario,
            "seed": self.seed,
            "trials": self.trials,
            "wall_clock_s": round(self.wall_clock_s, 3),
        }
        for k in ("n", "m", "eps", "delta", "delta_c", "delta_p", "delta_leak"):
            if k in self.params:
                row[k] = self.params[k]
        for k, v in self.aggregate.get("rates", {}).items():
            row[f"{k}_rate"] = round(v["rate"], 6)
            row[f"{k}_wilson_low"] = round(v["wilson_low"], 6)
            row[f"{k}_wilson_high"] = round(v["wilson_high"], 6)
        return row


def run_experiment(
    cfg: ExperimentConfig, out_dir: Optional[str] = None, workers: int = 1
) -> ExperimentReport:
    """Execute the trials (optionally across worker processes; trial seeds
    make the records independent of the worker count), aggregate, and
    optionally write report.json plus a summary.csv row."""
    validate_config(cfg)
    sc = SCENARIOS[cfg.scenario]
    start = time.perf_counter()
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        from functools import partial

        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(partial(run_trial, cfg), range(cfg.trials)))
    else:
        records = [run_trial(cfg, i) for i in range(cfg.trials)]
    wall = time.perf_counter() - start
    report = ExperimentReport(
        scenario=cfg.scenario,
        params={**sc.defaults, **cfg.params},
        adversary=cfg.adversary,
        seed=cfg.seed,
        trials=cfg.trials,
        records=records,
        aggregate=aggregate_records(records),
        resources=resource_table(cfg),
        wall_clock_s=wall,
    )
    if out_dir is not None:
        write_report(report, out_dir)
    return report


def write_report(report: ExperimentReport, out_dir: str):
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / "report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    row = report.summary_row()
    csv_path = path / "summary.csv"
    header = not csv_path.exists()
    with open(csv_path, "a") as fh:
        if header:
            fh.write(",".join(row.keys()) + "\n")
        fh.write(",".join(str(v) for v in row.values()) + "\n")


def check_assertions(report: ExperimentReport) -> tuple[bool, str]:
    sc = SCENARIOS[report.scenario]
    if sc.asserts is None:
        return True, "no assertions registered for this scenario"
    return sc.asserts(report.aggregate, report.params)
