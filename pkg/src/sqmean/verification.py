"""Randomized bound-compliance suites.

Each ``check_*`` function runs one acceptance criterion end to end and
returns a :class:`CriterionResult`. Ground truth here is recomputed with
plain loops over the support (see ``_brute_*``) rather than through
``sqmean.core``, so a bug there cannot hide a violation.
"""
from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from sqmean.core import FiniteDistribution, Query
from sqmean.estimators import (
    VECTOR_QUERY_CONSTANT,
    dyadic_mean,
    known_bound_mean,
    quantile_search,
    signed_mean,
    vector_mean,
    vector_query_budget,
)
from sqmean.estimators.quantiles import required_parameter
from sqmean.harness.generators import discretized_gaussian
from sqmean.oracles import (
    POLICIES,
    CommOracle,
    CommVstatOracle,
    VstatOracle,
    comm_schedule,
    oracle_factory,
    vstat_tolerance,
)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number}: {self.name} -- {self.detail}"


# -- brute-force ground truth -------------------------------------------------

def _brute_mean(dist: FiniteDistribution, values) -> float:
    return math.fsum(w * v for w, v in zip(dist.weights.tolist(), np.asarray(values).tolist()))


def _brute_second(dist: FiniteDistribution, values) -> float:
    return math.fsum(w * v * v for w, v in zip(dist.weights.tolist(), np.asarray(values).tolist()))


def _brute_sigma(dist: FiniteDistribution, values) -> float:
    m = _brute_mean(dist, values)
    return math.sqrt(math.fsum(w * (v - m) ** 2 for w, v in zip(dist.weights.tolist(), np.asarray(values).tolist())))


def _brute_tail(dist: FiniteDistribution, values, t: float, strict: bool = False) -> float:
    parts = []
    for w, v in zip(dist.weights.tolist(), np.asarray(values).tolist()):
        if v > t or (not strict and v == t):
            parts.append(w)
    return math.fsum(parts)


# -- random instances ---------------------------------------------------------

def random_distribution(rng: np.random.Generator, max_support: int = 128, kind: str = "mixed") -> FiniteDistribution:
    """Random finite distribution; ``kind`` is ``mixed``, ``unit`` ([0, 1]), ``nonneg`` or ``signed``."""
    size = int(rng.integers(1, max_support + 1))
    if kind == "unit":
        style = rng.integers(4)
        if style == 0:
            values = rng.random(size) ** rng.integers(1, 9)
        elif style == 1:
            values = rng.integers(0, 5, size) / 4.0
        elif style == 2:
            values = 2.0 ** -rng.integers(0, 14, size).astype(float)
        else:
            values = np.where(rng.random(size) < 0.8, 0.0, rng.random(size))
    elif kind == "nonneg":
        style = rng.integers(3)
        if style == 0:
            values = rng.lognormal(0.0, rng.uniform(0.2, 2.0), size)
        elif style == 1:
            values = rng.pareto(rng.uniform(2.2, 5.0), size) * rng.uniform(0.1, 10)
        else:
            values = np.where(rng.random(size) < 0.9, rng.random(size), rng.uniform(10, 1000, size))
    elif kind == "signed":
        style = rng.integers(4)
        shift = rng.normal(0, 5)
        scale = 10 ** rng.uniform(-2, 2)
        if style == 0:
            values = shift + scale * rng.standard_normal(size)
        elif style == 1:
            values = shift + scale * rng.standard_t(3, size)
        elif style == 2:
            values = shift + scale * (rng.pareto(2.5, size) - rng.pareto(2.5, size))
        else:
            values = shift + scale * rng.integers(-3, 4, size).astype(float)
    else:
        values = rng.integers(-20, 21, size).astype(float) if rng.random() < 0.5 else rng.normal(0, 10, size)
    alpha = rng.choice([0.1, 0.5, 1.0, 3.0])
    weights = rng.dirichlet(np.full(size, alpha))
    weights = np.maximum(weights, 0.0)
    if not weights.sum() > 0:
        weights = np.full(size, 1.0 / size)
    return FiniteDistribution(values, weights / weights.sum())


def _policy_oracle(dist, n, policy, seed, record=False):
    return VstatOracle(dist, n, policy, seed=seed, record=record)


# -- criteria -----------------------------------------------------------------

def check_quantile_contract(trials: int = 500, seed: int = 1) -> CriterionResult:
    rng = np.random.default_rng(seed)
    violations = 0
    checked = 0
    for t in range(trials):
        dist = random_distribution(rng, 128, "mixed")
        q = Query.identity(dist)
        delta = float(rng.uniform(0.01, 0.25))
        p = float(rng.uniform(2 * delta, 1.0))
        n = required_parameter(p, delta)
        Z = np.unique(dist.support)
        budget = math.ceil(math.log2(Z.size)) + 1 if Z.size > 1 else 1
        for policy in POLICIES:
            res = quantile_search(_policy_oracle(dist, n, policy, seed=t), q, p, delta)
            ok = (
                res.point in Z
                and _brute_tail(dist, q.values, res.point) >= p - delta
                and _brute_tail(dist, q.values, res.point, strict=True) < p
                and res.queries_used <= budget
            )
            violations += not ok
            checked += 1
    return CriterionResult(1, "quantile contract", violations == 0, f"{violations} violations in {checked} searches")


def check_dyadic_bound(trials: int = 100, seed: int = 2) -> CriterionResult:
    rng = np.random.default_rng(seed)
    violations = 0
    checked = 0
    for t in range(trials):
        dist = random_distribution(rng, 64, "unit")
        q = Query(dist, dist.support, 0.0, 1.0)
        s = math.sqrt(_brute_second(dist, q.values))
        truth = _brute_mean(dist, q.values)
        for n in (16, 64, 256, 1024, 4096):
            bound = 4 / n + 2 * s * math.log2(n) / math.sqrt(n)
            histories = []
            for policy in POLICIES:
                oracle = _policy_oracle(dist, n, policy, seed=t, record=True)
                rep = dyadic_mean(oracle, q)
                histories.append(oracle.history)
                ok = abs(rep.value - truth) <= bound and rep.queries_used == int(math.floor(math.log2(n)))
                violations += not ok
                checked += 1
            first = histories[0]
            same = all(len(h) == len(first) and all(np.array_equal(a, b) for a, b in zip(h, first)) for h in histories)
            violations += not same
    return CriterionResult(
        2, "dyadic bound + non-adaptivity", violations == 0, f"{violations} violations in {checked} runs"
    )


def check_known_bound(trials: int = 50, seed: int = 3) -> CriterionResult:
    rng = np.random.default_rng(seed)
    violations = 0
    checked = 0
    for ratio in (16, 32):
        for t in range(trials):
            dist = random_distribution(rng, 64, "nonneg")
            q = Query.identity(dist)
            B = math.sqrt(_brute_second(dist, q.values)) * float(rng.uniform(1.0, 3.0))
            eps = B / ratio
            truth = _brute_mean(dist, q.values)
            expected_n = math.ceil((8 * B * math.log2(B / eps) / eps) ** 2)
            for policy in POLICIES:
                rep = known_bound_mean(oracle_factory("vstat", policy, seed=t), q, B, eps)
                ok = (
                    abs(rep.value - truth) <= eps
                    and rep.queries_used <= 3 * math.log2(B / eps) + 1e-9
                    and rep.oracle_parameter == expected_n
                )
                violations += not ok
                checked += 1
    return CriterionResult(3, "known-bound estimator", violations == 0, f"{violations} violations in {checked} runs")


def check_signed_mean(trials: int = 100, seed: int = 4, zeta: float = 0.01) -> CriterionResult:
    rng = np.random.default_rng(seed)
    violations = 0
    checked = 0
    worst = 0.0
    for t in range(trials):
        dist = random_distribution(rng, 128, "signed")
        q = Query.identity(dist)
        B = 1.5 * math.sqrt(_brute_second(dist, q.values))
        sigma = _brute_sigma(dist, q.values)
        truth = _brute_mean(dist, q.values)
        for n in (64, 1024):
            bound = 8 * sigma * math.log2(8 * n) / math.sqrt(n) + zeta
            budget = 3 * math.log2(4 * n * B / zeta**2) + 4
            for policy in POLICIES:
                rep = signed_mean(oracle_factory("vstat", policy, seed=t), q, n, zeta, B)
                err = abs(rep.value - truth)
                worst = max(worst, err / bound)
                ok = err <= bound and rep.queries_used <= budget
                violations += not ok
                checked += 1
    return CriterionResult(
        4, "signed-mean bound", violations == 0,
        f"{violations} violations in {checked} runs; worst error/bound = {worst:.3f}",
    )


def check_median_shift(trials: int = 1000, seed: int = 5) -> CriterionResult:
    rng = np.random.default_rng(seed)
    violations = 0
    checked = 0
    for _ in range(trials):
        dist = random_distribution(rng, 64, "mixed")
        v = dist.support
        var = _brute_sigma(dist, v) ** 2
        for a in v.tolist():
            upper = _brute_tail(dist, v, a)
            lower = math.fsum(w for w, x in zip(dist.weights.tolist(), v.tolist()) if x <= a)
            if upper >= 1 / 3 and lower >= 1 / 3:
                shifted = math.fsum(w * (x - a) ** 2 for w, x in zip(dist.weights.tolist(), v.tolist()))
                violations += shifted > 4 * var * (1 + 1e-9)
                checked += 1
    return CriterionResult(5, "median-shift inequality", violations == 0, f"{violations} violations in {checked} points")


def vector_instance(d: int = 32, seed: int = 6, total_variance: float = 0.9):
    """Product of discretized Gaussians with total variance at most ``total_variance``."""
    rng = np.random.default_rng(seed)
    std = math.sqrt(total_variance / d)
    means = rng.uniform(-0.6, 0.6, d)
    return [discretized_gaussian(float(m), std, std / 8, 6 * std) for m in means]


def check_vector_mean(seed: int = 6, eps: float = 0.25, B: float = 4.0) -> CriterionResult:
    dists = vector_instance(32, seed)
    d = len(dists)
    var = math.fsum(_brute_sigma(x, x.support) ** 2 for x in dists)
    second = math.fsum(_brute_second(x, x.support) for x in dists)
    truth = np.array([_brute_mean(x, x.support) for x in dists])
    budget = vector_query_budget(d, B, eps)
    failures = []
    worst_err, most_queries = 0.0, 0
    for policy in POLICIES:
        res = vector_mean(oracle_factory("vstat", policy, seed=seed), dists, eps, B)
        err = float(np.linalg.norm(res.estimate - truth))
        worst_err, most_queries = max(worst_err, err), max(most_queries, res.queries_used)
        if not (err <= eps and res.queries_used <= budget):
            failures.append(f"{policy}: error {err:.4f}, queries {res.queries_used}")
    detail = (
        f"d={d}, total variance {var:.3f}, worst l2 error {worst_err:.4f} (<= {eps}), "
        f"max queries {most_queries} (<= C*d*log2(dB/eps) = {budget:.0f}, C={VECTOR_QUERY_CONSTANT})"
    )
    if failures:
        detail += "; " + "; ".join(failures)
    return CriterionResult(6, "vector mean", not failures and var <= 1 and second <= B * B, detail)


def check_comm_simulation(runs: int = 200, q_total: int = 20, n: int = 100, delta: float = 0.1,
                          seed: int = 7) -> CriterionResult:
    r, m = comm_schedule(n, q_total, delta)
    rng = np.random.default_rng(seed)
    failed_runs = 0
    bits_ok = True
    for run in range(runs):
        dist = random_distribution(rng, 32, "mixed")
        oracle = CommVstatOracle(CommOracle(dist, seed=int(rng.integers(2**63))), n, q_total, delta)
        bad = False
        for _ in range(q_total):
            style = rng.integers(3)
            if style == 0:
                values = rng.random(len(dist))
            elif style == 1:
                values = (rng.random(len(dist)) < rng.random()).astype(float)
            else:
                values = rng.random(len(dist)) ** 6
            q = Query(dist, values, 0.0, 1.0)
            p = min(max(_brute_mean(dist, values), 0.0), 1.0)
            v = oracle.query(q)
            bad |= abs(v - p) > vstat_tolerance(p, n)
        failed_runs += bad
        bits_ok &= oracle.ledger.bits_consumed == r * m * q_total
    rate = failed_runs / runs
    cap_ok = r * m <= 64 * n * math.log(2 * q_total / delta)
    return CriterionResult(
        7, "COMM simulation of VSTAT", rate <= 0.15 and bits_ok and cap_ok,
        f"violating runs {failed_runs}/{runs} ({rate:.3f} <= 0.15); r={r}, m={m}, "
        f"bits/run {r * m * q_total} exact={bits_ok}; r*m <= 64 n ln(2q/delta): {cap_ok}",
    )


def heavy_tail_config(R: float = 1e4, n: int = 10_000, zeta: float = 0.1) -> dict:
    return {
        "distribution": {"kind": "point-mass", "value": R / 2},
        "query": {"kind": "identity", "declared": [0.0, R]},
        "estimator": {"name": "signed_mean", "n": n, "zeta": zeta, "B": R / 2},
        "oracle": {"model": "vstat", "policy": "adversarial-up"},
        "trials": 1,
        "seed": 0,
    }


def check_heavy_tail(R: float = 1e4, n: int = 10_000, zeta: float = 0.1) -> CriterionResult:
    from sqmean.harness.experiment import ExperimentConfig, compare_naive

    out = compare_naive(ExperimentConfig.from_dict(heavy_tail_config(R, n, zeta)))
    ok = out["naive_error"] >= R / (2 * n) and out["estimator_error"] <= zeta and out["ratio"] >= 500
    return CriterionResult(
        8, "heavy-tail comparison", ok,
        f"naive error {out['naive_error']:.4g} (>= {R / (2 * n):g}), signed_mean error "
        f"{out['estimator_error']:.4g} (<= {zeta}), ratio {out['ratio']:.4g} (>= 500)",
    )


def determinism_config() -> dict:
    return {
        "distribution": {"kind": "discretized-lognormal", "mu": 0.0, "sigma": 1.0, "step": 0.05, "cap": 60},
        "estimator": {"name": "signed_mean", "n": 256, "zeta": 0.01},
        "oracle": {"model": "vstat"},
        "trials": 3,
        "seed": 12345,
        "sweep": {"policy": list(POLICIES), "n": [64, 256]},
    }


def check_determinism() -> CriterionResult:
    import json

    from sqmean.harness.cli import main

    outputs = []
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        config = tmp / "sweep.json"
        config.write_text(json.dumps(determinism_config()))
        for fmt in ("csv", "json"):
            for run in range(2):
                out = tmp / f"run{run}.{fmt}"
                code = main(["sweep", "--config", str(config), "--out", str(out), "--format", fmt])
                if code != 0:
                    return CriterionResult(9, "determinism", False, f"sweep exited with {code}")
                outputs.append(out.read_bytes())
    same = outputs[0] == outputs[1] and outputs[2] == outputs[3]
    return CriterionResult(9, "determinism", same, f"csv identical={outputs[0] == outputs[1]}, "
                           f"json identical={outputs[2] == outputs[3]}")


CRITERIA = (
    check_quantile_contract,
    check_dyadic_bound,
    check_known_bound,
    check_signed_mean,
    check_median_shift,
    check_vector_mean,
    check_comm_simulation,
    check_heavy_tail,
    check_determinism,
)


def run_all(echo=print) -> list[CriterionResult]:
    results = []
    for check in CRITERIA:
        result = check()
        echo(result.line())
        results.append(result)
    return results
