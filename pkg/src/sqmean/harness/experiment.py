"""Declarative experiments: config parsing, sweeps, naive-vs-robust comparison, CSV/JSON output."""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from sqmean import estimators as est
from sqmean.core import Query, exact_moments
from sqmean.harness.generators import generate_coordinates, generate_distribution
from sqmean.oracles import MODELS, UP, comm_schedule, oracle_factory, resolve_policy

ESTIMATORS = (
    "naive_mean",
    "dyadic_mean",
    "known_bound_mean",
    "nonneg_mean",
    "signed_mean",
    "relative_accuracy_mean",
    "vector_mean",
)
SWEEP_KEYS = ("policy", "n", "eps", "zeta")
CSV_FIELDS = (
    "trial",
    "estimator",
    "policy",
    "n",
    "realized_error",
    "theoretical_bound",
    "queries",
    "bits",
    "wall_time_ms",
)


class ConfigError(ValueError):
    """The experiment config is malformed or violates an estimator precondition."""


@dataclass
class ExperimentConfig:
    distribution: dict
    estimator: dict
    query: dict = field(default_factory=lambda: {"kind": "identity"})
    oracle: dict = field(default_factory=lambda: {"model": "vstat", "policy": "honest-exact"})
    trials: int = 1
    seed: int = 0
    sweep: dict = field(default_factory=dict)
    record_timing: bool = False

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            config = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        config.trials = int(config.trials)
        config.seed = int(config.seed)
        if config.trials < 1:
            raise ConfigError("trials must be positive")
        if not 0 <= config.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        return config

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ResultRow:
    trial: int
    estimator: str
    policy: str
    n: int
    realized_error: float
    theoretical_bound: float
    queries: int
    bits: int
    wall_time_ms: float


def trial_seed(base_seed: int, *indices: int) -> int:
    """Per-trial seed: first 64-bit word of ``SeedSequence(base_seed, spawn_key=indices)``."""
    seq = np.random.SeedSequence(base_seed, spawn_key=tuple(int(i) for i in indices))
    return int(seq.generate_state(1, np.uint64)[0])


def build_query(dist, spec: dict) -> Query:
    kind = spec.get("kind", "identity")
    x = dist.support
    if kind == "identity":
        values = x
    elif kind == "affine":
        values = float(spec.get("scale", 1.0)) * x + float(spec.get("shift", 0.0))
    elif kind == "absolute":
        values = np.abs(x)
    elif kind == "file":
        values = np.loadtxt(spec["path"], comments="#", ndmin=1, dtype=float)
    else:
        raise ConfigError(f"unknown query kind {kind!r}")
    declared = spec.get("declared")
    lo, hi = (None, None) if declared is None else (float(declared[0]), float(declared[1]))
    try:
        return Query(dist, values, lo, hi)
    except ValueError as exc:
        raise ConfigError(f"bad query: {exc}") from exc


def _resolve_B(params: dict, q: Query | None, dists=None) -> float:
    if params.get("B") is not None:
        return float(params["B"])
    slack = float(params.get("B_slack", 1.5))
    if dists is not None:
        second = math.fsum(exact_moments(d, Query.identity(d)).second_moment for d in dists)
    else:
        second = exact_moments(q.dist, q).second_moment
    return slack * math.sqrt(second) if second > 0 else slack


class _Plan:
    """One fully-resolved (estimator, oracle, parameter) combination."""

    def __init__(self, config: ExperimentConfig, overrides: dict):
        est_spec = dict(config.estimator)
        oracle_spec = dict(config.oracle)
        self.name = est_spec.pop("name", None)
        if self.name not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {self.name!r}; expected one of {ESTIMATORS}")
        est_spec.pop("naive_n", None)
        self.params = {**est_spec, **{k: v for k, v in overrides.items() if k != "policy"}}
        self.model = oracle_spec.get("model", "vstat")
        if self.model not in MODELS:
            raise ConfigError(f"unknown oracle model {self.model!r}; expected one of {MODELS}")
        try:
            self.policy = resolve_policy(overrides.get("policy", oracle_spec.get("policy", "honest-exact")))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        self.q_total = int(oracle_spec.get("q_total", 100))
        self.delta = float(oracle_spec.get("delta", 0.1))
        if self.model == "comm-sim":
            self.policy = "comm-sim"
        try:
            if self.name == "vector_mean":
                self.dists = generate_coordinates(config.distribution)
                self.query = None
            else:
                self.dists = None
                self.query = build_query(generate_distribution(config.distribution), config.query)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad distribution/query: {exc}") from exc
        self._validate()

    def _param(self, key, cast=float):
        if key not in self.params:
            raise ConfigError(f"{self.name} needs parameter {key!r}")
        return cast(self.params[key])

    def _validate(self) -> None:
        """Check every estimator precondition without touching an oracle."""
        p = self.params
        try:
            if self.model == "comm-sim":
                comm_schedule(1, self.q_total, self.delta)
            if self.name in ("naive_mean", "dyadic_mean"):
                n = self._param("n", int)
                if n < (2 if self.name == "dyadic_mean" else 1):
                    raise ConfigError("n too small")
                if self.name == "naive_mean" and not math.isfinite(self.query.declared_range):
                    raise ConfigError("naive_mean needs a finite declared range")
                if self.name == "dyadic_mean" and self.query.values.min() < 0:
                    raise ConfigError("dyadic_mean needs a nonnegative query")
                if self.model == "stat" and n < 2:
                    raise ConfigError("stat model needs n >= 2")
                return
            if self.name == "vector_mean":
                self.B = _resolve_B(p, None, self.dists)
                eps = self._param("eps")
                if not (0 < eps < 1 and self.B > eps):
                    raise ConfigError("vector_mean needs 0 < eps < 1 and B > eps")
                var = math.fsum(exact_moments(d, Query.identity(d)).variance for d in self.dists)
                if var > 1 + 1e-9:
                    raise ConfigError(f"vector_mean needs total variance <= 1, got {var:.6g}")
                return
            self.B = _resolve_B(p, self.query)
            s = math.sqrt(exact_moments(self.query.dist, self.query).second_moment)
            if s > self.B * (1 + 1e-9):
                raise ConfigError(f"second moment bound violated: {s:.6g} > B = {self.B:.6g}")
            if self.name == "known_bound_mean":
                est.known_bound_parameters(self.B, self._param("eps"))
            elif self.name in ("nonneg_mean", "signed_mean"):
                if self._param("n", int) < 32 or not self._param("zeta") > 0:
                    raise ConfigError(f"{self.name} needs n >= 32 and zeta > 0")
            elif self.name == "relative_accuracy_mean":
                est.relative_accuracy_parameter(self._param("eps"))
                if not self.B > self._param("zeta") > 0:
                    raise ConfigError("relative_accuracy_mean needs B > zeta > 0")
            if self.name in ("known_bound_mean", "nonneg_mean") and self.query.values.min() < 0:
                raise ConfigError(f"{self.name} needs a nonnegative query")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def run(self, seed: int):
        policy = "honest-exact" if self.model == "comm-sim" else self.policy
        factory = oracle_factory(self.model, policy, seed, self.q_total, self.delta)
        p = self.params
        if self.name == "naive_mean":
            return est.naive_mean(factory(self.query.dist, int(p["n"])), self.query)
        if self.name == "dyadic_mean":
            return est.dyadic_mean(factory(self.query.dist, int(p["n"])), self.query)
        if self.name == "known_bound_mean":
            return est.known_bound_mean(factory, self.query, self.B, float(p["eps"]))
        if self.name == "nonneg_mean":
            return est.nonneg_mean(factory, self.query, int(p["n"]), float(p["zeta"]), self.B)
        if self.name == "signed_mean":
            return est.signed_mean(factory, self.query, int(p["n"]), float(p["zeta"]), self.B)
        if self.name == "relative_accuracy_mean":
            return est.relative_accuracy_mean(factory, self.query, float(p["eps"]), float(p["zeta"]), self.B)
        return est.vector_mean(factory, self.dists, float(p["eps"]), self.B)


def _sweep_grid(config: ExperimentConfig) -> list[dict]:
    unknown = set(config.sweep) - set(SWEEP_KEYS)
    if unknown:
        raise ConfigError(f"cannot sweep over {sorted(unknown)}; allowed: {SWEEP_KEYS}")
    keys = [k for k in SWEEP_KEYS if k in config.sweep]
    axes = [list(config.sweep[k]) for k in keys]
    return [dict(zip(keys, combo)) for combo in itertools.product(*axes)]


def plan_experiment(config: ExperimentConfig) -> list[_Plan]:
    """Resolve and validate every sweep point; raises :class:`ConfigError` before any oracle runs."""
    return [_Plan(config, overrides) for overrides in _sweep_grid(config)]


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    plans = plan_experiment(config)
    rows = []
    for combo, plan in enumerate(plans):
        for trial in range(config.trials):
            start = time.perf_counter()
            report = plan.run(trial_seed(config.seed, combo, trial))
            elapsed = (time.perf_counter() - start) * 1e3 if config.record_timing else 0.0
            rows.append(
                ResultRow(
                    trial=trial,
                    estimator=plan.name,
                    policy=plan.policy,
                    n=report.oracle_parameter,
                    realized_error=report.realized_error,
                    theoretical_bound=report.theoretical_bound,
                    queries=report.queries_used,
                    bits=report.bits_used,
                    wall_time_ms=elapsed,
                )
            )
    return rows


def compare_naive(config: ExperimentConfig) -> dict:
    """Run ``naive_mean`` and the configured estimator on identical instances.

    The ratio is naive error over robust error, summed over trials; ``nan``
    (undefined) when the naive error is zero and ``inf`` when only the
    robust estimator is exact.
    Defaults to the adversarial-up policy when the config names none.
    """
    data = config.to_dict()
    data["oracle"] = {"policy": UP, **data["oracle"]}
    data["sweep"] = {}
    robust = ExperimentConfig.from_dict(data)
    if robust.estimator.get("name") == "naive_mean":
        raise ConfigError("compare needs a range-independent estimator, not naive_mean")
    naive_n = robust.estimator.get("naive_n", robust.estimator.get("n"))
    if naive_n is None:
        raise ConfigError("compare needs 'n' (or 'naive_n') in the estimator section")
    naive = ExperimentConfig.from_dict({**data, "estimator": {"name": "naive_mean", "n": naive_n}})
    naive_rows = run_experiment(naive)
    robust_rows = run_experiment(robust)
    naive_err = math.fsum(r.realized_error for r in naive_rows)
    robust_err = math.fsum(r.realized_error for r in robust_rows)
    if naive_err == 0:
        ratio = math.nan
    elif robust_err == 0:
        ratio = math.inf
    else:
        ratio = naive_err / robust_err
    return {
        "policy": naive_rows[0].policy,
        "naive_error": naive_err / len(naive_rows),
        "estimator_error": robust_err / len(robust_rows),
        "ratio": ratio,
        "rows": naive_rows + robust_rows,
    }


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def rows_to_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for row in rows:
        writer.writerow([_fmt(getattr(row, name)) for name in CSV_FIELDS])
    return buf.getvalue()


def rows_to_json(rows: list[ResultRow]) -> str:
    return json.dumps([{name: getattr(r, name) for name in CSV_FIELDS} for r in rows], indent=1) + "\n"


def rows_from_json(text: str) -> list[ResultRow]:
    return [ResultRow(**item) for item in json.loads(text)]


def rows_from_csv(text: str) -> list[ResultRow]:
    casts = {"trial": int, "n": int, "queries": int, "bits": int, "estimator": str, "policy": str}
    reader = csv.DictReader(io.StringIO(text))
    return [ResultRow(**{k: casts.get(k, float)(v) for k, v in rec.items()}) for rec in reader]


def emit_results(rows: list[ResultRow], fmt: str, path) -> Path:
    if not rows:
        raise ValueError("no rows to write")
    if fmt == "csv":
        text = rows_to_csv(rows)
    elif fmt == "json":
        text = rows_to_json(rows)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected csv or json")
    path = Path(path)
    path.write_text(text)
    return path
