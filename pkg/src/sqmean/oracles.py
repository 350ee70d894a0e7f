"""Simulated access models: STAT, VSTAT, the 1-bit COMM oracle, and VSTAT over COMM.

Randomness everywhere comes from ``numpy.random.Generator`` with the PCG64
bit generator, seeded by a 64-bit unsigned integer, so answer sequences are
reproducible across runs and machines.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sqmean.core import FiniteDistribution, Query, _check_bound

HONEST = "honest-exact"
UP = "adversarial-up"
DOWN = "adversarial-down"
RANDOM_SIGN = "adversarial-seeded-random-sign"
POLICIES = (HONEST, UP, DOWN, RANDOM_SIGN)
ADVERSARIAL_POLICIES = (UP, DOWN, RANDOM_SIGN)

_ALIASES = {
    "honest": HONEST,
    "exact": HONEST,
    "up": UP,
    "down": DOWN,
    "random": RANDOM_SIGN,
    "random-sign": RANDOM_SIGN,
    "adversarial-random": RANDOM_SIGN,
}

# Calibrated by scripts/calibrate_comm.py, then frozen.
COMM_BITS_PER_GROUP = 8  # group size is this multiple of n
COMM_GROUP_FACTOR = 3  # group count is this multiple of ln(2 q_total / delta)

_CHUNK = 1 << 20


class OracleContractError(ValueError):
    """A query violated the oracle's input contract (e.g. values outside [0, 1])."""


def resolve_policy(policy: str) -> str:
    name = _ALIASES.get(policy, policy)
    if name not in POLICIES:
        raise ValueError(f"unknown oracle policy {policy!r}; expected one of {POLICIES}")
    return name


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


@dataclass
class BudgetLedger:
    queries_asked: int = 0
    bits_consumed: int = 0
    samples_drawn: int = 0

    def snapshot(self) -> tuple[int, int, int]:
        return self.queries_asked, self.bits_consumed, self.samples_drawn


def vstat_tolerance(p: float, n: float) -> float:
    """Allowed VSTAT(n) error at true value ``p``: ``max(1/n, sqrt(p(1-p)/n))``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    if not n >= 1:
        raise ValueError(f"n must be at least 1, got {n!r}")
    return max(1.0 / n, math.sqrt(p * (1.0 - p) / n))


def _unit_values(q: Query) -> np.ndarray:
    v = q.values
    if v.min() < 0.0 or v.max() > 1.0:
        raise OracleContractError(
            f"statistical queries must take values in [0, 1]; got [{v.min()}, {v.max()}] (scale first)"
        )
    return v


class _ToleranceOracle:
    """Shared answering logic for STAT and VSTAT.

    Every answer lies within ``self.tolerance(p)`` of the exact expectation
    ``p``; adversarial policies push to the edge of that window and the
    result is clamped to [0, 1].
    """

    def __init__(self, dist: FiniteDistribution, policy: str = HONEST, seed=0, record: bool = False):
        self.dist = dist
        self.policy = resolve_policy(policy)
        self.rng = make_rng(seed)
        self.ledger = BudgetLedger()
        self.record = record
        self.history: list[np.ndarray] = []

    def tolerance(self, p: float) -> float:
        raise NotImplementedError

    def expectation(self, q: Query) -> float:
        _check_bound(self.dist, q)
        v = _unit_values(q)
        return min(max(math.fsum(self.dist.weights * v), 0.0), 1.0)

    def query(self, q: Query) -> float:
        p = self.expectation(q)
        self.ledger.queries_asked += 1
        if self.record:
            self.history.append(q.values.copy())
        if self.policy == HONEST:
            return p
        tol = self.tolerance(p)
        if self.policy == UP:
            sign = 1.0
        elif self.policy == DOWN:
            sign = -1.0
        else:
            sign = 1.0 if self.rng.integers(2) else -1.0
        return min(max(p + sign * tol, 0.0), 1.0)

    __call__ = query


class VstatOracle(_ToleranceOracle):
    """VSTAT(n): answers within ``max(1/n, sqrt(p(1-p)/n))`` of the true mean ``p``."""

    def __init__(self, dist, n: int, policy: str = HONEST, seed=0, record: bool = False):
        if not n >= 1:
            raise ValueError(f"VSTAT parameter must be at least 1, got {n!r}")
        super().__init__(dist, policy, seed, record)
        self.n = n

    def tolerance(self, p: float) -> float:
        return vstat_tolerance(p, self.n)

    def __repr__(self):
        return f"VstatOracle(n={self.n}, policy={self.policy!r})"


class StatOracle(_ToleranceOracle):
    """STAT(tau): answers within ``tau`` of the true mean."""

    def __init__(self, dist, tau: float, policy: str = HONEST, seed=0, record: bool = False):
        if not 0.0 < tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {tau!r}")
        super().__init__(dist, policy, seed, record)
        self.tau = tau

    @property
    def n(self) -> int:
        # STAT(tau) is at least as accurate as VSTAT(floor(1/tau)).
        return math.floor(1.0 / self.tau)

    def tolerance(self, p: float) -> float:
        return self.tau

    def __repr__(self):
        return f"StatOracle(tau={self.tau}, policy={self.policy!r})"


def stat_query(oracle: StatOracle, q: Query) -> float:
    return oracle.query(q)


def vstat_query(oracle: VstatOracle, q: Query) -> float:
    return oracle.query(q)


class CommOracle:
    """1-bit sampling oracle: each call draws one fresh sample and reveals one bit of it."""

    def __init__(self, dist: FiniteDistribution, seed=0):
        self.dist = dist
        self.rng = make_rng(seed)
        self.ledger = BudgetLedger()
        cdf = np.cumsum(dist.weights)
        cdf[-1] = 1.0
        self._cdf = cdf

    def _draw(self, count: int) -> np.ndarray:
        idx = np.searchsorted(self._cdf, self.rng.random(count), side="right")
        self.ledger.samples_drawn += count
        self.ledger.bits_consumed += count
        return np.minimum(idx, len(self.dist) - 1)

    def query(self, h: Query) -> int:
        _check_bound(self.dist, h)
        values = h.values
        if not np.all((values == 0.0) | (values == 1.0)):
            raise ValueError("COMM queries must be Boolean-valued")
        self.ledger.queries_asked += 1
        return int(values[self._draw(1)[0]])

    __call__ = query

    def rounding_bits(self, q: Query, count: int) -> int:
        """Number of ones among ``count`` randomized-rounding bits for ``q``.

        Each bit is one COMM query with the Boolean function
        ``x -> 1{theta < q(x)}`` for a fresh ``theta`` uniform on [0, 1),
        so its expectation is exactly ``D[q]``.
        """
        _check_bound(self.dist, q)
        values = _unit_values(q)
        ones = 0
        remaining = count
        while remaining:
            k = min(remaining, _CHUNK)
            theta = self.rng.random(k)
            idx = self._draw(k)
            ones += int(np.count_nonzero(theta < values[idx]))
            remaining -= k
        self.ledger.queries_asked += count
        return ones

    def __repr__(self):
        return f"CommOracle({self.dist!r})"


def comm_query(oracle: CommOracle, h: Query) -> int:
    return oracle.query(h)


def randomized_rounding_bit(oracle: CommOracle, q: Query) -> int:
    """One unbiased bit for ``D[q]`` from a single COMM query."""
    return oracle.rounding_bits(q, 1)


def comm_schedule(n: int, q_total: int, delta: float) -> tuple[int, int]:
    """Group count ``r`` and group size ``m`` used to answer one VSTAT(n) query."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    if q_total < 1 or n < 1:
        raise ValueError("n and q_total must be positive")
    r = math.ceil(COMM_GROUP_FACTOR * math.log(2.0 * q_total / delta))
    m = math.ceil(COMM_BITS_PER_GROUP * n)
    return r, m


def vstat_via_comm(comm: CommOracle, q: Query, n: int, q_total: int, delta: float) -> float:
    """Answer a VSTAT(n) query using only 1-bit samples.

    Median of ``r`` group means, each over ``m`` randomized-rounding bits. The
    answer meets the VSTAT(n) tolerance with probability at least
    ``1 - delta / q_total``.
    """
    r, m = comm_schedule(n, q_total, delta)
    means = np.array([comm.rounding_bits(q, m) / m for _ in range(r)])
    return float(np.median(means))


class CommVstatOracle:
    """VSTAT(n) interface backed by a :class:`CommOracle`.

    Drop-in replacement for :class:`VstatOracle` in every estimator; the
    ledger counts VSTAT-level queries and the bits they consumed.
    """

    policy = "comm-sim"

    def __init__(self, comm: CommOracle, n: int, q_total: int, delta: float, record: bool = False):
        comm_schedule(n, q_total, delta)
        self.comm = comm
        self.dist = comm.dist
        self.n = n
        self.q_total = q_total
        self.delta = delta
        self.ledger = BudgetLedger()
        self.record = record
        self.history: list[np.ndarray] = []

    def tolerance(self, p: float) -> float:
        return vstat_tolerance(p, self.n)

    def query(self, q: Query) -> float:
        before = self.comm.ledger.bits_consumed
        answer = vstat_via_comm(self.comm, q, self.n, self.q_total, self.delta)
        used = self.comm.ledger.bits_consumed - before
        self.ledger.queries_asked += 1
        self.ledger.bits_consumed += used
        self.ledger.samples_drawn += used
        if self.record:
            self.history.append(q.values.copy())
        return answer

    __call__ = query

    def __repr__(self):
        return f"CommVstatOracle(n={self.n}, q_total={self.q_total}, delta={self.delta})"


MODELS = ("vstat", "stat", "comm-sim")


def oracle_factory(model: str = "vstat", policy: str = HONEST, seed=0, q_total: int = 100,
                   delta: float = 0.1, record: bool = False):
    """Callable ``(dist, n) -> oracle`` used by estimators that pick their own parameter.

    Each oracle built gets its own child stream of ``SeedSequence(seed)``,
    so results depend only on ``seed`` and the order of construction. The
    ``stat`` model answers VSTAT(n) requests with STAT(1/n), which is at
    least as accurate. ``created`` lists every oracle built so far.
    """
    if model not in MODELS:
        raise ValueError(f"unknown oracle model {model!r}; expected one of {MODELS}")
    policy = resolve_policy(policy)
    root = np.random.SeedSequence(seed)

    def make(dist, n):
        child = np.random.Generator(np.random.PCG64(root.spawn(1)[0]))
        if model == "vstat":
            oracle = VstatOracle(dist, n, policy, seed=child, record=record)
        elif model == "stat":
            oracle = StatOracle(dist, 1.0 / n, policy, seed=child, record=record)
        else:
            oracle = CommVstatOracle(CommOracle(dist, seed=child), n, q_total, delta, record=record)
        make.created.append(oracle)
        return oracle

    make.created = []
    return make
