"""Seeded Monte Carlo estimation of the tail inequalities.

The engine draws one scalar per trial and scores it against a whole
threshold grid, so the events at different thresholds are nested and
the estimated tails are monotone by construction.  Trial seeds derive
from (master seed, experiment tag, trial index), which makes hit counts
independent of chunking and thread count.

Verdicts are one-sided: an experiment can falsify an inequality when
the data clearly exceeds it, but never claims to confirm one.  Against
a sampled right-hand side the rule is

    fail  iff  lhs.p_hat > constant * rhs.upper + 3 se_combined

and against an analytic bound

    fail  iff  upper confidence bound > bound + 3 se + resolution floor

where the floor 1 - gamma^(1/trials) is the smallest tail the upper
confidence bound can resolve at all; without it any bound tighter than
the Monte Carlo resolution would fail spuriously at zero hits.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special

from ._seeds import derive_seed
from .certificate import CoherenceStats, coherence, decoupling_constants
from .matrix_core import ensure_matrix, extract_principal, hollow_gram, spectral_norm

__all__ = [
    "IntermediateTails",
    "TailComparison",
    "TailEstimate",
    "Verdict",
    "binomial_upper_bound",
    "collect_samples",
    "decoupling_experiment",
    "estimate_tail",
    "failure_probability_experiment",
    "intermediate_tails",
    "poissonization_experiment",
    "resolution_floor",
    "tail_estimates",
]

DEFAULT_GAMMA = 0.01


@dataclass(frozen=True)
class TailEstimate:
    """Estimated exceedance probability at one threshold.

    ``upper`` is the one-sided Clopper-Pearson bound: the smallest q
    such that Binomial(trials, q) lands at or below ``hits`` with
    probability at most ``gamma``.
    """

    threshold: float
    hits: int
    trials: int
    p_hat: float
    upper: float
    seed: int
    gamma: float

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.hits <= self.trials:
            raise ValueError(f"hits must lie in [0, {self.trials}], got {self.hits}")
        if not 0.0 <= self.p_hat <= self.upper <= 1.0:
            raise ValueError(
                f"need 0 <= p_hat <= upper <= 1, got p_hat={self.p_hat!r}, upper={self.upper!r}"
            )

    @property
    def std_error(self) -> float:
        return math.sqrt(self.p_hat * (1.0 - self.p_hat) / self.trials)


@dataclass(frozen=True)
class Verdict:
    """Outcome of one checked inequality at one threshold."""

    name: str
    status: str  # pass | fail | vacuous | out_of_domain | degenerate
    lhs: float | None
    rhs: float | None


@dataclass(frozen=True)
class TailComparison:
    """Two estimated tail curves related by a constant-factor inequality."""

    kind: str
    constant: float
    lhs: tuple[TailEstimate, ...]
    rhs: tuple[TailEstimate, ...]
    verdicts: tuple[Verdict, ...]


@dataclass(frozen=True)
class IntermediateTails:
    """Tails of the row-masked matrix against their analytic envelopes."""

    tail_rh_norm: TailEstimate
    tail_rh_col: TailEstimate
    bound_u: float | None
    bound_v: float | None
    verdicts: tuple[Verdict, ...]


def binomial_upper_bound(hits: int, trials: int, gamma: float = DEFAULT_GAMMA) -> float:
    """One-sided Clopper-Pearson upper confidence bound.

    Closed form at zero hits: 1 - gamma^(1/trials).  At full hits the
    bound is 1.  Elsewhere it is the Beta(hits+1, trials-hits) quantile
    at level 1 - gamma.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0 <= hits <= trials:
        raise ValueError(f"hits must lie in [0, {trials}], got {hits}")
    if not 0.0 < gamma < 0.5:
        raise ValueError(f"gamma must lie in (0, 0.5), got {gamma!r}")
    if hits >= trials:
        return 1.0
    return float(special.betaincinv(hits + 1, trials - hits, 1.0 - gamma))


def resolution_floor(trials: int, gamma: float = DEFAULT_GAMMA) -> float:
    """Smallest upper confidence bound reachable at this sample size."""
    return binomial_upper_bound(0, trials, gamma)


def collect_samples(
    scalar_fn: Callable[[int], float | Sequence[float]],
    trials: int,
    threads: int = 1,
    width: int = 1,
) -> np.ndarray:
    """Evaluate ``scalar_fn(trial_index)`` for every trial.

    Returns an array of shape (trials, width).  Each trial's value lands
    at its own index, so the result is identical for every thread count
    and chunking.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    values = np.empty((trials, width), dtype=np.float64)

    def run_range(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            values[i, :] = scalar_fn(i)

    if threads == 1:
        run_range(0, trials)
        return values
    chunk = max(1, math.ceil(trials / (threads * 4)))
    spans = [(lo, min(lo + chunk, trials)) for lo in range(0, trials, chunk)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(run_range, lo, hi) for lo, hi in spans]
        for f in futures:
            f.result()
    return values


def tail_estimates(
    values: np.ndarray,
    thresholds: Sequence[float],
    seed: int,
    gamma: float = DEFAULT_GAMMA,
) -> list[TailEstimate]:
    """Score one sample of scalars against an ascending threshold grid."""
    t = [float(x) for x in thresholds]
    if not t:
        raise ValueError("thresholds must be nonempty")
    if any(b < a for a, b in zip(t, t[1:])):
        raise ValueError(f"thresholds must be sorted ascending, got {t}")
    v = np.asarray(values, dtype=np.float64).ravel()
    trials = v.size
    out = []
    for thr in t:
        hits = int((v >= thr).sum())
        out.append(
            TailEstimate(
                threshold=thr,
                hits=hits,
                trials=trials,
                p_hat=hits / trials,
                upper=binomial_upper_bound(hits, trials, gamma),
                seed=seed,
                gamma=gamma,
            )
        )
    return out


def estimate_tail(
    sampler: Callable[[int], float],
    thresholds: Sequence[float],
    trials: int,
    seed: int,
    gamma: float = DEFAULT_GAMMA,
    threads: int = 1,
    tag: str = "estimate_tail",
) -> list[TailEstimate]:
    """Estimate P(sample >= threshold) over a grid from one shared sample.

    ``sampler`` receives a fresh 64-bit seed derived from (seed, tag,
    trial index) and returns one scalar.  Thresholds are inclusive.
    """
    values = collect_samples(lambda i: sampler(derive_seed(seed, tag, i)), trials, threads)
    return tail_estimates(values[:, 0], thresholds, seed=seed, gamma=gamma)


def _combined_slack(lhs: TailEstimate, rhs: TailEstimate, constant: float) -> float:
    return 3.0 * math.sqrt(lhs.std_error**2 + constant**2 * rhs.std_error**2)


def _ratio_verdict(name: str, lhs: TailEstimate, rhs: TailEstimate, constant: float) -> Verdict:
    budget = constant * rhs.upper + _combined_slack(lhs, rhs, constant)
    status = "pass" if lhs.p_hat <= budget else "fail"
    return Verdict(name=name, status=status, lhs=lhs.p_hat, rhs=budget)


def _bound_verdict(name: str, est: TailEstimate, bound: float) -> Verdict:
    if bound >= 1.0:
        return Verdict(name=name, status="vacuous", lhs=est.upper, rhs=bound)
    slack = 3.0 * est.std_error + resolution_floor(est.trials, est.gamma)
    status = "pass" if est.upper <= bound + slack else "fail"
    return Verdict(name=name, status=status, lhs=est.upper, rhs=bound + slack)


def _principal_norm(H: np.ndarray, idx: np.ndarray) -> float:
    # Empty selection: the empty submatrix has norm 0 by convention.
    if idx.size == 0:
        return 0.0
    return spectral_norm(extract_principal(H, idx))


def _rectangular_norm(H: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> float:
    if rows.size == 0 or cols.size == 0:
        return 0.0
    return spectral_norm(H[np.ix_(rows, cols)])


def failure_probability_experiment(
    X,
    s: int,
    r_grid: Sequence[float],
    trials: int,
    seed: int,
    gamma: float = DEFAULT_GAMMA,
    threads: int = 1,
) -> list[TailEstimate]:
    """Estimate P(||X_T^t X_T - I|| >= r) over the grid, T uniform of size s.

    One subset draw per trial; the submatrix norm is computed once and
    scored against every threshold.
    """
    A = ensure_matrix(X, "X")
    H = hollow_gram(A)
    p = A.shape[1]
    if not 0 <= s <= p:
        raise ValueError(f"need 0 <= s <= p, got s={s}, p={p}")

    # Local import: ensembles depends on matrix_core only, no cycle.
    from .ensembles import sample_uniform_subset

    def one_norm(trial: int) -> float:
        sel = sample_uniform_subset(p, s, derive_seed(seed, "failure.subset", trial))
        return _principal_norm(H, sel.indices)

    values = collect_samples(one_norm, trials, threads)
    return tail_estimates(values[:, 0], r_grid, seed=seed, gamma=gamma)


def decoupling_experiment(
    X,
    delta: float,
    r_grid: Sequence[float],
    trials: int,
    seed: int,
    gamma: float = DEFAULT_GAMMA,
    threads: int = 1,
    factor: float | None = None,
    threshold_divisor: float | None = None,
) -> TailComparison:
    """Check P(||R H R|| >= r) <= factor * P(||R H R'|| >= r / divisor).

    Left side: one Bernoulli(delta) selector per trial masking rows and
    columns alike.  Right side: two independent selectors, independent
    trial streams.  Defaults to the sharp constants (36, 2).
    """
    constants = decoupling_constants()["new"]
    factor = constants.factor if factor is None else factor
    divisor = constants.threshold_divisor if threshold_divisor is None else threshold_divisor
    A = ensure_matrix(X, "X")
    H = hollow_gram(A)
    p = A.shape[1]

    from .ensembles import sample_bernoulli

    def lhs_norm(trial: int) -> float:
        sel = sample_bernoulli(p, delta, derive_seed(seed, "decoupling.lhs", trial))
        return _principal_norm(H, sel.indices)

    def rhs_norm(trial: int) -> float:
        left = sample_bernoulli(p, delta, derive_seed(seed, "decoupling.rhs.left", trial))
        right = sample_bernoulli(p, delta, derive_seed(seed, "decoupling.rhs.right", trial))
        return _rectangular_norm(H, left.indices, right.indices)

    lhs_values = collect_samples(lhs_norm, trials, threads)
    rhs_values = collect_samples(rhs_norm, trials, threads)
    lhs = tail_estimates(lhs_values[:, 0], r_grid, seed=seed, gamma=gamma)
    rhs = tail_estimates(rhs_values[:, 0], [r / divisor for r in r_grid], seed=seed, gamma=gamma)
    verdicts = tuple(
        _ratio_verdict(f"decoupling r={le.threshold!r}", le, re, factor)
        for le, re in zip(lhs, rhs)
    )
    return TailComparison(
        kind="decoupling", constant=factor, lhs=tuple(lhs), rhs=tuple(rhs), verdicts=verdicts
    )


def poissonization_experiment(
    X,
    s: int,
    r_grid: Sequence[float],
    trials: int,
    seed: int,
    gamma: float = DEFAULT_GAMMA,
    threads: int = 1,
) -> TailComparison:
    """Check P(||R_s H R_s|| >= r) <= 2 P(||R H R|| >= r) with delta = s/p.

    Left side: uniform subsets of exact size s.  Right side: Bernoulli
    selectors at rate s/p on an independent stream, same thresholds.
    """
    A = ensure_matrix(X, "X")
    H = hollow_gram(A)
    p = A.shape[1]
    if not 0 <= s <= p:
        raise ValueError(f"need 0 <= s <= p, got s={s}, p={p}")
    delta = s / p

    from .ensembles import sample_bernoulli, sample_uniform_subset

    def lhs_norm(trial: int) -> float:
        sel = sample_uniform_subset(p, s, derive_seed(seed, "poisson.lhs", trial))
        return _principal_norm(H, sel.indices)

    def rhs_norm(trial: int) -> float:
        sel = sample_bernoulli(p, delta, derive_seed(seed, "poisson.rhs", trial))
        return _principal_norm(H, sel.indices)

    lhs_values = collect_samples(lhs_norm, trials, threads)
    rhs_values = collect_samples(rhs_norm, trials, threads)
    lhs = tail_estimates(lhs_values[:, 0], r_grid, seed=seed, gamma=gamma)
    rhs = tail_estimates(rhs_values[:, 0], r_grid, seed=seed, gamma=gamma)
    verdicts = tuple(
        _ratio_verdict(f"poissonization r={le.threshold!r}", le, re, 2.0)
        for le, re in zip(lhs, rhs)
    )
    return TailComparison(
        kind="poissonization", constant=2.0, lhs=tuple(lhs), rhs=tuple(rhs), verdicts=verdicts
    )


def intermediate_tails(
    X,
    delta: float,
    u: float,
    v: float,
    trials: int,
    seed: int,
    gamma: float = DEFAULT_GAMMA,
    threads: int = 1,
    stats: CoherenceStats | None = None,
) -> IntermediateTails:
    """Tails of the row-masked hollow Gram matrix against their envelopes.

    Per trial one Bernoulli(delta) selector masks rows of H; the scalar
    pair is (||R H||, ||R H||_{1->2}).  The analytic envelopes are

        P(||R H|| >= u)        <= p (e delta ||X||^4 / u^2)^(u^2 / ||X||^2)
        P(||R H||_{1->2} >= v) <= p (e delta ||X||^2 / v^2)^(v^2 / mu^2)

    each valid only while its base is below 1, with delta standing in
    for s/p.  Out-of-domain sides are reported without a verdict.
    """
    if u <= 0 or v <= 0:
        raise ValueError(f"u and v must be positive, got u={u!r}, v={v!r}")
    A = ensure_matrix(X, "X")
    H = hollow_gram(A)
    p = A.shape[1]
    st = stats if stats is not None else coherence(A)
    w = st.op_norm_sq
    mu = st.mu

    from .ensembles import sample_bernoulli

    def pair(trial: int) -> tuple[float, float]:
        sel = sample_bernoulli(p, delta, derive_seed(seed, "intermediate", trial))
        idx = sel.indices
        if idx.size == 0:
            return (0.0, 0.0)
        sub = H[idx, :]
        col = float(np.sqrt((sub * sub).sum(axis=0).max()))
        return (spectral_norm(sub), col)

    values = collect_samples(pair, trials, threads, width=2)
    est_norm = tail_estimates(values[:, 0], [u], seed=seed, gamma=gamma)[0]
    est_col = tail_estimates(values[:, 1], [v], seed=seed, gamma=gamma)[0]

    base_u = math.e * delta * w * w / (u * u)
    base_v = math.e * delta * w / (v * v)
    verdicts: list[Verdict] = []

    if base_u < 1.0 and delta > 0.0:
        bound_u = math.exp(math.log(p) + (u * u / w) * math.log(base_u)) if base_u > 0 else 0.0
        verdicts.append(_bound_verdict("operator_tail", est_norm, bound_u))
    else:
        bound_u = None
        verdicts.append(Verdict("operator_tail", "out_of_domain", est_norm.upper, None))

    if mu == 0.0:
        bound_v = None
        verdicts.append(Verdict("column_tail", "degenerate", est_col.upper, None))
    elif base_v < 1.0 and delta > 0.0:
        bound_v = math.exp(math.log(p) + (v * v / (mu * mu)) * math.log(base_v)) if base_v > 0 else 0.0
        verdicts.append(_bound_verdict("column_tail", est_col, bound_v))
    else:
        bound_v = None
        verdicts.append(Verdict("column_tail", "out_of_domain", est_col.upper, None))

    return IntermediateTails(
        tail_rh_norm=est_norm,
        tail_rh_col=est_col,
        bound_u=bound_u,
        bound_v=bound_v,
        verdicts=tuple(verdicts),
    )
