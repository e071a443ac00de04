"""Self-contained checks of the two probabilistic ingredients.

Order-2 sign chaos: for xi = sum_{i<j} x_ij eta_i eta_j with iid signs,
both moments E xi^2 and E xi^4 are computed two independent ways: exact
enumeration over all 2^p sign vectors, and a combinatorial closed form.
The universal sharp cap on E xi^4 / (E xi^2)^2 is 15 (approached by
all-ones coefficients); the verify path flags instances whose ratio
exceeds 9, the envelope the tail-decoupling constant is built on.
Matrix Chernoff: for a sum of independent PSD summands with norm cap B
and mean-sum norm mu_max, P(||S|| >= r) <= d (e mu_max / r)^(r/B) for
r >= e mu_max, checked against seeded empirical tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._seeds import derive_seed, generator
from .matrix_core import spectral_norm
from .montecarlo import TailEstimate, Verdict, collect_samples, tail_estimates

__all__ = [
    "ENUMERATION_MAX_SIZE",
    "ChaosInstance",
    "ChaosMoments",
    "ChernoffDomainError",
    "ChernoffEmpiricalResult",
    "ChernoffInstance",
    "SummandInvariantError",
    "chaos_moments_exact",
    "chaos_moments_formula",
    "chernoff_bound",
    "chernoff_empirical",
    "diagonal_bernoulli_instance",
    "random_chaos_instance",
    "read_chaos_csv",
]

# 2^p sign vectors are enumerated exactly; beyond this the walk is
# refused rather than silently subsampled.
ENUMERATION_MAX_SIZE = 22

_ENUM_CHUNK = 1 << 16


class ChernoffDomainError(ValueError):
    """Requested tail level below the bound's validity threshold e * mu_max."""


class SummandInvariantError(ValueError):
    """A sampled summand broke the instance contract (PSD, norm cap)."""

    def __init__(self, index: int, reason: str):
        super().__init__(f"summand {index}: {reason}")
        self.index = index
        self.reason = reason


@dataclass(frozen=True)
class ChaosInstance:
    """Coefficients of an order-2 sign chaos.

    ``coeffs`` is a size x size array with the strictly upper triangle
    holding x_ij (0-based, i < j) and exact zeros elsewhere.
    """

    size: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        A = np.asarray(self.coeffs, dtype=np.float64)
        if A.shape != (self.size, self.size):
            raise ValueError(f"coeffs must be {self.size} x {self.size}, got {A.shape}")
        if not np.isfinite(A).all():
            raise ValueError("coefficients must be finite")
        if np.any(np.tril(A) != 0.0):
            raise ValueError("only strictly upper-triangular coefficients may be nonzero")
        A = A.copy()
        A.flags.writeable = False
        object.__setattr__(self, "coeffs", A)
        if self.size < 2:
            raise ValueError(f"need size >= 2, got {self.size}")

    @classmethod
    def from_triples(cls, size: int, triples) -> "ChaosInstance":
        A = np.zeros((size, size))
        for i, j, x in triples:
            i, j = int(i), int(j)
            if not 0 <= i < j < size:
                raise ValueError(f"triple ({i}, {j}) must satisfy 0 <= i < j < {size}")
            A[i, j] = float(x)
        return cls(size=size, coeffs=A)


@dataclass(frozen=True)
class ChaosMoments:
    """Second and fourth moments of a chaos, plus the ratio m4 / m2^2."""

    m2: float
    m4: float

    @property
    def ratio(self) -> float:
        return self.m4 / (self.m2 * self.m2) if self.m2 > 0 else 0.0


def chaos_moments_exact(inst: ChaosInstance) -> ChaosMoments:
    """Moments by exact enumeration of all 2^p sign vectors.

    Chunked so memory stays flat; per-chunk sums and the cross-chunk
    reduction both use compensated summation, so the result is the
    correctly rounded average up to one final rounding.
    """
    p = inst.size
    if p > ENUMERATION_MAX_SIZE:
        raise ValueError(
            f"enumeration over 2^{p} sign vectors exceeds the cap 2^{ENUMERATION_MAX_SIZE}"
        )
    U = inst.coeffs
    total = 1 << p
    bits = np.arange(p, dtype=np.uint64)
    sq_parts: list[float] = []
    q4_parts: list[float] = []
    for start in range(0, total, _ENUM_CHUNK):
        idx = np.arange(start, min(start + _ENUM_CHUNK, total), dtype=np.uint64)
        signs = (((idx[:, None] >> bits[None, :]) & 1) * 2.0 - 1.0)
        xi = ((signs @ U) * signs).sum(axis=1)
        xi2 = xi * xi
        sq_parts.append(math.fsum(xi2))
        q4_parts.append(math.fsum(xi2 * xi2))
    return ChaosMoments(m2=math.fsum(sq_parts) / total, m4=math.fsum(q4_parts) / total)


def chaos_moments_formula(inst: ChaosInstance) -> ChaosMoments:
    """Moments in closed form.

    m2 is the sum of squared coefficients.  Expanding xi^4, any sign
    variable with odd multiplicity kills the expectation, so only two
    families survive: index pairs taken twice (3 m2^2 - 2 sum x^4) and
    quadruples of distinct pairs forming a closed 4-cycle on distinct
    vertices, each contributing 4! times its coefficient product.  Every
    vertex quadruple a < b < c < d carries three such cycles, one per
    way of splitting it into two matchings (ab|cd, ac|bd, ad|bc), not
    just the "straight rectangle" ac,ad,bc,bd whose rows all precede its
    columns.  The cycle sum is taken off closed 4-walk counts of the
    symmetrized coefficient matrix: walks with a repeated vertex are
    subtracted exactly, and each cycle is traversed 8 ways.
    """
    U = inst.coeffs
    sq = U * U
    m2 = float(sq.sum())
    s4 = float((sq * sq).sum())
    S = U + U.T
    S2 = S @ S
    closed4 = float((S2 * S2).sum())  # tr(S^4)
    q = np.diag(S2)  # q_a = sum_b S_ab^2
    # inclusion-exclusion over the only possible coincidences in a
    # closed 4-walk a->b->c->d->a with hollow S: a==c and/or b==d
    degenerate = 2.0 * float(q @ q) - 2.0 * s4
    cycles = (closed4 - degenerate) / 8.0
    m4 = 3.0 * m2 * m2 - 2.0 * s4 + 24.0 * cycles
    return ChaosMoments(m2=m2, m4=m4)


def random_chaos_instance(size: int, seed: int, scale: float = 1.0) -> ChaosInstance:
    """Instance with iid uniform coefficients on [-scale, scale]."""
    if size < 2:
        raise ValueError(f"need size >= 2, got {size}")
    rng = generator(seed, "chaos.instance")
    A = rng.uniform(-scale, scale, size=(size, size))
    A = np.triu(A, k=1)
    return ChaosInstance(size=size, coeffs=A)


def read_chaos_csv(path) -> ChaosInstance:
    """Read chaos coefficients as CSV triples ``i,j,x`` with 0-based i < j.

    An optional first line ``# size=<p>`` fixes the dimension; otherwise
    it is inferred as max(j) + 1.
    """
    triples: list[tuple[int, int, float]] = []
    declared = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if lineno == 1 and "size=" in line:
                    try:
                        declared = int(line.split("size=", 1)[1].split()[0])
                    except (ValueError, IndexError):
                        raise ValueError(f"line {lineno}: malformed size header {line!r}") from None
                    continue
                raise ValueError(f"line {lineno}: unexpected comment {line!r}")
            fields = line.split(",")
            if len(fields) != 3:
                raise ValueError(f"line {lineno}: expected 'i,j,x', got {line!r}")
            try:
                i, j, x = int(fields[0]), int(fields[1]), float(fields[2])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
            if not 0 <= i < j:
                raise ValueError(f"line {lineno}: triple needs 0 <= i < j, got ({i}, {j})")
            if declared is not None and j >= declared:
                raise ValueError(
                    f"line {lineno}: index {j} out of range for declared size {declared}"
                )
            triples.append((i, j, x))
    if not triples:
        raise ValueError("no coefficient triples found")
    size = declared if declared is not None else max(j for _, j, _ in triples) + 1
    # from_triples re-validates against the final size; any error left
    # at this point is an out-of-range index under a declared header
    return ChaosInstance.from_triples(size, triples)


@dataclass(frozen=True)
class ChernoffInstance:
    """A sum of independent PSD summands with known caps.

    ``sampler(rng)`` returns one draw of all summands as an array of
    shape (summand_count, dim, dim).  ``norm_cap`` bounds every summand
    norm almost surely and ``mean_norm_cap`` bounds the norm of the
    expected sum.
    """

    dim: int
    summand_count: int
    norm_cap: float
    mean_norm_cap: float
    sampler: Callable[[np.random.Generator], np.ndarray] = field(repr=False)

    def __post_init__(self):
        if self.dim < 1 or self.summand_count < 1:
            raise ValueError("dim and summand_count must be positive")
        if self.norm_cap <= 0:
            raise ValueError(f"norm_cap must be positive, got {self.norm_cap!r}")
        if self.mean_norm_cap < 0:
            raise ValueError(f"mean_norm_cap must be nonnegative, got {self.mean_norm_cap!r}")


@dataclass(frozen=True)
class ChernoffEmpiricalResult:
    """Empirical tails of ||S||, the analytic bounds, and per-level verdicts."""

    estimates: tuple[TailEstimate, ...]
    bounds: tuple[float | None, ...]
    verdicts: tuple[Verdict, ...]


def chernoff_bound(dim: int, norm_cap: float, mean_norm_cap: float, r: float) -> float:
    """The tail bound d (e mu_max / r)^(r / B), valid for r >= e mu_max.

    Evaluated in log space.  Levels below the validity threshold raise
    ``ChernoffDomainError``.
    """
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    if norm_cap <= 0:
        raise ValueError(f"norm_cap must be positive, got {norm_cap!r}")
    if mean_norm_cap < 0:
        raise ValueError(f"mean_norm_cap must be nonnegative, got {mean_norm_cap!r}")
    if r < math.e * mean_norm_cap:
        raise ChernoffDomainError(
            f"r = {r!r} is below the domain threshold e * mu_max = {math.e * mean_norm_cap!r}"
        )
    if r == 0.0:
        return float(dim)
    base = math.e * mean_norm_cap / r
    if base == 0.0:
        return 0.0
    if base == 1.0:
        return float(dim)
    log_bound = math.log(dim) + (r / norm_cap) * math.log(base)
    try:
        return math.exp(log_bound)
    except OverflowError:  # pragma: no cover - base <= 1/ e^... keeps this unreachable
        return math.inf


def diagonal_bernoulli_instance(dim: int, delta: float) -> ChernoffInstance:
    """dim independent summands delta_j e_j e_j^t with P(delta_j = 1) = delta.

    The expected sum is delta * I, so mean_norm_cap = delta exactly, and
    every summand norm is 0 or 1, so norm_cap = 1.
    """
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must be in [0, 1], got {delta!r}")

    def sampler(rng: np.random.Generator) -> np.ndarray:
        flags = rng.random(dim) < delta
        out = np.zeros((dim, dim, dim))
        hot = np.flatnonzero(flags)
        out[hot, hot, hot] = 1.0
        return out

    return ChernoffInstance(
        dim=dim,
        summand_count=dim,
        norm_cap=1.0,
        mean_norm_cap=delta,
        sampler=sampler,
    )


_PSD_SYM_TOL = 1e-12
_PSD_EIG_TOL = 1e-10


def _check_summands(A: np.ndarray, norm_cap: float) -> None:
    """Fast batch validation with a decisive per-summand fallback.

    Gershgorin discs certify PSD-ness and the norm cap in one vectorized
    pass; summands the discs cannot certify go through the decisive
    check (symmetry, Rayleigh probes, Cholesky with tolerance).
    """
    sym_dev = np.abs(A - A.transpose(0, 2, 1)).max(axis=(1, 2))
    diag = np.diagonal(A, axis1=1, axis2=2)
    radius = np.abs(A).sum(axis=2) - np.abs(diag)
    low = (diag - radius).min(axis=1)
    high = (diag + radius).max(axis=1)
    ok = (sym_dev < _PSD_SYM_TOL) & (low >= -_PSD_EIG_TOL) & (high <= norm_cap + 1e-9)
    for j in np.flatnonzero(~ok):
        _decisive_summand_check(A[int(j)], norm_cap, int(j))


def _decisive_summand_check(S: np.ndarray, norm_cap: float, index: int) -> None:
    d = S.shape[0]
    dev = float(np.abs(S - S.T).max())
    if dev >= _PSD_SYM_TOL:
        raise SummandInvariantError(index, f"not symmetric (deviation {dev!r})")
    scale = max(float(np.abs(S).max()), 1.0)
    probes = generator(0x9D, "psd.probe", d).standard_normal((d, 2 * d))
    quad = np.einsum("ij,ik,jk->k", S, probes, probes)
    sqn = (probes * probes).sum(axis=0)
    if float((quad / sqn).min()) < -_PSD_EIG_TOL:
        raise SummandInvariantError(index, "negative Rayleigh quotient")
    eye = np.eye(d)
    try:
        np.linalg.cholesky(S + _PSD_EIG_TOL * scale * eye)
    except np.linalg.LinAlgError:
        raise SummandInvariantError(index, "not positive semidefinite") from None
    try:
        np.linalg.cholesky((norm_cap + 1e-9 * scale) * eye - S)
    except np.linalg.LinAlgError:
        raise SummandInvariantError(index, f"norm exceeds cap {norm_cap!r}") from None


def chernoff_empirical(
    inst: ChernoffInstance,
    r_grid,
    trials: int,
    seed: int,
    gamma: float = 0.01,
    threads: int = 1,
) -> ChernoffEmpiricalResult:
    """Empirical tails of ||S|| over a level grid against the analytic bound.

    One draw of all summands per trial, scored against every level, so
    the events are nested and the tails nonincreasing.  Levels below
    e * mu_max are reported with verdict "out_of_domain" instead of a
    bound; a level fails when the upper confidence bound of its tail
    exceeds the analytic bound.
    """
    levels = [float(r) for r in r_grid]
    if not levels:
        raise ValueError("r_grid must be nonempty")

    def one_norm(trial: int) -> float:
        rng = generator(seed, "chernoff.trial", trial)
        A = np.asarray(inst.sampler(rng), dtype=np.float64)
        if A.shape != (inst.summand_count, inst.dim, inst.dim):
            raise SummandInvariantError(
                -1, f"sampler returned shape {A.shape}, expected "
                f"({inst.summand_count}, {inst.dim}, {inst.dim})"
            )
        _check_summands(A, inst.norm_cap)
        return spectral_norm(A.sum(axis=0))

    values = collect_samples(one_norm, trials, threads=threads)
    estimates = tail_estimates(values[:, 0], levels, seed=seed, gamma=gamma)
    bounds: list[float | None] = []
    verdicts: list[Verdict] = []
    threshold = math.e * inst.mean_norm_cap
    for est in estimates:
        if est.threshold < threshold:
            bounds.append(None)
            verdicts.append(
                Verdict(f"chernoff r={est.threshold!r}", "out_of_domain", est.upper, None)
            )
            continue
        b = chernoff_bound(inst.dim, inst.norm_cap, inst.mean_norm_cap, est.threshold)
        bounds.append(b)
        status = "pass" if est.upper <= b else "fail"
        verdicts.append(Verdict(f"chernoff r={est.threshold!r}", status, est.upper, b))
    return ChernoffEmpiricalResult(
        estimates=tuple(estimates), bounds=tuple(bounds), verdicts=tuple(verdicts)
    )
