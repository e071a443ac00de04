"""Dense matrix primitives shared by every other module.

Everything here operates on plain 2-D float64 numpy arrays.  The one
nontrivial algorithm is ``spectral_norm``, a seeded power iteration on
the Gram matrix; eigensolver-based cross-checks live in the test suite,
not in this package.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._seeds import generator

__all__ = [
    "DEFAULT_MAX_ITER",
    "DEFAULT_TOL",
    "UNIT_COLUMN_TOL",
    "NormReport",
    "SpectralNormError",
    "column_norms",
    "ensure_matrix",
    "extract_principal",
    "gram",
    "hollow_gram",
    "max_abs",
    "max_col_l2",
    "normalize_columns",
    "norms",
    "read_matrix_csv",
    "spectral_norm",
    "warn_if_rank_deficient",
    "write_matrix_csv",
]

# Unit-norm columns are a hard precondition of the hollow Gram matrix;
# anything farther than this from 1 is rejected rather than normalized.
UNIT_COLUMN_TOL = 1e-10

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000

# Fixed master seed for power-iteration start vectors.  Start vectors
# depend only on the matrix dimension, never on its entries, so results
# are reproducible across runs and inputs.
_START_SEED = 0x5EED


class SpectralNormError(RuntimeError):
    """Power iteration failed to converge.

    Carries the last Rayleigh estimate of the norm, the residual
    ``||A v - lambda v||`` at the final iterate, and the number of
    iterations spent (summed over restarts).
    """

    def __init__(self, estimate: float, residual: float, iterations: int):
        super().__init__(
            f"power iteration did not converge after {iterations} iterations: "
            f"estimate={estimate!r}, residual={residual!r}"
        )
        self.estimate = estimate
        self.residual = residual
        self.iterations = iterations


def ensure_matrix(M, name: str = "matrix") -> np.ndarray:
    """Validate and return ``M`` as a 2-D float64 array with finite entries."""
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={A.ndim}")
    if A.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if not np.isfinite(A).all():
        raise ValueError(f"{name} contains non-finite entries")
    return A


_BLOCK = 3  # subspace width; resolves up to triple eigenvalue ties exactly


def _start_frame(dim: int, attempt: int) -> np.ndarray:
    rng = generator(_START_SEED, f"spectral_norm.start{attempt}", dim)
    B = rng.standard_normal((dim, min(_BLOCK, dim)))
    Q, _ = np.linalg.qr(B)
    return Q


def _top_ritz(M: np.ndarray) -> float:
    """Largest eigenvalue of a symmetric matrix of size 1, 2, or 3."""
    k = M.shape[0]
    if k == 1:
        return float(M[0, 0])
    if k == 2:
        half = 0.5 * (M[0, 0] - M[1, 1])
        return 0.5 * (M[0, 0] + M[1, 1]) + math.hypot(half, float(M[0, 1]))
    # trigonometric closed form for the symmetric 3x3 case
    q = float(np.trace(M)) / 3.0
    B = M - q * np.eye(3)
    p2 = float(np.sum(B * B)) / 6.0
    if p2 == 0.0:
        return q  # scalar multiple of the identity
    p = math.sqrt(p2)
    C = B / p
    half_det = 0.5 * float(np.linalg.det(C))
    half_det = min(1.0, max(-1.0, half_det))
    return q + 2.0 * p * math.cos(math.acos(half_det) / 3.0)


def spectral_norm(M, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Largest singular value of ``M`` by power iteration on the Gram matrix.

    Block power (subspace) iteration on ``M^t M`` (or ``M M^t``,
    whichever is smaller) with a deterministic seeded orthonormal start
    frame of width 3.  The top Rayleigh-Ritz value of the frame is the
    norm-squared estimate; a frame that spans an invariant subspace
    yields it exactly, so eigenvalues that tie (hollow Gram submatrices
    are traceless and carry +-lambda pairs, which tie after squaring)
    cost nothing, and the estimate converges at the rate of the fourth
    eigenvalue over the first.  Stops once the geometric extrapolation
    of the remaining Ritz increments puts the answer within
    ``tol * max(1, sigma)`` of the returned sigma, on two consecutive
    iterations.  One restart from a different deterministic frame is
    attempted before giving up.

    Raises
    ------
    SpectralNormError
        If neither attempt converges within ``max_iter`` iterations.
    """
    A = ensure_matrix(M)
    if float(np.abs(A).max()) == 0.0:
        return 0.0
    rows, cols = A.shape
    G = A.T @ A if cols <= rows else A @ A.T
    dim = G.shape[0]

    last_lam = 0.0
    last_residual = np.inf
    spent = 0
    for attempt in range(2):
        V = _start_frame(dim, attempt)
        theta_prev = -np.inf
        d_prev = np.inf
        stable = 0
        for _ in range(max_iter):
            spent += 1
            W = G @ V
            R = V.T @ W
            R = 0.5 * (R + R.T)
            theta = _top_ritz(R)
            capture = float(np.sqrt(np.sum((W - V @ R) ** 2)))
            if capture <= 1e-14 * max(1.0, theta):
                if theta <= 0.0:
                    break  # frame landed in the kernel; restart
                # invariant subspace: the Ritz value is exact
                return float(np.sqrt(theta))
            d = abs(theta - theta_prev)
            sigma = math.sqrt(max(theta, 0.0))
            # remaining error ~ d * rho / (1 - rho) for a geometric tail;
            # the 0.05 keeps routes that are compared to each other at
            # the documented tolerance comfortably inside it
            budget = 0.05 * tol * max(1.0, sigma) * max(sigma, 1e-6)
            if d <= 1e-15 * max(1.0, theta):
                converged = True  # at the float quantization floor
            elif math.isfinite(d_prev) and d < d_prev:
                rho = d / d_prev
                converged = d * rho / (1.0 - rho) <= budget
            else:
                converged = False
            if converged:
                stable += 1
                if stable >= 2:
                    return float(np.sqrt(max(theta, 0.0)))
            else:
                stable = 0
            d_prev = d
            theta_prev = theta
            V, _ = np.linalg.qr(W)
        if theta_prev != -np.inf:
            last_lam = max(theta_prev, 0.0)
            last_residual = capture
    raise SpectralNormError(float(np.sqrt(last_lam)), last_residual, spent)


def gram(X) -> np.ndarray:
    """Return ``X^t X``."""
    A = ensure_matrix(X, "X")
    return A.T @ A


def column_norms(M) -> np.ndarray:
    """Euclidean norm of each column."""
    A = ensure_matrix(M)
    return np.sqrt((A * A).sum(axis=0))


def normalize_columns(X) -> np.ndarray:
    """Return a copy of ``X`` with each column scaled to unit norm.

    Raises ``ValueError`` if any column is identically zero.
    """
    A = ensure_matrix(X, "X")
    nrm = column_norms(A)
    zero = np.flatnonzero(nrm == 0.0)
    if zero.size:
        raise ValueError(f"column {int(zero[0])} has zero norm and cannot be normalized")
    return A / nrm


def hollow_gram(X) -> np.ndarray:
    """Gram matrix with the identity removed: ``X^t X - I``.

    Requires unit-norm columns (within ``UNIT_COLUMN_TOL``); inputs that
    fail the check are rejected with the offending column named, use
    ``normalize_columns`` first.  The diagonal of the result is set to
    exactly zero, which the unit-norm precondition already forces up to
    the tolerance; this makes ``max_abs(hollow_gram(X))`` agree exactly
    with the mutual coherence.
    """
    A = ensure_matrix(X, "X")
    nrm = column_norms(A)
    dev = np.abs(nrm - 1.0)
    bad = np.flatnonzero(dev > UNIT_COLUMN_TOL)
    if bad.size:
        j = int(bad[0])
        raise ValueError(
            f"column {j} has norm {nrm[j]!r}, not unit within {UNIT_COLUMN_TOL:g}; "
            "normalize_columns() first"
        )
    H = A.T @ A
    np.fill_diagonal(H, 0.0)
    return H


def max_abs(M) -> float:
    """Largest absolute entry."""
    return float(np.abs(ensure_matrix(M)).max())


def max_col_l2(M) -> float:
    """Largest column Euclidean norm (the 1->2 operator norm)."""
    return float(column_norms(M).max())


@dataclass(frozen=True)
class NormReport:
    """The three norms used throughout: spectral, max column l2, max entry."""

    spectral: float
    max_col_l2: float
    max_abs: float


def norms(M, tol: float = DEFAULT_TOL) -> NormReport:
    """Compute all three norms of ``M`` in one report."""
    A = ensure_matrix(M)
    return NormReport(
        spectral=spectral_norm(A, tol=tol),
        max_col_l2=max_col_l2(A),
        max_abs=max_abs(A),
    )


def extract_principal(H, T) -> np.ndarray:
    """Principal submatrix ``H[T, T]`` of a square matrix.

    ``T`` must be strictly increasing 0-based row/column indices.
    """
    A = ensure_matrix(H, "H")
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"H must be square, got shape {A.shape}")
    idx = np.asarray(T, dtype=np.int64)
    if idx.ndim != 1 or idx.size == 0:
        raise ValueError("T must be a nonempty 1-D index list")
    if idx.min() < 0 or idx.max() >= A.shape[0]:
        raise ValueError(f"index out of range for size {A.shape[0]}: {idx}")
    if not np.all(np.diff(idx) > 0):
        raise ValueError("T must be strictly increasing (sorted, no duplicates)")
    return A[np.ix_(idx, idx)]


def warn_if_rank_deficient(X) -> bool:
    """Emit a warning if ``X`` looks rank deficient; return True when warned.

    Cheap determinant-free test: attempt a Cholesky factorization of the
    smaller Gram matrix and inspect its diagonal.  Only a diagnostic;
    callers never fail on it.
    """
    A = ensure_matrix(X, "X")
    n, p = A.shape
    G = A @ A.T if n <= p else A.T @ A
    scale = float(np.abs(G).max())
    deficient = False
    if scale == 0.0:
        deficient = True
    else:
        try:
            L = np.linalg.cholesky(G + (1e-14 * scale) * np.eye(G.shape[0]))
            d = np.diagonal(L)
            # a singular direction leaves a pivot of order sqrt(ridge),
            # i.e. 1e-7 of the largest; threshold must sit above that
            if float(d.min()) <= 1e-6 * float(d.max()):
                deficient = True
        except np.linalg.LinAlgError:
            deficient = True
    if deficient:
        warnings.warn(
            f"matrix of shape {A.shape} appears rank deficient; "
            "certification assumes full rank",
            stacklevel=2,
        )
    return deficient


def read_matrix_csv(path) -> np.ndarray:
    """Read a dense matrix from CSV.

    One row per line, comma-separated decimal floats.  An optional first
    line ``# rows=<n> cols=<p>`` declares the shape and is validated
    against the data.  Ragged rows and unparsable fields are rejected
    with the 1-based line number named.
    """
    declared = None
    rows: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if lineno == 1:
                    declared = _parse_shape_header(line, lineno)
                    continue
                raise ValueError(f"line {lineno}: comments are only allowed on line 1")
            fields = line.split(",")
            try:
                row = [float(f) for f in fields]
            except ValueError as exc:
                raise ValueError(f"line {lineno}: could not parse row: {exc}") from None
            if rows and len(row) != len(rows[0]):
                raise ValueError(
                    f"line {lineno}: ragged row of length {len(row)}, expected {len(rows[0])}"
                )
            rows.append(row)
    if not rows:
        raise ValueError("empty matrix file")
    M = np.asarray(rows, dtype=np.float64)
    if declared is not None and declared != M.shape:
        raise ValueError(f"header declares shape {declared}, data has shape {M.shape}")
    return ensure_matrix(M, "matrix file")


def _parse_shape_header(line: str, lineno: int) -> tuple[int, int]:
    body = line.lstrip("#").strip()
    parts = dict(
        item.split("=", 1) for item in body.split() if "=" in item
    )
    try:
        return int(parts["rows"]), int(parts["cols"])
    except (KeyError, ValueError):
        raise ValueError(
            f"line {lineno}: malformed shape header {line!r}, expected '# rows=<n> cols=<p>'"
        ) from None


def write_matrix_csv(path, M, header: bool = True) -> None:
    """Write a dense matrix as CSV, round-trippable through ``read_matrix_csv``."""
    A = ensure_matrix(M)
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# rows={A.shape[0]} cols={A.shape[1]}\n")
        for row in A:
            fh.write(",".join(repr(float(x)) for x in row))
            fh.write("\n")
