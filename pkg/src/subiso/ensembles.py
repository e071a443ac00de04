"""Test-bed matrices and random column selectors.

Two matrix families: Gaussian matrices with normalized columns, and the
identity-plus-DCT dictionary whose coherence is known in closed form.
Selectors come in two models, iid Bernoulli flags and uniform fixed-size
subsets, both reproducible from (seed, tag, index) derivation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._seeds import generator
from .matrix_core import ensure_matrix, normalize_columns

__all__ = [
    "EnsembleSpec",
    "SelectorSample",
    "dct_ii_matrix",
    "gaussian_unit",
    "gen_matrix",
    "mask_bilateral",
    "parse_gen_spec",
    "sample_bernoulli",
    "sample_uniform_subset",
    "spikes_sines",
]


@dataclass(frozen=True)
class EnsembleSpec:
    """Recipe for a generated matrix: family name, sizes, seed."""

    kind: str
    n: int
    p: int | None = None
    seed: int = 0


@dataclass(frozen=True)
class SelectorSample:
    """A drawn column selector.

    ``mask`` holds 0/1 flags of length p.  ``model`` records how it was
    drawn ("bernoulli" with rate ``delta``, or "uniform_s" with exact
    size ``s``), and ``seed`` the seed that produced it.
    """

    mask: np.ndarray = field(repr=False)
    model: str
    seed: int
    delta: float | None = None
    s: int | None = None

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=np.uint8)
        if m.ndim != 1:
            raise ValueError("mask must be 1-D")
        if not np.all((m == 0) | (m == 1)):
            raise ValueError("mask entries must be 0 or 1")
        m.flags.writeable = False
        object.__setattr__(self, "mask", m)
        if self.model not in ("bernoulli", "uniform_s"):
            raise ValueError(f"unknown selector model {self.model!r}")

    @property
    def indices(self) -> np.ndarray:
        """Selected positions, strictly increasing."""
        return np.flatnonzero(self.mask)

    @property
    def size(self) -> int:
        return int(self.mask.sum())


def gaussian_unit(n: int, p: int, seed: int) -> np.ndarray:
    """iid standard normal n x p matrix with columns scaled to unit norm."""
    if n < 1 or p < 1:
        raise ValueError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    rng = generator(seed, "ensemble.gaussian_unit")
    G = rng.standard_normal((n, p))
    return normalize_columns(G)


def dct_ii_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis: first row scaled by 1/sqrt(n), rest by sqrt(2/n)."""
    if n < 1:
        raise ValueError(f"need n >= 1, got n={n}")
    k = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    C = np.cos(np.pi * k * (2 * j + 1) / (2 * n))
    C[0, :] *= np.sqrt(1.0 / n)
    C[1:, :] *= np.sqrt(2.0 / n)
    return C

def spikes_sines(n: int) -> np.ndarray:
    """The n x 2n dictionary [I | C] with C the orthonormal DCT-II basis.

    Both blocks have exactly unit columns, and the mutual coherence
    equals the largest absolute entry of C.  Deterministic.
    """
    return np.hstack([np.eye(n), dct_ii_matrix(n)])


def gen_matrix(spec: EnsembleSpec) -> np.ndarray:
    """Materialize the matrix described by ``spec``."""
    if spec.kind == "gaussian_unit":
        if spec.p is None:
            raise ValueError("gaussian_unit needs both n and p")
        return gaussian_unit(spec.n, spec.p, spec.seed)
    if spec.kind == "spikes_sines":
        return spikes_sines(spec.n)
    raise ValueError(f"unknown ensemble kind {spec.kind!r}")


def parse_gen_spec(text: str, seed: int = 0) -> EnsembleSpec:
    """Parse a generator expression like ``gaussian_unit:n=32,p=64``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    params: dict[str, int] = {}
    if rest:
        for item in rest.split(","):
            key, _, value = item.partition("=")
            key = key.strip()
            if not key or not value:
                raise ValueError(f"malformed generator parameter {item!r} in {text!r}")
            try:
                params[key] = int(value)
            except ValueError:
                raise ValueError(f"generator parameter {key!r} must be an integer") from None
            if params[key] < 1:
                raise ValueError(f"generator parameter {key!r} must be positive")
    if kind == "gaussian_unit":
        if set(params) != {"n", "p"}:
            raise ValueError("gaussian_unit takes exactly n=<int>,p=<int>")
        return EnsembleSpec("gaussian_unit", params["n"], params["p"], seed)
    if kind == "spikes_sines":
        if set(params) != {"n"}:
            raise ValueError("spikes_sines takes exactly n=<int>")
        return EnsembleSpec("spikes_sines", params["n"], None, seed)
    raise ValueError(f"unknown ensemble kind {kind!r}")


def sample_bernoulli(p: int, delta: float, seed: int) -> SelectorSample:
    """iid 0/1 flags, each one with probability ``delta``."""
    if p < 1:
        raise ValueError(f"need p >= 1, got p={p}")
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must be in [0, 1], got {delta!r}")
    rng = generator(seed, "selector.bernoulli")
    mask = (rng.random(p) < delta).astype(np.uint8)
    return SelectorSample(mask=mask, model="bernoulli", seed=seed, delta=delta)


def sample_uniform_subset(p: int, s: int, seed: int) -> SelectorSample:
    """Uniformly random subset of exactly ``s`` out of ``p`` positions.

    Partial Fisher-Yates over an index array: after s swap steps the
    leading s entries are a uniform s-subset.
    """
    if p < 1:
        raise ValueError(f"need p >= 1, got p={p}")
    if not 0 <= s <= p:
        raise ValueError(f"need 0 <= s <= p, got s={s}, p={p}")
    rng = generator(seed, "selector.uniform_subset")
    idx = np.arange(p)
    for i in range(s):
        j = i + int(rng.integers(0, p - i))
        idx[i], idx[j] = idx[j], idx[i]
    mask = np.zeros(p, dtype=np.uint8)
    mask[idx[:s]] = 1
    return SelectorSample(mask=mask, model="uniform_s", seed=seed, s=s)


def mask_bilateral(H, left: SelectorSample, right: SelectorSample) -> np.ndarray:
    """Zero out rows of ``H`` outside ``left`` and columns outside ``right``.

    Entrywise ``left.mask[i] * H[i, j] * right.mask[j]``; the full-size
    masked matrix is returned (no rows or columns are dropped).
    """
    A = ensure_matrix(H, "H")
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"H must be square, got shape {A.shape}")
    if left.mask.size != A.shape[0] or right.mask.size != A.shape[1]:
        raise ValueError(
            f"mask lengths {left.mask.size}, {right.mask.size} do not match H shape {A.shape}"
        )
    l = left.mask.astype(np.float64)
    r = right.mask.astype(np.float64)
    return A * l[:, None] * r[None, :]
