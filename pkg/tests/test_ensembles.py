import numpy as np
import pytest

from subiso.certificate import coherence
from subiso.ensembles import (
    EnsembleSpec,
    SelectorSample,
    dct_ii_matrix,
    gaussian_unit,
    gen_matrix,
    mask_bilateral,
    parse_gen_spec,
    sample_bernoulli,
    sample_uniform_subset,
    spikes_sines,
)
from subiso.matrix_core import column_norms, hollow_gram, spectral_norm

from jacobi import jacobi_spectral_norm


def all_ones_selector(p):
    return SelectorSample(
        mask=np.ones(p, dtype=np.uint8), model="bernoulli", seed=0, delta=1.0
    )


# ---------------------------------------------------------------------------
# deterministic generators


def test_gaussian_unit_columns_are_unit():
    X = gaussian_unit(16, 40, seed=3)
    assert X.shape == (16, 40)
    assert np.allclose(column_norms(X), 1.0, atol=1e-12)


def test_gaussian_unit_seed_determinism():
    assert np.array_equal(gaussian_unit(8, 12, seed=9), gaussian_unit(8, 12, seed=9))
    assert not np.array_equal(gaussian_unit(8, 12, seed=9), gaussian_unit(8, 12, seed=10))


def test_dct_rows_orthonormal():
    for n in [1, 2, 7, 16]:
        C = dct_ii_matrix(n)
        assert np.abs(C @ C.T - np.eye(n)).max() <= 1e-12
        assert np.abs(C.T @ C - np.eye(n)).max() <= 1e-12


def test_dct_first_row_is_constant():
    C = dct_ii_matrix(9)
    assert np.allclose(C[0], 1.0 / np.sqrt(9.0), atol=1e-15)


def test_spikes_sines_structure():
    X = spikes_sines(8)
    assert X.shape == (8, 16)
    assert np.array_equal(X[:, :8], np.eye(8))
    assert np.allclose(column_norms(X), 1.0, atol=1e-12)


def test_spikes_sines_coherence_equals_max_dct_entry():
    # cross-bases inner products are exactly the DCT entries; within each
    # basis the columns are orthonormal, so the max lives in the cross block
    X = spikes_sines(8)
    mu = coherence(X).mu
    assert mu == pytest.approx(np.abs(dct_ii_matrix(8).T).max(), abs=1e-14)
    assert mu == pytest.approx(0.4903926402016153, rel=1e-13)


def test_spikes_sines_operator_norm_is_sqrt_two():
    # union of two orthonormal bases: X X^t = 2 I
    X = spikes_sines(12)
    assert spectral_norm(X) ** 2 == pytest.approx(2.0, rel=1e-10)


def test_gen_matrix_dispatch():
    spec = EnsembleSpec(kind="spikes_sines", n=8)
    assert np.array_equal(gen_matrix(spec), spikes_sines(8))
    spec = EnsembleSpec(kind="gaussian_unit", n=6, p=10, seed=4)
    assert np.array_equal(gen_matrix(spec), gaussian_unit(6, 10, seed=4))


# ---------------------------------------------------------------------------
# generator spec strings


def test_parse_gen_spec_gaussian():
    spec = parse_gen_spec("gaussian_unit:n=32,p=64", seed=5)
    assert (spec.kind, spec.n, spec.p, spec.seed) == ("gaussian_unit", 32, 64, 5)


def test_parse_gen_spec_spikes_sines():
    spec = parse_gen_spec("spikes_sines:n=16")
    assert (spec.kind, spec.n, spec.p) == ("spikes_sines", 16, None)


@pytest.mark.parametrize(
    "text",
    [
        "fourier:n=8",                # unknown kind
        "gaussian_unit:n=32",         # missing p
        "spikes_sines:n=8,p=16",      # p not accepted here
        "gaussian_unit:n=32,p=sixty", # non-integer
        "gaussian_unit",              # no parameters at all
        "gaussian_unit:n=0,p=4",      # degenerate size
    ],
)
def test_parse_gen_spec_rejects(text):
    with pytest.raises(ValueError):
        parse_gen_spec(text)


# ---------------------------------------------------------------------------
# selectors


def test_sample_bernoulli_extremes():
    assert sample_bernoulli(10, 0.0, seed=1).size == 0
    assert sample_bernoulli(10, 1.0, seed=1).size == 10


def test_sample_bernoulli_mean_concentrates():
    sel = sample_bernoulli(10_000, 0.3, seed=7)
    se = np.sqrt(0.3 * 0.7 / 10_000)
    assert abs(sel.mask.mean() - 0.3) <= 3 * se


def test_sample_bernoulli_determinism():
    a = sample_bernoulli(50, 0.5, seed=11)
    b = sample_bernoulli(50, 0.5, seed=11)
    c = sample_bernoulli(50, 0.5, seed=12)
    assert np.array_equal(a.mask, b.mask)
    assert not np.array_equal(a.mask, c.mask)


@pytest.mark.parametrize("delta", [-0.1, 1.0001, np.nan])
def test_sample_bernoulli_rejects_bad_rate(delta):
    with pytest.raises(ValueError):
        sample_bernoulli(10, delta, seed=0)


def test_sample_uniform_subset_cardinality():
    for seed in range(30):
        sel = sample_uniform_subset(23, 7, seed=seed)
        assert sel.size == 7
        assert sel.mask.sum() == 7


def test_sample_uniform_subset_extremes():
    assert sample_uniform_subset(6, 0, seed=0).size == 0
    assert np.array_equal(sample_uniform_subset(6, 6, seed=0).mask, np.ones(6, np.uint8))


def test_sample_uniform_subset_rejects_oversize():
    with pytest.raises(ValueError):
        sample_uniform_subset(5, 6, seed=0)


def test_sample_uniform_subset_census():
    """Every 2-subset of {0..4} appears with frequency 1/10 +- 0.01."""
    counts: dict[tuple, int] = {}
    n_samples = 100_000
    for seed in range(n_samples):
        key = tuple(sample_uniform_subset(5, 2, seed=seed).indices.tolist())
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 10
    for key, c in counts.items():
        assert abs(c / n_samples - 0.1) <= 0.01, (key, c)


def test_selector_indices_match_mask():
    sel = sample_bernoulli(40, 0.4, seed=2)
    assert np.array_equal(np.flatnonzero(sel.mask), sel.indices)
    assert sel.size == int(sel.mask.sum())


def test_selector_mask_is_frozen():
    sel = sample_bernoulli(10, 0.5, seed=0)
    with pytest.raises((ValueError, RuntimeError)):
        sel.mask[0] = 1


@pytest.mark.parametrize(
    "mask,model",
    [
        (np.array([0, 2, 1], np.uint8), "bernoulli"),  # entry outside {0,1}
        (np.zeros((2, 2), np.uint8), "bernoulli"),     # not a vector
        (np.zeros(3, np.uint8), "poisson"),            # unknown model
    ],
)
def test_selector_sample_validation(mask, model):
    with pytest.raises(ValueError):
        SelectorSample(mask=mask, model=model, seed=0)


# ---------------------------------------------------------------------------
# bilateral masking


def test_mask_bilateral_all_ones_is_identity_map():
    H = hollow_gram(spikes_sines(8))
    sel = all_ones_selector(16)
    assert np.array_equal(mask_bilateral(H, sel, sel), H)


def test_mask_bilateral_zero_left_annihilates():
    H = hollow_gram(spikes_sines(8))
    zero = SelectorSample(mask=np.zeros(16, np.uint8), model="bernoulli", seed=0, delta=0.0)
    assert np.all(mask_bilateral(H, zero, all_ones_selector(16)) == 0.0)


def test_mask_bilateral_shape_checks():
    H = np.zeros((4, 4))
    short = SelectorSample(mask=np.zeros(3, np.uint8), model="bernoulli", seed=0)
    with pytest.raises(ValueError):
        mask_bilateral(H, short, all_ones_selector(4))
    with pytest.raises(ValueError):
        mask_bilateral(np.zeros((3, 4)), short, all_ones_selector(4))


def test_masked_norm_never_exceeds_full_norm():
    rng = np.random.default_rng(57)
    X = gaussian_unit(12, 24, seed=1)
    H = hollow_gram(X)
    full = spectral_norm(H)
    for seed in range(8):
        left = sample_bernoulli(24, 0.4, seed=seed)
        right = sample_bernoulli(24, 0.4, seed=seed + 100)
        assert spectral_norm(mask_bilateral(H, left, right)) <= full + 1e-10


def test_mask_idempotence_identity():
    """||R H R'||^2 equals ||R H R' H R|| since masks are 0/1 diagonal."""
    X = gaussian_unit(10, 20, seed=8)
    H = hollow_gram(X)
    R = sample_bernoulli(20, 0.5, seed=1)
    Rp = sample_bernoulli(20, 0.5, seed=2)
    M = mask_bilateral(H, R, Rp)
    rm = R.mask.astype(float)
    pm = Rp.mask.astype(float)
    # R H R' * (R H R')^t with R'^2 = R' collapses to R H R' H R
    chained = rm[:, None] * H * pm[None, :] * 1.0
    product = chained @ chained.T
    direct = rm[:, None] * (H * pm[None, :] @ H) * rm[None, :]
    a = jacobi_spectral_norm(M) ** 2
    b = jacobi_spectral_norm(direct)
    assert np.abs(product - direct).max() <= 1e-12
    assert a == pytest.approx(b, rel=1e-10)


def test_mask_bilateral_principal_matches_extraction():
    from subiso.matrix_core import extract_principal

    X = gaussian_unit(9, 15, seed=21)
    H = hollow_gram(X)
    sel = sample_uniform_subset(15, 5, seed=3)
    a = spectral_norm(mask_bilateral(H, sel, sel))
    b = spectral_norm(extract_principal(H, sel.indices))
    assert a == pytest.approx(b, abs=1e-10 * max(1.0, b))
