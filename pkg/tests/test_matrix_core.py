import numpy as np
import pytest

from subiso.matrix_core import (
    NormReport,
    SpectralNormError,
    column_norms,
    ensure_matrix,
    extract_principal,
    gram,
    hollow_gram,
    max_abs,
    max_col_l2,
    normalize_columns,
    norms,
    read_matrix_csv,
    spectral_norm,
    warn_if_rank_deficient,
    write_matrix_csv,
)

from jacobi import jacobi_spectral_norm

RNG = np.random.default_rng(20240817)


def random_symmetric(n, rng):
    A = rng.standard_normal((n, n))
    return (A + A.T) / 2.0


# ---------------------------------------------------------------------------
# spectral_norm


def test_spectral_norm_identity():
    assert spectral_norm(np.eye(3)) == pytest.approx(1.0, abs=1e-12)


def test_spectral_norm_diagonal():
    assert spectral_norm(np.diag([1.0, 2.0, 3.0])) == pytest.approx(3.0, abs=1e-10)


def test_spectral_norm_zero_matrix():
    assert spectral_norm(np.zeros((4, 7))) == 0.0


def test_spectral_norm_rank_one():
    u = np.arange(1.0, 6.0)
    v = np.array([2.0, -1.0, 0.5])
    M = np.outer(u, v)
    expected = np.linalg.norm(u) * np.linalg.norm(v)
    assert spectral_norm(M) == pytest.approx(expected, rel=1e-10)


def test_spectral_norm_matches_jacobi_on_symmetric():
    """Seeded 8x8 symmetric matrices agree with the Jacobi oracle."""
    rng = np.random.default_rng(5150)
    for _ in range(20):
        S = random_symmetric(8, rng)
        ref = jacobi_spectral_norm(S)
        assert spectral_norm(S) == pytest.approx(ref, rel=1e-8)


def test_spectral_norm_rectangular_matches_jacobi():
    rng = np.random.default_rng(88)
    for shape in [(3, 9), (9, 3), (12, 12), (7, 2)]:
        M = rng.standard_normal(shape)
        assert spectral_norm(M) == pytest.approx(jacobi_spectral_norm(M), rel=1e-9)


def test_spectral_norm_transpose_invariance():
    rng = np.random.default_rng(17)
    M = rng.standard_normal((6, 11))
    assert spectral_norm(M) == pytest.approx(spectral_norm(M.T), rel=1e-10)


def test_spectral_norm_degenerate_top_eigenvalue():
    # repeated leading eigenvalue: Rayleigh quotient still settles because
    # any vector in the top eigenspace is a fixed point
    S = np.diag([5.0, 5.0, 1.0, 0.0])
    assert spectral_norm(S) == pytest.approx(5.0, rel=1e-10)


def test_spectral_norm_near_tied_signed_pair():
    # a traceless symmetric matrix with one tiny off-diagonal product has
    # eigenvalues close to {m, 0, -m}; squaring nearly ties the top pair,
    # which stalls a plain power iteration but not the Ritz step
    x, y, z = 0.2, 0.25, 1e-7
    S = np.array([[0.0, x, y], [x, 0.0, z], [y, z, 0.0]])
    ref = jacobi_spectral_norm(S)
    assert spectral_norm(S) == pytest.approx(ref, rel=1e-8)


def test_spectral_norm_near_tied_singular_values():
    # explicit near-tie in the squared spectrum, conjugated so the start
    # vector is not already an eigenvector
    rng = np.random.default_rng(7311)
    Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    S = Q @ np.diag([1.0, -(1.0 - 1e-9), 0.3, 0.1]) @ Q.T
    S = 0.5 * (S + S.T)
    assert spectral_norm(S) == pytest.approx(1.0, rel=1e-9)


def test_spectral_norm_iteration_budget_exhaustion():
    # one iteration per attempt can never see two consecutive stable
    # Ritz values, so both attempts must be spent and reported; the
    # matrix must be wider than the frame or one step is already exact
    M = np.diag([1.0, 2.0, 3.0, 4.0, 5.0])
    with pytest.raises(SpectralNormError) as info:
        spectral_norm(M, max_iter=1)
    err = info.value
    assert err.iterations == 2
    assert err.estimate >= 0.0
    assert "did not converge" in str(err) or "converge" in str(err)


def test_spectral_norm_rejects_bad_input():
    with pytest.raises(ValueError):
        spectral_norm(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        spectral_norm(np.array([[np.nan, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        spectral_norm(np.zeros((0, 3)))


# ---------------------------------------------------------------------------
# gram / hollow_gram


def test_gram_orthonormal_columns():
    X = np.eye(4)[:, :3]
    assert np.array_equal(gram(X), np.eye(3))


def test_gram_correlated_pair():
    X = np.column_stack([[1.0, 0.0], [1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)]])
    expected = np.array([[1.0, 1.0 / np.sqrt(2.0)], [1.0 / np.sqrt(2.0), 1.0]])
    assert np.allclose(gram(X), expected, atol=1e-15)


def test_gram_duplicated_column():
    x = np.array([[0.6], [0.8]])
    X = np.hstack([x, x])
    assert np.allclose(gram(X), np.ones((2, 2)), atol=1e-15)


def test_hollow_gram_orthonormal_is_zero():
    assert np.array_equal(hollow_gram(np.eye(5)), np.zeros((5, 5)))


def test_hollow_gram_off_diagonal_survives():
    X = np.column_stack([[1.0, 0.0], [1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)]])
    H = hollow_gram(X)
    c = 1.0 / np.sqrt(2.0)
    assert np.allclose(H, [[0.0, c], [c, 0.0]], atol=1e-15)
    assert H[0, 0] == 0.0 and H[1, 1] == 0.0


def test_hollow_gram_diagonal_exactly_zero():
    X = normalize_columns(np.random.default_rng(3).standard_normal((9, 14)))
    assert np.all(np.diag(hollow_gram(X)) == 0.0)


def test_hollow_gram_rejects_non_unit_columns():
    X = np.eye(3)
    X[0, 1] = 0.5  # column 1 now has norm sqrt(1.25)
    with pytest.raises(ValueError, match="column 1"):
        hollow_gram(X)


def test_hollow_gram_principal_submatrix_identity():
    # X_T^t X_T - I equals the principal block of the full hollow Gram,
    # entry for entry, because shared columns share inner products
    rng = np.random.default_rng(41)
    X = normalize_columns(rng.standard_normal((12, 20)))
    H = hollow_gram(X)
    T = [1, 4, 5, 11, 17]
    direct = gram(X[:, T]) - np.eye(len(T))
    assert np.abs(extract_principal(H, T) - direct).max() <= 1e-12


# ---------------------------------------------------------------------------
# column handling


def test_column_norms_values():
    X = np.array([[3.0, 0.0], [4.0, 2.0]])
    assert np.allclose(column_norms(X), [5.0, 2.0])


def test_normalize_columns_unit_output():
    rng = np.random.default_rng(12)
    X = rng.standard_normal((10, 6)) * 7.0
    Y = normalize_columns(X)
    assert np.allclose(column_norms(Y), 1.0, atol=1e-12)
    # direction preserved
    j = 3
    cos = float(X[:, j] @ Y[:, j]) / np.linalg.norm(X[:, j])
    assert cos == pytest.approx(1.0, abs=1e-12)


def test_normalize_columns_zero_column_rejected():
    X = np.eye(3)
    X[:, 2] = 0.0
    with pytest.raises(ValueError, match="column 2"):
        normalize_columns(X)


# ---------------------------------------------------------------------------
# norms triple


def test_norms_identity():
    rep = norms(np.eye(4))
    assert rep.spectral == pytest.approx(1.0, abs=1e-10)
    assert rep.max_col_l2 == 1.0
    assert rep.max_abs == 1.0


def test_norms_all_ones():
    rep = norms(np.ones((3, 3)))
    assert rep.spectral == pytest.approx(3.0, rel=1e-10)
    assert rep.max_col_l2 == pytest.approx(np.sqrt(3.0), rel=1e-14)
    assert rep.max_abs == 1.0


def test_norms_ordering_invariants():
    """spectral >= max column l2 >= max entry, up to iteration tolerance."""
    rng = np.random.default_rng(230)
    for _ in range(25):
        n = int(rng.integers(1, 12))
        p = int(rng.integers(1, 12))
        rep = norms(rng.standard_normal((n, p)) * rng.uniform(0.1, 10.0))
        slack = 1e-8 * max(1.0, rep.spectral)
        assert rep.spectral + slack >= rep.max_col_l2
        assert rep.max_col_l2 + 1e-12 >= rep.max_abs


def test_norms_report_is_plain_data():
    rep = norms(np.eye(2))
    assert isinstance(rep, NormReport)
    assert set(["spectral", "max_col_l2", "max_abs"]) <= set(rep.__dataclass_fields__)


def test_max_abs_and_max_col_l2():
    M = np.array([[1.0, -4.0], [2.0, 2.0]])
    assert max_abs(M) == 4.0
    assert max_col_l2(M) == pytest.approx(np.sqrt(20.0), rel=1e-14)


# ---------------------------------------------------------------------------
# principal submatrices


def test_extract_principal_full_and_single():
    H = random_symmetric(6, np.random.default_rng(9))
    assert np.array_equal(extract_principal(H, np.arange(6)), H)
    assert extract_principal(H, [2]).shape == (1, 1)
    assert extract_principal(H, [2])[0, 0] == H[2, 2]


def test_extract_principal_matches_masked_norm():
    # route A: dense subblock; route B: zero out rows/cols with a 0/1
    # diagonal mask and take the norm of the full-size matrix
    rng = np.random.default_rng(77)
    H = random_symmetric(10, rng)
    T = np.array([0, 3, 4, 8])
    mask = np.zeros(10)
    mask[T] = 1.0
    masked = mask[:, None] * H * mask[None, :]
    a = spectral_norm(extract_principal(H, T))
    b = spectral_norm(masked)
    assert a == pytest.approx(b, abs=1e-10 * max(1.0, b))


@pytest.mark.parametrize(
    "bad",
    [
        [3, 3],          # repeated index
        [4, 2],          # not increasing
        [-1],            # out of range low
        [6],             # out of range high
        [],              # empty
    ],
)
def test_extract_principal_rejects_bad_index_sets(bad):
    H = np.eye(6)
    with pytest.raises(ValueError):
        extract_principal(H, bad)


def test_extract_principal_requires_square():
    with pytest.raises(ValueError):
        extract_principal(np.zeros((3, 4)), [0])


# ---------------------------------------------------------------------------
# rank warning


def test_warn_if_rank_deficient_flags_duplicate_columns():
    x = np.array([[1.0], [2.0], [3.0]])
    X = np.hstack([x, x])
    with pytest.warns(UserWarning, match="rank deficient"):
        assert warn_if_rank_deficient(X) is True


def test_warn_if_rank_deficient_quiet_on_full_rank():
    X = np.random.default_rng(2).standard_normal((8, 5))
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert warn_if_rank_deficient(X) is False


def test_warn_if_rank_deficient_wide_matrix_uses_row_gram():
    # wide full-row-rank matrix must not warn even though columns are
    # necessarily dependent
    X = np.random.default_rng(6).standard_normal((4, 30))
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert warn_if_rank_deficient(X) is False


# ---------------------------------------------------------------------------
# ensure_matrix


def test_ensure_matrix_accepts_lists():
    M = ensure_matrix([[1.0, 2.0], [3.0, 4.0]])
    assert M.dtype == np.float64 and M.shape == (2, 2)


@pytest.mark.parametrize("bad", [[1.0, 2.0], np.zeros((2, 0)), [[np.inf, 0.0]]])
def test_ensure_matrix_rejects(bad):
    with pytest.raises(ValueError):
        ensure_matrix(bad)


# ---------------------------------------------------------------------------
# CSV round trip


def test_csv_round_trip_with_header(tmp_path):
    path = tmp_path / "m.csv"
    M = np.random.default_rng(0).standard_normal((5, 3))
    write_matrix_csv(path, M)
    back = read_matrix_csv(path)
    assert np.array_equal(back, M)  # repr round-trips doubles exactly


def test_csv_round_trip_without_header(tmp_path):
    path = tmp_path / "m2.csv"
    M = np.array([[1.5, -2.25], [0.125, 3.0]])
    write_matrix_csv(path, M, header=False)
    assert np.array_equal(read_matrix_csv(path), M)


def test_csv_ragged_row_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1.0,2.0\n3.0\n")
    with pytest.raises(ValueError, match="line 2"):
        read_matrix_csv(path)


def test_csv_header_shape_mismatch(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# rows=3 cols=2\n1.0,2.0\n3.0,4.0\n")
    with pytest.raises(ValueError, match="header declares"):
        read_matrix_csv(path)


def test_csv_malformed_number_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1.0,2.0\n3.0,oops\n")
    with pytest.raises(ValueError, match="line 2"):
        read_matrix_csv(path)


def test_csv_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(ValueError, match="empty"):
        read_matrix_csv(path)


def test_csv_comment_only_allowed_on_first_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1.0,2.0\n# rows=2 cols=2\n3.0,4.0\n")
    with pytest.raises(ValueError, match="line 2"):
        read_matrix_csv(path)


# ---------------------------------------------------------------------------
# cross-route invariant


def test_spectral_norm_squared_equals_gram_norm():
    """||X||^2 == ||X^t X|| across random shapes up to 50x100."""
    rng = np.random.default_rng(314)
    for _ in range(10):
        n = int(rng.integers(2, 51))
        p = int(rng.integers(2, 101))
        X = rng.standard_normal((n, p))
        a = spectral_norm(X) ** 2
        b = spectral_norm(gram(X))
        assert a == pytest.approx(b, rel=1e-8)
