import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from szegolab.eigen import (EigenError, balance, eigvals_qr, hessenberg, inverse_iteration,
                            jacobi_eigh, residual_norms)


def _match(a, b):
    """Max distance after greedy nearest pairing (multisets of equal size)."""
    b = list(b)
    worst = 0.0
    for z in a:
        j = int(np.argmin([abs(z - w) for w in b]))
        worst = max(worst, abs(z - b.pop(j)))
    return worst


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 12), seed=st.integers(0, 2 ** 31))
def test_jacobi_matches_lapack(n, seed):
    a = np.random.default_rng(seed).standard_normal((n, n))
    a = a + a.T
    w, v = jacobi_eigh(a)
    assert np.allclose(w, np.linalg.eigvalsh(a), atol=1e-12 * max(1, np.abs(a).max()))
    assert residual_norms(a, w, v).max() < 1e-12 * max(1.0, np.linalg.norm(a))
    assert np.allclose(v.T @ v, np.eye(n), atol=1e-13)


def test_jacobi_zero_and_scalar():
    w, _ = jacobi_eigh(np.zeros((3, 3)))
    assert np.all(w == 0)
    w, _ = jacobi_eigh([[2.5]])
    assert w[0] == 2.5


def test_qr_diagonal():
    d = np.array([3.0, -1.0 + 2j, 0.5j, 7.0])
    assert _match(eigvals_qr(np.diag(d)), d) < 1e-14


def test_qr_complex_symmetric_2x2():
    vals = eigvals_qr(np.array([[0, 1j], [1j, 0]]))
    assert _match(vals, [1j, -1j]) < 1e-14


@pytest.mark.parametrize("n", [3, 5, 8])
def test_qr_vs_companion_matrix(n):
    # oracle: characteristic polynomial by Faddeev-LeVerrier, roots of its companion matrix
    rng = np.random.default_rng(n)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    c = [1.0 + 0j]
    M = np.zeros_like(a)
    for k in range(1, n + 1):
        M = a @ M + c[-1] * np.eye(n)
        c.append(-np.trace(a @ M) / k)
    comp = np.zeros((n, n), dtype=complex)
    comp[0, :] = -np.array(c[1:])
    comp[1:, :-1] = np.eye(n - 1)
    ref = np.linalg.eigvals(comp)
    assert _match(eigvals_qr(a), ref) < 1e-9


def test_qr_trace_dim50():
    rng = np.random.default_rng(50)
    a = rng.standard_normal((50, 50)) + 1j * rng.standard_normal((50, 50))
    vals = eigvals_qr(a)
    assert abs(vals.sum() - np.trace(a)) < 1e-8 * np.linalg.norm(a, 2)
    assert _match(vals, np.linalg.eigvals(a)) < 1e-9


def test_hessenberg_similarity():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
    h = hessenberg(a)
    assert np.allclose(np.tril(h, -2), 0)
    assert _match(np.linalg.eigvals(h), np.linalg.eigvals(a)) < 1e-10


def test_balance_is_similarity():
    a = np.array([[1, 1e6, 0], [1e-6, 2, 1e4], [0, 1e-4, 3]], dtype=complex)
    b, d = balance(a)
    assert np.allclose(b, np.diag(1 / d) @ a @ np.diag(d))
    assert np.linalg.norm(b, 1) < np.linalg.norm(a, 1)


def test_qr_iteration_cap_reports_window():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((12, 12))
    with pytest.raises(EigenError, match="active window"):
        eigvals_qr(a, max_iter_per_eig=0)


def test_inverse_iteration_residual():
    rng = np.random.default_rng(7)
    a = rng.standard_normal((20, 20)) + 1j * rng.standard_normal((20, 20))
    a = a + a.T
    lam = eigvals_qr(a)[0]
    v = inverse_iteration(a, lam)
    assert np.linalg.norm(a @ v - lam * v) < 1e-10 * np.linalg.norm(a, 2)


def test_balance_nearly_diagonal():
    a = np.diag([-0.27259352 + 0.0671j, -0.11337077 + 0.0179j, -0.0603 + 0.0015j])
    a[1, 0] = 1e-300
    b, d = balance(a)
    assert np.all(np.isfinite(b))
    assert np.allclose(np.sort_complex(eigvals_qr(a)), np.sort_complex(np.diag(a)))


def test_balance_rejects_nonfinite():
    with pytest.raises(EigenError):
        balance(np.array([[1.0, np.inf], [0.0, 1.0]]))
