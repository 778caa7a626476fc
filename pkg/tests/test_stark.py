import math

import numpy as np
import pytest
from scipy.special import sph_harm_y

from szegolab.stark import (angular_matrices, build_shell_matrix, diagonalize_shell,
                            parabolic_oracle, parabolic_z, quantum_distribution, quantum_moment,
                            shell_spectrum, szego_compare)
from szegolab.stark import TestFunction as _TF, test_function as make_rho


def test_angular_matrices_vs_quadrature():
    lmax = 3
    c3, c1, labels = angular_matrices(lmax)
    x, wx = np.polynomial.legendre.leggauss(16)
    th = np.arccos(x)
    ph = 2 * np.pi * np.arange(32) / 32
    T, P = np.meshgrid(th, ph, indexing="ij")
    W = np.outer(wx, np.full(32, 2 * np.pi / 32))
    Y = np.array([sph_harm_y(l, m, T, P) for l, m in labels])
    for mat, f in ((c3, np.cos(T)), (c1, np.sin(T) * np.cos(P))):
        ref = np.einsum("aij,bij,ij->ab", Y.conj(), Y, f * W)
        assert np.abs(ref.imag).max() < 1e-14
        assert np.abs(ref.real - mat).max() < 1e-13


def test_parabolic_z_known_values():
    # n = 2: <z> = +/- 3 for (n1, n2) = (1, 0), (0, 1); zero for m = +/-1
    assert parabolic_z(1, 0, 0) == (3, 1)
    assert parabolic_z(0, 1, 0) == (-3, 1)
    assert parabolic_z(0, 0, 1) == (0, 1)
    # general rule <z> = (3/2) n (n1 - n2)
    for n1, n2, m in [(2, 0, 1), (3, 1, 0), (0, 4, 2)]:
        n = n1 + n2 + m + 1
        num, den = parabolic_z(n1, n2, m)
        assert num / den == pytest.approx(1.5 * n * (n1 - n2))


@pytest.mark.parametrize("N", range(1, 11))
def test_oracle_equivalence(N):
    a = diagonalize_shell(build_shell_matrix(N, 0.7)).values
    b = parabolic_oracle(N, 0.7).values
    assert np.abs(a - b).max() < 1e-8


@pytest.mark.parametrize("N", range(2, 9))
def test_moment_trace_consistency(N):
    M = build_shell_matrix(N, 1.3).entries
    P = np.eye(N * N)
    for m in range(1, 5):
        P = P @ M
        assert quantum_moment(N, 1.3, m) == pytest.approx(np.trace(P) / (N * N), abs=1e-9)


@pytest.mark.parametrize("N", range(1, 6))
def test_rotation_invariance(N):
    a = diagonalize_shell(build_shell_matrix(N, 1.0, (0, 0, 1))).values
    b = diagonalize_shell(build_shell_matrix(N, 1.0, (1, 0, 0))).values
    c = diagonalize_shell(build_shell_matrix(N, 1.0, (1, 0, 1))).values
    assert np.abs(a - b).max() < 1e-9 and np.abs(a - c).max() < 1e-9


def test_linear_in_field():
    for N in (3, 7):
        a = diagonalize_shell(build_shell_matrix(N, 1.0)).values
        b = diagonalize_shell(build_shell_matrix(N, 2.5)).values
        assert np.abs(b - 2.5 * a).max() < 1e-12


def test_trace_symmetry_and_structure():
    N = 9
    M = build_shell_matrix(N, 1.0).entries
    assert abs(np.trace(M)) < 1e-13
    assert np.array_equal(M, M.T)
    v = shell_spectrum(N, 1.0).values
    assert np.abs(v + v[::-1]).max() < 1e-12
    # eigenvalues (3/2) k / N with multiplicity N - |k|
    expect = np.sort([1.5 * k / N for k in range(-(N - 1), N) for _ in range(N - abs(k))])
    assert np.abs(v - expect).max() < 1e-12


@pytest.mark.parametrize("N", [1, 2, 5, 10, 20])
def test_second_moment_closed_form(N):
    # from the multiplicity pattern: 3 F^2 (N^2 - 1) / (8 N^2)
    F = 0.8
    assert quantum_moment(N, F, 2) == pytest.approx(3 * F * F * (N * N - 1) / (8 * N * N), abs=1e-13)


def test_quantum_distribution_weights():
    d = quantum_distribution(4, 1.0)
    assert len(d) == 16 and d.weights.sum() == pytest.approx(1.0)


def test_bad_inputs():
    with pytest.raises(ValueError):
        build_shell_matrix(3, 1.0, (0, 1, 0))
    with pytest.raises(ValueError):
        build_shell_matrix(0, 1.0)
    with pytest.raises(ValueError):
        build_shell_matrix(60, 1.0)
    with pytest.raises(ValueError):
        quantum_moment(3, 1.0, 0)
    with pytest.raises(ValueError):
        make_rho("cosh", 1.0)


def test_szego_compare_rejects_small_radius():
    rho = _TF("log", (0.0, 1.0), radius=1.0)
    with pytest.raises(ValueError, match="radius"):
        szego_compare([4], 1.0, [rho], lambda r: (0.0, 0.0))


def test_szego_compare_rows():
    rows = szego_compare([2, 4], 1.0, [make_rho("one", 1.0), make_rho("s2", 1.0)],
                         lambda r: (1.0 if r.name == "one" else 0.375, 0.0))
    one = [r for r in rows if r["rho"] == "one"]
    assert all(r["quantum"] == pytest.approx(1.0) and r["diff"] == pytest.approx(0) for r in one)
    assert len(rows) == 4


def test_exp_test_function_tail_bound():
    F = 0.3
    rho = make_rho("exp", F)
    s = np.linspace(-2 * F, 2 * F, 41)
    assert np.abs(rho(s) - np.exp(s / (3 * F))).max() <= rho.tail_bound * (1 + 1e-9) + 1e-15
