import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import eval_genlaguerre, factorial

from szegolab.hydrogen import (SemiclassicalConfig, bohr_eigenvalue, radial_eigenfunction,
                               radial_integral, radial_moment, radial_moment_oracle,
                               shell_dimension, shell_labels)


def test_config_derived_quantities():
    c = SemiclassicalConfig(8, 0.5)
    assert c.h * c.N == 1.0
    assert c.epsilon == pytest.approx(8.0 ** -6.5, rel=1e-15)
    assert c.effective_field == pytest.approx(8.0 ** -10.5 * 0.5, rel=1e-15)
    assert SemiclassicalConfig.from_record(c.to_record()) == c


@pytest.mark.parametrize("kw", [dict(N=0, F=1.0), dict(N=2, F=-1.0), dict(N=2, F=1.0, K=5),
                                dict(N=2, F=1.0, delta=1.0), dict(N=2.5, F=1.0)])
def test_config_rejects(kw):
    with pytest.raises(ValueError):
        SemiclassicalConfig(**kw)


def test_shell_labels_count():
    for N in range(1, 9):
        labs = shell_labels(N)
        assert len(labs) == shell_dimension(N) == N * N
        assert len(set(labs)) == N * N


def test_bohr():
    assert bohr_eigenvalue(3) == pytest.approx(-1.0 / 18)
    assert bohr_eigenvalue(2) == pytest.approx(-0.125)
    for N in (1, 4, 17):
        assert bohr_eigenvalue(N, h=1.0 / N) == pytest.approx(-0.5, rel=1e-14)
    gaps = [bohr_eigenvalue(k + 1) - bohr_eigenvalue(k) for k in (10, 20, 40)]
    assert all(g > 0 for g in gaps)
    # Theta(k^-3): k^3 * gap tends to 1
    assert [g * k ** 3 for g, k in zip(gaps, (10, 20, 40))] == pytest.approx([1, 1, 1], rel=0.2)


# frozen textbook values: <r^2>_{nl} = n^2 (5n^2 + 1 - 3l(l+1)) / 2
@pytest.mark.parametrize("n,l", [(1, 0), (2, 1), (3, 2), (7, 3)])
def test_second_moment_closed_form(n, l):
    assert radial_moment(n, l, 2) == pytest.approx(n * n * (5 * n * n + 1 - 3 * l * (l + 1)) / 2,
                                                    rel=1e-14)


def test_radial_eigenfunction_vs_textbook_formula():
    # independent evaluation with scipy's generalized Laguerre polynomial
    n, l = 5, 2
    r = np.linspace(0.1, 40, 50)
    rho = 2 * r / n
    A = math.sqrt((2.0 / n) ** 3 * factorial(n - l - 1) / (2 * n * factorial(n + l)))
    ref = A * np.exp(-rho / 2) * rho ** l * eval_genlaguerre(n - l - 1, 2 * l + 1, rho)
    assert np.allclose(radial_eigenfunction(n, l, r), ref, rtol=1e-12, atol=1e-15)


def test_radial_normalization_and_orthogonality():
    assert radial_integral(6, 3, 6, 3, 0) == pytest.approx(1.0, abs=1e-13)
    # same l, different n: orthogonal; checked with adaptive quadrature
    val, _ = quad(lambda r: radial_eigenfunction(3, 1, r) * radial_eigenfunction(5, 1, r) * r * r,
                  0, 200, limit=200)
    assert abs(val) < 1e-10


def test_complex_argument_is_analytic_continuation():
    n, l = 4, 1
    z = 3.0 * np.exp(0.4j)
    rho = 2 * z / n
    A = math.sqrt((2.0 / n) ** 3 * factorial(n - l - 1) / (2 * n * factorial(n + l)))
    ref = A * np.exp(-rho / 2) * rho ** l * eval_genlaguerre(n - l - 1, 2 * l + 1, rho)
    assert abs(radial_eigenfunction(n, l, z) - ref) < 1e-13


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 14), data=st.data())
def test_moments_positive_and_increasing(n, data):
    l = data.draw(st.integers(0, n - 1))
    m = [radial_moment(n, l, k) for k in range(6)]
    assert all(x > 0 for x in m)
    # Lyapunov: <r^k>^{1/k} is nondecreasing
    roots = [m[k] ** (1.0 / k) for k in range(1, 6)]
    assert all(b >= a * (1 - 1e-12) for a, b in zip(roots, roots[1:]))


def test_moment_oracle_agrees_small():
    for n in range(1, 6):
        for l in range(n):
            for k in range(5):
                assert radial_moment(n, l, k) == pytest.approx(radial_moment_oracle(n, l, k), rel=1e-12)


def test_moment_rejects_bad_labels():
    with pytest.raises(ValueError):
        radial_moment(3, 3, 1)
    with pytest.raises(ValueError):
        radial_moment(3, 0, -1)
