"""Complex-scaled Hamiltonian, resonance clusters and the trace identity."""
import numpy as np
import pytest

from szegolab.eigen import EigenError
from szegolab.hydrogen import SemiclassicalConfig
from szegolab.scaling import (ClusterError, SturmianBasis, build_scaled_hamiltonian, extract_cluster,
                              resonance_cluster, resonances_to_csv, second_order_mean_shift,
                              solve_eigen, theta_independence_scan, verify_trace_identity)


def _second_order_oracle(N):
    """Shell mean of the textbook second-order Stark shift, per unit field squared."""
    vals = []
    for m in range(-(N - 1), N):
        for n1 in range(N - abs(m)):
            n2 = N - 1 - abs(m) - n1
            vals.append(-(N ** 4) / 16 * (17 * N * N - 3 * (n1 - n2) ** 2 - 9 * m * m + 19))
    return float(np.mean(vals))


def test_operator_is_complex_symmetric():
    cfg = SemiclassicalConfig(2, 1.0)
    op = build_scaled_hamiltonian(cfg, 0.3, SturmianBasis(0.5, 10, 4, 1), field=1e-3)
    assert np.abs(op.H - op.H.T).max() < 1e-14
    assert np.abs(op.H - op.H.conj().T).max() > 1e-3


@pytest.mark.parametrize("N", [1, 2, 3])
def test_bound_levels_at_theta_zero(N):
    cfg = SemiclassicalConfig(N, 1.0)
    for m in range(N):
        op = build_scaled_hamiltonian(cfg, 0.0, SturmianBasis(1 / N, 12, N + 2, m), field=0.0)
        vals = solve_eigen(op).values
        assert np.abs(vals.imag).max() < 1e-10
        hits = np.abs(vals - (-0.5 / N ** 2)) < 1e-12
        assert hits.sum() == N - m


def test_solve_eigen_diagonal_and_companion():
    sol = solve_eigen(np.diag([1.0, 2.0, 3.0 + 1j]), center=2.0, radius=0.1)
    assert np.allclose(np.sort_complex(sol.values), [1.0, 2.0, 3.0 + 1j])
    assert sol.certified.size == 1 and sol.residuals.max() < 1e-12
    # x^3 - 6x^2 + 11x - 6 = (x-1)(x-2)(x-3)
    C = np.array([[6.0, -11.0, 6.0], [1.0, 0, 0], [0, 1.0, 0]])
    assert np.allclose(np.sort(solve_eigen(C).values.real), [1, 2, 3], atol=1e-12)
    with pytest.raises(ValueError):
        solve_eigen(np.eye(3), dim_cap=2)


def test_cluster_error_reports_counts():
    with pytest.raises(ClusterError, match="expected 4"):
        extract_cluster([-0.125, -0.125, -0.125, 0.3], 2)


def test_argument_validation():
    cfg = SemiclassicalConfig(3, 1.0)
    with pytest.raises(ValueError, match="l_max"):
        build_scaled_hamiltonian(cfg, 0.3, SturmianBasis(1 / 3, 8, 2))
    with pytest.raises(ValueError, match="theta"):
        build_scaled_hamiltonian(cfg, 1.2, SturmianBasis(1 / 3, 8, 4))
    with pytest.raises(ValueError):
        SturmianBasis(-1.0, 8, 4)
    with pytest.raises(ValueError):
        theta_independence_scan(cfg, SturmianBasis(1 / 3, 8, 4), [0.01])


@pytest.mark.parametrize("N", [2, 3])
def test_second_order_mean_shift_oracle(N):
    cfg = SemiclassicalConfig(N, 1.0)
    got = second_order_mean_shift(cfg, SturmianBasis(1 / N, 24, N + 4), 1.0)
    assert got == pytest.approx(_second_order_oracle(N), rel=1e-10)


@pytest.mark.parametrize("theta", [0.1, 0.3])
def test_field_free_cluster_is_real(theta):
    cfg = SemiclassicalConfig(2, 1.0)
    cl, _ = resonance_cluster(cfg, theta, SturmianBasis(0.5, 20, 4), field=0.0)
    assert cl.count == 4
    assert np.abs(cl.shifts).max() < 1e-9


def test_detuned_basis_converges_monotonically():
    # kappa = 1/N reproduces the level exactly, so convergence is probed off the matched scale
    N = 2
    cfg = SemiclassicalConfig(N, 1.0)
    errs = []
    for nm in (6, 8, 10, 12):
        cl, _ = resonance_cluster(cfg, 0.3, SturmianBasis(0.7 / N, nm, N + 2), field=0.0)
        errs.append(np.abs(cl.shifts).max())
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-10


def test_theta_independence():
    cfg = SemiclassicalConfig(2, 1.0)
    scan = theta_independence_scan(cfg, SturmianBasis(0.5, 30, 4), [0.1, 0.3, 0.5], field=1e-4)
    assert scan.max_distance < 1e-9
    # the discretized continuum rotates with the angle, roughly as -2 theta
    angles = scan.continuum_angle
    assert all(b < a for a, b in zip(angles, angles[1:]))
    for t, ang in zip(scan.thetas, angles):
        assert ang == pytest.approx(-2 * t, rel=0.25)


def test_trace_identity_within_budget():
    cfg = SemiclassicalConfig(2, 1.0)
    f = 1e-4
    rep = verify_trace_identity(cfg, SturmianBasis(0.5, 16, 5), f)
    assert rep.decreasing and rep.within_budget
    res = rep.residuals(1)[-1]
    # residual is the second-order mean shift, in the normalization F / (f N^2)
    assert res.real == pytest.approx(_second_order_oracle(2) * f / 4, rel=1e-3)
    assert abs(res.imag) < 1e-10
    for row in rep.rows:
        if row.n_max == 16 and row.order == 2:
            assert abs(row.residual) < 1e-3 * row.quantum_side


def test_resonance_csv():
    text = resonances_to_csv(np.array([-0.125 + 1e-12j]), np.array([0]), 2, 0.3, 10, 0.5)
    head, row = text.splitlines()
    assert head.split(",")[:4] == ["re_z", "im_z", "abs_nu", "m"]
    assert float(row.split(",")[1]) == 1e-12


def test_single_function_blocks_are_diagonal():
    # one radial function per l: the field-free blocks are diagonal, which once stalled balancing
    cfg = SemiclassicalConfig(3, 1.0)
    for m in range(3):
        op = build_scaled_hamiltonian(cfg, 0.3, SturmianBasis(1 / 3, 1, 3, m), field=0.0)
        vals = solve_eigen(op).values
        assert np.allclose(np.sort_complex(vals), np.sort_complex(np.diag(op.H)), atol=1e-15)
