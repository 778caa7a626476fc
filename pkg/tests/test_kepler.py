import math

import numpy as np
import pytest

from szegolab.coherent import CoherentParam, sample_alpha
from szegolab.kepler import (_circle, _positions, classical_functional, classical_samples,
                             collision_alpha, kepler_time_average, orbit_average,
                             orbit_average_arrays, orbit_from_alpha, pole_collision_alpha,
                             sample_surface)

X1 = lambda x: x[..., 0]


@pytest.fixture(scope="module")
def alphas():
    rng = np.random.default_rng(2024)
    return [sample_alpha(rng) for _ in range(30)]


def test_invariants_random(alphas):
    for a in alphas:
        err = orbit_from_alpha(a).invariant_errors()
        assert err["energy"] < 1e-10 and err["period"] < 1e-12
        assert err["casimir"] < 1e-12 and err["L_drift"] < 1e-12 and err["A_drift"] < 1e-12


def test_circular_orbit():
    o = orbit_from_alpha(CoherentParam(np.array([1.0, 0, 0, 0]), np.array([0, 1.0, 0, 0])))
    assert o.eccentricity < 1e-15
    assert np.allclose(o.radius, 1.0, atol=1e-15)
    assert abs(np.linalg.norm(o.angular_momentum) - 1) < 1e-15
    assert abs(orbit_average(o, X1)) < 1e-15


def test_pole_collision_orbit():
    o = orbit_from_alpha(pole_collision_alpha(np.random.default_rng(1)))
    assert abs(o.eccentricity - 1) < 1e-8
    assert o.collision[0] and o.collision.sum() == 1
    assert np.isnan(o.p[0]).all() and np.all(np.isfinite(o.x))
    assert np.linalg.norm(o.angular_momentum) < 1e-12
    assert o.invariant_errors()["energy"] < 1e-10


def test_random_phase_collision_energy_floor():
    # the energy residual is set by rounding: |p|^2/2 and 1/|x| are each ~1/|x|
    rng = np.random.default_rng(5)
    for _ in range(20):
        o = orbit_from_alpha(collision_alpha(rng))
        ok = ~o.collision
        r = o.radius[ok]
        e = np.abs(0.5 * np.sum(o.p[ok] ** 2, axis=1) - 1 / r + 0.5)
        assert np.all(e <= 1e-14 / r ** 2 + 1e-13)


def test_average_vs_kepler_oracle(alphas):
    for a in alphas[:10] + [pole_collision_alpha(np.random.default_rng(9))]:
        o = orbit_from_alpha(a)
        ref = kepler_time_average(o.angular_momentum, o.runge_lenz, X1)
        assert abs(orbit_average(o, X1) - ref) < 1e-8
        # linear observable: average is -(3/2) A
        assert orbit_average(o, X1) == pytest.approx(-1.5 * o.runge_lenz[0], abs=1e-13)


def test_average_sample_doubling(alphas):
    obs = lambda x: np.exp(0.3 * x[..., 0]) * x[..., 2] ** 2
    for a in alphas[:10]:
        if orbit_from_alpha(a).eccentricity > 0.95:
            continue
        v1 = orbit_average(orbit_from_alpha(a, 128), obs)
        v2 = orbit_average(orbit_from_alpha(a, 256), obs)
        assert abs(v1 - v2) < 1e-9


def test_hamilton_equations_finite_difference(alphas):
    d = 1e-5
    for a in alphas[:10]:
        s = np.linspace(0.1, 6.0, 25)
        xs = [_positions(*_circle(a.re, a.im, s + k * d)) for k in (-1, 0, 1)]
        om, _, gap = _circle(a.re, a.im, s)
        p = om[:, :3] / gap[:, None]
        r = np.linalg.norm(xs[1], axis=1)
        ok = r > 1e-2
        dxdt = (xs[2] - xs[0]) / (2 * d) / r[:, None]
        assert np.abs(dxdt - p)[ok].max() < 1e-6
        ps = [(lambda o, g: o[:, :3] / g[:, None])(*(lambda c: (c[0], c[2]))(_circle(a.re, a.im, s + k * d)))
              for k in (-1, 1)]
        dpdt = (ps[1] - ps[0]) / (2 * d) / r[:, None]
        assert np.abs(dpdt + xs[1] / r[:, None] ** 3)[ok].max() < 1e-6


def test_vectorized_average_matches(alphas):
    re = np.array([a.re for a in alphas])
    im = np.array([a.im for a in alphas])
    v = orbit_average_arrays(re, im, X1)
    ref = [orbit_average(orbit_from_alpha(a), X1) for a in alphas]
    assert np.allclose(v, ref, atol=1e-14)


def test_surface_samples_on_energy_shell():
    x, p, _, _ = sample_surface(3, 5000)
    e = 0.5 * np.sum(p * p, axis=1) - 1 / np.linalg.norm(x, axis=1)
    assert np.abs(e + 0.5).max() < 1e-9


def test_workers_do_not_change_results():
    a = classical_samples(0.7, 20000, 11, chunk=4096, workers=1)
    b = classical_samples(0.7, 20000, 11, chunk=4096, workers=4)
    assert np.array_equal(a, b)


def test_second_moment_within_3sigma():
    F = 1.3
    est = classical_functional(lambda s: s * s, F, 200_000, seed=17)
    assert abs(est.value - 3 * F * F / 8) <= 3 * est.stderr
