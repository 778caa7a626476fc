"""Kepler orbits at energy -1/2 from great circles of S^3.

The great circle ``omega(s) = cos(s) re + sin(s) im`` is pulled back through
the stereographic map to momenta ``p(s)``; positions follow from Hamilton's
equations in the regularized time ``s`` (``dt = |x| ds``):

    |x| = 1 - omega_4,     x = -(1 - omega_4) omega'_{1:3} - omega_{1:3} omega'_4.

Both are trigonometric polynomials in ``s``, so collision orbits (circles
through the pole ``omega_4 = 1``) need no special treatment for ``x``; only
``p`` blows up there.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .coherent import CoherentParam, sample_alpha_array
from .distributions import EmpiricalDistribution
from .rng import DEFAULT_CHUNK, map_chunks

__all__ = [
    "KeplerOrbit",
    "EnergySurfaceSample",
    "MCEstimate",
    "orbit_from_alpha",
    "orbit_average",
    "orbit_average_arrays",
    "kepler_time_average",
    "collision_alpha",
    "pole_collision_alpha",
    "sample_surface",
    "classical_samples",
    "classical_functional",
    "classical_distribution",
]

# samples closer than this (in 1 - omega_4) to the pole are collision points
_POLE_GAP = 1e-15


def _circle(re, im, s):
    """``omega``, ``d omega / ds`` and ``1 - omega_4`` along the circle; leading axes broadcast.

    The circle is re-phased to start at its point nearest the pole, ``omega(s) = cos(d) R + sin(d) I``
    with ``d = s - s*``, ``R_4 = e`` and ``I_4 = 0``. Then ``omega_4 = e cos d`` and
    ``1 - omega_4 = |R_{1:3}|^2/(1 + e) + 2 e sin^2(d/2)`` carry no cancellation near collisions.
    """
    re = np.asarray(re, dtype=float)
    im = np.asarray(im, dtype=float)
    sstar = np.arctan2(im[..., 3], re[..., 3])[..., None]
    cs, ss = np.cos(sstar), np.sin(sstar)
    R = cs * re + ss * im
    I = -ss * re + cs * im
    e = np.hypot(re[..., 3], im[..., 3])[..., None]
    R = np.concatenate([R[..., :3], e], axis=-1)
    I = np.concatenate([I[..., :3], np.zeros_like(e)], axis=-1)
    d = s - sstar
    c, sn = np.cos(d)[..., None], np.sin(d)[..., None]
    om = c * R[..., None, :] + sn * I[..., None, :]
    dom = -sn * R[..., None, :] + c * I[..., None, :]
    gap = np.sum(R[..., :3] ** 2, axis=-1)[..., None] / (1.0 + e) + 2.0 * e * np.sin(0.5 * d) ** 2
    return om, dom, gap


def _positions(om, dom, gap):
    return -gap[..., None] * dom[..., :3] - om[..., :3] * dom[..., 3:4]


@dataclass(frozen=True)
class EnergySurfaceSample:
    x: np.ndarray
    p: np.ndarray

    def energy(self) -> float:
        return float(0.5 * self.p @ self.p - 1.0 / np.linalg.norm(self.x))


@dataclass(frozen=True)
class KeplerOrbit:
    alpha: CoherentParam
    s: np.ndarray
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    collision: np.ndarray
    angular_momentum: np.ndarray
    runge_lenz: np.ndarray

    @property
    def eccentricity(self) -> float:
        return float(np.linalg.norm(self.runge_lenz))

    @property
    def radius(self) -> np.ndarray:
        return np.linalg.norm(self.x, axis=1)

    def invariant_errors(self, r_min: float = 1e-6) -> dict:
        """Worst violations of the orbit invariants over regular samples."""
        ok = ~self.collision & (self.radius > r_min)
        x, p = self.x[ok], self.p[ok]
        r = np.linalg.norm(x, axis=1)
        energy = np.abs(0.5 * np.sum(p * p, axis=1) - 1.0 / r + 0.5)
        L = np.cross(x, p)
        A = np.cross(p, L) - x / r[:, None]
        Lv, Av = self.angular_momentum, self.runge_lenz
        return {
            "energy": float(energy.max(initial=0.0)),
            "period": abs(self._period() - 2.0 * math.pi),
            "casimir": abs(Lv @ Lv + Av @ Av - 1.0),
            "L_drift": float(np.abs(L - Lv).max(initial=0.0)),
            "A_drift": float(np.abs(A - Av).max(initial=0.0)),
        }

    def _period(self) -> float:
        re4, im4 = self.alpha.re[3], self.alpha.im[3]
        s = 2.0 * math.pi
        return s - re4 * math.sin(s) - im4 * (1.0 - math.cos(s))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "t", "x1", "x2", "x3", "p1", "p2", "p3"])
        for row in np.column_stack([self.s, self.t, self.x, self.p]):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def sidecar_json(self) -> str:
        return json.dumps({
            "L": self.angular_momentum.tolist(),
            "A": self.runge_lenz.tolist(),
            "eccentricity": self.eccentricity,
            "collision_samples": int(self.collision.sum()),
        }, indent=1, sort_keys=True)


def orbit_from_alpha(alpha: CoherentParam, n_samples: int = 64) -> KeplerOrbit:
    """Sampled orbit at ``s = 2 pi j / n_samples``."""
    if n_samples < 16:
        raise ValueError("n_samples must be at least 16")
    s = 2.0 * np.pi * np.arange(n_samples) / n_samples
    om, dom, gap = _circle(alpha.re, alpha.im, s)
    x = _positions(om, dom, gap)
    coll = gap < _POLE_GAP
    with np.errstate(divide="ignore", invalid="ignore"):
        p = om[:, :3] / gap[:, None]
    p[coll] = np.nan
    t = s - alpha.re[3] * np.sin(s) - alpha.im[3] * (1.0 - np.cos(s))
    # conserved quantities from the sample farthest from the pole
    j = int(np.argmax(gap))
    r = gap[j]
    L = np.cross(x[j], p[j])
    A = np.cross(p[j], L) - x[j] / r
    return KeplerOrbit(alpha, s, t, x, p, coll, L, A)


def orbit_average(orbit: KeplerOrbit, observable: Callable[[np.ndarray], np.ndarray]) -> float:
    """``(1/2 pi) int_0^{2 pi} obs(x(t)) dt`` as the periodic trapezoid rule in ``s``."""
    return float(np.mean(observable(orbit.x) * orbit.radius))


def orbit_average_arrays(re: np.ndarray, im: np.ndarray, observable, n: int = 16) -> np.ndarray:
    """Vectorized orbit averages for labels of shape (M, 4).

    For observables linear in ``x`` the integrand is a trigonometric polynomial of degree 3,
    so any ``n >= 4`` is exact.
    """
    s = 2.0 * np.pi * np.arange(n) / n
    om, dom, gap = _circle(re, im, s)
    x = _positions(om, dom, gap)
    return np.mean(observable(x) * gap, axis=-1)


def kepler_time_average(L, A, observable, epsabs: float = 1e-13) -> float:
    """Oracle: average over physical time using Kepler's equation ``t = E - e sin E``.

    Semi-major axis 1 (energy -1/2), perihelion along ``A``, motion along ``L x A``.
    Perihelion sits at ``t = 0`` so a collision cusp falls on the interval ends.
    """
    L = np.asarray(L, dtype=float)
    A = np.asarray(A, dtype=float)
    e = float(np.linalg.norm(A))
    if e < 1e-14:
        ahat = np.array([1.0, 0, 0]) if abs(L[0]) < 0.9 * np.linalg.norm(L) else np.array([0, 1.0, 0])
        ahat = ahat - (ahat @ L) * L / (L @ L)
        ahat /= np.linalg.norm(ahat)
    else:
        ahat = A / e
    if np.linalg.norm(L) > 1e-14:
        qhat = np.cross(L, ahat)
        qhat /= np.linalg.norm(qhat)
    else:
        qhat = np.zeros(3)
    e = min(e, 1.0)
    b = math.sqrt(max(1.0 - e * e, 0.0))

    def ecc_anomaly(t):
        return brentq(lambda E: E - e * math.sin(E) - t, 0.0, 2.0 * math.pi, xtol=1e-15, rtol=1e-15)

    def integrand(t):
        E = ecc_anomaly(t)
        x = (math.cos(E) - e) * ahat + b * math.sin(E) * qhat
        return float(observable(x[None, :])[0])

    val, _ = quad(integrand, 0.0, 2.0 * math.pi, epsabs=epsabs, epsrel=1e-13, limit=400)
    return val / (2.0 * math.pi)


def pole_collision_alpha(rng: np.random.Generator) -> CoherentParam:
    """Collision label ``re = e_4``: the circle starts at the pole, so ``s = 0`` is the collision."""
    u = rng.standard_normal(3)
    return CoherentParam.from_vectors(np.array([0.0, 0.0, 0.0, 1.0]), np.append(u / np.linalg.norm(u), 0.0))


def collision_alpha(rng: np.random.Generator) -> CoherentParam:
    """A label whose great circle passes through the pole at a random phase.

    Samples may land arbitrarily close to the collision; there the energy residual is limited by
    rounding to about ``1e-16 / |x|^2`` because ``|p|^2/2`` and ``1/|x|`` cancel.
    """
    u = rng.standard_normal(3)
    v2 = np.append(u / np.linalg.norm(u), 0.0)
    v1 = np.array([0.0, 0.0, 0.0, 1.0])
    phi = rng.uniform(0.0, 2.0 * np.pi)
    re = math.cos(phi) * v1 + math.sin(phi) * v2
    im = -math.sin(phi) * v1 + math.cos(phi) * v2
    return CoherentParam.from_vectors(re, im)


# -- Liouville sampling ------------------------------------------------------------

def _surface_chunk(rng: np.random.Generator, size: int):
    re, im = sample_alpha_array(rng, size)
    s = np.empty(size)
    todo = np.arange(size)
    # rejection against |x(s)| <= 2 makes s uniform in physical time
    while todo.size:
        cand = rng.uniform(0.0, 2.0 * np.pi, todo.size)
        _, _, gap = _circle(re[todo], im[todo], cand[:, None])
        keep = rng.uniform(0.0, 2.0, todo.size) < gap[:, 0]
        s[todo[keep]] = cand[keep]
        todo = todo[~keep]
    om, dom, gap = _circle(re, im, s[:, None])
    x = _positions(om, dom, gap)[:, 0]
    p = om[:, 0, :3] / gap
    return x, p, re, im


def sample_surface(seed, size: int | None = None, chunk: int = DEFAULT_CHUNK, workers: int = 1):
    """Draw from the normalized Liouville measure on the energy surface.

    With ``size=None`` a single :class:`EnergySurfaceSample`; otherwise arrays ``(x, p, re, im)``
    where ``re, im`` are the orbit labels the points were drawn on.
    """
    if size is None:
        x, p, _, _ = _surface_chunk(np.random.default_rng(seed), 1)
        return EnergySurfaceSample(x[0], p[0])
    parts = map_chunks(_surface_chunk, size, seed, chunk, workers)
    return tuple(np.concatenate([q[i] for q in parts]) for i in range(4))


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    samples: int


def _x1(x):
    return x[..., 0]


def classical_samples(F: float, M: int, seed, chunk: int = DEFAULT_CHUNK, workers: int = 1) -> np.ndarray:
    """Orbit averages of ``F x_1`` for ``M`` labels drawn from the invariant measure."""
    def job(rng, size):
        re, im = sample_alpha_array(rng, size)
        return F * orbit_average_arrays(re, im, _x1)
    return np.concatenate(map_chunks(job, M, seed, chunk, workers))


def classical_functional(rho, F: float, M: int, seed, chunk: int = DEFAULT_CHUNK,
                         workers: int = 1) -> MCEstimate:
    vals = rho(classical_samples(F, M, seed, chunk, workers))
    return MCEstimate(float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(M)) if M > 1 else math.inf, M)


def classical_distribution(F: float, M: int, seed, chunk: int = DEFAULT_CHUNK,
                           workers: int = 1) -> EmpiricalDistribution:
    return EmpiricalDistribution.from_samples(classical_samples(F, M, seed, chunk, workers))
