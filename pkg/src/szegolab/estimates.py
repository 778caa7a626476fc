"""Checks of two operator inequalities for the Stark Hamiltonian with a complex field.

* Numerical range: for ``phi = arg`` of the complex field, every Rayleigh quotient ``w`` of
  ``-Delta/2 + e^{i phi} f x_3`` obeys ``Re w - cot(phi) Im w >= 0``.
* Quadratic estimate for ``h(alpha) = -Delta + alpha x_1``:
  ``||h psi||^2 + c(alpha)||psi||^2 >= beta(alpha)(||Delta psi||^2 + s ||x_1 psi||^2)``
  with ``s = 1`` (``form="plain"``) or ``s = |alpha|^2`` (``form="covariant"``).

The plain form fails for ``|alpha| < 1``: on wide Gaussians the left side grows like
``|alpha|^2 ||x_1 psi||^2`` while the right side grows like ``beta ||x_1 psi||^2``. The covariant
form is invariant under the dilation mapping ``h(alpha)`` to ``|alpha|^{2/3} h(alpha/|alpha|)``,
agrees with the plain one at ``|alpha| = 1`` and implies it for ``|alpha| >= 1``.

The quadratic estimate is tested on Gaussian-polynomial functions ``p(x) exp(-a|x|^2/2)``.
All norms are Gauss-Hermite sums that are exact for these functions, and the worst case over the
whole span of monomials up to a given degree is the smallest eigenvalue of a Hermitian form.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_hermite

from .hydrogen import SemiclassicalConfig
from .rng import map_chunks
from .scaling import SturmianBasis, _orthonormal_pieces

__all__ = [
    "c_alpha",
    "beta_alpha",
    "NumericalRangeReport",
    "numerical_range_check",
    "GaussPoly",
    "default_suite",
    "QuadraticNorms",
    "quadratic_norms",
    "QuadraticEstimateReport",
    "quadratic_estimate_check",
    "worst_case_margin",
    "DEFAULT_ALPHAS",
    "COVARIANT_ALPHAS",
]


# -- numerical range -------------------------------------------------------------

@dataclass(frozen=True)
class NumericalRangeReport:
    theta: float
    phi: float
    n_samples: int
    violations: int
    diagonal_violations: int
    min_margin: float
    tol: float

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=1, sort_keys=True)


def numerical_range_check(config: SemiclassicalConfig, theta: float, basis: SturmianBasis,
                          n_samples: int = 10_000, seed: int = 0, field: float | None = None,
                          tol: float = 1e-8, chunk: int = 2048) -> NumericalRangeReport:
    """Count Rayleigh quotients of the dilated free Stark operator outside the half-plane.

    The dilated operator is ``e^{-2i theta}(T + e^{3i theta} f X)``; ``w = e^{2i theta} z`` is the
    Rayleigh quotient of the bracket, a Stark operator with field angle ``phi = 3 theta``.
    Random unit vectors are spread evenly over the magnetic blocks ``|m| < N``; every basis vector
    is also checked.
    """
    phi = 3.0 * theta
    if not 0 < abs(phi) < math.pi / 3:
        raise ValueError(f"field angle 3*theta={phi:.4f} must satisfy 0 < |phi| < pi/3")
    f = config.effective_field if field is None else float(field)
    if f == 0.0:
        raise ValueError("numerical range check needs a nonzero field")
    cot = math.cos(phi) / math.sin(phi)
    blocks = []
    for am in range(config.N):
        P = _orthonormal_pieces(basis.with_m(am))
        K = np.exp(-2j * theta) * (P.T + np.exp(3j * theta) * f * P.X)
        blocks.append(K)
    scale = max(max(np.linalg.norm(K, 2) for K in blocks), 1.0)
    thresh = -tol * scale

    def margin(K, U):
        z = np.einsum("ij,ik,kj->j", U.conj(), K, U) / np.sum(np.abs(U) ** 2, axis=0)
        w = np.exp(2j * theta) * z
        return w.real - cot * w.imag

    diag_min, diag_bad = math.inf, 0
    for K in blocks:
        mg = margin(K, np.eye(K.shape[0], dtype=complex))
        diag_bad += int(np.sum(mg < thresh))
        diag_min = min(diag_min, float(mg.min()))

    def job(rng, size):
        which = rng.integers(0, len(blocks), size)
        out = np.empty(size)
        for b, K in enumerate(blocks):
            sel = np.flatnonzero(which == b)
            if sel.size:
                d = K.shape[0]
                U = rng.standard_normal((d, sel.size)) + 1j * rng.standard_normal((d, sel.size))
                out[sel] = margin(K, U)
        return out

    mg = np.concatenate(map_chunks(job, n_samples, seed, chunk))
    return NumericalRangeReport(float(theta), phi, int(n_samples), int(np.sum(mg < thresh)),
                                diag_bad, float(min(mg.min(), diag_min)), float(tol))


# -- quadratic estimate ----------------------------------------------------------

def c_alpha(alpha: complex) -> float:
    th = np.angle(alpha)
    return 1.5 * (1.0 - abs(math.cos(th))) ** 1.5 * abs(math.sin(th)) ** 1.5 * abs(alpha) ** (4.0 / 3.0)


def beta_alpha(alpha: complex) -> float:
    return 0.5 * (1.0 - abs(math.cos(np.angle(alpha))))


@dataclass(frozen=True)
class GaussPoly:
    """``psi(x) = sum_c coeff * x1^i x2^j x3^k * exp(-a |x|^2 / 2)``."""
    name: str
    a: float
    terms: tuple  # ((i, j, k), complex coefficient), ...

    @property
    def degree(self) -> int:
        return max(sum(e) for e, _ in self.terms)


def _monomial_data(exps, a, X):
    """Values of ``p``, the Laplacian bracket and ``x1 p`` for one monomial at nodes ``X`` (3, n)."""
    i, j, k = exps
    x, y, z = X

    def pw(t, e):
        return t ** e if e >= 0 else np.zeros_like(t)

    p = pw(x, i) * pw(y, j) * pw(z, k)
    lap = (i * (i - 1) * pw(x, i - 2) * pw(y, j) * pw(z, k)
           + j * (j - 1) * pw(x, i) * pw(y, j - 2) * pw(z, k)
           + k * (k - 1) * pw(x, i) * pw(y, j) * pw(z, k - 2))
    r2 = x * x + y * y + z * z
    # Delta(p g) / g = Delta p - 2a x.grad p + (a^2 r^2 - 3a) p, and x.grad p = (i+j+k) p
    bracket = lap - 2.0 * a * (i + j + k) * p + (a * a * r2 - 3.0 * a) * p
    return p, bracket, x * p


@lru_cache(maxsize=32)
def _grid(n: int, a: float):
    y, w = roots_hermite(n)
    y = y / math.sqrt(a)
    w = w / math.sqrt(a)
    X = np.array(list(itertools.product(y, y, y))).T
    W = np.prod(np.array(list(itertools.product(w, w, w))), axis=1)
    return X, W


@dataclass(frozen=True)
class QuadraticNorms:
    """Squared norms ``||psi||^2, ||Delta psi||^2, ||x_1 psi||^2`` and ``<Delta psi, x_1 psi>``."""
    psi: float
    lap: float
    x1: float
    cross: complex

    def h_norm2(self, alpha: complex) -> float:
        # ||(-Delta + alpha x1) psi||^2
        return float(self.lap + abs(alpha) ** 2 * self.x1 - 2.0 * (alpha * self.cross).real)

    def margin(self, alpha: complex, form: str = "plain") -> float:
        s = _x1_weight(alpha, form)
        return float(self.h_norm2(alpha) + c_alpha(alpha) * self.psi
                     - beta_alpha(alpha) * (self.lap + s * self.x1))


def _x1_weight(alpha: complex, form: str) -> float:
    if form == "plain":
        return 1.0
    if form == "covariant":
        return abs(alpha) ** 2
    raise ValueError(f"unknown form {form!r} (expected 'plain' or 'covariant')")


def _gram(exps_list, a, deg):
    X, W = _grid(deg + 3, float(a))
    cols = [_monomial_data(e, a, X) for e in exps_list]
    P = np.array([c[0] for c in cols])
    L = np.array([c[1] for c in cols])
    Q = np.array([c[2] for c in cols])
    G0 = (P * W) @ P.T
    GL = (L * W) @ L.T
    GX = (Q * W) @ Q.T
    GC = (L * W) @ Q.T
    return G0, GL, GX, GC


def quadratic_norms(psi: GaussPoly) -> QuadraticNorms:
    """Exact Gauss-Hermite norms (the integrands are polynomials times ``exp(-a|x|^2)``)."""
    exps = [e for e, _ in psi.terms]
    c = np.array([complex(v) for _, v in psi.terms])
    G0, GL, GX, GC = _gram(exps, psi.a, psi.degree)
    form = lambda G: complex(c.conj() @ G @ c)
    return QuadraticNorms(form(G0).real, form(GL).real, form(GX).real, form(GC))


def default_suite() -> list[GaussPoly]:
    """Named members: Gaussians of several widths, low-degree harmonics and complex mixtures."""
    suite = []
    for a in (0.25, 0.5, 1.0, 2.0, 4.0):
        suite += [
            GaussPoly(f"gauss_a{a}", a, (((0, 0, 0), 1.0),)),
            GaussPoly(f"x1_a{a}", a, (((1, 0, 0), 1.0),)),
            GaussPoly(f"x2_a{a}", a, (((0, 1, 0), 1.0),)),
            GaussPoly(f"x1x2_a{a}", a, (((1, 1, 0), 1.0),)),
            GaussPoly(f"r2_a{a}", a, (((2, 0, 0), 1.0), ((0, 2, 0), 1.0), ((0, 0, 2), 1.0))),
            GaussPoly(f"x1_plus_ix2_a{a}", a, (((1, 0, 0), 1.0), ((0, 1, 0), 1j))),
            GaussPoly(f"one_plus_ix1_a{a}", a, (((0, 0, 0), 1.0), ((1, 0, 0), 1j))),
            GaussPoly(f"one_minus_x1_a{a}", a, (((0, 0, 0), 1.0), ((1, 0, 0), -1.0))),
            GaussPoly(f"x1cubed_mix_a{a}", a, (((3, 0, 0), 1.0), ((1, 0, 0), -1.5 + 0.5j),
                                               ((0, 0, 1), 0.25j))),
            GaussPoly(f"quartic_a{a}", a, (((4, 0, 0), 1.0), ((2, 2, 0), -1j), ((0, 0, 0), 0.3))),
        ]
    return suite


def _monomials(deg: int):
    return [e for e in itertools.product(range(deg + 1), repeat=3) if sum(e) <= deg]


def worst_case_margin(alpha: complex, a: float, deg: int, form: str = "plain") -> float:
    """Smallest eigenvalue of the margin form on the span of ``x^e exp(-a|x|^2/2)``, ``|e| <= deg``.

    The form is normalized by the Gram matrix (a generalized eigenproblem), so the value is the
    worst margin per unit ``||psi||^2`` over every Gaussian-polynomial of that width and degree.
    """
    from scipy.linalg import eigh

    exps = _monomials(deg)
    G0, GL, GX, GC = _gram(exps, a, deg)
    al = complex(alpha)
    Hm = GL + abs(al) ** 2 * GX - (al * GC + np.conj(al) * GC.T)
    Q = Hm + c_alpha(al) * G0 - beta_alpha(al) * (GL + _x1_weight(al, form) * GX)
    Q = 0.5 * (Q + Q.conj().T)
    # orthonormalize the monomials first; the raw Gram matrix is badly conditioned
    s, V = np.linalg.eigh(G0)
    keep = s > s.max() * 1e-13
    B = V[:, keep] / np.sqrt(s[keep])
    return float(eigh(B.conj().T @ Q @ B, eigvals_only=True)[0])


@dataclass(frozen=True)
class QuadraticEstimateReport:
    alphas: tuple
    form: str
    margins: dict           # name -> list of margins, one per alpha
    worst_case: dict        # "alpha|a|deg" -> smallest normalized margin
    c_ratio: float          # c(8 e^{i t}) / c(e^{i t})

    @property
    def min_margin(self) -> float:
        vals = [m for ms in self.margins.values() for m in ms]
        return float(min(vals))

    @property
    def min_worst_case(self) -> float:
        return float(min(self.worst_case.values())) if self.worst_case else math.inf

    def to_json(self) -> str:
        return json.dumps({
            "alphas": [[z.real, z.imag] for z in self.alphas],
            "form": self.form,
            "margins": self.margins,
            "worst_case": self.worst_case,
            "c_ratio": self.c_ratio,
            "min_margin": self.min_margin,
            "min_worst_case": self.min_worst_case,
        }, indent=1, sort_keys=True)


# |alpha| >= 1, where the plain form is meaningful
DEFAULT_ALPHAS = (1j, 8j, np.exp(0.25j * math.pi), 3.0 * np.exp(2.5j), 2.0 * np.exp(-1.0j),
                  20.0 * np.exp(0.05j), np.exp(-3.0j))
# adds weak fields, the regime of the semiclassical application
COVARIANT_ALPHAS = DEFAULT_ALPHAS + (0.1 * np.exp(-1.0j), 1e-3 * np.exp(0.7j), 1e-6j)


def quadratic_estimate_check(alpha_field=None, suite=None, span_degrees=(2, 4),
                             span_widths=(0.5, 1.0, 2.0), form: str = "plain") -> QuadraticEstimateReport:
    """Margins of the quadratic estimate for each suite member and each ``alpha``.

    Besides the named functions, the worst case over whole monomial spans is reported.
    """
    if alpha_field is None:
        alphas = tuple(complex(z) for z in (DEFAULT_ALPHAS if form == "plain" else COVARIANT_ALPHAS))
    else:
        alphas = tuple(complex(z) for z in np.atleast_1d(alpha_field))
    for z in alphas:
        if z.imag == 0.0:
            raise ValueError("alpha must have a nonzero imaginary part")
    suite = default_suite() if suite is None else list(suite)
    margins = {}
    for psi in suite:
        nm = quadratic_norms(psi)
        margins[psi.name] = [nm.margin(z, form) for z in alphas]
    worst = {}
    for z in alphas:
        for a in span_widths:
            for d in span_degrees:
                worst[f"{z.real:.6g}{z.imag:+.6g}j|{a}|{d}"] = worst_case_margin(z, a, d, form)
    t = np.angle(alphas[0])
    ratio = c_alpha(8.0 * np.exp(1j * t)) / c_alpha(np.exp(1j * t))
    return QuadraticEstimateReport(alphas, form, margins, worst, float(ratio))
