"""Shell-projected Stark matrix, its cluster spectrum, and moment traces.

All matrices here are already rescaled: the entries are those of
``(F / N^2) Pi_N (x . dir) Pi_N``, so their eigenvalues are directly the
normalized cluster shifts. No small physical prefactors are ever formed.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .distributions import EmpiricalDistribution
from .eigen import jacobi_eigh, residual_norms, EigenError
from .hydrogen import QuadratureError, radial_integral, shell_labels

__all__ = [
    "ShellMatrix",
    "ClusterSpectrum",
    "TestFunction",
    "build_shell_matrix",
    "parabolic_oracle",
    "diagonalize_shell",
    "quantum_moment",
    "quantum_distribution",
    "test_function",
    "szego_compare",
    "DEFAULT_N_CAP",
]

DEFAULT_N_CAP = 48


@dataclass(frozen=True)
class ShellMatrix:
    N: int
    F: float
    field_dir: tuple
    entries: np.ndarray
    scaling: str = "(F/N^2) * Pi_N (x.dir) Pi_N"

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class ClusterSpectrum:
    """Sorted scaled shifts of shell ``N`` (length ``N**2``) and the unperturbed level."""

    N: int
    values: np.ndarray
    center: float = field(default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "values", np.sort(np.asarray(self.values, dtype=float)))
        object.__setattr__(self, "center", -0.5 / (self.N * self.N))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "eigenvalue"])
        for i, v in enumerate(self.values):
            w.writerow([i, repr(float(v))])
        return buf.getvalue()


# -- angular factors -------------------------------------------------------

def _cos_coeff(l: int, m: int) -> float:
    # <l+1, m | cos theta | l, m>
    return math.sqrt(((l + 1) ** 2 - m * m) / ((2 * l + 1) * (2 * l + 3)))


def _sin_plus(l: int, m: int, up: bool) -> float:
    # <l +/- 1, m+1 | sin theta e^{i phi} | l, m>  (Condon-Shortley phases)
    if up:
        return -math.sqrt((l + m + 1) * (l + m + 2) / ((2 * l + 1) * (2 * l + 3)))
    if l == 0:
        return 0.0
    return math.sqrt((l - m) * (l - m - 1) / ((2 * l - 1) * (2 * l + 1)))


def _sin_minus(l: int, m: int, up: bool) -> float:
    # <l +/- 1, m-1 | sin theta e^{-i phi} | l, m>
    if up:
        return math.sqrt((l - m + 1) * (l - m + 2) / ((2 * l + 1) * (2 * l + 3)))
    if l == 0:
        return 0.0
    return -math.sqrt((l + m) * (l + m - 1) / ((2 * l - 1) * (2 * l + 1)))


def angular_matrices(lmax: int) -> tuple[np.ndarray, np.ndarray, list[tuple[int, int]]]:
    """Matrices of ``cos theta`` and ``sin theta cos phi`` on ``Y_lm``, ``l <= lmax``."""
    labels = [(l, m) for l in range(lmax + 1) for m in range(-l, l + 1)]
    index = {lm: i for i, lm in enumerate(labels)}
    n = len(labels)
    c3 = np.zeros((n, n))
    c1 = np.zeros((n, n))
    for (l, m), j in index.items():
        if l + 1 <= lmax:
            i = index[(l + 1, m)]
            c3[i, j] = c3[j, i] = _cos_coeff(l, m)
        for up in (True, False):
            lp = l + 1 if up else l - 1
            if lp < 0 or lp > lmax:
                continue
            if abs(m + 1) <= lp:
                c1[index[(lp, m + 1)], j] += 0.5 * _sin_plus(l, m, up)
            if abs(m - 1) <= lp:
                c1[index[(lp, m - 1)], j] += 0.5 * _sin_minus(l, m, up)
    return c3, c1, labels


# -- shell matrix ------------------------------------------------------------

@lru_cache(maxsize=128)
def _radial_r(N: int) -> tuple:
    """``<N, l | r | N, l+1>`` for ``l = 0..N-2``, with a doubled-node convergence check."""
    out = []
    for l in range(N - 1):
        a = radial_integral(N, l, N, l + 1, 1)
        b = radial_integral(N, l, N, l + 1, 1, nodes=2 * (4 * N + 22))
        if abs(a - b) > 1e-11 * max(1.0, abs(b)):
            raise QuadratureError(f"radial dipole integral N={N}, l={l} unconverged: {a!r} vs {b!r}")
        out.append(b)
    return tuple(out)


def _unit(field_dir) -> np.ndarray:
    d = np.asarray(field_dir, dtype=float)
    nrm = np.linalg.norm(d)
    if d.shape != (3,) or nrm == 0:
        raise ValueError("field_dir must be a nonzero 3-vector")
    d = d / nrm
    if abs(d[1]) > 1e-14:
        raise ValueError("field_dir must lie in the x1-x3 plane (keeps the matrix real)")
    return d


def build_shell_matrix(N: int, F: float, field_dir=(0.0, 0.0, 1.0), cap: int = DEFAULT_N_CAP) -> ShellMatrix:
    """Scaled Stark matrix on shell ``N`` in the canonical spherical-label order."""
    if N < 1:
        raise ValueError("N must be positive")
    if N > cap:
        raise ValueError(f"N={N} exceeds the cap {cap}")
    if not F > 0:
        raise ValueError("F must be positive")
    d = _unit(field_dir)
    labels = shell_labels(N)
    dim = len(labels)
    if N == 1:
        return ShellMatrix(N, float(F), tuple(d), np.zeros((1, 1)))
    c3, c1, ang = angular_matrices(N - 1)
    rad = _radial_r(N)
    # radial factor attached to the (l, l') pair; zero unless |l - l'| = 1
    lvals = np.array([l for l, _ in ang])
    lo = np.minimum.outer(lvals, lvals)
    R = np.zeros((dim, dim))
    adj = np.abs(np.subtract.outer(lvals, lvals)) == 1
    R[adj] = np.asarray(rad)[lo[adj]]
    ang_mat = d[2] * c3 + d[0] * c1
    M = (F / (N * N)) * R * ang_mat
    return ShellMatrix(N, float(F), tuple(d), M)


# -- parabolic oracle --------------------------------------------------------

@lru_cache(maxsize=None)
def _parabolic_moment(k: int, m: int, j: int) -> int:
    """``int_0^inf u^{m+j} e^{-u} L_k^m(u)^2 du`` as an exact integer."""
    total = 0
    coef = [math.comb(k + m, k - i) for i in range(k + 1)]
    fact = [math.factorial(i) for i in range(k + 1)]
    for i in range(k + 1):
        for ip in range(k + 1):
            num = coef[i] * coef[ip] * math.factorial(m + j + i + ip)
            term = num // (fact[i] * fact[ip])
            total += term if (i + ip) % 2 == 0 else -term
    return total


def parabolic_z(n1: int, n2: int, m: int) -> tuple[int, int]:
    """``<z>`` in the parabolic state ``(n1, n2, m)`` as an exact fraction ``(num, den)``.

    With ``z = (xi - eta)/2`` and volume ``(xi + eta)/4``, separation gives
    ``<z> = (n/2) (M2 M0' - M0 M2') / (M1 M0' + M0 M1')`` where ``M_j`` are the
    weighted Laguerre moments of the two factors.
    """
    m = abs(m)
    n = n1 + n2 + m + 1
    a = [_parabolic_moment(n1, m, j) for j in range(3)]
    b = [_parabolic_moment(n2, m, j) for j in range(3)]
    num = n * (a[2] * b[0] - a[0] * b[2])
    den = 2 * (a[1] * b[0] + a[0] * b[1])
    g = math.gcd(num, den)
    return num // g, den // g


def parabolic_oracle(N: int, F: float) -> ClusterSpectrum:
    """Cluster spectrum from first-order perturbation theory in the parabolic basis."""
    if N < 1:
        raise ValueError("N must be positive")
    vals = []
    for m in range(-(N - 1), N):
        for n1 in range(N - abs(m)):
            n2 = N - 1 - abs(m) - n1
            num, den = parabolic_z(n1, n2, m)
            vals.append(F / (N * N) * num / den)
    return ClusterSpectrum(N, np.array(vals))


# -- diagonalization ---------------------------------------------------------

def diagonalize_shell(matrix: ShellMatrix, rtol: float = 1e-10) -> ClusterSpectrum:
    """Jacobi diagonalization block by block (connected components of the sparsity graph)."""
    M = matrix.entries
    scale = np.linalg.norm(M, 2) if M.size > 1 else abs(M[0, 0])
    ncomp, comp = connected_components(M != 0, directed=False)
    vals = np.empty(M.shape[0])
    for c in range(ncomp):
        idx = np.flatnonzero(comp == c)
        blk = M[np.ix_(idx, idx)]
        w, v = jacobi_eigh(blk)
        if np.any(residual_norms(blk, w, v) > rtol * max(scale, np.finfo(float).tiny)):
            raise EigenError(f"shell N={matrix.N}: Jacobi residual above {rtol} * ||M||")
        vals[idx] = w
    return ClusterSpectrum(matrix.N, vals)


@lru_cache(maxsize=64)
def _unit_spectrum(N: int) -> np.ndarray:
    # spectrum at F = 1; eigenvalues are linear in F
    v = diagonalize_shell(build_shell_matrix(N, 1.0)).values
    v.setflags(write=False)
    return v


def shell_spectrum(N: int, F: float) -> ClusterSpectrum:
    return ClusterSpectrum(N, F * _unit_spectrum(N))


def quantum_moment(N: int, F: float, m: int) -> float:
    if m < 1:
        raise ValueError("moment order must be positive")
    v = shell_spectrum(N, F).values
    return float(np.mean(v ** m))


def quantum_distribution(N: int, F: float) -> EmpiricalDistribution:
    v = shell_spectrum(N, F).values
    return EmpiricalDistribution(v, np.full(v.size, 1.0 / v.size))


# -- Szego comparison --------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """Power series ``sum c_k s^k`` truncated at ``len(coeffs) - 1``.

    ``radius`` is the declared radius of convergence, ``tail_bound`` a certified
    bound on the discarded tail over ``|s| <= 2F``.
    """

    name: str
    coeffs: tuple
    radius: float
    tail_bound: float = 0.0

    def __call__(self, s):
        return np.polynomial.polynomial.polyval(np.asarray(s, dtype=float), np.asarray(self.coeffs))


def test_function(name: str, F: float) -> TestFunction:
    """Built-in test functions: ``one``, ``s``, ``s2``, ``s3``, ``s4``, ``exp``."""
    poly = {"one": (1.0,), "s": (0.0, 1.0), "s2": (0.0, 0.0, 1.0),
            "s3": (0.0, 0.0, 0.0, 1.0), "s4": (0.0, 0.0, 0.0, 0.0, 1.0)}
    if name in poly:
        return TestFunction(name, poly[name], math.inf)
    if name == "exp":
        deg = 20
        c = tuple((1.0 / (3.0 * F)) ** k / math.factorial(k) for k in range(deg + 1))
        # on |s| <= 2F the argument is at most 2/3; bound the tail by a geometric majorant
        x = 2.0 / 3.0
        first = x ** (deg + 1) / math.factorial(deg + 1)
        tail = first / (1.0 - x / (deg + 2))
        return TestFunction("exp", c, math.inf, tail)
    raise ValueError(f"unknown test function {name!r}")


def szego_compare(N_list: Sequence[int], F: float, rhos: Sequence[TestFunction],
                  classical: Callable[[TestFunction], tuple[float, float]]) -> list[dict]:
    """Quantum versus classical functionals, one row per ``(N, rho)``.

    ``classical(rho)`` returns ``(value, standard_error)`` and is evaluated once per rho.
    """
    if not N_list:
        raise ValueError("empty N list")
    for rho in rhos:
        if rho.radius < 3.0 * F:
            raise ValueError(f"test function {rho.name!r}: radius {rho.radius} < 3F = {3 * F}")
    cl = {rho.name: classical(rho) for rho in rhos}
    rows = []
    for N in N_list:
        dist = quantum_distribution(N, F)
        for rho in rhos:
            q = dist.expect(rho)
            c, se = cl[rho.name]
            rows.append({"N": int(N), "rho": rho.name, "quantum": q, "classical": c,
                         "diff": q - c, "stderr": se, "tail_bound": rho.tail_bound})
    return rows


def report_json(rows: list[dict]) -> str:
    return json.dumps(rows, indent=1, sort_keys=True)
