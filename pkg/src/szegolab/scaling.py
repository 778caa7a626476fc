"""Complex-scaled hydrogen Stark Hamiltonian in a Coulomb-Sturmian basis.

Radial functions are ``b_k(r) = x^{1/2} ell_k^{2l+1}(x)`` with ``x = 2 kappa r`` and the
normalized Laguerre functions ``ell``. In this basis

* overlap ``S`` is tridiagonal,
* ``<1/r>`` is the identity,
* kinetic energy is ``n kappa I - (kappa^2/2) S`` with ``n = k + l + 1``,
* ``r`` between ``l`` and ``l+1`` is an exact Gauss-Laguerre sum.

The dilated operator ``e^{-2i theta} T - e^{-i theta}/r + e^{i theta} f x_3`` is assembled
per magnetic block and brought to an orthonormal basis by a real Cholesky factor, which
keeps it complex symmetric.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._laguerre import gauss_laguerre_scaled, laguerre_functions
from .eigen import EigenError, eigvals_qr, inverse_iteration
from .hydrogen import SemiclassicalConfig
from .stark import _cos_coeff, shell_spectrum

__all__ = [
    "SturmianBasis",
    "ScaledOperator",
    "EigenSolution",
    "ResonanceCluster",
    "ClusterError",
    "build_scaled_hamiltonian",
    "solve_eigen",
    "block_resonances",
    "extract_cluster",
    "resonance_cluster",
    "first_order_spread",
    "ThetaScan",
    "TraceReport",
    "TraceRow",
    "DEFAULT_TRACE_NMAX",
    "theta_independence_scan",
    "verify_trace_identity",
    "second_order_mean_shift",
    "resonances_to_csv",
    "THETA_MAX",
    "DIM_CAP",
]

log = logging.getLogger(__name__)

THETA_MAX = math.pi / 3
DIM_CAP = 2500
DEFAULT_TRACE_NMAX = (8, 10, 12, 16)


class ClusterError(RuntimeError):
    """The selected disk does not hold exactly ``N^2`` eigenvalues."""


@dataclass(frozen=True)
class SturmianBasis:
    kappa: float
    n_max: int
    l_max: int
    m: int = 0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be positive")
        if self.l_max < abs(self.m):
            raise ValueError("l_max must be at least |m|")

    @property
    def ls(self) -> range:
        return range(abs(self.m), self.l_max + 1)

    @property
    def dim(self) -> int:
        return len(self.ls) * self.n_max

    def with_m(self, m: int) -> "SturmianBasis":
        return SturmianBasis(self.kappa, self.n_max, self.l_max, m)

    def to_record(self) -> dict:
        return {"kappa": self.kappa, "n_max": self.n_max, "l_max": self.l_max, "m": self.m}


# -- radial blocks ----------------------------------------------------------------

def _overlap(n_max: int, l: int, kappa: float) -> np.ndarray:
    a = 2 * l + 1
    k = np.arange(n_max)
    S = np.diag(2.0 * k + a + 1.0)
    off = -np.sqrt((k[:-1] + 1.0) * (k[:-1] + a + 1.0))
    S += np.diag(off, 1) + np.diag(off, -1)
    return S / (2.0 * kappa)


@lru_cache(maxsize=256)
def _dipole_radial(n_max: int, l: int, kappa: float) -> np.ndarray:
    """``<b_k^{l} | r | b_k'^{l+1}>``; exact since the integrand is ``e^{-x}`` times a polynomial."""
    a = 2 * l + 1
    nodes = l + n_max + 4
    x, ws = gauss_laguerre_scaled(nodes)
    la = laguerre_functions(n_max - 1, a, x)
    lb = laguerre_functions(n_max - 1, a + 2, x)
    D = (la * (ws * x * x)) @ lb.T
    D /= (2.0 * kappa) ** 2
    D.setflags(write=False)
    return D


@dataclass(frozen=True)
class _Pieces:
    S: np.ndarray
    T: np.ndarray
    C: np.ndarray
    X: np.ndarray


@lru_cache(maxsize=64)
def _pieces(basis: SturmianBasis) -> _Pieces:
    n, ls, kappa, m = basis.n_max, list(basis.ls), basis.kappa, abs(basis.m)
    d = basis.dim
    S = np.zeros((d, d))
    T = np.zeros((d, d))
    X = np.zeros((d, d))
    for i, l in enumerate(ls):
        sl = slice(i * n, (i + 1) * n)
        Sl = _overlap(n, l, kappa)
        S[sl, sl] = Sl
        T[sl, sl] = np.diag(kappa * (np.arange(n) + l + 1.0)) - 0.5 * kappa * kappa * Sl
        if i + 1 < len(ls):
            sr = slice((i + 1) * n, (i + 2) * n)
            blk = _cos_coeff(l, m) * _dipole_radial(n, l, kappa)
            X[sl, sr] = blk
            X[sr, sl] = blk.T
    return _Pieces(S, T, np.eye(d), X)


@lru_cache(maxsize=64)
def _orthonormal_pieces(basis: SturmianBasis) -> _Pieces:
    P = _pieces(basis)
    Lc = np.linalg.cholesky(P.S)
    Li = np.linalg.inv(Lc)

    def tr(A):
        B = Li @ A @ Li.T
        return 0.5 * (B + B.T)

    return _Pieces(np.eye(basis.dim), tr(P.T), tr(P.C), tr(P.X))


# -- operator ------------------------------------------------------------------

@dataclass(frozen=True)
class ScaledOperator:
    config: SemiclassicalConfig
    theta: float
    basis: SturmianBasis
    field: float
    H: np.ndarray
    coulomb: bool = True

    @property
    def dim(self) -> int:
        return self.H.shape[0]


def build_scaled_hamiltonian(config: SemiclassicalConfig, theta: float, basis: SturmianBasis,
                             field: float | None = None, coulomb: bool = True,
                             dim_cap: int = DIM_CAP) -> ScaledOperator:
    """Orthonormalized ``e^{-2i theta} T - e^{-i theta}/r + e^{i theta} f x_3`` on one m-block.

    ``field`` defaults to the configuration's effective field; passing it explicitly uses it as an
    independent knob. ``coulomb=False`` drops the Coulomb term (pure Stark operator).
    """
    if not -THETA_MAX < theta < THETA_MAX:
        raise ValueError(f"theta must lie in (-pi/3, pi/3), got {theta}")
    if basis.l_max < config.N:
        raise ValueError(f"l_max={basis.l_max} is too small for shell N={config.N} (need l_max >= N)")
    if basis.dim > dim_cap:
        raise ValueError(f"block dimension {basis.dim} exceeds the cap {dim_cap}")
    f = config.effective_field if field is None else float(field)
    P = _orthonormal_pieces(basis)
    H = np.exp(-2j * theta) * P.T + np.exp(1j * theta) * f * P.X
    if coulomb:
        H = H - np.exp(-1j * theta) * P.C
    return ScaledOperator(config, float(theta), basis, f, H, coulomb)


# -- eigenvalues -----------------------------------------------------------------

@dataclass(frozen=True)
class EigenSolution:
    values: np.ndarray
    trace_error: float
    certified: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))


def solve_eigen(op: ScaledOperator | np.ndarray, center: complex | None = None, radius: float = 0.0,
                rtol: float = 1e-8, dim_cap: int = DIM_CAP) -> EigenSolution:
    """All eigenvalues by in-house Hessenberg QR.

    Eigenvalues within ``radius`` of ``center`` are certified by inverse iteration:
    ``||H v - lambda v|| <= rtol ||H||``. The eigenvalue sum is checked against the trace.
    """
    H = op.H if isinstance(op, ScaledOperator) else np.asarray(op, dtype=complex)
    if H.shape[0] > dim_cap:
        raise ValueError(f"dimension {H.shape[0]} exceeds the cap {dim_cap}")
    vals = eigvals_qr(H)
    norm = np.linalg.norm(H, 2) if H.size else 0.0
    terr = abs(np.sum(vals) - np.trace(H))
    if terr > 1e-8 * max(norm, 1.0):
        raise EigenError(f"eigenvalue sum misses the trace by {terr:.3e}")
    cert = np.zeros(0, dtype=complex)
    res = np.zeros(0)
    if center is not None:
        cert = vals[np.abs(vals - center) <= radius]
        res = np.empty(cert.size)
        for i, lam in enumerate(cert):
            v = inverse_iteration(H, lam)
            res[i] = np.linalg.norm(H @ v - lam * v)
        if np.any(res > rtol * norm):
            raise EigenError(f"cluster residual {res.max():.3e} exceeds {rtol} * ||H||")
    return EigenSolution(vals, float(terr), cert, res)


def block_resonances(config: SemiclassicalConfig, theta: float, basis: SturmianBasis,
                     field: float | None = None, m_values=None, radius: float | None = None):
    """Eigenvalues of every needed m-block; returns ``(values, m_labels, max_residual)``.

    The operator depends on ``|m|`` only, so each ``|m| > 0`` block is solved once and counted
    for ``+m`` and ``-m``.
    """
    N = config.N
    center = -0.5 / (N * N)
    ms = range(N) if m_values is None else sorted({abs(m) for m in m_values})
    rad = 1.0 / (8 * N ** 3) if radius is None else radius
    vals, labels, worst = [], [], 0.0
    for am in ms:
        op = build_scaled_hamiltonian(config, theta, basis.with_m(am), field)
        sol = solve_eigen(op, center, rad)
        worst = max(worst, float(sol.residuals.max(initial=0.0)))
        for sgn in ((1,) if am == 0 else (1, -1)):
            vals.append(sol.values)
            labels.append(np.full(sol.values.size, sgn * am))
    return np.concatenate(vals), np.concatenate(labels), worst


@dataclass(frozen=True)
class ResonanceCluster:
    N: int
    shifts: np.ndarray
    m: np.ndarray
    selection_radius: float

    @property
    def center(self) -> float:
        return -0.5 / (self.N * self.N)

    @property
    def count(self) -> int:
        return int(self.shifts.size)


def extract_cluster(eigs, N: int, selection_radius: float | None = None, m_labels=None,
                    factor: float = 1.0, expected_spread: float = 0.0) -> ResonanceCluster:
    """Eigenvalues within the selection disk about ``-1/(2N^2)``, as shifts.

    The default radius is ``factor / (8 N^3)``; when ``expected_spread`` (e.g. the first-order
    field splitting) exceeds it, the radius grows to three times that spread.
    """
    eigs = np.asarray(eigs, dtype=complex)
    center = -0.5 / (N * N)
    if selection_radius is None:
        selection_radius = factor / (8.0 * N ** 3)
        if expected_spread > selection_radius:
            log.warning("field spread %.3e exceeds contour radius %.3e; enlarging", expected_spread,
                        selection_radius)
            selection_radius = 3.0 * expected_spread
    dist = np.abs(eigs - center)
    inside = dist <= selection_radius
    if inside.sum() != N * N:
        outside = dist[~inside]
        nearest = float(outside.min()) if outside.size else math.inf
        raise ClusterError(f"cluster not separated: {int(inside.sum())} eigenvalues within "
                           f"{selection_radius:.3e} of {center:.6f} (expected {N * N}); nearest "
                           f"excluded at distance {nearest:.3e}")
    m = np.zeros(eigs.size, dtype=int) if m_labels is None else np.asarray(m_labels)
    order = np.lexsort(((eigs[inside] - center).imag, (eigs[inside] - center).real))
    return ResonanceCluster(N, (eigs[inside] - center)[order], m[inside][order], float(selection_radius))


def first_order_spread(N: int, field: float) -> float:
    return 1.5 * N * (N - 1) * abs(field)


def resonance_cluster(config: SemiclassicalConfig, theta: float, basis: SturmianBasis,
                      field: float | None = None) -> tuple[ResonanceCluster, float]:
    f = config.effective_field if field is None else field
    spread = first_order_spread(config.N, f)
    rad = max(1.0 / (8 * config.N ** 3), 3.0 * spread)
    vals, ms, worst = block_resonances(config, theta, basis, f, radius=rad)
    return extract_cluster(vals, config.N, m_labels=ms, expected_spread=spread), worst


# -- theta scan -----------------------------------------------------------------

@dataclass(frozen=True)
class ThetaScan:
    thetas: tuple
    max_distance: float
    clusters: tuple
    continuum_angle: tuple

    def to_json(self) -> str:
        return json.dumps({
            "thetas": list(self.thetas),
            "max_distance": self.max_distance,
            "continuum_angle": list(self.continuum_angle),
            "clusters": [[[z.real, z.imag] for z in c.shifts] for c in self.clusters],
        }, indent=1, sort_keys=True)


def _match_distance(a: np.ndarray, b: np.ndarray) -> float:
    if a.size != b.size:
        raise ClusterError(f"pairing failure: {a.size} vs {b.size} cluster members")
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max(initial=0.0))


def theta_independence_scan(config: SemiclassicalConfig, basis: SturmianBasis, theta_grid,
                            field: float | None = None) -> ThetaScan:
    """Cluster positions across ``theta``; the maximal matched displacement certifies stability.

    ``continuum_angle`` is the median argument of the positive-energy eigenvalues per ``theta``;
    it follows ``-2 theta`` while the cluster stays put.
    """
    thetas = tuple(float(t) for t in theta_grid)
    if any(not 0.05 < t < 1.0 for t in thetas):
        raise ValueError("theta values must lie in (0.05, 1.0)")
    f = config.effective_field if field is None else field
    spread = first_order_spread(config.N, f)
    rad = max(1.0 / (8 * config.N ** 3), 3.0 * spread)
    clusters, angles = [], []
    for t in thetas:
        vals, ms, _ = block_resonances(config, t, basis, f, radius=rad)
        clusters.append(extract_cluster(vals, config.N, m_labels=ms, expected_spread=spread))
        cont = vals[vals.real > 0]
        angles.append(float(np.median(np.angle(cont))) if cont.size else float("nan"))
    dmax = 0.0
    for c in clusters[1:]:
        dmax = max(dmax, _match_distance(clusters[0].shifts, c.shifts))
    return ThetaScan(thetas, dmax, tuple(clusters), tuple(angles))


# -- trace identity ----------------------------------------------------------------

def second_order_mean_shift(config: SemiclassicalConfig, basis: SturmianBasis, field: float) -> float:
    """``(1/d_N) Tr(Pi W R W Pi)`` at ``theta = 0`` in the same basis (numpy ``eigh``).

    ``R`` is the reduced resolvent of the field-free Hamiltonian at ``-1/(2N^2)``; this is the
    second-order mean shift of the cluster, the leading term by which the resonance mean departs
    from the first-order (traceless) shell matrix.
    """
    N = config.N
    E = -0.5 / (N * N)
    total = 0.0
    for am in range(N):
        P = _orthonormal_pieces(basis.with_m(am))
        w, V = np.linalg.eigh(P.T - P.C)
        shell = np.abs(w - E) < 1e-8
        if shell.sum() != N - am:
            raise ClusterError(f"m={am}: shell not resolved at theta = 0 ({shell.sum()} states)")
        Xe = V.T @ (field * P.X) @ V
        coup = Xe[np.ix_(shell, ~shell)]
        contrib = np.sum(coup ** 2 / (E - w[~shell])[None, :])
        total += contrib * (1 if am == 0 else 2)
    return float(total / (N * N))


@dataclass(frozen=True)
class TraceRow:
    n_max: int
    order: int
    resonance_side: complex
    quantum_side: float
    residual: complex
    second_order: float

    def to_dict(self) -> dict:
        return {"n_max": self.n_max, "m": self.order,
                "resonance_side": [self.resonance_side.real, self.resonance_side.imag],
                "quantum_side": self.quantum_side,
                "residual": [self.residual.real, self.residual.imag],
                "second_order_prediction": self.second_order}


@dataclass(frozen=True)
class TraceReport:
    N: int
    field: float
    theta: float
    rows: tuple
    budget: float
    refinement_steps: tuple

    def residuals(self, order: int = 1) -> list[complex]:
        return [r.residual for r in self.rows if r.order == order]

    @property
    def decreasing(self) -> bool:
        steps = self.refinement_steps
        return all(b < a for a, b in zip(steps, steps[1:])) if len(steps) > 1 else True

    @property
    def within_budget(self) -> bool:
        return abs(self.residuals(1)[-1]) <= self.budget

    def to_json(self) -> str:
        return json.dumps({"N": self.N, "field": self.field, "theta": self.theta,
                           "budget": self.budget, "refinement_steps": list(self.refinement_steps),
                           "decreasing": self.decreasing, "within_budget": self.within_budget,
                           "rows": [r.to_dict() for r in self.rows]}, indent=1, sort_keys=True)


def verify_trace_identity(config: SemiclassicalConfig, basis: SturmianBasis, field: float,
                          n_max_list=None, m_max: int = 3, theta: float = 0.3) -> TraceReport:
    """Resonance-side versus shell-matrix moments in the normalization ``nu / (h^2 eps)``.

    With an independent field knob ``f`` the normalization is ``h^2 eps = f N^2 / F``, under
    which the shell-matrix eigenvalues are exactly those of ``stark.shell_spectrum(N, F)``.

    The run reports, for ``m = 1``, the budget ``|P2| (1 + lam) + |last refinement change| + 1e-9``
    where ``P2`` is the second-order mean shift and ``lam = f N^5`` is the first-order spread over
    the level spacing. The mean of the first-order shifts vanishes, so the leading physical term
    is second order in ``f``; third order cancels by parity and the fourth-order remainder is
    ``O(lam^2)`` relative to ``P2``. ``refinement_steps`` are the successive changes of the
    ``m = 1`` residual as ``n_max`` grows.
    """
    N, F = config.N, config.F
    scale = F / (field * N * N)
    tau = shell_spectrum(N, F).values
    n_list = list(DEFAULT_TRACE_NMAX) if n_max_list is None else list(n_max_list)
    rows = []
    res1 = []
    pred = 0.0
    for nm in n_list:
        b = SturmianBasis(basis.kappa, nm, basis.l_max, 0)
        cl, _ = resonance_cluster(config, theta, b, field)
        nu = cl.shifts * scale
        pred = second_order_mean_shift(config, b, field) * scale
        for m in range(1, m_max + 1):
            lhs = complex(np.mean(nu ** m))
            rhs = float(np.mean(tau ** m))
            rows.append(TraceRow(nm, m, lhs, rhs, lhs - rhs, pred if m == 1 else float("nan")))
            if m == 1:
                res1.append(lhs - rhs)
    steps = tuple(float(abs(b - a)) for a, b in zip(res1, res1[1:]))
    lam = abs(field) * N ** 5
    budget = abs(pred) * (1.0 + lam) + (steps[-1] if steps else 0.0) + 1e-9
    return TraceReport(N, float(field), float(theta), tuple(rows), float(budget), steps)


# -- I/O ----------------------------------------------------------------------

def resonances_to_csv(vals, ms, N: int, theta: float, n_max: int, kappa: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re_z", "im_z", "abs_nu", "m", "theta", "n_max", "kappa"])
    center = -0.5 / (N * N)
    for z, m in zip(vals, ms):
        w.writerow([repr(float(z.real)), repr(float(z.imag)), repr(float(abs(z - center))), int(m),
                    repr(float(theta)), n_max, repr(float(kappa))])
    return buf.getvalue()
