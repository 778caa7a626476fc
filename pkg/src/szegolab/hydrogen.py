"""Exact hydrogen bound-state data in atomic units.

Shell degeneracies, Bohr levels, radial eigenfunctions and their moments,
plus :class:`SemiclassicalConfig`, the bundle tying the shell index ``N``
to the Planck parameter ``h = 1/N`` and the weak-field schedule
``epsilon = h**(K + delta)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._laguerre import gauss_laguerre_scaled, laguerre_functions

__all__ = [
    "SemiclassicalConfig",
    "SphericalLabel",
    "ParabolicLabel",
    "QuadratureError",
    "shell_dimension",
    "shell_labels",
    "bohr_eigenvalue",
    "radial_moment",
    "radial_moment_oracle",
    "radial_eigenfunction",
    "radial_integral",
]


class QuadratureError(RuntimeError):
    """Two quadrature resolutions disagree beyond tolerance."""


@dataclass(frozen=True)
class SemiclassicalConfig:
    """Global parameter bundle.

    Only ``N, F, K, delta`` are stored; everything else is derived so the
    identities ``h*N == 1`` and ``epsilon == h**(K+delta)`` cannot drift.
    """

    N: int
    F: float
    K: int = 6
    delta: float = 0.5

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not self.F > 0:
            raise ValueError(f"F must be positive, got {self.F!r}")
        if int(self.K) != self.K or self.K < 6:
            raise ValueError(f"K must be an integer >= 6, got {self.K!r}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def epsilon(self) -> float:
        return self.h ** (self.K + self.delta)

    @property
    def effective_field(self) -> float:
        return self.h ** 4 * self.epsilon * self.F

    def to_record(self) -> dict:
        return {"N": int(self.N), "F": float(self.F), "K": int(self.K), "delta": float(self.delta)}

    @classmethod
    def from_record(cls, rec: dict) -> "SemiclassicalConfig":
        return cls(N=int(rec["N"]), F=float(rec["F"]), K=int(rec.get("K", 6)),
                   delta=float(rec.get("delta", 0.5)))


@dataclass(frozen=True, order=True)
class SphericalLabel:
    n: int
    l: int
    m: int

    def __post_init__(self):
        if self.n < 1 or not 0 <= self.l <= self.n - 1 or abs(self.m) > self.l:
            raise ValueError(f"invalid spherical label {self}")


@dataclass(frozen=True, order=True)
class ParabolicLabel:
    n1: int
    n2: int
    m: int

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError(f"invalid parabolic label {self}")

    @property
    def n(self) -> int:
        return self.n1 + self.n2 + abs(self.m) + 1


def shell_dimension(N: int) -> int:
    return N * N


def shell_labels(N: int) -> list[SphericalLabel]:
    """Spherical labels of shell ``N`` in the canonical order (l ascending, then m ascending)."""
    return [SphericalLabel(N, l, m) for l in range(N) for m in range(-l, l + 1)]


def bohr_eigenvalue(k: int, h: float = 1.0) -> float:
    """``E_k(h) = -1 / (2 h^2 k^2)``."""
    return -1.0 / (2.0 * h * h * k * k)


def _check_label(n: int, l: int):
    if n < 1 or not 0 <= l <= n - 1:
        raise ValueError(f"need 0 <= l <= n-1, got n={n}, l={l}")


def radial_moment(n: int, l: int, k: int) -> float:
    """``<r^k>`` in the state ``(n, l)``, by the upward Kramers-type recursion.

    Seeded with ``<r^0> = 1`` and ``<r> = (3n^2 - l(l+1)) / 2``; for ``j >= 2``

        <r^j> = n^2 (2j+1)/(j+1) <r^{j-1}> - n^2 j/(4(j+1)) [(2l+1)^2 - j^2] <r^{j-2}>.
    """
    _check_label(n, l)
    if k < 0:
        raise ValueError("negative moments are not supported")
    prev, cur = 1.0, 0.5 * (3 * n * n - l * (l + 1))
    if k == 0:
        return prev
    n2 = float(n * n)
    for j in range(2, k + 1):
        nxt = n2 * (2 * j + 1) / (j + 1) * cur - n2 * j / (4.0 * (j + 1)) * ((2 * l + 1) ** 2 - j * j) * prev
        prev, cur = cur, nxt
    return cur


def _radial_prefactor(n: int) -> float:
    # R_nl(r) = sqrt((2/n)^3 / (2n)) * ell_{n-l-1}^{2l+1}(rho) / sqrt(rho),  rho = 2r/n
    return math.sqrt((2.0 / n) ** 3 / (2.0 * n))


def radial_eigenfunction(n: int, l: int, r) -> np.ndarray:
    """Normalized radial function ``R_nl(r) = e^{-r/n} F_nl(r)``.

    With the modern (scipy) Laguerre convention, ``F_nl = A (2r/n)^l L^{2l+1}_{n-l-1}(2r/n)``
    with ``A = (2/n^2) sqrt((n-l-1)!/(n+l)!)``; this equals the older-convention constant
    carrying ``[(n+l)!]^3`` once ``L_old = (n+l)! L_new`` is substituted. Evaluated through
    the normalized Laguerre functions so that large ``n`` does not overflow. Complex ``r``
    returns the analytic continuation.
    """
    _check_label(n, l)
    r = np.asarray(r)
    r = r.astype(complex) if np.iscomplexobj(r) else r.astype(float)
    rho = 2.0 * r / n
    ell = laguerre_functions(n - l - 1, 2 * l + 1, rho)[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        val = _radial_prefactor(n) * ell / np.sqrt(rho)
    if l == 0:
        # ell_{n-1}^1 / sqrt(rho) -> sqrt(n) at the origin
        at0 = _radial_prefactor(n) * math.sqrt(n)
        val = np.where(rho == 0, at0, val)
    else:
        val = np.where(rho == 0, 0.0, val)
    return val


def _default_nodes(n: int, k: int) -> int:
    return 4 * n + 2 * k + 20


def radial_integral(n1: int, l1: int, n2: int, l2: int, power: float, nodes: int | None = None,
                    lower: float = 0.0) -> float:
    """``int_lower^inf R_{n1 l1} R_{n2 l2} r^{power+2} dr`` by scaled Gauss-Laguerre quadrature.

    When ``n1 == n2`` the integrand is ``e^{-2r/n}`` times a polynomial, which the rule
    integrates exactly for a sufficient node count; distinct ``n`` use the mean decay rate
    and are only spectrally accurate.
    """
    _check_label(n1, l1)
    _check_label(n2, l2)
    kappa = 1.0 / n1 + 1.0 / n2  # total decay rate of the product
    if nodes is None:
        nodes = _default_nodes(max(n1, n2), int(np.ceil(abs(power))))
    u, ws = gauss_laguerre_scaled(nodes)
    r = lower + u / kappa
    f = radial_eigenfunction(n1, l1, r) * radial_eigenfunction(n2, l2, r) * r ** (power + 2)
    return float(np.sum(ws * f) / kappa)


def radial_moment_oracle(n: int, l: int, k: int, rtol: float = 1e-12) -> float:
    """``<r^k>_{nl}`` by direct Gauss-Laguerre quadrature of ``R_nl^2 r^{k+2}``.

    The rule is run at the default node count ``4n + 2k + 20`` and again at twice that;
    :class:`QuadratureError` is raised if they disagree beyond ``rtol``.
    """
    if k < 0:
        raise ValueError("negative moments are not supported")
    m = _default_nodes(n, k)
    a = radial_integral(n, l, n, l, k, nodes=m)
    b = radial_integral(n, l, n, l, k, nodes=2 * m)
    if abs(a - b) > rtol * max(abs(b), 1e-300):
        raise QuadratureError(f"radial moment ({n},{l},{k}) unconverged: {a!r} vs {b!r}")
    return b
