"""Normalized Laguerre functions and overflow-free Gauss-Laguerre rules.

Every radial integral in the package has the form ``int_0^inf e^{-x} P(x) dx``
with ``P`` a polynomial whose raw coefficients overflow double precision
for the shell sizes we care about (n ~ 50). We therefore never form raw
Laguerre polynomials. Instead we work with the orthonormal functions

    ell_k^a(x) = sqrt(k! / Gamma(k + a + 1)) x^{a/2} e^{-x/2} L_k^a(x),

which stay O(1) and obey a stable three-term recurrence, and with the
*scaled* Gauss-Laguerre weights ``w_i e^{x_i}`` obtained from the
Christoffel function.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import gammaln, roots_laguerre


def laguerre_functions(kmax: int, alpha: float, x) -> np.ndarray:
    """Return ``ell_k^alpha(x)`` for ``k = 0..kmax`` as an array of shape (kmax+1, *x.shape).

    Complex ``x`` is accepted (principal branch for ``x^{alpha/2}``); this is the analytic
    continuation used for complex-dilated radial functions.
    """
    x = np.asarray(x)
    x = x.astype(complex) if np.iscomplexobj(x) else x.astype(float)
    out = np.empty((kmax + 1,) + x.shape, dtype=x.dtype)
    with np.errstate(divide="ignore"):
        logx = np.log(x)
    log0 = 0.5 * alpha * logx - 0.5 * x - 0.5 * gammaln(alpha + 1.0)
    if alpha == 0:
        log0 = np.where(x == 0, -0.5 * gammaln(1.0), log0)
    out[0] = np.exp(log0)
    if kmax == 0:
        return out
    out[1] = (1.0 + alpha - x) * out[0] / np.sqrt(1.0 + alpha)
    for k in range(1, kmax):
        out[k + 1] = ((2 * k + alpha + 1 - x) * out[k]
                      - np.sqrt(k * (k + alpha)) * out[k - 1]) / np.sqrt((k + 1) * (k + alpha + 1))
    return out


@lru_cache(maxsize=64)
def gauss_laguerre_scaled(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes ``x_i`` and scaled weights ``w_i e^{x_i}`` of the n-point Gauss-Laguerre rule.

    ``sum(ws * g(x))`` integrates ``g(x) = e^{-x} P(x)`` exactly for deg P < 2n.
    """
    with np.errstate(all="ignore"):  # scipy's own weights overflow for large n; only nodes are used
        x, _ = roots_laguerre(n)
    ell = laguerre_functions(n - 1, 0.0, x)
    ws = 1.0 / np.sum(ell * ell, axis=0)
    x.setflags(write=False)
    ws.setflags(write=False)
    return x, ws
