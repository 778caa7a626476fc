"""Dense eigensolvers written out in full.

* :func:`jacobi_eigh` -- cyclic Jacobi for real symmetric matrices, with
  accumulated eigenvectors and a residual certificate.
* :func:`eigvals_qr` -- balancing, Householder reduction to Hessenberg form and
  single-shift complex QR with Wilkinson shifts and deflation, for arbitrary
  (in particular complex symmetric, non-Hermitian) matrices.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "EigenError",
    "jacobi_eigh",
    "balance",
    "hessenberg",
    "eigvals_qr",
    "inverse_iteration",
    "residual_norms",
]

_EPS = np.finfo(float).eps


class EigenError(RuntimeError):
    """Iteration cap reached without convergence."""


def jacobi_eigh(a, tol: float = 1e-15, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a real symmetric matrix."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v
    for sweep in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off <= tol * scale:
            break
        thresh = 0.2 * off / (n * n) if sweep < 3 else 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= thresh or apq == 0.0:
                    continue
                app, aqq = a[p, p], a[q, q]
                if abs(apq) < _EPS * 1e-3 * min(abs(app), abs(aqq)):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise EigenError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = a.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def residual_norms(a, w, v) -> np.ndarray:
    """``||A v_i - w_i v_i||`` for every column."""
    a = np.asarray(a)
    return np.linalg.norm(a @ v - v * w, axis=0)


def balance(a, max_iter: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal similarity ``D^{-1} A D`` by powers of two equalizing row and column norms."""
    a = np.array(a, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise EigenError("matrix has non-finite entries")
    n = a.shape[0]
    d = np.ones(n)
    for _ in range(max_iter):
        converged = True
        for i in range(n):
            # off-diagonal sums taken directly; "total minus diagonal" can round below zero
            c = np.sum(np.abs(a[:i, i])) + np.sum(np.abs(a[i + 1:, i]))
            r = np.sum(np.abs(a[i, :i])) + np.sum(np.abs(a[i, i + 1:]))
            if c == 0.0 or r == 0.0:
                continue
            f = 1.0
            s = c + r
            while c < r / 2.0:
                c *= 2.0
                r /= 2.0
                f *= 2.0
            while c >= r * 2.0:
                c /= 2.0
                r *= 2.0
                f /= 2.0
            if c + r < 0.95 * s:
                converged = False
                d[i] *= f
                a[:, i] *= f
                a[i, :] /= f
        if converged:
            break
    return a, d


def hessenberg(a) -> np.ndarray:
    """Upper Hessenberg matrix unitarily similar to ``a`` (Householder reflections)."""
    h = np.array(a, dtype=complex)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        u = x
        u[0] += phase * alpha
        u /= np.linalg.norm(u)
        # H <- P H P with P = I - 2 u u^*
        h[k + 1:, k:] -= 2.0 * np.outer(u, u.conj() @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ u, u.conj())
        h[k + 2:, k] = 0.0
    return h


def _wilkinson(a, b, c, d) -> complex:
    # eigenvalue of [[a, b], [c, d]] closer to d
    tr = 0.5 * (a + d)
    disc = np.sqrt((0.5 * (a - d)) ** 2 + b * c)
    l1, l2 = tr + disc, tr - disc
    return l1 if abs(l1 - d) < abs(l2 - d) else l2


def eigvals_qr(a, max_iter_per_eig: int = 60, do_balance: bool = True) -> np.ndarray:
    """All eigenvalues of a square matrix by shifted Hessenberg QR.

    Raises :class:`EigenError` naming the active window when an eigenvalue fails to
    deflate within ``max_iter_per_eig`` iterations.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if n == 0:
        return np.zeros(0, dtype=complex)
    if do_balance:
        a, _ = balance(a)
    h = hessenberg(a)
    eigs = np.empty(n, dtype=complex)
    hi = n - 1
    its = 0
    while hi >= 0:
        # locate the start of the unreduced trailing block
        lo = hi
        while lo > 0:
            s = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if s == 0.0:
                s = np.abs(h[:hi + 1, :hi + 1]).sum() / (hi + 1)
            if abs(h[lo, lo - 1]) <= _EPS * s:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eigs[hi] = h[hi, hi]
            hi -= 1
            its = 0
            continue
        its += 1
        if its > max_iter_per_eig:
            raise EigenError(f"QR failed to converge for active window [{lo}, {hi}]")
        if its % 11 == 0:
            mu = h[hi, hi] + abs(h[hi, hi - 1].real) + abs(h[hi - 1, hi - 2].real if hi - 2 >= lo else 0.0)
        else:
            mu = _wilkinson(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
        w = slice(lo, hi + 1)
        blk = h[w, w]
        m = hi - lo + 1
        blk[np.diag_indices(m)] -= mu
        rots = []
        for k in range(m - 1):
            x, y = blk[k, k], blk[k + 1, k]
            r = np.hypot(abs(x), abs(y))
            if r == 0.0:
                c, s = 1.0, 0.0
            elif x == 0:
                c, s = 0.0, 1.0
            else:
                c = abs(x) / r
                s = (x / abs(x)) * np.conj(y) / r
            rk, rk1 = blk[k, k:].copy(), blk[k + 1, k:].copy()
            blk[k, k:] = c * rk + s * rk1
            blk[k + 1, k:] = -np.conj(s) * rk + c * rk1
            rots.append((c, s))
        for k, (c, s) in enumerate(rots):
            top = min(k + 2, m)
            ck, ck1 = blk[:top, k].copy(), blk[:top, k + 1].copy()
            blk[:top, k] = c * ck + np.conj(s) * ck1
            blk[:top, k + 1] = -s * ck + c * ck1
        blk[np.diag_indices(m)] += mu
        h[w, w] = blk
    return eigs


def inverse_iteration(a, lam: complex, iters: int = 3, seed: int = 0) -> np.ndarray:
    """Unit eigenvector estimate for the eigenvalue ``lam`` by shifted inverse iteration."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    shift = lam + (abs(lam) + np.linalg.norm(a, 1)) * 1e-13 * (1 + 1j)
    m = a - shift * np.eye(n)
    for _ in range(iters):
        v = np.linalg.solve(m, v)
        v /= np.linalg.norm(v)
    return v
