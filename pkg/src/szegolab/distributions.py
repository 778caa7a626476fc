"""Weighted point-mass distributions on the real line."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

__all__ = ["EmpiricalDistribution", "ks_distance"]


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Atoms at ``locations`` with positive ``weights`` summing to one."""

    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if loc.shape != w.shape:
            raise ValueError("locations and weights differ in length")
        if loc.size == 0:
            raise ValueError("empty distribution")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        total = w.sum()
        if abs(total - 1.0) > 1e-12:
            w = w / total
        order = np.argsort(loc, kind="stable")
        object.__setattr__(self, "locations", loc[order])
        object.__setattr__(self, "weights", w[order])

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalDistribution":
        s = np.asarray(samples, dtype=float).ravel()
        return cls(s, np.full(s.size, 1.0 / s.size))

    def __len__(self) -> int:
        return self.locations.size

    def moment(self, m: int) -> float:
        return float(np.sum(self.weights * self.locations ** m))

    def expect(self, f) -> float:
        return float(np.sum(self.weights * f(self.locations)))

    def cdf(self, x) -> np.ndarray:
        """Right-continuous CDF ``G(x) = P(X <= x)``."""
        cw = np.concatenate([[0.0], np.cumsum(self.weights)])
        idx = np.searchsorted(self.locations, np.asarray(x, dtype=float), side="right")
        return cw[idx]

    def histogram(self, bins, range=None):
        return np.histogram(self.locations, bins=bins, range=range, weights=self.weights)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["location", "weight"])
        for a, b in zip(self.locations, self.weights):
            w.writerow([repr(float(a)), repr(float(b))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "EmpiricalDistribution":
        rows = list(csv.reader(io.StringIO(text)))[1:]
        return cls(np.array([float(r[0]) for r in rows]), np.array([float(r[1]) for r in rows]))


def ks_distance(a: EmpiricalDistribution, b: EmpiricalDistribution) -> float:
    """Kolmogorov-Smirnov distance ``sup_x |G_a(x) - G_b(x)|`` between two weighted laws.

    Both CDFs are step functions constant between consecutive atoms of the merged support,
    so evaluating the right-continuous CDFs at every merged atom attains the supremum.
    """
    grid = np.union1d(a.locations, b.locations)
    return float(np.max(np.abs(a.cdf(grid) - b.cdf(grid))))
