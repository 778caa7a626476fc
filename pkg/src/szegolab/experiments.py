"""Experiment specs, runners, the on-disk result cache and convergence reports.

An :class:`ExperimentSpec` is a pure description (kind, parameters, seed). Its hash keys a
directory ``<out>/<kind>-<hash12>/`` holding the payload files, ``spec.json`` and a
``record.json`` sidecar with timestamps. Payload files never contain timestamps, so rerunning
a spec reproduces them byte for byte; the worker count is not part of the spec.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats

from . import __version__
from .coherent import (coherent_stark_diagonal, momentum_norm, normalization_a,
                       normalization_a_oracle, projector_resolution_check, sample_alpha,
                       tail_mass)
from .distributions import EmpiricalDistribution, ks_distance
from .estimates import numerical_range_check, quadratic_estimate_check
from .hydrogen import SemiclassicalConfig, radial_moment, radial_moment_oracle
from .kepler import (classical_samples, collision_alpha, pole_collision_alpha,
                     kepler_time_average, orbit_average, orbit_from_alpha)
from .scaling import (SturmianBasis, block_resonances, extract_cluster,
                      first_order_spread, resonances_to_csv, theta_independence_scan,
                      verify_trace_identity)
from .stark import (build_shell_matrix, diagonalize_shell, parabolic_oracle, quantum_distribution,
                    quantum_moment, szego_compare, test_function)

__all__ = [
    "KINDS",
    "SpecError",
    "ExperimentSpec",
    "ResultRecord",
    "run",
    "load_record",
    "convergence_report",
    "parse_int_range",
]

KINDS = ("moments", "shell-spectrum", "classical-measure", "szego-compare", "resonances",
         "theta-scan", "coherent-check", "estimate-checks")


class SpecError(ValueError):
    """Invalid experiment specification; ``path`` names the offending field."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


def _canon(obj):
    """JSON-stable form: tuples to lists, numpy scalars to Python numbers."""
    if isinstance(obj, dict):
        return {str(k): _canon(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError("kind", f"unknown kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise SpecError("seed", "must be an integer in [0, 2^64)")
        given = _canon(dict(self.params))
        unknown = set(given) - set(_DEFAULTS[self.kind])
        if unknown:
            raise SpecError(f"params.{sorted(unknown)[0]}", "unknown parameter")
        # store the complete parameter set so the record is self-describing
        full = defaults(self.kind)
        full.update(given)
        object.__setattr__(self, "params", _canon(full))
        _validate(self)

    def canonical(self) -> str:
        return json.dumps({"kind": self.kind, "params": self.params, "seed": self.seed,
                           "version": __version__}, sort_keys=True, separators=(",", ":"))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "params": self.params, "seed": self.seed},
                          indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        d = json.loads(text)
        return cls(d["kind"], d.get("params", {}), int(d.get("seed", 0)))


@dataclass(frozen=True)
class ResultRecord:
    spec: ExperimentSpec
    spec_hash: str
    version: str
    payload: dict          # file name -> text
    started: float
    finished: float
    cached: bool
    path: Path | None = None

    def json(self, name: str = "result.json") -> dict:
        return json.loads(self.payload[name])


# -- validation -------------------------------------------------------------------

_DEFAULTS: dict[str, dict] = {
    "moments": {"family": "shell", "N": [10, 20, 40], "F": 1.0, "orders": [1, 2, 3, 4],
                "n_max": 20, "k_max": 6},
    "shell-spectrum": {"N": 10, "F": 1.0, "field_dir": [0.0, 0.0, 1.0]},
    "classical-measure": {"F": 1.0, "samples": 1_000_000, "chunk": 65536, "bins": 200,
                          "orbits": 100, "collisions": 3, "orbit_samples": 64,
                          "collision_family": "pole"},
    "szego-compare": {"N": [10, 20, 40], "F": 1.0, "rho": ["one", "s2"], "samples": 1_000_000,
                      "chunk": 65536, "ks": True},
    "resonances": {"N": 2, "F": 1.0, "theta": 0.3, "n_max": 40, "l_max": 6, "kappa": None,
                   "field_knob": 0.0, "trace_nmax": [8, 10, 12, 16], "m_max": 3},
    "theta-scan": {"N": 1, "F": 1.0, "thetas": [0.1, 0.3, 0.5], "n_max": 40, "l_max": None,
                   "kappa": None, "field_knob": 0.0},
    "coherent-check": {"norm_l": [1, 2, 3, 4, 5, 6, 7, 8], "norm_theta": 0.3, "projector_l": 2,
                       "samples": 100_000, "tail_N": [4, 6, 8, 10], "tail_r0": 4.0, "tail_n": 1,
                       "tail_theta": 0.0, "stark_N": [4, 8, 16, 32], "F": 1.0, "alphas": 8},
    "estimate-checks": {"N": 2, "F": 1.0, "theta": 0.3, "samples": 10_000, "n_max": 20,
                        "l_max": 6, "field_knob": 1e-4, "tol": 1e-8, "qe_form": "plain"},
}


def defaults(kind: str) -> dict:
    return json.loads(json.dumps(_DEFAULTS[kind]))


def _validate(spec: ExperimentSpec):
    p = spec.params
    for key in ("N", "tail_N", "stark_N", "norm_l"):
        if key in p:
            v = p[key]
            vals = v if isinstance(v, list) else [v]
            if not vals:
                raise SpecError(f"params.{key}", "N-range must be nonempty")
            if any(not isinstance(x, int) or x < 1 for x in vals):
                raise SpecError(f"params.{key}", "entries must be positive integers")
    if "F" in p and not (isinstance(p["F"], (int, float)) and p["F"] > 0):
        raise SpecError("params.F", "must be positive")
    if "samples" in p and not (isinstance(p["samples"], int) and p["samples"] >= 2):
        raise SpecError("params.samples", "must be an integer >= 2")


def _params(spec: ExperimentSpec) -> dict:
    return json.loads(json.dumps(spec.params))


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


# -- convergence ------------------------------------------------------------------

def convergence_report(xs, errors, level: float = 0.95) -> dict:
    """Least-squares slope of ``log|error|`` against ``log x`` with a t-based confidence interval."""
    x = np.asarray(xs, dtype=float)
    e = np.abs(np.asarray(errors, dtype=float))
    if x.size < 3:
        raise ValueError("convergence_report needs at least 3 points")
    if np.any(e <= 0) or np.any(x <= 0):
        raise ValueError("errors and abscissae must be positive for a log-log fit")
    fit = stats.linregress(np.log(x), np.log(e))
    q = stats.t.ppf(0.5 + level / 2.0, x.size - 2)
    order = np.argsort(x)
    es = e[order]
    return {
        "x": x.tolist(), "error": e.tolist(),
        "slope": float(fit.slope), "intercept": float(fit.intercept),
        "ci": [float(fit.slope - q * fit.stderr), float(fit.slope + q * fit.stderr)],
        "level": level,
        "monotone_decreasing": bool(np.all(np.diff(es) < 0)),
    }


# -- runners ------------------------------------------------------------------------
# each returns {file name: text}; the JSON payload carries a "meta" block

def _meta(spec: ExperimentSpec) -> dict:
    return {"seed": spec.seed, "spec_hash": spec.hash, "version": __version__}


def _csv_header(spec: ExperimentSpec) -> str:
    return f"# seed={spec.seed} spec_hash={spec.hash} version={__version__}\n"


def _dump(spec, body: dict) -> str:
    return json.dumps(_canon({"meta": _meta(spec), **body}), indent=1, sort_keys=True,
                      allow_nan=True) + "\n"


def _run_moments(spec, p, workers):
    if p["family"] == "radial":
        rows, worst, first = [], 0.0, 0.0
        for n in range(1, p["n_max"] + 1):
            for l in range(n):
                closed = 0.5 * (3 * n * n - l * (l + 1))
                first = max(first, abs(radial_moment(n, l, 1) - closed) / closed)
                for k in range(p["k_max"] + 1):
                    a = radial_moment(n, l, k)
                    b = radial_moment_oracle(n, l, k)
                    rel = abs(a - b) / abs(b)
                    worst = max(worst, rel)
                    rows.append(f"{n},{l},{k},{a!r},{b!r},{rel!r}")
        csv = _csv_header(spec) + "n,l,k,recursion,quadrature,rel_error\n" + "\n".join(rows) + "\n"
        return {"result.json": _dump(spec, {"family": "radial", "max_rel_error": worst,
                                            "first_moment_closed_form_error": first,
                                            "count": len(rows)}),
                "moments.csv": csv}
    if p["family"] != "shell":
        raise SpecError("params.family", "must be 'shell' or 'radial'")
    F = float(p["F"])
    Ns = _as_list(p["N"])
    rows = []
    for N in Ns:
        for m in _as_list(p["orders"]):
            rows.append({"N": N, "m": m, "value": quantum_moment(N, F, m)})
    limit = 3.0 * F * F / 8.0
    err = [abs(quantum_moment(N, F, 2) - limit) for N in Ns]
    body = {"family": "shell", "F": F, "rows": rows, "m2_limit": limit, "m2_error": err}
    if len(Ns) >= 3:
        body["convergence"] = convergence_report(Ns, err)
    return {"result.json": _dump(spec, body)}


def _run_shell_spectrum(spec, p, workers):
    N, F = int(p["N"]), float(p["F"])
    mat = build_shell_matrix(N, F, tuple(p["field_dir"]))
    spec_ = diagonalize_shell(mat)
    body = {"N": N, "F": F, "trace": float(np.trace(mat.entries)),
            "symmetry_error": float(np.max(np.abs(spec_.values + spec_.values[::-1]))),
            "center": spec_.center}
    if N <= 10:
        body["oracle_max_diff"] = float(np.max(np.abs(spec_.values - parabolic_oracle(N, F).values)))
    return {"result.json": _dump(spec, body), "spectrum.csv": _csv_header(spec) + spec_.to_csv()}


def _orbit_table(spec, p):
    # entropy [seed, 1] keeps this stream apart from the chunk streams of the same seed
    rng = np.random.default_rng([spec.seed, 1])
    F = float(p["F"])
    n_coll = int(p["collisions"])
    families = {"pole": pole_collision_alpha, "random-phase": collision_alpha}
    if p["collision_family"] not in families:
        raise SpecError("params.collision_family", "must be 'pole' or 'random-phase'")
    make_collision = families[p["collision_family"]]
    rows = []
    for i in range(int(p["orbits"])):
        alpha = make_collision(rng) if i < n_coll else sample_alpha(rng)
        orb = orbit_from_alpha(alpha, int(p["orbit_samples"]))
        inv = orb.invariant_errors()
        obs = lambda x: F * x[..., 0]
        avg = orbit_average(orb, obs)
        oracle = kepler_time_average(orb.angular_momentum, orb.runge_lenz, obs)
        rows.append({"collision": i < n_coll, "eccentricity": orb.eccentricity,
                     "min_radius": float(orb.radius.min()), **inv,
                     "orbit_average": avg, "kepler_oracle": oracle,
                     "average_error": abs(avg - oracle)})
    worst = {k: max(r[k] for r in rows) for k in
             ("energy", "period", "casimir", "L_drift", "A_drift", "average_error")}
    return rows, worst


def _run_classical(spec, p, workers):
    F = float(p["F"])
    M = int(p["samples"])
    s = classical_samples(F, M, spec.seed, int(p["chunk"]), workers)
    m2 = s * s
    limit = 3.0 * F * F / 8.0
    se = float(np.std(m2, ddof=1) / math.sqrt(M))
    mean2 = float(np.mean(m2))
    hist, edges = np.histogram(s, bins=int(p["bins"]), range=(-1.5 * F, 1.5 * F))
    centers = 0.5 * (edges[1:] + edges[:-1])
    csv = _csv_header(spec) + "location,weight\n" + "".join(
        f"{c!r},{w / M!r}\n" for c, w in zip(centers, hist))
    body = {"F": F, "samples": M, "mean": float(np.mean(s)),
            "mean_stderr": float(np.std(s, ddof=1) / math.sqrt(M)),
            "m2": mean2, "m2_stderr": se, "m2_limit": limit,
            "m2_zscore": (mean2 - limit) / se, "max_abs": float(np.max(np.abs(s)))}
    out = {"histogram.csv": csv}
    if int(p["orbits"]) > 0:
        rows, worst = _orbit_table(spec, p)
        body["orbit_check"] = worst
        out["orbits.json"] = _dump(spec, {"orbits": rows})
    out["result.json"] = _dump(spec, body)
    return out


def _run_compare(spec, p, workers):
    F = float(p["F"])
    M = int(p["samples"])
    chunk = int(p["chunk"])
    rhos = [test_function(r, F) for r in _as_list(p["rho"])]
    samples = classical_samples(F, M, spec.seed, chunk, workers)

    def classical(rho):
        v = rho(samples)
        return float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(M))

    rows = szego_compare(_as_list(p["N"]), F, rhos, classical)
    body = {"F": F, "samples": M, "rows": rows}
    if p["ks"]:
        cd = EmpiricalDistribution.from_samples(samples)
        body["ks"] = [{"N": N, "ks": ks_distance(quantum_distribution(N, F), cd)}
                      for N in _as_list(p["N"])]
    return {"result.json": _dump(spec, body)}


def _basis(p, N, n_max=None):
    kappa = p.get("kappa") or 1.0 / N
    l_max = p.get("l_max") or N + 2
    return SturmianBasis(float(kappa), int(n_max or p["n_max"]), int(l_max), 0)


def _run_resonances(spec, p, workers):
    N = int(p["N"])
    cfg = SemiclassicalConfig(N, float(p["F"]))
    theta = float(p["theta"])
    f = float(p["field_knob"])
    b = _basis(p, N)
    spread = first_order_spread(N, f)
    rad = max(1.0 / (8 * N ** 3), 3.0 * spread)
    vals, ms, worst = block_resonances(cfg, theta, b, f, radius=rad)
    cl = extract_cluster(vals, N, m_labels=ms, expected_spread=spread)
    body = {"N": N, "theta": theta, "field_knob": f, "basis": b.to_record(),
            "count": cl.count, "selection_radius": cl.selection_radius,
            "shifts": [[z.real, z.imag] for z in cl.shifts], "m": cl.m.tolist(),
            "max_abs_shift": float(np.max(np.abs(cl.shifts))),
            "max_imag": float(np.max(cl.shifts.imag)),
            "max_abs_imag": float(np.max(np.abs(cl.shifts.imag))),
            "max_residual": worst}
    if f != 0.0 and p["trace_nmax"]:
        rep = verify_trace_identity(cfg, b, f, _as_list(p["trace_nmax"]), int(p["m_max"]), theta)
        body["trace"] = json.loads(rep.to_json())
    csv = _csv_header(spec) + resonances_to_csv(vals, ms, N, theta, b.n_max, b.kappa)
    return {"result.json": _dump(spec, body), "resonances.csv": csv}


def _run_theta_scan(spec, p, workers):
    N = int(p["N"])
    cfg = SemiclassicalConfig(N, float(p["F"]))
    b = _basis(p, N)
    sc = theta_independence_scan(cfg, b, _as_list(p["thetas"]), float(p["field_knob"]))
    # every member must sit on -1/(2N^2); the mean alone would hide a symmetric split
    center_err = max(float(np.max(np.abs(c.shifts))) for c in sc.clusters)
    max_imag = max(float(np.max(np.abs(c.shifts.imag))) for c in sc.clusters)
    body = {"N": N, "basis": b.to_record(), "field_knob": float(p["field_knob"]),
            "max_distance": sc.max_distance, "center_error": center_err,
            "max_abs_imag": max_imag, "scan": json.loads(sc.to_json())}
    return {"result.json": _dump(spec, body)}


def _run_coherent(spec, p, workers):
    seeds = np.random.SeedSequence(spec.seed).spawn(3)
    rng = np.random.default_rng(seeds[0])
    norms = []
    for l in _as_list(p["norm_l"]):
        a = sample_alpha(rng)
        norms.append({"l": l, "a": normalization_a(l), "a_oracle": normalization_a_oracle(l),
                      "a_closed": math.sqrt((l + 1) / (2 * math.pi ** 2)),
                      "psi_norm_error": abs(momentum_norm(a, l) - 1.0),
                      "psi_norm_error_theta": abs(momentum_norm(a, l, float(p["norm_theta"])) - 1.0)})
    pc = projector_resolution_check(int(p["projector_l"]), int(p["samples"]),
                                    int(seeds[1].generate_state(1)[0]))
    rng2 = np.random.default_rng(seeds[2])
    alphas = [sample_alpha(rng2) for _ in range(int(p["alphas"]))]
    tails = []
    for N in _as_list(p["tail_N"]):
        vals = [tail_mass(a, N, float(p["tail_r0"]), int(p["tail_n"]), float(p["tail_theta"]))
                for a in alphas]
        tails.append({"N": N, "max": float(max(vals)), "mean": float(np.mean(vals))})
    F = float(p["F"])
    stark = []
    for N in _as_list(p["stark_N"]):
        errs = []
        for a in alphas:
            orb = orbit_from_alpha(a, 64)
            avg = orbit_average(orb, lambda x: F * x[..., 0])
            errs.append(abs(coherent_stark_diagonal(a, N, F) - avg))
        stark.append({"N": N, "max_error": float(max(errs)), "mean_error": float(np.mean(errs))})
    tail_fit = np.polyfit([t["N"] for t in tails], np.log([t["max"] for t in tails]), 1)
    body = {
        "normalization": norms,
        "projector": {"l": pc.l, "M": pc.M, "deviation": pc.in_shell_deviation,
                      "sigma": pc.in_shell_sigma, "within_3sigma": pc.within_3sigma,
                      "out_of_shell": pc.out_of_shell_deviation},
        "tail": tails, "tail_log_slope": float(tail_fit[0]),
        "stark": stark,
    }
    if len(stark) >= 3:
        body["stark_convergence"] = convergence_report([s["N"] for s in stark],
                                                       [s["mean_error"] for s in stark])
    return {"result.json": _dump(spec, body)}


def _run_estimates(spec, p, workers):
    N = int(p["N"])
    cfg = SemiclassicalConfig(N, float(p["F"]))
    b = SturmianBasis(1.0 / N, int(p["n_max"]), int(p["l_max"]), 0)
    th = float(p["theta"])
    nr = numerical_range_check(cfg, th, b, int(p["samples"]), spec.seed, float(p["field_knob"]),
                               float(p["tol"]))
    nr_neg = numerical_range_check(cfg, -th, b, int(p["samples"]), spec.seed,
                                   float(p["field_knob"]), float(p["tol"]))
    qe = quadratic_estimate_check(form=p["qe_form"])
    qc = quadratic_estimate_check(form="covariant")
    body = {"numerical_range": json.loads(nr.to_json()),
            "numerical_range_reflected": json.loads(nr_neg.to_json()),
            "quadratic": json.loads(qe.to_json()),
            "quadratic_covariant": {"min_margin": qc.min_margin,
                                    "min_worst_case": qc.min_worst_case},
            "c_ratio": qe.c_ratio}
    return {"result.json": _dump(spec, body)}


_RUNNERS: dict[str, Callable] = {
    "moments": _run_moments,
    "shell-spectrum": _run_shell_spectrum,
    "classical-measure": _run_classical,
    "szego-compare": _run_compare,
    "resonances": _run_resonances,
    "theta-scan": _run_theta_scan,
    "coherent-check": _run_coherent,
    "estimate-checks": _run_estimates,
}


# -- cache ---------------------------------------------------------------------------

def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def record_dir(out_dir, spec: ExperimentSpec) -> Path:
    return Path(out_dir) / f"{spec.kind}-{spec.hash[:12]}"


def load_record(path) -> ResultRecord:
    path = Path(path)
    meta = json.loads((path / "record.json").read_text())
    spec = ExperimentSpec.from_json((path / "spec.json").read_text())
    payload = {name: (path / name).read_text() for name in meta["files"]}
    return ResultRecord(spec, meta["spec_hash"], meta["version"], payload, meta["started"],
                        meta["finished"], True, path)


def run(spec: ExperimentSpec, out_dir=None, force: bool = False, workers: int = 1) -> ResultRecord:
    """Execute ``spec`` or serve it from the cache under ``out_dir``.

    A cached record is used only when its stored hash equals ``spec.hash``.
    """
    target = record_dir(out_dir, spec) if out_dir is not None else None
    if target is not None and not force and (target / "record.json").exists():
        try:
            rec = load_record(target)
        except (OSError, KeyError, ValueError):
            rec = None
        if rec is not None and rec.spec_hash == spec.hash:
            return rec
    started = time.time()
    payload = _RUNNERS[spec.kind](spec, _params(spec), workers)
    finished = time.time()
    if target is not None:
        for name, text in payload.items():
            _atomic_write(target / name, text)
        _atomic_write(target / "spec.json", spec.to_json() + "\n")
        _atomic_write(target / "record.json", json.dumps({
            "spec_hash": spec.hash, "version": __version__, "started": started,
            "finished": finished, "files": sorted(payload), "workers": workers,
        }, indent=1, sort_keys=True) + "\n")
    return ResultRecord(spec, spec.hash, __version__, payload, started, finished, False, target)


def parse_int_range(text: str) -> list[int]:
    """``"4:40:4"`` (inclusive), ``"10,20,40"`` or ``"7"``."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [int(x) for x in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            a, b, s = parts
            if s <= 0:
                raise ValueError
            out = list(range(a, b + 1, s))
        else:
            out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise SpecError("N", f"cannot parse integer range {text!r}") from None
    if not out:
        raise SpecError("N", "N-range must be nonempty")
    return out
