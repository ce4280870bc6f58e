"""Energy sequences over angular momentum and the ordering checks run on them.

Every check is a linear inequality between solved energies, written as
``margin >= 0``.  A record passes when ``margin >= -tolerance``; it is
*strict* when ``margin > tolerance``.  Unless a fixed tolerance is given, the
tolerance of a record is coupled to the numerics of the energies it touches:

    5 * (sum |c_i| * residual_i  +  |sum c_i (E_i - E_i^coarse)| / 3
         +  sum |c_i| * |E_i - E_i^domain|)

where c are the coefficients of the margin, E^coarse comes from a run one
refinement level coarser (Richardson step for a second-order stencil) and
E^domain from a run on a doubled z-box, when those runs exist.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .eigensolve import SolveConfig, lowest_k
from .errors import ResourceError, UsageError
from .potentials import (
    CONSTANT,
    INDEFINITE,
    NONDECREASING,
    NOT_SUPERHARMONIC,
)
from .sector_operator import (
    DEFAULT_MAX_DIMENSION,
    assemble,
    assemble_bloch,
    build_grid,
)

SAFETY = 5.0
CSV_COLUMNS = ("m", "alpha", "n", "energy", "residual", "converged")


# --------------------------------------------------------------------------- #
# sequences                                                                    #
# --------------------------------------------------------------------------- #


@dataclass
class SectorEntry:
    m: int
    levels: np.ndarray
    residuals: np.ndarray
    converged: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def excluded(self):
        return not bool(self.converged[0])


@dataclass
class EnergySequence:
    field: object
    entries: dict
    alpha: float | None = None
    grid: object = None
    spec_digest: str = ""
    config_digest: str = ""
    coarse: "EnergySequence | None" = None
    domain: "EnergySequence | None" = None

    @property
    def B(self):
        return self.field.B

    @property
    def m_values(self):
        return sorted(self.entries)

    @property
    def m_min(self):
        return min(self.entries)

    @property
    def m_max(self):
        return max(self.entries)

    @property
    def n_levels(self):
        return min(len(e.levels) for e in self.entries.values())

    def energy(self, m, n=1):
        return float(self.entries[m].levels[n - 1])

    def residual(self, m, n=1):
        return float(self.entries[m].residuals[n - 1])

    def usable(self, m, n=1):
        e = self.entries.get(m)
        return e is not None and len(e.levels) >= n and bool(e.converged[n - 1])

    def ground(self):
        """Ground levels as an array over m_min..m_max (nan where excluded)."""
        return np.array([self.energy(m) if self.usable(m) else np.nan for m in self.m_values])

    def excluded(self):
        return [m for m in self.m_values if not self.usable(m)]

    def max_residual(self):
        return max(float(np.max(e.residuals)) for e in self.entries.values())

    def all_converged(self):
        return all(bool(np.all(e.converged)) for e in self.entries.values())

    def require_contiguous(self):
        ms = self.m_values
        if ms != list(range(ms[0], ms[-1] + 1)):
            raise UsageError(f"sequence is not contiguous in m: {ms}")

    def rows(self):
        a = "" if self.alpha is None else repr(float(self.alpha))
        for m in self.m_values:
            e = self.entries[m]
            for n, (E, r, c) in enumerate(zip(e.levels, e.residuals, e.converged), start=1):
                yield {"m": m, "alpha": a, "n": n, "energy": repr(float(E)),
                       "residual": repr(float(r)), "converged": str(bool(c)).lower()}

    def to_csv(self, path=None):
        return write_csv(self.rows(), CSV_COLUMNS, path)

    def summary(self):
        return {
            "B": self.B,
            "alpha": self.alpha,
            "m_range": [self.m_min, self.m_max],
            "levels": self.n_levels,
            "excluded": self.excluded(),
            "max_residual": self.max_residual(),
            "spec_digest": self.spec_digest,
            "grid": None if self.grid is None else self.grid.to_dict(),
            "refinement_reference": self.coarse is not None,
            "domain_reference": self.domain is not None,
        }


def write_csv(rows, columns, path=None):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


@dataclass(frozen=True)
class SweepConfig:
    resolution: int = 2
    solve: SolveConfig = SolveConfig()
    z_max: float | None = None
    z_boundary: str = "neumann"
    richardson: bool = True
    domain_check: bool = False
    threads: int = 1
    max_dimension: int = DEFAULT_MAX_DIMENSION


def _shift_candidates(prev, ref, B, previous_ref=None):
    """Shift guesses for the next sector, most aggressive first.

    ``ref`` is an estimate of the level (coarse run or neighbour); the last
    candidate, E_{m-1} - B, is a proven lower bound of the discrete spectrum.
    """
    out = []
    if ref is not None and np.isfinite(ref):
        pad = 1e-3 * max(1.0, abs(ref))
        if previous_ref is not None:
            pad = max(pad, 3.0 * abs(previous_ref))
        out.append(ref - pad)
    if prev is not None and np.isfinite(prev):
        out.append(prev - B - 1e-6 * max(1.0, abs(prev)))
    return out


def _solve_chunk(spec, field_cfg, grid, ms, alpha, solve_cfg, levels, reference, B):
    """Solve consecutive sectors, chaining shift guesses along m."""
    out = []
    prev = None
    last_gap = None
    cfg = replace(solve_cfg, k=levels)
    for m in ms:
        t0 = time.perf_counter()
        if alpha is None:
            op = assemble(spec, field_cfg, m, grid)
        else:
            op = assemble_bloch(spec, field_cfg, m, alpha, grid)
        t1 = time.perf_counter()
        ref = None
        if reference is not None and m in reference:
            ref = reference[m]
        elif out:
            ref = out[-1].levels[0]
        shift = _shift_candidates(prev, ref, B, last_gap)
        res = lowest_k(op, cfg, shift=shift)
        t2 = time.perf_counter()
        entry = SectorEntry(
            m=m, levels=res.eigenvalues, residuals=res.residual_norms,
            converged=res.converged,
            diagnostics={"iterations": res.iterations, "shift": res.shift,
                         "assembly_s": t1 - t0, "solve_s": t2 - t1,
                         "dimension": op.dimension, "solver": res.diagnostics},
        )
        if entry.converged[0]:
            if ref is not None and reference is not None and m in reference:
                last_gap = entry.levels[0] - ref
            prev = entry.levels[0]
        out.append(entry)
    return out


def _normalize_range(m_range):
    if isinstance(m_range, int):
        return list(range(m_range + 1))
    ms = list(m_range)
    if not ms or ms != list(range(ms[0], ms[-1] + 1)) or ms[0] < 0:
        raise UsageError("m_range must be a contiguous range of m >= 0")
    return ms


def _run(spec, field_cfg, ms, levels, cfg, grid, alpha, reference):
    threads = max(1, int(cfg.threads))
    if threads == 1 or len(ms) < 2:
        return _solve_chunk(spec, field_cfg, grid, ms, alpha, cfg.solve, levels, reference,
                            field_cfg.B)
    # contiguous chunks keep the shift chaining (and hence the results) fixed
    # for a given thread count
    chunks = [list(c) for c in np.array_split(ms, min(threads, len(ms))) if len(c)]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(_solve_chunk, spec, field_cfg, grid, [int(x) for x in c], alpha,
                               cfg.solve, levels, reference, field_cfg.B) for c in chunks]
        results = [f.result() for f in futures]
    return [e for chunk in results for e in chunk]


def _sequence(spec, field_cfg, ms, levels, cfg, alpha, resolution, z_max, reference=None):
    grid = build_grid(field_cfg, ms[-1], spec, resolution, z_max=z_max,
                      z_boundary=cfg.z_boundary, max_dimension=cfg.max_dimension)
    entries = _run(spec, field_cfg, ms, levels, cfg, grid, alpha, reference)
    return EnergySequence(field=field_cfg, entries={e.m: e for e in entries}, alpha=alpha,
                          grid=grid, spec_digest=spec.digest)


def sweep_sectors(spec, field_cfg, m_range, levels=1, cfg=None, alpha=None,
                  allow_total_failure=False):
    """Solve the ``levels`` lowest states of every sector in ``m_range``.

    With ``cfg.richardson`` a run one refinement level coarser is attached as
    ``seq.coarse``; with ``cfg.domain_check`` a run on a doubled z-box is
    attached as ``seq.domain``.  Both only feed the coupled tolerances.
    A sweep in which no sector converges raises ResourceError unless
    ``allow_total_failure`` is set (the rows are then returned, all flagged).
    """
    cfg = cfg or SweepConfig()
    ms = _normalize_range(m_range)
    if levels < 1:
        raise UsageError("levels must be >= 1")
    coarse = None
    reference = None
    if cfg.richardson and cfg.resolution >= 1:
        coarse = _sequence(spec, field_cfg, ms, levels, cfg, alpha, cfg.resolution - 1,
                           cfg.z_max)
        reference = {m: e.levels[0] for m, e in coarse.entries.items() if e.converged[0]}
    seq = _sequence(spec, field_cfg, ms, levels, cfg, alpha, cfg.resolution, cfg.z_max,
                    reference)
    seq.coarse = coarse
    if cfg.domain_check and not spec.is_periodic:
        z2 = 2.0 * seq.grid.z_max
        reference = {m: e.levels[0] for m, e in seq.entries.items() if e.converged[0]}
        seq.domain = _sequence(spec, field_cfg, ms, levels, cfg, alpha, cfg.resolution, z2,
                               reference)
    if not allow_total_failure and all(seq.entries[m].excluded for m in ms):
        raise ResourceError("no sector converged; " + json.dumps(
            {m: seq.entries[m].diagnostics.get("iterations") for m in ms}))
    return seq


def sequence_from_values(values, B, alpha=None, residual=0.0):
    """Wrap plain numbers (m = 0, 1, ...) as an EnergySequence; handy for tests."""
    from .sector_operator import FieldConfig

    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    entries = {
        m: SectorEntry(m, arr[m].copy(), np.full(arr.shape[1], float(residual)),
                       np.ones(arr.shape[1], dtype=bool))
        for m in range(arr.shape[0])
    }
    return EnergySequence(field=FieldConfig(B), entries=entries, alpha=alpha)


def extend_negative_m(seq):
    """Add m < 0 through E_{-m,n} = E_{m,n} + 2 m B (no solve)."""
    if seq.m_min != 0:
        raise UsageError("extend_negative_m needs a sequence starting at m = 0")
    seq.require_contiguous()
    entries = dict(seq.entries)
    for m in seq.m_values:
        if m == 0:
            continue
        e = seq.entries[m]
        entries[-m] = SectorEntry(-m, e.levels + 2 * m * seq.B, e.residuals.copy(),
                                  e.converged.copy(), {"derived_from": m})
    return replace(seq, entries=dict(sorted(entries.items())), coarse=None, domain=None)


def restrict_nonnegative(seq):
    return replace(seq, entries={m: e for m, e in seq.entries.items() if m >= 0})


# --------------------------------------------------------------------------- #
# reports                                                                      #
# --------------------------------------------------------------------------- #


@dataclass
class CheckRecord:
    check: str
    m: object
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    n: int = 1
    alpha: float | None = None

    @property
    def passed(self):
        return bool(self.margin >= -self.tolerance)

    @property
    def strict(self):
        return bool(self.margin > self.tolerance)

    def to_dict(self):
        return {
            "check": self.check,
            "m": self.m,
            "n": self.n,
            "alpha": self.alpha,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "margin": float(self.margin),
            "tolerance": float(self.tolerance),
            "pass": self.passed,
            "strict": self.strict,
        }


@dataclass
class OrderingReport:
    records: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    summaries: dict = field(default_factory=dict)
    hypothesis_met: bool = True
    tolerance_policy: str = "coupled"

    @property
    def passed(self):
        return all(r.passed for r in self.records)

    @property
    def verdict(self):
        return "pass" if self.passed else "fail"

    def by_check(self, name):
        return [r for r in self.records if r.check == name]

    def min_margin(self, name=None):
        recs = self.records if name is None else self.by_check(name)
        return min((r.margin for r in recs), default=math.inf)

    def failures(self):
        return [r for r in self.records if not r.passed]

    def extend(self, other, prefix=None):
        self.records.extend(other.records)
        self.skipped.extend(other.skipped)
        for k, v in other.summaries.items():
            self.summaries[k if prefix is None else f"{prefix}/{k}"] = v
        self.hypothesis_met = self.hypothesis_met and other.hypothesis_met
        return self

    def to_dict(self):
        counts = {}
        for r in self.records:
            c = counts.setdefault(r.check, {"total": 0, "pass": 0, "strict": 0})
            c["total"] += 1
            c["pass"] += r.passed
            c["strict"] += r.strict
        return {
            "verdict": self.verdict,
            "hypothesis_met": self.hypothesis_met,
            "informational_only": not self.hypothesis_met,
            "tolerance_policy": self.tolerance_policy,
            "counts": counts,
            "summaries": _jsonable(self.summaries),
            "skipped": self.skipped,
            "checks": [r.to_dict() for r in self.records],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else ("inf" if f > 0 else "-inf" if f < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def coupled_tolerance(terms, tol=None):
    """Tolerance for the margin sum(c * E) over terms (seq, m, n, c)."""
    if tol is not None:
        return float(tol)
    res = 0.0
    rich = 0.0
    dom = 0.0
    for seq, m, n, c in terms:
        res += abs(c) * seq.residual(m, n)
        E = seq.energy(m, n)
        if seq.coarse is not None and seq.coarse.usable(m, n):
            rich += c * (E - seq.coarse.energy(m, n))
        if seq.domain is not None and seq.domain.usable(m, n):
            # no cancellation: box-edge states shift, bound states do not
            dom += abs(c) * abs(E - seq.domain.energy(m, n))
    return SAFETY * (res + abs(rich) / 3.0 + dom)


def _margin(seq, coeffs, n=1):
    # every margin has sum(c) == 0; differences from a reference level make
    # equality cases (constant sequences) come out as exactly 0
    ref = seq.energy(next(iter(coeffs)), n)
    return sum(c * (seq.energy(m, n) - ref) for m, c in coeffs.items())


def _record(seq, name, m, coeffs, lhs, rhs, tol, n=1):
    terms = [(seq, mm, n, c) for mm, c in coeffs.items() if c != 0]
    margin = _margin(seq, coeffs, n)
    return CheckRecord(name, m, lhs, rhs, margin, coupled_tolerance(terms, tol), n=n,
                       alpha=seq.alpha)


def _skip(report, name, m, reason):
    report.skipped.append({"check": name, "m": m, "reason": reason})


def _hypothesis(spec):
    return spec is None or spec.certificate != NOT_SUPERHARMONIC


# --------------------------------------------------------------------------- #
# pseudoconcavity                                                              #
# --------------------------------------------------------------------------- #


def check_local_inequalities(seq, tol=None, spec=None):
    """Min-neighbour, concavity and weighted-concavity inequalities for m >= 1."""
    seq.require_contiguous()
    rep = OrderingReport(hypothesis_met=_hypothesis(spec),
                         tolerance_policy="fixed" if tol is not None else "coupled")
    for m in range(max(1, seq.m_min + 1), seq.m_max):
        if not (seq.usable(m - 1) and seq.usable(m) and seq.usable(m + 1)):
            _skip(rep, "local", m, "touches an unconverged sector")
            continue
        lo, mid, hi = seq.energy(m - 1), seq.energy(m), seq.energy(m + 1)
        k = m - 1 if lo <= hi else m + 1
        rep.records.append(_record(seq, "min_neighbour", m, {m: 1.0, k: -1.0},
                                   min(lo, hi), mid, tol))
        if mid >= lo:
            rep.records.append(_record(seq, "concavity", m, {m: 1.0, m - 1: -0.5, m + 1: -0.5},
                                       (lo + hi) / 2, mid, tol))
        if mid >= hi:
            w = 2 * m + 1
            rep.records.append(_record(
                seq, "weighted_concavity", m, {m: 1.0, m - 1: -m / w, m + 1: -(m + 1) / w},
                (m * lo + (m + 1) * hi) / w, mid, tol))
            # the same inequality read as (m+1) D_{m+1} <= m D_m, D_m = E_m - E_{m-1}
            rep.records.append(_record(
                seq, "delta_monotonicity", m,
                {m: 2 * m + 1.0, m - 1: -float(m), m + 1: -(m + 1.0)},
                (m + 1) * (hi - mid), m * (mid - lo), tol))
    return rep


@lru_cache(maxsize=None)
def harmonic_number(m):
    """S_m = 1 + 1/2 + ... + 1/m as an exact fraction (S_0 = 0)."""
    if m < 0:
        raise ValueError("harmonic numbers need m >= 0")
    if m == 0:
        return Fraction(0)
    return harmonic_number(m - 1) + Fraction(1, m)


@dataclass
class TangentialBound:
    anchor: int
    kind: str
    values: dict
    harmonic: dict = field(default_factory=dict)


def tangential_bound_values(seq, ell):
    """Upper envelopes spanned by E_ell and E_{ell+1}; one or two kinds."""
    if not (seq.m_min <= ell < seq.m_max):
        raise UsageError(f"anchor {ell} outside {seq.m_min}..{seq.m_max - 1}")
    a, b = seq.energy(ell), seq.energy(ell + 1)
    out = []
    if a <= b:
        out.append(TangentialBound(ell, "increasing",
                                   {m: a + (m - ell) * (b - a) for m in seq.m_values}))
    if a >= b:
        # S_m for m < ell enter with a negative difference; the m < 0 part of a
        # negative-m extension is not covered
        ms = [m for m in seq.m_values if m >= 0]
        diffs = {m: harmonic_number(m) - harmonic_number(ell) for m in ms}
        out.append(TangentialBound(
            ell, "decreasing",
            {m: a + float(diffs[m] * (ell + 1)) * (b - a) for m in ms},
            {m: harmonic_number(m) for m in ms}))
    return out


def tangential_upper_bounds(seq, ell, tol=None, spec=None, detail=True):
    """E_m below the tangent line (increasing side) or S_m envelope (decreasing side).

    With ``detail=False`` only the tightest record per bound kind is kept.
    """
    seq.require_contiguous()
    rep = OrderingReport(hypothesis_met=_hypothesis(spec),
                         tolerance_policy="fixed" if tol is not None else "coupled")
    if not (seq.usable(ell) and seq.usable(ell + 1)):
        _skip(rep, "tangential", ell, "anchor touches an unconverged sector")
        return rep
    for tb in tangential_bound_values(seq, ell):
        recs = []
        for m, bound in tb.values.items():
            if m in (ell, ell + 1):
                continue
            if not seq.usable(m):
                _skip(rep, f"tangential_{tb.kind}", [ell, m], "unconverged sector")
                continue
            if tb.kind == "increasing":
                c = float(m - ell)
            else:
                c = float((harmonic_number(m) - harmonic_number(ell)) * (ell + 1))
            coeffs = {ell: 1.0 - c, ell + 1: c}
            coeffs[m] = coeffs.get(m, 0.0) - 1.0
            recs.append(_record(seq, f"tangential_{tb.kind}", [ell, m], coeffs,
                                seq.energy(m), bound, tol))
        if not detail and recs:
            recs = [min(recs, key=lambda r: (r.margin + r.tolerance, r.margin))]
        rep.records.extend(recs)
    return rep


def classify_turning_point(seq, tol=None):
    """Locate M: strictly increasing (beyond tol) up to M, non-increasing after.

    Returns a dict with ``M``, ``decrease_observed``, ``pattern_valid`` and
    the first violating m if the pattern breaks.
    """
    seq.require_contiguous()
    ms = [m for m in seq.m_values if m >= 0]
    steps = []
    for m in ms[:-1]:
        if not (seq.usable(m) and seq.usable(m + 1)):
            steps.append(None)
            continue
        d = seq.energy(m + 1) - seq.energy(m)
        t = coupled_tolerance([(seq, m + 1, 1, 1.0), (seq, m, 1, -1.0)], tol)
        steps.append((d, t))
    M = ms[-1]
    for i, s in enumerate(steps):
        if s is None or not s[0] > s[1]:
            M = ms[i]
            break
    violation = None
    for i, s in enumerate(steps):
        if ms[i] >= M and s is not None and s[0] > s[1]:
            violation = ms[i]
            break
    gaps = [ms[i] for i, s in enumerate(steps) if s is None]
    return {
        "M": M,
        "decrease_observed": M < ms[-1],
        "pattern_valid": violation is None,
        "violation_at": violation,
        "unconverged_steps": gaps,
        "argmax": int(ms[int(np.nanargmax(seq.ground()[-len(ms):]))]),
    }


def turning_point_report(seq, tol=None, spec=None):
    rep = OrderingReport(hypothesis_met=_hypothesis(spec),
                         tolerance_policy="fixed" if tol is not None else "coupled")
    tp = classify_turning_point(seq, tol)
    rep.summaries["turning_point"] = tp
    # non-increase beyond M, one record per step
    for m in range(tp["M"], seq.m_max):
        if seq.usable(m) and seq.usable(m + 1):
            rep.records.append(_record(seq, "non_increasing_after_M", m, {m: 1.0, m + 1: -1.0},
                                       seq.energy(m + 1), seq.energy(m), tol))
    return rep


def check_general_bound(seq, tol=None):
    """E_{m,n} <= E_{m+1,n} + B for every available m and level n.

    Holds for any potential, so the hypothesis flag is always set.
    """
    seq.require_contiguous()
    rep = OrderingReport(tolerance_policy="fixed" if tol is not None else "coupled")
    for n in range(1, seq.n_levels + 1):
        for m in seq.m_values[:-1]:
            if not (seq.usable(m, n) and seq.usable(m + 1, n)):
                _skip(rep, "general_bound", m, f"level {n} unconverged")
                continue
            lhs = seq.energy(m, n)
            rhs = seq.energy(m + 1, n) + seq.B
            terms = [(seq, m + 1, n, 1.0), (seq, m, n, -1.0)]
            rep.records.append(CheckRecord("general_bound", m, lhs, rhs, rhs - lhs,
                                           coupled_tolerance(terms, tol), n=n, alpha=seq.alpha))
    return rep


def check_grosse_stubbe(seq, spec, tol=None):
    """Sign of dV/dr fixes the direction of E_m; skipped for constant or mixed signs."""
    seq.require_contiguous()
    rep = OrderingReport(tolerance_policy="fixed" if tol is not None else "coupled")
    sign = spec.radial_sign
    if sign in (INDEFINITE, CONSTANT):
        _skip(rep, "radial_monotonicity", None,
              f"radial sign {sign}: the hypothesis needs a definite, non-constant sign")
        return rep
    up = sign == NONDECREASING
    for m in seq.m_values[:-1]:
        if m < 0:
            continue
        if not (seq.usable(m) and seq.usable(m + 1)):
            _skip(rep, "radial_monotonicity", m, "unconverged sector")
            continue
        a, b = seq.energy(m), seq.energy(m + 1)
        coeffs = {m + 1: 1.0, m: -1.0} if up else {m: 1.0, m + 1: -1.0}
        lhs, rhs = (a, b) if up else (b, a)
        rep.records.append(_record(seq, "radial_" + ("increasing" if up else "decreasing"),
                                   m, coeffs, lhs, rhs, tol))
    return rep


def check_ground_state_zero(seq, tol=None, spec=None):
    """arg min of the ground levels at m = 0 when E_0 lies below the edge B."""
    rep = OrderingReport(hypothesis_met=_hypothesis(spec),
                         tolerance_policy="fixed" if tol is not None else "coupled")
    if not seq.usable(0):
        _skip(rep, "ground_state_zero", 0, "m = 0 unconverged")
        return rep
    if spec is not None and spec.unbounded_below:
        _skip(rep, "ground_state_zero", 0,
              "potential unbounded below: the spectral infimum is not an eigenvalue")
        return rep
    E0 = seq.energy(0)
    if not E0 < seq.B - coupled_tolerance([(seq, 0, 1, 1.0)], tol):
        _skip(rep, "ground_state_zero", 0, "E_0 is not below the essential-spectrum proxy B")
        return rep
    ms = [m for m in seq.m_values if m > 0 and seq.usable(m)]
    for m in ms:
        rep.records.append(_record(seq, "ground_state_zero", m, {m: 1.0, 0: -1.0},
                                   E0, seq.energy(m), tol))
    g = seq.ground()
    rep.summaries["argmin"] = int(seq.m_values[int(np.nanargmin(g))])
    return rep


def check_plateau(seq, tol=None):
    """Sectors sitting at the essential-spectrum proxy B (no bound state).

    Returns records ``edge_plateau`` for m >= M_edge, where M_edge is the
    first m from which every ground level stays within tolerance of B.
    """
    rep = OrderingReport(tolerance_policy="fixed" if tol is not None else "coupled")
    ms = [m for m in seq.m_values if m >= 0 and seq.usable(m)]
    at_edge = {}
    for m in ms:
        E = seq.energy(m)
        t = coupled_tolerance([(seq, m, 1, 1.0)], tol)
        at_edge[m] = (abs(E - seq.B) <= t, E, t)
    M = None
    for m in reversed(ms):
        if at_edge[m][0]:
            M = m
        else:
            break
    rep.summaries["plateau"] = {"M": M, "reached": M is not None,
                                "below_edge": [m for m in ms if at_edge[m][1] < seq.B - at_edge[m][2]]}
    if M is not None:
        for m in ms:
            if m >= M:
                E, t = at_edge[m][1], at_edge[m][2]
                rep.records.append(CheckRecord("edge_plateau", m, E, seq.B, -abs(E - seq.B), t,
                                               alpha=seq.alpha))
    return rep


def check_nondecreasing(seq, tol=None):
    rep = OrderingReport(tolerance_policy="fixed" if tol is not None else "coupled")
    for m in seq.m_values[:-1]:
        if m >= 0 and seq.usable(m) and seq.usable(m + 1):
            rep.records.append(_record(seq, "nondecreasing", m, {m + 1: 1.0, m: -1.0},
                                       seq.energy(m), seq.energy(m + 1), tol))
    return rep


def fit_log_asymptote(seq, m_window):
    """Least-squares fit E_m = slope * ln m + intercept over the window."""
    lo, hi = m_window
    ms = np.arange(lo, hi + 1)
    if lo < 1 or len(ms) < 8:
        raise UsageError("window must start at m >= 1 and hold at least 8 sectors")
    if any(not seq.usable(int(m)) for m in ms):
        raise UsageError("window touches unconverged or missing sectors")
    E = np.array([seq.energy(int(m)) for m in ms])
    if np.any(np.diff(E) > 0):
        raise UsageError("sequence is not decreasing on the window")
    x = np.log(ms)
    slope, intercept = np.polyfit(x, E, 1)
    fit = slope * x + intercept
    return {"slope": float(slope), "intercept": float(intercept),
            "residual": float(np.sqrt(np.mean((E - fit) ** 2))), "window": [int(lo), int(hi)]}


def verify_sequence(seq, spec, tol=None, tangential_detail=False):
    """The full battery of ordering checks on one sequence."""
    rep = OrderingReport(hypothesis_met=_hypothesis(spec),
                         tolerance_policy="fixed" if tol is not None else "coupled")
    rep.extend(check_local_inequalities(seq, tol, spec))
    for ell in range(max(seq.m_min, 0), seq.m_max):
        rep.extend(tangential_upper_bounds(seq, ell, tol, spec, detail=tangential_detail))
    rep.extend(turning_point_report(seq, tol, spec))
    rep.extend(check_general_bound(seq, tol))
    rep.extend(check_grosse_stubbe(seq, spec, tol))
    rep.extend(check_ground_state_zero(seq, tol, spec))
    if spec.repulsive_charge > 0 and not spec.is_periodic:
        rep.extend(check_plateau(seq, tol))
    rep.hypothesis_met = _hypothesis(spec)
    return rep


def report_passes(report):
    """Exit-code verdict: informational (hypothesis not met) records never fail a run,
    except those that hold for every potential."""
    always = {"general_bound", "radial_increasing", "radial_decreasing"}
    if report.hypothesis_met:
        return report.passed
    return all(r.passed for r in report.records if r.check in always)
