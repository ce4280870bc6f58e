"""Lowest Bloch band E_m(alpha) of periodic chains and its ordering checks."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .potentials import NOT_SUPERHARMONIC
from .ordering import (
    CheckRecord,
    OrderingReport,
    SweepConfig,
    check_local_inequalities,
    coupled_tolerance,
    sweep_sectors,
    tangential_upper_bounds,
    turning_point_report,
    write_csv,
)

DEFAULT_N_ALPHA = 16
MIN_N_ALPHA = 8
BAND_COLUMNS = ("alpha", "m", "energy", "residual", "converged")
_EPS = np.finfo(float).eps


def alpha_grid(n_alpha=DEFAULT_N_ALPHA):
    """Uniform grid 2*pi*k/n over [0, 2*pi); contains pi for even n."""
    if n_alpha < MIN_N_ALPHA:
        raise UsageError(f"need at least {MIN_N_ALPHA} quasi-momenta, got {n_alpha}")
    return [2.0 * math.pi * k / n_alpha for k in range(n_alpha)]


@dataclass
class BandSurface:
    alphas: list
    m_values: list
    values: np.ndarray  # (n_alpha, n_m)
    residuals: np.ndarray
    converged: np.ndarray
    slices: dict = field(default_factory=dict)  # alpha index -> EnergySequence
    digests: list = field(default_factory=list)

    def slice(self, alpha):
        return self.slices[self.index(alpha)]

    def index(self, alpha):
        a = float(np.mod(alpha, 2 * math.pi))
        for i, x in enumerate(self.alphas):
            if abs(x - a) < 1e-12 or abs(abs(x - a) - 2 * math.pi) < 1e-12:
                return i
        raise KeyError(f"alpha {alpha} not on the grid")

    def conjugate_index(self, i):
        """Grid index of 2*pi - alpha_i, or None when it is not sampled."""
        try:
            return self.index(2 * math.pi - self.alphas[i])
        except KeyError:
            return None

    def rows(self):
        for i, a in enumerate(self.alphas):
            for j, m in enumerate(self.m_values):
                yield {"alpha": repr(float(a)), "m": m, "energy": repr(float(self.values[i, j])),
                       "residual": repr(float(self.residuals[i, j])),
                       "converged": str(bool(self.converged[i, j])).lower()}

    def to_csv(self, path=None):
        return write_csv(self.rows(), BAND_COLUMNS, path)

    def all_converged(self):
        return all(s.all_converged() for s in self.slices.values())


def compute_band(spec, field_cfg, m_range, alphas=None, cfg=None):
    """Solve every (m, alpha) Bloch sector; one EnergySequence per alpha."""
    if not spec.is_periodic:
        raise UsageError("compute_band needs a periodic potential")
    cfg = cfg or SweepConfig()
    alphas = alpha_grid() if alphas is None else [float(np.mod(a, 2 * math.pi)) for a in alphas]
    if len(alphas) < MIN_N_ALPHA:
        raise UsageError(f"need at least {MIN_N_ALPHA} quasi-momenta, got {len(alphas)}")
    if len(set(alphas)) != len(alphas):
        raise UsageError("quasi-momenta must be distinct")
    if 0.0 not in alphas:
        raise UsageError("the quasi-momentum grid must contain alpha = 0")
    alphas = sorted(alphas)
    slices = {}
    for i, a in enumerate(alphas):
        slices[i] = sweep_sectors(spec, field_cfg, m_range, 1, cfg, alpha=a)
    ms = slices[0].m_values
    values = np.array([[s.energy(m) for m in ms] for s in slices.values()])
    residuals = np.array([[s.residual(m) for m in ms] for s in slices.values()])
    converged = np.array([[s.usable(m) for m in ms] for s in slices.values()])
    digests = [hashlib.sha256(s.to_csv().encode()).hexdigest()[:16] for s in slices.values()]
    return BandSurface(alphas, ms, values, residuals, converged, slices, digests)


def check_band_pseudoconcavity(surface, tol=None, spec=None):
    """The single-sequence battery, run on every alpha slice."""
    rep = OrderingReport(tolerance_policy="fixed" if tol is not None else "coupled")
    if spec is not None:
        rep.hypothesis_met = spec.certificate != NOT_SUPERHARMONIC
    for i, seq in surface.slices.items():
        part = OrderingReport()
        part.extend(check_local_inequalities(seq, tol, spec))
        for ell in range(seq.m_min, seq.m_max):
            part.extend(tangential_upper_bounds(seq, ell, tol, spec, detail=False))
        part.extend(turning_point_report(seq, tol, spec))
        for k, v in part.summaries.items():
            rep.summaries[f"alpha[{i}]/{k}"] = v
        rep.records.extend(part.records)
        rep.skipped.extend(part.skipped)
    return rep


def check_alpha_minimum(surface, tol=None):
    """E_m(0) <= E_m(alpha) for every sampled (m, alpha)."""
    rep = OrderingReport(tolerance_policy="fixed" if tol is not None else "coupled")
    base = surface.slice(0.0)
    for i, seq in surface.slices.items():
        if surface.alphas[i] == 0.0:
            continue
        for m in surface.m_values:
            if not (seq.usable(m) and base.usable(m)):
                rep.skipped.append({"check": "alpha_minimum", "m": m, "reason": "unconverged"})
                continue
            lhs, rhs = base.energy(m), seq.energy(m)
            t = coupled_tolerance([(seq, m, 1, 1.0), (base, m, 1, -1.0)], tol)
            rep.records.append(CheckRecord("alpha_minimum", m, lhs, rhs, rhs - lhs, t,
                                           alpha=surface.alphas[i]))
    argmin = {}
    for j, m in enumerate(surface.m_values):
        row = surface.values[:, j]
        argmin[m] = [surface.alphas[i] for i in np.flatnonzero(row <= row.min() + 1e-12)]
    rep.summaries["alpha_argmin"] = argmin
    return rep


def check_alpha_symmetry(surface):
    """E_m(alpha) = E_m(2*pi - alpha) up to the solver residuals."""
    rep = OrderingReport(tolerance_policy="solver")
    for i, a in enumerate(surface.alphas):
        k = surface.conjugate_index(i)
        if k is None or k <= i:
            continue
        for j, m in enumerate(surface.m_values):
            e1, e2 = surface.values[i, j], surface.values[k, j]
            # |lambda - theta| <= ||r|| for Hermitian matrices, plus rounding
            t = surface.residuals[i, j] + surface.residuals[k, j] \
                + 64 * _EPS * max(1.0, abs(e1))
            rep.records.append(CheckRecord("alpha_conjugation", m, e1, e2, -abs(e1 - e2), t,
                                           alpha=a))
    return rep


def check_band_continuity(surface, factor=10.0):
    """No increment along the closed alpha grid exceeds factor x the median one."""
    rep = OrderingReport(tolerance_policy="median-increment")
    order = np.argsort(surface.alphas)
    alphas = np.asarray(surface.alphas)[order]
    steps = np.diff(np.append(alphas, alphas[0] + 2 * math.pi))
    for j, m in enumerate(surface.m_values):
        vals = surface.values[order, j]
        res = surface.residuals[order, j]
        inc = np.abs(np.roll(vals, -1) - vals)
        med = float(np.median(inc))
        for i in range(len(inc)):
            t = float(res[i] + np.roll(res, -1)[i])
            rep.records.append(CheckRecord("band_continuity", m, float(inc[i]), factor * med,
                                           factor * med - float(inc[i]), t,
                                           alpha=float(alphas[i])))
        rep.summaries[f"lipschitz_estimate[m={m}]"] = float(np.max(inc / steps))
    return rep


def verify_band(surface, spec, tol=None):
    rep = OrderingReport(tolerance_policy="fixed" if tol is not None else "coupled")
    rep.extend(check_band_pseudoconcavity(surface, tol, spec))
    rep.extend(check_alpha_minimum(surface, tol))
    rep.extend(check_alpha_symmetry(surface))
    rep.extend(check_band_continuity(surface))
    rep.hypothesis_met = spec.certificate != NOT_SUPERHARMONIC
    return rep
