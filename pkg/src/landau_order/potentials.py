"""Axially symmetric potentials V(r, z).

Every term carries two analytic facts used downstream: whether it is
superharmonic off the axis (in full or in the transverse (x, y) sense), and the
sign of its radial derivative.  These are read off the closed forms, never
sampled.  ``numerical_superharmonicity_scan`` exists only as a cross-check.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ChainConvergenceError, DomainError

SUPERHARMONIC = "superharmonic_off_axis"
TRANSVERSE_SUPERHARMONIC = "transverse_superharmonic_off_axis"
NOT_SUPERHARMONIC = "not_superharmonic"

NONDECREASING = "nondecreasing_in_r"
NONINCREASING = "nonincreasing_in_r"
INDEFINITE = "indefinite"
CONSTANT = "constant_in_r"

CHAIN_N_MAX = 1 << 20


# --------------------------------------------------------------------------- #
# terms                                                                        #
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class AxisCharge:
    """Attractive point charge ``-q/|x - p e_z|`` on the axis."""

    position: float
    charge: float

    kind = "axis_charge"
    # (superharmonic off axis, transverse-superharmonic off axis)
    laplacian = (True, False)
    radial = NONDECREASING

    def __post_init__(self):
        if not self.charge > 0:
            raise ValueError(f"AxisCharge.charge must be > 0, got {self.charge}")

    def potential(self, r, z):
        return -self.charge / np.sqrt(r * r + (z - self.position) ** 2)

    @property
    def attractive(self):
        return self.charge

    @property
    def z_support(self):
        return (self.position, self.position)


@dataclass(frozen=True)
class AxisSegment:
    """Uniformly charged attractive segment ``[z_lo, z_hi]`` on the axis."""

    z_lo: float
    z_hi: float
    linear_density: float

    kind = "axis_segment"
    laplacian = (True, False)
    radial = NONDECREASING

    def __post_init__(self):
        if not self.z_lo < self.z_hi:
            raise ValueError("AxisSegment requires z_lo < z_hi")
        if self.linear_density < 0:
            raise ValueError("AxisSegment.linear_density must be >= 0")

    def potential(self, r, z):
        with np.errstate(divide="ignore", invalid="ignore"):
            return -self.linear_density * (
                np.arcsinh((self.z_hi - z) / r) - np.arcsinh((self.z_lo - z) / r)
            )

    @property
    def attractive(self):
        return self.linear_density * (self.z_hi - self.z_lo)

    @property
    def z_support(self):
        return (self.z_lo, self.z_hi)


@dataclass(frozen=True)
class SmearedCharge:
    """Repulsive uniform ball of charge centred on the axis."""

    center_z: float
    radius: float
    total_charge: float

    kind = "smeared_charge"
    laplacian = (True, False)  # Laplacian is -4*pi*rho <= 0
    radial = NONINCREASING

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("SmearedCharge.radius must be > 0")
        if self.total_charge < 0:
            raise ValueError("SmearedCharge.total_charge must be >= 0")

    def potential(self, r, z):
        s = np.sqrt(r * r + (z - self.center_z) ** 2)
        R, q = self.radius, self.total_charge
        with np.errstate(divide="ignore"):
            return np.where(s < R, q * (3 * R * R - s * s) / (2 * R**3), q / s)

    @property
    def repulsive(self):
        return self.total_charge

    @property
    def z_support(self):
        return (self.center_z - self.radius, self.center_z + self.radius)


@dataclass(frozen=True)
class HollowTube:
    """Renormalized potential of an infinite charged tube of radius R.

    Zero inside, ``-tau*ln(r/R)`` outside; the Laplacian is a negative
    surface layer at r = R.
    """

    tau: float
    radius: float

    kind = "hollow_tube"
    laplacian = (True, True)  # z-independent, so both notions coincide
    radial = NONINCREASING

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("HollowTube.tau must be > 0")
        if not self.radius > 0:
            raise ValueError("HollowTube.radius must be > 0")

    def potential(self, r, z):
        r = np.asarray(r, dtype=float)
        outside = np.maximum(r, self.radius)
        return np.broadcast_to(-self.tau * np.log(outside / self.radius),
                               np.broadcast(r, z).shape)


@dataclass(frozen=True)
class SeparableHarmonic:
    """``c_perp*r^2 + omega_z^2*z^2``; a solver oracle, not a physical case."""

    c_perp: float
    omega_z: float

    kind = "separable_harmonic"

    def __post_init__(self):
        if self.c_perp < 0 or self.omega_z < 0:
            raise ValueError("SeparableHarmonic coefficients must be >= 0")

    @property
    def laplacian(self):
        # full Laplacian 4c + 2w^2, transverse Laplacian 4c
        return (self.c_perp == 0 and self.omega_z == 0, self.c_perp == 0)

    @property
    def radial(self):
        return NONDECREASING if self.c_perp > 0 else CONSTANT

    def potential(self, r, z):
        return self.c_perp * r * r + self.omega_z**2 * z * z


@dataclass(frozen=True)
class PeriodicChainSpec:
    """Nuclei at z = n*a plus one repulsive ball per cell centred at (n + 1/2)*a.

    The lattice sum is renormalized with ``(2*D/a)*ln N``, D the per-cell
    charge deficit.
    """

    period: float
    nucleus_charge: float
    ball_radius: float
    ball_charge: float
    tol: float = 1e-10

    kind = "periodic_chain"
    laplacian = (True, False)

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("PeriodicChainSpec.period must be > 0")
        if self.nucleus_charge < 0 or self.ball_charge < 0:
            raise ValueError("PeriodicChainSpec charges must be >= 0")
        if not 0 < self.ball_radius < self.period / 2:
            raise ValueError("ball radius must lie in (0, period/2)")
        if not self.tol > 0:
            raise ValueError("PeriodicChainSpec.tol must be > 0")

    @property
    def smeared(self):
        return SmearedCharge(self.period / 2, self.ball_radius, self.ball_charge)

    @property
    def renorm_deficit(self):
        return self.nucleus_charge - self.ball_charge

    @property
    def radial(self):
        if self.ball_charge > 0 and self.nucleus_charge > 0:
            return INDEFINITE
        if self.nucleus_charge > 0:
            return NONDECREASING
        if self.ball_charge > 0:
            return NONINCREASING
        return CONSTANT

    def potential(self, r, z):
        return renormalized_chain_sum(self, r, z, self.tol)


TERM_TYPES = {
    cls.kind: cls
    for cls in (AxisCharge, AxisSegment, SmearedCharge, HollowTube, SeparableHarmonic,
                PeriodicChainSpec)
}


# --------------------------------------------------------------------------- #
# the spec                                                                     #
# --------------------------------------------------------------------------- #


def _certificate(terms):
    full = all(t.laplacian[0] for t in terms)
    transverse = all(t.laplacian[1] for t in terms)
    if full:
        return SUPERHARMONIC
    if transverse:
        return TRANSVERSE_SUPERHARMONIC
    return NOT_SUPERHARMONIC


def _radial_sign(terms):
    signs = {t.radial for t in terms} - {CONSTANT}
    if not signs:
        return CONSTANT
    if len(signs) == 1:
        return signs.pop()
    return INDEFINITE


@dataclass(frozen=True)
class PotentialSpec:
    terms: tuple = ()
    certificate: str = field(init=False)
    radial_sign: str = field(init=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        chains = [t for t in terms if isinstance(t, PeriodicChainSpec)]
        if len(chains) > 1:
            raise ValueError("at most one periodic chain per potential")
        if chains:
            for t in terms:
                z_free = isinstance(t, HollowTube) or (
                    isinstance(t, SeparableHarmonic) and t.omega_z == 0)
                if t is not chains[0] and not z_free:
                    raise ValueError(
                        f"{type(t).__name__} breaks the z-periodicity of the chain")
        object.__setattr__(self, "certificate", _certificate(terms))
        object.__setattr__(self, "radial_sign", _radial_sign(terms))

    @property
    def chain(self):
        for t in self.terms:
            if isinstance(t, PeriodicChainSpec):
                return t
        return None

    @property
    def period(self):
        c = self.chain
        return None if c is None else c.period

    @property
    def is_periodic(self):
        return self.chain is not None

    @property
    def attractive_charge(self):
        return sum(getattr(t, "attractive", 0.0) for t in self.terms)

    @property
    def repulsive_charge(self):
        return sum(getattr(t, "repulsive", 0.0) for t in self.terms)

    @property
    def unbounded_below(self):
        """V -> -infinity far from the axis (tube, or a chain with net attraction)."""
        for t in self.terms:
            if isinstance(t, HollowTube):
                return True
            if isinstance(t, PeriodicChainSpec) and t.renorm_deficit > 0:
                return True
        return False

    @property
    def z_support(self):
        spans = [t.z_support for t in self.terms if hasattr(t, "z_support")]
        if not spans:
            return None
        return (min(s[0] for s in spans), max(s[1] for s in spans))

    def evaluate(self, r, z):
        return evaluate(self, r, z)

    # -- serialization ---------------------------------------------------- #

    def to_dict(self):
        doc = {"terms": []}
        for t in self.terms:
            d = {"type": t.kind}
            if isinstance(t, PeriodicChainSpec):
                doc["period"] = t.period
                d.update(nucleus_charge=t.nucleus_charge,
                         smeared={"radius": t.ball_radius, "total_charge": t.ball_charge},
                         tol=t.tol)
            else:
                d.update({k: getattr(t, k) for k in t.__dataclass_fields__})
            doc["terms"].append(d)
        return doc

    @classmethod
    def from_dict(cls, doc):
        terms = []
        for d in doc.get("terms", []):
            d = dict(d)
            kind = d.pop("type")
            if kind not in TERM_TYPES:
                raise ValueError(f"unknown potential term type {kind!r}")
            if kind == "periodic_chain":
                if "period" not in doc:
                    raise ValueError("periodic_chain requires a top-level 'period'")
                smeared = d.get("smeared", {})
                terms.append(PeriodicChainSpec(
                    period=float(doc["period"]),
                    nucleus_charge=float(d["nucleus_charge"]),
                    ball_radius=float(smeared["radius"]),
                    ball_charge=float(smeared["total_charge"]),
                    tol=float(d.get("tol", 1e-10)),
                ))
            else:
                terms.append(TERM_TYPES[kind](**{k: float(v) for k, v in d.items()}))
        spec = cls(tuple(terms))
        if doc.get("period") is not None and spec.period is None:
            raise ValueError("'period' given but no periodic_chain term")
        return spec

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    @property
    def digest(self):
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


# --------------------------------------------------------------------------- #
# operations                                                                   #
# --------------------------------------------------------------------------- #


def evaluate(spec, r, z):
    """V(r, z) as the sum of the closed-form term potentials.

    Raises DomainError naming the first term that is not finite at a
    requested point (e.g. an axis charge sampled on the axis).
    """
    r = np.asarray(r, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(r < 0):
        raise DomainError("r must be >= 0")
    shape = np.broadcast(r, z).shape
    total = np.zeros(shape)
    for t in spec.terms:
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.asarray(t.potential(r, z), dtype=float)
        bad = ~np.isfinite(v)
        if np.any(bad):
            idx = np.argwhere(np.broadcast_to(bad, shape))[0]
            rr = np.broadcast_to(r, shape)[tuple(idx)]
            zz = np.broadcast_to(z, shape)[tuple(idx)]
            raise DomainError(f"{type(t).__name__} is not finite at r={rr!r}, z={zz!r}")
        total = total + v
    return total if shape else float(total)


class _ChainCache:
    """Per-point cache of chain sums, keyed by rounded (r, z mod a).

    An optional on-disk layer (directory from ``LANDAU_ORDER_CACHE``) stores
    whole arrays so a grid is summed once across processes.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._store = {}

    def clear(self):
        with self._lock:
            self._store.clear()

    def lookup(self, key, points):
        with self._lock:
            table = self._store.get(key, {})
            return [table.get(p) for p in points]

    def insert(self, key, points, values):
        with self._lock:
            table = self._store.setdefault(key, {})
            table.update(zip(points, values))


chain_cache = _ChainCache()


def _disk_path(key, r, z):
    root = os.environ.get("LANDAU_ORDER_CACHE")
    if not root:
        return None
    h = hashlib.sha256(repr(key).encode())
    h.update(np.ascontiguousarray(r).tobytes())
    h.update(np.ascontiguousarray(z).tobytes())
    return Path(root) / f"chain-{h.hexdigest()[:24]}.npy"


def renormalized_chain_sum(chain, r, z, tol=1e-10):
    """lim_N [ sum_{|n|<=N} cell(x - n a) + (2D/a) ln N ], by doubling N.

    Raises ChainConvergenceError if some point has not settled to ``tol``
    by N = 2**20.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    r = np.asarray(r, dtype=float)
    z = np.asarray(z, dtype=float)
    shape = np.broadcast(r, z).shape
    a = chain.period
    rf = np.broadcast_to(r, shape).ravel()
    zf = np.mod(np.broadcast_to(z, shape).ravel(), a)
    if np.any(rf <= 0):
        raise DomainError("chain sum requires r > 0")
    key = (a, chain.nucleus_charge, chain.ball_radius, chain.ball_charge, tol)

    path = _disk_path(key, rf, zf)
    if path is not None and path.exists():
        out = np.load(path)
        return out.reshape(shape) if shape else float(out[0])

    points = list(zip(np.round(rf, 12).tolist(), np.round(zf, 12).tolist()))
    cached = chain_cache.lookup(key, points)
    missing = np.array([i for i, v in enumerate(cached) if v is None], dtype=np.int64)
    out = np.array([np.nan if v is None else v for v in cached], dtype=float)
    if missing.size:
        vals, prev, _, ok = kernels.chain_sum(
            rf[missing], zf[missing], a, chain.nucleus_charge, chain.ball_charge,
            chain.ball_radius, a / 2, 2.0 * chain.renorm_deficit / a, tol, CHAIN_N_MAX)
        if not np.all(ok):
            i = int(np.argmin(ok))
            raise ChainConvergenceError(
                f"chain sum at r={rf[missing][i]!r}, z={zf[missing][i]!r} not converged "
                f"to {tol} by N={CHAIN_N_MAX}", last=float(vals[i]), previous=float(prev[i]))
        out[missing] = vals
        chain_cache.insert(key, [points[i] for i in missing], vals.tolist())
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.save(path, out)
    return out.reshape(shape) if shape else float(out[0])


def transverse_laplacian_certificate(spec):
    return spec.certificate


def radial_sign(spec):
    return spec.radial_sign


def _surfaces(spec):
    """(kind, parameter) pairs where the Laplacian has a surface layer."""
    out = []
    for t in spec.terms:
        if isinstance(t, HollowTube):
            out.append(("cylinder", t.radius, None))
        elif isinstance(t, SmearedCharge):
            out.append(("sphere", t.radius, t.center_z))
        elif isinstance(t, PeriodicChainSpec) and t.ball_charge > 0:
            out.append(("sphere_chain", t.ball_radius, t.period))
    return out


def _near_surface(spec, r, z, band):
    mask = np.zeros(np.broadcast(r, z).shape, dtype=bool)
    for kind, radius, where in _surfaces(spec):
        if kind == "cylinder":
            mask |= np.abs(r - radius) < band
        elif kind == "sphere":
            mask |= np.abs(np.hypot(r, z - where) - radius) < band
        else:
            zc = np.mod(z, where) - where / 2
            mask |= np.abs(np.hypot(r, zc) - radius) < band
    return mask


def numerical_superharmonicity_scan(spec, region, samples=21, h=1e-3, tolerance=1e-4,
                                    margin=None, mode="full"):
    """Finite-difference cross-check of the analytic certificate.

    ``region`` is ``((r_lo, r_hi), (z_lo, z_hi))``; a ``samples x samples``
    lattice is probed with the 7-point Cartesian Laplacian (5-point transverse
    Laplacian when ``mode="transverse"``).  Points within ``margin`` (default
    three stencil widths) of a surface layer are skipped.
    """
    (r_lo, r_hi), (z_lo, z_hi) = region
    if r_lo - h <= 0:
        raise DomainError("scan region must stay off the axis (r_lo > h)")
    if mode not in ("full", "transverse"):
        raise ValueError("mode must be 'full' or 'transverse'")
    margin = 3 * h if margin is None else margin
    R, Z = np.meshgrid(np.linspace(r_lo, r_hi, samples), np.linspace(z_lo, z_hi, samples),
                       indexing="ij")
    keep = ~_near_surface(spec, R, Z, margin)
    R, Z = R[keep], Z[keep]
    v0 = evaluate(spec, R, Z)
    # point (x, y) = (r, 0): x-neighbours change r by +-h, y-neighbours give hypot(r, h)
    lap = (evaluate(spec, R + h, Z) + evaluate(spec, R - h, Z)
           + 2 * evaluate(spec, np.hypot(R, h), Z) - 4 * v0)
    if mode == "full":
        lap = lap + evaluate(spec, R, Z + h) + evaluate(spec, R, Z - h) - 2 * v0
    lap = lap / (h * h)
    bad = lap > tolerance
    return {
        "min_discrete_laplacian": float(lap.min()) if lap.size else math.nan,
        "max_discrete_laplacian": float(lap.max()) if lap.size else math.nan,
        "violation_points": [(float(a), float(b), float(c))
                             for a, b, c in zip(R[bad], Z[bad], lap[bad])],
        "points_checked": int(lap.size),
        "mode": mode,
    }
