"""Finite-difference realization of the reduced sector Hamiltonian.

For angular momentum m the operator on L^2(r dr dz) is

    -d2/dr2 - (1/r) d/dr - d2/dz2 + B^2 r^2/4 + m^2/r^2 - m B + V(r, z).

The radial part is discretized in flux form on cell-centred nodes
r_i = (i + 1/2) h_r, whose innermost face has zero radius, so no axis
condition is imposed for any m.  The diagonal similarity with sqrt(r_i) makes
the stored matrix symmetric.  Neumann (no-flux) or Dirichlet faces close the
z-box; a periodic cell couples its last row to its first with e^{i alpha}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import ResourceError, UsageError
from .potentials import evaluate

H0 = 0.25
MIN_Z_MAX = 20.0
DEFAULT_MAX_DIMENSION = 3_000_000
DENSE_CAP = 4096


@dataclass(frozen=True)
class FieldConfig:
    B: float

    def __post_init__(self):
        if not self.B > 0:
            raise ValueError(f"B must be > 0, got {self.B}")

    @property
    def magnetic_length(self):
        """Width 1/sqrt(B) of the lowest-Landau-level Gaussian."""
        return 1.0 / math.sqrt(self.B)


@dataclass(frozen=True)
class Grid2D:
    n_r: int
    n_z: int
    h_r: float
    h_z: float
    r_max: float
    z_max: float | None = None
    period: float | None = None
    z_boundary: str = "neumann"
    resolution: int | None = None

    def __post_init__(self):
        if self.z_boundary not in ("neumann", "dirichlet", "periodic"):
            raise ValueError(f"unknown z_boundary {self.z_boundary!r}")
        if (self.period is None) == (self.z_boundary == "periodic"):
            raise ValueError("period is required exactly for periodic grids")
        if self.periodic and self.n_z < 3:
            raise ValueError("periodic cells need n_z >= 3")
        if not self.periodic and self.n_z % 2:
            raise ValueError("symmetric z-boxes need an even n_z")

    @property
    def periodic(self):
        return self.z_boundary == "periodic"

    @property
    def dimension(self):
        return self.n_r * self.n_z

    @property
    def r(self):
        return (np.arange(self.n_r) + 0.5) * self.h_r

    @property
    def z(self):
        if self.periodic:
            return np.arange(self.n_z) * self.h_z
        half = (np.arange(self.n_z // 2) + 0.5) * self.h_z
        # built by mirroring so that z[n-1-j] == -z[j] bit for bit
        return np.concatenate([-half[::-1], half])

    def mesh(self):
        return np.meshgrid(self.r, self.z, indexing="ij")

    def index(self, i, j):
        return i * self.n_z + j

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def radial_extent(field_cfg, m_max):
    """2.5 orbit radii of the m_max Landau orbital plus 5 magnetic lengths."""
    return 2.5 * math.sqrt(2.0 * (m_max + 1) / field_cfg.B) + 5.0 * field_cfg.magnetic_length


def build_grid(field_cfg, m_max, spec, resolution, z_max=None, z_boundary="neumann",
               max_dimension=DEFAULT_MAX_DIMENSION):
    if m_max < 0:
        raise UsageError("m_max must be >= 0")
    h = H0 / 2**resolution
    n_r = math.ceil(radial_extent(field_cfg, m_max) / h - 1e-9)
    if spec.is_periodic:
        a = spec.period
        n_z = max(4, math.ceil(a / h - 1e-9))
        grid = Grid2D(n_r, n_z, h, a / n_z, n_r * h, period=a, z_boundary="periodic",
                      resolution=resolution)
    else:
        if z_max is None:
            support = spec.z_support
            reach = 0.0 if support is None else max(abs(support[0]), abs(support[1]))
            z_max = max(MIN_Z_MAX, reach + MIN_Z_MAX)
        n_half = math.ceil(z_max / h - 1e-9)
        grid = Grid2D(n_r, 2 * n_half, h, h, n_r * h, z_max=n_half * h,
                      z_boundary=z_boundary, resolution=resolution)
    if grid.dimension > max_dimension:
        raise ResourceError(
            f"grid {grid.n_r}x{grid.n_z} = {grid.dimension} unknowns exceeds the cap "
            f"{max_dimension}; lower the resolution (now {resolution})")
    return grid


@dataclass(frozen=True)
class SectorOperator:
    m: int
    alpha: float | None
    matrix: sp.csr_matrix
    weight: np.ndarray
    field: FieldConfig
    grid: Grid2D
    spec_digest: str
    # min over nodes of the non-kinetic diagonal; the kinetic block is PSD,
    # so this bounds the spectrum from below
    potential_floor: float
    z_mirror: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def dimension(self):
        return self.matrix.shape[0]

    @property
    def is_complex(self):
        return np.iscomplexobj(self.matrix.data)

    def mirror_permutation(self):
        """Index map of z -> -z on the node ordering, or None."""
        if not self.z_mirror:
            return None
        g = self.grid
        idx = np.arange(g.dimension).reshape(g.n_r, g.n_z)
        return idx[:, ::-1].ravel()


def _potential_diagonal(spec, field_cfg, m, grid):
    R, Z = grid.mesh()
    V = evaluate(spec, R, Z)
    r = grid.r[:, None]
    B = field_cfg.B
    return B * B * r * r / 4.0 + (m * m) / (r * r) - m * B + V


def _kinetic_entries(grid, wrap):
    """Upper-triangle couplings and the kinetic diagonal of the stencil.

    ``wrap`` is the Bloch factor e^{i alpha} of a periodic cell (a float for
    alpha in {0, pi}, so that the real path stays real).
    """
    n_r, n_z = grid.n_r, grid.n_z
    hr, hz = grid.h_r, grid.h_z
    r = grid.r
    idx = np.arange(grid.dimension).reshape(n_r, n_z)
    dtype = complex if isinstance(wrap, complex) else float

    diag = np.full((n_r, n_z), 2.0 / hr**2 + 2.0 / hz**2)
    if grid.z_boundary == "neumann":
        diag[:, 0] -= 1.0 / hz**2
        diag[:, -1] -= 1.0 / hz**2
    elif grid.z_boundary == "dirichlet":
        # wall on the face: ghost value is -u
        diag[:, 0] += 1.0 / hz**2
        diag[:, -1] += 1.0 / hz**2

    # face radius (i+1) h_r between nodes i and i+1
    i = np.arange(n_r - 1)
    c_r = -(i + 1.0) / (hr * np.sqrt(r[:-1] * r[1:]))
    rows = [idx[:-1, :].ravel()]
    cols = [idx[1:, :].ravel()]
    vals = [np.repeat(c_r, n_z).astype(dtype)]

    c_z = -1.0 / hz**2
    rows.append(idx[:, :-1].ravel())
    cols.append(idx[:, 1:].ravel())
    vals.append(np.full(n_r * (n_z - 1), c_z, dtype=dtype))

    if grid.periodic:
        # psi(z + a) = e^{i alpha} psi(z): row "last" sees e^{i alpha} * first,
        # so the stored upper entry (first, last) carries the conjugate
        rows.append(idx[:, 0])
        cols.append(idx[:, -1])
        vals.append(np.full(n_r, c_z * np.conj(wrap), dtype=dtype))
    return diag, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def _build(spec, field_cfg, m, grid, alpha):
    if m < 0:
        raise UsageError("assemble takes m >= 0; use extend_negative_m for m < 0")
    wrap = None
    if grid.periodic:
        alpha = 0.0 if alpha is None else float(np.mod(alpha, 2 * np.pi))
        if alpha == 0.0:
            wrap = 1.0
        elif alpha == np.pi:
            wrap = -1.0
        else:
            wrap = complex(np.exp(1j * alpha))
    pot = _potential_diagonal(spec, field_cfg, m, grid)
    kin, rows, cols, vals = _kinetic_entries(grid, wrap)
    n = grid.dimension
    d = np.arange(n)
    upper_t = np.conj(vals) if np.iscomplexobj(vals) else vals
    mat = sp.coo_matrix(
        (np.concatenate([(kin + pot).ravel().astype(vals.dtype), vals, upper_t]),
         (np.concatenate([d, rows, cols]), np.concatenate([d, cols, rows]))),
        shape=(n, n),
    ).tocsr()
    mat.sort_indices()
    mirror = (not grid.periodic) and np.array_equal(pot, pot[:, ::-1])
    weight = np.repeat(grid.r * grid.h_r * grid.h_z, grid.n_z)
    return SectorOperator(
        m=int(m), alpha=alpha, matrix=mat, weight=weight, field=field_cfg, grid=grid,
        spec_digest=spec.digest, potential_floor=float(pot.min()), z_mirror=bool(mirror),
        meta={"potential_min": float(pot.min()), "potential_max": float(pot.max())},
    )


def assemble(spec, field_cfg, m, grid):
    """Sector matrix for angular momentum m (alpha = 0 on a periodic cell)."""
    return _build(spec, field_cfg, m, grid, None)


def assemble_bloch(spec, field_cfg, m, alpha, grid):
    """Sector matrix restricted to Bloch functions psi(z + a) = e^{i alpha} psi(z)."""
    if not grid.periodic:
        raise UsageError("assemble_bloch needs a periodic grid")
    if not spec.is_periodic:
        raise UsageError("assemble_bloch needs a periodic potential")
    return _build(spec, field_cfg, m, grid, alpha)


def dense_materialize(op):
    mat = op.matrix if hasattr(op, "matrix") else op
    if mat.shape[0] > DENSE_CAP:
        raise ResourceError(f"dimension {mat.shape[0]} exceeds the dense cap {DENSE_CAP}")
    return mat.toarray() if sp.issparse(mat) else np.array(mat)


def gershgorin_lower_bound(op):
    mat = sp.csr_matrix(op.matrix if hasattr(op, "matrix") else op)
    diag = mat.diagonal().real
    off = np.asarray(abs(mat).sum(axis=1)).ravel() - np.abs(mat.diagonal())
    return float(np.min(diag - off))


def write_matrix_market(op, path, comment=""):
    """Coordinate Matrix Market dump with 17 significant digits (exact round trip)."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(op.matrix), comment=comment, precision=17)


def read_matrix_market(path):
    return sp.csr_matrix(scipy.io.mmread(str(path)))
