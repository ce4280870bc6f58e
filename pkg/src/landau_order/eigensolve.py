"""Lowest eigenpairs of Hermitian sector matrices.

Lanczos with full (two-pass) reorthogonalization.  By default the iteration
runs on the shift-inverted operator (A - sigma)^{-1}, sigma strictly below the
spectrum; the shift is certified by the inertia of a symmetric LDL^H-type
factorization, so the largest Ritz values of the transformed operator are
guaranteed to be the lowest eigenvalues of A.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spl

from .errors import ResourceError, UsageError
from .sector_operator import DENSE_CAP, dense_materialize, gershgorin_lower_bound

MAX_ITERATIONS_CAP = 50_000
BASIS_BYTES_CAP = 2 * 1024**3


@dataclass(frozen=True)
class SolveConfig:
    k: int = 1
    tol: float = 1e-8
    max_iterations: int | None = None
    seed: int = 42
    transform: str = "shift_invert"
    use_symmetry: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.transform not in ("shift_invert", "none"):
            raise ValueError(f"unknown transform {self.transform!r}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def iterations_for(self, dim):
        if self.max_iterations is not None:
            return self.max_iterations
        return min(10 * dim, MAX_ITERATIONS_CAP)


@dataclass
class SolveResult:
    eigenvalues: np.ndarray
    residual_norms: np.ndarray
    iterations: int
    converged: np.ndarray
    eigenvectors: np.ndarray | None = None
    shift: float | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def all_converged(self):
        return bool(np.all(self.converged))

    def to_dict(self):
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residual_norms": [float(x) for x in self.residual_norms],
            "iterations": int(self.iterations),
            "converged": [bool(x) for x in self.converged],
            "shift": None if self.shift is None else float(self.shift),
        }


def _matrix(op):
    mat = op.matrix if hasattr(op, "matrix") else op
    if sp.issparse(mat):
        return sp.csr_matrix(mat)
    return np.asarray(mat)


def _start_vector(n, dtype, rng):
    v = rng.standard_normal(n)
    if np.issubdtype(dtype, np.complexfloating):
        v = v + 1j * rng.standard_normal(n)
    return v.astype(dtype)


def _candidates(shift):
    if shift is None:
        return []
    if np.ndim(shift) == 0:
        return [float(shift)]
    return [float(x) for x in shift if x is not None and np.isfinite(x)]


def _factor(A, sigma):
    n = A.shape[0]
    M = sp.csc_matrix(A - sigma * sp.identity(n, dtype=A.dtype, format="csc"))
    lu = spl.splu(M, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                  options={"SymmetricMode": True})
    if not np.array_equal(lu.perm_r, lu.perm_c):
        return lu, -1  # pivoting left the diagonal; no inertia information
    # with symmetric pivoting the diagonal of U carries the inertia of A - sigma
    negatives = int(np.count_nonzero(lu.U.diagonal().real < 0))
    return lu, negatives


def _residuals(A, lam, Y):
    R = A @ Y - Y * lam[None, :]
    return np.linalg.norm(R, axis=0) / np.linalg.norm(Y, axis=0)


def _lanczos(apply, A, n, dtype, k, largest, to_lambda, tol, max_iter, rng, check_every):
    """Core iteration; returns (lam, Y, residuals, iterations, restarts)."""
    cap = min(max_iter + 1, n + 1, 64)
    Q = np.empty((cap, n), dtype=dtype)
    alphas, betas = [], []
    q = _start_vector(n, dtype, rng)
    q /= np.linalg.norm(q)
    Q[0] = q
    j = 0
    restarts = 0
    best = None
    beta_prev = 0.0
    while True:
        w = apply(Q[j])
        a = np.vdot(Q[j], w).real
        w = w - a * Q[j]
        if j > 0:
            w -= beta_prev * Q[j - 1]
        basis = Q[: j + 1]
        for _ in range(2):
            w -= basis.T @ (basis.conj() @ w)
        b = float(np.linalg.norm(w))
        alphas.append(a)
        m = j + 1

        last = m >= max_iter or m >= n
        if m >= k and (m % check_every == 0 or last or b < 1e-12):
            theta, S = sla.eigh_tridiagonal(np.array(alphas), np.array(betas)) \
                if m > 1 else (np.array(alphas), np.ones((1, 1)))
            order = np.argsort(theta)[::-1] if largest else np.argsort(theta)
            sel = order[:k]
            lam = to_lambda(theta[sel])
            Y = basis.T @ S[:, sel].astype(dtype)
            res = _residuals(A, lam, Y)
            best = (lam, Y, res)
            if np.all(res <= tol) or last:
                return lam, Y, res, m, restarts

        if m >= max_iter or m >= n:
            break
        if b < 1e-12 * max(1.0, abs(a)):
            # invariant subspace: restart orthogonally (picks up exact degeneracies)
            w = _start_vector(n, dtype, rng)
            for _ in range(2):
                w -= basis.T @ (basis.conj() @ w)
            b_new = float(np.linalg.norm(w))
            if b_new < 1e-12:
                break
            restarts += 1
            betas.append(0.0)
            q_next = w / b_new
        else:
            betas.append(b)
            q_next = w / b
        if m >= Q.shape[0]:
            new_cap = min(2 * Q.shape[0], max_iter + 1, n + 1)
            if new_cap * n * Q.itemsize > BASIS_BYTES_CAP:
                break
            Q = np.concatenate([Q, np.empty((new_cap - Q.shape[0], n), dtype=dtype)])
        Q[m] = q_next
        beta_prev = betas[-1]
        j = m
    lam, Y, res = best if best is not None else (np.full(k, np.nan), None, np.full(k, np.inf))
    return lam, Y, res, len(alphas), restarts


def _solve_block(A, cfg, k, floor, shift, rng):
    n = A.shape[0]
    dtype = np.result_type(A.dtype, np.float64)
    max_iter = cfg.iterations_for(n)
    diag = {"transform": cfg.transform, "factorizations": 0}
    if cfg.transform == "none":
        apply = lambda x: A @ x  # noqa: E731
        lam, Y, res, its, restarts = _lanczos(apply, A, n, dtype, k, False, lambda t: t,
                                              cfg.tol, max_iter, rng, check_every=1)
        diag["restarts"] = restarts
        return lam, Y, res, its, None, diag

    if not sp.issparse(A):
        A = sp.csr_matrix(A)
    sigma = None
    lu = None
    rejected = 0
    for cand in _candidates(shift):
        try:
            lu, neg = _factor(A, cand)
        except RuntimeError:
            neg = -1
        diag["factorizations"] += 1
        if neg == 0:
            sigma = float(cand)
            break
        rejected += 1
    diag["hints_rejected"] = rejected
    if sigma is None:
        sigma = floor - max(1e-3, 1e-3 * abs(floor))
        lu, neg = _factor(A, sigma)
        diag["factorizations"] += 1
        if neg:
            raise RuntimeError(f"shift {sigma} is not below the spectrum ({neg} negative pivots)")
    lam, Y, res, its, restarts = _lanczos(
        lu.solve, A, n, dtype, k, True, lambda t: sigma + 1.0 / t, cfg.tol, max_iter, rng,
        check_every=3)
    diag["restarts"] = restarts
    return lam, Y, res, its, sigma, diag


def lowest_k(op, cfg=None, shift=None):
    """k lowest eigenpairs of a SectorOperator (or any Hermitian matrix).

    ``shift`` is an optional guess (or list of guesses, tried in order) just
    below the lowest eigenvalue.  A guess is used only if the factorization
    confirms no eigenvalue lies beneath it; otherwise the potential floor of
    the operator (or its Gershgorin bound) is used.
    """
    cfg = cfg or SolveConfig()
    A = _matrix(op)
    n = A.shape[0]
    if cfg.k >= n:
        raise UsageError(f"k={cfg.k} must be below the dimension {n}")
    floor = getattr(op, "potential_floor", None)
    if floor is None:
        floor = gershgorin_lower_bound(A)
    rng = np.random.default_rng(cfg.seed)

    perm = op.mirror_permutation() if (cfg.use_symmetry and hasattr(op, "mirror_permutation")) \
        else None
    if perm is None:
        lam, Y, res, its, sigma, diag = _solve_block(A, cfg, cfg.k, floor, shift, rng)
        return _finish(lam, Y, res, its, sigma, diag, cfg)

    # z -> -z symmetry: split into even and odd blocks on the z > 0 half
    g = op.grid
    half = np.arange(n).reshape(g.n_r, g.n_z)[:, g.n_z // 2:].ravel()
    mirror = perm[half]
    A_pp = A[half][:, half]
    A_pq = A[half][:, mirror]
    parts = [(+1, (A_pp + A_pq).tocsr())]
    # the ground state is positive, hence even; odd states matter only for k > 1
    if cfg.k > 1:
        parts.append((-1, (A_pp - A_pq).tocsr()))
    lams, vecs, resids = [], [], []
    total_its = 0
    diag = {"symmetry": "z_parity", "blocks": []}
    sigma_used = None
    for sign, block in parts:
        kk = min(cfg.k, block.shape[0] - 1)
        lam, Y, res, its, sigma, d = _solve_block(block, cfg, kk, floor, shift, rng)
        total_its += its
        d["parity"] = "even" if sign > 0 else "odd"
        diag["blocks"].append(d)
        sigma_used = sigma if sigma_used is None else sigma_used
        full = np.zeros((n, len(lam)), dtype=Y.dtype if Y is not None else float)
        if Y is not None:
            full[half] = Y / np.sqrt(2.0)
            full[mirror] = sign * Y / np.sqrt(2.0)
        lams.append(lam)
        vecs.append(full)
        resids.append(res)
    lam = np.concatenate(lams)
    order = np.argsort(lam, kind="stable")[: cfg.k]
    Y = np.concatenate(vecs, axis=1)[:, order]
    res = np.concatenate(resids)[order]
    return _finish(lam[order], Y, res, total_its, sigma_used, diag, cfg)


def _finish(lam, Y, res, its, sigma, diag, cfg):
    order = np.argsort(lam, kind="stable")
    lam, res = np.asarray(lam)[order], np.asarray(res)[order]
    if Y is not None:
        Y = Y[:, order]
        Y = Y / np.linalg.norm(Y, axis=0)
    return SolveResult(
        eigenvalues=lam, residual_norms=res, iterations=int(its),
        converged=np.asarray(res <= cfg.tol), eigenvectors=Y, shift=sigma, diagnostics=diag)


def dense_reference(op, vectors=False):
    """Full ascending spectrum from a dense eigendecomposition (oracle path)."""
    A = _matrix(op)
    if A.shape[0] > DENSE_CAP:
        raise ResourceError(f"dimension {A.shape[0]} exceeds the dense cap {DENSE_CAP}")
    dense = dense_materialize(A)
    if vectors:
        return sla.eigh(dense)
    return sla.eigh(dense, eigvals_only=True)


def residual_check(op, result):
    """Recompute ||A v - lambda v|| / ||v|| independently of the solver.

    A pair is flagged when the recomputed residual exceeds ten times the
    reported one (with a rounding floor of 100 eps ||A||_1).
    """
    A = _matrix(op)
    Y = result.eigenvectors
    if Y is None:
        raise UsageError("result carries no eigenvectors")
    lam = np.asarray(result.eigenvalues)
    res = _residuals(A, lam, Y)
    norm1 = float(abs(A).sum(axis=0).max()) if sp.issparse(A) else float(np.abs(A).sum(axis=0).max())
    floor = 100 * np.finfo(float).eps * norm1
    reported = np.asarray(result.residual_norms)
    flagged = res > 10 * reported + floor
    return {
        "recomputed": [float(x) for x in res],
        "reported": [float(x) for x in reported],
        "flagged": [bool(x) for x in flagged],
        "ok": not bool(np.any(flagged)),
    }
