import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
from conftest import COULOMB, small_box

from landau_order.eigensolve import (
    MAX_ITERATIONS_CAP,
    SolveConfig,
    SolveResult,
    dense_reference,
    lowest_k,
    residual_check,
)
from landau_order.errors import ResourceError, UsageError
from landau_order.potentials import AxisCharge, PotentialSpec
from landau_order.sector_operator import FieldConfig, assemble, gershgorin_lower_bound


def random_symmetric(n, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    return (M + M.T) / 2


def test_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(k=0)
    with pytest.raises(ValueError):
        SolveConfig(tol=0.0)
    with pytest.raises(ValueError):
        SolveConfig(transform="cg")
    assert SolveConfig().iterations_for(100) == 1000
    assert SolveConfig().iterations_for(10**6) == MAX_ITERATIONS_CAP
    assert SolveConfig(max_iterations=7).iterations_for(10**6) == 7


def test_k_must_stay_below_dimension():
    with pytest.raises(UsageError):
        lowest_k(sp.identity(3, format="csr"), SolveConfig(k=3))


@pytest.mark.parametrize("transform", ["shift_invert", "none"])
def test_diagonal(transform):
    A = sp.diags(np.arange(1.0, 101.0)).tocsr()
    tol = 1e-13 if transform == "shift_invert" else 1e-8
    res = lowest_k(A, SolveConfig(k=3, transform=transform, tol=tol))
    np.testing.assert_allclose(res.eigenvalues, [1, 2, 3], atol=1e-12)
    assert res.all_converged
    assert np.all(res.residual_norms <= tol)


@pytest.mark.parametrize("transform", ["shift_invert", "none"])
def test_random_symmetric_against_dense(transform):
    A = random_symmetric(500, 0)
    res = lowest_k(sp.csr_matrix(A), SolveConfig(k=5, transform=transform, tol=1e-10))
    ref = sla.eigh(A, eigvals_only=True)[:5]
    assert np.max(np.abs(res.eigenvalues - ref)) <= 1e-10
    assert res.all_converged


def test_two_by_two():
    A = np.array([[2.0, 1.0], [1.0, 2.0]])
    np.testing.assert_allclose(dense_reference(A), [1.0, 3.0], atol=1e-15)
    assert lowest_k(sp.csr_matrix(A), SolveConfig(k=1)).eigenvalues[0] == pytest.approx(1.0)


def test_complex_hermitian_by_unitary_conjugation():
    rng = np.random.default_rng(5)
    Z = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    Q, _ = np.linalg.qr(Z)
    A = Q @ np.diag([0.0, 1.0, 2.0]) @ Q.conj().T
    A = (A + A.conj().T) / 2
    np.testing.assert_allclose(dense_reference(A), [0.0, 1.0, 2.0], atol=1e-12)
    res = lowest_k(sp.csr_matrix(A), SolveConfig(k=2))
    np.testing.assert_allclose(res.eigenvalues, [0.0, 1.0], atol=1e-12)


def test_exact_degeneracy_is_resolved():
    d = np.array([1.0, 1.0] + list(range(2, 100)), float)
    res = lowest_k(sp.diags(d).tocsr(), SolveConfig(k=3))
    np.testing.assert_allclose(res.eigenvalues, [1.0, 1.0, 2.0], atol=1e-12)


def test_dense_reference_cap():
    with pytest.raises(ResourceError):
        dense_reference(sp.identity(5000, format="csr"))


def test_corpus_oracle_equivalence(corpus):
    for op in corpus:
        res = lowest_k(op, SolveConfig(k=5))
        ref = dense_reference(op)[:5]
        assert np.max(np.abs(res.eigenvalues - ref)) <= 1e-8, op.spec_digest
        assert np.all(res.residual_norms <= 1e-8)


def test_landau_levels_at_resolution_two():
    from landau_order.sector_operator import build_grid

    free = PotentialSpec(())
    B = FieldConfig(1.0)
    grid = build_grid(B, 5, free, 2)
    for m in range(6):
        assert abs(lowest_k(assemble(free, B, m, grid)).eigenvalues[0] - 1.0) <= 1e-3


def test_residual_check_accepts_converged_pairs():
    op = assemble(COULOMB, FieldConfig(1.0), 1, small_box())
    res = lowest_k(op, SolveConfig(k=3))
    rep = residual_check(op, res)
    assert rep["ok"]
    assert max(rep["recomputed"]) <= res.residual_norms.max() * 10 + 1e-12
    assert max(rep["recomputed"]) <= 1e-8


def test_residual_check_flags_corruption():
    op = assemble(COULOMB, FieldConfig(1.0), 0, small_box())
    res = lowest_k(op, SolveConfig(k=1))
    Y = res.eigenvectors.copy()
    Y[int(np.argmax(np.abs(Y[:, 0]))), 0] = 0.0
    bad = SolveResult(res.eigenvalues, res.residual_norms, res.iterations, res.converged, Y)
    rep = residual_check(op, bad)
    assert rep["flagged"] == [True]
    assert not rep["ok"]


def test_residual_check_identity():
    n = 10
    v = np.zeros((n, 1))
    v[3, 0] = 1.0
    res = SolveResult(np.array([1.0]), np.array([0.0]), 0, np.array([True]), v)
    rep = residual_check(sp.identity(n, format="csr"), res)
    assert rep["recomputed"] == [0.0]
    assert rep["ok"]


def test_residual_check_needs_vectors():
    res = SolveResult(np.array([1.0]), np.array([0.0]), 0, np.array([True]))
    with pytest.raises(UsageError):
        residual_check(sp.identity(3, format="csr"), res)


def test_determinism():
    op = assemble(PotentialSpec((AxisCharge(0.3, 1.0),)), FieldConfig(1.0), 2, small_box())
    a = lowest_k(op, SolveConfig(k=3, seed=7))
    b = lowest_k(op, SolveConfig(k=3, seed=7))
    assert a.eigenvalues.tobytes() == b.eigenvalues.tobytes()
    assert a.residual_norms.tobytes() == b.residual_norms.tobytes()
    assert a.eigenvectors.tobytes() == b.eigenvectors.tobytes()
    assert a.iterations == b.iterations


def test_variational_bounds(corpus, rng):
    for op in corpus[::5]:
        lam = lowest_k(op, SolveConfig(k=1)).eigenvalues[0]
        assert lam >= gershgorin_lower_bound(op)
        for _ in range(3):
            x = rng.standard_normal(op.dimension)
            if op.is_complex:
                x = x + 1j * rng.standard_normal(op.dimension)
            rq = np.vdot(x, op.matrix @ x).real / np.vdot(x, x).real
            assert lam <= rq


def test_orthonormal_vectors(corpus):
    for op in corpus[::4]:
        res = lowest_k(op, SolveConfig(k=5))
        V = res.eigenvectors
        G = V.conj().T @ V
        assert np.max(np.abs(G - np.eye(5))) <= 1e-10


def test_symmetry_split_matches_full_solve():
    op = assemble(COULOMB, FieldConfig(1.0), 0, small_box())
    assert op.z_mirror
    a = lowest_k(op, SolveConfig(k=4))
    b = lowest_k(op, SolveConfig(k=4, use_symmetry=False))
    np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, atol=1e-10)
    assert a.diagnostics["symmetry"] == "z_parity"


def test_bad_shift_hint_is_rejected():
    op = assemble(COULOMB, FieldConfig(1.0), 0, small_box())
    ref = dense_reference(op)[0]
    res = lowest_k(op, SolveConfig(k=1), shift=[ref + 0.5, ref - 0.01])
    assert res.eigenvalues[0] == pytest.approx(ref, abs=1e-10)
    assert res.shift == pytest.approx(ref - 0.01)
    assert res.diagnostics["blocks"][0]["hints_rejected"] == 1


def test_partial_convergence_is_flagged():
    op = assemble(COULOMB, FieldConfig(1.0), 0, small_box())
    res = lowest_k(op, SolveConfig(k=2, tol=1e-16, max_iterations=10, use_symmetry=False))
    assert not res.all_converged
    assert np.all(np.isfinite(res.residual_norms))
    assert res.iterations <= 10
    d = res.to_dict()
    assert d["converged"] == [bool(x) for x in res.converged]
