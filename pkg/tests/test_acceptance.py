"""Acceptance criteria 1-10, one printed PASS/FAIL line each.

Tolerances and parameters are the ones stated by the criteria; nothing here is
loosened to make a criterion pass.  Run directly with
``python tests/test_acceptance.py`` or through pytest.
"""

import json
import math
import time

import numpy as np
import pytest
from conftest import operator_corpus

from landau_order import cli
from landau_order.bloch_bands import (
    alpha_grid,
    check_alpha_minimum,
    check_alpha_symmetry,
    check_band_pseudoconcavity,
    compute_band,
)
from landau_order.config import from_dict
from landau_order.eigensolve import SolveConfig, dense_reference, lowest_k
from landau_order.ordering import (
    SweepConfig,
    check_general_bound,
    check_grosse_stubbe,
    check_ground_state_zero,
    check_local_inequalities,
    check_nondecreasing,
    check_plateau,
    classify_turning_point,
    coupled_tolerance,
    fit_log_asymptote,
    sweep_sectors,
    tangential_upper_bounds,
)
from landau_order.potentials import (
    AxisCharge,
    HollowTube,
    PeriodicChainSpec,
    PotentialSpec,
    SeparableHarmonic,
    SmearedCharge,
)
from landau_order.sector_operator import FieldConfig

pytestmark = pytest.mark.slow

FREE = PotentialSpec(())
COULOMB = PotentialSpec((AxisCharge(0.0, 1.0),))


def report(capsys, number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} :: {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)
    return ok


def test_criterion_01_landau_baseline(capsys):
    t0 = time.perf_counter()
    seq = sweep_sectors(FREE, FieldConfig(1.0), range(11),
                        cfg=SweepConfig(resolution=3, richardson=False))
    elapsed = time.perf_counter() - t0
    dev = float(np.max(np.abs(seq.ground() - 1.0)))
    ok = seq.all_converged() and dev <= 1e-3 and elapsed < 30.0
    report(capsys, 1, "V=0, B=1, m=0..10, l=3: |E_m - 1| <= 1e-3 in < 30 s", ok,
           f"max |E_m - B| = {dev:.2e}, runtime {elapsed:.1f} s")
    assert ok


def test_criterion_02_separable_oracle(capsys):
    spec = PotentialSpec((SeparableHarmonic(0.75, 1.0),))
    t0 = time.perf_counter()
    seq = sweep_sectors(spec, FieldConfig(1.0), range(11),
                        cfg=SweepConfig(resolution=3, richardson=False))
    elapsed = time.perf_counter() - t0
    omega, B, wz = 1.0, 1.0, 1.0
    exact = np.array([2 * omega * (m + 1) - B * m + wz for m in range(11)])
    dev = float(np.max(np.abs(seq.ground() - exact)))
    ok = seq.all_converged() and dev <= 2e-3 and elapsed < 60.0
    report(capsys, 2, "separable c=3/4, w_z=1: |E_m - (m+3)| <= 2e-3 in < 60 s", ok,
           f"max deviation {dev:.2e}, runtime {elapsed:.1f} s")
    assert ok


def test_criterion_03_coulomb_suite(capsys):
    t0 = time.perf_counter()
    parts = []
    ok = True
    for B in (0.5, 1.0, 5.0):
        seq = sweep_sectors(COULOMB, FieldConfig(B), range(21),
                            cfg=SweepConfig(resolution=2, richardson=True))
        mono = check_grosse_stubbe(seq, COULOMB)
        local = check_local_inequalities(seq, spec=COULOMB)
        conc = local.by_check("concavity")
        increasing = bool(mono.records) and all(r.strict for r in mono.records)
        concave = len(conc) == 19 and all(r.strict for r in conc)
        gsz = check_ground_state_zero(seq, spec=COULOMB)
        argmin0 = gsz.summaries.get("argmin") == 0 and gsz.passed
        gap = seq.energy(20) - B
        near_edge = abs(gap) <= 0.05
        ratio = min(r.margin / r.tolerance for r in mono.records + conc)
        ok &= seq.all_converged() and increasing and concave and argmin0 and near_edge
        parts.append(f"B={B}: increasing={increasing} concave={concave} "
                     f"(min margin/tol {ratio:.0f}) argmin=0:{argmin0} "
                     f"E_20-B={gap:+.4f} within 0.05:{near_edge}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300.0
    report(capsys, 3, "Coulomb B in {0.5,1,5}, m=0..20", ok,
           "; ".join(parts) + f"; runtime {elapsed:.0f} s")
    assert ok


def test_criterion_04_ion_plateau(capsys):
    spec = PotentialSpec((AxisCharge(0.0, 1.0), SmearedCharge(0.0, 8.0, 2.0)))
    seq = sweep_sectors(spec, FieldConfig(1.0), range(13),
                        cfg=SweepConfig(resolution=1, richardson=True, domain_check=True))
    nondec = check_nondecreasing(seq)
    plateau = check_plateau(seq)
    info = plateau.summaries["plateau"]
    ok = (seq.all_converged() and nondec.passed and info["reached"]
          and info["M"] < seq.m_max and plateau.passed)
    report(capsys, 4, "ion (charge 1 + ball C=2): non-decreasing, E_m = B from finite M", ok,
           f"non-decreasing={nondec.passed}, plateau from M={info['M']}, "
           f"bound sectors {info['below_edge']}")
    assert ok


def test_criterion_05_hollow_tube(capsys):
    spec = PotentialSpec((AxisCharge(0.0, 1.0), HollowTube(1.0, 4.0)))
    B = 1.0
    t0 = time.perf_counter()
    seq = sweep_sectors(spec, FieldConfig(B), range(257),
                        cfg=SweepConfig(resolution=1, richardson=True))
    elapsed = time.perf_counter() - t0
    tp = classify_turning_point(seq)
    fit = fit_log_asymptote(seq, (64, 256))
    slope_ok = abs(fit["slope"] - (-0.5)) <= 0.2 * 0.5
    drops = check_general_bound(seq)
    max_drop = max(seq.energy(m) - seq.energy(m + 1) for m in range(256))
    M = tp["M"]
    tang = tangential_upper_bounds(seq, M, spec=spec)
    dec = tang.by_check("tangential_decreasing")
    ok = (seq.all_converged() and tp["pattern_valid"] and tp["decrease_observed"] and slope_ok
          and drops.passed and bool(dec) and tang.passed and elapsed < 1200.0)
    report(capsys, 5, "tube tau=1, R=4, m=0..256", ok,
           f"M={M} valid={tp['pattern_valid']}, slope {fit['slope']:.3f} vs -0.5, "
           f"max drop {max_drop:.4f} <= B: {drops.passed}, S_m bound at l=M: "
           f"{tang.passed} ({len(dec)} records), runtime {elapsed:.0f} s")
    assert ok


def test_criterion_06_general_bound_multilevel(capsys):
    seq = sweep_sectors(COULOMB, FieldConfig(1.0), range(11), levels=3,
                        cfg=SweepConfig(resolution=2, richardson=True))
    rep = check_general_bound(seq)
    ok = seq.all_converged() and rep.passed and len(rep.records) == 3 * 10
    report(capsys, 6, "Coulomb, n=1..3: E_(m,n) <= E_(m+1,n) + B", ok,
           f"{len(rep.records)} records, min margin {rep.min_margin():.3f}")
    assert ok


def test_criterion_07_bloch_suite(capsys):
    spec = PotentialSpec((PeriodicChainSpec(2.0, 1.0, 0.5, 1.0),))
    t0 = time.perf_counter()
    band = compute_band(spec, FieldConfig(1.0), range(9), alpha_grid(16),
                        SweepConfig(resolution=2, richardson=True))
    elapsed = time.perf_counter() - t0
    pc = check_band_pseudoconcavity(band, spec=spec)
    amin = check_alpha_minimum(band)
    sym = check_alpha_symmetry(band)
    ok = band.all_converged() and pc.passed and amin.passed and sym.passed and elapsed < 900
    worst = max(abs(r.lhs - r.rhs) for r in sym.records)
    report(capsys, 7, "chain a=2 (D=0), m=0..8, 16 alphas", ok,
           f"pseudoconcavity {pc.passed} ({len(pc.records)} records), "
           f"E_m(0) minimal {amin.passed}, conjugation {sym.passed} "
           f"(max diff {worst:.1e}), runtime {elapsed:.0f} s")
    assert ok


def test_criterion_08_solver_oracle(capsys):
    worst_val = worst_res = 0.0
    count = 0
    for op in operator_corpus():
        if op.dimension > 2000:
            continue
        res = lowest_k(op, SolveConfig(k=5))
        ref = dense_reference(op)[:5]
        worst_val = max(worst_val, float(np.max(np.abs(res.eigenvalues - ref))))
        worst_res = max(worst_res, float(np.max(res.residual_norms)))
        count += 1
    ok = count > 0 and worst_val <= 1e-8 and worst_res <= 1e-8
    report(capsys, 8, "lowest-5 vs dense on corpus (dim <= 2000)", ok,
           f"{count} operators, max |dlambda| {worst_val:.1e}, max residual {worst_res:.1e}")
    assert ok


def test_criterion_09_convergence_order(capsys):
    orders = {}
    for name, pot in (("V=0", {"terms": []}),
                      ("Coulomb", {"terms": [{"type": "axis_charge", "position": 0.0,
                                              "charge": 1.0}]})):
        cfg = from_dict({"potential": pot, "field": {"B": 1.0},
                         "convergence": {"resolutions": [1, 2, 3], "m": [0, 1]}})
        _, summary, converged = cli.convergence_table(cfg)
        for m, s in summary.items():
            orders[f"{name} m={m}"] = s["observed_orders"][0]
    ok = all(1.7 <= p <= 2.3 for p in orders.values())
    report(capsys, 9, "observed order in [1.7, 2.3] over l=1,2,3", ok,
           ", ".join(f"{k}: p={v:.2f}" for k, v in orders.items()))
    assert ok


def test_criterion_10_determinism(capsys, tmp_path):
    configs = {
        "coulomb": {"potential": {"terms": [{"type": "axis_charge", "position": 0.0,
                                             "charge": 1.0}]},
                    "field": {"B": 1.0}, "m_max": 10, "resolution": 1},
        "chain": {"potential": {"period": 2.0, "terms": [
            {"type": "periodic_chain", "nucleus_charge": 1.0,
             "smeared": {"radius": 0.5, "total_charge": 1.0}}]},
                  "field": {"B": 1.0}, "m_max": 3, "resolution": 1, "band": {"n_alpha": 8}},
    }
    same = {}
    for name, doc in configs.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(doc))
        outs = []
        for run in ("a", "b"):
            out = tmp_path / f"{name}-{run}"
            code = cli.main(["verify", "--config", str(path), "--out", str(out),
                             "--threads", "1"])
            assert code == cli.EXIT_OK
            outs.append(out)
        files = ["report.json", "energies.csv"] + (["band.csv"] if name == "chain" else [])
        for f in files:
            same[f"{name}/{f}"] = (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
    ok = all(same.values())
    report(capsys, 10, "repeated verify --threads 1 is byte-identical", ok,
           ", ".join(f"{k}: {'identical' if v else 'DIFFERS'}" for k, v in same.items()))
    assert ok


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path

    results = []
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            kwargs = {"capsys": None}
            if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                kwargs["tmp_path"] = Path(tempfile.mkdtemp())
            try:
                fn(**kwargs)
                results.append(True)
            except AssertionError:
                results.append(False)
    sys.exit(0 if all(results) else 1)
