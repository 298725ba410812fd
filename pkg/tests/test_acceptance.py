"""Acceptance criteria, one test (or a few parts) per criterion.

Random sampling uses ``default_rng(N)`` for criterion ``N``.  Each part
records its outcome before asserting so the terminal summary lists every
criterion as PASS or FAIL.
"""
import time

import numpy as np
import pytest

from bentlab.canonical import CanonicalParams, EpsParams, build_rho_bc, build_werner, pt_spectrum
from bentlab.distill import (OptimizerOptions, VerdictKind, eps_threshold, f_value,
                             maxent_overlap_max, min_rank2, null_space_margin, one_copy_verdict,
                             rank2_expectation)
from bentlab.oracles import mc_diagonal_twirl, mc_full_twirl
from bentlab.posmaps import (PositivityResult, compose_transpose, is_2_positive_maxent,
                             is_k_positive, state_to_map, tau_w, transpose_map)
from bentlab.qmat import max_entangled, partial_transpose, random_density
from bentlab.reduction import diagonal_twirl, full_twirl, reduce_to_canonical
from bentlab.sepcert import (decompose_ppt_point, decomposition_B, decomposition_J,
                             ensemble_to_density, verify_separable)
from bentlab.canonical import RegionLabel, classify_region, region_points
from sampling import polygon_points

DEFAULT = OptimizerOptions(restarts=64, seed=0)


def physical_points(d, count, rng):
    top = 2 / (d * (d - 1))
    out = []
    while len(out) < count:
        b, c = rng.uniform(0, top, 2)
        if b + c <= top:
            out.append((float(b), float(c)))
    return out


def pt_bc(b, c, d=3):
    return partial_transpose(build_rho_bc(CanonicalParams(d, b, c))).mat


def test_criterion_1_pt_spectrum(record):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for d in (3, 4):
        for b, c in physical_points(d, 10_000, rng):
            p = CanonicalParams(d, b, c)
            w = np.linalg.eigvalsh(partial_transpose(build_rho_bc(p)).mat)
            worst = max(worst, float(np.max(np.abs(w - pt_spectrum(p).sorted_values()))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-11 and elapsed < 30
    record(1, "spectrum", ok, f"max dev {worst:.1e}, {elapsed:.1f}s")
    assert worst <= 1e-11 and elapsed < 30


def test_criterion_2_overlap_bound(record):
    worst_dev, worst_excess = 0.0, -np.inf
    for d in range(2, 9):
        r = maxent_overlap_max(d, max_entangled(d), OptimizerOptions(restarts=64, seed=2))
        bound = np.sqrt(2 / d)
        worst_dev = max(worst_dev, abs(r.overlap - bound))
        worst_excess = max(worst_excess, float(np.max(r.restart_overlaps)) - bound)
    ok = worst_dev <= 1e-6 and worst_excess <= 1e-8
    record(2, "overlap", ok, f"max |dev| {worst_dev:.1e}, max excess {worst_excess:.1e}")
    assert ok


def test_criterion_3_werner_transition(record):
    def negative(lam):
        rep = min_rank2(partial_transpose(build_werner(3, lam)).mat, 3, 3, DEFAULT)
        return rep.min_value < -1e-10

    lo, hi = 1.0, 3.0
    assert negative(lo) and not negative(hi)
    while hi - lo > 1e-4:
        mid = 0.5 * (lo + hi)
        if negative(mid):
            lo = mid
        else:
            hi = mid
    lam0 = 0.5 * (lo + hi)
    ok = abs(lam0 - 2) <= 1e-3
    record(3, "sign flip", ok, f"lambda0 = {lam0:.6f}")
    assert ok


@pytest.mark.xfail(strict=True, raises=AssertionError,
                   reason="the rank-two minimum of sigma^PT(1) at d=3 is -1/3, not -1/2")
def test_criterion_3_werner_value_at_one(record):
    M = partial_transpose(build_werner(3, 1.0)).mat
    rep = min_rank2(M, 3, 3, DEFAULT)
    ok = rep.min_value <= -0.5 + 1e-8
    record(3, "value at lambda=1 <= -1/2", ok, f"min = {rep.min_value:.12f}")
    assert ok


def test_criterion_4_bcgk_and_cfkg(record):
    rng = np.random.default_rng(4)
    bcgk = [min_rank2(pt_bc(b, c), 3, 3, DEFAULT).min_value for b, c in polygon_points("BCGK", 200, rng)]
    ok1 = min(bcgk) >= -1e-8
    record(4, "BCGK", ok1, f"min over 200 = {min(bcgk):.2e}")
    margins, sources = [], set()
    for b, c in polygon_points("GCFK", 200, rng):
        p = CanonicalParams(3, b, c)
        v = one_copy_verdict(p, DEFAULT)
        if v.kind is VerdictKind.WITNESS_FOUND:
            # the stored witness reproduces the margin
            assert abs(rank2_expectation(pt_bc(b, c), v.witness) - v.margin) <= 1e-10
            sources.add(v.source)
        margins.append(v.margin if v.kind is VerdictKind.WITNESS_FOUND else np.inf)
    ok2 = max(margins) < -1e-8
    record(4, "CFKG", ok2, f"max margin over 200 = {max(margins):.2e}, sources {sorted(sources)}")
    assert ok1 and ok2


def test_criterion_5_thresholds(record):
    a = eps_threshold(3, 0.0, 1, DEFAULT).eps0
    b = eps_threshold(3, 1 / 15, 1, DEFAULT).eps0
    ok = abs(a - 1 / 42) <= 2e-4 and abs(b - 1 / 30) <= 2e-4
    record(5, "eps0", ok, f"c=0: {a:.6f} (1/42={1 / 42:.6f}), c=1/15: {b:.6f} (1/30={1 / 30:.6f})")
    assert ok


def test_criterion_6_null_space(record):
    p = EpsParams(3, 0.0, 0.0)
    one = null_space_margin(p, 1, DEFAULT)
    two = null_space_margin(p, 2, DEFAULT)
    eps2 = eps_threshold(3, 0.0, 2, DEFAULT)
    ok = (one.min_value > 1e-6 and two.min_value > 1e-6 and one.null_dim == 1 and two.null_dim == 17
          and eps2.eps0 > 0)
    record(6, "null space", ok,
           f"f1={one.min_value:.3e} f2={two.min_value:.3e} null dims {one.null_dim},{two.null_dim}; "
           f"eps0(n=2)={eps2.eps0:.6f}")
    assert ok


@pytest.mark.slow
def test_criterion_7_two_copy_search(record):
    rng = np.random.default_rng(7)
    opts = OptimizerOptions(restarts=500, seed=7)
    start = time.perf_counter()
    found = []
    for b, c in polygon_points("BCGK", 50, rng):
        val = f_value(EpsParams(3, c, b - 1 / 6), 2, opts).min_value
        if val < -1e-7:
            found.append((b, c, val))
    elapsed = time.perf_counter() - start
    ok = not found and elapsed < 7200
    detail = f"{len(found)} of 50 below -1e-7 in {elapsed:.0f}s"
    if found:
        detail += "; " + ", ".join(f"(b={b:.5f}, c={c:.5f}, f={v:.2e})" for b, c, v in found)
    record(7, "n=2 search", ok, detail)
    assert ok


def test_criterion_8_certificates(record):
    pts = region_points(3)
    rho_B = build_rho_bc(CanonicalParams(3, *pts["B"]))
    rho_J = build_rho_bc(CanonicalParams(3, *pts["J"]))
    err_B = float(np.max(np.abs(ensemble_to_density(decomposition_B(3)).mat - rho_B.mat)))
    err_J = float(np.max(np.abs(ensemble_to_density(decomposition_J(3)).mat - rho_J.mat)))
    rank_pt = np.linalg.matrix_rank(partial_transpose(rho_B).mat, tol=1e-10)
    rank = np.linalg.matrix_rank(rho_B.mat, tol=1e-10)
    grid_ok, cells, worst = True, 0, 0.0
    for b in np.linspace(0, 1 / 6, 50):
        for c in np.linspace(0, 1 / 3, 50):
            p = CanonicalParams(3, b, c)
            if classify_region(p) is not RegionLabel.SEPARABLE_PPT:
                continue
            cells += 1
            r = verify_separable(decompose_ppt_point(p), build_rho_bc(p), tol=1e-10)
            grid_ok &= r.passed
            worst = max(worst, r.max_error)
    ok = err_B <= 1e-12 and err_J <= 1e-12 and rank_pt == 8 and rank == 6 and grid_ok
    record(8, "certificates", ok,
           f"err B {err_B:.1e}, J {err_J:.1e}; ranks PT {rank_pt}, rho {rank}; "
           f"{cells} ABKJ cells, worst {worst:.1e}")
    assert ok


def test_criterion_9_map_equivalences(record):
    rng = np.random.default_rng(9)
    opts = OptimizerOptions(restarts=64, seed=9)
    mismatch_distill, mismatch_testers = [], []
    for b, c in physical_points(3, 50, rng):
        p = CanonicalParams(3, b, c)
        L = compose_transpose(state_to_map(build_rho_bc(p)))
        distillable = one_copy_verdict(p, opts).kind is VerdictKind.WITNESS_FOUND
        general = is_k_positive(L, 2, opts).result is PositivityResult.VIOLATION
        maxent = is_2_positive_maxent(L, opts).result is PositivityResult.VIOLATION
        if general != distillable or maxent != distillable:
            mismatch_distill.append((b, c))
        if general != maxent:
            mismatch_testers.append(("Lambda_bc", b, c))
    others = [("T", transpose_map(d)) for d in (2, 3, 4)]
    others += [(f"tau_W d={d} lam={lam}", tau_w(d, lam)) for d in (3, 4) for lam in (0.3, 0.8, 1.2, 2.5)]
    for name, L in others:
        if (is_k_positive(L, 2, opts).result is PositivityResult.VIOLATION) != \
                (is_2_positive_maxent(L, opts).result is PositivityResult.VIOLATION):
            mismatch_testers.append(name)
    transitions = {}
    for d in (3, 4):
        lo, hi = 0.1, 5.0
        while hi - lo > 1e-4:
            mid = 0.5 * (lo + hi)
            if is_2_positive_maxent(tau_w(d, mid), opts).result is PositivityResult.VIOLATION:
                lo = mid
            else:
                hi = mid
        transitions[d] = 0.5 * (lo + hi)
    ok_t = all(abs(transitions[d] - 2 / (d - 2)) <= 1e-3 for d in (3, 4))
    ok = not mismatch_distill and not mismatch_testers and ok_t
    record(9, "equivalences", ok,
           f"{len(mismatch_distill)} distill mismatches, {len(mismatch_testers)} tester mismatches; "
           f"tau_W transitions {transitions[3]:.5f} (d=3), {transitions[4]:.5f} (d=4)")
    assert ok


def test_criterion_10_reduction(record):
    rng = np.random.default_rng(10)
    failures, count = [], 0
    for dims in ((3, 3), (3, 4)):
        done = 0
        while done < 100:
            rho = random_density(*dims, rng)
            if np.linalg.eigvalsh(partial_transpose(rho).mat)[0] >= -1e-12:
                continue
            done += 1
            p, trace = reduce_to_canonical(rho)
            rows = trace.rows()
            if not (p.b > 1 / (p.d * (p.d - 1)) - 1e-10 and all(r[1] < 0 for r in rows[1:])):
                failures.append((dims, p))
        count += done
    rho = random_density(3, 3, rng)
    dev_diag = float(np.max(np.abs(mc_diagonal_twirl(rho, 10_000, seed=10) - diagonal_twirl(rho).mat)))
    dev_full = float(np.max(np.abs(mc_full_twirl(rho, 10_000, seed=11) - full_twirl(rho).mat)))
    ok = not failures and dev_diag <= 0.02 and dev_full <= 0.02
    record(10, "reduction", ok,
           f"{count} NPT states, {len(failures)} failures; MC deviations {dev_diag:.1e}, {dev_full:.1e}")
    assert ok
