"""
Acceptance suite.  Each test checks one criterion at its stated tolerance and
prints a single ``[PASS]``/``[FAIL]`` line (visible with ``pytest -v``).
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from hofa.codim import count_positive_roots, h_poly, nm_identity, no_root_threshold, polya_certificate, regime
from hofa.cumulants import TensorSequence, cumulants_to_moments, moments_to_cumulants
from hofa.famodel import ModelSpec
from hofa.jacobian import DEFAULT_PRIME, SECOND_PRIME, fd_check, rank_exact, shell_point, verify_dimension
from hofa.simulate import SimConfig, validate
from hofa.symtensor import LoadingMatrix, SymTensor, enumerate_indices

SEED = 20240611


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        assert ok, detail

    return emit


def rank_grid():
    return [(k, p, m) for k in range(2, 6) for m in range(1, 6) for p in range(m + 2, 9)]


def test_criterion_1_dimension_sweep(report):
    start = time.perf_counter()
    bad, discordant, small_gap = [], [], []
    at_scaling_bound = 0
    for k, p, m in rank_grid():
        spec = ModelSpec(p, m, k)
        s = verify_dimension(spec, trials=3, seed=SEED, methods=("svd", "modp"), primes=(DEFAULT_PRIME, SECOND_PRIME))
        if not s.all_match:
            bad.append(((k, p, m), s.expected_rank, sorted(set(s.observed))))
        at_scaling_bound += all(r == s.scaling_bound for r in s.observed)
        if not s.methods_agree:
            discordant.append((k, p, m))
        small_gap += [(k, p, m) for r in s.reports if r.method == "svd" and not r.gap > 1e6]
    elapsed = time.perf_counter() - start
    ok = not bad and not discordant and not small_gap and elapsed < 120
    detail = (
        f"{len(rank_grid())} cells, {len(bad)} with rank != min(M,N), {len(discordant)} discordant, "
        f"{len(small_gap)} svd gaps <= 1e6, {elapsed:.1f}s; "
        f"{at_scaling_bound} cells at min(M-m,N)"
    )
    if bad:
        detail += f"; e.g. (k,p,m)={bad[0][0]} expected {bad[0][1]} observed {bad[0][2]}"
    report(1, ok, detail)


def test_criterion_2_witness_certification(report):
    failed = []
    for k, p, m in rank_grid():
        rep = rank_exact(ModelSpec(p, m, k))
        if not rep.certified:
            failed.append(((k, p, m), rep.expected_rank, rep.computed_rank))
    detail = f"{len(rank_grid()) - len(failed)}/{len(rank_grid())} cells certified rank M"
    if failed:
        detail += f"; e.g. (k,p,m)={failed[0][0]} M={failed[0][1]} exact rank {failed[0][2]}"
    report(2, not failed, detail)


def test_criterion_3_codim_identity(report):
    failures = [
        (k, p, m)
        for k in range(2, 7) for p in range(1, 26) for m in range(1, 26)
        if not nm_identity(k, p, m)
    ]
    report(3, not failures, f"k!(N-M) = h(p) on {5 * 25 * 25} cells, {len(failures)} failures")


def test_criterion_4_root_regimes_k3(report):
    problems = []
    for m in range(1, 6):
        if regime(3, m).root_count != 1:
            problems.append(m)
    for m in (6, 7, 8):
        if regime(3, m).root_count not in (0, 2):
            problems.append(m)
    for m in range(9, 61):
        h = h_poly(3, m)
        # no positive real root and h(0) > 0, hence h(p) > 0 for every p >= 1
        if regime(3, m).root_count != 0 or not h(0) > 0 or not h(1) > 0:
            problems.append(m)
    counts = {m: regime(3, m).root_count for m in (6, 7, 8)}
    report(4, not problems, f"m<=5 one root, m in 6..8 counts {counts}, 9<=m<=60 no root; problems {problems}")


def test_criterion_5_m_plus_2_sufficiency(report):
    bad = [(k, m) for k in range(3, 7) for m in range(1, 41) if not h_poly(k, m)(m + 2) > 0]
    report(5, not bad, f"h(m+2) > 0 for 3<=k<=6, 1<=m<=40; {len(bad)} failures")


def test_criterion_6_polya_certificates(report):
    missing = []
    summary = []
    for k in range(3, 6):
        m_hat = no_root_threshold(k)
        methods = set()
        for m in range(m_hat, m_hat + 21):
            cert = polya_certificate(k, m)
            if cert is None or not cert.verify() or count_positive_roots(h_poly(k, m)) != 0:
                missing.append((k, m))
            else:
                methods.add(f"{cert.method}")
        summary.append(f"k={k}: m_hat={m_hat} ({'/'.join(sorted(methods))})")
    report(6, not missing, "; ".join(summary) + f"; {len(missing)} missing")


def _random_sequence(rng, p, k, zero_mean):
    first = 2 if zero_mean else 1
    tensors = {}
    for r in range(first, k + 1):
        n = len(enumerate_indices(p, r))
        vals = [Fraction(int(a), int(b)) for a, b in zip(rng.integers(-20, 21, n), rng.integers(1, 10, n))]
        tensors[r] = SymTensor(p, r, vals)
    return TensorSequence(p, k, tensors, zero_mean)


def test_criterion_7_transform_round_trip(report):
    rng = np.random.default_rng(SEED)
    mismatches = 0
    for _ in range(100):
        seq = _random_sequence(rng, int(rng.integers(1, 5)), int(rng.integers(2, 7)), bool(rng.integers(0, 2)))
        if cumulants_to_moments(moments_to_cumulants(seq)) != seq:
            mismatches += 1
    low = 0
    for _ in range(20):
        seq = _random_sequence(rng, int(rng.integers(1, 5)), 3, zero_mean=True)
        cum = moments_to_cumulants(seq)
        low += int(cum[2] != seq[2] or cum[3] != seq[3])
    report(7, mismatches == 0 and low == 0, f"100 round trips, {mismatches} mismatches; zero-mean orders 2-3 identity, {low} mismatches")


def test_criterion_8_jacobian_fd(report):
    rng = np.random.default_rng(SEED)
    worst = {}
    for k, p, m in [(3, 5, 2), (4, 5, 2), (5, 6, 3)]:
        spec = ModelSpec(p, m, k)
        worst[(k, p, m)] = max(fd_check(shell_point(spec, rng), 1e-5) for _ in range(20))
    ok = all(v < 1e-6 for v in worst.values())
    report(8, ok, "max fd error " + ", ".join(f"{key}: {v:.2e}" for key, v in worst.items()))


def test_criterion_9_monte_carlo(report):
    loading = LoadingMatrix([[1, 0], [Fraction(1, 2), 1], [-1, Fraction(3, 4)], [2, -1]], lower_triangular=True)
    cfg = SimConfig(ModelSpec(4, 2, 3), "centered-exponential", "centered-exponential", loading, 10**6, seed=SEED)
    start = time.perf_counter()
    rep = validate(cfg)
    elapsed = time.perf_counter() - start
    z = rep.max_normalized
    report(9, z < 5 and elapsed < 60, f"max normalized deviation {z:.2f} SE ({rep.status}), {elapsed:.1f}s")
