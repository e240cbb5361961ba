"""Acceptance criteria, one test per criterion.

Each test appends a ``criterion N: PASS|FAIL ...`` line that is printed in
the terminal summary.
"""

import math
import time
from fractions import Fraction
from itertools import combinations_with_replacement

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, two_state_tau
from mixtime.analysis import AnalysisOptions, analyze_instance, scale_family
from mixtime.chains import canonical_scheme_for, make_chain
from mixtime.cli import main
from mixtime.congestion import bfs_scheme, congestion_bound
from mixtime.errors import InputError
from mixtime.instances import enumerate_bipartite_graphs, enumerate_pairs, parse_degree_pair
from mixtime.mixing import mixing_time_naive, total_mixing_time
from mixtime.spectral import bounds_from_lambda, spectral_bounds, symmetrize
from mixtime.state_graph import build, loop_reduce

EPSILONS = (1e-2, 1e-3, 1e-4)
TWO_STATE = "6,6,6,6,5,5;6,6,6,6,5,5"
PUBLISHED_PAIR_COUNT = 19_378
PUBLISHED_SCALING_EXPONENT = 2.27


def record(n, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def _small_suite():
    """(chain kind, instance) for every chain on instances up to 4+4."""
    suite = []
    for kind in ("switch1", "switch2"):
        suite += [(kind, p) for p in enumerate_pairs(4, 4)]
    graphs = [g for n in (2, 3, 4) for g in enumerate_bipartite_graphs(n)]
    for kind in ("matching1", "matching2"):
        suite += [(kind, g) for g in graphs]
    out = []
    for kind, inst in suite:
        try:
            g = build(make_chain(kind, inst))
        except InputError:
            continue  # no (near-)perfect matching
        if g.n_states <= 2000:
            out.append((kind, inst, g))
    return out


@pytest.fixture(scope="module")
def suite():
    return _small_suite()


# --------------------------------------------------------------------------


def test_criterion_1_two_state_worst_case():
    start = time.perf_counter()
    rec, g = analyze_instance("switch1", parse_degree_pair(TWO_STATE), AnalysisOptions(epsilon=1e-3))
    elapsed = time.perf_counter() - start
    P = g.dense()
    closed = two_state_tau(Fraction(1, 441), Fraction(1, 1000))
    naive = mixing_time_naive(g, 1e-3).tau
    ok = (
        rec.n_states == 2
        and P[0, 1] == 1 / 441
        and P[1, 0] == 1 / 441
        and rec.tau == 1368 == closed == naive
        and 682.0 <= rec.lower_spectral <= 682.3
        and 1675.5 <= rec.upper_spectral <= 1676.5
        and 1675.5 <= rec.congestion_bound <= 1676.5
        and elapsed < 1.0
    )
    record(
        1,
        ok,
        f"n_states={rec.n_states} tau={rec.tau} (closed form {closed}, naive {naive}) "
        f"lower={rec.lower_spectral:.4f} upper={rec.upper_spectral:.4f} "
        f"congestion={rec.congestion_bound:.4f} time={elapsed:.3f}s",
    )


def test_criterion_2_state_space_count():
    start = time.perf_counter()
    g = build(make_chain("switch1", "3,3,3,3,3,3;3,3,3,3,3,3"))
    elapsed = time.perf_counter() - start
    record(2, g.n_states == 297_200 and elapsed < 300, f"n_states={g.n_states} build_time={elapsed:.1f}s")


def _independent_pair_count(max_n, max_n2):
    """Ordered pairs of sorted positive sequences, realizability by conjugate dominance."""
    def realizable(a, b):
        conj = [sum(1 for x in b if x > k) for k in range(len(a))]
        return all(sum(a[: k + 1]) <= sum(conj[: k + 1]) for k in range(len(a)))

    def seqs(length_max, value_max):
        return [
            tuple(sorted(t, reverse=True))
            for k in range(1, length_max + 1)
            for t in combinations_with_replacement(range(1, value_max + 1), k)
        ]

    by_sum = {}
    for b in seqs(max_n2, max_n):
        by_sum.setdefault(sum(b), []).append(b)
    return sum(1 for a in seqs(max_n, max_n2) for b in by_sum.get(sum(a), ()) if realizable(a, b))


def test_criterion_3_universe_count_is_reproducible():
    ours = sum(1 for _ in enumerate_pairs(6, 6))
    assert ours == _independent_pair_count(6, 6) == 15_583
    unordered = sum(1 for p in enumerate_pairs(6, 6) if p.a <= p.b)
    assert unordered == 8_029


@pytest.mark.xfail(strict=True, reason="no tested universe definition yields the published count")
def test_criterion_3_enumeration_count():
    ours = sum(1 for _ in enumerate_pairs(6, 6))
    unordered = sum(1 for p in enumerate_pairs(6, 6) if p.a <= p.b)
    matches = ours == PUBLISHED_PAIR_COUNT or unordered == PUBLISHED_PAIR_COUNT
    ACCEPTANCE_LINES.append(
        f"criterion 3: {'PASS' if matches else 'FAIL'} (documented discrepancy) ordered={ours} "
        f"unordered={unordered} published={PUBLISHED_PAIR_COUNT}; no universe variant tried matches"
    )
    assert matches


def test_criterion_4_oracle_equivalence(suite):
    start = time.perf_counter()
    mismatches = []
    for kind, inst, g in suite:
        for eps in EPSILONS:
            fast = total_mixing_time(g, eps).tau
            slow = mixing_time_naive(g, eps).tau
            if fast != slow:
                mismatches.append((kind, str(inst), eps, fast, slow))
    elapsed = time.perf_counter() - start
    record(
        4,
        not mismatches and elapsed < 600,
        f"{len(suite)} graphs x {len(EPSILONS)} eps, mismatches={len(mismatches)} time={elapsed:.1f}s",
    )


def test_criterion_5_bound_sandwich(suite):
    violations = []
    checks = 0
    for kind, inst, g in suite:
        spec = spectral_bounds(g, 1e-3)
        rhos = {
            "bfs": congestion_bound(g, bfs_scheme(), 1e-3).rho,
            "canonical": congestion_bound(g, canonical_scheme_for(g.chain), 1e-3).rho,
        }
        log_pi = math.log(1 / g.pi.min())
        for eps in EPSILONS:
            tau = total_mixing_time(g, eps).tau
            lower, upper = bounds_from_lambda(spec.lambda_max_mag, float(g.pi.min()), eps)
            slack = 1e-9 * max(1, tau)
            checks += 1
            if not lower <= tau + slack or not tau <= upper + slack:
                violations.append((kind, str(inst), eps, "spectral", lower, tau, upper))
            for name, rho in rhos.items():
                if tau > rho * (math.log(1 / eps) + log_pi) + slack:
                    violations.append((kind, str(inst), eps, name, tau, rho))
    record(5, not violations, f"{checks} (graph, eps) checks, violations={len(violations)}")


def test_criterion_6_spectral_similarity(suite):
    extra = [build(make_chain("switch1", s)) for s in ("2,2,2,2,2;2,2,2,2,2", "3,3,2,2,2;3,3,2,2,2")]
    graphs = [g for _, _, g in suite] + extra
    worst_sim = worst_iter = 0.0
    for g in graphs:
        ev_p = np.sort(np.linalg.eigvals(g.dense()).real)
        ev_a = np.linalg.eigvalsh(symmetrize(g).toarray())
        worst_sim = max(worst_sim, float(np.abs(ev_p - ev_a).max()))
        if g.n_states > 2:
            dense = spectral_bounds(g, 1e-3, method="dense").lambda_max_mag
            lanczos = spectral_bounds(g, 1e-3, method="lanczos").lambda_max_mag
            worst_iter = max(worst_iter, abs(dense - lanczos))
    record(
        6,
        worst_sim <= 1e-9 and worst_iter <= 1e-8,
        f"{len(graphs)} graphs (largest {max(g.n_states for g in graphs)} states), "
        f"max |eig(P)-eig(A)|={worst_sim:.2e}, max |lanczos-dense|={worst_iter:.2e}",
    )


def test_criterion_7_loop_reduction(suite):
    worst_map = 0.0
    for kind, _, g in suite:
        if kind == "matching2" or g.n_states < 2:
            continue
        r = loop_reduce(g, 0.99)
        c = r.loop_shift
        ev = np.sort(np.linalg.eigvals(g.dense()).real)
        ev_r = np.sort(np.linalg.eigvals(r.dense()).real)
        worst_map = max(worst_map, float(np.abs(ev_r - (ev - c) / (1 - c)).max()))

    two = build(make_chain("switch1", TWO_STATE))
    two_taus = (total_mixing_time(two, 1e-3).tau, total_mixing_time(loop_reduce(two), 1e-3).tau)

    max_orig = max_red = 0
    for pair in enumerate_pairs(5, 5):
        g = build(make_chain("switch1", pair))
        if g.n_states < 2:
            continue
        max_orig = max(max_orig, total_mixing_time(g, 1e-3).tau)
        max_red = max(max_red, total_mixing_time(loop_reduce(g), 1e-3).tau)
    ok = worst_map <= 1e-9 and two_taus == (1368, 14) and max_orig >= 5 * max_red
    record(
        7,
        ok,
        f"max eigenvalue map error={worst_map:.2e}, two-state tau {two_taus[0]}->{two_taus[1]}, "
        f"<=5+5 switch1 max tau {max_orig}->{max_red} (ratio {max_orig / max_red:.1f})",
    )


def test_criterion_8_congestion_gap():
    cong_ratio = []
    spec_ratio = []
    for n in (2, 3, 4):
        for graph in enumerate_bipartite_graphs(n):
            try:
                rec, _ = analyze_instance("matching2", graph, AnalysisOptions())
            except InputError:
                continue
            if rec.tau and rec.tau > 0:
                cong_ratio.append(rec.congestion_bound / rec.tau)
                spec_ratio.append(rec.upper_spectral / rec.tau)
    top = max(cong_ratio)
    p95 = float(np.percentile(spec_ratio, 95))
    record(
        8,
        top > 10 and p95 < 3,
        f"{len(cong_ratio)} matching2 instances, max congestion/tau={top:.1f}, "
        f"95th pct upper_spectral/tau={p95:.2f}",
    )


def test_criterion_9_scaling_trend():
    ns = list(range(4, 21))
    opts = AnalysisOptions(mixing_cap=2200, congestion_cap=0, stats_cap=0)
    records, tau_fit, loglog = scale_family("A", "switch1", ns, opts)
    exact = [r for r in records if not r.tau_predicted_flag]
    sandwich = all(r.sandwich_ok() for r in exact)
    record(
        9,
        loglog.slope > 1 and sandwich,
        f"family A n=4..20: log-log slope={loglog.slope:.3f} (published {PUBLISHED_SCALING_EXPONENT}), "
        f"exact rows={len(exact)}, predicted rows={len(records) - len(exact)}, "
        f"tau~lower fit r^2={tau_fit.r_squared:.4f}",
    )


def test_criterion_10_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["enumerate", "--chain", "switch1", "--max-n", "2", "--out", str(a)])
    main(["enumerate", "--chain", "switch1", "--max-n", "2", "--out", str(b)])
    same = a.read_bytes() == b.read_bytes()
    rows = len(a.read_text().splitlines()) - 1
    record(10, same and rows == 6, f"two runs byte-identical={same}, rows={rows}")
