"""Exit criteria, one test per criterion, each printing a PASS/FAIL line."""

import itertools
import json
import math
import time

import numpy as np
import pytest
from scipy import stats

from secrecy_lab import SizeGuardError, ValidationError
from secrecy_lab.ballbins import OccupancyParams, distinct_pmf, expected_distinct, simulate_distinct, variance_distinct
from secrecy_lab.channel import AuxiliaryStructure, BroadcastChannelSpec, ConditionalPmf, bsc, induced_distributions
from secrecy_lab.cli import main
from secrecy_lab.codebook import (
    ENUMERATION_GUARD,
    MartonCodebook,
    MartonConfig,
    generate_codebook,
    lemma1_uniformity_test,
    preselect_pairs,
    theorem1_experiment,
)
from secrecy_lab.region import eliminate, pre_fm_system, systems_equivalent, theorem2_system
from secrecy_lab.secrecy import average_leakage, estimate_error_prob, exact_leakage

import conftest
from conftest import product_aux, quaternary_channel
from oracles import (
    bridge_samples,
    enumerate_occupancy,
    enumeration_domain,
    fm_grid_check,
    occupancy_moments_exact,
    pooled_chisquare,
    random_system,
)
from test_region import random_profile

pytestmark = pytest.mark.acceptance


def report(tag, ok, detail, started, budget):
    elapsed = time.perf_counter() - started
    in_time = elapsed < budget
    line = f"[{'PASS' if ok and in_time else 'FAIL'}] criterion {tag}: {detail} ({elapsed:.1f}s of {budget:.0f}s)"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line
    assert in_time, line


def symmetric_aux():
    return AuxiliaryStructure.build([[0.375, 0.125], [0.125, 0.375]], ConditionalPmf.from_function([0, 1, 1, 0], 2))


def test_criterion_1_lemma2_closed_forms():
    t0 = time.perf_counter()
    worst = 0.0
    checked = 0
    # literal listing of every placement wherever t <= 256
    for t, s in enumeration_domain():
        if t <= 256:
            mean, var = enumerate_occupancy(t, s)
        else:
            m, v = occupancy_moments_exact(t, s)
            mean, var = float(m), float(v)
        worst = max(worst, abs(expected_distinct(t, s) - mean), abs(variance_distinct(t, s) - var))
        checked += 1
    # the infinite families: one ball, no balls, one bin
    for t in range(1, 10**6 + 1):
        worst = max(worst, abs(expected_distinct(t, 1) - 1.0), abs(variance_distinct(t, 1)))
        worst = max(worst, abs(expected_distinct(t, 0)), abs(variance_distinct(t, 0)))
    for s in range(0, 1025):
        worst = max(worst, abs(expected_distinct(1, s) - min(1, s)), abs(variance_distinct(1, s)))
    enum_ok = worst <= 1e-9

    rng = np.random.default_rng(20240601)
    grid = list(zip(rng.integers(1, 257, 20), rng.integers(1, 1025, 20)))
    z_max = 0.0
    for k, (t, s) in enumerate(grid):
        sim = simulate_distinct(OccupancyParams(int(t), int(s)), trials=10**5, seed=1000 + k)
        se = math.sqrt(variance_distinct(int(t), int(s)) / 10**5)
        dev = abs(sim.mean - expected_distinct(int(t), int(s)))
        z_max = max(z_max, 0.0 if dev == 0 else dev / se)
    mc_ok = z_max <= 5
    report(
        "1 (occupancy mean/variance)",
        enum_ok and mc_ok,
        f"{checked} enumerated (t,s) pairs, max abs error {worst:.2e}; Monte Carlo max |z| = {z_max:.2f} over 20 points",
        t0, 60,
    )


def test_criterion_2_selection_uniformity():
    t0 = time.perf_counter()
    cfg = MartonConfig(8, 0.0, 0.0, 0.125, 0.125, 0.5)
    assert (cfg.l1, cfg.l2) == (2, 2)
    good = lemma1_uniformity_test(cfg, symmetric_aux(), 10**5, seed=2)
    bad = lemma1_uniformity_test(cfg, symmetric_aux(), 10**5, seed=2, rule="first")
    report(
        "2 (uniform preselection)",
        good.passed and not bad.passed,
        f"uniform rule p={good.p_value:.3g} counts={good.cell_counts.tolist()}; "
        f"first-hit control p={bad.p_value:.3g}; {good.failures} draws had no typical pair",
        t0, 120,
    )


def test_criterion_3_distinct_counts():
    t0 = time.perf_counter()
    aux = symmetric_aux()
    # bridge to the occupancy law under vacuous typicality
    gof = []
    for (n, rl1, r2), seed in zip([(4, 0.5, 0.75), (3, 1.0, 1.0), (4, 0.75, 0.5)], (31, 32, 33)):
        cfg, counts = bridge_samples(aux, n, rl1, r2, 150, seed)
        gof.append(((cfg.l1, cfg.m2), pooled_chisquare(counts, distinct_pmf(cfg.l1, cfg.m2))))
    gof_ok = all(p >= 0.01 for _, p in gof)

    up_rates = (0.4, 0.4, 0.2, 0.2)
    up = theorem1_experiment(aux, up_rates, [4, 8, 12], draws=30, seed=5)
    up_f = [r.mean_fraction for r in up]
    # largest block length whose M1*M2*L1*L2 stays within the enumeration guard
    n_max = 12
    while _fits(n_max + 1, up_rates):
        n_max += 1
    (top,) = theorem1_experiment(aux, up_rates, [n_max], draws=3, seed=6)
    up_ok = up_f[0] < up_f[1] < up_f[2] and up_f[2] > 0.95 and top.mean_fraction > 0.95

    down = theorem1_experiment(aux, (0.3, 0.3, 0.5, 0.5), [4, 8, 12], draws=30, seed=7)
    down_f = [r.mean_fraction for r in down]
    down_ok = down_f[0] > down_f[1] > down_f[2]
    report(
        "3 (distinct-sequence counting)",
        gof_ok and up_ok and down_ok,
        "GoF p-values " + ", ".join(f"(t={t},s={s}) {p:.3g}" for (t, s), p in gof)
        + f"; satisfied fractions {[round(f, 4) for f in up_f]}, at n={n_max} {top.mean_fraction:.4f}"
        + f"; violated fractions {[round(f, 4) for f in down_f]}",
        t0, 300,
    )


def _fits(n, rates):
    try:
        return MartonConfig(n, *rates, 1e9).cells <= ENUMERATION_GUARD
    except SizeGuardError:
        return False


def test_criterion_4_fourier_motzkin():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    mismatches = sum(
        not systems_equivalent(eliminate(pre_fm_system(mi), ["Rl1", "Rl2"]), theorem2_system(mi))
        for mi in (random_profile(rng) for _ in range(100))
    )
    unsound = incomplete = 0
    shapes = []
    for k in range(24):
        r = np.random.default_rng(400 + k)
        nv = int(r.integers(2, 5))
        sys = random_system(r, nv, int(r.integers(2, 6)))
        # at most two gridded axes beyond the free ones keeps the grid at 201**3
        n_elim = int(r.integers(1, nv))
        elim = [f"x{i}" for i in r.permutation(nv)[:n_elim]]
        u, c, _ = fm_grid_check(sys, elim)
        unsound += u
        incomplete += c
        shapes.append((nv, n_elim))
    report(
        "4 (projection of the pre-elimination system)",
        mismatches == 0 and unsound == 0 and incomplete == 0,
        f"{mismatches}/100 profiles differ from the direct region; grid check on {len(shapes)} systems "
        f"(up to {max(s[0] for s in shapes)} variables): {unsound} unsound, {incomplete} incomplete",
        t0, 120,
    )


def test_criterion_5_secrecy_direction():
    t0 = time.perf_counter()
    aux = product_aux(xmap=(0, 0, 1, 1))
    # Z independent of X
    flat = BroadcastChannelSpec.from_components(np.eye(2), np.eye(2), [[0.25, 0.75], [0.25, 0.75]])
    cb = generate_codebook(MartonConfig(6, 0.5, 0.5, 0.25, 0.25, 1e9, 1), aux)
    zero = max(exact_leakage(cb, preselect_pairs(cb, 1), flat, i) for i in (1, 2))
    # n = 1 revealing example
    reveal = BroadcastChannelSpec.from_components(np.eye(2), np.eye(2), np.eye(2))
    cb1 = MartonCodebook(MartonConfig(1, 1.0, 0, 0, 0, 1e9), aux, np.array([[[0]], [[1]]], dtype=np.int16), np.zeros((1, 1, 1), dtype=np.int16))
    one = exact_leakage(cb1, preselect_pairs(cb1, 0), reveal, 1)
    # paired comparison, binary X = U1 and Z = BSC(0.25)
    ch = BroadcastChannelSpec.from_components(np.eye(2), np.eye(2), bsc(0.25))
    mi = induced_distributions(aux, ch)
    hi_cfg = MartonConfig(8, 0.25, 0.5, 0.375, 0.125, 1e9)
    assert hi_cfg.rl1 >= mi.i_u1_z + 0.1 and hi_cfg.rl2 >= mi.i_u2_z + 0.1
    hi = average_leakage(hi_cfg, aux, ch, 120, seed=8)
    lo = average_leakage(MartonConfig(8, 0.25, 0.5, 0.0, 0.0, 1e9), aux, ch, 120, seed=8)
    a = np.array(hi.per_draw_values)[:, 0]
    b = np.array(lo.per_draw_values)[:, 0]
    p = stats.ttest_rel(a, b, alternative="less").pvalue
    # same comparison with both users visible to the eavesdropper
    bits = [(x >> 1, x & 1) for x in range(4)]
    qaux = product_aux(xmap=(0, 1, 2, 3), x_size=4)
    qz = np.array([np.kron(bsc(0.25)[u], bsc(0.25)[v]) for u, v in bits])
    qch = BroadcastChannelSpec.from_components(quaternary_channel(0, 0, 0).output_given_x("y1"), quaternary_channel(0, 0, 0).output_given_x("y2"), qz)
    qhi = np.array(average_leakage(MartonConfig(8, 0.375, 0.375, 0.3125, 0.3125, 1e9), qaux, qch, 100, seed=9).per_draw_values)
    qlo = np.array(average_leakage(MartonConfig(8, 0.375, 0.375, 0.0, 0.0, 1e9), qaux, qch, 100, seed=9).per_draw_values)
    qp = [stats.ttest_rel(qhi[:, i], qlo[:, i], alternative="less").pvalue for i in (0, 1)]
    ok = abs(zero) <= 1e-9 and abs(one - 1.0) <= 1e-9 and a.mean() < b.mean() and p < 0.01 and max(qp) < 0.01
    report(
        "5 (leakage direction)",
        ok,
        f"independent Z leakage {zero:.1e}; revealing example {one:.12f} bit; "
        f"binary user 1 mean {a.mean():.4f} vs {b.mean():.4f} (paired p={p:.2g}, 120 draws); "
        f"two-user check p={qp[0]:.2g}, {qp[1]:.2g}",
        t0, 300,
    )


def test_criterion_6a_noiseless_reliability():
    t0 = time.perf_counter()
    aux = product_aux(xmap=(0, 1, 2, 3), x_size=4)
    ch = quaternary_channel(0.0, 0.0, 0.25)
    cfg = MartonConfig(4, 0.5, 0.5, 0.25, 0.25, 1e9)
    words = np.array(list(itertools.product((0, 1), repeat=4)), dtype=np.int16)  # 16 distinct words
    u1 = words[:8].reshape(cfg.m1, cfg.l1, 4)
    u2 = words[8:].reshape(cfg.m2, cfg.l2, 4)
    cb = MartonCodebook(cfg, aux, u1, u2)
    rep = estimate_error_prob(cb, preselect_pairs(cb, 0), ch, 10**4, seed=6, eps_dec=1e9)
    report(
        "6a (noiseless receivers, distinct codewords)",
        rep.p_err_1 == 0.0 and rep.p_err_2 == 0.0,
        f"P_e = ({rep.p_err_1}, {rep.p_err_2}) over {rep.trials} trials",
        t0, 300,
    )


def test_criterion_6b_error_trend_on_bsc_025():
    t0 = time.perf_counter()
    aux = product_aux(xmap=(0, 1, 2, 3), x_size=4)
    ch = quaternary_channel(0.25, 0.25, 0.25)
    mi = induced_distributions(aux, ch)
    rl = 0.0  # the most room any randomization rate can leave
    r = mi.i_u1_y1 - rl - 0.2
    try:
        means, ses = [], []
        for n in (8, 16, 24):
            cfg = MartonConfig(n, r, r, rl, rl, 1e9)
            errs = []
            for d in range(10):
                cb = generate_codebook(cfg.with_seed(d), aux)
                errs.append(estimate_error_prob(cb, preselect_pairs(cb, d), ch, 1000, seed=d, eps_dec=1.0).p_err_1)
            means.append(float(np.mean(errs)))
            ses.append(float(np.std(errs, ddof=1) / math.sqrt(len(errs))))
        ok = all(b <= a + 2 * math.hypot(sa, sb) for a, b, sa, sb in zip(means, means[1:], ses, ses[1:])) and means[-1] < means[0]
        detail = f"P_e over n=8,16,24: {[round(m, 4) for m in means]}"
    except ValidationError as exc:
        ok = False
        detail = (
            f"not realizable: I(U_i;Y_i) = {mi.i_u1_y1:.6f} bits on BSC(0.25), so the rate "
            f"I - R_l - 0.2 = {r:.6f} < 0 for every R_l >= 0 ({exc})"
        )
    report("6b (error trend on BSC(0.25), 0.2 bits below the bound)", ok, detail, t0, 300)


def test_criterion_6b_variant_feasible_margin():
    """Same statement on BSC(0.1), where a 0.2-bit margin leaves a positive rate."""
    t0 = time.perf_counter()
    aux = product_aux(xmap=(0, 1, 2, 3), x_size=4)
    ch = quaternary_channel(0.1, 0.1, 0.25)
    rl = 0.15
    r = induced_distributions(aux, ch).i_u1_y1 - rl - 0.2
    means, ses = [], []
    for n in (8, 16, 24):
        cfg = MartonConfig(n, r, r, rl, rl, 1e9)
        errs = []
        for d in range(10):
            cb = generate_codebook(cfg.with_seed(d), aux)
            errs.append(estimate_error_prob(cb, preselect_pairs(cb, d), ch, 1000, seed=d, eps_dec=1.0).p_err_1)
        means.append(float(np.mean(errs)))
        ses.append(float(np.std(errs, ddof=1) / math.sqrt(len(errs))))
    ok = all(a - b > 2 * math.hypot(sa, sb) for a, b, sa, sb in zip(means, means[1:], ses, ses[1:]))
    report(
        "6b-variant (BSC(0.1), R_i = I - R_l - 0.2, R_l = 0.15; supplementary)",
        ok,
        f"P_e over n=8,16,24: {[round(m, 4) for m in means]} (+/- {[round(s, 4) for s in ses]})",
        t0, 300,
    )


def test_criterion_7_reproducibility(tmp_path, capsys):
    t0 = time.perf_counter()
    ch = BroadcastChannelSpec.from_components(bsc(0.05), bsc(0.1), bsc(0.25))
    (tmp_path / "ch.json").write_text(json.dumps(ch.to_dict()))
    (tmp_path / "aux.json").write_text(json.dumps(symmetric_aux().to_dict()))
    (tmp_path / "sys.json").write_text(json.dumps(pre_fm_system(random_profile(np.random.default_rng(0))).to_dict()))
    d = tmp_path
    rates = ["--n", "6", "--r1", "0.5", "--r2", "0.5", "--rl1", "0.25", "--rl2", "0.25"]
    runs = {
        "ballbins": ["ballbins", "--t", "16", "--s", "64", "--trials", "20000", "--seed", "1"],
        "codebook-sim": ["codebook-sim", "--aux", str(d / "aux.json"), *rates, "--draws", "5", "--seed", "2", "--dump-codebook", str(d / "cb.csv")],
        "leakage": ["leakage", "--channel", str(d / "ch.json"), "--aux", str(d / "aux.json"), *rates, "--draws", "5", "--seed", "3"],
        "errors": ["errors", "--channel", str(d / "ch.json"), "--aux", str(d / "aux.json"), *rates, "--trials", "500", "--seed", "4"],
        "region": ["region", "--channel", str(d / "ch.json"), "--samples", "50", "--seed", "5", "--plot-data", str(d / "plot.csv")],
        "fm": ["fm", "--system", str(d / "sys.json"), "--eliminate", "Rl1,Rl2"],
        "profile": ["profile", "--channel", str(d / "ch.json"), "--aux", str(d / "aux.json"), "--emit-pre-fm", str(d / "pre.json")],
    }
    bad = []
    for name, argv in runs.items():
        out = d / f"{name}.out"
        if main(argv + ["--out", str(out)]) != 0:
            bad.append(f"{name}: run failed")
            continue
        manifest = d / f"{name}.out.manifest.json"
        digests = json.loads(manifest.read_text())["outputs"]
        snapshot = {p: open(p, "rb").read() for p in digests}
        if main(["replay", str(manifest)]) != 0:
            bad.append(f"{name}: replay mismatch")
        # a second run from the recorded argv
        if main(json.loads(manifest.read_text())["argv"]) != 0 or any(open(p, "rb").read() != b for p, b in snapshot.items()):
            bad.append(f"{name}: rerun differs")
    capsys.readouterr()
    report(
        "7 (CLI reproducibility)",
        not bad,
        f"{len(runs)} subcommands replayed byte-identically" if not bad else "; ".join(bad),
        t0, 60,
    )
