"""Acceptance criteria, one test each, at the stated tolerances.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""
import csv
import io
import time
from collections import defaultdict

import numpy as np
import pytest

import conftest
from conftest import make_inner_problem, random_state, smooth_scene
from lrt import cli
from lrt import geometry as geo
from lrt import solvers as sv
from lrt.bench import DEFAULT_SOLVERS, make_instance, make_suite, run_benchmark
from lrt.outer import OuterConfig, default_init_angles, rectify
from lrt.prox import numerical_rank, soft_threshold, svt
from oracles import (NuclearProxSDP, fd_jacobian, kink_clearance, max_column_error,
                     scalar_prox_by_grid, worst_perturbation_gain)


def record(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="session")
def default_report():
    t0 = time.perf_counter()
    report = run_benchmark(make_suite("default", seed=1), DEFAULT_SOLVERS)
    return report, time.perf_counter() - t0


def by_key(report):
    """{(instance, round): {solver: row}} over rows without errors."""
    table = defaultdict(dict)
    for r in report.rows:
        if not r.error:
            table[(r.instance, r.outer)][r.solver] = r
    return table


def test_criterion_1_prox_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    sdp = NuclearProxSDP((5, 5))
    err_svt = err_soft = gain = 0.0
    for _ in range(100):
        M = rng.standard_normal((5, 5))
        mu = rng.uniform(0.1, 2.0)
        out = svt(M, mu)
        err_svt = max(err_svt, np.max(np.abs(out - sdp(M, mu))))
        gain = max(gain, worst_perturbation_gain(out, M, mu, n_random=20))
        err_soft = max(err_soft, np.max(np.abs(soft_threshold(M, mu)
                                               - scalar_prox_by_grid(M, mu))))
    dt = time.perf_counter() - t0
    ok = err_svt <= 1e-6 and err_soft <= 1e-6 and gain <= 1e-12 and dt < 10
    record(1, ok, f"svt vs SDP {err_svt:.1e}, soft vs grid {err_soft:.1e} (tol 1e-6), "
                  f"best grid perturbation gain {gain:.1e}, {dt:.1f}s (< 10s)")


def test_criterion_2_jacobian():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    _, Z = geo.center_constraint()
    win = geo.Window(4, 4, 24, 24)
    worst, done = 0.0, 0
    while done < 10:
        scene = smooth_scene(rng, size=32)
        tau = geo.rotation_params(rng.uniform(-0.05, 0.05))
        tau[:4] += rng.uniform(-0.02, 0.02, 4)
        # central differences straddling a bilinear kink do not estimate a derivative
        if kink_clearance(tau, win, Z) < 2:
            continue
        J = geo.jacobian(scene, tau, win, Z)
        worst = max(worst, max_column_error(J.basis, fd_jacobian(scene, tau, win, Z)))
        done += 1
    dt = time.perf_counter() - t0
    record(2, worst < 1e-4 and dt < 10,
           f"max relative column error {worst:.1e} (< 1e-4) over 10 scenes, {dt:.1f}s (< 10s)")


def test_criterion_3_sweep_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    problem = make_inner_problem(rng, size=16)
    cfg = sv.SolverConfig()
    worst = 0.0
    for _ in range(50):
        st = random_state(rng, problem)
        a = sv.sgs_iteration(st, problem, cfg.xi)
        b = sv.sgs_proximal_form_step(st, problem, cfg)
        worst = max([worst] + [float(np.max(np.abs(x - y)))
                               for x, y in zip(a.arrays(), b.arrays())])
    dt = time.perf_counter() - t0
    record(3, worst <= 1e-10 and dt < 30,
           f"max componentwise gap {worst:.1e} (<= 1e-10) over 50 states, {dt:.1f}s (< 30s)")


@pytest.mark.slow
def test_criterion_4_convergence_and_rank(default_report):
    report, dt = default_report
    rows = report.rows
    failed = [r for r in rows if r.error]
    bad = [r for r in rows if not r.error and not (r.converged and r.tol < 1e-3
                                                   and r.iter <= 1000)]
    table = by_key(report)
    mismatch = [k for k, v in table.items()
                if len(v) == len(DEFAULT_SOLVERS) and len({r.rank for r in v.values()}) > 1]
    shared = sum(len(v) == len(DEFAULT_SOLVERS) for v in table.values())
    worst_eta = max(r.tol for r in rows if not r.error)
    ok = not failed and not bad and not mismatch and shared > 0 and dt < 300
    record(4, ok, f"{len(rows)} rows, {len(failed)} failed runs, {len(bad)} rounds above tol "
                  f"(worst eta {worst_eta:.6e}), rank mismatches {len(mismatch)}/{shared}, "
                  f"suite {dt:.0f}s (< 300s)")


@pytest.mark.slow
def test_criterion_5_iteration_ordering(default_report):
    report, _ = default_report
    table = by_key(report)
    ratios, g_le = [], []
    for v in table.values():
        if len(v) == len(DEFAULT_SOLVERS):
            ratios.append(v["sgs"].iter / v["direct"].iter)
            g_le.append(v["sgs_g"].iter <= v["sgs"].iter)
    med = float(np.median(ratios))
    share = float(np.mean(g_le))
    record(5, 0.4 <= med <= 0.9 and share >= 0.7,
           f"median iter(sgs)/iter(direct) {med:.2f} (in [0.4, 0.9]); "
           f"iter(sgs_g) <= iter(sgs) on {share:.0%} of {len(g_le)} rounds (>= 70%)")


@pytest.mark.slow
def test_generalized_variant_share_per_instance(default_report):
    # stricter per-instance form: at least 80% of instances
    report, _ = default_report
    table = by_key(report)
    per_inst = defaultdict(list)
    for (inst, _), v in table.items():
        if len(v) == len(DEFAULT_SOLVERS):
            per_inst[inst].append(v["sgs_g"].iter <= v["sgs"].iter)
    share = np.mean([all(v) for v in per_inst.values()])
    assert share >= 0.8, share


def test_criterion_6_end_to_end():
    t0 = time.perf_counter()
    inst = make_instance(0, "checkerboard", 32, seed=606, angle_deg=10.0, fraction=0.05)
    scene, gt = inst.build()
    parts, ok = [], True
    for s in DEFAULT_SOLVERS:
        res = rectify(scene, gt.window,
                      OuterConfig(inner_solver=s, init_angles=default_init_angles()))
        err = abs(np.rad2deg(geo.rotation_angle(res.tau_final) + gt.angle))
        rank = numerical_rank(res.X_final, 1e-6)
        ok &= err < 0.5 and rank == inst.rank
        parts.append(f"{s}: err {err:.4f} deg rank {rank}")
    dt = time.perf_counter() - t0
    record(6, ok and dt < 120,
           "; ".join(parts) + f" (< 0.5 deg, rank {inst.rank}), {dt:.1f}s (< 120s)")


@pytest.mark.slow
def test_criterion_7_stagnation(default_report):
    report, _ = default_report
    counts = [o.result.rounds for o in report.outcomes if o.ok]
    ok = (len(counts) == len(report.outcomes)
          and all(o.result.stagnated and o.result.rounds <= 30 for o in report.outcomes))
    record(7, ok, f"{sum(o.ok and o.result.stagnated for o in report.outcomes)}/"
                  f"{len(report.outcomes)} runs stagnated within 30 rounds; "
                  f"rounds min {min(counts)} median {np.median(counts):g} max {max(counts)}")


@pytest.mark.slow
def test_criterion_8_objective_agreement(default_report):
    report, _ = default_report
    finals = defaultdict(dict)
    for o in report.outcomes:
        if o.ok and o.result.converged:
            finals[o.instance.id][o.solver] = o.result.per_round[-1].objective
    worst = 0.0
    for v in finals.values():
        f = np.array(list(v.values()))
        worst = max(worst, float((f.max() - f.min()) / f.max()))
    complete = sum(len(v) == len(DEFAULT_SOLVERS) for v in finals.values())
    record(8, worst <= 1e-3 and complete > 0,
           f"max relative objective spread {worst:.1e} (<= 1e-3) over "
           f"{complete} instances converged for every solver")


@pytest.mark.slow
def test_criterion_9_bench_determinism(tmp_path, capsys):
    texts = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        code = cli.main(["bench", "--seed", "1", "--out", str(out)])
        texts.append((out / "bench.csv").read_text())
    lines = capsys.readouterr().out.splitlines()

    def strip_time(text):
        rows = list(csv.reader(io.StringIO(text)))
        i = rows[0].index("time_s")
        return "\n".join(",".join(r[:i] + r[i + 1:]) for r in rows)

    same = strip_time(texts[0]) == strip_time(texts[1])
    order = [ln.split(":")[0] for ln in lines[:3]]
    record(9, same and order == ["direct", "sgs", "sgs_g"],
           f"two 'lrt bench --seed 1' CSVs identical without time_s: {same} "
           f"({len(texts[0].splitlines()) - 1} rows, exit {code}); summary order {order}")
