"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline; they
are also collected in the terminal summary.
"""
import io
import subprocess
import sys
import time
from contextlib import redirect_stdout

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from cran_duality.cli import main
from cran_duality.duality import build_coupling_ul, spectral_radius, ul_to_dl
from cran_duality.model import UplinkDesign, downlink_fronthaul_rates, evaluate, uplink_user_rates
from cran_duality.optimizer import fixed_point_solve, solve_downlink_min_power
from cran_duality.verify import (
    brute_force_min_power,
    duality_ensemble,
    properties_ensemble,
    random_beamformers,
    random_channel,
    random_instance,
    random_uplink_design,
    relative_gap,
    substreams,
)

SEED = 20240611
R43 = np.log2(4 / 3)


def record(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_c01_duality_preservation():
    t0 = time.perf_counter()
    s = duality_ensemble(1000, SEED, tol=1e-8)
    dt = time.perf_counter() - t0
    worst = max(s.max_rate_gap, s.max_fronthaul_gap, s.max_power_gap)
    ok = s.all_passed and worst <= 1e-8 and dt <= 60
    record(1, ok, f"1000 instances, worst gap {worst:.2e} (rate {s.max_rate_gap:.1e}, "
                  f"fronthaul {s.max_fronthaul_gap:.1e}, power {s.max_power_gap:.1e}), {dt:.1f} s")


def test_c02_round_trip():
    s = duality_ensemble(1000, SEED, tol=1e-8)
    record(2, s.max_roundtrip_gap <= 1e-8, f"1000 instances, worst round-trip gap {s.max_roundtrip_gap:.2e}")


def test_c03_spectral_radius():
    inv, orc = 0.0, 0.0
    for i, rng in enumerate(substreams(SEED + 3, 1000)):
        ch, caps = random_instance(rng)
        w = random_beamformers(ch.M, ch.K, rng)
        s = build_coupling_ul(ch, w, 2.0 ** caps - 1, rng.uniform(0.01, 3.0, ch.K))
        DA, DAt = s.DA, s.D[:, None] * s.A.T
        rho = spectral_radius(DA)
        inv = max(inv, float(relative_gap(rho, spectral_radius(DAt))))
        if i < 100:
            orc = max(orc, float(relative_gap(rho, np.max(np.abs(np.linalg.eigvals(DA))))))
    record(3, inv <= 1e-10 and orc <= 1e-8,
           f"invariance gap {inv:.2e} over 1000 systems, eigensolver gap {orc:.2e} over 100")


def test_c04_worked_scalar(scalar_channel):
    ul = fixed_point_solve(scalar_channel, [R43], [1.0], 1.0)
    dl = solve_downlink_min_power(scalar_channel, [R43], [1.0], 1.0)
    got = [ul.design.powers[0], ul.design.quant_noise[0], dl.design.powers[0], dl.design.quant_noise[0],
           ul.report.sum_power, dl.report.sum_power]
    want = [1.0, 2.0, 0.5, 0.5, 1.0, 1.0]
    err = max(abs(g - w) for g, w in zip(got, want))
    record(4, ul.converged and dl.converged and err <= 1e-10,
           f"p={got[0]:.12f} q={got[1]:.12f} p_dl={got[2]:.12f} q_dl={got[3]:.12f}, max error {err:.1e}")


def test_c05_brute_force_optimality():
    t0 = time.perf_counter()
    worst, below, n, draws = 0.0, 0, 0, 0
    for rng in substreams(SEED + 5, 10_000):
        if n == 100:
            break
        draws += 1
        ch = random_channel(int(rng.integers(2, 5)), 2, rng)
        caps = rng.uniform(0.5, 6.0, ch.M)
        R = rng.uniform(0.1, 1.5, 2)
        fp = fixed_point_solve(ch, R, caps, 1.0)
        if not fp.converged:
            continue
        bf = brute_force_min_power(ch, R, caps, 1.0, grid_step=1e-3)
        n += 1
        worst = max(worst, float(relative_gap(bf.sum_power, fp.report.sum_power)))
        below += bf.sum_power < fp.report.sum_power * (1 - 1e-9)
    dt = time.perf_counter() - t0
    record(5, n == 100 and worst <= 2e-3 and below == 0 and dt <= 300,
           f"{n} feasible instances ({draws} drawn), worst gap {worst:.2e}, "
           f"{below} below the solver, {dt:.1f} s")


def test_c06_interference_axioms():
    checked, bad = properties_ensemble(500, 20, SEED + 6)
    detail = "no counterexample" if bad is None else f"{bad.counterexample['axiom']} fails"
    record(6, bad is None and checked == 500, f"{checked} instances x 20 samples, {detail}")


def test_c07_downlink_solver():
    slack, fh, pw, n = 0.0, 0.0, 0.0, 0
    for rng in substreams(SEED + 7, 100):
        ch, caps = random_instance(rng)
        R = rng.uniform(0.05, 0.8, ch.K)
        dl = solve_downlink_min_power(ch, R, caps, 1.0)
        ul = fixed_point_solve(ch, R, caps, 1.0)
        assert dl.converged == ul.converged
        if not dl.converged:
            continue
        n += 1
        slack = max(slack, float(np.max(np.abs(dl.report.user_rates - R))))
        fh = max(fh, float(np.max(np.abs(downlink_fronthaul_rates(dl.design) - caps))))
        pw = max(pw, float(relative_gap(dl.report.sum_power, ul.report.sum_power)))
    record(7, n >= 50 and slack <= 1e-6 and fh <= 1e-9 and pw <= 1e-8,
           f"{n} feasible instances, rate slack {slack:.1e} bits, fronthaul gap {fh:.1e} bits, power gap {pw:.1e}")


def _textbook_bc_powers(ch, ul, gam, sigma2):
    # classical MAC-BC transform without compression: (I - D G^T) p = sigma2 D 1
    G = np.abs(ul.beamformers.conj().T @ ch.entries) ** 2  # G[i, j] = |w_i^H h_j|^2
    D = gam / np.diag(G)
    np.fill_diagonal(G, 0.0)
    return np.linalg.solve(np.eye(ch.K) - D[:, None] * G.T, sigma2 * D)


def test_c08_classical_limit():
    worst = 0.0
    for rng in substreams(SEED + 8, 100):
        ch, _ = random_instance(rng)
        caps = np.full(ch.M, 60.0)
        ul = random_uplink_design(ch, 1.0, caps, rng)
        gam = np.expm1(uplink_user_rates(ch, ul, 1.0) * np.log(2.0))
        dl = ul_to_dl(ch, 1.0, ul)
        worst = max(worst, float(np.max(relative_gap(dl.powers, _textbook_bc_powers(ch, ul, gam, 1.0)))))
    record(8, worst <= 1e-6, f"100 instances at C = 60 bits, worst power gap {worst:.2e}")


def test_c09_infeasible(scalar_channel):
    res = fixed_point_solve(scalar_channel, [1.1], [1.0], 1.0)
    record(9, res.infeasible and res.iterations <= 10_000,
           f"verdict {'infeasible' if res.infeasible else 'not infeasible'} after {res.iterations} iterations")


def _capture(argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(argv)
    return code, buf.getvalue().encode()


def test_c10_determinism(tmp_path):
    scen = tmp_path / "s.toml"
    assert main(["gen", "--M", "4", "--K", "3", "--seed", "17", "--targets", "0.4", "--caps", "3",
                 "--budget", "20", "--design", "ul", "--out", str(scen)]) == 0
    runs = [
        ["solve-ul", "--scenario", str(scen), "--format", "records"],
        ["solve-dl", "--scenario", str(scen), "--format", "records"],
        ["transform", "--scenario", str(scen), "--to", "dl", "--format", "records"],
        ["verify-duality", "--n", "50", "--seed", "3", "--format", "records"],
        ["verify-properties", "--n", "5", "--seed", "3", "--format", "records"],
        ["region", "--scenario", str(scen), "--direction", "dl", "--n", "10", "--seed", "9", "--format", "records"],
    ]
    same = 0
    for argv in runs:
        a, b = _capture(argv), _capture(argv)
        sub = subprocess.run([sys.executable, "-m", "cran_duality.cli", *argv], capture_output=True)
        same += a == b and a[1] == sub.stdout and a[0] == sub.returncode
    record(10, same == len(runs), f"{same}/{len(runs)} subcommands byte-identical across in-process and subprocess runs")
