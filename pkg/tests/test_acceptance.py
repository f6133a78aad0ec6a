"""Acceptance gate: the nine exit criteria, each printing one PASS line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion
lines; every tolerance is pinned here, nothing is deferred.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from relaysel import analytic as an
from relaysel import channel as ch
from relaysel import montecarlo as mc
from relaysel import specfn
from relaysel.diversity import aser_sweep, fit_slope, effective_diversity
from relaysel.specfn import SeriesControl

from conftest import CTRL
from test_specfn import gamma_quad, j0_quad, e1_quad, q_quad, marcum_quad


def report(n: int, detail: str) -> None:
    print(f"ACCEPTANCE {n} PASS: {detail}")


def test_criterion_1_series_vs_quadrature_randomized():
    """outage_conditional vs its quadrature oracle on 50 random parameter
    sets within 1e-6 absolute, under 60 s."""
    rng = np.random.default_rng(2024)
    t0 = time.monotonic()
    worst = 0.0
    for _ in range(50):
        M = int(rng.integers(1, 6))
        power = float(rng.uniform(1.0, 100.0))
        r_o = float(rng.uniform(0.1, 1.0))
        rate = 0.5 * math.log2(1.0 + power * r_o)  # makes R_o land on the draw
        cfg = ch.SystemConfig.symmetric(
            M=M, power=power, rate=rate,
            rho_e=float(rng.uniform(0.9, 1.0)),
            rho_f=float(rng.uniform(0.5, 0.99)),
        )
        assert cfg.r_o == pytest.approx(r_o, rel=1e-12)
        size = int(rng.integers(1, M + 1))
        D = an.DecodingSet(tuple(sorted(rng.choice(M, size=size, replace=False).tolist())))
        m = int(rng.choice(D.members))
        series = an.outage_conditional(D, m, cfg, CTRL)
        quad = an.outage_conditional_quadrature(D, m, cfg)
        worst = max(worst, abs(series - quad))
    elapsed = time.monotonic() - t0
    assert worst < 1e-6
    assert elapsed < 60.0
    report(1, f"50 random sets, max |series - quadrature| = {worst:.3g}, {elapsed:.1f} s")


def test_criterion_2_analytic_vs_monte_carlo():
    """Derived mode, M=4, rho_f=0.9, rho_e=1, 1e6 trials at 5/10/15/20 dB:
    every metric within 3 MC standard errors, under 5 minutes."""
    t0 = time.monotonic()
    worst = 0.0
    for i, snr in enumerate([5.0, 10.0, 15.0, 20.0]):
        cfg = ch.SystemConfig.symmetric(M=4, power=10 ** (snr / 10.0), rho_e=1.0, rho_f=0.9)
        checks = [
            (an.outage_total(cfg, CTRL).value, mc.simulate_outage(cfg, 1_000_000, 42 + 10 * i)),
            (an.aser_total(cfg, CTRL).value, mc.simulate_ser(cfg, 1_000_000, 43 + 10 * i)),
            (an.capacity_lb_avg(cfg, CTRL).value, mc.simulate_capacity(cfg, 1_000_000, 44 + 10 * i)),
        ]
        for value, est in checks:
            z = abs(value - est.mean) / est.std_error
            worst = max(worst, z)
            assert z < 3.0
    elapsed = time.monotonic() - t0
    assert elapsed < 300.0
    report(2, f"12 metric points at 1e6 trials, worst z = {worst:.2f}, {elapsed:.1f} s")


def test_criterion_3_symmetric_general_agreement():
    """Symmetric fast paths equal the general decoding-set sums to 1e-10
    relative for M = 1..5, for outage, ASER and capacity."""
    worst = 0.0
    for M in range(1, 6):
        cfg = ch.SystemConfig.symmetric(M=M, power=12.0, rho_e=0.97, rho_f=0.85)
        pairs = [
            (an.outage_total_general, an.outage_total_symmetric),
            (an.aser_total_general, an.aser_total_symmetric),
            (an.capacity_lb_avg_general, an.capacity_lb_avg_symmetric),
        ]
        for gen, sym in pairs:
            g = gen(cfg, CTRL).value
            s = sym(cfg, CTRL).value
            worst = max(worst, abs(g - s) / abs(s))
    assert worst < 1e-10
    report(3, f"M in 1..5, worst relative difference = {worst:.3g}")


def test_criterion_4_diversity_order_claims():
    """(a) delay-only slope ~1 and M-independent; (b) full diversity M=3;
    (c) estimation errors drive the terminal slope to zero."""
    window = list(range(25, 36, 2))
    slopes = {}
    for M in (2, 3, 4):
        cfg = ch.SystemConfig.symmetric(M=M, power=1.0, rho_e=1.0, rho_f=0.9)
        curve = aser_sweep(cfg, window, CTRL)
        slopes[M] = fit_slope(curve, 25.0, 35.0)
        assert 0.85 <= slopes[M] <= 1.15
    spread = max(slopes.values()) - min(slopes.values())
    assert spread <= 0.1

    cfg3 = ch.SystemConfig.symmetric(M=3, power=1.0, rho_e=1.0, rho_f=1.0)
    slope_full = fit_slope(aser_sweep(cfg3, window, CTRL), 25.0, 35.0)
    assert 2.7 <= slope_full <= 3.3

    cfge = ch.SystemConfig.symmetric(M=3, power=1.0, rho_e=0.99, rho_f=0.9)
    curve_e = aser_sweep(cfge, [35.0, 40.0, 45.0], CTRL)
    terminal = effective_diversity(curve_e)[-1][1]
    assert terminal < 0.2
    report(
        4,
        f"delay slopes {', '.join(f'M={m}:{s:.3f}' for m, s in slopes.items())} "
        f"(spread {spread:.3f}); full-CSI M=3 slope {slope_full:.3f}; "
        f"rho_e=0.99 slope at 45 dB {terminal:.3f}",
    )


def test_criterion_5_error_floor_and_capacity_ceiling():
    """rho_e < 1 (0.95 here): ASER flattens and capacity saturates."""
    cfg = ch.SystemConfig.symmetric(M=2, power=1.0, rho_e=0.95, rho_f=0.9)
    a30 = an.aser_total(cfg.with_power(10.0**3.0), CTRL).value
    a40 = an.aser_total(cfg.with_power(10.0**4.0), CTRL).value
    c30 = an.capacity_lb_avg(cfg.with_power(10.0**3.0), CTRL).value
    c40 = an.capacity_lb_avg(cfg.with_power(10.0**4.0), CTRL).value
    assert a40 / a30 > 0.9
    assert c40 - c30 < 0.05
    report(5, f"ASER(40)/ASER(30) = {a40 / a30:.3f}; C(40) - C(30) = {c40 - c30:.4f} bits")


def test_criterion_6_degenerate_branch_exactness():
    """rho_f = 1 equals the order-statistics composition to 1e-12, and the
    rho_f -> 1 series limit lands within 1e-4 of it at rho_f = 0.9999."""
    cfg1 = ch.SystemConfig.symmetric(M=2, power=10.0, rho_f=1.0)
    lam = cfg1.relay_params()[0].lam
    direct = 0.0
    for D in an.all_decoding_sets(cfg1.M):
        w = an.prob_decoding_set(cfg1, D)
        direct += w * (1.0 if not D.members else (-math.expm1(-lam * cfg1.r_o)) ** len(D))
    exact = an.outage_total(cfg1, CTRL).value
    assert abs(exact - direct) < 1e-12

    big = SeriesControl(abs_tol=1e-12, k_max=200_000)
    near = ch.SystemConfig.symmetric(M=2, power=10.0, rho_f=0.9999)
    v_near = an.outage_total(near, big).value
    assert abs(v_near - exact) < 1e-4
    report(
        6,
        f"order-statistics |diff| = {abs(exact - direct):.3g}; "
        f"rho_f=0.9999 series limit |diff| = {abs(v_near - exact):.3g}",
    )


def test_criterion_7_special_function_golden_suite():
    """Kernel examples at their stated tolerances; Marcum grid at 1e-9."""
    assert specfn.lower_incomplete_gamma(1, 0.0) == 0.0
    assert specfn.lower_incomplete_gamma(1, 1.0) == pytest.approx(gamma_quad(1, 1.0), abs=1e-10)
    assert specfn.lower_incomplete_gamma(2, 3.0) == pytest.approx(gamma_quad(2, 3.0), abs=1e-10)
    assert specfn.bessel_j0(0.0) == 1.0
    assert abs(specfn.bessel_j0(2.404825557695773)) < 1e-9
    assert specfn.bessel_j0(1.0) == pytest.approx(j0_quad(1.0), abs=1e-10)
    assert specfn.exp_integral_ei(-1.0) == pytest.approx(e1_quad(1.0), rel=1e-9)
    assert specfn.exp_integral_ei(-10.0) == pytest.approx(e1_quad(10.0), rel=1e-9)
    assert specfn.gaussian_q(0.0) == 0.5
    assert specfn.gaussian_q(1.0) == pytest.approx(q_quad(1.0), rel=1e-9)
    assert specfn.gaussian_q_approx(0.0, 20) == pytest.approx(0.49211250018702973, rel=1e-12)
    assert specfn.marcum_q1(3.0, 0.0) == 1.0
    assert specfn.marcum_q1(0.0, 2.0) == pytest.approx(math.exp(-2.0), rel=1e-12)
    assert specfn.binomial(4, 2) == 6

    grid = np.linspace(0.0, 5.0, 20)
    worst = max(
        abs(specfn.marcum_q1(a, b) - marcum_quad(a, b)) for a in grid for b in grid
    )
    assert worst < 1e-9
    report(7, f"examples green; Marcum 20x20 grid max |diff| = {worst:.3g}")


def test_criterion_8_byte_identical_sweeps(tmp_path):
    """Two CLI runs of `sweep --mode both --seed 42` produce identical bytes."""
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text('{"M": 4, "rho_e": 1.0, "rho_f": 0.9, "rate": 1.0}')
    outs = []
    for name in ("one.csv", "two.csv"):
        out = tmp_path / name
        cp = subprocess.run(
            [
                sys.executable, "-m", "relaysel", "sweep", "--config", str(cfg_path),
                "--metric", "outage", "--snr-db", "0:20:4", "--mode", "both",
                "--trials", "50000", "--seed", "42", "--out", str(out),
            ],
            capture_output=True, text=True,
        )
        assert cp.returncode == 0, cp.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    report(8, f"{len(outs[0])} identical bytes across two seeded runs")


def test_criterion_9_figure_1_reproduction(tmp_path):
    """Figure 1 preset: fresh-feedback curve dominates at every SNR and its
    terminal slope is ~4; stale feedback is worst everywhere."""
    import csv

    out = tmp_path / "fig1.csv"
    cp = subprocess.run(
        [sys.executable, "-m", "relaysel", "reproduce", "--figure", "1", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert cp.returncode == 0, cp.stderr
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    labels = [f"rho_f={v}" for v in ("0.6", "0.7", "0.8", "0.9", "1.0")]
    curves = {
        lab: [(float(r["snr_db"]), float(r["value"])) for r in rows if r["label"] == lab]
        for lab in labels
    }
    fresh = curves["rho_f=1.0"]
    stale = curves["rho_f=0.6"]
    for lab in labels:
        pts = curves[lab]
        assert all(f[1] <= p[1] for f, p in zip(fresh, pts))
        assert all(s[1] >= p[1] for s, p in zip(stale, pts))
    (x1, v1), (x2, v2) = fresh[-2], fresh[-1]
    slope = -(math.log10(v2) - math.log10(v1)) / ((x2 - x1) / 10.0)
    assert slope == pytest.approx(4.0, abs=0.4)
    report(9, f"ordering holds on all 16 grid points; rho_f=1 terminal slope = {slope:.3f}")
