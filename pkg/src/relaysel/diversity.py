"""Finite-SNR diversity order: local log-log slopes of metric sweeps.

The diversity order is the high-SNR limit of -dlog(value)/dlog(SNR); at
finite SNR we report the local slope against log10 of the *linear* SNR
(snr_db / 10), which keeps the limit convention-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .analytic import aser_total
from .channel import SystemConfig
from .specfn import SeriesControl


@dataclass(frozen=True)
class SweepCurve:
    """Metric values sampled on a strictly increasing dB grid."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValueError("a sweep curve needs at least two points")
        snrs = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(snrs, snrs[1:])):
            raise ValueError("snr_db grid must be strictly increasing")
        if any(p[1] <= 0.0 for p in self.points):
            raise ValueError("curve values must be positive")

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])


def effective_diversity(curve: SweepCurve) -> list[tuple[float, float]]:
    """Local negative slope of log10(value) against log10(linear SNR):
    central differences inside, one-sided at the ends."""
    x = curve.snr_db / 10.0  # log10 of linear SNR
    y = np.log10(curve.values)
    n = len(x)
    d = np.empty(n)
    d[0] = -(y[1] - y[0]) / (x[1] - x[0])
    d[-1] = -(y[-1] - y[-2]) / (x[-1] - x[-2])
    for i in range(1, n - 1):
        d[i] = -(y[i + 1] - y[i - 1]) / (x[i + 1] - x[i - 1])
    return list(zip(curve.snr_db.tolist(), d.tolist()))


def fit_slope(curve: SweepCurve, lo_db: float, hi_db: float) -> float:
    """Least-squares negative slope of log10(value) over [lo_db, hi_db]."""
    mask = (curve.snr_db >= lo_db - 1e-9) & (curve.snr_db <= hi_db + 1e-9)
    if int(mask.sum()) < 2:
        raise ValueError(f"need at least two points in [{lo_db}, {hi_db}] dB")
    x = curve.snr_db[mask] / 10.0
    y = np.log10(curve.values[mask])
    slope = np.polyfit(x, y, 1)[0]
    return -float(slope)


def aser_sweep(
    config: SystemConfig,
    snr_db: Sequence[float],
    ctrl: SeriesControl = SeriesControl(),
    n_a: int = 20,
) -> SweepCurve:
    """Evaluate the closed-form ASER on a dB grid and package it as a curve."""
    pts = []
    for s in snr_db:
        value = aser_total(config.with_power(10.0 ** (s / 10.0)), ctrl, n_a).value
        pts.append((float(s), value))
    return SweepCurve(tuple(pts))


def _expected_scenario(config: SystemConfig) -> tuple[str, float]:
    rho_e = min(fp.rho_e for fp in config.source_links + config.relay_links)
    rho_f = min(fp.rho_f for fp in config.relay_links)
    if rho_e < 1.0:
        return "estimation-error-floor", 0.0
    if rho_f < 1.0:
        return "feedback-delay", 1.0
    return "full-diversity", float(config.M)


def asymptotic_checks(
    configs: Sequence[SystemConfig],
    ctrl: SeriesControl = SeriesControl(),
    n_a: int = 20,
    tol_delay: float = 0.15,
    tol_full: float = 0.3,
    ceiling: float = 0.2,
) -> dict:
    """Classify a power-only family of configs and test its terminal slope.

    Expected orders: M for perfect CSI and fresh feedback, 1 with feedback
    delay only, 0 with estimation errors.  The estimation-error case checks
    the terminal local slope against `ceiling`; the others fit the slope
    over the last 10 dB of the grid.
    """
    if len(configs) < 4:
        raise ValueError("need at least four powers to assess a slope")
    base = configs[0]
    for c in configs[1:]:
        if c.with_power(base.power) != base:
            raise ValueError("configs must differ only in power")
    snr_db = [10.0 * math.log10(c.power) for c in configs]
    if any(b <= a for a, b in zip(snr_db, snr_db[1:])):
        raise ValueError("configs must be ordered by increasing power")
    if snr_db[-1] - snr_db[0] < 10.0:
        raise ValueError("SNR range too narrow to estimate an asymptotic slope")

    curve = SweepCurve(tuple(zip(snr_db, (aser_total(c, ctrl, n_a).value for c in configs))))
    scenario, expected = _expected_scenario(base)
    if scenario == "estimation-error-floor":
        observed = effective_diversity(curve)[-1][1]
        passed = observed < ceiling
        detail = f"terminal slope {observed:.3f} < {ceiling}"
    else:
        observed = fit_slope(curve, snr_db[-1] - 10.0, snr_db[-1])
        tol = tol_full if scenario == "full-diversity" else tol_delay
        passed = abs(observed - expected) <= tol
        detail = f"fitted slope {observed:.3f} vs {expected} +- {tol}"
    return {
        "scenario": scenario,
        "expected_order": expected,
        "observed": observed,
        "passed": bool(passed),
        "detail": detail,
        "curve": curve,
    }
