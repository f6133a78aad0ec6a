"""Command-line harness: sweeps, figure presets, cross-validation, CSV output.

Configuration document (JSON):

    {
      "M": 4,                      required relay count
      "power_db": 10.0,            or "power_linear" (never both); optional
                                   when a sweep grid supplies the power
      "rate": 1.0,                 target rate R in bits/s/Hz (R_o = (2^2R-1)/P)
      "alpha": 1.0, "beta": 2.0,   modulation constants (BPSK defaults)
      "rho_e": 1.0,                scalar or list of M
      "rho_f": 0.9,                scalar or list of M
      "sigma2_h": 1.0,             scalar or list of M; defaults to rho_e so
                                   the estimate variance is one
      "sigma2_e": 0.05,            alternative: sets rho_e = sigma2_h = 1 - sigma2_e
      "lambda_convention": "derived" | "paper",
      "source_links": [{"sigma2_h":..,"rho_e":..,"rho_f":..}, ...],
      "relay_links":  [...]        full per-link overrides
    }

CSV schema (fixed column order, one schema for every metric; empty cells
where a column does not apply):

    snr_db, metric, mode, value, mc_mean, mc_stderr, z_score,
    series_terms, condition_estimate, label

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import dataclass, replace

import click

from . import analytic, montecarlo
from .channel import CONVENTIONS, FadingParams, SystemConfig
from .diversity import SweepCurve, effective_diversity
from .specfn import SeriesControl, SeriesError

METRICS = ("outage", "aser", "capacity", "diversity")
MODES = ("analytic", "mc", "both")

# headroom over the SeriesControl default so figure presets near rho_f = 1
# converge; tolerance stays at the default
CLI_CTRL = SeriesControl(abs_tol=1e-12, k_max=65536)
DEFAULT_N_A = 20

CSV_COLUMNS = (
    "snr_db",
    "metric",
    "mode",
    "value",
    "mc_mean",
    "mc_stderr",
    "z_score",
    "series_terms",
    "condition_estimate",
    "label",
)


class ConfigError(ValueError):
    """Configuration document rejected; message carries the field path."""


# ---------------------------------------------------------------------------
# configuration loading
# ---------------------------------------------------------------------------

def _as_link_list(doc: dict, key: str, M: int, defaults: list[dict]) -> tuple[FadingParams, ...]:
    raw = doc.get(key)
    if raw is None:
        out = []
        for i, d in enumerate(defaults):
            try:
                out.append(FadingParams(**d))
            except ValueError as e:
                raise ConfigError(f"{key}[{i}]: {e}") from e
        return tuple(out)
    if not isinstance(raw, list) or len(raw) != M:
        raise ConfigError(f"{key}: must be a list of exactly M={M} objects")
    links = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ConfigError(f"{key}[{i}]: must be an object")
        merged = dict(defaults[i])
        for fname, fval in entry.items():
            if fname not in ("sigma2_h", "rho_e", "rho_f"):
                raise ConfigError(f"{key}[{i}].{fname}: unknown field")
            merged[fname] = fval
        try:
            links.append(FadingParams(**merged))
        except ValueError as e:
            raise ConfigError(f"{key}[{i}]: {e}") from e
    return tuple(links)


def _scalar_or_list(doc: dict, key: str, M: int, default) -> list:
    val = doc.get(key, default)
    if isinstance(val, list):
        if len(val) != M:
            raise ConfigError(f"{key}: list must have exactly M={M} entries")
        return [float(v) for v in val]
    try:
        return [float(val)] * M
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{key}: expected a number or list of numbers") from e


def load_config(doc: dict) -> SystemConfig:
    """Build a SystemConfig from a configuration document (parsed JSON)."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be a JSON object")
    known = {
        "M", "power_db", "power_linear", "rate", "alpha", "beta", "rho_e",
        "rho_f", "sigma2_h", "sigma2_e", "lambda_convention",
        "source_links", "relay_links",
    }
    for key in doc:
        if key not in known:
            raise ConfigError(f"{key}: unknown field")
    if "M" not in doc:
        raise ConfigError("M: required field is missing")
    try:
        M = int(doc["M"])
    except (TypeError, ValueError) as e:
        raise ConfigError("M: must be an integer") from e
    if M < 1:
        raise ConfigError("M: must be >= 1")

    if "power_db" in doc and "power_linear" in doc:
        raise ConfigError("power_db/power_linear: give one or the other, not both")
    if "power_db" in doc:
        power = 10.0 ** (float(doc["power_db"]) / 10.0)
    elif "power_linear" in doc:
        power = float(doc["power_linear"])
    else:
        power = 1.0  # sweeps override it per grid point

    if "sigma2_e" in doc:
        if "rho_e" in doc or "sigma2_h" in doc:
            raise ConfigError(
                "sigma2_e: alternative parameterization, incompatible with rho_e/sigma2_h"
            )
        s2e = _scalar_or_list(doc, "sigma2_e", M, 0.0)
        rho_e = [1.0 - v for v in s2e]
        sigma2_h = [1.0 - v for v in s2e]
    else:
        rho_e = _scalar_or_list(doc, "rho_e", M, 1.0)
        sigma2_h = _scalar_or_list(doc, "sigma2_h", M, None) if "sigma2_h" in doc else rho_e
    rho_f = _scalar_or_list(doc, "rho_f", M, 1.0)

    defaults = [
        {"sigma2_h": sigma2_h[i], "rho_e": rho_e[i], "rho_f": rho_f[i]} for i in range(M)
    ]
    source_links = _as_link_list(doc, "source_links", M, defaults)
    relay_links = _as_link_list(doc, "relay_links", M, defaults)

    convention = doc.get("lambda_convention", "derived")
    if convention not in CONVENTIONS:
        raise ConfigError(f"lambda_convention: must be one of {CONVENTIONS}")

    try:
        return SystemConfig(
            M=M,
            power=power,
            rate=float(doc.get("rate", 1.0)),
            alpha=float(doc.get("alpha", 1.0)),
            beta=float(doc.get("beta", 2.0)),
            source_links=source_links,
            relay_links=relay_links,
            lambda_convention=convention,
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e


def load_config_file(path: str) -> SystemConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file is not valid JSON: {e}") from e
    return load_config(doc)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricPoint:
    snr_db: float
    metric: str
    mode: str
    value: float | None = None
    mc_mean: float | None = None
    mc_stderr: float | None = None
    z_score: float | None = None
    series_terms: int | None = None
    condition_estimate: float | None = None
    label: str = ""


@dataclass(frozen=True)
class SweepSpec:
    metric: str
    snr_db: tuple[float, ...]
    mode: str
    trials: int
    seed: int
    config: SystemConfig
    output_path: str = "-"
    label: str = ""

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ConfigError(f"metric: must be one of {METRICS}")
        if self.mode not in MODES:
            raise ConfigError(f"mode: must be one of {MODES}")
        if not self.snr_db:
            raise ConfigError("snr_db: grid must be nonempty")
        if self.mode in ("mc", "both") and self.trials < 1:
            raise ConfigError("trials: must be >= 1 when Monte Carlo runs")


_ANALYTIC = {
    "outage": lambda cfg, ctrl: analytic.outage_total(cfg, ctrl),
    "aser": lambda cfg, ctrl: analytic.aser_total(cfg, ctrl, DEFAULT_N_A),
    "capacity": lambda cfg, ctrl: analytic.capacity_lb_avg(cfg, ctrl),
}

_SIMULATE = {
    "outage": montecarlo.simulate_outage,
    "aser": montecarlo.simulate_ser,
    "capacity": montecarlo.simulate_capacity,
}


def _row_seed(seed: int, index: int) -> int:
    return (seed * 1_000_003 + index) % (1 << 63)


def run_sweep(spec: SweepSpec, ctrl: SeriesControl = CLI_CTRL) -> list[MetricPoint]:
    """One row per grid point; `both` mode adds MC columns and a z-score.
    Numerical failures are surfaced per row (value left empty) rather than
    aborting the whole sweep."""
    if spec.metric == "diversity":
        return _diversity_rows_from_config(spec, ctrl)
    rows = []
    for i, snr in enumerate(spec.snr_db):
        cfg = spec.config.with_power(10.0 ** (snr / 10.0))
        value = terms = cond = None
        if spec.mode in ("analytic", "both"):
            try:
                res = _ANALYTIC[spec.metric](cfg, ctrl)
                value, terms, cond = res.value, res.series_terms_used, res.condition_estimate
            except SeriesError as e:
                click.echo(f"warning: snr {snr} dB: {e}", err=True)
        mean = stderr = z = None
        if spec.mode in ("mc", "both"):
            est = _SIMULATE[spec.metric](cfg, spec.trials, _row_seed(spec.seed, i))
            mean, stderr = est.mean, est.std_error
            if value is not None:
                diff = abs(value - mean)
                z = diff / stderr if stderr > 0 else (0.0 if diff < 1e-15 else math.inf)
        rows.append(
            MetricPoint(
                snr_db=snr, metric=spec.metric, mode=spec.mode, value=value,
                mc_mean=mean, mc_stderr=stderr, z_score=z, series_terms=terms,
                condition_estimate=cond, label=spec.label,
            )
        )
    return rows


def _diversity_rows_from_config(spec: SweepSpec, ctrl: SeriesControl) -> list[MetricPoint]:
    aser_spec = replace(spec, metric="aser", mode="analytic")
    base = run_sweep(aser_spec, ctrl)
    return diversity_rows([(r.snr_db, r.value) for r in base], spec.label)


def diversity_rows(points: list[tuple[float, float]], label: str = "") -> list[MetricPoint]:
    """Differentiate an (snr_db, aser) table into diversity-order rows."""
    curve = SweepCurve(tuple(points))
    return [
        MetricPoint(snr_db=s, metric="diversity", mode="analytic", value=d, label=label)
        for s, d in effective_diversity(curve)
    ]


def diversity_rows_from_csv(path: str, label: str = "") -> list[MetricPoint]:
    """Consume a prior ASER sweep CSV and append the diversity column."""
    points = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            if row.get("metric") != "aser":
                continue
            val = row.get("value") or row.get("mc_mean")
            if val:
                points.append((float(row["snr_db"]), float(val)))
    if len(points) < 2:
        raise ConfigError(f"{path}: fewer than two usable aser rows")
    return diversity_rows(points, label)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def render_csv(rows: list[MetricPoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([
            _cell(r.snr_db), r.metric, r.mode, _cell(r.value), _cell(r.mc_mean),
            _cell(r.mc_stderr), _cell(r.z_score), _cell(r.series_terms),
            _cell(r.condition_estimate), r.label,
        ])
    return buf.getvalue()


def write_csv(rows: list[MetricPoint], path: str) -> None:
    text = render_csv(rows)
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# figure presets
# ---------------------------------------------------------------------------

def _grid(start: float, stop: float, step: float) -> tuple[float, ...]:
    out = []
    v = float(start)
    while v <= stop + 1e-9:
        out.append(round(v, 10))
        v += step
    return tuple(out)


def _sym(M: int, rho_e: float, rho_f: float) -> SystemConfig:
    return SystemConfig.symmetric(
        M=M, power=1.0, rho_e=rho_e, rho_f=rho_f, lambda_convention="paper"
    )


def _figure_presets() -> dict[int, dict]:
    rho_fs = (0.6, 0.7, 0.8, 0.9, 1.0)
    rho_es = (0.9, 0.95, 0.99, 1.0)
    return {
        1: {
            "metric": "outage", "snr": _grid(0, 30, 2),
            "curves": [(f"rho_f={r}", _sym(4, 1.0, r)) for r in rho_fs],
        },
        2: {
            "metric": "outage", "snr": _grid(0, 30, 2),
            "curves": [
                (f"M={m},rho_f={r}", _sym(m, 1.0, r)) for m in (2, 3, 4) for r in (0.9, 1.0)
            ],
        },
        3: {
            "metric": "outage", "snr": _grid(0, 40, 2),
            "curves": [(f"rho_e={r}", _sym(2, r, 0.9)) for r in rho_es],
        },
        4: {
            "metric": "aser", "snr": _grid(0, 30, 2),
            "curves": [(f"rho_f={r}", _sym(3, 1.0, r)) for r in rho_fs],
        },
        5: {
            "metric": "aser", "snr": _grid(0, 40, 2),
            "curves": [(f"rho_e={r}", _sym(2, r, 0.9)) for r in rho_es],
        },
        6: {
            "metric": "diversity", "snr": _grid(5, 45, 2),
            "curves": [(f"rho_f={r}", _sym(4, 1.0, r)) for r in (0.6, 0.7, 0.8, 0.9)],
        },
        7: {
            "metric": "diversity", "snr": _grid(5, 45, 2),
            "curves": [(f"M={m}", _sym(m, 1.0, 0.9)) for m in (2, 3, 4)],
        },
        8: {
            "metric": "diversity", "snr": _grid(5, 45, 2),
            "curves": [(f"rho_e={r}", _sym(3, r, 0.9)) for r in rho_es],
        },
        9: {
            "metric": "capacity", "snr": _grid(0, 40, 2),
            "curves": [
                ("rho_f=1.0,rho_e=1.0", _sym(3, 1.0, 1.0)),
                ("rho_f=0.9,rho_e=1.0", _sym(3, 1.0, 0.9)),
                ("rho_f=0.6,rho_e=1.0", _sym(3, 1.0, 0.6)),
                ("rho_f=0.9,rho_e=0.99", _sym(3, 0.99, 0.9)),
                ("rho_f=0.9,rho_e=0.95", _sym(3, 0.95, 0.9)),
                ("rho_f=0.9,rho_e=0.9", _sym(3, 0.9, 0.9)),
            ],
        },
    }


def reproduce_figure(fig_id: int, output_path: str, ctrl: SeriesControl = CLI_CTRL) -> list[MetricPoint]:
    """Emit the analytic CSV behind one of the nine reference figures.

    Presets follow the source experiment set-up: BPSK (alpha=1, beta=2),
    rate 1 bits/s/Hz, unit estimate variance, "paper" lambda convention.
    rho_e grids are {0.9, 0.95, 0.99, 1} where the captions only say
    "varying".
    """
    presets = _figure_presets()
    if fig_id not in presets:
        raise ConfigError(f"figure: unknown id {fig_id}, valid ids are 1..9")
    preset = presets[fig_id]
    rows: list[MetricPoint] = []
    for label, cfg in preset["curves"]:
        spec = SweepSpec(
            metric=preset["metric"], snr_db=preset["snr"], mode="analytic",
            trials=0, seed=0, config=cfg, label=label,
        )
        rows.extend(run_sweep(spec, ctrl))
    write_csv(rows, output_path)
    return rows


# ---------------------------------------------------------------------------
# cross-oracle validation
# ---------------------------------------------------------------------------

def _corrupt(config: SystemConfig, factor: float) -> SystemConfig:
    """Test hook: scale relay-link estimate variances so derived rates are
    off by ~factor on the analytic side only."""
    links = tuple(
        FadingParams(sigma2_h=fp.sigma2_h / factor, rho_e=fp.rho_e, rho_f=fp.rho_f)
        for fp in config.relay_links
    )
    return replace(config, relay_links=links)


def validate(
    config: SystemConfig,
    trials: int,
    seed: int,
    ctrl: SeriesControl = CLI_CTRL,
    corrupt_lambda: float = 1.0,
) -> tuple[bool, list[str]]:
    """Run the cross-oracle suite; returns (all_passed, report lines).

    Checks: decoding-set partition of unity, series vs quadrature for every
    selection candidate, symmetric vs general formula agreement, the
    rho_f = 1 degenerate branch, and analytic vs Monte Carlo z-scores.
    """
    acfg = config if corrupt_lambda == 1.0 else _corrupt(config, corrupt_lambda)
    report: list[str] = []
    ok = True

    def check(name: str, passed: bool, detail: str) -> None:
        nonlocal ok
        ok = ok and passed
        report.append(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")

    total = sum(analytic.prob_decoding_set(acfg, D) for D in analytic.all_decoding_sets(acfg.M))
    check("partition-of-unity", abs(total - 1.0) < 1e-12, f"|sum-1| = {abs(total - 1.0):.3g} (tol 1e-12)")

    full = analytic.DecodingSet(tuple(range(acfg.M)))
    worst = 0.0
    for m in full:
        series = analytic.outage_conditional(full, m, acfg, ctrl)
        quad = analytic.outage_conditional_quadrature(full, m, acfg)
        worst = max(worst, abs(series - quad))
    check("series-vs-quadrature", worst < 1e-6, f"max |diff| = {worst:.3g} (tol 1e-6)")

    if acfg.is_symmetric():
        pairs = {
            "outage": (analytic.outage_total_general, analytic.outage_total_symmetric),
            "aser": (analytic.aser_total_general, analytic.aser_total_symmetric),
            "capacity": (analytic.capacity_lb_avg_general, analytic.capacity_lb_avg_symmetric),
        }
        for name, (gen, sym) in pairs.items():
            g = gen(acfg, ctrl).value
            s = sym(acfg, ctrl).value
            rel = abs(g - s) / max(abs(s), 1e-300)
            check(f"symmetric-vs-general[{name}]", rel < 1e-10, f"rel diff = {rel:.3g} (tol 1e-10)")

    rel_links = acfg.relay_params()
    if acfg.is_symmetric() and rel_links[0].degenerate:
        lam = rel_links[0].lam
        r_o = acfg.r_o
        direct = 0.0
        for D in analytic.all_decoding_sets(acfg.M):
            w = analytic.prob_decoding_set(acfg, D)
            direct += w * (1.0 if not D.members else (-math.expm1(-lam * r_o)) ** len(D))
        got = analytic.outage_total(acfg, ctrl).value
        check(
            "degenerate-order-statistics", abs(got - direct) < 1e-12,
            f"|diff| = {abs(got - direct):.3g} (tol 1e-12)",
        )

    z_tol = 4.0  # validate() runs at arbitrary trial counts; keep false alarms rare
    for name, sim in _SIMULATE.items():
        value = _ANALYTIC[name](acfg, ctrl).value
        est = sim(config, trials, seed)
        diff = abs(value - est.mean)
        z = diff / est.std_error if est.std_error > 0 else (0.0 if diff < 1e-15 else math.inf)
        check(f"analytic-vs-mc[{name}]", z < z_tol, f"z = {z:.2f} (tol {z_tol})")

    return ok, report


# ---------------------------------------------------------------------------
# click wiring
# ---------------------------------------------------------------------------

def _parse_grid(text: str) -> tuple[float, ...]:
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return (float(parts[0]),)
        if len(parts) == 3:
            start, stop, step = (float(p) for p in parts)
            if step <= 0 or stop < start:
                raise ValueError
            return _grid(start, stop, step)
    except ValueError:
        pass
    raise ConfigError(f"snr-db: expected START:STOP:STEP or a single value, got {text!r}")


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Exact performance analysis of decode-and-forward relay selection with
    outdated CSI and channel estimation errors, cross-checked by simulation."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="JSON config file")
@click.option("--metric", type=click.Choice(METRICS), required=True)
@click.option("--snr-db", "snr_db", default="0:30:2", show_default=True, help="START:STOP:STEP grid in dB")
@click.option("--mode", type=click.Choice(MODES), default="analytic", show_default=True)
@click.option("--trials", default=100_000, show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.option("--out", "out_path", default="-", show_default=True, help="output CSV path, - for stdout")
@click.option("--lambda-convention", type=click.Choice(CONVENTIONS), default=None,
              help="override the config's convention")
@click.option("--in", "in_path", default=None, type=click.Path(),
              help="prior aser sweep CSV to differentiate (metric=diversity only)")
def sweep(config_path, metric, snr_db, mode, trials, seed, out_path, lambda_convention, in_path):
    """Evaluate one metric over an SNR grid; optionally cross-check with MC."""
    try:
        if in_path is not None:
            if metric != "diversity":
                raise ConfigError("--in only applies to the diversity metric")
            rows = diversity_rows_from_csv(in_path)
        else:
            config = load_config_file(config_path)
            if lambda_convention:
                config = replace(config, lambda_convention=lambda_convention)
            spec = SweepSpec(metric=metric, snr_db=_parse_grid(snr_db), mode=mode,
                             trials=trials, seed=seed, config=config, output_path=out_path)
            rows = run_sweep(spec)
        write_csv(rows, out_path)
    except ConfigError as e:
        _fail(2, str(e))
    except SeriesError as e:
        _fail(3, str(e))


@main.command()
@click.option("--figure", type=int, required=True, help="figure id, 1..9")
@click.option("--out", "out_path", default="-", show_default=True)
def reproduce(figure, out_path):
    """Emit the CSV for one of the nine reference figures ("paper" convention)."""
    try:
        reproduce_figure(figure, out_path)
    except ConfigError as e:
        _fail(2, str(e))
    except SeriesError as e:
        _fail(3, str(e))


@main.command("validate")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--trials", default=200_000, show_default=True)
@click.option("--seed", default=42, show_default=True)
def validate_cmd(config_path, trials, seed):
    """Cross-validate every oracle pair on the given configuration."""
    try:
        config = load_config_file(config_path)
        ok, report = validate(config, trials, seed)
    except ConfigError as e:
        _fail(2, str(e))
    except SeriesError as e:
        _fail(3, str(e))
    for line in report:
        click.echo(line)
    if not ok:
        sys.exit(1)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
def info(config_path):
    """Print the derived per-link constants for a configuration."""
    try:
        config = load_config_file(config_path)
    except ConfigError as e:
        _fail(2, str(e))
    def link_doc(lp):
        return {
            "lam": lp.lam, "c": lp.c, "theta": lp.theta,
            "sigma2_hat": lp.sigma2_hat, "sigma2_u": lp.sigma2_u,
            "sigma2_e": lp.sigma2_e, "rho_e": lp.rho_e, "rho_f": lp.rho_f,
        }
    out = {
        "M": config.M,
        "power": config.power,
        "snr_db": 10.0 * math.log10(config.power),
        "rate": config.rate,
        "r_o": config.r_o,
        "alpha": config.alpha,
        "beta": config.beta,
        "lambda_convention": config.lambda_convention,
        "source_links": [link_doc(lp) for lp in config.source_params()],
        "relay_links": [link_doc(lp) for lp in config.relay_params()],
    }
    click.echo(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
