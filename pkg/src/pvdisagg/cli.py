"""Command-line interface: ``pvdisagg <subcommand> ...``.

Subcommands: simulate, detect, suggest-threshold, fit, disaggregate, sweep,
score. Run ``pvdisagg <subcommand> --help`` for the flags of each.
"""

from __future__ import annotations

import argparse
import csv
import sys
import warnings
from pathlib import Path

import numpy as np

from . import io, simulator
from .capbank import CapBankConfig, compensate_and_downsample, detect_and_compensate, suggest_threshold
from .csge import CsgeWeights, disaggregate_csge, estimate_weights, sampling_rate_sweep, weight_sensitivity_sweep
from .linear_estimator import disaggregate_le
from .metrics import format_report, score
from .pfbe import PfbeAssumptions, calibrate_load_pf, disaggregate_pfbe, estimate_night_power_factor
from .regression import fit_day_aggregate_model, fit_night_load_model, summary_rows, summary_table
from .timeseries import DaytimeMask, align, daytime_mask, moving_average, split_phases

STUDIES = {
    "calibrated": simulator.calibrate_to_paper,
    "sampling": simulator.sampling_study,
    "capbank": simulator.capbank_study,
}


def _floats_list(text: str) -> list[float]:
    out = []
    for item in text.split(","):
        item = item.strip()
        if "/" in item:
            num, den = item.split("/")
            out.append(float(num) / float(den))
        elif item:
            out.append(float(item))
    return out


def _out_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


# --- shared inputs -----------------------------------------------------------------------


def _add_inputs(p: argparse.ArgumentParser, proxy: bool = True) -> None:
    p.add_argument("--input", required=True, help="substation power CSV")
    p.add_argument("--phase", default=None, help="phase label to read from a per-phase file")
    if proxy:
        p.add_argument("--proxy", required=True, help="irradiance proxy CSV (timestamp,power_kw)")
        p.add_argument("--proxy-filter-seconds", type=int, default=300,
                       help="moving-average window applied to the proxy (0 disables; default 300)")
        p.add_argument("--centered-filter", action="store_true",
                       help="use a centered instead of a trailing moving average")
        p.add_argument("--threshold-kw", type=float, default=0.0,
                       help="daytime mask: proxy strictly above this value (default 0)")


def _load_inputs(args, proxy: bool = True):
    series = io.read_power_csv(args.input, args.phase)
    if not proxy:
        return series, None, None
    phi = io.read_proxy_csv(args.proxy)
    if args.proxy_filter_seconds:
        phi = moving_average(phi, args.proxy_filter_seconds, centered=args.centered_filter)
    series, phi = align([series, phi])
    return series, phi, daytime_mask(phi, args.threshold_kw)


def _read_truth(path, like):
    if path is None:
        return None
    truth = io.read_power_csv(path, allow_missing=True)
    return align([like, truth])[1]


# --- subcommands -------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    scenario = simulator.load_scenario(args.scenario) if args.scenario else STUDIES[args.study](args.seed)
    if args.noise_free:
        scenario = simulator.noise_free(scenario)
    out = _out_dir(args.out)
    if args.save_scenario:
        simulator.save_scenario(args.save_scenario, scenario)
    g = simulator.generate(scenario)
    io.write_power_csv(out / "aggregate.csv", g.aggregate)
    io.write_power_csv(out / "load.csv", g.load)
    io.write_power_csv(out / "pv.csv", g.pv)
    io.write_proxy_csv(out / "proxy.csv", g.proxy)
    if scenario.capbank:
        io.write_power_csv(out / "bank_free.csv", g.bank_free)
    if args.phases:
        io.write_power_csv(out / "phases.csv", split_phases(g.aggregate))
    print(f"wrote {len(g.aggregate)} samples at {scenario.step_seconds} s to {out}")
    return 0


def cmd_detect(args) -> int:
    series = io.read_power_csv(args.input, args.phase)
    config = CapBankConfig(args.threshold_kvar_per_phase, args.detection_step)
    if args.downsample_to:
        compensated, report = compensate_and_downsample(series, config, args.downsample_to)
    else:
        report = detect_and_compensate(series, config)
        compensated = report.compensated
    io.write_events_csv(args.events, report.events)
    io.write_power_csv(args.output, compensated)
    print(f"{len(report.events)} switching event(s) at threshold {report.threshold_kvar:g} kVAR")
    return 0


def cmd_suggest_threshold(args) -> int:
    series = io.read_power_csv(args.input, args.phase)
    counts, edges = suggest_threshold(series, args.bins)
    w = csv.writer(sys.stdout)
    w.writerow(["abs_delta_kvar_lo", "abs_delta_kvar_hi", "count"])
    for lo, hi, c in zip(edges[:-1], edges[1:], counts):
        w.writerow([f"{lo:.6g}", f"{hi:.6g}", int(c)])
    return 0


def _write_fit(out: Path, name: str, fit) -> None:
    with open(out / f"{name}.csv", "w", newline="") as fh:
        rows = summary_rows(fit)
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def cmd_fit(args) -> int:
    series, phi, mask = _load_inputs(args)
    night = fit_night_load_model(series, mask)
    day = fit_day_aggregate_model(series, phi, mask)
    print(summary_table([night, day], ["night load", "day aggregate"]))
    if args.out:
        out = _out_dir(args.out)
        _write_fit(out, "fit_night", night)
        _write_fit(out, "fit_day", day)
    return 0


def _holdout_mask(series, mask: DaytimeMask, holdout_from: str | None) -> DaytimeMask | None:
    if holdout_from is None:
        return None
    cut = io.parse_timestamp(holdout_from)
    return DaytimeMask(series.times < cut) & mask


def cmd_disaggregate(args) -> int:
    out = _out_dir(args.out)
    if args.method == "pfbe":
        series = io.read_power_csv(args.input, args.phase)
        if args.calibrate_at is not None:
            if args.calibrate_pv_kw is None:
                raise SystemExit("--calibrate-at needs --calibrate-pv-kw")
            pf = calibrate_load_pf(series, io.parse_timestamp(args.calibrate_at), args.calibrate_pv_kw, args.pv_pf)
        else:
            pf = estimate_night_power_factor(series, None, args.night_start, args.night_end, args.utc_offset)
        result = disaggregate_pfbe(series, PfbeAssumptions(pf, args.pv_pf))
        load, pv, mask = result.load, result.pv, None
        print(f"load power factor {pf.cos_phi_load:.4f} (sin {pf.sin_phi_load:+.4f}), PV power factor {args.pv_pf:g}")
    else:
        series, phi, mask = _load_inputs(args)
        if args.method == "le":
            result = disaggregate_le(series, phi, mask, _holdout_mask(series, mask, args.holdout_from))
            load, pv, fit = result.load_hat, result.pv_hat, result.fit
        else:
            if args.alpha is not None or args.beta is not None:
                if args.auto_weights:
                    raise SystemExit("--auto-weights excludes --alpha/--beta")
                if args.alpha is None or args.beta is None:
                    raise SystemExit("--alpha and --beta go together")
                weights = CsgeWeights(args.alpha, args.beta, "manual")
            else:
                est, weights = estimate_weights(series, phi, mask)
                print(f"variances: load {est.var_load:.6g} kW^2, total {est.var_total:.6g} kW^2, "
                      f"pv {est.var_pv:.6g} kW^2{' (clamped)' if est.clamped else ''}")
            result = disaggregate_csge(series, phi, mask, weights)
            load, pv, fit = result.load_star, result.pv_star, result.theta
            print(f"alpha={weights.alpha:.6g} beta={weights.beta:.6g} ({weights.provenance}); "
                  f"residual share load {result.residual_share_load:.4g}, pv {result.residual_share_pv:.4g}")
        print(summary_table([fit], ["day aggregate"]))
        _write_fit(out, "fit_day", fit)
    io.write_power_csv(out / "load.csv", load)
    io.write_power_csv(out / "pv.csv", pv)
    for name, est, truth_path in (("PV", pv, args.truth_pv), ("load", load, args.truth_load)):
        truth = _read_truth(truth_path, est)
        if truth is not None:
            print(format_report(name, score(est, truth, args.capacity_kw, mask)))
    return 0


def cmd_sweep(args) -> int:
    series, phi, mask = _load_inputs(args)
    truth_pv = _read_truth(args.truth_pv, series)
    truth_load = _read_truth(args.truth_load, series)
    if args.kind == "weights":
        if truth_load is None:
            raise SystemExit("--kind weights needs --truth-load")
        ratios = _floats_list(args.ratios) if args.ratios else list(np.logspace(-4, 4, 17))
        rows = weight_sensitivity_sweep(series, phi, mask, truth_pv, truth_load, ratios)
    else:
        rates = _floats_list(args.rates)
        rows = sampling_rate_sweep(series, phi, mask, truth_pv, truth_load, rates, args.threshold_kw)
    if args.output:
        io.write_table_csv(args.output, rows)
    else:
        io.write_table_csv(sys.stdout, rows)
    return 0


def cmd_score(args) -> int:
    estimate = io.read_power_csv(args.estimate, allow_missing=True)
    truth = io.read_power_csv(args.truth, allow_missing=True)
    estimate, truth = align([estimate, truth])
    mask = None
    if args.proxy:
        phi = align([estimate, io.read_proxy_csv(args.proxy)])[1]
        mask = daytime_mask(phi, args.threshold_kw)
    else:
        mask = DaytimeMask(np.isfinite(estimate.active_kw) & np.isfinite(truth.active_kw))
    report = score(estimate, truth, args.capacity_kw, mask)
    print(format_report("estimate", report))
    if args.assert_rmse_below is not None and not report.rmse_kw < args.assert_rmse_below:
        print(f"FAIL: RMSE {report.rmse_kw:.3f} kW is not below {args.assert_rmse_below:g} kW", file=sys.stderr)
        return 1
    return 0


# --- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pvdisagg", description="Solar PV and masked load disaggregation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic feeder and write its series as CSV")
    p.add_argument("--scenario", help="scenario file (INI); overrides --study")
    p.add_argument("--study", choices=sorted(STUDIES), default="calibrated")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-free", action="store_true")
    p.add_argument("--phases", action="store_true", help="also write phases.csv (equal split)")
    p.add_argument("--save-scenario", help="write the scenario used to this INI file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="capacitor-bank switching detection and compensation")
    _add_inputs(p, proxy=False)
    p.add_argument("--threshold-kvar-per-phase", type=float, default=90.0)
    p.add_argument("--detection-step", type=int, default=1, help="detection step in seconds (default 1)")
    p.add_argument("--downsample-to", type=int, default=None, help="interval-average the output to this step")
    p.add_argument("--events", required=True, help="events CSV (timestamp,delta_kvar)")
    p.add_argument("--output", required=True, help="compensated power CSV")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("suggest-threshold", help="histogram of step-to-step |dQ| as CSV")
    _add_inputs(p, proxy=False)
    p.add_argument("--bins", type=int, default=50)
    p.set_defaults(func=cmd_suggest_threshold)

    p = sub.add_parser("fit", help="night load and day aggregate regressions")
    _add_inputs(p)
    p.add_argument("--out", help="directory for machine-readable fit CSVs")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("disaggregate", help="estimate load and PV")
    p.add_argument("--method", choices=["pfbe", "le", "csge"], required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--phase", default=None)
    p.add_argument("--proxy", help="irradiance proxy CSV (le, csge)")
    p.add_argument("--proxy-filter-seconds", type=int, default=300)
    p.add_argument("--centered-filter", action="store_true")
    p.add_argument("--threshold-kw", type=float, default=0.0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--truth-pv", help="ground-truth PV CSV for scoring")
    p.add_argument("--truth-load", help="ground-truth load CSV for scoring")
    p.add_argument("--capacity-kw", type=float, default=None)
    g = p.add_argument_group("pfbe")
    g.add_argument("--night-start", type=float, default=0.0, help="night window start hour (local)")
    g.add_argument("--night-end", type=float, default=5.0, help="night window end hour (local)")
    g.add_argument("--utc-offset", type=float, default=0.0, help="local time minus UTC, hours")
    g.add_argument("--pv-pf", type=float, default=-1.0, help="PV power factor (-1: active power only)")
    g.add_argument("--calibrate-at", help="timestamp of a known PV reading (load PF from one point)")
    g.add_argument("--calibrate-pv-kw", type=float, help="known PV active power at --calibrate-at")
    g = p.add_argument_group("le")
    g.add_argument("--holdout-from", help="fit only on samples before this timestamp")
    g = p.add_argument_group("csge")
    g.add_argument("--alpha", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--auto-weights", action="store_true", help="inverse-variance weights (the default)")
    p.set_defaults(func=cmd_disaggregate)

    p = sub.add_parser("sweep", help="CSGE sensitivity tables")
    p.add_argument("--kind", choices=["weights", "sampling"], required=True)
    _add_inputs(p)
    p.add_argument("--truth-pv", required=True)
    p.add_argument("--truth-load")
    p.add_argument("--ratios", help="comma-separated alpha/beta ratios (default 1e-4..1e4)")
    p.add_argument("--rates", default="1/15,1/10,1/5,1/2,1", help="samples per minute, comma-separated")
    p.add_argument("--output", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("score", help="RMSE/MAE of an estimate against ground truth")
    p.add_argument("--estimate", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--proxy", help="score only where this proxy is above --threshold-kw")
    p.add_argument("--threshold-kw", type=float, default=0.0)
    p.add_argument("--capacity-kw", type=float, default=None)
    p.add_argument("--assert-rmse-below", type=float, default=None, metavar="KW",
                   help="exit with status 1 unless RMSE is below this value")
    p.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "disaggregate" and args.method != "pfbe" and not args.proxy:
        build_parser().error("--proxy is required for le and csge")
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        try:
            return args.func(args)
        except (ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2


if __name__ == "__main__":
    sys.exit(main())
