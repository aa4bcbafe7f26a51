"""Command-line driver.

Subcommands: simulate, fit-white, fit-colored, infoflow, grid-scan, panels.
Settings come from one JSON config file plus flag overrides; flags win.
Exit codes: 0 success, 1 config/parse error, 2 fit failure on all gridpoints.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from .colored import fit_colored
from .errors import CsvParseError, FitFailureError, LimflowError
from .infoflow import classify_flows, info_flow_from_model, info_flow_liang
from .pipeline import (
    AnalysisConfig,
    apply_display_mask,
    export_correlation_panels,
    grid_scan,
    preprocess,
    run_pair_analysis,
    _lag_count,
)
from .simulate import SimSpec, simulate
from .timeseries import (
    TimeSeriesMatrix,
    lagged_correlation,
    read_series_csv,
    write_series_csv,
)
from .white import fit_white

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ALL_FAILED = 2


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise CsvParseError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise CsvParseError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise CsvParseError(f"{path}: config must be a JSON object")
    return raw


def _analysis_config(args) -> AnalysisConfig:
    cfg = AnalysisConfig.from_file(args.config) if args.config else AnalysisConfig()
    for flag, attr in [
        ("dt", "dt"),
        ("climatology_period", "climatology_period"),
        ("running_mean_width", "running_mean_width"),
        ("max_lag", "max_lag"),
        ("mask", "mask"),
        ("workers", "workers"),
        ("seed", "seed"),
    ]:
        val = getattr(args, flag, None)
        if val is not None:
            cfg = dataclasses.replace(cfg, **{attr: val})
    if getattr(args, "normalize", False):
        cfg = dataclasses.replace(cfg, normalize=True)
    if getattr(args, "window_l", None) is not None:
        cfg = dataclasses.replace(cfg, fit=dataclasses.replace(cfg.fit, window_l=args.window_l))
    return cfg


def _add_analysis_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--dt", type=float, help="sampling interval in months")
    p.add_argument("--window-l", dest="window_l", type=float, help="fit window length")
    p.add_argument("--climatology-period", type=int, help="seasonal period (0 disables)")
    p.add_argument("--running-mean-width", type=int, help="running-mean width (1 disables)")
    p.add_argument("--max-lag", type=float, help="lagged-correlation coverage")
    p.add_argument("--normalize", action="store_true", help="scale rows to unit variance")
    p.add_argument("--seed", type=int, help="base seed for optimizer restarts")


def _mat(x) -> list:
    return np.asarray(x, dtype=float).tolist()


def _load_series(path, cfg: AnalysisConfig) -> tuple[list[str], TimeSeriesMatrix]:
    names, _times, data = read_series_csv(path)
    return names, TimeSeriesMatrix(data, dt=cfg.dt)


def _write_json(payload: dict, out) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cmd_simulate(args) -> int:
    raw = _load_json(args.config)
    for key in ("tau", "dt", "steps", "seed", "burn_in"):
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    try:
        spec = SimSpec(**raw)
    except (TypeError, ValueError) as exc:
        raise CsvParseError(f"bad simulate config: {exc}") from None
    ts = simulate(spec, method=args.method)
    write_series_csv(args.out, ts)
    print(f"wrote {ts.n_vars} x {ts.n_samples} samples to {args.out}")
    return EXIT_OK


def _fit_payload(args, colored: bool) -> dict:
    cfg = _analysis_config(args)
    names, ts = _load_series(args.data, cfg)
    pp = preprocess(ts, cfg)
    K = lagged_correlation(pp, _lag_count(cfg))
    wm = fit_white(K, cfg.fit)
    payload = {
        "variables": names,
        "units": "nats/month",
        "config": cfg.to_dict(),
    }
    if colored:
        cm = fit_colored(K, cfg.fit, white_model=wm)
        flows = info_flow_from_model(cm.A, cm.C)
        payload.update(
            method="colored",
            A=_mat(cm.A),
            Qc=_mat(cm.Qc),
            B=_mat(cm.B),
            C=_mat(cm.C),
            tau=cm.tau,
            white_limit=cm.white_limit,
            fit_residual=cm.fit_residual,
            infoflow=_mat(flows.T),
        )
    else:
        flows = info_flow_from_model(wm.A, wm.C)
        payload.update(
            method="white",
            A=_mat(wm.A),
            Q=_mat(wm.Q),
            C=_mat(wm.C),
            fit_residual=wm.fit_residual,
            infoflow=_mat(flows.T),
        )
    payload["labels"] = classify_flows(flows).tolist()
    return payload


def _cmd_fit_white(args) -> int:
    _write_json(_fit_payload(args, colored=False), args.out)
    return EXIT_OK


def _cmd_fit_colored(args) -> int:
    _write_json(_fit_payload(args, colored=True), args.out)
    return EXIT_OK


def _cmd_infoflow(args) -> int:
    cfg = _analysis_config(args)
    names, ts = _load_series(args.data, cfg)
    pp = preprocess(ts, cfg)
    if args.method == "liang":
        flows = info_flow_liang(pp)
        extra = {}
    else:
        K = lagged_correlation(pp, _lag_count(cfg))
        wm = fit_white(K, cfg.fit)
        if args.method == "white":
            flows = info_flow_from_model(wm.A, wm.C)
            extra = {"A": _mat(wm.A)}
        else:
            cm = fit_colored(K, cfg.fit, white_model=wm)
            flows = info_flow_from_model(cm.A, cm.C)
            extra = {"A": _mat(cm.A), "tau": cm.tau, "white_limit": cm.white_limit}
    payload = {
        "variables": names,
        "method": args.method,
        "units": "nats/month",
        "T": _mat(flows.T),
        "labels": classify_flows(flows).tolist(),
        "config": cfg.to_dict(),
        **extra,
    }
    _write_json(payload, args.out)
    return EXIT_OK


def _cmd_grid_scan(args) -> int:
    cfg = _analysis_config(args)
    result = grid_scan(args.index, args.grid, cfg)
    result.write_csv(args.out, mask=cfg.mask)
    result.write_config(str(args.out) + ".config.json")
    if args.heatmap:
        for path in result.write_heatmaps(args.heatmap, mask=cfg.mask):
            print(f"wrote {path}")
    n_ok = sum(1 for r in result.records if r.status == "ok")
    print(f"wrote {args.out}: {n_ok}/{len(result.records)} gridpoints fitted")
    if result.records and n_ok == 0:
        print("error: every gridpoint failed", file=sys.stderr)
        return EXIT_ALL_FAILED
    return EXIT_OK


def _cmd_panels(args) -> int:
    cfg = _analysis_config(args)
    names, ts = _load_series(args.data, cfg)
    panels = export_correlation_panels(ts, cfg, out_path=args.out)
    print(
        f"wrote {args.out}: lags 0..{panels.lags[-1]:g}, "
        f"tau={panels.colored_model.tau:.3g}"
    )
    return EXIT_OK


def _cmd_pair(args) -> int:
    # convenience wrapper over run_pair_analysis for a two-column CSV
    cfg = _analysis_config(args)
    names, ts = _load_series(args.data, cfg)
    if ts.n_vars != 2:
        raise CsvParseError(f"{args.data}: pair analysis needs exactly 2 columns")
    rec = run_pair_analysis(ts.data[0], ts.data[1], cfg, cell_id=names[1])
    payload = {
        "cell_id": rec.cell_id,
        "status": rec.status,
        "reason": rec.reason,
        "units": "nats/month",
        "results": [
            {
                "method": r.method,
                "T_idx_to_cell": r.flow_index_to_cell,
                "T_cell_to_idx": r.flow_cell_to_index,
                "display_T_idx_to_cell": apply_display_mask(r.flow_index_to_cell, cfg.mask),
                "display_T_cell_to_idx": apply_display_mask(r.flow_cell_to_index, cfg.mask),
                "tau": r.tau,
                "residual": r.residual,
                "white_limit": r.white_limit,
            }
            for r in rec.results
        ],
    }
    _write_json(payload, args.out)
    return EXIT_OK if rec.status == "ok" else EXIT_ALL_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="limflow",
        description="Linear inverse modeling (white / OU-colored noise) and "
        "Liang-Kleeman information-flow causality",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a synthetic linear SDE to CSV")
    p.add_argument("--config", required=True, help="JSON with A, Q, tau, dt, steps, seed, burn_in")
    p.add_argument("--tau", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--method", choices=["exact", "euler"], default="exact")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit-white", help="fit the white-noise model to a series CSV")
    _add_analysis_flags(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="output JSON (stdout when omitted)")
    p.set_defaults(func=_cmd_fit_white)

    p = sub.add_parser("fit-colored", help="fit the colored-noise model to a series CSV")
    _add_analysis_flags(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="output JSON (stdout when omitted)")
    p.set_defaults(func=_cmd_fit_colored)

    p = sub.add_parser("infoflow", help="information flows from a series CSV")
    _add_analysis_flags(p)
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=["white", "colored", "liang"], default="liang")
    p.add_argument("--out", help="output JSON (stdout when omitted)")
    p.set_defaults(func=_cmd_infoflow)

    p = sub.add_parser("grid-scan", help="pairwise scan of an index against grid columns")
    _add_analysis_flags(p)
    p.add_argument("--index", required=True, help="CSV with the single index series")
    p.add_argument("--grid", required=True, help="CSV with one column per gridpoint")
    p.add_argument("--mask", type=float, help="display clip in nats/month (<= 0 disables)")
    p.add_argument("--workers", type=int, help="parallel gridpoint workers")
    p.add_argument("--heatmap", help="prefix for per-method SVG heatmaps")
    p.add_argument("--out", required=True, help="results CSV path")
    p.set_defaults(func=_cmd_grid_scan)

    p = sub.add_parser("panels", help="observed vs model correlation curves to CSV")
    _add_analysis_flags(p)
    p.add_argument("--data", required=True, help="two-column series CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_panels)

    p = sub.add_parser("pair", help="single pair analysis from a two-column CSV")
    _add_analysis_flags(p)
    p.add_argument("--data", required=True)
    p.add_argument("--mask", type=float)
    p.add_argument("--out", help="output JSON (stdout when omitted)")
    p.set_defaults(func=_cmd_pair)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FitFailureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALL_FAILED
    except (LimflowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
