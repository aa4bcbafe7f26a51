"""Pairwise analysis drivers: preprocessing, the index-vs-grid scan, and
plot-ready correlation-panel exports."""

from __future__ import annotations

import concurrent.futures
import csv
import json
import re
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .colored import ColoredModel, fit_colored
from .errors import CsvParseError, LimflowError
from .infoflow import info_flow_from_model, info_flow_liang, liang_dynamics
from .linalg import expm
from .timeseries import (
    LaggedCorrelation,
    TimeSeriesMatrix,
    lagged_correlation,
    read_series_csv,
    remove_climatology,
    running_mean,
)
from .white import FitConfig, OptimizerOptions, WhiteModel, fit_white

__all__ = [
    "AnalysisConfig",
    "MethodResult",
    "PairRecord",
    "GridScanResult",
    "CorrelationPanels",
    "preprocess",
    "apply_display_mask",
    "run_pair_analysis",
    "grid_scan",
    "correlation_panels",
    "export_correlation_panels",
]

RESULT_COLUMNS = [
    "cell_id",
    "lon",
    "lat",
    "method",
    "T_idx_to_cell",
    "T_cell_to_idx",
    "tau",
    "residual",
    "display_T_idx_to_cell",
    "display_T_cell_to_idx",
    "status",
]


@dataclass
class AnalysisConfig:
    """End-to-end settings for the pairwise analyses.

    Default values mirror the monthly-climate convention: 12-sample
    climatology, 3-sample running mean, a 4-month fit window, and display
    masking at +/-0.02 nats/month (mask <= 0 disables clipping).
    """

    dt: float = 1.0
    climatology_period: int = 12
    running_mean_width: int = 3
    normalize: bool = False
    max_lag: float = 6.0
    mask: float = 0.02
    fit: FitConfig = field(default_factory=FitConfig)
    workers: int = 1
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisConfig":
        d = dict(d)
        fit = d.pop("fit", {})
        if isinstance(fit, dict):
            fit = dict(fit)
            opt = fit.pop("optimizer", {})
            if isinstance(opt, dict):
                opt = OptimizerOptions(**opt)
            if fit.get("weights") is not None:
                fit["weights"] = np.asarray(fit["weights"], dtype=float)
            if fit.get("init_lags") is not None:
                fit["init_lags"] = tuple(fit["init_lags"])
            fit = FitConfig(optimizer=opt, **fit)
        return cls(fit=fit, **d)

    @classmethod
    def from_file(cls, path) -> "AnalysisConfig":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise CsvParseError(f"{path}: invalid JSON config: {exc}") from None
        if not isinstance(raw, dict):
            raise CsvParseError(f"{path}: config must be a JSON object")
        try:
            return cls.from_dict(raw)
        except TypeError as exc:
            raise CsvParseError(f"{path}: bad config field: {exc}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["fit"].get("weights") is not None:
            d["fit"]["weights"] = list(np.asarray(d["fit"]["weights"], dtype=float))
        if d["fit"].get("init_lags") is not None:
            d["fit"]["init_lags"] = list(d["fit"]["init_lags"])
        return d


@dataclass
class MethodResult:
    method: str  # 'white' | 'colored' | 'liang'
    flow_index_to_cell: float
    flow_cell_to_index: float
    tau: float | None = None
    residual: float | None = None
    white_limit: bool = False


@dataclass
class PairRecord:
    cell_id: str
    lon: float | None = None
    lat: float | None = None
    status: str = "ok"
    reason: str = ""
    results: list[MethodResult] = field(default_factory=list)

    def result(self, method: str) -> MethodResult:
        for r in self.results:
            if r.method == method:
                return r
        raise KeyError(method)


@dataclass
class GridScanResult:
    records: list[PairRecord]
    config: dict
    units: str = "nats/month"

    def write_csv(self, path, mask: float | None = None) -> None:
        mask = self.config.get("mask", 0.0) if mask is None else mask
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RESULT_COLUMNS)
            for rec in self.records:
                loc = [
                    "" if rec.lon is None else format(rec.lon, ".17g"),
                    "" if rec.lat is None else format(rec.lat, ".17g"),
                ]
                if not rec.results:
                    writer.writerow(
                        [rec.cell_id] + loc + ["", "", "", "", "", "", "", rec.status]
                    )
                for r in rec.results:
                    writer.writerow(
                        [rec.cell_id]
                        + loc
                        + [
                            r.method,
                            format(r.flow_index_to_cell, ".17g"),
                            format(r.flow_cell_to_index, ".17g"),
                            "" if r.tau is None else format(r.tau, ".17g"),
                            "" if r.residual is None else format(r.residual, ".17g"),
                            format(apply_display_mask(r.flow_index_to_cell, mask), ".17g"),
                            format(apply_display_mask(r.flow_cell_to_index, mask), ".17g"),
                            rec.status,
                        ]
                    )

    def write_config(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.config, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_heatmaps(self, prefix, mask: float | None = None) -> list[str]:
        """One SVG per method: display-masked flows on a fixed diverging scale."""
        import matplotlib

        matplotlib.use("svg", force=False)
        import matplotlib.pyplot as plt

        mask = self.config.get("mask", 0.0) if mask is None else mask
        span = mask if mask > 0 else max(
            (abs(r.flow_index_to_cell) for rec in self.records for r in rec.results),
            default=1.0,
        )
        written = []
        for method in ("white", "colored", "liang"):
            cells, rows = [], []
            for rec in self.records:
                if rec.status != "ok":
                    continue
                try:
                    r = rec.result(method)
                except KeyError:
                    continue
                cells.append(rec.cell_id)
                rows.append(
                    [
                        apply_display_mask(r.flow_index_to_cell, mask),
                        apply_display_mask(r.flow_cell_to_index, mask),
                    ]
                )
            if not rows:
                continue
            fig, ax = plt.subplots(figsize=(max(4, 0.5 * len(cells)), 2.4))
            im = ax.imshow(
                np.asarray(rows).T, cmap="RdBu_r", vmin=-span, vmax=span, aspect="auto"
            )
            ax.set_yticks([0, 1], ["index->cell", "cell->index"])
            ax.set_xticks(range(len(cells)), cells, rotation=45, ha="right", fontsize=7)
            ax.set_title(f"{method} information flow ({self.units})")
            fig.colorbar(im, ax=ax, shrink=0.85)
            out = f"{prefix}_{method}.svg"
            fig.savefig(out, bbox_inches="tight")
            plt.close(fig)
            written.append(out)
        return written


def apply_display_mask(value: float, mask: float) -> float:
    """Clip a display value to [-mask, mask]; mask <= 0 leaves it untouched."""
    if mask <= 0:
        return float(value)
    return float(min(max(value, -mask), mask))


def preprocess(ts: TimeSeriesMatrix, cfg: AnalysisConfig) -> TimeSeriesMatrix:
    """Climatology removal, running mean, demeaning, optional normalization."""
    out = ts
    if cfg.climatology_period > 0:
        out = remove_climatology(out, cfg.climatology_period)
    if cfg.running_mean_width > 1:
        out = running_mean(out, cfg.running_mean_width)
    out = out.demeaned()
    if cfg.normalize:
        out = out.normalized()
    return out


def _lag_count(cfg: AnalysisConfig) -> int:
    cover = max(cfg.fit.window_l, cfg.max_lag)
    return int(np.ceil(cover / cfg.dt - 1e-9))


def _flows(T: np.ndarray) -> tuple[float, float]:
    # state order (index, cell): T[i, j] is flow j -> i
    return float(T[1, 0]), float(T[0, 1])


def run_pair_analysis(
    index_series,
    cell_series,
    cfg: AnalysisConfig | None = None,
    cell_id: str = "cell",
) -> PairRecord:
    """Fit both models and the covariance-only estimator to one (index, cell) pair.

    Failures (too-short series, singular covariance, fit divergence) mark
    the record failed and never raise, so grid scans continue.
    """
    cfg = cfg if cfg is not None else AnalysisConfig()
    index_series = np.asarray(index_series, dtype=float).ravel()
    cell_series = np.asarray(cell_series, dtype=float).ravel()
    if index_series.shape != cell_series.shape:
        raise ValueError(
            f"series lengths differ: {index_series.shape} vs {cell_series.shape}"
        )
    lon, lat = _parse_lonlat(cell_id)
    rec = PairRecord(cell_id=cell_id, lon=lon, lat=lat)
    try:
        ts = TimeSeriesMatrix(np.vstack([index_series, cell_series]), dt=cfg.dt)
        pp = preprocess(ts, cfg)
        if pp.n_samples * pp.dt < 10.0 * cfg.fit.window_l:
            rec.status = "failed"
            rec.reason = (
                f"insufficient length: {pp.n_samples * pp.dt:g} time units "
                f"< 10 x window {cfg.fit.window_l:g}"
            )
            return rec
        K = lagged_correlation(pp, _lag_count(cfg))
        if np.linalg.cond(K.cov) > 1e10:
            rec.status = "failed"
            rec.reason = "covariance is singular or near-singular"
            return rec
        wm = fit_white(K, cfg.fit)
        cm = fit_colored(K, cfg.fit, white_model=wm)
        tw = info_flow_from_model(wm.A, wm.C)
        tc = info_flow_from_model(cm.A, cm.C)
        tl = info_flow_liang(pp)
        fi, fc = _flows(tw.T)
        rec.results.append(
            MethodResult("white", fi, fc, residual=wm.fit_residual)
        )
        fi, fc = _flows(tc.T)
        rec.results.append(
            MethodResult(
                "colored",
                fi,
                fc,
                tau=cm.tau,
                residual=cm.fit_residual,
                white_limit=cm.white_limit,
            )
        )
        fi, fc = _flows(tl.T)
        rec.results.append(MethodResult("liang", fi, fc))
    except (LimflowError, ValueError, np.linalg.LinAlgError, OverflowError) as exc:
        rec.status = "failed"
        rec.reason = str(exc)
        rec.results = []
    return rec


_LONLAT = re.compile(r"(-?\d+(?:\.\d+)?)[^\d.-]+(-?\d+(?:\.\d+)?)")


def _parse_lonlat(cell_id: str) -> tuple[float | None, float | None]:
    m = _LONLAT.search(cell_id)
    if m:
        return float(m.group(1)), float(m.group(2))
    return None, None


def _scan_one(args) -> PairRecord:
    idx, cell_id, index_series, cell_series, cfg = args
    cfg = replace(cfg, fit=replace(cfg.fit, seed=cfg.seed + idx))
    return run_pair_analysis(index_series, cell_series, cfg, cell_id=cell_id)


def grid_scan(index_csv, grid_csv, cfg: AnalysisConfig | None = None) -> GridScanResult:
    """Run the pair analysis for every gridpoint column against the index series.

    Gridpoints are independent work items; results are order-restored, and
    per-gridpoint seeds derive from the base seed so output is independent of
    worker count and processing order.
    """
    cfg = cfg if cfg is not None else AnalysisConfig()
    index_names, index_t, index_data = read_series_csv(index_csv)
    if index_data.shape[0] != 1:
        raise CsvParseError(
            f"{index_csv}: index file must have exactly one variable column, "
            f"got {index_data.shape[0]}"
        )
    cell_names, grid_t, grid_data = read_series_csv(grid_csv)
    if grid_data.shape[1] != index_data.shape[1]:
        raise CsvParseError(
            f"{grid_csv}: {grid_data.shape[1]} rows do not align with "
            f"{index_data.shape[1]} index rows"
        )
    tasks = [
        (i, cell_names[i], index_data[0], grid_data[i], cfg)
        for i in range(len(cell_names))
    ]
    if cfg.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_scan_one, tasks))
    else:
        records = [_scan_one(t) for t in tasks]
    config_echo = cfg.to_dict()
    config_echo["index_csv"] = str(index_csv)
    config_echo["grid_csv"] = str(grid_csv)
    config_echo["units"] = "nats/month"
    return GridScanResult(records=records, config=config_echo)


@dataclass
class CorrelationPanels:
    """Observed and model correlation curves on a common lag grid."""

    lags: np.ndarray
    observed: np.ndarray
    white: np.ndarray
    colored: np.ndarray
    liang: np.ndarray
    white_model: WhiteModel
    colored_model: ColoredModel
    liang_dynamics: np.ndarray

    def rms_error(self, curve: str, upto: float) -> float:
        """Entrywise RMS misfit of a model curve against the observed one
        over lags in [0, upto]."""
        sel = self.lags <= upto + 1e-12
        diff = getattr(self, curve)[sel] - self.observed[sel]
        return float(np.sqrt(np.mean(diff**2)))


def correlation_panels(ts: TimeSeriesMatrix, cfg: AnalysisConfig | None = None) -> CorrelationPanels:
    """Fit both models plus the forward-difference dynamics and evaluate all
    correlation curves on the observed lag grid."""
    cfg = cfg if cfg is not None else AnalysisConfig()
    pp = preprocess(ts, cfg)
    K = lagged_correlation(pp, _lag_count(cfg))
    wm = fit_white(K, cfg.fit)
    cm = fit_colored(K, cfg.fit, white_model=wm)
    AL = liang_dynamics(pp)
    white_mats = np.array([expm(wm.A, s) @ K.cov if s > 0 else K.cov for s in K.lags])
    from .colored import colored_correlation

    colored_mats = colored_correlation(cm.A, cm.tau, cm.Qc, K.cov, K.lags).mats
    liang_mats = np.array([expm(AL, s) @ K.cov if s > 0 else K.cov for s in K.lags])
    return CorrelationPanels(
        lags=K.lags.copy(),
        observed=K.mats.copy(),
        white=white_mats,
        colored=colored_mats,
        liang=liang_mats,
        white_model=wm,
        colored_model=cm,
        liang_dynamics=AL,
    )


def export_correlation_panels(
    ts: TimeSeriesMatrix, cfg: AnalysisConfig | None = None, out_path=None
) -> CorrelationPanels:
    """Compute the panels and, when out_path is given, write them as tidy CSV
    rows (curve, lag, row, col, value)."""
    panels = correlation_panels(ts, cfg)
    if out_path is not None:
        with open(out_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["curve", "lag", "row", "col", "value"])
            for curve in ("observed", "white", "colored", "liang"):
                mats = getattr(panels, curve)
                for k, s in enumerate(panels.lags):
                    for i in range(mats.shape[1]):
                        for j in range(mats.shape[2]):
                            writer.writerow(
                                [curve, format(s, ".17g"), i, j, format(mats[k, i, j], ".17g")]
                            )
    return panels
