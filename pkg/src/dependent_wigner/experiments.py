"""Experiment orchestration: configs, reproducible runs and report files.

Every file written here starts with a header line naming the tool version
and a hash of the configuration that produced it (``#`` comment for CSV, a
``"provenance"`` record for JSON).
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .cumulants import CumulantSpec, theorem_condition_report
from .ensembles import (
    GUE,
    CommonNoise,
    EnsembleSpec,
    InvariantPotential,
    WignerIID,
    cumulant_spec_of,
    ensemble_from_dict,
    ensemble_to_dict,
    sample_batch,
)
from .errors import InvalidSpec
from .flow import Truncation, green_series, run_flow as _iterate_flow, verify_bound_propagation
from .graphs import enumerate_graphs
from .spectral import (
    SemicircleLaw,
    green_series_closed,
    histogram_table,
    ks_distance,
    moment_table,
    spectral_sample,
)

log = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "DEPENDENT_WIGNER_OUTPUT_DIR"


@dataclass
class ExperimentConfig:
    ensemble: EnsembleSpec
    N_grid: list
    samples_per_N: int = 10
    moments: list = field(default_factory=lambda: [2, 4, 6])
    seed: int = 0
    output_dir: str = "results"
    report_formats: tuple = ("csv", "json")
    bins: int = 61

    def __post_init__(self):
        self.N_grid = [int(n) for n in self.N_grid]
        self.moments = [int(k) for k in self.moments]
        if not self.N_grid or self.N_grid != sorted(set(self.N_grid)) or self.N_grid[0] < 1:
            raise InvalidSpec("N_grid must be a nonempty strictly ascending list of positive sizes")
        if self.samples_per_N < 1:
            raise InvalidSpec("samples_per_N must be >= 1")
        if not self.moments or min(self.moments) < 1:
            raise InvalidSpec("moments must be a nonempty list of k >= 1")
        bad = set(self.report_formats) - {"csv", "json"}
        if bad:
            raise InvalidSpec(f"unknown report formats {sorted(bad)}")
        if self.bins < 1:
            raise InvalidSpec("bins must be >= 1")

    def to_dict(self) -> dict:
        return {
            "ensemble": ensemble_to_dict(self.ensemble),
            "N_grid": list(self.N_grid),
            "samples_per_N": self.samples_per_N,
            "moments": list(self.moments),
            "seed": self.seed,
            "output_dir": str(self.output_dir),
            "report_formats": list(self.report_formats),
            "bins": self.bins,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            ens = ensemble_from_dict(data["ensemble"])
            return cls(
                ens,
                list(data["N_grid"]),
                int(data.get("samples_per_N", 10)),
                list(data.get("moments", [2, 4, 6])),
                int(data.get("seed", 0)),
                data.get("output_dir", "results"),
                tuple(data.get("report_formats", ("csv", "json"))),
                int(data.get("bins", 61)),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidSpec(f"malformed config: {exc}") from exc

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidSpec(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def config_hash(self) -> str:
        # output_dir does not change results, so it is left out
        data = self.to_dict()
        data.pop("output_dir")
        return content_hash(data)


def content_hash(data) -> str:
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def header(config_hash: str) -> str:
    return f"dependent-wigner {__version__} config {config_hash}"


def output_dir(default) -> Path:
    path = Path(os.environ.get(OUTPUT_DIR_ENV) or default)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(path: Path, columns, rows, config_hash: str) -> Path:
    buf = io.StringIO()
    buf.write(f"# {header(config_hash)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(x) for x in row])
    path.write_text(buf.getvalue())
    return path


def write_json(path: Path, payload: dict, config_hash: str) -> Path:
    out = {"provenance": {"tool": "dependent-wigner", "version": __version__, "config_hash": config_hash}}
    out.update(payload)
    path.write_text(json.dumps(out, indent=1, sort_keys=True, default=_cell) + "\n")
    return path


def _cell(x):
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, complex):
        return repr(x)
    return x


def reference_alpha(ens: EnsembleSpec) -> float:
    """Semicircle radius / 2 expected for the Gaussian part of ``ens``."""
    if isinstance(ens, (GUE, CommonNoise)):
        return float(ens.alpha)
    if isinstance(ens, WignerIID):
        return ens.alpha
    if isinstance(ens, InvariantPotential):
        return 1.0
    raise InvalidSpec(f"unknown ensemble {ens!r}")


def run_convergence(config: ExperimentConfig, workers: int = 1) -> dict:
    """Sample each ``N``, compare spectra and moments with the semicircle.

    Writes ``moments.csv``, ``histogram.csv`` and ``summary.json`` (subject
    to ``report_formats``) and returns the summary dictionary.
    """
    out = output_dir(config.output_dir)
    h = config.config_hash()
    alpha = reference_alpha(config.ensemble)
    law = SemicircleLaw(alpha)
    moment_rows, hist_rows = [], []
    summary: dict = {"config": config.to_dict(), "results": {}}
    for N in config.N_grid:
        mats = sample_batch(config.ensemble, N, config.samples_per_N, config.seed, workers)
        spec_sample = spectral_sample(mats, config.moments)
        entry: dict = {"ks_distance": ks_distance(spec_sample, law), "moments": {}}
        for k, est, se, ref, z in moment_table(spec_sample, alpha):
            moment_rows.append((N, k, est, se, ref, z))
            entry["moments"][str(k)] = {"estimate": est, "stderr": se, "semicircle": ref, "z_score": z}
        for row in histogram_table(spec_sample, alpha, config.bins):
            hist_rows.append((N,) + row)
        summary["results"][str(N)] = entry
        log.info("N=%d done: KS %.4f", N, entry["ks_distance"])
    if "csv" in config.report_formats:
        write_csv(out / "moments.csv", ["N", "k", "estimate", "stderr", "semicircle", "z_score"],
                  moment_rows, h)
        write_csv(out / "histogram.csv",
                  ["N", "bin_left", "bin_right", "count", "empirical_density", "semicircle_density"],
                  hist_rows, h)
    if "json" in config.report_formats:
        write_json(out / "summary.json", summary, h)
    return summary


def load_cumulant_spec(path) -> CumulantSpec:
    """A cumulant spec file, or an ensemble description (``"kind"`` key)."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidSpec(f"cannot read spec {path}: {exc}") from exc
    if "ensemble" in data:
        data = data["ensemble"]
    if "kind" in data:
        return cumulant_spec_of(ensemble_from_dict(data), int(data.get("max_order", 4)))
    return CumulantSpec.from_dict(data)


def run_condition_check(spec: CumulantSpec, max_vertices: int, max_edges: int, N_grid,
                        out_dir=".", tag: str = "condition_report"):
    graphs = enumerate_graphs(max_vertices=max_vertices, max_edges=max_edges)
    report = theorem_condition_report(spec, graphs, list(N_grid))
    h = content_hash({"spec": spec.to_dict(), "limits": [max_vertices, max_edges], "N": list(N_grid)})
    write_json(output_dir(out_dir) / f"{tag}.json", report.to_dict(), h)
    return report


def run_flow(spec: CumulantSpec, orders: int, truncation: tuple[int, int] | None = None,
             out_dir=".", tag: str = "flow"):
    """Green series through ``1/z^orders`` plus the bound-propagation ledger.

    With an explicit ``(max_vertices, max_edges)`` nothing is pruned, so the
    ledger covers every graph within the limits; otherwise the smallest
    truncation that reaches ``1/z^orders`` is used.
    """
    if truncation is None:
        tr = Truncation.for_green_series(orders)
    else:
        tr = Truncation(max(orders - 2, 0), truncation[0], truncation[1])
    state = _iterate_flow(spec, tr)
    series = green_series(state, orders)
    closed = green_series_closed(orders, float(spec.gaussian_alpha)) if spec.gaussian_alpha else None
    report = verify_bound_propagation(state, raise_on_violation=False)
    h = content_hash({"spec": spec.to_dict(), "orders": orders, "truncation": [tr.max_t, tr.max_vertices, tr.max_edges]})
    out = output_dir(out_dir)
    rows = []
    for p, c in series:
        ref = closed[p - 1].real if closed is not None else (1.0 if p == 1 else 0.0)
        rows.append((p, c, float(c.real) if isinstance(c, complex) else float(c), ref))
    write_csv(out / f"{tag}_series.csv", ["power", "coefficient", "numeric", "gaussian_closed_form"], rows, h)
    ledger = report.to_dict()
    ledger["truncation"] = {"max_t": tr.max_t, "max_vertices": tr.max_vertices, "max_edges": tr.max_edges}
    ledger["dropped_by_truncation"] = state.dropped
    write_json(out / f"{tag}_ledger.json", ledger, h)
    return series, report
