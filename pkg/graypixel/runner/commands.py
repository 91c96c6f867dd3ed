"""
Batch commands behind the CLI.

Each ``cmd_*`` function takes a validated RunConfig, does its work through a
BatchRunner, writes its report (to ``config.out`` or stdout) and returns the
records it produced.
"""
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from graypixel.errors import ConfigError
from graypixel.models import (
    ClusterKind,
    EvalStats,
    EvaluationReport,
    ImageRecord,
    ManifestEntry,
    MsgpParams,
    ReportFormat,
    RunConfig,
    SweepRow,
)
from graypixel.runner.batch_runner import IMAGE_ERRORS, BatchRunner
from graypixel.services.estimator import correct_image, detect_gray_pixels, estimate, estimate_from_pixels
from graypixel.services.image_io import load_manifest, save_png16, write_manifest, write_pfm
from graypixel.services.metrics import angular_error, summarize, summarize_by_group
from graypixel.services.synth import bundled_specs, generate_scene

logger = logging.getLogger(__name__)

REPORT_SCHEMA = 1
STATS_COLUMNS = ["mean", "median", "trimean", "best25", "worst25", "count"]


# ---------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------
def entries_for(config: RunConfig) -> List[ManifestEntry]:
    """Manifest entries, or bare entries for positional input paths."""
    entries: List[ManifestEntry] = []
    if config.manifest is not None:
        entries.extend(load_manifest(config.manifest).entries)
    entries.extend(ManifestEntry(image_path=Path(p)) for p in config.inputs)
    return entries


def prepare_out_dir(path: Optional[Path]) -> Path:
    """Create the output directory when its parent exists."""
    if path is None:
        raise ConfigError("--out is required for this command")
    path = Path(path)
    if path.is_dir():
        return path
    if path.exists():
        raise ConfigError(f"output path exists and is not a directory: {path}")
    if not path.parent.is_dir():
        raise ConfigError(f"cannot create output directory {path}: parent does not exist")
    path.mkdir()
    logger.info(f"Created output directory {path}")
    return path


def _require_ground_truth(entries: Sequence[ManifestEntry]) -> None:
    for index, entry in enumerate(entries):
        if entry.ground_truth is None:
            raise ConfigError(f"entry {index + 1} ({entry.image_path}) has no ground-truth illuminant")


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def _csv_text(header: List[str], rows: List[List[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buffer.getvalue()


def _json_text(payload: Dict[str, Any]) -> str:
    return json.dumps({"schema": REPORT_SCHEMA, **payload}, indent=2, sort_keys=True) + "\n"


def emit(text: str, config: RunConfig, filename: str) -> None:
    """Write a report into the output directory, or to stdout without one."""
    if config.out is None:
        sys.stdout.write(text)
        return
    target = prepare_out_dir(config.out) / filename
    target.write_text(text, encoding="utf-8")
    logger.info(f"Wrote {target}")


def _record_dict(record: ImageRecord, timings: bool) -> Dict[str, Any]:
    data = record.model_dump(mode="json")
    if not timings:
        data.pop("runtime_ms", None)
    return data


def records_text(records: Sequence[ImageRecord], config: RunConfig) -> str:
    if config.format is ReportFormat.JSON:
        return _json_text({
            "command": config.command.value,
            "method": config.method,
            "records": [_record_dict(r, config.timings) for r in records],
        })
    header = ["path", "status", "method", "L_r", "L_g", "L_b", "gt_r", "gt_g", "gt_b",
              "angular_error", "selected_pixels", "modes", "densest_density"]
    if config.timings:
        header.append("runtime_ms")
    header += ["camera", "error"]
    rows = []
    for r in records:
        L = r.illuminant or (None, None, None)
        gt = r.ground_truth or (None, None, None)
        row = [r.path, r.status, r.method, *L, *gt, r.angular_error, r.selected_pixels, r.modes, r.densest_density]
        if config.timings:
            row.append(r.runtime_ms)
        row += [r.camera, r.error]
        rows.append(row)
    return _csv_text(header, rows)


def _stats_row(label: str, stats: EvalStats) -> List[Any]:
    return [label, *(getattr(stats, c) for c in STATS_COLUMNS)]


def _log_failures(records: Sequence[ImageRecord]) -> None:
    failed = [r for r in records if r.status == "failed"]
    if failed:
        logger.error(f"{len(failed)} of {len(records)} images failed")


# ---------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------
def cmd_estimate(config: RunConfig) -> List[ImageRecord]:
    """Estimate the illuminant of every input image."""
    entries = entries_for(config)
    if config.save_gray_map:
        prepare_out_dir(config.out)
    records = BatchRunner(config).run(entries)
    emit(records_text(records, config), config, f"estimate.{config.format.value}")
    _log_failures(records)
    return records


def cmd_evaluate(config: RunConfig) -> EvaluationReport:
    """Angular error of every image against its ground truth, summarized."""
    entries = entries_for(config)
    _require_ground_truth(entries)
    if config.save_gray_map:
        prepare_out_dir(config.out)
    records = BatchRunner(config).run(entries)

    ok = [r for r in records if r.status == "ok"]
    report = EvaluationReport(records=records)
    if ok:
        report.summary = summarize([r.angular_error for r in ok])
        if config.group_by_camera:
            report.groups = summarize_by_group(
                [r.angular_error for r in ok],
                [r.camera or "unknown" for r in ok],
            )
        logger.info(
            f"{config.method}: mean {report.summary.mean:.3f}, median {report.summary.median:.3f} "
            f"over {report.summary.count} images"
        )

    if config.format is ReportFormat.JSON:
        emit(_json_text({
            "command": config.command.value,
            "method": config.method,
            "records": [_record_dict(r, config.timings) for r in records],
            "summary": report.summary.model_dump() if report.summary else None,
            "groups": {k: v.model_dump() for k, v in report.groups.items()},
        }), config, "evaluate.json")
    else:
        emit(records_text(records, config), config, "evaluate.csv")
        rows = []
        if report.summary is not None:
            rows.append(_stats_row(config.method, report.summary))
        rows += [_stats_row(f"{config.method}:{camera}", stats) for camera, stats in report.groups.items()]
        emit(_csv_text(["method", *STATS_COLUMNS], rows), config, "evaluate_summary.csv")
    _log_failures(records)
    return report


def sweep_points(config: RunConfig) -> List[SweepRow]:
    """
    Grid points in report order: mean-shift rows, then one k-means row per k.

    Without --grid-k, a k-means base run sweeps only its own k unless a
    mean-shift axis is given.
    """
    grid, params = config.grid, config.params
    kmeans_base = params.cluster is ClusterKind.KMEANS
    ks = grid.ks or ([params.k] if kmeans_base else [])
    with_meanshift = not kmeans_base or bool(grid.bandwidths or grid.distances)
    n_percents = grid.n_percents or [params.n_percent]
    distances = grid.distances or [params.distance]
    bandwidths = grid.bandwidths or [params.bandwidth]
    rows = []
    for n_percent in n_percents:
        for distance in distances if with_meanshift else []:
            for h in bandwidths:
                rows.append(SweepRow(
                    label=f"MS {distance.value} h={h:g} N={n_percent:g}%",
                    cluster=ClusterKind.MEANSHIFT,
                    distance=distance,
                    bandwidth=h,
                    n_percent=n_percent,
                ))
        for k in ks:
            rows.append(SweepRow(label=f"K={k} N={n_percent:g}%", cluster=ClusterKind.KMEANS, k=k, n_percent=n_percent))
    return rows


def _row_params(base: MsgpParams, row: SweepRow) -> MsgpParams:
    update: Dict[str, Any] = {"n_percent": row.n_percent, "cluster": row.cluster}
    if row.cluster is ClusterKind.MEANSHIFT:
        update.update(distance=row.distance, bandwidth=row.bandwidth)
    else:
        update["k"] = row.k
    return MsgpParams(**{**base.model_dump(), **update})


def cmd_sweep(config: RunConfig) -> List[SweepRow]:
    """One summary row per grid point over the same image set."""
    entries = entries_for(config)
    _require_ground_truth(entries)
    rows = sweep_points(config)
    row_params = [_row_params(config.params, row) for row in rows]
    runner = BatchRunner(config)

    def _sweep_image(entry: ManifestEntry) -> List[Optional[float]]:
        try:
            img = runner.load(entry)
        except IMAGE_ERRORS as e:
            logger.error(f"Failed on {entry.image_path}: {e}")
            return [None] * len(rows)
        # S depends only on N, so detect once per distinct N
        detected: Dict[float, Any] = {}
        errors: List[Optional[float]] = []
        for params in row_params:
            if params.n_percent not in detected:
                try:
                    detected[params.n_percent] = detect_gray_pixels(img, params)
                except IMAGE_ERRORS as e:
                    logger.error(f"Failed on {entry.image_path} at N={params.n_percent}%: {e}")
                    detected[params.n_percent] = None
            pixels = detected[params.n_percent]
            if pixels is None:
                errors.append(None)
                continue
            try:
                result = estimate_from_pixels(pixels, params)
                errors.append(angular_error(result.L, entry.ground_truth))
            except IMAGE_ERRORS as e:
                logger.error(f"Failed on {entry.image_path} ({params.cluster.value}): {e}")
                errors.append(None)
        return errors

    per_image = runner.map(_sweep_image, entries)
    for index, row in enumerate(rows):
        values = [errs[index] for errs in per_image if errs[index] is not None]
        row.failed = len(per_image) - len(values)
        row.stats = summarize(values) if values else None
        if row.stats is not None:
            logger.info(f"{row.label}: mean {row.stats.mean:.3f}, median {row.stats.median:.3f}")

    if config.format is ReportFormat.JSON:
        text = _json_text({"command": "sweep", "rows": [r.model_dump(mode="json") for r in rows]})
    else:
        header = ["label", "cluster", "distance", "bandwidth", "k", "n_percent", *STATS_COLUMNS, "failed"]
        body = []
        for r in rows:
            stats = [getattr(r.stats, c) for c in STATS_COLUMNS] if r.stats else [None] * len(STATS_COLUMNS)
            body.append([r.label, r.cluster, r.distance, r.bandwidth, r.k, r.n_percent, *stats, r.failed])
        text = _csv_text(header, body)
    emit(text, config, f"sweep.{config.format.value}")
    return rows


def cmd_correct(config: RunConfig) -> List[ImageRecord]:
    """Write a von Kries corrected 16-bit PNG and a JSON sidecar per image."""
    out = prepare_out_dir(config.out)
    entries = entries_for(config)
    runner = BatchRunner(config)

    def _correct(entry: ManifestEntry) -> ImageRecord:
        record = ImageRecord(path=str(entry.image_path), method=config.method, ground_truth=entry.ground_truth)
        try:
            img = runner.load(entry)
            if config.illuminant is not None:
                source = "explicit"
                norm = math.sqrt(sum(c * c for c in config.illuminant))
                L = tuple(c / norm for c in config.illuminant)
            elif config.use_ground_truth:
                if entry.ground_truth is None:
                    raise ConfigError("no ground-truth illuminant for this entry")
                source = "ground-truth"
                L = entry.ground_truth
            else:
                source = config.method
                L = estimate(config.method, img, config.params, config.baseline).L
            corrected = correct_image(img, L)
            stem = entry.image_path.stem
            save_png16(out / f"{stem}_corrected.png", corrected.data)
            sidecar = {"schema": REPORT_SCHEMA, "image": str(entry.image_path), "illuminant": list(L), "source": source}
            (out / f"{stem}_corrected.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        except IMAGE_ERRORS as e:
            logger.error(f"Failed on {entry.image_path}: {e}")
            record.status = "failed"
            record.error = f"{type(e).__name__}: {e}"
            return record
        record.illuminant = tuple(float(c) for c in L)
        logger.info(f"Corrected {entry.image_path.name} with {source} illuminant")
        return record

    records = runner.map(_correct, entries)
    emit(records_text(records, config), config, f"correct.{config.format.value}")
    _log_failures(records)
    return records


def cmd_synth(config: RunConfig) -> List[ManifestEntry]:
    """Write seeded synthetic scenes as PFM files plus a manifest with their exact illuminants."""
    out = prepare_out_dir(config.out)
    specs = bundled_specs(config.count, config.seed, config.preset, config.gray_fraction, config.illuminant)
    entries = []
    for spec in specs:
        scene = generate_scene(spec)
        path = out / f"scene_{spec.seed:04d}.pfm"
        write_pfm(path, scene.I.data)
        entries.append(ManifestEntry(image_path=path, ground_truth=scene.L))
    write_manifest(out / "manifest.csv", entries)
    logger.info(f"Wrote {len(entries)} {config.preset} scenes to {out}")
    return entries


COMMANDS = {
    "estimate": cmd_estimate,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "correct": cmd_correct,
    "synth": cmd_synth,
}


def has_failures(result: Any) -> bool:
    """True when any image in a command's result failed."""
    if isinstance(result, EvaluationReport):
        return any(r.status == "failed" for r in result.records)
    if isinstance(result, list) and result and isinstance(result[0], ImageRecord):
        return any(r.status == "failed" for r in result)
    if isinstance(result, list) and result and isinstance(result[0], SweepRow):
        return any(r.failed for r in result)
    return False

