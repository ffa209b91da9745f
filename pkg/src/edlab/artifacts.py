"""
--------------------------------------------------------------------------------
PURPOSE:     Persists RunArtifacts: summary.json plus one CSV per series.
             Every file is written to a hidden temp file, fsynced and then
             renamed over the target, so readers never see a partial file.

NUMBERS:     floats are written as format(v, ".16e"), which round-trips
             float64 exactly and keeps CSV bodies byte-stable across reruns.
--------------------------------------------------------------------------------
"""
import csv
import io
import json
import logging
import os
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from edlab.models import MOMENT_COLUMNS, UR_COLUMNS, RunArtifacts

logger = logging.getLogger(__name__)

ENSEMBLE_COLUMNS = ("t", "ks", "tv", "sample_mean", "sample_var")


def fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, ".16e")
    return str(value)


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buffer.getvalue()


def atomic_write(target: Path, text: str) -> Path:
    tmp_file = target.with_name(f".{target.name}.tmp")
    try:
        with open(tmp_file, "w", encoding="utf-8", newline="") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        tmp_file.replace(target)
    except OSError:
        if tmp_file.exists():
            tmp_file.unlink()
        raise
    return target


def _series_name(stem: str, arm: str, primary: bool) -> str:
    return f"{stem}.csv" if primary else f"{stem}_{arm}.csv"


def render_files(run: RunArtifacts) -> Dict[str, str]:
    """File name -> text, in write order."""
    files: Dict[str, str] = {}
    for index, (arm, bundle) in enumerate(run.series.items()):
        primary = index == 0
        files[_series_name("moments", arm, primary)] = _csv_text(
            ("t",) + MOMENT_COLUMNS, (m.row() for m in bundle.moments))
        files[_series_name("ur", arm, primary)] = _csv_text(
            ("t",) + UR_COLUMNS, (u.row() for u in bundle.ur))
        files[_series_name("energy", arm, primary)] = _csv_text(("t", "E"), bundle.energy)

    if run.ensemble:
        files["ensemble.csv"] = _csv_text(ENSEMBLE_COLUMNS, run.ensemble)

    if run.scan:
        header: List[str] = list(run.scan[0])
        files["scan.csv"] = _csv_text(header, ([row[k] for k in header] for row in run.scan))

    files["summary.json"] = json.dumps(run.to_dict(), indent=2) + "\n"
    return files


def write_artifacts(run: RunArtifacts, out_dir) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [atomic_write(out / name, text) for name, text in render_files(run).items()]
    logger.info(f"Wrote {len(paths)} artifact(s) to {out}")
    return paths
