"""Convert result CSVs into whitespace-separated columns for external plotting."""

from __future__ import annotations

import csv
import math
from pathlib import Path


def _read(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def _write(path: Path, rows, comment: str | None = None) -> Path:
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for row in rows:
            fh.write(" ".join(f"{v:.16e}" if isinstance(v, float) else str(v) for v in row) + "\n")
    return path


def emit_plot_data(directory) -> list[Path]:
    """Write ``*.dat`` companions for every recognised result file in ``directory``."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"no result directory {directory}")
    written = []
    for path in sorted(directory.glob("density_*.csv")):
        rows = sorted((float(r["x"]), float(r["density"])) for r in _read(path))
        written.append(_write(path.with_suffix(".dat"), rows, "x density"))
    spectrum = directory / "spectrum.csv"
    if spectrum.exists():
        by_source: dict[str, list] = {}
        for r in _read(spectrum):
            kind = "oracle" if r["provenance"] == "mean_oracle" else "empirical"
            by_source.setdefault(kind, []).append(
                (float(r["xi"]), math.hypot(float(r["re"]), float(r["im"]))))
        for kind, rows in by_source.items():
            written.append(_write(directory / f"spectrum_{kind}.dat", sorted(rows), "xi modulus"))
    moments = directory / "moments.csv"
    if moments.exists():
        rows = [(math.log(float(r["separation"])), math.log(float(r["moment"])))
                for r in _read(moments) if float(r["separation"]) > 0 and float(r["moment"]) > 0]
        fit = _read(directory / "moments_fit.csv")[0] if (directory / "moments_fit.csv").exists() else None
        comment = "log_separation log_moment"
        if fit:
            comment += f" | fit alpha={fit['alpha']} intercept={fit['intercept']}"
        written.append(_write(directory / "moments.dat", rows, comment))
    for name in ("interior", "controls_small_dimension"):
        path = directory / f"{name}.csv"
        if path.exists():
            rows = [(int(r["trial"]), int(r["depth"]), float(r["lebesgue_bound"])) for r in _read(path)]
            written.append(_write(directory / f"{name}.dat", rows, "trial depth lebesgue_bound"))
    path = directory / "hoelder.csv"
    if path.exists():
        rows = [(int(r["trial"]), float(r["exponent"])) for r in _read(path) if r["method"] == "ball"]
        written.append(_write(directory / "hoelder.dat", rows, "trial exponent"))
    if not written:
        raise FileNotFoundError(f"no result files found in {directory}")
    return written
