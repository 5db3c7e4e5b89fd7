"""File formats: catalogs, spectra, CSV/JSON outputs, run manifests and SVG."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import CardinalitySpectrum
from .errors import DataError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
OUTPUT_ENV = "RANKDIST_OUTPUT_DIR"

__all__ = [
    "CatalogRecord",
    "RunManifest",
    "read_catalog",
    "ingest_catalog",
    "write_catalog",
    "read_spectrum",
    "format_float",
    "write_csv",
    "read_csv",
    "write_json",
    "write_svg",
    "file_digest",
    "default_output_dir",
]


@dataclass(frozen=True)
class CatalogRecord:
    """A sign and its cardinality, e.g. a car trim and its list price."""

    label: str
    cardinality: float

    def __post_init__(self):
        if not self.label:
            raise DataError("label must be non-empty")
        if not (math.isfinite(self.cardinality) and self.cardinality > 0):
            raise DataError("cardinality must be a positive finite number")


def _parse_price(text):
    try:
        value = float(text)
    except ValueError:
        return None
    return value


def read_catalog(path, fmt: str = "auto"):
    """Parse a catalog file; returns ``(records, rejects)``.

    ``rejects`` lists ``(line_number, reason)`` for every row that was
    skipped.  ``fmt`` is ``"csv"`` (header ``label,price``), ``"headerless"``
    (two columns) or ``"auto"``.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read catalog {path}: {exc}") from exc
    rows = list(csv.reader(text.splitlines()))
    records, rejects = [], []
    start = 0
    if rows and fmt in ("auto", "csv"):
        head = [c.strip().lower() for c in rows[0]]
        if head[:2] == ["label", "price"]:
            start = 1
        elif fmt == "csv":
            raise DataError(f"{path}: expected header 'label,price', got {rows[0]!r}")
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            rejects.append((lineno, f"expected 2 columns, got {len(row)}"))
            continue
        label, raw = row[0].strip(), row[1].strip()
        price = _parse_price(raw)
        if not label:
            rejects.append((lineno, "empty label"))
        elif price is None:
            rejects.append((lineno, f"non-numeric price {raw!r}"))
        elif not (math.isfinite(price) and price > 0):
            rejects.append((lineno, f"non-positive price {raw!r}"))
        else:
            records.append(CatalogRecord(label, price))
    return records, rejects


def ingest_catalog(path, fmt: str = "auto") -> list:
    """Catalog records from ``path``; rejected rows are logged with line numbers."""
    records, rejects = read_catalog(path, fmt)
    for lineno, reason in rejects:
        logger.warning("%s:%d: row rejected (%s)", path, lineno, reason)
    if not records:
        raise DataError(f"{path}: no valid rows")
    return records


def write_catalog(path, labels, prices):
    return write_csv(path, ["label", "price"], zip(labels, prices))


def read_spectrum(path) -> CardinalitySpectrum:
    """Spectrum from a JSON array or a file with one value per line."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read spectrum {path}: {exc}") from exc
    stripped = text.strip()
    try:
        if stripped.startswith("["):
            values = [float(v) for v in json.loads(stripped)]
        else:
            values = [float(line) for line in stripped.splitlines() if line.strip()]
    except (ValueError, TypeError) as exc:
        raise DataError(f"{path}: malformed spectrum ({exc})") from exc
    if not values:
        raise DataError(f"{path}: empty spectrum")
    try:
        return CardinalitySpectrum(values)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def format_float(x) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(x), ".17g")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_csv(path):
    """``(header, rows)`` with numeric cells converted to float."""
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for row in reader:
            out = []
            for cell in row:
                try:
                    out.append(float(cell))
                except ValueError:
                    out.append(cell)
            rows.append(out)
    return header, rows


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path, payload: dict, versioned: bool = True):
    body = dict(payload)
    if versioned:
        body = {"schema_version": SCHEMA_VERSION, **body}
    path = Path(path)
    path.write_text(json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def file_digest(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Everything needed to reproduce one CLI run's outputs."""

    subcommand: str
    parameters: dict
    seed: int = None
    input_digest: str = None
    tool_version: str = __version__
    outputs: dict = field(default_factory=dict)

    def record_output(self, path):
        path = Path(path)
        self.outputs[path.name] = file_digest(path)

    def write(self, path):
        return write_json(path, asdict(self))


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "."))


def write_svg(path, series, title="", xlabel="", ylabel="", width=640, height=420):
    """Minimal static line chart; ``series`` maps a name to ``(x, y)`` arrays."""
    pad = 50
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle">{title}</text>',
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle">{xlabel}</text>',
        f'<text x="15" y="{height / 2}" transform="rotate(-90 15 {height / 2})" '
        f'text-anchor="middle">{ylabel}</text>',
    ]
    for k, (name, (x, y)) in enumerate(series.items()):
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        color = colors[k % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        parts.append(f'<text x="{width - pad}" y="{pad + 15 * k}" fill="{color}" '
                     f'text-anchor="end">{name}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path
