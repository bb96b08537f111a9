import csv
import io
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np
import yaml

try:
    from .config import OUTPUT_DEFAULTS
    from .errors import ConfigError
    from .models import SimConfig
except ImportError:
    from config import OUTPUT_DEFAULTS
    from errors import ConfigError
    from models import SimConfig


def write_text_atomic(path, text: str) -> Path:
    """Write ``text`` to a temp file next to ``path`` and move it into place."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def format_float(value: float, digits: int = OUTPUT_DEFAULTS["csv_digits"]) -> str:
    return f"{float(value):.{digits}g}"


def write_csv(path, header: Sequence[str], columns: Sequence[Sequence[float]], digits: int = OUTPUT_DEFAULTS["csv_digits"]) -> Path:
    """Column-oriented CSV with a header row and LF line endings."""

    lengths = {len(column) for column in columns}
    if len(header) != len(columns) or len(lengths) > 1:
        raise ValueError(f"header has {len(header)} names for {len(columns)} columns of lengths {sorted(lengths)}")
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in zip(*columns):
        writer.writerow([format_float(v, digits) for v in row])
    return write_text_atomic(path, buffer.getvalue())


def write_heatmap_csv(path, theta, phi, values, digits: int = OUTPUT_DEFAULTS["csv_digits"]) -> Path:
    """Matrix CSV: first row holds phi values, first column theta values.

    The corner cell carries the column count, as gnuplot's nonuniform matrix
    format expects.
    """

    values = np.asarray(values)
    if values.shape != (len(theta), len(phi)):
        raise ValueError(f"heatmap of shape {values.shape} does not match {len(theta)} x {len(phi)} axes")
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([str(len(phi)), *(format_float(p, digits) for p in phi)])
    for th, row in zip(theta, values):
        writer.writerow([format_float(th, digits), *(format_float(v, digits) for v in row)])
    return write_text_atomic(path, buffer.getvalue())


def read_csv_columns(path) -> dict[str, list[float]]:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return {name: [row[i] for row in rows] for i, name in enumerate(header)}


def _json_default(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_json(path, payload: Mapping[str, Any]) -> Path:
    return write_text_atomic(path, json.dumps(payload, indent=2, default=_json_default) + "\n")


def append_event_log(log_path, stage, message, metadata=None):
    """
    Append a JSON line describing one stage of a run for later auditing.
    """
    entry = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "stage": stage,
        "message": message,
        "metadata": metadata or {},
    }
    path = Path(log_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as handle:
        handle.write(json.dumps(entry, default=_json_default) + "\n")


def config_to_yaml(config: SimConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=False, default_flow_style=None)


def save_config(config: SimConfig, path) -> Path:
    return write_text_atomic(path, config_to_yaml(config))


def load_config(path) -> SimConfig:
    """Parse and validate a YAML experiment description.

    Raises ConfigError listing every violation; OSError for unreadable files.
    """

    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"{path}: not valid YAML ({exc})"]) from exc
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be a mapping"])
    return SimConfig.from_dict(data).checked()


def run_directory(root, name: str, timestamp: Optional[str] = None) -> Path:
    """``root/name`` or ``root/name_<timestamp>`` when a timestamp is given."""

    folder = f"{name}_{timestamp}" if timestamp else name
    path = Path(root) / folder
    path.mkdir(parents=True, exist_ok=True)
    return path
