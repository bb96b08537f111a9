"""gnuplot script builders for run outputs; nothing here renders images."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

try:
    from .utils import write_text_atomic
except ImportError:
    from utils import write_text_atomic

__all__ = [
    "series_groups",
    "get_series_stanza",
    "get_heatmap_stanza",
    "build_plot_script",
    "emit_plot_script",
]

_GROUP_ORDER = ("qd", "excitation", "g2", "mandel", "bunching")
_GROUP_TITLES = {
    "qd": "Spin quasi-probability distributions",
    "excitation": "Photon number and spin excitation",
    "g2": "Second-order coherence",
    "mandel": "Mandel Q parameter",
    "bunching": "g2(0) - g2(tau)",
}


def _group_of(column: str) -> str | None:
    if column in ("W", "P", "Q"):
        return "qd"
    if column == "n_photon" or column.startswith("exc_"):
        return "excitation"
    if column.startswith("g2_"):
        return "g2"
    if column == "mandel_q":
        return "mandel"
    if column.startswith("bunching"):
        return "bunching"
    return None


def series_groups(columns: Sequence[str]) -> dict[str, list[str]]:
    """Columns (time column excluded) grouped into plot panels, in a fixed order."""

    groups: dict[str, list[str]] = {}
    for column in columns:
        group = _group_of(column)
        if group is not None:
            groups.setdefault(group, []).append(column)
    return {name: groups[name] for name in _GROUP_ORDER if name in groups}


def get_series_stanza(data_file: str, output_stem: str, group: str, columns: Sequence[str]) -> str:
    curves = ", \\\n     ".join(f"'{data_file}' using \"t\":\"{c}\" with lines title \"{c}\"" for c in columns)
    return (
        f"# {group}\n"
        f"set output '{output_stem}_{group}.png'\n"
        f"set title \"{_GROUP_TITLES[group]}\"\n"
        "set xlabel \"t\"\n"
        f"plot {curves}\n"
    )


def get_heatmap_stanza(data_file: str, output_stem: str, kind: str) -> str:
    return (
        f"# heatmap {kind}\n"
        f"set output '{output_stem}_heatmap_{kind}.png'\n"
        f"set title \"{kind} over the scaled angle manifold\"\n"
        "set xlabel \"phi\"\n"
        "set ylabel \"theta\"\n"
        f"plot '{data_file}' nonuniform matrix with image notitle\n"
        "unset ylabel\n"
    )


def build_plot_script(
    name: str,
    series_files: Mapping[str, Sequence[str]],
    heatmap_files: Mapping[str, str] | None = None,
) -> str:
    """One stanza per series group of every data file, then one per heatmap.

    ``series_files`` maps a CSV file name to its header (first column ``t``).
    """

    parts = [
        f"# gnuplot script for run '{name}'; run with: gnuplot plot.gp\n"
        "set terminal pngcairo size 900,600\n"
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
    ]
    for data_file, header in series_files.items():
        for group, columns in series_groups(header).items():
            stem = name if data_file.startswith("timeseries") else f"{name}_{Path(data_file).stem}"
            parts.append(get_series_stanza(data_file, stem, group, columns))
    for kind, data_file in (heatmap_files or {}).items():
        parts.append(get_heatmap_stanza(data_file, name, kind))
    return "\n".join(parts)


def emit_plot_script(
    out_dir: Path,
    name: str,
    series_files: Mapping[str, Sequence[str]],
    heatmap_files: Mapping[str, str] | None = None,
    filename: str = "plot.gp",
) -> Path:
    """Write the script next to the data, referencing only files that exist there."""

    out_dir = Path(out_dir)
    existing = {f: h for f, h in series_files.items() if (out_dir / f).is_file()}
    heatmaps = {k: f for k, f in (heatmap_files or {}).items() if (out_dir / f).is_file()}
    return write_text_atomic(out_dir / filename, build_plot_script(name, existing, heatmaps))
