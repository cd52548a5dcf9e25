"""
Per-scheme comparison of metrics rows.

Columns follow the usual comparison of address allocation approaches:
uniqueness, latency, overhead (messages per join) and scalability, the
last being the ratio of mean messages per join at the largest n to that at
the smallest n.
"""

import logging
from pathlib import Path
from typing import List, Sequence, Union

import pandas as pd

from proxaddr.cli.models import METRICS_COLUMNS, CliError, SchemeComparison

logger = logging.getLogger(__name__)

# Below this messages-per-join growth factor a scheme counts as scalable
SCALABLE_RATIO = 2.0


class EmptyInput(CliError):
    """No metrics rows to report on."""


def load_rows(paths: Sequence[Union[str, Path]]) -> pd.DataFrame:
    """
    Concatenate metrics files in the order given.

    Raises:
        EmptyInput: no files, or the files hold no rows
    """
    if not paths:
        raise EmptyInput("no metrics files given")
    frames = []
    for path in paths:
        try:
            frame = pd.read_csv(path)
        except FileNotFoundError as e:
            raise EmptyInput(f"metrics file not found: {path}") from e
        except pd.errors.EmptyDataError:
            logger.warning(f"{path} is empty")
            continue
        missing = [c for c in METRICS_COLUMNS if c not in frame.columns]
        if missing:
            raise EmptyInput(f"{path} is not a metrics file (missing {', '.join(missing)})")
        frames.append(frame)
    if not frames or all(f.empty for f in frames):
        raise EmptyInput("metrics files contain no rows")
    return pd.concat(frames, ignore_index=True)


def _scheme_entry(scheme: str, rows: pd.DataFrame) -> SchemeComparison:
    duplicates = int(rows["duplicates"].sum())
    joins = int(rows["joins"].sum())
    with_diameter = rows[rows["d"] > 0]
    latency_per_d = None
    if not with_diameter.empty:
        latency_per_d = float((with_diameter["latency_mean"] / with_diameter["d"]).mean())

    n_values = sorted(int(n) for n in rows["n"].unique())
    ratio = None
    label = "n/a"
    if len(n_values) > 1:
        by_n = rows.groupby("n")["messages_per_join_mean"].mean()
        smallest = float(by_n.loc[n_values[0]])
        largest = float(by_n.loc[n_values[-1]])
        if smallest > 0:
            ratio = largest / smallest
            label = "High" if ratio < SCALABLE_RATIO else "Low"

    return SchemeComparison(
        scheme=scheme,
        rows=len(rows),
        uniqueness="Yes" if duplicates == 0 else "No",
        duplicates=duplicates,
        latency_mean=float(rows["latency_mean"].mean()),
        latency_per_diameter=latency_per_d,
        overhead_mean=float(rows["messages_per_join_mean"].mean()),
        floods_per_join=float(rows["floods"].sum()) / joins if joins else 0.0,
        scalability_ratio=ratio,
        scalability=label,
        n_values=n_values,
    )


def compare(rows: pd.DataFrame) -> List[SchemeComparison]:
    """One comparison entry per scheme, in order of first appearance."""
    if rows.empty:
        return []
    schemes = list(dict.fromkeys(str(s) for s in rows["scheme"]))
    return [_scheme_entry(s, rows[rows["scheme"].astype(str) == s]) for s in schemes]


def comparison_frame(entries: List[SchemeComparison]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "scheme": e.scheme,
                "uniqueness": e.uniqueness,
                "duplicates": e.duplicates,
                "latency": e.latency_mean,
                "latency_per_d": e.latency_per_diameter,
                "overhead": e.overhead_mean,
                "floods_per_join": e.floods_per_join,
                "scalability": e.scalability,
                "scalability_ratio": e.scalability_ratio,
                "rows": e.rows,
            }
            for e in entries
        ]
    )


def render_csv(entries: List[SchemeComparison]) -> str:
    return comparison_frame(entries).to_csv(index=False, float_format="%.6f", lineterminator="\n")


def render_text(entries: List[SchemeComparison]) -> str:
    """Fixed-width table for the terminal."""
    header = (
        f"{'Scheme':<10}{'Unique':>8}{'Dups':>7}{'Latency':>10}{'Lat/d':>8}"
        f"{'Msgs/join':>11}{'Floods/join':>13}{'Scalability':>13}{'Ratio':>8}"
    )
    lines = [header, "-" * len(header)]
    for e in entries:
        lat_d = f"{e.latency_per_diameter:.2f}" if e.latency_per_diameter is not None else "-"
        ratio = f"{e.scalability_ratio:.2f}" if e.scalability_ratio is not None else "-"
        lines.append(
            f"{e.scheme:<10}{e.uniqueness:>8}{e.duplicates:>7}{e.latency_mean:>10.2f}{lat_d:>8}"
            f"{e.overhead_mean:>11.2f}{e.floods_per_join:>13.2f}{e.scalability:>13}{ratio:>8}"
        )
    return "\n".join(lines) + "\n"
