"""Deterministic report emission: schema-versioned JSON, documented CSV,
and self-contained SVG line/loglog charts.

Numerical payloads are serialized with sorted keys so identical runs produce
byte-identical JSON; wall-clock metadata lives under the separate "meta" key.
"""

from __future__ import annotations

import csv
import datetime
import json
import os
from typing import Iterable, Optional, Sequence

SCHEMA = "umdlab-report/1"


def make_report(command: str, config: dict, results: dict) -> dict:
    return {
        "schema": SCHEMA,
        "command": command,
        "config": config,
        "results": results,
        "meta": {"timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat()},
    }


def write_json(path, payload: dict) -> str:
    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(list(row))
    return path


def write_svg_chart(path, xs: Sequence[float], series: dict, xlabel: str,
                    ylabel: str, title: str = "", loglog: bool = False,
                    hashsalt: str = "0") -> Optional[str]:
    """One line chart (optionally log-log) as a self-contained SVG file."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = hashsalt
    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, ys in series.items():
        if loglog:
            ax.loglog(xs, ys, marker="o", label=label)
        else:
            ax.plot(xs, ys, marker="o", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
