"""SVG renderings of the figure datasets.

Output is deterministic: no timestamp metadata and a fixed ID salt, so the
same CSV always yields the same bytes.
"""

from __future__ import annotations

import csv
import warnings
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..errors import SchemaError  # noqa: E402

SCHEMAS: dict[str, tuple[str, ...]] = {
    "fig1": ("round", "meanDistance", "stderr"),
    "fig2": ("n", "maxDistance"),
    "fig3": ("n", "meanRounds", "stderr", "reference"),
    "fig4": ("gamma", "br"),
    "fig5": ("delta", "mStar", "efficiency", "degenerate"),
}


def read_dataset(path: str | Path) -> tuple[tuple[str, ...], list[list[float]]]:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise SchemaError(f"{path}: no header row")
    header = tuple(rows[0])
    try:
        data = [[float(v) for v in r] for r in rows[1:]]
    except ValueError as e:
        raise SchemaError(f"{path}: non-numeric value ({e})") from None
    if any(len(r) != len(header) for r in data):
        raise SchemaError(f"{path}: ragged rows")
    return header, data


def emit_plot(dataset: str | Path, style: str, out: str | Path | None = None) -> Path:
    """Render ``dataset`` in the given figure style and return the SVG path."""
    if style not in SCHEMAS:
        raise SchemaError(f"unknown plot style {style!r}")
    header, data = read_dataset(dataset)
    if header != SCHEMAS[style]:
        raise SchemaError(f"{dataset}: header {header} does not match {style} schema {SCHEMAS[style]}")
    out = Path(out) if out is not None else Path(dataset).with_suffix(".svg")
    cols = list(zip(*data)) if data else [()] * len(header)
    if not data:
        warnings.warn(f"{dataset} has no rows; writing empty axes")

    with plt.rc_context({"svg.hashsalt": "scriplab", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        x = cols[0]
        if style == "fig1":
            ax.errorbar(x, cols[1], yerr=cols[2], fmt="-", lw=1, capsize=0)
            ax.set_xlabel("round")
            ax.set_ylabel("squared distance to max-entropy law")
            if data:
                ax.set_yscale("log")
        elif style == "fig2":
            ax.plot(x, cols[1], "o-")
            ax.set_xlabel("agents n")
            ax.set_ylabel("max squared distance")
        elif style == "fig3":
            ax.errorbar(x, cols[1], yerr=cols[2], fmt="o-", label="rounds to reach")
            ax.plot(x, cols[3], "--", label="3n")
            ax.set_xlabel("agents n")
            ax.set_ylabel("rounds")
            ax.legend()
        elif style == "fig4":
            ax.step(x, cols[1], where="post", label="best response")
            if data:
                hi = max(max(x), max(cols[1]))
                ax.plot([0, hi], [0, hi], ":", color="gray", label="diagonal")
            ax.set_xlabel("population threshold")
            ax.set_ylabel("best-response threshold")
            ax.legend()
        elif style == "fig5":
            ax.plot(x, cols[1], "o-")
            ax.set_xlabel("discount factor")
            ax.set_ylabel("optimal money per agent")
        fig.tight_layout()
        fig.savefig(out, format="svg", metadata={"Date": None})
        plt.close(fig)
    return out
