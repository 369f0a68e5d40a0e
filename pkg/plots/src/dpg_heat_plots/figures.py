"""Load dpg-heat CSV tables and render error / stability figures.

Rendering is a pure function of the CSV contents: the same input bytes
produce the same plotted data series. Schema problems (missing columns,
empty tables) raise PlotDataError naming the offending columns instead of
silently producing an empty image.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

DEFAULT_ERROR_COLUMNS = [
    "err_u",
    "err_sigma",
    "err_hat_u",
    "err_hat_sigma",
    "err_u0",
    "err_energy",
]

ERRORS_REQUIRED = ["h", "err_u"]
STABILITY_REQUIRED = ["coupling", "n", "stability_ratio"]

LABELS = {
    "err_u": r"err($u$)",
    "err_sigma": r"err($\sigma$)",
    "err_hat_u": r"err($\hat u$)",
    "err_hat_sigma": r"err($\hat\sigma$)",
    "err_u0": r"err($u_0$)",
    "err_energy": "err(energy)",
}


class PlotDataError(ValueError):
    """Raised when a CSV does not match the expected schema or has no data."""


@dataclass(frozen=True)
class FigureSpec:
    """What to plot: input CSVs, figure kind, output path, error columns."""

    csv_paths: tuple[str, ...]
    kind: str  # "errors" or "stability"
    out: str
    columns: tuple[str, ...] = field(default=tuple(DEFAULT_ERROR_COLUMNS))

    def __post_init__(self) -> None:
        if self.kind not in ("errors", "stability"):
            raise PlotDataError(f"unknown figure kind: {self.kind!r}")
        if not self.csv_paths:
            raise PlotDataError("no input CSV given")


def load_rows(path: str) -> list[dict[str, str]]:
    """Parse one CSV into dict rows; fail loudly if there are none."""
    with open(path, newline="") as stream:
        rows = list(csv.DictReader(stream))
    if not rows:
        raise PlotDataError(f"no data: {path} has no rows")
    return rows


def _require_columns(path: str, rows: list[dict[str, str]], names: list[str]) -> None:
    missing = [name for name in names if name not in rows[0]]
    if missing:
        raise PlotDataError(
            f"{path}: missing column(s) {', '.join(missing)}; "
            f"found {', '.join(rows[0].keys())}"
        )


def _floats(rows: list[dict[str, str]], name: str) -> list[float]:
    try:
        return [float(row[name]) for row in rows]
    except ValueError as exc:
        raise PlotDataError(f"column {name!r} contains a non-numeric value") from exc


def _render_errors(spec: FigureSpec, ax) -> None:
    for path in spec.csv_paths:
        rows = load_rows(path)
        _require_columns(path, rows, ERRORS_REQUIRED + list(spec.columns))
        h = _floats(rows, "h")
        for name in spec.columns:
            ax.loglog(h, _floats(rows, name), marker="o",
                      label=LABELS.get(name, name))
        # dashed h^{1/2} reference anchored at the coarsest err_u value.
        h_max = max(h)
        anchor = _floats(rows, "err_u")[h.index(h_max)]
        ref = [anchor * (hi / h_max) ** 0.5 for hi in h]
        ax.loglog(h, ref, "k--", label=r"$h^{1/2}$ reference")
    ax.set_xlabel(r"$h$")
    ax.set_ylabel("error")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)


def _render_stability(spec: FigureSpec, ax) -> None:
    for path in spec.csv_paths:
        rows = load_rows(path)
        _require_columns(path, rows, STABILITY_REQUIRED)
        couplings = sorted({row["coupling"] for row in rows})
        for coupling in couplings:
            sub = [row for row in rows if row["coupling"] == coupling]
            ns = _floats(sub, "n")
            ratios = _floats(sub, "stability_ratio")
            ax.plot(ns, ratios, marker="s", label=f"k = {coupling}(h) coupling")
    ax.axhline(1.0, color="k", linestyle="--", label="bound 1")
    ax.set_xlabel(r"$n$ (mesh subdivisions)")
    ax.set_ylabel("stability ratio")
    ax.set_ylim(bottom=0.0)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)


def render(spec: FigureSpec) -> str:
    """Render the figure described by `spec` and return the output path.

    All CSVs are validated before any drawing happens, so a schema error
    never leaves a partial image behind.
    """
    for path in spec.csv_paths:
        rows = load_rows(path)
        required = ERRORS_REQUIRED + list(spec.columns) \
            if spec.kind == "errors" else STABILITY_REQUIRED
        _require_columns(path, rows, required)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        if spec.kind == "errors":
            _render_errors(spec, ax)
        else:
            _render_stability(spec, ax)
        fig.tight_layout()
        fig.savefig(spec.out, dpi=150)
    finally:
        plt.close(fig)
    return spec.out
