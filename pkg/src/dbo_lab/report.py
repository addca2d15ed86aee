"""Report emitters: CSV with config preambles, fit JSON, gnuplot scripts, figures.

Every delimited output starts with a ``# dbo-lab <version>`` line followed
by the resolved run settings as ``# key=value`` comments, so a file is
reproducible from its own preamble.  CSV bodies use comma separators,
``.`` decimals, LF line endings, and repr() for floats: two runs with the
same configuration and seed produce byte-identical files.

Scan-style outputs get a sibling gnuplot script (same stem, ``.gp``) that
renders the log-log norm growth together with the predicted-slope guide
line, and a pre-rendered PNG for environments without gnuplot.
"""

from __future__ import annotations

import csv
import json
import math
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__

__all__ = [
    "metadata_lines",
    "write_csv",
    "write_fit_json",
    "write_scan_gnuplot",
    "write_heat_gnuplot",
    "render_scan_png",
    "render_heat_png",
    "render_trajectory_png",
]


def _format_cell(value: object) -> str:
    """Deterministic scalar rendering: repr for floats, str otherwise."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def metadata_lines(meta: Mapping[str, object]) -> list[str]:
    """Version tag plus sorted resolved settings, all as # comments."""
    lines = [f"# dbo-lab {__version__}"]
    lines.extend(f"# {key}={_format_cell(meta[key])}" for key in sorted(meta))
    return lines


def write_csv(
    path: str,
    header: Sequence[str],
    rows: Iterable[Sequence[object]],
    meta: Mapping[str, object],
) -> None:
    """Comment preamble, header row, then one formatted line per row."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in metadata_lines(meta):
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(cell) for cell in row])


def write_fit_json(path: str, fit, verdict: str) -> None:
    """Scaling-fit summary: exactly slope/intercept/r_squared/predicted_slope/verdict."""
    payload = {
        "slope": float(fit.slope),
        "intercept": float(fit.intercept),
        "r_squared": float(fit.r_squared),
        "predicted_slope": float(fit.predicted_slope),
        "verdict": verdict,
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _guide_coefficient(x0: float, y0: float, slope: float) -> float:
    # anchor the power-law guide at the first data point
    return y0 / x0**slope if x0 > 0 and y0 > 0 and math.isfinite(y0) else 1.0


def write_scan_gnuplot(path: str, csv_name: str, result) -> None:
    """Log-log normalized iterate norm versus N with the predicted-slope guide."""
    order = result.config.order()
    norm = result.normalized()
    xs = [row.N for row in result.rows]
    coeff = _guide_coefficient(xs[0], float(norm[0]), result.predicted_slope)
    lines = [
        f"# dbo-lab {__version__} scan plot",
        'set datafile separator ","',
        "set key autotitle columnhead",
        "set logscale xy",
        'set xlabel "N"',
        f'set ylabel "iterate norm / profile norm^{order}"',
        f'set title "{result.config.variant} inflation scan"',
        f"pred(x) = {_format_cell(coeff)} * x**({_format_cell(result.predicted_slope)})",
        f'plot "{csv_name}" using 5:($9/$8**{order}) with linespoints title "measured", \\',
        f'     pred(x) with lines dashtype 2 title "predicted slope '
        f'{result.predicted_slope:.3f}"',
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_heat_gnuplot(
    path: str, csv_name: str, t: Sequence[float], norms: Sequence[float], predicted_slope: float
) -> None:
    """Log-log kernel norm versus t with the predicted decay guide."""
    coeff = _guide_coefficient(float(t[0]), float(norms[0]), predicted_slope)
    lines = [
        f"# dbo-lab {__version__} smoothing plot",
        'set datafile separator ","',
        "set key autotitle columnhead",
        "set logscale xy",
        'set xlabel "t"',
        'set ylabel "kernel norm"',
        'set title "fractional heat smoothing"',
        f"pred(x) = {_format_cell(coeff)} * x**({_format_cell(predicted_slope)})",
        f'plot "{csv_name}" using 4:5 with linespoints title "measured", \\',
        f'     pred(x) with lines dashtype 2 title "predicted slope {predicted_slope:.3f}"',
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=True)
    from matplotlib import pyplot as plt

    return plt


def render_scan_png(path: str, result) -> None:
    plt = _pyplot()
    xs = np.asarray([row.N for row in result.rows], dtype=float)
    ys = result.normalized()
    coeff = _guide_coefficient(xs[0], float(ys[0]), result.predicted_slope)
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.loglog(xs, ys, "o-", label="measured")
    ax.loglog(
        xs,
        coeff * xs**result.predicted_slope,
        "--",
        label=f"predicted slope {result.predicted_slope:.3f}",
    )
    ax.set_xlabel("N")
    ax.set_ylabel(f"iterate norm / profile norm^{result.config.order()}")
    ax.set_title(f"{result.config.variant}: fitted slope {result.slope:.3f}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_heat_png(
    path: str, t: Sequence[float], norms: Sequence[float], measured: float, predicted: float
) -> None:
    plt = _pyplot()
    xs = np.asarray(t, dtype=float)
    ys = np.asarray(norms, dtype=float)
    coeff = _guide_coefficient(float(xs[0]), float(ys[0]), predicted)
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.loglog(xs, ys, "o-", label=f"measured slope {measured:.3f}")
    ax.loglog(xs, coeff * xs**predicted, "--", label=f"predicted slope {predicted:.3f}")
    ax.set_xlabel("t")
    ax.set_ylabel("kernel norm")
    ax.set_title("fractional heat smoothing law")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_trajectory_png(
    path: str, times: Sequence[float], l2: Sequence[float], hs: Sequence[float], s: float
) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.plot(times, l2, label="l2 norm")
    ax.plot(times, hs, label=f"H^{s:g} norm")
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.set_title("dissipative evolution")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
