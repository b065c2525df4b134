"""Post-run evaluation: convergence statistics, shape evolution, SVG curves.

CSV files are the authoritative output; the SVG plots are minimal
hand-rolled polylines for quick visual inspection.
"""

import csv
import math
from pathlib import Path

STABLE_PFC = 0.5
CONVERGENCE_PFC = 0.8
CONVERGENCE_GRASPS = 10
CONVERGENCE_CAP = 300
NO_CONVERGENCE = "no_convergence"


def read_iterations(run_dir):
    """Rows of iterations.csv as dicts with floats where possible."""
    path = Path(run_dir) / "iterations.csv"
    if not path.exists():
        raise FileNotFoundError(f"{run_dir} has no iterations.csv")
    rows = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            parsed = {}
            for k, v in row.items():
                try:
                    parsed[k] = float(v)
                except (TypeError, ValueError):
                    parsed[k] = math.nan
            rows.append(parsed)
    if not rows:
        raise ValueError(f"{path} is empty")
    return rows


def best_pfc_curve(rows):
    return [r["best_pfc"] for r in rows]


def cumulative_stable(rows, threshold=STABLE_PFC):
    count = 0
    out = []
    for r in rows:
        if r["pfc"] > threshold:
            count += 1
        out.append(count)
    return out


def iterations_to_grasps(rows, n_grasps=CONVERGENCE_GRASPS, pfc_min=CONVERGENCE_PFC,
                         cap=CONVERGENCE_CAP):
    """1-based iteration at which the n-th grasp above pfc_min appeared,
    or NO_CONVERGENCE when it never does within the cap."""
    count = 0
    for r in rows:
        if r["iter"] > cap:
            break
        if r["pfc"] > pfc_min:
            count += 1
            if count >= n_grasps:
                return int(r["iter"])
    return NO_CONVERGENCE


def shape_evolution(run_dir):
    """(hausdorff improvement %, variance drop %) from metrics.csv, or None."""
    path = Path(run_dir) / "metrics.csv"
    if not path.exists():
        return None
    rows = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            rows.append((float(row["iter"]), float(row["hausdorff"]),
                         float(row["mean_variance"])))
    if len(rows) < 2:
        return None
    rows.sort()
    h0, v0 = rows[0][1], rows[0][2]
    h1, v1 = rows[-1][1], rows[-1][2]
    h_improve = 100.0 * (h0 - h1) / h0 if h0 > 0 else 0.0
    v_drop = 100.0 * (v0 - v1) / v0 if v0 > 0 else 0.0
    return h_improve, v_drop


def convergence_summary(values, cap=CONVERGENCE_CAP):
    """Median / mean / min in the style of per-object convergence reports;
    no-convergence entries count as the cap."""
    numeric = [cap if v == NO_CONVERGENCE else int(v) for v in values]
    finished = [v for v in values if v != NO_CONVERGENCE]
    numeric.sort()
    n = len(numeric)
    median = (numeric[n // 2] if n % 2 else 0.5 * (numeric[n // 2 - 1] + numeric[n // 2]))
    return {
        "median": median,
        "mean": sum(numeric) / n,
        "min": min(finished) if finished else NO_CONVERGENCE,
        "converged": len(finished),
        "total": n,
    }


def write_svg_lines(path, series, title, x_label="iteration", y_label=""):
    """Minimal multi-polyline SVG plot; `series` maps label -> list of y."""
    width, height, pad = 640, 400, 45
    ys = [y for s in series.values() for y in s if not math.isnan(y)]
    xs_max = max((len(s) for s in series.values()), default=1)
    if not ys:
        ys = [0.0, 1.0]
    y_lo, y_hi = min(ys), max(ys)
    if y_hi - y_lo < 1e-12:
        y_hi = y_lo + 1.0
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
              "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2"]

    def sx(i):
        return pad + (width - 2 * pad) * i / max(xs_max - 1, 1)

    def sy(v):
        return height - pad - (height - 2 * pad) * (v - y_lo) / (y_hi - y_lo)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle" font-size="11">{x_label}</text>',
        f'<text x="12" y="{pad - 8}" font-size="11">{y_label}</text>',
        f'<text x="{pad - 4}" y="{sy(y_lo) + 4}" text-anchor="end" font-size="10">{y_lo:.3g}</text>',
        f'<text x="{pad - 4}" y="{sy(y_hi) + 4}" text-anchor="end" font-size="10">{y_hi:.3g}</text>',
    ]
    for k, (label, s) in enumerate(series.items()):
        pts = " ".join(
            f"{sx(i):.1f},{sy(v):.1f}" for i, v in enumerate(s) if not math.isnan(v)
        )
        color = colors[k % len(colors)]
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{width - pad + 4}" y="{pad + 14 * k}" font-size="10" '
            f'fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))


def generate_report(run_dirs, out_dir):
    """Aggregate any number of run directories into summary CSVs and plots."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = [Path(d).name or str(d) for d in run_dirs]
    all_rows = [read_iterations(d) for d in run_dirs]

    curves = {lab: best_pfc_curve(rows) for lab, rows in zip(labels, all_rows)}
    n_max = max(len(c) for c in curves.values())
    with open(out / "best_pfc_curves.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["iter"] + labels)
        for i in range(n_max):
            w.writerow([i + 1] + [c[i] if i < len(c) else "" for c in curves.values()])

    stables = {lab: cumulative_stable(rows) for lab, rows in zip(labels, all_rows)}
    with open(out / "stable_counts.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["iter"] + labels)
        for i in range(n_max):
            w.writerow([i + 1] + [s[i] if i < len(s) else "" for s in stables.values()])

    conv = {lab: iterations_to_grasps(rows) for lab, rows in zip(labels, all_rows)}
    summary = convergence_summary(list(conv.values()))
    with open(out / "convergence.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["run", "iterations_to_10_grasps"])
        for lab in labels:
            w.writerow([lab, conv[lab]])
        w.writerow(["median", summary["median"]])
        w.writerow(["mean", summary["mean"]])
        w.writerow(["min", summary["min"]])
        w.writerow(["converged", f"{summary['converged']}/{summary['total']}"])

    with open(out / "shape_evolution.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["run", "hausdorff_improvement_pct", "variance_drop_pct"])
        for lab, d in zip(labels, run_dirs):
            evo = shape_evolution(d)
            if evo is None:
                w.writerow([lab, "", ""])
            else:
                w.writerow([lab, repr(evo[0]), repr(evo[1])])

    write_svg_lines(out / "best_pfc.svg", curves, "best probability of force closure",
                    y_label="best pfc")
    write_svg_lines(out / "stable_counts.svg",
                    {k: [float(x) for x in v] for k, v in stables.items()},
                    "cumulative stable grasps (pfc > 0.5)", y_label="count")
    return summary
