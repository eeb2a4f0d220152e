"""Report rendering: aligned text tables, JSON, and matplotlib figures.

Figures are optional companions to the delimited output; every render
function writes a PNG next to wherever the caller points it.
"""

from __future__ import annotations

import json
from pathlib import Path

from .evaluation import EvalReport
from .graph import RunReport
from .taxonomy import SUPERCLASSES, SUPERCLASS_NAMES
from .voc import StatsReport


def _table(rows: list[tuple], headers: tuple) -> str:
    widths = [max(len(str(r[i])) for r in [headers, *rows])
              for i in range(len(headers))]
    def fmt(row):
        return "  ".join(str(v).ljust(w) if i == 0 else str(v).rjust(w)
                         for i, (v, w) in enumerate(zip(row, widths)))
    lines = [fmt(headers), fmt(tuple("-" * w for w in widths))]
    lines.extend(fmt(r) for r in rows)
    return "\n".join(lines)


# ---------------------------------------------------------------- stats

def stats_text(r: StatsReport) -> str:
    rows = []
    for sc in SUPERCLASSES:
        tr, te, total = r.superclass_row(sc)
        rows.append((f"{SUPERCLASS_NAMES[sc]} ({sc})", tr, te, total))
    tr, te, total = r.totals
    rows.append(("Total", tr, te, total))
    out = [_table(rows, ("Superclass", "Train", "Test", "Total"))]
    out.append("")
    out.append(f"Images: train={r.images.get('train', 0)} "
               f"test={r.images.get('test', 0)}")
    if r.min_instances:
        out.append(f"Per-class table filtered at >= {r.min_instances} instances "
                   f"({len(r.per_class)} classes kept)")
    return "\n".join(out)


def stats_json(r: StatsReport) -> str:
    tr, te, total = r.totals
    return json.dumps({
        "per_superclass": {
            sc: dict(zip(("train", "test", "total"), r.superclass_row(sc)))
            for sc in SUPERCLASSES
        },
        "per_class": {
            code: {"train": v[0], "test": v[1], "total": v[0] + v[1]}
            for code, v in sorted(r.per_class.items())
        },
        "images": r.images,
        "total": {"train": tr, "test": te, "total": total},
        "min_instances": r.min_instances,
    }, indent=2)


def stats_figure(r: StatsReport, path: str | Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    train = [r.superclass_row(sc)[0] for sc in SUPERCLASSES]
    test = [r.superclass_row(sc)[1] for sc in SUPERCLASSES]
    x = range(len(SUPERCLASSES))
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar([i - 0.2 for i in x], train, width=0.4, label="train")
    ax.bar([i + 0.2 for i in x], test, width=0.4, label="test")
    ax.set_xticks(list(x), SUPERCLASSES)
    ax.set_ylabel("instances")
    ax.set_title("Instances per superclass")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


# ----------------------------------------------------------------- eval

def eval_text(r: EvalReport) -> str:
    rows = [(label, f"{m.f1:.4f}") for label, m in r.per_class.items()]
    rows.append(("Precision", f"{r.overall.precision:.4f}"))
    rows.append(("Recall", f"{r.overall.recall:.4f}"))
    rows.append(("F1-score", f"{r.overall.f1:.4f}"))
    out = [_table(rows, ("Label", "F1"))]
    t = r.overall_tally
    out.append("")
    out.append(f"granularity={r.granularity} iou>{r.iou_threshold} "
               f"TP={t.tp} FP={t.fp} FN={t.fn}")
    if r.filtered_classes:
        out.append(f"filtered (min instances): {', '.join(r.filtered_classes)}")
    if r.violations:
        out.append(f"violations: {len(r.violations)}")
        out.extend(f"  {v}" for v in r.violations)
    return "\n".join(out)


def eval_json(r: EvalReport) -> str:
    return json.dumps({
        "granularity": r.granularity,
        "iou_threshold": r.iou_threshold,
        "per_class": {
            label: {"precision": m.precision, "recall": m.recall, "f1": m.f1,
                    "tp": r.per_class_tally[label].tp,
                    "fp": r.per_class_tally[label].fp,
                    "fn": r.per_class_tally[label].fn}
            for label, m in r.per_class.items()
        },
        "overall": {
            "precision": r.overall.precision,
            "recall": r.overall.recall,
            "f1": r.overall.f1,
            "tp": r.overall_tally.tp,
            "fp": r.overall_tally.fp,
            "fn": r.overall_tally.fn,
        },
        "filtered_classes": r.filtered_classes,
        "violations": [str(v) for v in r.violations],
    }, indent=2)


def eval_figure(r: EvalReport, path: str | Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = list(r.per_class)
    f1s = [r.per_class[label].f1 for label in labels]
    fig, ax = plt.subplots(figsize=(max(6, 0.3 * len(labels)), 4))
    ax.bar(range(len(labels)), f1s)
    ax.axhline(r.overall.f1, linestyle="--", linewidth=1,
               label=f"overall F1 = {r.overall.f1:.4f}")
    ax.set_xticks(range(len(labels)), labels, rotation=90, fontsize=6)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("F1")
    ax.set_title(f"Per-class F1 ({r.granularity}, IoU > {r.iou_threshold})")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


# ---------------------------------------------------------------- bench

def bench_text(r: RunReport) -> str:
    out = [
        f"frames in:  {r.frames_in}",
        f"frames out: {r.frames_out}",
        f"dropped:    {r.dropped}",
        f"wall time:  {r.wall_time:.3f} s",
        f"average FPS: {r.fps:.2f}",
        f"mode: {r.mode}",
        "",
    ]
    rows = [(name, f"{p50:.2f}", f"{p95:.2f}")
            for name, (p50, p95) in r.node_latency.items()]
    out.append(_table(rows, ("Node", "p50 ms", "p95 ms")))
    rows = [(t, hw) for t, hw in r.queue_highwater.items()]
    out.append("")
    out.append(_table(rows, ("Topic", "queue high-water")))
    return "\n".join(out)


def bench_json(r: RunReport) -> str:
    return json.dumps({
        "frames_in": r.frames_in,
        "frames_out": r.frames_out,
        "dropped": r.dropped,
        "wall_time_s": r.wall_time,
        "fps": r.fps,
        "mode": r.mode,
        "node_latency_ms": {
            name: {"p50": p50, "p95": p95}
            for name, (p50, p95) in r.node_latency.items()
        },
        "queue_highwater": r.queue_highwater,
    }, indent=2)


def bench_figure(r: RunReport, path: str | Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = list(r.node_latency)
    p50 = [r.node_latency[n][0] for n in names]
    p95 = [r.node_latency[n][1] for n in names]
    x = range(len(names))
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar([i - 0.2 for i in x], p50, width=0.4, label="p50")
    ax.bar([i + 0.2 for i in x], p95, width=0.4, label="p95")
    ax.set_xticks(list(x), names, rotation=15, fontsize=8)
    ax.set_ylabel("latency (ms)")
    ax.set_title(f"Per-node latency — {r.fps:.1f} FPS over {r.frames_out} frames")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
