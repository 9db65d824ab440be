"""Figure rendering for experiment runs (headless, file output only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

FIGSIZE = (7.0, 4.5)
DPI = 110


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)


def render_figures(result, out_dir: str | Path) -> list[Path]:
    """One bound-trajectory plot per instance plus a closure bar chart."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    by_instance: dict[str, list[dict]] = {}
    for rec in result.records:
        by_instance.setdefault(rec["instance"], []).append(rec)

    for iid in sorted(by_instance):
        fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
        opt = None
        for rec in sorted(by_instance[iid], key=lambda r: r["kind"]):
            traj = rec["trajectory"]
            ax.plot(range(len(traj)), traj, marker="o", markersize=3,
                    label=rec["kind"])
            if rec["opt"] is not None:
                opt = rec["opt"]
        if opt is not None:
            ax.axhline(opt, color="black", linestyle="--", linewidth=1,
                       label="optimum")
        ax.set_xlabel("separation round")
        ax.set_ylabel("LP bound")
        ax.set_title(f"bound trajectory: {iid}")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out / f"trajectory-{_safe(iid)}.png"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)

    aggs = [a for a in result.aggregates if a.get("mean_closed_pct") is not None]
    if aggs:
        fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
        kinds = [a["kind"] for a in aggs]
        vals = [a["mean_closed_pct"] for a in aggs]
        ax.bar(range(len(kinds)), vals, color="tab:blue")
        ax.set_xticks(range(len(kinds)))
        ax.set_xticklabels(kinds, rotation=30, ha="right", fontsize=8)
        ax.set_ylabel("mean root gap closed (%)")
        ax.set_ylim(0, 105)
        ax.set_title("gap closure by formulation")
        fig.tight_layout()
        path = out / "gap-closure.png"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written
