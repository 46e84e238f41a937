"""Two-panel trace plots: cumulative spend vs ideal, and the multiplier path.

SVG output is deterministic for a given input: element ids are salted with
the chart name and no creation date is embedded, so reruns produce
identical bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def write_trace_plot(
    path: Path,
    title: str,
    cycles: Sequence[int],
    ideal_cum: Sequence[float],
    test_label: str,
    test_cum: Sequence[float],
    test_lam: Sequence[float],
    baseline_cum: Sequence[float],
    baseline_lam: Sequence[float],
) -> None:
    with plt.rc_context({"svg.hashsalt": title}):
        fig, (ax_spend, ax_lam) = plt.subplots(1, 2, figsize=(10, 3.6))
        ax_spend.plot(cycles, test_cum, color="tab:red", label=test_label)
        ax_spend.plot(cycles, baseline_cum, color="tab:blue", label="baseline")
        ax_spend.plot(cycles, ideal_cum, color="black", linestyle="--", label="ideal")
        ax_spend.set_xlabel("control cycle")
        ax_spend.set_ylabel("cumulative spend")
        ax_spend.legend(loc="lower right", fontsize=8)

        ax_lam.plot(cycles, test_lam, color="tab:red", label=test_label)
        ax_lam.plot(cycles, baseline_lam, color="tab:blue", label="baseline")
        ax_lam.set_xlabel("control cycle")
        ax_lam.set_ylabel("pacing multiplier")
        ax_lam.legend(loc="lower right", fontsize=8)

        fig.suptitle(title, fontsize=10)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
