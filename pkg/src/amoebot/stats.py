"""Batch summaries of run metrics as plain CSV."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from typing import Iterable

COLUMNS = (
    "dim", "mode", "policy", "runs", "n_min", "n_max",
    "max_rounds_minus_n", "rounds_le_n_plus_1", "erosions_eq_n_minus_1", "one_leader",
    "rule1", "rule2", "rule3", "violations",
)


def summarize(metrics: Iterable[dict]) -> list[dict]:
    groups = defaultdict(list)
    for m in metrics:
        groups[(m["dim"], m["mode"], m["policy"])].append(m)
    rows = []
    for (dim, mode, policy), ms in sorted(groups.items()):
        rows.append(
            {
                "dim": dim,
                "mode": mode,
                "policy": policy,
                "runs": len(ms),
                "n_min": min(m["n"] for m in ms),
                "n_max": max(m["n"] for m in ms),
                "max_rounds_minus_n": max(m["rounds"] - m["n"] for m in ms),
                "rounds_le_n_plus_1": all(m["rounds"] <= m["n"] + 1 for m in ms),
                "erosions_eq_n_minus_1": all(m["erosions"] == m["n"] - 1 for m in ms),
                "one_leader": all(m["leaders"] == 1 for m in ms),
                "rule1": sum(m["rule1"] for m in ms),
                "rule2": sum(m["rule2"] for m in ms),
                "rule3": sum(m["rule3"] for m in ms),
                "violations": sum(m["violations"] for m in ms),
            }
        )
    return rows


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()
