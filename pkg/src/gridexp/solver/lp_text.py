"""Debug dump of a StandardFormMP as LP-format text.

Grammar (a strict subset of the common LP file format, so external solvers
can cross-check a model):

    \\ <model name>
    Minimize
     obj: <coef> <col> [+|- <coef> <col> ...]
    Subject To
     <row name>: <terms> <=|=|>= <rhs>
    Bounds
     <lb> <= <col> <= <ub>      (one line per column; 'free' when unbounded)
    Generals
     <col> ...                   (integer columns, if any)
    End

Column and row names are emitted verbatim; callers must keep them free of
whitespace for the dump to stay parseable.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .standard_form import EQ, GE, LE, RANGE, StandardFormMP

_SENSE_TEXT = {LE: "<=", EQ: "=", GE: ">="}


def _terms(pairs: list[tuple[str, float]]) -> str:
    parts = []
    for name, coef in pairs:
        if not parts:
            parts.append(f"{coef!r} {name}")
        elif coef < 0:
            parts.append(f"- {-coef!r} {name}")
        else:
            parts.append(f"+ {coef!r} {name}")
    return " ".join(parts) if parts else "0 __zero__"


def write_lp_text(mp: StandardFormMP, path: str | Path) -> None:
    rows, cols, vals = mp.triplets()
    by_row: list[list[tuple[str, float]]] = [[] for _ in range(mp.n_rows)]
    for r, c, v in zip(rows, cols, vals):
        by_row[r].append((mp.col_names[c], float(v)))
    lines = [f"\\ {mp.name}", "Minimize"]
    obj_pairs = [(mp.col_names[j], float(mp.obj[j]))
                 for j in range(mp.n_cols) if mp.obj[j] != 0.0]
    lines.append(f" obj: {_terms(obj_pairs)}")
    lines.append("Subject To")
    for i in range(mp.n_rows):
        if mp.senses[i] == RANGE:
            # Ranged rows dump as an explicit pair for maximum portability.
            lines.append(f" {mp.row_names[i]}_hi: {_terms(by_row[i])} <= {mp.rhs[i]!r}")
            lines.append(f" {mp.row_names[i]}_lo: {_terms(by_row[i])} >= {mp.range_lo[i]!r}")
        else:
            lines.append(
                f" {mp.row_names[i]}: {_terms(by_row[i])} {_SENSE_TEXT[mp.senses[i]]} {mp.rhs[i]!r}")
    lines.append("Bounds")
    for j in range(mp.n_cols):
        lo, hi = mp.lb[j], mp.ub[j]
        name = mp.col_names[j]
        if np.isinf(lo) and np.isinf(hi):
            lines.append(f" {name} free")
        elif np.isinf(hi):
            lines.append(f" {lo!r} <= {name}")
        elif np.isinf(lo):
            lines.append(f" {name} <= {hi!r}")
        else:
            lines.append(f" {lo!r} <= {name} <= {hi!r}")
    generals = [mp.col_names[j] for j in range(mp.n_cols) if mp.integral[j]]
    if generals:
        lines.append("Generals")
        lines.append(" " + " ".join(generals))
    lines.append("End")
    Path(path).write_text("\n".join(lines) + "\n")
