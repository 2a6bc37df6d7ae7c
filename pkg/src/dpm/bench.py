"""Convergence tables, error measures and output files for benchmark runs."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .timestepper import RunResult, SolverConfig, run


@dataclass
class ConvergenceRecord:
    dof: int
    error: float
    rate: float | None = None
    active: int | None = None
    seconds: float | None = None


def max_error(numeric: np.ndarray, exact: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Maximum absolute error over the masked nodes."""
    diff = np.abs(np.asarray(numeric) - np.asarray(exact))
    if mask is not None:
        diff = diff[np.asarray(mask, dtype=bool)]
    if diff.size == 0:
        raise ValueError("no nodes to measure")
    return float(np.max(diff))


def rate(prev: tuple[int, float], nxt: tuple[int, float], convention: str = "sqrt") -> float:
    """Observed order between two (DOF, E) rows.

    ``"sqrt"`` measures against the mesh refinement ``sqrt(DOF)``, which is
    how the tabulated rates are normalised; ``"literal"`` uses the plain DOF
    ratio.
    """
    (d0, e0), (d1, e1) = prev, nxt
    if e0 <= 0 or e1 <= 0:
        raise ValueError("errors must be positive")
    if d0 == d1:
        raise ValueError("DOF values must differ")
    ratio = math.log(d1 / d0)
    if convention == "sqrt":
        ratio *= 0.5
    elif convention != "literal":
        raise ValueError(f"unknown rate convention {convention!r}")
    return math.log(e0 / e1) / ratio


def fitted_rate(records: list[ConvergenceRecord]) -> float:
    """Least-squares slope of -log E against log sqrt(DOF)."""
    x = 0.5 * np.log([r.dof for r in records])
    y = np.log([r.error for r in records])
    return float(-np.polyfit(x, y, 1)[0])


def build_records(results: list[RunResult], convention: str = "sqrt") -> list[ConvergenceRecord]:
    out: list[ConvergenceRecord] = []
    for r in results:
        rec = ConvergenceRecord(r.dof, r.error, None, r.active, r.seconds)
        if out:
            rec.rate = rate((out[-1].dof, out[-1].error), (rec.dof, rec.error), convention)
        out.append(rec)
    return out


def emit_table(records: list[ConvergenceRecord], fmt: str = "markdown", label: str = "E") -> str:
    """Render (DOF, E, Rate) rows; E with four significant digits."""
    rows = [
        (str(r.dof), f"{r.error:.4e}", "---" if r.rate is None else f"{r.rate:.2f}", "" if r.active is None else str(r.active))
        for r in records
    ]
    header = ("DOF", label, "Rate", "Active")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(header) + " |", "|" + "---:|" * len(header)]
        lines += ["| " + " | ".join(r) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")


def parse_table(text: str) -> list[ConvergenceRecord]:
    """Inverse of ``emit_table(..., "csv")``."""
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        rate_s = row["Rate"]
        err_key = [k for k in row if k not in ("DOF", "Rate", "Active")][0]
        out.append(ConvergenceRecord(
            int(row["DOF"]), float(row[err_key]), None if rate_s == "---" else float(rate_s),
            int(row["Active"]) if row.get("Active") else None,
        ))
    return out


def run_table(base: SolverConfig, grids, convention: str = "sqrt", on_result=None) -> tuple[list[RunResult], list[ConvergenceRecord]]:
    """Run ``base`` on each grid size and collect the convergence records."""
    results = []
    for n in grids:
        cfg = SolverConfig(**{**base.__dict__, "n": int(n)})
        res = run(cfg)
        results.append(res)
        if on_result is not None:
            on_result(res)
    return results, build_records(results, convention)


def dump_fields(path, result: RunResult) -> None:
    """Final-time solution on every M+ node: (x, y, numeric, exact, error, side)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "numeric", "exact", "error", "side"])
        for side, f in result.fields.items():
            xx, yy = f["grid"].mesh()
            m = f["mask"]
            num, ex = f["numeric"][m], f["exact"][m]
            for xv, yv, a, b in zip(xx[m], yy[m], num, ex):
                w.writerow([f"{xv:.12g}", f"{yv:.12g}", f"{a:.16e}", f"{b:.16e}", f"{abs(a - b):.6e}", side])


def dump_step_errors(path, result: RunResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "t", "max_error", "bep_residual"])
        for s in result.steps:
            w.writerow([s.step, f"{s.t:.12g}", f"{s.error:.6e}", f"{s.residual:.3e}"])


def dump_blocks(path, result: RunResult) -> None:
    """Boundary-equation blocks, stacked, one row per gamma node."""
    if result.blocks is None:
        raise ValueError("run has no assembled boundary equations")
    np.savetxt(path, np.vstack(result.blocks), delimiter=",", fmt="%.16e")
