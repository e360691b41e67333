"""Benchmark table: CSV is canonical, the text view is derived from rows."""
import csv
import logging
from collections import OrderedDict
from typing import Dict, List, Tuple

import numpy as np

from ..common.errors import IoError
from ..common.models import BenchRow, SolveStatus
from ..common.utils import format_duration, format_sci

logger = logging.getLogger(__name__)

COLUMNS = list(BenchRow.model_fields)


def aggregate_rows(rows: List[BenchRow]) -> List[BenchRow]:
    """One mean row per (problem, size, method), in first-seen order."""
    groups: Dict[Tuple, List[BenchRow]] = OrderedDict()
    for row in rows:
        if not row.aggregate:
            groups.setdefault((row.problem, row.size, row.method), []).append(row)

    aggregates = []
    for (problem, size, method), members in groups.items():
        solved = [r for r in members if r.status != SolveStatus.FAILED]
        converged = all(r.status == SolveStatus.CONVERGED for r in members)
        mean = lambda attr: float(np.mean([getattr(r, attr) for r in solved])) if solved else float("nan")
        aggregates.append(
            BenchRow(
                instance_id=f"mean[{size}]",
                problem=problem,
                method=method,
                size=size,
                res=mean("res"),
                outer_iterations=int(round(mean("outer_iterations"))) if solved else 0,
                inner_iterations=int(round(mean("inner_iterations"))) if solved else 0,
                time=mean("time"),
                status=SolveStatus.CONVERGED if converged else SolveStatus.MAX_ITERATIONS,
                primal=mean("primal"),
                dual=mean("dual"),
                complementarity=mean("complementarity"),
                gap=mean("gap"),
                warmstart_time=mean("warmstart_time"),
                rho=members[0].rho,
                tau=members[0].tau,
                sigma_max=members[0].sigma_max,
                aggregate=True,
                error=f"{len(members) - len(solved)} failed" if len(solved) < len(members) else "",
            )
        )
    return aggregates


def write_csv(rows: List[BenchRow], path: str) -> None:
    try:
        with open(path, "w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=COLUMNS)
            writer.writeheader()
            for row in rows:
                writer.writerow(row.model_dump(mode="json"))
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e
    logger.info(f"Wrote {len(rows)} rows to {path}")


def read_csv(path: str) -> List[BenchRow]:
    try:
        with open(path, newline="") as handle:
            records = list(csv.DictReader(handle))
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e
    rows = []
    for record in records:
        cleaned = {key: value for key, value in record.items() if value not in ("", None)}
        cleaned["aggregate"] = cleaned.get("aggregate", "False") in ("True", "true", "1")
        rows.append(BenchRow.model_validate(cleaned))
    return rows


def render_table(rows: List[BenchRow]) -> str:
    """Fixed-width view: res, outer (inner) iterations and time per row."""
    header = f"{'instance':<34} {'method':<20} {'res':>9} {'#outer(inner)':>14} {'time':>12}  status"
    lines = [header, "-" * len(header)]
    for row in rows:
        iterations = f"{row.outer_iterations} ({row.inner_iterations})"
        lines.append(
            f"{row.instance_id:<34} {row.method.value:<20} {format_sci(row.res):>9} "
            f"{iterations:>14} {format_duration(row.time):>12}  {row.status.value}"
            + (f"  [{row.error}]" if row.error else "")
        )
    return "\n".join(lines)
