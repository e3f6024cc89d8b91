"""CSV and verdict-file writers shared by the experiment runner.

CSV files use RFC-4180-style quoting with CRLF line endings and one header
row; floats are written with shortest round-trip representation, so a rerun
with the same configuration and seed reproduces every file byte for byte.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest round-trip, plain digits for numpy scalars
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([format_value(v) for v in row])


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def write_verdicts(path: Path, checks: Sequence[CheckResult]) -> bool:
    """Write one PASS/FAIL line per check; returns overall pass."""
    lines = [
        f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}" for c in checks
    ]
    ok = all(c.passed for c in checks)
    lines.append(f"overall: {'PASS' if ok else 'FAIL'}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return ok
