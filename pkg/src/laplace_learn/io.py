"""Text formats: headerless numeric CSV, 1-based edge lists, key=value reports.

Floats are written with ``repr`` so every value survives a write/read cycle
bit for bit.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from laplace_learn.errors import InvalidInputError
from laplace_learn.graph import Topology


def format_float(x: float) -> str:
    return repr(float(x))


def write_matrix(path, A) -> None:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    lines = [",".join(format_float(x) for x in row) for row in A]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise InvalidInputError(f"{path}:{lineno}: not a numeric CSV row") from exc
    if not rows:
        raise InvalidInputError(f"{path}: empty matrix file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise InvalidInputError(f"{path}: ragged rows")
    return np.array(rows, dtype=float)


def write_edgelist(path, t: Topology, weights=None) -> None:
    if weights is None:
        weights = np.ones(t.m)
    lines = [f"p={t.p}"]
    for (i, j), w in zip(t.edges, np.asarray(weights, dtype=float)):
        lines.append(f"{i + 1} {j + 1} {format_float(w)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_edgelist(path) -> tuple[Topology, np.ndarray]:
    """Parse an edge list into a canonical topology and weights aligned with it."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("p="):
        raise InvalidInputError(f"{path}: first line must be 'p=<int>'")
    try:
        p = int(lines[0][2:])
    except ValueError as exc:
        raise InvalidInputError(f"{path}: bad header {lines[0]!r}") from exc
    pairs, weights = [], {}
    for lineno, ln in enumerate(lines[1:], 2):
        tok = ln.split()
        if len(tok) not in (2, 3):
            raise InvalidInputError(f"{path}:{lineno}: expected 'i j [weight]'")
        try:
            i, j = int(tok[0]) - 1, int(tok[1]) - 1
            w = float(tok[2]) if len(tok) == 3 else 1.0
        except ValueError as exc:
            raise InvalidInputError(f"{path}:{lineno}: {exc}") from exc
        e = (min(i, j), max(i, j))
        pairs.append(e)
        weights[e] = w
    t = Topology(p, tuple(pairs))
    return t, np.array([weights[e] for e in t.edges], dtype=float)


def write_report(path, fields: dict) -> None:
    Path(path).write_text(format_report(fields))


def format_report(fields: dict) -> str:
    out = []
    for k, v in fields.items():
        if isinstance(v, float):
            v = format_float(v) if math.isfinite(v) else str(v)
        out.append(f"{k}={v}")
    return "\n".join(out) + "\n"


def read_report(path) -> dict[str, str]:
    out = {}
    for ln in Path(path).read_text().splitlines():
        if "=" in ln:
            k, v = ln.split("=", 1)
            out[k.strip()] = v.strip()
    return out
