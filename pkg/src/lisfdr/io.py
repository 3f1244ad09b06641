"""Plain-text file formats.

Inputs are tab-separated (edges, statistics) or ``key = value`` lines
(parameters, scenarios); ``#`` starts a comment line everywhere. Every file
written here starts with a comment header naming the tool version, the
subcommand, the seed and the resolved configuration hash.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .graph import EdgeClass, R2Record
from .model import EmissionParams, ModelParams

__version__ = "0.1.0"

PARAM_KEYS = ("phi.high", "phi.medium", "phi.low", "phi.default", "bias", "mu1", "sigma1")


class FormatError(ValueError):
    """A malformed input file; ``line`` is 1-based when known."""

    def __init__(self, path, message: str, line: int | None = None):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


def header_lines(subcommand: str, seed: int, config_hash: str) -> list[str]:
    return [
        f"# lisfdr {__version__}",
        f"# subcommand: {subcommand}",
        f"# seed: {seed}",
        f"# config: {config_hash}",
    ]


def _data_lines(path):
    """(line number, tab-split fields) for non-blank, non-comment lines."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise FormatError(path, str(exc)) from exc
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        yield n, [f.strip() for f in s.split("\t")]


def _is_header(fields) -> bool:
    try:
        int(fields[0])
    except ValueError:
        return True
    return False


def read_edge_file(path) -> tuple[list[R2Record], int]:
    """``i<TAB>j<TAB>r2`` records; the node count is 1 + the largest id seen."""
    recs = []
    m = 0
    first = True
    for n, f in _data_lines(path):
        if first and _is_header(f):
            first = False
            continue
        first = False
        if len(f) < 2:
            raise FormatError(path, "expected i<TAB>j[<TAB>r2]", n)
        try:
            i, j = int(f[0]), int(f[1])
            r2 = float(f[2]) if len(f) > 2 and f[2] else 1.0
        except ValueError as exc:
            raise FormatError(path, str(exc), n) from exc
        if i < 0 or j < 0:
            raise FormatError(path, "node ids must be non-negative", n)
        if i == j:
            raise FormatError(path, "self-loop", n)
        if not 0.0 <= r2 <= 1.0:
            raise FormatError(path, f"r2 {r2} outside [0, 1]", n)
        recs.append(R2Record(i, j, r2))
        m = max(m, i + 1, j + 1)
    return recs, m


def read_stats_file(path) -> tuple[np.ndarray, np.ndarray | None]:
    """``id<TAB>x[<TAB>truth]``; ids must be exactly 0..m-1 (any order)."""
    ids, xs, truth = [], [], []
    first = True
    for n, f in _data_lines(path):
        if first and _is_header(f):
            first = False
            continue
        first = False
        if len(f) < 2:
            raise FormatError(path, "expected id<TAB>x[<TAB>truth]", n)
        try:
            ids.append(int(f[0]))
            xs.append(float(f[1]))
            if len(f) > 2 and f[2]:
                truth.append(int(f[2]))
        except ValueError as exc:
            raise FormatError(path, str(exc), n) from exc
        if not math.isfinite(xs[-1]):
            raise FormatError(path, "statistic is not finite", n)
    if not ids:
        raise FormatError(path, "no statistics")
    m = len(ids)
    if sorted(ids) != list(range(m)):
        raise FormatError(path, "ids must be 0..m-1 without gaps or repeats")
    if truth and len(truth) != m:
        raise FormatError(path, "truth column present on some lines only")
    order = np.argsort(ids)
    x = np.asarray(xs)[order]
    t = np.asarray(truth, dtype=np.int8)[order] if truth else None
    if t is not None and not np.all((t == 0) | (t == 1)):
        raise FormatError(path, "truth must be 0 or 1")
    return x, t


def write_stats_file(path, x, truth=None, header=()) -> None:
    with open(path, "w") as fh:
        for h in header:
            fh.write(h + "\n")
        for i, v in enumerate(np.asarray(x, dtype=float)):
            if truth is None:
                fh.write(f"{i}\t{float(v)!r}\n")
            else:
                fh.write(f"{i}\t{float(v)!r}\t{int(truth[i])}\n")


def write_edge_file(path, records, header=()) -> None:
    with open(path, "w") as fh:
        for h in header:
            fh.write(h + "\n")
        fh.write("i\tj\tr2\n")
        for r in records:
            fh.write(f"{r.i}\t{r.j}\t{float(r.r2)!r}\n")


def read_key_values(path) -> dict:
    """``key = value`` lines; later keys override earlier ones."""
    path = Path(path)
    out = {}
    for n, line in enumerate(path.read_text().splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise FormatError(path, "expected key = value", n)
        key, value = s.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def read_params_file(path) -> ModelParams:
    kv = read_key_values(path)
    unknown = set(kv) - set(PARAM_KEYS)
    if unknown:
        raise FormatError(path, f"unknown keys {sorted(unknown)}")
    try:
        vals = {k: float(v) for k, v in kv.items()}
    except ValueError as exc:
        raise FormatError(path, str(exc)) from exc
    phi = {EdgeClass.from_key(k.split(".", 1)[1]): v for k, v in vals.items() if k.startswith("phi.")}
    sigma1 = vals.get("sigma1", 1.0)
    if not sigma1 > 0:
        raise FormatError(path, "sigma1 must be positive")
    return ModelParams(phi, vals.get("bias", 0.0), EmissionParams(vals.get("mu1", 2.0), sigma1))


def write_params_file(path, params: ModelParams, header=()) -> None:
    with open(path, "w") as fh:
        for h in header:
            fh.write(h + "\n")
        for c in EdgeClass:
            if c in params.phi:
                fh.write(f"phi.{c.key} = {float(params.phi[c])!r}\n")
        fh.write(f"bias = {float(params.h)!r}\n")
        fh.write(f"mu1 = {float(params.psi.mu1)!r}\n")
        fh.write(f"sigma1 = {float(params.psi.sigma1)!r}\n")


def write_decision_file(path, scores, decision, header=()) -> None:
    ranks = decision.ranks()
    with open(path, "w") as fh:
        for h in header:
            fh.write(h + "\n")
        fh.write("id\tscore\trank\trejected\n")
        for i, s in enumerate(np.asarray(scores, dtype=float)):
            fh.write(f"{i}\t{float(s)!r}\t{ranks[i]}\t{int(decision.rejected[i])}\n")


def write_scores_file(path, scores, header=()) -> None:
    with open(path, "w") as fh:
        for h in header:
            fh.write(h + "\n")
        fh.write("id\tlis\n")
        for i, s in enumerate(np.asarray(scores, dtype=float)):
            fh.write(f"{i}\t{float(s)!r}\n")


def write_csv(path, fieldnames, rows, header=()) -> None:
    with open(path, "w", newline="") as fh:
        for h in header:
            fh.write(h + "\n")
        w = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_replication_file(path, truth, scores: dict, header=()) -> None:
    """One row per hypothesis: id, truth, then one score column per procedure."""
    procs = list(scores)
    with open(path, "w") as fh:
        for h in header:
            fh.write(h + "\n")
        fh.write("\t".join(["id", "truth", *procs]) + "\n")
        for i in range(len(truth)):
            cells = [str(i), str(int(truth[i]))] + [repr(float(scores[p][i])) for p in procs]
            fh.write("\t".join(cells) + "\n")


def read_replication_file(path) -> tuple[np.ndarray, dict]:
    rows = [ln.rstrip("\n").split("\t") for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    if not rows or rows[0][:2] != ["id", "truth"]:
        raise FormatError(path, "expected an id/truth header")
    procs = rows[0][2:]
    body = rows[1:]
    truth = np.array([int(r[1]) for r in body], dtype=np.int8)
    scores = {p: np.array([float(r[2 + k]) for r in body]) for k, p in enumerate(procs)}
    return truth, scores
