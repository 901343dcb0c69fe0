"""CSV and JSON artifact writers.

CSV follows RFC 4180 (comma separated, CRLF records, header row).  Floats
are written with shortest round-trip formatting, so reading the file back
reproduces the exact binary values.  JSON reports are UTF-8 with sorted
keys, making reruns byte-comparable.
"""

import csv
import json
from pathlib import Path

import numpy as np


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_csv(path):
    """(header, float matrix) for numeric CSVs written by write_csv."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, np.array(rows)


def write_curve_csv(path, curve, etas=None, mus=None) -> None:
    """Columns s, t, x_1..x_D, optionally eta_* and mu_* appended."""
    n, d = curve.x.shape
    s = np.linspace(0.0, 1.0, n)
    header = ["s", "t"] + [f"x_{i + 1}" for i in range(d)]
    cols = [s, curve.t] + [curve.x[:, i] for i in range(d)]
    for name, block in (("eta", etas), ("mu", mus)):
        if block is not None:
            block = np.asarray(block)
            header += [f"{name}_{i + 1}" for i in range(block.shape[1])]
            cols += [block[:, i] for i in range(block.shape[1])]
    write_csv(path, header, zip(*cols))


def write_trace_csv(path, trace, name: str = "energy") -> None:
    write_csv(path, ["step", name], enumerate(trace))


def write_traces_csv(path, traces: dict) -> None:
    """Several equally long traces keyed by column name."""
    names = list(traces)
    cols = [traces[k] for k in names]
    write_csv(path, ["step"] + names, ((i, *vals) for i, vals in enumerate(zip(*cols))))


def write_matrix_csv(path, mat) -> None:
    mat = np.asarray(mat)
    header = [""] + [f"p{j}" for j in range(mat.shape[1])]
    rows = ([f"p{i}"] + [_fmt(v) for v in mat[i]] for i in range(mat.shape[0]))
    write_csv(path, header, rows)


def write_chains_csv(path, chains) -> None:
    """Transition chains: path_id, step, x_1..x_D, geodesic_index."""
    d = chains[0].states.shape[1]
    header = ["path_id", "step"] + [f"x_{i + 1}" for i in range(d)] + ["geodesic_index"]

    def rows():
        for pid, ch in enumerate(chains):
            for k in range(ch.states.shape[0]):
                yield [pid, k, *ch.states[k], int(ch.geodesic_index[k])]

    write_csv(path, header, rows())


def write_trajectory_csv(path, trajectory, row: int = 0) -> None:
    """PF-ODE / SDE trajectory of one batch row: step, t, x_1..x_D."""
    states = trajectory.states[:, row]
    d = states.shape[1]
    header = ["step", "t"] + [f"x_{i + 1}" for i in range(d)]
    write_csv(
        path,
        header,
        ([k, trajectory.times[k], *states[k]] for k in range(states.shape[0])),
    )


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
