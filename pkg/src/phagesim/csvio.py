"""CSV emission: full-precision, header always present, LF line endings."""

import csv

import numpy as np

from .errors import PhagesimError


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(header, rows, path):
    """Write a table; numeric cells carry 17 significant digits."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise PhagesimError(f"cannot write {path}: {exc}") from exc


def trajectory_rows(traj, dense_dt=None):
    """(t, S, I, Q) rows at node resolution, optionally resampled at dense_dt."""
    if dense_dt is None:
        for t, y in zip(traj.times, traj.states):
            yield (t, *y)
    else:
        t = traj.t0
        while t <= traj.t_end + 1e-12:
            yield (min(t, traj.t_end), *traj.eval(min(t, traj.t_end)))
            t += dense_dt


def write_trajectory(traj, path, dense_dt=None):
    header = ["t", "S", "I", "Q"] if traj.dim == 3 else ["t", "S", "Q"]
    write_csv(header, trajectory_rows(traj, dense_dt), path)


def write_ensemble(stats, path):
    header = ["t", "mean_S", "mean_I", "mean_Q", "dev_p50", "dev_p95"]
    rows = (
        (t, m[0], m[1], m[2], p50, p95)
        for t, m, p50, p95 in zip(stats.times, stats.mean, stats.dev_p50, stats.dev_p95)
    )
    write_csv(header, rows, path)


def write_concentration(table, path):
    header = ["eps", "rho", "t_lo", "t_hi", "n", "exceed", "p_hat", "ci_lo", "ci_hi"]
    rows = (
        (r.eps, r.rho, r.t_lo, r.t_hi, r.n, r.exceed, r.p_hat, r.ci_lo, r.ci_hi)
        for r in table.rows
    )
    write_csv(header, rows, path)


def read_csv(path):
    """Read back a numeric CSV as (header, float array); used by round-trip checks."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, np.array(rows) if rows else np.empty((0, len(header)))
