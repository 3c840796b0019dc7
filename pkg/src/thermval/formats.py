"""CSV writers and readers for results, series and plot data.

Floats are written with ``repr`` so files round-trip exactly and repeated
runs produce byte-identical output.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .dsp import Spectrogram
from .sensitivity import SensitivityResult
from .thermal import SimulationResult
from .validation import SIGN_CONVENTION, Diagnosis, ResidualReport


class SeriesFormatError(ValueError):
    pass


def _num(x) -> str:
    return repr(float(x))


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def save_series(path, time, values, name: str = "value", comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = _writer(fh)
        w.writerow(["timestamp", name])
        for t, v in zip(time, values):
            w.writerow([str(t), _num(v)])


def load_series(path, column: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(timestamps, values) from a headered CSV; ``#`` lines are comments.

    The value column defaults to the first one after ``timestamp``.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    if not rows:
        raise SeriesFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if "timestamp" not in header:
        raise SeriesFormatError(f"{path}: missing column: timestamp")
    ti = header.index("timestamp")
    if column is None:
        rest = [i for i in range(len(header)) if i != ti]
        if not rest:
            raise SeriesFormatError(f"{path}: no value column")
        vi = rest[0]
    elif column in header:
        vi = header.index(column)
    else:
        raise SeriesFormatError(f"{path}: missing column: {column}")
    times, vals = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            times.append(np.datetime64(row[ti].strip(), "s"))
            vals.append(float(row[vi]))
        except (IndexError, ValueError) as exc:
            raise SeriesFormatError(f"{path}: data row {lineno - 1}: {exc}") from None
    return np.array(times, dtype="datetime64[s]"), np.array(vals)


def save_simulation(result: SimulationResult, path) -> None:
    zones = list(result.zone_temperature)
    wins = list(result.window_exterior_flux)
    header = (["timestamp"] + [f"t_{z}" for z in zones]
              + [f"{w}_{q}" for w in wins for q in ("incident", "exterior", "transmitted", "power")]
              + ["flag_inconsistent", "flag_low_sun"])
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(header)
        for i, t in enumerate(result.time):
            row = [str(t)] + [_num(result.zone_temperature[z][i]) for z in zones]
            for win in wins:
                row += [_num(result.window_incident_flux[win][i]), _num(result.window_exterior_flux[win][i]),
                        _num(result.window_transmitted_flux[win][i]),
                        _num(result.window_transmitted_power[win][i])]
            row += [int(result.flags["inconsistent"][i]), int(result.flags["low_sun"][i])]
            w.writerow(row)


def save_shares(result: SensitivityResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["rank", "factor", "frequency", "share"])
        freq = dict(zip(result.names, result.frequencies))
        for rank, (name, share) in enumerate(result.ranking(), start=1):
            w.writerow([rank, name, freq[name], _num(share)])
        w.writerow(["", "unattributed", "", _num(result.unattributed)])


def save_shares_per_time(result: SensitivityResult, time, path) -> None:
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["timestamp", "variance"] + result.names)
        for i, t in enumerate(time):
            w.writerow([str(t), _num(result.variance[i])] + [_num(x) for x in result.shares_per_time[i]])


def save_spectrogram(spec: Spectrogram, path) -> None:
    """Long format: one row per (slice, frequency bin)."""
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["slice", "time_h", "frequency_per_h", "magnitude"])
        for i, t in enumerate(spec.times):
            for f, m in zip(spec.frequencies, spec.magnitude[i]):
                w.writerow([i, _num(t), _num(f), _num(m)])


def save_similarity(diag: Diagnosis, path) -> None:
    names = list(diag.per_slice)
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["slice", "time_h"] + names)
        for i, t in enumerate(diag.slice_times):
            w.writerow([i, _num(t)] + [_num(diag.per_slice[n][i]) for n in names])


def save_ranking(diag: Diagnosis, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {SIGN_CONVENTION}; permutation p = {diag.p_value!r}\n")
        w = _writer(fh)
        w.writerow(["rank", "input", "score", "tied"])
        for rank, (name, score) in enumerate(diag.ranking, start=1):
            w.writerow([rank, name, _num(score), int(len(diag.tied) > 1 and name in diag.tied)])


def save_report(rep: ResidualReport, stem) -> tuple[Path, Path]:
    """``<stem>.txt`` for people and ``<stem>.csv`` for tools."""
    stem = Path(stem)
    txt, csv_path = stem.with_suffix(".txt"), stem.with_suffix(".csv")
    txt.write_text(rep.to_text() + "\n")
    with open(csv_path, "w", newline="") as fh:
        fh.write(f"# {SIGN_CONVENTION}\n")
        w = _writer(fh)
        w.writerow(["n", "mean", "std", "band", "fraction_within", "mode", "threshold", "verdict"])
        w.writerow([rep.n, _num(rep.mean), _num(rep.std), _num(rep.band), _num(rep.fraction_within),
                    rep.mode, _num(rep.threshold), rep.verdict])
        w.writerow([])
        w.writerow(["exceedance_start", "exceedance_end"])
        for a, b in rep.exceedances:
            w.writerow([a, b])
    return txt, csv_path
