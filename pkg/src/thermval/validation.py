"""Residual statistics, acceptance-band verdicts and time-frequency diagnosis.

Residuals are always ``measured - predicted``: a positive residual means the
model runs cold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dsp import (Spectrogram, apply_zero_phase, butter_highpass, spectrogram_similarity, stft,
                  track_similarity)

SIGN_CONVENTION = "residual = measured - predicted"
MODES = ("strict", "threshold")
SCORES = ("track", "slice")


class AlignmentError(ValueError):
    pass


def residual(measured, predicted, measured_time=None, predicted_time=None) -> np.ndarray:
    """``measured - predicted`` sample by sample."""
    m = np.asarray(measured, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if m.shape != p.shape:
        raise AlignmentError(f"series lengths differ: {m.shape} vs {p.shape}")
    if measured_time is not None and predicted_time is not None:
        if not np.array_equal(np.asarray(measured_time), np.asarray(predicted_time)):
            raise AlignmentError("series are on different time bases")
    return m - p


@dataclass
class ResidualReport:
    mean: float
    std: float
    fraction_within: float
    band: float
    mode: str
    threshold: float
    n: int
    # (first index, last index) of each run of samples outside the band
    exceedances: list[tuple[int, int]] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        if self.mode == "strict":
            return self.fraction_within == 1.0
        return self.fraction_within >= self.threshold

    @property
    def verdict(self) -> str:
        return "accepted" if self.accepted else "rejected"

    def to_text(self) -> str:
        lines = [
            f"# {SIGN_CONVENTION}",
            f"samples          {self.n}",
            f"mean             {self.mean:+.4f} K",
            f"std (n-1)        {self.std:.4f} K",
            f"band             +/-{self.band:g} K",
            f"within band      {100 * self.fraction_within:.1f} %",
            f"mode             {self.mode}" + (f" (threshold {self.threshold:g})" if self.mode == "threshold" else ""),
            f"exceedance runs  {len(self.exceedances)}",
            f"verdict          {self.verdict}",
        ]
        return "\n".join(lines)


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    if not mask.any():
        return []
    edges = np.diff(np.concatenate([[0], mask.astype(int), [0]]))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1) - 1
    return [(int(a), int(b)) for a, b in zip(starts, stops)]


def report(res, band: float = 0.5, mode: str = "threshold", threshold: float = 0.95) -> ResidualReport:
    """Sample mean, sample standard deviation and band compliance of a residual."""
    r = np.asarray(res, dtype=float)
    if r.size == 0:
        raise ValueError("empty residual")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if not band > 0:
        raise ValueError("band must be positive")
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    outside = np.abs(r) > band
    std = float(r.std(ddof=1)) if r.size > 1 else 0.0
    return ResidualReport(float(r.mean()), std, float(1.0 - outside.mean()), band, mode,
                          threshold, int(r.size), _runs(outside))


# ---------------------------------------------------------------------------
# diagnosis


@dataclass
class Diagnosis:
    ranking: list[tuple[str, float]]
    per_slice: dict[str, np.ndarray]
    degenerate: dict[str, np.ndarray]
    residual_spectrogram: Spectrogram
    input_spectrograms: dict[str, Spectrogram]
    # permutation p-value of the top score against circularly shifted residuals
    p_value: float
    # inputs whose score is within ``tie_margin`` of the best
    tied: list[str]

    @property
    def slice_times(self) -> np.ndarray:
        return self.residual_spectrogram.times

    @property
    def culprit(self) -> str | None:
        return self.ranking[0][0] if self.clear else None

    @property
    def clear(self) -> bool:
        return self.p_value < 0.05

    def summary(self) -> str:
        lines = [f"# {SIGN_CONVENTION}", "rank  input                      similarity"]
        for i, (name, score) in enumerate(self.ranking, start=1):
            tag = "  (tie)" if len(self.tied) > 1 and name in self.tied else ""
            lines.append(f"{i:>4}  {name:<26} {score:+.4f}{tag}")
        if self.clear:
            lead = " / ".join(self.tied) if len(self.tied) > 1 else self.ranking[0][0]
            lines.append(f"most likely source: {lead} (permutation p = {self.p_value:.3f})")
        else:
            lines.append(f"no clear culprit (permutation p = {self.p_value:.3f})")
        return "\n".join(lines)


def _score(a: Spectrogram, b: Spectrogram, score: str) -> float:
    return spectrogram_similarity(a, b).mean if score == "slice" else track_similarity(a, b)


def _prepare(values, filt, window_len, overlap, sample_rate) -> Spectrogram:
    return stft(apply_zero_phase(filt, values), window_len, overlap, sample_rate)


def diagnose(res, inputs: dict[str, np.ndarray], sample_rate: float = 2.0, cutoff: float = 0.02,
             order: int = 4, window_len: int = 48, overlap: float = 0.75,
             n_shifts: int = 199, tie_margin: float = 0.05, seed: int = 0,
             score: str = "track") -> Diagnosis:
    """Rank inputs by how closely their spectrogram tracks the residual's.

    Each series is high-passed and turned into a spectrogram. ``score="track"``
    ranks by :func:`track_similarity` (do the band magnitudes rise and fall
    together over time); ``score="slice"`` by the mean per-slice column
    correlation, which mostly compares spectral shape. Per-slice similarities
    are returned either way. The top score is tested against ``n_shifts``
    circular shifts of the residual.
    """
    if score not in SCORES:
        raise ValueError(f"score must be one of {SCORES}")
    r = np.asarray(res, dtype=float)
    if not inputs:
        raise ValueError("no inputs to diagnose")
    for name, x in inputs.items():
        if np.shape(x) != r.shape:
            raise AlignmentError(f"input '{name}' has length {np.shape(x)}, residual {r.shape}")
    filt = butter_highpass(order, cutoff, sample_rate)
    spec_r = _prepare(r, filt, window_len, overlap, sample_rate)
    specs = {k: _prepare(v, filt, window_len, overlap, sample_rate) for k, v in inputs.items()}

    per_slice, degenerate, scores = {}, {}, {}
    for name, s in specs.items():
        sim = spectrogram_similarity(spec_r, s)
        per_slice[name] = sim.per_slice
        degenerate[name] = sim.degenerate
        scores[name] = sim.mean if score == "slice" else track_similarity(spec_r, s)
    ranking = sorted(scores.items(), key=lambda kv: -kv[1])
    best = ranking[0][1]
    tied = [k for k, v in ranking if best - v <= tie_margin]

    # null distribution: best score any input reaches against a shifted residual
    rng = np.random.default_rng(seed)
    n = len(r)
    lo = max(1, window_len)
    shifts = rng.integers(lo, max(lo + 1, n - lo), size=n_shifts)
    filtered_r = apply_zero_phase(filt, r)
    null = np.empty(n_shifts)
    for i, sh in enumerate(shifts):
        sr = stft(np.roll(filtered_r, sh), window_len, overlap, sample_rate)
        null[i] = max(_score(sr, s, score) for s in specs.values())
    p_value = float((1 + np.sum(null >= best)) / (n_shifts + 1))
    return Diagnosis(ranking, per_slice, degenerate, spec_r, specs, p_value, tied)
