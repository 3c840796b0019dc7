"""Butterworth high-pass design, zero-phase filtering, PSD and spectrograms.

Frequencies are in cycles per hour and sample rates in samples per hour;
half-hourly data has ``sample_rate = 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal


class FilterDesignError(ValueError):
    pass


@dataclass(frozen=True)
class Butterworth:
    """Digital high-pass as cascaded second-order sections (scipy ``sos`` layout)."""

    sos: np.ndarray
    order: int
    cutoff: float
    sample_rate: float

    @property
    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots(s[3:]) for s in self.sos])

    def response(self, f) -> np.ndarray:
        """Complex frequency response at ``f`` (1/h)."""
        z = np.exp(1j * 2 * np.pi * np.asarray(f, dtype=float) / self.sample_rate)
        h = np.ones_like(z)
        for b0, b1, b2, a0, a1, a2 in self.sos:
            h = h * (b0 + b1 / z + b2 / z**2) / (a0 + a1 / z + a2 / z**2)
        return h


def butter_highpass(order: int = 4, cutoff: float = 0.02, sample_rate: float = 2.0) -> Butterworth:
    """Analog Butterworth prototype, pre-warped, mapped by the bilinear transform."""
    if order < 1:
        raise FilterDesignError("order must be >= 1")
    if not 0 < cutoff < sample_rate / 2:
        raise FilterDesignError(f"cutoff {cutoff} must lie in (0, Nyquist={sample_rate / 2})")
    fs2 = 2.0 * sample_rate
    wc = fs2 * np.tan(np.pi * cutoff / sample_rate)
    k = np.arange(1, order + 1)
    proto = np.exp(1j * np.pi * (2 * k + order - 1) / (2 * order))
    # low-pass -> high-pass: s -> wc / s moves the zeros to s = 0
    analog = wc / proto
    z_poles = (fs2 + analog) / (fs2 - analog)

    sections = []
    upper = sorted((p for p in z_poles if p.imag > 1e-12), key=lambda p: -abs(p))
    for p in upper:
        b = np.array([1.0, -2.0, 1.0])
        a = np.array([1.0, -2.0 * p.real, abs(p) ** 2])
        sections.append(_unit_at_nyquist(b, a))
    for p in (p for p in z_poles if abs(p.imag) <= 1e-12):
        b = np.array([1.0, -1.0, 0.0])
        a = np.array([1.0, -p.real, 0.0])
        sections.append(_unit_at_nyquist(b, a))
    filt = Butterworth(np.array(sections), order, cutoff, sample_rate)
    if np.any(np.abs(filt.poles) >= 1.0):
        raise FilterDesignError("unstable design: pole on or outside the unit circle")
    return filt


def _unit_at_nyquist(b: np.ndarray, a: np.ndarray) -> np.ndarray:
    alt = np.array([1.0, -1.0, 1.0])
    g = abs(a @ alt) / abs(b @ alt)
    return np.concatenate([g * b, a])


def apply_zero_phase(filt: Butterworth, values, pad: int | None = None) -> np.ndarray:
    """Forward-backward filtering with odd-reflection padding of ``3 * order`` samples."""
    x = np.asarray(values, dtype=float)
    pad = 3 * filt.order if pad is None else pad
    if len(x) <= pad:
        raise ValueError(f"series of length {len(x)} too short for padding {pad}")
    return scipy.signal.sosfiltfilt(filt.sos, x, padtype="odd", padlen=pad)


def psd(values, sample_rate: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
    """One-sided periodogram; the bins sum to the (population) variance.

    Returns ``(frequencies, power)`` with the DC bin excluded.
    """
    x = np.asarray(values, dtype=float)
    n = len(x)
    if n < 8:
        raise ValueError("psd needs at least 8 samples")
    X = np.fft.rfft(x - x.mean())
    p = np.abs(X) ** 2 / n**2
    p[1:] *= 2.0
    if n % 2 == 0:
        p[-1] /= 2.0
    f = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    return f[1:], p[1:]


@dataclass
class Spectrogram:
    magnitude: np.ndarray  # (slices, bins)
    times: np.ndarray  # slice centres, hours from the series start
    frequencies: np.ndarray  # 1/h
    window: str
    window_len: int
    hop: int

    def same_grid(self, other: "Spectrogram") -> bool:
        return (self.magnitude.shape == other.magnitude.shape
                and np.allclose(self.times, other.times)
                and np.allclose(self.frequencies, other.frequencies))


def stft(values, window_len: int = 48, overlap: float = 0.75,
         sample_rate: float = 2.0) -> Spectrogram:
    """Hann-windowed short-time Fourier magnitudes."""
    x = np.asarray(values, dtype=float)
    if not 2 <= window_len <= len(x):
        raise ValueError(f"window_len must lie in [2, {len(x)}]")
    if not 0.0 <= overlap <= 0.95:
        raise ValueError("overlap must lie in [0, 0.95]")
    hop = max(1, int(round(window_len * (1.0 - overlap))))
    starts = np.arange(0, len(x) - window_len + 1, hop)
    w = scipy.signal.windows.hann(window_len, sym=False)
    frames = np.stack([x[s:s + window_len] for s in starts]) * w
    mag = np.abs(np.fft.rfft(frames, axis=1))
    times = (starts + window_len / 2.0) / sample_rate
    freqs = np.fft.rfftfreq(window_len, d=1.0 / sample_rate)
    return Spectrogram(mag, times, freqs, "hann", window_len, hop)


@dataclass
class Similarity:
    per_slice: np.ndarray
    mean: float
    # slices where either column had zero variance (reported as 0)
    degenerate: np.ndarray


def spectrogram_similarity(a: Spectrogram, b: Spectrogram) -> Similarity:
    """Per-slice Pearson correlation between magnitude columns."""
    if not a.same_grid(b):
        raise ValueError("spectrograms are on different time/frequency grids")
    xa = a.magnitude - a.magnitude.mean(axis=1, keepdims=True)
    xb = b.magnitude - b.magnitude.mean(axis=1, keepdims=True)
    num = (xa * xb).sum(axis=1)
    den = np.sqrt((xa**2).sum(axis=1) * (xb**2).sum(axis=1))
    scale = np.maximum(np.abs(a.magnitude).max(axis=1), np.abs(b.magnitude).max(axis=1))
    degenerate = den <= 1e-12 * np.maximum(scale, 1e-300) ** 2
    r = np.where(degenerate, 0.0, num / np.where(degenerate, 1.0, den))
    r = np.clip(r, -1.0, 1.0)
    return Similarity(r, float(r.mean()), degenerate)


def track_similarity(a: Spectrogram, b: Spectrogram) -> float:
    """How alike the two spectrograms evolve over time.

    For each frequency bin, the Pearson correlation of the magnitudes across
    slices; bins are averaged with weights equal to ``a``'s variance over
    time, so bins where ``a`` barely changes contribute little. Bins where
    either series is constant count as 0.
    """
    if not a.same_grid(b):
        raise ValueError("spectrograms are on different time/frequency grids")
    xa = a.magnitude - a.magnitude.mean(axis=0)
    xb = b.magnitude - b.magnitude.mean(axis=0)
    va = (xa**2).sum(axis=0)
    vb = (xb**2).sum(axis=0)
    ok = (va > 0) & (vb > 0)
    if not ok.any():
        return 0.0
    r = np.zeros(len(va))
    r[ok] = (xa * xb).sum(axis=0)[ok] / np.sqrt(va[ok] * vb[ok])
    return float(np.clip((r * va).sum() / va.sum(), -1.0, 1.0))
