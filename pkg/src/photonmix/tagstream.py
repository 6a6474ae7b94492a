"""Detector time-tag ingestion and photon-correlation histograms.

Timestamps are integer picoseconds throughout, so histogram construction and
chunk merging are bit-exact and reproducible.  Coincidences are counted by a
bounded two-pointer sweep over the sorted streams (no FFT correlators): for
every ordered pair of records (i on channel A, j on channel B) the delay
``t_j - t_i`` is assigned to the bin whose center is the nearest multiple of
the bin width, and pairs beyond ``tau_max`` are ignored.  Zero-delay peak
areas normalized by the mean uncorrelated peak area at multiples of the
pulse period give g2(0).
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DataFormatError,
    InvalidParameterError,
    UndefinedCorrelationError,
)

DEFAULT_CHANNELS = frozenset({1, 2, 3})

#: Upper bound on simultaneously materialized candidate pairs per chunk.
_PAIR_CHUNK = 4_000_000


@dataclass(frozen=True)
class TagStream:
    """Time-ordered detector records: channel ids and integer-ps timestamps."""

    channels: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        ch = np.asarray(self.channels, dtype=np.int64)
        t = np.asarray(self.times, dtype=np.int64)
        if ch.shape != t.shape or ch.ndim != 1:
            raise InvalidParameterError("channels and times must be equal-length 1-D arrays")
        if t.size > 1 and np.any(np.diff(t) < 0):
            raise InvalidParameterError("timestamps must be non-decreasing")
        object.__setattr__(self, "channels", ch)
        object.__setattr__(self, "times", t)

    def __len__(self) -> int:
        return self.times.size

    @classmethod
    def from_unsorted(cls, channels, times) -> "TagStream":
        """Stable-sort records by timestamp (equal timestamps keep input order)."""
        t = np.asarray(times, dtype=np.int64)
        order = np.argsort(t, kind="stable")
        return cls(np.asarray(channels, dtype=np.int64)[order], t[order])


@dataclass(frozen=True)
class CorrelationHistogram:
    """Binned coincidence counts over delays in [-tau_max, tau_max].

    Bin k (center ``k * bin_width``) covers delays with
    ``floor((2 tau + bin_width) / (2 bin_width)) == k``; the bin count
    ``2 * tau_max / bin_width + 1`` is odd and centered on zero delay.
    """

    bin_width: int
    tau_max: int
    counts: np.ndarray
    channel_pair: tuple[int, int]
    rep_period: int | None = None

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.size != 2 * (self.tau_max // self.bin_width) + 1:
            raise InvalidParameterError("counts length does not match tau_max / bin_width")
        object.__setattr__(self, "counts", counts)

    @property
    def centers(self) -> np.ndarray:
        k = self.tau_max // self.bin_width
        return np.arange(-k, k + 1, dtype=np.int64) * self.bin_width

    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class G2Result:
    """Normalized zero-delay correlation with Poisson statistics."""

    value: float
    stat_err: float
    peak_area_0: int
    side_mean: float
    window_ps: int
    n_side_peaks: int

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "stat_err": self.stat_err,
            "peak_area_0": self.peak_area_0,
            "side_mean": self.side_mean,
            "window_ps": self.window_ps,
            "n_side_peaks": self.n_side_peaks,
        }


def _as_text_lines(source):
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, bytes):
        data = source
    elif hasattr(source, "read"):
        data = source.read()
        if isinstance(data, str):
            data = data.encode("utf-8")
    else:
        raise InvalidParameterError(f"unsupported tag source {type(source)!r}")
    return io.TextIOWrapper(io.BytesIO(data), encoding="utf-8")


def parse_tags(
    source,
    fmt: str = "csv",
    reorder_window: int = 0,
    channel_set=DEFAULT_CHANNELS,
) -> TagStream:
    """Parse ``channel,t_ps`` lines into a sorted TagStream.

    Records may arrive out of order by at most ``reorder_window`` ps (a
    larger backward jump is a format error); sorting is stable so equal
    timestamps keep file order.
    """
    if fmt != "csv":
        raise InvalidParameterError(f"unsupported tag format {fmt!r}")
    channels: list[int] = []
    times: list[int] = []
    running_max = None
    for lineno, raw in enumerate(_as_text_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        cols = line.split(",")
        if len(cols) != 2:
            raise DataFormatError(f"expected 'channel,t_ps', got {line!r}", line=lineno)
        try:
            ch = int(cols[0])
            t = int(cols[1])
        except ValueError:
            raise DataFormatError(f"non-integer field in {line!r}", line=lineno) from None
        if ch not in channel_set:
            raise DataFormatError(f"unknown channel {ch}", line=lineno)
        if running_max is not None and t < running_max - reorder_window:
            raise DataFormatError(
                f"timestamp {t} precedes the running maximum {running_max} by more "
                f"than the reorder window ({reorder_window} ps)",
                line=lineno,
            )
        running_max = t if running_max is None else max(running_max, t)
        channels.append(ch)
        times.append(t)
    return TagStream.from_unsorted(np.array(channels, dtype=np.int64), np.array(times, dtype=np.int64))


def _bin_index(tau: np.ndarray, bin_width: int) -> np.ndarray:
    # floor((tau + w/2) / w) in exact integer arithmetic, valid for odd widths
    return (2 * tau + bin_width) // (2 * bin_width)


def build_histogram(
    stream: TagStream,
    pair: tuple[int, int],
    bin_width: int,
    tau_max: int,
    rep_period: int | None = None,
    a_index_range: tuple[int, int] | None = None,
) -> CorrelationHistogram:
    """Count delays t_B - t_A between channel pair records into centered bins.

    For an auto-correlation pass ``pair = (ch, ch)``; a record is never paired
    with itself, while distinct records with equal timestamps contribute to
    the zero-delay bin in both orders.  ``a_index_range`` restricts the A-side
    to a half-open slice of its records, so a partition of the A side yields
    partial histograms whose sum is bit-exactly the full histogram.
    """
    if bin_width < 1 or tau_max < 1:
        raise InvalidParameterError("bin_width and tau_max must be positive integers")
    if tau_max % bin_width != 0:
        raise InvalidParameterError(
            f"bin_width {bin_width} must divide tau_max {tau_max}"
        )
    ch_a, ch_b = pair
    k_max = tau_max // bin_width
    n_bins = 2 * k_max + 1
    counts = np.zeros(n_bins, dtype=np.int64)

    idx_a = np.flatnonzero(stream.channels == ch_a)
    idx_b = idx_a if ch_a == ch_b else np.flatnonzero(stream.channels == ch_b)
    t_a_all = stream.times[idx_a]
    t_b = stream.times[idx_b]
    if a_index_range is not None:
        start, stop = a_index_range
        if not 0 <= start <= stop <= t_a_all.size:
            raise InvalidParameterError(
                f"a_index_range {a_index_range} outside [0, {t_a_all.size}]"
            )
        a_slice = slice(start, stop)
    else:
        a_slice = slice(0, t_a_all.size)
    t_a = t_a_all[a_slice]
    a_global = idx_a[a_slice]
    if t_a.size == 0 or t_b.size == 0:
        return CorrelationHistogram(bin_width, tau_max, counts, (ch_a, ch_b), rep_period)

    pad = tau_max + bin_width
    lo = np.searchsorted(t_b, t_a - pad, side="left")
    hi = np.searchsorted(t_b, t_a + pad, side="right")
    per_a = hi - lo
    boundaries = _chunk_boundaries(per_a, _PAIR_CHUNK)
    same_channel = ch_a == ch_b
    for c0, c1 in boundaries:
        n_pairs = int(per_a[c0:c1].sum())
        if n_pairs == 0:
            continue
        local = np.repeat(np.arange(c0, c1), per_a[c0:c1])
        offsets = np.arange(n_pairs) - np.repeat(
            np.cumsum(per_a[c0:c1]) - per_a[c0:c1], per_a[c0:c1]
        )
        b_idx = lo[local] + offsets
        tau = t_b[b_idx] - t_a[local]
        k = _bin_index(tau, bin_width)
        valid = np.abs(k) <= k_max
        if same_channel:
            valid &= idx_b[b_idx] != a_global[local]
        counts += np.bincount((k[valid] + k_max).astype(np.int64), minlength=n_bins)
    return CorrelationHistogram(bin_width, tau_max, counts, (ch_a, ch_b), rep_period)


def _chunk_boundaries(per_a: np.ndarray, budget: int) -> list[tuple[int, int]]:
    boundaries = []
    start = 0
    acc = 0
    for i, n in enumerate(per_a):
        acc += int(n)
        if acc >= budget:
            boundaries.append((start, i + 1))
            start = i + 1
            acc = 0
    if start < per_a.size:
        boundaries.append((start, per_a.size))
    return boundaries


def merge_histograms(parts) -> CorrelationHistogram:
    """Sum compatible partial histograms (associative, bit-exact)."""
    parts = list(parts)
    if not parts:
        raise InvalidParameterError("no histograms to merge")
    first = parts[0]
    counts = np.zeros_like(first.counts)
    for h in parts:
        if (
            h.bin_width != first.bin_width
            or h.tau_max != first.tau_max
            or h.channel_pair != first.channel_pair
            or h.rep_period != first.rep_period
        ):
            raise InvalidParameterError("histograms have incompatible parameters")
        counts = counts + h.counts
    return CorrelationHistogram(
        first.bin_width, first.tau_max, counts, first.channel_pair, first.rep_period
    )


def default_window(rep_period: int, bin_width: int) -> int:
    """Largest bin multiple not exceeding half the pulse period (strictly less)."""
    window = (rep_period // 2 // bin_width) * bin_width
    if 2 * window >= rep_period:
        window -= bin_width
    if window < bin_width:
        raise InvalidParameterError(
            f"bin_width {bin_width} too coarse for rep_period {rep_period}"
        )
    return window


def g2_zero(
    hist: CorrelationHistogram,
    window: int | None = None,
    n_side_peaks: int = 10,
) -> G2Result:
    """Zero-delay peak area over the mean uncorrelated peak area.

    The central area sums bins whose centers satisfy |tau| <= window/2; side
    areas use identical windows around ``k * rep_period`` for k = 1..n/2 on
    each side.  The statistical uncertainty propagates Poisson fluctuations
    of the central area and of the total side-peak area.
    """
    if hist.rep_period is None or hist.rep_period <= 0:
        raise InvalidParameterError("histogram carries no repetition period")
    rep = hist.rep_period
    if window is None:
        window = default_window(rep, hist.bin_width)
    if window <= 0 or 2 * window >= rep:
        raise InvalidParameterError(
            f"window must satisfy 0 < window < rep_period / 2, got {window}"
        )
    if n_side_peaks < 2 or n_side_peaks % 2 != 0:
        raise InvalidParameterError("n_side_peaks must be an even count >= 2")
    half = n_side_peaks // 2
    centers = hist.centers
    if half * rep + window // 2 > hist.tau_max:
        raise InvalidParameterError(
            f"histogram range {hist.tau_max} ps too small for {half} side peaks "
            f"at rep_period {rep} ps"
        )

    def area(center: int) -> int:
        sel = 2 * np.abs(centers - center) <= window
        return int(hist.counts[sel].sum())

    peak0 = area(0)
    side_areas = [area(m * rep) for m in range(1, half + 1)]
    side_areas += [area(-m * rep) for m in range(1, half + 1)]
    side_total = sum(side_areas)
    if side_total == 0:
        raise UndefinedCorrelationError("all side peaks are empty: cannot normalize")
    side_mean = side_total / n_side_peaks
    value = peak0 / side_mean
    stat_err = value * np.sqrt((1.0 / peak0 if peak0 > 0 else 0.0) + 1.0 / side_total)
    return G2Result(
        value=value,
        stat_err=float(stat_err),
        peak_area_0=peak0,
        side_mean=side_mean,
        window_ps=window,
        n_side_peaks=n_side_peaks,
    )


def visibility_from_histograms(par: G2Result, perp: G2Result) -> tuple[float, float]:
    """Interference visibility (g_perp - g_par) / g_perp with propagated error."""
    if perp.value <= 0.0:
        raise UndefinedCorrelationError("orthogonal-polarization g2 must be positive")
    v = (perp.value - par.value) / perp.value
    err = np.hypot(par.stat_err / perp.value, par.value * perp.stat_err / perp.value**2)
    return float(v), float(err)


def write_histogram_csv(hist: CorrelationHistogram, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("tau_ps,counts\n")
        for c, n in zip(hist.centers, hist.counts):
            fh.write(f"{int(c)},{int(n)}\n")
