"""Latency and static-accuracy measurement.

Latency is the phase difference between a reference (robot-reported) and a
test (headset-reported) trace at the known excitation frequency, each
phase taken from a linear least-squares sinusoid fit. Onset and steady
regimes are fitted and reported separately.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSpan, NoData
from .sim import SinusoidSpec, Trace

SPAN_SLACK_S = 2e-6


@dataclass(frozen=True)
class SineFit:
    amplitude: float
    phase: float
    offset: float
    residual_rms: float

    @property
    def low_confidence(self) -> bool:
        return self.amplitude < 10.0 * self.residual_rms


def fit_sinusoid(t, y, frequency: float) -> SineFit:
    """Fit ``y = a sin(wt) + b cos(wt) + c``; phase is ``atan2(b, a)``.

    The sampled span counts one sample interval past the last sample, so
    n uniform samples over exactly one period qualify; a couple of
    microseconds of slack absorb integer-microsecond timestamps.
    """
    t = np.asarray(t, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = t.size
    if n < 3:
        raise InsufficientSpan(f"need at least 3 samples, got {n}")
    span = (t.max() - t.min()) * n / (n - 1)
    if span < (1.0 - 1e-9) / frequency - SPAN_SLACK_S:
        raise InsufficientSpan(f"samples span {span:.4f} s, less than one period")
    w = 2.0 * math.pi * frequency
    # centre time for conditioning; rotate the phase back afterwards
    tc = 0.5 * (t.max() + t.min())
    X = np.column_stack([np.sin(w * (t - tc)), np.cos(w * (t - tc)), np.ones(n)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    a_c, b_c, c = coef
    phase = math.atan2(b_c, a_c) - w * tc
    resid = y - X @ coef
    return SineFit(float(math.hypot(a_c, b_c)), _wrap(phase), float(c),
                   float(np.sqrt(np.mean(resid**2))))


def _wrap(x: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    r = math.fmod(x + math.pi, 2.0 * math.pi)
    if r <= 0.0:
        r += 2.0 * math.pi
    return r - math.pi


@dataclass(frozen=True)
class Window:
    start: float
    stop: float
    closed: bool = False

    def mask(self, t) -> np.ndarray:
        t = np.asarray(t)
        upper = t <= self.stop if self.closed else t < self.stop
        return (t >= self.start) & upper

    def shifted(self, dt: float) -> Window:
        return Window(self.start + dt, self.stop + dt, self.closed)


def _fit_window(trace: Trace, frequency: float, window: Window, column: int = 0) -> SineFit:
    m = window.mask(trace.t)
    return fit_sinusoid(trace.t[m], trace.values[m, column], frequency)


def phase_lag(reference: Trace, test: Trace, frequency: float, window: Window,
              align: bool = True, max_iter: int = 20) -> float:
    """Signed lag of ``test`` behind ``reference`` in ms, in (-T/2, T/2].

    With ``align`` the reference is fitted over the window shifted back by
    the current lag estimate, so both fits see the same stretch of motion.
    That removes the bias from motion starting inside the window; for a
    steady sinusoid it changes nothing.
    """
    w = 2.0 * math.pi * frequency
    phi_test = _fit_window(test, frequency, window).phase
    lag = _wrap(_fit_window(reference, frequency, window).phase - phi_test) / w
    if align:
        for _ in range(max_iter):
            phi_ref = _fit_window(reference, frequency, window.shifted(-lag)).phase
            # phases are absolute in time, so the shift only changes the data used
            new = _wrap(phi_ref - phi_test) / w
            if abs(new - lag) < 1e-12:
                lag = new
                break
            lag = new
    # representative in (-T/2, T/2]
    return _wrap(w * lag) / w * 1000.0


def segment_windows(motion_start: float, period: float, trial_span: float) -> tuple[Window, Window]:
    """Onset is the first period of motion; steady runs from two periods in to the end."""
    if trial_span < 3.0 * period - 1e-12 or trial_span <= motion_start + 2.0 * period:
        raise InsufficientSpan(
            f"trial of {trial_span} s is too short for period {period} s starting at {motion_start} s")
    onset = Window(motion_start, motion_start + period)
    steady = Window(motion_start + 2.0 * period, trial_span, closed=True)
    return onset, steady


def _mean_sd(x) -> tuple[float, float | None]:
    x = np.asarray(x, dtype=float)
    return float(x.mean()), (float(x.std(ddof=1)) if x.size > 1 else None)


@dataclass(frozen=True)
class LatencyReport:
    onset_ms: tuple[float, ...]
    steady_ms: tuple[float, ...]
    onset_mean_ms: float
    onset_sd_ms: float | None
    steady_mean_ms: float
    steady_sd_ms: float | None

    @property
    def n_trials(self) -> int:
        return len(self.onset_ms)

    def summary(self) -> str:
        def sd(v):
            return "undefined (n=1)" if v is None else f"{v:.1f} ms"

        return "\n".join([
            f"latency over {self.n_trials} trial(s)",
            f"  onset  (motion starting from rest): m: {self.onset_mean_ms:.1f} ms, "
            f"sd: {sd(self.onset_sd_ms)}",
            f"  steady (motion underway):           m: {self.steady_mean_ms:.1f} ms, "
            f"sd: {sd(self.steady_sd_ms)}",
        ])

    def rows(self) -> list[list]:
        out = [["trial", "onset_ms", "steady_ms"]]
        for i, (a, b) in enumerate(zip(self.onset_ms, self.steady_ms)):
            out.append([i, repr(a), repr(b)])
        out.append(["mean", repr(self.onset_mean_ms), repr(self.steady_mean_ms)])
        out.append(["sd", "" if self.onset_sd_ms is None else repr(self.onset_sd_ms),
                    "" if self.steady_sd_ms is None else repr(self.steady_sd_ms)])
        return out


def latency_report(trials, spec: SinusoidSpec, trial_span: float | None = None,
                   align: bool = True) -> LatencyReport:
    """Per-trial onset and steady lags, aggregated with the sample (n-1) sd.

    ``trial_span`` defaults to the end of the shorter trace of each pair.
    """
    trials = list(trials)
    if not trials:
        raise NoData("latency report needs at least one trial")
    onset_ms, steady_ms = [], []
    for reference, test in trials:
        span = trial_span if trial_span is not None else min(reference.t[-1], test.t[-1])
        onset, steady = segment_windows(spec.start_time_s, spec.period, span)
        onset_ms.append(phase_lag(reference, test, spec.frequency, onset, align))
        steady_ms.append(phase_lag(reference, test, spec.frequency, steady, align))
    om, osd = _mean_sd(onset_ms)
    sm, ssd = _mean_sd(steady_ms)
    return LatencyReport(tuple(onset_ms), tuple(steady_ms), om, osd, sm, ssd)


@dataclass(frozen=True)
class AccuracyReport:
    errors_m: tuple[float, ...]
    mean_error_m: float
    sd_error_m: float | None

    @property
    def n_points(self) -> int:
        return len(self.errors_m)

    def summary(self) -> str:
        sd = "undefined (n=1)" if self.sd_error_m is None else f"{self.sd_error_m * 100:.2f} cm"
        return (f"static accuracy over {self.n_points} point(s): "
                f"mean error {self.mean_error_m * 100:.2f} cm, sd {sd}")

    def rows(self) -> list[list]:
        out = [["point", "error_m"]]
        out += [[i, repr(e)] for i, e in enumerate(self.errors_m)]
        out.append(["mean", repr(self.mean_error_m)])
        out.append(["sd", "" if self.sd_error_m is None else repr(self.sd_error_m)])
        return out


def static_accuracy(pairs) -> AccuracyReport:
    """Euclidean error per (truth, tracked) pair; sample mean and (n-1) sd."""
    pairs = list(pairs)
    if not pairs:
        raise NoData("no point pairs")
    arr = np.asarray(pairs, dtype=float).reshape(len(pairs), 2, 3)
    err = np.linalg.norm(arr[:, 1] - arr[:, 0], axis=1)
    mean, sd = _mean_sd(err)
    return AccuracyReport(tuple(float(e) for e in err), mean, sd)


def calibrate_noise_sigma(target_mean_error_m: float, n_samples: int = 2_000_000,
                          seed: int = 0) -> float:
    """Per-axis Gaussian sigma whose 3-D error norm has the given mean (Monte Carlo)."""
    rng = np.random.default_rng(seed)
    mean_unit = float(np.linalg.norm(rng.standard_normal((n_samples, 3)), axis=1).mean())
    return target_mean_error_m / mean_unit


def gaussian_error_sigma(target_mean_error_m: float) -> float:
    """Closed form of ``calibrate_noise_sigma``: E|e| = sigma * sqrt(8 / pi)."""
    return target_mean_error_m / math.sqrt(8.0 / math.pi)
