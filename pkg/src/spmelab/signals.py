"""Driving signals z^(k) sampled on uniform time grids.

A ``Signal`` holds N channels on the grid ``t_j = sign * j * dt``.  ``sign``
is -1 for paths stored on a backward half-line (t <= 0), which is how the
attractor experiments consume them.  Every channel starts at exactly 0.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import InvalidArgument

KINDS = ("brownian", "fbm", "linear-drift", "constant", "custom")


@dataclass(frozen=True)
class Channel:
    kind: str
    hurst: float | None = None
    rate: float | None = None
    fallback: bool = False

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown channel kind {self.kind!r}")
        if self.kind == "fbm" and not (self.hurst is not None and 0.0 < self.hurst < 1.0):
            raise InvalidArgument(f"Hurst parameter must lie in (0,1), got {self.hurst}")

    def describe(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.hurst is not None:
            out["H"] = self.hurst
        if self.rate is not None:
            out["rate"] = self.rate
        if self.fallback:
            out["fallback"] = "cholesky"
        return out


@dataclass(frozen=True, eq=False)
class Signal:
    dt: float
    values: np.ndarray = field(repr=False)
    channels: tuple[Channel, ...]
    seed: int | None = None
    sign: int = 1

    def __post_init__(self) -> None:
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", vals)
        vals.setflags(write=False)
        if not self.dt > 0:
            raise InvalidArgument(f"dt must be positive, got {self.dt}")
        if vals.shape[0] != len(self.channels):
            raise InvalidArgument("one channel descriptor per row of values is required")
        if vals.shape[1] < 2:
            raise InvalidArgument("a signal needs at least two samples")
        if np.any(vals[:, 0] != 0.0):
            raise InvalidArgument("every channel must start at z_0 = 0")
        if self.sign not in (1, -1):
            raise InvalidArgument("sign must be +1 or -1")

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]

    @property
    def horizon(self) -> float:
        """Length of the time window."""
        return self.dt * (self.n_samples - 1)

    @property
    def times(self) -> np.ndarray:
        return self.sign * self.dt * np.arange(self.n_samples)

    @property
    def window(self) -> tuple[float, float]:
        return (0.0, self.horizon) if self.sign > 0 else (-self.horizon, 0.0)

    def _positions(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        s = self.sign * t
        if np.any(s < -1e-12 * max(1.0, self.horizon)) or np.any(s > self.horizon * (1 + 1e-12) + 1e-15):
            raise InvalidArgument(f"time outside signal window {self.window}")
        return np.clip(s / self.dt, 0.0, self.n_samples - 1)

    def value(self, t) -> np.ndarray:
        """Channel values at time(s) t by linear interpolation; shape t.shape + (N,)."""
        pos = self._positions(t)
        j = np.minimum(np.floor(pos).astype(int), self.n_samples - 2)
        w = pos - j
        out = (1.0 - w)[..., None] * self.values[:, j].T.reshape(pos.shape + (-1,)) + w[..., None] * self.values[
            :, j + 1
        ].T.reshape(pos.shape + (-1,))
        return out

    def scaled(self, a: float) -> "Signal":
        return replace(self, values=a * self.values, channels=tuple(Channel("custom") for _ in self.channels))

    def restricted(self, horizon: float) -> "Signal":
        n = int(round(horizon / self.dt))
        if n < 1 or n > self.n_samples - 1:
            raise InvalidArgument("restriction horizon outside signal window")
        return replace(self, values=self.values[:, : n + 1])

    def describe(self) -> dict[str, Any]:
        return {
            "dt": self.dt,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "sign": self.sign,
            "channels": [c.describe() for c in self.channels],
        }

    # -- CSV + JSON header ----------------------------------------------

    def to_csv(self, path: str | Path) -> tuple[Path, Path]:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"z{k + 1}" for k in range(self.n_channels)])
            for j, t in enumerate(self.times):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in self.values[:, j]])
        header = path.with_suffix(".json")
        info = self.describe()
        info["schema"] = "spmelab.signal/1"
        info["kind"] = [c.kind for c in self.channels]
        info["H"] = [c.hurst for c in self.channels]
        header.write_text(json.dumps(info, indent=2, sort_keys=True))
        return path, header

    @classmethod
    def from_csv(cls, path: str | Path) -> "Signal":
        path = Path(path)
        info = json.loads(path.with_suffix(".json").read_text())
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        chans = tuple(
            Channel(c["kind"], c.get("H"), c.get("rate"), c.get("fallback") == "cholesky") for c in info["channels"]
        )
        return cls(info["dt"], data[:, 1:].T.copy(), chans, info.get("seed"), info.get("sign", 1))


def stack(signals: Sequence[Signal]) -> Signal:
    """Concatenate channels of signals sharing dt, length and orientation."""
    first = signals[0]
    for s in signals[1:]:
        if s.n_samples != first.n_samples or not np.isclose(s.dt, first.dt) or s.sign != first.sign:
            raise InvalidArgument("stacked signals must share length, dt and orientation")
    vals = np.vstack([s.values for s in signals])
    chans = tuple(c for s in signals for c in s.channels)
    return Signal(first.dt, vals, chans, first.seed, first.sign)


def _check_grid(n_steps: int, dt: float) -> None:
    if int(n_steps) != n_steps or n_steps < 1:
        raise InvalidArgument(f"n_steps must be a positive integer, got {n_steps}")
    if not dt > 0:
        raise InvalidArgument(f"dt must be positive, got {dt}")


def spawn_seeds(seed: int, n: int) -> list[int]:
    """Independent child seeds derived from one root seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1)) for c in children]


def gen_brownian(n_steps: int, dt: float, seed: int, sign: int = 1) -> Signal:
    _check_grid(n_steps, dt)
    rng = np.random.default_rng(seed)
    inc = rng.standard_normal(n_steps) * np.sqrt(dt)
    path = np.concatenate([[0.0], np.cumsum(inc)])
    return Signal(dt, path[None, :], (Channel("brownian"),), seed, sign)


def fgn_autocovariance(hurst: float, n: int) -> np.ndarray:
    """gamma(k) = 0.5(|k+1|^2H - 2|k|^2H + |k-1|^2H) for k = 0..n."""
    k = np.arange(n + 1, dtype=float)
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 - 2.0 * np.abs(k) ** h2 + np.abs(k - 1) ** h2)


def fbm_covariance(hurst: float, times: np.ndarray) -> np.ndarray:
    s, t = np.meshgrid(times, times, indexing="ij")
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(s) ** h2 + np.abs(t) ** h2 - np.abs(t - s) ** h2)


def gen_fbm(hurst: float, n_steps: int, dt: float, seed: int, sign: int = 1, force_cholesky: bool = False) -> Signal:
    """Exact fractional Brownian motion by circulant embedding of fractional Gaussian noise.

    Falls back to a Cholesky factorization of the fBm covariance when the
    embedding has negative eigenvalues; the channel is then flagged.
    """
    if not 0.0 < hurst < 1.0:
        raise InvalidArgument(f"Hurst parameter must lie in (0,1), got {hurst}")
    _check_grid(n_steps, dt)
    rng = np.random.default_rng(seed)
    n = int(n_steps)
    gamma = fgn_autocovariance(hurst, n)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    eig = np.fft.fft(row).real
    fallback = bool(force_cholesky or eig.min() < -1e-10 * eig.max())
    if not fallback:
        m2 = len(row)
        w = np.sqrt(np.maximum(eig, 0.0) / m2) * (rng.standard_normal(m2) + 1j * rng.standard_normal(m2))
        noise = np.fft.fft(w).real[:n]
        path = np.concatenate([[0.0], np.cumsum(noise)]) * dt ** hurst
    else:
        t = dt * np.arange(1, n + 1)
        chol = np.linalg.cholesky(fbm_covariance(hurst, t) + 1e-14 * np.eye(n))
        path = np.concatenate([[0.0], chol @ rng.standard_normal(n)])
    return Signal(dt, path[None, :], (Channel("fbm", hurst=hurst, fallback=fallback),), seed, sign)


def linear_drift(rate: float, n_steps: int, dt: float, sign: int = 1) -> Signal:
    """z_t = rate * t (negative on a backward half-line)."""
    _check_grid(n_steps, dt)
    path = rate * sign * dt * np.arange(n_steps + 1)
    return Signal(dt, path[None, :], (Channel("linear-drift", rate=rate),), None, sign)


def constant_zero(n_steps: int, dt: float, sign: int = 1) -> Signal:
    _check_grid(n_steps, dt)
    return Signal(dt, np.zeros((1, n_steps + 1)), (Channel("constant"),), None, sign)


def custom(values: Sequence[float] | np.ndarray, dt: float, sign: int = 1) -> Signal:
    vals = np.atleast_2d(np.asarray(values, dtype=float))
    return Signal(dt, vals, tuple(Channel("custom") for _ in range(vals.shape[0])), None, sign)


def _mollifier(width: float, dt: float) -> np.ndarray:
    half = int(np.floor(width / dt + 1e-9))
    s = np.arange(-half, half + 1) * dt / width
    with np.errstate(divide="ignore", over="ignore"):
        k = np.where(np.abs(s) < 1.0, np.exp(-1.0 / np.maximum(1.0 - s * s, 1e-300)), 0.0)
    if k.sum() == 0.0:
        k[half] = 1.0
    return k / k.sum()


def smooth_signal(s: Signal, mollifier_width: float) -> Signal:
    """Convolve each channel with a unit-mass symmetric C-infinity bump of half-width ``mollifier_width``.

    Both ends are extended by point reflection through the end samples, which
    reproduces affine paths exactly and keeps z_0 = 0.
    """
    if mollifier_width < s.dt * (1 - 1e-12):
        raise InvalidArgument(f"mollifier width {mollifier_width} is below dt={s.dt}")
    ker = _mollifier(mollifier_width, s.dt)
    half = len(ker) // 2
    out = np.empty_like(s.values)
    for c in range(s.n_channels):
        z = s.values[c]
        n = len(z)
        if half >= n:
            raise InvalidArgument("mollifier wider than the signal")
        left = 2.0 * z[0] - z[half:0:-1]
        right = 2.0 * z[-1] - z[-2 : -half - 2 : -1]
        ext = np.concatenate([left, z, right])
        sm = np.convolve(ext, ker[::-1], mode="valid")
        out[c] = sm - sm[0]
    chans = tuple(Channel("custom") for _ in s.channels)
    return Signal(s.dt, out, chans, s.seed, s.sign)


@dataclass
class SublinearReport:
    t0_grid: np.ndarray
    ratios: np.ndarray
    sublinear_hint: bool

    def as_dict(self) -> dict[str, Any]:
        return {"t0": self.t0_grid.tolist(), "ratio": self.ratios.tolist(), "sublinear_hint": self.sublinear_hint}


def check_sublinear_growth(s: Signal, t0_grid: Sequence[float] | None = None) -> SublinearReport:
    """max_k sup_{|t| >= |t0|} |z_t| / |t| for each t0 in the grid.

    Times are given as magnitudes or as negative numbers; either way the
    tail beyond |t0| of the stored window is scanned.  Purely diagnostic.
    """
    if s.n_samples < 2 or s.horizon <= 0:
        raise InvalidArgument("empty signal window")
    if t0_grid is None:
        t0_grid = s.horizon * np.array([1 / 64, 1 / 16, 1 / 4, 1.0])
    grid = np.abs(np.asarray(t0_grid, dtype=float))
    if grid.size == 0 or np.any(grid <= 0) or np.any(grid > s.horizon * (1 + 1e-12)):
        raise InvalidArgument("t0 grid must be non-empty and inside the window (excluding 0)")
    mag = s.dt * np.arange(1, s.n_samples)
    ratio_t = np.max(np.abs(s.values[:, 1:]), axis=0) / mag
    # suffix maximum: sup over |t| >= |t0|
    suffix = np.maximum.accumulate(ratio_t[::-1])[::-1]
    idx = np.clip(np.ceil(grid / s.dt - 1e-9).astype(int) - 1, 0, len(mag) - 1)
    ratios = suffix[idx]
    hint = bool(len(ratios) < 2 or ratios[np.argmax(grid)] <= ratios[np.argmin(grid)])
    return SublinearReport(grid, ratios, hint)
