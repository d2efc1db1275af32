"""Method-of-steps integration with dense cubic Hermite output.

Classical RK4 on a fixed grid whose step divides every delay, so delayed
values at knots are exact history entries and half-step values come from the
Hermite interpolant of already computed segments (delays >= 4h).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from . import _kernel
from .model import LINEAR, MACKEY_GLASS, NICHOLSON, LinearDelaySystem
from .signals import is_identically_zero, pack_signals

_KIND_CODES = {
    NICHOLSON: _kernel.NICHOLSON_CODE,
    MACKEY_GLASS: _kernel.MACKEY_GLASS_CODE,
    LINEAR: _kernel.LINEAR_CODE,
}


class IntegrationError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# initial histories


@dataclass(frozen=True)
class ConstantHistory:
    value: float

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.full(s.shape, float(self.value))
        return float(out) if out.ndim == 0 else out

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape)
        return float(out) if out.ndim == 0 else out

    def absmax(self, lo: float, hi: float) -> float:
        return abs(float(self.value))

    def covers(self, tau: float) -> bool:
        return True


@dataclass(frozen=True, eq=False)
class SampledHistory:
    """Cubic-spline interpolant of samples on a grid ending at 0."""

    grid: tuple[float, ...]
    values: tuple[float, ...]
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or len(g) < 2:
            raise ValueError("history grid and values must be 1-D of equal length >= 2")
        if np.any(np.diff(g) <= 0):
            raise ValueError("history grid must be strictly increasing")
        object.__setattr__(self, "grid", tuple(g))
        object.__setattr__(self, "values", tuple(v))
        object.__setattr__(self, "_spline", CubicSpline(g, v))

    def __call__(self, s):
        out = self._spline(s)
        return float(out) if np.ndim(out) == 0 else out

    def derivative(self, s):
        out = self._spline(s, 1)
        return float(out) if np.ndim(out) == 0 else out

    def absmax(self, lo: float, hi: float) -> float:
        pts = [lo, hi]
        pts += [g for g in self.grid if lo < g < hi]
        roots = self._spline.derivative().roots(extrapolate=False)
        pts += [r for r in np.atleast_1d(roots) if lo < r < hi]
        return float(np.max(np.abs(self._spline(np.array(pts)))))

    def covers(self, tau: float) -> bool:
        return self.grid[0] <= -tau + 1e-12 and abs(self.grid[-1]) <= 1e-12

    def __eq__(self, other):
        return isinstance(other, SampledHistory) and self.grid == other.grid and self.values == other.values

    def __hash__(self):
        return hash((self.grid, self.values))


@dataclass(frozen=True)
class InitialHistory:
    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    @classmethod
    def constant(cls, values) -> "InitialHistory":
        return cls(tuple(ConstantHistory(float(v)) for v in values))

    @classmethod
    def ones(cls, n: int) -> "InitialHistory":
        return cls.constant([1.0] * n)

    @classmethod
    def from_functions(cls, funcs, delays, samples_per_unit: int = 200) -> "InitialHistory":
        comps = []
        for f, tau in zip(funcs, delays):
            g = np.linspace(-tau, 0.0, max(8, int(math.ceil(tau * samples_per_unit)) + 1))
            comps.append(SampledHistory(tuple(g), tuple(float(f(x)) for x in g)))
        return cls(tuple(comps))

    @property
    def n(self) -> int:
        return len(self.components)

    def scaled(self, factor: float) -> "InitialHistory":
        out = []
        for c in self.components:
            if isinstance(c, ConstantHistory):
                out.append(ConstantHistory(c.value * factor))
            else:
                out.append(SampledHistory(c.grid, tuple(v * factor for v in c.values)))
        return InitialHistory(tuple(out))

    def at_zero(self) -> np.ndarray:
        return np.array([c(0.0) for c in self.components])


# --------------------------------------------------------------------------
# step selection and system packing


def compatible_step(delays: Sequence[float], h_max: float, max_divisions: int = 10**7) -> float:
    """Largest h <= h_max such that every delay is an integer multiple of h."""
    if not h_max > 0:
        raise ValueError("step must be positive")
    tau_min = min(delays)
    k = max(1, math.ceil(tau_min / h_max - 1e-12))
    while k <= max_divisions:
        h = tau_min / k
        if all(abs(tau / h - round(tau / h)) <= 1e-9 * max(1.0, tau / h) for tau in delays):
            return h
        k += 1
    raise IntegrationError(f"no step <= {h_max} divides all delays {tuple(delays)}")


def default_step(delays: Sequence[float]) -> float:
    return min(0.01, min(delays) / 8.0)


def resolve_step(delays: Sequence[float], h: float | None) -> float:
    if h is None:
        h = default_step(delays)
    if h > min(delays) / 4.0 + 1e-15:
        raise ValueError(f"step {h} exceeds min delay / 4 = {min(delays) / 4.0}")
    return compatible_step(delays, h)


@dataclass(frozen=True)
class _Packed:
    n: int
    lags: np.ndarray
    tables: tuple
    ai: np.ndarray
    aj: np.ndarray
    kind: int
    alpha: float


def pack_system(sys, h: float) -> _Packed:
    n = sys.n
    lags = np.array([int(round(tau / h)) for tau in sys.delays], dtype=np.int64)
    if np.any(lags < 4):
        raise IntegrationError("every delay must span at least four steps")
    edges = [(i, j) for i in range(n) for j in range(n) if i != j and not is_identically_zero(sys.a[i][j])]
    signals = list(sys.d) + list(sys.beta) + list(sys.c) + [sys.a[i][j] for i, j in edges]
    kind = LINEAR if isinstance(sys, LinearDelaySystem) else sys.nonlinearity.kind
    return _Packed(
        n,
        lags,
        pack_signals(signals),
        np.array([e[0] for e in edges], dtype=np.int64),
        np.array([e[1] for e in edges], dtype=np.int64),
        _KIND_CODES[kind],
        float(sys.nonlinearity.alpha),
    )


def fill_history(history: InitialHistory, delays, lags, h, ybuf, dbuf, M):
    """Write history knots -M..0 into buffers (rows 0..M); return left derivative at 0."""
    n = len(delays)
    if history.n != n:
        raise ValueError(f"history has {history.n} components, system has {n}")
    dleft = np.empty(n)
    for i, comp in enumerate(history.components):
        if not comp.covers(delays[i]):
            raise ValueError(f"history component {i} does not cover [-{delays[i]}, 0]")
        m = int(lags[i])
        s = -h * np.arange(M, -1, -1, dtype=float)
        s = np.maximum(s, -m * h)  # rows older than -tau_i are never read
        ybuf[: M + 1, i] = comp(s)
        dbuf[: M + 1, i] = comp.derivative(s)
        dleft[i] = comp.derivative(0.0)
    return dleft


def _run_kernel(packed, ybuf, dbuf, dleft, M, k_start, k_end, h, clamp, renorm_every=0,
                norm_mode=_kernel.NORM_SUP, logs=None, stats=None):
    if logs is None:
        logs = np.empty(1)
    if stats is None:
        stats = np.array([0.0, 0.0, 0.0, -1.0])
    consts, offs, amps, freqs, phases = packed.tables
    code = _kernel.advance(
        ybuf, dbuf, dleft, M, k_start, k_end, h, packed.lags,
        consts, offs, amps, freqs, phases, packed.ai, packed.aj, packed.kind, packed.alpha,
        clamp, renorm_every, norm_mode, logs, stats,
    )
    return code, stats


# --------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Knot values and right derivatives on ``t_k = k h``, k = 0..N, plus history."""

    h: float
    delays: tuple[float, ...]
    values: np.ndarray
    derivs: np.ndarray
    history: InitialHistory
    clamp_events: int = 0
    clamp_min: float = 0.0
    kind: str = LINEAR

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def steps(self) -> int:
        return self.values.shape[0] - 1

    @property
    def T(self) -> float:
        return self.steps * self.h

    @property
    def times(self) -> np.ndarray:
        return self.h * np.arange(self.steps + 1)

    def eval(self, t: float, i: int) -> float:
        if not 0 <= i < self.n:
            raise IndexError(f"component {i} out of range")
        tau = self.delays[i]
        if t < -tau - 1e-12 or t > self.T + 1e-9 * max(1.0, self.T):
            raise ValueError(f"t = {t} outside [-{tau}, {self.T}]")
        if t < 0:
            return float(self.history.components[i](t))
        x = t / self.h
        k = int(round(x))
        if abs(x - k) <= 1e-12 * max(1.0, x):
            return float(self.values[min(k, self.steps), i])
        k = min(int(math.floor(x)), self.steps - 1)
        s = x - k
        return float(_hermite(self.values[k, i], self.values[k + 1, i],
                              self.h * self.derivs[k, i], self.h * self.derivs[k + 1, i], s))

    def sample(self, t, i: int) -> np.ndarray:
        return np.array([self.eval(float(x), i) for x in np.atleast_1d(t)])

    def _component_absmax(self, i: int, lo: float, hi: float) -> float:
        best = 0.0
        if lo < 0:
            best = self.history.components[i].absmax(lo, min(hi, 0.0))
            lo = 0.0
        if hi <= lo:
            return best
        x_lo, x_hi = lo / self.h, hi / self.h
        k0 = min(int(math.floor(x_lo + 1e-9)), self.steps - 1)
        k1 = min(int(math.ceil(x_hi - 1e-9)), self.steps)
        ks = np.arange(k0, k1)
        y0 = self.values[ks, i]
        y1 = self.values[ks + 1, i]
        D0 = self.h * self.derivs[ks, i]
        D1 = self.h * self.derivs[ks + 1, i]
        full = np.maximum(np.abs(y0), np.abs(y1))
        interior = _hermite_interior_absmax(y0, y1, D0, D1)
        # partial end segments: restrict to [s_lo, s_hi]
        s_lo = np.zeros(len(ks))
        s_hi = np.ones(len(ks))
        s_lo[0] = max(0.0, x_lo - k0)
        s_hi[-1] = min(1.0, x_hi - (k1 - 1))
        seg = np.maximum(full, interior)
        for idx in {0, len(ks) - 1}:
            if s_lo[idx] > 0 or s_hi[idx] < 1:
                seg[idx] = _hermite_absmax_range(y0[idx], y1[idx], D0[idx], D1[idx], s_lo[idx], s_hi[idx])
        return max(best, float(np.max(seg)))

    def segment_norm(self, t: float) -> float:
        """Sum over components of the sup of |y_i| on [t - tau_i, t]."""
        if t < 0 or t > self.T + 1e-9 * max(1.0, self.T):
            raise ValueError(f"t = {t} outside [0, {self.T}]")
        return float(sum(self._component_absmax(i, t - self.delays[i], t) for i in range(self.n)))

    def to_csv(self, path) -> None:
        """Knots only, header ``t,y_1,...,y_n``, 17 significant digits."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"y_{i + 1}" for i in range(self.n)])
            for t, row in zip(self.times, self.values):
                w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])


def _hermite(y0, y1, D0, D1, s):
    return y0 + s * (D0 + s * (-2 * D0 - D1 - 3 * y0 + 3 * y1 + s * (D0 + D1 + 2 * y0 - 2 * y1)))


def _hermite_absmax_range(y0, y1, D0, D1, lo, hi):
    c1 = D0
    c2 = -2 * D0 - D1 - 3 * y0 + 3 * y1
    c3 = D0 + D1 + 2 * y0 - 2 * y1
    pts = [lo, hi]
    roots = np.roots([3 * c3, 2 * c2, c1]) if (c3 or c2) else []
    pts += [r.real for r in np.atleast_1d(roots) if abs(r.imag) < 1e-14 and lo < r.real < hi]
    return max(abs(_hermite(y0, y1, D0, D1, s)) for s in pts)


def _hermite_interior_absmax(y0, y1, D0, D1):
    c1 = D0
    c2 = -2 * D0 - D1 - 3 * y0 + 3 * y1
    c3 = D0 + D1 + 2 * y0 - 2 * y1
    qa, qb, qc = 3 * c3, 2 * c2, c1
    out = np.zeros_like(y0)
    disc = qb * qb - 4 * qa * qc
    with np.errstate(divide="ignore", invalid="ignore"):
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        lin = np.abs(qa) < 1e-300
        cands = [
            np.where(lin, -qc / qb, (-qb + sq) / (2 * qa)),
            np.where(lin, np.nan, (-qb - sq) / (2 * qa)),
        ]
    for s in cands:
        ok = np.isfinite(s) & (s > 0) & (s < 1)
        sv = np.where(ok, s, 0.0)
        val = np.abs(_hermite(y0, y1, D0, D1, sv))
        out = np.where(ok, np.maximum(out, val), out)
    return out


def integrate(sys, history: InitialHistory, T: float, h: float | None = None) -> Trajectory:
    """Integrate ``sys`` from ``history`` over [0, T] with fixed-step RK4.

    ``h`` is reduced to the largest value dividing every delay; the value used
    is ``trajectory.h``.  Nonlinear runs clamp negative round-off at 0 and count
    the events.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    h = resolve_step(sys.delays, h)
    packed = pack_system(sys, h)
    M = int(packed.lags.max())
    N = int(math.ceil(T / h - 1e-9))
    L = M + N + 1
    ybuf = np.zeros((L, sys.n))
    dbuf = np.zeros((L, sys.n))
    dleft = fill_history(history, sys.delays, packed.lags, h, ybuf, dbuf, M)
    kind = LINEAR if isinstance(sys, LinearDelaySystem) else sys.nonlinearity.kind
    clamp = kind != LINEAR
    code, stats = _run_kernel(packed, ybuf, dbuf, dleft, M, 0, N, h, clamp)
    if code == _kernel.OVERFLOW:
        raise IntegrationError(
            f"overflow (|y| > {_kernel.OVERFLOW_LIMIT:g}) at t = {stats[3] * h:.6g}; renormalize the run")
    if code != _kernel.OK:
        raise IntegrationError(f"non-finite state at t = {stats[3] * h:.6g}")
    return Trajectory(
        h=h,
        delays=tuple(sys.delays),
        values=ybuf[M:].copy(),
        derivs=dbuf[M:].copy(),
        history=history,
        clamp_events=int(stats[0]),
        clamp_min=float(stats[1]),
        kind=kind,
    )


def segment_norm(traj: Trajectory, t: float) -> float:
    return traj.segment_norm(t)


def eval_trajectory(traj: Trajectory, t: float, i: int) -> float:
    return traj.eval(t, i)
