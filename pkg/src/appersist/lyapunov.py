"""Top Lyapunov exponents of cooperative linear delay systems.

The exponent is read off a single solution started from a strongly positive
map (all ones by default): integrate, and at every renormalization boundary
record ``log`` of the segment norm and rescale the stored history back to
norm 1.  The running sum of logs is ``log ||z_t||``, and the reported value
is its growth rate measured from ``t = max delay`` on.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .integrator import (
    InitialHistory,
    IntegrationError,
    fill_history,
    pack_system,
    resolve_step,
    _run_kernel,
)
from .model import LinearDelaySystem, linearized, require_valid, subsystem
from .signals import eval_signal
from .structure import BlockStructure, structure_of

SLOPE_TOL = 1e-3
T_CAP = 1e4
WINDOW_RATIO = math.sqrt(2.0)
N_DISPERSION = 5

NORMS = {"sup": _kernel.NORM_SUP, "l2": _kernel.NORM_L2}


class ExponentError(RuntimeError):
    pass


@dataclass(frozen=True)
class LyapunovEstimate:
    value: float
    horizon: float
    window_slopes: tuple[float, ...]
    renorm_count: int
    status: str
    dispersion: float
    h: float = 0.0
    renorm_period: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "horizon": self.horizon,
            "window_slopes": list(self.window_slopes),
            "renorm_count": self.renorm_count,
            "status": self.status,
            "dispersion": self.dispersion,
            "h": self.h,
            "renorm_period": self.renorm_period,
        }

    @classmethod
    def from_dict(cls, d) -> "LyapunovEstimate":
        return cls(d["value"], d["horizon"], tuple(d["window_slopes"]), d["renorm_count"],
                   d["status"], d["dispersion"], d["h"], d["renorm_period"])


def check_cooperative(lin, grid_step: float = 0.01, horizon: float = 1000.0) -> None:
    """Migration and birth coefficients must be nonnegative (monotone linear flow)."""
    grid = np.arange(0.0, horizon + 0.5 * grid_step, grid_step)
    named = [(f"beta[{i}]", s) for i, s in enumerate(lin.beta)]
    named += [(f"a[{i}][{j}]", lin.a[i][j]) for i in range(lin.n) for j in range(lin.n) if i != j]
    for name, s in named:
        if s.lower_bound() >= 0:
            continue
        vals = eval_signal(s, grid)
        if np.min(vals) < 0:
            k = int(np.argmin(vals))
            raise ValueError(f"{name} is negative at t = {grid[k]:.6g} ({vals[k]:.3g}); system not cooperative")


@dataclass
class LyapunovRun:
    """Resumable renormalized integration of a linear system."""

    lin: LinearDelaySystem
    h: float | None = None
    renorm_period: float | None = None
    history: InitialHistory | None = None
    norm: str = "sup"
    log_norms: list = field(default_factory=list)

    def __post_init__(self):
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {sorted(NORMS)}")
        self.h = resolve_step(self.lin.delays, self.h)
        self._packed = pack_system(self.lin, self.h)
        self.M = int(self._packed.lags.max())
        if self.renorm_period is None:
            self.renorm_every = self.M
        else:
            r = self.renorm_period / self.h
            self.renorm_every = int(round(r))
            if self.renorm_every < 1 or abs(r - self.renorm_every) > 1e-9 * max(1.0, r):
                raise ValueError(f"renorm_period {self.renorm_period} is not a multiple of step {self.h}")
        self.renorm_period = self.renorm_every * self.h
        L = self.M + 3
        self.ybuf = np.zeros((L, self.lin.n))
        self.dbuf = np.zeros((L, self.lin.n))
        hist = self.history if self.history is not None else InitialHistory.ones(self.lin.n)
        self.dleft = fill_history(hist, self.lin.delays, self._packed.lags, self.h, self.ybuf, self.dbuf, self.M)
        self.k = 0
        self.burn_log: float | None = None

    @property
    def t(self) -> float:
        return self.k * self.h

    def advance_to(self, T: float) -> "LyapunovRun":
        """Integrate up to the first renormalization boundary at or after ``T``."""
        R = self.renorm_every
        k_end = R * int(math.ceil(T / (R * self.h) - 1e-9))
        if k_end <= self.k:
            return self
        if self.burn_log is None and self.k < self.M < k_end:
            self._advance(self.M)
        self._advance(k_end)
        return self

    def _advance(self, k_end: int) -> None:
        R = self.renorm_every
        logs = np.empty((k_end - self.k) // R + 2)
        stats = np.array([0.0, 0.0, 0.0, -1.0])
        code, stats = _run_kernel(
            self._packed, self.ybuf, self.dbuf, self.dleft, self.M, self.k, k_end, self.h,
            False, R, NORMS[self.norm], logs, stats,
        )
        self.log_norms.extend(logs[: int(stats[2])].tolist())
        if code == _kernel.ZERO_NORM:
            raise ExponentError(f"solution segment vanished at t = {stats[3] * self.h:.6g}")
        if code != _kernel.OK:
            raise IntegrationError(f"integration failed at t = {stats[3] * self.h:.6g} (code {code})")
        self.k = k_end
        if self.burn_log is None and self.k == self.M:
            nrm = _kernel.segment_norm_at(self.k, self._packed.lags, self.ybuf, self.dbuf, self.dleft,
                                          self.M, self.h, NORMS[self.norm])
            if not nrm > 0:
                raise ExponentError("solution segment vanished during burn-in")
            self.burn_log = float(sum(self.log_norms)) + math.log(nrm)

    def _growth_rate(self, log_norm_T: float) -> float:
        # rate measured from t_b = max delay on: the first delay interval carries an
        # O(1) offset between the initial map and the asymptotic segment profile
        if self.burn_log is None or self.k <= self.M:
            return float(log_norm_T / self.t)
        return float((log_norm_T - self.burn_log) / ((self.k - self.M) * self.h))

    def current_segment(self, i: int) -> np.ndarray:
        """Knot values of component ``i`` on [t - tau_i, t] in the renormalized state."""
        m = int(self._packed.lags[i])
        L = self.ybuf.shape[0]
        rows = [(k + self.M) % L for k in range(self.k - m, self.k + 1)]
        return self.ybuf[rows, i].copy()

    def estimate(self, slope_tol: float = SLOPE_TOL, T_min: float | None = None) -> LyapunovEstimate:
        if not self.log_norms:
            raise ExponentError("no renormalization boundary reached yet")
        T = self.t
        cum = np.concatenate([[0.0], np.cumsum(self.log_norms)])
        p = self.renorm_period
        slopes = window_slopes(cum, p)
        last = slopes[-N_DISPERSION:]
        dispersion = float(max(last) - min(last)) if len(last) >= 2 else math.inf
        if T_min is None:
            T_min = 100.0 * max(self.lin.delays)
        status = "converged" if dispersion < slope_tol and T >= T_min - 1e-9 else "uncertain"
        return LyapunovEstimate(
            value=self._growth_rate(cum[-1]),
            horizon=T,
            window_slopes=tuple(slopes),
            renorm_count=len(self.log_norms),
            status=status,
            dispersion=dispersion,
            h=self.h,
            renorm_period=p,
        )


def window_slopes(cum: np.ndarray, p: float) -> list[float]:
    """Growth rates over the second halves of geometrically growing windows.

    ``cum[m]`` is ``log ||z||`` at time ``m p``.  Window ends shrink from the
    full horizon by ``WINDOW_RATIO``; slopes are returned smallest window first.
    """
    m_end = len(cum) - 1
    ends = []
    m = float(m_end)
    while m >= 4:
        e = int(round(m))
        if not ends or e != ends[-1]:
            ends.append(e)
        m /= WINDOW_RATIO
    slopes = []
    for e in reversed(ends):
        s = e // 2
        slopes.append(float((cum[e] - cum[s]) / ((e - s) * p)))
    return slopes


def top_exponent(lin, T: float, renorm_period: float | None = None, h: float | None = None,
                 history: InitialHistory | None = None, norm: str = "sup",
                 slope_tol: float = SLOPE_TOL) -> LyapunovEstimate:
    """Estimate the top exponent from the solution with initial map ``history`` (ones)."""
    lin = linearized(lin)
    if T < 100.0 * max(lin.delays) - 1e-9:
        raise ValueError(f"T must be at least 100 * max delay = {100.0 * max(lin.delays)}")
    check_cooperative(lin)
    run = LyapunovRun(lin, h=h, renorm_period=renorm_period, history=history, norm=norm)
    return run.advance_to(T).estimate(slope_tol)


def adaptive_exponent(lin, T: float, T_cap: float = T_CAP, renorm_period: float | None = None,
                      h: float | None = None, slope_tol: float = SLOPE_TOL) -> LyapunovEstimate:
    """Like ``top_exponent`` but doubles the horizon until converged or ``T_cap``."""
    lin = linearized(lin)
    check_cooperative(lin)
    T = max(T, 100.0 * max(lin.delays))
    run = LyapunovRun(lin, h=h, renorm_period=renorm_period)
    while True:
        est = run.advance_to(T).estimate(slope_tol)
        if est.converged or T >= T_cap:
            return est
        T = min(2.0 * T, T_cap)


def characteristic_root(d: float, beta: float, tau: float, tol: float = 1e-12) -> float:
    """Unique real root of ``lam + d = beta exp(-lam tau)`` by bisection on [-d-beta, beta]."""
    if not (d > 0 and beta > 0 and tau > 0):
        raise ValueError("d, beta and tau must be positive")

    def g(lam):
        return lam + d - beta * math.exp(-lam * tau)

    if g(0.0) == 0.0:
        return 0.0
    lo, hi = -d - beta, beta
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if gm < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def block_exponents(sys, T: float = 1000.0, T_cap: float = T_CAP, renorm_period: float | None = None,
                    h: float | None = None, slope_tol: float = SLOPE_TOL, workers: int = 1,
                    structure: BlockStructure | None = None) -> dict[int, LyapunovEstimate]:
    """Exponent of every diagonal block of the linearization along 0."""
    require_valid(sys)
    lin = linearized(sys)
    if structure is None:
        _, structure = structure_of(lin)
    subs = [subsystem(lin, blk) for blk in structure.blocks]

    def run(sub):
        return adaptive_exponent(sub, T, T_cap, renorm_period, h, slope_tol)

    if workers > 1 and len(subs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, subs))
    else:
        results = [run(s) for s in subs]
    return dict(enumerate(results))
