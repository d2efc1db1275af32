"""Nicholson-type patch systems with almost periodic coefficients.

    y_i'(t) = -d_i(t) y_i(t) + sum_j a_ij(t) y_j(t) + beta_i(t) g_i(t, y_i(t - tau_i))

with ``g`` the Nicholson term ``y exp(-c y)``, the Mackey-Glass term
``y / (1 + c y^alpha)`` or the identity (linear systems).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .signals import ZERO, QuasiPeriodicSignal, eval_signal, is_identically_zero, signal_sum

NICHOLSON = "nicholson"
MACKEY_GLASS = "mackey_glass"
LINEAR = "linear"

NEG_TOL = -1e-12


class ValidationError(ValueError):
    """Raised when an analysis is asked to run on a system failing (a1)-(a6)."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        failed = ", ".join(c.name for c in report.checks if not c.passed)
        super().__init__(f"system fails hypotheses: {failed}")


@dataclass(frozen=True)
class Nonlinearity:
    kind: str = NICHOLSON
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in (NICHOLSON, MACKEY_GLASS, LINEAR):
            raise ValueError(f"unknown nonlinearity {self.kind!r}")
        if self.kind == MACKEY_GLASS and not (self.alpha >= 1.0 and math.isfinite(self.alpha)):
            raise ValueError(f"Mackey-Glass exponent must be >= 1, got {self.alpha}")
        object.__setattr__(self, "alpha", float(self.alpha))

    @classmethod
    def nicholson(cls):
        return cls(NICHOLSON)

    @classmethod
    def mackey_glass(cls, alpha: float):
        return cls(MACKEY_GLASS, alpha)

    @classmethod
    def linear(cls):
        return cls(LINEAR)

    def apply(self, c, y):
        """Birth nonlinearity g(y) for coefficient value(s) ``c``."""
        y = np.asarray(y, dtype=float)
        if self.kind == NICHOLSON:
            return y * np.exp(-c * y)
        if self.kind == MACKEY_GLASS:
            return y / (1.0 + c * np.power(y, self.alpha))
        return y

    def to_record(self):
        if self.kind == MACKEY_GLASS:
            return {MACKEY_GLASS: self.alpha}
        return self.kind

    @classmethod
    def from_record(cls, rec):
        if isinstance(rec, str):
            if rec == MACKEY_GLASS:
                raise ValueError("mackey_glass needs an exponent: {mackey_glass = alpha}")
            return cls(rec)
        if isinstance(rec, dict) and set(rec) == {MACKEY_GLASS}:
            return cls(MACKEY_GLASS, float(rec[MACKEY_GLASS]))
        raise ValueError(f"bad nonlinearity record {rec!r}")


def _as_signal_tuple(values, n, name):
    out = tuple(v if isinstance(v, QuasiPeriodicSignal) else QuasiPeriodicSignal.const(v) for v in values)
    if len(out) != n:
        raise ValueError(f"{name} must have {n} entries, got {len(out)}")
    return out


def _check_common(n, delays, a):
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if len(delays) != n:
        raise ValueError(f"delays must have {n} entries")
    for tau in delays:
        if not (math.isfinite(tau) and tau > 0):
            raise ValueError(f"delays must be positive and finite, got {tau}")
    if len(a) != n or any(len(row) != n for row in a):
        raise ValueError(f"a must be {n}x{n}")


@dataclass(frozen=True)
class LinearDelaySystem:
    """z_i' = -d_i z_i + sum_j a_ij z_j + beta_i z_i(t - tau_i)."""

    n: int
    delays: tuple[float, ...]
    d: tuple[QuasiPeriodicSignal, ...]
    a: tuple[tuple[QuasiPeriodicSignal, ...], ...]
    beta: tuple[QuasiPeriodicSignal, ...]

    def __post_init__(self):
        n = self.n
        object.__setattr__(self, "delays", tuple(float(x) for x in self.delays))
        a = tuple(_as_signal_tuple(row, n, "a row") for row in self.a)
        _check_common(n, self.delays, a)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "d", _as_signal_tuple(self.d, n, "d"))
        object.__setattr__(self, "beta", _as_signal_tuple(self.beta, n, "beta"))

    @property
    def nonlinearity(self) -> Nonlinearity:
        return Nonlinearity(LINEAR)

    @property
    def c(self) -> tuple[QuasiPeriodicSignal, ...]:
        return (ZERO,) * self.n

    def rhs(self, t, z, z_delayed):
        return _rhs(self, t, z, z_delayed, check_sign=False)

    def translate(self, shift: float) -> "LinearDelaySystem":
        from .signals import translate as tr

        return LinearDelaySystem(
            self.n,
            self.delays,
            tuple(tr(s, shift) for s in self.d),
            tuple(tuple(tr(s, shift) for s in row) for row in self.a),
            tuple(tr(s, shift) for s in self.beta),
        )


@dataclass(frozen=True)
class DelaySystem:
    n: int
    delays: tuple[float, ...]
    d: tuple[QuasiPeriodicSignal, ...]
    a: tuple[tuple[QuasiPeriodicSignal, ...], ...]
    beta: tuple[QuasiPeriodicSignal, ...]
    c: tuple[QuasiPeriodicSignal, ...]
    nonlinearity: Nonlinearity = field(default_factory=Nonlinearity)

    def __post_init__(self):
        n = self.n
        object.__setattr__(self, "delays", tuple(float(x) for x in self.delays))
        a = tuple(_as_signal_tuple(row, n, "a row") for row in self.a)
        _check_common(n, self.delays, a)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "d", _as_signal_tuple(self.d, n, "d"))
        object.__setattr__(self, "beta", _as_signal_tuple(self.beta, n, "beta"))
        object.__setattr__(self, "c", _as_signal_tuple(self.c, n, "c"))
        if isinstance(self.nonlinearity, str):
            object.__setattr__(self, "nonlinearity", Nonlinearity(self.nonlinearity))

    @classmethod
    def scalar(cls, d, beta, c=1.0, tau=1.0, nonlinearity=None):
        return cls(1, (tau,), (d,), ((0.0,),), (beta,), (c,), nonlinearity or Nonlinearity())

    def rhs(self, t, y, y_delayed):
        return _rhs(self, t, y, y_delayed, check_sign=self.nonlinearity.kind != LINEAR)

    def translate(self, shift: float) -> "DelaySystem":
        from .signals import translate as tr

        return DelaySystem(
            self.n,
            self.delays,
            tuple(tr(s, shift) for s in self.d),
            tuple(tuple(tr(s, shift) for s in row) for row in self.a),
            tuple(tr(s, shift) for s in self.beta),
            tuple(tr(s, shift) for s in self.c),
            self.nonlinearity,
        )

    def permute(self, perm: Sequence[int]) -> "DelaySystem":
        """Relabel patches: new patch k is old patch ``perm[k]``."""
        perm = list(perm)
        if sorted(perm) != list(range(self.n)):
            raise ValueError("perm must be a permutation of range(n)")
        return DelaySystem(
            self.n,
            tuple(self.delays[p] for p in perm),
            tuple(self.d[p] for p in perm),
            tuple(tuple(self.a[p][q] for q in perm) for p in perm),
            tuple(self.beta[p] for p in perm),
            tuple(self.c[p] for p in perm),
            self.nonlinearity,
        )

    def with_c(self, c, nonlinearity=None) -> "DelaySystem":
        return DelaySystem(self.n, self.delays, self.d, self.a, self.beta, tuple(c),
                           nonlinearity or self.nonlinearity)


def _rhs(sys, t, y, y_delayed, check_sign):
    y = np.asarray(y, dtype=float)
    yd = np.asarray(y_delayed, dtype=float)
    if y.shape != (sys.n,) or yd.shape != (sys.n,):
        raise ValueError(f"state vectors must have shape ({sys.n},)")
    if check_sign and (np.any(y < NEG_TOL) or np.any(yd < NEG_TOL)):
        raise ValueError("nonlinear right-hand side needs nonnegative states")
    out = np.empty(sys.n)
    nl = sys.nonlinearity
    for i in range(sys.n):
        acc = -eval_signal(sys.d[i], t) * y[i]
        for j in range(sys.n):
            if j != i and not is_identically_zero(sys.a[i][j]):
                acc += eval_signal(sys.a[i][j], t) * y[j]
        ci = eval_signal(sys.c[i], t) if nl.kind != LINEAR else 0.0
        acc += eval_signal(sys.beta[i], t) * float(nl.apply(ci, yd[i]))
        out[i] = acc
    return out


def rhs(sys, t, y, y_delayed):
    return sys.rhs(t, y, y_delayed)


def linearized(sys) -> LinearDelaySystem:
    """Linearization along the null solution; c and the nonlinearity drop out."""
    if isinstance(sys, LinearDelaySystem):
        return sys
    return LinearDelaySystem(sys.n, sys.delays, sys.d, sys.a, sys.beta)


def subsystem(lin, indices: Sequence[int]):
    """Restrict a system to ``indices`` (0-based, in the given order)."""
    idx = list(indices)
    if not idx:
        raise ValueError("index set must be nonempty")
    if len(set(idx)) != len(idx):
        raise ValueError("index set has repeated entries")
    if any(int(i) != i or i < 0 or i >= lin.n for i in idx):
        raise ValueError(f"indices must lie in 0..{lin.n - 1}")
    kw = dict(
        n=len(idx),
        delays=tuple(lin.delays[i] for i in idx),
        d=tuple(lin.d[i] for i in idx),
        a=tuple(tuple(lin.a[i][j] for j in idx) for i in idx),
        beta=tuple(lin.beta[i] for i in idx),
    )
    if isinstance(lin, LinearDelaySystem):
        return LinearDelaySystem(**kw)
    return DelaySystem(c=tuple(lin.c[i] for i in idx), nonlinearity=lin.nonlinearity, **kw)


# --------------------------------------------------------------------------
# hypothesis checking


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    index: int | None = None
    witness_t: float | None = None
    witness_value: float | None = None
    note: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "index": self.index,
            "witness_t": self.witness_t,
            "witness_value": self.witness_value,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[HypothesisCheck, ...]
    d0: float | None
    c0: float | None
    grid_step: float
    horizon: float

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def status(self, name: str) -> bool:
        """Aggregated pass/fail of one hypothesis across patches."""
        return all(c.passed for c in self.checks if c.name == name)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def to_dict(self):
        return {
            "ok": self.ok,
            "d0": self.d0,
            "c0": self.c0,
            "grid_step": self.grid_step,
            "horizon": self.horizon,
            "checks": [c.to_dict() for c in self.checks],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            tuple(HypothesisCheck.from_dict(c) for c in d["checks"]),
            d["d0"], d["c0"], d["grid_step"], d["horizon"],
        )


def _bound_check(name, index, s: QuasiPeriodicSignal, grid, strict: bool, step: float):
    """Check ``s(t) > 0`` (strict) or ``s(t) >= 0`` on the real line.

    Returns ``(check, lower)`` where ``lower`` is a certified or grid-refined
    lower bound of ``s``.
    """
    lb = s.lower_bound()
    if lb > 0 or (not strict and lb >= 0):
        return HypothesisCheck(name, True, index, note="analytic bound"), lb
    vals = eval_signal(s, grid)
    bad = vals <= 0 if strict else vals < 0
    if np.any(bad):
        first = int(np.argmax(bad))
        stop = first
        while stop + 1 < len(bad) and bad[stop + 1]:
            stop += 1
        k = first + int(np.argmin(vals[first : stop + 1]))
        return HypothesisCheck(name, False, index, float(grid[k]), float(vals[k]), "grid witness"), float(vals[k])
    k = int(np.argmin(vals))
    slope = sum(abs(t.amplitude * t.frequency) for t in s.terms)
    margin = 0.5 * slope * step
    lower = float(vals[k]) - margin
    if lower > 0 or (not strict and lower >= 0):
        return HypothesisCheck(name, True, index, note="grid with margin"), lower
    # margin inconclusive: refine the grid minimum locally
    res = minimize_scalar(lambda t: eval_signal(s, t), bounds=(grid[k] - step, grid[k] + step),
                          method="bounded", options={"xatol": 1e-12})
    val = float(res.fun)
    if val <= 0 if strict else val < 0:
        return HypothesisCheck(name, False, index, float(res.x), val, "refined witness"), val
    return HypothesisCheck(name, True, index, note="refined grid minimum"), min(val, float(vals[k]))


def validate(sys, grid_step: float = 0.01, horizon: float = 1000.0) -> ValidationReport:
    """Check hypotheses (a1)-(a6) and return a report (never raises on failure)."""
    if not (grid_step > 0 and horizon > 0):
        raise ValueError("grid_step and horizon must be positive")
    grid = np.arange(0.0, horizon + 0.5 * grid_step, grid_step)
    n = sys.n
    checks = [HypothesisCheck("a1", True, note="finite trigonometric sums are almost periodic")]
    d_lows, c_lows = [], []
    for i in range(n):
        chk, low = _bound_check("a2", i, sys.d[i], grid, True, grid_step)
        checks.append(chk)
        d_lows.append(low)
    for i in range(n):
        for j in range(n):
            s = sys.a[i][j]
            if i == j:
                z = is_identically_zero(s)
                checks.append(HypothesisCheck(
                    "a3", z, i, None if z else 0.0, None if z else eval_signal(s, 0.0),
                    "diagonal migration must vanish identically"))
            elif not is_identically_zero(s):
                chk, _ = _bound_check("a3", i, s, grid, False, grid_step)
                checks.append(chk)
    for i in range(n):
        chk, _ = _bound_check("a4", i, sys.beta[i], grid, True, grid_step)
        checks.append(chk)
    if sys.nonlinearity.kind != LINEAR:
        for i in range(n):
            chk, low = _bound_check("a5", i, sys.c[i], grid, True, grid_step)
            checks.append(chk)
            c_lows.append(low)
    else:
        checks.append(HypothesisCheck("a5", True, note="not applicable to linear systems"))
    for i in range(n):
        outflow = signal_sum(sys.a[j][i] for j in range(n) if j != i)
        chk, _ = _bound_check("a6", i, sys.d[i] - outflow, grid, True, grid_step)
        checks.append(chk)
    d0 = min(d_lows) if d_lows and min(d_lows) > 0 else None
    c0 = min(c_lows) if c_lows and min(c_lows) > 0 else None
    return ValidationReport(tuple(checks), d0, c0, float(grid_step), float(horizon))


@lru_cache(maxsize=256)
def _cached_validate(sys, grid_step, horizon):
    return validate(sys, grid_step, horizon)


def require_valid(sys, grid_step: float = 0.01, horizon: float = 1000.0) -> ValidationReport:
    """Validate (cached) and raise ``ValidationError`` on any failing hypothesis."""
    report = _cached_validate(sys, grid_step, horizon)
    if not report.ok:
        raise ValidationError(report)
    return report
