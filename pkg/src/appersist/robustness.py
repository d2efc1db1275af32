"""Persistence of ``y' = f(t) y`` across hull translates of ``f``.

Translate ``f(. + shift)`` has ``F_shift(t) = int_0^t f(s + shift) ds``; the
equation persists iff ``F_shift -> inf``.  At a finite horizon a translate is
flagged recurrent when ``F_shift`` dips below a tolerance on [T/2, T].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .signals import QuasiPeriodicSignal, conley_miller, integral, translate

RECURRENCE_TOL = 0.1


def _grid_step(f: QuasiPeriodicSignal, step: float | None) -> float:
    if step is not None:
        if not step > 0:
            raise ValueError("step must be positive")
        return step
    freqs = [t.frequency for t in f.terms if t.amplitude != 0.0]
    if not freqs:
        return 0.1
    return min(0.1, 2 * math.pi / max(freqs) / 64)


def _second_half_min(f, shift, T, step):
    grid = np.arange(0.5 * T, T + 0.5 * step, step)
    grid[-1] = min(grid[-1], T)
    return float(np.min(integral(translate(f, shift), 0.0, grid)))


@dataclass(frozen=True)
class TranslateResult:
    shift: float
    min_F: float
    recurrent: bool


@dataclass(frozen=True)
class HullDemoReport:
    N: int | None
    T: float
    tol: float
    step: float
    base_times: tuple[float, ...]
    base_F: tuple[float, ...]
    base_min_after_one: float
    translates: tuple[TranslateResult, ...]

    @property
    def recurrent_fraction(self) -> float:
        if not self.translates:
            return 0.0
        return sum(r.recurrent for r in self.translates) / len(self.translates)

    def to_dict(self):
        return {
            "N": self.N,
            "T": self.T,
            "tol": self.tol,
            "step": self.step,
            "base_min_after_one": self.base_min_after_one,
            "recurrent_fraction": self.recurrent_fraction,
            "translates": [
                {"shift": r.shift, "min_F": r.min_F, "recurrent": r.recurrent} for r in self.translates
            ],
        }


def hull_demo(N: int, T: float, shifts: Sequence[float], tol: float = RECURRENCE_TOL,
              f: QuasiPeriodicSignal | None = None, step: float | None = None,
              n_checkpoints: int = 2001) -> HullDemoReport:
    """Base growth profile of ``F_0`` and second-half minima of each translate.

    ``f`` defaults to ``conley_miller(N)``; passing a control signal replaces it.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if any(not math.isfinite(s) for s in shifts):
        raise ValueError("shifts must be finite")
    if f is None:
        f = conley_miller(N)
    step = _grid_step(f, step)
    base_times = np.linspace(0.0, T, n_checkpoints)
    base_F = np.asarray(integral(f, 0.0, base_times), dtype=float)
    dense = np.arange(1.0, T + 0.5 * step, step)
    base_min = float(np.min(integral(f, 0.0, dense))) if T >= 1.0 else math.nan
    results = []
    for s in shifts:
        m = _second_half_min(f, float(s), T, step)
        results.append(TranslateResult(float(s), m, m < tol))
    return HullDemoReport(N, float(T), float(tol), float(step), tuple(base_times.tolist()),
                          tuple(base_F.tolist()), base_min, tuple(results))


@dataclass(frozen=True)
class ScanReport:
    seed: int
    T: float
    tol: float
    shifts: tuple[float, ...]
    minima: tuple[float, ...]
    recurrent: tuple[bool, ...]

    @property
    def recurrent_fraction(self) -> float:
        return sum(self.recurrent) / len(self.recurrent)

    def to_dict(self):
        return {
            "seed": self.seed,
            "T": self.T,
            "tol": self.tol,
            "recurrent_fraction": self.recurrent_fraction,
            "shifts": list(self.shifts),
            "minima": list(self.minima),
            "recurrent": list(self.recurrent),
        }


def recurrence_scan(f: QuasiPeriodicSignal, T: float, num_shifts: int, seed: int,
                    tol: float = RECURRENCE_TOL, step: float | None = None) -> ScanReport:
    """Fraction of random translates (one slow period) that look recurrent at horizon T."""
    if num_shifts < 1:
        raise ValueError("num_shifts must be >= 1")
    fmin = f.min_frequency
    period = 2 * math.pi / fmin if fmin else 2 * math.pi
    rng = np.random.default_rng(seed)
    shifts = rng.uniform(0.0, period, size=int(num_shifts))
    step = _grid_step(f, step)
    minima = [_second_half_min(f, float(s), T, step) for s in shifts]
    return ScanReport(int(seed), float(T), float(tol), tuple(shifts.tolist()), tuple(minima),
                      tuple(bool(m < tol) for m in minima))
