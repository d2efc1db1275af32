"""Almost periodic coefficients represented as finite trigonometric sums.

A signal is ``constant + sum(amplitude * w(frequency * t + phase))`` with
``w`` either ``sin`` or ``cos``.  Antiderivatives and time translates are
exact, so nothing downstream needs quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SINE = "sine"
COSINE = "cosine"
_WAVEFORMS = (SINE, COSINE)


@dataclass(frozen=True)
class Term:
    amplitude: float
    frequency: float
    phase: float = 0.0
    waveform: str = SINE

    def __post_init__(self):
        if self.waveform not in _WAVEFORMS:
            raise ValueError(f"waveform must be one of {_WAVEFORMS}, got {self.waveform!r}")
        if not (math.isfinite(self.frequency) and self.frequency > 0):
            raise ValueError(f"frequency must be positive and finite, got {self.frequency}")
        if not (math.isfinite(self.amplitude) and math.isfinite(self.phase)):
            raise ValueError("amplitude and phase must be finite")
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "frequency", float(self.frequency))
        object.__setattr__(self, "phase", float(self.phase))


@dataclass(frozen=True)
class QuasiPeriodicSignal:
    """Finite trigonometric sum; immutable and hashable."""

    constant: float = 0.0
    terms: tuple[Term, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not math.isfinite(self.constant):
            raise ValueError("constant must be finite")
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "terms", tuple(self.terms))

    @classmethod
    def const(cls, value: float) -> "QuasiPeriodicSignal":
        return cls(float(value), ())

    @classmethod
    def sin(cls, amplitude=1.0, frequency=1.0, phase=0.0, constant=0.0):
        return cls(constant, (Term(amplitude, frequency, phase, SINE),))

    @classmethod
    def cos(cls, amplitude=1.0, frequency=1.0, phase=0.0, constant=0.0):
        return cls(constant, (Term(amplitude, frequency, phase, COSINE),))

    # arithmetic keeps terms separate; callers never rely on merged terms
    def __add__(self, other):
        other = _coerce(other)
        return QuasiPeriodicSignal(self.constant + other.constant, self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def scale(self, factor: float) -> "QuasiPeriodicSignal":
        return QuasiPeriodicSignal(
            self.constant * factor,
            tuple(Term(t.amplitude * factor, t.frequency, t.phase, t.waveform) for t in self.terms),
        )

    def __call__(self, t):
        return eval_signal(self, t)

    @property
    def amplitude_sum(self) -> float:
        return float(sum(abs(t.amplitude) for t in self.terms))

    @property
    def min_frequency(self) -> float | None:
        freqs = [t.frequency for t in self.terms if t.amplitude != 0.0]
        return min(freqs) if freqs else None

    def lower_bound(self) -> float:
        """Analytic lower bound ``constant - sum |amplitude|``."""
        return self.constant - self.amplitude_sum

    def to_dict(self) -> dict:
        return {
            "constant": self.constant,
            "terms": [
                {"kind": t.waveform, "amplitude": t.amplitude, "frequency": t.frequency, "phase": t.phase}
                for t in self.terms
            ],
        }

    @classmethod
    def from_dict(cls, data) -> "QuasiPeriodicSignal":
        """Parse a signal literal: a bare number or ``{constant, terms}``."""
        if isinstance(data, bool):
            raise ValueError("signal literal cannot be a boolean")
        if isinstance(data, (int, float)):
            return cls.const(data)
        if not isinstance(data, dict):
            raise ValueError(f"signal literal must be a number or a table, got {type(data).__name__}")
        unknown = set(data) - {"constant", "terms"}
        if unknown:
            raise ValueError(f"unknown signal keys: {sorted(unknown)}")
        terms = []
        for raw in data.get("terms", []):
            if not isinstance(raw, dict):
                raise ValueError("each signal term must be a table")
            bad = set(raw) - {"kind", "amplitude", "frequency", "phase"}
            if bad:
                raise ValueError(f"unknown term keys: {sorted(bad)}")
            kind = raw.get("kind", SINE)
            kind = {"sin": SINE, "cos": COSINE}.get(kind, kind)
            if "amplitude" not in raw or "frequency" not in raw:
                raise ValueError("signal term needs amplitude and frequency")
            terms.append(Term(raw["amplitude"], raw["frequency"], raw.get("phase", 0.0), kind))
        return cls(float(data.get("constant", 0.0)), tuple(terms))


ZERO = QuasiPeriodicSignal()


def _coerce(x) -> QuasiPeriodicSignal:
    if isinstance(x, QuasiPeriodicSignal):
        return x
    return QuasiPeriodicSignal.const(float(x))


def eval_signal(s: QuasiPeriodicSignal, t):
    """Evaluate ``s`` at a scalar or array of times."""
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, s.constant)
    for term in s.terms:
        arg = term.frequency * t + term.phase
        out = out + term.amplitude * (np.sin(arg) if term.waveform == SINE else np.cos(arg))
    return float(out) if scalar else out


def _primitive(s: QuasiPeriodicSignal, t):
    t = np.asarray(t, dtype=float)
    out = s.constant * t
    for term in s.terms:
        arg = term.frequency * t + term.phase
        w = term.amplitude / term.frequency
        out = out + (-w * np.cos(arg) if term.waveform == SINE else w * np.sin(arg))
    return out


def integral(s: QuasiPeriodicSignal, t0, t1):
    """Exact ``int_{t0}^{t1} s(t) dt``; broadcasts over array endpoints."""
    t0 = np.asarray(t0, dtype=float)
    t1 = np.asarray(t1, dtype=float)
    # constant part kept separate so large t does not cost precision in the sum
    out = s.constant * (t1 - t0)
    for term in s.terms:
        w = term.amplitude / term.frequency
        a0 = term.frequency * t0 + term.phase
        a1 = term.frequency * t1 + term.phase
        if term.waveform == SINE:
            out = out + w * (np.cos(a0) - np.cos(a1))
        else:
            out = out + w * (np.sin(a1) - np.sin(a0))
    return float(out) if np.ndim(out) == 0 else out


def hull_sup(s: QuasiPeriodicSignal) -> float:
    """Supremum over the hull closure: ``constant + sum |amplitude|``."""
    return s.constant + s.amplitude_sum


def is_identically_zero(s: QuasiPeriodicSignal) -> bool:
    return s.constant == 0.0 and all(t.amplitude == 0.0 for t in s.terms)


def translate(s: QuasiPeriodicSignal, shift: float) -> QuasiPeriodicSignal:
    """Hull element ``t -> s(t + shift)``."""
    if shift == 0:
        return s
    return QuasiPeriodicSignal(
        s.constant,
        tuple(Term(t.amplitude, t.frequency, t.phase + t.frequency * shift, t.waveform) for t in s.terms),
    )


def conley_miller(N: int) -> QuasiPeriodicSignal:
    """Truncation ``sum_{n=1..N} n^-2 sin(2^-n t)``: zero mean, growing integral excursions."""
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    return QuasiPeriodicSignal(0.0, tuple(Term(1.0 / n**2, 2.0**-n) for n in range(1, int(N) + 1)))


def conley_miller_integral_bound(N: int) -> float:
    """``sum 2^(n+1)/n^2``: termwise bound on ``sup_t int_0^t f_N``.

    Attained by the n = N term alone at t = pi 2^N only up to the lower
    modes, so the true supremum lies between ``2^(N+1)/N^2`` and this value.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    return float(sum(2.0 ** (n + 1) / n**2 for n in range(1, int(N) + 1)))


def signal_sum(signals: Iterable[QuasiPeriodicSignal]) -> QuasiPeriodicSignal:
    out = ZERO
    for s in signals:
        out = out + s
    return out


def random_signal(rng: np.random.Generator, n_terms: int = 3, constant_range=(-1.0, 1.0),
                  amp_scale: float = 1.0) -> QuasiPeriodicSignal:
    """Random trig sum, used by property tests and demos."""
    terms = [
        Term(
            rng.uniform(-amp_scale, amp_scale),
            rng.uniform(0.1, 3.0),
            rng.uniform(0, 2 * np.pi),
            SINE if rng.random() < 0.5 else COSINE,
        )
        for _ in range(n_terms)
    ]
    return QuasiPeriodicSignal(rng.uniform(*constant_range), tuple(terms))


def pack_signals(signals: Sequence[QuasiPeriodicSignal]):
    """Flatten signals into arrays consumed by the compiled integrator kernel.

    Returns ``(constants, offsets, amplitudes, frequencies, phases)``; cosine
    terms are stored as sines with the phase advanced by pi/2.
    """
    constants = np.array([s.constant for s in signals], dtype=float)
    offsets = np.zeros(len(signals) + 1, dtype=np.int64)
    amps, freqs, phases = [], [], []
    for k, s in enumerate(signals):
        live = [t for t in s.terms if t.amplitude != 0.0]
        offsets[k + 1] = offsets[k] + len(live)
        for t in live:
            amps.append(t.amplitude)
            freqs.append(t.frequency)
            phases.append(t.phase + (0.5 * np.pi if t.waveform == COSINE else 0.0))
    return (
        constants,
        offsets,
        np.array(amps, dtype=float),
        np.array(freqs, dtype=float),
        np.array(phases, dtype=float),
    )
