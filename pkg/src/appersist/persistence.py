"""Uniform (u0) and strict (s0) persistence at 0.

Verdicts come from the block exponents: u0 needs every block in I (no inflow
from other blocks) to grow, s0 every block in J (no outflow).  Exponents too
close to zero, or not converged, give ``uncertain`` rather than a guess.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .integrator import InitialHistory, SampledHistory, integrate
from .lyapunov import SLOPE_TOL, T_CAP, LyapunovEstimate, block_exponents
from .model import LINEAR, require_valid
from .signals import QuasiPeriodicSignal, integral
from .structure import BlockStructure, structure_of

YES = "yes"
NO = "no"
UNCERTAIN = "uncertain"

MARGIN_TOL = 5e-3
M_FLOOR = 1e-4
DECAY_TOL = 1e-6
RECURRENCE_TOL = 0.1


@dataclass(frozen=True)
class ClassifyOptions:
    T: float | None = None
    T_cap: float = T_CAP
    h: float | None = None
    renorm_period: float | None = None
    margin_tol: float = MARGIN_TOL
    slope_tol: float = SLOPE_TOL
    workers: int = 1

    def __post_init__(self):
        for name in ("T_cap", "margin_tol", "slope_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.T is not None and not self.T > 0:
            raise ValueError("T must be positive")

    def horizon(self, delays) -> float:
        return self.T if self.T is not None else max(1000.0, 100.0 * max(delays))


@dataclass(frozen=True)
class PersistenceVerdict:
    u0: str
    s0: str
    exponents: dict
    I: frozenset
    J: frozenset
    margin: float
    decisive_block: int
    structure: BlockStructure
    margin_tol: float = MARGIN_TOL

    def to_dict(self) -> dict:
        return {
            "u0": self.u0,
            "s0": self.s0,
            "I": sorted(self.I),
            "J": sorted(self.J),
            "margin": self.margin,
            "decisive_block": self.decisive_block,
            "margin_tol": self.margin_tol,
            "structure": self.structure.to_dict(),
            "exponents": {str(j): e.to_dict() for j, e in sorted(self.exponents.items())},
        }

    @classmethod
    def from_dict(cls, d) -> "PersistenceVerdict":
        return cls(
            d["u0"], d["s0"],
            {int(j): LyapunovEstimate.from_dict(e) for j, e in d["exponents"].items()},
            frozenset(d["I"]), frozenset(d["J"]), d["margin"], d["decisive_block"],
            BlockStructure.from_dict(d["structure"]), d["margin_tol"],
        )


def decide(indices, exponents: dict, margin_tol: float) -> str:
    """Three-valued sign rule over a deciding index set."""
    ests = [exponents[j] for j in indices]
    if any(e.converged and e.value < -margin_tol for e in ests):
        return NO
    if all(e.converged and e.value > margin_tol for e in ests):
        return YES
    return UNCERTAIN


def classify(sys, opts: ClassifyOptions | None = None) -> PersistenceVerdict:
    opts = opts or ClassifyOptions()
    require_valid(sys)
    _, structure = structure_of(sys)
    exps = block_exponents(
        sys, T=opts.horizon(sys.delays), T_cap=opts.T_cap, renorm_period=opts.renorm_period,
        h=opts.h, slope_tol=opts.slope_tol, workers=opts.workers, structure=structure,
    )
    deciding = sorted(structure.I | structure.J)
    decisive = min(deciding, key=lambda j: (abs(exps[j].value), j))
    return PersistenceVerdict(
        u0=decide(structure.I, exps, opts.margin_tol),
        s0=decide(structure.J, exps, opts.margin_tol),
        exponents=exps,
        I=structure.I,
        J=structure.J,
        margin=abs(exps[decisive].value),
        decisive_block=decisive,
        structure=structure,
        margin_tol=opts.margin_tol,
    )


# --------------------------------------------------------------------------
# simulation cross-check


@dataclass(frozen=True)
class HistoryOutcome:
    label: str
    tail_min: tuple[float, ...]
    tail_max: tuple[float, ...]
    clamp_events: int
    clamp_min: float
    all_positive_start: bool

    @property
    def u0_witness(self) -> float:
        return min(self.tail_min)

    @property
    def s0_witness(self) -> float:
        return max(self.tail_min)

    def to_dict(self):
        return {
            "label": self.label,
            "tail_min": list(self.tail_min),
            "tail_max": list(self.tail_max),
            "u0_witness": self.u0_witness,
            "s0_witness": self.s0_witness,
            "clamp_events": self.clamp_events,
            "clamp_min": self.clamp_min,
            "all_positive_start": self.all_positive_start,
        }


@dataclass(frozen=True)
class EmpiricalReport:
    T: float
    W: float
    outcomes: tuple[HistoryOutcome, ...]
    consistent: bool | None = None
    note: str = ""

    def to_dict(self):
        return {
            "T": self.T,
            "W": self.W,
            "consistent": self.consistent,
            "note": self.note,
            "outcomes": [o.to_dict() for o in self.outcomes],
        }


def default_histories(sys) -> list[tuple[str, InitialHistory]]:
    """Four constants over four decades plus one oscillating positive map."""
    out = [(f"const {v:g}", InitialHistory.constant([v] * sys.n)) for v in (0.01, 0.1, 1.0, 10.0)]
    comps = []
    for tau in sys.delays:
        g = np.linspace(-tau, 0.0, 65)
        comps.append(SampledHistory(tuple(g), tuple(0.5 + 0.4 * np.sin(2 * np.pi * g / tau))))
    out.append(("oscillatory", InitialHistory(tuple(comps))))
    return out


def empirical_check(sys, histories: Sequence | None = None, T: float = 200.0, W: float | None = None,
                    h: float | None = None, verdict: PersistenceVerdict | None = None,
                    workers: int = 1) -> EmpiricalReport:
    """Integrate the nonlinear system from each history and report tail statistics.

    ``histories`` holds ``InitialHistory`` objects or ``(label, history)`` pairs.
    """
    if sys.nonlinearity.kind == LINEAR:
        raise ValueError("empirical_check runs nonlinear systems")
    require_valid(sys)
    W = 0.25 * T if W is None else W
    if not 0 < W < T:
        raise ValueError("need 0 < W < T")
    if histories is None:
        histories = default_histories(sys)
    labelled = [hh if isinstance(hh, tuple) else (f"history {k}", hh) for k, hh in enumerate(histories)]

    def run(item):
        label, hist = item
        if np.any(hist.at_zero() < 0):
            raise ValueError(f"{label}: histories must be nonnegative")
        try:
            traj = integrate(sys, hist, T, h)
        except Exception as exc:  # attribute the failure to the history
            raise RuntimeError(f"integration failed for {label}: {exc}") from exc
        tail = traj.values[traj.times >= T - W - 1e-12]
        return HistoryOutcome(
            label,
            tuple(float(x) for x in tail.min(axis=0)),
            tuple(float(x) for x in tail.max(axis=0)),
            traj.clamp_events,
            traj.clamp_min,
            bool(np.all(hist.at_zero() > 0)),
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = tuple(pool.map(run, labelled))
    else:
        outcomes = tuple(run(x) for x in labelled)

    consistent, note = None, ""
    if verdict is not None:
        if verdict.u0 == YES:
            pos = [o for o in outcomes if o.all_positive_start]
            consistent = all(o.u0_witness >= M_FLOOR for o in pos)
            note = f"u0=yes: every strongly positive start keeps all tail minima >= {M_FLOOR:g}"
        elif verdict.u0 == NO and verdict.s0 == NO:
            consistent = all(max(o.tail_max) < DECAY_TOL for o in outcomes)
            note = f"u0=s0=no: every start decays below {DECAY_TOL:g}"
        else:
            note = "verdict makes no prediction checkable on this history set"
    return EmpiricalReport(float(T), float(W), outcomes, consistent, note)


# --------------------------------------------------------------------------
# scalar linear criterion


PERSISTENT_TREND = "persistent-trend"
RECURRENT = "recurrent"
INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class ScalarCriterionReport:
    checkpoints: tuple[float, ...]
    F: tuple[float, ...]
    running_min: tuple[float, ...]
    slope: float
    intercept: float
    residual: float
    min_last_half: float
    verdict: str
    recurrence_tol: float

    def to_dict(self):
        return {
            "checkpoints": list(self.checkpoints),
            "F": list(self.F),
            "running_min": list(self.running_min),
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "min_last_half": self.min_last_half,
            "verdict": self.verdict,
            "recurrence_tol": self.recurrence_tol,
        }


def scalar_criterion(a: QuasiPeriodicSignal, checkpoints, recurrence_tol: float = RECURRENCE_TOL
                     ) -> ScalarCriterionReport:
    """Trend diagnostic for ``y' = a(t) y`` via ``F(t) = int_0^t a``.

    ``persistent-trend``: the least-squares slope of F over the last half of the
    checkpoints is positive and the linear rise across that half exceeds the
    oscillation about the fit.  ``recurrent``: F drops below ``recurrence_tol``
    somewhere in the last half.  Otherwise ``indeterminate``.
    """
    t = np.asarray(checkpoints, dtype=float)
    if t.ndim != 1 or len(t) < 2 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ValueError("checkpoints must be positive and strictly increasing (at least two)")
    F = np.asarray(integral(a, 0.0, t), dtype=float)
    running_min = np.minimum.accumulate(F[::-1])[::-1]
    half = len(t) // 2
    tl, Fl = t[half:], F[half:]
    if len(tl) >= 2:
        slope, intercept = np.polyfit(tl, Fl, 1)
    else:
        slope, intercept = F[-1] / t[-1], 0.0
    resid = float(np.max(np.abs(Fl - (slope * tl + intercept))))
    rise = slope * (tl[-1] - tl[0])
    min_half = float(np.min(Fl))
    if slope > 0 and rise > 2.0 * resid:
        verdict = PERSISTENT_TREND
    elif min_half < recurrence_tol:
        verdict = RECURRENT
    else:
        verdict = INDETERMINATE
    return ScalarCriterionReport(
        tuple(t.tolist()), tuple(F.tolist()), tuple(running_min.tolist()),
        float(slope), float(intercept), resid, min_half, verdict, float(recurrence_tol),
    )
