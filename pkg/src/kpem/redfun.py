"""Reduced functions: scalar maps on density-matrix spectra.

Every kind evaluates through the clipped spectrum, one numerical pathway:

    concurrence   sqrt(2 (1 - sum lam^2))
    entropy       -sum lam log2 lam          (0 log 0 = 0)
    q_family      1 - sum lam^q              (q > 1)
    alpha_family  sum lam^alpha - 1          (0 < alpha < 1)

A spectrum whose purity reaches the shared 1e-9 threshold evaluates to
exactly 0.0, which keeps "this marginal is pure" consistent between the
measures and the factorization search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .qstate import (
    DensityMatrix,
    PureState,
    PURITY_TOL,
    SystemLayout,
    haar_state,
    reduced_density,
    spectrum,
)

KINDS = ("concurrence", "entropy", "q_family", "alpha_family")


@dataclass(frozen=True)
class ReducedFunctionSpec:
    kind: str
    parameter: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown reduced function kind {self.kind!r}")
        if self.kind in ("concurrence", "entropy"):
            if self.parameter is not None:
                raise ValueError(f"{self.kind} takes no parameter")
        elif self.kind == "q_family":
            if self.parameter is None or not self.parameter > 1.0:
                raise ValueError(f"q_family needs q > 1, got {self.parameter}")
        elif self.kind == "alpha_family":
            if self.parameter is None or not 0.0 < self.parameter < 1.0:
                raise ValueError(
                    f"alpha_family needs 0 < alpha < 1, got {self.parameter}"
                )


CONCURRENCE = ReducedFunctionSpec("concurrence")
ENTROPY = ReducedFunctionSpec("entropy")


def evaluate_spectrum(h: ReducedFunctionSpec, lam: np.ndarray) -> float:
    """Evaluate h on an already clipped spectrum."""
    lam = np.asarray(lam)
    pur = float(np.sum(lam * lam))
    if pur >= 1.0 - PURITY_TOL:
        return 0.0
    if h.kind == "concurrence":
        return math.sqrt(2.0 * (1.0 - pur))
    if h.kind == "entropy":
        pos = lam[lam > 0.0]
        return float(-np.sum(pos * np.log2(pos)))
    if h.kind == "q_family":
        return float(1.0 - np.sum(lam ** h.parameter))
    return float(np.sum(lam[lam > 0.0] ** h.parameter) - 1.0)


def evaluate(h: ReducedFunctionSpec, dm: DensityMatrix) -> float:
    return evaluate_spectrum(h, spectrum(dm))


def parse_redfun(text: str) -> ReducedFunctionSpec:
    """Parse the CLI syntax: concurrence | entropy | q:<value> | alpha:<value>."""
    if text == "concurrence":
        return CONCURRENCE
    if text == "entropy":
        return ENTROPY
    if text.startswith("q:"):
        return ReducedFunctionSpec("q_family", float(text[2:]))
    if text.startswith("alpha:"):
        return ReducedFunctionSpec("alpha_family", float(text[6:]))
    raise ValueError(f"cannot parse reduced function {text!r}")


def format_redfun(h: ReducedFunctionSpec) -> str:
    if h.kind == "concurrence":
        return "concurrence"
    if h.kind == "entropy":
        return "entropy"
    if h.kind == "q_family":
        return f"q:{h.parameter:g}"
    return f"alpha:{h.parameter:g}"


# --- statistical property checks ---------------------------------------------

SAMPLE_TOL = 1e-9
PROPERTIES = ("concave", "subadditive")


@dataclass(frozen=True)
class SampleCheckReport:
    h: ReducedFunctionSpec
    property: str
    trials: int
    seed: int
    passed: bool
    violations: int
    worst_margin: float
    witness: Optional[dict]


def _random_mixed(rng: np.random.Generator, d: int) -> DensityMatrix:
    # marginal of a Haar state on d x d, generically full rank
    layout = SystemLayout.of(["a", "b"], [d, d])
    return reduced_density(haar_state(layout, rng), [0])


def sample_check(
    h: ReducedFunctionSpec, property: str, trials: int, seed: int
) -> SampleCheckReport:
    """Monte-Carlo check of concavity or subadditivity of h.

    Margins are oriented so that anything above SAMPLE_TOL is a violation;
    the worst trial is always recorded as a witness and can be replayed by
    rerunning with the same seed.  No pass/fail is asserted beyond the
    observed margins.
    """
    if property not in PROPERTIES:
        raise ValueError(f"unknown property {property!r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = -math.inf
    worst_witness: Optional[dict] = None
    violations = 0
    for t in range(trials):
        if property == "concave":
            d = int(rng.integers(2, 5))
            m = int(rng.integers(2, 4))
            states = [_random_mixed(rng, d) for _ in range(m)]
            w = rng.random(m) + 1e-3
            w /= w.sum()
            mix = DensityMatrix(
                states[0].layout,
                sum(p * s.matrix for p, s in zip(w, states)),
            )
            margin = float(
                sum(p * evaluate(h, s) for p, s in zip(w, states)) - evaluate(h, mix)
            )
            desc = {"trial": t, "d": d, "weights": w.tolist()}
        else:
            da, db, dc = (int(rng.integers(2, 4)) for _ in range(3))
            psi = haar_state(SystemLayout.of(["a", "b", "c"], [da, db, dc]), rng)
            margin = float(
                evaluate(h, reduced_density(psi, [0, 1]))
                - evaluate(h, reduced_density(psi, [0]))
                - evaluate(h, reduced_density(psi, [1]))
            )
            desc = {"trial": t, "dims": [da, db, dc]}
        if margin > SAMPLE_TOL:
            violations += 1
        if margin > worst:
            worst = margin
            worst_witness = desc
    return SampleCheckReport(
        h=h,
        property=property,
        trials=trials,
        seed=seed,
        passed=violations == 0,
        violations=violations,
        worst_margin=worst,
        witness=worst_witness,
    )
