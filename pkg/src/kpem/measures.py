"""k-partite entanglement measures on pure states.

Three families:

* factor family (E_k, calE_k): split the state into its finest pure
  factors and add a per-factor quantity over every genuinely entangled
  factor of size >= k; zero when no factor is that large.
* min family (Eprime_k, C_k, Cq_k, Calpha_k): minimize a per-partition
  score over every partition of the parties into blocks of at most k-1,
  reporting the first minimizer in enumeration order as witness.
* geometric family (CGq_k, CGalpha_k): a normalized geometric mean of the
  per-partition block sums over that same partition family; one partition
  with a vanishing sum annihilates the whole product, and there is no
  witness partition.

All per-block evaluations go through a per-state cache of marginal
spectra, keyed by party subset, so partition sweeps cost dictionary
lookups instead of repeated partial traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .factorize import FactorDecomposition, finest_factorization
from .partitions import Partition, count_k_fineness, iter_k_fineness
from .qstate import DensityMatrix, PureState, marginal_spectrum
from .redfun import CONCURRENCE, ReducedFunctionSpec, evaluate_spectrum

MEASURE_KINDS = (
    "C_k", "Cq_k", "Calpha_k", "CGq_k", "CGalpha_k", "E_k", "calE_k", "Eprime_k",
)
FACTOR_KINDS = ("E_k", "calE_k")
MIN_KINDS = ("Eprime_k", "C_k", "Cq_k", "Calpha_k")
GEOMETRIC_KINDS = ("CGq_k", "CGalpha_k")
UNIFIED_KINDS = ("additive", "bipartite_sum", "min_reduced")

PARTITION_COUNT_CAP = 1_000_000   # min-family sweep guard
GEOMETRIC_PARTY_CAP = 9           # product over Gamma grows like Bell(n)


@dataclass(frozen=True)
class MeasureSpec:
    """Which measure, at which k, with which reduced function/parameter."""

    kind: str
    k: int
    h: Optional[ReducedFunctionSpec] = None
    parameter: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in MEASURE_KINDS:
            raise ValueError(f"unknown measure kind {self.kind!r}")
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.kind in ("E_k", "calE_k", "Eprime_k"):
            if self.h is None:
                raise ValueError(f"{self.kind} needs a reduced function")
            if self.parameter is not None:
                raise ValueError(f"{self.kind} takes no parameter")
        elif self.kind == "C_k":
            if self.h is not None or self.parameter is not None:
                raise ValueError("C_k is parameter-free (concurrence built in)")
        else:
            if self.h is not None:
                raise ValueError(f"{self.kind} fixes its reduced function")
            if self.kind in ("Cq_k", "CGq_k"):
                if self.parameter is None or not self.parameter > 1.0:
                    raise ValueError(f"{self.kind} needs q > 1")
            else:
                if self.parameter is None or not 0.0 < self.parameter < 1.0:
                    raise ValueError(f"{self.kind} needs 0 < alpha < 1")

    def reduced_function(self) -> ReducedFunctionSpec:
        """The function actually applied to each block spectrum."""
        if self.kind == "C_k":
            return CONCURRENCE
        if self.kind in ("Cq_k", "CGq_k"):
            return ReducedFunctionSpec("q_family", self.parameter)
        if self.kind in ("Calpha_k", "CGalpha_k"):
            return ReducedFunctionSpec("alpha_family", self.parameter)
        assert self.h is not None
        return self.h


@dataclass(frozen=True)
class MeasureResult:
    value: float
    witness: Union[Partition, FactorDecomposition, None]
    breakdown: dict


class MarginalCache:
    """Marginal spectra of one pure state, keyed by party subset."""

    def __init__(self, state: PureState):
        self.state = state
        self._spectra: dict[tuple[int, ...], np.ndarray] = {}
        self._values: dict[tuple, float] = {}

    def spectrum(self, subset: Sequence[int]) -> np.ndarray:
        key = tuple(sorted(subset))
        got = self._spectra.get(key)
        if got is None:
            got = marginal_spectrum(self.state, key)
            self._spectra[key] = got
        return got

    def h_value(self, h: ReducedFunctionSpec, subset: Sequence[int]) -> float:
        key = (h.kind, h.parameter, tuple(sorted(subset)))
        got = self._values.get(key)
        if got is None:
            got = evaluate_spectrum(h, self.spectrum(key[2]))
            self._values[key] = got
        return got


def _cache_for(state: PureState, cache: Optional[MarginalCache]) -> MarginalCache:
    if cache is None:
        return MarginalCache(state)
    if cache.state is not state:
        raise ValueError("cache belongs to a different state")
    return cache


# --- underlying whole-state quantities ----------------------------------------


def _bipartition_representatives(n: int) -> list[tuple[int, ...]]:
    """One party subset per bipartition: the smaller side; for even n the
    equal halves are represented by the side without the last party; for
    n = 2 both singles count, which makes the two-party value equal the
    plain bipartite entanglement h(rho_A)."""
    from itertools import combinations

    if n == 2:
        return [(0,), (1,)]
    reps: list[tuple[int, ...]] = []
    for s in range(1, (n - 1) // 2 + 1):
        reps.extend(combinations(range(n), s))
    if n % 2 == 0:
        reps.extend(combinations(range(n - 1), n // 2))
    return reps


def unified_mem(
    kind: str,
    h: ReducedFunctionSpec,
    state: PureState,
    cache: Optional[MarginalCache] = None,
) -> float:
    """Whole-state quantities the factor family is built from.

    additive:       (1/2) sum_i h(rho_i) over single parties
    bipartite_sum:  (1/2) sum over one representative side per bipartition
    min_reduced:    min over proper nonempty party subsets of h(rho_X)
    """
    if kind not in UNIFIED_KINDS:
        raise ValueError(f"unknown unified kind {kind!r}")
    n = state.num_parties
    if n < 2:
        raise ValueError("unified quantities need at least two parties")
    cache = _cache_for(state, cache)
    if kind == "additive":
        return 0.5 * sum(cache.h_value(h, (i,)) for i in range(n))
    if kind == "bipartite_sum":
        return 0.5 * sum(cache.h_value(h, rep) for rep in _bipartition_representatives(n))
    from itertools import combinations

    best = math.inf
    for s in range(1, n):
        for sub in combinations(range(n), s):
            val = cache.h_value(h, sub)
            if val < best:
                best = val
    return best


# --- factor family -------------------------------------------------------------


def measure_factor_family(
    kind: str, k: int, h: ReducedFunctionSpec, state: PureState
) -> MeasureResult:
    if kind not in FACTOR_KINDS:
        raise ValueError(f"not a factor-family kind: {kind!r}")
    spec = MeasureSpec(kind, k, h=h)
    _check_k(spec.k, state.num_parties)
    dec = finest_factorization(state)
    unified = "additive" if kind == "E_k" else "bipartite_sum"
    contributions = tuple(
        (f.parties, unified_mem(unified, h, f.state))
        for f in dec.factors
        if f.size >= k
    )
    return MeasureResult(
        value=float(sum(v for _, v in contributions)),
        witness=dec,
        breakdown={"factors": contributions},
    )


# --- min family -----------------------------------------------------------------


def _min_family_score(kind: str, terms: Sequence[float], m: int) -> float:
    total = sum(terms)
    if kind == "Eprime_k":
        return 0.5 * total
    if kind == "C_k":
        return total / m
    return math.sqrt(total / m)  # Cq_k, Calpha_k


def measure_min_family(
    kind: str,
    k: int,
    state: PureState,
    h: Optional[ReducedFunctionSpec] = None,
    parameter: Optional[float] = None,
    cache: Optional[MarginalCache] = None,
    collect_ties: bool = False,
    unsafe_large: bool = False,
) -> MeasureResult:
    """Minimize the per-partition score over all partitions with blocks of
    at most k-1 parties.  First minimizer in enumeration order wins;
    co-minimal partitions (within 1e-12) are collected on request."""
    if kind not in MIN_KINDS:
        raise ValueError(f"not a min-family kind: {kind!r}")
    spec = MeasureSpec(kind, k, h=h, parameter=parameter)
    n = state.num_parties
    _check_k(k, n)
    if not unsafe_large and count_k_fineness(n, k - 1) > PARTITION_COUNT_CAP:
        raise ValueError(
            f"|Gamma_{k - 1}| for {n} parties exceeds {PARTITION_COUNT_CAP}; "
            "pass unsafe_large=True to override"
        )
    cache = _cache_for(state, cache)
    hfun = spec.reduced_function()

    best = math.inf
    best_partition: Optional[Partition] = None
    best_terms: tuple[float, ...] = ()
    ties: list[Partition] = []
    for part in iter_k_fineness(range(n), k - 1):
        terms = [cache.h_value(hfun, block) for block in part.blocks]
        score = _min_family_score(kind, terms, part.num_blocks)
        if score < best:
            best = score
            best_partition = part
            best_terms = tuple(terms)
            ties = [part]
        elif collect_ties and score <= best + 1e-12:
            ties.append(part)

    assert best_partition is not None
    breakdown = {
        "terms": tuple(zip(best_partition.blocks, best_terms)),
        "num_blocks": best_partition.num_blocks,
    }
    if collect_ties:
        breakdown["co_minimal"] = tuple(ties)
    return MeasureResult(value=float(best), witness=best_partition, breakdown=breakdown)


# --- geometric family ------------------------------------------------------------


def measure_geometric_family(
    kind: str,
    k: int,
    state: PureState,
    parameter: Optional[float] = None,
    cache: Optional[MarginalCache] = None,
    unsafe_large: bool = False,
) -> MeasureResult:
    """Geometric-mean family over the same bounded-block partition sweep.

    value = ( prod_i [sum of block values of partition i] / prod_i m_i
            ) ^ (1 / (2 * family size)),
    computed in log space; any zero partition sum gives exactly 0.
    """
    if kind not in GEOMETRIC_KINDS:
        raise ValueError(f"not a geometric-family kind: {kind!r}")
    spec = MeasureSpec(kind, k, parameter=parameter)
    n = state.num_parties
    _check_k(k, n)
    if not unsafe_large and n > GEOMETRIC_PARTY_CAP:
        raise ValueError(
            f"geometric family capped at {GEOMETRIC_PARTY_CAP} parties; "
            "pass unsafe_large=True to override"
        )
    cache = _cache_for(state, cache)
    hfun = spec.reduced_function()

    rows: list[tuple[int, float]] = []
    log_num = 0.0
    log_den = 0.0
    hit_zero = False
    for part in iter_k_fineness(range(n), k - 1):
        total = sum(cache.h_value(hfun, block) for block in part.blocks)
        rows.append((part.num_blocks, total))
        if total <= 0.0:
            hit_zero = True
        elif not hit_zero:
            log_num += math.log(total)
            log_den += math.log(part.num_blocks)
    value = 0.0 if hit_zero else math.exp((log_num - log_den) / (2.0 * len(rows)))
    return MeasureResult(
        value=value,
        witness=None,
        breakdown={"partitions": tuple(rows), "cardinality": len(rows)},
    )


# --- dispatch ---------------------------------------------------------------------


def _check_k(k: int, n: int) -> None:
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= {n}, got k={k}")


def evaluate_measure(
    spec: MeasureSpec,
    state: PureState,
    cache: Optional[MarginalCache] = None,
    unsafe_large: bool = False,
) -> MeasureResult:
    if spec.kind in FACTOR_KINDS:
        assert spec.h is not None
        return measure_factor_family(spec.kind, spec.k, spec.h, state)
    if spec.kind in MIN_KINDS:
        return measure_min_family(
            spec.kind, spec.k, state,
            h=spec.h, parameter=spec.parameter,
            cache=cache, unsafe_large=unsafe_large,
        )
    return measure_geometric_family(
        spec.kind, spec.k, state,
        parameter=spec.parameter, cache=cache, unsafe_large=unsafe_large,
    )


def value_from_breakdown(spec: MeasureSpec, result: MeasureResult) -> float:
    """Recompute the value from witness + breakdown; tests hold this to 1e-10."""
    if spec.kind in FACTOR_KINDS:
        return float(sum(v for _, v in result.breakdown["factors"]))
    if spec.kind in MIN_KINDS:
        terms = [v for _, v in result.breakdown["terms"]]
        return _min_family_score(spec.kind, terms, result.breakdown["num_blocks"])
    rows = result.breakdown["partitions"]
    if any(total <= 0.0 for _, total in rows):
        return 0.0
    log_sum = sum(math.log(total) - math.log(m) for m, total in rows)
    return math.exp(log_sum / (2.0 * len(rows)))


def parse_measure(text: str, k: int, h: Optional[ReducedFunctionSpec] = None) -> MeasureSpec:
    """CLI grammar: C | Cq:<q> | Calpha:<a> | CGq:<q> | CGalpha:<a> | E | calE | Eprime."""
    plain = {"C": "C_k", "E": "E_k", "calE": "calE_k", "Eprime": "Eprime_k"}
    if text in plain:
        kind = plain[text]
        if kind == "C_k":
            if h is not None:
                raise ValueError("measure C fixes its reduced function; drop --h")
            return MeasureSpec(kind, k)
        if h is None:
            raise ValueError(f"--measure {text} needs --h")
        return MeasureSpec(kind, k, h=h)
    for prefix, kind in (
        ("Cq:", "Cq_k"), ("Calpha:", "Calpha_k"),
        ("CGq:", "CGq_k"), ("CGalpha:", "CGalpha_k"),
    ):
        if text.startswith(prefix):
            if h is not None:
                raise ValueError(f"measure {text} fixes its reduced function; drop --h")
            try:
                parameter = float(text[len(prefix):])
            except ValueError:
                raise ValueError(f"cannot parse measure {text!r}") from None
            return MeasureSpec(kind, k, parameter=parameter)
    raise ValueError(f"cannot parse measure {text!r}")


# --- mixed-state upper bound -------------------------------------------------------


def convex_roof_upper_bound(
    spec: MeasureSpec,
    dm: DensityMatrix,
    budget: int,
    seed: int,
    return_trace: bool = False,
):
    """Upper-bound the convex-roof extension by sampled pure ensembles.

    The eigen-ensemble is always tried first, then `budget` random
    ensembles obtained by mixing the support with Haar isometries of
    growing size.  The running minimum is nonincreasing in the budget.
    This is an upper bound only, never claimed tight.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    lam, vecs = np.linalg.eigh(dm.matrix)
    lam = np.real(lam)
    keep = lam > 1e-12
    lam, vecs = lam[keep], vecs[:, keep]
    lam = lam / lam.sum()
    r = lam.size

    def ensemble_value(weights: np.ndarray, members: np.ndarray) -> float:
        total = 0.0
        for p, vec in zip(weights, members.T):
            if p < 1e-15:
                continue
            member = PureState(dm.layout, vec / np.linalg.norm(vec))
            total += p * evaluate_measure(spec, member).value
        return total

    rng = np.random.default_rng(seed)
    best = ensemble_value(lam, vecs)
    trace = [best]
    # every size-m ensemble of rho is scaled @ U.T for an m x r isometry U
    scaled = vecs * np.sqrt(lam)[None, :]
    for i in range(budget):
        m = r + (i % (r + 1))
        if m == 1:
            trace.append(best)  # pure input: only one ensemble exists
            continue
        z = rng.standard_normal((m, r)) + 1j * rng.standard_normal((m, r))
        isometry, _ = np.linalg.qr(z)
        members = scaled @ isometry.T
        weights = np.linalg.norm(members, axis=0) ** 2
        val = ensemble_value(weights, members)
        if val < best:
            best = val
        trace.append(best)
    return (best, trace) if return_trace else best
