"""Finest tensor factorization of a pure state across its parties.

The decomposition repeatedly extracts the smallest party subset whose
marginal is pure (search by subset size, then lexicographic on the
original party indices), splits it off by SVD, and continues on the
remainder.  Minimality makes every multi-party factor genuinely
entangled: a pure proper sub-marginal would have been found at a smaller
size first.  The producibility of the state is the size of its largest
factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .partitions import Partition
from .qstate import (
    FIDELITY_TOL,
    NumericalContractError,
    PureState,
    PURITY_TOL,
    SystemLayout,
    canonical_phase,
    marginal_purity,
)

SINGLE = "single"
GENUINE = "genuinely_entangled"


@dataclass(frozen=True)
class Factor:
    parties: tuple[int, ...]   # global party indices, ascending
    state: PureState
    classification: str

    @property
    def size(self) -> int:
        return len(self.parties)


@dataclass(frozen=True)
class FactorDecomposition:
    factors: tuple[Factor, ...]
    fidelity: float            # |<reconstruction|input>|^2

    @property
    def producibility(self) -> int:
        return max(f.size for f in self.factors)

    @property
    def genuine(self) -> bool:
        return len(self.factors) == 1 and self.factors[0].classification == GENUINE

    def block_partition(self) -> Partition:
        return Partition.of([f.parties for f in self.factors])


def _extract(state: PureState, local: tuple[int, ...]) -> tuple[PureState, PureState]:
    """Split a (nearly) product state into factor and remainder by SVD."""
    n = state.num_parties
    rest = [i for i in range(n) if i not in set(local)]
    dims = state.layout.dims
    dk = int(np.prod([dims[i] for i in local]))
    m = state.tensor().transpose(list(local) + rest).reshape(dk, -1)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    fac = canonical_phase(u[:, 0])
    rem = canonical_phase(vh[0, :])
    fac_state = PureState(state.layout.sub_layout(local), fac)
    rem_state = PureState(state.layout.sub_layout(rest), rem / np.linalg.norm(rem))
    return fac_state, rem_state


def finest_factorization(state: PureState, tol: float = PURITY_TOL) -> FactorDecomposition:
    """Decompose into the finest tuple of pure tensor factors.

    Factors are reported in ascending order of their first party.  The
    tensor product of the factors must reproduce the input with fidelity
    at least 1 - 1e-8, otherwise the tolerance story has broken down and
    a NumericalContractError is raised.
    """
    n = state.num_parties
    factors: list[tuple[tuple[int, ...], PureState]] = []
    remaining = list(range(n))  # global indices carried by `work`
    work = state
    while remaining:
        nr = len(remaining)
        found: tuple[int, ...] | None = None
        # a proper pure subset pairs with a pure complement, so scanning up
        # to half the parties cannot miss one
        for size in range(1, nr // 2 + 1):
            for local in combinations(range(nr), size):
                if marginal_purity(work, local) >= 1.0 - tol:
                    found = local
                    break
            if found is not None:
                break
        if found is None:
            factors.append((tuple(remaining), work))
            break
        fac_state, rem_state = _extract(work, found)
        factors.append((tuple(remaining[i] for i in found), fac_state))
        remaining = [p for i, p in enumerate(remaining) if i not in set(found)]
        work = rem_state

    factors.sort(key=lambda item: item[0][0])
    fid = _reconstruction_fidelity(state, factors)
    if fid < 1.0 - FIDELITY_TOL:
        raise NumericalContractError(
            f"factor reconstruction fidelity {fid} below {1.0 - FIDELITY_TOL}"
        )
    return FactorDecomposition(
        factors=tuple(
            Factor(
                parties=parties,
                state=fs,
                classification=GENUINE if len(parties) >= 2 else SINGLE,
            )
            for parties, fs in factors
        ),
        fidelity=fid,
    )


def _reconstruction_fidelity(
    state: PureState, factors: list[tuple[tuple[int, ...], PureState]]
) -> float:
    order: list[int] = []
    rec = np.ones(1, dtype=np.complex128)
    for parties, fs in factors:
        rec = np.multiply.outer(rec, fs.amplitudes.reshape(fs.layout.dims))
        order.extend(parties)
    rec = rec.reshape([1] + [d for _, fs in factors for d in fs.layout.dims])[0]
    inv = np.argsort(order)
    rec = rec.transpose(inv).reshape(-1)
    return float(abs(np.vdot(rec, state.amplitudes)) ** 2)


def classify(state: PureState) -> tuple[int, bool]:
    """(producibility, genuinely multipartite entangled) of a pure state."""
    dec = finest_factorization(state)
    return dec.producibility, dec.genuine
