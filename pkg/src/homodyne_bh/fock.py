"""Fixed particle-number bosonic Fock basis.

States are occupation tuples ``(n_1, ..., n_L)`` with ``sum(n) == N``,
stored in reverse-lexicographic order, so ``(N, 0, ..., 0)`` comes first
and ``(0, ..., 0, N)`` comes last.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np

DEFAULT_DIMENSION_CAP = 200_000


class CapacityError(ValueError):
    """Raised when a requested basis exceeds the configured dimension cap."""


class InvalidStateError(ValueError):
    """Raised when an occupation tuple does not belong to a basis."""


def basis_dimension(L: int, N: int) -> int:
    return comb(N + L - 1, N)


def _reverse_lex_states(L: int, N: int) -> np.ndarray:
    dim = basis_dimension(L, N)
    out = np.zeros((dim, L), dtype=np.int64)
    row = 0
    occ = [0] * L

    def fill(site: int, remaining: int) -> None:
        nonlocal row
        if site == L - 1:
            occ[site] = remaining
            out[row] = occ
            row += 1
            return
        for n in range(remaining, -1, -1):
            occ[site] = n
            fill(site + 1, remaining - n)

    fill(0, N)
    return out


@dataclass(frozen=True)
class FockBasis:
    """Ordered occupation-number basis of ``N`` bosons on ``L`` sites.

    Attributes
    ----------
    L, N : int
        Site and particle counts.
    states : ndarray of shape (dim, L)
        Occupations, one row per basis state, read-only.
    """

    L: int
    N: int
    states: np.ndarray = field(repr=False)
    _index: dict = field(repr=False, compare=False)
    _keys: np.ndarray = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    def __len__(self) -> int:
        return self.dim

    def __iter__(self):
        return (tuple(int(n) for n in s) for s in self.states)

    def index(self, state: Sequence[int]) -> int:
        return state_index(self, state)

    def encode(self, occupations: np.ndarray) -> np.ndarray:
        """Integer keys of occupation rows (base ``N + 1``, first site most significant)."""
        occupations = np.atleast_2d(occupations)
        weights = (self.N + 1) ** np.arange(self.L - 1, -1, -1, dtype=np.int64)
        return occupations @ weights

    def lookup(self, occupations: np.ndarray) -> np.ndarray:
        """Vectorised position lookup for rows known to lie in the basis."""
        keys = self.encode(occupations)
        # keys are strictly decreasing along the basis
        pos = np.searchsorted(-self._keys, -keys)
        return pos

    def vector(self, state: Sequence[int]) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(state)] = 1.0
        return v


def enumerate_basis(L: int, N: int, max_dim: int = DEFAULT_DIMENSION_CAP) -> FockBasis:
    """Enumerate the ``(L, N)`` Fock basis in reverse-lexicographic order.

    Raises
    ------
    CapacityError
        If ``binomial(N + L - 1, N)`` exceeds ``max_dim``.
    """
    if L < 1:
        raise ValueError(f"need at least one site, got L={L}")
    if N < 0:
        raise ValueError(f"particle number must be non-negative, got N={N}")
    dim = basis_dimension(L, N)
    if dim > max_dim:
        raise CapacityError(
            f"basis dimension {dim} for L={L}, N={N} exceeds the cap {max_dim}"
        )
    states = _reverse_lex_states(L, N)
    states.setflags(write=False)
    index = {tuple(int(n) for n in s): k for k, s in enumerate(states)}
    weights = (N + 1) ** np.arange(L - 1, -1, -1, dtype=np.int64)
    keys = states @ weights
    keys.setflags(write=False)
    return FockBasis(L=L, N=N, states=states, _index=index, _keys=keys)


def state_index(basis: FockBasis, s: Sequence[int]) -> int:
    key = tuple(int(n) for n in s)
    if len(key) != basis.L or sum(key) != basis.N or min(key, default=0) < 0:
        raise InvalidStateError(
            f"state {key} is not in the L={basis.L}, N={basis.N} basis"
        )
    return basis._index[key]


def combinatorial_rank(s: Sequence[int]) -> int:
    """Position of ``s`` in reverse-lexicographic order, computed by counting.

    Independent of any enumeration; used to cross-check :func:`state_index`.
    """
    s = [int(n) for n in s]
    L, N = len(s), sum(s)
    rank = 0
    remaining = N
    for site in range(L - 1):
        sites_left = L - site - 1
        # states with a larger occupation at this site come first
        for n in range(s[site] + 1, remaining + 1):
            rank += comb(remaining - n + sites_left - 1, sites_left - 1)
        remaining -= s[site]
    return rank
