"""The pair digraph D and its component C containing (0, 0).

The vertices of D are the pairs (i, j) with 0 <= i < P and 0 <= j < Q;
digit r sends (i, j) to (floor((i + rP)/b), floor((j + rQ)/b)). The
strongly connected component of (0, 0) is the staircase
{(floor(tP), floor(tQ)) : 0 <= t < 1} with P + Q - 1 members.

``build_component`` constructs C twice, once as a graph closure and once by
sweeping the breakpoints of t, and refuses to return if the two disagree.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from digit_spectra.config import MAX_COMPONENT_SIDE
from digit_spectra.sieve import check_coprime_triple
from digit_spectra.utils import InconsistencyError

logger = logging.getLogger("digit_spectra.pairgraph")

Pair = tuple[int, int]

_PATH_COUNT_LIMIT = 1 << 127


def edge_targets(i: int, j: int, b: int, P: int, Q: int) -> list[Pair]:
    """Targets of the b edges leaving (i, j), indexed by the digit r."""
    if not (0 <= i < P and 0 <= j < Q):
        raise ValueError(f"pair ({i}, {j}) outside [0, {P}) x [0, {Q})")
    return [((i + r * P) // b, (j + r * Q) // b) for r in range(b)]


@dataclass(frozen=True)
class ComponentC:
    """Members of C in lexicographic order, with their row index."""

    b: int
    P: int
    Q: int
    members: tuple[Pair, ...]
    index: dict[Pair, int] = field(compare=False, repr=False)

    @classmethod
    def from_members(cls, b: int, P: int, Q: int, members: list[Pair]) -> ComponentC:
        ordered = tuple(sorted(members))
        return cls(b, P, Q, ordered, {m: k for k, m in enumerate(ordered)})

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, pair: object) -> bool:
        return pair in self.index

    @cached_property
    def edge_table(self) -> np.ndarray:
        """(|C|, b) array: row index of the target of digit r from each member."""
        table = np.empty((len(self), self.b), dtype=np.int64)
        for k, (i, j) in enumerate(self.members):
            for r, target in enumerate(edge_targets(i, j, self.b, self.P, self.Q)):
                table[k, r] = self.index[target]
        return table


def _check_sides(b: int, P: int, Q: int) -> None:
    if b < 2:
        raise ValueError(f"base must be at least 2, got {b}")
    if not check_coprime_triple(P, Q, b):
        raise ValueError(f"P={P}, Q={Q} and b={b} must be pairwise coprime")
    if max(P, Q) > MAX_COMPONENT_SIDE:
        raise ValueError(f"P and Q are capped at {MAX_COMPONENT_SIDE}, got P={P}, Q={Q}")


def component_by_sweep(b: int, P: int, Q: int) -> ComponentC:
    """C as {(floor(tP), floor(tQ)) : 0 <= t < 1}.

    The value pair only changes at t = k/P or t = k/Q. At a breakpoint
    t = k/P the first coordinate is k, the second floor(kQ/P); both are
    exact integer divisions.
    """
    _check_sides(b, P, Q)
    pairs = {(k, k * Q // P) for k in range(P)}
    pairs |= {(k * P // Q, k) for k in range(Q)}
    return ComponentC.from_members(b, P, Q, list(pairs))


def _closure(b: int, P: int, Q: int) -> set[Pair]:
    seen = {(0, 0)}
    queue = deque([(0, 0)])
    while queue:
        i, j = queue.popleft()
        for target in edge_targets(i, j, b, P, Q):
            if target not in seen:
                seen.add(target)
                queue.append(target)
    return seen


def _reaching_origin(b: int, P: int, Q: int, nodes: set[Pair]) -> set[Pair]:
    reverse: dict[Pair, list[Pair]] = {}
    for i, j in nodes:
        for target in edge_targets(i, j, b, P, Q):
            reverse.setdefault(target, []).append((i, j))
    reached = {(0, 0)}
    queue = deque([(0, 0)])
    while queue:
        node = queue.popleft()
        for source in reverse.get(node, ()):
            if source not in reached:
                reached.add(source)
                queue.append(source)
    return reached


def build_component(b: int, P: int, Q: int) -> ComponentC:
    """The strongly connected component of (0, 0) in D.

    Raises:
        ValueError: If P, Q, b are not pairwise coprime or too large.
        InconsistencyError: If closure and sweep disagree, or C has the
            wrong size.
    """
    _check_sides(b, P, Q)
    forward = _closure(b, P, Q)
    core = _reaching_origin(b, P, Q, forward)
    if core != forward:
        raise InconsistencyError(
            f"closure of (0,0) for b={b}, P={P}, Q={Q} is not strongly connected: "
            f"{len(forward) - len(core)} members cannot return to (0,0)"
        )
    component = ComponentC.from_members(b, P, Q, list(core))
    swept = component_by_sweep(b, P, Q)
    if component.members != swept.members:
        raise InconsistencyError(
            f"graph closure ({len(component)} members) and breakpoint sweep "
            f"({len(swept)} members) disagree for b={b}, P={P}, Q={Q}"
        )
    if len(component) != P + Q - 1:
        raise InconsistencyError(f"component has {len(component)} members, expected {P + Q - 1}")
    logger.debug("component b=%d P=%d Q=%d: %d members", b, P, Q, len(component))
    return component


def is_staircase(component: ComponentC) -> bool:
    """Members form a lattice path of unit steps from (0, 0) to (P-1, Q-1)."""
    path = sorted(component.members, key=lambda m: (m[0] + m[1], m[0]))
    if not path or path[0] != (0, 0) or path[-1] != (component.P - 1, component.Q - 1):
        return False
    for (i, j), (i2, j2) in zip(path, path[1:]):
        if (i2 - i, j2 - j) not in ((1, 0), (0, 1)):
            return False
    return True


def find_i0(component: ComponentC) -> int:
    """The unique i0 < b with (i0, b-1) and (i0, b) both in C.

    Raises:
        ValueError: Unless b < P < Q.
        InconsistencyError: If no such i0, or more than one, exists.
    """
    b, P, Q = component.b, component.P, component.Q
    if not b < P < Q:
        raise ValueError(f"find_i0 needs b < P < Q, got b={b}, P={P}, Q={Q}")
    hits = [i for i in range(P) if (i, b - 1) in component and (i, b) in component]
    if len(hits) != 1:
        raise InconsistencyError(
            f"expected exactly one step (i0,{b - 1}) -> (i0,{b}) in C, found {hits}"
        )
    i0 = hits[0]
    if i0 >= b:
        raise InconsistencyError(f"i0={i0} is not below b={b}")
    return i0


@dataclass(frozen=True)
class PathCountMatrix:
    """B_L[x, y] = number of length-L digit paths from x to y in C."""

    component: ComponentC
    L: int
    counts: np.ndarray

    def row_sums(self) -> list[int]:
        return [int(sum(row)) for row in self.counts]


def adjacency_counts(component: ComponentC) -> np.ndarray:
    """M[x, y] = number of digits r sending x to y (object-dtype integers)."""
    n = len(component)
    M = np.zeros((n, n), dtype=object)
    for x, targets in enumerate(component.edge_table):
        for y in targets:
            M[x, int(y)] += 1
    return M


def path_counts(component: ComponentC, L: int) -> PathCountMatrix:
    """B_L = M^L with exact Python integers; b^L must stay within 2^127."""
    if L < 1:
        raise ValueError(f"path length must be at least 1, got {L}")
    if component.b**L > _PATH_COUNT_LIMIT:
        raise ValueError(f"b^L = {component.b}^{L} exceeds 2**127")
    M = adjacency_counts(component)
    result = M
    for _ in range(L - 1):
        result = result.dot(M)
    return PathCountMatrix(component, L, result)


def verify_floor_identity(b: int, P: int, t_num: int, t_den: int, r: int) -> bool:
    """Check floor((floor(tP) + rP)/b) == floor((t + r)P/b) exactly."""
    t = Fraction(t_num, t_den)
    if not 0 <= t < 1:
        raise ValueError(f"t = {t} outside [0, 1)")
    if not 0 <= r < b:
        raise ValueError(f"digit r = {r} outside [0, {b})")
    lhs = (math.floor(t * P) + r * P) // b
    rhs = math.floor((t + r) * P / b)
    return lhs == rhs
