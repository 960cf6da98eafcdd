"""Chain selection, outer-qubit projection, partial transpose and negativity.

The pairwise entanglement test reduces a prepared state to a small connected
group around a qubit pair, post-selects the group's outer qubits on Z
outcome 0, and scores the remaining two-qubit state by negativity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .graphstate import Graph
from .sim import DensityMatrix, partial_trace, pauli_string_matrix

PROJECTION_TRACE_FLOOR = 1e-6  # below this the selected branch is unreachable

Pair = tuple[int, int]


@dataclass(frozen=True)
class Chain:
    """Four distinct qubits forming a path a-b-c-d in a graph."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self) -> None:
        if len({self.a, self.b, self.c, self.d}) != 4:
            raise ValueError("chain qubits must be distinct")

    @property
    def qubits(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)


@dataclass(frozen=True)
class EntanglementScore:
    """Negativity of one measured pair, with the group it was computed on."""

    pair: Pair
    negativity: float
    chain: Chain | None
    method: Literal["tomographed", "exact"]

    def __post_init__(self) -> None:
        if not -1e-9 <= self.negativity <= 0.5 + 1e-9:
            raise ValueError(f"negativity {self.negativity} outside [0, 0.5]")


class NoChainError(ValueError):
    """The pair has no valid four-qubit chain in the graph."""


class ZeroProbabilityBranchError(ValueError):
    """Post-selecting the projected outcome has (numerically) zero probability."""


def chain_for_pair(graph: Graph, pair: Pair) -> Chain:
    """The chain a-b-c-d around an edge (b, c), choosing the outer qubits
    a in N(b)\\{c} and d in N(c)\\{b} with (a, d) lexicographically minimal."""
    b, c = pair
    if not graph.has_edge(b, c):
        raise NoChainError(f"({b},{c}) is not a graph edge")
    candidates = [
        (a, d)
        for a in graph.neighbors(b)
        if a != c
        for d in graph.neighbors(c)
        if d != b and d != a
    ]
    if not candidates:
        raise NoChainError(f"no chain exists around ({b},{c}); an endpoint has degree 1")
    a, d = min(candidates)
    return Chain(a, b, c, d)


def projection_group_for_pair(graph: Graph, pair: Pair) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """The qubit group tomographed for a pair and the members to project out.

    Prefers the spec chain a-b-c-d (projecting a and d). Pairs without one
    (a degree-1 endpoint, or both outer neighbors shared) fall back to the
    pair plus up to two smallest distinct outside neighbors, so every
    measured pair of a prepared graph still gets a score.
    """
    b, c = pair
    try:
        chain = chain_for_pair(graph, pair)
        return chain.qubits, (chain.a, chain.d)
    except NoChainError:
        pass
    outside = sorted((set(graph.neighbors(b)) | set(graph.neighbors(c))) - {b, c})[:2]
    return (b, c, *outside), tuple(outside)


def ideal_chain_state() -> DensityMatrix:
    """The exact four-qubit reduction of a ring graph state across a chain:
    the normalized product of (I + Z X Z I) and (I + I Z X Z) on chain
    qubits ordered a, b, c, d. The product of the two commuting rank-8
    projector factors has trace 4, so the unit-trace constant is 1/16."""
    eye = np.eye(16, dtype=complex)
    first = pauli_string_matrix("ZXZI")
    second = pauli_string_matrix("IZXZ")
    rho = (eye + first) @ (eye + second) / 16.0
    return DensityMatrix.from_matrix(rho)


def project_onto_zero(
    rho: DensityMatrix,
    project: Sequence[int],
    keep: Sequence[int],
    trace_floor: float = PROJECTION_TRACE_FLOOR,
) -> DensityMatrix:
    """Post-select Z outcome 0 on ``project``, renormalize, keep ``keep``.

    Projection amounts to selecting the sub-block where every projected
    qubit is |0>; the survivors are relabelled so qubit j is keep[j].
    """
    n = rho.num_qubits
    qubits = list(project) + list(keep)
    if sorted(qubits) != list(range(n)):
        raise ValueError("project and keep must partition the subsystem qubits")
    mask = 0
    for q in project:
        mask |= 1 << q
    selected = [i for i in range(1 << n) if i & mask == 0]
    block = rho.entries[np.ix_(selected, selected)]
    weight = float(np.trace(block).real)
    if weight <= trace_floor:
        raise ZeroProbabilityBranchError(
            f"projected branch has probability {weight:.3e} <= {trace_floor}"
        )
    block = block / weight
    # block qubit order is the surviving qubits ascending; reorder to keep
    survivors = [q for q in range(n) if not (1 << q) & mask]
    reduced = DensityMatrix(len(survivors), block)
    positions = [survivors.index(q) for q in keep]
    return partial_trace(reduced, positions)


def project_chain(rho_abcd: DensityMatrix) -> DensityMatrix:
    """Apply (Z+I)/2 to the outer chain qubits a and d, renormalize by the
    branch probability, and trace them out, leaving the state of (b, c)."""
    if rho_abcd.num_qubits != 4:
        raise ValueError("chain projection expects a 4-qubit state")
    return project_onto_zero(rho_abcd, project=(0, 3), keep=(1, 2))


def partial_transpose(rho: DensityMatrix, subsystem: Literal["first", "second"]) -> np.ndarray:
    """Transpose the indices of one qubit of a two-qubit state."""
    if rho.num_qubits != 2:
        raise ValueError("partial transpose is defined here for 2-qubit states")
    if subsystem not in ("first", "second"):
        raise ValueError(f"subsystem must be 'first' or 'second', got {subsystem!r}")
    t = rho.entries.reshape(2, 2, 2, 2)  # axes: row q1, row q0, col q1, col q0
    if subsystem == "first":  # qubit 0
        t = t.transpose(0, 3, 2, 1)
    else:  # qubit 1
        t = t.transpose(2, 1, 0, 3)
    return t.reshape(4, 4)


def negativity(rho: DensityMatrix) -> float:
    """Sum of |negative eigenvalues| of the partial transpose, in [0, 0.5]."""
    if rho.num_qubits != 2:
        raise ValueError("negativity is defined here for 2-qubit states")
    vals = np.linalg.eigvalsh(partial_transpose(rho, "first"))
    total = float(-vals[vals < -1e-10].sum())
    return min(max(0.0, total), 0.5)


def rank_pairs(scores: Sequence[EntanglementScore]) -> list[EntanglementScore]:
    """Descending by negativity; ties fall to the lexicographically smaller pair.
    The first element is the pair selected for transmission."""
    if not scores:
        raise ValueError("no scores to rank")
    return sorted(scores, key=lambda s: (-s.negativity, s.pair))
