"""Device topologies, ring graphs, graph-state circuits and their stabilizers."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .sim import Circuit, GateOp, StateVector, pauli_expectation

Edge = tuple[int, int]


def _normalize_edge(a: int, b: int) -> Edge:
    if a == b:
        raise ValueError(f"self-loop on qubit {a}")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class Topology:
    """A device coupling map: named qubits plus the usable two-qubit pairs."""

    name: str
    num_qubits: int
    edges: frozenset[Edge]

    def __post_init__(self) -> None:
        edges = frozenset(_normalize_edge(*e) for e in self.edges)
        for a, b in edges:
            if not (0 <= a < self.num_qubits and 0 <= b < self.num_qubits):
                raise ValueError(f"edge ({a},{b}) references a missing qubit")
        object.__setattr__(self, "edges", edges)

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def has_edge(self, a: int, b: int) -> bool:
        return _normalize_edge(a, b) in self.edges


@dataclass(frozen=True)
class Graph:
    """An undirected graph over qubit indices; the target of state preparation."""

    vertices: tuple[int, ...]
    edges: frozenset[Edge]

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", tuple(self.vertices))
        edges = frozenset(_normalize_edge(*e) for e in self.edges)
        vset = set(self.vertices)
        for a, b in edges:
            if a not in vset or b not in vset:
                raise ValueError(f"edge ({a},{b}) uses a vertex outside the graph")
        object.__setattr__(self, "edges", edges)

    def neighbors(self, v: int) -> list[int]:
        return sorted(b if a == v else a for a, b in self.edges if v in (a, b))

    def has_edge(self, a: int, b: int) -> bool:
        return _normalize_edge(a, b) in self.edges


@dataclass(frozen=True)
class StabilizerOperator:
    """X on a vertex times Z on each of its neighbors."""

    vertex: int
    neighbors: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "neighbors", tuple(sorted(self.neighbors)))
        if self.vertex in self.neighbors:
            raise ValueError("vertex cannot neighbor itself")


_DEVICE_EDGES: dict[str, tuple[int, list[Edge]]] = {
    "ibmqx4": (5, [(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)]),
    "ibmq_16_melbourne": (
        14,
        [
            (0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 8),
            (7, 8), (8, 9), (9, 10), (10, 11), (11, 12), (12, 13), (13, 1),
        ],
    ),
}

# ibmqx4's coupling graph has no simple cycle through all five qubits, so the
# shipped preparation graph is its largest triangle extended by the pendant
# path 2-1-0; pair (0,2) stays in the measured set but not in the graph.
_SHIPPED_RING_EDGES: dict[str, list[Edge]] = {
    "ibmqx4": [(0, 1), (1, 2), (2, 3), (2, 4), (3, 4)],
}


def device_topology(name: str) -> Topology:
    """A shipped device by name, or a custom topology loaded from a JSON file."""
    if name in _DEVICE_EDGES:
        num_qubits, edges = _DEVICE_EDGES[name]
        return Topology(name, num_qubits, frozenset(edges))
    path = Path(name)
    if path.suffix == ".json" and path.exists():
        return load_topology(path)
    raise KeyError(f"unknown topology {name!r}")


def load_topology(path: str | Path) -> Topology:
    """Read a topology file: {"name": ..., "num_qubits": ..., "edges": [[i,j],...]}."""
    with open(path) as fh:
        data = json.load(fh)
    try:
        return Topology(
            str(data["name"]),
            int(data["num_qubits"]),
            frozenset(tuple(e) for e in data["edges"]),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed topology file {path}: {exc}") from exc


def _longest_cycle(vertices: Iterable[int], edges: frozenset[Edge]) -> list[int] | None:
    """Longest simple cycle by exhaustive DFS; ties broken lexicographically.

    Exponential in the worst case, fine for desk-scale coupling maps.
    """
    adjacency: dict[int, list[int]] = {v: [] for v in vertices}
    for a, b in edges:
        adjacency[a].append(b)
        adjacency[b].append(a)
    for nbrs in adjacency.values():
        nbrs.sort()

    best: list[int] | None = None

    def consider(path: list[int]) -> None:
        nonlocal best
        if best is None or len(path) > len(best) or (len(path) == len(best) and path < best):
            best = list(path)

    def extend(path: list[int], start: int, seen: set[int]) -> None:
        here = path[-1]
        for nxt in adjacency[here]:
            if nxt == start and len(path) >= 3:
                consider(path)
            elif nxt > start and nxt not in seen:
                seen.add(nxt)
                path.append(nxt)
                extend(path, start, seen)
                path.pop()
                seen.remove(nxt)

    for start in sorted(adjacency):
        extend([start], start, {start})
    return best


def ring_graph(topology: Topology, order: Sequence[int] | None = None) -> Graph:
    """The preparation graph for a device: its longest simple cycle with any
    remaining qubits attached as pendants through coupling edges.

    An explicit ``order`` overrides the search with the cycle it spells out.
    Shipped device names resolve through a fixed table so results never move.
    """
    if order is not None:
        cycle = list(order)
        if len(cycle) < 3 or len(set(cycle)) != len(cycle):
            raise ValueError("explicit cycle order must list at least 3 distinct qubits")
        edges = set()
        for i, v in enumerate(cycle):
            w = cycle[(i + 1) % len(cycle)]
            if not topology.has_edge(v, w):
                raise ValueError(f"({v},{w}) from the explicit order is not a coupling edge")
            edges.add(_normalize_edge(v, w))
        return _attach_pendants(topology, cycle, edges)

    if topology.name in _SHIPPED_RING_EDGES:
        return Graph(
            tuple(range(topology.num_qubits)),
            frozenset(_SHIPPED_RING_EDGES[topology.name]),
        )

    cycle = _longest_cycle(range(topology.num_qubits), topology.edges)
    if cycle is None:
        raise ValueError(f"topology {topology.name!r} has no cycle; supply an explicit order")
    edges = {
        _normalize_edge(cycle[i], cycle[(i + 1) % len(cycle)]) for i in range(len(cycle))
    }
    return _attach_pendants(topology, cycle, edges)


def _attach_pendants(topology: Topology, cycle: Sequence[int], edges: set[Edge]) -> Graph:
    """Attach every off-cycle qubit through its smallest attached neighbor."""
    attached = set(cycle)
    pending = sorted(set(range(topology.num_qubits)) - attached)
    while pending:
        progressed = False
        for v in list(pending):
            nbrs = [w for w in range(topology.num_qubits)
                    if w != v and topology.has_edge(v, w) and w in attached]
            if nbrs:
                edges.add(_normalize_edge(v, min(nbrs)))
                attached.add(v)
                pending.remove(v)
                progressed = True
        if not progressed:
            break  # disconnected qubits stay isolated vertices
    return Graph(tuple(range(topology.num_qubits)), frozenset(edges))


def build_graph_state_circuit(graph: Graph) -> Circuit:
    """Hadamard every vertex, then one CZ per edge in sorted order."""
    if not graph.vertices:
        raise ValueError("graph has no vertices")
    num_qubits = max(graph.vertices) + 1
    ops = [GateOp("H", (v,)) for v in sorted(graph.vertices)]
    ops += [GateOp("CZ", edge) for edge in sorted(graph.edges)]
    return Circuit(num_qubits, tuple(ops))


def graph_stabilizers(graph: Graph) -> list[StabilizerOperator]:
    """One stabilizer per vertex of the graph."""
    return [StabilizerOperator(v, tuple(graph.neighbors(v))) for v in graph.vertices]


def stabilizer_expectation(state: StateVector, stab: StabilizerOperator) -> float:
    """<psi| X_vertex prod_b Z_b |psi>, real for any physical state."""
    paulis = [(stab.vertex, "X")] + [(b, "Z") for b in stab.neighbors]
    return pauli_expectation(state, paulis)
