"""Depolarizing/readout noise models, trajectory sampling, calibration profiles.

Gate noise is sampled as concrete Pauli insertions: after a one-qubit gate on
q, with probability p1[q] one of {X, Y, Z} is inserted uniformly; after a
two-qubit gate on (i, j), with probability p2[(i, j)] one of the 15
non-identity two-qubit Pauli pairs is inserted uniformly. Readout error is a
per-qubit classical bit flip applied at sampling time, not here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .graphstate import Topology, device_topology
from .sim import (
    PAULI_PAIRS_2Q,
    Circuit,
    DensityMatrix,
    GateOp,
    _reduced_dm,
    _run_ops,
    as_seed_sequence,
)

_PAULI_LETTERS = ("X", "Y", "Z")


def _normalize_edge_key(a: int, b: int) -> tuple[int, int]:
    if a == b:
        raise ValueError(f"edge ({a},{b}) is a self-loop")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class NoiseModel:
    """Per-qubit and per-edge depolarizing probabilities plus readout flips."""

    p1: Mapping[int, float] = field(default_factory=dict)
    p2: Mapping[tuple[int, int], float] = field(default_factory=dict)
    readout: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        p2 = {_normalize_edge_key(*edge): float(p) for edge, p in self.p2.items()}
        p1 = {int(q): float(p) for q, p in self.p1.items()}
        readout = {int(q): float(p) for q, p in self.readout.items()}
        for label, probs in (("p1", p1.values()), ("p2", p2.values()), ("readout", readout.values())):
            for p in probs:
                if not 0.0 <= p <= 1.0:
                    raise ValueError(f"{label} probability {p} outside [0, 1]")
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p2", p2)
        object.__setattr__(self, "readout", readout)

    def p1_for(self, q: int) -> float:
        return self.p1.get(q, 0.0)

    def p2_for(self, a: int, b: int) -> float:
        return self.p2.get(_normalize_edge_key(a, b), 0.0)

    def readout_for(self, q: int) -> float:
        return self.readout.get(q, 0.0)

    def is_zero(self) -> bool:
        return not (
            any(self.p1.values()) or any(self.p2.values()) or any(self.readout.values())
        )

    def restricted_to(self, qubits: Sequence[int]) -> "NoiseModel":
        """The sub-model touching only the named qubits."""
        keep = set(qubits)
        return NoiseModel(
            {q: p for q, p in self.p1.items() if q in keep},
            {e: p for e, p in self.p2.items() if set(e) <= keep},
            {q: p for q, p in self.readout.items() if q in keep},
        )


ZERO_NOISE = NoiseModel()


@dataclass(frozen=True)
class CalibrationProfile:
    """A named noise model bound to a device topology."""

    name: str
    topology_name: str
    noise: NoiseModel

    def topology(self) -> Topology:
        return device_topology(self.topology_name)


# -- trajectory sampling -------------------------------------------------------

def _sampled_insertion(op: GateOp, model: NoiseModel, rng: np.random.Generator) -> GateOp | None:
    if op.kind in ("CZ", "CNOT"):
        p = model.p2_for(*op.targets)
        if p > 0.0 and rng.random() < p:
            pair = PAULI_PAIRS_2Q[rng.integers(15)]
            return GateOp("PauliError", op.targets, pair)
    elif op.kind != "PauliError":
        p = model.p1_for(op.targets[0])
        if p > 0.0 and rng.random() < p:
            letter = _PAULI_LETTERS[rng.integers(3)]
            return GateOp("PauliError", op.targets, (letter,))
    return None


def _sample_noisy_ops(
    circuit: Circuit, model: NoiseModel, rng: np.random.Generator
) -> tuple[GateOp, ...]:
    ops: list[GateOp] = []
    for op in circuit.ops:
        ops.append(op)
        inserted = _sampled_insertion(op, model, rng)
        if inserted is not None:
            ops.append(inserted)
    return tuple(ops)


def sample_noisy_circuit(circuit: Circuit, model: NoiseModel, rng_seed: int = 0) -> Circuit:
    """One trajectory: the input circuit with sampled Pauli insertions."""
    rng = np.random.default_rng(rng_seed)
    return Circuit(
        circuit.num_qubits,
        _sample_noisy_ops(circuit, model, rng),
        circuit.measured_qubits,
    )


def _trajectory_seeds(
    rng_seed: int | np.random.SeedSequence, trajectories: int
) -> list[np.random.SeedSequence]:
    return as_seed_sequence(rng_seed).spawn(trajectories)


def average_reduced_states(
    circuit: Circuit,
    model: NoiseModel,
    keeps: Sequence[Sequence[int]],
    trajectories: int,
    rng_seed: int = 0,
) -> list[DensityMatrix]:
    """Trajectory-averaged reduced density matrices for several subsystems,
    sharing one trajectory stream across all of them."""
    if trajectories < 1:
        raise ValueError("need at least one trajectory")
    keeps = [list(k) for k in keeps]
    n = circuit.num_qubits
    base = np.zeros(1 << n, dtype=complex)
    base[0] = 1.0
    if model.is_zero():
        # every trajectory is identical
        amps = _run_ops(base.copy(), n, circuit.ops)
        return [DensityMatrix(len(k), _reduced_dm(amps, n, k)) for k in keeps]
    sums = [np.zeros((1 << len(k), 1 << len(k)), dtype=complex) for k in keeps]
    for seed in _trajectory_seeds(rng_seed, trajectories):
        rng = np.random.default_rng(seed)
        ops = _sample_noisy_ops(circuit, model, rng)
        amps = _run_ops(base.copy(), n, ops)
        amps_conj = amps.conj()
        for acc, keep in zip(sums, keeps):
            acc += _reduced_dm(amps, n, keep, amps_conj)
    out = []
    for acc, keep in zip(sums, keeps):
        rho = acc / trajectories
        rho = 0.5 * (rho + rho.conj().T)  # scrub accumulated float asymmetry
        out.append(DensityMatrix(len(keep), rho))
    return out


def average_reduced_state(
    circuit: Circuit,
    model: NoiseModel,
    keep: Sequence[int],
    trajectories: int,
    rng_seed: int = 0,
) -> DensityMatrix:
    """Mean over trajectories of the reduced state of ``keep``."""
    return average_reduced_states(circuit, model, [keep], trajectories, rng_seed)[0]


# -- calibration profiles ------------------------------------------------------

_SHIPPED_PROFILES = {
    "ibmqx4-like": "ibmqx4_like.json",
    "melbourne-like": "melbourne_like.json",
    "none": None,
}


def load_calibration(name: str) -> CalibrationProfile:
    """A shipped profile by name, or one loaded from a JSON profile file.

    The name "none" resolves to a zero-noise profile on ibmqx4; pass a
    topology-specific zero profile by loading a file when that matters.
    """
    if name in _SHIPPED_PROFILES:
        fname = _SHIPPED_PROFILES[name]
        if fname is None:
            return CalibrationProfile("none", "ibmqx4", ZERO_NOISE)
        text = resources.files("qentkey").joinpath("profiles", fname).read_text()
        return _parse_profile(json.loads(text), source=name)
    path = Path(name)
    if path.exists():
        with open(path) as fh:
            return _parse_profile(json.load(fh), source=str(path))
    raise KeyError(f"unknown calibration profile {name!r}")


def _parse_profile(data: dict, source: str) -> CalibrationProfile:
    try:
        name = str(data["name"])
        topology_name = str(data["topology"])
        p1 = {int(q): float(p) for q, p in data.get("p1", {}).items()}
        p2 = {}
        for key, p in data.get("p2", {}).items():
            a, b = (int(x) for x in key.split("-"))
            p2[(a, b)] = float(p)
        readout = {int(q): float(p) for q, p in data.get("readout", {}).items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed profile {source}: {exc}") from exc
    model = NoiseModel(p1, p2, readout)  # validates ranges
    profile = CalibrationProfile(name, topology_name, model)
    _validate_against_topology(profile, source)
    return profile


def _validate_against_topology(profile: CalibrationProfile, source: str) -> None:
    topology = profile.topology()
    for q in list(profile.noise.p1) + list(profile.noise.readout):
        if not 0 <= q < topology.num_qubits:
            raise ValueError(f"profile {source} names qubit {q} not in {topology.name}")
    for edge in profile.noise.p2:
        if edge not in topology.edges:
            raise ValueError(f"profile {source} names edge {edge} not in {topology.name}")
