"""Full state tomography for subsystems of up to four qubits.

Reconstruction is linear inversion over the Pauli basis followed by
eigenvalue clipping; estimates pool every measurement setting consistent
with a Pauli string. Letter j of a setting or Pauli string refers to
qubit j of the tomographed subsystem.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .sim import (
    Circuit,
    Counts,
    DensityMatrix,
    GateOp,
    as_seed_sequence,
    pauli_string_matrix,
    sample_density_measurements,
)

MAX_SUBSYSTEM = 4
_BASES = ("X", "Y", "Z")


@dataclass(frozen=True)
class PauliSetting:
    """One measurement setting: a basis letter per subsystem qubit."""

    bases: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bases", tuple(self.bases))
        if not self.bases or any(b not in _BASES for b in self.bases):
            raise ValueError(f"bases must be drawn from {_BASES}, got {self.bases}")

    def __len__(self) -> int:
        return len(self.bases)


@dataclass(frozen=True)
class ExpectationTable:
    """Estimated <P> for every Pauli string on k qubits (identity included)."""

    num_qubits: int
    values: Mapping[str, float]

    def __post_init__(self) -> None:
        expected = 4 ** self.num_qubits
        if len(self.values) != expected:
            raise ValueError(f"expected {expected} Pauli strings, got {len(self.values)}")
        identity = "I" * self.num_qubits
        if abs(self.values[identity] - 1.0) > 1e-12:
            raise ValueError("identity string must map to 1")
        object.__setattr__(self, "values", dict(self.values))


@dataclass(frozen=True)
class TomographyResult:
    raw: np.ndarray
    state: DensityMatrix
    shots_per_setting: int
    settings_count: int


def tomography_settings(k: int) -> list[PauliSetting]:
    """All 3**k settings in lexicographic order (X < Y < Z)."""
    if not 1 <= k <= MAX_SUBSYSTEM:
        raise ValueError(f"subsystem size must be in [1, {MAX_SUBSYSTEM}], got {k}")
    return [PauliSetting(b) for b in itertools.product(_BASES, repeat=k)]


def basis_change_circuit(setting: PauliSetting, qubits: Sequence[int]) -> Circuit:
    """Pre-measurement rotation: H for X, S-dagger then H for Y, none for Z.

    S-dagger is decomposed as S followed by Z to stay inside the shipped
    gate set. The returned circuit marks the qubits measured, in order.
    """
    qubits = list(qubits)
    if len(setting) != len(qubits):
        raise ValueError("setting and qubit list lengths differ")
    ops: list[GateOp] = []
    for basis, q in zip(setting.bases, qubits):
        if basis == "X":
            ops.append(GateOp("H", (q,)))
        elif basis == "Y":
            ops += [GateOp("S", (q,)), GateOp("Z", (q,)), GateOp("H", (q,))]
    return Circuit(max(qubits) + 1, tuple(ops), tuple(qubits))


def _parity(bits: str, positions: Sequence[int]) -> int:
    sign = 1
    for j in positions:
        if bits[j] == "1":
            sign = -sign
    return sign


def estimate_expectations(counts_by_setting: Mapping[PauliSetting, Counts]) -> ExpectationTable:
    """Pooled expectation estimates from one Counts per setting.

    For each Pauli string, every setting agreeing with it on the string's
    non-identity positions contributes its parity average; pooling all of
    them lowers the variance at no extra measurement cost.
    """
    if not counts_by_setting:
        raise ValueError("no settings supplied")
    k = len(next(iter(counts_by_setting)))
    wanted = set(tomography_settings(k))
    if set(counts_by_setting) != wanted:
        missing = sorted(s.bases for s in wanted - set(counts_by_setting))
        raise ValueError(f"missing settings: {missing}")

    sums: dict[str, float] = {}
    weights: dict[str, int] = {}
    positions_by_mask = {
        mask: [j for j in range(k) if mask >> j & 1] for mask in range(1 << k)
    }
    for setting, counts in counts_by_setting.items():
        for mask, positions in positions_by_mask.items():
            string = "".join(
                setting.bases[j] if mask >> j & 1 else "I" for j in range(k)
            )
            total = sum(
                count * _parity(bits, positions) for bits, count in counts.table.items()
            )
            sums[string] = sums.get(string, 0.0) + total
            weights[string] = weights.get(string, 0) + counts.shots

    values = {s: sums[s] / weights[s] for s in sums}
    values["I" * k] = 1.0
    return ExpectationTable(k, values)


def exact_expectations(rho: DensityMatrix) -> ExpectationTable:
    """Noise-free table tr(rho P); the round-trip oracle for reconstruction."""
    k = rho.num_qubits
    values = {
        "".join(s): float(np.trace(rho.entries @ pauli_string_matrix("".join(s))).real)
        for s in itertools.product("IXYZ", repeat=k)
    }
    return ExpectationTable(k, values)


@lru_cache(maxsize=8)
def _pauli_basis(k: int) -> tuple[list[str], np.ndarray]:
    strings = ["".join(s) for s in itertools.product("IXYZ", repeat=k)]
    stack = np.stack([pauli_string_matrix(s) for s in strings])
    stack.setflags(write=False)
    return strings, stack

def linear_inversion(table: ExpectationTable) -> np.ndarray:
    """rho_raw = 2**-k sum_P <P> P; Hermitian with unit trace by construction."""
    strings, stack = _pauli_basis(table.num_qubits)
    coeffs = np.array([table.values[s] for s in strings])
    rho = np.tensordot(coeffs, stack, axes=(0, 0)) / (1 << table.num_qubits)
    return rho


def project_psd(raw: np.ndarray) -> DensityMatrix:
    """Clip negative eigenvalues to zero and renormalize the trace to one."""
    raw = np.asarray(raw, dtype=complex)
    if not np.allclose(raw, raw.conj().T, atol=1e-8):
        raise ValueError("input must be Hermitian")
    herm = 0.5 * (raw + raw.conj().T)
    vals, vecs = np.linalg.eigh(herm)
    vals = np.clip(vals, 0.0, None)
    total = vals.sum()
    if total <= 0.0:
        raise ValueError("all eigenvalues clipped; input is degenerate")
    vals /= total
    rho = (vecs * vals) @ vecs.conj().T
    return DensityMatrix.from_matrix(rho)


def _rotation_matrix(setting: PauliSetting) -> np.ndarray:
    """Full-subsystem unitary of the basis-change rotation."""
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    sdg = np.diag([1.0, -1j])
    per_qubit = {"X": h, "Y": h @ sdg, "Z": np.eye(2, dtype=complex)}
    out = np.eye(1, dtype=complex)
    for basis in reversed(setting.bases):
        out = np.kron(out, per_qubit[basis])
    return out


def simulate_setting_counts(
    rho: DensityMatrix,
    setting: PauliSetting,
    shots: int,
    readout: Sequence[float] | None = None,
    rng_seed: int = 0,
) -> Counts:
    """Sample one setting's outcomes from a known subsystem state."""
    u = _rotation_matrix(setting)
    rotated = DensityMatrix(rho.num_qubits, u @ rho.entries @ u.conj().T)
    return sample_density_measurements(rotated, shots, readout, rng_seed)


def tomograph_state(
    rho: DensityMatrix,
    shots_per_setting: int,
    readout: Sequence[float] | None = None,
    rng_seed: int = 0,
) -> TomographyResult:
    """Simulated full tomography of a known state: sample every setting,
    estimate expectations, invert, and project to a physical state."""
    k = rho.num_qubits
    settings = tomography_settings(k)
    seeds = as_seed_sequence(rng_seed).spawn(len(settings))
    counts = {
        setting: simulate_setting_counts(rho, setting, shots_per_setting, readout, seed)
        for setting, seed in zip(settings, seeds)
    }
    raw = linear_inversion(estimate_expectations(counts))
    return TomographyResult(
        raw=raw,
        state=project_psd(raw),
        shots_per_setting=shots_per_setting,
        settings_count=len(settings),
    )
