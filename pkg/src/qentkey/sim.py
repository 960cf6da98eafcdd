"""Statevector and density-matrix primitives for small qubit systems.

Conventions used throughout the package:

* Qubit 0 is the least significant bit of an amplitude index, so the basis
  state ``|q_{n-1} ... q_1 q_0>`` lives at index ``sum(q_k << k)``.
* Bitstrings returned with measurement results list qubits in request
  order: character ``j`` of a key is the outcome of ``measured[j]``.
* Pauli strings follow the same rule: letter ``j`` acts on qubit ``j`` of
  the (sub)system the string describes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

if TYPE_CHECKING:
    from .noise import NoiseModel

ATOL_ALGEBRA = 1e-10  # algebraic identities
ATOL_PSD = 1e-9       # eigenvalue slack for positivity checks

_INV_SQRT2 = 1.0 / np.sqrt(2.0)

GATE_1Q: dict[str, np.ndarray] = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _INV_SQRT2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
}

PAULI_1Q: dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=complex),
    "X": GATE_1Q["X"],
    "Y": GATE_1Q["Y"],
    "Z": GATE_1Q["Z"],
}

GATE_KINDS = ("H", "X", "Y", "Z", "S", "CZ", "CNOT", "PauliError")


@dataclass(frozen=True)
class StateVector:
    """Pure n-qubit state held as a dense array of 2**n amplitudes."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise ValueError(f"need at least one qubit, got {self.num_qubits}")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.num_qubits,):
            raise ValueError(
                f"expected {1 << self.num_qubits} amplitudes, got shape {amps.shape}"
            )
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > 1e-8:
            raise ValueError(f"state is not normalized: |psi|^2 = {norm}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, num_qubits: int) -> "StateVector":
        """|0...0> on the given number of qubits."""
        amps = np.zeros(1 << num_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "StateVector":
        """Computational basis state; bits[j] is the value of qubit j."""
        index = sum((int(b) & 1) << j for j, b in enumerate(bits))
        amps = np.zeros(1 << len(bits), dtype=complex)
        amps[index] = 1.0
        return cls(len(bits), amps)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, PSD matrix on k qubits."""

    num_qubits: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=complex)
        dim = 1 << self.num_qubits
        if entries.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix, got {entries.shape}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_matrix(cls, entries: np.ndarray, *, check: bool = True) -> "DensityMatrix":
        """Construct from a raw matrix, validating the physical invariants."""
        entries = np.asarray(entries, dtype=complex)
        num_qubits = int(entries.shape[0]).bit_length() - 1
        rho = cls(num_qubits, entries)
        if check:
            rho.validate()
        return rho

    @classmethod
    def from_statevector(cls, state: StateVector) -> "DensityMatrix":
        return cls(state.num_qubits, np.outer(state.amplitudes, state.amplitudes.conj()))

    def validate(self) -> None:
        """Raise ValueError unless Hermitian, trace-1 and PSD within tolerance."""
        m = self.entries
        if not np.allclose(m, m.conj().T, atol=ATOL_ALGEBRA):
            raise ValueError("matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-8:
            raise ValueError(f"trace is {tr}, expected 1")
        lo = float(np.linalg.eigvalsh(m)[0])
        if lo < -ATOL_PSD:
            raise ValueError(f"matrix has negative eigenvalue {lo}")


@dataclass(frozen=True)
class GateOp:
    """One gate: a kind, its target qubits, and for PauliError the letters.

    PauliError carries one Pauli letter per target ("I" allowed on at most
    one of two targets); it is the concrete form taken by sampled noise.
    """

    kind: str
    targets: tuple[int, ...]
    paulis: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"duplicate targets in {self.targets}")
        if self.kind in ("CZ", "CNOT"):
            if len(self.targets) != 2:
                raise ValueError(f"{self.kind} needs two targets")
        elif self.kind == "PauliError":
            if self.paulis is None or len(self.paulis) != len(self.targets):
                raise ValueError("PauliError needs one Pauli letter per target")
            if any(p not in PAULI_1Q for p in self.paulis):
                raise ValueError(f"bad Pauli letters {self.paulis}")
            if all(p == "I" for p in self.paulis):
                raise ValueError("PauliError must not be the identity")
        else:
            if len(self.targets) != 1:
                raise ValueError(f"{self.kind} takes exactly one target")


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list on a fixed register, plus the qubits to read out."""

    num_qubits: int
    ops: tuple[GateOp, ...] = ()
    measured_qubits: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "ops", tuple(self.ops))
        object.__setattr__(self, "measured_qubits", tuple(self.measured_qubits))
        for op in self.ops:
            for t in op.targets:
                if not 0 <= t < self.num_qubits:
                    raise IndexError(f"target {t} out of range for {self.num_qubits} qubits")
        if len(set(self.measured_qubits)) != len(self.measured_qubits):
            raise ValueError("measured_qubits must be distinct")
        for q in self.measured_qubits:
            if not 0 <= q < self.num_qubits:
                raise IndexError(f"measured qubit {q} out of range")


@dataclass(frozen=True)
class Counts:
    """Histogram of measurement outcomes; key position j is measured[j]."""

    shots: int
    table: Mapping[str, int]

    def __post_init__(self) -> None:
        if self.shots <= 0:
            raise ValueError("shots must be positive")
        if sum(self.table.values()) != self.shots:
            raise ValueError("counts do not sum to shots")
        lengths = {len(k) for k in self.table}
        if len(lengths) > 1:
            raise ValueError("inconsistent bitstring lengths")
        object.__setattr__(self, "table", dict(self.table))

    def frequency(self, key: str) -> float:
        return self.table.get(key, 0) / self.shots


# -- gate application ---------------------------------------------------------

def _apply_1q(amps: np.ndarray, n: int, mat: np.ndarray, q: int) -> np.ndarray:
    """Apply a 2x2 matrix to qubit q, in place on the working buffer."""
    t = amps.reshape(-1, 2, 1 << q)
    a = t[:, 0, :].copy()
    b = t[:, 1, :]
    t[:, 0, :] = mat[0, 0] * a + mat[0, 1] * b
    t[:, 1, :] = mat[1, 0] * a + mat[1, 1] * b
    return amps


def _apply_1q_named(amps: np.ndarray, n: int, kind: str, q: int) -> np.ndarray:
    """Specialized in-place forms of the shipped one-qubit gates."""
    t = amps.reshape(-1, 2, 1 << q)
    if kind == "Z":
        t[:, 1, :] *= -1.0
    elif kind == "S":
        t[:, 1, :] *= 1j
    elif kind == "X":
        tmp = t[:, 0, :].copy()
        t[:, 0, :] = t[:, 1, :]
        t[:, 1, :] = tmp
    elif kind == "Y":
        tmp = t[:, 0, :].copy()
        t[:, 0, :] = -1j * t[:, 1, :]
        t[:, 1, :] = 1j * tmp
    elif kind == "H":
        tmp = t[:, 0, :].copy()
        t[:, 0, :] += t[:, 1, :]
        t[:, 0, :] *= _INV_SQRT2
        t[:, 1, :] *= -1.0
        t[:, 1, :] += tmp
        t[:, 1, :] *= _INV_SQRT2
    else:
        return _apply_1q(amps, n, GATE_1Q[kind], q)
    return amps


@lru_cache(maxsize=256)
def _cz_flip_indices(n: int, a: int, b: int) -> np.ndarray:
    i = np.arange(1 << n)
    return i[((i >> a) & 1).astype(bool) & ((i >> b) & 1).astype(bool)]


@lru_cache(maxsize=256)
def _cnot_swap_indices(n: int, control: int, target: int) -> tuple[np.ndarray, np.ndarray]:
    i = np.arange(1 << n)
    i0 = i[(((i >> control) & 1) == 1) & (((i >> target) & 1) == 0)]
    return i0, i0 | (1 << target)


def _apply_op(amps: np.ndarray, n: int, op: GateOp) -> np.ndarray:
    """Apply one GateOp to a working buffer (may mutate and/or reallocate)."""
    if op.kind == "CZ":
        amps[_cz_flip_indices(n, *op.targets)] *= -1.0
        return amps
    if op.kind == "CNOT":
        i0, i1 = _cnot_swap_indices(n, *op.targets)
        amps[i0], amps[i1] = amps[i1], amps[i0].copy()
        return amps
    if op.kind == "PauliError":
        for q, letter in zip(op.targets, op.paulis):
            if letter != "I":
                amps = _apply_1q_named(amps, n, letter, q)
        return amps
    return _apply_1q_named(amps, n, op.kind, op.targets[0])


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    """Apply a single gate and return the new state."""
    for t in gate.targets:
        if not 0 <= t < state.num_qubits:
            raise IndexError(f"target {t} out of range for {state.num_qubits} qubits")
    amps = _apply_op(state.amplitudes.copy(), state.num_qubits, gate)
    return StateVector(state.num_qubits, amps)


def run_circuit(circuit: Circuit, initial: StateVector | None = None) -> StateVector:
    """Run all ops in order; the initial state defaults to |0...0>."""
    if initial is None:
        initial = StateVector.zero(circuit.num_qubits)
    if initial.num_qubits != circuit.num_qubits:
        raise ValueError(
            f"circuit has {circuit.num_qubits} qubits but state has {initial.num_qubits}"
        )
    amps = _run_ops(initial.amplitudes.copy(), circuit.num_qubits, circuit.ops)
    return StateVector(circuit.num_qubits, amps)


def _run_ops(amps: np.ndarray, n: int, ops: Iterable[GateOp]) -> np.ndarray:
    for op in ops:
        amps = _apply_op(amps, n, op)
    return amps


# -- reduction and measurement ------------------------------------------------

def _keep_axes_first(n: int, keep: Sequence[int]) -> list[int]:
    """Axis permutation putting keep (reversed) first; keep[j] becomes qubit j."""
    head = [n - 1 - q for q in reversed(keep)]
    tail = [ax for ax in range(n) if ax not in set(head)]
    return head + tail


@lru_cache(maxsize=512)
def _gather_indices(n: int, keep: tuple[int, ...]) -> np.ndarray:
    """Index matrix G with amps[G] of shape (2**k, 2**(n-k)); row bit j is keep[j]."""
    rest = [q for q in range(n) if q not in set(keep)]
    sub = np.zeros(1 << len(keep), dtype=np.intp)
    for j, q in enumerate(keep):
        sub |= ((np.arange(1 << len(keep), dtype=np.intp) >> j) & 1) << q
    env = np.zeros(1 << len(rest), dtype=np.intp)
    for m, q in enumerate(rest):
        env |= ((np.arange(1 << len(rest), dtype=np.intp) >> m) & 1) << q
    return sub[:, None] | env[None, :]


def _reduced_dm(
    amps: np.ndarray, n: int, keep: Sequence[int], amps_conj: np.ndarray | None = None
) -> np.ndarray:
    m = amps[_gather_indices(n, tuple(keep))]
    mc = m.conj() if amps_conj is None else amps_conj[_gather_indices(n, tuple(keep))]
    return m @ mc.T


def reduced_density_matrix(state: StateVector, keep: Sequence[int]) -> DensityMatrix:
    """Partial trace over every qubit not in ``keep``.

    Qubit j of the result is keep[j]; keep order therefore fixes the
    subsystem labelling.
    """
    keep = list(keep)
    if not keep:
        raise ValueError("keep must name at least one qubit")
    if len(set(keep)) != len(keep):
        raise ValueError("keep indices must be distinct")
    for q in keep:
        if not 0 <= q < state.num_qubits:
            raise IndexError(f"qubit {q} out of range")
    rho = _reduced_dm(state.amplitudes, state.num_qubits, keep)
    return DensityMatrix(len(keep), rho)


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Partial trace of a density matrix; same labelling rule as above."""
    keep = list(keep)
    if not keep:
        raise ValueError("keep must name at least one qubit")
    n = rho.num_qubits
    for q in keep:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range")
    k = len(keep)
    perm = _keep_axes_first(n, keep)
    t = rho.entries.reshape((2,) * (2 * n))
    t = t.transpose(perm + [ax + n for ax in perm])
    t = t.reshape(1 << k, 1 << (n - k), 1 << k, 1 << (n - k))
    return DensityMatrix(k, np.einsum("imjm->ij", t))


def _marginal_probs(amps: np.ndarray, n: int, measured: Sequence[int]) -> np.ndarray:
    """Probabilities over measured qubits; bit j of the index is measured[j]."""
    perm = _keep_axes_first(n, measured)
    k = len(measured)
    t = amps.reshape((2,) * n).transpose(perm).reshape(1 << k, -1)
    return (np.abs(t) ** 2).sum(axis=1)


def _bitstring(value: int, width: int) -> str:
    return "".join(str((value >> j) & 1) for j in range(width))


def _tabulate(outcomes: np.ndarray, width: int, shots: int) -> Counts:
    values, freq = np.unique(outcomes, return_counts=True)
    table = {_bitstring(int(v), width): int(c) for v, c in zip(values, freq)}
    return Counts(shots, table)


def _flip_bits(outcomes: np.ndarray, flip_probs: Sequence[float], rng: np.random.Generator) -> np.ndarray:
    for j, p in enumerate(flip_probs):
        if p > 0:
            mask = rng.random(outcomes.shape[0]) < p
            outcomes = outcomes ^ (mask.astype(np.int64) << j)
    return outcomes


def as_seed_sequence(seed: int | np.random.SeedSequence) -> np.random.SeedSequence:
    """Wrap an int seed; pass SeedSequences (e.g. spawned children) through."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def sample_measurements(
    state: StateVector,
    measured: Sequence[int],
    shots: int,
    readout: Mapping[int, float] | None = None,
    rng_seed: int | np.random.SeedSequence = 0,
) -> Counts:
    """Sample Born-rule outcomes on the measured qubits, then apply optional
    per-qubit readout flips. Deterministic for a fixed seed."""
    measured = list(measured)
    if shots <= 0:
        raise ValueError("shots must be positive")
    if not measured:
        raise ValueError("need at least one measured qubit")
    probs = _marginal_probs(state.amplitudes, state.num_qubits, measured)
    probs = probs / probs.sum()
    rng = np.random.default_rng(rng_seed)
    outcomes = rng.choice(probs.size, size=shots, p=probs)
    if readout:
        outcomes = _flip_bits(outcomes, [readout.get(q, 0.0) for q in measured], rng)
    return _tabulate(outcomes, len(measured), shots)


def sample_density_measurements(
    rho: DensityMatrix,
    shots: int,
    readout: Sequence[float] | None = None,
    rng_seed: int | np.random.SeedSequence = 0,
) -> Counts:
    """Sample computational-basis outcomes of every qubit of a density matrix.

    ``readout[j]`` is the flip probability of qubit j (``None`` for none).
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    probs = np.clip(np.diag(rho.entries).real, 0.0, None)
    probs = probs / probs.sum()
    rng = np.random.default_rng(rng_seed)
    outcomes = rng.choice(probs.size, size=shots, p=probs)
    if readout is not None:
        outcomes = _flip_bits(outcomes, readout, rng)
    return _tabulate(outcomes, rho.num_qubits, shots)


# -- exact density-matrix evolution (small-system oracle) ----------------------

DENSITY_QUBIT_CAP = 6  # a full density matrix needs 4**n complex entries


def _dm_apply(rho: np.ndarray, n: int, mat: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """U rho U^dag for a 1- or 2-qubit unitary acting on the given qubits."""
    dim = 1 << n
    k = len(qubits)
    # gate tensor axes follow the targets list (first target = most
    # significant bit of the gate's 4-dim basis index)
    axes_row = [n - 1 - q for q in qubits]
    t = rho.reshape((2,) * (2 * n))
    gate = mat.reshape((2,) * (2 * k))
    # rows
    t = np.tensordot(gate, t, axes=(list(range(k, 2 * k)), axes_row))
    t = np.moveaxis(t, list(range(k)), axes_row)
    # columns (conjugate)
    axes_col = [n + ax for ax in axes_row]
    t = np.tensordot(gate.conj(), t, axes=(list(range(k, 2 * k)), axes_col))
    t = np.moveaxis(t, list(range(k)), axes_col)
    return t.reshape(dim, dim)


_GATE_2Q = {
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    # targets are (control, target); basis index is control*2 + target
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
}


def _pauli_pairs() -> list[tuple[str, str]]:
    letters = ("I", "X", "Y", "Z")
    return [(a, b) for a in letters for b in letters if (a, b) != ("I", "I")]


PAULI_PAIRS_2Q = _pauli_pairs()


def _depolarize(rho: np.ndarray, n: int, qubits: Sequence[int], p: float) -> np.ndarray:
    """Channel matching uniform random non-identity Pauli insertion."""
    if p <= 0:
        return rho
    if len(qubits) == 1:
        q = qubits[0]
        mix = sum(
            _dm_apply(rho, n, PAULI_1Q[letter], [q]) for letter in ("X", "Y", "Z")
        )
        return (1.0 - p) * rho + (p / 3.0) * mix
    acc = np.zeros_like(rho)
    for pa, pb in PAULI_PAIRS_2Q:
        mat = np.kron(PAULI_1Q[pa], PAULI_1Q[pb])  # letter order: (first, second) target
        acc += _dm_apply(rho, n, mat, list(qubits))
    return (1.0 - p) * rho + (p / 15.0) * acc


def exact_density_evolution(
    circuit: Circuit,
    model: "NoiseModel | None" = None,
    max_qubits: int = DENSITY_QUBIT_CAP,
) -> DensityMatrix:
    """Evolve the full density matrix, applying each gate's unitary followed
    by its depolarizing channel exactly. Intended as a small-system oracle."""
    n = circuit.num_qubits
    if n > max_qubits:
        raise ValueError(f"density evolution capped at {max_qubits} qubits, got {n}")
    dim = 1 << n
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    for op in circuit.ops:
        if op.kind == "PauliError":
            for q, letter in zip(op.targets, op.paulis):
                if letter != "I":
                    rho = _dm_apply(rho, n, PAULI_1Q[letter], [q])
            continue
        if op.kind in _GATE_2Q:
            rho = _dm_apply(rho, n, _GATE_2Q[op.kind], list(op.targets))
            if model is not None:
                rho = _depolarize(rho, n, op.targets, model.p2_for(*op.targets))
        else:
            rho = _dm_apply(rho, n, GATE_1Q[op.kind], list(op.targets))
            if model is not None:
                rho = _depolarize(rho, n, op.targets, model.p1_for(op.targets[0]))
    return DensityMatrix(n, rho)


# -- metrics ------------------------------------------------------------------

def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(m)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def state_fidelity(a: DensityMatrix, b: DensityMatrix) -> float:
    """Uhlmann fidelity, (tr sqrt(sqrt(a) b sqrt(a)))**2, clipped to [0, 1]."""
    if a.num_qubits != b.num_qubits:
        raise ValueError("states have different dimensions")
    root = _psd_sqrt(a.entries)
    inner = root @ b.entries @ root
    vals = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    return float(min(1.0, np.sqrt(vals).sum() ** 2))


def trace_distance(a: DensityMatrix | np.ndarray, b: DensityMatrix | np.ndarray) -> float:
    """Half the trace norm of the difference."""
    ma = a.entries if isinstance(a, DensityMatrix) else np.asarray(a)
    mb = b.entries if isinstance(b, DensityMatrix) else np.asarray(b)
    if ma.shape != mb.shape:
        raise ValueError("matrices have different shapes")
    vals = np.linalg.eigvalsh(ma - mb)
    return float(0.5 * np.abs(vals).sum())


# -- Pauli-string helpers -----------------------------------------------------

@lru_cache(maxsize=4096)
def pauli_string_matrix(letters: str) -> np.ndarray:
    """Dense matrix of a Pauli string; letter j acts on qubit j."""
    mats = [PAULI_1Q[ch] for ch in reversed(letters)]
    out = reduce(np.kron, mats) if mats else np.eye(1, dtype=complex)
    out.setflags(write=False)
    return out


def pauli_expectation(state: StateVector, paulis: Sequence[tuple[int, str]]) -> float:
    """<psi| P |psi> for a product of single-qubit Paulis on named qubits."""
    amps = state.amplitudes.copy()
    n = state.num_qubits
    for q, letter in paulis:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range")
        if letter != "I":
            amps = _apply_1q(amps, n, PAULI_1Q[letter], q)
    value = np.vdot(state.amplitudes, amps)
    return float(value.real)
