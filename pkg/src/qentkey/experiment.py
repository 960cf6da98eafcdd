"""End-to-end experiment: prepare, score every measured pair, report.

For each measured pair of a device the runner computes the negativity of
the pair extracted from the prepared graph state (tomographed by default,
exact trajectory average otherwise) and the protocol fidelity of superdense
key transmission over the same pair, ranks pairs, and compares the best
pair's fidelity against the unweighted all-pair average ("random selection").
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .entanglement import (
    Chain,
    EntanglementScore,
    chain_for_pair,
    negativity,
    NoChainError,
    project_onto_zero,
    projection_group_for_pair,
    rank_pairs,
)
from .graphstate import Graph, Topology, build_graph_state_circuit, device_topology, ring_graph
from .noise import CalibrationProfile, NoiseModel, average_reduced_states, load_calibration
from .supercrypt import FidelityEstimate, protocol_fidelity
from .tomography import tomograph_state

OUTPUT_DIR_ENV = "QENTKEY_OUTPUT_DIR"

REPORT_JSON = "report.json"
PAIRS_CSV = "pairs.csv"
CHART_FILES = ("negativity_per_pair.svg", "fidelity_per_pair.svg", "comparison.svg")


@dataclass(frozen=True)
class ExperimentConfig:
    topology_name: str
    profile: str = "none"
    shots: int = 8192
    repeats: int = 20
    trajectories: int = 4096
    seed: int = 0
    tomography: bool = True
    output_dir: str | None = None

    def __post_init__(self) -> None:
        if self.shots <= 0 or self.repeats <= 0 or self.trajectories <= 0:
            raise ValueError("shots, repeats and trajectories must be positive")

    @classmethod
    def from_file(cls, path: str | Path, **overrides: Any) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        with open(path) as fh:
            data = json.load(fh)
        merged = {**data, **{k: v for k, v in overrides.items() if v is not None}}
        return cls(**merged)

    def resolved_output_dir(self) -> Path:
        if self.output_dir:
            return Path(self.output_dir)
        return Path(os.environ.get(OUTPUT_DIR_ENV, "qentkey-out"))

    def to_dict(self) -> dict[str, Any]:
        return {
            "topology_name": self.topology_name,
            "profile": self.profile,
            "shots": self.shots,
            "repeats": self.repeats,
            "trajectories": self.trajectories,
            "seed": self.seed,
            "tomography": self.tomography,
            "output_dir": self.output_dir,
        }


@dataclass(frozen=True)
class ExperimentReport:
    config: Mapping[str, Any]
    scores: tuple[EntanglementScore, ...]
    fidelities: tuple[FidelityEstimate, ...]
    selected_pair: tuple[int, int]
    baseline_mean: float
    baseline_std_error: float
    improvement_percent: float

    def __post_init__(self) -> None:
        pairs_a = {s.pair for s in self.scores}
        pairs_b = {f.pair for f in self.fidelities}
        if pairs_a != pairs_b:
            raise ValueError("entanglement and fidelity pair sets differ")

    def fidelity_for(self, pair: tuple[int, int]) -> FidelityEstimate:
        return next(f for f in self.fidelities if f.pair == pair)

    def to_dict(self) -> dict[str, Any]:
        scores = sorted(self.scores, key=lambda s: s.pair)
        fids = {f.pair: f for f in self.fidelities}
        return {
            "config": dict(self.config),
            "pairs": [
                {
                    "pair": list(s.pair),
                    "negativity": float(s.negativity),
                    "method": s.method,
                    "chain": list(s.chain.qubits) if s.chain else None,
                    "mean_fidelity": float(fids[s.pair].mean_fidelity),
                    "std_error": float(fids[s.pair].std_error),
                    "per_message": {
                        m: float(v) for m, v in sorted(fids[s.pair].per_message.items())
                    },
                    "shots": fids[s.pair].shots,
                    "repeats": fids[s.pair].repeats,
                }
                for s in scores
            ],
            "selected_pair": list(self.selected_pair),
            "selected_fidelity": float(self.fidelity_for(self.selected_pair).mean_fidelity),
            "random_baseline_fidelity": {
                "mean": float(self.baseline_mean),
                "std_error": float(self.baseline_std_error),
            },
            "improvement_percent": float(self.improvement_percent),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentReport":
        scores = []
        fidelities = []
        for row in data["pairs"]:
            pair = tuple(row["pair"])
            chain = Chain(*row["chain"]) if row.get("chain") else None
            scores.append(
                EntanglementScore(pair, row["negativity"], chain, row["method"])
            )
            fidelities.append(
                FidelityEstimate(
                    pair,
                    row["mean_fidelity"],
                    dict(row["per_message"]),
                    row["shots"],
                    row["repeats"],
                    row["std_error"],
                )
            )
        return cls(
            config=dict(data["config"]),
            scores=tuple(scores),
            fidelities=tuple(fidelities),
            selected_pair=tuple(data["selected_pair"]),
            baseline_mean=data["random_baseline_fidelity"]["mean"],
            baseline_std_error=data["random_baseline_fidelity"]["std_error"],
            improvement_percent=data["improvement_percent"],
        )


def report_to_json(report: ExperimentReport | Mapping[str, Any]) -> str:
    """Canonical JSON encoding; identical inputs give identical bytes."""
    data = report.to_dict() if isinstance(report, ExperimentReport) else report
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _resolve_profile(name: str, topology: Topology) -> NoiseModel:
    profile = load_calibration(name)
    if profile.name != "none" and profile.topology_name != topology.name:
        raise ValueError(
            f"profile {profile.name!r} targets {profile.topology_name!r}, not {topology.name!r}"
        )
    return profile.noise


def pair_negativity_from_group(
    rho_group, group: tuple[int, ...], pair: tuple[int, int]
) -> float:
    """Project the non-pair group members onto outcome 0 and score the pair."""
    projected = tuple(q for q in group if q not in pair)
    proj_pos = tuple(group.index(q) for q in projected)
    keep_pos = tuple(group.index(q) for q in pair)
    return negativity(project_onto_zero(rho_group, proj_pos, keep_pos))


def score_pairs(
    graph: Graph,
    pairs: list[tuple[int, int]],
    model: NoiseModel,
    trajectories: int,
    shots: int,
    tomography: bool,
    seed_sequence: np.random.SeedSequence,
) -> list[EntanglementScore]:
    """Negativity of every measured pair from one shared trajectory stream."""
    circuit = build_graph_state_circuit(graph)
    groups = {pair: projection_group_for_pair(graph, pair) for pair in pairs}
    traj_seed, *tomo_seeds = seed_sequence.spawn(1 + len(pairs))
    rhos = average_reduced_states(
        circuit, model, [groups[p][0] for p in pairs], trajectories, traj_seed
    )
    scores = []
    for pair, rho_group, tomo_seed in zip(pairs, rhos, tomo_seeds):
        group, _ = groups[pair]
        if tomography:
            readout = [model.readout_for(q) for q in group]
            rho_group = tomograph_state(rho_group, shots, readout, tomo_seed).state
        try:
            chain = chain_for_pair(graph, pair)
        except NoChainError:
            chain = None
        scores.append(
            EntanglementScore(
                pair=pair,
                negativity=pair_negativity_from_group(rho_group, group, pair),
                chain=chain,
                method="tomographed" if tomography else "exact",
            )
        )
    return scores


def run_full_experiment(config: ExperimentConfig, persist: bool = True) -> ExperimentReport:
    """Score all measured pairs, rank them, and (optionally) write the report
    bundle: JSON, per-pair CSV, and the three SVG charts."""
    topology = device_topology(config.topology_name)
    model = _resolve_profile(config.profile, topology)
    graph = ring_graph(topology)
    pairs = topology.sorted_edges()

    master = np.random.SeedSequence(config.seed)
    entangle_seed, fidelity_seed = master.spawn(2)

    scores = score_pairs(
        graph, pairs, model, config.trajectories, config.shots,
        config.tomography, entangle_seed,
    )

    fidelities = []
    for pair, child in zip(pairs, fidelity_seed.spawn(len(pairs))):
        rng = np.random.default_rng(child)
        fidelities.append(
            protocol_fidelity(
                pair, model, config.shots, config.repeats,
                seed=int(rng.integers(2**63)), topology=topology,
            )
        )

    ranked = rank_pairs(scores)
    selected = ranked[0].pair
    means = np.array([f.mean_fidelity for f in fidelities])
    baseline_mean = float(means.mean())
    baseline_err = float(means.std(ddof=1) / np.sqrt(means.size)) if means.size > 1 else 0.0
    selected_fidelity = next(f.mean_fidelity for f in fidelities if f.pair == selected)
    improvement = 100.0 * (selected_fidelity - baseline_mean) / baseline_mean

    report = ExperimentReport(
        config=config.to_dict(),
        scores=tuple(scores),
        fidelities=tuple(fidelities),
        selected_pair=selected,
        baseline_mean=baseline_mean,
        baseline_std_error=baseline_err,
        improvement_percent=improvement,
    )
    if persist:
        persist_report(report, config.resolved_output_dir())
    return report


def write_pairs_csv(report: ExperimentReport, path: Path) -> None:
    rows = ["pair,negativity,mean_fidelity,std_error"]
    fids = {f.pair: f for f in report.fidelities}
    for score in sorted(report.scores, key=lambda s: s.pair):
        fid = fids[score.pair]
        rows.append(
            f"{score.pair[0]}-{score.pair[1]},{score.negativity!r},"
            f"{fid.mean_fidelity!r},{fid.std_error!r}"
        )
    path.write_text("\n".join(rows) + "\n")


def persist_report(report: ExperimentReport, out_dir: Path) -> list[Path]:
    """Write report.json, pairs.csv and the SVG charts; returns the paths."""
    from .charts import render_report_charts  # deferred: pulls in matplotlib

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / REPORT_JSON
    json_path.write_text(report_to_json(report))
    csv_path = out_dir / PAIRS_CSV
    write_pairs_csv(report, csv_path)
    chart_paths = render_report_charts(report, out_dir)
    return [json_path, csv_path, *chart_paths]
