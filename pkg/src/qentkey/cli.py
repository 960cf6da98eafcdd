"""Command-line interface.

Exit codes: 0 success, 1 user error (bad input, unknown names, missing
files), 2 internal error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from .entanglement import rank_pairs
from .experiment import (
    ExperimentConfig,
    run_full_experiment,
    score_pairs,
    _resolve_profile,
)
from .graphstate import (
    build_graph_state_circuit,
    device_topology,
    graph_stabilizers,
    ring_graph,
    stabilizer_expectation,
)
from .noise import load_calibration
from .sim import run_circuit
from .supercrypt import bits_to_str, protocol_fidelity, supercrypt_roundtrip

SHIPPED_TOPOLOGIES = ("ibmqx4", "ibmq_16_melbourne")


class UserError(click.ClickException):
    exit_code = 1


def _parse_pair(text: str) -> tuple[int, int]:
    try:
        b, c = (int(x) for x in text.split(","))
    except ValueError:
        raise UserError(f"expected a pair like 'B,C', got {text!r}")
    return b, c


@click.group()
def cli() -> None:
    """Entanglement-ranked superdense key distribution on simulated devices."""


@cli.group()
def topology() -> None:
    """Inspect device topologies."""


@topology.command("list")
def topology_list() -> None:
    for name in SHIPPED_TOPOLOGIES:
        t = device_topology(name)
        click.echo(f"{t.name}: {t.num_qubits} qubits, {len(t.edges)} measured pairs")


@topology.command("show")
@click.argument("name")
def topology_show(name: str) -> None:
    t = device_topology(name)
    click.echo(f"name: {t.name}")
    click.echo(f"qubits: {t.num_qubits}")
    click.echo("measured pairs:")
    for a, b in t.sorted_edges():
        click.echo(f"  ({a}, {b})")


@cli.group("graphstate")
def graphstate_group() -> None:
    """Prepare and verify graph states."""


@graphstate_group.command("verify")
@click.argument("name")
@click.option("--noise", "profile", default="none", show_default=True,
              help="calibration profile name/path, or 'none'")
@click.option("--trajectories", default=2048, show_default=True)
@click.option("--seed", default=0, show_default=True)
def graphstate_verify(name: str, profile: str, trajectories: int, seed: int) -> None:
    """Print every stabilizer expectation of the prepared graph state."""
    topo = device_topology(name)
    model = _resolve_profile(profile, topo)
    graph = ring_graph(topo)
    circuit = build_graph_state_circuit(graph)
    stabs = graph_stabilizers(graph)
    if model.is_zero():
        state = run_circuit(circuit)
        values = [stabilizer_expectation(state, s) for s in stabs]
    else:
        from .noise import _sample_noisy_ops, _trajectory_seeds
        from .sim import StateVector, _run_ops

        sums = np.zeros(len(stabs))
        base = StateVector.zero(circuit.num_qubits)
        for child in _trajectory_seeds(seed, trajectories):
            rng = np.random.default_rng(child)
            ops = _sample_noisy_ops(circuit, model, rng)
            state = StateVector(circuit.num_qubits, _run_ops(base.amplitudes.copy(), circuit.num_qubits, ops))
            sums += [stabilizer_expectation(state, s) for s in stabs]
        values = sums / trajectories
    for stab, value in zip(stabs, values):
        click.echo(f"<K_{stab.vertex}> = {value:.6f}")


@cli.command("negativity")
@click.argument("name")
@click.option("--pair", default=None, help="restrict to one pair, e.g. 3,4")
@click.option("--profile", default="none", show_default=True)
@click.option("--trajectories", default=4096, show_default=True)
@click.option("--shots", default=8192, show_default=True,
              help="shots per tomography setting")
@click.option("--tomography/--no-tomography", default=False, show_default=True)
@click.option("--seed", default=0, show_default=True)
def negativity_cmd(name: str, pair: str | None, profile: str, trajectories: int,
                   shots: int, tomography: bool, seed: int) -> None:
    """Negativity of each measured pair of a device."""
    topo = device_topology(name)
    model = _resolve_profile(profile, topo)
    graph = ring_graph(topo)
    pairs = topo.sorted_edges()
    if pair is not None:
        wanted = _parse_pair(pair)
        wanted = (min(wanted), max(wanted))
        if wanted not in pairs:
            raise UserError(f"{wanted} is not a measured pair of {name}")
        pairs = [wanted]
    scores = score_pairs(
        graph, pairs, model, trajectories, shots, tomography,
        np.random.SeedSequence(seed),
    )
    for s in rank_pairs(scores):
        click.echo(f"({s.pair[0]}, {s.pair[1]})  negativity = {s.negativity:.6f}  [{s.method}]")


@cli.command("fidelity")
@click.argument("name")
@click.option("--pair", required=True, help="qubit pair, e.g. 3,4")
@click.option("--profile", default="none", show_default=True)
@click.option("--shots", default=8192, show_default=True)
@click.option("--repeats", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
def fidelity_cmd(name: str, pair: str, profile: str, shots: int, repeats: int, seed: int) -> None:
    """Protocol fidelity of superdense key transmission over one pair."""
    topo = device_topology(name)
    model = _resolve_profile(profile, topo)
    b, c = _parse_pair(pair)
    estimate = protocol_fidelity((b, c), model, shots, repeats, seed, topology=topo)
    click.echo(f"pair ({b}, {c}): fidelity = {estimate.mean_fidelity:.6f} "
               f"+/- {estimate.std_error:.6f} (std error over {repeats} repeats)")
    for message in sorted(estimate.per_message):
        click.echo(f"  message {message}: {estimate.per_message[message]:.6f}")


@cli.group("experiment")
def experiment_group() -> None:
    """Full experiment runs."""


@experiment_group.command("run")
@click.option("--config", "config_path", default=None, help="JSON config file")
@click.option("--topology", "topology_name", default=None)
@click.option("--profile", default=None)
@click.option("--shots", type=int, default=None)
@click.option("--repeats", type=int, default=None)
@click.option("--trajectories", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--tomography/--no-tomography", "tomography", default=None)
@click.option("--output-dir", default=None)
def experiment_run(config_path: str | None, topology_name: str | None, profile: str | None,
                   shots: int | None, repeats: int | None, trajectories: int | None,
                   seed: int | None, tomography: bool | None, output_dir: str | None) -> None:
    """Run the full per-pair scoring experiment and write the report bundle."""
    overrides = dict(
        topology_name=topology_name, profile=profile, shots=shots, repeats=repeats,
        trajectories=trajectories, seed=seed, tomography=tomography, output_dir=output_dir,
    )
    if config_path is not None:
        config = ExperimentConfig.from_file(config_path, **overrides)
    else:
        if topology_name is None:
            raise UserError("either --config or --topology is required")
        config = ExperimentConfig(
            **{k: v for k, v in overrides.items() if v is not None}
        )
    report = run_full_experiment(config)
    out = config.resolved_output_dir()
    click.echo(f"selected pair: {report.selected_pair} "
               f"(fidelity {report.fidelity_for(report.selected_pair).mean_fidelity:.4f})")
    click.echo(f"random-selection baseline: {report.baseline_mean:.4f} "
               f"+/- {report.baseline_std_error:.4f}")
    click.echo(f"improvement: {report.improvement_percent:.1f}%")
    click.echo(f"report written to {out}/")


@cli.command("roundtrip")
@click.option("--message", required=True, help="bit string of even length")
@click.option("--pair", required=True, help="qubit pair, e.g. 3,4")
@click.option("--topology", "topology_name", default="ibmqx4", show_default=True)
@click.option("--profile", default="none", show_default=True)
@click.option("--seed", default=0, show_default=True)
def roundtrip_cmd(message: str, pair: str, topology_name: str, profile: str, seed: int) -> None:
    """Encrypt, transmit the key quantumly, decrypt; report the outcome."""
    topo = device_topology(topology_name)
    model = _resolve_profile(profile, topo)
    b, c = _parse_pair(pair)
    result = supercrypt_roundtrip(message, (b, c), model, seed, topology=topo)
    click.echo(f"message:    {message}")
    click.echo(f"ciphertext: {bits_to_str(result.ciphertext.bits)}")
    click.echo(f"received:   {bits_to_str(result.received_key)}")
    click.echo(f"decrypted:  {bits_to_str(result.decrypted)}")
    click.echo(f"exact match: {'yes' if result.exact_match else 'no'}")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return exc.exit_code if isinstance(exc, UserError) else 1
    except (KeyError, ValueError, FileNotFoundError, OSError) as exc:
        message = exc.args[0] if exc.args else exc
        click.echo(f"error: {message}", err=True)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        click.echo(f"internal error: {exc!r}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
