"""
PAIR-Agent: Command Line Interface

Usage:
    pair-agent run --scenario crash_injection --rounds 20 --out artifacts/crash
    pair-agent run --scenario nominal --rounds 20 --baseline --out artifacts/nominal-base
    pair-agent report --in artifacts/crash --baseline artifacts/crash-base
    pair-agent replay --in artifacts/crash
    pair-agent config show
    pair-agent scenarios
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from collections.abc import Callable
from pathlib import Path
from typing import Any

from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from . import __version__
from .config import UNBOUNDED_WINDOW, AgentSettings, build_experiment, build_settings
from .errors import ConfigError, PairError, ReplayDivergence, format_error_response
from .harness.metrics import MetricsSummary, report
from .harness.replay import replay
from .harness.runner import run_experiment, run_paired
from .sim.scenarios import list_scenarios, load_scenario
from .utils.env import describe_environment

console = Console()
err_console = Console(stderr=True)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_DIVERGENCE = 3

def _window_arg(value: str) -> int | str:
    """An integer round count, or one of the unbounded spellings passed through as-is."""
    if value.strip().lower() in UNBOUNDED_WINDOW:
        return value.strip().lower()
    try:
        return int(value)
    except ValueError:
        message = f"expected an integer or 'unbounded', got {value!r}"
        raise argparse.ArgumentTypeError(message) from None


# CLI flag -> AgentSettings field
HYPERPARAMETER_FLAGS: dict[str, tuple[str, Callable[[str], Any], str]] = {
    "--ess": ("ess", float, "BDeu equivalent sample size"),
    "--lambda": ("structure_lambda", float, "structural prior weight per differing edge"),
    "--max-parents": ("max_parents", int, "maximum parents per variable"),
    "--restarts": ("restarts", int, "hill-climbing restarts"),
    "--bins": ("bins", int, "quantile bins per metric (K)"),
    "--window": ("window", _window_arg, "evidence window in rounds (W), or 'unbounded'"),
    "--tol": ("tol", float, "mean-field convergence tolerance"),
    "--max-sweeps": ("max_sweeps", int, "mean-field sweep budget"),
    "--epsilon-g": ("epsilon_g", float, "expected free energy tie tolerance"),
    "--detection-threshold": ("detection_threshold", float, "belief reported as a detection"),
    "--enumeration-threshold": ("enumeration_threshold", float, "belief making a suspect"),
    "--max-restarts": ("max_restart_attempts", int, "restarts before escalation is offered"),
    "--nominal-mass": ("nominal_mass", float, "preferred mass on nominal bins"),
    "--bootstrap-rounds": ("bootstrap_rounds", int, "observation-only warm-up rounds"),
}


def setup_logging(settings: AgentSettings | None, verbose: bool) -> None:
    level = "DEBUG" if verbose else (settings.log_level.value.upper() if settings else "INFO")
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser."""
    parser = argparse.ArgumentParser(
        prog="pair-agent",
        description="Active-inference resilience loop for a simulated computing continuum",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  pair-agent run --scenario crash_injection --rounds 20 --out artifacts/crash
  pair-agent run --scenario crash_injection --rounds 20 --paired 1,2,3 --out artifacts/paired
  pair-agent report --in artifacts/crash --format json | jq .deadline_hit_rate
  pair-agent replay --in artifacts/crash

Exit codes:
  0 ok, 1 configuration error, 2 runtime error, 3 replay divergence
        """,
    )
    parser.add_argument("--json", action="store_true", help="Print errors and results as JSON")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    parser.add_argument("--version", action="version", version=f"pair-agent {__version__}")

    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="Run a seeded experiment and write its artifacts")
    run.add_argument("--scenario", required=True, help="Scenario file or committed scenario name")
    run.add_argument("--rounds", type=int, required=True, help="Agent rounds after bootstrap")
    run.add_argument("--seed", type=int, help="Master seed (default: the scenario's seed)")
    run.add_argument("--out", type=Path, default=Path("artifacts"), help="Artifact directory")
    run.add_argument(
        "--baseline", action="store_true", help="Force do-nothing every round (comparator run)"
    )
    run.add_argument(
        "--paired", help="Comma-separated seeds: run agent and baseline for each into --out"
    )
    run.add_argument("--force", action="store_true", help="Replace artifacts already in --out")
    for flag, (field, kind, text) in HYPERPARAMETER_FLAGS.items():
        run.add_argument(flag, dest=field, type=kind, help=text)

    rep = sub.add_parser("report", help="Compute metrics and plots from artifacts")
    rep.add_argument("--in", dest="artifacts", type=Path, required=True)
    rep.add_argument("--baseline", type=Path, help="Baseline artifact directory to compare with")
    rep.add_argument("--format", choices=["table", "json"], default="table")

    rpl = sub.add_parser("replay", help="Re-run recorded artifacts and byte-compare them")
    rpl.add_argument("--in", dest="artifacts", type=Path, required=True)

    cfg = sub.add_parser("config", help="Show or validate agent hyperparameters")
    cfg.add_argument("config_action", choices=["show", "validate"])

    sub.add_parser("scenarios", help="List committed example scenarios")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {field: getattr(args, field, None) for field, _, _ in HYPERPARAMETER_FLAGS.values()}


# =============================================================================
# COMMANDS
# =============================================================================


def cmd_run(args: argparse.Namespace, settings: AgentSettings) -> int:
    """Run one experiment, or agent/baseline pairs over several seeds."""
    scenario = load_scenario(args.scenario)
    config = build_experiment(
        scenario=args.scenario,
        rounds=args.rounds,
        seed=args.seed if args.seed is not None else scenario.seed,
        out=args.out,
        baseline=args.baseline,
        agent=settings,
    )

    if args.paired:
        try:
            seeds = [int(s) for s in args.paired.split(",") if s.strip()]
        except ValueError as e:
            raise ConfigError(f"--paired expects comma-separated seeds: {e}", field="paired") from e
        pairs = run_paired(config, seeds)
        rows = [
            {
                "seed": seed,
                "agent": str(agent.out),
                "baseline": str(base.out),
                "agent_actions": sum(a != "do-nothing" for a in agent.actions),
            }
            for seed, (agent, base) in pairs.items()
        ]
        if args.json:
            print(json.dumps(rows, indent=2))
        else:
            table = Table(title="Paired runs", header_style="bold magenta")
            for column in ("seed", "agent", "baseline", "agent_actions"):
                table.add_column(column.replace("_", " ").title())
            for row in rows:
                table.add_row(*(str(row[c]) for c in row))
            console.print(table)
        return EXIT_OK

    result = run_experiment(config, overwrite=args.force)
    counts = Counter(a.split(":", 1)[0] for a in result.actions)
    if args.json:
        print(
            json.dumps(
                {
                    "out": str(result.out),
                    "rounds": result.rounds_completed,
                    "actions": dict(sorted(counts.items())),
                },
                indent=2,
            )
        )
    else:
        lines = "\n".join(f"  {name}: {n}" for name, n in sorted(counts.items()))
        console.print(
            Panel(
                f"[bold]Scenario:[/bold] {scenario.name}  [bold]Seed:[/bold] {config.seed}\n"
                f"[bold]Rounds:[/bold] {result.rounds_completed}"
                f"{'  [yellow](baseline)[/yellow]' if config.baseline else ''}\n"
                f"[bold]Actions:[/bold]\n{lines}\n\n"
                f"Artifacts written to [green]{result.out}[/green]",
                title="PAIR-Agent run",
            )
        )
    return EXIT_OK


def _fmt(value: float | None, pattern: str = "{:.4f}") -> str:
    return "absent" if value is None else pattern.format(value)


def print_summary(summary: MetricsSummary) -> None:
    table = Table(
        title=f"Metrics: {summary.scenario} (seed {summary.seed})",
        show_header=True,
        header_style="bold magenta",
    )
    table.add_column("Metric", style="cyan", width=28)
    table.add_column("Value", style="white")
    table.add_row("Rounds", str(summary.rounds))
    table.add_row("Deadline-hit rate", _fmt(summary.deadline_hit_rate))
    table.add_row("  hits / misses", f"{summary.deadline_hits} / {summary.deadline_misses}")
    if summary.baseline_deadline_hit_rate is not None:
        table.add_row("Baseline deadline-hit rate", _fmt(summary.baseline_deadline_hit_rate))
    table.add_row("Mean time to recovery", _fmt(summary.mttr, "{:.2f} rounds"))
    table.add_row("  injections / censored", f"{summary.injections} / {summary.mttr_censored}")
    table.add_row("Detection precision", _fmt(summary.precision))
    table.add_row("Detection recall", _fmt(summary.recall))
    table.add_row("Skeleton F1", _fmt(summary.skeleton_f1))
    for action_type, n in summary.actions_by_type.items():
        table.add_row(f"Actions: {action_type}", str(n))
    console.print(table)


def cmd_report(args: argparse.Namespace) -> int:
    summary = report(args.artifacts, args.baseline)
    if args.format == "json" or args.json:
        print(summary.model_dump_json(indent=2))
    else:
        print_summary(summary)
        console.print(f"\nPlots written to [green]{args.artifacts / 'report'}[/green]")
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    verdict = replay(args.artifacts)
    if args.json:
        print(verdict.model_dump_json(indent=2))
    elif verdict.passed:
        console.print(f"[green]✅ Replay matched {verdict.files_compared} files[/green]")
    else:
        console.print(
            f"[red]❌ Replay diverged:[/red] {verdict.file} "
            f"(round {verdict.round if verdict.round is not None else '-'}, "
            f"line {verdict.line if verdict.line is not None else '-'}; {verdict.reason})"
        )
    return EXIT_OK if verdict.passed else EXIT_DIVERGENCE


def cmd_config_show(settings: AgentSettings) -> int:
    """Show the hyperparameters in effect."""
    console.print(Panel("[bold blue]Agent Hyperparameters[/bold blue]"))
    table = Table(show_header=True, header_style="bold magenta")
    table.add_column("Setting", style="cyan", width=25)
    table.add_column("Value", style="white")
    table.add_column("Source", style="dim")
    env = describe_environment()
    overridden = set(env["overrides"])
    for key, value in settings.to_dict().items():
        source = "environment" if key in overridden else "default"
        table.add_row(key.replace("_", " ").title(), str(value), source)
    console.print(table)

    if env["loaded_env_file"]:
        console.print(f"\n[green]✅ .env file:[/green] {env['loaded_env_file']}")
    for name, value in env["variables"].items():
        console.print(f"[dim]{name}={value}[/dim]")
    return EXIT_OK


def cmd_config_validate(settings: AgentSettings) -> int:
    console.print("[green]✅ Configuration is valid![/green]")
    return EXIT_OK


def cmd_scenarios() -> int:
    table = Table(title="Committed scenarios", header_style="bold magenta")
    table.add_column("Name", style="cyan")
    table.add_column("Nodes", justify="right")
    table.add_column("Tasks", justify="right")
    table.add_column("Injections", justify="right")
    table.add_column("Description", style="dim")
    for name in list_scenarios():
        scenario = load_scenario(name)
        table.add_row(
            name,
            str(len(scenario.nodes)),
            str(len(scenario.tasks)),
            str(len(scenario.injections)),
            scenario.description,
        )
    console.print(table)
    return EXIT_OK


def _report_error(error: PairError, as_json: bool) -> None:
    if as_json:
        print(format_error_response(error))
        return
    err_console.print(f"[red]Error:[/red] {error.message}")
    if error.hint:
        err_console.print(f"[yellow]Hint:[/yellow] {error.hint}")


def main(argv: list[str] | None = None) -> int:
    """Main CLI entry point."""
    parser = create_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    settings: AgentSettings | None = None
    try:
        settings = build_settings(_overrides(args))
        setup_logging(settings, args.verbose)
        if args.command == "run":
            return cmd_run(args, settings)
        if args.command == "report":
            return cmd_report(args)
        if args.command == "replay":
            return cmd_replay(args)
        if args.command == "scenarios":
            return cmd_scenarios()
        if args.config_action == "show":
            return cmd_config_show(settings)
        return cmd_config_validate(settings)
    except ConfigError as e:
        _report_error(e, args.json)
        return EXIT_CONFIG
    except ReplayDivergence as e:
        _report_error(e, args.json)
        return EXIT_DIVERGENCE
    except PairError as e:
        if settings is None:
            setup_logging(None, args.verbose)
        logging.getLogger(__name__).debug("Run failed", exc_info=True)
        _report_error(e, args.json)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
