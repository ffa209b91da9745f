#!/usr/bin/env python3
# PYTHON_ARGCOMPLETE_OK
"""
edlab - Entropic Dynamics Simulation Lab
═══════════════════════════════════════════════════════════════
Command-line front end: run / list / check / explain / completion.
"""
import argparse
import difflib
import logging
import platform
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import argcomplete
import rich.box as box
from argcomplete.completers import FilesCompleter
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.theme import Theme
from rich.traceback import install

from edlab.artifacts import write_artifacts
from edlab.checks import CHECK_REGISTRY, EXPERIMENTS
from edlab.config import load_config
from edlab.config.schema import EXPERIMENT_DEFAULTS, EXPERIMENT_KEYS
from edlab.errors import ConfigError, EdlabError
from edlab.experiments import run_experiment
from edlab.models import RunArtifacts
from edlab.utils.logger import get_logger

custom_theme = Theme({
    "info": "dim cyan",
    "warning": "magenta",
    "danger": "bold red",
    "success": "bold green",
    "metric": "bold blue",
})
console = Console(theme=custom_theme, width=120)
install(console=Console(file=sys.stderr), show_locals=False, width=120)

logger = logging.getLogger("edlab")

# ═══════════════════════════════════════════════════════════════
# CONSTANTS & CONFIG
# ═══════════════════════════════════════════════════════════════
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_ABORT = 3


@dataclass
class Config:
    VERSION: str = "v0.1.0"
    RUNS_DIR: str = "runs"


CONFIG = Config()


# ═══════════════════════════════════════════════════════════════
# CLI DISPATCHER
# ═══════════════════════════════════════════════════════════════
class EdlabCLI:
    """Command dispatcher; every handler returns the process exit code."""

    def __init__(self):
        self.console = console

    def run(self, args: argparse.Namespace) -> int:
        if args.version:
            self._show_version(args)
            return EXIT_OK

        handlers = {
            "run": self._handle_run,
            "list": self._show_experiments,
            "check": self._handle_check,
            "explain": self._handle_explain,
            "completion": self._handle_completion,
        }
        return handlers[args.command](args)

    def _show_version(self, args):
        self.console.print(f"[bold magenta]edlab {CONFIG.VERSION}[/] • [dim]{platform.machine()}[/]")

    def _handle_completion(self, args) -> int:
        shell = getattr(args, "shell", "bash") or "bash"
        rc_file = "~/.bashrc" if shell == "bash" else "~/.zshrc"
        self.console.print(Panel.fit(
            f"[bold cyan]TAB COMPLETION SETUP[/]\n\n"
            f"[green]•[/] Test: [code]eval \"$(register-python-argcomplete edlab)\"[/]\n"
            f"[green]•[/] Permanent: [code]echo 'eval \"$(register-python-argcomplete edlab)\"' >> {rc_file}[/]",
            title="Shell completion", border_style="green"))
        return EXIT_OK

    # ---------------------------------------------------------------- config

    def _load(self, path: str, seed: Optional[int] = None):
        try:
            config = load_config(path)
            return config.with_seed(seed) if seed is not None else config
        except ConfigError as e:
            self._error(f"Config error in {path}: {e}")
            return None

    def _handle_check(self, args) -> int:
        config = self._load(args.config)
        if config is None:
            return EXIT_CONFIG_ERROR

        table = Table(title=f"Resolved config • {config.run_id}", box=box.MINIMAL_DOUBLE_HEAD,
                      header_style="bold magenta", border_style="dim")
        table.add_column("Key", style="cyan", no_wrap=True)
        table.add_column("Value")
        for section, values in config.echo().items():
            for key, value in values.items():
                table.add_row(f"{section}.{key}", str(value))
        self.console.print(table)
        self.console.print(f"[success]✔ {args.config} is valid[/] ({config.steps} steps, "
                           f"{len(EXPERIMENTS[config.name]['checks'])} checks)")
        return EXIT_OK

    # ------------------------------------------------------------------- run

    def _handle_run(self, args) -> int:
        config = self._load(args.config, args.seed)
        if config is None:
            return EXIT_CONFIG_ERROR

        out_dir = Path(args.out) if args.out else Path(CONFIG.RUNS_DIR) / config.run_id
        try:
            with self.console.status(f"[info]Running {config.name}...[/]"):
                artifacts = run_experiment(config)
        except EdlabError as e:
            self._error(f"{config.name} cannot run with this setup: {e}")
            return EXIT_CONFIG_ERROR

        try:
            write_artifacts(artifacts, out_dir)
        except OSError as e:
            self._error(f"Cannot write artifacts to {out_dir}: {e}")
            return EXIT_CONFIG_ERROR

        self._render_verdicts(artifacts, out_dir)
        if artifacts.aborted:
            return EXIT_NUMERIC_ABORT
        return EXIT_OK if artifacts.passed else EXIT_CHECK_FAILED

    def _render_verdicts(self, artifacts: RunArtifacts, out_dir: Path):
        table = Table(title=f"{artifacts.experiment} • {artifacts.run_id}", box=box.HEAVY_HEAD,
                      expand=True, show_footer=True, footer_style="bold dim")
        failed = sum(not v.passed for v in artifacts.verdicts)
        table.add_column("Check", style="bold cyan", footer=f"Σ {len(artifacts.verdicts)} checks")
        table.add_column("Arm", style="dim")
        table.add_column("Measured", justify="right", style="metric")
        table.add_column("Threshold", justify="right")
        table.add_column("Status", justify="center",
                         footer=f"[bold red]{failed} FAIL[/]" if failed else "[green]ALL PASS[/]")
        for v in artifacts.verdicts:
            color = "green" if v.passed else "bright_red"
            table.add_row(v.check_id, v.arm or "-", f"{v.measured:.3e}", f"{v.threshold:.1e}",
                          f"[{color}]{v.status}[/{color}]")
        self.console.print(table)

        if artifacts.aborted:
            self.console.print(Panel(f"[danger]Numerical abort[/]\n{artifacts.abort_reason}",
                                     border_style="red", expand=False))
        self.console.print(f"[dim]Artifacts: {out_dir}[/dim]")

    # ------------------------------------------------------------- catalogue

    def _show_experiments(self, args=None) -> int:
        table = Table(title="edlab experiments", box=box.MINIMAL_DOUBLE_HEAD,
                      header_style="bold magenta", expand=True, border_style="dim")
        table.add_column("Experiment", style="cyan", no_wrap=True)
        table.add_column("Keys", style="green")
        table.add_column("Checks")
        for name in sorted(EXPERIMENTS):
            keys = ", ".join(EXPERIMENT_KEYS[name]) or "-"
            table.add_row(name, keys, ", ".join(EXPERIMENTS[name]["checks"]))
        self.console.print(table)
        total = sum(len(c) for c in CHECK_REGISTRY.values())
        self.console.print(f"\n[bold cyan]✔ {len(EXPERIMENTS)} experiments, {total} checks[/bold cyan]")
        self.console.print("[dim]Use 'edlab explain <EXPERIMENT|CHECK_ID>' for details.[/dim]\n")
        return EXIT_OK

    def _handle_explain(self, args) -> int:
        term = (args.name or "").strip()
        checks = {}
        for category, entries in CHECK_REGISTRY.items():
            for cid, data in entries.items():
                checks[cid] = (category, data)
        categories = {c.upper(): c for c in CHECK_REGISTRY}

        if not term:
            self.console.print("\n[bold yellow]Specify an experiment, a check id or a category.[/bold yellow]")
            self.console.print(f"Categories: {', '.join(f'[cyan]{c}[/cyan]' for c in categories)}")
            self.console.print("Or run [bold]edlab list[/bold].\n")
            return EXIT_OK

        if term.lower() in EXPERIMENTS:
            self._render_experiment(term.lower())
            return EXIT_OK
        if term.upper() in checks:
            category, data = checks[term.upper()]
            self._render_check(term.upper(), category, data)
            return EXIT_OK
        if term.upper() in categories:
            category = categories[term.upper()]
            table = Table(box=box.SIMPLE, header_style="bold magenta", expand=True)
            table.add_column("Check", style="cyan", width=24)
            table.add_column("Title")
            for cid, data in CHECK_REGISTRY[category].items():
                table.add_row(cid, data["title"])
            self.console.print(f"\n[bold magenta]CATEGORY[/bold magenta] > [bold cyan]{category}[/bold cyan]")
            self.console.print(table)
            return EXIT_OK

        candidates = list(EXPERIMENTS) + list(checks) + list(categories)
        substring = [c for c in candidates if term.lower() in c.lower()]
        fuzzy = difflib.get_close_matches(term, candidates, n=3, cutoff=0.5) + \
            difflib.get_close_matches(term.upper(), candidates, n=3, cutoff=0.5)
        suggestions = sorted(set(substring + fuzzy))

        self.console.print(f"\n[bold red]✘[/bold red] No experiment or check named [bold]{term}[/bold].")
        if suggestions:
            self.console.print(f"[yellow]Did you mean:[/yellow] "
                               f"{', '.join(f'[cyan]{s}[/cyan]' for s in suggestions[:5])}?")
        return EXIT_CONFIG_ERROR

    def _render_experiment(self, name: str):
        entry = EXPERIMENTS[name]
        defaults = EXPERIMENT_DEFAULTS.get(name, {})
        self.console.print(f"\n[bold magenta]EXPERIMENT[/bold magenta] > [bold cyan]{name}[/bold cyan]")
        self.console.print(Panel(
            f"[bold white]{entry['title']}[/bold white]\n"
            f"[dim]Keys: {', '.join(EXPERIMENT_KEYS[name]) or '-'}[/dim]",
            border_style="magenta", box=box.ROUNDED))
        if defaults:
            self.console.print("\n[bold underline]Experiment defaults:[/bold underline]")
            for path, value in defaults.items():
                self.console.print(f"  {path} = {value}")
        self.console.print("\n[bold underline]Checks:[/bold underline]")
        for cid in entry["checks"]:
            for entries in CHECK_REGISTRY.values():
                if cid in entries:
                    self.console.print(f"  [cyan]{cid}[/cyan]  {entries[cid]['title']}")
        self.console.print()

    def _render_check(self, check_id: str, category: str, data: dict):
        self.console.print(f"\n[bold magenta]CHECK[/bold magenta] > [bold cyan]{check_id}[/bold cyan]")
        self.console.print(Panel(
            f"[bold white]{data['title']}[/bold white]\n[dim]Category: {category}[/dim]",
            border_style="magenta", box=box.ROUNDED))
        self.console.print("\n[bold underline]Measurement:[/bold underline]")
        self.console.print(data["description"])
        relation = "<" if data["mode"] == "max" else ">"
        self.console.print(f"\n[dim]Passes when measured {relation}[/dim] [metric]{data['threshold']:g}[/metric]")
        used_by = [name for name, e in EXPERIMENTS.items() if check_id in e["checks"]]
        self.console.print(f"[dim]Used by:[/dim] {', '.join(used_by)}\n")

    def _error(self, msg: str):
        self.console.print(f"[danger]✘ {msg}[/]")


# ═══════════════════════════════════════════════════════════════
# ARGUMENT PARSER
# ═══════════════════════════════════════════════════════════════
def create_parser() -> argparse.ArgumentParser:
    class EdlabParser(argparse.ArgumentParser):
        def error(self, message):
            self.print_usage(sys.stderr)
            sys.stderr.write(f"\n\033[1;31m✘ Error: {message}\033[0m\n")
            sys.exit(EXIT_CONFIG_ERROR)

    parser = EdlabParser(
        prog="edlab",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=f"\033[1;35medlab {CONFIG.VERSION}\033[0m - \033[3mEntropic dynamics simulation lab\033[0m",
        add_help=False,
        epilog="""
\033[1;33mUsage Examples:\033[0m
  edlab list                                  # Experiments and their checks
  edlab check configs/free_packet.ini         # Validate and show resolved config
  edlab run configs/free_packet.ini --out out # Run, write artifacts, exit 0/1/2/3
  edlab explain DUALITY_KS                    # What a check measures""",
    )

    options_group = parser.add_argument_group("\033[1;36mOptions\033[0m")
    options_group.add_argument("-h", "--help", action="help", help="Show this help message and exit")
    options_group.add_argument("-v", "--version", action="store_true", help="Show version and exit")
    options_group.add_argument("--verbose", action="store_true", help="Log per-output diagnostics (DEBUG)")

    subparsers = parser.add_subparsers(dest="command", metavar="Command", title="\033[1;35mCommands\033[0m")

    run_p = subparsers.add_parser("run", help="Run an experiment and write its artifacts")
    run_p.add_argument("config", help="Experiment config file").completer = FilesCompleter()
    run_p.add_argument("--seed", type=int, default=None, help="Override run.seed")
    run_p.add_argument("--out", default=None, help=f"Output directory (default {CONFIG.RUNS_DIR}/<run_id>)")

    subparsers.add_parser("list", help="List experiments, their keys and checks")

    check_p = subparsers.add_parser("check", help="Validate a config without running it")
    check_p.add_argument("config", help="Experiment config file").completer = FilesCompleter()

    explain_p = subparsers.add_parser("explain", help="Describe an experiment, check or category")
    explain_p.add_argument("name", nargs="?", help="Experiment name, check id (e.g. DUALITY_KS) or category")

    completion_p = subparsers.add_parser("completion", help="Shell tab completion setup")
    completion_p.add_argument("shell", nargs="?", choices=["bash", "zsh"], default="bash", help="Target shell")

    return parser


def main():
    parser = create_parser()
    argcomplete.autocomplete(parser)
    args = parser.parse_args()

    if args.command is None and not args.version:
        parser.print_help()
        sys.exit(EXIT_OK)

    get_logger("DEBUG" if args.verbose else "INFO")
    cli = EdlabCLI()
    try:
        code = cli.run(args)
    except KeyboardInterrupt:
        console.print("\n[warning]Run cancelled by user.[/]")
        sys.exit(130)
    sys.exit(code)


def run():
    """Entrypoint for the console script."""
    main()


if __name__ == "__main__":
    main()
