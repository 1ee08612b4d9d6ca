# ----------------------------------------------------------------------------
# Copyright (c) 2020, Franck Lejzerowicz.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import sys
import json
import click

from Xdrcover import __version__
from Xdrcover.xdrcover import (
    RunConfig, cmd_abstract, cmd_explore, cmd_check_monotone,
    cmd_close, cmd_verify, cmd_encode_minsky)
from Xdrcover.solvers import KINDS
from Xdrcover.frontend import DslError
from Xdrcover.logic import FormulaError
from Xdrcover.minsky import MachineError
from Xdrcover.io import InputError

INPUT_ERRORS = (DslError, InputError, MachineError, FormulaError,
                FileNotFoundError, json.JSONDecodeError)


def _run(command, **options):
    try:
        command(RunConfig(**options))
    except INPUT_ERRORS as exc:
        click.echo('[Error] %s: %s' % (type(exc).__name__, exc), err=True)
        sys.exit(2)
    except Exception as exc:
        click.echo('[Error] %s: %s' % (type(exc).__name__, exc), err=True)
        sys.exit(1)


def program_options(func):
    func = click.option(
        "-p", "--m-program-file", "program_file", default=None,
        help="Path to the program source."
    )(func)
    func = click.option(
        "-q", "--m-predicates-file", "predicates_file", default=None,
        help="Path to the predicates (one per line or ';'-separated)."
    )(func)
    func = click.option(
        "-t", "--m-template-file", "template_file", default=None,
        help="Path to a template JSON written by 'abstract' or 'close' "
             "(replaces the program and predicates)."
    )(func)
    return func


def solver_options(func):
    func = click.option(
        "--p-backend", "--backend", "backend", type=click.Choice(KINDS),
        default="pysmt", show_default=True,
        help="Satisfiability backend: in-process pysmt solver, external "
             "SMT-LIB2 process, or bounded enumeration."
    )(func)
    func = click.option(
        "--p-bound", "--bound", "bound", type=int, default=None,
        help="Integer bound of the enumeration (defaults to twice the largest "
             "constant plus the thread count)."
    )(func)
    func = click.option(
        "--p-solver", "--solver", "solver", envvar="XDRCOVER_SOLVER",
        default="z3 -in -smt2", show_default=True,
        help="External solver command of the 'smt' backend."
    )(func)
    func = click.option(
        "--p-timeout", "--timeout", "timeout", type=int, default=60000,
        show_default=True,
        help="Per-query timeout in milliseconds; timeouts count as UNKNOWN."
    )(func)
    func = click.option(
        "--p-probe", "--probe", "probe", type=int, default=0, show_default=True,
        help="Extra thread counts abstracted to check template saturation."
    )(func)
    func = click.option(
        "--p-jobs", "--jobs", "jobs", type=int, default=1, show_default=True,
        help="Thread counts abstracted concurrently (smt backend)."
    )(func)
    return func


def common_options(func):
    func = click.option(
        "-o", "--o-out-file", "--out", "out_file", required=True,
        help="Path to the output JSON (a '_summary.tsv' is written next to it)."
    )(func)
    func = click.option(
        "--verbose/--no-verbose", default=False, show_default=True,
        help="Show per-step progress and non-monotone moves."
    )(func)
    return func


@click.group()
@click.version_option(__version__, prog_name="Xdrcover")
def standalone_xdrcover():
    """Parameterized verification of multithreaded programs by predicate
    abstraction, monotone closure and coverability."""


@standalone_xdrcover.command()
@program_options
@solver_options
@common_options
def abstract(**options):
    """Build the Boolean dual-reference template of a program."""
    _run(cmd_abstract, **options)


@standalone_xdrcover.command()
@program_options
@solver_options
@common_options
@click.option(
    "-m", "--m-query-file", "query_file", default=None,
    help="JSON target patterns (defaults to the error location)."
)
@click.option(
    "-n", "--p-threads", "--n", "threads", type=int, default=2, show_default=True,
    help="Number of threads."
)
@click.option(
    "-d", "--p-depth", "--depth", "depth", type=int, default=None,
    help="Depth bound (default: explore to the fixpoint)."
)
def explore(**options):
    """Explore the instance with a fixed number of threads."""
    _run(cmd_explore, **options)


@standalone_xdrcover.command(name="check-monotone")
@program_options
@solver_options
@common_options
@click.option(
    "--p-pin", "pin", default=None,
    help="JSON object pinning variables of the formula check, "
         "e.g. '{\"l\": 1, \"l'\": 1}'."
)
def check_monotone(pin, **options):
    """Check monotonicity of a concrete dual-reference program or template."""
    try:
        pin = json.loads(pin) if pin else None
    except json.JSONDecodeError as exc:
        raise click.BadParameter(str(exc), param_hint='--p-pin')
    _run(cmd_check_monotone, pin=pin, **options)


@standalone_xdrcover.command()
@program_options
@solver_options
@common_options
def close(**options):
    """Write the monotone closure of a template."""
    _run(cmd_close, **options)


@standalone_xdrcover.command()
@program_options
@solver_options
@common_options
@click.option(
    "-m", "--m-query-file", "query_file", default=None,
    help="JSON target patterns (defaults to the error location)."
)
def verify(**options):
    """Decide coverability for any number of threads."""
    _run(cmd_verify, **options)


@standalone_xdrcover.command(name="encode-minsky")
@click.option(
    "-c", "--m-machine", "machine", required=True,
    help="Two-counter machine JSON, or a built-in machine name "
         "(shuttle, countdown, transfer, blocked, ping-pong)."
)
@click.option(
    "-s", "--p-steps", "steps", type=int, default=20, show_default=True,
    help="Steps of the recorded simulation."
)
@common_options
def encode_minsky(**options):
    """Encode a two-counter machine as a Boolean dual-reference program."""
    _run(cmd_encode_minsky, **options)


if __name__ == "__main__":
    standalone_xdrcover()
