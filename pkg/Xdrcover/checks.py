# ----------------------------------------------------------------------------
# Copyright (c) 2020, Franck Lejzerowicz.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import shlex
import shutil

from pysmt.shortcuts import get_env
from pysmt.logics import QF_LIA

from Xdrcover.io import InputError
from Xdrcover.drcore import nmf


def check_backend(backend) -> None:
    """
    Parameters
    ----------
    backend : SolverBackend
        Raises InputError when the backend cannot run here.
    """
    if backend.kind == 'pysmt':
        solvers = get_env().factory.all_solvers(logic=QF_LIA)
        if not solvers:
            raise InputError('no pysmt solver installed (try --p-backend smt or enum)')
        if backend.name is not None and backend.name not in solvers:
            raise InputError('pysmt solver "%s" is not installed' % backend.name)
    elif backend.kind == 'smt':
        command = shlex.split(backend.solver)
        if not command or shutil.which(command[0]) is None:
            raise InputError('solver command not found: %s' % backend.solver)


def check_config(config) -> None:
    """
    Parameters
    ----------
    config : RunConfig
        Raises InputError on out-of-range numeric options.
    """
    if config.bound is not None and config.bound < 1:
        raise InputError('--p-bound must be at least 1')
    if config.timeout <= 0:
        raise InputError('--p-timeout must be positive')
    if config.jobs < 1:
        raise InputError('--p-jobs must be at least 1')
    if config.probe < 0 or (config.depth is not None and config.depth < 0):
        raise InputError('--p-probe and --p-depth cannot be negative')
    check_threads(config.threads)


def check_threads(n: int, minimum: int = 2) -> None:
    if n < minimum:
        raise InputError('at least %s threads are needed (got %s)' % (minimum, n))


def check_required(**paths) -> None:
    missing = [name.replace('_', '-') for name, path in paths.items() if not path]
    if missing:
        raise InputError('missing option(s): %s' % ', '.join(missing))


def check_unknowns(report) -> None:
    """
    Parameters
    ----------
    report : TemplateBuildReport
        Warns about valuations kept because the solver gave up.
    """
    unknown = sum(step['unknown'] for step in report.steps)
    if unknown:
        print(' [Warning] %s abstract valuations kept on UNKNOWN solver answers' % unknown)
    if report.probe_added:
        print(' [Warning] probing beyond %s threads found new transitions' % report.bound)


def check_fragment(template, verbose: bool = False) -> int:
    """
    Parameters
    ----------
    template : BooleanDRProgram
    verbose : bool
        Show the blocked passive states per active move.

    Returns
    -------
    size : int
        Size of the non-monotone fragment.
    """
    fragment = sorted(nmf(template))
    if fragment and verbose:
        blocked = {}
        for a, q, a2 in fragment:
            blocked.setdefault((a, a2), []).append(q)
        print(' * Non-monotone moves:')
        for (a, a2), qs in sorted(blocked.items()):
            print('     --> %s -> %s blocks %s passive states' % (a.label(), a2.label(), len(qs)))
    return len(fragment)
