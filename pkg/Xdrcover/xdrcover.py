# ----------------------------------------------------------------------------
# Copyright (c) 2020, Franck Lejzerowicz.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import time
from dataclasses import dataclass
from os.path import abspath, dirname, join

from Xdrcover.io import (
    InputError, read_program, read_predicates, read_template, read_query,
    read_machine, write_template, write_json, write_table, write_summary,
    get_summary_path, verdict_to_dict)
from Xdrcover.checks import (
    check_config, check_backend, check_required, check_unknowns, check_fragment)
from Xdrcover.solvers import SolverBackend, DEFAULT_SOLVER
from Xdrcover.abstraction import build_template
from Xdrcover.drcore import (
    explicit_dr, eliminate_shared, monotone_closure, nmf,
    check_monotone_sufficient, check_monotone_formula)
from Xdrcover.coverability import (
    TargetPattern, expand_target, minimize, forward_explore, backward_reach)
from Xdrcover.minsky import encode_minsky, simulate_minsky

RESOURCES = join(dirname(abspath(__file__)), 'resources')


@dataclass
class RunConfig:
    """Resolved options of one run."""
    program_file: str = None
    predicates_file: str = None
    template_file: str = None
    query_file: str = None
    machine: str = None
    out_file: str = None
    backend: str = 'pysmt'
    bound: int = None
    solver: str = DEFAULT_SOLVER
    timeout: int = 60000
    threads: int = 2
    depth: int = None
    probe: int = 0
    jobs: int = 1
    steps: int = 20
    pin: dict = None
    verbose: bool = False

    def solver_backend(self) -> SolverBackend:
        return SolverBackend(self.backend, self.bound, self.solver, self.timeout)


def load_template(config: RunConfig, summary: list):
    """
    Template from a template file, from a program plus predicates
    (abstraction) or from a finite concrete program (explicit).

    Returns
    -------
    template : BooleanDRProgram
    report : TemplateBuildReport or None
    """
    report = None
    if config.template_file:
        template = read_template(config.template_file)
    elif config.program_file and config.predicates_file:
        program = read_program(config.program_file)
        predicates = read_predicates(config.predicates_file, program)
        backend = config.solver_backend()
        check_backend(backend)
        print('- Build template... ', end='')
        template, report = build_template(program, predicates, backend,
                                          config.probe, config.jobs, config.verbose)
        print('Done -> %s transitions, %s initial pairs' % (
            len(template.trans), len(template.init)))
        check_unknowns(report)
    elif config.program_file:
        program = eliminate_shared(read_program(config.program_file))
        print('- Build explicit program... ', end='')
        template = explicit_dr(program, config.bound)
        print('Done -> %s local states, %s transitions' % (
            len(template.states), len(template.trans)))
    else:
        raise InputError('a template file or a program file is needed')
    summary.append(['Template local states', len(template.states)])
    summary.append(['Template transitions', len(template.trans)])
    return template, report


def load_targets(config: RunConfig, template) -> list:
    """Target counter states from the query, else the error locations."""
    try:
        if config.query_file:
            return expand_target(template, read_query(config.query_file))
        if not template.error:
            raise InputError('no query and no error location to target')
        targets = []
        for location in template.error:
            targets += expand_target(template, [TargetPattern(location)])
        return minimize(targets)
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(str(exc))


def _write_report(config: RunConfig, report: dict, summary: list, seconds: float = None):
    if seconds is not None:
        report['timing'] = {'seconds': round(seconds, 3)}
    write_json(config.out_file, report)
    write_summary(get_summary_path(config.out_file), summary)


def cmd_abstract(config: RunConfig):
    """Build a template from a program and predicates, write it as JSON."""
    check_config(config)
    check_required(program_file=config.program_file,
                   predicates_file=config.predicates_file, out_file=config.out_file)
    template, report = load_template(config, [])
    write_template(config.out_file, template, report.to_dict())
    write_table(get_summary_path(config.out_file), report.to_frame())
    return template, report


def cmd_explore(config: RunConfig):
    """Forward exploration of the instance at a fixed thread count."""
    check_config(config)
    check_required(out_file=config.out_file)
    summary = []
    template, _ = load_template(config, summary)
    targets = load_targets(config, template)
    start = time.perf_counter()
    print('- Explore %s threads... ' % config.threads, end='')
    verdict = forward_explore(template, config.threads, targets, config.depth, config.verbose)
    verdict.seconds = time.perf_counter() - start
    print('Done -> %s' % verdict.describe())
    summary.append(['Explored counter states', verdict.stats['states']])
    summary.append(['Explored depth', verdict.stats['depth']])
    report = dict(verdict_to_dict(verdict), command='explore', threads=config.threads)
    _write_report(config, report, summary, verdict.seconds)
    return verdict


def cmd_check_monotone(config: RunConfig) -> dict:
    """
    Monotonicity of a concrete dual-reference program (solver check)
    or of a template (sufficient local check).
    """
    check_config(config)
    check_required(out_file=config.out_file)
    summary = []
    if config.program_file and not config.predicates_file:
        program = read_program(config.program_file)
        if not program.dual:
            result = {'monotone': True, 'method': 'asynchronous', 'violation': None}
        else:
            backend = config.solver_backend()
            check_backend(backend)
            print('- Check monotonicity... ', end='')
            outcome = check_monotone_formula(program, backend, config.pin)
            print('Done -> %s' % ('monotone' if outcome.monotone else 'not monotone'))
            result = {'monotone': outcome.monotone, 'method': 'formula',
                      'violation': outcome.violation}
    else:
        template, _ = load_template(config, summary)
        outcome = check_monotone_sufficient(template)
        violation = None
        if not outcome.monotone:
            violation = [state.label() for state in outcome.violation]
        result = {'monotone': outcome.monotone, 'method': 'template',
                  'violation': violation, 'nmf': check_fragment(template, config.verbose)}
        summary.append(['Non-monotone fragment', result['nmf']])
    summary.append(['Monotone', int(result['monotone'])])
    _write_report(config, dict(result, command='check-monotone'), summary)
    return result


def cmd_close(config: RunConfig):
    """Write the monotone closure of a template."""
    check_config(config)
    check_required(out_file=config.out_file)
    summary = []
    template, _ = load_template(config, summary)
    print('- Monotone closure... ', end='')
    closure = monotone_closure(template)
    print('Done -> %s transitions added' % (len(closure.trans) - len(template.trans)))
    write_template(config.out_file, closure)
    summary.append(['Non-monotone fragment', len(nmf(template))])
    summary.append(['Closure transitions', len(closure.trans)])
    write_summary(get_summary_path(config.out_file), summary)
    return closure


def cmd_verify(config: RunConfig):
    """Unbounded verification: closure, then backward coverability."""
    check_config(config)
    check_required(out_file=config.out_file)
    summary = []
    template, _ = load_template(config, summary)
    fragment = check_fragment(template, config.verbose)
    closure = monotone_closure(template)
    targets = load_targets(config, closure)
    start = time.perf_counter()
    print('- Backward reachability... ', end='')
    verdict = backward_reach(closure, targets, config.verbose)
    verdict.seconds = time.perf_counter() - start
    print('Done -> %s' % verdict.describe())
    summary.append(['Non-monotone fragment', fragment])
    summary.append(['Backward iterations', verdict.stats['iterations']])
    summary.append(['Final basis size', verdict.stats['final_basis']])
    report = dict(verdict_to_dict(verdict), command='verify',
                  closure=closure is not template, nmf=fragment)
    _write_report(config, report, summary, verdict.seconds)
    return verdict


def cmd_encode_minsky(config: RunConfig):
    """Encode a two-counter machine and record its simulated run."""
    check_required(machine=config.machine, out_file=config.out_file)
    machine = read_machine(config.machine)
    print('- Encode machine... ', end='')
    template = encode_minsky(machine)
    print('Done -> %s transitions' % len(template.trans))
    trace = simulate_minsky(machine, config.steps)
    write_template(config.out_file, template,
                   {'simulation': [list(step) for step in trace]})
    write_summary(get_summary_path(config.out_file), [
        ['Machine states', len(machine.states)],
        ['Template transitions', len(template.trans)],
        ['Simulated steps', len(trace) - 1]])
    return template, trace
