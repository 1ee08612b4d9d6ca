# ----------------------------------------------------------------------------
# Copyright (c) 2020, Franck Lejzerowicz.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import itertools
import numpy as np
import pandas as pd
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

from pysmt.shortcuts import And, EqualsOrIff, Int, Bool

from Xdrcover.logic import (
    FormulaError, make_symbol, prime, active_transition, initial_formula,
    instance_domains, predicate_semantics, eval_formula)
from Xdrcover.solvers import (
    SolverBackend, SAT, check_sat, term_values, serial_formulas)
from Xdrcover.frontend import inter_thread_count, program_constants, ast_constants
from Xdrcover.drcore import LocalState, BooleanDRProgram, SINK


class TemplateStep(NamedTuple):
    n: int
    transitions: frozenset
    initial: frozenset
    unknown: int


@dataclass
class TemplateBuildReport:
    bound: int
    inter_thread: int
    steps: list = field(default_factory=list)
    probe_added: bool = False

    def to_dict(self) -> dict:
        return {'bound': self.bound, 'inter_thread': self.inter_thread,
                'probe_added': self.probe_added, 'steps': list(self.steps)}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.steps, columns=[
            'threads', 'transitions', 'new_transitions',
            'initial', 'new_initial', 'unknown', 'probe'])


def saturation_bound(predicates: list) -> int:
    """Thread count after which the template no longer grows."""
    return 4 * inter_thread_count(predicates) + 2


def default_bound(program, predicates: list, n: int) -> int:
    """Integer bound of the enumerating backend for an n-thread query."""
    constants = [abs(c) for c in program_constants(program)]
    for pred in predicates:
        constants += [abs(c) for c in ast_constants(pred.ast)]
    return 2 * max(constants, default=1) + n


def alpha(state: dict, predicates: list, n: int) -> np.ndarray:
    """
    Thread-wise predicate abstraction of a concrete state.

    Parameters
    ----------
    state : dict
        Instantiated variable name -> value, e.g. {'s': 1, 'l.1': 0}.
    predicates : list of Predicate
    n : int
        Thread count.

    Returns
    -------
    matrix : np.ndarray
        (predicates x threads) Boolean matrix; column a is the local
        view of thread a.
    """
    matrix = np.zeros((len(predicates), n), dtype=bool)
    for c, pred in enumerate(predicates):
        for a in range(1, n + 1):
            matrix[c, a - 1] = eval_formula(predicate_semantics(pred, a, n), state)
    return matrix


def _check_threads(predicates: list, n: int):
    if n < 2 and any(pred.kind == 'inter-thread' for pred in predicates):
        raise FormulaError('inter-thread predicates need at least 2 threads')


def _thread_terms(program, predicates: list, n: int, primed: bool, threads=None) -> list:
    terms = []
    for i in (threads or range(1, n + 1)):
        terms.append(make_symbol('pc', 'loc', i, primed))
        for pred in predicates:
            semantics = predicate_semantics(pred, i, n)
            terms.append(prime(semantics) if primed else semantics)
    return terms


def _decode(program, row: tuple, m: int) -> tuple:
    width = m + 1
    return tuple(LocalState(program.locations[row[i]], tuple(row[i + 1:i + width]))
                 for i in range(0, len(row), width))


def _backend(program, predicates, n, backend: SolverBackend) -> SolverBackend:
    return backend.with_bound(default_bound(program, predicates, n))


def exabs_transitions(program, predicates: list, n: int, a: int,
                      backend: SolverBackend) -> frozenset:
    """
    Existential abstraction of the moves of thread `a` in the n-thread
    instance, as pairs (abstract state, abstract successor) of local
    state tuples.
    """
    return _exabs_transitions(program, predicates, n, a, backend)[0]


def _exabs_transitions(program, predicates, n, a, backend, threads=None):
    _check_threads(predicates, n)
    formula = active_transition(program, n, a)
    terms = (_thread_terms(program, predicates, n, False, threads) +
             _thread_terms(program, predicates, n, True, threads))
    result = term_values(formula, terms, _backend(program, predicates, n, backend),
                         instance_domains(program, n))
    half = len(terms) // 2
    m = len(predicates)
    pairs = frozenset((_decode(program, row[:half], m), _decode(program, row[half:], m))
                      for row in result.values)
    return pairs, result.unknown


def exabs_initial(program, predicates: list, n: int, backend: SolverBackend,
                  threads=None) -> frozenset:
    """Abstract initial states of the n-thread instance (optionally
    projected onto some threads)."""
    _check_threads(predicates, n)
    terms = _thread_terms(program, predicates, n, False, threads)
    result = term_values(initial_formula(program, n), terms,
                         _backend(program, predicates, n, backend),
                         instance_domains(program, n))
    return frozenset(_decode(program, row, len(predicates)) for row in result.values)


def concretize_transition(program, predicates: list, n: int, a: int,
                          pre: tuple, post: tuple, backend: SolverBackend):
    """
    Concrete witness of an abstract move of thread `a`, or None.

    Returns
    -------
    model : dict or None
        Values of the instantiated variables before and after the move.
    """
    terms = _thread_terms(program, predicates, n, False) + _thread_terms(program, predicates, n, True)
    values = []
    for state in tuple(pre) + tuple(post):
        values.append(Int(program.location_index(state.pc)))
        values.extend(Bool(bit) for bit in state.bits)
    pins = [EqualsOrIff(term, value) for term, value in zip(terms, values)]
    formula = And([active_transition(program, n, a)] + pins)
    result = check_sat(formula, _backend(program, predicates, n, backend),
                       instance_domains(program, n))
    return result.model if result.status == SAT else None


def template_step(program, predicates: list, n: int, backend: SolverBackend) -> TemplateStep:
    """
    Template transitions and initial pairs contributed by n threads.

    Thread 1 is active and thread 2 the reference passive thread; the
    other threads only constrain which moves exist.
    """
    _check_threads(predicates, n)
    pairs, unknown = _exabs_transitions(program, predicates, n, 1, backend, (1, 2))
    transitions = frozenset(pre + post for pre, post in pairs)
    initial = exabs_initial(program, predicates, n, backend, (1, 2))
    return TemplateStep(n, transitions, initial, unknown)


def template_states(program, predicates: list) -> tuple:
    """Every location with every predicate valuation."""
    cubes = list(itertools.product((False, True), repeat=len(predicates)))
    return tuple(LocalState(pc, bits) for pc in program.locations for bits in cubes)


def sink_label(program) -> str:
    label = SINK
    while label in program.locations:
        label += '_sink'
    return label


def _run_steps(program, predicates, counts, backend, jobs, verbose):
    def run(n):
        with serial_formulas():
            step = template_step(program, predicates, n, backend)
        if verbose:
            print('- Abstract %s threads... Done -> %s transitions, %s initial pairs' % (
                n, len(step.transitions), len(step.initial)))
        return step

    if jobs > 1 and backend.kind == 'smt':
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            return list(executor.map(run, counts))
    return [run(n) for n in counts]


def build_template(program, predicates: list, backend: SolverBackend,
                   probe: int = 0, jobs: int = 1, verbose: bool = False) -> tuple:
    """
    Boolean dual-reference template of a program under predicates.

    The template is the union of the contributions of 2..b threads,
    with b = 4 * (number of inter-thread predicates) + 2. With `probe`
    the thread counts b+1..b+probe are also abstracted and only
    compared to the template.

    Parameters
    ----------
    program : AsyncProgram
    predicates : list of Predicate
    backend : SolverBackend
    probe : int
        Extra thread counts checked for saturation.
    jobs : int
        Thread counts abstracted concurrently. Only the external `smt`
        backend overlaps work (its solver processes); others run serially.
    verbose : bool
        Print progress per thread count.

    Returns
    -------
    template : BooleanDRProgram
    report : TemplateBuildReport
    """
    if not predicates:
        raise ValueError('at least one predicate is needed')
    bound = saturation_bound(predicates)
    counts = list(range(2, bound + probe + 1))
    steps = _run_steps(program, predicates, counts, backend, jobs, verbose)
    report = TemplateBuildReport(bound, inter_thread_count(predicates))
    transitions, initial = set(), set()
    for step in steps:
        new_transitions = step.transitions - transitions
        new_initial = step.initial - initial
        is_probe = step.n > bound
        if is_probe:
            report.probe_added |= bool(new_transitions or new_initial)
        else:
            transitions |= step.transitions
            initial |= step.initial
        report.steps.append({
            'threads': step.n, 'transitions': len(transitions),
            'new_transitions': len(new_transitions), 'initial': len(initial),
            'new_initial': len(new_initial), 'unknown': step.unknown, 'probe': is_probe})
    template = BooleanDRProgram(
        program.locations, tuple(pred.text for pred in predicates),
        template_states(program, predicates), frozenset(transitions), frozenset(initial),
        sink=sink_label(program), error=(program.error,) if program.error else (),
        provenance={'source': 'abstraction', 'bound': bound,
                    'predicates': [pred.text for pred in predicates],
                    'closure': False})
    return template, report
