# ----------------------------------------------------------------------------
# Copyright (c) 2020, Franck Lejzerowicz.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import os
import re
import shlex
import shutil
import itertools
import threading
import subprocess
import numpy as np
from contextlib import contextmanager
from dataclasses import dataclass, replace
from typing import NamedTuple

from pysmt.shortcuts import And, Not, EqualsOrIff, Symbol, Int, Bool, Solver, get_env
from pysmt.typing import BOOL, INT
from pysmt.logics import QF_LIA, LIA
from pysmt.smtlib.printers import to_smtlib
from pysmt.exceptions import SolverReturnedUnknownResultError

from Xdrcover.logic import (
    FormulaError, evaluate, domain_values, has_quantifier,
    range_constraint, sorted_symbols)

SAT, UNSAT, UNKNOWN = 'sat', 'unsat', 'unknown'
KINDS = ('pysmt', 'smt', 'enum')
DEFAULT_SOLVER = os.environ.get('XDRCOVER_SOLVER', 'z3 -in -smt2')
GRID_CELLS = 1 << 21
TOKEN_RE = re.compile(r'\(|\)|\|[^|]*\||"[^"]*"|[^\s()|"]+')

# pysmt hash-conses formulas in one unlocked manager per process
_FORMULAS = threading.Lock()
_HOLDER = threading.local()


@dataclass(frozen=True)
class SolverBackend:
    """How satisfiability queries are answered.

    kind 'pysmt' runs an in-process pysmt solver, 'smt' pipes SMT-LIB 2
    to an external command and 'enum' enumerates bounded domains.
    """
    kind: str = 'pysmt'
    bound: int = None
    solver: str = DEFAULT_SOLVER
    timeout: int = 60000
    name: str = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError('unknown backend "%s" (choose from %s)' % (
                self.kind, ', '.join(KINDS)))
        if self.bound is not None and self.bound < 1:
            raise ValueError('bound must be at least 1')
        if self.timeout <= 0:
            raise ValueError('timeout must be positive')

    def with_bound(self, bound: int):
        if self.bound is not None:
            return self
        return replace(self, bound=bound)


@contextmanager
def serial_formulas():
    """
    Run a block holding the formula lock.

    Worker threads building formulas concurrently must do so inside this
    block; the lock is only given up while an external solver runs.
    """
    _FORMULAS.acquire()
    _HOLDER.held = True
    try:
        yield
    finally:
        _HOLDER.held = False
        _FORMULAS.release()


@contextmanager
def _solver_running():
    held = getattr(_HOLDER, 'held', False)
    if held:
        _FORMULAS.release()
    try:
        yield
    finally:
        if held:
            _FORMULAS.acquire()


class SatResult(NamedTuple):
    status: str
    model: dict


class TermValues(NamedTuple):
    values: frozenset
    unknown: int


def _py(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    return int(value)


def _const(value):
    if isinstance(value, (bool, np.bool_)):
        return Bool(bool(value))
    return Int(int(value))


def domain_constraints(formula, domains: dict = None):
    if not domains:
        return Bool(True)
    return And([range_constraint(symbol, *domains[symbol.symbol_name()])
                for symbol in sorted_symbols(formula)
                if symbol.symbol_name() in domains])


def _conjuncts(formula) -> list:
    if formula.is_and():
        out = []
        for arg in formula.args():
            out.extend(_conjuncts(arg))
        return out
    return [formula]


def split_cases(formula, limit: int = 256) -> list:
    """Distribute top-level disjunctions, up to `limit` cases."""
    pending, cases = [formula], []
    while pending:
        case = pending.pop()
        conjuncts = _conjuncts(case)
        split = next((i for i, c in enumerate(conjuncts) if c.is_or()), None)
        if split is None or len(cases) + len(pending) + len(conjuncts[split].args()) > limit:
            cases.append(case)
            continue
        rest = conjuncts[:split] + conjuncts[split + 1:]
        pending.extend(And(rest + [d]) for d in conjuncts[split].args())
    return cases


def _definition(conjunct):
    """(symbol, expression) when the conjunct pins a symbol."""
    if conjunct.is_symbol():
        return conjunct, Bool(True)
    if conjunct.is_not() and conjunct.arg(0).is_symbol():
        return conjunct.arg(0), Bool(False)
    if conjunct.is_equals() or conjunct.is_iff():
        left, right = conjunct.args()
        if left.is_symbol() and left not in right.get_free_variables():
            return left, right
        if right.is_symbol() and right not in left.get_free_variables():
            return right, left
    return None


def eliminate_equalities(formula, bound: int = None, domains: dict = None) -> tuple:
    """
    Substitute away top-level definitions x = e.

    The enumerated grid then only spans the undefined variables; a
    range guard keeps e inside the domain x would have had.

    Returns
    -------
    body : FNode
    definitions : dict
        Symbol -> defining expression over the remaining symbols.
    """
    definitions = {}
    rest, guards = [], []
    for conjunct in _conjuncts(formula):
        if definitions:
            conjunct = conjunct.substitute(definitions)
        pair = _definition(conjunct)
        if pair is None:
            rest.append(conjunct)
            continue
        symbol, expression = pair
        definitions = {key: value.substitute({symbol: expression})
                       for key, value in definitions.items()}
        definitions[symbol] = expression
        if not symbol.symbol_type().is_bool_type():
            name = symbol.symbol_name()
            if domains and name in domains:
                guards.append(range_constraint(expression, *domains[name]))
            elif bound is not None:
                guards.append(range_constraint(expression, 0, bound))
    body = And(rest + guards)
    if definitions:
        body = body.substitute(definitions)
    return body, definitions


def _grid(formula, terms, bound, domains, first_only, extra=()):
    """Yield (environment, grid symbols, shape, mask, term values) chunks."""
    free = set(formula.get_free_variables()).union(extra)
    for term in terms:
        free.update(term.get_free_variables())
    symbols = sorted(free, key=lambda s: s.symbol_name())
    values = [domain_values(s, domains, bound) for s in symbols]
    inner = len(symbols)
    cells = 1
    while inner and cells * len(values[inner - 1]) <= GRID_CELLS:
        cells *= len(values[inner - 1])
        inner -= 1
    outer_symbols, inner_symbols = symbols[:inner], symbols[inner:]
    shape = tuple(len(v) for v in values[inner:])
    k = len(shape)
    base = {}
    for j, (symbol, vals) in enumerate(zip(inner_symbols, values[inner:])):
        base[symbol.symbol_name()] = vals.reshape((1,) * j + (len(vals),) + (1,) * (k - j - 1))
    for point in itertools.product(*values[:inner]):
        env = dict(base)
        env.update({s.symbol_name(): _py(v) for s, v in zip(outer_symbols, point)})
        results = evaluate([formula] + list(terms), env, k, domains, bound)
        mask = np.broadcast_to(np.asarray(results[0], dtype=bool), shape)
        if not mask.any():
            continue
        yield env, inner_symbols, shape, mask, results[1:]
        if first_only:
            return


def _enum_model(case, bound, domains):
    body, definitions = eliminate_equalities(case, bound, domains)
    extra = set(case.get_free_variables())
    for expression in definitions.values():
        extra.update(expression.get_free_variables())
    extra.difference_update(definitions)
    for env, inner_symbols, shape, mask, _ in _grid(body, [], bound, domains, True, extra):
        point = np.argwhere(mask)[0] if shape else ()
        model = {name: value for name, value in env.items() if not isinstance(value, np.ndarray)}
        for symbol, position in zip(inner_symbols, point):
            model[symbol.symbol_name()] = _py(env[symbol.symbol_name()].reshape(-1)[position])
        for symbol, expression in definitions.items():
            model[symbol.symbol_name()] = _py(evaluate([expression], model, 0, domains, bound)[0])
        return model
    return None


def _enum_check(formula, bound, domains):
    for case in split_cases(formula):
        model = _enum_model(case, bound, domains)
        if model is not None:
            for symbol in formula.get_free_variables():
                if symbol.symbol_name() not in model:
                    model[symbol.symbol_name()] = _py(domain_values(symbol, domains, bound)[0])
            return SatResult(SAT, model)
    return SatResult(UNSAT, {})


def _enum_values(formula, terms, bound, domains):
    found = set()
    for case in split_cases(formula):
        body, definitions = eliminate_equalities(case, bound, domains)
        case_terms = [t.substitute(definitions) if definitions else t for t in terms]
        for _, _, shape, mask, results in _grid(body, case_terms, bound, domains, False):
            columns = [np.broadcast_to(np.asarray(r), shape)[mask] for r in results]
            if not columns:
                found.add(())
                continue
            found.update(tuple(_py(v) for v in row) for row in zip(*columns))
    return found


def parse_sexprs(text: str) -> list:
    """Parse solver output into nested lists of atoms."""
    stack = [[]]
    for token in TOKEN_RE.findall(text):
        if token == '(':
            stack.append([])
        elif token == ')':
            if len(stack) == 1:
                raise FormulaError('unbalanced solver output')
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(token)
    return stack[0]


def _smt_value(value):
    if value == 'true':
        return True
    if value == 'false':
        return False
    if isinstance(value, list):
        if len(value) == 2 and value[0] == '-':
            return -_smt_value(value[1])
        raise FormulaError('unexpected value %s' % value)
    return int(value)


def _quote(name: str) -> str:
    return '|%s|' % name


def smtlib_script(formula, get_values: bool = True) -> str:
    symbols = sorted_symbols(formula)
    lines = ['(set-option :produce-models true)',
             '(set-logic %s)' % ('LIA' if has_quantifier(formula) else 'QF_LIA')]
    for symbol in symbols:
        sort = 'Bool' if symbol.symbol_type().is_bool_type() else 'Int'
        lines.append('(declare-fun %s () %s)' % (_quote(symbol.symbol_name()), sort))
    lines.append('(assert %s)' % to_smtlib(formula, daggify=False))
    lines.append('(check-sat)')
    if get_values and symbols:
        lines.append('(get-value (%s))' % ' '.join(_quote(s.symbol_name()) for s in symbols))
    lines.append('(exit)')
    return '\n'.join(lines) + '\n'


def _process_check(formula, backend):
    script = smtlib_script(formula)
    try:
        with _solver_running():
            proc = subprocess.run(shlex.split(backend.solver), input=script,
                                  capture_output=True, text=True,
                                  timeout=backend.timeout / 1000.)
    except (OSError, subprocess.TimeoutExpired):
        return SatResult(UNKNOWN, {})
    try:
        answers = parse_sexprs(proc.stdout)
    except FormulaError:
        return SatResult(UNKNOWN, {})
    if not answers or answers[0] not in (SAT, UNSAT):
        return SatResult(UNKNOWN, {})
    if answers[0] == UNSAT:
        return SatResult(UNSAT, {})
    model = {}
    if len(answers) > 1 and isinstance(answers[1], list):
        for name, value in answers[1]:
            model[name.strip('|')] = _smt_value(value)
    return SatResult(SAT, model)


def _pysmt_solver(formula, backend):
    logic = LIA if has_quantifier(formula) else QF_LIA
    name = backend.name
    if name is None and 'z3' in get_env().factory.all_solvers(logic=logic):
        name = 'z3'
    # only z3 takes a per-query timeout (milliseconds); it then answers unknown
    options = {'timeout': backend.timeout} if name == 'z3' else {}
    return Solver(name=name, logic=logic, solver_options=options)


def _pysmt_check(formula, backend):
    with _pysmt_solver(formula, backend) as solver:
        solver.add_assertion(formula)
        try:
            if not solver.solve():
                return SatResult(UNSAT, {})
        except SolverReturnedUnknownResultError:
            return SatResult(UNKNOWN, {})
        model = {s.symbol_name(): _py(solver.get_py_value(s)) for s in sorted_symbols(formula)}
    return SatResult(SAT, model)


def check_sat(formula, backend: SolverBackend, domains: dict = None) -> SatResult:
    """
    Satisfiability of a formula.

    Parameters
    ----------
    formula : FNode
    backend : SolverBackend
    domains : dict
        Symbol name -> (low, high) ranges, e.g. the pc copies.

    Returns
    -------
    result : SatResult
        Status plus a model (name -> value) when SAT.
    """
    if backend.kind == 'enum':
        return _enum_check(formula, backend.bound, domains)
    formula = And(formula, domain_constraints(formula, domains))
    if backend.kind == 'smt':
        return _process_check(formula, backend)
    return _pysmt_check(formula, backend)


def _labels(terms) -> list:
    labels = []
    for i, term in enumerate(terms):
        if term.get_type().is_bool_type():
            labels.append(Symbol('__term%s_b' % i, BOOL))
        else:
            labels.append(Symbol('__term%s_i' % i, INT))
    return labels


def _block(labels, row):
    return Not(And([EqualsOrIff(label, _const(v)) for label, v in zip(labels, row)]))


def _candidates(terms, domains, bound):
    pools = []
    for term in terms:
        if term.get_type().is_bool_type():
            pools.append([False, True])
        elif term.is_symbol():
            pools.append([_py(v) for v in domain_values(term, domains, bound)])
        else:
            raise FormulaError('cannot enumerate values of %s' % term)
    return itertools.product(*pools)


def _fallback(query, labels, terms, found, backend, domains):
    """Per-valuation queries; UNKNOWN valuations are kept."""
    unknown = 0
    for row in _candidates(terms, domains, backend.bound):
        if row in found:
            continue
        pinned = And([query] + [EqualsOrIff(label, _const(v)) for label, v in zip(labels, row)])
        status = check_sat(pinned, backend, domains).status
        if status == UNSAT:
            continue
        if status == UNKNOWN:
            unknown += 1
        found.add(row)
    return unknown


def term_values(formula, terms: list, backend: SolverBackend,
                domains: dict = None) -> TermValues:
    """
    All value tuples the given terms take in models of a formula.

    The enumerating backend does this in one vectorized pass; SMT
    backends add blocking clauses until UNSAT. When a query comes back
    UNKNOWN the remaining valuations are checked one at a time and the
    undecided ones are kept.

    Parameters
    ----------
    formula : FNode
    terms : list of FNode
    backend : SolverBackend
    domains : dict
        Symbol name -> (low, high) ranges.

    Returns
    -------
    result : TermValues
        Value tuples and the count of valuations kept as UNKNOWN.
    """
    if backend.kind == 'enum':
        return TermValues(frozenset(_enum_values(formula, terms, backend.bound, domains)), 0)
    labels = _labels(terms)
    query = And([formula] + [EqualsOrIff(l, t) for l, t in zip(labels, terms)])
    found = set()
    if backend.kind == 'pysmt':
        query = And(query, domain_constraints(query, domains))
        with _pysmt_solver(query, backend) as solver:
            solver.add_assertion(query)
            while True:
                try:
                    if not solver.solve():
                        return TermValues(frozenset(found), 0)
                except SolverReturnedUnknownResultError:
                    break
                row = tuple(_py(solver.get_py_value(l)) for l in labels)
                found.add(row)
                solver.add_assertion(_block(labels, row))
    else:
        blocks = []
        while True:
            result = check_sat(And([query] + blocks), backend, domains)
            if result.status == UNSAT:
                return TermValues(frozenset(found), 0)
            if result.status == UNKNOWN:
                break
            row = tuple(result.model[l.symbol_name()] for l in labels)
            found.add(row)
            blocks.append(_block(labels, row))
    unknown = _fallback(query, labels, terms, found, backend, domains)
    return TermValues(frozenset(found), unknown)


def available_backend(bound: int = None):
    """A backend that can run here, or None."""
    if get_env().factory.all_solvers(logic=QF_LIA):
        return SolverBackend('pysmt', bound=bound)
    if shutil.which(shlex.split(DEFAULT_SOLVER)[0]):
        return SolverBackend('smt', bound=bound)
    return None
