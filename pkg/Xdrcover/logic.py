# ----------------------------------------------------------------------------
# Copyright (c) 2020, Franck Lejzerowicz.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import numpy as np
from functools import reduce

from pysmt.shortcuts import And, Or, EqualsOrIff, Int, LE, Symbol
from pysmt.typing import BOOL, INT

PRIME = "'"
PASSIVE = 'P'
BOOL_TAG = '?'


class FormulaError(ValueError):
    pass


def var_name(base: str, index=None, primed: bool = False) -> str:
    """
    Name of the instantiated copy of a variable.

    Parameters
    ----------
    base : str
        Declared variable name.
    index : None, int or str
        None for the template variable, a thread
        number, or PASSIVE for the passive copy.
    primed : bool
        Whether this is the next-state copy.

    Returns
    -------
    name : str
        e.g. 'l', 'l.2', "l.P'".
    """
    name = base if index is None else '%s.%s' % (base, index)
    if primed:
        name += PRIME
    return name


def split_name(name: str) -> tuple:
    """
    Inverse of var_name (the Boolean tag is dropped).

    Returns
    -------
    base : str
    index : None, int or str
    primed : bool
    """
    name = name.lstrip(BOOL_TAG)
    primed = name.endswith(PRIME)
    if primed:
        name = name[:-1]
    base, _, index = name.partition('.')
    if not index:
        return base, None, primed
    if index.isdigit():
        return base, int(index), primed
    return base, index, primed


def sort_type(sort: str):
    return BOOL if sort == 'bool' else INT


def make_symbol(base: str, sort: str, index=None, primed: bool = False):
    """Symbol for a variable copy; Booleans carry a tag so that
    an Int and a Bool of the same name never collide."""
    name = var_name(base, index, primed)
    if sort == 'bool':
        return Symbol(BOOL_TAG + name, BOOL)
    return Symbol(name, INT)


def _resymbol(symbol, base, index, primed):
    name = var_name(base, index, primed)
    if symbol.symbol_type().is_bool_type():
        name = BOOL_TAG + name
    return Symbol(name, symbol.symbol_type())


def sorted_symbols(formula) -> list:
    return sorted(formula.get_free_variables(), key=lambda s: s.symbol_name())


def rename(formula, names, source=None, target=None, both_states: bool = True):
    """
    Replace the `source` copies of `names` by their `target` copies.

    Variables outside `names` or not indexed by `source` stay
    unchanged. When `both_states` is False, primed occurrences
    are left alone.

    Parameters
    ----------
    formula : FNode
    names : iterable of str
        Base names of the variables to rename.
    source : None, int or str
        Index of the copies to replace.
    target : None, int or str
        Index of the new copies.
    both_states : bool
        Also rename next-state copies.

    Returns
    -------
    renamed : FNode
    """
    names = set(names)
    subs = {}
    for symbol in formula.get_free_variables():
        base, index, primed = split_name(symbol.symbol_name())
        if base in names and index == source and (both_states or not primed):
            subs[symbol] = _resymbol(symbol, base, target, primed)
    if not subs:
        return formula
    return formula.substitute(subs)


def prime(formula):
    """Next-state copy of a state formula."""
    subs = {}
    for symbol in formula.get_free_variables():
        base, index, primed = split_name(symbol.symbol_name())
        if primed:
            raise FormulaError('%s is already primed' % symbol.symbol_name())
        subs[symbol] = _resymbol(symbol, base, index, True)
    if not subs:
        return formula
    return formula.substitute(subs)


def frame(program, index) -> object:
    """All locals (pc included) of copy `index` keep their value."""
    return And([EqualsOrIff(make_symbol(name, sort, index, True),
                            make_symbol(name, sort, index))
                for name, sort in program.local_vars])


def active_transition(program, n: int, a: int):
    """
    Transition formula of an n-thread instance where thread `a` is active.

    Asynchronous programs frame every other thread; dual-reference
    programs conjoin the template over all passive threads.
    """
    if not 1 <= a <= n:
        raise FormulaError('active thread %s not in 1..%s' % (a, n))
    names = program.local_names
    active = rename(program.transition, names, None, a)
    if program.dual:
        if n < 2:
            raise FormulaError('dual-reference programs need at least 2 threads')
        return And([rename(active, names, PASSIVE, p)
                    for p in range(1, n + 1) if p != a])
    return And([active] + [frame(program, p) for p in range(1, n + 1) if p != a])


def initial_formula(program, n: int):
    names = program.local_names
    if program.dual:
        if n < 2:
            raise FormulaError('dual-reference programs need at least 2 threads')
        disjuncts = []
        for a in range(1, n + 1):
            active = rename(program.initial, names, None, a)
            disjuncts.append(And([rename(active, names, PASSIVE, p)
                                  for p in range(1, n + 1) if p != a]))
        return Or(disjuncts)
    return And([rename(program.initial, names, None, a) for a in range(1, n + 1)])


def instantiate_async(program, n: int) -> tuple:
    """
    n-thread instance (R^n, I^n) of an asynchronous program.

    Parameters
    ----------
    program : AsyncProgram
    n : int
        Thread count, at least 1.

    Returns
    -------
    transition : FNode
        Disjunction over the active thread.
    initial : FNode
        Every thread satisfies the initial formula.
    """
    if program.dual:
        raise FormulaError('use instantiate_dual for dual-reference programs')
    if n < 1:
        raise FormulaError('thread count must be positive')
    transition = Or([active_transition(program, n, a) for a in range(1, n + 1)])
    return transition, initial_formula(program, n)


def instantiate_dual(program, n: int) -> tuple:
    """n-thread instance of a dual-reference program (n >= 2)."""
    transition = Or([active_transition(program, n, a) for a in range(1, n + 1)])
    return transition, initial_formula(program, n)


def passive_frame(program):
    return frame(program, PASSIVE)


def location_domains(program, indices) -> dict:
    """pc copies range over the location indices."""
    top = len(program.locations) - 1
    domains = {}
    for index in indices:
        for primed in (False, True):
            domains[var_name('pc', index, primed)] = (0, top)
    return domains


def instance_domains(program, n: int) -> dict:
    return location_domains(program, range(1, n + 1))


def predicate_semantics(pred, a: int, n: int):
    """
    Truth of a predicate for thread `a` of an n-thread state.

    Shared predicates are returned unchanged, local and single-thread
    ones are evaluated on thread a's copy, inter-thread ones are
    conjoined over every passive thread p != a.
    """
    if pred.kind == 'shared':
        return pred.formula
    active = rename(pred.formula, pred.local_names, None, a, both_states=False)
    if pred.kind != 'inter-thread':
        return active
    if n < 2:
        raise FormulaError('inter-thread predicates need at least 2 threads')
    return And([rename(active, pred.local_names, PASSIVE, p, both_states=False)
                for p in range(1, n + 1) if p != a])


def range_constraint(symbol, low: int, high: int):
    return And(LE(Int(low), symbol), LE(symbol, Int(high)))


def iter_nodes(formula):
    seen = set()
    stack = [formula]
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        yield node
        stack.extend(node.args())


def has_quantifier(formula) -> bool:
    return any(node.is_quantifier() for node in iter_nodes(formula))


class _Evaluator(object):
    """Ground or grid evaluation of a formula with numpy broadcasting.

    Grid variables live on their own axes; quantified variables get
    a fresh leading axis that is reduced when leaving the quantifier.
    """

    def __init__(self, env: dict, ndim: int, domains: dict = None, bound: int = None):
        self.env = env
        self.ndim = ndim
        self.domains = domains or {}
        self.bound = bound
        self.memo = {}

    def walk(self, node):
        if node in self.memo:
            return self.memo[node]
        value = self._eval(node)
        self.memo[node] = value
        return value

    def _eval(self, node):
        if node.is_symbol():
            name = node.symbol_name()
            if name not in self.env:
                raise FormulaError('missing binding for %s' % name)
            return self.env[name]
        if node.is_bool_constant():
            return bool(node.constant_value())
        if node.is_int_constant():
            return int(node.constant_value())
        if node.is_forall() or node.is_exists():
            return self._quantifier(node)
        args = [self.walk(arg) for arg in node.args()]
        if node.is_and():
            return reduce(np.logical_and, args, True)
        if node.is_or():
            return reduce(np.logical_or, args, False)
        if node.is_not():
            return np.logical_not(args[0])
        if node.is_implies():
            return np.logical_or(np.logical_not(args[0]), args[1])
        if node.is_iff() or node.is_equals():
            return np.equal(args[0], args[1])
        if node.is_le():
            return np.less_equal(args[0], args[1])
        if node.is_lt():
            return np.less(args[0], args[1])
        if node.is_plus():
            return reduce(np.add, args)
        if node.is_minus():
            return np.subtract(args[0], args[1])
        if node.is_times():
            return reduce(np.multiply, args)
        if node.is_ite():
            return np.where(args[0], args[1], args[2])
        raise FormulaError('unsupported operator in %s' % node)

    def _quantifier(self, node):
        env = dict(self.env)
        ndim = self.ndim
        variables = node.quantifier_vars()
        for symbol in variables:
            values = domain_values(symbol, self.domains, self.bound)
            ndim += 1
            env[symbol.symbol_name()] = values.reshape((len(values),) + (1,) * (ndim - 1))
        inner = _Evaluator(env, ndim, self.domains, self.bound)
        body = np.asarray(inner.walk(node.arg(0)))
        body = body.reshape((1,) * (ndim - body.ndim) + body.shape)
        reducer = np.all if node.is_forall() else np.any
        return reducer(body, axis=tuple(range(len(variables))))


def domain_values(symbol, domains: dict = None, bound: int = None) -> np.ndarray:
    """Values a variable ranges over in bounded evaluation."""
    if symbol.symbol_type().is_bool_type():
        return np.array([False, True])
    name = symbol.symbol_name()
    if domains and name in domains:
        low, high = domains[name]
    elif bound is not None:
        low, high = 0, bound
    else:
        raise FormulaError('no finite domain for %s' % name)
    return np.arange(low, high + 1, dtype=np.int64)


def evaluate(nodes: list, env: dict, ndim: int = 0,
             domains: dict = None, bound: int = None) -> list:
    """Evaluate several formulas/terms on the same (grid) environment."""
    evaluator = _Evaluator(env, ndim, domains, bound)
    return [evaluator.walk(node) for node in nodes]


def eval_formula(formula, assignment: dict, domains: dict = None, bound: int = None) -> bool:
    """
    Ground truth value of a formula.

    Parameters
    ----------
    formula : FNode
    assignment : dict
        Symbol name -> value for every free variable.
    domains : dict
        Finite domains for quantified variables.
    bound : int
        Default integer bound for quantified variables.

    Returns
    -------
    value : bool
    """
    return bool(evaluate([formula], dict(assignment), 0, domains, bound)[0])


def max_constant(formula) -> int:
    values = [abs(int(node.constant_value())) for node in iter_nodes(formula)
              if node.is_int_constant()]
    return max(values, default=0)
