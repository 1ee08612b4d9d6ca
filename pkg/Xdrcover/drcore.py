# ----------------------------------------------------------------------------
# Copyright (c) 2020, Franck Lejzerowicz.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import itertools
from collections import Counter, deque
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import NamedTuple

from pysmt.shortcuts import And, Not, ForAll, Implies, EqualsOrIff, Int, Bool

from Xdrcover.logic import (
    PASSIVE, make_symbol, rename, split_name, passive_frame, location_domains,
    instance_domains, instantiate_async, instantiate_dual, range_constraint)
from Xdrcover.solvers import SolverBackend, SAT, UNKNOWN, check_sat, term_values
from Xdrcover.frontend import build_program, passive_copy, program_constants

SINK = 'l_e'


class LocalState(NamedTuple):
    pc: str
    bits: tuple

    def label(self) -> str:
        if all(isinstance(bit, bool) for bit in self.bits):
            return '%s:%s' % (self.pc, ''.join('1' if bit else '0' for bit in self.bits))
        return '%s:%s' % (self.pc, ','.join(str(bit) for bit in self.bits))


@dataclass(frozen=True)
class BooleanDRProgram:
    """Finite dual-reference program over local states.

    `trans` holds quadruples (active, passive, active', passive') and
    `init` pairs (active, passive); `states` is the alphabet.
    """
    locations: tuple
    bit_names: tuple
    states: tuple
    trans: frozenset
    init: frozenset
    sink: str = SINK
    error: tuple = ()
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        alphabet = set(self.states)
        for quadruple in self.trans:
            if not alphabet.issuperset(quadruple):
                raise ValueError('transition %s leaves the alphabet' % (quadruple,))
            if quadruple[0].pc == self.sink:
                raise ValueError('sink state %s cannot be active' % quadruple[0].label())
        for pair in self.init:
            if not alphabet.issuperset(pair):
                raise ValueError('initial pair %s leaves the alphabet' % (pair,))
        if self.sink in self.error:
            raise ValueError('the sink location cannot be an error location')

    def is_error(self, state: LocalState) -> bool:
        return state.pc in self.error


class Violation(NamedTuple):
    active: LocalState
    active_next: LocalState
    passive: LocalState


class MonotonicityResult(NamedTuple):
    monotone: bool
    violation: object = None


class MonotonicityWitness(NamedTuple):
    state: tuple
    successor: tuple
    added: LocalState


class DrInstance(NamedTuple):
    n: int
    step: object
    initial: frozenset


class ConcreteSpace(NamedTuple):
    variables: tuple
    states: frozenset


@lru_cache(maxsize=32)
def transition_index(program: BooleanDRProgram) -> dict:
    """
    active -> active' -> passive -> sorted passive' completions.
    """
    index = {}
    for a, p, a2, p2 in sorted(program.trans):
        index.setdefault(a, {}).setdefault(a2, {}).setdefault(p, []).append(p2)
    return {a: {a2: {p: tuple(targets) for p, targets in completions.items()}
                for a2, completions in moves.items()}
            for a, moves in index.items()}


@lru_cache(maxsize=32)
def producer_index(program: BooleanDRProgram) -> dict:
    """(active, active') -> passive' -> sorted passive sources."""
    index = {}
    for a, p, a2, p2 in sorted(program.trans):
        index.setdefault((a, a2), {}).setdefault(p2, []).append(p)
    return {pair: {p2: tuple(sources) for p2, sources in targets.items()}
            for pair, targets in index.items()}


def ordered_successors(state: tuple, index: dict):
    """Yield (active thread, (a, a'), moves, successor) for a thread tuple."""
    for i, a in enumerate(state):
        others = state[:i] + state[i + 1:]
        for a2, completions in index.get(a, {}).items():
            choices = [completions.get(p) for p in others]
            if not all(choices):
                continue
            for combo in itertools.product(*choices):
                successor = combo[:i] + (a2,) + combo[i:]
                yield i, (a, a2), tuple(zip(others, combo)), successor


def counter_successors(state: tuple, index: dict):
    """Yield ((a, a'), moves, successor) for a sorted counter state."""
    for i, a in enumerate(state):
        if i and state[i - 1] == a:
            continue
        rest = Counter(state[:i] + state[i + 1:])
        for a2, completions in index.get(a, {}).items():
            groups = []
            for p, count in sorted(rest.items()):
                targets = completions.get(p)
                if not targets:
                    break
                groups.append([(p, combo) for combo in
                               itertools.combinations_with_replacement(targets, count)])
            else:
                for pick in itertools.product(*groups):
                    moves = tuple((p, t) for p, combo in pick for t in combo)
                    successor = tuple(sorted((a2,) + tuple(t for _, t in moves)))
                    yield (a, a2), moves, successor


def initial_counter_states(program: BooleanDRProgram, n: int) -> frozenset:
    partners = {}
    for a, p in program.init:
        partners.setdefault(a, set()).add(p)
    states = set()
    for a, ps in partners.items():
        for combo in itertools.combinations_with_replacement(sorted(ps), n - 1):
            states.add(tuple(sorted((a,) + combo)))
    return frozenset(states)


def instantiate_dr(program: BooleanDRProgram, n: int) -> DrInstance:
    """
    n-thread instance of a Boolean dual-reference program.

    Parameters
    ----------
    program : BooleanDRProgram
    n : int
        Thread count, at least 2.

    Returns
    -------
    instance : DrInstance
        `step` maps a thread tuple to its sorted successor tuples,
        `initial` holds the initial thread tuples.
    """
    if n < 2:
        raise ValueError('dual-reference instances need at least 2 threads')
    index = transition_index(program)

    def step(state: tuple) -> list:
        return sorted({successor for _, _, _, successor in ordered_successors(state, index)})

    partners = {}
    for a, p in program.init:
        partners.setdefault(a, []).append(p)
    initial = set()
    for a, ps in partners.items():
        for combo in itertools.product(sorted(ps), repeat=n - 1):
            for i in range(n):
                initial.add(combo[:i] + (a,) + combo[i:])
    return DrInstance(n, step, frozenset(initial))


def reachable_states(program: BooleanDRProgram, n: int, depth: int = None) -> frozenset:
    """Counter states reachable from the initial ones within `depth` steps."""
    index = transition_index(program)
    seen = set(initial_counter_states(program, n))
    frontier = sorted(seen)
    level = 0
    while frontier and (depth is None or level < depth):
        following = []
        for state in frontier:
            for _, _, successor in counter_successors(state, index):
                if successor not in seen:
                    seen.add(successor)
                    following.append(successor)
        frontier = sorted(following)
        level += 1
    return frozenset(seen)


def monotonicity_violations(program: BooleanDRProgram, alphabet: tuple = None) -> list:
    """Sorted triples (a, q, a') where q admits no passive move."""
    alphabet = program.states if alphabet is None else alphabet
    index = transition_index(program)
    triples = []
    for a in sorted(index):
        for a2, completions in index[a].items():
            triples.extend((a, q, a2) for q in alphabet if q not in completions)
    return sorted(triples)


def nmf(program: BooleanDRProgram, alphabet: tuple = None) -> frozenset:
    """Non-monotone fragment: enabled (a, a') pairs blocked by some passive q."""
    return frozenset(monotonicity_violations(program, alphabet))


def check_monotone_sufficient(program: BooleanDRProgram) -> MonotonicityResult:
    """Every enabled active move admits a move of any passive state."""
    index = transition_index(program)
    for a in sorted(index):
        for a2, completions in index[a].items():
            for q in program.states:
                if q not in completions:
                    return MonotonicityResult(False, Violation(a, a2, q))
    return MonotonicityResult(True)


def sink_states(program: BooleanDRProgram) -> tuple:
    valuations = sorted({state.bits for state in program.states})
    return tuple(LocalState(program.sink, bits) for bits in valuations)


def monotone_closure(program: BooleanDRProgram) -> BooleanDRProgram:
    """
    Monotone closure: a passive thread that cannot follow an active
    move is sent to the sink location.

    A program that is already monotone is returned unchanged. Otherwise
    the alphabet gains the sink states and, for every blocked triple
    (a, q, a') over the extended alphabet, the quadruples (a, q, a', s)
    for each sink state s are added.
    """
    if any(a.pc == program.sink for a, _, _, _ in program.trans):
        raise ValueError('the sink location %s is used by active moves' % program.sink)
    blocked = nmf(program)
    if not blocked:
        return program
    sinks = sink_states(program)
    alphabet = tuple(sorted(set(program.states) | set(sinks)))
    fragment = nmf(program, alphabet)
    trans = set(program.trans)
    trans.update((a, q, a2, s) for a, q, a2 in fragment for s in sinks)
    provenance = dict(program.provenance, closure=True, nmf=len(blocked))
    return replace(program, states=alphabet, trans=frozenset(trans), provenance=provenance)


def _covers(big: tuple, small: tuple) -> bool:
    need = Counter(small)
    have = Counter(big)
    return all(have[s] >= c for s, c in need.items())


def find_monotonicity_violation(program: BooleanDRProgram, max_k: int = 3,
                                depth: int = None):
    """
    Search for a witness that the instances are not monotone.

    A witness is a state v with successor v', and a local state l such
    that no successor of v + {l} covers v'. With `depth` only states
    reachable within that many steps are tried, otherwise every
    multiset of size 2..max_k.

    Returns
    -------
    witness : MonotonicityWitness or None
    """
    index = transition_index(program)
    for k in range(2, max_k + 1):
        if depth is None:
            sources = itertools.combinations_with_replacement(program.states, k)
        else:
            sources = sorted(reachable_states(program, k, depth))
        for state in sources:
            successors = sorted({s for _, _, s in counter_successors(state, index)})
            if not successors:
                continue
            for extra in program.states:
                bigger = tuple(sorted(state + (extra,)))
                grown = [s for _, _, s in counter_successors(bigger, index)]
                for successor in successors:
                    if not any(_covers(g, successor) for g in grown):
                        return MonotonicityWitness(state, successor, extra)
    return None


def eliminate_shared(program):
    """
    Turn shared variables into locals kept equal across threads.

    Every shared s becomes a local; assignments to s also assign its
    passive copy and the initial formula gains the passive copy of the
    original initial formula plus s == s@P. The result is dual-reference.
    """
    if not program.shared_vars:
        return program
    shared = set(program.shared_names)
    local_vars = program.user_locals + program.shared_vars
    commands = []
    for command in program.commands:
        extra = [((name, True), ast) for (name, passive), ast
                 in zip(command.lhs, command.rhs) if name in shared and not passive]
        commands.append(replace(command, lhs=command.lhs + tuple(p for p, _ in extra),
                                rhs=command.rhs + tuple(e for _, e in extra)))
    names = {name for name, _ in local_vars}
    init = tuple(program.init)
    init += tuple(passive_copy(ast, names) for ast in program.init)
    init += tuple(('bin', '==', ('name', s, False), ('name', s, True))
                  for s in program.shared_names)
    return build_program((), local_vars, program.locations, program.entry,
                         program.error, init, commands)


def _template_formulas(program) -> tuple:
    """R and Î over the active and passive copies."""
    names = program.local_names
    if program.dual:
        return program.transition, program.initial
    transition = And(program.transition, passive_frame(program))
    initial = And(program.initial, rename(program.initial, names, None, PASSIVE))
    return transition, initial


def _value_pools(program, bound: int) -> list:
    pools = []
    for _, sort in program.user_locals:
        pools.append((False, True) if sort == 'bool' else tuple(range(bound + 1)))
    return pools


def explicit_dr(program, bound: int = None) -> BooleanDRProgram:
    """
    Explicit finite dual-reference program of a program whose locals
    are Boolean or bounded integers in [0, bound].

    Shared variables must have been eliminated first.
    """
    if program.shared_vars:
        raise ValueError('eliminate shared variables before building an explicit program')
    if bound is None:
        bound = max([abs(c) for c in program_constants(program)], default=1)
    transition, initial = _template_formulas(program)
    symbols = {}
    for index in (None, PASSIVE):
        for primed in (False, True):
            symbols[index, primed] = [make_symbol(name, sort, index, primed)
                                      for name, sort in program.local_vars]
    width = len(program.local_vars)
    domains = location_domains(program, (None, PASSIVE))
    backend = SolverBackend('enum', bound=bound)

    def decode(row):
        return LocalState(program.locations[row[0]], tuple(row[1:width]))

    pools = _value_pools(program, bound)
    states = tuple(LocalState(pc, bits) for pc in program.locations
                   for bits in itertools.product(*pools))
    terms = symbols[None, False] + symbols[PASSIVE, False] + symbols[None, True] + symbols[PASSIVE, True]
    rows = term_values(transition, terms, backend, domains).values
    trans = set()
    for row in rows:
        chunks = [decode(row[i * width:(i + 1) * width]) for i in range(4)]
        trans.add(tuple(chunks))
    pairs = term_values(initial, symbols[None, False] + symbols[PASSIVE, False],
                        backend, domains).values
    init = {(decode(row[:width]), decode(row[width:])) for row in pairs}
    return BooleanDRProgram(program.locations, tuple(name for name, _ in program.user_locals),
                            states, frozenset(trans), frozenset(init),
                            error=(program.error,) if program.error else (),
                            provenance={'source': 'explicit', 'bound': bound})


def check_monotone_formula(program, backend: SolverBackend, pin: dict = None) -> MonotonicityResult:
    """
    Sufficient monotonicity check on a dual-reference template.

    Satisfiable iff some active move (a, a') is enabled with some
    passive p while a further passive q has no successor:
    R(a, p, a', p') and forall q'. not R(a, q, a', q').

    Parameters
    ----------
    program : AsyncProgram
    backend : SolverBackend
    pin : dict
        Optional values for named variables, e.g. {'l': 1, "l'": 1}.

    Returns
    -------
    result : MonotonicityResult
        The violation is a model restricted to a, a' and q.
    """
    names = program.local_names
    transition, _ = _template_formulas(program)
    blocked = rename(transition, names, PASSIVE, 2)
    following = [make_symbol(name, sort, 2, True) for name, sort in program.local_vars]
    top = len(program.locations) - 1
    body = Implies(range_constraint(make_symbol('pc', 'loc', 2, True), 0, top), Not(blocked))
    parts = [transition, ForAll(following, body)]
    sorts = program.sorts
    for name, value in sorted((pin or {}).items()):
        base = name.rstrip("'")
        symbol = make_symbol(base, sorts[base], primed=name.endswith("'"))
        parts.append(EqualsOrIff(symbol, Bool(value) if isinstance(value, bool) else Int(value)))
    domains = location_domains(program, (None, PASSIVE, 2))
    result = check_sat(And(parts), backend, domains)
    if result.status == UNKNOWN:
        return MonotonicityResult(False, UNKNOWN)
    if result.status != SAT:
        return MonotonicityResult(True)
    keep = set()
    for name, sort in program.local_vars:
        for index, primed in ((None, False), (None, True), (2, False)):
            keep.add(make_symbol(name, sort, index, primed).symbol_name())
    violation = {key.lstrip('?').replace('.2', '@Q'): value
                 for key, value in result.model.items() if key in keep}
    return MonotonicityResult(False, violation)


def concrete_reachable(program, n: int, bound: int) -> ConcreteSpace:
    """
    Exhaustive reachable states of the n-thread instance, with
    integers bounded to [0, bound].

    Returns
    -------
    space : ConcreteSpace
        Variable names and the reachable valuations, in that order.
    """
    transition, initial = (instantiate_dual if program.dual else instantiate_async)(program, n)
    current = []
    for name, sort in program.shared_vars:
        current.append(make_symbol(name, sort))
    for i in range(1, n + 1):
        current += [make_symbol(name, sort, i) for name, sort in program.local_vars]
    following = [make_symbol(*_split(s)) for s in current]
    domains = instance_domains(program, n)
    backend = SolverBackend('enum', bound=bound)
    seen = set(term_values(initial, current, backend, domains).values)
    frontier = deque(sorted(seen))
    while frontier:
        row = frontier.popleft()
        pinned = transition.substitute({s: (Bool(v) if isinstance(v, bool) else Int(v))
                                        for s, v in zip(current, row)})
        for successor in sorted(term_values(pinned, following, backend, domains).values):
            if successor not in seen:
                seen.add(successor)
                frontier.append(successor)
    return ConcreteSpace(tuple(s.symbol_name().lstrip('?') for s in current), frozenset(seen))


def _split(symbol) -> tuple:
    base, index, _ = split_name(symbol.symbol_name())
    sort = 'bool' if symbol.symbol_type().is_bool_type() else 'int'
    return base, sort, index, True
