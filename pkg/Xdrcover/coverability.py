# ----------------------------------------------------------------------------
# Copyright (c) 2020, Franck Lejzerowicz.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import heapq
import itertools
import numpy as np
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple

from Xdrcover.drcore import (
    BooleanDRProgram, LocalState, check_monotone_sufficient, transition_index,
    producer_index, counter_successors, initial_counter_states, reachable_states)

COVERABLE, UNCOVERABLE = 'coverable', 'uncoverable'


class NonMonotoneError(ValueError):
    """Backward reachability refused: the program is not monotone."""

    def __init__(self, violation):
        self.violation = violation
        a, a2, q = violation
        super(NonMonotoneError, self).__init__(
            'not monotone: move %s -> %s blocks passive %s (run close first)' % (
                a.label(), a2.label(), q.label()))


class TargetPattern(NamedTuple):
    pc: str
    bits: tuple = None
    count: int = 1


class TraceStep(NamedTuple):
    state: tuple
    active: tuple
    moves: tuple


@dataclass
class Verdict:
    status: str
    trace: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    complete: bool = True
    seconds: float = 0.

    @property
    def coverable(self) -> bool:
        return self.status == COVERABLE

    def describe(self) -> str:
        if self.coverable:
            return 'Coverable (trace of %s steps)' % (len(self.trace) - 1)
        if self.complete:
            return 'Uncoverable'
        return 'Uncoverable-at-depth %s' % self.stats.get('depth')


def counter_state(states) -> tuple:
    """Canonical (sorted) counter representation of a multiset."""
    return tuple(sorted(states))


def covers(big: tuple, small: tuple, alphabet=None) -> bool:
    """
    Multiset inclusion: `big` has at least as many copies of every
    local state as `small`.
    """
    if alphabet is not None:
        unknown = set(big).union(small).difference(alphabet)
        if unknown:
            raise ValueError('states outside the alphabet: %s' % ', '.join(
                sorted(s.label() for s in unknown)))
    have = Counter(big)
    return all(have[state] >= count for state, count in Counter(small).items())


class Antichain(object):
    """Minimal elements under multiset inclusion, as count vectors."""

    def __init__(self, alphabet):
        self.position = {state: i for i, state in enumerate(sorted(alphabet))}
        self.members = []
        self.matrix = np.zeros((0, len(self.position)), dtype=np.int64)

    def vector(self, state: tuple) -> np.ndarray:
        vector = np.zeros(len(self.position), dtype=np.int64)
        for local in state:
            vector[self.position[local]] += 1
        return vector

    def covered(self, vector: np.ndarray) -> bool:
        if not self.members:
            return False
        return bool(np.any(np.all(self.matrix <= vector, axis=1)))

    def add(self, state: tuple, vector: np.ndarray) -> list:
        """Insert an element that is not covered; returns the evicted ones."""
        if self.members:
            keep = ~np.all(vector <= self.matrix, axis=1)
        else:
            keep = np.zeros(0, dtype=bool)
        evicted = [member for member, kept in zip(self.members, keep) if not kept]
        self.members = [member for member, kept in zip(self.members, keep) if kept]
        self.matrix = np.vstack([self.matrix[keep], vector[None, :]])
        self.members.append(state)
        return evicted

    def __len__(self):
        return len(self.members)


def minimize(states) -> list:
    """Minimal elements of a set of counter states, sorted."""
    states = sorted(set(states), key=lambda s: (len(s), s))
    alphabet = {local for state in states for local in state}
    chain = Antichain(alphabet)
    for state in states:
        vector = chain.vector(state)
        if not chain.covered(vector):
            chain.add(state, vector)
    return sorted(chain.members)


def pred_steps(program: BooleanDRProgram, target: tuple) -> dict:
    """
    One-step predecessors of the upward closure of `target`.

    Returns
    -------
    steps : dict
        Predecessor counter state -> (a, a', moves) where moves pairs
        each passive source with the element of `target` it produces.
    """
    need = Counter(target)
    producers = producer_index(program)
    steps = {}
    for a, a2 in sorted(producers):
        by_target = producers[a, a2]
        for use_active in ((False, True) if need[a2] else (False,)):
            rest = need.copy()
            if use_active:
                rest[a2] -= 1
            groups = []
            for produced, count in sorted((+rest).items()):
                sources = by_target.get(produced)
                if not sources:
                    break
                groups.append([tuple((p, produced) for p in combo) for combo in
                               itertools.combinations_with_replacement(sources, count)])
            else:
                for pick in itertools.product(*groups):
                    moves = tuple(pair for group in pick for pair in group)
                    predecessor = counter_state((a,) + tuple(p for p, _ in moves))
                    steps.setdefault(predecessor, (a, a2, moves))
    return steps


def pred_basis(program: BooleanDRProgram, target: tuple) -> list:
    """
    Minimal states with a successor covering `target`.

    Exact for monotone programs: v has a successor covering `target`
    iff v covers an element of the basis.
    """
    return minimize(pred_steps(program, target))


def initial_cover(program: BooleanDRProgram, element: tuple):
    """An initial counter state covering `element`, or None."""
    partners = {}
    for a, p in program.init:
        partners.setdefault(a, set()).add(p)
    need = Counter(element)
    best = None
    for a in sorted(partners):
        ps = partners[a]
        rest = need.copy()
        if rest[a]:
            rest[a] -= 1
        rest = +rest
        if not set(rest).issubset(ps):
            continue
        state = counter_state((a,) + tuple(rest.elements()))
        if len(state) < 2:
            state = counter_state(state + (min(ps),))
        if best is None or (len(state), state) < (len(best), best):
            best = state
    return best


def initial_intersect(program: BooleanDRProgram, basis) -> tuple:
    """First element of `basis` covered by some initial state, or None."""
    for element in sorted(basis, key=lambda s: (len(s), s)):
        if initial_cover(program, element) is not None:
            return element
    return None


def _completions(index: dict, a: LocalState, a2: LocalState) -> dict:
    return index[a][a2]


def _concrete_trace(program, parents: dict, element: tuple) -> list:
    """Replay the backward derivation forwards from an initial state.

    Threads beyond the derivation take the smallest completing move.
    """
    index = transition_index(program)
    state = initial_cover(program, element)
    trace = []
    current = element
    while current in parents:
        child, (a, a2, sources) = parents[current]
        rest = Counter(state)
        rest[a] -= 1
        for p, _ in sources:
            rest[p] -= 1
        completions = _completions(index, a, a2)
        moves = list(sources)
        moves += [(q, completions[q][0]) for q in sorted((+rest).elements())]
        following = counter_state((a2,) + tuple(target for _, target in moves))
        trace.append(TraceStep(state, (a, a2), tuple(moves)))
        state = following
        current = child
    trace.append(TraceStep(state, None, ()))
    return trace


def backward_reach(program: BooleanDRProgram, target: list, verbose: bool = False,
                   max_iterations: int = None) -> Verdict:
    """
    Backward coverability of a monotone Boolean dual-reference program.

    Parameters
    ----------
    program : BooleanDRProgram
        Must pass the sufficient monotonicity check.
    target : list of tuple
        Counter states whose upward closure is the bad set.
    verbose : bool
        Print the basis size per iteration.
    max_iterations : int
        Stop early, reporting an incomplete verdict.

    Returns
    -------
    verdict : Verdict
        Coverable with a concrete trace, or Uncoverable.

    Raises
    ------
    NonMonotoneError
        When some enabled move blocks a passive local state.
    """
    result = check_monotone_sufficient(program)
    if not result.monotone:
        raise NonMonotoneError(result.violation)
    alphabet = set(program.states).union(*[set(t) for t in target])
    chain = Antichain(alphabet)
    parents = {}
    queue = []
    for element in minimize(target):
        chain.add(element, chain.vector(element))
        heapq.heappush(queue, (len(element), element))
    stats = {'iterations': 0, 'pred_calls': 0, 'basis': [len(chain)]}
    dropped = set()
    while queue:
        _, element = heapq.heappop(queue)
        if element in dropped:
            continue
        if initial_cover(program, element) is not None:
            stats['final_basis'] = len(chain)
            return Verdict(COVERABLE, _concrete_trace(program, parents, element), stats)
        stats['iterations'] += 1
        stats['pred_calls'] += 1
        for predecessor, step in sorted(pred_steps(program, element).items()):
            vector = chain.vector(predecessor)
            if chain.covered(vector):
                continue
            dropped.update(chain.add(predecessor, vector))
            dropped.discard(predecessor)
            parents[predecessor] = (element, step)
            heapq.heappush(queue, (len(predecessor), predecessor))
        stats['basis'].append(len(chain))
        if verbose:
            print('- Backward iteration %s... Done -> basis of %s' % (
                stats['iterations'], len(chain)))
        if max_iterations is not None and stats['iterations'] >= max_iterations and queue:
            stats['final_basis'] = len(chain)
            return Verdict(UNCOVERABLE, [], stats, complete=False)
    stats['final_basis'] = len(chain)
    return Verdict(UNCOVERABLE, [], stats)


def replay_trace(program: BooleanDRProgram, trace: list) -> bool:
    """Whether every step of a trace is a transition of the instance."""
    if not trace or trace[-1].active is not None:
        return False
    for step, following in zip(trace, trace[1:]):
        if step.active is None or not step.moves:
            return False
        a, a2 = step.active
        if Counter(step.state) != Counter((a,) + tuple(p for p, _ in step.moves)):
            return False
        if any((a, p, a2, p2) not in program.trans for p, p2 in step.moves):
            return False
        if counter_state((a2,) + tuple(p2 for _, p2 in step.moves)) != following.state:
            return False
    return True


def _forward_trace(parents: dict, state: tuple) -> list:
    trace = [TraceStep(state, None, ())]
    while parents[state] is not None:
        previous, active, moves = parents[state]
        trace.append(TraceStep(previous, active, moves))
        state = previous
    return trace[::-1]


def forward_explore(program: BooleanDRProgram, n: int, target: list,
                    depth: int = None, verbose: bool = False) -> Verdict:
    """
    Breadth-first exploration of the n-thread instance.

    Needs no monotonicity. Without a depth bound the search runs to the
    fixpoint; with one, running out of depth gives an incomplete
    Uncoverable verdict.
    """
    index = transition_index(program)
    targets = minimize(target)

    def hit(state):
        return any(covers(state, t) for t in targets)

    frontier = sorted(initial_counter_states(program, n))
    parents = {state: None for state in frontier}
    for state in frontier:
        if hit(state):
            return Verdict(COVERABLE, _forward_trace(parents, state),
                           {'states': len(parents), 'depth': 0})
    level = 0
    while frontier and (depth is None or level < depth):
        following = []
        for state in frontier:
            for active, moves, successor in counter_successors(state, index):
                if successor in parents:
                    continue
                parents[successor] = (state, active, moves)
                if hit(successor):
                    return Verdict(COVERABLE, _forward_trace(parents, successor),
                                   {'states': len(parents), 'depth': level + 1})
                following.append(successor)
        frontier = sorted(following)
        level += 1
        if verbose:
            print('- Forward depth %s... Done -> %s states' % (level, len(parents)))
    return Verdict(UNCOVERABLE, [], {'states': len(parents), 'depth': level},
                   complete=not frontier)


def forward_reachable(program: BooleanDRProgram, n: int, depth: int) -> frozenset:
    """Counter states of the n-thread instance within `depth` steps."""
    return reachable_states(program, n, depth)


def expand_target(program: BooleanDRProgram, patterns: list) -> list:
    """
    Counter states matching target patterns.

    A pattern fixes a location, optionally the bits, and a count; all
    patterns of a query must hold together. Unset bits range over every
    valuation, so the result is the antichain of all combinations.
    """
    choices = []
    for pattern in patterns:
        matching = [s for s in program.states if s.pc == pattern.pc and
                    (pattern.bits is None or tuple(s.bits) == tuple(pattern.bits))]
        if not matching:
            raise ValueError('no local state matches location %s' % pattern.pc)
        choices.append(list(itertools.combinations_with_replacement(sorted(matching), pattern.count)))
    targets = {counter_state(sum(pick, ())) for pick in itertools.product(*choices)}
    return minimize(targets)
