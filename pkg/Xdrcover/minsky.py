# ----------------------------------------------------------------------------
# Copyright (c) 2020, Franck Lejzerowicz.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

from collections import Counter
from typing import NamedTuple

from Xdrcover.drcore import LocalState, BooleanDRProgram

OPS = ('inc', 'dec', 'zero')
D0, D1, D2, HALT = 'd0', 'd1', 'd2', 'halt'
LOCATIONS = (D0, D1, D2, HALT)


class MachineError(ValueError):
    pass


class Edge(NamedTuple):
    source: int
    target: int
    op: str
    counter: int


class CounterMachine(NamedTuple):
    states: tuple
    initial: int
    halt: int
    edges: tuple


def make_machine(states, initial, halt, edges) -> CounterMachine:
    """Validated two-counter machine."""
    states = tuple(states)
    edges = tuple(Edge(*edge) for edge in edges)
    for state in (initial,) + ((halt,) if halt is not None else ()):
        if state not in states:
            raise MachineError('unknown state %s' % state)
    for edge in edges:
        if edge.op not in OPS:
            raise MachineError('unknown operation "%s"' % edge.op)
        if edge.counter not in (1, 2):
            raise MachineError('counter must be 1 or 2, not %s' % edge.counter)
        if edge.source not in states or edge.target not in states:
            raise MachineError('edge %s uses an unknown state' % (edge,))
    return CounterMachine(states, initial, halt, edges)


def _enabled(edge: Edge, counters: list) -> bool:
    value = counters[edge.counter - 1]
    if edge.op == 'dec':
        return value > 0
    if edge.op == 'zero':
        return value == 0
    return True


def simulate_minsky(machine: CounterMachine, steps: int) -> list:
    """
    Run the machine, firing the first enabled edge of each state.

    Returns
    -------
    trace : list of tuple
        (state, c1, c2) configurations; stops when blocked or halted.
    """
    state, counters = machine.initial, [0, 0]
    trace = [(state, 0, 0)]
    for _ in range(steps):
        if state == machine.halt:
            break
        edge = next((e for e in machine.edges
                     if e.source == state and _enabled(e, counters)), None)
        if edge is None:
            break
        if edge.op == 'inc':
            counters[edge.counter - 1] += 1
        elif edge.op == 'dec':
            counters[edge.counter - 1] -= 1
        state = edge.target
        trace.append((state, counters[0], counters[1]))
    return trace


def control_width(machine: CounterMachine) -> int:
    return max(1, (len(machine.states) - 1).bit_length())


def control_bits(machine: CounterMachine, state: int) -> tuple:
    code = machine.states.index(state)
    return tuple(bool(code >> k & 1) for k in range(control_width(machine)))


def encode_minsky(machine: CounterMachine) -> BooleanDRProgram:
    """
    Boolean dual-reference program simulating a two-counter machine.

    Each thread holds the control state in its bits and a location:
    d0 (idle), d1 or d2 (one unit of counter 1 or 2) or halt. Counter
    i is the number of threads at d_i. Every move rewrites the control
    bits of all threads; a zero test on counter i needs every thread,
    active included, to be away from d_i. Reaching the halt state lets
    an idle thread move to halt, the error location.
    """
    width = control_width(machine)
    states = tuple(LocalState(pc, tuple(bool(code >> k & 1) for k in range(width)))
                   for pc in LOCATIONS for code in range(2 ** width))
    trans = set()
    for edge in machine.edges:
        before, after = control_bits(machine, edge.source), control_bits(machine, edge.target)
        unit = D1 if edge.counter == 1 else D2
        for pc in LOCATIONS:
            passive, passive_next = LocalState(pc, before), LocalState(pc, after)
            if edge.op == 'inc':
                trans.add((LocalState(D0, before), passive, LocalState(unit, after), passive_next))
            elif edge.op == 'dec':
                trans.add((LocalState(unit, before), passive, LocalState(D0, after), passive_next))
            elif pc != unit:
                for active_pc in (D0, D1, D2):
                    if active_pc != unit:
                        trans.add((LocalState(active_pc, before), passive,
                                   LocalState(active_pc, after), passive_next))
    error = ()
    if machine.halt is not None:
        code = control_bits(machine, machine.halt)
        for pc in LOCATIONS:
            trans.add((LocalState(D0, code), LocalState(pc, code),
                       LocalState(HALT, code), LocalState(pc, code)))
        error = (HALT,)
    start = LocalState(D0, control_bits(machine, machine.initial))
    return BooleanDRProgram(
        LOCATIONS, tuple('ctl%s' % k for k in range(width)), states,
        frozenset(trans), frozenset({(start, start)}), error=error,
        provenance={'source': 'minsky', 'machine_states': len(machine.states)})


def counter_view(machine: CounterMachine, state: tuple) -> tuple:
    """(control state, c1, c2) of a counter state of the encoding."""
    counts = Counter(local.pc for local in state)
    bits = state[0].bits
    code = sum(1 << k for k, bit in enumerate(bits) if bit)
    return machine.states[code], counts[D1], counts[D2]


def shuttle_machine() -> CounterMachine:
    return make_machine(range(5), 2, None, [
        (2, 0, 'inc', 1), (0, 3, 'dec', 1), (3, 0, 'inc', 2), (0, 1, 'zero', 1),
        (1, 4, 'dec', 2), (4, 1, 'inc', 1), (1, 2, 'zero', 2)])


def countdown_machine() -> CounterMachine:
    return make_machine(range(6), 0, 5, [
        (0, 1, 'inc', 1), (1, 2, 'inc', 1), (2, 3, 'dec', 1),
        (3, 4, 'dec', 1), (4, 5, 'zero', 1)])


def transfer_machine() -> CounterMachine:
    return make_machine(range(6), 0, 5, [
        (0, 1, 'inc', 1), (1, 2, 'inc', 1), (2, 3, 'inc', 1),
        (3, 4, 'dec', 1), (4, 3, 'inc', 2), (3, 5, 'zero', 1)])


def blocked_machine() -> CounterMachine:
    return make_machine(range(2), 0, 1, [(0, 1, 'dec', 1)])


def ping_pong_machine() -> CounterMachine:
    return make_machine(range(2), 0, None, [(0, 1, 'inc', 2), (1, 0, 'dec', 2)])


MACHINES = {
    'shuttle': shuttle_machine,
    'countdown': countdown_machine,
    'transfer': transfer_machine,
    'blocked': blocked_machine,
    'ping-pong': ping_pong_machine,
}
