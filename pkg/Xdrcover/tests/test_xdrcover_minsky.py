# ----------------------------------------------------------------------------
# Copyright (c) 2020, Franck Lejzerowicz.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import itertools
import unittest

from Xdrcover.coverability import (
    TargetPattern, NonMonotoneError, expand_target, forward_explore,
    forward_reachable, backward_reach)
from Xdrcover.drcore import (
    LocalState, SINK, transition_index, counter_successors, monotone_closure,
    check_monotone_sufficient)
from Xdrcover.minsky import (
    D0, D1, D2, HALT, MACHINES, MachineError, make_machine, simulate_minsky,
    control_width, control_bits, encode_minsky, counter_view,
    shuttle_machine, countdown_machine, transfer_machine, blocked_machine)


class TestSimulation(unittest.TestCase):

    def test_countdown(self):
        exp = [(0, 0, 0), (1, 1, 0), (2, 2, 0), (3, 1, 0), (4, 0, 0), (5, 0, 0)]
        self.assertEqual(simulate_minsky(countdown_machine(), 20), exp)

    def test_transfer(self):
        trace = simulate_minsky(transfer_machine(), 20)
        self.assertEqual(trace[-1], (5, 0, 3))
        self.assertEqual(len(trace), 11)

    def test_blocked(self):
        self.assertEqual(simulate_minsky(blocked_machine(), 20), [(0, 0, 0)])

    def test_shuttle(self):
        trace = simulate_minsky(shuttle_machine(), 8)
        exp = [(2, 0, 0), (0, 1, 0), (3, 0, 0), (0, 0, 1), (1, 0, 1),
               (4, 0, 0), (1, 1, 0), (2, 1, 0), (0, 2, 0)]
        self.assertEqual(trace, exp)

    def test_invalid(self):
        with self.assertRaises(MachineError):
            make_machine(range(2), 0, None, [(0, 1, 'jump', 1)])
        with self.assertRaises(MachineError):
            make_machine(range(2), 0, None, [(0, 1, 'inc', 3)])
        with self.assertRaises(MachineError):
            make_machine(range(2), 0, 4, [])
        with self.assertRaises(MachineError):
            make_machine(range(2), 0, None, [(0, 7, 'inc', 1)])


class TestEncoding(unittest.TestCase):

    def setUp(self):
        self.machine = shuttle_machine()
        self.program = encode_minsky(self.machine)

    def test_shape(self):
        self.assertEqual(control_width(self.machine), 3)
        self.assertEqual(control_bits(self.machine, 2), (False, True, False))
        self.assertEqual(len(self.program.states), 4 * 8)
        self.assertEqual(self.program.error, ())
        start = LocalState(D0, control_bits(self.machine, 2))
        self.assertEqual(self.program.init, {(start, start)})

    def test_increment(self):
        before, after = control_bits(self.machine, 2), control_bits(self.machine, 0)
        for pc in (D0, D1, D2, HALT):
            quadruple = (LocalState(D0, before), LocalState(pc, before),
                         LocalState(D1, after), LocalState(pc, after))
            self.assertIn(quadruple, self.program.trans)

    def test_zero_test_blocked(self):
        zero, one = control_bits(self.machine, 0), control_bits(self.machine, 1)
        index = transition_index(self.program)
        for pcs in itertools.combinations_with_replacement((D0, D1, D2, HALT), 3):
            if D1 not in pcs:
                continue
            state = tuple(LocalState(pc, zero) for pc in pcs)
            for _, _, successor in counter_successors(state, index):
                self.assertNotIn(one, {local.bits for local in successor})

    def test_closure_skips_zero_test(self):
        self.assertFalse(check_monotone_sufficient(self.program).monotone)
        closure = monotone_closure(self.program)
        zero, one = control_bits(self.machine, 0), control_bits(self.machine, 1)
        state = (LocalState(D0, zero), LocalState(D0, zero), LocalState(D1, zero))
        index = transition_index(closure)
        successors = [succ for _, _, succ in counter_successors(state, index)]
        self.assertTrue(any(LocalState(D0, one) in succ and
                            any(local.pc == SINK for local in succ)
                            for succ in successors))

    def test_counter_view(self):
        state = (LocalState(D0, (False, True, False)), LocalState(D1, (False, True, False)))
        self.assertEqual(counter_view(self.machine, state), (2, 1, 0))


class TestFidelity(unittest.TestCase):
    """Counter states of the encoding project onto the machine run."""

    def test_machines(self):
        for name, build in sorted(MACHINES.items()):
            machine = build()
            trace = simulate_minsky(machine, 20)
            n = max(max(c1 + c2 for _, c1, c2 in trace), 1) + 1
            reachable = forward_reachable(encode_minsky(machine), n, 20)
            obs = {counter_view(machine, state) for state in reachable}
            self.assertEqual(obs, set(trace), name)

    def test_halting(self):
        program = encode_minsky(countdown_machine())
        targets = expand_target(program, [TargetPattern(HALT)])
        self.assertTrue(forward_explore(program, 3, targets).coverable)
        with self.assertRaises(NonMonotoneError):
            backward_reach(program, targets)
        blocked = encode_minsky(blocked_machine())
        verdict = forward_explore(blocked, 2, expand_target(blocked, [TargetPattern(HALT)]))
        self.assertFalse(verdict.coverable)
        self.assertTrue(verdict.complete)


if __name__ == '__main__':
    unittest.main()
