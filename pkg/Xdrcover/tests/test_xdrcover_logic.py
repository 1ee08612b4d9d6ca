# ----------------------------------------------------------------------------
# Copyright (c) 2020, Franck Lejzerowicz.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import unittest
from os.path import join

from pysmt.shortcuts import And, ForAll, Exists, Equals, LT, Plus, Int, Not

from Xdrcover.frontend import parse_predicates
from Xdrcover.io import read_text, read_program
from Xdrcover.logic import (
    FormulaError, var_name, split_name, make_symbol, rename, prime,
    instantiate_async, active_transition, predicate_semantics,
    eval_formula, max_constant)
from Xdrcover.xdrcover import RESOURCES


class TestNames(unittest.TestCase):

    def test_var_name(self):
        self.assertEqual(var_name('l'), 'l')
        self.assertEqual(var_name('l', 2), 'l.2')
        self.assertEqual(var_name('l', 'P', True), "l.P'")

    def test_split_name(self):
        self.assertEqual(split_name("l.P'"), ('l', 'P', True))
        self.assertEqual(split_name('s'), ('s', None, False))
        self.assertEqual(split_name('?x.3'), ('x', 3, False))

    def test_bool_and_int_do_not_collide(self):
        x_int = make_symbol('x', 'int')
        x_bool = make_symbol('x', 'bool')
        self.assertNotEqual(x_int.symbol_name(), x_bool.symbol_name())
        self.assertTrue(x_bool.symbol_type().is_bool_type())


class TestRename(unittest.TestCase):

    def setUp(self):
        self.l = make_symbol('l', 'int')
        self.l_next = make_symbol('l', 'int', primed=True)
        self.l_passive = make_symbol('l', 'int', 'P')
        self.formula = Equals(self.l_next, Plus(self.l, self.l_passive))

    def test_rename_active(self):
        renamed = rename(self.formula, ['l'], None, 1)
        names = {s.symbol_name() for s in renamed.get_free_variables()}
        self.assertEqual(names, {"l.1'", 'l.1', 'l.P'})

    def test_rename_current_state_only(self):
        renamed = rename(self.formula, ['l'], None, 3, both_states=False)
        names = {s.symbol_name() for s in renamed.get_free_variables()}
        self.assertEqual(names, {"l'", 'l.3', 'l.P'})

    def test_prime(self):
        primed = prime(LT(self.l, self.l_passive))
        names = {s.symbol_name() for s in primed.get_free_variables()}
        self.assertEqual(names, {"l'", "l.P'"})
        with self.assertRaises(FormulaError):
            prime(self.formula)


class TestInstantiate(unittest.TestCase):

    def setUp(self):
        self.ticket = read_program(join(RESOURCES, 'ticket.gc'))
        self.swap = read_program(join(RESOURCES, 'swap.gc'))
        # thread 1 takes a ticket, thread 2 waits
        self.state = {'s': 1, 't': 1, 'pc.1': 0, 'l.1': 0, 'pc.2': 1, 'l.2': 0,
                      "s'": 1, "t'": 2, "pc.1'": 1, "l.1'": 1, "pc.2'": 1, "l.2'": 0}

    def test_async_frames_other_threads(self):
        transition, initial = instantiate_async(self.ticket, 2)
        self.assertTrue(eval_formula(transition, self.state))
        moved = dict(self.state)
        moved["l.2'"] = 5
        self.assertFalse(eval_formula(transition, moved))

    def test_async_initial(self):
        _, initial = instantiate_async(self.ticket, 2)
        state = {'s': 1, 't': 1, 'pc.1': 0, 'l.1': 0, 'pc.2': 0, 'l.2': 0}
        self.assertTrue(eval_formula(initial, state))
        state['pc.2'] = 1
        self.assertFalse(eval_formula(initial, state))

    def test_dual_conjoins_passive_threads(self):
        formula = active_transition(self.swap, 4, 1)
        self.assertTrue(formula.is_and())
        self.assertEqual(len(formula.args()), 3)

    def test_dual_needs_two_threads(self):
        with self.assertRaises(FormulaError):
            active_transition(self.swap, 1, 1)
        with self.assertRaises(FormulaError):
            instantiate_async(self.swap, 2)


class TestPredicateSemantics(unittest.TestCase):

    def setUp(self):
        self.ticket = read_program(join(RESOURCES, 'ticket.gc'))
        self.preds = parse_predicates(read_text(join(RESOURCES, 'ticket.preds')), self.ticket)

    def test_inter_thread_conjuncts(self):
        unique = self.preds[0]
        self.assertEqual(unique.kind, 'inter-thread')
        self.assertFalse(predicate_semantics(unique, 1, 2).is_and())
        formula = predicate_semantics(unique, 2, 4)
        self.assertTrue(formula.is_and())
        self.assertEqual(len(formula.args()), 3)

    def test_values(self):
        above = predicate_semantics(self.preds[1], 1, 3)
        state = {'t': 4, 'l.1': 1, 'l.2': 3, 'l.3': 2}
        self.assertTrue(eval_formula(above, state))
        state['l.3'] = 4
        self.assertFalse(eval_formula(above, state))
        served = predicate_semantics(self.preds[2], 2, 3)
        self.assertTrue(eval_formula(served, {'s': 3, 'l.2': 3}))


class TestEvaluate(unittest.TestCase):

    def setUp(self):
        self.x = make_symbol('x', 'int')
        self.y = make_symbol('y', 'int')
        self.b = make_symbol('b', 'bool')

    def test_ground(self):
        formula = And(LT(self.x, self.y), Not(self.b))
        self.assertTrue(eval_formula(formula, {'x': 1, 'y': 2, '?b': False}))
        self.assertFalse(eval_formula(formula, {'x': 2, 'y': 2, '?b': False}))

    def test_quantifiers(self):
        exists = Exists([self.y], Equals(Plus(self.x, self.y), Int(4)))
        self.assertTrue(eval_formula(exists, {'x': 1}, bound=5))
        self.assertFalse(eval_formula(exists, {'x': 7}, bound=5))
        forall = ForAll([self.y], LT(self.x, Plus(self.y, Int(1))))
        self.assertTrue(eval_formula(forall, {'x': 0}, {'y': (0, 3)}))
        self.assertFalse(eval_formula(forall, {'x': 1}, {'y': (0, 3)}))

    def test_missing_binding(self):
        with self.assertRaises(FormulaError):
            eval_formula(LT(self.x, self.y), {'x': 1})

    def test_max_constant(self):
        self.assertEqual(max_constant(LT(self.x, Int(-7))), 7)


if __name__ == '__main__':
    unittest.main()
