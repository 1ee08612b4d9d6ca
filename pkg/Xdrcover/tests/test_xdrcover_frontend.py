# ----------------------------------------------------------------------------
# Copyright (c) 2020, Franck Lejzerowicz.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import glob
import unittest
from os.path import join

from Xdrcover.frontend import (
    DslError, parse_program, parse_predicates, format_program, format_formula,
    classify_predicate, inter_thread_count, program_constants)
from Xdrcover.io import read_text
from Xdrcover.logic import eval_formula
from Xdrcover.xdrcover import RESOURCES


class TestParseProgram(unittest.TestCase):

    def setUp(self):
        self.ticket = parse_program(read_text(join(RESOURCES, 'ticket.gc')))

    def test_declarations(self):
        self.assertEqual(self.ticket.shared_vars, (('s', 'int'), ('t', 'int')))
        self.assertEqual(self.ticket.local_vars, (('pc', 'loc'), ('l', 'int')))
        self.assertEqual(self.ticket.locations, ('l1', 'l2', 'l3'))
        self.assertEqual(self.ticket.entry, 'l1')
        self.assertIsNone(self.ticket.error)
        self.assertEqual(len(self.ticket.commands), 4)
        self.assertFalse(self.ticket.dual)
        self.assertEqual(sorted(program_constants(self.ticket)), [0, 1, 1, 1, 1])

    def test_transition(self):
        state = {'pc': 0, 'l': 0, 's': 1, 't': 1,
                 "pc'": 1, "l'": 1, "s'": 1, "t'": 2}
        self.assertTrue(eval_formula(self.ticket.transition, state))
        state["t'"] = 1
        self.assertFalse(eval_formula(self.ticket.transition, state))

    def test_initial(self):
        state = {'pc': 0, 'l': 0, 's': 1, 't': 1}
        self.assertTrue(eval_formula(self.ticket.initial, state))
        state['pc'] = 2
        self.assertFalse(eval_formula(self.ticket.initial, state))

    def test_defaults(self):
        program = parse_program('local l : int\nstart -> start : l := l - 1\n')
        self.assertEqual(program.locations, ('start',))
        self.assertEqual(program.entry, 'start')

    def test_error_location_is_declared(self):
        program = parse_program('locations a\nerror bad\na -> bad\n')
        self.assertEqual(program.locations, ('a', 'bad'))
        self.assertEqual(program.error, 'bad')

    def test_dual(self):
        swap = parse_program(read_text(join(RESOURCES, 'swap.gc')))
        self.assertTrue(swap.dual)
        state = {'?l': True, '?l.P': False, "?l'": False, "?l.P'": True,
                 'pc': 0, 'pc.P': 0, "pc'": 0, "pc.P'": 0}
        self.assertTrue(eval_formula(swap.transition, state))
        state["?l.P'"] = False
        self.assertFalse(eval_formula(swap.transition, state))

    def test_dual_initial(self):
        toy = parse_program(read_text(join(RESOURCES, 'swap_toy.gc')))
        state = {'?x': True, '?x.P': False, 'pc': 0, 'pc.P': 0}
        self.assertTrue(eval_formula(toy.initial, state))
        state['pc.P'] = 1
        self.assertFalse(eval_formula(toy.initial, state))


class TestDslErrors(unittest.TestCase):

    def test_line_numbers(self):
        with self.assertRaises(DslError) as cm:
            parse_program('local l : int\nlocations a b\na -> c\n')
        self.assertEqual(cm.exception.line, 3)

    def test_undeclared_variable(self):
        with self.assertRaises(DslError) as cm:
            parse_program('local l : int\nstart -> start when m > 0\n')
        self.assertEqual(cm.exception.line, 2)

    def test_invalid_programs(self):
        sources = [
            'local pc : int\n',
            'local l : int\nlocal l : bool\n',
            'shared s : int\nstart -> start : s@P := 1\n',
            'local l : int\nstart -> start : l := true\n',
            'local l : int\nstart -> start : l, l := 1, 2\n',
            'local l : int\nstart -> start : l := 1, 2\n',
            'local l : int\nstart -> start when l < 1 < 2\n',
            'local l : int\nstart -> start when l && l\n',
            'local l : real\n',
            'local l : int\nstart -> start when l@Q > 0\n',
            'local l : int\nstart -> start $\n',
        ]
        for source in sources:
            with self.assertRaises(DslError, msg=source):
                parse_program(source)


class TestPredicates(unittest.TestCase):

    def setUp(self):
        self.ticket = parse_program(read_text(join(RESOURCES, 'ticket.gc')))

    def test_kinds(self):
        preds = parse_predicates('s == t\nl == 0\ns == l\nl != l@P', self.ticket)
        self.assertEqual([p.kind for p in preds],
                         ['shared', 'local', 'single-thread', 'inter-thread'])
        self.assertEqual([p.local_names for p in preds], [(), ('l',), ('l',), ('l',)])
        self.assertEqual(inter_thread_count(preds), 1)
        self.assertEqual(classify_predicate(preds[3].formula, self.ticket), 'inter-thread')
        self.assertEqual(classify_predicate(preds[0].formula, self.ticket), 'shared')
        self.assertEqual(format_formula(preds[2]), 's == l')

    def test_separators_and_comments(self):
        preds = parse_predicates('# header\nl == 0; s == l\n\n', self.ticket)
        self.assertEqual([p.id for p in preds], [1, 2])
        self.assertEqual([p.text for p in preds], ['l == 0', 's == l'])

    def test_max_lowering(self):
        above = parse_predicates('t > max(l, l@P)', self.ticket)[0]
        self.assertTrue(eval_formula(above.formula, {'t': 3, 'l': 1, 'l.P': 2}))
        self.assertFalse(eval_formula(above.formula, {'t': 2, 'l': 1, 'l.P': 2}))
        below = parse_predicates('min(l, l@P) >= s', self.ticket)[0]
        self.assertTrue(eval_formula(below.formula, {'s': 1, 'l': 1, 'l.P': 2}))
        self.assertFalse(eval_formula(below.formula, {'s': 2, 'l': 1, 'l.P': 2}))

    def test_canonical_text(self):
        text = '!(l == s) || l < s - (t - 1)'
        self.assertEqual(parse_predicates(text, self.ticket)[0].text, text)

    def test_invalid_predicates(self):
        for text in ["l' == 1", 's == l@P', 'x == 0', 'l + 1', 't@P > 0']:
            with self.assertRaises(DslError, msg=text):
                parse_predicates(text, self.ticket)


class TestFormatProgram(unittest.TestCase):

    def test_round_trip(self):
        for path in sorted(glob.glob(join(RESOURCES, '*.gc'))):
            program = parse_program(read_text(path))
            text = format_program(program)
            reparsed = parse_program(text)
            self.assertEqual(reparsed, program, path)
            self.assertEqual(format_program(reparsed), text, path)


if __name__ == '__main__':
    unittest.main()
