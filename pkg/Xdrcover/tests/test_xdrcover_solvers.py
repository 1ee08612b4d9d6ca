# ----------------------------------------------------------------------------
# Copyright (c) 2020, Franck Lejzerowicz.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import itertools
import unittest
import numpy as np

from pysmt.shortcuts import And, Or, Not, Equals, LT, LE, Plus, Minus, Int, ForAll, get_env
from pysmt.logics import QF_LIA

from Xdrcover.logic import make_symbol, eval_formula
from Xdrcover.solvers import (
    SAT, UNSAT, UNKNOWN, SolverBackend, check_sat, term_values, split_cases,
    eliminate_equalities, parse_sexprs, smtlib_script, available_backend)


class TestSolverBackend(unittest.TestCase):

    def test_validation(self):
        with self.assertRaises(ValueError):
            SolverBackend('cvc')
        with self.assertRaises(ValueError):
            SolverBackend('enum', bound=-1)
        with self.assertRaises(ValueError):
            SolverBackend('enum', bound=0)
        with self.assertRaises(ValueError):
            SolverBackend('smt', timeout=0)

    def test_with_bound(self):
        self.assertEqual(SolverBackend('enum').with_bound(4).bound, 4)
        self.assertEqual(SolverBackend('enum', bound=2).with_bound(4).bound, 2)


class TestEnumeration(unittest.TestCase):

    def setUp(self):
        self.backend = SolverBackend('enum', bound=3)
        self.x = make_symbol('x', 'int')
        self.y = make_symbol('y', 'int')
        self.b = make_symbol('b', 'bool')

    def test_sat_model(self):
        formula = And(Equals(Plus(self.x, self.y), Int(3)), LT(self.x, self.y), self.b)
        result = check_sat(formula, self.backend)
        self.assertEqual(result.status, SAT)
        self.assertTrue(eval_formula(formula, result.model))

    def test_unsat_in_bounds(self):
        self.assertEqual(check_sat(LT(self.x, Int(0)), self.backend).status, UNSAT)
        self.assertEqual(check_sat(LT(Int(3), self.x), self.backend).status, UNSAT)

    def test_domains(self):
        formula = LT(Int(1), self.x)
        self.assertEqual(check_sat(formula, self.backend, {'x': (0, 1)}).status, UNSAT)
        self.assertEqual(check_sat(formula, self.backend, {'x': (0, 9)}).status, SAT)

    def test_quantified(self):
        formula = ForAll([self.y], LE(self.x, self.y))
        result = check_sat(formula, self.backend)
        self.assertEqual(result.status, SAT)
        self.assertEqual(result.model['x'], 0)

    def test_term_values(self):
        formula = Or(LT(self.x, Int(2)), Equals(self.x, Int(3)))
        values = term_values(formula, [self.x, self.b], self.backend)
        exp = {(v, b) for v in (0, 1, 3) for b in (False, True)}
        self.assertEqual(set(values.values), exp)
        self.assertEqual(values.unknown, 0)

    def test_term_values_through_definition(self):
        # y is defined by x, so its range limits x
        formula = Equals(self.y, Minus(self.x, Int(1)))
        values = term_values(formula, [self.x, self.y], self.backend)
        self.assertEqual(set(values.values), {(1, 0), (2, 1), (3, 2)})


class TestPreprocessing(unittest.TestCase):

    def setUp(self):
        self.x = make_symbol('x', 'int')
        self.y = make_symbol('y', 'int')

    def test_split_cases(self):
        formula = And(Or(LT(self.x, Int(1)), LT(self.y, Int(1))),
                      Or(Equals(self.x, Int(2)), Equals(self.y, Int(2))))
        self.assertEqual(len(split_cases(formula)), 4)
        self.assertEqual(len(split_cases(formula, limit=1)), 1)

    def test_eliminate_equalities(self):
        formula = And(Equals(self.y, Plus(self.x, Int(1))), LT(self.x, Int(2)))
        body, definitions = eliminate_equalities(formula, bound=5)
        self.assertEqual(set(definitions), {self.y})
        self.assertEqual(body.get_free_variables(), {self.x})


class TestSmtlib(unittest.TestCase):

    def test_script(self):
        x = make_symbol('x', 'int')
        b = make_symbol('b', 'bool')
        script = smtlib_script(And(LT(x, Int(2)), b))
        self.assertIn('(set-logic QF_LIA)', script)
        self.assertIn('(declare-fun |x| () Int)', script)
        self.assertIn('(declare-fun |?b| () Bool)', script)
        self.assertIn('(get-value (|?b| |x|))', script)

    def test_parse_sexprs(self):
        parsed = parse_sexprs('sat\n((|x| 3) (|?b| true) (y (- 2)))')
        exp = ['sat', [['|x|', '3'], ['|?b|', 'true'], ['y', ['-', '2']]]]
        self.assertEqual(parsed, exp)


class TestBackendAgreement(unittest.TestCase):
    """Enumeration and SMT agree on random formulas over bounded domains."""

    def setUp(self):
        self.backend = available_backend()
        if self.backend is None:
            self.skipTest('no SMT solver available')
        self.enum = SolverBackend('enum', bound=5)
        self.domains = {'x': (0, 5), 'y': (0, 5)}
        self.x = make_symbol('x', 'int')
        self.y = make_symbol('y', 'int')
        self.b = make_symbol('b', 'bool')
        self.rng = np.random.default_rng(12)

    def random_atom(self):
        c = Int(int(self.rng.integers(-2, 6)))
        choice = self.rng.integers(4)
        if choice == 0:
            return LE(Plus(self.x, self.y), c)
        if choice == 1:
            return Equals(Minus(self.x, self.y), c)
        if choice == 2:
            return LT(self.x, c)
        return self.b

    def random_formula(self, depth):
        if not depth:
            return self.random_atom()
        choice = self.rng.integers(3)
        if choice == 0:
            return Not(self.random_formula(depth - 1))
        left = self.random_formula(depth - 1)
        right = self.random_formula(depth - 1)
        return And(left, right) if choice == 1 else Or(left, right)

    def test_random_formulas(self):
        for _ in range(500):
            formula = self.random_formula(3)
            exp = check_sat(formula, self.enum, self.domains).status
            obs = check_sat(formula, self.backend, self.domains)
            self.assertEqual(obs.status, exp, formula)
            if obs.status == SAT:
                model = {'x': 0, 'y': 0, '?b': False}
                model.update(obs.model)
                self.assertTrue(eval_formula(formula, model))


class TestTimeout(unittest.TestCase):
    """In-process queries that run out of time are undecided."""

    def setUp(self):
        if 'z3' not in get_env().factory.all_solvers(logic=QF_LIA):
            self.skipTest('z3 is not available through pysmt')
        self.backend = SolverBackend('pysmt', timeout=1)
        # twenty distinct values in nineteen slots
        self.xs = [make_symbol('x%s' % i, 'int') for i in range(20)]
        self.domains = {x.symbol_name(): (0, 18) for x in self.xs}
        self.formula = And([Not(Equals(x, y)) for x, y in itertools.combinations(self.xs, 2)])

    def test_check_sat(self):
        result = check_sat(self.formula, self.backend, self.domains)
        self.assertEqual(result.status, UNKNOWN)

    def test_term_values(self):
        values = term_values(self.formula, [self.xs[0]], self.backend, self.domains)
        self.assertGreater(values.unknown, 0)


if __name__ == '__main__':
    unittest.main()
