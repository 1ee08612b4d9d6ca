# ----------------------------------------------------------------------------
# Copyright (c) 2020, Franck Lejzerowicz.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import json
import shutil
import tempfile
import unittest
import pandas as pd
from os.path import isfile, join
from pandas.testing import assert_frame_equal

from Xdrcover.coverability import TargetPattern, forward_explore, expand_target
from Xdrcover.drcore import LocalState, BooleanDRProgram, monotone_closure
from Xdrcover.io import (
    InputError, read_text, read_program, read_predicates, read_template,
    write_template, template_to_dict, template_from_dict, read_query,
    read_machine, verdict_to_dict, counter_dict, get_summary_path, write_summary)
from Xdrcover.minsky import countdown_machine, shuttle_machine, encode_minsky
from Xdrcover.xdrcover import RESOURCES


class TestInputs(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def test_missing_file(self):
        with self.assertRaises(InputError):
            read_text(join(self.tmp, 'nope.gc'))

    def test_empty_predicates(self):
        program = read_program(join(RESOURCES, 'ticket.gc'))
        path = join(self.tmp, 'empty.preds')
        with open(path, 'w') as o:
            o.write('# nothing here\n')
        with self.assertRaises(InputError):
            read_predicates(path, program)

    def test_query(self):
        self.assertEqual(read_query(join(RESOURCES, 'mutex.json')),
                         [TargetPattern('l3', None, 2)])
        path = join(self.tmp, 'query.json')
        with open(path, 'w') as o:
            json.dump({'target': [{'pc': 'l2', 'bits': [True, False]}]}, o)
        self.assertEqual(read_query(path), [TargetPattern('l2', (True, False), 1)])
        with open(path, 'w') as o:
            json.dump({'target': [{'pc': 'l2', 'count': 0}]}, o)
        with self.assertRaises(InputError):
            read_query(path)
        with open(path, 'w') as o:
            o.write('{"target": ')
        with self.assertRaises(InputError):
            read_query(path)

    def test_machines(self):
        self.assertEqual(read_machine('countdown'), countdown_machine())
        self.assertEqual(read_machine(join(RESOURCES, 'countdown.json')), countdown_machine())
        self.assertEqual(read_machine(join(RESOURCES, 'shuttle.json')), shuttle_machine())
        path = join(self.tmp, 'machine.json')
        with open(path, 'w') as o:
            json.dump({'states': [0], 'initial': 0}, o)
        with self.assertRaises(InputError):
            read_machine(path)


class TestTemplates(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.template = monotone_closure(encode_minsky(countdown_machine()))

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def test_round_trip(self):
        path = join(self.tmp, 'out', 'countdown.json')
        write_template(path, self.template, {'note': 'closure'})
        obs = read_template(path)
        self.assertEqual(obs, self.template)
        self.assertEqual(obs.provenance['report'], {'note': 'closure'})
        self.assertTrue(obs.provenance['closure'])

    def test_dict(self):
        data = template_to_dict(self.template)
        self.assertEqual(data['format'], 'xdrcover-template')
        self.assertEqual(data['version'], 1)
        self.assertEqual(len(data['trans']), len(self.template.trans))
        self.assertEqual(template_from_dict(data), self.template)
        with self.assertRaises(InputError):
            template_from_dict(dict(data, format='other'))
        with self.assertRaises(InputError):
            template_from_dict(dict(data, trans=[[0, 1, 2, 999]]))


class TestOutputs(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def test_summary(self):
        out = join(self.tmp, 'verdict.json')
        summary_path = get_summary_path(out)
        self.assertEqual(summary_path, join(self.tmp, 'verdict_summary.tsv'))
        write_summary(summary_path, [['Backward iterations', 3], ['Final basis size', 2]])
        self.assertTrue(isfile(summary_path))
        obs = pd.read_table(summary_path)
        exp = pd.DataFrame({'steps': ['Backward iterations', 'Final basis size'],
                            'count': [3, 2]})
        assert_frame_equal(obs, exp)

    def test_verdict(self):
        a, b = LocalState('l1', ()), LocalState('l2', ())
        program = BooleanDRProgram(('l1', 'l2'), (), (a, b),
                                   frozenset({(a, x, b, x) for x in (a, b)}),
                                   frozenset({(a, a)}))
        verdict = forward_explore(program, 2, expand_target(program, [TargetPattern('l2')]))
        data = verdict_to_dict(verdict)
        self.assertEqual(data['verdict'], 'coverable')
        self.assertEqual(data['trace'][0], {'state': {'l1:': 2}, 'active': ['l1:', 'l2:'],
                                            'moves': [['l1:', 'l1:']]})
        self.assertEqual(data['trace'][-1], {'state': {'l1:': 1, 'l2:': 1}})
        self.assertEqual(counter_dict((a, b, b)), {'l1:': 1, 'l2:': 2})


if __name__ == '__main__':
    unittest.main()
