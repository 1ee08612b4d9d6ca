# ----------------------------------------------------------------------------
# Copyright (c) 2020, Franck Lejzerowicz.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import os
import json
import pandas as pd
from os.path import dirname, isdir, isfile, splitext

from Xdrcover.frontend import parse_program, parse_predicates
from Xdrcover.drcore import LocalState, BooleanDRProgram
from Xdrcover.coverability import TargetPattern
from Xdrcover.minsky import make_machine, MACHINES

TEMPLATE_FORMAT = 'xdrcover-template'


class InputError(ValueError):
    """Unreadable or inconsistent input file."""


def read_text(path: str) -> str:
    if not isfile(path):
        raise InputError('no such file: %s' % path)
    with open(path) as f:
        return f.read()


def read_program(m_program_file: str):
    """
    Read and compile a program file.

    Parameters
    ----------
    m_program_file : str
        Path to the program source.

    Returns
    -------
    program : AsyncProgram
    """
    print('- Load program... ', end='')
    program = parse_program(read_text(m_program_file))
    print('Done -> %s commands over %s locations' % (
        len(program.commands), len(program.locations)))
    return program


def read_predicates(m_predicates_file: str, program) -> list:
    print('- Load predicates... ', end='')
    predicates = parse_predicates(read_text(m_predicates_file), program)
    if not predicates:
        raise InputError('no predicate in %s' % m_predicates_file)
    print('Done -> %s predicates' % len(predicates))
    return predicates


def _state_dict(state: LocalState) -> dict:
    return {'pc': state.pc, 'bits': list(state.bits)}


def template_to_dict(template: BooleanDRProgram, report: dict = None) -> dict:
    """
    JSON-ready form of a template; quadruples and pairs refer to
    local states by their position in `states`.
    """
    position = {state: i for i, state in enumerate(template.states)}
    data = {
        'format': TEMPLATE_FORMAT,
        'version': 1,
        'locations': list(template.locations),
        'bits': list(template.bit_names),
        'sink': template.sink,
        'error': list(template.error),
        'states': [_state_dict(state) for state in template.states],
        'trans': sorted([position[s] for s in quadruple] for quadruple in template.trans),
        'init': sorted([position[s] for s in pair] for pair in template.init),
        'provenance': dict(template.provenance),
    }
    if report is not None:
        data['provenance']['report'] = report
    return data


def template_from_dict(data: dict) -> BooleanDRProgram:
    if data.get('format') != TEMPLATE_FORMAT:
        raise InputError('not a template file (format "%s")' % data.get('format'))
    try:
        states = tuple(LocalState(s['pc'], tuple(s['bits'])) for s in data['states'])
        trans = frozenset(tuple(states[i] for i in row) for row in data['trans'])
        init = frozenset(tuple(states[i] for i in row) for row in data['init'])
        return BooleanDRProgram(
            tuple(data['locations']), tuple(data['bits']), states, trans, init,
            sink=data['sink'], error=tuple(data['error']),
            provenance=data.get('provenance', {}))
    except (KeyError, IndexError, TypeError) as exc:
        raise InputError('malformed template: %s' % exc)


def _make_dirs(path: str):
    if dirname(path) and not isdir(dirname(path)):
        os.makedirs(dirname(path))


def write_json(o_file: str, data: dict) -> None:
    _make_dirs(o_file)
    with open(o_file, 'w') as o:
        json.dump(data, o, indent=2, sort_keys=True)
        o.write('\n')
    print(o_file)


def read_json(m_file: str) -> dict:
    try:
        return json.loads(read_text(m_file))
    except json.JSONDecodeError as exc:
        raise InputError('%s is not valid JSON: %s' % (m_file, exc))


def write_template(o_template_file: str, template: BooleanDRProgram,
                   report: dict = None) -> None:
    write_json(o_template_file, template_to_dict(template, report))


def read_template(m_template_file: str) -> BooleanDRProgram:
    print('- Load template... ', end='')
    template = template_from_dict(read_json(m_template_file))
    print('Done -> %s local states, %s transitions' % (
        len(template.states), len(template.trans)))
    return template


def read_query(m_query_file: str) -> list:
    """
    Read target patterns.

    The file holds {"target": [{"pc": ..., "bits": [...], "count": k}]};
    "bits" is optional and "count" defaults to 1.
    """
    data = read_json(m_query_file)
    try:
        patterns = [TargetPattern(item['pc'],
                                  tuple(item['bits']) if item.get('bits') is not None else None,
                                  int(item.get('count', 1)))
                    for item in data['target']]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError('malformed query: %s' % exc)
    if not patterns or any(p.count < 1 for p in patterns):
        raise InputError('a query needs patterns with positive counts')
    return patterns


def read_machine(m_machine_file: str):
    """
    Read a two-counter machine, or one of the built-in ones by name.

    Files hold {"states": [...], "initial": q, "halt": q or null,
    "edges": [[source, target, "inc"|"dec"|"zero", 1|2], ...]}.
    """
    if m_machine_file in MACHINES:
        return MACHINES[m_machine_file]()
    data = read_json(m_machine_file)
    try:
        return make_machine(data['states'], data['initial'], data.get('halt'),
                            [tuple(edge) for edge in data['edges']])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError('malformed machine: %s' % exc)


def counter_dict(state: tuple) -> dict:
    counts = {}
    for local in state:
        counts[local.label()] = counts.get(local.label(), 0) + 1
    return counts


def verdict_to_dict(verdict) -> dict:
    trace = []
    for step in verdict.trace:
        item = {'state': counter_dict(step.state)}
        if step.active is not None:
            item['active'] = [step.active[0].label(), step.active[1].label()]
            item['moves'] = [[p.label(), p2.label()] for p, p2 in step.moves]
        trace.append(item)
    return {'verdict': verdict.status, 'complete': verdict.complete,
            'description': verdict.describe(), 'stats': verdict.stats,
            'trace': trace}


def get_summary_path(o_file: str) -> str:
    return '%s_summary.tsv' % splitext(o_file)[0]


def write_table(o_table_file: str, table: pd.DataFrame) -> None:
    _make_dirs(o_table_file)
    table.to_csv(o_table_file, index=False, sep='\t')
    print(o_table_file)


def write_summary(
        o_summary_file: str,
        summary: list) -> None:
    """
    Write a two-columns file.

    Parameters
    ----------
    o_summary_file : str
        Path to summary file.
    summary : list
        List of two-items lists
        [[str, int], [str, int], ...]
    """
    write_table(o_summary_file, pd.DataFrame(summary, columns=['steps', 'count']))
