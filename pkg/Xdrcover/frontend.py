# ----------------------------------------------------------------------------
# Copyright (c) 2020, Franck Lejzerowicz.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import re
from dataclasses import dataclass, field
from typing import NamedTuple

from pysmt.shortcuts import (
    And, Or, Not, Implies, Iff, EqualsOrIff, Equals, Ite,
    LT, LE, GT, GE, Plus, Minus, Times, Int, Bool)
from pysmt.exceptions import PysmtException

from Xdrcover.logic import PASSIVE, make_symbol, split_name

SORTS = ('int', 'bool')
KEYWORDS = {'shared', 'local', 'locations', 'entry', 'error', 'init',
            'when', 'true', 'false', 'max', 'min'}
DEFAULT_LOCATION = 'start'

SHARED, LOCAL, SINGLE, INTER = 'shared', 'local', 'single-thread', 'inter-thread'

COMPARISONS = ('==', '!=', '<', '<=', '>', '>=')
PRECEDENCE = {'<=>': 1, '=>': 2, '||': 3, '&&': 4,
              '==': 6, '!=': 6, '<': 6, '<=': 6, '>': 6, '>=': 6,
              '+': 7, '-': 7, '*': 8}
UNARY = 9
FLIP = {'<': '>', '<=': '>=', '>': '<', '>=': '<='}

TOKEN_RE = re.compile(r"""
    (?P<space>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=>|=>|:=|->|==|!=|<=|>=|&&|\|\||[<>+\-*!(),:;@'])
""", re.VERBOSE)


class DslError(ValueError):
    """Syntax or semantic error in a program or predicate file."""

    def __init__(self, message: str, line: int = None, column: int = None):
        self.line = line
        self.column = column
        if line is not None:
            message = 'line %s, column %s: %s' % (line, column, message)
        super(DslError, self).__init__(message)


class Token(NamedTuple):
    kind: str
    text: str
    line: int
    column: int


@dataclass(frozen=True)
class Command:
    source: str
    target: str
    guard: tuple = None
    lhs: tuple = ()
    rhs: tuple = ()
    line: int = field(default=None, compare=False)


@dataclass(frozen=True)
class AsyncProgram:
    """A parsed program.

    `local_vars` starts with the implicit ('pc', 'loc'); `transition`
    and `initial` are the compiled template formulas over V and V',
    plus the passive copies when the program is dual-reference.
    """
    shared_vars: tuple
    local_vars: tuple
    locations: tuple
    entry: str
    error: str
    init: tuple
    commands: tuple
    transition: object = field(compare=False, repr=False)
    initial: object = field(compare=False, repr=False)
    dual: bool = False

    @property
    def shared_names(self) -> tuple:
        return tuple(name for name, _ in self.shared_vars)

    @property
    def local_names(self) -> tuple:
        return tuple(name for name, _ in self.local_vars)

    @property
    def user_locals(self) -> tuple:
        return tuple(var for var in self.local_vars if var[0] != 'pc')

    @property
    def sorts(self) -> dict:
        return dict(self.shared_vars + self.local_vars)

    def location_index(self, label: str) -> int:
        return self.locations.index(label)


@dataclass(frozen=True)
class Predicate:
    id: int
    text: str
    kind: str
    local_names: tuple
    formula: object = field(compare=False, repr=False)
    ast: tuple = field(compare=False, repr=False, default=None)


def tokenize(text: str, line: int = 1):
    column_start = 0
    position = 0
    while position < len(text):
        match = TOKEN_RE.match(text, position)
        if match is None:
            raise DslError('unexpected character %r' % text[position],
                           line, position - column_start + 1)
        kind = match.lastgroup
        column = position - column_start + 1
        position = match.end()
        if kind == 'newline':
            line += 1
            column_start = position
        elif kind in ('num', 'name', 'op'):
            yield Token(kind, match.group(), line, column)
    yield Token('eof', '', line, position - column_start + 1)


class _Parser(object):

    def __init__(self, text: str, line: int = 1):
        self.tokens = list(tokenize(text, line))
        self.position = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.position + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        token = self.peek()
        self.position += 1
        return token

    def at_end(self) -> bool:
        return self.peek().kind == 'eof'

    def error(self, message: str, token: Token = None) -> DslError:
        token = token or self.peek()
        return DslError(message, token.line, token.column)

    def accept(self, text: str) -> bool:
        token = self.peek()
        if token.kind in ('op', 'name') and token.text == text:
            self.position += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        token = self.peek()
        if not self.accept(text):
            raise self.error('expected "%s", found "%s"' % (text, token.text or 'end of input'))
        return token

    def expect_name(self) -> str:
        token = self.peek()
        if token.kind != 'name' or token.text in KEYWORDS:
            raise self.error('expected a name, found "%s"' % (token.text or 'end of input'))
        self.position += 1
        return token.text

    def expression(self, min_precedence: int = 1) -> tuple:
        left = self._unary()
        while True:
            token = self.peek()
            precedence = PRECEDENCE.get(token.text) if token.kind == 'op' else None
            if precedence is None or precedence < min_precedence:
                return left
            self.next()
            if token.text == '=>':
                right = self.expression(precedence)
            else:
                right = self.expression(precedence + 1)
            if token.text in COMPARISONS and self.peek().text in COMPARISONS:
                raise self.error('comparisons cannot be chained')
            left = ('bin', token.text, left, right)

    def _unary(self) -> tuple:
        if self.accept('!'):
            return ('not', self._unary())
        if self.accept('-'):
            return ('neg', self._unary())
        return self._primary()

    def _primary(self) -> tuple:
        token = self.next()
        if token.kind == 'num':
            return ('num', int(token.text))
        if token.kind == 'op' and token.text == '(':
            inner = self.expression()
            self.expect(')')
            return inner
        if token.kind == 'name':
            if token.text in ('true', 'false'):
                return ('bool', token.text == 'true')
            if token.text in ('max', 'min'):
                self.expect('(')
                first = self.expression()
                self.expect(',')
                second = self.expression()
                self.expect(')')
                return ('call', token.text, (first, second))
            if token.text in KEYWORDS:
                raise self.error('unexpected keyword "%s"' % token.text, token)
            passive = False
            if self.accept('@'):
                suffix = self.peek()
                if suffix.text != PASSIVE:
                    raise self.error('only the passive suffix @%s is allowed' % PASSIVE)
                self.next()
                passive = True
            if self.peek().text == "'":
                raise self.error('primed variables are not allowed')
            return ('name', token.text, passive)
        raise self.error('unexpected "%s"' % (token.text or 'end of input'), token)

    def lvalue(self) -> tuple:
        name = self.expect_name()
        passive = False
        if self.accept('@'):
            if self.peek().text != PASSIVE:
                raise self.error('only the passive suffix @%s is allowed' % PASSIVE)
            self.next()
            passive = True
        return name, passive

    def declaration(self) -> tuple:
        name = self.expect_name()
        self.expect(':')
        token = self.peek()
        if token.text not in SORTS:
            raise self.error('unknown sort "%s"' % token.text)
        self.next()
        return name, token.text

    def command(self) -> Command:
        line = self.peek().line
        source = self.expect_name()
        self.expect('->')
        target = self.expect_name()
        guard = None
        lhs, rhs = [], []
        if self.accept('when'):
            guard = self.expression()
        if self.accept(':'):
            lhs.append(self.lvalue())
            while self.accept(','):
                lhs.append(self.lvalue())
            self.expect(':=')
            rhs.append(self.expression())
            while self.accept(','):
                rhs.append(self.expression())
            if len(lhs) != len(rhs):
                raise DslError('%s targets but %s values' % (len(lhs), len(rhs)), line, 1)
        return Command(source, target, guard, tuple(lhs), tuple(rhs), line)


def parse_program(text: str) -> AsyncProgram:
    """
    Parse and compile a program.

    Parameters
    ----------
    text : str
        Program source.

    Returns
    -------
    program : AsyncProgram

    Raises
    ------
    DslError
        With the line and column of the offending token.
    """
    parser = _Parser(text)
    shared, local, locations, inits, commands = [], [], [], [], []
    entry = error = None
    while not parser.at_end():
        token = parser.peek()
        if parser.accept('shared'):
            shared.append(parser.declaration())
        elif parser.accept('local'):
            local.append(parser.declaration())
        elif parser.accept('locations'):
            while parser.peek().kind == 'name' and parser.peek().text not in KEYWORDS \
                    and parser.peek(1).text != '->':
                locations.append(parser.next().text)
        elif parser.accept('entry'):
            entry = parser.expect_name()
        elif parser.accept('error'):
            error = parser.expect_name()
        elif parser.accept('init'):
            inits.append(parser.expression())
        elif token.kind == 'name' and parser.peek(1).text == '->':
            commands.append(parser.command())
        else:
            raise parser.error('unexpected "%s"' % token.text)
    return build_program(shared, local, locations, entry, error, inits, commands)


class _Scope(object):

    def __init__(self, sorts: dict, shared: set, locations: tuple, line: int = None):
        self.sorts = sorts
        self.shared = shared
        self.locations = {label: i for i, label in enumerate(locations)}
        self.line = line

    def error(self, message: str) -> DslError:
        return DslError(message, self.line, 1) if self.line else DslError(message)


def _comparison(op: str, left, right):
    if op == '==':
        return EqualsOrIff(left, right)
    if op == '!=':
        return Not(EqualsOrIff(left, right))
    return {'<': LT, '<=': LE, '>': GT, '>=': GE}[op](left, right)


def _extremum(name: str, left, right):
    if name == 'max':
        return Ite(GE(left, right), left, right)
    return Ite(LE(left, right), left, right)


def compile_expr(ast: tuple, scope: _Scope):
    """Compile an expression tree to a pysmt formula or term."""
    kind = ast[0]
    if kind == 'num':
        return Int(ast[1])
    if kind == 'bool':
        return Bool(ast[1])
    if kind == 'name':
        name, passive = ast[1], ast[2]
        if name in scope.sorts:
            if passive and name in scope.shared:
                raise scope.error('shared variable %s has no passive copy' % name)
            return make_symbol(name, scope.sorts[name], PASSIVE if passive else None)
        if name in scope.locations and not passive:
            return Int(scope.locations[name])
        raise scope.error('undeclared name %s' % name)
    if kind == 'not':
        return Not(compile_expr(ast[1], scope))
    if kind == 'neg':
        if ast[1][0] == 'num':
            return Int(-ast[1][1])
        return Minus(Int(0), compile_expr(ast[1], scope))
    if kind == 'call':
        first, second = (compile_expr(arg, scope) for arg in ast[2])
        return _extremum(ast[1], first, second)
    op, left, right = ast[1], ast[2], ast[3]
    if op in FLIP:
        if right[0] == 'call':
            return _lower(op, left, right, scope)
        if left[0] == 'call':
            return _lower(FLIP[op], right, left, scope)
    left, right = compile_expr(left, scope), compile_expr(right, scope)
    if op in COMPARISONS:
        return _comparison(op, left, right)
    if op == '&&':
        return And(left, right)
    if op == '||':
        return Or(left, right)
    if op == '=>':
        return Implies(left, right)
    if op == '<=>':
        return Iff(left, right)
    if op == '+':
        return Plus(left, right)
    if op == '-':
        return Minus(left, right)
    return Times(left, right)


def _lower(op: str, left: tuple, call: tuple, scope: _Scope):
    """e op max(x, y) and e op min(x, y) as a conjunction or disjunction."""
    function, arguments = call[1], call[2]
    upward = op in ('>', '>=')
    combine = And if upward == (function == 'max') else Or
    value = compile_expr(left, scope)
    return combine([_comparison(op, value, compile_expr(arg, scope)) for arg in arguments])


def _compile(ast: tuple, scope: _Scope, boolean: bool = True):
    try:
        formula = compile_expr(ast, scope)
        if boolean and not formula.get_type().is_bool_type():
            raise scope.error('expected a Boolean expression: %s' % format_expr(ast))
    except PysmtException as exc:
        raise scope.error('ill-typed expression %s (%s)' % (format_expr(ast), exc))
    return formula


def _uses_passive(ast: tuple) -> bool:
    if ast is None:
        return False
    if ast[0] == 'name':
        return ast[2]
    if ast[0] in ('not', 'neg'):
        return _uses_passive(ast[1])
    if ast[0] == 'call':
        return any(_uses_passive(arg) for arg in ast[2])
    if ast[0] == 'bin':
        return _uses_passive(ast[2]) or _uses_passive(ast[3])
    return False


def ast_constants(ast: tuple) -> list:
    if ast is None:
        return []
    if ast[0] == 'num':
        return [ast[1]]
    if ast[0] in ('not', 'neg'):
        return ast_constants(ast[1])
    if ast[0] == 'call':
        return [v for arg in ast[2] for v in ast_constants(arg)]
    if ast[0] == 'bin':
        return ast_constants(ast[2]) + ast_constants(ast[3])
    return []


def program_constants(program: AsyncProgram) -> list:
    values = []
    for ast in program.init:
        values.extend(ast_constants(ast))
    for command in program.commands:
        values.extend(ast_constants(command.guard))
        for ast in command.rhs:
            values.extend(ast_constants(ast))
    return values


def passive_copy(ast: tuple, names) -> tuple:
    """Same expression with the given names read from the passive copy."""
    if ast[0] == 'name':
        return ('name', ast[1], ast[2] or ast[1] in names)
    if ast[0] in ('not', 'neg'):
        return (ast[0], passive_copy(ast[1], names))
    if ast[0] == 'call':
        return ('call', ast[1], tuple(passive_copy(arg, names) for arg in ast[2]))
    if ast[0] == 'bin':
        return ('bin', ast[1], passive_copy(ast[2], names), passive_copy(ast[3], names))
    return ast


def _unique(names: list, what: str):
    seen = set()
    for name in names:
        if name in seen:
            raise DslError('duplicate %s %s' % (what, name))
        seen.add(name)


def build_program(shared_vars, local_vars, locations, entry, error,
                  init, commands) -> AsyncProgram:
    """Validate declarations and compile commands into R and I."""
    shared_vars, local_vars = tuple(shared_vars), tuple(local_vars)
    names = [name for name, _ in shared_vars + local_vars]
    if 'pc' in names:
        raise DslError('pc is implicit and cannot be declared')
    _unique(names, 'variable')
    locations = list(locations) or [DEFAULT_LOCATION]
    _unique(locations, 'location')
    clash = set(names) & set(locations)
    if clash:
        raise DslError('%s used both as a variable and a location' % ', '.join(sorted(clash)))
    if error is not None and error not in locations:
        locations.append(error)
    locations = tuple(locations)
    entry = entry or locations[0]
    if entry not in locations:
        raise DslError('entry location %s is not declared' % entry)
    for command in commands:
        for label in (command.source, command.target):
            if label not in locations:
                raise DslError('undeclared location %s' % label, command.line, 1)

    local_vars = (('pc', 'loc'),) + local_vars
    sorts = dict(shared_vars + local_vars)
    shared = {name for name, _ in shared_vars}
    dual = any(_uses_passive(ast) for ast in init) or any(
        _uses_passive(c.guard) or any(p for _, p in c.lhs) or any(_uses_passive(e) for e in c.rhs)
        for c in commands)
    transitions = [_compile_command(c, sorts, shared, locations, local_vars, dual) for c in commands]
    transition = Or(transitions)

    scope = _Scope(sorts, shared, locations)
    pc_entry = Int(locations.index(entry))
    starts = [Equals(make_symbol('pc', 'loc'), pc_entry)]
    if dual:
        starts.append(Equals(make_symbol('pc', 'loc', PASSIVE), pc_entry))
    initial = And([_compile(ast, scope) for ast in init] + starts)
    return AsyncProgram(shared_vars, local_vars, locations, entry, error,
                        tuple(init), tuple(commands), transition, initial, dual)


def _compile_command(command: Command, sorts: dict, shared: set, locations: tuple,
                     local_vars: tuple, dual: bool):
    scope = _Scope(sorts, shared, locations, command.line)
    assigned = {}
    for (name, passive), ast in zip(command.lhs, command.rhs):
        if name == 'pc':
            raise scope.error('pc cannot be assigned')
        if name not in sorts:
            raise scope.error('undeclared variable %s' % name)
        if passive and name in shared:
            raise scope.error('shared variable %s has no passive copy' % name)
        if (name, passive) in assigned:
            raise scope.error('%s assigned twice' % name)
        value = _compile(ast, scope, boolean=False)
        if value.get_type().is_bool_type() != (sorts[name] == 'bool'):
            raise scope.error('%s is %s but is assigned %s' % (name, sorts[name], format_expr(ast)))
        assigned[(name, passive)] = value
    parts = [Equals(make_symbol('pc', 'loc'), Int(locations.index(command.source)))]
    if command.guard is not None:
        parts.append(_compile(command.guard, scope))
    parts.append(Equals(make_symbol('pc', 'loc', primed=True),
                        Int(locations.index(command.target))))
    copies = [(name, sorts[name], False) for name in sorted(shared)]
    copies += [(name, sort, False) for name, sort in local_vars if name != 'pc']
    if dual:
        copies += [(name, sort, True) for name, sort in local_vars]
    for name, sort, passive in copies:
        index = None if name in shared else (PASSIVE if passive else None)
        value = assigned.get((name, passive), make_symbol(name, sort, index))
        parts.append(EqualsOrIff(make_symbol(name, sort, index, True), value))
    return And(parts)


def parse_predicates(text: str, program: AsyncProgram) -> list:
    """
    Parse a predicate file.

    Predicates are separated by newlines or ';'; '#' starts a comment.

    Parameters
    ----------
    text : str
    program : AsyncProgram
        Declarations the predicates refer to.

    Returns
    -------
    predicates : list of Predicate
    """
    scope = _Scope(program.sorts, set(program.shared_names), program.locations)
    predicates = []
    for number, line in enumerate(text.split('\n'), 1):
        parser = _Parser(line, number)
        while not parser.at_end():
            if parser.accept(';'):
                continue
            ast = parser.expression()
            if not parser.at_end() and parser.peek().text != ';':
                raise parser.error('unexpected "%s"' % parser.peek().text)
            scope.line = number
            formula = _compile(ast, scope)
            kind = classify_predicate(formula, program)
            local_names = tuple(sorted({split_name(s.symbol_name())[0]
                                        for s in formula.get_free_variables()}
                                       & set(program.local_names)))
            predicates.append(Predicate(len(predicates) + 1, format_expr(ast), kind,
                                        local_names, formula, ast))
    return predicates


def classify_predicate(formula, program: AsyncProgram) -> str:
    """
    Kind of a predicate from the variables it reads.

    Returns
    -------
    kind : str
        'shared', 'local', 'single-thread' or 'inter-thread'.
    """
    uses_shared = uses_local = uses_passive = False
    shared, local = set(program.shared_names), set(program.local_names)
    for symbol in formula.get_free_variables():
        base, index, primed = split_name(symbol.symbol_name())
        if primed:
            raise DslError('predicates are state formulas, %s is primed' % base)
        if index == PASSIVE:
            uses_passive = True
        elif base in local:
            uses_local = True
        elif base in shared:
            uses_shared = True
        else:
            raise DslError('undeclared variable %s' % base)
    if uses_passive and not uses_local:
        raise DslError('predicates reading passive locals must also read active ones')
    if uses_passive:
        return INTER
    if uses_local:
        return SINGLE if uses_shared else LOCAL
    return SHARED


def inter_thread_count(predicates: list) -> int:
    return sum(pred.kind == INTER for pred in predicates)


def format_expr(ast: tuple, parent: int = 0) -> str:
    kind = ast[0]
    if kind == 'num':
        return str(ast[1])
    if kind == 'bool':
        return 'true' if ast[1] else 'false'
    if kind == 'name':
        return '%s@%s' % (ast[1], PASSIVE) if ast[2] else ast[1]
    if kind in ('not', 'neg'):
        text = ('!' if kind == 'not' else '-') + format_expr(ast[1], UNARY)
        return '(%s)' % text if parent > UNARY else text
    if kind == 'call':
        return '%s(%s)' % (ast[1], ', '.join(format_expr(arg) for arg in ast[2]))
    op, left, right = ast[1], ast[2], ast[3]
    precedence = PRECEDENCE[op]
    left_parent, right_parent = precedence, precedence + 1
    if op == '=>':
        left_parent, right_parent = precedence + 1, precedence
    elif op in COMPARISONS:
        left_parent = precedence + 1
    text = '%s %s %s' % (format_expr(left, left_parent), op, format_expr(right, right_parent))
    return '(%s)' % text if precedence < parent else text


def format_formula(pred: Predicate) -> str:
    return pred.text


def format_command(command: Command) -> str:
    text = '%s -> %s' % (command.source, command.target)
    if command.guard is not None:
        text += ' when %s' % format_expr(command.guard)
    if command.lhs:
        targets = ', '.join('%s@%s' % (n, PASSIVE) if p else n for n, p in command.lhs)
        text += ' : %s := %s' % (targets, ', '.join(format_expr(e) for e in command.rhs))
    return text


def format_program(program: AsyncProgram) -> str:
    """Canonical source text; parsing it gives back an equal program."""
    lines = ['shared %s : %s' % var for var in program.shared_vars]
    lines += ['local %s : %s' % var for var in program.user_locals]
    lines.append('locations %s' % ' '.join(program.locations))
    lines.append('entry %s' % program.entry)
    if program.error:
        lines.append('error %s' % program.error)
    lines += ['init %s' % format_expr(ast) for ast in program.init]
    lines += [format_command(command) for command in program.commands]
    return '\n'.join(lines) + '\n'
