"""Tokenizer, recursive-descent parser and printer for programs with heuristic directives."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

from .ast import (
    Arithmetic, Atom, Constant, EvaluationError, Function, HeuristicAtom,
    HeuristicDirective, Integer, Interval, Rule, Variable, evaluate, is_ground, signs,
)

__all__ = ["ParseError", "SourceProgram", "parse_program", "pretty_print", "RESERVED_SUFFIX"]

RESERVED_SUFFIX = "__off"
DEFAULT_BODY_SIGNS = frozenset("MT")


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{line}:{column}: {message}" if line else message)
        self.line = line
        self.column = column


@dataclass
class SourceProgram:
    rules: list = field(default_factory=list)
    directives: list = field(default_factory=list)
    rule_spans: list = field(default_factory=list, compare=False, repr=False)
    directive_spans: list = field(default_factory=list, compare=False, repr=False)


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<directive>\#heuristic\b)
  | (?P<if>:-|←)
  | (?P<dots>\.\.)
  | (?P<dot>\.)
  | (?P<cmp>!=|<=|>=|==|=|<|>)
  | (?P<num>\d+)
  | (?P<var>_*[A-Z][A-Za-z0-9_']*|_)
  | (?P<ident>_*[a-z][A-Za-z0-9_']*)
  | (?P<punct>[-+*/\\|(){}\[\],:;@])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind != "ws":
            if kind == "punct":
                kind = value
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, allow_reserved: bool):
        self.tokens = tokenize(text)
        self.i = 0
        self.allow_reserved = allow_reserved
        self.anon = itertools.count(1)

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k=1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def error(self, message, tok=None):
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.column)

    def accept(self, kind, text=None):
        if self.tok.kind == kind and (text is None or self.tok.text == text):
            tok = self.tok
            self.i += 1
            return tok
        return None

    def expect(self, kind, what=None):
        tok = self.accept(kind)
        if tok is None:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what or kind!r}, found {found!r}")
        return tok

    # program
    def program(self) -> SourceProgram:
        prog = SourceProgram()
        while self.tok.kind != "eof":
            start = self.tok
            span = (start.line, start.column)
            if self.accept("directive"):
                prog.directives.append(self.directive())
                prog.directive_spans.append(span)
            else:
                for rule in self.rule():
                    prog.rules.append(rule)
                    prog.rule_spans.append(span)
        return prog

    def rule(self) -> list[Rule]:
        if self.accept("if"):
            pos, neg = self.body()
            self.expect("dot", ".")
            return [Rule(None, pos, neg)]
        if self.tok.kind == "num" and self.peek().kind == "{":
            raise self.error("choice rules with bounds are not supported")
        if self.accept("{"):
            head = self.atom()
            cpos, cneg = (), ()
            if self.accept(":"):
                cpos, cneg = self.body()
            if self.tok.kind == ";":
                raise self.error("choice rules with more than one element are not supported")
            self.expect("}", "}")
            if self.tok.kind == "num":
                raise self.error("choice rules with bounds are not supported")
            pos, neg = (), ()
            if self.accept("if"):
                pos, neg = self.body()
            self.expect("dot", ".")
            return [Rule(head, pos, neg, True, cpos, cneg)]
        head_tok = self.tok
        head = self.atom()
        if self.tok.kind in (";", "|"):
            raise self.error("disjunctive heads are not supported")
        pos, neg = (), ()
        if self.accept("if"):
            pos, neg = self.body()
        self.expect("dot", ".")
        if any(isinstance(a, Interval) or _has_interval(a) for a in head.args):
            if pos or neg:
                raise ParseError("intervals are only allowed in facts", head_tok.line, head_tok.column)
            return [Rule(a) for a in _expand_intervals(head, head_tok)]
        for a in pos + neg:
            if _has_interval(a):
                raise ParseError("intervals are only allowed in facts", head_tok.line, head_tok.column)
        return [Rule(head, pos, neg)]

    def body(self):
        pos, neg = [], []
        while True:
            if self.accept("ident", "not"):
                neg.append(self.literal())
            else:
                pos.append(self.literal())
            if not self.accept(","):
                return tuple(pos), tuple(neg)

    def literal(self) -> Atom:
        tok = self.tok
        left = self.term()
        if self.tok.kind == "cmp":
            op = self.accept("cmp").text
            op = "=" if op == "==" else op
            right = self.term()
            return Atom(op, (left, right))
        return self._to_atom(left, tok)

    def atom(self) -> Atom:
        tok = self.tok
        return self._to_atom(self.term(), tok)

    def _to_atom(self, term, tok) -> Atom:
        if isinstance(term, Constant):
            atom = Atom(term.symbol, ())
        elif isinstance(term, Function):
            atom = Atom(term.symbol, term.args)
        else:
            raise ParseError(f"expected an atom, found {term}", tok.line, tok.column)
        if atom.predicate == "not":
            raise ParseError("'not' cannot be used as a predicate", tok.line, tok.column)
        if not self.allow_reserved and atom.predicate.endswith(RESERVED_SUFFIX):
            raise ParseError(
                f"predicate {atom.predicate} uses the reserved suffix {RESERVED_SUFFIX}",
                tok.line, tok.column)
        return atom

    # terms
    def term(self):
        lo = self.additive()
        if self.accept("dots"):
            return Interval(lo, self.additive())
        return lo

    def additive(self):
        left = self.multiplicative()
        while self.tok.kind in ("+", "-"):
            op = self.accept(self.tok.kind).text
            left = Arithmetic(op, (left, self.multiplicative()))
        return left

    def multiplicative(self):
        left = self.unary()
        while self.tok.kind in ("*", "/", "\\"):
            op = self.accept(self.tok.kind).text
            left = Arithmetic(op, (left, self.unary()))
        return left

    def unary(self):
        if self.accept("-"):
            inner = self.unary()
            if isinstance(inner, Integer):
                return Integer(-inner.value)
            return Arithmetic("-", (inner,))
        return self.primary()

    def primary(self):
        tok = self.tok
        if self.accept("num"):
            return Integer(int(tok.text))
        if self.accept("var"):
            if tok.text == "_":
                return Variable(f"_Anon{next(self.anon)}")
            return Variable(tok.text)
        if self.accept("ident"):
            if self.accept("("):
                args = [self.term()]
                while self.accept(","):
                    args.append(self.term())
                self.expect(")", ")")
                return Function(tok.text, tuple(args))
            return Constant(tok.text)
        if self.accept("("):
            inner = self.term()
            self.expect(")", ")")
            return inner
        if self.accept("|"):
            inner = self.additive()
            self.expect("|", "|")
            return Arithmetic("abs", (inner,))
        raise self.error(f"unexpected {tok.text or 'end of input'!r}")

    # heuristic directives
    def sign_prefix(self):
        """A run of T/M/F letters directly followed by an atom is a sign set."""
        tok = self.tok
        if tok.kind == "var" and set(tok.text) <= set("TMF") and self.peek().kind == "ident":
            self.i += 1
            try:
                return signs(tok.text)
            except ValueError:
                raise ParseError(f"invalid sign set {tok.text!r}", tok.line, tok.column) from None
        return None

    def directive(self) -> HeuristicDirective:
        sign_tok = self.tok
        head_signs = self.sign_prefix() or frozenset("T")
        if head_signs not in (frozenset("T"), frozenset("F")):
            raise ParseError("the head of a heuristic directive takes sign T or F",
                             sign_tok.line, sign_tok.column)
        head = HeuristicAtom(head_signs, self.atom())
        pos, neg = [], []
        if self.accept(":"):
            while True:
                negated = self.accept("ident", "not") is not None
                (neg if negated else pos).append(self.heuristic_literal())
                if not self.accept(","):
                    break
        self.expect("dot", ".")
        weight, level = Integer(0), Integer(0)
        if self.accept("["):
            weight = self.term()
            if self.accept("@"):
                level = self.term()
            self.expect("]", "]")
        return HeuristicDirective(head, tuple(pos), tuple(neg), weight, level)

    def heuristic_literal(self) -> HeuristicAtom:
        given = self.sign_prefix()
        tok = self.tok
        left = self.term()
        if self.tok.kind == "cmp":
            if given is not None:
                raise self.error("comparisons in heuristic conditions take no signs", tok)
            op = self.accept("cmp").text
            op = "=" if op == "==" else op
            return HeuristicAtom(frozenset("T"), Atom(op, (left, self.term())))
        return HeuristicAtom(given or DEFAULT_BODY_SIGNS, self._to_atom(left, tok))


def _has_interval(obj) -> bool:
    if isinstance(obj, Interval):
        return True
    if isinstance(obj, Function):
        return any(_has_interval(a) for a in obj.args)
    if isinstance(obj, Arithmetic):
        return any(_has_interval(a) for a in obj.operands)
    if isinstance(obj, Atom):
        return any(_has_interval(a) for a in obj.args)
    return False


def _expand_term(term):
    if isinstance(term, Interval):
        lo, hi = evaluate(term.lo), evaluate(term.hi)
        if not (isinstance(lo, Integer) and isinstance(hi, Integer)):
            raise EvaluationError(f"interval bounds of {term} must be integers")
        return [Integer(v) for v in range(lo.value, hi.value + 1)]
    if isinstance(term, Function):
        return [Function(term.symbol, args)
                for args in itertools.product(*(_expand_term(a) for a in term.args))]
    return [term]


def _expand_intervals(head: Atom, tok: Token) -> list[Atom]:
    if not is_ground(head):
        raise ParseError("interval facts must be ground", tok.line, tok.column)
    try:
        choices = [_expand_term(a) for a in head.args]
    except EvaluationError as exc:
        raise ParseError(str(exc), tok.line, tok.column) from None
    return [Atom(head.predicate, args) for args in itertools.product(*choices)]


def parse_program(text: str, allow_reserved: bool = False) -> SourceProgram:
    """Parse program text. ``allow_reserved`` admits ``__off`` predicates,
    which only the choice rewriting is supposed to introduce."""
    return _Parser(text, allow_reserved).program()


def pretty_print(program) -> str:
    lines = [str(r) for r in program.rules] + [str(d) for d in program.directives]
    return "\n".join(lines)

