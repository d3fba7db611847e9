"""Terms, atoms, rules and heuristic directives, plus substitution machinery.

All objects are immutable and hashable. Ground terms are built from
``Constant``, ``Integer`` and ``Function``; ``Arithmetic`` and ``Interval``
collapse to integers once every variable is bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

__all__ = [
    "Variable", "Constant", "Integer", "Function", "Arithmetic", "Interval",
    "Term", "Atom", "Rule", "HeuristicAtom", "HeuristicDirective", "Substitution",
    "EvaluationError", "COMPARISONS", "SIGN_ORDER",
    "signs", "format_signs", "vars", "apply", "evaluate", "is_ground", "term_key",
    "compare_terms", "is_comparison",
]


class EvaluationError(ValueError):
    """Raised when a term cannot be turned into a ground value."""


def _cache_hash(obj, *parts):
    object.__setattr__(obj, "_hash", hash((type(obj).__name__,) + parts))


@dataclass(frozen=True, slots=True)
class Variable:
    name: str
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _cache_hash(self, self.name)

    def __hash__(self):
        return self._hash

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Constant:
    symbol: str
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _cache_hash(self, self.symbol)

    def __hash__(self):
        return self._hash

    def __str__(self):
        return self.symbol


@dataclass(frozen=True, slots=True)
class Integer:
    value: int
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _cache_hash(self, self.value)

    def __hash__(self):
        return self._hash

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True, slots=True)
class Function:
    symbol: str
    args: tuple
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))
        _cache_hash(self, self.symbol, self.args)

    def __hash__(self):
        return self._hash

    def __str__(self):
        return f"{self.symbol}({','.join(map(str, self.args))})"


# binary precedence used by the printer; unary minus and abs bind tightest
_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "\\": 2}
ARITHMETIC_OPS = ("+", "-", "*", "/", "\\", "abs")


@dataclass(frozen=True, slots=True)
class Arithmetic:
    """Arithmetic over integer terms.

    ``op`` is one of ``+ - * / \\ abs``; ``\\`` is the modulo operator and
    ``-`` with a single operand is negation.
    """

    op: str
    operands: tuple
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.operands, tuple):
            object.__setattr__(self, "operands", tuple(self.operands))
        if self.op not in ARITHMETIC_OPS:
            raise ValueError(f"unknown arithmetic operator {self.op!r}")
        _cache_hash(self, self.op, self.operands)

    def __hash__(self):
        return self._hash

    def __str__(self):
        if self.op == "abs":
            return f"|{self.operands[0]}|"
        if len(self.operands) == 1:
            inner = self.operands[0]
            text = str(inner)
            if isinstance(inner, Arithmetic) and inner.op != "abs" and len(inner.operands) == 2:
                text = f"({text})"
            return f"-{text}"
        left, right = self.operands
        prec = _PRECEDENCE[self.op]
        return f"{_wrap(left, prec, False)}{self.op}{_wrap(right, prec, True)}"


def _wrap(term, prec, right):
    text = str(term)
    if isinstance(term, Arithmetic) and len(term.operands) == 2 and term.op != "abs":
        inner = _PRECEDENCE[term.op]
        if inner < prec or (right and inner == prec):
            return f"({text})"
    return text


@dataclass(frozen=True, slots=True)
class Interval:
    lo: object
    hi: object
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _cache_hash(self, self.lo, self.hi)

    def __hash__(self):
        return self._hash

    def __str__(self):
        return f"{self.lo}..{self.hi}"


Term = Union[Variable, Constant, Integer, Function, Arithmetic, Interval]
Substitution = Mapping[str, Term]

COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True, slots=True)
class Atom:
    predicate: str
    args: tuple = ()
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))
        _cache_hash(self, self.predicate, self.args)

    def __hash__(self):
        return self._hash

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def signature(self) -> tuple[str, int]:
        return self.predicate, len(self.args)

    def __str__(self):
        if self.predicate in COMPARISONS:
            return f"{self.args[0]}{self.predicate}{self.args[1]}"
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(map(str, self.args))})"


def is_comparison(atom: Atom) -> bool:
    return atom.predicate in COMPARISONS and len(atom.args) == 2


@dataclass(frozen=True, slots=True)
class Rule:
    """A normal rule, constraint (no head) or unbounded choice rule.

    For choice rules ``choice_positive``/``choice_negative`` hold the
    condition written inside the braces, e.g. ``{ a(X) : x(X) }``.
    """

    head: Atom | None
    positive_body: tuple = ()
    negative_body: tuple = ()
    is_choice: bool = False
    choice_positive: tuple = ()
    choice_negative: tuple = ()

    def __post_init__(self):
        for name in ("positive_body", "negative_body", "choice_positive", "choice_negative"):
            value = getattr(self, name)
            if not isinstance(value, tuple):
                object.__setattr__(self, name, tuple(value))

    @property
    def is_constraint(self) -> bool:
        return self.head is None

    @property
    def is_fact(self) -> bool:
        return (self.head is not None and not self.is_choice
                and not self.positive_body and not self.negative_body)

    def __str__(self):
        body = [str(a) for a in self.positive_body] + [f"not {a}" for a in self.negative_body]
        if self.is_choice:
            cond = [str(a) for a in self.choice_positive] + [f"not {a}" for a in self.choice_negative]
            head = f"{{ {self.head}{' : ' + ', '.join(cond) if cond else ''} }}"
        else:
            head = "" if self.head is None else str(self.head)
        if not body:
            return f"{head}." if head else ":- ."
        return f"{head} :- {', '.join(body)}." if head else f":- {', '.join(body)}."


SIGN_ORDER = "TMF"


def signs(text: str | Iterable[str]) -> frozenset:
    """Build a sign set, e.g. ``signs("TM")``. Letters may come in any order."""
    letters = list(text)
    result = frozenset(letters)
    if not result or not result <= set(SIGN_ORDER) or len(result) != len(letters):
        raise ValueError(f"invalid sign set {''.join(letters)!r}")
    return result


def format_signs(sign_set) -> str:
    return "".join(s for s in SIGN_ORDER if s in sign_set)


@dataclass(frozen=True, slots=True)
class HeuristicAtom:
    signs: frozenset
    atom: Atom

    def __str__(self):
        if is_comparison(self.atom):
            return str(self.atom)
        return f"{format_signs(self.signs)} {self.atom}"


@dataclass(frozen=True, slots=True)
class HeuristicDirective:
    """``#heuristic head : pos..., not neg... . [weight@level]``

    ``origin`` and ``origin_binding`` are bookkeeping filled in by the
    rewriting pipeline: the index of the user directive a canonical directive
    came from, and how that directive's variables map onto this one's terms.
    They do not take part in equality.
    """

    head: HeuristicAtom
    positive_condition: tuple = ()
    negative_condition: tuple = ()
    weight: Term = Integer(0)
    level: Term = Integer(0)
    origin: int | None = field(default=None, compare=False)
    origin_binding: tuple = field(default=(), compare=False)

    def __post_init__(self):
        for name in ("positive_condition", "negative_condition"):
            value = getattr(self, name)
            if not isinstance(value, tuple):
                object.__setattr__(self, name, tuple(value))
        if self.head.signs not in (frozenset("T"), frozenset("F")):
            raise ValueError("heuristic head sign must be T or F")

    @property
    def head_sign(self) -> str:
        return next(iter(self.head.signs))

    @property
    def condition(self) -> tuple:
        return self.positive_condition + self.negative_condition

    def __str__(self):
        cond = [str(h) for h in self.positive_condition]
        cond += [f"not {h}" for h in self.negative_condition]
        text = f"#heuristic {self.head}"
        if cond:
            text += " : " + ", ".join(cond)
        return f"{text}. [{self.weight}@{self.level}]"


# -- variables -----------------------------------------------------------

def _collect(obj, out: set):
    if isinstance(obj, Variable):
        out.add(obj.name)
    elif isinstance(obj, (Constant, Integer)):
        pass
    elif isinstance(obj, Function):
        for a in obj.args:
            _collect(a, out)
    elif isinstance(obj, Arithmetic):
        for a in obj.operands:
            _collect(a, out)
    elif isinstance(obj, Interval):
        _collect(obj.lo, out)
        _collect(obj.hi, out)
    elif isinstance(obj, Atom):
        for a in obj.args:
            _collect(a, out)
    elif isinstance(obj, HeuristicAtom):
        _collect(obj.atom, out)
    elif isinstance(obj, Rule):
        if obj.head is not None:
            _collect(obj.head, out)
        for part in (obj.positive_body, obj.negative_body, obj.choice_positive, obj.choice_negative):
            for a in part:
                _collect(a, out)
    elif isinstance(obj, HeuristicDirective):
        _collect(obj.head, out)
        for h in obj.condition:
            _collect(h, out)
        _collect(obj.weight, out)
        _collect(obj.level, out)
    elif isinstance(obj, (tuple, list, frozenset, set)):
        for a in obj:
            _collect(a, out)
    else:
        raise TypeError(f"cannot collect variables of {type(obj).__name__}")


def vars(obj) -> set:  # noqa: A001 - mirrors the usual vars(r) notation
    """Names of all variables occurring in ``obj``.

    >>> sorted(vars(Atom("b", (Variable("X"), Variable("Y")))))
    ['X', 'Y']
    """
    out: set = set()
    _collect(obj, out)
    return out


def is_ground(obj) -> bool:
    return not vars(obj)


# -- evaluation ----------------------------------------------------------

def _as_int(term) -> int:
    if isinstance(term, Integer):
        return term.value
    raise EvaluationError(f"arithmetic operand {term} is not an integer")


def evaluate(term):
    """Evaluate a ground term; arithmetic collapses to an ``Integer``."""
    if isinstance(term, (Constant, Integer)):
        return term
    if isinstance(term, Variable):
        raise EvaluationError(f"unbound variable {term.name}")
    if isinstance(term, Function):
        return Function(term.symbol, tuple(evaluate(a) for a in term.args))
    if isinstance(term, Interval):
        return Interval(evaluate(term.lo), evaluate(term.hi))
    if isinstance(term, Arithmetic):
        vals = [_as_int(evaluate(a)) for a in term.operands]
        op = term.op
        if op == "abs":
            return Integer(abs(vals[0]))
        if len(vals) == 1:
            if op != "-":
                raise EvaluationError(f"unary {op} is not defined")
            return Integer(-vals[0])
        a, b = vals
        if op == "+":
            return Integer(a + b)
        if op == "-":
            return Integer(a - b)
        if op == "*":
            return Integer(a * b)
        if b == 0:
            raise EvaluationError("division by zero")
        q = abs(a) // abs(b)
        if (a < 0) != (b < 0):
            q = -q
        if op == "/":
            return Integer(q)
        return Integer(a - q * b)
    raise TypeError(f"not a term: {term!r}")


def _subst_term(term, sigma, partial):
    if isinstance(term, Variable):
        value = sigma.get(term.name)
        if value is None:
            if partial:
                return term
            raise EvaluationError(f"unbound variable {term.name}")
        if isinstance(value, Arithmetic) and is_ground(value):
            return evaluate(value)
        return value
    if isinstance(term, (Constant, Integer)):
        return term
    if isinstance(term, Function):
        return Function(term.symbol, tuple(_subst_term(a, sigma, partial) for a in term.args))
    if isinstance(term, Arithmetic):
        new = Arithmetic(term.op, tuple(_subst_term(a, sigma, partial) for a in term.operands))
        return evaluate(new) if is_ground(new) else new
    if isinstance(term, Interval):
        new = Interval(_subst_term(term.lo, sigma, partial), _subst_term(term.hi, sigma, partial))
        return evaluate(new) if is_ground(new) else new
    raise TypeError(f"not a term: {term!r}")


def apply(obj, sigma: Substitution, partial: bool = False):
    """Replace variables by their bindings and evaluate ground arithmetic.

    With ``partial=False`` every variable must be bound, otherwise
    ``EvaluationError`` is raised.
    """
    if isinstance(obj, (Variable, Constant, Integer, Function, Arithmetic, Interval)):
        return _subst_term(obj, sigma, partial)
    if isinstance(obj, Atom):
        return Atom(obj.predicate, tuple(_subst_term(a, sigma, partial) for a in obj.args))
    if isinstance(obj, HeuristicAtom):
        return HeuristicAtom(obj.signs, apply(obj.atom, sigma, partial))
    if isinstance(obj, Rule):
        def many(atoms):
            return tuple(apply(a, sigma, partial) for a in atoms)
        return Rule(
            None if obj.head is None else apply(obj.head, sigma, partial),
            many(obj.positive_body), many(obj.negative_body), obj.is_choice,
            many(obj.choice_positive), many(obj.choice_negative),
        )
    if isinstance(obj, HeuristicDirective):
        return HeuristicDirective(
            apply(obj.head, sigma, partial),
            tuple(apply(h, sigma, partial) for h in obj.positive_condition),
            tuple(apply(h, sigma, partial) for h in obj.negative_condition),
            _subst_term(obj.weight, sigma, partial),
            _subst_term(obj.level, sigma, partial),
            obj.origin,
            tuple((v, _subst_term(t, sigma, True)) for v, t in obj.origin_binding),
        )
    if isinstance(obj, tuple):
        return tuple(apply(o, sigma, partial) for o in obj)
    raise TypeError(f"cannot apply a substitution to {type(obj).__name__}")


# -- ordering and comparison built-ins ------------------------------------

def term_key(term):
    """Total order on ground terms: integers, then constants, then functions."""
    if isinstance(term, Integer):
        return (0, term.value)
    if isinstance(term, Constant):
        return (1, term.symbol)
    if isinstance(term, Function):
        return (2, len(term.args), term.symbol, tuple(term_key(a) for a in term.args))
    raise EvaluationError(f"cannot order non-ground term {term}")


def compare_terms(op: str, left, right) -> bool:
    if op == "=":
        return left == right
    if op == "!=":
        return left != right
    lk, rk = term_key(left), term_key(right)
    if op == "<":
        return lk < rk
    if op == "<=":
        return lk <= rk
    if op == ">":
        return lk > rk
    if op == ">=":
        return lk >= rk
    raise ValueError(f"unknown comparison {op!r}")
