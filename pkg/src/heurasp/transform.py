"""Rewrites applied before solving.

Choice rules become pairs of normal rules, directives are enhanced with the
bodies of the rules deriving their heads, and every directive is split into
directives that only use the sign sets F, T and MT.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

from .ast import (
    Arithmetic, Atom, Function, HeuristicAtom, HeuristicDirective, Rule, Variable,
    apply, evaluate, is_comparison, is_ground,
)
from .ast import vars as term_vars
from .parser import RESERVED_SUFFIX, SourceProgram

__all__ = [
    "TransformError", "SafetyError", "SafetyReport", "CanonicalProgram",
    "rewrite_choice_rules", "transform_directive", "enhance_directives",
    "check_safety", "check_rule_safety", "canonicalize", "directive_key", "off_atom",
]

log = logging.getLogger(__name__)

T, M, F = frozenset("T"), frozenset("M"), frozenset("F")
MT, FT, FMT = frozenset("MT"), frozenset("FT"), frozenset("FMT")
CANONICAL_SIGNS = (F, T, MT)


class TransformError(ValueError):
    pass


class SafetyError(TransformError):
    def __init__(self, what, variables):
        self.variables = tuple(sorted(variables))
        names = ", ".join(self.variables)
        super().__init__(f"unsafe variable{'s' if len(self.variables) > 1 else ''} {names} in {what}")


@dataclass(frozen=True)
class SafetyReport:
    unsafe_variables: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.unsafe_variables

    def __bool__(self):
        return self.ok


@dataclass
class CanonicalProgram:
    rules: list = field(default_factory=list)
    directives: list = field(default_factory=list)
    # user directives after choice rewriting, indexed by ``origin``
    source_directives: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


# -- choice rules ----------------------------------------------------------

def off_atom(atom: Atom) -> Atom:
    return Atom(atom.predicate + RESERVED_SUFFIX, atom.args)


def rewrite_choice_rules(p: SourceProgram) -> SourceProgram:
    for rule in p.rules:
        atoms = ([rule.head] if rule.head else []) + list(rule.positive_body + rule.negative_body)
        atoms += list(rule.choice_positive + rule.choice_negative)
        for a in atoms:
            if a.predicate.endswith(RESERVED_SUFFIX):
                raise TransformError(f"predicate {a.predicate} clashes with the reserved suffix {RESERVED_SUFFIX}")
    rules, spans = [], []
    rule_spans = p.rule_spans or [None] * len(p.rules)
    for rule, span in zip(p.rules, rule_spans):
        if not rule.is_choice:
            rules.append(rule)
            spans.append(span)
            continue
        pos = rule.positive_body + rule.choice_positive
        neg = rule.negative_body + rule.choice_negative
        off = off_atom(rule.head)
        rules.append(Rule(rule.head, pos, neg + (off,)))
        rules.append(Rule(off, pos, neg + (rule.head,)))
        spans += [span, span]
    return SourceProgram(rules, list(p.directives), spans, list(p.directive_spans))


# -- sign-set canonicalisation ----------------------------------------------

def directive_key(d: HeuristicDirective):
    """Equality up to the order of condition literals."""
    return (d.head, frozenset(d.positive_condition), frozenset(d.negative_condition), d.weight, d.level)


def _dedup(literals):
    seen, out = set(), []
    for lit in literals:
        if lit not in seen:
            seen.add(lit)
            out.append(lit)
    return tuple(out)


def _with(d, pos, neg):
    return HeuristicDirective(d.head, _dedup(pos), _dedup(neg), d.weight, d.level, d.origin, d.origin_binding)


def _split_once(d: HeuristicDirective):
    """Rewrite the leftmost non-canonical literal; None if ``d`` is canonical."""
    pos, neg = list(d.positive_condition), list(d.negative_condition)
    for i, lit in enumerate(pos):
        s = lit.signs
        if "F" in s and len(s) > 1:
            rest = HeuristicAtom(s - F, lit.atom)
            return [_with(d, pos[:i] + [rest] + pos[i + 1:], neg),
                    _with(d, pos[:i] + [HeuristicAtom(F, lit.atom)] + pos[i + 1:], neg)]
        if s == M:
            return [_with(d, pos[:i] + [HeuristicAtom(MT, lit.atom)] + pos[i + 1:],
                          neg + [HeuristicAtom(T, lit.atom)])]
    for i, lit in enumerate(neg):
        s = lit.signs
        if "F" in s and len(s) > 1:
            split = [HeuristicAtom(F, lit.atom), HeuristicAtom(s - F, lit.atom)]
            return [_with(d, pos, neg[:i] + split + neg[i + 1:])]
        if s == M:
            return [_with(d, pos + [HeuristicAtom(FT, lit.atom)], neg[:i] + neg[i + 1:]),
                    _with(d, pos, neg[:i] + [HeuristicAtom(FMT, lit.atom)] + neg[i + 1:])]
    return None


def transform_directive(d: HeuristicDirective) -> list:
    """Equivalent directives whose condition literals all carry F, T or MT.

    Returned in a deterministic order without duplicates (compared up to the
    order of condition literals).
    """
    out, seen = [], set()
    queue = deque([d])
    while queue:
        cur = queue.popleft()
        parts = _split_once(cur)
        if parts is None:
            key = directive_key(cur)
            if key not in seen:
                seen.add(key)
                out.append(cur)
        else:
            queue.extend(parts)
    return out


# -- safety ------------------------------------------------------------------

def _bound_by(positive_atoms, builtins):
    """Variables bound by positive atoms plus ``V = expr`` chains."""
    bound = set()
    for a in positive_atoms:
        bound |= term_vars(a)
    changed = True
    while changed:
        changed = False
        for b in builtins:
            if b.predicate != "=":
                continue
            left, right = b.args
            for var, expr in ((left, right), (right, left)):
                if isinstance(var, Variable) and var.name not in bound and term_vars(expr) <= bound:
                    bound.add(var.name)
                    changed = True
    return bound


def check_safety(d: HeuristicDirective) -> SafetyReport:
    """Every variable must occur in a positive condition atom signed T or MT."""
    binders = [h.atom for h in d.positive_condition
               if not is_comparison(h.atom) and h.signs in (T, MT)]
    builtins = [h.atom for h in d.positive_condition if is_comparison(h.atom)]
    unsafe = term_vars(d) - _bound_by(binders, builtins)
    return SafetyReport(tuple(sorted(unsafe)))


def check_rule_safety(rule: Rule):
    pos = rule.positive_body + rule.choice_positive
    binders = [a for a in pos if not is_comparison(a)]
    unsafe = term_vars(rule) - _bound_by(binders, [a for a in pos if is_comparison(a)])
    if unsafe:
        raise SafetyError(f"rule {rule}", unsafe)


# -- enhancement --------------------------------------------------------------

def _walk(term, sigma):
    while isinstance(term, Variable) and term.name in sigma:
        term = sigma[term.name]
    return term


def _resolve(term, sigma):
    term = _walk(term, sigma)
    if isinstance(term, Function):
        return Function(term.symbol, tuple(_resolve(a, sigma) for a in term.args))
    if isinstance(term, Arithmetic):
        return Arithmetic(term.op, tuple(_resolve(a, sigma) for a in term.operands))
    return term


def _unify(a, b, sigma, eqs, rule_vars) -> bool:
    a, b = _walk(a, sigma), _walk(b, sigma)
    if a == b:
        return True
    if isinstance(b, Variable) and b.name in rule_vars:
        a, b = b, a
    if isinstance(a, Variable):
        if a.name in term_vars(_resolve(b, sigma)):
            return False
        sigma[a.name] = b
        return True
    if isinstance(b, Variable):
        return _unify(b, a, sigma, eqs, rule_vars)
    if isinstance(a, Arithmetic) or isinstance(b, Arithmetic):
        if is_ground(a) and is_ground(b):
            try:
                return evaluate(a) == evaluate(b)
            except ValueError:
                return False
        eqs.append((a, b))
        return True
    if isinstance(a, Function) and isinstance(b, Function):
        if a.symbol != b.symbol or len(a.args) != len(b.args):
            return False
        return all(_unify(x, y, sigma, eqs, rule_vars) for x, y in zip(a.args, b.args))
    return False


def _rename_apart(rule: Rule, taken: set) -> Rule:
    sigma = {}
    for name in sorted(term_vars(rule)):
        if name in taken:
            k = 1
            while f"{name}_{k}" in taken or f"{name}_{k}" in term_vars(rule):
                k += 1
            sigma[name] = Variable(f"{name}_{k}")
    return apply(rule, sigma, partial=True) if sigma else rule


def _enhance_one(d: HeuristicDirective, rule: Rule):
    dvars = term_vars(d)
    rule = _rename_apart(rule, dvars)
    rule_vars = term_vars(rule)
    head = rule.head
    if head.signature != d.head.atom.signature:
        return None
    sigma, eqs = {}, []
    for x, y in zip(d.head.atom.args, head.args):
        if not _unify(x, y, sigma, eqs, rule_vars):
            return None
    full = {v: _resolve(Variable(v), sigma) for v in dvars | rule_vars}
    d2 = apply(d, full, partial=True)
    r2 = apply(rule, full, partial=True)
    pos = list(d2.positive_condition)
    neg = list(d2.negative_condition)
    for a in r2.positive_body:
        pos.append(HeuristicAtom(T, a))
    for left, right in eqs:
        pos.append(HeuristicAtom(T, Atom("=", (_resolve(left, sigma), _resolve(right, sigma)))))
    for a in r2.negative_body:
        neg.append(HeuristicAtom(T if is_comparison(a) else MT, a))
    binding = tuple((v, _resolve(Variable(v), sigma)) for v in sorted(term_vars(d)))
    return HeuristicDirective(d2.head, _dedup(pos), _dedup(neg), d2.weight, d2.level,
                              d.origin, d.origin_binding or binding)


def enhance_directives(p: SourceProgram, warnings: list | None = None) -> SourceProgram:
    """One enhanced copy of each directive per rule whose head unifies with its head."""
    if any(r.is_choice for r in p.rules):
        raise TransformError("rewrite choice rules before enhancing directives")
    deriving = [r for r in p.rules if r.head is not None and not r.is_fact]
    out = []
    for idx, d in enumerate(p.directives):
        if d.origin is None:
            d = HeuristicDirective(d.head, d.positive_condition, d.negative_condition,
                                   d.weight, d.level, idx, d.origin_binding)
        copies = [e for e in (_enhance_one(d, r) for r in deriving) if e is not None]
        if not copies:
            msg = f"dropping directive with no rule deriving its head: {d}"
            log.warning(msg)
            if warnings is not None:
                warnings.append(msg)
        out.extend(copies)
    return SourceProgram(list(p.rules), out, list(p.rule_spans), [])


def canonicalize(p: SourceProgram) -> CanonicalProgram:
    """Full pre-solving pipeline: safety, choice rewriting, enhancement, sign splitting."""
    for rule in p.rules:
        check_rule_safety(rule)
    for d in p.directives:
        report = check_safety(d)
        if not report.ok:
            raise SafetyError(f"heuristic directive {d}", report.unsafe_variables)
    normal = rewrite_choice_rules(p)
    sources = [HeuristicDirective(d.head, d.positive_condition, d.negative_condition,
                                  d.weight, d.level, i) for i, d in enumerate(normal.directives)]
    normal.directives = sources
    warnings: list = []
    enhanced = enhance_directives(normal, warnings)
    directives, seen = [], set()
    for e in enhanced.directives:
        for c in transform_directive(e):
            report = check_safety(c)
            if not report.ok:
                raise SafetyError(f"heuristic directive {c}", report.unsafe_variables)
            key = (directive_key(c), c.origin)
            if key not in seen:
                seen.add(key)
                directives.append(c)
    return CanonicalProgram(normal.rules, directives, sources, warnings)
