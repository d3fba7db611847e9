"""Brute-force stable model checker for tiny programs.

Deliberately shares no code with the lazy grounder or the solver: rules are
instantiated by plain nested-loop matching, and answer sets are found by
testing every candidate interpretation against the definition (minimal model
of the reduct). Heuristic directives are ignored.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .ast import (
    Arithmetic, Atom, Constant, EvaluationError, Function, Integer, Interval, Variable,
    apply, compare_terms, is_comparison,
)
from .ast import vars as term_vars

__all__ = [
    "OracleCapError", "GroundRule", "GroundProgram",
    "naive_ground", "reduct", "is_answer_set", "enumerate_answer_sets",
]


class OracleCapError(RuntimeError):
    """The program does not fit the oracle's size limits."""


@dataclass(frozen=True)
class GroundRule:
    head: Atom | None
    positive: frozenset = frozenset()
    negative: frozenset = frozenset()

    def __str__(self):
        body = sorted(map(str, self.positive)) + [f"not {a}" for a in sorted(map(str, self.negative))]
        head = "" if self.head is None else str(self.head)
        if not body:
            return f"{head}."
        return f"{head} :- {', '.join(body)}."


@dataclass
class GroundProgram:
    rules: list = field(default_factory=list)

    @property
    def base(self) -> set:
        atoms = set()
        for r in self.rules:
            if r.head is not None:
                atoms.add(r.head)
            atoms |= r.positive | r.negative
        return atoms

    @property
    def facts(self) -> set:
        return {r.head for r in self.rules if r.head is not None and not r.positive and not r.negative}


def _depth(term) -> int:
    if isinstance(term, Function):
        return 1 + max((_depth(a) for a in term.args), default=0)
    return 0


def _check_limits(atom: Atom, int_domain, depth_cap):
    def walk(t):
        if isinstance(t, Integer):
            if not int_domain[0] <= t.value <= int_domain[1]:
                raise OracleCapError(f"integer {t.value} in {atom} lies outside {int_domain}")
        elif isinstance(t, Function):
            for a in t.args:
                walk(a)
    for a in atom.args:
        if _depth(a) > depth_cap:
            raise OracleCapError(f"function nesting in {atom} exceeds depth {depth_cap}")
        walk(a)


def _match(pattern, value, sigma):
    """One-way matching of a (possibly non-ground) term against a ground term."""
    if isinstance(pattern, Variable):
        bound = sigma.get(pattern.name)
        if bound is None:
            sigma = dict(sigma)
            sigma[pattern.name] = value
            return sigma
        return sigma if bound == value else None
    if isinstance(pattern, (Constant, Integer)):
        return sigma if pattern == value else None
    if isinstance(pattern, Function):
        if not isinstance(value, Function) or value.symbol != pattern.symbol \
                or len(value.args) != len(pattern.args):
            return None
        for p, v in zip(pattern.args, value.args):
            sigma = _match(p, v, sigma)
            if sigma is None:
                return None
        return sigma
    if isinstance(pattern, (Arithmetic, Interval)):
        try:
            return sigma if apply(pattern, sigma) == value else None
        except EvaluationError:
            return None
    raise TypeError(pattern)


def _free(term, sigma) -> bool:
    return bool(term_vars(term) - sigma.keys())


def _substitutions(rule, atoms):
    """All substitutions making the positive body true in ``atoms``."""
    by_pred: dict = {}
    for a in atoms:
        by_pred.setdefault(a.signature, []).append(a)

    def search(pending, sigma):
        if not pending:
            yield sigma
            return
        # comparisons first, once their inputs are known
        for i, lit in enumerate(pending):
            if is_comparison(lit):
                left, right = lit.args
                rest = pending[:i] + pending[i + 1:]
                if not _free(left, sigma) and not _free(right, sigma):
                    try:
                        ok = compare_terms(lit.predicate, apply(left, sigma), apply(right, sigma))
                    except EvaluationError:
                        return
                    if ok:
                        yield from search(rest, sigma)
                    return
                if lit.predicate == "=":
                    for var, expr in ((left, right), (right, left)):
                        if isinstance(var, Variable) and var.name not in sigma and not _free(expr, sigma):
                            try:
                                value = apply(expr, sigma)
                            except EvaluationError:
                                return
                            yield from search(rest, {**sigma, var.name: value})
                            return
        for i, lit in enumerate(pending):
            if is_comparison(lit):
                continue
            if any(isinstance(a, (Arithmetic, Interval)) and _free(a, sigma) for a in lit.args):
                continue
            rest = pending[:i] + pending[i + 1:]
            for cand in by_pred.get(lit.signature, ()):
                s = sigma
                for p, v in zip(lit.args, cand.args):
                    s = _match(p, v, s)
                    if s is None:
                        break
                if s is not None:
                    yield from search(rest, s)
            return
        raise OracleCapError(f"cannot instantiate {rule}: unsafe or circular arithmetic")

    yield from search(list(rule.positive_body), {})


def _instantiate(rule, sigma):
    try:
        head = None if rule.head is None else apply(rule.head, sigma)
        pos = [apply(a, sigma) for a in rule.positive_body]
        neg = [apply(a, sigma) for a in rule.negative_body]
    except EvaluationError:
        return None
    for a in neg:
        if is_comparison(a) and compare_terms(a.predicate, *a.args):
            return None
    return GroundRule(
        head,
        frozenset(a for a in pos if not is_comparison(a)),
        frozenset(a for a in neg if not is_comparison(a)),
    )


def naive_ground(program, int_domain=(-50, 50), depth_cap: int = 2) -> GroundProgram:
    """Instantiate every rule over the atoms that could possibly be derived.

    Possible atoms are computed by a fixpoint that ignores negation; rule
    instances whose positive body mentions an impossible atom can never fire
    and are left out. Integers outside ``int_domain`` or function terms nested
    deeper than ``depth_cap`` raise ``OracleCapError``.
    """
    rules = list(program.rules)
    if any(r.is_choice for r in rules):
        raise ValueError("rewrite choice rules before grounding with the oracle")
    possible: set = set()
    changed = True
    while changed:
        changed = False
        for rule in rules:
            if rule.head is None:
                continue
            for sigma in list(_substitutions(rule, possible)):
                g = _instantiate(rule, sigma)
                if g is None or g.head in possible:
                    continue
                _check_limits(g.head, int_domain, depth_cap)
                possible.add(g.head)
                changed = True
    out: list = []
    seen = set()
    for rule in rules:
        for sigma in _substitutions(rule, possible):
            g = _instantiate(rule, sigma)
            if g is not None and g not in seen:
                for a in g.negative:
                    _check_limits(a, int_domain, depth_cap)
                seen.add(g)
                out.append(g)
    return GroundProgram(out)


def reduct(gp: GroundProgram, interpretation) -> GroundProgram:
    """Rules whose whole body is true in the interpretation."""
    i = set(interpretation)
    return GroundProgram([r for r in gp.rules if r.positive <= i and not (r.negative & i)])


def _is_model(rules, interpretation) -> bool:
    for r in rules:
        if r.positive <= interpretation and not (r.negative & interpretation):
            if r.head is None or r.head not in interpretation:
                return False
    return True


def is_answer_set(gp: GroundProgram, interpretation, cap: int = 20) -> bool:
    i = frozenset(interpretation)
    red = reduct(gp, i).rules
    if not _is_model(red, i):
        return False
    facts = gp.facts
    if not facts <= i:
        return False
    free = sorted(i - facts, key=str)
    if len(free) > cap:
        raise OracleCapError(f"interpretation has {len(free)} non-fact atoms, cap is {cap}")
    for size in range(len(free)):
        for subset in itertools.combinations(free, size):
            if _is_model(red, frozenset(subset) | facts):
                return False
    return True


def enumerate_answer_sets(gp: GroundProgram, cap: int = 20) -> set:
    """Every answer set of ``gp``, found by exhaustive candidate testing."""
    base = gp.base
    if len(base) > cap:
        raise OracleCapError(f"Herbrand base has {len(base)} atoms, cap is {cap}")
    facts = gp.facts
    heads = sorted({r.head for r in gp.rules if r.head is not None} - facts, key=str)
    found = set()
    for size in range(len(heads) + 1):
        for chosen in itertools.combinations(heads, size):
            cand = frozenset(chosen) | facts
            if _is_model(gp.rules, cand) and is_answer_set(gp, cand, cap):
                found.add(cand)
    return found
