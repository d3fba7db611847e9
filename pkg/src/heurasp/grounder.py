"""Lazy grounding of rules and heuristic directives into nogoods.

A rule is instantiated only once every atom of its positive body has been
assigned M or T at some point (strict grounding); a directive once every
positive condition atom signed T or MT has. Working memory only grows: atoms
stay in it across backjumps, so an instance is produced at most once per
search and its nogoods are kept forever.

Besides the rule and directive translations, the grounder emits one support
nogood ``{T a, F beta_1, ..., F beta_k}`` per atom ``a`` as soon as every rule
instance that could ever derive ``a`` has been instantiated. Whether that set
is known in advance is decided per rule: the head must determine all rule
variables (possibly through ``V = expr`` built-ins), and instances whose body
contains a false built-in or a non-fact atom of a predicate defined only by
facts are ignored.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache

from .ast import (
    Arithmetic, Atom, Constant, EvaluationError, Function, Integer, Interval, Variable,
    apply, compare_terms, evaluate, is_comparison, is_ground,
)
from .ast import vars as term_vars
from .propagation import Nogood, neg_lit, pos_lit

__all__ = [
    "GroundingError", "InternalAtom", "AtomTable", "GroundRuleRecord", "HeuristicRecord",
    "WorkingMemory", "Grounder", "ground_step", "rule_to_nogoods", "directive_to_nogoods",
]

GATE_KINDS = ("heu_on_t", "heu_on_mt", "heu_on_f", "heu_off_t", "heu_off_mt", "heu_off_f")


class GroundingError(RuntimeError):
    pass


@dataclass(frozen=True)
class InternalAtom:
    """Solver-internal atom: a rule body, a rule gate or a directive gate."""

    kind: str
    owner: int

    def __str__(self):
        return f"_{self.kind}({self.owner})"


class AtomTable:
    def __init__(self):
        self.atoms: list = []
        self.ids: dict = {}

    def __len__(self):
        return len(self.atoms)

    def get(self, atom):
        return self.ids.get(atom)

    def intern(self, atom) -> tuple[int, bool]:
        aid = self.ids.get(atom)
        if aid is not None:
            return aid, False
        aid = len(self.atoms)
        self.atoms.append(atom)
        self.ids[atom] = aid
        return aid, True

    def is_internal(self, aid: int) -> bool:
        return isinstance(self.atoms[aid], InternalAtom)

    def name(self, aid: int) -> str:
        return str(self.atoms[aid])


@dataclass
class GroundRuleRecord:
    id: int
    rule_id: int
    head: Atom | None
    positive: tuple
    negative: tuple
    head_id: int | None = None
    pos_ids: tuple = ()
    neg_ids: tuple = ()
    beta: int | None = None
    choice_on: int | None = None
    choice_off: int | None = None
    nogoods: list = field(default_factory=list)

    @property
    def is_fact(self):
        return self.head is not None and not self.positive and not self.negative

    def __str__(self):
        body = [str(a) for a in self.positive] + [f"not {a}" for a in self.negative]
        head = "" if self.head is None else str(self.head)
        return f"{head} :- {', '.join(body)}." if body else f"{head}."


@dataclass
class HeuristicRecord:
    id: int
    directive_id: int
    directive: object  # the ground canonical directive
    head: Atom
    head_id: int
    head_sign: str
    weight: int
    level: int
    heu_on_t: int
    heu_on_mt: int
    heu_on_f: int
    heu_off_t: int
    heu_off_mt: int
    heu_off_f: int
    origin: int | None = None
    origin_binding: tuple = ()
    nogoods: list = field(default_factory=list)

    @property
    def gates(self) -> tuple:
        return (self.heu_on_t, self.heu_on_mt, self.heu_on_f,
                self.heu_off_t, self.heu_off_mt, self.heu_off_f)


# -- matching ------------------------------------------------------------------

@lru_cache(maxsize=None)
def _vars(term) -> frozenset:
    return frozenset(term_vars(term))


def _match(pattern, value, sigma, deferred):
    """Match a term pattern against a ground term, extending ``sigma`` in place.

    Arithmetic whose variables are not yet bound is postponed to ``deferred``.
    """
    if isinstance(pattern, Variable):
        bound = sigma.get(pattern.name)
        if bound is None:
            sigma[pattern.name] = value
            return True
        return bound == value
    if isinstance(pattern, (Constant, Integer)):
        return pattern == value
    if isinstance(pattern, Function):
        if not isinstance(value, Function) or value.symbol != pattern.symbol \
                or len(value.args) != len(pattern.args):
            return False
        return all(_match(p, v, sigma, deferred) for p, v in zip(pattern.args, value.args))
    if isinstance(pattern, (Arithmetic, Interval)):
        if _vars(pattern) <= sigma.keys():
            try:
                return apply(pattern, sigma) == value
            except EvaluationError:
                return False
        deferred.append((pattern, value))
        return True
    raise TypeError(pattern)


def _ground_value(term, sigma):
    """Value of ``term`` under sigma, or None if some variable is unbound."""
    if not _vars(term) <= sigma.keys():
        return None
    return apply(term, sigma)


class WorkingMemory:
    """Ground atoms that have been M or T, indexed for joins."""

    def __init__(self):
        self.atoms: set = set()
        self.by_sig: dict = defaultdict(list)
        self.by_arg: dict = defaultdict(list)
        # per rule / directive: keys of substitutions already instantiated
        self.seen_rules: dict = defaultdict(set)
        self.seen_directives: dict = defaultdict(set)

    def __contains__(self, atom):
        return atom in self.atoms

    def __len__(self):
        return len(self.atoms)

    def add(self, atom: Atom) -> bool:
        if atom in self.atoms:
            return False
        self.atoms.add(atom)
        sig = atom.signature
        self.by_sig[sig].append(atom)
        for i, v in enumerate(atom.args):
            self.by_arg[(sig, i, v)].append(atom)
        return True

    def candidates(self, pattern: Atom, sigma):
        """Atoms possibly matching ``pattern`` under ``sigma`` (may be a superset)."""
        sig = pattern.signature
        best = None
        for i, arg in enumerate(pattern.args):
            if isinstance(arg, (Constant, Integer)):
                v = arg
            elif isinstance(arg, Variable) and arg.name in sigma:
                v = sigma[arg.name]
            else:
                continue
            lst = self.by_arg.get((sig, i, v), ())
            if best is None or len(lst) < len(best):
                best = lst
                if not best:
                    break
        return self.by_sig.get(sig, ()) if best is None else best


# -- compiled rules and directives -------------------------------------------------

@dataclass
class _Compiled:
    index: int
    source: object
    binders: tuple  # positive atoms that drive grounding
    builtins: tuple  # positive comparisons
    variables: tuple
    by_sig: dict = field(default_factory=dict)  # signature -> binder positions


def _compile(index, source, binders, builtins):
    c = _Compiled(index, source, tuple(binders), tuple(builtins), tuple(sorted(term_vars(source))))
    for i, b in enumerate(c.binders):
        c.by_sig.setdefault(b.signature, []).append(i)
    return c


def _check_deferred(deferred, sigma):
    keep = []
    for term, value in deferred:
        v = _ground_value(term, sigma)
        if v is None:
            keep.append((term, value))
        elif v != value:
            return None
    return keep


def _join(wm: WorkingMemory, patterns: list, builtins: list, sigma: dict, deferred: list):
    """Yield every extension of ``sigma`` satisfying patterns and built-ins."""
    try:
        deferred = _check_deferred(deferred, sigma)
    except EvaluationError:
        return
    if deferred is None:
        return
    builtins = list(builtins)
    progress = True
    while progress:
        progress = False
        for b in list(builtins):
            left, right = b.args
            try:
                lv, rv = _ground_value(left, sigma), _ground_value(right, sigma)
            except EvaluationError:
                return
            if lv is not None and rv is not None:
                if not compare_terms(b.predicate, lv, rv):
                    return
                builtins.remove(b)
                progress = True
            elif b.predicate == "=" and isinstance(left, Variable) and lv is None and rv is not None:
                sigma = {**sigma, left.name: rv}
                builtins.remove(b)
                progress = True
            elif b.predicate == "=" and isinstance(right, Variable) and rv is None and lv is not None:
                sigma = {**sigma, right.name: lv}
                builtins.remove(b)
                progress = True
        if progress:
            try:
                deferred = _check_deferred(deferred, sigma)
            except EvaluationError:
                return
            if deferred is None:
                return
    if not patterns:
        if builtins or deferred:
            raise GroundingError("unsafe variables: built-ins or arithmetic left unbound")
        yield sigma
        return
    # fully bound patterns first, then the one with the fewest candidates;
    # arithmetic with free variables must wait
    best, best_cands, ground = None, None, False
    for i, p in enumerate(patterns):
        if any(isinstance(a, (Arithmetic, Interval)) and not _vars(a) <= sigma.keys() for a in p.args):
            continue
        if _vars(p) <= sigma.keys():
            best, ground = i, True
            break
        cands = wm.candidates(p, sigma)
        if best is None or len(cands) < len(best_cands):
            best, best_cands = i, cands
    if best is None:
        raise GroundingError("cannot order positive body: circular arithmetic")
    pattern = patterns[best]
    rest = patterns[:best] + patterns[best + 1:]
    if ground:
        try:
            ground = apply(pattern, sigma)
        except EvaluationError:
            return
        if ground in wm.atoms:
            yield from _join(wm, rest, builtins, sigma, deferred)
        return
    for cand in list(best_cands):
        s = dict(sigma)
        d = list(deferred)
        if all(_match(p, v, s, d) for p, v in zip(pattern.args, cand.args)):
            yield from _join(wm, rest, builtins, s, d)


# -- translation --------------------------------------------------------------------

def rule_to_nogoods(g: GroundRuleRecord) -> list:
    """Nogoods of a ground rule (ids left at -1; the store assigns them)."""
    body = tuple(pos_lit(a) for a in g.pos_ids) + tuple(neg_lit(a) for a in g.neg_ids)
    if g.head_id is None:
        return [Nogood(-1, body, None, "constraint")]
    if g.beta is None:
        return [Nogood(-1, (neg_lit(g.head_id),), g.head_id, "fact")]
    beta = g.beta
    out = [
        Nogood(-1, (neg_lit(beta),) + body, beta, "body"),
        Nogood(-1, (neg_lit(g.head_id), pos_lit(beta)), g.head_id, "head"),
    ]
    out += [Nogood(-1, (pos_lit(beta), neg_lit(a)), None, "body") for a in g.pos_ids]
    out += [Nogood(-1, (pos_lit(beta), pos_lit(a)), None, "body") for a in g.neg_ids]
    if g.neg_ids:
        out.append(Nogood(-1, (neg_lit(g.choice_on),) + tuple(pos_lit(a) for a in g.pos_ids),
                          g.choice_on, "choice_on"))
        out += [Nogood(-1, (neg_lit(g.choice_off), pos_lit(a)), g.choice_off, "choice_off")
                for a in g.neg_ids]
    return out


def directive_to_nogoods(h: HeuristicRecord, ids: dict) -> list:
    """Gate nogoods of a ground canonical directive.

    ``ids`` maps each ground condition atom to its atom id. Comparisons have
    already been decided at grounding time and are skipped.
    """
    d = h.directive
    groups = {"T": [], "MT": [], "F": []}
    for lit in d.positive_condition:
        if is_comparison(lit.atom):
            continue
        groups[_sign_name(lit.signs)].append(ids[lit.atom])
    out = [
        Nogood(-1, (neg_lit(h.heu_on_t),) + tuple(pos_lit(a) for a in groups["T"]), h.heu_on_t, "heu_on"),
        Nogood(-1, (neg_lit(h.heu_on_mt),) + tuple(pos_lit(a) for a in groups["MT"]), h.heu_on_mt, "heu_on"),
        Nogood(-1, (neg_lit(h.heu_on_f),) + tuple(neg_lit(a) for a in groups["F"]), h.heu_on_f, "heu_on"),
    ]
    gate = {"T": h.heu_off_t, "MT": h.heu_off_mt, "F": h.heu_off_f}
    for lit in d.negative_condition:
        if is_comparison(lit.atom):
            continue
        name = _sign_name(lit.signs)
        a = ids[lit.atom]
        body = neg_lit(a) if name == "F" else pos_lit(a)
        out.append(Nogood(-1, (neg_lit(gate[name]), body), gate[name], "heu_off"))
    return out


def _sign_name(signs) -> str:
    if signs == frozenset("T"):
        return "T"
    if signs == frozenset("MT"):
        return "MT"
    if signs == frozenset("F"):
        return "F"
    raise GroundingError(f"non-canonical sign set {''.join(sorted(signs))} reached the grounder")


# -- the grounder -------------------------------------------------------------------

class Grounder:
    def __init__(self, program):
        self.table = AtomTable()
        self.wm = WorkingMemory()
        self.rule_records: list = []
        self.heuristic_records: list = []
        self.records_by_head: dict = defaultdict(list)
        self.rules = []
        self.directives = []
        self.rule_triggers: dict = defaultdict(list)
        self.directive_triggers: dict = defaultdict(list)
        self._out_nogoods: list = []
        self._new_rules: list = []
        self._new_heuristics: list = []

        for i, r in enumerate(program.rules):
            c = _compile(i, r, [a for a in r.positive_body if not is_comparison(a)],
                         [a for a in r.positive_body if is_comparison(a)])
            self.rules.append(c)
            for sig in c.by_sig:
                self.rule_triggers[sig].append(c)
        for i, d in enumerate(program.directives):
            binders = [h.atom for h in d.positive_condition
                       if not is_comparison(h.atom) and h.signs in (frozenset("T"), frozenset("MT"))]
            builtins = [h.atom for h in d.positive_condition if is_comparison(h.atom)]
            c = _compile(i, d, binders, builtins)
            self.directives.append(c)
            for sig in c.by_sig:
                self.directive_triggers[sig].append(c)

        self.facts = {r.head for r in program.rules if r.is_fact}
        self.fact_wm = WorkingMemory()
        for a in self.facts:
            self.fact_wm.add(a)
        self.rules_by_head_sig: dict = defaultdict(list)
        for c in self.rules:
            if c.source.head is not None:
                self.rules_by_head_sig[c.source.head.signature].append(c)
        self.derived_sigs = {c.source.head.signature for c in self.rules
                             if c.source.head is not None and not c.source.is_fact}
        # support bookkeeping: instance key -> atoms waiting for it
        self._support_waiting: dict = defaultdict(list)
        self._support_missing: dict = {}
        self._support_instances: dict = {}
        self._instance_beta: dict = {}
        self.support_nogoods = 0

    # atoms
    def atom_id(self, atom) -> int:
        aid, new = self.table.intern(atom)
        if new and isinstance(atom, Atom):
            self._plan_support(atom, aid)
        return aid

    def _internal(self, kind, owner) -> int:
        return self.table.intern(InternalAtom(kind, owner))[0]

    def is_internal(self, aid) -> bool:
        return self.table.is_internal(aid)

    # support nogoods
    def _required_instances(self, atom: Atom):
        """Instance keys that could derive ``atom``; None if not enumerable, 'fact' for facts.

        Body variables missing from the head are enumerated over the facts of
        predicates that no proper rule derives.
        """
        if atom in self.facts:
            return "fact"
        required = []
        for c in self.rules_by_head_sig.get(atom.signature, ()):
            rule = c.source
            if rule.is_fact:
                continue
            sigma, deferred = {}, []
            if not all(_match(p, v, sigma, deferred) for p, v in zip(rule.head.args, atom.args)):
                continue
            edb = [b for b in rule.positive_body
                   if not is_comparison(b) and b.signature not in self.derived_sigs]
            bindable = set(sigma) | {v for b in edb for v in term_vars(b)}
            builtins = [b for b in rule.positive_body if is_comparison(b)]
            usable, changed = [], True
            while changed:
                changed = False
                for b in builtins:
                    if b in usable:
                        continue
                    left, right = b.args
                    if term_vars(b) <= bindable:
                        usable.append(b)
                        changed = True
                    elif b.predicate == "=":
                        for var, expr in ((left, right), (right, left)):
                            if isinstance(var, Variable) and term_vars(expr) <= bindable:
                                bindable.add(var.name)
                                usable.append(b)
                                changed = True
                                break
            if not set(c.variables) <= bindable:
                return None
            try:
                bindings = list(_join(self.fact_wm, edb, usable, sigma, deferred))
            except GroundingError:
                return None
            for s in bindings:
                try:
                    inst = apply(rule, s)
                except EvaluationError:
                    continue
                if any(is_comparison(b) and not compare_terms(b.predicate, *b.args) for b in inst.positive_body):
                    continue
                if any(is_comparison(b) and compare_terms(b.predicate, *b.args) for b in inst.negative_body):
                    continue
                if any(not is_comparison(b) and b.signature not in self.derived_sigs and b not in self.facts
                       for b in inst.positive_body):
                    continue
                required.append((c.index, tuple(s[v] for v in c.variables)))
        return required

    def _plan_support(self, atom: Atom, aid: int):
        required = self._required_instances(atom)
        if required is None or required == "fact":
            return
        # an unconditional instance makes the atom a fact: nothing to add
        if any(k in self._instance_beta and self._instance_beta[k] is None for k in required):
            return
        missing = 0
        for key in required:
            if key not in self._instance_beta:
                self._support_waiting[key].append(aid)
                missing += 1
        self._support_instances[aid] = required
        self._support_missing[aid] = missing
        if missing == 0:
            self._emit_support(aid)

    def _emit_support(self, aid: int):
        lits = [pos_lit(aid)] + [neg_lit(self._instance_beta[k]) for k in self._support_instances.pop(aid)]
        del self._support_missing[aid]
        self._out_nogoods.append(Nogood(-1, tuple(lits), None, "support"))
        self.support_nogoods += 1

    def _instance_done(self, key, beta):
        self._instance_beta[key] = beta
        for aid in self._support_waiting.pop(key, ()):
            if aid not in self._support_missing:
                continue
            if beta is None:
                del self._support_missing[aid]
                del self._support_instances[aid]
                continue
            self._support_missing[aid] -= 1
            if self._support_missing[aid] == 0:
                self._emit_support(aid)

    # instantiation
    def _instantiate_rule(self, c: _Compiled, sigma: dict):
        key = tuple(sigma[v] for v in c.variables)
        seen = self.wm.seen_rules[c.index]
        if key in seen:
            return
        seen.add(key)
        rule = c.source
        try:
            head = None if rule.head is None else apply(rule.head, sigma)
            pos = tuple(apply(a, sigma) for a in rule.positive_body if not is_comparison(a))
            negs = [apply(a, sigma) for a in rule.negative_body]
        except EvaluationError:
            return
        neg = []
        for a in negs:
            if is_comparison(a):
                if compare_terms(a.predicate, *a.args):
                    return
            else:
                neg.append(a)
        rid = len(self.rule_records)
        rec = GroundRuleRecord(rid, c.index, head, pos, tuple(neg))
        rec.pos_ids = tuple(self.atom_id(a) for a in pos)
        rec.neg_ids = tuple(self.atom_id(a) for a in neg)
        if head is not None:
            rec.head_id = self.atom_id(head)
            if pos or neg:
                rec.beta = self._internal("beta", rid)
                if neg:
                    rec.choice_on = self._internal("choice_on", rid)
                    rec.choice_off = self._internal("choice_off", rid)
                self.records_by_head[rec.head_id].append(rid)
        self.rule_records.append(rec)
        self._new_rules.append(rec)
        for g in rule_to_nogoods(rec):
            self._out_nogoods.append(g)
            rec.nogoods.append(g)
        if head is not None:
            self._instance_done((c.index, key), rec.beta)

    def _instantiate_directive(self, c: _Compiled, sigma: dict):
        key = tuple(sigma[v] for v in c.variables)
        seen = self.wm.seen_directives[c.index]
        if key in seen:
            return
        seen.add(key)
        d = c.source
        try:
            gd = apply(d, sigma)
        except EvaluationError:
            return
        for h in gd.positive_condition:
            if is_comparison(h.atom) and not compare_terms(h.atom.predicate, *h.atom.args):
                return
        for h in gd.negative_condition:
            if is_comparison(h.atom) and compare_terms(h.atom.predicate, *h.atom.args):
                return
        if not isinstance(gd.weight, Integer) or not isinstance(gd.level, Integer):
            raise GroundingError(f"heuristic annotation [{gd.weight}@{gd.level}] is not an integer")
        hid = len(self.heuristic_records)
        ids = {h.atom: self.atom_id(h.atom) for h in gd.condition if not is_comparison(h.atom)}
        gates = [self._internal(kind, hid) for kind in GATE_KINDS]
        rec = HeuristicRecord(hid, c.index, gd, gd.head.atom, self.atom_id(gd.head.atom), gd.head_sign,
                              gd.weight.value, gd.level.value, *gates,
                              origin=d.origin, origin_binding=gd.origin_binding)
        self.heuristic_records.append(rec)
        self._new_heuristics.append(rec)
        for g in directive_to_nogoods(rec, ids):
            self._out_nogoods.append(g)
            rec.nogoods.append(g)

    def _flush(self):
        out = (self._new_rules, self._new_heuristics, self._out_nogoods)
        self._new_rules, self._new_heuristics, self._out_nogoods = [], [], []
        return out

    def initial(self):
        """Instantiate everything whose binding atoms are empty."""
        for c in self.rules:
            if not c.binders:
                for sigma in _join(self.wm, [], list(c.builtins), {}, []):
                    self._instantiate_rule(c, sigma)
        for c in self.directives:
            if not c.binders:
                for sigma in _join(self.wm, [], list(c.builtins), {}, []):
                    self._instantiate_directive(c, sigma)
        return self._flush()

    def ground_step(self, newly_true):
        """Add atoms to working memory and instantiate what they enable."""
        fresh = [a for a in newly_true if self.wm.add(a)]
        for atom in fresh:
            sig = atom.signature
            for c in self.rule_triggers.get(sig, ()):
                for sigma in self._seeded(c, atom):
                    self._instantiate_rule(c, sigma)
            for c in self.directive_triggers.get(sig, ()):
                for sigma in self._seeded(c, atom):
                    self._instantiate_directive(c, sigma)
        return self._flush()

    def _seeded(self, c: _Compiled, atom: Atom):
        for i in c.by_sig[atom.signature]:
            pattern = c.binders[i]
            sigma, deferred = {}, []
            if not all(_match(p, v, sigma, deferred) for p, v in zip(pattern.args, atom.args)):
                continue
            rest = list(c.binders[:i] + c.binders[i + 1:])
            yield from list(_join(self.wm, rest, list(c.builtins), sigma, deferred))


def ground_step(newly_true, grounder: Grounder):
    return grounder.ground_step(newly_true)
