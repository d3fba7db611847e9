"""Selection of heuristic decisions from ground directive records."""

from __future__ import annotations

import heapq

from .ast import compare_terms, is_comparison
from .propagation import neg_lit, pos_lit

__all__ = [
    "HeuristicError", "is_solving_satisfied", "is_solving_applicable", "DirectiveHeap",
    "select_directive", "choose_literal", "applicable_rule", "reference_applicability",
]


class HeuristicError(RuntimeError):
    """Several applicable rules could realise the selected heuristic decision."""

    def __init__(self, head, rule_ids, rules=()):
        self.head = head
        self.rule_ids = tuple(rule_ids)
        listing = "; ".join(f"#{i}: {r}" for i, r in zip(rule_ids, rules)) or ", ".join(map(str, rule_ids))
        super().__init__(f"heuristic decision on {head} is ambiguous: "
                         f"{len(self.rule_ids)} applicable rules derive it ({listing})")


def is_solving_satisfied(h, A) -> bool:
    t = A.truth
    return (t(h.heu_on_t) == "T" and t(h.heu_on_mt) in ("M", "T") and t(h.heu_on_f) == "T"
            and t(h.heu_off_t) != "T" and t(h.heu_off_mt) not in ("M", "T") and t(h.heu_off_f) != "T")


def is_solving_applicable(h, A) -> bool:
    return A.truth(h.head_id) in ("U", "M") and is_solving_satisfied(h, A)


class DirectiveHeap:
    """Applicable directive records ordered by (level, weight), lowest id first on ties.

    ``refresh`` must be called for every record whose gates or head changed;
    stale heap entries are skipped lazily.
    """

    def __init__(self, A):
        self.A = A
        self.heap: list = []
        self.members: set = set()
        self.records: dict = {}
        self.by_atom: dict = {}

    def add(self, rec):
        self.records[rec.id] = rec
        for a in (rec.head_id,) + rec.gates:
            self.by_atom.setdefault(a, []).append(rec.id)
        self.refresh(rec.id)

    def refresh(self, rid):
        rec = self.records[rid]
        if is_solving_applicable(rec, self.A):
            if rid not in self.members:
                self.members.add(rid)
                heapq.heappush(self.heap, (-rec.level, -rec.weight, rid))
        else:
            self.members.discard(rid)

    def touch(self, atom):
        for rid in self.by_atom.get(atom, ()):
            self.refresh(rid)

    def _clean(self):
        heap = self.heap
        while heap and heap[0][2] not in self.members:
            heapq.heappop(heap)

    def top(self):
        self._clean()
        return self.records[self.heap[0][2]] if self.heap else None

    def ordered(self):
        """Members in priority order (pops and restores)."""
        taken = []
        try:
            while True:
                self._clean()
                if not self.heap:
                    return
                entry = heapq.heappop(self.heap)
                taken.append(entry)
                self.members.discard(entry[2])
                yield self.records[entry[2]]
        finally:
            for entry in taken:
                if entry[2] not in self.members and is_solving_applicable(self.records[entry[2]], self.A):
                    self.members.add(entry[2])
                    heapq.heappush(self.heap, entry)

    def __len__(self):
        self._clean()
        return len(self.members)


def select_directive(heap: DirectiveHeap):
    return heap.top()


def applicable_rule(rec, A) -> bool:
    return all(A.t_level[a] >= 0 for a in rec.pos_ids) and not any(A.m_level[a] >= 0 for a in rec.neg_ids)


def choose_literal(h, A, grounder):
    """Decision literal on the body atom of the rule deriving the directive head.

    Returns None when no applicable rule can take the decision; raises
    ``HeuristicError`` when more than one could.
    """
    open_rules = []
    for rid in grounder.records_by_head.get(h.head_id, ()):
        r = grounder.rule_records[rid]
        b = r.beta
        if A.f_level[b] >= 0 or A.t_level[b] >= 0:
            continue
        if applicable_rule(r, A):
            open_rules.append(r)
    if len(open_rules) > 1:
        raise HeuristicError(h.head, [r.id for r in open_rules], open_rules)
    if not open_rules:
        return None
    b = open_rules[0].beta
    if h.head_sign == "T":
        return pos_lit(b)
    if A.m_level[b] >= 0:
        return None
    return neg_lit(b)


def _holds(truth, hatom) -> bool:
    a = hatom.atom
    if is_comparison(a):
        return compare_terms(a.predicate, *a.args)
    v = truth(a)
    return v != "U" and v in hatom.signs


def reference_applicability(d, truth, rules) -> bool:
    """Declarative applicability of a ground directive.

    ``truth`` maps a ground atom to "T", "M", "F" or "U"; ``rules`` are ground
    rules with ``head``, ``positive`` and ``negative`` attributes.
    """
    if not all(_holds(truth, h) for h in d.positive_condition):
        return False
    if any(_holds(truth, h) for h in d.negative_condition):
        return False
    head = d.head.atom
    if truth(head) not in ("U", "M"):
        return False
    return any(r.head == head and all(truth(a) == "T" for a in r.positive)
               and not any(truth(a) in ("M", "T") for a in r.negative) for r in rules)
