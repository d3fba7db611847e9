import sys

import pytest

from corpus import CORPUS
from heurasp.grounder import HeuristicRecord
from heurasp.heuristics import (
    DirectiveHeap, HeuristicError, choose_literal, is_solving_applicable, is_solving_satisfied,
    reference_applicability, select_directive,
)
from heurasp.parser import parse_program
from heurasp.propagation import DECISION, Assignment, classify, neg_lit, pos_lit
from heurasp.solver import Solver, SolveConfig
from heurasp.transform import canonicalize


def record(rid, base, weight=0, level=0):
    """Record whose head is atom ``base`` and whose gates are the next six atoms."""
    return HeuristicRecord(rid, rid, None, None, base, "T", weight, level, *range(base + 1, base + 7))


def open_gates(A, h):
    for g in (h.heu_on_t, h.heu_on_mt, h.heu_on_f):
        A.assign(g, "T", DECISION)


def test_satisfied_when_on_gates_true():
    A = Assignment(7)
    h = record(0, 0)
    assert not is_solving_satisfied(h, A)
    open_gates(A, h)
    assert is_solving_satisfied(h, A)


@pytest.mark.parametrize("gate,value,ok", [
    ("heu_off_t", "M", True), ("heu_off_t", "T", False),
    ("heu_off_mt", "M", False), ("heu_off_mt", "T", False), ("heu_off_mt", "F", True),
    ("heu_off_f", "T", False), ("heu_off_f", "M", True),
])
def test_off_gates(gate, value, ok):
    A = Assignment(7)
    h = record(0, 0)
    open_gates(A, h)
    A.assign(getattr(h, gate), value, DECISION)
    assert is_solving_satisfied(h, A) == ok


def test_on_mt_accepts_must():
    A = Assignment(7)
    h = record(0, 0)
    A.assign(h.heu_on_t, "T", DECISION)
    A.assign(h.heu_on_f, "T", DECISION)
    A.assign(h.heu_on_mt, "M", DECISION)
    assert is_solving_satisfied(h, A)


@pytest.mark.parametrize("head,ok", [(None, True), ("M", True), ("T", False), ("F", False)])
def test_applicability_depends_on_head(head, ok):
    A = Assignment(7)
    h = record(0, 0)
    open_gates(A, h)
    if head:
        A.assign(h.head_id, head, DECISION)
    assert is_solving_applicable(h, A) == ok


def _heap(records, n):
    A = Assignment(n)
    heap = DirectiveHeap(A)
    for h in records:
        open_gates(A, h)
    for h in records:
        heap.add(h)
    return A, heap


def test_select_highest_weight():
    r10, r11 = record(0, 0, weight=1), record(1, 7, weight=2)
    _, heap = _heap([r10, r11], 14)
    assert select_directive(heap) is r11


def test_select_level_before_weight_and_lowest_id_on_ties():
    recs = [record(0, 0, weight=9, level=0), record(1, 7, weight=1, level=1), record(2, 14, weight=1, level=1)]
    _, heap = _heap(recs, 21)
    assert select_directive(heap) is recs[1]
    _, heap = _heap(list(reversed(recs)), 21)
    assert select_directive(heap) is recs[1]


def test_select_empty_heap():
    _, heap = _heap([], 0)
    assert select_directive(heap) is None


def test_heap_follows_assignment_changes():
    recs = [record(0, 0, weight=5), record(1, 7, weight=1)]
    A, heap = _heap(recs, 14)
    A.assign(recs[0].head_id, "T", DECISION)
    heap.touch(recs[0].head_id)
    assert select_directive(heap) is recs[1] and heap.members == {1}


def _first_state(text, **kw):
    p = canonicalize(parse_program(text))
    seen = {}

    def grab(solver):
        seen.setdefault("s", solver)
        raise StopIteration

    with pytest.raises(StopIteration):
        Solver(p, SolveConfig(on_state=grab, **kw)).run()
    return seen["s"]


SECTION = "x(1..2). b(X) :- x(X), not c(X). c(X) :- x(X), not b(X).\n"


def test_choose_literal_section_example():
    s = _first_state(SECTION + "#heuristic b(2). [1]")
    (h,) = [h for h in s.grounder.heuristic_records if str(h.head) == "b(2)"]
    assert is_solving_applicable(h, s.A)
    lit = choose_literal(h, s.A, s.grounder)
    (rec,) = [r for r in s.grounder.rule_records if str(r) == "b(2) :- x(2), not c(2)."]
    assert lit == pos_lit(rec.beta)


def test_choose_literal_false_sign():
    s = _first_state(SECTION + "#heuristic F b(1). [1]")
    (h,) = [h for h in s.grounder.heuristic_records if str(h.head) == "b(1)"]
    (rec,) = [r for r in s.grounder.rule_records if str(r) == "b(1) :- x(1), not c(1)."]
    assert choose_literal(h, s.A, s.grounder) == neg_lit(rec.beta)


def test_choose_literal_two_rules_is_fatal():
    s = _first_state("p. q. { h } :- p. { h } :- q.\n#heuristic h.")
    h = s.grounder.heuristic_records[0]
    with pytest.raises(HeuristicError) as exc:
        choose_literal(h, s.A, s.grounder)
    assert len(exc.value.rule_ids) == 2
    assert "p" in str(exc.value) and "q" in str(exc.value)


def test_directive_11_applicable_initially():
    text = ("{ a(X) } :- item(X). item(4). item(5).\n"
            "#heuristic a(4) : not a(5). [2]")
    s = _first_state(text)
    (h,) = s.grounder.heuristic_records
    assert is_solving_satisfied(h, s.A)


class _R:
    def __init__(self, head, positive=(), negative=()):
        self.head, self.positive, self.negative = head, positive, negative


def _atoms(text):
    d = parse_program(text).directives[0]
    return d, {str(h.atom): h.atom for h in d.condition} | {str(d.head.atom): d.head.atom}


def test_reference_applicability_examples():
    d, at = _atoms("#heuristic F a : TM b, T c, not TMF e.")
    rule = _R(at["a"])
    values = {"b": "M", "c": "T", "e": "U", "a": "U"}
    assert reference_applicability(d, lambda x: values[str(x)], [rule])
    values["e"] = "M"
    assert not reference_applicability(d, lambda x: values[str(x)], [rule])
    values["e"] = "U"
    assert not reference_applicability(d, lambda x: values[str(x)], [])
    blocked = _R(at["a"], negative=(at["b"],))
    assert not reference_applicability(d, lambda x: values[str(x)], [blocked])


def test_gate_truth_matches_defining_nogoods():
    """A gate atom is T (M) exactly when one of its defining nogoods is T-unit (M-unit) without it."""
    checked = 0

    def check(s):
        nonlocal checked
        A = s.A
        for h in s.grounder.heuristic_records:
            by_gate = {}
            for g in h.nogoods:
                by_gate.setdefault(g.head, []).append(g)
            for gate, defs in by_gate.items():
                truth = A.truth(gate)
                saved = (A.f_level[gate], A.m_level[gate], A.t_level[gate])
                A.f_level[gate] = A.m_level[gate] = A.t_level[gate] = -1
                kinds = {classify(g, A).kind for g in defs}
                A.f_level[gate], A.m_level[gate], A.t_level[gate] = saved
                assert (truth == "T") == ("T_unit" in kinds)
                assert (truth in ("M", "T")) == bool(kinds & {"T_unit", "M_unit"})
                checked += 1

    for name, text in CORPUS.items():
        if "#heuristic" in text:
            Solver(canonicalize(parse_program(text)), SolveConfig(max_models=0, on_state=check)).run()
    assert checked > 100
