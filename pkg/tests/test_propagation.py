import random

import pytest

from heurasp.propagation import (
    DECISION, Assignment, AssignmentError, Nogood, NogoodStore, analyze_and_backjump, classify,
    decide, neg_lit, pos_lit, prop, propagate_fixpoint,
)

A_, B_, C_, D_ = 0, 1, 2, 3


def fresh(n=4):
    A = Assignment(n)
    return A, NogoodStore(A)


def ng(*lits, head=None):
    return Nogood(0, tuple(lits), head)


def test_f_unit():
    A, _ = fresh()
    A.assign(A_, "M", DECISION)
    g = ng(pos_lit(A_), pos_lit(B_))
    u = classify(g, A)
    assert u.kind == "F_unit" and u.literal == pos_lit(B_)
    assert prop(g, A) == {("F", B_)}


def test_m_unit_headless():
    A, _ = fresh()
    g = ng(neg_lit(D_))
    assert classify(g, A).kind == "M_unit"
    assert prop(g, A) == {("M", D_)}


def test_t_unit_with_head():
    A, _ = fresh()
    g = ng(neg_lit(D_), head=D_)
    assert classify(g, A).kind == "T_unit"
    assert prop(g, A) == {("M", D_), ("T", D_)}


def test_t_unit_needs_strong_positive_literals():
    # body nogood {F beta, T x, F c}: with only M x it is M-unit, with T x it is T-unit
    beta, x, c = 0, 1, 2
    A, _ = fresh()
    g = ng(neg_lit(beta), pos_lit(x), neg_lit(c), head=beta)
    A.assign(x, "M", DECISION)
    A.assign(c, "F", DECISION)
    assert classify(g, A).kind == "M_unit" and prop(g, A) == {("M", beta)}
    A.assign(x, "T", DECISION)
    assert classify(g, A).kind == "T_unit" and prop(g, A) == {("M", beta), ("T", beta)}


def test_t_unit_upgrades_must_head():
    A, _ = fresh()
    A.assign(D_, "M", DECISION)
    g = ng(neg_lit(D_), head=D_)
    assert classify(g, A).kind == "T_unit"
    A.assign(D_, "T", DECISION)
    assert classify(g, A).kind == "none" and prop(g, A) == set()


def test_violated_and_none():
    A, _ = fresh()
    g = ng(pos_lit(A_), neg_lit(B_))
    assert classify(g, A).kind == "none" and prop(g, A) == set()
    A.assign(A_, "M", DECISION)
    A.assign(B_, "F", DECISION)
    assert classify(g, A).kind == "violated" and prop(g, A) == set()


def test_fact_versus_constraint():
    A, store = fresh(1)
    store.add([neg_lit(0)], 0)
    assert propagate_fixpoint(store) is None
    assert A.truth(0) == "T"
    A, store = fresh(1)
    store.add([neg_lit(0)], None)
    assert propagate_fixpoint(store) is None
    assert A.truth(0) == "M"


def test_fact_satisfies_constraint():
    A, store = fresh(1)
    store.add([neg_lit(0)], 0)
    store.add([neg_lit(0)], None)
    assert propagate_fixpoint(store) is None and A.truth(0) == "T"


def test_conflict_reported():
    A, store = fresh(1)
    fact = store.add([neg_lit(0)], 0)
    bad = store.add([pos_lit(0)], None)
    assert propagate_fixpoint(store) in (fact, bad)


def test_assignment_consistency():
    A, _ = fresh()
    A.assign(A_, "F", DECISION)
    with pytest.raises(AssignmentError):
        A.assign(A_, "M", DECISION)
    A.assign(B_, "T", DECISION)
    assert A.truth(B_) == "T" and A.m_level[B_] >= 0
    with pytest.raises(AssignmentError):
        A.assign(B_, "F", DECISION)


def test_decide_levels_and_errors():
    A, store = fresh()
    decide(pos_lit(A_), A, store)
    assert A.level == 1 and A.truth(A_) == "T" and A.trail[-1][3] == DECISION
    decide(neg_lit(B_), A, store)
    assert A.level == 2 and A.truth(B_) == "F"
    with pytest.raises(AssignmentError):
        decide(neg_lit(A_), A, store)


def test_single_decision_conflict_learns_unit():
    A, store = fresh(2)
    b, c = 0, 1
    store.add([pos_lit(b), neg_lit(c)])
    store.add([pos_lit(b), pos_lit(c)])
    decide(pos_lit(b), A, store)
    conflict = propagate_fixpoint(store)
    assert conflict is not None
    gid, level = analyze_and_backjump(store, conflict)
    assert level == 0 and store.nogoods[gid].literals == (pos_lit(b),)
    assert propagate_fixpoint(store) is None and A.truth(b) == "F"


def test_conflict_at_level_zero_is_unsat():
    A, store = fresh(1)
    store.add([neg_lit(0)], 0)
    bad = store.add([pos_lit(0)])
    assert analyze_and_backjump(store, propagate_fixpoint(store) or bad) is None


def test_backjump_restores_level_state():
    A, store = fresh(4)
    store.add([pos_lit(0), neg_lit(1)])  # T 0 -> M 1
    store.add([pos_lit(2), pos_lit(3)])  # T 2 -> F 3
    decide(pos_lit(0), A, store)
    propagate_fixpoint(store)
    snapshot = list(A.trail)
    decide(pos_lit(2), A, store)
    propagate_fixpoint(store)
    assert A.truth(3) == "F"
    store.backjump(1)
    assert A.trail == snapshot and A.truth(3) == "U" and A.truth(1) == "M"


def test_m_and_t_levels_can_differ():
    A, store = fresh(2)
    store.add([neg_lit(1)])  # 1 must be true
    store.add([neg_lit(1), pos_lit(0)], 1)  # 0 true justifies 1
    propagate_fixpoint(store)
    decide(pos_lit(0), A, store)
    propagate_fixpoint(store)
    assert A.m_level[1] == 0 and A.t_level[1] == 1
    store.backjump(0)
    assert A.truth(1) == "M"


@pytest.mark.parametrize("seed", range(40))
def test_random_fixpoints_leave_no_units(seed):
    rng = random.Random(seed)
    n = 8
    A, store = fresh(n)
    for _ in range(12):
        atoms = rng.sample(range(n), rng.randint(1, 3))
        lits = [pos_lit(a) if rng.random() < 0.5 else neg_lit(a) for a in atoms]
        heads = [x >> 1 for x in lits if not x & 1]
        store.add(lits, rng.choice(heads) if heads and rng.random() < 0.5 else None)
    for _ in range(20):
        conflict = propagate_fixpoint(store)
        if conflict is not None:
            if analyze_and_backjump(store, conflict) is None:
                return
            continue
        assert store.check_fixpoint() == []
        free = [a for a in range(n) if A.is_unassigned(a)]
        if not free:
            return
        a = rng.choice(free)
        decide(pos_lit(a) if rng.random() < 0.5 else neg_lit(a), A, store)
