import pytest

from heurasp.ast import Atom
from heurasp.oracle import (
    GroundProgram, GroundRule, OracleCapError, enumerate_answer_sets, is_answer_set, naive_ground,
    reduct,
)
from heurasp.parser import parse_program
from heurasp.transform import canonicalize

a, b, d = Atom("a"), Atom("b"), Atom("d")


def ground(text, **kw):
    return naive_ground(canonicalize(parse_program(text)), **kw)


def test_ground_section_program():
    gp = ground("x(1..2). b(X) :- x(X), not c(X).")
    assert sorted(map(str, gp.rules)) == ["b(1) :- x(1), not c(1).", "b(2) :- x(2), not c(2).", "x(1).", "x(2)."]


def test_ground_empty():
    assert ground("").rules == []


def test_ground_depth_cap():
    with pytest.raises(OracleCapError):
        ground("p(f(g(h(1)))).")
    assert len(ground("p(f(g(1))).").rules) == 1


def test_ground_int_domain():
    with pytest.raises(OracleCapError):
        ground("n(0). n(Y) :- n(X), Y = X+1.", int_domain=(0, 10))


def test_builtins_drop_instances():
    gp = ground("p(1..3). q(X) :- p(X), X > 1.")
    assert sorted(str(r) for r in gp.rules if r.head.predicate == "q") == ["q(2) :- p(2).", "q(3) :- p(3)."]


TWO_CYCLE = GroundProgram([GroundRule(a, negative=frozenset({b})), GroundRule(b, negative=frozenset({a}))])


@pytest.mark.parametrize("interp,kept", [({a}, 1), ({b}, 0)])
def test_reduct_negation(interp, kept):
    gp = GroundProgram([GroundRule(a, negative=frozenset({b}))])
    assert len(reduct(gp, interp).rules) == kept


def test_reduct_positive_loop():
    gp = GroundProgram([GroundRule(a, positive=frozenset({a}))])
    assert reduct(gp, {a}).rules == gp.rules


def test_is_answer_set_examples():
    assert is_answer_set(GroundProgram([GroundRule(a)]), {a})
    assert not is_answer_set(GroundProgram([GroundRule(a, positive=frozenset({a}))]), {a})
    assert is_answer_set(TWO_CYCLE, {a})
    assert not is_answer_set(TWO_CYCLE, {a, b})


def test_enumerate_examples():
    assert enumerate_answer_sets(TWO_CYCLE) == {frozenset({a}), frozenset({b})}
    assert enumerate_answer_sets(GroundProgram([GroundRule(None, negative=frozenset({d}))])) == set()
    facts = GroundProgram([GroundRule(a), GroundRule(b)])
    assert enumerate_answer_sets(facts) == {frozenset({a, b})}


def test_enumerate_cap():
    gp = ground("p(1..21).")
    with pytest.raises(OracleCapError):
        enumerate_answer_sets(gp)


def test_directives_do_not_change_answer_sets():
    plain = "x(1..2). b(X) :- x(X), not c(X). c(X) :- x(X), not b(X)."
    with_dirs = plain + "\n#heuristic b(2). [1]\n#heuristic F c(1) : T b(2). [3@2]"
    assert enumerate_answer_sets(ground(plain)) == enumerate_answer_sets(ground(with_dirs))
