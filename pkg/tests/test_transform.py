import logging

import pytest
from hypothesis import given, settings, strategies as st

from heurasp.ast import HeuristicAtom, HeuristicDirective, Atom, Integer, signs
from heurasp.heuristics import reference_applicability
from heurasp.oracle import enumerate_answer_sets, naive_ground
from heurasp.parser import parse_program
from heurasp.transform import (
    SafetyError, TransformError, canonicalize, check_safety, directive_key, enhance_directives,
    rewrite_choice_rules, transform_directive,
)

CANONICAL = {signs("F"), signs("T"), signs("MT")}


def directive(text):
    return parse_program(text).directives[0]


def keys(ds):
    return {directive_key(d) for d in ds}


def test_split_f_with_other_signs():
    got = transform_directive(directive("#heuristic h : FMT a, not FT b."))
    want = [directive("#heuristic h : F a, not F b, not T b."),
            directive("#heuristic h : MT a, not F b, not T b.")]
    assert keys(got) == keys(want) and len(got) == 2


def test_split_must_only():
    got = transform_directive(directive("#heuristic h : M a, not M b."))
    want = [directive("#heuristic h : MT a, F b, not T a."),
            directive("#heuristic h : MT a, T b, not T a."),
            directive("#heuristic h : MT a, not T a, not F b, not MT b.")]
    assert keys(got) == keys(want) and len(got) == 3


def test_canonical_directive_unchanged():
    d = directive("#heuristic h : T a.")
    assert transform_directive(d) == [d]


def test_transform_is_deterministic():
    d = directive("#heuristic h(X) : FM a(X), not FMT b(X), M c(X). [3@1]")
    assert transform_directive(d) == transform_directive(d)
    for out in transform_directive(d):
        assert out.head == d.head and out.weight == d.weight and out.level == d.level


def test_choice_rewrite_assign():
    p = rewrite_choice_rules(parse_program("{ assign(U,T,X) } :- assignable(U,T,X)."))
    assert [str(r) for r in p.rules] == [
        "assign(U,T,X) :- assignable(U,T,X), not assign__off(U,T,X).",
        "assign__off(U,T,X) :- assignable(U,T,X), not assign(U,T,X).",
    ]


def test_choice_rewrite_explore_keeps_body():
    p = rewrite_choice_rules(parse_program(
        "{ explore(S,A) } :- frontier_and_explored_states(S,A), not suboptimal_step(S,A)."))
    assert [str(r) for r in p.rules] == [
        "explore(S,A) :- frontier_and_explored_states(S,A), not suboptimal_step(S,A), not explore__off(S,A).",
        "explore__off(S,A) :- frontier_and_explored_states(S,A), not suboptimal_step(S,A), not explore(S,A).",
    ]


def test_choice_rewrite_identity_without_choices():
    p = parse_program("a :- not b. b :- c.")
    assert rewrite_choice_rules(p).rules == p.rules


def test_choice_rewrite_rejects_reserved_names():
    p = parse_program("p__off(1).", allow_reserved=True)
    with pytest.raises(TransformError):
        rewrite_choice_rules(p)


def test_choice_rewrite_preserves_answer_sets():
    text = "n(1..2). { q(X) } :- n(X). r :- q(1), not q(2)."
    p = canonicalize(parse_program(text))
    sets = {frozenset(str(a) for a in s if not a.predicate.endswith("__off"))
            for s in enumerate_answer_sets(naive_ground(p))}
    base = {"n(1)", "n(2)"}
    assert sets == {frozenset(base), frozenset(base | {"q(1)", "r"}), frozenset(base | {"q(2)"}),
                    frozenset(base | {"q(1)", "q(2)"})}


def test_enhancement_one_copy_per_rule():
    p = parse_program("h(X) :- a(X), b(X), not c(X).\nh(X) :- a(X), b(X), not d(X).\n"
                      "#heuristic h(N) : T a(N).")
    out = enhance_directives(p).directives
    assert [str(d) for d in out] == [
        "#heuristic T h(N) : T a(N), T b(N), not TM c(N). [0@0]",
        "#heuristic T h(N) : T a(N), T b(N), not TM d(N). [0@0]",
    ]


def test_enhancement_head_verbatim():
    p = parse_program("h(X) :- a(X), not c(X).\ng(X) :- a(X).\n#heuristic h(X) : T a(X).")
    (d,) = enhance_directives(p).directives
    assert str(d) == "#heuristic T h(X) : T a(X), not TM c(X). [0@0]"


def test_enhancement_renames_rule_variables_apart():
    p = parse_program("h(X) :- a(X,Y), b(Y).\n#heuristic h(Y) : T c(Y).")
    (d,) = enhance_directives(p).directives
    assert str(d) == "#heuristic T h(Y) : T c(Y), T a(Y,Y_1), T b(Y_1). [0@0]"


def test_enhancement_drops_underivable_with_warning(caplog):
    p = parse_program("f(1).\n#heuristic f(X) : T g(X).")
    warnings = []
    with caplog.at_level(logging.WARNING):
        out = enhance_directives(p, warnings).directives
    assert out == [] and len(warnings) == 1 and "f(X)" in caplog.text


def test_enhancement_keeps_priority():
    p = parse_program("h(X) :- a(X).\n#heuristic F h(X) : T a(X), b(X). [-X@2]")
    (d,) = enhance_directives(p).directives
    assert str(d.weight) == "-X" and d.level == Integer(2) and d.head.signs == signs("F")


def test_safety_f_only_variable():
    r = check_safety(directive("#heuristic p(X) : F q(X)."))
    assert not r.ok and r.unsafe_variables == ("X",)


def test_safety_t_variable():
    assert check_safety(directive("#heuristic p(X) : T q(X).")).ok


def test_safety_explore_directive():
    d = directive("#heuristic explore(PS,A) : frontier_and_explored_states(PS,A), not suboptimal_step(PS,A), "
                  "f(PS,A,PathCost), not T goal_found. [-PathCost@3]")
    assert check_safety(d).ok


def test_safety_negative_only_variable():
    r = check_safety(directive("#heuristic p(X) : T q(X), not r(Y)."))
    assert r.unsafe_variables == ("Y",)


def test_canonicalize_rejects_unsafe_rule_and_directive():
    with pytest.raises(SafetyError) as exc:
        canonicalize(parse_program("p(X) :- not q(X)."))
    assert exc.value.variables == ("X",)
    with pytest.raises(SafetyError) as exc:
        canonicalize(parse_program("p(1). { p(X) } :- p(X).\n#heuristic p(X) : F q(X)."))
    assert "X" in str(exc.value)


def test_canonical_program_has_only_canonical_signs():
    p = canonicalize(parse_program("{ a }. { b }.\n#heuristic a : FM b, not M a. [1]"))
    assert not any(r.is_choice for r in p.rules)
    for d in p.directives:
        assert all(h.signs in CANONICAL for h in d.condition)


# -- properties over random propositional directives -----------------------

SIGN_SETS = [frozenset(s) for s in ("F", "M", "T", "FM", "FT", "MT", "FMT")]
ATOMS = [Atom(n) for n in "abcd"]
hatoms = st.builds(HeuristicAtom, st.sampled_from(SIGN_SETS), st.sampled_from(ATOMS))
random_directives = st.builds(
    lambda s, pos, neg: HeuristicDirective(HeuristicAtom(frozenset(s), Atom("h")), tuple(pos), tuple(neg)),
    st.sampled_from("TF"), st.lists(hatoms, max_size=3), st.lists(hatoms, max_size=3))
assignments = st.fixed_dictionaries({a: st.sampled_from("UFMT") for a in ATOMS + [Atom("h")]})


class _Rule:
    head, positive, negative = Atom("h"), (), ()


@settings(max_examples=300)
@given(random_directives)
def test_transform_output_canonical(d):
    for out in transform_directive(d):
        assert all(h.signs in CANONICAL for h in out.condition)
        assert out.head == d.head


@settings(max_examples=300)
@given(random_directives, assignments)
def test_transform_preserves_applicability(d, values):
    truth = values.__getitem__
    want = reference_applicability(d, truth, [_Rule])
    got = any(reference_applicability(e, truth, [_Rule]) for e in transform_directive(d))
    assert want == got
