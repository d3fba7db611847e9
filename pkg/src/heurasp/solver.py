"""Conflict-driven search interleaved with lazy grounding."""

from __future__ import annotations

import heapq
import random
import sys
import time
from dataclasses import dataclass, field

from .grounder import Grounder
from .heuristics import DirectiveHeap, applicable_rule, choose_literal, is_solving_applicable
from .parser import RESERVED_SUFFIX, parse_program
from .propagation import (
    CLOSURE, DECISION, Assignment, NogoodStore, analyze_and_backjump, decide, neg_lit, pos_lit,
)
from .transform import canonicalize

__all__ = [
    "SolveConfig", "SolveResult", "Solver", "solve", "solve_text", "fallback_choice",
    "extract_answer_set", "SAT", "UNSAT", "INTERRUPTED",
]

SAT, UNSAT, INTERRUPTED = "SAT", "UNSAT", "INTERRUPTED"


@dataclass
class SolveConfig:
    max_models: int = 1  # 0 enumerates all
    heuristics: bool = True
    seed: int | None = None
    trace: bool = False
    trace_stream: object = None
    timeout: float | None = None
    debug: bool = False
    # called with the solver after every propagation/grounding fixpoint
    on_state: object = None


@dataclass
class SolveResult:
    answer_sets: list = field(default_factory=list)
    status: str = UNSAT
    stats: dict = field(default_factory=dict)

    @property
    def satisfiable(self):
        return bool(self.answer_sets)


def _is_internal_atom(table, aid) -> bool:
    if table.is_internal(aid):
        return True
    return table.atoms[aid].predicate.endswith(RESERVED_SUFFIX)


def extract_answer_set(A, table) -> frozenset:
    """True program atoms, without body, gate or choice-complement atoms."""
    return frozenset(table.atoms[a] for a in range(len(table))
                     if A.t_level[a] >= 0 and not _is_internal_atom(table, a))


class _Timeout(Exception):
    pass


class Solver:
    def __init__(self, program, cfg: SolveConfig | None = None):
        self.cfg = cfg or SolveConfig()
        self.program = program
        self.A = Assignment()
        self.store = NogoodStore(self.A)
        self.store.on_undo = self._on_undo
        self.grounder = Grounder(program)
        self.heap = DirectiveHeap(self.A)
        self.rng = random.Random(self.cfg.seed) if self.cfg.seed is not None else None
        self.choice_heap: list = []
        self.in_choice_heap: set = set()
        self.choice_key: dict = {}
        self.gate_owner: dict = {}  # beta / choice gate atom -> rule record id
        self.tpos = 0
        self.stats = dict(guesses=0, conflicts=0, heuristic_decisions=0, fallback_decisions=0,
                          answer_sets=0)
        self.decision_log: list = []
        self.answer_sets: list = []
        self._deadline = None
        self._out = self.cfg.trace_stream or sys.stderr

    # -- bookkeeping ------------------------------------------------------------

    def _trace(self, text):
        if self.cfg.trace:
            print(text, file=self._out)

    def _absorb(self, batch):
        rules, heuristics, nogoods = batch
        self.store.ensure(len(self.grounder.table))
        for g in nogoods:
            g.id = self.store.add(g.literals, g.head, g.kind)
        for r in rules:
            if r.choice_on is not None:
                key = (self.rng.random(), r.id) if self.rng else (r.beta, r.id)
                self.choice_key[r.id] = key
                for a in (r.beta, r.choice_on, r.choice_off):
                    self.gate_owner[a] = r.id
                self._push_choice(r.id)
        if self.cfg.heuristics:
            for h in heuristics:
                self.heap.add(h)

    def _push_choice(self, rid):
        if rid not in self.in_choice_heap:
            self.in_choice_heap.add(rid)
            heapq.heappush(self.choice_heap, (self.choice_key[rid], rid))

    def _on_undo(self, removed):
        self.tpos = min(self.tpos, len(self.A.trail))
        for atom, _, _, _ in removed:
            self.heap.touch(atom)
            rid = self.gate_owner.get(atom)
            if rid is not None:
                self._push_choice(rid)

    def _backjump(self, level):
        self.store.backjump(level)

    def _scan_trail(self) -> list:
        """Process new trail entries; returns program atoms that became M."""
        A, table = self.A, self.grounder.table
        fresh = []
        trail = A.trail
        while self.tpos < len(trail):
            atom, value, level, reason = trail[self.tpos]
            self.tpos += 1
            if self.cfg.trace:
                why = {DECISION: "decision", CLOSURE: "closure"}.get(reason, reason)
                self._trace(f"  [{level}] {value} {table.name(atom)} <- {why}")
            self.heap.touch(atom)
            rid = self.gate_owner.get(atom)
            if rid is not None:
                self._push_choice(rid)
            if value == "M" and not table.is_internal(atom):
                fresh.append(table.atoms[atom])
        return fresh

    def _fixpoint(self):
        """Propagate and ground until neither adds anything; returns a conflict id or None."""
        while True:
            if self._deadline is not None and time.monotonic() > self._deadline:
                raise _Timeout
            conflict = self.store.propagate()
            if conflict is not None:
                return conflict
            fresh = self._scan_trail()
            if not fresh:
                if self.store.pending or self.store.qhead < len(self.A.trail):
                    continue
                return None
            self._absorb(self.grounder.ground_step(fresh))

    # -- choices ------------------------------------------------------------------

    def _choosable(self, rid) -> bool:
        r = self.grounder.rule_records[rid]
        A = self.A
        if A.f_level[r.beta] >= 0 or A.t_level[r.beta] >= 0:
            return False
        return applicable_rule(r, A)

    def fallback_choice(self):
        heap = self.choice_heap
        while heap:
            _, rid = heap[0]
            if self._choosable(rid):
                return pos_lit(self.grounder.rule_records[rid].beta), rid
            heapq.heappop(heap)
            self.in_choice_heap.discard(rid)
        return None

    def _heuristic_choice(self):
        gen = self.heap.ordered()
        try:
            for rec in gen:
                literal = choose_literal(rec, self.A, self.grounder)
                if literal is not None:
                    return literal, rec
        finally:
            gen.close()
        return None

    def _decide(self, literal, kind, head, sign):
        self.stats["guesses"] += 1
        self.stats[f"{kind}_decisions"] += 1
        decide(literal, self.A, self.store)
        entry = (self.A.level, kind, str(head), sign)
        self.decision_log.append(entry)
        self._trace(f"[{self.A.level}] decide {'T' if literal & 1 else 'F'} "
                    f"{self.grounder.table.name(literal >> 1)} ({kind}: {sign} {head})")

    # -- closure ------------------------------------------------------------------

    def _decision_nogood(self) -> list:
        return [d for d in self.A.decisions[1:] if d is not None]

    def _closure(self) -> bool:
        """Make every open atom false and check that no must-be-true atom is left."""
        A, table = self.A, self.grounder.table
        base = A.level
        self.store.new_level(None)
        self._trace(f"[{A.level}] closure")
        gates = {"heu_on_t", "heu_on_mt", "heu_on_f", "heu_off_t", "heu_off_mt", "heu_off_f"}
        for phase in (0, 1):
            for a in range(len(table)):
                if A.is_unassigned(a):
                    is_gate = table.is_internal(a) and table.atoms[a].kind in gates
                    if is_gate == bool(phase):
                        A.assign(a, "F", CLOSURE)
            if self._fixpoint() is not None:
                self._backjump(base)
                return False
        ok = all(A.t_level[a] >= 0 for a in range(len(table)) if A.m_level[a] >= 0)
        if ok and any(A.is_unassigned(a) for a in range(len(table))):
            ok = False
        if not ok:
            self._backjump(base)
        return ok

    def _learn_from(self, literals, count=True) -> bool:
        """Add a nogood violated at the current level and resolve it; False on level-0 conflict."""
        if not literals:
            return False
        gid = self.store.add(literals, None, "decisions")
        return self._resolve(gid, count)

    def _resolve(self, conflict, count=True) -> bool:
        if count:
            self.stats["conflicts"] += 1
        self._trace(f"[{self.A.level}] conflict on nogood {conflict}")
        if self.A.level == 0:
            return False
        return analyze_and_backjump(self.store, conflict) is not None

    # -- main loop ----------------------------------------------------------------

    def _debug_check(self):
        bad = self.store.check_fixpoint()
        assert not bad, f"nogoods {bad[:5]} unit or violated at fixpoint"
        applicable = {h.id for h in self.grounder.heuristic_records if is_solving_applicable(h, self.A)}
        if self.cfg.heuristics:
            assert applicable == self.heap.members, "directive heap out of sync"

    def run(self) -> SolveResult:
        cfg = self.cfg
        start = time.monotonic()
        if cfg.timeout is not None:
            self._deadline = start + cfg.timeout
        status = UNSAT
        try:
            self._absorb(self.grounder.initial())
            while True:
                conflict = self._fixpoint()
                if conflict is not None:
                    if not self._resolve(conflict):
                        break
                    continue
                if cfg.debug:
                    self._debug_check()
                if cfg.on_state is not None:
                    cfg.on_state(self)
                choice = self._heuristic_choice() if cfg.heuristics else None
                if choice is not None:
                    literal, rec = choice
                    self._decide(literal, "heuristic", rec.head, rec.head_sign)
                    continue
                fb = self.fallback_choice()
                if fb is not None:
                    literal, rid = fb
                    self._decide(literal, "fallback", self.grounder.rule_records[rid].head, "T")
                    continue
                decisions = self._decision_nogood()
                if self._closure():
                    answer = extract_answer_set(self.A, self.grounder.table)
                    self.answer_sets.append(answer)
                    self.stats["answer_sets"] += 1
                    self._trace(f"answer {len(self.answer_sets)}: {' '.join(sorted(map(str, answer)))}")
                    self._backjump(self.A.level - 1)
                    if cfg.max_models and len(self.answer_sets) >= cfg.max_models:
                        break
                    if not self._learn_from(decisions, count=False):
                        break
                else:
                    if not self._learn_from(decisions):
                        break
            status = SAT if self.answer_sets else UNSAT
        except _Timeout:
            status = INTERRUPTED
        self.stats.update(
            ground_rules=len(self.grounder.rule_records),
            ground_directives=len(self.grounder.heuristic_records),
            atoms=len(self.grounder.table),
            nogoods=len(self.store),
            support_nogoods=self.grounder.support_nogoods,
            time_s=time.monotonic() - start,
            decision_log=list(self.decision_log),
        )
        return SolveResult(list(self.answer_sets), status, dict(self.stats))


def solve(program, cfg: SolveConfig | None = None) -> SolveResult:
    """Solve a canonical program."""
    return Solver(program, cfg).run()


def solve_text(text: str, cfg: SolveConfig | None = None) -> SolveResult:
    return solve(canonicalize(parse_program(text)), cfg)


def fallback_choice(solver: Solver):
    """Lowest-keyed open choice point as a (T beta) literal, or None."""
    fb = solver.fallback_choice()
    return None if fb is None else fb[0]
