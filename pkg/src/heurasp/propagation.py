"""Three-valued assignments, nogoods and conflict-driven propagation.

Atoms are dense integer ids. A literal is an int ``atom << 1 | 1`` for
``(T, atom)`` and ``atom << 1`` for ``(F, atom)``. An atom carries up to
three trail entries of its own: F, or M followed (possibly much later) by T.

A literal ``(T, c)`` is weakly satisfied once c is M or T and strongly
satisfied once c is T; ``(F, c)`` is satisfied once c is F. A nogood is
violated when all its literals are weakly satisfied. Instead of two watched
literals each nogood keeps counts of its weakly and strongly satisfied
literals, which makes the three unit conditions cheap to detect.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "DECISION", "CLOSURE", "lit", "neg_lit", "pos_lit", "lit_atom", "lit_is_true",
    "Assignment", "Nogood", "NogoodStore", "Unit", "classify", "prop",
    "propagate_fixpoint", "decide", "analyze_and_backjump", "backjump", "AssignmentError",
]

DECISION = -1
CLOSURE = -2


class AssignmentError(RuntimeError):
    pass


def lit(sign: str, atom: int) -> int:
    return (atom << 1) | (sign == "T")


def pos_lit(atom: int) -> int:
    return (atom << 1) | 1


def neg_lit(atom: int) -> int:
    return atom << 1


def lit_atom(literal: int) -> int:
    return literal >> 1


def lit_is_true(literal: int) -> bool:
    return bool(literal & 1)


class Assignment:
    """Trail of (atom, value, level, reason) entries plus per-atom indexes."""

    def __init__(self, size: int = 0):
        self.trail: list = []
        self.level_start = [0]
        # number of nogoods that existed when each level was opened
        self.level_marks = [0]
        self.decisions = [None]
        self.f_level: list = []
        self.m_level: list = []
        self.t_level: list = []
        self.f_pos: list = []
        self.m_pos: list = []
        self.t_pos: list = []
        self.f_reason: list = []
        self.m_reason: list = []
        self.t_reason: list = []
        self.ensure(size)

    def ensure(self, size: int):
        grow = size - len(self.f_level)
        if grow > 0:
            for arr in (self.f_level, self.m_level, self.t_level, self.f_pos, self.m_pos, self.t_pos):
                arr.extend([-1] * grow)
            for arr in (self.f_reason, self.m_reason, self.t_reason):
                arr.extend([None] * grow)

    @property
    def size(self) -> int:
        return len(self.f_level)

    @property
    def level(self) -> int:
        return len(self.level_start) - 1

    def truth(self, atom: int) -> str:
        if self.f_level[atom] >= 0:
            return "F"
        if self.t_level[atom] >= 0:
            return "T"
        if self.m_level[atom] >= 0:
            return "M"
        return "U"

    def is_false(self, atom):
        return self.f_level[atom] >= 0

    def is_must(self, atom):
        """M or T."""
        return self.m_level[atom] >= 0

    def is_true(self, atom):
        return self.t_level[atom] >= 0

    def is_unassigned(self, atom):
        return self.f_level[atom] < 0 and self.m_level[atom] < 0

    def values(self, value: str) -> set:
        arr = {"F": self.f_level, "M": self.m_level, "T": self.t_level}[value]
        return {a for a, lv in enumerate(arr) if lv >= 0}

    def _push(self, atom, value, reason):
        pos = len(self.trail)
        level = self.level
        self.trail.append((atom, value, level, reason))
        if value == "F":
            self.f_level[atom], self.f_pos[atom], self.f_reason[atom] = level, pos, reason
        elif value == "M":
            self.m_level[atom], self.m_pos[atom], self.m_reason[atom] = level, pos, reason
        else:
            self.t_level[atom], self.t_pos[atom], self.t_reason[atom] = level, pos, reason

    def assign(self, atom: int, value: str, reason: int):
        """Add one entry; T implies an M entry first. Raises on inconsistency."""
        if value == "F":
            if self.f_level[atom] >= 0:
                return
            if self.m_level[atom] >= 0:
                raise AssignmentError(f"atom {atom} is already must-be-true")
            self._push(atom, "F", reason)
            return
        if self.f_level[atom] >= 0:
            raise AssignmentError(f"atom {atom} is already false")
        if self.m_level[atom] < 0:
            self._push(atom, "M", reason)
        if value == "T" and self.t_level[atom] < 0:
            self._push(atom, "T", reason)

    def new_level(self, mark: int = 0, decision=None):
        self.level_start.append(len(self.trail))
        self.level_marks.append(mark)
        self.decisions.append(decision)

    def truncate(self, level: int) -> list:
        """Remove every entry above ``level``; returns the removed entries."""
        if level >= self.level:
            return []
        cut = self.level_start[level + 1]
        removed = self.trail[cut:]
        for atom, value, _, _ in reversed(removed):
            if value == "F":
                self.f_level[atom] = self.f_pos[atom] = -1
                self.f_reason[atom] = None
            elif value == "M":
                self.m_level[atom] = self.m_pos[atom] = -1
                self.m_reason[atom] = None
            else:
                self.t_level[atom] = self.t_pos[atom] = -1
                self.t_reason[atom] = None
        del self.trail[cut:]
        del self.level_start[level + 1:]
        del self.level_marks[level + 1:]
        del self.decisions[level + 1:]
        return removed

    def satisfier(self, literal: int):
        """(level, trail position, reason) of the entry weakly satisfying ``literal``."""
        a = literal >> 1
        if literal & 1:
            return self.m_level[a], self.m_pos[a], self.m_reason[a]
        return self.f_level[a], self.f_pos[a], self.f_reason[a]


@dataclass(slots=True)
class Nogood:
    id: int
    literals: tuple
    head: int | None = None  # atom of the designated (F, head) literal
    kind: str = ""

    def __len__(self):
        return len(self.literals)


@dataclass(frozen=True)
class Unit:
    kind: str  # "F_unit", "M_unit", "T_unit", "violated" or "none"
    literal: int | None = None


_NONE = Unit("none")
_VIOLATED = Unit("violated")


def classify(g: Nogood, A: Assignment) -> Unit:
    missing = None
    for x in g.literals:
        a = x >> 1
        sat = A.m_level[a] >= 0 if x & 1 else A.f_level[a] >= 0
        if not sat:
            if missing is not None:
                return _NONE
            missing = x
    if missing is None:
        return _VIOLATED
    b = missing >> 1
    if missing & 1:
        return Unit("F_unit", missing) if A.f_level[b] < 0 else _NONE
    if A.f_level[b] >= 0 or A.t_level[b] >= 0:
        return _NONE
    if g.head == b and all(A.t_level[y >> 1] >= 0 for y in g.literals if y & 1):
        return Unit("T_unit", missing)
    if A.m_level[b] < 0:
        return Unit("M_unit", missing)
    return _NONE


def prop(g: Nogood, A: Assignment) -> set:
    """Entries implied by ``g``: {F b}, {M b} or {M b, T b}."""
    u = classify(g, A)
    if u.kind in ("none", "violated"):
        return set()
    b = u.literal >> 1
    if u.kind == "F_unit":
        return {("F", b)}
    if u.kind == "M_unit":
        return {("M", b)}
    return {("M", b), ("T", b)}


class NogoodStore:
    """All nogoods of one search, with satisfaction counters kept in sync
    with the processed prefix of the assignment's trail."""

    def __init__(self, assignment: Assignment):
        self.A = assignment
        self.nogoods: list = []
        self.occ_f: list = []  # atom -> ids of nogoods containing (F, atom)
        self.occ_t: list = []
        self.weak: list = []
        self.strong: list = []
        self.qhead = 0
        self.pending: list = []
        # called with the removed trail entries after every backjump
        self.on_undo = None
        self.ensure(assignment.size)

    def ensure(self, size: int):
        self.A.ensure(size)
        grow = size - len(self.occ_f)
        if grow > 0:
            self.occ_f.extend([] for _ in range(grow))
            self.occ_t.extend([] for _ in range(grow))

    def __len__(self):
        return len(self.nogoods)

    def add(self, literals, head: int | None = None, kind: str = "") -> int:
        literals = tuple(dict.fromkeys(literals))
        gid = len(self.nogoods)
        g = Nogood(gid, literals, head, kind)
        A, q = self.A, self.qhead
        weak = strong = 0
        for x in literals:
            a = x >> 1
            if x & 1:
                self.occ_t[a].append(gid)
                if 0 <= A.m_pos[a] < q:
                    weak += 1
                if 0 <= A.t_pos[a] < q:
                    strong += 1
            else:
                self.occ_f[a].append(gid)
                if 0 <= A.f_pos[a] < q:
                    weak += 1
                    strong += 1
        self.nogoods.append(g)
        self.weak.append(weak)
        self.strong.append(strong)
        n = len(literals)
        if weak >= n - 1 or (head is not None and strong >= n - 1):
            self.pending.append(gid)
        return gid

    # -- propagation ---------------------------------------------------------

    def _fire(self, gid: int) -> bool:
        """Apply ``prop`` for one nogood; False on violation."""
        g = self.nogoods[gid]
        u = classify(g, self.A)
        if u.kind == "none":
            return True
        if u.kind == "violated":
            return False
        b = u.literal >> 1
        if u.kind == "F_unit":
            self.A.assign(b, "F", gid)
        elif u.kind == "M_unit":
            self.A.assign(b, "M", gid)
        else:
            self.A.assign(b, "T", gid)
        return True

    def propagate(self):
        """Run to fixpoint; returns the id of a violated nogood or None."""
        A = self.A
        trail = A.trail
        nogoods, weak, strong, pending = self.nogoods, self.weak, self.strong, self.pending
        while True:
            while pending:
                gid = pending.pop()
                if not self._fire(gid):
                    pending.clear()
                    return gid
            if self.qhead >= len(trail):
                return None
            atom, value, _, _ = trail[self.qhead]
            self.qhead += 1
            if value == "F":
                for gid in self.occ_f[atom]:
                    weak[gid] += 1
                    strong[gid] += 1
                    g = nogoods[gid]
                    n = len(g.literals) - 1
                    if weak[gid] >= n or (g.head is not None and strong[gid] >= n):
                        pending.append(gid)
            elif value == "M":
                for gid in self.occ_t[atom]:
                    weak[gid] += 1
                    if weak[gid] >= len(nogoods[gid].literals) - 1:
                        pending.append(gid)
            else:
                for gid in self.occ_t[atom]:
                    strong[gid] += 1
                    g = nogoods[gid]
                    if g.head is not None and strong[gid] >= len(g.literals) - 1:
                        pending.append(gid)

    def new_level(self, decision=None):
        self.A.new_level(len(self.nogoods), decision)

    def backjump(self, level: int) -> list:
        """Return to the end of ``level``; nogoods added above it are rechecked."""
        A = self.A
        if level >= A.level:
            return []
        mark = A.level_marks[level + 1]
        cut = A.level_start[level + 1]
        weak, strong = self.weak, self.strong
        for pos in range(min(self.qhead, len(A.trail)) - 1, cut - 1, -1):
            atom, value, _, _ = A.trail[pos]
            if value == "F":
                for gid in self.occ_f[atom]:
                    weak[gid] -= 1
                    strong[gid] -= 1
            elif value == "M":
                for gid in self.occ_t[atom]:
                    weak[gid] -= 1
            else:
                for gid in self.occ_t[atom]:
                    strong[gid] -= 1
        removed = A.truncate(level)
        self.qhead = min(self.qhead, len(A.trail))
        self.pending.clear()
        self.pending.extend(range(len(self.nogoods) - 1, mark - 1, -1))
        if self.on_undo is not None and removed:
            self.on_undo(removed)
        return removed

    def check_fixpoint(self) -> list:
        """Ids of nogoods that are violated or unit (debug full scan)."""
        return [g.id for g in self.nogoods if classify(g, self.A).kind != "none"]


# -- module-level operations ----------------------------------------------------

def propagate_fixpoint(store: NogoodStore, A: Assignment | None = None):
    if A is not None and A is not store.A:
        raise ValueError("store is bound to a different assignment")
    return store.propagate()


def decide(literal: int, A: Assignment, store: NogoodStore | None = None):
    """Open a new level whose first entry is the decision ``literal``.

    Deciding (T, b) for an M atom is allowed (it upgrades b to T); anything
    else on an assigned atom raises ``AssignmentError``.
    """
    b = literal >> 1
    if literal & 1:
        if A.f_level[b] >= 0 or A.t_level[b] >= 0:
            raise AssignmentError(f"cannot decide T on assigned atom {b}")
    elif not A.is_unassigned(b):
        raise AssignmentError(f"cannot decide F on assigned atom {b}")
    if store is not None:
        store.new_level(literal)
    else:
        A.new_level(0, literal)
    A.assign(b, "T" if literal & 1 else "F", DECISION)
    return A


def backjump(store: NogoodStore, level: int) -> list:
    return store.backjump(level)


def analyze_and_backjump(store: NogoodStore, conflict: int):
    """First-UIP learning over weak satisfiers.

    Returns ``None`` when the conflict holds at level 0, otherwise
    ``(learned nogood id, level)`` after backjumping and adding the learned
    nogood (which is then asserting). If the conflicting literals all sit
    below the current level, the search first backjumps to their level.
    Resolution steps on M entries whose T upgrade happened at a later level
    can empty the top level entirely; analysis then continues one level down.
    """
    A = store.A
    lits = set(store.nogoods[conflict].literals)
    while True:
        info = {x: A.satisfier(x) for x in lits}
        top = max((lv for lv, _, _ in info.values()), default=0)
        if top <= 0:
            return None
        if top < A.level:
            store.backjump(top)
        at_top = [x for x, (lv, _, _) in info.items() if lv == top]
        if len(at_top) == 1:
            break
        latest = max(at_top, key=lambda x: info[x][1])
        reason = info[latest][2]
        if reason is None or reason < 0:
            raise AssertionError("two decision entries on one level")
        lits.discard(latest)
        atom = latest >> 1
        for y in store.nogoods[reason].literals:
            if y >> 1 != atom:
                lits.add(y)
    uip = at_top[0]
    target = max((info[x][0] for x in lits if x != uip), default=0)
    store.backjump(target)
    gid = store.add(sorted(lits), None, "learned")
    return gid, target
