"""FCI: constraint-based selection of a PAG under background knowledge.

Pipeline: skeleton search by level-wise conditional-independence testing,
collider orientation from separating sets, Possible-D-SEP edge pruning, and
the complete circle-resolving rule set (R1-R4, R8-R10; the selection-bias
rules R5-R7 never apply because undirected edges are out of scope).

Everything iterates in node order with subsets in lexicographic order, so a
run is a deterministic function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .citests import GSQUARED, PEARSON, CiOracle, chi_square_test, fisher_z_test, oracle_test
from .data import CATEGORICAL, CONTINUOUS, Dataset
from .errors import (
    InputError,
    InternalConsistencyError,
    KnowledgeInconsistencyError,
)
from .graph import BackgroundKnowledge, GraphKind, Mark, MixedGraph

__all__ = [
    "FciConfig",
    "Diagnostics",
    "SepSetMap",
    "CiTester",
    "skeleton_search",
    "orient_colliders",
    "possible_dsep_prune",
    "apply_orientation_rules",
    "fci_run",
    "FciResult",
    "parse_knowledge",
]

RULE_ORDER = ("R1", "R2", "R3", "R4", "R8", "R9", "R10")


@dataclass
class FciConfig:
    """Tuning parameters for one FCI run.

    ``max_cond_size`` of None means unlimited; ``test`` selects the CI
    decider: auto (by column kinds), chi2, g2, fisherz, or oracle.
    """

    alpha: float = 0.05
    max_cond_size: int | None = None
    enable_possible_dsep: bool = True
    test: str = "auto"

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise InputError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.max_cond_size is not None and self.max_cond_size < 0:
            raise InputError("max_cond_size must be nonnegative or None")
        if self.test not in ("auto", "chi2", "g2", "fisherz", "oracle"):
            raise InputError(f"unknown test selector {self.test!r}")


@dataclass
class Diagnostics:
    """Counters accumulated across the stages of a run."""

    tests_run: int = 0
    cache_hits: int = 0
    dof_zero_warnings: int = 0
    stage_edge_counts: dict[str, int] = field(default_factory=dict)
    rule_firings: dict[str, int] = field(default_factory=dict)
    collider_conflicts: int = 0
    notes: list[str] = field(default_factory=list)

    def fired(self, rule: str) -> None:
        self.rule_firings[rule] = self.rule_firings.get(rule, 0) + 1


@dataclass(frozen=True)
class SepSet:
    nodes: frozenset[int]
    from_knowledge: bool = False


class SepSetMap:
    """Separating set recorded for each removed pair (indices, unordered)."""

    def __init__(self) -> None:
        self._map: dict[tuple[int, int], SepSet] = {}

    @staticmethod
    def _key(x: int, y: int) -> tuple[int, int]:
        return (x, y) if x < y else (y, x)

    def set(self, x: int, y: int, nodes, from_knowledge: bool = False) -> None:
        nodes = frozenset(nodes)
        if x in nodes or y in nodes:
            raise InternalConsistencyError("separating set contains a pair member")
        self._map[self._key(x, y)] = SepSet(nodes, from_knowledge)

    def get(self, x: int, y: int) -> SepSet | None:
        return self._map.get(self._key(x, y))

    def items(self):
        return sorted(self._map.items())

    def __len__(self) -> int:
        return len(self._map)

    def as_names(self, names) -> dict[tuple[str, str], set[str]]:
        return {
            (names[i], names[j]): {names[k] for k in entry.nodes}
            for (i, j), entry in self.items()
        }


class CiTester:
    """Caching adapter from (x, y, S) index queries to a CI decision.

    Wraps a dataset-backed test or an oracle; counts evaluations, cache hits
    and zero-dof (uninformative) results.
    """

    def __init__(
        self,
        source: Dataset | CiOracle,
        cfg: FciConfig,
        diagnostics: Diagnostics | None = None,
    ):
        self.cfg = cfg
        self.diagnostics = diagnostics if diagnostics is not None else Diagnostics()
        self._cache: dict[tuple[int, int, frozenset[int]], bool] = {}
        if isinstance(source, CiOracle):
            self.names = tuple(source.observed)
            self._oracle = source
            self._dataset = None
            self.mode = "oracle"
        elif isinstance(source, Dataset):
            self.names = tuple(source.names)
            self._oracle = None
            self._dataset = source
            self.mode = self._resolve_mode(source, cfg.test)
        else:
            raise InputError(f"cannot test on source of type {type(source).__name__}")

    @staticmethod
    def _resolve_mode(d: Dataset, selector: str) -> str:
        if selector == "oracle":
            raise InputError("oracle test selected but source is a dataset")
        if selector != "auto":
            return selector
        kinds = {c.kind for c in d.columns}
        if kinds == {CATEGORICAL}:
            return "chi2"
        if kinds == {CONTINUOUS}:
            return "fisherz"
        raise InputError("mixed column kinds: choose the test explicitly")

    def __call__(self, x: int, y: int, s: tuple[int, ...]) -> bool:
        key = (x, y, frozenset(s)) if x < y else (y, x, frozenset(s))
        hit = self._cache.get(key)
        if hit is not None:
            self.diagnostics.cache_hits += 1
            return hit
        self.diagnostics.tests_run += 1
        try:
            independent = self._evaluate(x, y, s)
        except Exception as exc:
            query = f"{self.names[x]} _||_ {self.names[y]} | {sorted(self.names[v] for v in s)}"
            try:
                wrapped = type(exc)(f"{exc} [while testing {query}]")
            except TypeError:
                raise
            raise wrapped from exc
        self._cache[key] = independent
        return independent

    def _evaluate(self, x: int, y: int, s: tuple[int, ...]) -> bool:
        xn, yn = self.names[x], self.names[y]
        sn = tuple(self.names[v] for v in s)
        if self.mode == "oracle":
            return oracle_test(self._oracle, xn, yn, sn)
        if self.mode == "fisherz":
            return fisher_z_test(self._dataset, xn, yn, sn, self.cfg.alpha).independent
        variant = GSQUARED if self.mode == "g2" else PEARSON
        result = chi_square_test(self._dataset, xn, yn, sn, self.cfg.alpha, variant)
        if result.dof == 0:
            self.diagnostics.dof_zero_warnings += 1
        return result.independent


# -- skeleton ------------------------------------------------------------------


def _knowledge_index_sets(knowledge: BackgroundKnowledge | None, g: MixedGraph):
    forbidden: set[tuple[int, int]] = set()
    required: set[tuple[int, int]] = set()
    if knowledge is not None:
        for pair in knowledge.forbidden_adjacencies:
            a, b = sorted(g.index(n) for n in pair)
            forbidden.add((a, b))
        for pair in knowledge.required_adjacencies:
            a, b = sorted(g.index(n) for n in pair)
            required.add((a, b))
    return forbidden, required


def skeleton_search(
    test,
    nodes,
    cfg: FciConfig | None = None,
    knowledge: BackgroundKnowledge | None = None,
    diagnostics: Diagnostics | None = None,
) -> tuple[MixedGraph, SepSetMap]:
    """Level-wise edge removal from the complete circle graph.

    For depth k = 0, 1, ... each ordered adjacent pair (x, y) is tested
    against every size-k subset of adj(x) minus y, in lexicographic order; the
    first independence removes the edge and records the subset.
    """
    cfg = cfg or FciConfig()
    names = tuple(nodes)
    if len(names) < 2:
        raise InputError("need at least two variables")
    diag = diagnostics if diagnostics is not None else Diagnostics()
    g = MixedGraph(names, GraphKind.PAG)
    n = g.n_nodes
    seps = SepSetMap()
    forbidden, required = _knowledge_index_sets(knowledge, g)
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) in forbidden:
                seps.set(i, j, frozenset(), from_knowledge=True)
            else:
                g.add_circle_edge(i, j)
    diag.stage_edge_counts.setdefault("initial", g.n_edges)

    depth = 0
    while True:
        if cfg.max_cond_size is not None and depth > cfg.max_cond_size:
            break
        degrees = [len(g.neighbors(i)) for i in range(n)]
        if max(degrees, default=0) - 1 < depth:
            break
        for x in range(n):
            for y in list(g.neighbors(x)):
                if not g.adjacent(x, y):
                    continue
                if SepSetMap._key(x, y) in required:
                    continue
                others = [v for v in g.neighbors(x) if v != y]
                if len(others) < depth:
                    continue
                for s in combinations(others, depth):
                    if test(x, y, s):
                        g.remove_edge(x, y)
                        seps.set(x, y, s)
                        break
        depth += 1
    diag.stage_edge_counts.setdefault("post_skeleton", g.n_edges)
    return g, seps


# -- collider orientation --------------------------------------------------------


def orient_colliders(
    g: MixedGraph,
    sepsets: SepSetMap,
    diagnostics: Diagnostics | None = None,
) -> MixedGraph:
    """Orient unshielded triples x-z-y as colliders when z is outside sepset(x, y).

    Marks become arrows at z on both edges; nothing else changes.  A mark
    already fixed to a tail is left alone (first orientation wins) and counted
    as a conflict.
    """
    diag = diagnostics if diagnostics is not None else Diagnostics()
    out = g.copy()
    _orient_colliders_inplace(out, sepsets, diag)
    return out


def _orient_colliders_inplace(g: MixedGraph, sepsets: SepSetMap, diag: Diagnostics) -> None:
    for z in range(g.n_nodes):
        nbrs = g.neighbors(z)
        for x, y in combinations(nbrs, 2):
            if g.adjacent(x, y):
                continue
            entry = sepsets.get(x, y)
            if entry is None:
                raise InternalConsistencyError(
                    f"no separating set recorded for non-adjacent pair "
                    f"({g.names[x]!r}, {g.names[y]!r})"
                )
            if entry.from_knowledge:
                continue
            if z in entry.nodes:
                continue
            for other in (x, y):
                cur = g.mark_at(z, other)
                if cur is Mark.ARROW:
                    continue
                if cur is Mark.TAIL:
                    diag.collider_conflicts += 1
                    continue
                g.set_mark(z, other, Mark.ARROW)
                diag.fired("R0")


# -- possible-d-sep pruning --------------------------------------------------------


def _possible_dsep_set(g: MixedGraph, x: int) -> list[int]:
    """Nodes reachable from x along paths whose every inner node is a collider
    there or adjacent to both its path neighbors."""
    found: set[int] = set()
    seen: set[tuple[int, int]] = set()
    queue: list[tuple[int, int]] = []
    for w in g.neighbors(x):
        found.add(w)
        seen.add((x, w))
        queue.append((x, w))
    while queue:
        a, b = queue.pop(0)
        for c in g.neighbors(b):
            if c == a or (b, c) in seen:
                continue
            collider = g.mark_at(b, a) is Mark.ARROW and g.mark_at(b, c) is Mark.ARROW
            if collider or g.adjacent(a, c):
                seen.add((b, c))
                found.add(c)
                queue.append((b, c))
    found.discard(x)
    return sorted(found)


def possible_dsep_prune(
    g: MixedGraph,
    sepsets: SepSetMap,
    test,
    cfg: FciConfig | None = None,
    knowledge: BackgroundKnowledge | None = None,
    diagnostics: Diagnostics | None = None,
) -> tuple[MixedGraph, SepSetMap]:
    """Retest every remaining edge against subsets of Possible-D-SEP sets.

    Performs a provisional collider pass to define the sets, removes edges
    on newly found independencies (recording the sets), then resets all marks
    to circles.
    """
    cfg = cfg or FciConfig()
    diag = diagnostics if diagnostics is not None else Diagnostics()
    work = g.copy()
    _reset_marks(work)
    _orient_colliders_inplace(work, sepsets, Diagnostics())
    _, required = _knowledge_index_sets(knowledge, work)
    pds = {x: _possible_dsep_set(work, x) for x in range(work.n_nodes)}

    for x in range(work.n_nodes):
        for y in list(work.neighbors(x)):
            if not work.adjacent(x, y):
                continue
            if SepSetMap._key(x, y) in required:
                continue
            candidates = [v for v in pds[x] if v != y]
            limit = len(candidates)
            if cfg.max_cond_size is not None:
                limit = min(limit, cfg.max_cond_size)
            removed = False
            for k in range(limit + 1):
                for s in combinations(candidates, k):
                    if test(x, y, s):
                        work.remove_edge(x, y)
                        sepsets.set(x, y, s)
                        removed = True
                        break
                if removed:
                    break
    _reset_marks(work)
    diag.stage_edge_counts.setdefault("post_possible_dsep", work.n_edges)
    return work, sepsets


def _reset_marks(g: MixedGraph) -> None:
    for e in g.edges():
        g.set_mark(e.a, e.b, Mark.CIRCLE)
        g.set_mark(e.b, e.a, Mark.CIRCLE)


# -- orientation rules ---------------------------------------------------------------


def _orient(g: MixedGraph, at: int, other: int, mark: Mark, rule: str, diag: Diagnostics) -> bool:
    cur = g.mark_at(at, other)
    if cur is mark:
        return False
    if cur is not Mark.CIRCLE:
        raise KnowledgeInconsistencyError(
            f"rule {rule} wants {mark.value!r} at {g.names[at]!r} on edge "
            f"{g.names[at]!r}--{g.names[other]!r} but found {cur.value!r}"
        )
    g.set_mark(at, other, mark)
    diag.fired(rule)
    return True


def _apply_knowledge_marks(
    g: MixedGraph, knowledge: BackgroundKnowledge, diag: Diagnostics
) -> None:
    pairs = sorted(
        (g.index(a), g.index(b)) for (a, b) in knowledge.non_ancestor_pairs
    )
    for ai, bi in pairs:
        if not g.adjacent(ai, bi):
            continue
        cur = g.mark_at(ai, bi)
        if cur is Mark.TAIL:
            raise KnowledgeInconsistencyError(
                f"{g.names[ai]!r} is declared a non-ancestor of {g.names[bi]!r} "
                f"but the edge carries a tail at {g.names[ai]!r}"
            )
        if cur is Mark.CIRCLE:
            g.set_mark(ai, bi, Mark.ARROW)
            diag.fired("knowledge")


def _rule_r1(g: MixedGraph, diag: Diagnostics) -> bool:
    # a *-> b o-* c with a, c non-adjacent  =>  a *-> b -> c
    changed = False
    for b in range(g.n_nodes):
        nbrs = g.neighbors(b)
        for a in nbrs:
            if g.mark_at(b, a) is not Mark.ARROW:
                continue
            for c in nbrs:
                if c == a or g.adjacent(a, c):
                    continue
                if g.mark_at(b, c) is not Mark.CIRCLE:
                    continue
                changed |= _orient(g, b, c, Mark.TAIL, "R1", diag)
                changed |= _orient(g, c, b, Mark.ARROW, "R1", diag)
    return changed


def _rule_r2(g: MixedGraph, diag: Diagnostics) -> bool:
    # a -> b *-> c  or  a *-> b -> c, with a *-o c  =>  a *-> c
    changed = False
    for a in range(g.n_nodes):
        for c in g.neighbors(a):
            if g.mark_at(c, a) is not Mark.CIRCLE:
                continue
            for b in g.neighbors(a):
                if b == c or not g.adjacent(b, c):
                    continue
                a_to_b = g.mark_at(a, b) is Mark.TAIL and g.mark_at(b, a) is Mark.ARROW
                b_into_c = g.mark_at(c, b) is Mark.ARROW
                b_to_c = g.mark_at(b, c) is Mark.TAIL and g.mark_at(c, b) is Mark.ARROW
                a_into_b = g.mark_at(b, a) is Mark.ARROW
                if (a_to_b and b_into_c) or (a_into_b and b_to_c):
                    changed |= _orient(g, c, a, Mark.ARROW, "R2", diag)
                    break
    return changed


def _rule_r3(g: MixedGraph, diag: Diagnostics) -> bool:
    # a *-> b <-* c, a *-o d o-* c, a, c non-adjacent, d *-o b  =>  d *-> b
    changed = False
    for b in range(g.n_nodes):
        for d in g.neighbors(b):
            if g.mark_at(b, d) is not Mark.CIRCLE:
                continue
            shared = [v for v in g.neighbors(b) if v != d and g.adjacent(d, v)]
            for a, c in combinations(shared, 2):
                if g.adjacent(a, c):
                    continue
                if g.mark_at(b, a) is not Mark.ARROW or g.mark_at(b, c) is not Mark.ARROW:
                    continue
                if g.mark_at(d, a) is not Mark.CIRCLE or g.mark_at(d, c) is not Mark.CIRCLE:
                    continue
                changed |= _orient(g, b, d, Mark.ARROW, "R3", diag)
                break
    return changed


def _rule_r4(g: MixedGraph, sepsets: SepSetMap | None, diag: Diagnostics) -> bool:
    # Discriminating path <t, ..., a, b, c> for b: every node strictly between
    # t and b is a collider on the path and a parent of c; t, c non-adjacent.
    # If b lies in sepset(t, c): b -> c; otherwise a <-> b <-> c.
    changed = False
    for c in range(g.n_nodes):
        for b in g.neighbors(c):
            if g.mark_at(b, c) is not Mark.CIRCLE:
                continue
            found = _find_discriminating_path(g, b, c)
            if found is None:
                continue
            t, a = found
            if sepsets is None:
                raise InternalConsistencyError(
                    "rule R4 needs separating sets but none were supplied"
                )
            entry = sepsets.get(t, c)
            if entry is None or entry.from_knowledge:
                diag.notes.append(
                    f"R4 skipped: no tested separating set for "
                    f"({g.names[t]!r}, {g.names[c]!r})"
                )
                continue
            if b in entry.nodes:
                changed |= _orient(g, b, c, Mark.TAIL, "R4", diag)
                changed |= _orient(g, c, b, Mark.ARROW, "R4", diag)
            else:
                changed |= _orient(g, a, b, Mark.ARROW, "R4", diag)
                changed |= _orient(g, b, a, Mark.ARROW, "R4", diag)
                changed |= _orient(g, b, c, Mark.ARROW, "R4", diag)
                changed |= _orient(g, c, b, Mark.ARROW, "R4", diag)
    return changed


def _find_discriminating_path(g: MixedGraph, b: int, c: int) -> tuple[int, int] | None:
    """First (t, a) such that <t, ..., a, b, c> discriminates b against c."""
    # Depth-first over path suffixes <head, ..., b, c>; extending past a head
    # requires it to be a collider on the path and a parent of c.
    stack: list[tuple[int, tuple[int, ...]]] = []
    for a in sorted(g.neighbors(b)):
        if a == c:
            continue
        stack.append((a, (a, b, c)))
    while stack:
        head, path = stack.pop()
        nxt = path[1]  # node after head on the path
        if len(path) >= 4 and not g.adjacent(head, c):
            return head, path[-3]
        # head must qualify as an inner collider-parent to extend further
        if not (
            g.adjacent(head, c)
            and g.mark_at(head, c) is Mark.TAIL
            and g.mark_at(c, head) is Mark.ARROW
            and g.mark_at(head, nxt) is Mark.ARROW
        ):
            continue
        for p in sorted(g.neighbors(head)):
            if p in path:
                continue
            if g.mark_at(head, p) is not Mark.ARROW:
                continue
            stack.append((p, (p,) + path))
    return None


def _pd_edge(g: MixedGraph, frm: int, to: int) -> bool:
    # potentially directed out of frm: no arrow back at frm, no tail at to
    return g.mark_at(frm, to) is not Mark.ARROW and g.mark_at(to, frm) is not Mark.TAIL


def _uncovered_pd_path_exists(g: MixedGraph, a: int, first: int, target: int) -> bool:
    """Uncovered potentially directed path <a, first, ..., target>."""
    if not _pd_edge(g, a, first):
        return False
    if first == target:
        return True
    stack: list[tuple[int, int, frozenset[int]]] = [(first, a, frozenset((a, first)))]
    while stack:
        cur, prev, onpath = stack.pop()
        for nxt in g.neighbors(cur):
            if nxt in onpath:
                continue
            if g.adjacent(prev, nxt):  # covered triple
                continue
            if not _pd_edge(g, cur, nxt):
                continue
            if nxt == target:
                return True
            stack.append((nxt, cur, onpath | {nxt}))
    return False


def _rule_r8(g: MixedGraph, diag: Diagnostics) -> bool:
    # a -> b -> c  or  a -o b -> c, with a o-> c  =>  a -> c
    changed = False
    for a in range(g.n_nodes):
        for c in g.neighbors(a):
            if not (g.mark_at(a, c) is Mark.CIRCLE and g.mark_at(c, a) is Mark.ARROW):
                continue
            for b in g.neighbors(a):
                if b == c or not g.adjacent(b, c):
                    continue
                if not (g.mark_at(b, c) is Mark.TAIL and g.mark_at(c, b) is Mark.ARROW):
                    continue
                if g.mark_at(a, b) is Mark.TAIL and g.mark_at(b, a) in (
                    Mark.ARROW,
                    Mark.CIRCLE,
                ):
                    changed |= _orient(g, a, c, Mark.TAIL, "R8", diag)
                    break
    return changed


def _rule_r9(g: MixedGraph, diag: Diagnostics) -> bool:
    # a o-> c with an uncovered potentially directed path <a, b, ..., c>,
    # b not adjacent to c  =>  a -> c
    changed = False
    for a in range(g.n_nodes):
        for c in g.neighbors(a):
            if not (g.mark_at(a, c) is Mark.CIRCLE and g.mark_at(c, a) is Mark.ARROW):
                continue
            for b in g.neighbors(a):
                if b == c or g.adjacent(b, c):
                    continue
                if _uncovered_pd_path_exists(g, a, b, c):
                    changed |= _orient(g, a, c, Mark.TAIL, "R9", diag)
                    break
    return changed


def _rule_r10(g: MixedGraph, diag: Diagnostics) -> bool:
    # a o-> c, b -> c <- t, uncovered pd paths p1: a..b and p2: a..t whose
    # first steps differ and are non-adjacent  =>  a -> c
    changed = False
    for c in range(g.n_nodes):
        parents = [
            v
            for v in g.neighbors(c)
            if g.mark_at(v, c) is Mark.TAIL and g.mark_at(c, v) is Mark.ARROW
        ]
        if len(parents) < 2:
            continue
        for a in g.neighbors(c):
            if not (g.mark_at(a, c) is Mark.CIRCLE and g.mark_at(c, a) is Mark.ARROW):
                continue
            done = False
            for b, t in combinations([p for p in parents if p != a], 2):
                first_b = {
                    m for m in g.neighbors(a) if m != c and _uncovered_pd_path_exists(g, a, m, b)
                }
                first_t = {
                    m for m in g.neighbors(a) if m != c and _uncovered_pd_path_exists(g, a, m, t)
                }
                for mu in sorted(first_b):
                    for om in sorted(first_t):
                        if mu != om and not g.adjacent(mu, om):
                            changed |= _orient(g, a, c, Mark.TAIL, "R10", diag)
                            done = True
                            break
                    if done:
                        break
                if done:
                    break
    return changed


def apply_orientation_rules(
    g: MixedGraph,
    knowledge: BackgroundKnowledge | None = None,
    sepsets: SepSetMap | None = None,
    diagnostics: Diagnostics | None = None,
) -> MixedGraph:
    """Apply background knowledge, then rules R1-R4 and R8-R10 to a fixpoint.

    Marks only specialize circle -> tail/arrow; a rule whose conclusion would
    overwrite a fixed mark raises a knowledge inconsistency naming the edge.
    """
    diag = diagnostics if diagnostics is not None else Diagnostics()
    out = g.copy()
    if knowledge is not None:
        knowledge.check_names(out.names)
        _apply_knowledge_marks(out, knowledge, diag)
    changed = True
    while changed:
        changed = False
        changed |= _rule_r1(out, diag)
        changed |= _rule_r2(out, diag)
        changed |= _rule_r3(out, diag)
        changed |= _rule_r4(out, sepsets, diag)
        changed |= _rule_r8(out, diag)
        changed |= _rule_r9(out, diag)
        changed |= _rule_r10(out, diag)
    return out


# -- full run -----------------------------------------------------------------------


@dataclass
class FciResult:
    graph: MixedGraph
    sepsets: SepSetMap
    diagnostics: Diagnostics


def fci_run(
    source: Dataset | CiOracle,
    knowledge: BackgroundKnowledge | None = None,
    cfg: FciConfig | None = None,
    target: str | None = None,
) -> FciResult:
    """Run the full pipeline on a dataset or oracle and return the PAG.

    ``target`` is shorthand for declaring that variable a non-ancestor of all
    others (the prediction-column constraint); it merges with ``knowledge``.
    """
    cfg = cfg or FciConfig()
    diag = Diagnostics()
    tester = CiTester(source, cfg, diag)
    names = tester.names
    if target is not None:
        if target not in names:
            raise InputError(f"target {target!r} is not a variable")
        base = BackgroundKnowledge.non_ancestor_of_all(target, names)
        knowledge = base.merged_with(knowledge)
    if knowledge is not None:
        knowledge.check_names(names)

    g, seps = skeleton_search(tester, names, cfg, knowledge, diag)
    g = orient_colliders(g, seps, diag)
    if cfg.enable_possible_dsep:
        g, seps = possible_dsep_prune(g, seps, tester, cfg, knowledge, diag)
        g = orient_colliders(g, seps, diag)
    g = apply_orientation_rules(g, knowledge, seps, diag)
    diag.stage_edge_counts["final"] = g.n_edges
    return FciResult(g, seps, diag)


# -- knowledge files -------------------------------------------------------------------


def parse_knowledge(text: str, variables) -> BackgroundKnowledge:
    """Parse line-oriented knowledge: ``nonancestor a b|*``, ``forbid a b``,
    ``require a b``.  ``*`` expands to every other variable."""
    variables = list(variables)
    known = set(variables)
    non_anc: set[tuple[str, str]] = set()
    forbid: set[frozenset[str]] = set()
    require: set[frozenset[str]] = set()
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise InputError(f"knowledge line {ln}: expected '<cmd> <node> <node>'")
        cmd, a, b = parts
        if a not in known:
            raise InputError(f"knowledge line {ln}: unknown variable {a!r}")
        if b != "*" and b not in known:
            raise InputError(f"knowledge line {ln}: unknown variable {b!r}")
        targets = [v for v in variables if v != a] if b == "*" else [b]
        for t in targets:
            if t == a:
                raise InputError(f"knowledge line {ln}: self-referential pair")
            if cmd == "nonancestor":
                non_anc.add((a, t))
            elif cmd == "forbid":
                forbid.add(frozenset((a, t)))
            elif cmd == "require":
                require.add(frozenset((a, t)))
            else:
                raise InputError(f"knowledge line {ln}: unknown command {cmd!r}")
    return BackgroundKnowledge(non_anc, forbid, require)
