"""Finite quivers, orientation changes, and the (extended) Dynkin classifier."""
from __future__ import annotations

from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable

from .errors import BadParameter, DisconnectedGraph, NotASink, NotASource

MARK = "~"


def toggle_mark(aid: str) -> str:
    """Flip the reversal mark on an arrow id."""
    return aid[:-1] if aid.endswith(MARK) else aid + MARK


def arrow_key(aid: str) -> tuple[str, int]:
    """Canonical sort key; reversal marks do not move an arrow in the order."""
    base = aid.rstrip(MARK)
    return base, len(aid) - len(base)


@dataclass(frozen=True)
class Arrow:
    id: str
    src: str
    dst: str

    def reversed(self) -> "Arrow":
        return Arrow(toggle_mark(self.id), self.dst, self.src)

    @property
    def is_loop(self) -> bool:
        return self.src == self.dst


class Quiver:
    """Directed multigraph with opaque string vertex and arrow ids.

    Vertices iterate in lexicographic order, arrows in ``arrow_key`` order.
    """

    __slots__ = ("vertices", "arrows", "_by_id")

    def __init__(self, vertices: Iterable, arrows: Iterable = ()):
        verts = [str(v) for v in vertices]
        if len(set(verts)) != len(verts):
            raise BadParameter("duplicate vertex ids")
        arrs = []
        for a in arrows:
            if isinstance(a, Arrow):
                arrs.append(a)
            elif isinstance(a, dict):
                arrs.append(Arrow(str(a["id"]), str(a["src"]), str(a["dst"])))
            else:
                aid, s, d = a
                arrs.append(Arrow(str(aid), str(s), str(d)))
        vset = set(verts)
        ids = [a.id for a in arrs]
        if len(set(ids)) != len(ids):
            raise BadParameter("duplicate arrow ids")
        for a in arrs:
            if a.src not in vset or a.dst not in vset:
                raise BadParameter(f"arrow {a.id} uses an undeclared vertex")
        self.vertices: tuple[str, ...] = tuple(sorted(verts))
        self.arrows: tuple[Arrow, ...] = tuple(sorted(arrs, key=lambda a: arrow_key(a.id)))
        self._by_id = {a.id: a for a in self.arrows}

    # basic access -------------------------------------------------------
    def arrow(self, aid: str) -> Arrow:
        return self._by_id[aid]

    def has_arrow(self, aid: str) -> bool:
        return aid in self._by_id

    def in_arrows(self, v: str) -> list[Arrow]:
        return [a for a in self.arrows if a.dst == v]

    def out_arrows(self, v: str) -> list[Arrow]:
        return [a for a in self.arrows if a.src == v]

    def neighbors(self, v: str) -> set[str]:
        out = set()
        for a in self.arrows:
            if a.src == v:
                out.add(a.dst)
            if a.dst == v:
                out.add(a.src)
        out.discard(v)
        return out

    def degree(self, v: str) -> int:
        """Undirected degree; a loop counts twice."""
        return sum((a.src == v) + (a.dst == v) for a in self.arrows)

    def orientation(self) -> Counter:
        """Multiset of directed (src, dst) pairs, ignoring arrow ids."""
        return Counter((a.src, a.dst) for a in self.arrows)

    def same_orientation(self, other: "Quiver") -> bool:
        return set(self.vertices) == set(other.vertices) and self.orientation() == other.orientation()

    def underlying_edges(self) -> Counter:
        return Counter(frozenset((a.src, a.dst)) for a in self.arrows)

    def same_graph(self, other: "Quiver") -> bool:
        return set(self.vertices) == set(other.vertices) and self.underlying_edges() == other.underlying_edges()

    def is_connected(self) -> bool:
        if not self.vertices:
            return False
        adj = defaultdict(set)
        for a in self.arrows:
            adj[a.src].add(a.dst)
            adj[a.dst].add(a.src)
        seen = {self.vertices[0]}
        todo = deque(seen)
        while todo:
            u = todo.popleft()
            for w in adj[u] - seen:
                seen.add(w)
                todo.append(w)
        return len(seen) == len(self.vertices)

    # serialization ------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "arrows": [{"id": a.id, "src": a.src, "dst": a.dst} for a in self.arrows],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Quiver":
        try:
            return cls(obj["vertices"], obj.get("arrows", []))
        except (KeyError, TypeError) as exc:
            raise BadParameter(f"malformed quiver JSON: {exc}") from None

    def to_dot(self, name: str = "Q") -> str:
        lines = [f"digraph {name} {{"]
        lines += [f'  "{v}";' for v in self.vertices]
        lines += [f'  "{a.src}" -> "{a.dst}" [label="{a.id}"];' for a in self.arrows]
        lines.append("}")
        return "\n".join(lines) + "\n"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Quiver)
            and self.vertices == other.vertices
            and self.arrows == other.arrows
        )

    def __hash__(self) -> int:
        return hash((self.vertices, self.arrows))

    def __repr__(self) -> str:
        arr = ", ".join(f"{a.id}:{a.src}->{a.dst}" for a in self.arrows)
        return f"Quiver({list(self.vertices)}, [{arr}])"


def path_quiver(n: int, forward: Iterable[bool] | None = None, prefix: str = "a") -> Quiver:
    """Path on vertices "1".."n"; edge k joins k and k+1, forward means k -> k+1."""
    forward = [True] * (n - 1) if forward is None else list(forward)
    if n < 1 or len(forward) != n - 1:
        raise BadParameter("need n >= 1 and one direction flag per edge")
    arrows = []
    for k, f in enumerate(forward, start=1):
        s, d = (str(k), str(k + 1)) if f else (str(k + 1), str(k))
        arrows.append((f"{prefix}{k}", s, d))
    return Quiver([str(i) for i in range(1, n + 1)], arrows)


def opposite(q: Quiver) -> Quiver:
    return Quiver(q.vertices, [a.reversed() for a in q.arrows])


def sinks_and_sources(q: Quiver) -> tuple[set, set]:
    emits = {a.src for a in q.arrows}
    receives = {a.dst for a in q.arrows}
    return set(q.vertices) - emits, set(q.vertices) - receives


def is_sink(q: Quiver, v: str) -> bool:
    return v in q.vertices and all(a.src != v for a in q.arrows)


def is_source(q: Quiver, v: str) -> bool:
    return v in q.vertices and all(a.dst != v for a in q.arrows)


def reflect_orientation(q: Quiver, v: str, sign: str) -> Quiver:
    if sign == "+":
        if not is_sink(q, v):
            raise NotASink(f"vertex {v} is not a sink")
    elif sign == "-":
        if not is_source(q, v):
            raise NotASource(f"vertex {v} is not a source")
    else:
        raise BadParameter(f"sign must be '+' or '-', got {sign!r}")
    return Quiver(q.vertices, [a.reversed() if v in (a.src, a.dst) else a for a in q.arrows])


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class Witness:
    """Embedded extended Dynkin subgraph.

    ``layout`` fixes the roles the builders need:
    cycle: ``{"cycle": [v0, v1, ...], "edges": [arrow ids, edge i joins v_i, v_(i+1)]}``;
    D-type: ``{"hubs": [u, w], "path": [u, ..., w], "leaves": [[a, b], [c, d]]}``
    (for D4 ``hubs == [c]`` and all four leaves sit in ``leaves[0]``);
    E-type: ``{"center": c, "arms": [[v1, v2, ...], ...]}`` with arms listed
    nearest vertex first, shortest arm first.
    """

    type: str
    vertices: tuple
    arrows: tuple
    layout: dict = field(default_factory=dict, compare=False, hash=False)

    def to_json(self) -> dict:
        return {"type": self.type, "vertices": list(self.vertices), "arrows": list(self.arrows), "layout": self.layout}


@dataclass(frozen=True)
class GraphClass:
    kind: str  # Dynkin | ExtendedDynkin | ContainsExtended
    type: str
    witness: Witness | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "type": self.type}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out


def _edge_arrows(q: Quiver) -> dict:
    found: dict = defaultdict(list)
    for a in q.arrows:
        found[frozenset((a.src, a.dst))].append(a.id)
    return found


def _find_cycle(q: Quiver, edges: dict):
    adj = defaultdict(list)
    for a in q.arrows:
        adj[a.src].append(a.dst)
        adj[a.dst].append(a.src)
    for u in adj:
        adj[u] = sorted(set(adj[u]))
    parent: dict = {}
    for root in q.vertices:
        if root in parent:
            continue
        parent[root] = None
        stack = [root]
        depth = {root: 0}
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w == parent[u]:
                    continue
                if w in parent:
                    # back edge u-w closes a cycle
                    pu, pw = [u], [w]
                    while depth[pu[-1]] > depth[pw[-1]]:
                        pu.append(parent[pu[-1]])
                    while depth[pw[-1]] > depth[pu[-1]]:
                        pw.append(parent[pw[-1]])
                    while pu[-1] != pw[-1]:
                        pu.append(parent[pu[-1]])
                        pw.append(parent[pw[-1]])
                    cyc = pu + pw[-2::-1]
                    return cyc
                parent[w] = u
                depth[w] = depth[u] + 1
                stack.append(w)
    return None


def _bfs_path(adj: dict, a: str, b: str) -> list:
    prev = {a: None}
    todo = deque([a])
    while todo:
        u = todo.popleft()
        if u == b:
            break
        for w in sorted(adj[u]):
            if w not in prev:
                prev[w] = u
                todo.append(w)
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    return path[::-1]


def _arm(adj: dict, center: str, first: str) -> list:
    arm = [first]
    prev = center
    while True:
        nxt = [w for w in adj[arm[-1]] if w != prev]
        if len(nxt) != 1:
            return arm
        prev = arm[-1]
        arm.append(nxt[0])


def _witness(q: Quiver, wtype: str, verts, edge_pairs, edges, layout) -> Witness:
    arrows = []
    for p in edge_pairs:
        arrows.append(edges[frozenset(p)][0])
    return Witness(wtype, tuple(sorted(verts)), tuple(sorted(arrows, key=arrow_key)), layout)


def underlying_classify(q: Quiver) -> GraphClass:
    if not q.is_connected():
        raise DisconnectedGraph("quiver is not connected")
    edges = _edge_arrows(q)
    nv, ne = len(q.vertices), len(q.arrows)

    def wrap(w: Witness) -> GraphClass:
        kind = "ExtendedDynkin" if len(w.vertices) == nv and len(w.arrows) == ne else "ContainsExtended"
        return GraphClass(kind, w.type, w)

    for a in q.arrows:
        if a.is_loop:
            return wrap(Witness("A0_tilde", (a.src,), (a.id,), {"cycle": [a.src], "edges": [a.id]}))
    for pair, ids in sorted(edges.items(), key=lambda kv: sorted(kv[1])):
        if len(ids) >= 2:
            u, w = sorted(pair)
            two = sorted(ids, key=arrow_key)[:2]
            return wrap(Witness("A1_tilde", (u, w), tuple(two), {"cycle": [u, w], "edges": two}))
    cyc = _find_cycle(q, edges)
    if cyc is not None:
        k = len(cyc)
        pairs = [(cyc[i], cyc[(i + 1) % k]) for i in range(k)]
        ids = [edges[frozenset(p)][0] for p in pairs]
        w = _witness(q, f"A{k - 1}_tilde", cyc, pairs, edges, {"cycle": cyc, "edges": ids})
        return wrap(w)

    adj = {v: sorted(q.neighbors(v)) for v in q.vertices}
    deg = {v: len(adj[v]) for v in q.vertices}
    big = [v for v in q.vertices if deg[v] >= 4]
    if big:
        c = big[0]
        leaves = adj[c][:4]
        w = _witness(q, "D4_tilde", [c, *leaves], [(c, x) for x in leaves], edges,
                     {"hubs": [c], "path": [c], "leaves": [leaves]})
        return wrap(w)
    branch = [v for v in q.vertices if deg[v] == 3]
    if len(branch) >= 2:
        best = None
        for i, u in enumerate(branch):
            for w_ in branch[i + 1:]:
                p = _bfs_path(adj, u, w_)
                if any(deg[x] == 3 for x in p[1:-1]):
                    continue
                if best is None or len(p) < len(best):
                    best = p
        path = best
        u, w_ = path[0], path[-1]
        lu = [x for x in adj[u] if x != path[1]][:2]
        lw = [x for x in adj[w_] if x != path[-2]][:2]
        pairs = list(zip(path, path[1:])) + [(u, x) for x in lu] + [(w_, x) for x in lw]
        n = len(path) + 3
        wit = _witness(q, f"D{n}_tilde", [*path, *lu, *lw], pairs, edges,
                       {"hubs": [u, w_], "path": path, "leaves": [lu, lw]})
        return wrap(wit)
    if len(branch) == 1:
        c = branch[0]
        arms = sorted((_arm(adj, c, x) for x in adj[c]), key=lambda arm: (len(arm), arm))
        a, b, cc = (len(x) for x in arms)
        want = None
        if a >= 2:
            want, wtype = (2, 2, 2), "E6_tilde"
        elif b >= 3:
            want, wtype = (1, 3, 3), "E7_tilde"
        elif b == 2 and cc >= 5:
            want, wtype = (1, 2, 5), "E8_tilde"
        if want is not None:
            cut = [arm[:k] for arm, k in zip(arms, want)]
            verts = [c] + [x for arm in cut for x in arm]
            pairs = [p for arm in cut for p in zip([c] + arm[:-1], arm)]
            wit = _witness(q, wtype, verts, pairs, edges, {"center": c, "arms": cut})
            return wrap(wit)
        if b == 1:
            return GraphClass("Dynkin", f"D{nv}")
        return GraphClass("Dynkin", f"E{nv}")
    return GraphClass("Dynkin", f"A{nv}")
