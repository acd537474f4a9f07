"""Orientation-change plans and the synthesis pipeline for quivers whose
underlying graph contains an extended Dynkin diagram."""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import numpy as np

from .constructions import build_dn, build_star, path_order, truncated_shift
from .decompose import IdempotentWitness, _check_witness, Verdict, is_indecomposable, witness_is_valid
from .errors import (
    BadOrientation,
    BadParameter,
    GraphIsDynkin,
    GraphMismatch,
    NotAPathQuiver,
    NotEquiorientedPath,
    NumericalFailure,
)
from .numerics import DEFAULT_TOL, TolerancePolicy, singular_values
from .quiver import MARK, Quiver, path_quiver, reflect_orientation, underlying_classify
from .reflect import reflect_minus
from .rep import HilbertRep, pad_to_supergraph


@dataclass
class ReflectionPlan:
    steps: list  # (vertex, sign) pairs
    start_quiver: Quiver
    end_quiver: Quiver
    protected: tuple = ()

    def orientations(self) -> list:
        """Quiver after each step, starting with the start quiver."""
        out = [self.start_quiver]
        for v, sign in self.steps:
            out.append(reflect_orientation(out[-1], v, sign))
        return out

    def validate(self) -> bool:
        """Every step is legal and the last orientation is the end quiver."""
        try:
            final = self.orientations()[-1]
        except Exception:
            return False
        return final.same_orientation(self.end_quiver)

    def touches(self) -> set:
        return {v for v, _ in self.steps}

    def to_json(self) -> dict:
        return {
            "steps": [[v, s] for v, s in self.steps],
            "start": self.start_quiver.to_json(),
            "end": self.end_quiver.to_json(),
            "protected": list(self.protected),
        }


def _path_steps(t: list) -> list:
    """Source reflections (1-based positions) taking 1 -> 2 -> ... -> n to the
    orientation ``t``; ``t[k-1]`` is True when edge k points from k to k+1.
    Position n is never used, and n - 1 only appears when edge n-1 is reversed.
    """
    n = len(t) + 1
    if n <= 1 or all(t):
        return []
    if t[-1]:
        return _path_steps(t[:-1])
    u = n - 1
    while u > 1 and not t[u - 2]:
        u -= 1
    # edges u .. n-1 point backwards, and edge u-1 (if any) points forwards
    prev = list(t)
    prev[n - 2] = True
    if u >= 2:
        prev[u - 2] = False
    return _path_steps(prev) + list(range(n - 1, u - 1, -1))


def _orientation_bits(n: int, target) -> list:
    if isinstance(target, Quiver):
        if set(target.vertices) != {str(i) for i in range(1, n + 1)} or len(target.arrows) != n - 1:
            raise BadOrientation("target is not an orientation of the path 1 - ... - n")
        bits = []
        for k in range(1, n):
            fw = target.orientation()[(str(k), str(k + 1))]
            bw = target.orientation()[(str(k + 1), str(k))]
            if fw + bw != 1:
                raise BadOrientation(f"target has no single edge between {k} and {k + 1}")
            bits.append(bool(fw))
        return bits
    bits = [bool(b) for b in target]
    if len(bits) != n - 1:
        raise BadOrientation(f"need {n - 1} edge directions, got {len(bits)}")
    return bits


def an_orientation_plan(n: int, target) -> ReflectionPlan:
    """Plan of source reflections from the equioriented path to ``target``.

    ``target`` is a quiver on vertices "1".."n" or one direction flag per edge.
    """
    if n < 2:
        raise BadOrientation("path plans need n >= 2")
    bits = _orientation_bits(n, target)
    steps = [(str(k), "-") for k in _path_steps(bits)]
    return ReflectionPlan(steps, path_quiver(n), path_quiver(n, bits), (str(n),))


def _undirected_adj(q: Quiver) -> dict:
    return {v: sorted(q.neighbors(v)) for v in q.vertices}


def _arms(adj: dict, center: str) -> list:
    arms = []
    for first in adj[center]:
        arm, prev = [first], center
        while True:
            nxt = [w for w in adj[arm[-1]] if w != prev]
            if len(nxt) != 1:
                break
            prev = arm[-1]
            arm.append(nxt[0])
        arms.append(arm)
    return arms


def _edge_forward(q: Quiver, a: str, b: str) -> bool:
    o = q.orientation()
    if o[(a, b)] + o[(b, a)] != 1:
        raise GraphMismatch(f"expected one edge between {a} and {b}")
    return bool(o[(a, b)])


def star_plan(base: Quiver, target: Quiver) -> ReflectionPlan:
    """Wing-by-wing source reflections from a base orientation to ``target``.

    For star shapes (one branch vertex) each arm must point inwards in the
    base and is planned as a path whose protected end is the branch vertex.
    For extended D shapes the central path must already agree with the
    target; each leaf arrow that disagrees is fixed by reflecting the leaf.
    """
    if not base.same_graph(target):
        raise GraphMismatch("base and target have different underlying graphs")
    adj = _undirected_adj(base)
    deg = {v: len(adj[v]) for v in base.vertices}
    branch = [v for v in base.vertices if deg[v] >= 3]
    steps: list = []
    if len(branch) == 1 and deg[branch[0]] == 3:
        c = branch[0]
        for arm in _arms(adj, c):
            chain = arm[::-1] + [c]  # outermost vertex first, branch vertex last
            for a, b in zip(chain, chain[1:]):
                if not _edge_forward(base, a, b):
                    raise GraphMismatch("base arms must point towards the branch vertex")
            bits = [_edge_forward(target, a, b) for a, b in zip(chain, chain[1:])]
            steps += [(chain[int(k) - 1], s) for k, s in an_orientation_plan(len(chain), bits).steps]
        protected = (c,)
    elif branch:
        leaves = [v for v in base.vertices if deg[v] == 1]
        inner = tuple(v for v in base.vertices if deg[v] > 1)
        for a in base.arrows:
            if a.src in inner and a.dst in inner and not _edge_forward(target, a.src, a.dst):
                raise GraphMismatch("central path orientation differs from the target")
        for leaf in leaves:
            hub = adj[leaf][0]
            if not _edge_forward(base, leaf, hub):
                raise GraphMismatch("base leaves must point towards their hub")
            if not _edge_forward(target, leaf, hub):
                steps.append((leaf, "-"))
        protected = inner
    else:
        raise GraphMismatch("star_plan needs a branched tree")
    plan = ReflectionPlan(steps, base, target, protected)
    if not plan.validate():  # pragma: no cover - guarded by construction
        raise BadOrientation("target is not reachable by source reflections off the protected set")
    return plan


def plan_between(start: Quiver, target: Quiver) -> ReflectionPlan:
    """Source-reflection plan between two orientations of one graph.

    Paths must start equioriented (the far end is protected); branched trees
    go through ``star_plan``.
    """
    if not start.same_graph(target):
        raise GraphMismatch("quivers have different underlying graphs")
    try:
        order = path_order(start)
    except NotAPathQuiver:
        return star_plan(start, target)
    if len(order) < 2:
        return ReflectionPlan([], start, target, tuple(order))
    if not _edge_forward(start, order[0], order[1]):
        order = order[::-1]
    if not all(_edge_forward(start, a, b) for a, b in zip(order, order[1:])):
        raise BadOrientation("path plans start from a one-way orientation")
    bits = [_edge_forward(target, a, b) for a, b in zip(order, order[1:])]
    steps = [(order[int(k) - 1], s) for k, s in an_orientation_plan(len(order), bits).steps]
    return ReflectionPlan(steps, start, target, (order[-1],))


# ---------------------------------------------------------------------------
# synthesis


def _relabel(x: HilbertRep, vmap: dict, ids: dict) -> HilbertRep:
    """Rename vertices by ``vmap``; arrow ids come from ``ids[frozenset(new endpoints)]``."""
    arrows, mats = [], {}
    for a in x.quiver.arrows:
        s, d = vmap[a.src], vmap[a.dst]
        aid = ids[frozenset((s, d))]
        arrows.append((aid, s, d))
        mats[aid] = x.mats[a.id]
    q = Quiver([vmap[v] for v in x.quiver.vertices], arrows)
    return HilbertRep(q, {vmap[v]: n for v, n in x.dims.items()}, mats)


def _strip_marks(x: HilbertRep, target: Quiver) -> HilbertRep:
    """Re-key arrows by base id once the orientation matches ``target``."""
    mats = {}
    for a in x.quiver.arrows:
        base = a.id.rstrip(MARK)
        t = target.arrow(base)
        if (t.src, t.dst) != (a.src, a.dst):
            raise BadOrientation(f"arrow {base} ended with the wrong direction")
        mats[base] = x.mats[a.id]
    return HilbertRep(target, x.dims, mats)


_ARMS = {
    "E6_tilde": [["1''", "2''"], ["1'", "2'"], ["1", "2"]],
    "E7_tilde": [["1''"], ["1'", "2'", "3'"], ["1", "2", "3"]],
    "E8_tilde": [["1''"], ["1'", "2'"], ["1", "2", "3", "4", "5"]],
}


def _base_for(wtype: str, layout: dict, target: Quiver, n: int, lam: complex, tol) -> HilbertRep:
    ids = {frozenset((a.src, a.dst)): a.id for a in target.arrows}
    if wtype.startswith("A") and wtype.endswith("_tilde"):
        cyc, edges = layout["cycle"], layout["edges"]
        dims = {v: n for v in cyc}
        mats = {}
        for aid in edges:
            mats[aid] = np.eye(n, dtype=complex)
        # every arrow on a cycle of identities closes consistently; put the shift on the first one
        mats[edges[0]] = truncated_shift(n) + complex(lam) * np.eye(n)
        return HilbertRep(target, dims, mats)
    if wtype.startswith("D"):
        m = int(wtype[1:-6])
        path = layout["path"]
        if m == 4:
            hub = layout["hubs"][0]
            vmap = {"5": hub}
            vmap.update({str(i + 1): leaf for i, leaf in enumerate(layout["leaves"][0])})
            forward = []
        else:
            vmap = {str(5 + i): v for i, v in enumerate(path)}
            (l1, l2), (l3, l4) = layout["leaves"]
            vmap.update({"1": l1, "2": l2, "3": l3, "4": l4})
            forward = [_edge_forward(target, a, b) for a, b in zip(path, path[1:])]
        base = build_dn(m, n, lam, forward, tol)
        return _relabel(base, vmap, ids)
    arms = sorted(layout["arms"], key=len)
    vmap = {"0": layout["center"]}
    for mine, theirs in zip(_ARMS[wtype], arms):
        if len(mine) != len(theirs):
            raise GraphMismatch("witness arms do not fit the builder")
        vmap.update(dict(zip(mine, theirs)))
    return _relabel(build_star(wtype, n, lam, tol), vmap, ids)


@dataclass
class Synthesis:
    rep: HilbertRep
    verdict: Verdict
    plan: ReflectionPlan | None
    witness_type: str
    n: int
    seed: int
    meta: dict = field(default_factory=dict)

    def certificate(self) -> dict:
        return {
            "verdict": self.verdict.verdict,
            "end_dim": self.verdict.end_dim,
            "radical_dim": self.verdict.radical_dim,
            "plan": [[v, s] for v, s in self.plan.steps] if self.plan else [],
            "N": self.n,
            "seed": self.seed,
            "witness": self.witness_type,
            **({"uncertain": True} if self.verdict.uncertain else {}),
        }


def synthesize_indecomposable(q: Quiver, n: int, tol: TolerancePolicy = DEFAULT_TOL, *,
                              seed: int = 0, lam: complex = 0) -> Synthesis:
    """Indecomposable representation of ``q`` at truncation ``n``.

    Finds an extended Dynkin subgraph, builds the shift-based representation
    on it, moves it to the subgraph's orientation by source reflections that
    avoid the branch (or central) vertices, pads by zero, and certifies.
    """
    if n < 1:
        raise BadParameter("N must be positive")
    gc = underlying_classify(q)
    if gc.kind == "Dynkin":
        raise GraphIsDynkin(f"underlying graph is {gc.type}")
    w = gc.witness
    sub = Quiver(w.vertices, [q.arrow(a) for a in w.arrows])
    base = _base_for(w.type, w.layout, sub, n, lam, tol)
    plan = None
    rep = base
    if not (w.type.startswith("A") and w.type.endswith("_tilde")):
        plan = star_plan(base.quiver, sub)
        before = {v: base.dims[v] for v in plan.protected}
        for v, sign in plan.steps:
            rep = reflect_minus(rep, v, tol).rep
        if any(rep.dims[v] != d for v, d in before.items()):
            raise NumericalFailure("a protected vertex changed dimension")
        rep = _strip_marks(rep, sub)
    emb = {"vertices": {v: v for v in sub.vertices}, "arrows": {a.id: a.id for a in sub.arrows}}
    full = pad_to_supergraph(rep, q, emb)
    verdict = is_indecomposable(full, tol, seed=seed)
    return Synthesis(full, verdict, plan, w.type, n, seed, {"class": gc.kind})


def all_orientations(q: Quiver, limit: int | None = None, seed: int = 0):
    """Quivers with the same underlying graph; every orientation, or a sample."""
    arrows = list(q.arrows)
    m = len(arrows)
    if limit is None or 2 ** m <= limit:
        masks = itertools.product([False, True], repeat=m)
    else:
        rng = np.random.default_rng(seed)
        picks = rng.choice(2 ** m, size=limit, replace=False)
        masks = ([bool((int(p) >> k) & 1) for k in range(m)] for p in sorted(picks))
    for mask in masks:
        yield Quiver(q.vertices, [(a.id, a.dst, a.src) if flip and not a.is_loop else (a.id, a.src, a.dst)
                                  for a, flip in zip(arrows, mask)])


def _sweep_one(args):
    q, n, tol, seed = args
    s = synthesize_indecomposable(q, n, tol, seed=seed)
    return q.to_json(), s.certificate()


def synthesize_sweep(q: Quiver, n: int, tol: TolerancePolicy = DEFAULT_TOL, *, seed: int = 0,
                     limit: int | None = None, jobs: int = 1) -> list:
    work = [(qq, n, tol, seed) for qq in all_orientations(q, limit, seed)]
    if jobs <= 1:
        return [_sweep_one(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_sweep_one, work))


# ---------------------------------------------------------------------------
# equioriented paths


def _equioriented_order(q: Quiver) -> list:
    try:
        order = path_order(q)
    except NotAPathQuiver as exc:
        raise NotEquiorientedPath(str(exc)) from None
    if len(order) > 1 and not _edge_forward(q, order[0], order[1]):
        order = order[::-1]
    for a, b in zip(order, order[1:]):
        if not _edge_forward(q, a, b):
            raise NotEquiorientedPath("arrows do not all point the same way")
    return order


def equioriented_An_witness(x: HilbertRep, tol: TolerancePolicy = DEFAULT_TOL,
                            max_restarts: int | None = None) -> IdempotentWitness | None:
    """Rank-one idempotent family on a one-way path.

    Starting at the first nonzero vertex, pushes the top right singular
    vector of the longest nonvanishing composite forward, pulls its dual
    back with adjoints, and takes the rank-one idempotents ``a_k b_k^*``;
    vertices past the point where the composite dies get zero.
    """
    order = _equioriented_order(x.quiver)
    n = len(order)
    dims = [x.dims[v] for v in order]
    if max(dims, default=0) < 2:
        raise NotEquiorientedPath("needs some vertex of dimension at least 2")
    maps = [x.mats[next(a.id for a in x.quiver.out_arrows(order[k]))] for k in range(n - 1)]
    cap = n if max_restarts is None else max_restarts
    start = 0
    for restart in range(cap + 1):
        while start < n and dims[start] == 0:
            start += 1
        if start >= n:
            return None
        comp = np.eye(dims[start], dtype=complex)
        last, best = start, comp
        for k in range(start, n - 1):
            comp = maps[k] @ comp
            sv = singular_values(comp)
            if not sv.size or sv[0] <= tol.residual_tol:
                break
            last, best = k + 1, comp
        _, _, vh = np.linalg.svd(best)
        a = [None] * n
        a[start] = vh[0].conj()
        for k in range(start, last):
            a[k + 1] = maps[k] @ a[k]
        b = [None] * n
        b[last] = a[last] / np.vdot(a[last], a[last]).real
        for k in range(last - 1, start - 1, -1):
            b[k] = maps[k].conj().T @ b[k + 1]
        fam = {}
        for k, v in enumerate(order):
            if start <= k <= last:
                fam[v] = np.outer(a[k], b[k].conj())
            else:
                fam[v] = np.zeros((dims[k], dims[k]), complex)
        idem, inter, nontrivial = _check_witness(x, fam, tol)
        w = IdempotentWitness(fam, idem, inter, {"start": order[start], "end": order[last], "restarts": restart})
        if nontrivial and witness_is_valid(x, w, tol):
            return w
        # everything up to the dying point is one-dimensional: begin again after it
        start = last + 1
    return None
