"""Representations at finite truncation and their homomorphism spaces."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import BadEmbedding, BadParameter, QuiverMismatch
from .numerics import DEFAULT_TOL, TolerancePolicy, cmat, kernel_onb, rank_svd
from .quiver import Quiver

Family = dict  # vertex id -> complex matrix


class HilbertRep:
    """Vertex dimensions plus one ``dims[dst] x dims[src]`` matrix per arrow."""

    __slots__ = ("quiver", "dims", "mats")

    def __init__(self, quiver: Quiver, dims: Mapping[str, int], mats: Mapping[str, object]):
        self.quiver = quiver
        self.dims = {v: int(dims.get(v, 0)) for v in quiver.vertices}
        if any(d < 0 for d in self.dims.values()):
            raise BadParameter("negative dimension")
        extra = set(dims) - set(quiver.vertices)
        if extra:
            raise BadParameter(f"dims for unknown vertices: {sorted(extra)}")
        out = {}
        for a in quiver.arrows:
            r, c = self.dims[a.dst], self.dims[a.src]
            if a.id not in mats:
                raise BadParameter(f"missing matrix for arrow {a.id}")
            m = cmat(mats[a.id], r, c)
            m.setflags(write=False)
            out[a.id] = m
        extra = set(mats) - set(out)
        if extra:
            raise BadParameter(f"matrices for unknown arrows: {sorted(extra)}")
        self.mats = out

    @property
    def total_dim(self) -> int:
        return sum(self.dims.values())

    def is_zero(self) -> bool:
        return self.total_dim == 0

    def dim_vector(self) -> tuple:
        return tuple(self.dims[v] for v in self.quiver.vertices)

    def to_json(self) -> dict:
        mats = {}
        for aid, m in self.mats.items():
            mats[aid] = {
                "rows": m.shape[0],
                "cols": m.shape[1],
                "re": m.real.ravel().tolist(),
                "im": m.imag.ravel().tolist(),
            }
        return {"quiver": self.quiver.to_json(), "dims": dict(self.dims), "mats": mats}

    @classmethod
    def from_json(cls, obj: dict) -> "HilbertRep":
        try:
            q = Quiver.from_json(obj["quiver"])
            mats = {}
            for aid, m in obj.get("mats", {}).items():
                r, c = int(m["rows"]), int(m["cols"])
                re = np.asarray(m["re"], dtype=float)
                im = np.asarray(m.get("im", [0.0] * (r * c)), dtype=float)
                if re.size != r * c or im.size != r * c:
                    raise BadParameter(f"arrow {aid}: entry count does not match shape")
                mats[aid] = (re + 1j * im).reshape(r, c)
            return cls(q, obj["dims"], mats)
        except (KeyError, TypeError, ValueError) as exc:
            raise BadParameter(f"malformed representation JSON: {exc}") from None

    def __repr__(self) -> str:
        return f"HilbertRep(dims={self.dims}, arrows={list(self.mats)})"


def zero_rep(q: Quiver) -> HilbertRep:
    return HilbertRep(q, {}, {a.id: np.zeros((0, 0)) for a in q.arrows})


def random_rep(q: Quiver, dims: Mapping[str, int], rng: np.random.Generator, real: bool = False) -> HilbertRep:
    mats = {}
    for a in q.arrows:
        shape = (dims.get(a.dst, 0), dims.get(a.src, 0))
        m = rng.standard_normal(shape)
        if not real:
            m = m + 1j * rng.standard_normal(shape)
        mats[a.id] = m
    return HilbertRep(q, dims, mats)


def identity_family(x: HilbertRep) -> Family:
    return {v: np.eye(d, dtype=complex) for v, d in x.dims.items()}


def compose(s: Family, t: Family) -> Family:
    """Vertexwise product ``s o t``."""
    return {v: s[v] @ t[v] for v in t}


def intertwiner_residual(a: HilbertRep, b: HilbertRep, t: Family) -> float:
    """Largest entry of ``T_dst f - g T_src`` over all arrows."""
    worst = 0.0
    for arr in a.quiver.arrows:
        f, g = a.mats[arr.id], b.mats[arr.id]
        d = t[arr.dst] @ f - g @ t[arr.src]
        if d.size:
            worst = max(worst, float(np.abs(d).max()))
    return worst


def _check_same_quiver(a: HilbertRep, b: HilbertRep):
    if a.quiver != b.quiver:
        raise QuiverMismatch("representations live on different quivers")


def direct_sum(a: HilbertRep, b: HilbertRep) -> HilbertRep:
    _check_same_quiver(a, b)
    dims = {v: a.dims[v] + b.dims[v] for v in a.quiver.vertices}
    mats = {}
    for arr in a.quiver.arrows:
        f, g = a.mats[arr.id], b.mats[arr.id]
        m = np.zeros((f.shape[0] + g.shape[0], f.shape[1] + g.shape[1]), complex)
        m[: f.shape[0], : f.shape[1]] = f
        m[f.shape[0]:, f.shape[1]:] = g
        mats[arr.id] = m
    return HilbertRep(a.quiver, dims, mats)


def direct_sum_many(reps) -> HilbertRep:
    reps = list(reps)
    out = reps[0]
    for r in reps[1:]:
        out = direct_sum(out, r)
    return out


def direct_sum_maps(a: HilbertRep, b: HilbertRep) -> dict:
    """Canonical inclusions and projections for ``a (+) b``, as families."""
    inc_a, inc_b, pr_a, pr_b = {}, {}, {}, {}
    for v in a.quiver.vertices:
        n, m = a.dims[v], b.dims[v]
        e = np.eye(n + m, dtype=complex)
        inc_a[v], inc_b[v] = e[:, :n], e[:, n:]
        pr_a[v], pr_b[v] = e[:n, :], e[n:, :]
    return {"inc_a": inc_a, "inc_b": inc_b, "proj_a": pr_a, "proj_b": pr_b}


# ---------------------------------------------------------------------------
# Hom spaces


@dataclass
class HomBasis:
    """Orthonormal basis of Hom(source, target) in stacked-vector form.

    ``vectors[:, i]`` concatenates the row-major ``vec(T_v)`` blocks in the
    quiver's vertex order.
    """

    source: HilbertRep
    target: HilbertRep
    vectors: np.ndarray
    method: str = "stacked"

    def __len__(self) -> int:
        return self.vectors.shape[1]

    @property
    def dim(self) -> int:
        return len(self)

    def _slices(self):
        off = 0
        for v in self.source.quiver.vertices:
            shape = (self.target.dims[v], self.source.dims[v])
            n = shape[0] * shape[1]
            yield v, slice(off, off + n), shape
            off += n

    def unpack(self, vec: np.ndarray) -> Family:
        return {v: vec[sl].reshape(shape) for v, sl, shape in self._slices()}

    def element(self, i: int) -> Family:
        return self.unpack(self.vectors[:, i])

    @property
    def elements(self) -> list:
        return [self.element(i) for i in range(len(self))]

    def combine(self, coeffs) -> Family:
        return self.unpack(self.vectors @ np.asarray(coeffs, dtype=complex))

    def blocks(self, v: str) -> np.ndarray:
        """All basis elements' ``T_v`` stacked along axis 0."""
        for u, sl, shape in self._slices():
            if u == v:
                return self.vectors[sl].T.reshape((len(self),) + shape)
        raise KeyError(v)


def _unknown_sizes(a: HilbertRep, b: HilbertRep) -> dict:
    return {v: a.dims[v] * b.dims[v] for v in a.quiver.vertices}


def _arrow_blocks(a: HilbertRep, b: HilbertRep, arr):
    """Coefficient blocks of ``T_dst f - g T_src = 0`` on vec(T_dst), vec(T_src)."""
    f, g = a.mats[arr.id], b.mats[arr.id]
    cd = np.kron(np.eye(b.dims[arr.dst]), f.T)
    cs = -np.kron(g, np.eye(a.dims[arr.src]))
    return cd, cs


def hom_system(a: HilbertRep, b: HilbertRep) -> np.ndarray:
    """Stacked coefficient matrix, one block row per arrow."""
    _check_same_quiver(a, b)
    sizes = _unknown_sizes(a, b)
    offs, off = {}, 0
    for v in a.quiver.vertices:
        offs[v] = off
        off += sizes[v]
    rows = []
    for arr in a.quiver.arrows:
        nr = b.dims[arr.dst] * a.dims[arr.src]
        if nr == 0:
            continue
        row = np.zeros((nr, off), complex)
        cd, cs = _arrow_blocks(a, b, arr)
        row[:, offs[arr.dst]: offs[arr.dst] + sizes[arr.dst]] += cd
        row[:, offs[arr.src]: offs[arr.src] + sizes[arr.src]] += cs
        rows.append(row)
    if not rows:
        return np.zeros((0, off), complex)
    return np.vstack(rows)


def data_scale(*reps: HilbertRep) -> float:
    """Largest map norm; ranks of systems built from the maps are measured against it."""
    norms = [np.linalg.norm(m, 2) for x in reps for m in x.mats.values() if m.size]
    return max(norms, default=0.0)


def _hom_stacked(a, b, tol):
    m = hom_system(a, b)
    return kernel_onb(m, tol, data_scale(a, b))


def _hom_eliminate(a, b, tol):
    """Vertex-by-vertex elimination: keep an orthonormal basis of the
    solutions restricted to the vertices processed so far and cut it down with
    the equations of each newly added vertex."""
    q = a.quiver
    scale = data_scale(a, b)
    sizes = _unknown_sizes(a, b)
    arrows = [arr for arr in q.arrows if b.dims[arr.dst] * a.dims[arr.src] > 0]
    done = [v for v in q.vertices if sizes[v] == 0]
    done_set = set(done)
    todo = [v for v in q.vertices if sizes[v] > 0]
    basis = np.zeros((0, 0), complex)  # columns span solutions on done vertices
    pos: dict = {}  # vertex -> offset inside the done-vertex vector
    width = 0

    def eq_rows(u):
        return sum(b.dims[arr.dst] * a.dims[arr.src] for arr in arrows
                   if u in (arr.src, arr.dst) and ({arr.src, arr.dst} - {u}) <= done_set)

    while todo:
        cur = basis.shape[1]
        u = min(todo, key=lambda v: (cur + sizes[v] - eq_rows(v), sizes[v], v))
        todo.remove(u)
        nu = sizes[u]
        blocks = []
        for arr in arrows:
            if u not in (arr.src, arr.dst) or not ({arr.src, arr.dst} - {u}) <= done_set:
                continue
            cd, cs = _arrow_blocks(a, b, arr)
            old = np.zeros((cd.shape[0], width), complex)
            new = np.zeros((cd.shape[0], nu), complex)
            for vert, blk in ((arr.dst, cd), (arr.src, cs)):
                if vert == u:
                    new += blk
                elif sizes[vert]:
                    old[:, pos[vert]: pos[vert] + sizes[vert]] += blk
            blocks.append(np.hstack([old @ basis, new]))
        grown = np.zeros((width + nu, cur + nu), complex)
        grown[:width, :cur] = basis
        grown[width:, cur:] = np.eye(nu)
        if blocks:
            z = kernel_onb(np.vstack(blocks), tol, scale)
            basis = grown @ z
        else:
            basis = grown
        pos[u] = width
        width += nu
        done.append(u)
        done_set.add(u)
    # reorder rows into canonical vertex order
    order = []
    for v in q.vertices:
        if sizes[v]:
            order.extend(range(pos[v], pos[v] + sizes[v]))
    if basis.shape[0] == 0:
        return np.zeros((0, basis.shape[1]), complex)
    return np.ascontiguousarray(basis[order])


STACKED_LIMIT = 400


def hom_basis(a: HilbertRep, b: HilbertRep, tol: TolerancePolicy = DEFAULT_TOL,
              method: str = "auto") -> HomBasis:
    """Orthonormal basis of the intertwiner space from ``a`` to ``b``.

    ``method`` is ``"stacked"`` (one global nullspace), ``"eliminate"``
    (vertex-by-vertex nullspace updates), or ``"auto"``, which switches to
    elimination once the unknown count exceeds ``STACKED_LIMIT``.
    """
    _check_same_quiver(a, b)
    n = sum(_unknown_sizes(a, b).values())
    if method == "auto":
        method = "stacked" if n <= STACKED_LIMIT else "eliminate"
    if method == "stacked":
        vecs = _hom_stacked(a, b, tol)
    elif method == "eliminate":
        vecs = _hom_eliminate(a, b, tol)
    else:
        raise BadParameter(f"unknown Hom method {method!r}")
    return HomBasis(a, b, vecs, method)


def end_dim(x: HilbertRep, tol: TolerancePolicy = DEFAULT_TOL) -> int:
    return len(hom_basis(x, x, tol))


def _invertible(m: np.ndarray, tol: TolerancePolicy) -> bool:
    return m.shape[0] == m.shape[1] and rank_svd(m, tol) == m.shape[0]


def find_isomorphism(a: HilbertRep, b: HilbertRep, tol: TolerancePolicy = DEFAULT_TOL,
                     trials: int = 64, seed: int = 0, basis: HomBasis | None = None):
    """Random search for an invertible intertwiner ``a -> b``.

    Returns the family or ``None``. ``None`` is a probabilistic verdict:
    invertible elements, when present, are generic in the Hom space.
    """
    _check_same_quiver(a, b)
    if a.dims != b.dims:
        return None
    if a.is_zero():
        return {v: np.zeros((0, 0), complex) for v in a.quiver.vertices}
    hb = basis if basis is not None else hom_basis(a, b, tol)
    if len(hb) == 0:
        return None
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        c = rng.standard_normal(len(hb)) + 1j * rng.standard_normal(len(hb))
        fam = hb.combine(c)
        if all(_invertible(fam[v], tol) for v in a.quiver.vertices if a.dims[v]):
            return fam
    return None


def pad_to_supergraph(x: HilbertRep, q_super: Quiver, embedding: Mapping) -> HilbertRep:
    """Extend by zero spaces and zero maps along an embedding.

    ``embedding`` has keys ``"vertices"`` and ``"arrows"`` mapping ids of
    ``x.quiver`` to ids of ``q_super``.
    """
    vmap = dict(embedding.get("vertices", {}))
    amap = dict(embedding.get("arrows", {}))
    q = x.quiver
    if set(vmap) != set(q.vertices) or set(amap) != {arr.id for arr in q.arrows}:
        raise BadEmbedding("embedding must cover every vertex and arrow")
    if len(set(vmap.values())) != len(vmap) or len(set(amap.values())) != len(amap):
        raise BadEmbedding("embedding is not injective")
    for v in vmap.values():
        if v not in q_super.vertices:
            raise BadEmbedding(f"vertex {v} not in the target quiver")
    for arr in q.arrows:
        tgt = amap[arr.id]
        if not q_super.has_arrow(tgt):
            raise BadEmbedding(f"arrow {tgt} not in the target quiver")
        t = q_super.arrow(tgt)
        if (t.src, t.dst) != (vmap[arr.src], vmap[arr.dst]):
            raise BadEmbedding(f"arrow {arr.id} does not map onto {tgt} compatibly")
    inv_v = {w: v for v, w in vmap.items()}
    inv_a = {w: a for a, w in amap.items()}
    dims = {w: (x.dims[inv_v[w]] if w in inv_v else 0) for w in q_super.vertices}
    mats = {}
    for t in q_super.arrows:
        if t.id in inv_a:
            mats[t.id] = x.mats[inv_a[t.id]]
        else:
            mats[t.id] = np.zeros((dims[t.dst], dims[t.src]), complex)
    return HilbertRep(q_super, dims, mats)
