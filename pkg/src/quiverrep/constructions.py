"""Builders for the shift-based indecomposable representations and the
positive-unitary diagonal calculus on path quivers.

Subspace-type vertices are realized as orthonormal column bases inside a
common ambient space ``K^m`` with ``K = C^N``; each arrow matrix is the
inclusion written in those bases (``target_basis^* @ source_basis``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadParameter, CertInvalid, NotAPathQuiver, NotASource
from .numerics import DEFAULT_TOL, TolerancePolicy, rank_svd
from .quiver import Quiver, is_source, toggle_mark
from .reflect import ReflectionOutput, reflect_minus
from .rep import HilbertRep

KINDS = (
    "A0_loop",
    "An_tilde",
    "D4_fourspace",
    "Dn_tilde",
    "E6_tilde",
    "E6_tilde_alt",
    "E7_tilde",
    "E8_tilde",
)


def truncated_shift(n: int) -> np.ndarray:
    """Nilpotent Jordan block: ones on the first subdiagonal."""
    if n < 1:
        raise BadParameter("truncation must be at least 1")
    return np.eye(n, k=-1, dtype=complex)


def _blocks(spec: Sequence[Sequence], n: int, s: np.ndarray) -> np.ndarray:
    """Assemble a generator matrix from tokens ``"I"``, ``"S"``, ``0``."""
    eye, zero = np.eye(n, dtype=complex), np.zeros((n, n), complex)
    table = {"I": eye, "S": s, 0: zero}
    return np.block([[table[t] for t in row] for row in spec])


def orthonormal_span(gen: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """QR orthonormalization of generator columns, which must be independent."""
    if gen.shape[1] == 0:
        return np.zeros((gen.shape[0], 0), complex)
    if rank_svd(gen, tol) != gen.shape[1]:
        raise BadParameter("subspace generators are linearly dependent")
    q, _ = np.linalg.qr(gen)
    return q


def subspace_rep(vertices, arrows, spans: dict, tol: TolerancePolicy = DEFAULT_TOL) -> HilbertRep:
    """Representation by inclusions between subspaces of one ambient space.

    ``arrows`` are ``(src, dst)`` pairs and get ids ``"src-dst"``.
    """
    bases = {v: orthonormal_span(g, tol) for v, g in spans.items()}
    q = Quiver(vertices, [(f"{s}-{d}", s, d) for s, d in arrows])
    dims = {v: b.shape[1] for v, b in bases.items()}
    mats = {}
    for s, d in arrows:
        m = bases[d].conj().T @ bases[s]
        # the source subspace must sit inside the target subspace
        if np.abs(bases[d] @ m - bases[s]).max(initial=0.0) > tol.residual_tol:
            raise BadParameter(f"subspace at {s} is not contained in the one at {d}")
        mats[f"{s}-{d}"] = m
    return HilbertRep(q, dims, mats)


def _shift(n: int, lam: complex) -> np.ndarray:
    return truncated_shift(n) + complex(lam) * np.eye(n)


def build_loop(n: int, lam: complex = 0) -> HilbertRep:
    q = Quiver(["1"], [("1-1", "1", "1")])
    return HilbertRep(q, {"1": n}, {"1-1": _shift(n, lam)})


def build_cycle(m: int, n: int, lam: complex = 0) -> HilbertRep:
    """Oriented cycle on ``m + 1`` vertices; the shift sits on the arrow 1 -> 2."""
    if m < 1:
        raise BadParameter("the cycle family needs m >= 1")
    verts = [str(i) for i in range(1, m + 2)]
    pairs = [(verts[i], verts[(i + 1) % len(verts)]) for i in range(len(verts))]
    arrows = [(f"{s}-{d}", s, d) for s, d in pairs]
    mats = {aid: np.eye(n, dtype=complex) for aid, _, _ in arrows}
    mats["1-2"] = _shift(n, lam)
    return HilbertRep(Quiver(verts, arrows), {v: n for v in verts}, mats)


def build_fourspace(a: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> HilbertRep:
    """Four subspaces of ``K + K``: both coordinate axes, the graph of ``a``, the diagonal."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n) or n < 1:
        raise BadParameter("D4_fourspace needs a square matrix")
    eye, zero = np.eye(n, dtype=complex), np.zeros((n, n), complex)
    spans = {
        "0": np.eye(2 * n, dtype=complex),
        "1": np.vstack([eye, zero]),
        "2": np.vstack([zero, eye]),
        "3": np.vstack([eye, a]),
        "4": np.vstack([eye, eye]),
    }
    return subspace_rep(list(spans), [(k, "0") for k in "1234"], spans, tol)


def build_dn(m: int, n: int, lam: complex = 0, path_forward: Sequence[bool] | None = None,
             tol: TolerancePolicy = DEFAULT_TOL) -> HilbertRep:
    """Extended D_m: leaves 1, 2 at hub 5, leaves 3, 4 at hub m+1, identities on the path.

    ``path_forward[k]`` orients the path edge between ``5+k`` and ``6+k``
    (default: all pointing towards ``m+1``).
    """
    if m < 4:
        raise BadParameter("extended D needs m >= 4")
    s = _shift(n, lam)
    hub1, hub2 = "5", str(m + 1)
    path = [str(k) for k in range(5, m + 2)]
    forward = [True] * (len(path) - 1) if path_forward is None else list(path_forward)
    if len(forward) != len(path) - 1:
        raise BadParameter("one orientation flag per central path edge")
    eye2 = np.eye(2 * n, dtype=complex)
    gens = {
        "1": _blocks([["I"], [0]], n, s),
        "2": _blocks([[0], ["I"]], n, s),
        "3": _blocks([["I"], ["S"]], n, s),
        "4": _blocks([["I"], ["I"]], n, s),
    }
    bases = {k: orthonormal_span(g, tol) for k, g in gens.items()}
    for p in path:
        bases[p] = eye2
    arrows = [("1", hub1), ("2", hub1), ("3", hub2), ("4", hub2)]
    for (u, w), f in zip(zip(path, path[1:]), forward):
        arrows.append((u, w) if f else (w, u))
    verts = ["1", "2", "3", "4", *path]
    q = Quiver(verts, [(f"{a}-{b}", a, b) for a, b in arrows])
    mats = {f"{a}-{b}": bases[b].conj().T @ bases[a] for a, b in arrows}
    return HilbertRep(q, {v: bases[v].shape[1] for v in verts}, mats)


_E_SPECS = {
    "E6_tilde": (
        3,
        [("2", "1"), ("1", "0"), ("2'", "1'"), ("1'", "0"), ("2''", "1''"), ("1''", "0")],
        {
            "0": [["I", 0, 0], [0, "I", 0], [0, 0, "I"]],
            "1": [["I", 0], [0, 0], [0, "I"]],
            "2": [[0], [0], ["I"]],
            "1'": [["I", 0], [0, "I"], [0, 0]],
            "2'": [[0], ["I"], [0]],
            "1''": [["I", "I"], ["I", "S"], ["I", 0]],
            "2''": [["I"], ["I"], ["I"]],
        },
    ),
    "E6_tilde_alt": (
        3,
        [("2", "1"), ("1", "0"), ("2'", "1'"), ("1'", "0"), ("2''", "1''"), ("1''", "0")],
        {
            "0": [["I", 0, 0], [0, "I", 0], [0, 0, "I"]],
            "1": [[0, 0], ["I", 0], [0, "I"]],
            "2": [[0], ["I"], ["S"]],
            "1'": [["I", 0], [0, "I"], [0, 0]],
            "2'": [["I"], ["I"], [0]],
            "1''": [["I", 0], [0, 0], [0, "I"]],
            "2''": [["I"], [0], ["I"]],
        },
    ),
    "E7_tilde": (
        4,
        [("3", "2"), ("2", "1"), ("1", "0"), ("3'", "2'"), ("2'", "1'"), ("1'", "0"), ("1''", "0")],
        {
            "0": [["I", 0, 0, 0], [0, "I", 0, 0], [0, 0, "I", 0], [0, 0, 0, "I"]],
            "1": [["I", 0, 0], [0, 0, 0], [0, "I", 0], [0, 0, "I"]],
            "2": [["I", 0], [0, 0], [0, "I"], [0, "I"]],
            "3": [["I"], [0], [0], [0]],
            "1'": [[0, 0, 0], ["I", 0, 0], [0, "I", 0], [0, 0, "I"]],
            "2'": [[0, 0], ["I", 0], [0, "I"], [0, "S"]],
            "3'": [[0], ["I"], [0], [0]],
            "1''": [["I", 0], [0, "I"], ["I", 0], [0, "I"]],
        },
    ),
    "E8_tilde": (
        6,
        [("5", "4"), ("4", "3"), ("3", "2"), ("2", "1"), ("1", "0"),
         ("2'", "1'"), ("1'", "0"), ("1''", "0")],
        {
            "0": [["I" if i == j else 0 for j in range(6)] for i in range(6)],
            "1": [["I", 0, 0, 0, 0], ["I", 0, 0, 0, 0], [0, "I", 0, 0, 0],
                  [0, 0, "I", 0, 0], [0, 0, 0, "I", 0], [0, 0, 0, 0, "I"]],
            "2": [[0, 0, 0, 0], [0, 0, 0, 0], ["I", 0, 0, 0],
                  [0, "I", 0, 0], [0, 0, "I", 0], [0, 0, 0, "I"]],
            "3": [[0, 0, 0], [0, 0, 0], [0, 0, 0], ["I", 0, 0], [0, "I", 0], [0, 0, "I"]],
            "4": [[0, 0], [0, 0], [0, 0], ["I", 0], [0, "I"], [0, "S"]],
            "5": [[0], [0], [0], ["I"], [0], [0]],
            "1'": [["I", 0, 0, 0], [0, "I", 0, 0], [0, 0, "I", 0],
                   [0, 0, 0, "I"], [0, 0, "I", 0], [0, 0, 0, "I"]],
            "2'": [["I", 0], [0, "I"], [0, 0], [0, 0], [0, 0], [0, 0]],
            # generators ordered (x, y, z) for (y, z, x, 0, y, z)
            "1''": [[0, "I", 0], [0, 0, "I"], ["I", 0, 0], [0, 0, 0], [0, "I", 0], [0, 0, "I"]],
        },
    ),
}


def build_star(kind: str, n: int, lam: complex = 0, tol: TolerancePolicy = DEFAULT_TOL) -> HilbertRep:
    _, arrows, specs = _E_SPECS[kind]
    s = _shift(n, lam)
    spans = {v: _blocks(sp, n, s) for v, sp in specs.items()}
    return subspace_rep(list(spans), arrows, spans, tol)


def build_example(kind: str, n: int, lam: complex = 0, *, m: int | None = None,
                  a: np.ndarray | None = None, path_forward: Sequence[bool] | None = None,
                  tol: TolerancePolicy = DEFAULT_TOL) -> HilbertRep:
    """Build one of the named families at truncation ``n``.

    ``m`` is the diagram index for ``An_tilde`` (default 1) and ``Dn_tilde``
    (default 4); ``a`` is the operator for ``D4_fourspace`` (default the
    shifted Jordan block).
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise BadParameter("truncation N must be a positive integer")
    if kind == "A0_loop":
        return build_loop(n, lam)
    if kind == "An_tilde":
        return build_cycle(1 if m is None else m, n, lam)
    if kind == "D4_fourspace":
        return build_fourspace(_shift(n, lam) if a is None else a, tol)
    if kind == "Dn_tilde":
        return build_dn(4 if m is None else m, n, lam, path_forward, tol)
    if kind in _E_SPECS:
        return build_star(kind, n, lam, tol)
    raise BadParameter(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")


# ---------------------------------------------------------------------------
# positive-unitary diagonal certificates


@dataclass
class PUDiagonalCert:
    """Per-vertex orthonormal block bases and per-arrow block labels.

    ``bases[v][i]`` has orthonormal columns (possibly none) and the blocks
    of one vertex together form a unitary. ``labels[aid][i]`` is ``None``
    for a zero block or ``(lam, u)`` with ``lam > 0`` and ``u`` unitary.
    """

    bases: dict
    labels: dict
    meta: dict = field(default_factory=dict)

    @property
    def blocks(self) -> int:
        return len(next(iter(self.bases.values()))) if self.bases else 0

    def block_dims(self, v: str) -> list:
        return [b.shape[1] for b in self.bases[v]]


def path_order(q: Quiver) -> list:
    """Vertices of a path quiver from one end to the other."""
    if not q.is_connected() or len(q.arrows) != len(q.vertices) - 1:
        raise NotAPathQuiver("quiver is not a path")
    if any(len(q.neighbors(v)) > 2 for v in q.vertices) or any(a.is_loop for a in q.arrows):
        raise NotAPathQuiver("quiver is not a path")
    if len(q.vertices) == 1:
        return list(q.vertices)
    ends = sorted(v for v in q.vertices if len(q.neighbors(v)) == 1)
    order = [ends[0]]
    while len(order) < len(q.vertices):
        nxt = [w for w in q.neighbors(order[-1]) if w not in order]
        order.append(nxt[0])
    return order


def _blocked(x: HilbertRep, cert: PUDiagonalCert, aid: str):
    arr = x.quiver.arrow(aid)
    bs, bd = cert.bases[arr.src], cert.bases[arr.dst]
    return [[bd[i].conj().T @ x.mats[aid] @ bs[j] for j in range(len(bs))] for i in range(len(bd))]


def pu_verify(x: HilbertRep, cert: PUDiagonalCert, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    path_order(x.quiver)
    eps = tol.residual_tol
    try:
        m = cert.blocks
        for v in x.quiver.vertices:
            bl = cert.bases[v]
            if len(bl) != m:
                return False
            full = np.hstack(bl) if bl else np.zeros((x.dims[v], 0))
            if full.shape != (x.dims[v], x.dims[v]):
                return False
            if x.dims[v] and np.abs(full.conj().T @ full - np.eye(x.dims[v])).max() > eps:
                return False
        for a in x.quiver.arrows:
            lab = cert.labels[a.id]
            if len(lab) != m:
                return False
            g = _blocked(x, cert, a.id)
            for i in range(m):
                for j in range(m):
                    blk = g[i][j]
                    if i != j:
                        if blk.size and np.abs(blk).max() > eps:
                            return False
                        continue
                    if lab[i] is None:
                        if blk.size and np.abs(blk).max() > eps:
                            return False
                        continue
                    lam, u = lab[i]
                    u = np.asarray(u, dtype=complex)
                    if not lam > 0 or u.shape != blk.shape or u.shape[0] != u.shape[1]:
                        return False
                    k = u.shape[0]
                    if np.abs(u.conj().T @ u - np.eye(k)).max(initial=0.0) > eps:
                        return False
                    if np.abs(blk - lam * u).max(initial=0.0) > eps:
                        return False
    except (KeyError, IndexError, ValueError, TypeError):
        return False
    return True


def assemble_pu(q: Quiver, cert: PUDiagonalCert) -> HilbertRep:
    """Representation whose arrows are block diagonal in the certificate's bases."""
    dims = {v: sum(b.shape[1] for b in cert.bases[v]) for v in q.vertices}
    mats = {}
    for a in q.arrows:
        m = np.zeros((dims[a.dst], dims[a.src]), complex)
        for i, lab in enumerate(cert.labels[a.id]):
            if lab is not None:
                lam, u = lab
                m += lam * cert.bases[a.dst][i] @ np.asarray(u) @ cert.bases[a.src][i].conj().T
        mats[a.id] = m
    return HilbertRep(q, dims, mats)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    qm, r = np.linalg.qr(z)
    d = np.diag(r)
    return qm * (d / np.where(np.abs(d) > 0, np.abs(d), 1))


def random_pu(q: Quiver, rng: np.random.Generator, blocks: int = 3, max_dim: int = 3,
              zero_prob: float = 0.3) -> tuple[HilbertRep, PUDiagonalCert]:
    """Random PU-diagonal representation of a path quiver with its certificate."""
    order = path_order(q)
    dims = {v: [int(rng.integers(0, max_dim + 1)) for _ in range(blocks)] for v in order}
    bases = {}
    for v in order:
        total = sum(dims[v])
        u = random_unitary(total, rng) if total else np.zeros((0, 0), complex)
        parts, off = [], 0
        for d in dims[v]:
            parts.append(u[:, off: off + d])
            off += d
        bases[v] = parts
    labels = {}
    for a in q.arrows:
        lab = []
        for i in range(blocks):
            ds, dd = dims[a.src][i], dims[a.dst][i]
            if ds == dd and ds > 0 and rng.random() > zero_prob:
                lab.append((float(rng.uniform(0.3, 3.0)), random_unitary(ds, rng)))
            else:
                lab.append(None)
        labels[a.id] = lab
    cert = PUDiagonalCert(bases, labels)
    return assemble_pu(q, cert), cert


def _side_vertices(q: Quiver, v: str, w: str) -> set:
    """Vertices reachable from ``w`` without passing through ``v``."""
    seen, todo = {w}, [w]
    while todo:
        u = todo.pop()
        for z in q.neighbors(u):
            if z != v and z not in seen:
                seen.add(z)
                todo.append(z)
    return seen


def pu_reflect_minus(x: HilbertRep, cert: PUDiagonalCert, v: str,
                     tol: TolerancePolicy = DEFAULT_TOL) -> tuple[ReflectionOutput, PUDiagonalCert]:
    """Closed-form reflection at a source of a PU-diagonal path representation.

    Works block by block: two nonzero blocks give a skew graph space, two
    zero blocks give the whole sum (and split the block into its two sides),
    one nonzero block leaves the other summand, and at a path end the new
    block is either zero or the neighbour's block. The result is checked
    against the generic reflection up to a unitary change of basis.
    """
    if not pu_verify(x, cert, tol):
        raise CertInvalid("certificate does not verify")
    q = x.quiver
    if not is_source(q, v):
        raise NotASource(f"vertex {v} is not a source")
    outs = q.out_arrows(v)
    sizes = [x.dims[a.dst] for a in outs]
    offs = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    ambient = int(offs[-1])
    m = cert.blocks

    def embed(j: int, mat: np.ndarray) -> np.ndarray:
        out = np.zeros((ambient, mat.shape[1]), complex)
        out[offs[j]: offs[j + 1]] = mat
        return out

    # new per-block bases at v (ambient coordinates) and labels on the reversed arrows
    new_v: list = []
    new_lab: dict = {toggle_mark(a.id): [] for a in outs}
    split: list = []  # blocks that break into one part per side
    for i in range(m):
        labs = [cert.labels[a.id][i] for a in outs]
        nb = [cert.bases[a.dst][i] for a in outs]
        if len(outs) == 2 and labs[0] is not None and labs[1] is not None:
            (l1, u1), (l2, u2) = labs
            rho = np.hypot(l1, l2)
            w = np.asarray(u2) @ np.asarray(u1).conj().T
            e = embed(0, nb[0]) * (l2 / rho) - embed(1, nb[1] @ w) * (l1 / rho)
            new_v.append([e])
            k = e.shape[1]
            new_lab[toggle_mark(outs[0].id)].append([(l2 / rho, np.eye(k))])
            new_lab[toggle_mark(outs[1].id)].append([(l1 / rho, -(np.asarray(u1) @ np.asarray(u2).conj().T))])
        elif len(outs) == 2 and labs[0] is None and labs[1] is None:
            parts = [embed(0, nb[0]), embed(1, nb[1])]
            new_v.append(parts)
            split.append(i)
            k0, k1 = nb[0].shape[1], nb[1].shape[1]
            new_lab[toggle_mark(outs[0].id)].append([(1.0, np.eye(k0)) if k0 else None, None])
            new_lab[toggle_mark(outs[1].id)].append([None, (1.0, np.eye(k1)) if k1 else None])
        elif len(outs) == 2:
            keep = 0 if labs[0] is None else 1
            e = embed(keep, nb[keep])
            new_v.append([e])
            k = e.shape[1]
            for j, a in enumerate(outs):
                new_lab[toggle_mark(a.id)].append([(1.0, np.eye(k)) if j == keep and k else None])
        elif len(outs) == 1:
            if labs[0] is None:
                e = embed(0, nb[0])
                k = e.shape[1]
                new_lab[toggle_mark(outs[0].id)].append([(1.0, np.eye(k)) if k else None])
            else:
                e = np.zeros((ambient, 0), complex)
                new_lab[toggle_mark(outs[0].id)].append([None])
            new_v.append([e])
        else:
            new_v.append([np.zeros((0, 0), complex)])
    basis_v = np.hstack([p for parts in new_v for p in parts]) if ambient else np.zeros((0, 0), complex)

    # flatten blocks, splitting where needed; sides decide which part a vertex keeps
    sides = [_side_vertices(q, v, a.dst) for a in outs]
    new_bases: dict = {}
    for u in q.vertices:
        if u == v:
            cols, off = [], 0
            for parts in new_v:
                for p in parts:
                    c = np.zeros((basis_v.shape[1], p.shape[1]), complex)
                    c[off: off + p.shape[1]] = np.eye(p.shape[1])
                    cols.append(c)
                    off += p.shape[1]
            new_bases[u] = cols
            continue
        cols = []
        for i in range(m):
            b = cert.bases[u][i]
            if i in split:
                empty = np.zeros((b.shape[0], 0), complex)
                cols += [b, empty] if u in sides[0] else [empty, b]
            else:
                cols.append(b)
        new_bases[u] = cols
    labels: dict = {}
    for a in q.arrows:
        if a in outs:
            continue
        lab = []
        for i in range(m):
            if i in split:
                on_first = a.src in sides[0]
                lab += [cert.labels[a.id][i], None] if on_first else [None, cert.labels[a.id][i]]
            else:
                lab.append(cert.labels[a.id][i])
        labels[a.id] = lab
    for aid, per_block in new_lab.items():
        labels[aid] = [item for parts in per_block for item in parts]

    generic = reflect_minus(x, v, tol)
    dims = dict(x.dims)
    dims[v] = basis_v.shape[1]
    mats = {aid: mm for aid, mm in generic.rep.mats.items() if aid not in new_lab}
    for a, j in zip(outs, range(len(outs))):
        mats[toggle_mark(a.id)] = basis_v[offs[j]: offs[j + 1]].conj().T
    rep = HilbertRep(generic.rep.quiver, dims, mats)
    out = ReflectionOutput(rep, v, "-", basis_v, [a.id for a in outs], sizes)
    new_cert = PUDiagonalCert(new_bases, labels, {"aligned_residual": 0.0})

    # alignment with the generic reflection
    kg = generic.vertex_basis
    if kg.shape[1] != basis_v.shape[1]:
        raise CertInvalid("closed form and generic reflection disagree on dimension")
    w = kg.conj().T @ basis_v
    res = 0.0
    if w.size:
        res = max(float(np.abs(kg @ w - basis_v).max()), float(np.abs(w.conj().T @ w - np.eye(w.shape[0])).max()))
        for a in outs:
            aid = toggle_mark(a.id)
            res = max(res, float(np.abs(w.conj().T @ generic.rep.mats[aid] - rep.mats[aid]).max(initial=0.0)))
    new_cert.meta["aligned_residual"] = res
    if res > tol.residual_tol:
        raise CertInvalid(f"closed form deviates from the generic reflection by {res:.3g}")
    return out, new_cert
