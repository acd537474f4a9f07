"""Reflection functors at sinks and sources, the adjoint (star) functor,
and the constructive duality decompositions.

Blocks of the ambient spaces ``(+)_a H_src(a)`` (at a sink) and
``(+)_a H_dst(a)`` (at a source) follow the quiver's canonical arrow order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotASink, NotASource
from .numerics import (
    DEFAULT_TOL,
    TolerancePolicy,
    kernel_onb,
    left_quasi_inverse,
    orth_complement_onb,
    rank_svd,
)
from .quiver import is_sink, is_source, opposite, reflect_orientation, toggle_mark
from .rep import Family, HilbertRep, data_scale, direct_sum, intertwiner_residual


@dataclass
class ReflectionOutput:
    rep: HilbertRep
    vertex: str
    sign: str
    vertex_basis: np.ndarray  # orthonormal columns inside the ambient sum
    arrow_order: list  # arrow ids of the input quiver, one ambient block each
    block_sizes: list

    def block(self, i: int) -> np.ndarray:
        off = sum(self.block_sizes[:i])
        return self.vertex_basis[off: off + self.block_sizes[i]]

    def to_json(self) -> dict:
        b = self.vertex_basis
        return {
            "rep": self.rep.to_json(),
            "vertex": self.vertex,
            "sign": self.sign,
            "arrow_order": self.arrow_order,
            "block_sizes": self.block_sizes,
            "vertex_basis": {"rows": b.shape[0], "cols": b.shape[1],
                             "re": b.real.ravel().tolist(), "im": b.imag.ravel().tolist()},
        }


def _require_sink(x: HilbertRep, v: str):
    if not is_sink(x.quiver, v):
        raise NotASink(f"vertex {v} is not a sink")


def _require_source(x: HilbertRep, v: str):
    if not is_source(x.quiver, v):
        raise NotASource(f"vertex {v} is not a source")


def assemble_h(x: HilbertRep, v: str) -> np.ndarray:
    """Sum map ``(+)_a H_src(a) -> H_v`` over arrows into the sink ``v``."""
    _require_sink(x, v)
    blocks = [x.mats[a.id] for a in x.quiver.in_arrows(v)]
    if not blocks:
        return np.zeros((x.dims[v], 0), complex)
    return np.hstack(blocks)


def assemble_hhat(x: HilbertRep, v: str) -> np.ndarray:
    """Stacked map ``H_v -> (+)_a H_dst(a)`` over arrows out of the source ``v``."""
    _require_source(x, v)
    blocks = [x.mats[a.id] for a in x.quiver.out_arrows(v)]
    if not blocks:
        return np.zeros((0, x.dims[v]), complex)
    return np.vstack(blocks)


def _split_rows(k: np.ndarray, sizes: list) -> list:
    out, off = [], 0
    for s in sizes:
        out.append(k[off: off + s])
        off += s
    return out


def reflect_plus(x: HilbertRep, v: str, tol: TolerancePolicy = DEFAULT_TOL) -> ReflectionOutput:
    h = assemble_h(x, v)
    arrows = x.quiver.in_arrows(v)
    sizes = [x.dims[a.src] for a in arrows]
    k = kernel_onb(h, tol, data_scale(x))
    parts = _split_rows(k, sizes)
    q = reflect_orientation(x.quiver, v, "+")
    dims = dict(x.dims)
    dims[v] = k.shape[1]
    mats = {a.id: m for a, m in ((a, x.mats[a.id]) for a in x.quiver.arrows) if v not in (a.src, a.dst)}
    for a, blk in zip(arrows, parts):
        mats[toggle_mark(a.id)] = blk
    return ReflectionOutput(HilbertRep(q, dims, mats), v, "+", k, [a.id for a in arrows], sizes)


def reflect_minus(x: HilbertRep, v: str, tol: TolerancePolicy = DEFAULT_TOL) -> ReflectionOutput:
    hh = assemble_hhat(x, v)
    arrows = x.quiver.out_arrows(v)
    sizes = [x.dims[a.dst] for a in arrows]
    k = orth_complement_onb(hh, tol, data_scale(x))
    parts = _split_rows(k, sizes)
    q = reflect_orientation(x.quiver, v, "-")
    dims = dict(x.dims)
    dims[v] = k.shape[1]
    mats = {a.id: x.mats[a.id] for a in x.quiver.arrows if v not in (a.src, a.dst)}
    for a, blk in zip(arrows, parts):
        mats[toggle_mark(a.id)] = blk.conj().T
    return ReflectionOutput(HilbertRep(q, dims, mats), v, "-", k, [a.id for a in arrows], sizes)


def reflect(x: HilbertRep, v: str, sign: str, tol: TolerancePolicy = DEFAULT_TOL) -> ReflectionOutput:
    return reflect_plus(x, v, tol) if sign == "+" else reflect_minus(x, v, tol)


def star(x: HilbertRep) -> HilbertRep:
    q = opposite(x.quiver)
    mats = {toggle_mark(aid): m.conj().T for aid, m in x.mats.items()}
    return HilbertRep(q, x.dims, mats)


def star_family(t: Family) -> Family:
    return {v: m.conj().T for v, m in t.items()}


def _reflect_hom(t: Family, out_a: ReflectionOutput, out_b: ReflectionOutput, ends: list) -> Family:
    blocks = [t[u] for u in ends]
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    diag = np.zeros((rows, cols), complex)
    r = c = 0
    for b in blocks:
        diag[r: r + b.shape[0], c: c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    s = dict(t)
    s[out_a.vertex] = out_b.vertex_basis.conj().T @ diag @ out_a.vertex_basis
    return s


def reflect_hom_plus(t: Family, x: HilbertRep, x2: HilbertRep, v: str,
                     tol: TolerancePolicy = DEFAULT_TOL) -> Family:
    """Image of an intertwiner ``x -> x2`` under the reflection at the sink ``v``."""
    out_a, out_b = reflect_plus(x, v, tol), reflect_plus(x2, v, tol)
    return _reflect_hom(t, out_a, out_b, [a.src for a in x.quiver.in_arrows(v)])


def reflect_hom_minus(t: Family, x: HilbertRep, x2: HilbertRep, v: str,
                      tol: TolerancePolicy = DEFAULT_TOL) -> Family:
    """Image of an intertwiner ``x -> x2`` under the reflection at the source ``v``.

    The induced map on the quotient is read through the orthogonal complements.
    """
    out_a, out_b = reflect_minus(x, v, tol), reflect_minus(x2, v, tol)
    return _reflect_hom(t, out_a, out_b, [a.dst for a in x.quiver.out_arrows(v)])


@dataclass(frozen=True)
class Fullness:
    holds: bool
    defect: int
    # sums of closed subspaces in finite dimension are closed
    closed: bool = True

    def to_json(self) -> dict:
        return {"holds": self.holds, "defect": self.defect, "closed": self.closed}


def fullness(x: HilbertRep, v: str, tol: TolerancePolicy = DEFAULT_TOL) -> Fullness:
    """Do the images of the incoming maps span ``H_v``?"""
    d = x.dims[v] - rank_svd(assemble_h(x, v), tol, data_scale(x))
    return Fullness(d == 0, d)


def co_fullness(x: HilbertRep, v: str, tol: TolerancePolicy = DEFAULT_TOL) -> Fullness:
    """Do the kernels of the outgoing maps meet only in zero?"""
    d = x.dims[v] - rank_svd(assemble_hhat(x, v), tol, data_scale(x))
    return Fullness(d == 0, d)


@dataclass
class DualityResult:
    """``iso`` maps the input onto ``target = reflected (+) residual``."""

    iso: Family
    residual_dim: int
    reflected: HilbertRep
    residual_rep: HilbertRep
    target: HilbertRep
    residual: float
    meta: dict = field(default_factory=dict)

    @property
    def tilde_dim(self) -> int:
        return self.residual_dim

    def __iter__(self):
        yield self.iso
        yield self.residual_dim


def _concentrated(x: HilbertRep, v: str, d: int) -> HilbertRep:
    dims = {u: (d if u == v else 0) for u in x.quiver.vertices}
    mats = {a.id: np.zeros((dims[a.dst], dims[a.src]), complex) for a in x.quiver.arrows}
    return HilbertRep(x.quiver, dims, mats)


def duality_decompose_sink(x: HilbertRep, v: str, tol: TolerancePolicy = DEFAULT_TOL) -> DualityResult:
    """Split ``x`` as (minus after plus at ``v``) plus a part living at ``v``.

    The isomorphism is the identity away from ``v``; at ``v`` it stacks the
    left quasi-inverse of the sum map (followed by the coordinates of the
    reflected space) over coordinates of the cokernel of the sum map.
    """
    h = assemble_h(x, v)
    plus = reflect_plus(x, v, tol)
    back = reflect_minus(plus.rep, v, tol)
    b, _ = left_quasi_inverse(h, tol, data_scale(x))
    coker = orth_complement_onb(h, tol, data_scale(x))
    tilde = _concentrated(x, v, coker.shape[1])
    target = direct_sum(back.rep, tilde)
    iso = {u: np.eye(d, dtype=complex) for u, d in x.dims.items()}
    iso[v] = np.vstack([back.vertex_basis.conj().T @ b, coker.conj().T])
    res = intertwiner_residual(x, target, iso)
    return DualityResult(iso, coker.shape[1], back.rep, tilde, target, res,
                         {"rank_h": int(h.shape[0] - coker.shape[1])})


def duality_decompose_source(x: HilbertRep, v: str, tol: TolerancePolicy = DEFAULT_TOL) -> DualityResult:
    """Dual splitting at a source, obtained by conjugating the sink case
    with the star functor."""
    _require_source(x, v)
    r = duality_decompose_sink(star(x), v, tol)
    try:
        iso = {u: np.linalg.inv(m.conj().T) if m.size else m.conj().T for u, m in r.iso.items()}
    except np.linalg.LinAlgError as exc:  # pragma: no cover - iso is invertible by construction
        from .errors import NumericalFailure

        raise NumericalFailure(str(exc)) from None
    target = star(r.target)
    res = intertwiner_residual(x, target, iso)
    return DualityResult(iso, r.residual_dim, star(r.reflected), star(r.residual_rep), target, res,
                         {"rank_hhat": r.meta["rank_h"]})
