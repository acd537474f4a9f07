"""Indecomposability via the endomorphism algebra.

The verdict comes from the trace form on End: in characteristic zero its
radical is the Jacobson radical, so End is local exactly when the basis
size minus the trace-form nullity is one. Witnesses for decomposable
representations are built separately from spectral projectors of random
endomorphisms, and they drive the splitting.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from .errors import (
    ClusterGapTooSmall,
    DegenerateIdempotent,
    NumericalFailure,
    RecursionLimit,
    ZeroRepresentation,
)
from .numerics import DEFAULT_TOL, TolerancePolicy, image_onb, singular_values, spectral_projector, trace_gram
from .rep import Family, HilbertRep, HomBasis, direct_sum, direct_sum_many, hom_basis, intertwiner_residual

# singular values this close (as a factor) to the rank threshold make a verdict uncertain
MARGIN = 1e3
# spectral projectors above this norm come from a spurious split of a perturbed Jordan cluster
MAX_PROJECTOR_NORM = 1e6


@dataclass
class IdempotentWitness:
    family: Family
    idempotence_residual: float
    intertwiner_residual: float
    meta: dict = field(default_factory=dict)

    @property
    def residual(self) -> float:
        return max(self.idempotence_residual, self.intertwiner_residual)

    def ranks(self) -> dict:
        return {v: int(round(np.trace(p).real)) if p.size else 0 for v, p in self.family.items()}


@dataclass
class Verdict:
    indecomposable: bool
    end_dim: int
    radical_dim: int
    uncertain: bool = False
    witness: IdempotentWitness | None = None
    method: str = "stacked"

    @property
    def verdict(self) -> str:
        return "indecomposable" if self.indecomposable else "decomposable"

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "end_dim": self.end_dim, "radical_dim": self.radical_dim}
        if self.uncertain:
            out["uncertain"] = True
        if self.witness is not None:
            out["witness_ranks"] = self.witness.ranks()
        return out


def _check_witness(x: HilbertRep, fam: Family, tol: TolerancePolicy):
    idem = 0.0
    nontrivial_zero = nontrivial_one = False
    for v, p in fam.items():
        if not p.size:
            continue
        idem = max(idem, float(np.abs(p @ p - p).max()))
        if np.abs(p).max() > tol.residual_tol:
            nontrivial_zero = True
        if np.abs(p - np.eye(p.shape[0])).max() > tol.residual_tol:
            nontrivial_one = True
    inter = intertwiner_residual(x, x, fam)
    return idem, inter, nontrivial_zero and nontrivial_one


def witness_is_valid(x: HilbertRep, w: IdempotentWitness, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    idem, inter, nontrivial = _check_witness(x, w.family, tol)
    return nontrivial and idem < tol.residual_tol and inter < tol.residual_tol


def _candidate_splits(eigs: np.ndarray, tol: TolerancePolicy, limit: int = 4):
    """Partitions of the spectrum from single-linkage cuts, widest gap first.

    Each cluster of a cut is offered as the selected set against the rest.
    """
    if eigs.size < 2:
        return
    z = linkage(np.column_stack([eigs.real, eigs.imag]), method="single")
    heights = z[::-1, 2]  # heights[k - 2] is the gap closed when k clusters merge into k - 1
    for k in range(2, min(limit + 2, eigs.size + 1)):
        if heights[k - 2] <= tol.eig_cluster_gap:
            return
        labels = fcluster(z, t=k, criterion="maxclust")
        for lab in sorted(set(labels.tolist())):
            sel = labels == lab
            if sel.all():
                continue
            yield eigs[sel], eigs[~sel]


def find_idempotent(x: HilbertRep, tol: TolerancePolicy = DEFAULT_TOL, trials: int = 256,
                    seed: int = 0, basis: HomBasis | None = None) -> IdempotentWitness | None:
    """Search random endomorphisms for a spectral split giving a nontrivial idempotent."""
    hb = basis if basis is not None else hom_basis(x, x, tol)
    d = len(hb)
    verts = [v for v in x.quiver.vertices if x.dims[v]]
    if d < 2 or not verts:
        return None
    rng = np.random.default_rng(seed)
    for trial in range(trials):
        c = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        t = hb.combine(c)
        try:
            eigs = np.concatenate([np.linalg.eigvals(t[v]) for v in verts])
        except np.linalg.LinAlgError:
            continue
        for chosen, rest in _candidate_splits(eigs, tol):
            def pick(z, chosen=chosen, rest=rest):
                return np.abs(chosen - z).min() < np.abs(rest - z).min()

            fam = {}
            try:
                for v in x.quiver.vertices:
                    fam[v] = spectral_projector(t[v], pick, tol) if x.dims[v] else np.zeros((0, 0), complex)
            except (ClusterGapTooSmall, NumericalFailure):
                continue
            if max((np.abs(p).max() for p in fam.values() if p.size), default=0.0) > MAX_PROJECTOR_NORM:
                continue
            idem, inter, nontrivial = _check_witness(x, fam, tol)
            if nontrivial and idem < tol.residual_tol and inter < tol.residual_tol:
                return IdempotentWitness(fam, idem, inter, {"trial": trial, "seed": seed})
    return None


def is_indecomposable(x: HilbertRep, tol: TolerancePolicy = DEFAULT_TOL, *, seed: int = 0,
                      trials: int = 256, with_witness: bool = True,
                      basis: HomBasis | None = None) -> Verdict:
    if x.is_zero():
        raise ZeroRepresentation("the zero representation is neither")
    hb = basis if basis is not None else hom_basis(x, x, tol)
    g = trace_gram([list(e.values()) for e in hb.elements])
    s = singular_values(g)
    d = len(hb)
    thresh = tol.rank_rel_tol * (s[0] if s.size else 0.0)
    rank = int(np.count_nonzero(s > thresh)) if s.size and s[0] > 0 else 0
    nullity = d - rank
    uncertain = bool(s.size and s[0] > 0 and np.any((s > thresh / MARGIN) & (s < thresh * MARGIN)))
    yes = (d - nullity) == 1
    witness = None
    if not yes and with_witness:
        witness = find_idempotent(x, tol, trials, seed, hb)
    return Verdict(yes, d, nullity, uncertain, witness, hb.method)


@dataclass
class Split:
    first: HilbertRep
    second: HilbertRep
    iso: Family  # x -> first (+) second
    iso_inv: Family
    residual: float

    def __iter__(self):
        yield self.first
        yield self.second
        yield self.iso


def split_by_idempotent(x: HilbertRep, w: IdempotentWitness, tol: TolerancePolicy = DEFAULT_TOL) -> Split:
    """Split along the image and kernel of an idempotent endomorphism.

    The subspaces need not be orthogonal; the isomorphism sends a vector to
    coordinates of its two components.
    """
    ea, eb, iso, inv = {}, {}, {}, {}
    for v in x.quiver.vertices:
        n = x.dims[v]
        p = w.family[v]
        a = image_onb(p, tol) if n else np.zeros((0, 0), complex)
        b = image_onb(np.eye(n) - p, tol) if n else np.zeros((0, 0), complex)
        if a.shape[1] + b.shape[1] != n:
            raise DegenerateIdempotent(f"ranks at {v} do not add up to {n}")
        ea[v], eb[v] = a, b
        iso[v] = np.vstack([a.conj().T @ p, b.conj().T @ (np.eye(n) - p)])
        inv[v] = np.hstack([a, b])
    mats_a, mats_b = {}, {}
    for arr in x.quiver.arrows:
        f = x.mats[arr.id]
        mats_a[arr.id] = ea[arr.dst].conj().T @ f @ ea[arr.src]
        mats_b[arr.id] = eb[arr.dst].conj().T @ f @ eb[arr.src]
    first = HilbertRep(x.quiver, {v: m.shape[1] for v, m in ea.items()}, mats_a)
    second = HilbertRep(x.quiver, {v: m.shape[1] for v, m in eb.items()}, mats_b)
    res = intertwiner_residual(x, direct_sum(first, second), iso)
    return Split(first, second, iso, inv, res)


def block_diag_family(s: Family, t: Family) -> Family:
    out = {}
    for v in s:
        a, b = s[v], t[v]
        m = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]), complex)
        m[: a.shape[0], : a.shape[1]] = a
        m[a.shape[0]:, a.shape[1]:] = b
        out[v] = m
    return out


@dataclass
class DecompositionResult:
    summands: list
    iso: Family  # input -> direct sum of summands
    method_log: list
    residual: float
    verdicts: list

    def to_json(self) -> dict:
        return {
            "summands": [s.to_json() for s in self.summands],
            "dims": [s.dims for s in self.summands],
            "iso": {v: {"rows": m.shape[0], "cols": m.shape[1], "re": m.real.ravel().tolist(),
                        "im": m.imag.ravel().tolist()} for v, m in self.iso.items()},
            "residual": self.residual,
            "method_log": self.method_log,
        }


def decompose_fully(x: HilbertRep, tol: TolerancePolicy = DEFAULT_TOL, *, seed: int = 0,
                    max_depth: int = 64, trials: int = 256) -> DecompositionResult:
    if x.is_zero():
        raise ZeroRepresentation("nothing to decompose")
    log: list = []
    counter = [0]

    def rec(y: HilbertRep, depth: int):
        if depth > max_depth:
            raise RecursionLimit(f"decomposition deeper than {max_depth}")
        call_seed = seed + counter[0]
        counter[0] += 1
        v = is_indecomposable(y, tol, seed=call_seed, trials=trials)
        entry = {"depth": depth, "dims": dict(y.dims), "end_dim": v.end_dim,
                 "radical_dim": v.radical_dim, "seed": call_seed}
        if v.indecomposable:
            entry["action"] = "leaf"
            log.append(entry)
            return [y], {u: np.eye(n, dtype=complex) for u, n in y.dims.items()}, [v]
        if v.witness is None:
            raise NumericalFailure("trace form says decomposable but no idempotent was found")
        sp = split_by_idempotent(y, v.witness, tol)
        entry.update(action="split", trial=v.witness.meta.get("trial"),
                     parts=[dict(sp.first.dims), dict(sp.second.dims)], split_residual=sp.residual)
        log.append(entry)
        sa, ia, va = rec(sp.first, depth + 1)
        sb, ib, vb = rec(sp.second, depth + 1)
        inner = block_diag_family(ia, ib)
        return sa + sb, {u: inner[u] @ sp.iso[u] for u in y.dims}, va + vb

    summands, iso, verdicts = rec(x, 0)
    res = intertwiner_residual(x, direct_sum_many(summands), iso)
    return DecompositionResult(summands, iso, log, res, verdicts)
