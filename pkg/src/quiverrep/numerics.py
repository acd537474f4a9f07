"""Dense complex-matrix primitives under one tolerance policy.

All matrices are ``complex128`` numpy arrays. Empty shapes (a zero row or
column count) are legal everywhere because reflections routinely produce
zero-dimensional vertex spaces.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, replace
from typing import Callable, Iterable, Sequence, Union

import numpy as np
import scipy.linalg as sla

from .errors import BadParameter, ClusterGapTooSmall, NumericalFailure

ENV_TOL = "QUIVERREP_TOL"


@dataclass(frozen=True)
class TolerancePolicy:
    rank_rel_tol: float = 1e-10
    residual_tol: float = 1e-8
    eig_cluster_gap: float = 1e-6

    def __post_init__(self):
        vals = (self.rank_rel_tol, self.residual_tol, self.eig_cluster_gap)
        if not all(np.isfinite(v) and v > 0 for v in vals):
            raise BadParameter("tolerances must be finite and positive")
        if not self.rank_rel_tol < self.eig_cluster_gap < 1:
            raise BadParameter("need rank_rel_tol < eig_cluster_gap < 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_spec(cls, text: str, base: "TolerancePolicy | None" = None) -> "TolerancePolicy":
        """Parse ``text`` as JSON object, ``key=value`` pairs, or a bare number.

        A bare number sets ``residual_tol`` only.
        """
        base = base or cls()
        text = text.strip()
        if not text:
            return base
        try:
            obj = json.loads(text)
        except json.JSONDecodeError:
            obj = None
        if isinstance(obj, (int, float)):
            return replace(base, residual_tol=float(obj))
        if isinstance(obj, dict):
            pairs = obj
        else:
            pairs = {}
            for part in text.replace(";", ",").split(","):
                if not part.strip():
                    continue
                if "=" not in part:
                    raise BadParameter(f"bad tolerance item {part!r}")
                k, v = part.split("=", 1)
                pairs[k.strip()] = v.strip()
        known = {"rank_rel_tol", "residual_tol", "eig_cluster_gap"}
        extra = set(pairs) - known
        if extra:
            raise BadParameter(f"unknown tolerance keys: {sorted(extra)}")
        try:
            return replace(base, **{k: float(v) for k, v in pairs.items()})
        except (TypeError, ValueError) as exc:
            raise BadParameter(str(exc)) from None

    @classmethod
    def resolve(cls, flag: str | None = None, env: dict | None = None) -> "TolerancePolicy":
        """Precedence: explicit flag, then ``QUIVERREP_TOL``, then defaults."""
        env = os.environ if env is None else env
        if flag:
            return cls.from_spec(flag)
        if env.get(ENV_TOL):
            return cls.from_spec(env[ENV_TOL])
        return cls()


DEFAULT_TOL = TolerancePolicy()

SelectorLike = Union[Callable[[complex], bool], Iterable[complex]]


def cmat(a, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Coerce to a finite 2-D complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        if m.size == 0 and rows is not None and cols is not None:
            m = m.reshape(rows, cols)
        else:
            raise BadParameter(f"expected a 2-D matrix, got shape {m.shape}")
    if rows is not None and m.shape != (rows, cols):
        raise BadParameter(f"expected shape {(rows, cols)}, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise BadParameter("matrix has non-finite entries")
    return m


def _svd(m: np.ndarray, full: bool):
    try:
        return np.linalg.svd(m, full_matrices=full)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from None


def _rank_from_sv(s: np.ndarray, tol: TolerancePolicy, scale: float | None = None) -> int:
    # ``scale`` lets callers measure against the data a matrix was built from,
    # so a system that vanishes up to rounding is not mistaken for full rank
    ref = s[0] if s.size else 0.0
    if scale is not None:
        ref = max(ref, scale)
    if s.size == 0 or ref == 0.0:
        return 0
    return int(np.count_nonzero(s > tol.rank_rel_tol * ref))


def singular_values(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.size == 0:
        return np.zeros(0)
    try:
        return np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from None


def rank_svd(m, tol: TolerancePolicy = DEFAULT_TOL, scale: float | None = None) -> int:
    return _rank_from_sv(singular_values(m), tol, scale)


def kernel_onb(m, tol: TolerancePolicy = DEFAULT_TOL, scale: float | None = None) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    rows, cols = m.shape
    if rows == 0 or cols == 0:
        return np.eye(cols, dtype=np.complex128)
    _, s, vh = _svd(m, True)
    r = _rank_from_sv(s, tol, scale)
    return np.ascontiguousarray(vh[r:].conj().T)


def image_onb(m, tol: TolerancePolicy = DEFAULT_TOL, scale: float | None = None) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    rows, cols = m.shape
    if rows == 0 or cols == 0:
        return np.zeros((rows, 0), dtype=np.complex128)
    u, s, _ = _svd(m, False)
    return np.ascontiguousarray(u[:, : _rank_from_sv(s, tol, scale)])


def orth_complement_onb(m, tol: TolerancePolicy = DEFAULT_TOL, scale: float | None = None) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    rows, cols = m.shape
    if rows == 0 or cols == 0:
        return np.eye(rows, dtype=np.complex128)
    u, s, _ = _svd(m, True)
    return np.ascontiguousarray(u[:, _rank_from_sv(s, tol, scale):])


def polar_parts(t, tol: TolerancePolicy = DEFAULT_TOL):
    """Return ``(U, |T|)`` with ``U`` the partial isometry of ``T = U|T|``."""
    t = np.asarray(t, dtype=np.complex128)
    rows, cols = t.shape
    if rows == 0 or cols == 0:
        return np.zeros((rows, cols), complex), np.zeros((cols, cols), complex)
    w, s, vh = _svd(t, False)
    r = _rank_from_sv(s, tol)
    w, s, vh = w[:, :r], s[:r], vh[:r]
    u = w @ vh
    abs_t = (vh.conj().T * s) @ vh
    return u, 0.5 * (abs_t + abs_t.conj().T)


def left_quasi_inverse(t, tol: TolerancePolicy = DEFAULT_TOL, scale: float | None = None):
    """Return ``(B, Q)`` with ``B T = Q`` and ``Q`` the projection onto ``Im T*``.

    ``B = S U*`` where ``S`` inverts ``|T|`` on its range.
    """
    t = np.asarray(t, dtype=np.complex128)
    rows, cols = t.shape
    if rows == 0 or cols == 0:
        return np.zeros((cols, rows), complex), np.zeros((cols, cols), complex)
    w, s, vh = _svd(t, False)
    r = _rank_from_sv(s, tol, scale)
    w, s, vh = w[:, :r], s[:r], vh[:r]
    v = vh.conj().T
    b = (v / s) @ w.conj().T
    q = v @ vh
    return b, q


def _as_mask(selector: SelectorLike, eigs: np.ndarray, tol: TolerancePolicy) -> np.ndarray:
    if callable(selector):
        return np.array([bool(selector(z)) for z in eigs], dtype=bool)
    targets = np.asarray(list(selector), dtype=np.complex128)
    if targets.size == 0:
        return np.zeros(eigs.shape, dtype=bool)
    # a target picks every eigenvalue within the cluster gap of it
    return np.abs(eigs[:, None] - targets[None, :]).min(axis=1) <= tol.eig_cluster_gap


def spectral_projector(t, selector: SelectorLike, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """Riesz projector onto the generalized eigenspaces picked by ``selector``.

    ``selector`` is either a predicate on eigenvalues or a collection of
    target eigenvalues. Uses a reordered complex Schur form and a Sylvester
    solve for the coupling block, so non-normal inputs are fine.
    """
    t = np.asarray(t, dtype=np.complex128)
    n = t.shape[0]
    if t.shape != (n, n):
        raise BadParameter("spectral_projector needs a square matrix")
    if n == 0:
        return np.zeros((0, 0), complex)
    try:
        r, z = sla.schur(t, output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"Schur failed: {exc}") from None
    eigs = np.diag(r).copy()
    mask = _as_mask(selector, eigs, tol)
    k = int(mask.sum())
    if k == 0:
        return np.zeros((n, n), complex)
    if k == n:
        return np.eye(n, dtype=complex)
    gap = np.abs(eigs[mask][:, None] - eigs[~mask][None, :]).min()
    if gap <= tol.eig_cluster_gap:
        raise ClusterGapTooSmall(f"selected cluster is only {gap:.3g} away from the rest")
    chosen = eigs[mask]
    rest = eigs[~mask]

    def pick(zv):
        return np.abs(chosen - zv).min() < np.abs(rest - zv).min()

    try:
        r, z, sdim = sla.schur(t, output="complex", sort=pick)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"Schur reordering failed: {exc}") from None
    if sdim != k:
        raise NumericalFailure("Schur reordering changed the cluster size")
    r11, r12, r22 = r[:k, :k], r[:k, k:], r[k:, k:]
    try:
        x = sla.solve_sylvester(r11, -r22, r12)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"Sylvester solve failed: {exc}") from None
    p = np.zeros((n, n), complex)
    p[:k, :k] = np.eye(k)
    p[:k, k:] = x
    out = z @ p @ z.conj().T
    if not np.all(np.isfinite(out)):
        raise NumericalFailure("spectral projector is not finite")
    return out


def _flat_blocks(element) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(element, np.ndarray) and element.ndim == 2:
        blocks: Sequence[np.ndarray] = [element]
    else:
        blocks = list(element)
    a = [np.asarray(b, dtype=complex).ravel() for b in blocks]
    at = [np.asarray(b, dtype=complex).T.ravel() for b in blocks]
    if not a:
        return np.zeros(0, complex), np.zeros(0, complex)
    return np.concatenate(a), np.concatenate(at)


def trace_gram(basis) -> np.ndarray:
    """Matrix ``G[i, j] = tr(B_i B_j)``.

    Elements may be square matrices or sequences of square blocks, read as
    block-diagonal operators.
    """
    if len(basis) == 0:
        return np.zeros((0, 0), complex)
    flat = [_flat_blocks(b) for b in basis]
    m = np.stack([f[0] for f in flat])
    mt = np.stack([f[1] for f in flat])
    return m @ mt.T


def gram_nullity(basis, tol: TolerancePolicy = DEFAULT_TOL) -> int:
    g = trace_gram(basis)
    return g.shape[0] - rank_svd(g, tol)
