import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quiverrep.constructions import build_example, truncated_shift
from quiverrep.decompose import (
    IdempotentWitness,
    decompose_fully,
    find_idempotent,
    is_indecomposable,
    split_by_idempotent,
    witness_is_valid,
)
from quiverrep.errors import RecursionLimit, ZeroRepresentation
from quiverrep.quiver import Quiver, path_quiver
from quiverrep.rep import (
    HilbertRep,
    direct_sum,
    direct_sum_many,
    find_isomorphism,
    intertwiner_residual,
    random_rep,
    zero_rep,
)

from _corpus import corpus_rep, random_quiver, scramble

V = Quiver(["0", "1", "2"], [("a", "1", "0"), ("b", "2", "0")])  # 1 -> 0 <- 2


def two_lines(theta=0.7):
    """Two distinct lines in the plane, as inclusions into the sink."""
    return HilbertRep(V, {"0": 2, "1": 1, "2": 1},
                      {"a": [[1.0], [0.0]], "b": [[np.cos(theta)], [np.sin(theta)]]})


def simple(q, v):
    dims = {u: int(u == v) for u in q.vertices}
    return HilbertRep(q, dims, {a.id: np.zeros((dims[a.dst], dims[a.src])) for a in q.arrows})


class TestVerdict:
    def test_point(self):
        v = is_indecomposable(HilbertRep(Quiver(["1"]), {"1": 1}, {}))
        assert v.indecomposable and (v.end_dim, v.radical_dim) == (1, 0)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_jordan_loop(self, n):
        v = is_indecomposable(build_example("A0_loop", n))
        assert v.indecomposable and (v.end_dim, v.radical_dim) == (n, n - 1)
        assert v.to_json() == {"verdict": "indecomposable", "end_dim": n, "radical_dim": n - 1}

    def test_two_lines_split(self):
        v = is_indecomposable(two_lines())
        assert not v.indecomposable and v.end_dim == 2 and v.radical_dim == 0
        assert v.witness is not None and witness_is_valid(two_lines(), v.witness)

    def test_zero(self):
        with pytest.raises(ZeroRepresentation):
            is_indecomposable(zero_rep(V))


class TestWitness:
    def test_jordan_has_none(self):
        assert find_idempotent(build_example("A0_loop", 3)) is None

    def test_two_simples(self):
        q = path_quiver(2)
        x = direct_sum(simple(q, "1"), simple(q, "2"))
        w = find_idempotent(x)
        assert w is not None
        assert sorted(w.ranks().values()) == [0, 1]

    def test_two_lines_witness_is_oblique(self):
        w = find_idempotent(two_lines())
        p0 = w.family["0"]
        assert np.allclose(p0 @ p0, p0)
        assert not np.allclose(p0, p0.conj().T)

    def test_invalid_rejected(self):
        x = two_lines()
        fam = {"0": np.eye(2), "1": np.eye(1), "2": np.zeros((1, 1))}
        assert not witness_is_valid(x, IdempotentWitness(fam, 0.0, 0.0))


class TestSplit:
    def test_canonical(self):
        q = path_quiver(2)
        a, b = random_rep(q, {"1": 1, "2": 2}, np.random.default_rng(0)), simple(q, "1")
        x = direct_sum(a, b)
        p = {"1": np.diag([1.0, 0.0]), "2": np.eye(2)}
        sp = split_by_idempotent(x, IdempotentWitness(p, 0.0, 0.0))
        assert sp.first.dims == a.dims and sp.second.dims == b.dims
        assert find_isomorphism(sp.first, a) is not None
        assert sp.residual < 1e-12

    def test_two_lines_shape(self):
        x = two_lines()
        res = decompose_fully(x)
        shapes = sorted(tuple(s.dim_vector()) for s in res.summands)
        assert shapes == [(1, 0, 1), (1, 1, 0)]
        assert res.residual < 1e-8

    def test_scrambled_two_plus_three(self):
        rng = np.random.default_rng(11)
        q = Quiver(["1", "2"], [("a", "1", "2"), ("b", "1", "2")])
        a = random_rep(q, {"1": 1, "2": 1}, rng)
        b = random_rep(q, {"1": 1, "2": 2}, rng)
        for part in (a, b):
            assert is_indecomposable(part).indecomposable
        x = scramble(direct_sum(a, b), rng)
        res = decompose_fully(x)
        assert sorted(s.dim_vector() for s in res.summands) == [(1, 1), (1, 2)]
        assert res.residual < 1e-8


class TestDecomposeFully:
    def test_indecomposable_is_leaf(self):
        x = build_example("D4_fourspace", 3)
        res = decompose_fully(x)
        assert len(res.summands) == 1
        assert all(np.allclose(m, np.eye(m.shape[0])) for m in res.iso.values())

    def test_three_simples(self):
        q = path_quiver(3)
        x = direct_sum_many([simple(q, v) for v in q.vertices])
        res = decompose_fully(x)
        assert len(res.summands) == 3 and res.residual < 1e-10

    def test_a3_intervals(self):
        x = random_rep(path_quiver(3), {"1": 2, "2": 2, "3": 2}, np.random.default_rng(3))
        res = decompose_fully(x)
        for s in res.summands:
            d = [s.dims[v] for v in s.quiver.vertices]
            support = [i for i, k in enumerate(d) if k]
            assert max(d) == 1 and support == list(range(support[0], support[-1] + 1))
        assert res.residual < 1e-8

    def test_depth_limit(self):
        q = path_quiver(2)
        x = direct_sum_many([simple(q, "1")] * 3)
        with pytest.raises(RecursionLimit):
            decompose_fully(x, max_depth=0)

    def test_jordan_sum(self):
        loop = build_example("A0_loop", 2)
        x = scramble(direct_sum(loop, build_example("A0_loop", 3)), np.random.default_rng(5))
        res = decompose_fully(x)
        assert sorted(s.total_dim for s in res.summands) == [2, 3]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_verdict_matches_witness_and_splits_reassemble(seed):
    rng = np.random.default_rng(seed)
    x = corpus_rep(rng, random_quiver(rng, 5), 3)
    v = is_indecomposable(x)
    if v.indecomposable:
        assert find_idempotent(x) is None
        return
    assert v.witness is not None
    sp = split_by_idempotent(x, v.witness)
    assert sp.residual < 1e-8
    assert {u: sp.first.dims[u] + sp.second.dims[u] for u in x.dims} == x.dims
    res = decompose_fully(x)
    assert res.residual < 1e-8
    assert intertwiner_residual(x, direct_sum_many(res.summands), res.iso) < 1e-8
    for s in res.summands:
        assert is_indecomposable(s).indecomposable


def test_jordan_identity_scale_invariance():
    # scaling the maps does not change the verdict
    j = truncated_shift(4)
    for c in (1e-3, 1.0, 1e3):
        x = HilbertRep(Quiver(["1"], [("a", "1", "1")]), {"1": 4}, {"a": c * j})
        assert is_indecomposable(x).indecomposable
