import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quiverrep.constructions import build_example, truncated_shift
from quiverrep.errors import BadEmbedding, BadParameter, QuiverMismatch
from quiverrep.quiver import Quiver, path_quiver
from quiverrep.rep import (
    HilbertRep,
    direct_sum,
    end_dim,
    find_isomorphism,
    hom_basis,
    intertwiner_residual,
    pad_to_supergraph,
    random_rep,
    zero_rep,
)

from _corpus import corpus_rep, hom_dim_oracle, random_quiver, scramble


def loop_rep(m):
    m = np.atleast_2d(np.asarray(m, complex))
    return HilbertRep(Quiver(["1"], [("a", "1", "1")]), {"1": m.shape[0]}, {"a": m})


class TestHilbertRep:
    def test_shape_checked(self):
        with pytest.raises(BadParameter):
            HilbertRep(path_quiver(2), {"1": 2, "2": 1}, {"a1": np.zeros((2, 2))})

    def test_missing_matrix(self):
        with pytest.raises(BadParameter):
            HilbertRep(path_quiver(2), {"1": 1, "2": 1}, {})

    def test_json_round_trip(self):
        x = random_rep(path_quiver(3), {"1": 2, "2": 0, "3": 3}, np.random.default_rng(0))
        y = HilbertRep.from_json(x.to_json())
        assert y.dims == x.dims
        assert all(np.array_equal(x.mats[k], y.mats[k]) for k in x.mats)

    def test_read_only(self):
        x = loop_rep(truncated_shift(2))
        with pytest.raises(ValueError):
            x.mats["a"][0, 0] = 1


class TestDirectSum:
    def test_zero_summand(self):
        x = random_rep(path_quiver(2), {"1": 1, "2": 2}, np.random.default_rng(1))
        s = direct_sum(x, zero_rep(x.quiver))
        assert s.dims == x.dims

    def test_dims_add(self):
        q = path_quiver(2)
        a = random_rep(q, {"1": 1, "2": 1}, np.random.default_rng(2))
        b = random_rep(q, {"1": 2, "2": 0}, np.random.default_rng(3))
        assert direct_sum(a, b).dim_vector() == (3, 1)

    def test_jordan_blocks(self):
        s = direct_sum(loop_rep(truncated_shift(2)), loop_rep([[0]]))
        want = np.zeros((3, 3))
        want[1, 0] = 1
        assert np.array_equal(s.mats["a"], want)

    def test_mismatch(self):
        with pytest.raises(QuiverMismatch):
            direct_sum(zero_rep(path_quiver(2)), zero_rep(path_quiver(3)))


class TestHom:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_jordan_commutant(self, n):
        x = loop_rep(truncated_shift(n))
        assert hom_dim_oracle(x, x) == n
        assert end_dim(x) == n

    def test_single_vertex(self):
        x = HilbertRep(Quiver(["1"]), {"1": 1}, {})
        assert end_dim(x) == 1

    @pytest.mark.parametrize("n", [2, 3])
    def test_fourspace(self, n):
        x = build_example("D4_fourspace", n)
        assert hom_dim_oracle(x, x) == n == end_dim(x)

    def test_end_of_double(self):
        x = loop_rep(truncated_shift(2))
        assert end_dim(direct_sum(x, x)) == 4 * end_dim(x) == 8

    def test_unknown_method(self):
        x = loop_rep([[1]])
        with pytest.raises(BadParameter):
            hom_basis(x, x, method="magic")

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_methods_agree_with_oracle(self, seed):
        rng = np.random.default_rng(seed)
        q = random_quiver(rng, 4)
        a = corpus_rep(rng, q, 3)
        b = scramble(a, rng) if rng.random() < 0.5 else corpus_rep(rng, q, 3)
        d = hom_dim_oracle(a, b)
        for method in ("stacked", "eliminate"):
            hb = hom_basis(a, b, method=method)
            assert len(hb) == d
            for t in hb.elements:
                assert intertwiner_residual(a, b, t) < 1e-8
            if len(hb):
                assert np.allclose(hb.vectors.conj().T @ hb.vectors, np.eye(len(hb)), atol=1e-8)

    def test_e6_pair_not_isomorphic(self):
        a = build_example("E6_tilde", 3)
        b = build_example("E6_tilde_alt", 3)
        assert a.dims == b.dims
        assert find_isomorphism(a, b, trials=64) is None


class TestIsomorphism:
    def test_self(self):
        x = build_example("A0_loop", 3)
        t = find_isomorphism(x, x)
        assert t is not None and intertwiner_residual(x, x, t) < 1e-10

    def test_dims_mismatch(self):
        assert find_isomorphism(loop_rep(np.eye(2)), loop_rep(np.eye(3))) is None

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_scrambled_copy(self, seed):
        rng = np.random.default_rng(seed)
        x = corpus_rep(rng, random_quiver(rng, 4), 3)
        y = scramble(x, rng)
        t = find_isomorphism(x, y)
        assert t is not None and intertwiner_residual(x, y, t) < 1e-7


class TestPad:
    def test_path(self):
        x = random_rep(path_quiver(2), {"1": 2, "2": 1}, np.random.default_rng(0))
        big = path_quiver(3)
        y = pad_to_supergraph(x, big, {"vertices": {"1": "1", "2": "2"}, "arrows": {"a1": "a1"}})
        assert y.dims == {"1": 2, "2": 1, "3": 0}

    def test_dn(self):
        x = build_example("Dn_tilde", 2, m=4)
        verts = list(x.quiver.vertices) + ["6"]
        arrows = [(a.id, a.src, a.dst) for a in x.quiver.arrows] + [("5-6", "5", "6")]
        big = Quiver(verts, arrows)
        emb = {"vertices": {v: v for v in x.quiver.vertices}, "arrows": {a.id: a.id for a in x.quiver.arrows}}
        y = pad_to_supergraph(x, big, emb)
        assert y.dims["6"] == 0
        assert end_dim(y) == end_dim(x) == 2

    def test_bad_embedding(self):
        x = random_rep(path_quiver(2), {"1": 1, "2": 1}, np.random.default_rng(0))
        with pytest.raises(BadEmbedding):
            pad_to_supergraph(x, path_quiver(3), {"vertices": {"1": "2", "2": "1"}, "arrows": {"a1": "a1"}})
