import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quiverrep.constructions import build_example, truncated_shift
from quiverrep.errors import NotASink, NotASource
from quiverrep.quiver import Quiver, sinks_and_sources
from quiverrep.reflect import (
    assemble_h,
    assemble_hhat,
    co_fullness,
    duality_decompose_sink,
    duality_decompose_source,
    fullness,
    reflect_hom_minus,
    reflect_hom_plus,
    reflect_minus,
    reflect_plus,
    star,
)
from quiverrep.rep import HilbertRep, hom_basis, intertwiner_residual, random_rep

from _corpus import corpus_rep, random_tree_quiver

V = Quiver(["0", "1", "2"], [("a", "1", "0"), ("b", "2", "0")])  # 1 -> 0 <- 2
W = Quiver(["0", "1", "2"], [("a", "0", "1"), ("b", "0", "2")])  # 1 <- 0 -> 2


def rep(q, dims, mats):
    return HilbertRep(q, dims, {k: np.atleast_2d(np.asarray(m, complex)) for k, m in mats.items()})


def ones_sink():
    return rep(V, {"0": 1, "1": 1, "2": 1}, {"a": [[1]], "b": [[1]]})


def ones_source():
    return rep(W, {"0": 1, "1": 1, "2": 1}, {"a": [[1]], "b": [[1]]})


class TestAssemble:
    def test_sum_map(self):
        assert np.allclose(assemble_h(ones_sink(), "0"), [[1, 1]])

    def test_isolated(self):
        x = rep(Quiver(["0"]), {"0": 2}, {})
        assert assemble_h(x, "0").shape == (2, 0)
        assert assemble_hhat(x, "0").shape == (0, 2)

    def test_fourspace_inclusions(self):
        x = build_example("D4_fourspace", 2)
        h = assemble_h(x, "0")
        blocks = [x.mats[a.id] for a in x.quiver.in_arrows("0")]
        assert np.allclose(h, np.hstack(blocks)) and h.shape == (4, 8)

    def test_status_checked(self):
        with pytest.raises(NotASink):
            assemble_h(ones_source(), "0")
        with pytest.raises(NotASource):
            assemble_hhat(ones_sink(), "0")


class TestReflect:
    def test_plus_kernel(self):
        out = reflect_plus(ones_sink(), "0")
        k = out.vertex_basis[:, 0]
        assert np.allclose(abs(k), [2 ** -0.5] * 2) and np.isclose(k[0], -k[1])
        # new maps read off coordinates
        y = out.rep
        assert np.allclose(y.mats["a~"], out.block(0)) and np.allclose(y.mats["b~"], out.block(1))

    def test_plus_full_square_gives_zero(self):
        x = rep(V, {"0": 2, "1": 1, "2": 1}, {"a": [[1], [0]], "b": [[0], [1]]})
        assert reflect_plus(x, "0").rep.dims["0"] == 0

    def test_plus_zero_maps(self):
        x = rep(V, {"0": 1, "1": 1, "2": 2}, {"a": [[0]], "b": [[0, 0]]})
        out = reflect_plus(x, "0")
        assert out.rep.dims["0"] == 3
        assert np.allclose(np.abs(out.vertex_basis.conj().T @ out.vertex_basis), np.eye(3))

    def test_minus_complement(self):
        out = reflect_minus(ones_source(), "0")
        k = out.vertex_basis[:, 0]
        assert np.isclose(k[0], -k[1]) and np.isclose(np.linalg.norm(k), 1)

    def test_minus_zero_maps_are_inclusions(self):
        x = rep(W, {"0": 1, "1": 1, "2": 1}, {"a": [[0]], "b": [[0]]})
        out = reflect_minus(x, "0")
        assert out.rep.dims["0"] == 2
        both = np.hstack([out.rep.mats["a~"], out.rep.mats["b~"]])
        assert np.allclose(both.conj().T @ both, np.eye(2))

    def test_minus_injective_square(self):
        x = rep(W, {"0": 2, "1": 1, "2": 1}, {"a": [[1, 0]], "b": [[0, 1]]})
        assert reflect_minus(x, "0").rep.dims["0"] == 0


class TestStar:
    def test_real_diagonal(self):
        x = rep(Quiver(["1"], [("a", "1", "1")]), {"1": 2}, {"a": np.diag([1.0, 2.0])})
        assert np.allclose(star(x).mats["a~"], np.diag([1.0, 2.0]))

    def test_jordan(self):
        x = build_example("A0_loop", 3)
        (m,) = star(x).mats.values()
        assert np.allclose(m, truncated_shift(3).T)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_hom_dims_swap(self, seed):
        rng = np.random.default_rng(seed)
        q = random_tree_quiver(rng, int(rng.integers(1, 5)))
        a, b = corpus_rep(rng, q, 3), corpus_rep(rng, q, 3)
        assert len(hom_basis(a, b)) == len(hom_basis(star(b), star(a)))


class TestReflectHom:
    def test_identity_and_zero(self):
        x = ones_sink()
        eye = {v: np.eye(n) for v, n in x.dims.items()}
        s = reflect_hom_plus(eye, x, x, "0")
        assert np.allclose(s["0"], np.eye(reflect_plus(x, "0").rep.dims["0"]))
        zero = {v: np.zeros((n, n)) for v, n in x.dims.items()}
        assert np.allclose(reflect_hom_plus(zero, x, x, "0")["0"], 0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_functorial(self, seed):
        rng = np.random.default_rng(seed)
        q = random_tree_quiver(rng, int(rng.integers(2, 5)))
        v = sorted(sinks_and_sources(q)[0])[0]
        x = corpus_rep(rng, q, 3)
        hb = hom_basis(x, x)
        s = hb.combine(rng.standard_normal(len(hb)))
        t = hb.combine(rng.standard_normal(len(hb)))
        ts = {u: t[u] @ s[u] for u in s}
        lhs = reflect_hom_plus(ts, x, x, v)
        fs, ft = reflect_hom_plus(s, x, x, v), reflect_hom_plus(t, x, x, v)
        assert np.allclose(lhs[v], ft[v] @ fs[v], atol=1e-8)
        y = reflect_plus(x, v).rep
        assert intertwiner_residual(y, y, fs) < 1e-8

    def test_minus_is_intertwiner(self):
        rng = np.random.default_rng(4)
        x = random_rep(W, {"0": 2, "1": 2, "2": 1}, rng)
        hb = hom_basis(x, x)
        t = hb.combine(rng.standard_normal(len(hb)))
        s = reflect_hom_minus(t, x, x, "0")
        y = reflect_minus(x, "0").rep
        assert intertwiner_residual(y, y, s) < 1e-8


class TestFullness:
    def test_row(self):
        assert fullness(ones_sink(), "0").holds

    def test_defect(self):
        x = rep(V, {"0": 2, "1": 1, "2": 1}, {"a": [[0], [0]], "b": [[0], [0]]})
        f = fullness(x, "0")
        assert not f.holds and f.defect == 2

    def test_fourspace_full(self):
        assert fullness(build_example("D4_fourspace", 3), "0").holds

    def test_co_fullness(self):
        assert co_fullness(ones_source(), "0").holds
        x = rep(W, {"0": 2, "1": 1, "2": 1}, {"a": [[0, 0]], "b": [[0, 0]]})
        assert co_fullness(x, "0").defect == 2

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_reflections_land_in_lemmas(self, seed):
        rng = np.random.default_rng(seed)
        q = random_tree_quiver(rng, int(rng.integers(2, 6)))
        x = corpus_rep(rng, q, 4)
        sinks, sources = sinks_and_sources(q)
        for v in sinks:
            assert co_fullness(reflect_plus(x, v).rep, v).holds
        for v in sources:
            assert fullness(reflect_minus(x, v).rep, v).holds


class TestDuality:
    def test_full_means_no_tilde(self):
        r = duality_decompose_sink(ones_sink(), "0")
        assert r.tilde_dim == 0 and r.residual < 1e-12

    def test_zero_maps(self):
        x = rep(V, {"0": 3, "1": 1, "2": 1}, {"a": np.zeros((3, 1)), "b": np.zeros((3, 1))})
        r = duality_decompose_sink(x, "0")
        assert r.tilde_dim == 3 and r.reflected.dims["0"] == 0

    def test_source_mirror(self):
        x = rep(W, {"0": 3, "1": 1, "2": 1}, {"a": np.zeros((1, 3)), "b": np.zeros((1, 3))})
        r = duality_decompose_source(x, "0")
        assert r.tilde_dim == 3 and r.residual < 1e-12
        r = duality_decompose_source(ones_source(), "0")
        assert r.tilde_dim == 0 and r.residual < 1e-12

    def test_unpacks(self):
        iso, d = duality_decompose_sink(ones_sink(), "0")
        assert d == 0 and set(iso) == {"0", "1", "2"}

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_random(self, seed):
        rng = np.random.default_rng(seed)
        q = random_tree_quiver(rng, int(rng.integers(2, 6)))
        x = corpus_rep(rng, q, 4)
        sinks, sources = sinks_and_sources(q)
        for v in sinks:
            r = duality_decompose_sink(x, v)
            assert r.residual < 1e-8
            h = assemble_h(x, v)
            rank = np.linalg.matrix_rank(h) if h.size else 0
            assert r.tilde_dim == x.dims[v] - rank
        for v in sources:
            assert duality_decompose_source(x, v).residual < 1e-8
