import numpy as np
import pytest

from rcit import synth
from rcit.synth import Dag


class TestPostNonlinear:
    def test_shapes(self, rng):
        x, y, z = synth.gen_pnl_null(50, 3, rng)
        assert x.shape == (50, 1) and y.shape == (50, 1) and z.shape == (50, 3)

    def test_reproducible(self):
        a = synth.gen_pnl_alt(20, 2, synth.trial_rng(4, 9))
        b = synth.gen_pnl_alt(20, 2, synth.trial_rng(4, 9))
        for u, v in zip(a, b):
            np.testing.assert_array_equal(u, v)

    def test_null_identity_residuals_uncorrelated(self, rng):
        n = 200_000
        x, y, z = synth.gen_pnl_null(n, 4, rng, funcs=("identity", "identity"))
        zbar = z.mean(1)
        # x - zbar and y - zbar are the independent noises
        r = np.corrcoef(x[:, 0] - zbar, y[:, 0] - zbar)[0, 1]
        assert abs(r) < 5 / np.sqrt(n)
        assert np.corrcoef(x[:, 0], y[:, 0])[0, 1] == pytest.approx(0.25 / 1.25, abs=0.01)

    def test_null_partial_correlation_n1e4(self):
        from rcit.citest import fisher_z

        x, y, z = synth.gen_pnl_null(10_000, 1, np.random.default_rng(2), funcs=("identity", "identity"))
        r = np.tanh(fisher_z(x, y, z).statistic / np.sqrt(10_000 - 4))
        assert r < 0.05

    def test_alt_z_independent_n1e4(self):
        x, y, z = synth.gen_pnl_alt(10_000, 1, np.random.default_rng(3))
        assert abs(np.corrcoef(x[:, 0], z[:, 0])[0, 1]) < 0.05

    def test_alt_identity_correlation(self, rng):
        x, y, z = synth.gen_pnl_alt(1_000_000, 1, rng, funcs=("identity", "identity"))
        s = synth.EPS_SHARED_VAR
        assert np.corrcoef(x[:, 0], y[:, 0])[0, 1] == pytest.approx(s / (1 + s), abs=0.01)
        assert abs(np.corrcoef(x[:, 0], z[:, 0])[0, 1]) < 0.012

    @pytest.mark.parametrize("tag,u,expected", [
        ("identity", -2.0, -2.0), ("square", -2.0, 4.0), ("cube", -2.0, -8.0),
        ("tanh", 0.0, 0.0), ("negexp", -2.0, np.exp(-2.0)),
    ])
    def test_nonlinearities(self, tag, u, expected):
        assert synth.apply_nonlinearity(tag, u) == pytest.approx(expected)

    def test_nonlinearity_sampling_uniform(self, rng):
        tags = [synth.sample_nonlinearity(rng) for _ in range(5000)]
        counts = [tags.count(t) for t in synth.NONLINEARITY_TAGS]
        assert min(counts) > 850 and max(counts) < 1150

    @pytest.mark.parametrize("n,k", [(1, 1), (10, 0)])
    def test_invalid(self, rng, n, k):
        with pytest.raises(ValueError):
            synth.gen_pnl_null(n, k, rng)


class TestDag:
    def test_from_edges(self):
        d = Dag.from_edges(3, [(0, 1), (1, 2), (0, 2)])
        assert d.parents(2) == [0, 1] and d.children(0) == [1, 2]
        assert d.num_edges() == 3 and d.is_acyclic()

    def test_cycle_detected(self):
        assert not Dag.from_edges(3, [(0, 1), (1, 2), (2, 0)]).is_acyclic()

    def test_random_dag_lower_triangular(self, rng):
        d = synth.gen_random_dag(20, 2, rng)
        assert np.all(np.triu(d.weights) == 0)
        nz = np.abs(d.weights[d.weights != 0])
        assert np.all((nz >= 0.1) & (nz <= 1.0))

    def test_random_dag_expected_degree(self, rng):
        edges = [synth.gen_random_dag(20, 2, rng).num_edges() for _ in range(500)]
        # E[#edges] = E[N] * v / 2
        assert abs(np.mean(edges) - 20.0) <= 1.0

    def test_random_dag_invalid(self, rng):
        with pytest.raises(ValueError):
            synth.gen_random_dag(5, 10, rng)

    def test_names(self):
        assert Dag(np.zeros((2, 2))).vertex_names == ["X1", "X2"]
        with pytest.raises(ValueError):
            Dag(np.zeros((2, 2)), ["a"])


class TestSimulation:
    def test_linear_covariance(self, rng):
        d = Dag.from_edges(3, [(0, 1), (1, 2)])
        d.weights[1, 0] = 0.8
        d.weights[2, 1] = -0.5
        data, tags = synth.simulate_dag_data(d, 200_000, False, rng)
        assert tags == ["identity"] * 3
        inv = np.linalg.inv(np.eye(3) - d.weights)
        np.testing.assert_allclose(np.cov(data.T), inv @ inv.T, atol=0.02)

    def test_empty_dag_identity_covariance(self, rng):
        data, _ = synth.simulate_dag_data(Dag(np.zeros((4, 4))), 100_000, False, rng)
        np.testing.assert_allclose(np.cov(data.T), np.eye(4), atol=0.05)

    def test_linear_covariance_relative(self):
        d = Dag.from_edges(3, [(0, 1), (1, 2), (0, 2)])
        d.weights[1, 0], d.weights[2, 1], d.weights[2, 0] = 0.9, 0.7, -0.4
        data, _ = synth.simulate_dag_data(d, 100_000, False, np.random.default_rng(6))
        inv = np.linalg.inv(np.eye(3) - d.weights)
        np.testing.assert_allclose(np.cov(data.T), inv @ inv.T, rtol=0.05)

    def test_identity_tags_equal_linear(self):
        d = synth.gen_random_dag(6, 2, np.random.default_rng(1))
        lin, _ = synth.simulate_dag_data(d, 50, False, np.random.default_rng(9))
        nl, _ = synth.simulate_dag_data(d, 50, True, np.random.default_rng(9), tags=["identity"] * 6)
        np.testing.assert_array_equal(lin, nl)

    def test_fixed_tags(self, rng):
        d = Dag.from_edges(2, [])
        data, tags = synth.simulate_dag_data(d, 100, True, rng, tags=["square", "square"])
        assert tags == ["square", "square"] and np.all(data >= 0)

    def test_latent_and_selection(self, rng):
        # 0 -> 1, 0 -> 2, 1 -> 3, 2 -> 3: 0 is the only latent candidate, 3 the only collider
        d = Dag.from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)])
        data, _ = synth.simulate_dag_data(d, 1000, False, rng)
        out, meta = synth.apply_latent_and_selection(data, d, rng, num_latent=1, num_selection=1)
        assert meta["latents"] == [0] and meta["selection"] == [3]
        assert out.shape == (meta["rows_after"], 3)
        q = meta["selection_quantiles"]["3"]
        assert 0.1 <= q <= 0.5
        assert meta["rows_after"] == pytest.approx(1000 * (1 - q), abs=2)

    def test_selection_half(self, rng):
        class HalfRng:
            """Generator stand-in drawing q = 0.5."""

            def __init__(self, inner):
                self.inner = inner

            def uniform(self, lo, hi):
                return 0.5

            def __getattr__(self, name):
                return getattr(self.inner, name)

        d = Dag.from_edges(3, [(0, 2), (1, 2)])
        data, _ = synth.simulate_dag_data(d, 1000, False, rng)
        out, meta = synth.apply_latent_and_selection(data, d, HalfRng(rng), num_latent=0, num_selection=1)
        assert meta["selection"] == [2] and abs(out.shape[0] - 500) <= 1

    def test_no_latent_no_selection(self, rng):
        d = synth.gen_random_dag(8, 3, rng)
        data, _ = synth.simulate_dag_data(d, 30, False, rng)
        out, meta = synth.apply_latent_and_selection(data, d, rng, num_latent=0, num_selection=0)
        np.testing.assert_array_equal(out, data)

    def test_latent_counts_capped(self, rng):
        d = Dag.from_edges(3, [(0, 1), (1, 2)])
        data, _ = synth.simulate_dag_data(d, 10, False, rng)
        out, meta = synth.apply_latent_and_selection(data, d, rng, num_latent=3, num_selection=3)
        assert meta["latents"] == [] and meta["selection"] == []
        np.testing.assert_array_equal(out, data)


class TestDiscreteCounterexample:
    def test_marginal(self):
        j = synth.table1_joint()
        assert j.p.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(j.p_xy().ravel(), [0.126, 0.214, 0.254, 0.406], atol=1e-12)

    def test_mixture_equals_marginal(self):
        j = synth.table1_joint()
        np.testing.assert_allclose(j.mixture_of_products(), j.p_xy(), atol=1e-12)

    def test_conditional_dependence(self):
        j = synth.table1_joint()
        for z in (0, 1):
            prod = np.outer(j.p_x_given_z(z), j.p_y_given_z(z))
            assert np.max(np.abs(prod - j.p_xy_given_z(z))) > 0.01
