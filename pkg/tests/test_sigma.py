import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coopmac import (
    OptimizerConfig,
    ResourceError,
    ValidationError,
    brute_force_oracle,
    concat_distributions,
    first_input_mac,
    full_knowledge_cin,
    identity_pair_mac,
    max_mi_independent,
    max_mi_joint,
    mutual_dependence,
    nth_extension,
    random_mac,
    sigma1,
    sigma_n,
    useless_mac,
)
from coopmac import sigma as sigma_mod
from coopmac._alkernel import evaluate, project_simplex_1d
from coopmac._optim import project_simplex
from coopmac.sigma import grid_error_estimate, simplex_grid

from conftest import LOG2_3, adder_symmetric_reference, cmi_by_entropies, rate_by_entropies


def product_grid_max(mac, points=201):
    """Exhaustive max of I(X1,X2;Y) over binary product inputs."""
    t = np.linspace(0.0, 1.0, points)
    best = -1.0
    for a in t:
        for b in t:
            p = np.outer([1 - a, a], [1 - b, b])[None]
            best = max(best, rate_by_entropies(p, mac.kernel))
    return best


class TestSimplexProjection:
    @settings(max_examples=200)
    @given(arrays(np.float64, 6, elements=st.floats(-5, 5)))
    def test_lands_on_simplex(self, v):
        x = project_simplex(v[None])[0]
        assert x.min() >= 0
        assert x.sum() == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=200)
    @given(arrays(np.float64, 5, elements=st.floats(-5, 5)))
    def test_is_nearest_point(self, v):
        x = project_simplex(v[None])[0]
        # variational inequality: (v - x) . (z - x) <= 0 for simplex vertices z
        for z in np.eye(5):
            assert np.dot(v - x, z - x) <= 1e-9

    @settings(max_examples=100)
    @given(arrays(np.float64, 7, elements=st.floats(-3, 3)))
    def test_compiled_matches_numpy(self, v):
        out = np.empty_like(v)
        project_simplex_1d(v, out)
        np.testing.assert_allclose(out, project_simplex(v[None])[0], atol=1e-12)

    def test_fixed_point(self):
        p = np.array([0.2, 0.3, 0.5])
        np.testing.assert_allclose(project_simplex(p[None])[0], p, atol=1e-15)


class TestCompiledGradient:
    """The compiled Lagrangian gradient against finite differences and numpy."""

    def setup_method(self):
        self.mac = random_mac(11)
        self.fun = sigma_mod._Functionals(self.mac, 2)
        self.p = np.random.default_rng(0).dirichlet(np.ones(8))

    def lagrangian(self, p, mu, rho, cap, grad=None):
        g = np.empty(p.size) if grad is None else grad
        return evaluate(p, self.fun.w, self.fun.neg_cond_entropy, 2, 2, 2, mu, rho, cap, g, grad is not None)

    def test_values_match_numpy(self):
        _, f, g = self.lagrangian(self.p, 0.0, 1.0, 0.0)
        stacked = self.p.reshape(1, 2, 4)
        assert f == pytest.approx(self.fun.objective(stacked)[0], abs=1e-12)
        assert g == pytest.approx(self.fun.dependence(stacked)[0], abs=1e-12)
        assert f == pytest.approx(rate_by_entropies(self.p.reshape(2, 2, 2), self.mac.kernel), abs=1e-12)
        assert g == pytest.approx(cmi_by_entropies(self.p.reshape(2, 2, 2)), abs=1e-12)

    @pytest.mark.parametrize("mu,cap", [(0.0, 0.0), (0.7, 0.01), (2.0, 1.0)])
    def test_gradient_finite_differences(self, mu, cap):
        rho = 3.0
        grad = np.empty(8)
        self.lagrangian(self.p, mu, rho, cap, grad)
        h = 1e-6
        fd = np.empty(8)
        for j in range(8):
            e = np.zeros(8)
            e[j] = h
            fd[j] = (self.lagrangian(self.p + e, mu, rho, cap)[0] - self.lagrangian(self.p - e, mu, rho, cap)[0]) / (2 * h)
        np.testing.assert_allclose(grad, fd, atol=1e-6)

    def test_gradient_matches_numpy(self):
        grad = np.empty(8)
        self.lagrangian(self.p, 0.0, 1.0, 1e9, grad)
        stacked = self.p.reshape(1, 2, 4)
        np.testing.assert_allclose(grad, self.fun.objective_grad(stacked).ravel(), atol=1e-12)


class TestUnconstrained:
    def test_adder_independent(self, adder):
        assert max_mi_independent(adder).value == pytest.approx(1.5, abs=1e-9)

    def test_first_input_independent(self):
        assert max_mi_independent(first_input_mac()).value == pytest.approx(1.0, abs=1e-9)

    def test_useless(self):
        assert max_mi_independent(useless_mac()).value == pytest.approx(0.0, abs=1e-12)
        assert max_mi_joint(useless_mac()).value == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("seed", range(4))
    def test_independent_against_grid(self, seed):
        mac = random_mac(seed)
        grid = product_grid_max(mac)
        value = max_mi_independent(mac).value
        assert value >= grid - 1e-9
        assert value <= grid + 1e-3

    def test_independent_argmax_is_product(self, adder):
        res = max_mi_independent(adder)
        assert mutual_dependence(res.argmax) == pytest.approx(0.0, abs=1e-12)
        assert res.value == pytest.approx(rate_by_entropies(res.argmax.probs, adder.kernel), abs=1e-9)

    def test_adder_joint(self, adder):
        assert max_mi_joint(adder).value == pytest.approx(LOG2_3, abs=1e-9)

    def test_identity_pair_joint(self):
        assert max_mi_joint(identity_pair_mac()).value == pytest.approx(2.0, abs=1e-9)

    @pytest.mark.parametrize("seed", range(4))
    def test_joint_against_grid(self, seed):
        mac = random_mac(seed)
        pts = simplex_grid(4, 64).reshape(-1, 1, 2, 2)
        grid = max(rate_by_entropies(p, mac.kernel) for p in pts[::7])
        value = max_mi_joint(mac).value
        assert value >= grid - 1e-9
        assert value >= max_mi_independent(mac).value - 1e-9

    def test_full_knowledge_cin(self, adder):
        cin = full_knowledge_cin(adder)
        np.testing.assert_allclose(cin.c_in, (LOG2_3 + 1, LOG2_3 + 1), atol=1e-6)
        assert cin.c_out == (0.0, 0.0)
        assert full_knowledge_cin(useless_mac()).c_in == pytest.approx((1.0, 1.0))
        assert min(cin.c_in) > max_mi_joint(adder).value


class TestSigma1:
    def test_zero(self, adder):
        assert sigma1(adder, 0.0).value == pytest.approx(1.5, abs=1e-9)

    def test_large(self, adder):
        assert sigma1(adder, 2.0).value == pytest.approx(LOG2_3, abs=1e-7)

    @pytest.mark.parametrize("delta", [0.0, 0.01, 0.3, 2.0])
    def test_first_input_channel(self, delta):
        assert sigma1(first_input_mac(), delta).value == pytest.approx(1.0, abs=1e-7)

    @pytest.mark.parametrize("delta", [2e-5, 2e-4, 2e-3, 0.02, 0.05, 0.08, 0.1])
    def test_symmetric_family_reference(self, adder, delta):
        assert sigma1(adder, delta).value == pytest.approx(adder_symmetric_reference(delta), abs=1e-7)

    @pytest.mark.parametrize("delta", [1e-4, 0.01, 0.05, 0.3])
    def test_argmax_contract(self, adder, delta):
        res = sigma1(adder, delta)
        assert res.constraint_slack >= -1e-7
        assert cmi_by_entropies(res.argmax.probs) <= delta + 1e-7
        assert res.value == pytest.approx(rate_by_entropies(res.argmax.probs, adder.kernel), abs=1e-7)
        assert res.argmax.u_size == 2
        assert res.converged

    def test_range(self, random_channels):
        for mac in random_channels:
            for delta in (0.0, 0.05, 1.0):
                v = sigma1(mac, delta).value
                assert -1e-12 <= v <= math.log2(mac.y_size) + 1e-12

    def test_monotone(self, random_channels):
        deltas = np.linspace(0.0, 0.3, 8)
        for mac in random_channels[:3]:
            values = [sigma1(mac, d).value for d in deltas]
            assert np.all(np.diff(values) >= -1e-7)

    @pytest.mark.parametrize("lam", [0.25, 0.5, 0.75])
    def test_concave(self, adder, lam):
        rng = np.random.default_rng(5)
        for _ in range(3):
            a, b = sorted(rng.uniform(0.0, 0.12, size=2))
            mid = sigma1(adder, (1 - lam) * a + lam * b).value
            assert mid >= (1 - lam) * sigma1(adder, a).value + lam * sigma1(adder, b).value - 2e-4

    def test_rejects_negative_delta(self, adder):
        with pytest.raises(ValidationError):
            sigma1(adder, -0.1)

    def test_deterministic(self, adder):
        cfg = OptimizerConfig(rng_seed=123)
        first = sigma1(adder, 0.03, cfg)
        sigma_mod._anchors_cached.cache_clear()
        second = sigma1(adder, 0.03, cfg)
        assert first.value == second.value
        np.testing.assert_array_equal(first.argmax.probs, second.argmax.probs)

    def test_seed_does_not_matter_much(self, adder):
        a = sigma1(adder, 0.03, OptimizerConfig(rng_seed=1)).value
        b = sigma1(adder, 0.03, OptimizerConfig(rng_seed=2)).value
        assert a == pytest.approx(b, abs=1e-7)

    def test_json(self, adder):
        doc = sigma1(adder, 0.02).to_dict()
        text = json.dumps(doc)
        assert json.loads(text)["argmax"]["u_size"] == 2
        assert json.loads(json.dumps(max_mi_joint(adder).to_dict()))["delta"] is None


class TestSigmaN:
    @pytest.mark.parametrize("delta", [0.0, 0.02, 0.2])
    def test_n1_is_sigma1(self, adder, delta):
        assert sigma_n(adder, 1, delta, u_size=2).value == pytest.approx(sigma1(adder, delta).value, abs=1e-7)

    def test_n2_zero(self, adder):
        assert sigma_n(adder, 2, 0.0).value >= 1.5 - 1e-7

    def test_n2_zero_u1_is_product_optimum(self, adder):
        ext = nth_extension(adder, 2)
        expected = max_mi_independent(ext).value / 2
        assert sigma_n(adder, 2, 0.0, u_size=1).value == pytest.approx(expected, abs=1e-7)

    def test_n2_feasible(self, adder):
        res = sigma_n(adder, 2, 0.05)
        assert mutual_dependence(res.argmax) / 2 <= 0.05 + 1e-7
        assert res.argmax.n == 2

    def test_witness_start(self, adder):
        one = sigma1(adder, 0.05).argmax
        witness = concat_distributions(one, one)
        res = sigma_n(adder, 2, 0.05, starts=[witness])
        assert res.value >= sigma1(adder, 0.05).value - 1e-7

    def test_unsupported_blocklength(self, adder):
        with pytest.raises(ResourceError):
            sigma_n(adder, 3, 0.1)


class TestOracle:
    def test_adder_zero(self, adder):
        assert brute_force_oracle(adder, 0.0, 64) == pytest.approx(1.5, abs=0.02)

    def test_adder_large(self, adder):
        assert brute_force_oracle(adder, 2.0, 64) == pytest.approx(LOG2_3, abs=0.02)

    def test_refinement_monotone(self, adder):
        values = [brute_force_oracle(adder, 0.02, r) for r in (16, 32, 64)]
        assert values[0] <= values[1] + 1e-12 <= values[2] + 2e-12
        assert values[2] <= sigma1(adder, 0.02).value + 1e-7

    @pytest.mark.parametrize("delta", [0.0, 0.01, 0.05, 0.2])
    def test_sandwich_random(self, random_channels, delta):
        bound = grid_error_estimate(random_channels[0], 64)
        for mac in random_channels:
            oracle = brute_force_oracle(mac, delta, 64)
            value = sigma1(mac, delta).value
            assert oracle <= value + 1e-7
            assert value - oracle <= bound

    def test_size_guard(self):
        with pytest.raises(ResourceError):
            brute_force_oracle(random_mac(0, 4, 3, 2), 0.1)

    def test_grid_points(self):
        pts = simplex_grid(3, 4)
        assert pts.shape == (15, 3)
        np.testing.assert_allclose(pts.sum(axis=1), 1.0)
        assert len({tuple(p) for p in pts}) == 15


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValidationError):
            OptimizerConfig(restarts=0)
        with pytest.raises(ValidationError):
            OptimizerConfig(tolerance=0.0)

    def test_from_dict(self):
        cfg = OptimizerConfig.from_dict({"restarts": 4, "rng_seed": 9})
        assert (cfg.restarts, cfg.rng_seed, cfg.tolerance) == (4, 9, 1e-9)
        with pytest.raises(ValidationError, match="bogus"):
            OptimizerConfig.from_dict({"bogus": 1})
