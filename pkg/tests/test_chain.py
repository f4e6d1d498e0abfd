import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from markov_hoeffding.chain import (
    FiniteChain,
    MeasurePair,
    absolute_lambda,
    additive_reversiblization,
    build_chain,
    leon_perron_coefficient,
    leon_perron_kernel,
    load_chain,
    pi_operator_norm,
    projection,
    random_chain,
    right_lambda,
    spectral_radius_lambda,
    spectral_summary,
    symmetrized,
    time_reversal,
)
from markov_hoeffding.errors import DegenerateStationary, NotStochastic

from conftest import birth_death, rotation


# oracle: spectrum of the birth-death chain is {1, 0.5, 0}
BD_LAMBDA = 0.5
BD_PI = np.array([0.25, 0.5, 0.25])


@st.composite
def chain_strategy(draw, d_max=6):
    d = draw(st.integers(2, d_max))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_chain(d, np.random.default_rng(seed), draw(st.sampled_from([0.3, 1.0, 5.0])))


class TestBuild:
    def test_single_state(self):
        c = build_chain([[1.0]])
        assert c.d == 1
        np.testing.assert_array_equal(c.pi, [1.0])
        assert absolute_lambda(c) == 0.0
        assert right_lambda(c) == 0.0

    def test_uniform_two_state(self):
        c = build_chain([[0.5, 0.5], [0.5, 0.5]])
        np.testing.assert_allclose(c.pi, [0.5, 0.5], atol=1e-15)

    def test_birth_death_pi_against_power_iteration(self):
        c = build_chain(birth_death())
        v = np.full(3, 1 / 3)
        for _ in range(2000):
            v = v @ birth_death()
        np.testing.assert_allclose(c.pi, v, atol=1e-12)
        np.testing.assert_allclose(c.pi, BD_PI, atol=1e-12)
        # detailed balance
        F = np.diag(c.pi) @ c.P
        np.testing.assert_allclose(F, F.T, atol=1e-14)

    def test_row_sum_rejected(self):
        with pytest.raises(NotStochastic):
            build_chain([[0.5, 0.6], [0.5, 0.5]])

    def test_negative_entry_rejected(self):
        with pytest.raises(NotStochastic):
            build_chain([[1.2, -0.2], [0.5, 0.5]])

    def test_non_square_rejected(self):
        with pytest.raises(NotStochastic):
            build_chain([[1.0, 0.0]])

    def test_reducible_rejected(self):
        with pytest.raises(DegenerateStationary):
            build_chain(np.eye(3))

    def test_transient_state_rejected(self):
        # state 0 leaks into the absorbing pair, so pi(0) = 0
        with pytest.raises(DegenerateStationary):
            build_chain([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.0, 0.5, 0.5]])

    def test_arrays_frozen(self, bd_chain):
        with pytest.raises(ValueError):
            bd_chain.P[0, 0] = 0.0

    def test_json_roundtrip(self, tmp_path, bd_chain):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"P": birth_death().tolist(), "labels": ["a", "b", "c"], "pi": [1, 0, 0]}))
        c = load_chain(path)
        np.testing.assert_allclose(c.pi, BD_PI, atol=1e-12)  # stored pi ignored
        assert c.labels == ("a", "b", "c")
        assert json.loads(c.to_json())["labels"] == ["a", "b", "c"]

    @given(chain_strategy())
    @settings(max_examples=60, deadline=None)
    def test_invariants(self, c):
        np.testing.assert_allclose(c.P.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(c.pi > 0)
        assert abs(c.pi.sum() - 1) < 1e-12
        assert np.max(np.abs(c.pi @ c.P - c.pi)) < 1e-10


class TestReversal:
    def test_symmetric_uniform(self):
        P = np.array([[0.2, 0.3, 0.5], [0.3, 0.4, 0.3], [0.5, 0.3, 0.2]])
        np.testing.assert_allclose(time_reversal(build_chain(P)), P, atol=1e-14)

    def test_rotation_reverses(self):
        c = build_chain(rotation())
        np.testing.assert_allclose(time_reversal(c), rotation().T, atol=1e-14)
        R = additive_reversiblization(c)
        np.testing.assert_allclose(R, 0.5 * (rotation() + rotation().T), atol=1e-14)

    def test_reversible_fixed(self, bd_chain):
        np.testing.assert_allclose(additive_reversiblization(bd_chain), bd_chain.P, atol=1e-14)

    @given(chain_strategy())
    @settings(max_examples=50, deadline=None)
    def test_balance_and_self_adjoint(self, c):
        Ps = time_reversal(c)
        np.testing.assert_allclose(np.diag(c.pi) @ c.P, (np.diag(c.pi) @ Ps).T, atol=1e-14)
        np.testing.assert_allclose(Ps.sum(axis=1), 1.0, atol=1e-12)
        np.testing.assert_allclose(c.pi @ Ps, c.pi, atol=1e-12)
        R = additive_reversiblization(c)
        np.testing.assert_allclose(np.diag(c.pi) @ R, (np.diag(c.pi) @ R).T, atol=1e-12)


class TestLeonPerron:
    def test_endpoints(self):
        pi = np.array([0.2, 0.3, 0.5])
        np.testing.assert_allclose(leon_perron_kernel(pi, 0.0).P, np.tile(pi, (3, 1)))
        np.testing.assert_allclose(leon_perron_kernel(pi, 1.0).P, np.eye(3))

    @pytest.mark.parametrize("c", [round(0.1 * k, 1) for k in range(10)])
    def test_lambda_equals_c(self, c):
        k = leon_perron_kernel([0.25, 0.5, 0.25], c)
        assert abs(absolute_lambda(k) - c) < 1e-12
        assert abs(right_lambda(k) - c) < 1e-12
        est, _, seq = spectral_radius_lambda(k, 10)
        np.testing.assert_allclose(seq, c, atol=1e-12)

    def test_coefficient_detection(self, bd_chain):
        assert leon_perron_coefficient(bd_chain) is None
        assert abs(leon_perron_coefficient(leon_perron_kernel([0.1, 0.9], 0.35)) - 0.35) < 1e-12


class TestSpectral:
    def test_birth_death(self, bd_chain):
        assert abs(absolute_lambda(bd_chain) - BD_LAMBDA) < 1e-12
        assert abs(right_lambda(bd_chain) - BD_LAMBDA) < 1e-12
        # oracle: reversible so lambda is the largest non-trivial |eigenvalue|
        ev = np.sort(np.abs(np.linalg.eigvals(bd_chain.P)))
        assert abs(ev[-2] - absolute_lambda(bd_chain)) < 1e-12

    def test_flip(self):
        c = build_chain([[0, 1], [1, 0]])
        assert right_lambda(c) == -1.0
        assert absolute_lambda(c) == 1.0

    def test_rotation(self):
        assert abs(absolute_lambda(build_chain(rotation())) - 1.0) < 1e-12

    def test_reversible_lambda_inf(self, bd_chain):
        est, k, seq = spectral_radius_lambda(bd_chain, 30)
        assert k == 30 and seq.size == 30
        assert abs(est - absolute_lambda(bd_chain)) < 1e-6

    def test_nilpotent_part(self):
        # uniform pi, P = J/3 + eps u v' with (P - Pi)^2 = 0
        u, v = np.array([1.0, -1.0, 0.0]), np.array([1.0, 1.0, -2.0])
        P = np.full((3, 3), 1 / 3) + np.outer(u, v) / 6
        c = build_chain(P)
        lam = absolute_lambda(c)
        assert abs(lam - math.sqrt(12) / 6) < 1e-12
        # eigenvalue-modulus oracle: spectral radius of P - Pi is 0
        assert np.max(np.abs(np.linalg.eigvals(P - projection(c)))) < 1e-7
        est, _, seq = spectral_radius_lambda(c, 20)
        assert seq[0] == pytest.approx(lam)
        assert est < 1e-6

    def test_summary(self, bd_chain):
        s = spectral_summary(bd_chain, 40)
        assert s.alpha_abs == pytest.approx(3.0)
        assert s.alpha_right == pytest.approx(3.0)
        d = s.to_dict()
        assert set(d) >= {"lambda_abs", "lambda_right", "lambda_inf_estimate", "alpha_abs", "alpha_right", "k_sequence"}
        json.dumps(d)

    def test_summary_no_gap(self):
        s = spectral_summary(build_chain(rotation()), 5)
        assert s.alpha_abs is None

    @given(chain_strategy())
    @settings(max_examples=80, deadline=None)
    def test_ordering(self, c):
        lam = absolute_lambda(c)
        Ps = FiniteChain(time_reversal(c), c.pi)
        R = FiniteChain(additive_reversiblization(c), c.pi)
        assert abs(absolute_lambda(Ps) - lam) < 1e-10
        assert absolute_lambda(R) <= lam + 1e-10
        assert right_lambda(c) <= lam + 1e-10
        est, _, _ = spectral_radius_lambda(c, 20)
        assert est <= lam + 1e-8
        assert -1 - 1e-12 <= right_lambda(c) <= 1 + 1e-12


class TestOperatorLemma:
    """Inequalities relating an operator to its lazy i.i.d. version."""

    @given(chain_strategy(), st.integers(0, 2**31))
    @settings(max_examples=60, deadline=None)
    def test_multiplication_sandwich(self, c, seed):
        g = np.random.default_rng(seed).uniform(-2, 2, c.d)
        for lp in (0.0, 0.3, 0.9):
            K = leon_perron_kernel(c.pi, lp).P
            norm = pi_operator_norm(c, np.diag(g) @ K @ np.diag(g))
            assert math.sqrt(float(c.pi @ g**2)) <= math.sqrt(norm) + 1e-10

    @given(chain_strategy(), st.integers(0, 2**31))
    @settings(max_examples=60, deadline=None)
    def test_bilinear_domination(self, c, seed):
        r = np.random.default_rng(seed)
        h1, h2 = r.normal(size=c.d), r.normal(size=c.d)
        Ph = leon_perron_kernel(c.pi, absolute_lambda(c)).P

        def ip(x, y):
            return float(np.sum(c.pi * x * y))

        lhs = abs(ip(c.P @ h1, h2))
        rhs = math.sqrt(max(ip(Ph @ h1, h1), 0)) * math.sqrt(max(ip(Ph @ h2, h2), 0))
        assert lhs <= rhs + 1e-10

    def test_measure_pair(self):
        mp = MeasurePair([1, 0, 0, 0], np.full(4, 0.25), math.inf)
        np.testing.assert_array_equal(mp.density * mp.pi, mp.nu)
        assert mp.q == 1.0
        assert MeasurePair([0.5, 0.5], [0.5, 0.5], 2).q == 2.0

    def test_symmetrized_similarity(self, bd_chain):
        S = symmetrized(bd_chain, bd_chain.P)
        np.testing.assert_allclose(S, S.T, atol=1e-14)
