import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boolflow import candidates, flow, scalar
from oracles import (central_difference, joint_conditional_entropy, mutual_information,
                     posterior)

TIMES = flow.default_t_grid()


def random_predicate(rng, n):
    return flow.SoftPredicate(rng.uniform(0.02, 0.98, 1 << n))


class TestPredicates:
    def test_dictator_vertex_order(self):
        # vertex 0 is x = (+1,...), where x_1 = +1 gives Pr(F = -1) = eps
        p = flow.named_predicate("dictator", 1, 1e-6)
        assert p.table.tolist() == [1e-6, 1 - 1e-6]
        d3 = flow.boolean_function("dictator", 3)
        assert d3.tolist() == [1, -1, 1, -1, 1, -1, 1, -1]

    def test_constant(self):
        p = flow.named_predicate("constant", 3, 1e-4)
        assert np.all(p.table == 1 - 1e-4)

    def test_majority_table(self):
        # bit i set means x_{i+1} = -1
        maj = flow.boolean_function("majority", 3)
        expect = [1 if bin(k).count("1") <= 1 else -1 for k in range(8)]
        assert maj.tolist() == expect
        soft = flow.soften(maj, 1e-4)
        assert np.allclose(soft.table, np.where(maj < 0, 1 - 1e-4, 1e-4))

    def test_parity(self):
        par = flow.boolean_function("parity", 2)
        assert par.tolist() == [1, -1, -1, 1]

    def test_errors(self):
        with pytest.raises(ValueError):
            flow.boolean_function("majority", 4)
        with pytest.raises(ValueError):
            flow.boolean_function("tribes", 3)
        with pytest.raises(ValueError):
            flow.soften([1, -1, 1], 1e-6)
        with pytest.raises(ValueError):
            flow.soften([1, 0], 1e-6)
        with pytest.raises(ValueError):
            flow.soften([1, -1], 0.7)
        with pytest.raises(ValueError):
            flow.SoftPredicate([0.0, 0.5])

    def test_table_is_frozen(self):
        p = flow.named_predicate("dictator", 2)
        with pytest.raises(ValueError):
            p.table[0] = 0.3

    def test_enumeration(self):
        assert flow.all_boolean_tables(3).shape == (256, 8)
        assert len({tuple(r) for r in flow.all_boolean_tables(2)}) == 16
        bal = flow.balanced_boolean_tables(4)
        assert bal.shape == (12870, 16)
        assert np.all((bal < 0).sum(axis=1) == 8)
        with pytest.raises(ValueError):
            flow.all_boolean_tables(5)

    def test_predicate_file_round_trip(self):
        p = flow.SoftPredicate([0.1, 0.2, 0.7, 0.4])
        q = flow.parse_predicate(flow.format_predicate(p))
        assert np.array_equal(p.table, q.table)

    def test_hard_predicate_file_is_softened(self):
        q = flow.parse_predicate("# and\n2\n1\n1\n1\n-1\n", epsilon=1e-3)
        assert q.table.tolist() == [1e-3, 1e-3, 1e-3, 1 - 1e-3]

    @pytest.mark.parametrize("text", ["", "x\n0.5\n0.5", "2\n0.5\n0.5", "1\n0.0\n0.5",
                                      "1\n0.5\nabc", "0\n0.5"])
    def test_malformed_predicate_file(self, text):
        with pytest.raises(ValueError):
            flow.parse_predicate(text)


class TestPosterior:
    def test_time_zero_is_identity(self):
        p = random_predicate(np.random.default_rng(0), 3)
        assert np.allclose(flow.posterior_field(p, 0.0).v, p.table, atol=1e-15)

    def test_total_mixing(self):
        p = random_predicate(np.random.default_rng(1), 4)
        t = 14.0  # rho_t = e^-28 < 1e-12
        assert np.allclose(flow.posterior_field(p, t).v, p.mean, atol=1e-12)

    @pytest.mark.parametrize("t", [0.01, 0.3, 2.0])
    def test_dictator_single_bit(self, t):
        p = flow.soften([1, -1], 1e-15)
        pt = scalar.crossover(t)
        assert np.allclose(flow.posterior_field(p, t).v, [pt, 1 - pt], atol=1e-14)

    @given(st.integers(1, 6), st.floats(0.0, 3.0), st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_matches_dense_channel(self, n, t, seed):
        p = random_predicate(np.random.default_rng(seed), n)
        assert np.allclose(flow.posterior_field(p, t).v, posterior(p.table, t), atol=1e-13)

    @given(st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_semigroup(self, t1, t2, seed):
        p = random_predicate(np.random.default_rng(seed), 4)
        direct = flow.posterior_field(p, t1 + t2).v
        stepped = flow.advance(flow.posterior_field(p, t1), t2)
        assert stepped.t == pytest.approx(t1 + t2)
        assert np.allclose(stepped.v, direct, atol=1e-10)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            flow.posterior_field(flow.named_predicate("dictator", 1), -0.1)


class TestGamma:
    def test_dictator_closed_form(self):
        p = flow.soften([1, -1], 1e-15)
        for t in (0.05, 0.5, 1.5):
            assert flow.gamma(flow.posterior_field(p, t)) == pytest.approx(
                scalar.h2(scalar.crossover(t)), abs=1e-12)

    def test_limit_is_entropy_of_f(self):
        p = random_predicate(np.random.default_rng(2), 3)
        assert flow.gamma(flow.posterior_field(p, 20.0)) == pytest.approx(scalar.h2(p.mean), abs=1e-12)

    def test_majority_joint_oracle(self):
        p = flow.named_predicate("majority", 3, 1e-6)
        got = flow.gamma(flow.posterior_field(p, 0.2))
        assert got == pytest.approx(joint_conditional_entropy(p.table, 0.2), abs=1e-12)

    def test_nondecreasing(self):
        p = random_predicate(np.random.default_rng(3), 4)
        g = [flow.gamma(flow.posterior_field(p, t)) for t in TIMES]
        assert (np.diff(g) >= -1e-14).all()


class TestGammaDerivative:
    def test_constant_is_zero(self):
        p = flow.named_predicate("constant", 3)
        assert flow.gamma_derivative(flow.posterior_field(p, 0.4)) == pytest.approx(0.0, abs=1e-15)

    def test_single_edge_formula(self):
        p = flow.SoftPredicate([0.2, 0.9])
        f = flow.posterior_field(p, 0.3)
        v1, vm = f.v
        expect = 0.5 * (vm - v1) * (scalar.j(v1) - scalar.j(vm))
        assert flow.gamma_derivative(f) == pytest.approx(expect, rel=1e-13)

    @given(st.integers(1, 4), st.floats(0.05, 2.0), st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_matches_finite_difference(self, n, t, seed):
        p = random_predicate(np.random.default_rng(seed), n)
        fd = central_difference(lambda s: joint_conditional_entropy(p.table, s), t)
        assert flow.gamma_derivative(flow.posterior_field(p, t)) == pytest.approx(fd, abs=1e-6)


class TestInformation:
    def test_dictator_equality(self):
        p = flow.soften(flow.boolean_function("dictator", 3), 1e-12)
        for t in TIMES:
            assert flow.mutual_information(p, t) == pytest.approx(1 - scalar.h2(scalar.crossover(t)), abs=1e-9)
            assert abs(flow.conjecture1_margin(p, t)) <= 1e-9

    def test_constant(self):
        p = flow.named_predicate("constant", 2)
        for t in (0.1, 1.0):
            assert flow.mutual_information(p, t) == pytest.approx(0.0, abs=1e-14)
            assert flow.conjecture1_margin(p, t) == pytest.approx(1 - scalar.h2(scalar.crossover(t)), abs=1e-14)

    def test_vanishes_at_infinity(self):
        p = random_predicate(np.random.default_rng(4), 3)
        assert flow.mutual_information(p, 25.0) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_joint_oracle(self, seed):
        p = random_predicate(np.random.default_rng(seed), 3)
        assert flow.mutual_information(p, 0.37) == pytest.approx(mutual_information(p.table, 0.37), abs=1e-12)

    def test_exhaustive_n3(self):
        s = flow.sweep(np.where(flow.all_boolean_tables(3) < 0, 1 - 1e-6, 1e-6), TIMES)
        assert s.c1_margin.min() >= -1e-5


class TestDerivativeBound:
    def test_zero_candidate_is_the_derivative(self):
        p = random_predicate(np.random.default_rng(5), 3)
        f = flow.posterior_field(p, 0.3)
        assert flow.derivative_bound_margin(p, candidates.ZERO, 0.3) == pytest.approx(
            flow.gamma_derivative(f), abs=1e-15)
        assert flow.derivative_bound_margin(p, candidates.ZERO, 0.3) >= 0

    def test_zero_region(self):
        # balanced mean: phi(1/2, gamma) vanishes only once gamma reaches 1
        p = flow.named_predicate("parity", 2, 1e-6)
        t = 8.0
        f = flow.posterior_field(p, t)
        assert flow.gamma(f) >= 1 - 1e-12
        margin = flow.derivative_bound_margin(p, candidates.PHI, t)
        assert margin == pytest.approx(flow.gamma_derivative(f), abs=1e-9)

    def test_sweep_matches_pointwise(self):
        p = flow.named_predicate("majority", 3)
        s = flow.sweep(p.table[None, :], TIMES[:5], psi=candidates.PHI)
        pointwise = [flow.derivative_bound_margin(p, candidates.PHI, t) for t in TIMES[:5]]
        assert np.allclose(s.bound_margin[0], pointwise, atol=1e-13)

    def test_epsilon_sensitivity(self):
        out = flow.epsilon_sensitivity(flow.boolean_function("majority", 3), TIMES)
        assert out["gamma"] < 1e-4 and out["mi"] < 1e-4


class TestTrace:
    def test_columns_and_dictator(self):
        p = flow.soften(flow.boolean_function("dictator", 4), 1e-12)
        trace = flow.flow_trace(p, TIMES)
        lines = trace.to_csv().splitlines()
        assert lines[0] == "t,p_t,gamma,dgamma,mi,margin"
        assert len(lines) == 21
        gam = np.array([float(r.split(",")[2]) for r in lines[1:]])
        assert np.abs(gam - scalar.h2(scalar.crossover(TIMES))).max() <= 1e-10

    def test_candidate_margin(self):
        p = flow.named_predicate("majority", 3)
        trace = flow.flow_trace(p, TIMES, candidates.PHI)
        assert trace.margin_kind == "derivative-bound"

    def test_default_grid(self):
        assert TIMES.size == 20 and TIMES[0] > 0


class TestOde:
    def test_time_zero(self):
        assert flow.ode_lower_bound(0.3, 0.5, candidates.PHI, 0.0).value == 0.3

    def test_zero_start(self):
        for t in (0.1, 0.7):
            b = flow.ode_lower_bound(0.0, 0.5, candidates.PHI, t)
            assert b.ok
            assert b.value == pytest.approx(scalar.h2(scalar.crossover(t)), abs=1e-8)

    def test_closed_form(self):
        b = flow.ode_lower_bound(0.3, 0.5, candidates.PHI, 0.5)
        assert b.value == pytest.approx(flow.balanced_closed_form(0.3, 0.5), abs=1e-8)

    def test_zero_candidate_diverges(self):
        b = flow.ode_lower_bound(0.3, 0.5, candidates.ZERO, 1.0)
        assert b.status == "divergent" and b.value == 0.3

    def test_domain(self):
        with pytest.raises(ValueError):
            flow.ode_lower_bound(0.9, 0.1, candidates.PHI, 1.0)

    def test_bound_holds_on_majority(self):
        # the certified bound should never exceed the true entropy flow
        p = flow.named_predicate("majority", 3, 1e-9)
        g0 = flow.gamma(flow.posterior_field(p, 0.0))
        for t in (0.2, 0.8):
            b = flow.ode_lower_bound(g0, p.mean, candidates.PHI, t)
            assert b.value <= flow.gamma(flow.posterior_field(p, t)) + 1e-9

    def test_closed_form_zero(self):
        assert flow.balanced_closed_form(0.0, 0.4) == pytest.approx(scalar.h2(scalar.crossover(0.4)))
        assert math.isclose(flow.balanced_closed_form(0.5, 0.0), 0.5, abs_tol=1e-12)
