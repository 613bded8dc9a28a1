import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boolflow import candidates, extended, phizeta, scalar
from boolflow import verifier as vf
from boolflow.scan import ScanConfig, run_scan

ETA_INSTANCE = vf.ConstraintInstance([0.1, 0.45, 0.45], [0.99, 0.9999, 0.0001],
                                     [0.01, 0.9999, 0.0001])

small = ScanConfig(seed=3, samples=5000, refinement_steps=50)


class TestInstance:
    def test_text_round_trip(self):
        back = vf.ConstraintInstance.parse(ETA_INSTANCE.to_text())
        assert np.array_equal(back.weights, ETA_INSTANCE.weights)
        assert np.array_equal(back.u, ETA_INSTANCE.u)

    @pytest.mark.parametrize("args", [
        ([0.5, 0.6], [0.1, 0.2], [0.1, 0.2]),
        ([1.0], [0.0], [0.5]),
        ([0.5, 0.5], [0.1], [0.1, 0.2]),
        ([1 / 6] * 6, [0.5] * 6, [0.5] * 6),
    ])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            vf.ConstraintInstance(*args)

    @pytest.mark.parametrize("text", ["0.5 0.5\n0.1 0.2\n", "1\nx\n0.5\n"])
    def test_malformed_text(self, text):
        with pytest.raises(ValueError):
            vf.ConstraintInstance.parse(text)


class TestMargin:
    def test_eta_guess_counterexample(self):
        m = vf.psi_margin(candidates.ETA_GUESS, ETA_INSTANCE)
        assert m < 0
        ext = extended.psi_margin("eta-guess", ETA_INSTANCE.weights, ETA_INSTANCE.u, ETA_INSTANCE.w)
        assert float(ext) == pytest.approx(m, rel=1e-9)

    def test_zero_candidate_is_lhs(self):
        inst = vf.ConstraintInstance([0.3, 0.7], [0.2, 0.9], [0.6, 0.1])
        lhs = 0.5 * sum(p * (scalar.d2(u, w) + scalar.d2(w, u))
                        for p, u, w in zip(inst.weights, inst.u, inst.w))
        assert vf.psi_margin(candidates.ZERO, inst) == pytest.approx(lhs, rel=1e-12)

    @given(st.floats(1e-6, 1 - 1e-6))
    def test_single_diagonal_atom(self, u):
        inst = vf.ConstraintInstance([1.0], [u], [u])
        for psi in (candidates.PHI, candidates.ETA_GUESS):
            assert vf.psi_margin(psi, inst) == pytest.approx(0.0, abs=1e-12)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(8)
        p, u, w = vf.sample_instances(rng, 200)
        batch = vf.margins_batch(candidates.PHI, p, u, w)
        check = vf.MembershipCheck(candidates.PHI)
        for i in range(0, 200, 17):
            one = vf.psi_margin(candidates.PHI, check.take((p, u, w), i))
            assert batch[i] == pytest.approx(one, abs=1e-10 * max(1, abs(one)))

    def test_domain_violation(self):
        bad = candidates.PsiCandidate("inf", lambda a, b: np.full(np.broadcast(a, b).shape, np.inf),
                                      scalar=lambda a, b: float("inf"))
        with pytest.raises(vf.DomainViolation):
            vf.psi_margin(bad, ETA_INSTANCE)

    def test_zeta_chain_confirms(self):
        out = vf.zeta_chain_check(candidates.ETA_GUESS, ETA_INSTANCE)
        assert out["confirms"]
        assert out["oracle_value"] <= vf.psi_margin(candidates.ZERO, ETA_INSTANCE) + 1e-9

    def test_induced_query(self):
        q = vf.induced_query(ETA_INSTANCE)
        assert q.m_u == pytest.approx(0.1 * 0.99 + 0.45 * 0.9999 + 0.45 * 0.0001)


class TestSampler:
    def test_shapes_and_weights(self):
        p, u, w = vf.sample_instances(np.random.default_rng(0), 1000)
        assert p.shape == u.shape == (1000, 5)
        assert np.allclose(p.sum(axis=1), 1)
        assert ((u > 0) & (u < 1)).all() and ((w > 0) & (w < 1)).all()

    def test_encode_decode(self):
        check = vf.MembershipCheck(candidates.PHI)
        back = check.decode(check.encode(ETA_INSTANCE))
        assert np.allclose(back.weights, ETA_INSTANCE.weights, atol=1e-12)
        assert np.allclose(back.u, ETA_INSTANCE.u, atol=1e-12)


class TestScans:
    def test_phi_passes(self):
        rep = vf.scan_membership(candidates.PHI, small)
        assert rep.classification == "pass" and rep.min_margin >= -1e-9

    def test_eta_guess_finds_violation(self):
        rep = vf.scan_membership(candidates.ETA_GUESS, ScanConfig(seed=42, samples=20_000))
        assert rep.min_margin < 0
        assert rep.classification == "candidate-violation"
        assert rep.details["zeta_check"]["confirms"]

    def test_zero_never_negative(self):
        rep = vf.scan_membership(candidates.ZERO, small)
        assert rep.min_margin >= 0

    def test_rejects_hellinger_candidate(self):
        with pytest.raises(ValueError):
            vf.MembershipCheck(candidates.HEL_ZERO)


class TestKappaConjectures:
    def test_diagonal_reflection(self):
        for u in (0.1, 0.3):
            assert vf.kappa_reflection_margin(u, u) == pytest.approx(phizeta.kappa(1 - u, u))
            assert vf.kappa_reflection_margin(u, u) >= -1e-12

    def test_half(self):
        assert vf.kappa_reflection_margin(0.5, 0.2) == pytest.approx(0.0, abs=1e-15)

    def test_degenerate_midpoint(self):
        assert vf.kappa_midpoint_margin((0.3, 0.6), (0.3, 0.6)) == pytest.approx(0.0, abs=1e-14)

    def test_domains(self):
        with pytest.raises(ValueError):
            vf.kappa_reflection_margin(0.7, 0.2)
        with pytest.raises(ValueError):
            vf.kappa_midpoint_margin((0.0, 0.5), (0.3, 0.3))

    def test_pair(self):
        a, b = vf.conjecture4_margins(0.2, 0.4)
        assert a >= 0 and b >= -1e-12

    def test_scans_pass(self):
        for check in (vf.KappaReflectionCheck(), vf.KappaMidpointCheck()):
            rep = run_scan(check, small)
            assert rep.classification == "pass", rep.check_id

    def test_hessian(self):
        out = vf.kappa_hessian_scan(points=9)
        assert out["passed"]


class TestConjecture5:
    def test_degenerate(self):
        assert vf.conjecture5_margin((0.3, 0.3, 0.5, 0.5)) == pytest.approx(0.0, abs=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            vf.conjecture5_margin((0.7, 0.2, 0.5, 0.5))

    def test_scan_passes(self):
        rep = run_scan(vf.Conjecture5Check(), small)
        assert rep.classification == "pass"

    def test_extended_agrees(self):
        q = (0.2, 0.35, 0.4, 0.8)
        assert vf.Conjecture5Check().extended(q) == pytest.approx(vf.conjecture5_margin(q), abs=1e-12)
