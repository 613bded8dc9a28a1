import numpy as np
import pytest

from boolflow import candidates as c
from boolflow import phizeta, scalar


def test_builtins_registered():
    assert {"phi", "eta-guess", "zero"} <= set(c.names(c.BINARY))
    assert {"hellinger-zero", "hellinger-natural"} <= set(c.names(c.HELLINGER))
    assert c.get("phi") is c.PHI
    with pytest.raises(KeyError):
        c.get("no-such-candidate")


@pytest.mark.parametrize("psi", c.BUILTINS, ids=lambda p: p.name)
def test_builtin_contracts(psi):
    assert c.verify_contract(psi) == []


def test_phi_values_match_module():
    assert c.PHI(0.25, 0.4) == pytest.approx(phizeta.phi(0.25, 0.4), abs=1e-15)
    arr = c.PHI(np.array([0.25, 0.5]), np.array([0.4, 0.4]))
    assert arr.shape == (2,)


def test_eta_guess_definition():
    a, b = 0.2, 0.3
    assert c.ETA_GUESS(a, b) == pytest.approx(scalar.eta(1 - scalar.h2(a) + b), abs=1e-14)
    # zero once the argument passes 1
    assert c.ETA_GUESS(0.4, 0.99) == 0.0


def test_hellinger_natural():
    assert c.HEL_NATURAL(0.3, 0.5) == pytest.approx((1 - 0.09 - 0.25) / 0.5)
    assert c.HEL_NATURAL(0.3, 0.99) == 0.0


def test_zero_region_predicate():
    assert c.PHI.in_zero_region(0.1, scalar.h2(0.1) + 1e-9)
    assert not c.PHI.in_zero_region(0.1, 0.1)
    assert c.HEL_ZERO.in_zero_region(0.6, 0.8)


def test_register_rejects_contract_failures():
    asym = c.PsiCandidate("asym", lambda a, b: np.where(c.PHI.in_zero_region(a, b), 0.0, a))
    with pytest.raises(c.RegistrationError, match="symmetry"):
        c.register(asym)
    leaky = c.PsiCandidate("leaky", lambda a, b: np.ones(np.broadcast(a, b).shape))
    with pytest.raises(c.RegistrationError, match="zero-region"):
        c.register(leaky)
    neg = c.PsiCandidate("neg", lambda a, b: np.where(c.PHI.in_zero_region(a, b), 0.0, -1.0))
    with pytest.raises(c.RegistrationError, match="nonnegativity"):
        c.register(neg)


def test_register_duplicate():
    with pytest.raises(c.RegistrationError):
        c.register(c.PHI)


def test_max_combine():
    m = c.max_combine(c.PHI, c.ETA_GUESS)
    a, b = 0.3, 0.5
    assert m(a, b) == max(c.PHI(a, b), c.ETA_GUESS(a, b))
    assert np.allclose(m(np.array([a]), np.array([b])), [m(a, b)])
    assert c.verify_contract(m) == []
    assert not m.proven
    with pytest.raises(ValueError):
        c.max_combine(c.PHI, c.HEL_ZERO)


def test_from_grid():
    a = np.linspace(0, 0.5, 11)
    b = np.linspace(0, 1, 21)
    vals = np.add.outer(1 - 2 * a, 1 - b)
    psi = c.from_grid("user", a, b, vals)
    assert c.verify_contract(psi) == []
    assert psi(0.3, 0.1) == pytest.approx(psi(0.7, 0.1))
    assert psi(0.2, 0.2) == pytest.approx(0.6 + 0.8, abs=1e-12)
    with pytest.raises(ValueError):
        c.from_grid("bad", a, b, -vals)
    with pytest.raises(ValueError):
        c.from_grid("bad", a, b, vals[:, :3])
