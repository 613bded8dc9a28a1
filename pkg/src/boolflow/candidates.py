"""Named two-argument candidates psi(a, b) for the differential bounds.

Binary-side candidates act on (a, b) in [0, 1]^2, vanish where
``h2(a) <= b`` and satisfy ``psi(a, b) == psi(1 - a, b)``.  Hellinger-side
candidates act on (-1, 1) x [0, 1), vanish where ``sqrt(1 - a^2) <= b`` and
are even in a.  :func:`register` checks both properties by sampling before a
candidate becomes available by name.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import kernels
from .kernels import scalar as ks

BINARY = "binary"
HELLINGER = "hellinger"


@dataclass(frozen=True)
class PsiCandidate:
    """A candidate psi with its zero-region and symmetry contract.

    ``func`` maps broadcast float arrays to an array; ``scalar`` is an
    optional fast path for float arguments.  ``proven`` marks candidates known
    to lie in the class (only the zero function), so that a negative margin
    for them is a defect rather than a counterexample.
    """

    name: str
    func: Callable
    domain: str = BINARY
    scalar: Callable | None = None
    proven: bool = False
    description: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, a, b):
        if self.scalar is not None and np.ndim(a) == 0 and np.ndim(b) == 0:
            return float(self.scalar(float(a), float(b)))
        out = np.asarray(self.func(np.asarray(a, dtype=float), np.asarray(b, dtype=float)))
        return float(out) if out.ndim == 0 else out

    def in_zero_region(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.domain == BINARY:
            return kernels.h2(a) <= b
        return np.sqrt((1.0 - a) * (1.0 + a)) <= b


class RegistrationError(ValueError):
    pass


def verify_contract(psi, samples=10_000, seed=0, tol=1e-12):
    """Sample the zero region, the symmetry and nonnegativity of ``psi``.

    Returns the list of failed properties (empty when the contract holds).
    """
    rng = np.random.default_rng([seed, 0x5A])
    failures = []
    if psi.domain == BINARY:
        a = rng.uniform(0.0, 1.0, samples)
        ceiling = kernels.h2(a)
        b_zero = ceiling + (1.0 - ceiling) * rng.uniform(0.0, 1.0, samples)
        b_any = rng.uniform(0.0, 1.0, samples)
        b_any = np.maximum(b_any, 1e-12)
        mirror = 1.0 - a
    else:
        a = rng.uniform(-1.0, 1.0, samples) * (1.0 - 1e-9)
        ceiling = np.sqrt((1.0 - a) * (1.0 + a))
        b_zero = ceiling + (1.0 - 1e-12 - ceiling) * rng.uniform(0.0, 1.0, samples)
        b_zero = np.minimum(np.maximum(b_zero, ceiling), 1.0 - 1e-12)
        b_any = rng.uniform(1e-9, 1.0 - 1e-12, samples)
        mirror = -a
    with np.errstate(all="ignore"):
        zero_vals = np.asarray(psi.func(a, b_zero), dtype=float)
        vals = np.asarray(psi.func(a, b_any), dtype=float)
        mirrored = np.asarray(psi.func(mirror, b_any), dtype=float)
    if not (np.abs(zero_vals) <= tol).all():
        failures.append("zero-region")
    finite = np.isfinite(vals) & np.isfinite(mirrored)
    scale = np.maximum(1.0, np.abs(vals))
    if not (np.abs(vals - mirrored)[finite] <= tol * scale[finite]).all():
        failures.append("symmetry")
    if (vals[~np.isnan(vals)] < -tol).any():
        failures.append("nonnegativity")
    return failures


_REGISTRY: dict[str, PsiCandidate] = {}


def register(psi, samples=10_000, seed=0, tol=1e-12, replace=False):
    if psi.name in _REGISTRY and not replace:
        raise RegistrationError(f"candidate {psi.name!r} already registered")
    failures = verify_contract(psi, samples, seed, tol)
    if failures:
        raise RegistrationError(f"candidate {psi.name!r} fails: {', '.join(failures)}")
    _REGISTRY[psi.name] = psi
    return psi


def get(name):
    _ensure_builtins()
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown candidate {name!r}; known: {', '.join(sorted(_REGISTRY))}") from None


def names(domain=None):
    _ensure_builtins()
    return sorted(k for k, v in _REGISTRY.items() if domain is None or v.domain == domain)


# --------------------------------------------------------------------------
# built-ins


def _phi(a, b):
    return kernels.phi(a, b)


def _eta_guess(a, b):
    # eta(1 - h2(a) + b), which is 0 once the argument reaches 1
    arg = np.minimum(1.0 - kernels.h2(a) + b, 1.0)
    return kernels.eta(arg)


def _eta_guess_scalar(a, b):
    return ks.eta(min(1.0 - ks.h2(a) + b, 1.0))


def _zero(a, b):
    return np.zeros(np.broadcast(a, b).shape)


def _hel_natural(a, b):
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (1.0 - a * a - b * b) / b
    return np.where(b > 0.0, np.maximum(val, 0.0), np.where(np.abs(a) < 1.0, np.inf, 0.0))


def _hel_natural_scalar(a, b):
    if b <= 0.0:
        return np.inf if abs(a) < 1.0 else 0.0
    return max((1.0 - a * a - b * b) / b, 0.0)


PHI = PsiCandidate("phi", _phi, scalar=ks.phi,
                   description="closed-form symmetric-slice candidate")
ETA_GUESS = PsiCandidate("eta-guess", _eta_guess, scalar=_eta_guess_scalar,
                         description="eta(1 - h2(a) + b)")
ZERO = PsiCandidate("zero", _zero, scalar=lambda a, b: 0.0, proven=True,
                    description="identically zero")
HEL_ZERO = PsiCandidate("hellinger-zero", _zero, domain=HELLINGER, scalar=lambda a, b: 0.0,
                        proven=True, description="identically zero")
HEL_NATURAL = PsiCandidate("hellinger-natural", _hel_natural, domain=HELLINGER,
                           scalar=_hel_natural_scalar,
                           description="max(0, (1 - a^2 - b^2) / b)")

BUILTINS = (PHI, ETA_GUESS, ZERO, HEL_ZERO, HEL_NATURAL)
_builtins_checked = False


def _ensure_builtins():
    # the built-ins go through the same sampled contract check, on first lookup
    global _builtins_checked
    if not _builtins_checked:
        _builtins_checked = True
        for c in BUILTINS:
            register(c, replace=True)


def max_combine(psi1, psi2, name=None):
    """Pointwise maximum; the contract is inherited from both inputs."""
    if psi1.domain != psi2.domain:
        raise ValueError("cannot combine candidates from different domains")

    def func(a, b):
        return np.maximum(psi1.func(a, b), psi2.func(a, b))

    def both(a, b):
        return max(psi1.scalar(a, b), psi2.scalar(a, b))

    fast = both if psi1.scalar is not None and psi2.scalar is not None else None
    return PsiCandidate(name or f"max({psi1.name},{psi2.name})", func, psi1.domain, fast,
                        proven=psi1.proven and psi2.proven,
                        meta={"parts": [psi1.name, psi2.name]})


def from_grid(name, a_grid, b_grid, values, domain=BINARY):
    """Bilinear interpolant of user values on a rectangular grid.

    The grid covers the folded half of the first argument ([0, 1/2] for the
    binary domain, [0, 1) for the Hellinger one); symmetry is imposed by
    folding and the zero region by masking, so the contract holds by
    construction.
    """
    a_grid = np.asarray(a_grid, dtype=float)
    b_grid = np.asarray(b_grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.shape != (a_grid.size, b_grid.size):
        raise ValueError("values must have shape (len(a_grid), len(b_grid))")
    if (values < 0).any() or not np.isfinite(values).all():
        raise ValueError("grid values must be finite and nonnegative")
    interp = RegularGridInterpolator((a_grid, b_grid), values, bounds_error=False, fill_value=None)
    probe = PsiCandidate(name, lambda a, b: 0.0, domain)

    def func(a, b):
        a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
        fold = np.minimum(a, 1.0 - a) if domain == BINARY else np.abs(a)
        pts = np.stack([np.clip(fold, a_grid[0], a_grid[-1]),
                        np.clip(b, b_grid[0], b_grid[-1])], axis=-1)
        out = np.maximum(interp(pts), 0.0)
        return np.where(probe.in_zero_region(a, b), 0.0, out)

    return PsiCandidate(name, func, domain, description="user grid",
                        meta={"grid": [a_grid.size, b_grid.size]})
