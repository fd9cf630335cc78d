"""Capillarity and pressure laws.

A capillarity law provides the density-gradient energy coefficient ``K(rho)``
together with the derived constitutive chain used by the extended
(conservative) formulation of the capillary fluid model:

    phi(rho)   velocity potential of the auxiliary field, sqrt(rho)*phi' = sqrt(K)
    F(rho)     capillary energy flux potential, F' = sqrt(K*rho)
    G(rho)     rho*F' - F, the divergence-coupling coefficient
    eta(rho)   antiderivative of sqrt(K), needed by the Bohm-identity check

``phi``, ``F`` and ``eta`` are only defined up to additive constants; only
their derivatives and ``G`` enter the scheme, so the normalization (the lower
integration bound ``rho_ref`` for generic laws) is immaterial and merely
recorded.

Pressure laws provide ``p(rho)``, ``p'(rho)`` and the bulk energy ``F0(rho)``
with the barotropic consistency ``p = rho*F0' - F0``.
"""

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.integrate import quad


class LawError(RuntimeError):
    """Quadrature failure while evaluating a generic capillarity law."""


def _require_positive(rho, what="density"):
    if np.any(np.asarray(rho) <= 0.0):
        raise ValueError(f"non-positive {what} passed to a constitutive law")


class CapillaryValues(NamedTuple):
    K: float
    phi: float
    dphi: float
    F: float
    dF: float
    G: float


class PressureValues(NamedTuple):
    p: float
    dp: float
    F0: float


class CapillarityLaw:
    """Base capillarity law. Subclasses implement ``K`` and the chain."""

    def K(self, rho):
        raise NotImplementedError

    def phi(self, rho):
        raise NotImplementedError

    def dphi(self, rho):
        """phi'(rho) = sqrt(K(rho)/rho)."""
        return np.sqrt(self.K(rho) / rho)

    def F(self, rho):
        raise NotImplementedError

    def dF(self, rho):
        """F'(rho) = sqrt(K(rho)*rho), the capillary sound speed a(rho)."""
        return np.sqrt(self.K(rho) * rho)

    def G(self, rho):
        """G(rho) = rho*F'(rho) - F(rho)."""
        return rho * self.dF(rho) - self.F(rho)

    def sqrtK_primitive(self, rho):
        """eta(rho), an antiderivative of sqrt(K)."""
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantCapillarity(CapillarityLaw):
    """K(rho) = K0, the classical surface-tension case.

    K0 = 0 is accepted so that a vanishing surface tension degenerates to a
    pure first-order model (the capillary substep becomes the identity).
    """

    K0: float

    def __post_init__(self):
        if self.K0 < 0.0:
            raise ValueError("K0 must be non-negative")

    def K(self, rho):
        return self.K0 * np.ones_like(np.asarray(rho, dtype=float))

    def phi(self, rho):
        return 2.0 * np.sqrt(self.K0 * rho)

    def dphi(self, rho):
        return np.sqrt(self.K0 / rho)

    def F(self, rho):
        return (2.0 / 3.0) * np.sqrt(self.K0) * rho ** 1.5

    def dF(self, rho):
        return np.sqrt(self.K0 * rho)

    def G(self, rho):
        return (1.0 / 3.0) * np.sqrt(self.K0) * rho ** 1.5

    def sqrtK_primitive(self, rho):
        return np.sqrt(self.K0) * rho


@dataclass(frozen=True)
class QuantumCapillarity(CapillarityLaw):
    """K(rho) = c/rho, the quantum-hydrodynamics case (G vanishes)."""

    c: float

    def __post_init__(self):
        if self.c <= 0.0:
            raise ValueError("c must be positive")

    def K(self, rho):
        return self.c / rho

    def phi(self, rho):
        return np.sqrt(self.c) * np.log(rho)

    def dphi(self, rho):
        return np.sqrt(self.c) / rho

    def F(self, rho):
        return np.sqrt(self.c) * rho

    def dF(self, rho):
        return np.sqrt(self.c) * np.ones_like(np.asarray(rho, dtype=float))

    def G(self, rho):
        return np.zeros_like(np.asarray(rho, dtype=float))

    def sqrtK_primitive(self, rho):
        return 2.0 * np.sqrt(self.c * rho)


class GenericCapillarity(CapillarityLaw):
    """Capillarity law from an arbitrary positive coefficient callable.

    ``F``, ``phi`` and ``eta`` are computed by adaptive quadrature. The lower
    integration bound is chosen per integrand: 0 when the integrand is
    integrable there (probed once), otherwise 1, unless ``rho_ref`` pins it
    explicitly. Only derivatives and G enter the scheme, so the bound merely
    fixes the additive normalization.
    """

    quad_rtol = 1e-12

    def __init__(self, K_func: Callable, rho_ref: Optional[float] = None):
        self.K_func = K_func
        self.rho_ref = rho_ref
        self._bounds = {}

    def __repr__(self):
        return f"GenericCapillarity(K_func={self.K_func!r}, rho_ref={self.rho_ref!r})"

    def K(self, rho):
        return np.asarray(self.K_func(np.asarray(rho, dtype=float)))

    def _lower_bound(self, name, integrand):
        if self.rho_ref is not None:
            return self.rho_ref
        if name not in self._bounds:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                try:
                    val, err = quad(integrand, 0.0, 1.0, epsrel=self.quad_rtol,
                                    limit=200)
                    ok = np.isfinite(val) and err <= 1e-8 * max(abs(val), 1.0)
                except Exception:
                    ok = False
            self._bounds[name] = 0.0 if ok else 1.0
        return self._bounds[name]

    def _integrate(self, name, integrand, rho):
        lo = self._lower_bound(name, integrand)

        def one(r):
            with warnings.catch_warnings():
                warnings.simplefilter("error")
                try:
                    val, err = quad(integrand, lo, r, epsrel=self.quad_rtol,
                                    epsabs=0.0, limit=200)
                except (Warning, ZeroDivisionError, FloatingPointError,
                        OverflowError) as exc:
                    raise LawError(f"quadrature did not converge at "
                                   f"rho={r!r}: {exc}") from exc
            if not np.isfinite(val) or abs(err) > 1e-8 * max(abs(val), 1.0):
                raise LawError(
                    f"quadrature did not converge at rho={r!r} (err={err!r})")
            return val

        return np.vectorize(one, otypes=[float])(rho)[()]

    def phi(self, rho):
        return self._integrate("phi", lambda s: np.sqrt(self.K_func(s) / s), rho)

    def F(self, rho):
        return self._integrate("F", lambda s: np.sqrt(self.K_func(s) * s), rho)

    def sqrtK_primitive(self, rho):
        return self._integrate("eta", lambda s: np.sqrt(self.K_func(s)), rho)


class PressureLaw:
    """Barotropic pressure law: p(rho), p'(rho) and the bulk energy F0."""

    def p(self, rho):
        raise NotImplementedError

    def dp(self, rho):
        raise NotImplementedError

    def F0(self, rho):
        raise NotImplementedError


@dataclass(frozen=True)
class ShallowWaterPressure(PressureLaw):
    """Hydrostatic film pressure p(h) = g*cos(theta)*h^2/2 on an incline."""

    g: float = 9.8
    theta: float = 0.0

    def _gcos(self):
        return self.g * np.cos(self.theta)

    def p(self, rho):
        return 0.5 * self._gcos() * rho ** 2

    def dp(self, rho):
        return self._gcos() * rho

    def F0(self, rho):
        return 0.5 * self._gcos() * rho ** 2


@dataclass(frozen=True)
class PowerLawPressure(PressureLaw):
    """p(rho) = kappa*rho^gamma with gamma > 1."""

    kappa: float
    gamma: float

    def __post_init__(self):
        if self.kappa <= 0.0:
            raise ValueError("kappa must be positive")
        if self.gamma <= 1.0:
            raise ValueError("gamma must exceed 1")

    def p(self, rho):
        return self.kappa * rho ** self.gamma

    def dp(self, rho):
        return self.kappa * self.gamma * rho ** (self.gamma - 1.0)

    def F0(self, rho):
        return self.kappa * rho ** self.gamma / (self.gamma - 1.0)


def eval_capillary(law: CapillarityLaw, rho) -> CapillaryValues:
    """Evaluate the full constitutive chain of a capillarity law at rho > 0."""
    _require_positive(rho)
    return CapillaryValues(K=law.K(rho), phi=law.phi(rho), dphi=law.dphi(rho),
                           F=law.F(rho), dF=law.dF(rho), G=law.G(rho))


def eval_pressure(law: PressureLaw, rho) -> PressureValues:
    """Evaluate p, p' and F0 of a pressure law at rho > 0."""
    _require_positive(rho)
    return PressureValues(p=law.p(rho), dp=law.dp(rho), F0=law.F0(rho))


class ConsistencyReport(NamedTuple):
    max_dF_residual: float
    max_dphi_residual: float

    @property
    def ok(self):
        return max(self.max_dF_residual, self.max_dphi_residual) <= 1e-8


def check_law_consistency(law: CapillarityLaw, rho_samples) -> ConsistencyReport:
    """Check F' = sqrt(K*rho) and sqrt(rho)*phi' = sqrt(K) by central differences.

    The finite-difference step is 1e-6*rho per sample; residuals are relative.
    """
    rho_samples = np.atleast_1d(np.asarray(rho_samples, dtype=float))
    _require_positive(rho_samples)

    res_dF = 0.0
    res_dphi = 0.0
    for r in rho_samples:
        h = 1e-6 * r
        dF_fd = (law.F(r + h) - law.F(r - h)) / (2.0 * h)
        dphi_fd = (law.phi(r + h) - law.phi(r - h)) / (2.0 * h)
        a = np.sqrt(law.K(r) * r)
        sqrtK = np.sqrt(law.K(r))
        res_dF = max(res_dF, abs(dF_fd - a) / max(abs(a), 1e-300))
        res_dphi = max(res_dphi, abs(np.sqrt(r) * dphi_fd - sqrtK)
                       / max(abs(sqrtK), 1e-300))
    return ConsistencyReport(float(res_dF), float(res_dphi))
