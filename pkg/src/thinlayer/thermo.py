"""Constitutive theory: pressure, internal energy, entropy, transport
coefficients, ballistic free energy and the relative-entropy density.

The equation of state is built from a structural function ``P`` of the
dimensionless ratio ``Z = rho / theta**(1/(gamma-1))``.  The default

    P(Z) = p_inf * Z**gamma + Z / (1 + Z)

admits closed forms for every derived quantity (entropy included), so no
quadrature is needed inside the EOS.  Radiation contributes ``(a/3) theta**4``
to the pressure, ``a theta**4 / rho`` to the specific energy and
``(4a/3) theta**3 / rho`` to the specific entropy.

All functions are pure and accept scalars or numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ThermoParams",
    "StructuralP",
    "DefaultP",
    "structural_P",
    "pressure",
    "internal_energy",
    "entropy",
    "viscosity",
    "conductivity",
    "helmholtz_ballistic",
    "d_helmholtz_drho",
    "relative_entropy_density",
    "maxwell_residual",
    "gibbs_residual",
    "sound_speed",
]


class StructuralP:
    """Interface for the structural pressure function P(Z).

    Implementations must supply values, first derivatives, and the entropy
    kernel M with M'(Z) = -(gamma*P - P'*Z) / ((gamma-1) Z**2).
    """

    def value(self, Z):
        raise NotImplementedError

    def deriv(self, Z):
        raise NotImplementedError

    def entropy_M(self, Z):
        raise NotImplementedError

    def entropy_M_deriv(self, Z):
        raise NotImplementedError


@dataclass(frozen=True)
class DefaultP(StructuralP):
    """P(Z) = p_inf Z^gamma + Z/(1+Z).

    Satisfies: P(0)=0, P'>0, 0 < (gamma*P - P'Z)/Z <= gamma, P/Z^gamma -> p_inf,
    and yields the closed-form entropy kernel

        M(Z) = log((1+Z)/Z) + 1 / ((gamma-1)(1+Z)),

    with M' < 0 and M -> 0 as Z -> infinity.
    """

    gamma: float
    p_inf: float

    def value(self, Z):
        Z = np.asarray(Z, dtype=float)
        return self.p_inf * Z**self.gamma + Z / (1.0 + Z)

    def deriv(self, Z):
        Z = np.asarray(Z, dtype=float)
        return self.gamma * self.p_inf * Z ** (self.gamma - 1.0) + 1.0 / (1.0 + Z) ** 2

    def entropy_M(self, Z):
        Z = np.asarray(Z, dtype=float)
        return np.log1p(1.0 / Z) + 1.0 / ((self.gamma - 1.0) * (1.0 + Z))

    def entropy_M_deriv(self, Z):
        Z = np.asarray(Z, dtype=float)
        return -1.0 / (Z * (1.0 + Z)) - 1.0 / ((self.gamma - 1.0) * (1.0 + Z) ** 2)


@dataclass(frozen=True)
class ThermoParams:
    """Constitutive constants.

    gamma > 1 is the adiabatic exponent, a >= 0 the radiation constant,
    p_inf > 0 the asymptotic pressure coefficient.  The viscosity law is
    mu = mu0 + mu1*theta (bulk viscosity identically zero) and the heat
    conductivity kappa = kappa0 + kappa2*theta**2 + kappa3*theta**3.
    """

    gamma: float = 5.0 / 3.0
    a: float = 0.0
    p_inf: float = 1.0
    mu0: float = 1.0
    mu1: float = 1.0
    kappa0: float = 1.0
    kappa2: float = 1.0
    kappa3: float = 1.0
    P: StructuralP = field(default=None, repr=False)

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError("gamma must exceed 1")
        if self.a < 0.0:
            raise ValueError("radiation constant a must be nonnegative")
        for name in ("p_inf", "mu0", "kappa0"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        for name in ("mu1", "kappa2", "kappa3"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        if self.P is None:
            object.__setattr__(self, "P", DefaultP(self.gamma, self.p_inf))

    @property
    def b(self) -> float:
        """Exponent shorthand 1/(gamma-1)."""
        return 1.0 / (self.gamma - 1.0)


def _check_state(rho, theta):
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(rho <= 0.0):
        raise ValueError("density must be strictly positive")
    if np.any(theta <= 0.0):
        raise ValueError("temperature must be strictly positive")
    return rho, theta


def _Z(params: ThermoParams, rho, theta):
    return rho / theta**params.b


def structural_P(params: ThermoParams, Z):
    Z = np.asarray(Z, dtype=float)
    if np.any(Z < 0.0):
        raise ValueError("Z must be nonnegative")
    return params.P.value(Z)


def pressure(params: ThermoParams, rho, theta):
    """p = theta^(gamma/(gamma-1)) P(Z) + (a/3) theta^4."""
    rho, theta = _check_state(rho, theta)
    Z = _Z(params, rho, theta)
    return theta ** (params.gamma * params.b) * params.P.value(Z) + params.a / 3.0 * theta**4


def internal_energy(params: ThermoParams, rho, theta):
    """e = (1/(gamma-1)) theta^(gamma/(gamma-1)) P(Z) / rho + a theta^4 / rho."""
    rho, theta = _check_state(rho, theta)
    Z = _Z(params, rho, theta)
    e1 = params.b * theta ** (params.gamma * params.b) * params.P.value(Z) / rho
    return e1 + params.a * theta**4 / rho


def entropy(params: ThermoParams, rho, theta):
    """s = M(Z) + (4a/3) theta^3 / rho."""
    rho, theta = _check_state(rho, theta)
    Z = _Z(params, rho, theta)
    return params.P.entropy_M(Z) + 4.0 * params.a / 3.0 * theta**3 / rho


def viscosity(params: ThermoParams, theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0.0):
        raise ValueError("temperature must be strictly positive")
    return params.mu0 + params.mu1 * theta


def conductivity(params: ThermoParams, theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0.0):
        raise ValueError("temperature must be strictly positive")
    return params.kappa0 + params.kappa2 * theta**2 + params.kappa3 * theta**3


# ---------------------------------------------------------------------------
# Analytic partial derivatives (used by the solvers and the relative-entropy
# machinery; all follow from the closed forms above).
# ---------------------------------------------------------------------------

def dp_drho(params: ThermoParams, rho, theta):
    rho, theta = _check_state(rho, theta)
    Z = _Z(params, rho, theta)
    return theta * params.P.deriv(Z)


def dp_dtheta(params: ThermoParams, rho, theta):
    rho, theta = _check_state(rho, theta)
    b = params.b
    Z = _Z(params, rho, theta)
    core = b * theta ** (params.gamma * b - 1.0) * (
        params.gamma * params.P.value(Z) - params.P.deriv(Z) * Z
    )
    return core + 4.0 * params.a / 3.0 * theta**3


def de_drho(params: ThermoParams, rho, theta):
    rho, theta = _check_state(rho, theta)
    b = params.b
    Z = _Z(params, rho, theta)
    core = b * theta ** (params.gamma * b) * (params.P.deriv(Z) * Z - params.P.value(Z)) / rho**2
    return core - params.a * theta**4 / rho**2


def de_dtheta(params: ThermoParams, rho, theta):
    rho, theta = _check_state(rho, theta)
    b = params.b
    Z = _Z(params, rho, theta)
    core = b * b * theta ** (params.gamma * b - 1.0) / rho * (
        params.gamma * params.P.value(Z) - params.P.deriv(Z) * Z
    )
    return core + 4.0 * params.a * theta**3 / rho


def ds_drho(params: ThermoParams, rho, theta):
    rho, theta = _check_state(rho, theta)
    Z = _Z(params, rho, theta)
    return params.P.entropy_M_deriv(Z) / theta**params.b - 4.0 * params.a / 3.0 * theta**3 / rho**2


def ds_dtheta(params: ThermoParams, rho, theta):
    rho, theta = _check_state(rho, theta)
    b = params.b
    Z = _Z(params, rho, theta)
    return -b * Z * params.P.entropy_M_deriv(Z) / theta + 4.0 * params.a * theta**2 / rho


def sound_speed(params: ThermoParams, rho, theta):
    """Isentropic sound speed c, c^2 = p_rho + theta p_theta^2 / (rho^2 e_theta)."""
    c2 = dp_drho(params, rho, theta) + np.asarray(theta) * dp_dtheta(params, rho, theta) ** 2 / (
        np.asarray(rho) ** 2 * de_dtheta(params, rho, theta)
    )
    return np.sqrt(c2)


# ---------------------------------------------------------------------------
# Ballistic free energy and relative entropy
# ---------------------------------------------------------------------------

def helmholtz_ballistic(params: ThermoParams, rho, theta, theta_ref):
    """H_ref(rho, theta) = rho e - theta_ref rho s.

    Vanishing density is admitted (only the radiation terms survive there).
    """
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    theta_ref = np.asarray(theta_ref, dtype=float)
    if np.any(rho < 0.0):
        raise ValueError("density must be nonnegative")
    if np.any(theta <= 0.0) or np.any(theta_ref <= 0.0):
        raise ValueError("temperatures must be strictly positive")
    a = params.a
    rad = a * theta**4 - theta_ref * 4.0 * a / 3.0 * theta**3
    rho_pos = np.where(rho > 0.0, rho, 1.0)
    Z = _Z(params, rho_pos, theta)
    core = (
        params.b * theta ** (params.gamma * params.b) * params.P.value(Z)
        - theta_ref * rho_pos * params.P.entropy_M(Z)
    )
    return np.where(rho > 0.0, core, 0.0) + rad


def d_helmholtz_drho(params: ThermoParams, rho, theta, theta_ref):
    """Analytic d/drho of the ballistic free energy at fixed theta.

    d(rho e)/drho = theta P'(Z) / (gamma-1),
    d(rho s)/drho = M(Z) + Z M'(Z); radiation terms do not depend on rho.
    """
    rho, theta = _check_state(rho, theta)
    Z = _Z(params, rho, theta)
    return params.b * theta * params.P.deriv(Z) - np.asarray(theta_ref) * (
        params.P.entropy_M(Z) + Z * params.P.entropy_M_deriv(Z)
    )


def relative_entropy_density(params: ThermoParams, rho, theta, r, Theta):
    """E(rho, theta | r, Theta) per the three-term Bregman-type formula.

    Nonnegative whenever (r, Theta) lies in the admissible window; vanishes
    exactly at (rho, theta) = (r, Theta).
    """
    r = np.asarray(r, dtype=float)
    Theta = np.asarray(Theta, dtype=float)
    if np.any(r <= 0.0) or np.any(Theta <= 0.0):
        raise ValueError("reference state must be strictly positive")
    H = helmholtz_ballistic(params, rho, theta, Theta)
    H_ref = helmholtz_ballistic(params, r, Theta, Theta)
    dH_ref = d_helmholtz_drho(params, r, Theta, Theta)
    return H - dH_ref * (np.asarray(rho, dtype=float) - r) - H_ref


# ---------------------------------------------------------------------------
# Consistency residuals (finite differences of the implemented closed forms)
# ---------------------------------------------------------------------------

def maxwell_residual(params: ThermoParams, rho, theta, h=None):
    """Scale-invariant Maxwell-relation residual with centered differences.

    Returns |de/drho - (p - theta dp/dtheta)/rho^2| divided by
    max(1, |de/drho|) so the tolerance is meaningful across the whole
    log-spaced state grid (the radiation part grows like theta^4/rho^2).
    """
    rho, theta = _check_state(rho, theta)
    scale = h if h is not None else 1.0e-5
    hr = scale * rho
    ht = scale * theta
    de = (internal_energy(params, rho + hr, theta) - internal_energy(params, rho - hr, theta)) / (
        2.0 * hr
    )
    dp = (pressure(params, rho, theta + ht) - pressure(params, rho, theta - ht)) / (2.0 * ht)
    resid = np.abs(de - (pressure(params, rho, theta) - theta * dp) / rho**2)
    return resid / np.maximum(1.0, np.abs(de))


def gibbs_residual(params: ThermoParams, rho, theta):
    """|theta Ds - (De + p D(1/rho))| with directional centered differences.

    The directional increment varies rho and theta simultaneously, which
    exercises both partial derivatives of the Gibbs relation.
    """
    rho, theta = _check_state(rho, theta)
    hr = 1.0e-5 * rho
    htt = 1.0e-5 * theta
    ds = (entropy(params, rho + hr, theta + htt) - entropy(params, rho - hr, theta - htt)) / 2.0
    de = (
        internal_energy(params, rho + hr, theta + htt)
        - internal_energy(params, rho - hr, theta - htt)
    ) / 2.0
    dinv = (1.0 / (rho + hr) - 1.0 / (rho - hr)) / 2.0
    resid = np.abs(theta * ds - (de + pressure(params, rho, theta) * dinv))
    return resid / np.maximum(1.0, np.abs(de))
