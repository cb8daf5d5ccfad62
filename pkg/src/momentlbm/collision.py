"""Collision operators.

Distribution-space operators (BGK, raw-moment MRT, central-moment MRT) are
provided for baselines and for the linear stability analyzer; the solver
itself advances moments directly through :func:`collide_moments`, which is
the moment-space equivalent of the central-moment MRT collision with the
viscosity rate on the second-order moments and unit rates above.

Rate convention: the viscosity-controlling relaxation rate is
r_nu = 1/(0.5 + 3 nu) and tau = 1/r_nu = 0.5 + 3 nu, shared by every
operator in this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import CS2, LatticeModel, equilibrium
from .moments import (MomentSet, moments_from_distributions,
                      reconstruct_distributions)


def viscosity_rate(nu: float) -> float:
    """Relaxation rate for kinematic viscosity nu (lattice units)."""
    return 1.0 / (0.5 + nu / CS2)


def tau_from_viscosity(nu: float) -> float:
    return 0.5 + nu / CS2


def rm_relaxation_rates(nu: float) -> np.ndarray:
    """Default raw-moment MRT rate vector (D2Q9)."""
    r = viscosity_rate(nu)
    return np.array([0.0, 0.0, 0.0, 1.64, r, r, 1.9, 1.9, 1.54])


def nocm_relaxation_rates(nu: float) -> np.ndarray:
    """Default central-moment MRT rate vector (D2Q9)."""
    s = viscosity_rate(nu)
    return np.array([0.0, 0.0, 0.0, s, s, s, 1.0, 1.0, 1.0])


@dataclass(frozen=True)
class RelaxationConfig:
    """Viscosity plus the per-moment relaxation rates derived from it."""

    nu: float
    tau: float
    rates: np.ndarray

    @classmethod
    def rm(cls, nu: float) -> "RelaxationConfig":
        return cls(nu=nu, tau=tau_from_viscosity(nu), rates=rm_relaxation_rates(nu))

    @classmethod
    def nocm(cls, nu: float) -> "RelaxationConfig":
        return cls(nu=nu, tau=tau_from_viscosity(nu), rates=nocm_relaxation_rates(nu))

    def __post_init__(self):
        r = viscosity_rate(self.nu)
        if not 0.0 < r < 2.0:
            raise ValueError("viscosity rate must lie in (0, 2)")
        if np.any(self.rates[:3] != 0.0):
            raise ValueError("conserved-moment rates must be zero")


# D2Q9 raw-moment projection matrix, rows: density, momentum x/y, energy,
# normal stress difference, shear, energy fluxes, fourth-order moment.
RM_MATRIX = np.array([
    [1, 1, 1, 1, 1, 1, 1, 1, 1],
    [0, 1, 0, -1, 0, 1, -1, -1, 1],
    [0, 0, 1, 0, -1, 1, 1, -1, -1],
    [0, 1, 1, 1, 1, 2, 2, 2, 2],
    [0, 1, -1, 1, -1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, -1, 1, -1],
    [0, 1, 0, -1, 0, 2, -2, -2, 2],
    [0, 0, 1, 0, -1, 2, 2, -2, -2],
    [0, 0, 0, 0, 0, 1, 1, 1, 1],
], dtype=np.float64)


def nocm_matrix(u, lattice: LatticeModel) -> np.ndarray:
    """Central-moment projection matrix for background velocity ``u``."""
    if lattice.dims != 2:
        raise ValueError("central-moment matrices are defined for D2Q9 only")
    cx = lattice.velocities[:, 0].astype(np.float64)
    cy = lattice.velocities[:, 1].astype(np.float64)
    x = cx - u[0]
    y = cy - u[1]
    return np.stack([
        np.ones_like(x), x, y,
        x * x + y * y, x * x - y * y, x * y,
        x * x * y, x * y * y, x * x * y * y,
    ])


def bgk_collide(f, rho, u, tau, lattice: LatticeModel, feq_order: int = 4):
    """Single-relaxation-time collision toward the discrete equilibrium."""
    if tau <= 0.5:
        raise ValueError("tau must exceed 0.5 (non-negative viscosity)")
    feq = equilibrium(rho, u, lattice, order=feq_order)
    return f - (f - feq) / tau


def rm_mrt_collide(f, rho, u, rates, lattice: LatticeModel, feq_order: int = 4):
    """Raw-moment MRT collision, D2Q9 only."""
    if lattice.q != 9:
        raise ValueError("raw-moment MRT matrices are given for D2Q9 only")
    feq = equilibrium(rho, u, lattice, order=feq_order)
    m_inv = np.linalg.inv(RM_MATRIX)
    k = m_inv @ (np.asarray(rates)[:, None] * RM_MATRIX)
    return f - k @ (f - feq)


def nocm_mrt_collide(f, rho, u, rates, lattice: LatticeModel, feq_order: int = 2):
    """Central-moment MRT collision, D2Q9 only.

    Moments are taken relative to the local velocity; the matrix is
    rebuilt per call.  The equilibrium defaults to the second-order
    truncation, whose low-order central moments match the Maxwellian
    values exactly on D2Q9; the fourth-order polynomial leaves O(|u|^4)
    residuals there and is available behind ``feq_order=4``.
    """
    m = nocm_matrix(u, lattice)
    m_inv = np.linalg.inv(m)
    residual = np.max(np.abs(m @ m_inv - np.eye(lattice.q)))
    if residual > 1e-8:
        raise RuntimeError(f"central-moment matrix inversion residual {residual:.2e}")
    feq = equilibrium(rho, u, lattice, order=feq_order)
    k = m_inv @ (np.asarray(rates)[:, None] * m)
    return f - k @ (f - feq)


def collide_moments(rho, mom, stress, force, tau, dims: int):
    """Moment-space collision update, vectorized over any grid shape.

    Arguments are the stored moments (stress holds rho*S in Voigt order)
    and an optional body force (same leading layout as ``mom`` or a bare
    vector).  Returns the post-collision (rho, mom, stress).

    In 3D the diagonal update couples the three normal components (the
    trace relaxes at unit rate); in 2D every component relaxes uniformly
    at 1/tau, which is what the central-moment operator with a shared
    second-order rate produces.
    """
    rho = np.asarray(rho, dtype=np.float64)
    mom = np.asarray(mom, dtype=np.float64)
    stress = np.asarray(stress, dtype=np.float64)
    if force is None:
        force = np.zeros((dims,) + (1,) * rho.ndim)
    else:
        force = np.asarray(force, dtype=np.float64)
        force = force.reshape((dims,) + (1,) * rho.ndim) if force.ndim == 1 else force

    u = mom / rho
    s = 1.0 / tau
    mom_new = mom + 0.5 * force

    fu = {}  # F_a u_b products, keyed by (a, b)
    for a in range(dims):
        for b in range(dims):
            fu[(a, b)] = force[a] * u[b]

    if dims == 2:
        ux, uy = u
        cxy = (2 * tau - 1) / (2 * tau)
        sxx = (1 - s) * stress[0] + s * rho * ux * ux + cxy * 2 * fu[(0, 0)]
        sxy = (1 - s) * stress[1] + s * rho * ux * uy + cxy * (fu[(0, 1)] + fu[(1, 0)])
        syy = (1 - s) * stress[2] + s * rho * uy * uy + cxy * 2 * fu[(1, 1)]
        stress_new = np.stack([sxx, sxy, syy])
    else:
        ux, uy, uz = u
        cxy = (2 * tau - 1) / (2 * tau)
        cd = (tau - 1) / (3 * tau)
        u2 = (ux * ux, uy * uy, uz * uz)
        diag = (stress[0], stress[3], stress[5])
        new_diag = []
        for a in range(3):
            b, g = [i for i in range(3) if i != a]
            val = (cd * (2 * diag[a] - diag[b] - diag[g])
                   + rho * (u2[0] + u2[1] + u2[2]) / 3.0
                   + rho * (2 * u2[a] - u2[b] - u2[g]) / (3 * tau)
                   + fu[(a, a)]
                   + cd * (2 * fu[(a, a)] - fu[(b, b)] - fu[(g, g)]))
            new_diag.append(val)
        sxy = (1 - s) * stress[1] + s * rho * ux * uy + cxy * (fu[(0, 1)] + fu[(1, 0)])
        sxz = (1 - s) * stress[2] + s * rho * ux * uz + cxy * (fu[(0, 2)] + fu[(2, 0)])
        syz = (1 - s) * stress[4] + s * rho * uy * uz + cxy * (fu[(1, 2)] + fu[(2, 1)])
        stress_new = np.stack([new_diag[0], sxy, sxz, new_diag[1], syz, new_diag[2]])

    return rho.copy(), mom_new, stress_new


def moment_collide(m: MomentSet, force, tau: float, lattice: LatticeModel) -> MomentSet:
    """Per-node wrapper around :func:`collide_moments`.

    Raises on a divergent post-update velocity, which signals that the
    surrounding simulation has left the validity region.
    """
    if tau <= 0.5:
        raise ValueError("tau must exceed 0.5 (non-negative viscosity)")
    rho, mom, stress = collide_moments(
        np.float64(m.rho), m.mom, m.stress, force, tau, lattice.dims)
    if np.any(np.abs(mom / rho) >= 1.0):
        raise FloatingPointError("post-collision velocity reached the lattice speed")
    return MomentSet(rho=float(rho), mom=mom, stress=stress)


def reference_collision_equivalence(m: MomentSet, tau: float,
                                    lattice: LatticeModel) -> float:
    """Deviation between the moment-space collision and its reference.

    Reconstructs distributions from ``m``, applies the central-moment MRT
    operator with the matched viscosity rate (unit rates above), extracts
    moments, and returns the maximum absolute difference against
    :func:`moment_collide` over all moment components.
    """
    if lattice.dims != 2:
        raise ValueError("the distribution-space reference exists for D2Q9 only")
    s = 1.0 / tau
    rates = np.array([0.0, 0.0, 0.0, s, s, s, 1.0, 1.0, 1.0])
    f = reconstruct_distributions(m.rho, m.mom, m.stress, lattice)
    f_post = nocm_mrt_collide(f, m.rho, m.velocity, rates, lattice)
    rho_ref, mom_ref, stress_ref = moments_from_distributions(f_post, lattice)
    out = moment_collide(m, None, tau, lattice)
    return max(
        abs(rho_ref - out.rho),
        float(np.max(np.abs(mom_ref - out.mom))),
        float(np.max(np.abs(stress_ref - out.stress))),
    )
