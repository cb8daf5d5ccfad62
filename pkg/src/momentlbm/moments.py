"""Moment encoding core.

The solver stores three velocity moments per node: density, momentum, and
the second-order moment tensor with the isotropic cs2 part already removed
(density rho, momentum rho*u, stress rho*S with
rho*S_ab = sum_i (c_ia c_ib - cs2 d_ab) f_i).  This module converts between
distributions and moments, reconstructs distributions through a third-order
Hermite expansion, and splits the stress moment into equilibrium and
non-equilibrium parts.

All array functions are vectorized: the direction or component axis comes
first and any grid shape may follow, so the same code serves per-sample
tests and whole-grid solver steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import _AXIS, LatticeModel, voigt_components


def moments_from_distributions(f: np.ndarray, lattice: LatticeModel):
    """Extract (rho, momentum, stress) from distributions.

    ``f`` has shape (q, ...).  Returns ``rho`` with shape (...), ``mom``
    with shape (dims, ...) and ``stress`` with shape (n_voigt, ...).
    The body-force half-step contribution to momentum is not applied
    here; it belongs to the collision update.
    """
    if f.shape[0] != lattice.q:
        raise ValueError(f"expected {lattice.q} distributions, got {f.shape[0]}")
    c = lattice.velocities.astype(np.float64)
    rho = f.sum(axis=0)
    mom = np.tensordot(c.T, f, axes=1)
    stress = np.tensordot(lattice.hermite.h2.T, f, axes=1)
    return rho, mom, stress


def _third_order_tensor(u: np.ndarray, s: np.ndarray, labels, voigt_index):
    """T_abg = S_ab u_g + S_ag u_b + S_bg u_a - 2 u_a u_b u_g per label."""
    out = []
    for label in labels:
        a, b, g = (_AXIS[ch] for ch in label)
        t = (s[voigt_index[tuple(sorted((a, b)))]] * u[g]
             + s[voigt_index[tuple(sorted((a, g)))]] * u[b]
             + s[voigt_index[tuple(sorted((b, g)))]] * u[a]
             - 2.0 * u[a] * u[b] * u[g])
        out.append(t)
    return np.stack(out, axis=0)


def _voigt_index(dims: int):
    names = voigt_components(dims)
    idx = {}
    for j, name in enumerate(names):
        a, b = _AXIS[name[0]], _AXIS[name[1]]
        idx[tuple(sorted((a, b)))] = j
    return idx


def reconstruct_distributions(rho, mom, stress, lattice: LatticeModel) -> np.ndarray:
    """Closed-form distribution reconstruction from stored moments.

    f_i = rho w_i [1 + (c_i.u)/cs2 + H2(c_i):S/(2 cs2^2)
                   + sum_abg H3_abg(c_i) T_abg/(2 cs2^3)]

    with S = stress/rho, u = mom/rho, and T the recursive third-order
    closure.  On D3Q19 the xyz term is dropped (no velocity has all three
    components nonzero, so H3_xyz vanishes identically there).
    """
    rho = np.asarray(rho, dtype=np.float64)
    mom = np.asarray(mom, dtype=np.float64)
    stress = np.asarray(stress, dtype=np.float64)
    cs2 = lattice.cs2
    cs4, cs6 = cs2 ** 2, cs2 ** 3
    u = mom / rho
    s = stress / rho

    basis = lattice.hermite
    h2_term = np.tensordot(basis.h2_contract, s, axes=1) / (2 * cs4)
    vidx = _voigt_index(lattice.dims)
    t = _third_order_tensor(u, s, basis.h3_labels, vidx)
    h3_term = np.tensordot(basis.h3, t, axes=1) / (2 * cs6)
    cu = np.tensordot(lattice.velocities.astype(np.float64), u, axes=1)

    w = lattice.weights.reshape((lattice.q,) + (1,) * (rho.ndim))
    return rho * w * (1.0 + cu / cs2 + h2_term + h3_term)


def neq_decompose(rho, mom, stress) -> np.ndarray:
    """Non-equilibrium stress: sneq_ab = stress_ab - mom_a mom_b / rho."""
    stress = np.asarray(stress, dtype=np.float64)
    return stress - _outer_voigt(mom) / rho


def neq_recompose(rho, mom, sneq) -> np.ndarray:
    """Exact inverse of :func:`neq_decompose`."""
    sneq = np.asarray(sneq, dtype=np.float64)
    return sneq + _outer_voigt(mom) / rho


def neq_decompose_raw(rho, mom, stress, cs2: float = 1.0 / 3.0) -> np.ndarray:
    """Raw-moment variant of the non-equilibrium split.

    Differs from :func:`neq_decompose` by cs2*(rho - 1) on the diagonal:
    the raw second moment keeps its isotropic part, from which the
    constant cs2 (not cs2*rho) is subtracted.  Kept only so range-sweep
    experiments can compare both storage conventions.
    """
    stress = np.asarray(stress, dtype=np.float64)
    mom = np.asarray(mom, dtype=np.float64)
    dims = mom.shape[0]
    out = stress - _outer_voigt(mom) / rho
    names = voigt_components(dims)
    for j, name in enumerate(names):
        if name[0] == name[1]:
            out[j] = out[j] + cs2 * (rho - 1.0)
    return out


def _outer_voigt(mom: np.ndarray) -> np.ndarray:
    """Voigt-ordered outer product mom_a mom_b."""
    mom = np.asarray(mom, dtype=np.float64)
    dims = mom.shape[0]
    names = voigt_components(dims)
    rows = []
    for name in names:
        a, b = _AXIS[name[0]], _AXIS[name[1]]
        rows.append(mom[a] * mom[b])
    return np.stack(rows, axis=0)


@dataclass
class MomentSet:
    """Per-node moments: density, momentum vector, stress in Voigt order."""

    rho: float
    mom: np.ndarray
    stress: np.ndarray

    def __post_init__(self):
        self.mom = np.asarray(self.mom, dtype=np.float64)
        self.stress = np.asarray(self.stress, dtype=np.float64)
        if self.rho <= 0:
            raise ValueError("density must be positive")
        if np.any(np.abs(self.mom / self.rho) >= 1.0):
            raise ValueError("velocity components must stay below 1")

    @property
    def velocity(self) -> np.ndarray:
        return self.mom / self.rho

    @classmethod
    def from_distributions(cls, f: np.ndarray, lattice: LatticeModel) -> "MomentSet":
        rho, mom, stress = moments_from_distributions(f, lattice)
        if rho <= 0:
            raise ValueError("non-positive density: corrupted state")
        return cls(rho=float(rho), mom=mom, stress=stress)

    def to_distributions(self, lattice: LatticeModel) -> np.ndarray:
        return reconstruct_distributions(self.rho, self.mom, self.stress, lattice)

    def decompose(self) -> np.ndarray:
        return neq_decompose(self.rho, self.mom, self.stress)

    @classmethod
    def recompose(cls, rho: float, mom: np.ndarray, sneq: np.ndarray) -> "MomentSet":
        return cls(rho=rho, mom=np.asarray(mom, dtype=np.float64),
                   stress=neq_recompose(rho, mom, sneq))
