"""Linear (Fourier-mode) stability analyzer for the D2Q9 operators.

The update is linearized around a uniform background state; a plane-wave
ansatz exp(i(k.x - w t)) with unit timestep turns one streaming-collision
step into multiplication by a complex amplification matrix G(k).  Each
eigenvalue lambda corresponds to a mode frequency w = i log(lambda), so
Im(w) = log|lambda| (growth rate, positive means unstable) and
Re(w) = -arg(lambda) (dispersion).

Four collision models are supported: "bgk", "rm-mrt", "nocm-mrt", and
"moment" (the composite map that extracts moments after a central-moment
collision and reconstructs distributions through the truncated Hermite
basis, i.e. the operator the moment-encoded solver actually applies).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .collision import RM_MATRIX, nocm_matrix, nocm_relaxation_rates, \
    tau_from_viscosity
from .lattice import CS2, LatticeModel, equilibrium_jacobians, make_lattice

MODELS = ("bgk", "rm-mrt", "nocm-mrt", "moment")


@dataclass(frozen=True)
class WaveVector:
    kx: float
    ky: float

    def as_array(self) -> np.ndarray:
        return np.array([self.kx, self.ky])


@dataclass(frozen=True)
class LinearizationPoint:
    """Uniform background state the update is linearized around."""

    nu: float
    rho_bar: float = 1.0
    u_bar: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if np.linalg.norm(self.u_bar) >= 1.0:
            raise ValueError("background speed must stay below the lattice speed")

    @property
    def tau(self) -> float:
        return tau_from_viscosity(self.nu)


@dataclass
class SpectralSample:
    """Eigenvalue diagnostics of G at one wavevector."""

    k: WaveVector
    eigenvalues: np.ndarray
    max_modulus: float
    max_im_omega: float
    re_omega: np.ndarray


def jacobian_lambda(point: LinearizationPoint, lattice: LatticeModel) -> np.ndarray:
    """Equilibrium response matrix.

    Lambda[i, j] = dfeq_i/drho * drho/df_j + sum_a dfeq_i/du_a * du_a/df_j
    with drho/df_j = 1 and du_a/df_j = (c_ja - u_a)/rho, which follow from
    the moment definitions rho = sum f and u = sum c f / rho.
    """
    d_rho, d_u = equilibrium_jacobians(point.rho_bar, point.u_bar, lattice)
    c = lattice.velocities.astype(np.float64)
    ones = np.ones(lattice.q)
    lam = np.outer(d_rho, ones)
    for a in range(lattice.dims):
        lam += np.outer(d_u[:, a], (c[:, a] - point.u_bar[a]) / point.rho_bar)
    return lam


def hermite_a2_matrix(lattice: LatticeModel) -> np.ndarray:
    """Second-order Hermite reconstruction matrix, shape (9, 3)."""
    c = lattice.velocities.astype(np.float64)
    cx, cy = c[:, 0], c[:, 1]
    w = lattice.weights
    cols = np.stack([cx * cx - CS2, cx * cy, cy * cy - CS2], axis=1)
    return (w / (2 * CS2 ** 2))[:, None] * cols


def hermite_a3_matrix(lattice: LatticeModel) -> np.ndarray:
    """Third-order Hermite reconstruction matrix, shape (9, 4)."""
    c = lattice.velocities.astype(np.float64)
    cx, cy = c[:, 0], c[:, 1]
    w = lattice.weights
    cols = np.stack([
        cx ** 3 - 3 * CS2 * cx,
        cx * cx * cy - CS2 * cy,
        cx * cy * cy - CS2 * cx,
        cy ** 3 - 3 * CS2 * cy,
    ], axis=1)
    return (w / (6 * CS2 ** 3))[:, None] * cols


def recursion_matrix(u) -> np.ndarray:
    """Maps second-order to third-order non-equilibrium coefficients."""
    ux, uy = float(u[0]), float(u[1])
    return np.array([
        [3 * ux, 0.0, 0.0],
        [uy, 2 * ux, 0.0],
        [0.0, 2 * uy, ux],
        [0.0, 0.0, 3 * uy],
    ])


def stress_projection_matrix(lattice: LatticeModel) -> np.ndarray:
    """Maps distributions to [S_xx, 2 S_xy, S_yy], shape (3, 9)."""
    c = lattice.velocities.astype(np.float64)
    cx, cy = c[:, 0], c[:, 1]
    return np.stack([cx * cx - CS2, 2 * cx * cy, cy * cy - CS2])


def moment_extraction_matrix(lattice: LatticeModel) -> np.ndarray:
    """Linear map from distributions to stored moments, shape (1+D+V, q)."""
    c = lattice.velocities.astype(np.float64)
    return np.vstack([np.ones(lattice.q), c.T, lattice.hermite.h2.T])


def reconstruction_moment_jacobian(rho, mom, stress,
                                   lattice: LatticeModel) -> np.ndarray:
    """Analytic Jacobian of the Hermite reconstruction in its moments.

    Differentiates f_i(rho, mom, stress) of
    :func:`momentlbm.moments.reconstruct_distributions` with respect to the
    1 + D + V stored components; the density, momentum, and second-order
    terms are linear, only the recursive third-order closure contributes
    nonlinear parts.  Shape (q, 1 + D + V).
    """
    from .lattice import _AXIS
    from .moments import _voigt_index

    rho = float(rho)
    mom = np.asarray(mom, dtype=np.float64)
    stress = np.asarray(stress, dtype=np.float64)
    dims = lattice.dims
    vidx = _voigt_index(dims)
    nv = lattice.n_voigt
    ncomp = 1 + dims + nv
    cs2 = lattice.cs2
    cs4, cs6 = cs2 ** 2, cs2 ** 3
    basis = lattice.hermite
    w = lattice.weights
    c = lattice.velocities.astype(np.float64)

    jac = np.zeros((lattice.q, ncomp))
    jac[:, 0] = w
    for d in range(dims):
        jac[:, 1 + d] = w * c[:, d] / cs2
    jac[:, 1 + dims:] = w[:, None] * basis.h2_contract / (2 * cs4)

    # rho * T_abg = (P_ab j_g + P_ag j_b + P_bg j_a)/rho - 2 j_a j_b j_g / rho^2
    for li, label in enumerate(basis.h3_labels):
        a, b, g = (_AXIS[ch] for ch in label)
        pairs = [(tuple(sorted((a, b))), g), (tuple(sorted((a, g))), b),
                 (tuple(sorted((b, g))), a)]
        lin = sum(stress[vidx[p]] * mom[other] for p, other in pairs)
        cubic = mom[a] * mom[b] * mom[g]
        coeff = w * basis.h3[:, li] / (2 * cs6)

        jac[:, 0] += coeff * (-lin / rho ** 2 + 4 * cubic / rho ** 3)
        for d in range(dims):
            dlin = sum(stress[vidx[p]] * (1.0 if other == d else 0.0)
                       for p, other in pairs)
            trip = [(a, (b, g)), (b, (a, g)), (g, (a, b))]
            dcub = sum(mom[i] * mom[jx] for idx, (i, jx) in trip if idx == d)
            jac[:, 1 + d] += coeff * (dlin / rho - 2 * dcub / rho ** 2)
        for p, other in pairs:
            jac[:, 1 + dims + vidx[p]] += coeff * mom[other] / rho
    return jac


def _require_d2q9(lattice: LatticeModel):
    if lattice.q != 9 or lattice.dims != 2:
        raise ValueError("the stability analyzer supports D2Q9 only")


def collision_jacobian(model: str, point: LinearizationPoint,
                       lattice: LatticeModel) -> np.ndarray:
    """The k-independent factor J of G(k) = D(k) J.

    The ``"moment"`` model is the exact linearization of the composite
    solver map (central-moment collision, moment extraction, Hermite
    reconstruction): J = H_m E J_nocm with H_m the reconstruction
    Jacobian in its moments and E the moment extraction matrix.  The
    factored low-rank approximation Lambda + Q_u B (J_nocm - Lambda)
    built from :func:`hermite_a2_matrix` and friends coincides with it
    at zero background velocity and is available as
    ``"moment-factored"`` for comparison; it drifts from the composite
    operator at nonzero background velocity.
    """
    _require_d2q9(lattice)
    lam = jacobian_lambda(point, lattice)
    eye = np.eye(lattice.q)
    tau = point.tau
    if model == "bgk":
        return eye - (eye - lam) / tau
    if model == "rm-mrt":
        from .collision import rm_relaxation_rates
        rates = rm_relaxation_rates(point.nu)
        k = np.linalg.inv(RM_MATRIX) @ (rates[:, None] * RM_MATRIX)
        return eye - k @ (eye - lam)
    if model in ("nocm-mrt", "moment", "moment-factored"):
        rates = nocm_relaxation_rates(point.nu)
        m = nocm_matrix(point.u_bar, lattice)
        k = np.linalg.inv(m) @ (rates[:, None] * m)
        nocm_j = eye - k @ (eye - lam)
        if model == "nocm-mrt":
            return nocm_j
        if model == "moment-factored":
            q_u = hermite_a2_matrix(lattice) + hermite_a3_matrix(lattice) @ \
                recursion_matrix(point.u_bar)
            b = stress_projection_matrix(lattice)
            return lam + q_u @ b @ (nocm_j - lam)
        ub = np.asarray(point.u_bar)
        mom_bar = point.rho_bar * ub
        from .moments import _outer_voigt
        stress_bar = _outer_voigt(mom_bar) / point.rho_bar  # equilibrium stress
        h_m = reconstruction_moment_jacobian(point.rho_bar, mom_bar,
                                             stress_bar, lattice)
        return h_m @ moment_extraction_matrix(lattice) @ nocm_j
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


def advection_diagonal(k: WaveVector, lattice: LatticeModel) -> np.ndarray:
    """Streaming phase factors exp(-i k . c_i)."""
    c = lattice.velocities.astype(np.float64)
    phase = c[:, 0] * k.kx + c[:, 1] * k.ky
    return np.exp(-1j * phase)


def amplification(model: str, k: WaveVector, point: LinearizationPoint,
                  lattice: LatticeModel) -> np.ndarray:
    """Complex amplification matrix G(k) = diag(exp(-i k.c)) J."""
    j = collision_jacobian(model, point, lattice)
    return advection_diagonal(k, lattice)[:, None] * j


def spectral_sample(model: str, k: WaveVector, point: LinearizationPoint,
                    lattice: LatticeModel,
                    j: np.ndarray | None = None) -> SpectralSample:
    if j is None:
        j = collision_jacobian(model, point, lattice)
    g = advection_diagonal(k, lattice)[:, None] * j
    lam = np.linalg.eigvals(g)
    mods = np.abs(lam)
    max_mod = float(mods.max())
    with np.errstate(divide="ignore"):
        max_im = float(np.log(max_mod)) if max_mod > 0 else -np.inf
    return SpectralSample(k=k, eigenvalues=lam, max_modulus=max_mod,
                          max_im_omega=max_im,
                          re_omega=-np.angle(lam))


def dissipation_map(model: str, point: LinearizationPoint,
                    lattice: LatticeModel, n: int = 128,
                    k_max: float = np.pi, threads: int = 1):
    """Maximum growth rate max_modes Im(w) over a [0, k_max]^2 grid.

    Returns (kx, ky, field, contour) where ``field[i, j]`` belongs to
    wavevector (kx[i], ky[j]) and ``contour`` holds the interpolated
    points of the neutral-stability level set Im(w) = 0.
    """
    kx = np.linspace(0.0, k_max, n)
    ky = np.linspace(0.0, k_max, n)
    j = collision_jacobian(model, point, lattice)
    field = np.empty((n, n))

    def fill_row(i):
        for jj in range(n):
            g = advection_diagonal(WaveVector(kx[i], ky[jj]), lattice)[:, None] * j
            mods = np.abs(np.linalg.eigvals(g))
            m = mods.max()
            field[i, jj] = np.log(m) if m > 0 else -np.inf

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill_row, range(n)))
    else:
        for i in range(n):
            fill_row(i)
    return kx, ky, field, zero_contour(kx, ky, field)


def zero_contour(kx: np.ndarray, ky: np.ndarray, field: np.ndarray) -> np.ndarray:
    """Linear-interpolated points where the field crosses zero.

    Scans grid edges for sign changes; returns an (n, 2) array of
    (kx, ky) points, empty when the field does not change sign.
    """
    pts = []
    sgn = np.signbit(field)
    nx, ny = field.shape
    for i in range(nx):
        for j in range(ny - 1):
            a, b = field[i, j], field[i, j + 1]
            if sgn[i, j] != sgn[i, j + 1] and np.isfinite(a) and np.isfinite(b):
                t = a / (a - b)
                pts.append((kx[i], ky[j] + t * (ky[j + 1] - ky[j])))
    for j in range(ny):
        for i in range(nx - 1):
            a, b = field[i, j], field[i + 1, j]
            if sgn[i, j] != sgn[i + 1, j] and np.isfinite(a) and np.isfinite(b):
                t = a / (a - b)
                pts.append((kx[i] + t * (kx[i + 1] - kx[i]), ky[j]))
    return np.array(pts).reshape(-1, 2)


def theoretical_modes(k, u, nu: float, mu_v: float = 0.0, dims: int = 2):
    """Hydrodynamic mode frequencies of the linearized macroscopic equations.

    Returns (shear, acoustic+, acoustic-) as complex frequencies for
    wavevector ``k`` on background velocity ``u``.  ``mu_v`` is the bulk
    viscosity entering the acoustic damping; it is left as a parameter
    (default 0) since only the shear viscosity is fixed by the collision
    rate.
    """
    k = np.asarray(k, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    kn = float(np.linalg.norm(k))
    doppler = float(k @ u)  # |k||u|cos(phi)
    cs = np.sqrt(CS2)
    shear = doppler - 1j * kn ** 2 * nu
    damp = kn ** 2 * ((dims - 1) / dims * nu + 0.5 * mu_v)
    plus = doppler + cs * kn - 1j * damp
    minus = doppler - cs * kn - 1j * damp
    return shear, plus, minus


@dataclass
class DispersionResult:
    kx: np.ndarray
    omega: np.ndarray        # (n_branches, n_k) complex, unwrapped Re
    branch_names: tuple[str, ...]
    ambiguous: np.ndarray    # bool per sample, proximity fallback used


def dispersion_curves(model: str, point: LinearizationPoint,
                      lattice: LatticeModel, n: int = 512,
                      k_max: float = np.pi) -> DispersionResult:
    """Hydrodynamic branches Re(w)(kx) along ky = 0.

    The three branches (shear, acoustic+, acoustic-) are seeded at the
    smallest wavenumber from the theoretical mode predictions and then
    tracked by eigenvector continuity; when the eigenvector overlap is
    ambiguous (crossings), tracking falls back to eigenvalue proximity
    and the sample is flagged.
    """
    _require_d2q9(lattice)
    kx = np.linspace(k_max / n, k_max, n)
    j = collision_jacobian(model, point, lattice)
    names = ("shear", "acoustic+", "acoustic-")
    nb = len(names)
    omega = np.empty((nb, n), dtype=np.complex128)
    ambiguous = np.zeros(n, dtype=bool)

    prev_vecs = None
    prev_lam = None
    prev_re = None
    for s, kxv in enumerate(kx):
        g = advection_diagonal(WaveVector(kxv, 0.0), lattice)[:, None] * j
        lam, vecs = np.linalg.eig(g)
        if s == 0:
            theo = theoretical_modes((kxv, 0.0), point.u_bar, point.nu,
                                     dims=lattice.dims)
            targets = [np.exp(-1j * w) for w in theo]
            chosen = []
            for t in targets:
                order = np.argsort(np.abs(lam - t))
                pick = next(i for i in order if i not in chosen)
                chosen.append(pick)
        else:
            chosen = []
            for b in range(nb):
                overlaps = np.abs(prev_vecs[:, b].conj() @ vecs)
                order = np.argsort(-overlaps)
                pick = next(i for i in order if i not in chosen)
                if overlaps[pick] < 0.6:
                    ambiguous[s] = True
                    prox = np.argsort(np.abs(lam - prev_lam[b]))
                    pick = next(i for i in prox if i not in chosen)
                chosen.append(pick)
        sel = np.array(chosen)
        lam_sel = lam[sel]
        re = -np.angle(lam_sel)
        if prev_re is not None:
            re = re + 2 * np.pi * np.round((prev_re - re) / (2 * np.pi))
        with np.errstate(divide="ignore"):
            im = np.where(np.abs(lam_sel) > 0, np.log(np.abs(lam_sel)), -np.inf)
        omega[:, s] = re + 1j * im
        prev_vecs = vecs[:, sel]
        prev_lam = lam_sel
        prev_re = re
    return DispersionResult(kx=kx, omega=omega, branch_names=names,
                            ambiguous=ambiguous)
