"""Discrete velocity sets, weights, Hermite polynomial bases, and equilibria.

Supported stencils are D2Q9, D3Q19, and D3Q27.  Weights are constructed as
exact rationals so that the moment-matching identities (mass, second- and
fourth-order isotropy) can be verified without floating-point slack; the
solver-facing arrays are 64-bit floats derived from those rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

CS2 = 1.0 / 3.0  # lattice sound speed squared, identical for all stencils

_AXIS = {"x": 0, "y": 1, "z": 2}

# Symmetric-tensor component order used everywhere moments are stored.
VOIGT_2D = ("xx", "xy", "yy")
VOIGT_3D = ("xx", "xy", "xz", "yy", "yz", "zz")

# Third-order Hermite index sets used by the distribution reconstruction.
# 2D keeps the pure-cubic entries as well; they vanish identically on
# lattices whose velocity components lie in {-1, 0, 1} (cs2 = 1/3), so they
# contribute nothing numerically but complete the 2D third-order basis.
THIRD_ORDER_2D = ("xxx", "xxy", "xyy", "yyy")
THIRD_ORDER_3D = ("xxy", "xyy", "xxz", "xzz", "yzz", "yyz", "xyz")


def voigt_components(dims: int) -> tuple[str, ...]:
    return VOIGT_2D if dims == 2 else VOIGT_3D


@dataclass(frozen=True)
class HermiteBasis:
    """Per-direction Hermite tensor values for one lattice.

    ``h2`` holds H2_ab(c_i) for the Voigt components, ``h2_contract`` the
    same values with off-diagonal entries doubled (full tensor contraction
    against a symmetric argument stored in Voigt form).  ``h3`` holds the
    third-order values for ``h3_labels``.
    """

    h2: np.ndarray          # (q, n_voigt)
    h2_contract: np.ndarray  # (q, n_voigt), off-diagonals doubled
    h3: np.ndarray          # (q, n_third)
    h3_labels: tuple[str, ...]


@dataclass(frozen=True)
class LatticeModel:
    """A discrete velocity model plus derived constant tables.

    Instances are immutable and safe to share across threads.
    ``fourth_order_isotropic`` records whether the fourth-order moment
    identity holds exactly (checked with rational arithmetic at build
    time rather than asserted).  ``has_xyz_hermite`` records whether any
    velocity has all three components nonzero; without such directions
    the xyz third-order Hermite polynomial vanishes identically and the
    reconstruction must drop that term.
    """

    name: str
    dims: int
    q: int
    velocities: np.ndarray       # (q, dims) int
    weights: np.ndarray          # (q,) float
    weights_exact: tuple[Fraction, ...]
    cs2: float
    opposite: np.ndarray         # (q,) int, opposite[i] gives index of -c_i
    fourth_order_isotropic: bool
    has_xyz_hermite: bool
    hermite: HermiteBasis

    def __post_init__(self):
        self.velocities.setflags(write=False)
        self.weights.setflags(write=False)
        self.opposite.setflags(write=False)

    @property
    def n_voigt(self) -> int:
        return self.dims * (self.dims + 1) // 2

    @property
    def n_components(self) -> int:
        """Moment components per node: density, momentum, stress."""
        return 1 + self.dims + self.n_voigt


def _d2q9_velocities() -> list[tuple[int, ...]]:
    cx = (0, 1, 0, -1, 0, 1, -1, -1, 1)
    cy = (0, 0, 1, 0, -1, 1, 1, -1, -1)
    return list(zip(cx, cy))


def _d3_velocities(include_corners: bool) -> list[tuple[int, ...]]:
    # rest, then axis, face-diagonal, and (D3Q27) space-diagonal groups
    vels: list[tuple[int, ...]] = [(0, 0, 0)]
    for a in range(3):
        for s in (1, -1):
            v = [0, 0, 0]
            v[a] = s
            vels.append(tuple(v))
    for a, b in ((0, 1), (0, 2), (1, 2)):
        for sa, sb in ((1, 1), (-1, -1), (1, -1), (-1, 1)):
            v = [0, 0, 0]
            v[a], v[b] = sa, sb
            vels.append(tuple(v))
    if include_corners:
        for sx, sy, sz in ((1, 1, 1), (-1, -1, -1), (1, 1, -1), (-1, -1, 1),
                           (1, -1, 1), (-1, 1, -1), (1, -1, -1), (-1, 1, 1)):
            vels.append((sx, sy, sz))
    return vels


_WEIGHT_BY_SPEED2 = {
    "D2Q9": {0: Fraction(4, 9), 1: Fraction(1, 9), 2: Fraction(1, 36)},
    "D3Q19": {0: Fraction(1, 3), 1: Fraction(1, 18), 2: Fraction(1, 36)},
    "D3Q27": {0: Fraction(8, 27), 1: Fraction(2, 27), 2: Fraction(1, 54),
              3: Fraction(1, 216)},
}


def _check_fourth_order_isotropy(vels, weights) -> bool:
    """Exact test of sum_i w c_a c_b c_c c_d == cs2^2 (dd+dd+dd)."""
    cs2 = Fraction(1, 3)
    dims = len(vels[0])
    for a, b, c, d in product(range(dims), repeat=4):
        total = sum(w * v[a] * v[b] * v[c] * v[d] for v, w in zip(vels, weights))
        delta = lambda i, j: 1 if i == j else 0
        expect = cs2 * cs2 * (delta(a, b) * delta(c, d)
                              + delta(a, c) * delta(b, d)
                              + delta(a, d) * delta(b, c))
        if total != expect:
            return False
    return True


def hermite2(c: np.ndarray, a: int, b: int) -> np.ndarray:
    """H2_ab(c) = c_a c_b - cs2 delta_ab, elementwise over directions."""
    d = 1.0 if a == b else 0.0
    return c[:, a] * c[:, b] - CS2 * d


def hermite3(c: np.ndarray, label: str) -> np.ndarray:
    """H3 for a three-letter index label such as ``"xxy"`` or ``"xyz"``."""
    a, b, g = (_AXIS[ch] for ch in label)
    ca, cb, cg = c[:, a], c[:, b], c[:, g]
    d = lambda i, j: 1.0 if i == j else 0.0
    return ca * cb * cg - CS2 * (ca * d(b, g) + cb * d(a, g) + cg * d(a, b))


def _build_hermite(c: np.ndarray, dims: int, has_xyz: bool) -> HermiteBasis:
    voigt = voigt_components(dims)
    h2 = np.stack([hermite2(c, _AXIS[l[0]], _AXIS[l[1]]) for l in voigt], axis=1)
    h2c = h2.copy()
    for j, l in enumerate(voigt):
        if l[0] != l[1]:
            h2c[:, j] *= 2.0
    if dims == 2:
        labels = THIRD_ORDER_2D
    else:
        labels = THIRD_ORDER_3D if has_xyz else tuple(
            l for l in THIRD_ORDER_3D if l != "xyz")
    h3 = np.stack([hermite3(c, l) for l in labels], axis=1)
    return HermiteBasis(h2=h2, h2_contract=h2c, h3=h3, h3_labels=labels)


def make_lattice(kind: str) -> LatticeModel:
    """Construct one of the supported velocity models.

    ``kind`` is one of ``"D2Q9"``, ``"D3Q19"``, ``"D3Q27"``.  The D2Q9
    ordering and weights follow the usual nine-direction convention; the
    3D stencils order directions as rest, axis, face-diagonal, then
    space-diagonal so that cross-run comparisons are deterministic.
    """
    kind = kind.upper()
    if kind == "D2Q9":
        vels = _d2q9_velocities()
        dims = 2
    elif kind == "D3Q19":
        vels = _d3_velocities(include_corners=False)
        dims = 3
    elif kind == "D3Q27":
        vels = _d3_velocities(include_corners=True)
        dims = 3
    else:
        raise ValueError(f"unknown lattice kind: {kind!r}")

    table = _WEIGHT_BY_SPEED2[kind]
    wexact = tuple(table[sum(x * x for x in v)] for v in vels)
    c = np.array(vels, dtype=np.int64)
    w = np.array([float(x) for x in wexact])

    opp = np.empty(len(vels), dtype=np.int64)
    index = {v: i for i, v in enumerate(vels)}
    for i, v in enumerate(vels):
        opp[i] = index[tuple(-x for x in v)]

    has_xyz = dims == 3 and bool(np.any(np.all(c != 0, axis=1)))
    iso4 = _check_fourth_order_isotropy(vels, wexact)
    cf = c.astype(np.float64)
    return LatticeModel(
        name=kind, dims=dims, q=len(vels), velocities=c, weights=w,
        weights_exact=wexact, cs2=CS2, opposite=opp,
        fourth_order_isotropic=iso4, has_xyz_hermite=has_xyz,
        hermite=_build_hermite(cf, dims, has_xyz),
    )


def _equilibrium_terms(u: np.ndarray, lattice: LatticeModel):
    c = lattice.velocities.astype(np.float64)
    A = c @ u                        # c_i . u
    U = float(u @ u)                 # |u|^2
    P = c @ (u ** 3)                 # componentwise cubic projection
    C2 = np.sum(c * c, axis=1)       # |c_i|^2
    return A, U, P, C2


def equilibrium(rho: float, u, lattice: LatticeModel, order: int = 4) -> np.ndarray:
    """Discrete equilibrium distribution at a single macroscopic state.

    ``order`` selects the second-order truncation or the full fourth-order
    polynomial.  The fourth-order form conserves mass and momentum only up
    to O(|u|^3) truncation residuals; the second-order form is exact in
    both on these stencils.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (lattice.dims,):
        raise ValueError(f"velocity must have {lattice.dims} components")
    if float(np.linalg.norm(u)) >= 1.0:
        raise ValueError("macroscopic speed must stay below the lattice speed")
    if order not in (2, 4):
        raise ValueError("equilibrium order must be 2 or 4")

    cs2 = CS2
    cs4, cs6, cs8 = cs2 ** 2, cs2 ** 3, cs2 ** 4
    A, U, P, C2 = _equilibrium_terms(u, lattice)
    bracket = 1.0 + A / cs2 + A ** 2 / (2 * cs4) - U / (2 * cs2)
    if order == 4:
        bracket = bracket + (
            -P / (2 * cs4)
            + A ** 3 / (6 * cs6)
            + U ** 2 / (8 * cs4)
            - C2 * U ** 2 / (4 * cs6)
            + A ** 4 / (24 * cs8)
        )
    return rho * lattice.weights * bracket


def equilibrium_jacobians(rho: float, u, lattice: LatticeModel):
    """Analytic derivatives of the fourth-order equilibrium.

    Returns ``(d_rho, d_u)`` where ``d_rho`` has shape (q,) and ``d_u``
    has shape (q, dims) with column a holding df_i/du_a.
    """
    u = np.asarray(u, dtype=np.float64)
    if float(np.linalg.norm(u)) >= 1.0:
        raise ValueError("macroscopic speed must stay below the lattice speed")
    cs2 = CS2
    cs4, cs6, cs8 = cs2 ** 2, cs2 ** 3, cs2 ** 4
    c = lattice.velocities.astype(np.float64)
    w = lattice.weights
    A, U, P, C2 = _equilibrium_terms(u, lattice)

    d_rho = equilibrium(1.0, u, lattice, order=4)
    d_u = np.empty((lattice.q, lattice.dims))
    for a in range(lattice.dims):
        ca = c[:, a]
        ua = u[a]
        d_u[:, a] = rho * w * (
            ca / cs2
            + A * ca / cs4
            - ua / cs2
            - 3.0 * ca * ua ** 2 / (2 * cs4)
            + A ** 2 * ca / (2 * cs6)
            + U * ua / (2 * cs4)
            - C2 * U * ua / cs6
            + A ** 3 * ca / (6 * cs8)
        )
    return d_rho, d_u
