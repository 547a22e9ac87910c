"""Kirchhoff-plate mechanics: curvatures, moments, energies, and load ratios.

Every operation is a pure function of jet slots and plate constants and is
written generically, so the same formulas serve plain numpy evaluation and
the traced training path. Sign conventions: curvatures are negative second
derivatives (twist carries the factor 2); in-plane reference forces are
stored as compression magnitudes so the buckling ratio comes out positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Jet2, value_of
from .geometry import mc_integrate


@dataclass
class PlateSpec:
    """Material, geometry, and load constants of one plate problem."""

    E: float
    nu: float
    h: float
    D0: float
    rho: float = 1.0
    foundation_k: float = 0.0
    load: object = None                     # p(x, y) callable or None
    inplane: tuple = (0.0, 0.0, 0.0)        # compressive (Nx, Ny, Nxy)

    def __post_init__(self):
        if not 0.0 <= self.nu < 0.5:
            raise ValueError(f"Poisson ratio {self.nu} outside [0, 0.5)")
        if self.h <= 0 or self.D0 <= 0:
            raise ValueError("thickness and bending rigidity must be positive")
        if self.foundation_k < 0:
            raise ValueError("foundation modulus must be nonnegative")
        derived = self.E * self.h ** 3 / (12.0 * (1.0 - self.nu ** 2))
        if abs(derived - self.D0) > 1e-12 * abs(self.D0):
            raise ValueError(
                f"inconsistent rigidity: E,nu,h give {derived!r}, stored D0 is {self.D0!r}")

    @staticmethod
    def from_elastic(E, nu, h, **kw):
        D0 = E * h ** 3 / (12.0 * (1.0 - nu ** 2))
        return PlateSpec(E=E, nu=nu, h=h, D0=D0, **kw)

    @staticmethod
    def nondimensional(nu=0.3, D0=1.0, h=1.0, rho=1.0, **kw):
        """Unit-rigidity plate: E is back-computed from D0, nu, h."""
        E = 12.0 * (1.0 - nu ** 2) * D0 / h ** 3
        return PlateSpec(E=E, nu=nu, h=h, D0=D0, rho=rho, **kw)

    @property
    def rho_h(self):
        return self.rho * self.h


@dataclass
class Curvatures:
    """Generalized strains (k_x, k_y, k_xy), units 1/length."""

    kx: object
    ky: object
    kxy: object


def curvatures(w: Jet2) -> Curvatures:
    return Curvatures(kx=-w.dxx, ky=-w.dyy, kxy=-2.0 * w.dxy)


def moments(c: Curvatures, spec: PlateSpec):
    """Bending and twisting moments (M_x, M_y, M_xy) = D k."""
    D0, nu = spec.D0, spec.nu
    Mx = D0 * (c.kx + nu * c.ky)
    My = D0 * (c.ky + nu * c.kx)
    Mxy = D0 * (1.0 - nu) / 2.0 * c.kxy
    return Mx, My, Mxy

def bending_energy_density(w: Jet2, spec: PlateSpec):
    """Strain-energy density (1/2) k^T D k expressed in deflection derivatives.

    Equals (D0/2)[(w_xx + w_yy)^2 + 2(1-nu)(w_xy^2 - w_xx w_yy)], a positive
    semidefinite quadratic form for nu in [0, 0.5).
    """
    lap = w.dxx + w.dyy
    gauss = w.dxy * w.dxy - w.dxx * w.dyy
    return (spec.D0 / 2.0) * (lap * lap + 2.0 * (1.0 - spec.nu) * gauss)


def external_work_density(w_value, p):
    """Interior potential density of a transverse load: -p w."""
    return -(p * w_value)


def edge_work_density(w_value, q):
    """Line density of an edge load on a free segment: -q w."""
    return -(q * w_value)


def edge_moment_work_density(normal_rot, Mn):
    """Line density of a prescribed edge moment: +Mn * dw/dn."""
    return Mn * normal_rot


def winkler_energy_density(w_value, k):
    """Elastic-foundation energy density k w^2 / 2."""
    if k < 0:
        raise ValueError("foundation modulus must be nonnegative")
    return 0.5 * k * (w_value * w_value)


def normal_rotation(w: Jet2, normals):
    """Slope along the outward normal, n_x w_x + n_y w_y."""
    normals = np.atleast_2d(np.asarray(normals, dtype=float))
    nrm = np.hypot(normals[:, 0], normals[:, 1])
    if not np.allclose(nrm, 1.0, atol=1e-9):
        raise ValueError("normals must be unit length")
    nx, ny = normals[:, 0], normals[:, 1]
    if np.ndim(value_of(w.dx)) == 0:
        nx, ny = float(nx[0]), float(ny[0])
    return nx * w.dx + ny * w.dy


def rayleigh_quotient(jets: Jet2, spec: PlateSpec, area):
    """omega^2 = 2 U_max / integral(rho h W^2), both by Monte Carlo."""
    U = mc_integrate(bending_energy_density(jets, spec), area)
    denom = mc_integrate(spec.rho_h * (jets.v * jets.v), area)
    if value_of(denom) <= 0.0:
        raise ValueError("degenerate mode: nonpositive kinetic-energy integral")
    return 2.0 * U / denom


def inplane_work_density(jets: Jet2, spec: PlateSpec):
    """(1/2)[Nx w_x^2 + Ny w_y^2 + 2 Nxy w_x w_y] with compressive N."""
    Nx, Ny, Nxy = spec.inplane
    return 0.5 * (Nx * (jets.dx * jets.dx) + Ny * (jets.dy * jets.dy)
                  + 2.0 * Nxy * (jets.dx * jets.dy))


def buckling_ratio(jets: Jet2, spec: PlateSpec, area):
    """Load factor = bending energy / in-plane compression work."""
    if not any(abs(N) > 0.0 for N in spec.inplane):
        raise ValueError("buckling requires nonzero in-plane reference forces")
    U = mc_integrate(bending_energy_density(jets, spec), area)
    W = mc_integrate(inplane_work_density(jets, spec), area)
    wv = value_of(W)
    if abs(wv) < 1e-300 or not np.isfinite(wv):
        raise ValueError("vanishing in-plane work denominator")
    return U / W


def shear_postprocess(Mx, My, Mxy, dx, dy):
    """Transverse shear (Q_x, Q_y) by central differences of moment grids.

    Inputs are (nx, ny) arrays on a uniform grid with spacings dx, dy; axis
    0 runs along x. This is a postprocessing utility only and never feeds a
    loss.
    """
    Mx, My, Mxy = (np.asarray(M, dtype=float) for M in (Mx, My, Mxy))
    if min(Mx.shape) < 3:
        raise ValueError("shear postprocessing needs at least 3 grid points per axis")
    dMx_dx = np.gradient(Mx, dx, axis=0)
    dMxy_dy = np.gradient(Mxy, dy, axis=1)
    dMxy_dx = np.gradient(Mxy, dx, axis=0)
    dMy_dy = np.gradient(My, dy, axis=1)
    return dMx_dx + dMxy_dy, dMxy_dx + dMy_dy
