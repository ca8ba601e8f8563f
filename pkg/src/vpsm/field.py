"""Electrostatic field solve and the face velocities it induces.

The potential lives at cell corners. Face velocities are built from plain
differences of the corner potential; with that choice the net face fluxes
of every cell cancel algebraically (the discrete divergence vanishes to
rounding), which is what lets the finite-volume transport preserve
constants. A spline-differentiated velocity field on the same potential
does not have this property and is kept only as a contrast.

Geometry conventions, for corner array phi[s, jc, kc]:
  s  = 0..n_r   radial nodes (wall rows s=0 and s=n_r are Dirichlet),
  jc = 0..n_t-1 angular corners (periodic),
  kc = 0..n_z-1 axial corner planes (periodic).
a_r is the linear radial velocity at radial faces (s, j-center); a_theta
is the angular velocity at angular faces (i-center, jc). The angular face
flux therefore carries the metric factor r_i*dr.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from .errors import FieldSolveError
from .mesh import PolarGrid2D


def velocity_from_potential(polar: PolarGrid2D, phi: np.ndarray, b_z: float = 1.0):
    """Divergence-free face velocities from a corner potential.

    phi has shape (n_r+1, n_theta, ...); trailing axes are carried along.
    Returns (a_r, a_theta) with shapes (n_r+1, n_theta, ...) and
    (n_r, n_theta, ...).
    """
    phi = np.asarray(phi, dtype=float)
    rho = polar.r.nodes.reshape((-1,) + (1,) * (phi.ndim - 1))
    a_r = -(np.roll(phi, -1, axis=1) - phi) / (rho * b_z * polar.theta.dx)
    r_c = polar.r.centers.reshape((-1,) + (1,) * (phi.ndim - 1))
    a_t = (phi[1:] - phi[:-1]) / (r_c * b_z * polar.r.dx)
    return a_r, a_t


def velocity_from_potential_spline(polar: PolarGrid2D, phi: np.ndarray,
                                   b_z: float = 1.0):
    """Same stencil locations, but velocities from spline derivatives.

    Accurate pointwise yet not discretely divergence free; exists to
    demonstrate why the difference form above is required.
    """
    from .spline import Spline1D

    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 2:
        raise ValueError("spline velocity contrast expects one corner plane")
    th = Spline1D.periodic_fit(phi, polar.theta.x_min, polar.theta.dx)
    dphi_dth = th(polar.theta.centers, deriv=1)
    a_r = -dphi_dth / (polar.r.nodes[:, None] * b_z)
    rs = Spline1D.natural_fit(phi.T, polar.r.x_min, polar.r.dx)
    dphi_dr = rs(polar.r.centers, deriv=1).T
    a_t = dphi_dr / (polar.r.centers[:, None] * b_z)
    return a_r, a_t


def discrete_divergence(polar: PolarGrid2D, a_r: np.ndarray,
                        a_theta: np.ndarray) -> np.ndarray:
    """Per-cell divergence of face velocities, cell-centered result.

    Face fluxes: rho_s*dtheta*a_r radially, r_i*dr*a_theta angularly;
    their net, divided by the cell volume.
    """
    a_r = np.asarray(a_r, dtype=float)
    a_theta = np.asarray(a_theta, dtype=float)
    rho = polar.r.nodes.reshape((-1,) + (1,) * (a_r.ndim - 1))
    radial = (rho[1:] * a_r[1:] - rho[:-1] * a_r[:-1]) * polar.theta.dx
    r_c = polar.r.centers.reshape((-1,) + (1,) * (a_theta.ndim - 1))
    angular = r_c * polar.r.dx * (np.roll(a_theta, -1, axis=1) - a_theta)
    vol = polar.vol.reshape((-1,) + (1,) * (a_r.ndim - 1))
    return (radial + angular) / vol


def corner_average(cells: np.ndarray) -> np.ndarray:
    """Average cell-centered (n_r, n_t, n_z) data onto interior corners.

    Each interior corner takes the mean of its eight surrounding cells
    (theta and z wrap); the two radial wall rows are returned as zeros.
    """
    c = np.asarray(cells, dtype=float)
    t = 0.5 * (c + np.roll(c, 1, axis=1))
    tz = 0.5 * (t + np.roll(t, 1, axis=2))
    out = np.zeros((c.shape[0] + 1,) + c.shape[1:])
    out[1:-1] = 0.5 * (tz[1:] + tz[:-1])
    return out


class QuasiNeutralSolver:
    """Quasi-neutral potential solve on the annulus, one z stack at a time.

    The operator acting on phi at interior radial nodes is

        -(1/(n0 rho)) d/dr (r n0 dphi/dr)  +  lambda_m / rho^2 * phi
                                           +  phi / T_e      (adiabatic)

    per Fourier mode (m, n) over (theta, z), where lambda_m is the symbol
    of the periodic three-point second difference. The adiabatic electron
    term couples to phi minus its flux-surface average; that average is
    exactly the (0, 0) mode, so this single mode drops the 1/T_e term.
    Walls are Dirichlet (phi = 0) during the solve; afterwards the global
    corner mean is subtracted once, which pins the gauge and leaves every
    difference-derived quantity (velocities, E_z, residuals) untouched.
    Right-hand side: (n_i - n_eq)/(e n0) averaged onto corners. The
    polarization coefficient carries 1/(e B omega0); with the default
    unit parameters the equation is the dimensionless form.
    """

    def __init__(self, polar: PolarGrid2D, n_z: int, n0_nodes: np.ndarray,
                 n0_centers: np.ndarray, te_nodes: np.ndarray,
                 b_z: float = 1.0, omega0: float = 1.0,
                 e_charge: float = 1.0) -> None:
        self.polar = polar
        self.n_z = int(n_z)
        self.b_z = float(b_z)
        self.e_charge = float(e_charge)
        n_r = polar.r.n
        self.n0_nodes = np.asarray(n0_nodes, dtype=float)
        n0_c = np.asarray(n0_centers, dtype=float)
        te = np.asarray(te_nodes, dtype=float)
        if self.n0_nodes.shape != (n_r + 1,) or n0_c.shape != (n_r,) \
                or te.shape != (n_r + 1,):
            raise FieldSolveError("profile arrays do not match the radial grid")
        if np.any(self.n0_nodes <= 0) or np.any(n0_c <= 0) or np.any(te <= 0):
            raise FieldSolveError("density and temperature must be positive")

        dr = polar.r.dx
        rho = polar.r.nodes
        pol = 1.0 / (self.e_charge * self.b_z * float(omega0))
        # flux coefficients r*n0 at cell centers; row s is scaled by
        # 1/(e n0(rho_s) rho_s) to keep the written operator
        c = polar.r.centers * n0_c * pol
        scale = 1.0 / (self.n0_nodes * rho)
        self._pol = pol
        self._lower = -c[:-1] * scale[1:-1] / dr**2        # couples to s-1
        self._upper = -c[1:] * scale[1:-1] / dr**2         # couples to s+1
        self._diag0 = (c[1:] + c[:-1]) * scale[1:-1] / dr**2
        n_t = polar.theta.n
        # full theta spectrum (rfft2 halves only the trailing z axis);
        # the cosine handles the negative frequencies by periodicity
        m = np.arange(n_t)
        self._lam = pol * (2.0 - 2.0 * np.cos(2.0 * np.pi * m / n_t)) \
            / polar.theta.dx**2
        self._rho_int = rho[1:-1]
        self._beta = 1.0 / te[1:-1]

    def _solve_mode_block(self, lam: float, beta_on: bool,
                          rhs: np.ndarray) -> np.ndarray:
        """Solve the radial tridiagonal for one theta mode, all z columns."""
        diag = self._diag0 + lam / self._rho_int**2
        if beta_on:
            diag = diag + self._beta
        k = diag.size
        ab = np.zeros((3, k))
        ab[0, 1:] = self._upper[:-1]
        ab[1] = diag
        ab[2, :-1] = self._lower[1:]
        return solve_banded((1, 1), ab, rhs)

    def solve(self, delta_density_cells: np.ndarray) -> np.ndarray:
        """Potential at corners from cell-centered n_i - n_eq."""
        d = np.asarray(delta_density_cells, dtype=float)
        n_r, n_t = self.polar.r.n, self.polar.theta.n
        if d.shape != (n_r, n_t, self.n_z):
            raise FieldSolveError(
                f"expected density shape {(n_r, n_t, self.n_z)}, got {d.shape}")
        rho_c = corner_average(d)[1:-1] \
            / (self.e_charge * self.n0_nodes[1:-1, None, None])
        rhs = np.fft.rfft2(rho_c, axes=(1, 2))
        sol = np.empty_like(rhs)
        for mi, lam in enumerate(self._lam):
            block = self._solve_mode_block(lam, True, rhs[:, mi, :])
            if mi == 0:
                block[:, 0] = self._solve_mode_block(lam, False, rhs[:, 0, 0:1])[:, 0]
            sol[:, mi, :] = block
        phi = np.zeros((n_r + 1, n_t, self.n_z))
        phi[1:-1] = np.fft.irfft2(sol, s=(n_t, self.n_z), axes=(1, 2))
        if not np.all(np.isfinite(phi)):
            raise FieldSolveError("potential solve produced non-finite values")
        # gauge: constant shift so the corner mean vanishes; the operator
        # and every downstream difference are invariant under it
        phi -= phi.mean()
        return phi


def ez_at_centers(polar: PolarGrid2D, phi: np.ndarray, dz: float) -> np.ndarray:
    """Parallel electric field -d(phi)/dz at cell centers.

    The potential is first averaged over the four (r, theta) corners of
    each cell within a corner plane; the difference of the two planes
    bracketing a z center is then exactly centered there.
    """
    phi = np.asarray(phi, dtype=float)
    pt = 0.5 * (phi + np.roll(phi, -1, axis=1))
    plane = 0.5 * (pt[1:] + pt[:-1])
    return -(np.roll(plane, -1, axis=2) - plane) / dz


def drift_velocities_at_z_centers(polar: PolarGrid2D, phi: np.ndarray,
                                  b_z: float = 1.0):
    """Perpendicular face velocities averaged onto z cell centers.

    Each corner plane gives an exactly divergence-free pair; averaging
    two planes keeps that property by linearity.
    """
    a_r, a_t = velocity_from_potential(polar, phi, b_z)
    a_r = 0.5 * (a_r + np.roll(a_r, -1, axis=2))
    a_t = 0.5 * (a_t + np.roll(a_t, -1, axis=2))
    return a_r, a_t
