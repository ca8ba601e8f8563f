"""Unsplit finite-volume transport in one (r, theta) plane.

The update is the flux balance

    Vol_ij * (new_ij - old_ij) = -dt * (net of signed face mass fluxes)

with the face mass flux written as (face metric) * (line flux): the 1D
spline flux of the plain averages along the sweep direction, multiplied
by rho_s*dtheta on radial faces and r_i*dr on angular faces. Freezing
the metric at the face is what makes a constant state exactly invariant
under divergence-free face velocities: the flux of a constant c is
c * a_face per unit metric, so the net flux collapses to c * dt times
the swept-volume closure, which telescopes to rounding for velocities
built from a corner potential. A primitive weighted by the cell metric
would instead leak at second order in dt.

Radial wall feet are clamped to the domain, so an inflow wall face
carries no flux. Exact constant preservation therefore additionally
needs zero wall velocity, i.e. a potential whose wall rows do not vary
in theta; the Dirichlet field solve and any rigid rotation satisfy this
by construction, and it is the physical condition for impermeable
walls.

Feet are per-face and explicit, x* = x_face - dt * a_face, which caps
the usable time step at one cell per direction (the 1D kernels raise
CflError beyond that). a_theta is an angular rate, so its CFL compares
against dtheta.

The split variant applies the radial and angular balances sequentially
but computes both flux sets from the same starting plane; it therefore
differs from the unsplit form only by floating-point summation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .advect1d import LimiterConfig, psm_face_fluxes, sls_face_fluxes
from .mesh import PolarGrid2D


__all__ = [
    "PlaneState",
    "SweptVolumes",
    "swept_volumes",
    "swept_volume_residual",
    "fv_face_fluxes",
    "fv_update_unsplit",
    "fv_update_split",
]


@dataclass(frozen=True)
class PlaneState:
    """Cell averages on one polar plane, with their grid."""

    polar: PolarGrid2D
    averages: np.ndarray

    def __post_init__(self) -> None:
        f = np.asarray(self.averages, dtype=float)
        shape = (self.polar.r.n, self.polar.theta.n)
        if f.shape != shape:
            raise ValueError(f"averages shape {f.shape}, grid wants {shape}")
        if not np.all(np.isfinite(f)):
            raise ValueError("averages contain non-finite values")
        object.__setattr__(self, "averages", f)

    @property
    def mass(self) -> float:
        return float(np.sum(self.averages * self.polar.vol[:, None]))


@dataclass(frozen=True)
class SweptVolumes:
    """Per-face volumes swept during dt, and the feet that define them.

    dvol_r[s, j] belongs to the radial face at rho_s in column j;
    dvol_theta[i, j] to the angular face at theta_j in row i (the lower
    face of cell j, wrapping at the seam).
    """

    polar: PolarGrid2D
    dvol_r: np.ndarray
    dvol_theta: np.ndarray
    r_feet: np.ndarray
    theta_feet: np.ndarray

    def closure_residual(self) -> np.ndarray:
        """Net swept volume per cell; zero iff cell volumes are static."""
        radial = self.dvol_r[1:] - self.dvol_r[:-1]
        angular = np.roll(self.dvol_theta, -1, axis=1) - self.dvol_theta
        return radial + angular


def swept_volumes(polar: PolarGrid2D, a_r: np.ndarray, a_theta: np.ndarray,
                  dt: float) -> SweptVolumes:
    """Explicit-feet swept volumes for the given face velocities."""
    a_r = np.asarray(a_r, dtype=float)
    a_theta = np.asarray(a_theta, dtype=float)
    r_feet = polar.r.nodes[:, None] - dt * a_r
    theta_feet = polar.theta.nodes[:-1][None, :] - dt * a_theta
    dvol_r = polar.r.nodes[:, None] * polar.theta.dx * (dt * a_r)
    dvol_theta = polar.r.centers[:, None] * polar.r.dx * (dt * a_theta)
    return SweptVolumes(polar, dvol_r, dvol_theta, r_feet, theta_feet)


def swept_volume_residual(polar: PolarGrid2D, a_r: np.ndarray,
                          a_theta: np.ndarray, dt: float) -> np.ndarray:
    """Volume-closure residual per cell, dt * Vol * (discrete divergence)."""
    return swept_volumes(polar, a_r, a_theta, dt).closure_residual()


def _line_fluxes(averages, axis, face_velocity, dt, limiter):
    if limiter is None:
        return psm_face_fluxes(averages, axis, face_velocity, dt)
    return sls_face_fluxes(averages, axis, face_velocity, dt, limiter)


def fv_face_fluxes(plane: PlaneState, a_r: np.ndarray, a_theta: np.ndarray,
                   dt: float, limiter: LimiterConfig | None = None):
    """Line fluxes on all faces of the plane, from one snapshot.

    Returns (phi_r, phi_theta) of shapes (n_r+1, n_theta) and
    (n_r, n_theta+1); the closing angular face repeats the first one
    bitwise. These are fluxes per unit face metric; multiply by
    rho_s*dtheta or r_i*dr to get mass per unit time.
    """
    f = plane.averages
    polar = plane.polar
    phi_r = _line_fluxes(f.T, polar.r, np.asarray(a_r, float).T, dt, limiter).T
    a_t = np.asarray(a_theta, dtype=float)
    a_t_closed = np.concatenate([a_t, a_t[:, :1]], axis=1)
    phi_t = _line_fluxes(f, polar.theta, a_t_closed, dt, limiter)
    return phi_r, phi_t


def _flux_divergence(polar: PolarGrid2D, phi_r, phi_t):
    rho = polar.r.nodes[:, None]
    radial = (rho[1:] * phi_r[1:] - rho[:-1] * phi_r[:-1]) * polar.theta.dx
    angular = polar.r.centers[:, None] * polar.r.dx * (phi_t[:, 1:] - phi_t[:, :-1])
    return (radial + angular) / polar.vol[:, None]


def fv_update_unsplit(plane: PlaneState, a_r: np.ndarray, a_theta: np.ndarray,
                      dt: float, limiter: LimiterConfig | None = None) -> PlaneState:
    """One conservative step with both directions in a single balance."""
    phi_r, phi_t = fv_face_fluxes(plane, a_r, a_theta, dt, limiter)
    new = plane.averages - dt * _flux_divergence(plane.polar, phi_r, phi_t)
    return PlaneState(plane.polar, new)


def fv_update_split(plane: PlaneState, a_r: np.ndarray, a_theta: np.ndarray,
                    dt: float, limiter: LimiterConfig | None = None) -> PlaneState:
    """Radial then angular balance, both flux sets from the start plane.

    Because neither flux set sees the intermediate state, the result
    matches fv_update_unsplit to summation rounding.
    """
    phi_r, phi_t = fv_face_fluxes(plane, a_r, a_theta, dt, limiter)
    polar = plane.polar
    rho = polar.r.nodes[:, None]
    radial = (rho[1:] * phi_r[1:] - rho[:-1] * phi_r[:-1]) * polar.theta.dx
    step1 = plane.averages - dt * (radial / polar.vol[:, None])
    angular = polar.r.centers[:, None] * polar.r.dx * (phi_t[:, 1:] - phi_t[:, :-1])
    step2 = step1 - dt * (angular / polar.vol[:, None])
    return PlaneState(polar, step2)
