"""One-dimensional transport kernels: spline remap, flux form, limiting.

Two conservative updates of cell averages are provided, algebraically
identical but organised differently:

* remap form (psm_advect): new_avg_i = (F(x*_{i+1/2}) - F(x*_{i-1/2}))/dx
  with F the primitive spline of the averages and x* the characteristic
  feet of the faces. Handles multi-cell displacements.

* flux form (flux_form_update): new_avg_i = avg_i - (dt/dx)(phi_{i+1/2}
  - phi_{i-1/2}) with the face flux phi_{i+1/2} = (F(x_{i+1/2}) -
  F(x*_{i+1/2}))/dt and per-face explicit feet x* = x - dt*a(x). Valid
  for displacements up to one cell, and the place where flux limiting
  lives.

The slope-limited blend (sls_flux) damps the spline flux toward the
first-order upwind flux only where the upwind slope ratio

    theta_{i+1/2} = (avg_i - avg_{i-1})/(avg_{i+1} - avg_i)   (a > 0)
    theta_{i+1/2} = (avg_{i+2} - avg_{i+1})/(avg_{i+1} - avg_i) (a < 0)

is small in magnitude: gamma = min(K*|theta|, 1) and

    phi = gamma * phi_spline + (1 - gamma) * phi_upwind .

Using |theta| keeps the high-order flux at smooth extrema (theta < 0 of
modest size still gives gamma = 1), unlike minmod-style limiters; a
vanishing denominator counts as theta = +inf, i.e. no limiting.

The non-conservative point-value scheme (bsl_advect) interpolates the
current values with a C2 spline and samples it at the feet of the cell
centers; it is the reference the conservative remap is measured
against, and coincides with it for uniform displacements.

All kernels operate on stacked lines: data (..., n), feet and fluxes
(..., n+1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CflError, FeetError
from .mesh import Axis, Bc
from .spline import PrimitiveSpline, interpolating_spline, primitive_spline

__all__ = [
    "LimiterConfig",
    "feet_implicit_midpoint",
    "bsl_advect",
    "psm_advect",
    "psm_flux",
    "psm_face_fluxes",
    "upwind_flux",
    "slope_ratio",
    "sls_flux",
    "sls_face_fluxes",
    "flux_form_update",
    "flux_form_advect",
]

_DEN_FLOOR = 1e-300


@dataclass(frozen=True)
class LimiterConfig:
    """Blend gain K of the slope-limited flux; larger K limits less."""

    k: float = 5.0

    def __post_init__(self) -> None:
        if not self.k > 0.0:
            raise ValueError(f"limiter gain must be positive, got {self.k}")


def feet_implicit_midpoint(nodes: np.ndarray, velocity, dt: float, axis: Axis,
                           *, tol: float = 1e-12, max_iter: int = 25) -> np.ndarray:
    """Characteristic feet x* = x - dt * a((x + x*)/2) by fixed point.

    velocity must be evaluable at arbitrary positions, including slightly
    outside the axis extent (midpoints of near-boundary trajectories land
    there); wrapping or clamping is the callable's own business. Converges
    when the update falls below tol*dx in magnitude; raises FeetError
    after max_iter sweeps.
    """
    x = np.asarray(nodes, dtype=float)
    feet = x - dt * np.asarray(velocity(x))
    bound = tol * axis.dx
    for _ in range(max_iter):
        new = x - dt * np.asarray(velocity(0.5 * (x + feet)))
        delta = np.max(np.abs(new - feet))
        feet = new
        if delta <= bound:
            return feet
    raise FeetError(
        f"implicit-midpoint feet stalled at |delta| = {delta:.3e} "
        f"(bound {bound:.3e}) after {max_iter} iterations")


def _check_monotone(feet: np.ndarray) -> None:
    gaps = np.diff(feet, axis=-1)
    if not np.all(gaps > 0.0):
        raise FeetError(
            f"feet are not strictly increasing (min gap {np.min(gaps):.3e}); "
            "the conservative remap would transfer mass between crossed cells")


def bsl_advect(values: np.ndarray, axis: Axis, feet: np.ndarray) -> np.ndarray:
    """Point-value semi-Lagrangian step: sample the value spline at feet.

    values live at cell centers; feet has the same shape. On Neumann
    axes queries are clamped to the data range, which together with the
    zero-slope ends realises constant extrapolation.
    """
    s = interpolating_spline(values, axis.centers[0], axis.dx, axis.bc)
    if axis.bc is Bc.NEUMANN:
        feet = np.clip(feet, axis.centers[0], axis.centers[-1])
    return s(feet)


def psm_advect(averages: np.ndarray, axis: Axis, feet: np.ndarray) -> np.ndarray:
    """Conservative remap of cell averages through face feet.

    feet has shape (..., n+1), strictly increasing along the last axis;
    on a periodic axis the last foot must close the period (first foot
    plus the axis length) so that the total mass telescopes exactly.
    """
    f = np.asarray(averages, dtype=float)
    feet = np.asarray(feet, dtype=float)
    if feet.shape[-1] != axis.n + 1:
        raise ValueError(f"expected {axis.n + 1} feet, got {feet.shape[-1]}")
    _check_monotone(feet)
    P = primitive_spline(f, axis)
    if axis.bc is Bc.NEUMANN:
        feet = np.clip(feet, axis.x_min, axis.x_max)
    vals = P(feet)
    return np.diff(vals, axis=-1) / axis.dx


def psm_flux(pspline: PrimitiveSpline, x_face, x_foot, dt: float) -> np.ndarray:
    """Spline face flux phi = (F(x_face) - F(x_foot)) / dt."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    return (pspline(x_face) - pspline(x_foot)) / dt


def psm_face_fluxes(averages: np.ndarray, axis: Axis, face_velocity: np.ndarray,
                    dt: float) -> np.ndarray:
    """Spline fluxes at all faces with explicit first-order feet.

    Feet are x* = x_face - dt * a_face; the flux-form CFL demands the
    displacement stay within one cell. Face values of the primitive are
    taken from its exact knots. On a periodic axis the closing face
    repeats the first flux bitwise so the update telescopes exactly.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    f = np.asarray(averages, dtype=float)
    a = np.asarray(face_velocity, dtype=float)
    disp = dt * a
    worst = np.max(np.abs(disp))
    if worst > axis.dx:
        raise CflError(
            f"face displacement {worst:.3e} exceeds one cell ({axis.dx:.3e}); "
            "the flux form needs dt*max|a| <= dx")
    P = primitive_spline(f, axis)
    feet = axis.nodes - disp
    if axis.bc is Bc.NEUMANN:
        feet = np.clip(feet, axis.x_min, axis.x_max)
    lead = np.broadcast_shapes(f.shape[:-1], feet.shape[:-1])
    phi = (np.broadcast_to(P.node_values, lead + (axis.n + 1,)) - P(feet)) / dt
    # a face its foot never left carries no flux, bitwise
    phi = np.where(np.broadcast_to(disp == 0.0, phi.shape), 0.0, phi)
    if axis.bc is Bc.PERIODIC:
        phi[..., -1] = phi[..., 0]
    return phi


def upwind_flux(f_lo, f_hi, a) -> np.ndarray:
    """First-order donor-cell flux through a face with neighbours f_lo, f_hi."""
    a = np.asarray(a, dtype=float)
    return a * np.where(a >= 0.0, f_lo, f_hi)


def slope_ratio(f_mm, f_lo, f_hi, f_pp, a) -> np.ndarray:
    """Upwind ratio of consecutive slopes at the face between f_lo and f_hi.

    A denominator that underflows to (effectively) zero yields +inf,
    which the blend maps to the unlimited flux.
    """
    den = np.asarray(f_hi, dtype=float) - np.asarray(f_lo, dtype=float)
    num = np.where(np.asarray(a, dtype=float) >= 0.0,
                   np.asarray(f_lo, dtype=float) - np.asarray(f_mm, dtype=float),
                   np.asarray(f_pp, dtype=float) - np.asarray(f_hi, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = num / den
    return np.where(np.abs(den) < _DEN_FLOOR, np.inf, theta)


def sls_flux(phi_spline, phi_upwind, theta, k: float = 5.0) -> np.ndarray:
    """Blend phi = gamma*phi_spline + (1-gamma)*phi_upwind, gamma = min(K|theta|, 1)."""
    gamma = np.minimum(k * np.abs(theta), 1.0)
    return gamma * np.asarray(phi_spline) + (1.0 - gamma) * np.asarray(phi_upwind)


def _padded(f: np.ndarray, bc: Bc) -> np.ndarray:
    """Append two ghost cells per side: wrapped or even-reflected."""
    if bc is Bc.PERIODIC:
        return np.concatenate([f[..., -2:], f, f[..., :2]], axis=-1)
    return np.concatenate([f[..., 1::-1], f, f[..., :-3:-1]], axis=-1)


def sls_face_fluxes(averages: np.ndarray, axis: Axis, face_velocity: np.ndarray,
                    dt: float, limiter: LimiterConfig) -> np.ndarray:
    """Slope-limited spline fluxes at all faces.

    Upwind fluxes and slope ratios read ghost cells (wrap or even
    reflection); on a Neumann axis the wall faces reuse the nearest
    interior slope ratio.
    """
    f = np.asarray(averages, dtype=float)
    a = np.asarray(face_velocity, dtype=float)
    phi_s = psm_face_fluxes(f, axis, a, dt)
    lead = np.broadcast_shapes(f.shape[:-1], a.shape[:-1])
    fx = np.broadcast_to(_padded(f, axis.bc), lead + (axis.n + 4,))
    # face k sits between padded cells k+1 and k+2
    f_mm, f_lo = fx[..., :-3], fx[..., 1:-2]
    f_hi, f_pp = fx[..., 2:-1], fx[..., 3:]
    ab = np.broadcast_to(a, lead + (axis.n + 1,))
    phi_u = upwind_flux(f_lo, f_hi, ab)
    theta = slope_ratio(f_mm, f_lo, f_hi, f_pp, ab)
    if axis.bc is Bc.NEUMANN:
        theta = theta.copy()
        theta[..., 0] = theta[..., 1]
        theta[..., -1] = theta[..., -2]
    phi = sls_flux(phi_s, phi_u, theta, limiter.k)
    if axis.bc is Bc.PERIODIC:
        phi[..., -1] = phi[..., 0]
    return phi


def flux_form_update(averages: np.ndarray, fluxes: np.ndarray, dt: float,
                     dx: float) -> np.ndarray:
    """Conservative update avg_i - (dt/dx) * (phi_{i+1/2} - phi_{i-1/2})."""
    return np.asarray(averages, float) - (dt / dx) * np.diff(fluxes, axis=-1)


def flux_form_advect(averages: np.ndarray, axis: Axis, face_velocity: np.ndarray,
                     dt: float, limiter: LimiterConfig | None = None) -> np.ndarray:
    """One flux-form step, spline fluxes, optionally slope-limited."""
    if limiter is None:
        phi = psm_face_fluxes(averages, axis, face_velocity, dt)
    else:
        phi = sls_face_fluxes(averages, axis, face_velocity, dt, limiter)
    return flux_form_update(averages, phi, dt, axis.dx)
