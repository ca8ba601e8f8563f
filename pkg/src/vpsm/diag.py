"""Run diagnostics: conserved quantities, extrema, mode tracking, output.

Mass and L2 sums are compensated (exactly rounded, via math.fsum) and
walk the array in C order, so repeated calls on the same snapshot are
bit-for-bit identical and conservation checks at the 1e-12 level are
about the scheme, not the summation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields

import numpy as np

from .mesh import PhaseGrid4D, PolarGrid2D


__all__ = [
    "DiagRecord",
    "total_mass",
    "l2_norm",
    "slice_extrema",
    "mode_amplitude",
    "growth_rate_fit",
    "divergence_residual_max",
    "write_records",
]


def total_mass(f: np.ndarray, grid: PhaseGrid4D) -> float:
    """Sum of f times the phase-space measure, compensated."""
    w = np.asarray(f, dtype=float) * grid.cell_measure()
    return math.fsum(w.ravel(order="C"))


def l2_norm(f: np.ndarray, grid: PhaseGrid4D) -> float:
    """sqrt of the measure-weighted sum of squares, compensated."""
    f = np.asarray(f, dtype=float)
    w = f * f * grid.cell_measure()
    return math.sqrt(math.fsum(w.ravel(order="C")))


def slice_extrema(f: np.ndarray, v_index: int, z_index: int) -> tuple[float, float]:
    """Min and max of f over the (r, theta) slice at fixed z and v_par."""
    f = np.asarray(f)
    plane = f[:, :, z_index, v_index]
    return float(plane.min()), float(plane.max())


def mode_amplitude(values: np.ndarray, m: int, n: int) -> float:
    """Amplitude of the (m, n) harmonic over (theta, z), averaged in r.

    values has shape (n_radial, n_theta, n_z); radial may be cells or
    nodes. The coefficient convention is complex-exponential with the
    1/(n_theta*n_z) normalization, so a field eps*cos(m*theta + n*k_z*z)
    reports eps/2. The modulus is taken per radius before averaging,
    which keeps radial phase reversals of the envelope from cancelling.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 3:
        raise ValueError(f"expected (radial, theta, z) data, got shape {v.shape}")
    n_t, n_z = v.shape[1], v.shape[2]
    if abs(m) > n_t // 2 or abs(n) > n_z // 2:
        raise ValueError(
            f"mode ({m}, {n}) outside the spectral range of a {n_t}x{n_z} grid")
    coef = np.fft.fft2(v, axes=(1, 2)) / (n_t * n_z)
    return float(np.mean(np.abs(coef[:, m % n_t, n % n_z])))


def growth_rate_fit(times, amplitudes, window=None) -> tuple[float, float]:
    """Least-squares slope of ln A(t) over the window, with R^2.

    window is an inclusive (t_lo, t_hi) pair or None for all samples.
    Needs at least 10 samples and strictly positive amplitudes.
    """
    t = np.asarray(times, dtype=float)
    a = np.asarray(amplitudes, dtype=float)
    if window is not None:
        keep = (t >= window[0]) & (t <= window[1])
        t, a = t[keep], a[keep]
    if t.size < 10:
        raise ValueError(f"growth fit needs at least 10 samples, got {t.size}")
    if np.any(a <= 0.0):
        raise ValueError("growth fit needs strictly positive amplitudes")
    y = np.log(a)
    design = np.stack([t, np.ones_like(t)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (slope * t + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot <= 1e-30:
        return float(slope), 1.0
    r_sq = 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(slope), r_sq


def divergence_residual_max(polar: PolarGrid2D, a_r: np.ndarray,
                            a_theta: np.ndarray) -> float:
    """Largest per-cell divergence of face velocities, unnormalized."""
    from .field import discrete_divergence

    return float(np.max(np.abs(discrete_divergence(polar, a_r, a_theta))))


@dataclass(frozen=True)
class DiagRecord:
    """One diagnostic sample of a run."""

    time: float
    dt: float
    mass: float
    l2: float
    f_min: float
    f_max: float
    slice_min: float
    slice_max: float
    mode_amp: float
    div_residual: float


def write_records(path, records) -> None:
    """Write records as CSV with 17 significant digits per value."""
    names = [f.name for f in fields(DiagRecord)]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(names)
        for rec in records:
            writer.writerow(f"{getattr(rec, name):.17g}" for name in names)
