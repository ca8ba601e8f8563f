"""Uniform 1D axes and the polar / phase-space grids built from them.

Cell i of an axis spans [x_{i+1/2}, x_{i+3/2}] ... indexing convention:
nodes (cell faces) sit at x_min + i*dx for i = 0..n, centers halfway
between. Distribution-function unknowns live at centers (point values)
or as cell averages; face-normal velocities live at nodes.

Polar cells carry the Jacobian r: Vol_ij = r_i * dr * dtheta, which makes
the total annulus volume telescope exactly to pi*(r_max^2 - r_min^2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class Bc(enum.Enum):
    """Boundary treatment of an axis."""

    PERIODIC = "periodic"
    NEUMANN = "neumann"


@dataclass
class Axis:
    """Uniform 1D axis with n cells on [x_min, x_max].

    Treated as immutable after construction; the derived arrays are
    marked read-only.
    """

    n: int
    x_min: float
    x_max: float
    bc: Bc
    dx: float = field(init=False)
    nodes: np.ndarray = field(init=False, repr=False)
    centers: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.n < 4:
            raise ValueError(f"axis needs at least 4 cells, got {self.n}")
        if not self.x_max > self.x_min:
            raise ValueError(f"empty axis extent [{self.x_min}, {self.x_max}]")
        self.dx = (self.x_max - self.x_min) / self.n
        self.nodes = self.x_min + self.dx * np.arange(self.n + 1)
        self.centers = self.x_min + self.dx * (np.arange(self.n) + 0.5)
        self.nodes.flags.writeable = False
        self.centers.flags.writeable = False

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def wrap(self, x: np.ndarray) -> np.ndarray:
        """Map positions into [x_min, x_min + length) (periodic axes)."""
        u = np.mod(np.asarray(x) - self.x_min, self.length)
        # np.mod may return length exactly for tiny negative arguments
        u = np.where(u >= self.length, 0.0, u)
        return self.x_min + u

    def clamp(self, x: np.ndarray) -> np.ndarray:
        """Clip positions onto [x_min, x_max] (Neumann axes)."""
        return np.clip(x, self.x_min, self.x_max)

    def confine(self, x: np.ndarray) -> np.ndarray:
        """wrap() on periodic axes, clamp() on Neumann axes."""
        return self.wrap(x) if self.bc is Bc.PERIODIC else self.clamp(x)


@dataclass
class PolarGrid2D:
    """Annular (r, theta) grid: r Neumann with r_min > 0, theta periodic."""

    r: Axis
    theta: Axis
    vol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.r.bc is not Bc.NEUMANN:
            raise ValueError("radial axis must be Neumann")
        if self.theta.bc is not Bc.PERIODIC:
            raise ValueError("theta axis must be periodic")
        if self.r.x_min <= 0.0:
            raise ValueError(f"r_min must be positive, got {self.r.x_min}")
        # Vol_ij is independent of j; store the radial factor once.
        self.vol = self.r.centers * self.r.dx * self.theta.dx
        self.vol.flags.writeable = False

    def total_volume(self) -> float:
        return math.fsum(self.vol) * self.theta.n


@dataclass
class PhaseGrid4D:
    """(r, theta, z, v_par) phase-space grid for the drift-kinetic driver."""

    r: Axis
    theta: Axis
    z: Axis
    vpar: Axis

    def __post_init__(self) -> None:
        self.polar = PolarGrid2D(self.r, self.theta)
        if self.z.bc is not Bc.PERIODIC:
            raise ValueError("z axis must be periodic")
        if self.vpar.bc is not Bc.NEUMANN:
            raise ValueError("v_par axis must be Neumann")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.r.n, self.theta.n, self.z.n, self.vpar.n)

    def cell_measure(self) -> np.ndarray:
        """Phase-space measure r_i*dr*dtheta*dz*dv, shape (n_r, 1, 1, 1)."""
        w = self.polar.vol * self.z.dx * self.vpar.dx
        return w[:, None, None, None]
