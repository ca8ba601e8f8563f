"""C2 cubic splines on uniform grids: interpolating and primitive forms.

Both forms are stored in Hermite shape: knot values y_j and knot
derivatives d_j, where the d_j solve the C2 continuity system

    d_{j-1} + 4 d_j + d_{j+1} = 3 (y_{j+1} - y_{j-1}) / h .

On a periodic axis the system is cyclic and closed with a
Sherman-Morrison correction around the direct banded solve; otherwise
the end rows implement either prescribed end slopes (clamped) or zero
end curvature (natural).

The primitive spline interpolates the cumulative integral of cell
averages: its knot values at the faces are the exact running sums
F_k = sum_{i<k} avg_i * h, so differences of face knot values telescope
to the exact total, and its derivative is the parabolic reconstruction
of the averages. A periodic sequence of averages has a primitive that
grows by (mean * period) per wrap, so it is split as

    F(z) = mean * (z - x_0) + G(z)

with G periodic; evaluation at arbitrary winding positions is then
exact in the linear part.

All constructors accept stacked data: shape (..., m) builds one spline
per leading index with a single banded solve.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from .mesh import Axis, Bc

__all__ = [
    "Spline1D",
    "PrimitiveSpline",
    "interpolating_spline",
    "primitive_spline",
]


def _solve_141(rhs: np.ndarray, first_row: tuple[float, float],
               last_row: tuple[float, float]) -> np.ndarray:
    """Solve the tridiagonal system with interior rows [1, 4, 1].

    rhs has shape (..., m); first_row = (b0, c0) and last_row =
    (a_end, b_end) override the boundary rows.
    """
    m = rhs.shape[-1]
    ab = np.zeros((3, m))
    ab[0, 1:] = 1.0
    ab[1, :] = 4.0
    ab[2, :-1] = 1.0
    ab[1, 0], ab[0, 1] = first_row
    ab[2, -2], ab[1, -1] = last_row
    lead = rhs.shape[:-1]
    b = rhs.reshape(-1, m).T
    x = solve_banded((1, 1), ab, b, overwrite_b=True)
    return np.ascontiguousarray(x.T).reshape(*lead, m)


def _solve_141_cyclic(rhs: np.ndarray) -> np.ndarray:
    """Solve the cyclic tridiagonal system [1, 4, 1] with wrap corners.

    Sherman-Morrison: write the cyclic matrix as A' + u v^T with a
    modified plain tridiagonal A', solve for the rhs block and u in one
    banded call, and correct.
    """
    m = rhs.shape[-1]
    if m < 3:
        raise ValueError(f"cyclic spline needs at least 3 knots, got {m}")
    gamma = -4.0
    ab = np.zeros((3, m))
    ab[0, 1:] = 1.0
    ab[1, :] = 4.0
    ab[2, :-1] = 1.0
    ab[1, 0] -= gamma            # b'_0   = 4 - gamma
    ab[1, -1] -= 1.0 / gamma     # b'_end = 4 - alpha*beta/gamma

    lead = rhs.shape[:-1]
    b = np.empty((m, int(np.prod(lead, dtype=np.int64)) + 1))
    b[:, :-1] = rhs.reshape(-1, m).T
    u = np.zeros(m)
    u[0], u[-1] = gamma, 1.0
    b[:, -1] = u
    x = solve_banded((1, 1), ab, b, overwrite_b=True)
    y, q = x[:, :-1], x[:, -1]
    # v = (1, 0, ..., 0, 1/gamma)
    vy = y[0] + y[-1] / gamma
    vq = q[0] + q[-1] / gamma
    y -= np.outer(q, vy / (1.0 + vq))
    return np.ascontiguousarray(y.T).reshape(*lead, m)


class Spline1D:
    """Piecewise-cubic C2 interpolant on a uniform knot grid.

    Stores knot values/derivatives with arbitrary leading (batch)
    dimensions. Periodic splines hold one value per period (knot m
    coincides with knot 0); open splines hold m knots and m-1 cubics.
    """

    def __init__(self, x0: float, h: float, y: np.ndarray, d: np.ndarray,
                 periodic: bool):
        self.x0 = float(x0)
        self.h = float(h)
        self.y = y
        self.d = d
        self.periodic = periodic
        self.period = h * y.shape[-1] if periodic else None

    # -- constructors -------------------------------------------------

    @classmethod
    def periodic_fit(cls, values: np.ndarray, x0: float, h: float) -> "Spline1D":
        y = np.asarray(values, dtype=float)
        rhs = (3.0 / h) * (np.roll(y, -1, axis=-1) - np.roll(y, 1, axis=-1))
        d = _solve_141_cyclic(rhs)
        return cls(x0, h, y, d, periodic=True)

    @classmethod
    def clamped_fit(cls, values: np.ndarray, x0: float, h: float,
                    slope_lo=0.0, slope_hi=0.0) -> "Spline1D":
        y = np.asarray(values, dtype=float)
        m = y.shape[-1]
        d = np.empty_like(y)
        d[..., 0] = slope_lo
        d[..., -1] = slope_hi
        rhs = (3.0 / h) * (y[..., 2:] - y[..., :-2])
        rhs[..., 0] -= d[..., 0]
        rhs[..., -1] -= d[..., -1]
        d[..., 1:-1] = _solve_141(rhs, (4.0, 1.0), (1.0, 4.0))
        return cls(x0, h, y, d, periodic=False)

    @classmethod
    def natural_fit(cls, values: np.ndarray, x0: float, h: float) -> "Spline1D":
        y = np.asarray(values, dtype=float)
        rhs = np.empty_like(y)
        rhs[..., 1:-1] = (3.0 / h) * (y[..., 2:] - y[..., :-2])
        rhs[..., 0] = (3.0 / h) * (y[..., 1] - y[..., 0])
        rhs[..., -1] = (3.0 / h) * (y[..., -1] - y[..., -2])
        d = _solve_141(rhs, (2.0, 1.0), (1.0, 2.0))
        return cls(x0, h, y, d, periodic=False)

    # -- evaluation ----------------------------------------------------

    def _locate(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        m = self.y.shape[-1]
        if self.periodic:
            u = np.mod(x - self.x0, self.period)
            u = np.where(u >= self.period, 0.0, u)
            j = np.minimum((u / self.h).astype(np.int64), m - 1)
        else:
            u = x - self.x0
            j = np.clip((u / self.h).astype(np.int64), 0, m - 2)
        t = u / self.h - j
        return j, t

    def __call__(self, x, deriv: int = 0) -> np.ndarray:
        """Evaluate the spline (or its 1st/2nd derivative) at x.

        x broadcasts against the batch dimensions: coefficient shape
        (..., m) with x shape (..., K) returns (..., K). Open splines
        extrapolate with the end cubic; callers clamp queries that must
        stay inside the data range.
        """
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        if scalar:
            x = x[None]
        j, t = self._locate(x)
        m = self.y.shape[-1]
        jn = (j + 1) % m if self.periodic else j + 1
        # gather through flat indices; broadcasting batch rows against
        # query points in index arithmetic avoids materializing strided
        # views of the coefficient arrays
        rows = int(np.prod(self.y.shape[:-1], dtype=np.intp))
        base = (np.arange(rows, dtype=np.intp) * m).reshape(
            self.y.shape[:-1] + (1,))
        i0 = base + j
        i1 = base + jn
        yflat = self.y.reshape(-1)
        dflat = self.d.reshape(-1)
        y0 = yflat[i0]
        y1 = yflat[i1]
        d0 = dflat[i0]
        d1 = dflat[i1]
        h = self.h
        delta = y1 - y0
        c2 = 3.0 * delta - h * (2.0 * d0 + d1)
        c3 = -2.0 * delta + h * (d0 + d1)
        if deriv == 0:
            out = y0 + t * (h * d0 + t * (c2 + t * c3))
        elif deriv == 1:
            out = (h * d0 + t * (2.0 * c2 + t * 3.0 * c3)) / h
        elif deriv == 2:
            out = (2.0 * c2 + t * 6.0 * c3) / (h * h)
        else:
            raise ValueError(f"deriv must be 0, 1 or 2, got {deriv}")
        return out[0] if scalar and out.shape == (1,) else out


class PrimitiveSpline:
    """Cubic-spline interpolant of the running integral of cell averages.

    node_values[k] holds the exact cumulative sum at face k; total is
    the exact line integral. Evaluation composes the stored spline with
    the linear winding part on periodic axes.
    """

    def __init__(self, spline: Spline1D, node_values: np.ndarray,
                 mean: np.ndarray | None, x0: float, h: float, n: int):
        self._s = spline
        self.node_values = node_values
        self.mean = mean        # None on open axes
        self.x0 = float(x0)
        self.h = float(h)
        self.n = int(n)

    @property
    def total(self) -> np.ndarray:
        return self.node_values[..., -1]

    def __call__(self, z) -> np.ndarray:
        if self.mean is None:
            return self._s(z)
        z = np.asarray(z, dtype=float)
        return self.mean[..., None] * (z - self.x0) + self._s(z)

    def derivative(self, z) -> np.ndarray:
        """Reconstructed point values of the underlying density."""
        if self.mean is None:
            return self._s(z, deriv=1)
        return self.mean[..., None] + self._s(np.asarray(z, float), deriv=1)


def interpolating_spline(values: np.ndarray, x0: float, h: float, bc: Bc,
                         *, end_slopes=None, natural: bool = False) -> Spline1D:
    """C2 cubic spline through point values on a uniform grid.

    bc PERIODIC fits the cyclic system; bc NEUMANN fits clamped ends
    with zero slope (matching reflected data) unless end_slopes
    overrides them, or a natural fit when natural=True.
    """
    if bc is Bc.PERIODIC:
        return Spline1D.periodic_fit(values, x0, h)
    if natural:
        return Spline1D.natural_fit(values, x0, h)
    lo, hi = (0.0, 0.0) if end_slopes is None else end_slopes
    return Spline1D.clamped_fit(values, x0, h, lo, hi)


def primitive_spline(averages: np.ndarray, axis: Axis) -> PrimitiveSpline:
    """Primitive (cumulative-integral) spline of cell averages on axis.

    Knots sit on the faces; knot k carries the exact running sum
    sum_{i<k} avg_i * dx. On a Neumann axis the end slopes are the
    boundary cell averages, the value of the density the even-reflection
    ghosts imply at the walls.
    """
    f = np.asarray(averages, dtype=float)
    n = axis.n
    if f.shape[-1] != n:
        raise ValueError(f"expected {n} cell averages, got {f.shape[-1]}")
    h = axis.dx
    knots = np.zeros(f.shape[:-1] + (n + 1,))
    np.cumsum(f * h, axis=-1, out=knots[..., 1:])
    if axis.bc is Bc.PERIODIC:
        mean = knots[..., -1] / axis.length
        g = knots[..., :-1] - mean[..., None] * (h * np.arange(n))
        s = Spline1D.periodic_fit(g, axis.x_min, h)
        return PrimitiveSpline(s, knots, mean, axis.x_min, h, n)
    s = Spline1D.clamped_fit(knots, axis.x_min, h,
                             slope_lo=f[..., 0], slope_hi=f[..., -1])
    return PrimitiveSpline(s, knots, None, axis.x_min, h, n)
