"""Discrete matrix-valued differential forms on a rectangular grid.

1-forms live on nodes (components along d/dx and d/dy), 2-forms on cell
centres. Products are taken after averaging the four cell corners, and the
exterior derivative differences the edge means, so both are second order at
cell centres.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .loop import eval_coeffs, residual_degrees
from .matrix import frob


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    x0: float = 0.0
    y0: float = 0.0
    hx: float = 1.0
    hy: float = 1.0

    def __post_init__(self):
        if self.nx < 2 or self.ny < 1:
            raise InvalidInputError(f"grid needs nx >= 2 and ny >= 1, got {self.nx}x{self.ny}")
        if not (self.hx > 0 and self.hy > 0):
            raise InvalidInputError("grid spacings must be positive")

    @classmethod
    def over(cls, x_range, y_range, h) -> "Grid":
        """Grid with spacing ``h`` covering ``[a, b] x [c, d]`` (rounded to whole cells)."""
        (a, b), (c, d) = x_range, y_range
        nx = int(round((b - a) / h)) + 1
        ny = int(round((d - c) / h)) + 1
        return cls(nx, ny, a, c, h, h)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.hx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.hy * np.arange(self.ny)

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def cell_shape(self):
        return (self.nx - 1, max(self.ny - 1, 0))

    def refine(self) -> "Grid":
        """Halve the spacing over the same rectangle."""
        ny = 2 * self.ny - 1 if self.ny > 1 else 1
        return Grid(2 * self.nx - 1, ny, self.x0, self.y0, self.hx / 2, self.hy / 2)

    def sub(self, i0, i1, j0, j1) -> "Grid":
        """Sub-grid of nodes ``i0..i1`` x ``j0..j1`` inclusive."""
        return Grid(i1 - i0 + 1, j1 - j0 + 1, self.x0 + i0 * self.hx,
                    self.y0 + j0 * self.hy, self.hx, self.hy)

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "x0": self.x0, "y0": self.y0,
                "hx": self.hx, "hy": self.hy}


def _check_nodes(grid: Grid, a: np.ndarray, what: str):
    if a.shape[:2] != (grid.nx, grid.ny):
        raise InvalidInputError(f"{what} has node shape {a.shape[:2]}, grid is {(grid.nx, grid.ny)}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{what} has non-finite entries")


@dataclass(frozen=True)
class MatForm1:
    """Matrix 1-form ``ax dx + ay dy`` sampled at nodes, arrays ``(nx, ny, r, c)``."""

    grid: Grid
    ax: np.ndarray = field(repr=False)
    ay: np.ndarray = field(repr=False)

    def __post_init__(self):
        ax, ay = np.asarray(self.ax), np.asarray(self.ay)
        if ax.ndim != 4 or ax.shape != ay.shape:
            raise InvalidInputError(f"form components must match, got {ax.shape} and {ay.shape}")
        _check_nodes(self.grid, ax, "ax")
        _check_nodes(self.grid, ay, "ay")
        object.__setattr__(self, "ax", ax)
        object.__setattr__(self, "ay", ay)

    @classmethod
    def constant(cls, grid: Grid, A, B) -> "MatForm1":
        A, B = np.asarray(A), np.asarray(B)
        dtype = np.result_type(A, B, np.float64)
        shape = (grid.nx, grid.ny) + A.shape
        return cls(grid, np.broadcast_to(A, shape).astype(dtype),
                   np.broadcast_to(B, shape).astype(dtype))

    @property
    def shape(self):
        return self.ax.shape[2:]

    def __add__(self, other: "MatForm1") -> "MatForm1":
        return MatForm1(self.grid, self.ax + other.ax, self.ay + other.ay)

    def scale(self, s) -> "MatForm1":
        return MatForm1(self.grid, self.ax * s, self.ay * s)

    def conjugate_by(self, g) -> "MatForm1":
        """Constant gauge ``alpha -> g^-1 alpha g``."""
        gi = np.linalg.inv(g)
        return MatForm1(self.grid, gi @ self.ax @ g, gi @ self.ay @ g)

    def block(self, rows, cols) -> "MatForm1":
        return MatForm1(self.grid, self.ax[..., rows, cols], self.ay[..., rows, cols])

    def transpose(self) -> "MatForm1":
        return MatForm1(self.grid, np.swapaxes(self.ax, -1, -2), np.swapaxes(self.ay, -1, -2))


@dataclass(frozen=True)
class MatForm2:
    """Coefficient of ``dx^dy`` at cell centres, array ``(nx-1, ny-1, r, c)``."""

    grid: Grid
    cxy: np.ndarray = field(repr=False)

    def __post_init__(self):
        if np.asarray(self.cxy).shape[:2] != self.grid.cell_shape:
            raise InvalidInputError("2-form cell array does not match grid")

    def __add__(self, other: "MatForm2") -> "MatForm2":
        return MatForm2(self.grid, self.cxy + other.cxy)

    def __sub__(self, other: "MatForm2") -> "MatForm2":
        return MatForm2(self.grid, self.cxy - other.cxy)

    def max_norm(self) -> float:
        if self.cxy.size == 0:
            return 0.0
        return float(np.max(frob(self.cxy)))


@dataclass(frozen=True)
class LoopForm1:
    """Loop-valued 1-form: coefficient arrays ``(hi-lo+1, nx, ny, n, n)``."""

    grid: Grid
    lo: int
    ax: np.ndarray = field(repr=False)
    ay: np.ndarray = field(repr=False)

    def __post_init__(self):
        ax, ay = np.asarray(self.ax), np.asarray(self.ay)
        if ax.ndim != 5 or ax.shape != ay.shape:
            raise InvalidInputError(f"loop form components must match, got {ax.shape}, {ay.shape}")
        for k in range(ax.shape[0]):
            _check_nodes(self.grid, ax[k], "ax")
            _check_nodes(self.grid, ay[k], "ay")
        object.__setattr__(self, "ax", ax)
        object.__setattr__(self, "ay", ay)

    @property
    def hi(self) -> int:
        return self.lo + self.ax.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.ax.shape[-1]

    def coeff(self, k: int) -> MatForm1:
        if self.lo <= k <= self.hi:
            return MatForm1(self.grid, self.ax[k - self.lo], self.ay[k - self.lo])
        z = np.zeros_like(self.ax[0])
        return MatForm1(self.grid, z, z)

    def eval(self, lam) -> MatForm1:
        return MatForm1(self.grid, eval_coeffs(self.ax, self.lo, lam),
                        eval_coeffs(self.ay, self.lo, lam))

    def with_coeff(self, k: int, form: MatForm1) -> "LoopForm1":
        ax, ay = self.ax.copy(), self.ay.copy()
        dtype = np.result_type(ax, form.ax)
        ax, ay = ax.astype(dtype), ay.astype(dtype)
        ax[k - self.lo] = form.ax
        ay[k - self.lo] = form.ay
        return LoopForm1(self.grid, self.lo, ax, ay)


def to_cells(a: np.ndarray) -> np.ndarray:
    """Arithmetic mean of the four corners of each cell."""
    return 0.25 * (a[:-1, :-1] + a[1:, :-1] + a[:-1, 1:] + a[1:, 1:])


def _same_grid(a: MatForm1, b: MatForm1):
    if a.grid != b.grid:
        raise InvalidInputError("forms live on different grids")


def exterior_d(alpha: MatForm1) -> MatForm2:
    """``d alpha`` at cell centres: ``d/dx ay - d/dy ax`` from edge means."""
    g = alpha.grid
    if g.ny < 2:
        return MatForm2(g, np.zeros((g.nx - 1, 0) + alpha.shape, dtype=alpha.ax.dtype))
    ay, ax = alpha.ay, alpha.ax
    dx_ay = ((ay[1:, :-1] + ay[1:, 1:]) - (ay[:-1, :-1] + ay[:-1, 1:])) / (2 * g.hx)
    dy_ax = ((ax[:-1, 1:] + ax[1:, 1:]) - (ax[:-1, :-1] + ax[1:, :-1])) / (2 * g.hy)
    return MatForm2(g, dx_ay - dy_ax)


def wedge(alpha: MatForm1, beta: MatForm1) -> MatForm2:
    """``(alpha ^ beta)(d/dx, d/dy) = ax by - ay bx`` with corner-averaged values."""
    _same_grid(alpha, beta)
    g = alpha.grid
    if alpha.shape[-1] != beta.shape[-2]:
        raise InvalidInputError(f"cannot multiply {alpha.shape} by {beta.shape}")
    if g.ny < 2:
        dtype = np.result_type(alpha.ax, beta.ax)
        return MatForm2(g, np.zeros((g.nx - 1, 0, alpha.shape[0], beta.shape[1]), dtype=dtype))
    ax, ay = to_cells(alpha.ax), to_cells(alpha.ay)
    bx, by = to_cells(beta.ax), to_cells(beta.ay)
    return MatForm2(g, ax @ by - ay @ bx)


def mc_residual(alpha: MatForm1):
    """``d alpha + alpha ^ alpha`` and its max Frobenius norm over cells."""
    r = exterior_d(alpha) + wedge(alpha, alpha)
    return r, r.max_norm()


def degree_residual_forms(alpha: LoopForm1) -> dict:
    """Coefficient 2-forms ``d a_k + sum_{i+j=k} a_i ^ a_j`` over ``residual_degrees``."""
    lo, hi = alpha.lo, alpha.hi
    coeffs = {k: alpha.coeff(k) for k in range(lo, hi + 1)}
    out = {}
    for k in residual_degrees(lo, hi):
        r = exterior_d(coeffs[k]) if k in coeffs else None
        for i in range(lo, hi + 1):
            j = k - i
            if lo <= j <= hi:
                w = wedge(coeffs[i], coeffs[j])
                r = w if r is None else r + w
        out[k] = r if r is not None else exterior_d(coeffs[lo].scale(0))
    return out


def per_degree_residuals(alpha: LoopForm1) -> list:
    """``[(k, max_norm)]`` of the degree-k Maurer-Cartan coefficient equations."""
    return [(k, r.max_norm()) for k, r in degree_residual_forms(alpha).items()]


def sampled_family_residual(alpha: LoopForm1, lam_samples) -> float:
    """max over samples of the Maurer-Cartan residual of ``alpha(lam)``."""
    lams = list(lam_samples)
    need = len(residual_degrees(alpha.lo, alpha.hi))
    if len(set(lams)) < need:
        raise InvalidInputError(f"need at least {need} distinct samples, got {len(set(lams))}")
    if any(lam == 0 for lam in lams):
        raise InvalidInputError("lambda samples must be nonzero")
    return max(mc_residual(alpha.eval(lam))[1] for lam in lams)


_D1_EDGE = np.array([[-25.0, 48.0, -36.0, 16.0, -3.0],
                     [-3.0, -10.0, 18.0, -6.0, 1.0]]) / 12.0


def _diff4(a: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Fourth-order first derivative along ``axis`` (one-sided near the ends).

    Using the same order everywhere keeps the boundary truncation error from
    jumping against the interior one, which would otherwise cost an order
    once the derivative is differenced again.
    """
    n = a.shape[axis]
    if n < 5:
        return np.gradient(a, h, axis=axis, edge_order=2 if n > 2 else 1)
    f = np.moveaxis(a, axis, 0)
    out = np.empty_like(f)
    out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / 12.0
    for r in (0, 1):
        c = _D1_EDGE[r]
        out[r] = np.tensordot(c, f[:5], axes=(0, 0))
        out[n - 1 - r] = -np.tensordot(c, f[::-1][:5], axes=(0, 0))
    return np.moveaxis(out / h, 0, axis)


def node_derivatives(a: np.ndarray, grid: Grid):
    """Fourth-order node derivatives ``(d/dx a, d/dy a)``."""
    dx = _diff4(a, grid.hx, 0)
    dy = _diff4(a, grid.hy, 1) if grid.ny > 1 else np.zeros_like(a)
    return dx, dy
