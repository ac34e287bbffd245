"""Geometry of adapted frames in S^3 and Grassmann membership checks.

For a frame ``F = [e1 e2 n f]`` the Maurer-Cartan form has the block layout::

    [[ omega,  beta, theta],
     [-beta^T,    0,     0],
     [-theta^T,   0,     0]]

with ``omega`` the tangent connection, ``beta^a = e_a . dn`` and the coframe
``theta^a = e_a . df``. The second fundamental form is taken as
``II = -sym(beta (x) theta)`` so that flat surfaces in S^3 have
``det II / det I = -1``. Gauss curvature comes from the connection:
``d omega_12 = K theta^1 ^ theta^2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateCoframeError, InvalidInputError, InvalidSubspaceError,
                     NotAdaptedFrameError)
from .forms import Grid, LoopForm1, MatForm1, MatForm2, exterior_d, mc_residual, \
    node_derivatives, wedge
from .frames import FrameField, maurer_cartan_form
from .matrix import Involution, algebra_residual, anti_fixed_project, frob, subspace_distance

COFRAME_TOL = 1e-8


@dataclass(frozen=True)
class BlockSplit:
    omega: MatForm1  # 2x2
    beta: MatForm1   # 2x1
    theta: MatForm1  # 2x1

    @property
    def grid(self) -> Grid:
        return self.omega.grid

    def assemble(self) -> MatForm1:
        return assemble_blocks(self.omega, self.beta, self.theta)


def assemble_blocks(omega: MatForm1, beta: MatForm1, theta: MatForm1, lam=1.0) -> MatForm1:
    """The 4x4 form with ``omega`` and ``lam``-scaled ``beta``, ``theta`` blocks."""
    out = []
    for o, b, t in ((omega.ax, beta.ax, theta.ax), (omega.ay, beta.ay, theta.ay)):
        A = np.zeros(o.shape[:2] + (4, 4), dtype=np.result_type(o, b, t))
        A[..., :2, :2] = o
        A[..., :2, 2:3] = lam * b
        A[..., :2, 3:4] = lam * t
        A[..., 2:3, :2] = -lam * np.swapaxes(b, -1, -2)
        A[..., 3:4, :2] = -lam * np.swapaxes(t, -1, -2)
        out.append(A)
    return MatForm1(omega.grid, *out)


def split_blocks(alpha: MatForm1, atol: float = 1e-10) -> BlockSplit:
    if alpha.shape != (4, 4):
        raise NotAdaptedFrameError(f"expected 4x4 values, got {alpha.shape}")
    skew = max(algebra_residual(alpha.ax, "skew"), algebra_residual(alpha.ay, "skew"))
    if skew > atol:
        raise NotAdaptedFrameError(f"form is not so(4)-valued (skew residual {skew:.3e})")
    pattern = max(np.abs(alpha.ax[..., 2:, 2:]).max(), np.abs(alpha.ay[..., 2:, 2:]).max())
    if pattern > atol:
        raise NotAdaptedFrameError(
            f"normal block (n.df entries) is {pattern:.3e}; frame is not adapted")
    return BlockSplit(alpha.block(slice(0, 2), slice(0, 2)),
                      alpha.block(slice(0, 2), slice(2, 3)),
                      alpha.block(slice(0, 2), slice(3, 4)))


def coframe_matrix(theta: MatForm1) -> np.ndarray:
    """``T[..., a, mu] = theta^a(d/dmu)`` for a 2x1 vector of 1-forms."""
    return np.stack([theta.ax[..., 0], theta.ay[..., 0]], axis=-1)


def _check_coframe(T: np.ndarray, tol=COFRAME_TOL):
    det = np.linalg.det(T)
    bad = np.argwhere(np.abs(det) < tol)
    if len(bad):
        node = tuple(int(v) for v in bad[0])
        raise DegenerateCoframeError(f"degenerate coframe at node {node}", node=node)
    return det


def solve_connection(theta: MatForm1) -> MatForm1:
    """The so(2) connection with ``d theta + omega ^ theta = 0`` at every node.

    With ``omega = [[0, w], [-w, 0]]`` the two structure equations are linear
    in ``(w_x, w_y)`` with the coframe matrix as coefficient matrix.
    """
    grid = theta.grid
    T = coframe_matrix(theta)
    _check_coframe(T)
    tx, ty = theta.ax[..., 0], theta.ay[..., 0]
    d_ty_dx, _ = node_derivatives(ty, grid)
    _, d_tx_dy = node_derivatives(tx, grid)
    dtheta = d_ty_dx - d_tx_dy  # (nx, ny, 2)
    # w^theta^2 = -dtheta^1 ;  w^theta^1 = dtheta^2 ; (w^t = wx t_y - wy t_x)
    M = np.empty(T.shape[:2] + (2, 2), dtype=T.dtype)
    M[..., 0, 0], M[..., 0, 1] = ty[..., 1], -tx[..., 1]
    M[..., 1, 0], M[..., 1, 1] = ty[..., 0], -tx[..., 0]
    rhs = np.stack([-dtheta[..., 0], dtheta[..., 1]], axis=-1)
    w = np.linalg.solve(M, rhs[..., None])[..., 0]
    ox = np.zeros(T.shape[:2] + (2, 2), dtype=w.dtype)
    oy = np.zeros_like(ox)
    ox[..., 0, 1], ox[..., 1, 0] = w[..., 0], -w[..., 0]
    oy[..., 0, 1], oy[..., 1, 0] = w[..., 1], -w[..., 1]
    return MatForm1(grid, ox, oy)


def cells_to_nodes(c: np.ndarray, grid: Grid) -> np.ndarray:
    """Average each node's adjacent cells (boundary nodes see fewer cells)."""
    acc = np.zeros((grid.nx, grid.ny) + c.shape[2:], dtype=c.dtype)
    cnt = np.zeros((grid.nx, grid.ny) + (1,) * (c.ndim - 2))
    for di in (0, 1):
        for dj in (0, 1):
            acc[di:di + c.shape[0], dj:dj + c.shape[1]] += c
            cnt[di:di + c.shape[0], dj:dj + c.shape[1]] += 1
    return acc / np.maximum(cnt, 1)


def interior(a: np.ndarray) -> np.ndarray:
    """Interior nodes of a node array; boundary values are extrapolations."""
    return a[1:-1, 1:-1]


def cell_gauss_curvature(omega: MatForm1, theta: MatForm1) -> np.ndarray:
    o12 = MatForm1(omega.grid, omega.ax[..., 0:1, 1:2], omega.ay[..., 0:1, 1:2])
    t1 = MatForm1(theta.grid, theta.ax[..., 0:1, :], theta.ay[..., 0:1, :])
    t2 = MatForm1(theta.grid, theta.ax[..., 1:2, :], theta.ay[..., 1:2, :])
    area = wedge(t1, t2).cxy[..., 0, 0]
    bad = np.argwhere(np.abs(area) < COFRAME_TOL)
    if len(bad):
        cell = tuple(int(v) for v in bad[0])
        raise DegenerateCoframeError(f"degenerate coframe in cell {cell}", node=cell)
    return exterior_d(o12).cxy[..., 0, 0] / area


def gauss_curvature(omega: MatForm1, theta: MatForm1) -> np.ndarray:
    """Gauss curvature per node from ``d omega_12 = K theta^1 ^ theta^2``."""
    return cells_to_nodes(cell_gauss_curvature(omega, theta), omega.grid)


def gauss_residual(split: BlockSplit) -> MatForm2:
    """``d omega + omega ^ omega - beta ^ beta^T - theta ^ theta^T``."""
    o, b, t = split.omega, split.beta, split.theta
    return (exterior_d(o) + wedge(o, o)) - wedge(b, b.transpose()) - wedge(t, t.transpose())


def flatness_defect(omega: MatForm1) -> MatForm2:
    return exterior_d(omega) + wedge(omega, omega)


@dataclass
class GeometryReport:
    metric: np.ndarray = field(repr=False)
    second_form: np.ndarray = field(repr=False)
    gauss_curvature: np.ndarray = field(repr=False)
    extrinsic_ratio: np.ndarray = field(repr=False)
    residuals: dict = field(default_factory=dict)


def fundamental_forms(split: BlockSplit) -> GeometryReport:
    T = coframe_matrix(split.theta)
    B = coframe_matrix(split.beta)
    I = np.swapaxes(T, -1, -2) @ T
    BT = np.swapaxes(B, -1, -2) @ T
    II = -0.5 * (BT + np.swapaxes(BT, -1, -2))
    det_I = np.linalg.det(I)
    if np.any(np.abs(det_I) < COFRAME_TOL ** 2):
        node = tuple(int(v) for v in np.argwhere(np.abs(det_I) < COFRAME_TOL ** 2)[0])
        raise DegenerateCoframeError(f"degenerate metric at node {node}", node=node)
    ratio = np.linalg.det(II) / det_I
    K = gauss_curvature(split.omega, split.theta) if split.grid.ny > 1 else np.zeros(T.shape[:2])
    gres = gauss_residual(split)
    direct = mc_residual(split.assemble())[0].cxy[..., :2, :2]
    return GeometryReport(I, II, K, ratio, {
        "gauss_equation": gres.max_norm(),
        "gauss_equation_two_way": float(np.max(frob(direct - gres.cxy))) if direct.size else 0.0,
        "structure_equation": (exterior_d(split.theta)
                               + wedge(split.omega, split.theta)).max_norm(),
        "codazzi": (exterior_d(split.beta) + wedge(split.omega, split.beta)).max_norm(),
    })


def project_to_target(frames: FrameField, column: int = -1, tol: float = 1e-8) -> np.ndarray:
    """Column ``column`` of every frame; the last column is the immersion."""
    if frames.group_tag == "general":
        raise InvalidInputError("projection to the sphere needs an orthogonal frame")
    r = frames.membership_residual()
    if r > tol:
        raise InvalidInputError(f"frame is not orthogonal (residual {r:.3e})")
    return frames.F[..., :, column].real.copy()


def check_in_pbar(tau: Involution, basis, tol: float = 1e-12):
    for k, b in enumerate(basis):
        b = np.asarray(b)
        if frob(tau.apply(b) + b) > tol * max(1.0, float(frob(b))):
            raise InvalidSubspaceError(f"basis element {k} is not in the -1 eigenspace")


def vp_membership_residual(alpha: MatForm1, tau: Involution, p_basis) -> float:
    """max over nodes of the distance of the p-bar part of ``alpha`` from ``span(p)``."""
    check_in_pbar(tau, p_basis)
    worst = 0.0
    for comp in (alpha.ax, alpha.ay):
        d = subspace_distance(anti_fixed_project(tau, comp), p_basis)
        worst = max(worst, float(d.max()))
    return worst


def _check_flat_s3_shape(alpha: LoopForm1, tol=1e-12):
    if alpha.lo != 0 or alpha.hi != 1 or alpha.dim != 4:
        raise InvalidInputError("expected degrees [0, 1] with 4x4 coefficients")
    a0 = np.concatenate([alpha.ax[0], alpha.ay[0]])
    a1 = np.concatenate([alpha.ax[1], alpha.ay[1]])
    off0 = np.abs(a0[..., :2, 2:]).max() + np.abs(a0[..., 2:, :]).max()
    rest1 = np.abs(a1[..., :2, :2]).max() + np.abs(a1[..., 2:, 2:]).max()
    if off0 > tol or rest1 > tol:
        raise InvalidInputError("form does not have the flat-S3 block shape")


def family_metric(alpha: LoopForm1, lam) -> np.ndarray:
    a = alpha.eval(lam)
    T = np.stack([a.ax[..., :2, 3], a.ay[..., :2, 3]], axis=-1)
    return np.swapaxes(T, -1, -2) @ T


def metric_scaling_check(alpha: LoopForm1, lam1: float, lam2: float) -> float:
    """max ``||I(lam2) - (lam2/lam1)^2 I(lam1)||`` over nodes."""
    if lam1 == 0 or lam2 == 0:
        raise InvalidInputError("lambda must be nonzero")
    _check_flat_s3_shape(alpha)
    I1, I2 = family_metric(alpha, lam1), family_metric(alpha, lam2)
    return float(np.max(frob(I2 - (lam2 / lam1) ** 2 * I1)))


def frame_geometry(frames: FrameField) -> dict:
    """Curvature and adaptedness of an integrated S^3 frame field.

    The Maurer-Cartan form is recovered from the frames by differencing, so
    everything here is an independent check on the integration.
    """
    alpha = maurer_cartan_form(frames)
    omega = alpha.block(slice(0, 2), slice(0, 2))
    theta = alpha.block(slice(0, 2), slice(3, 4))
    K = gauss_curvature(omega, theta)
    f = frames.F[..., :, 3].real
    return {
        "gauss_curvature": K,
        "gauss_curvature_max_abs": float(np.abs(interior(K)).max()),
        "normal_leak": float(max(np.abs(alpha.ax[..., 2, 3]).max(),
                                 np.abs(alpha.ay[..., 2, 3]).max())),
        "unit_norm": float(np.abs(np.linalg.norm(f, axis=-1) - 1).max()),
    }
