"""Integration of ``F^-1 dF = alpha`` into frame fields, and holonomy checks."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NotInAlgebraError
from .forms import Grid, LoopForm1, MatForm1, node_derivatives
from .matrix import algebra_residual, as_mat, frob, mat_exp

GROUP_TAGS = ("orthogonal", "special-orthogonal", "general")


@dataclass(frozen=True)
class FrameField:
    grid: Grid
    F: np.ndarray = field(repr=False)  # (nx, ny, n, n)
    group_tag: str = "general"

    @property
    def dim(self) -> int:
        return self.F.shape[-1]

    def membership_residual(self) -> float:
        """max over nodes of ``||F^T F - I||`` (0 for the general group)."""
        if self.group_tag == "general":
            return 0.0
        n = self.dim
        FtF = np.swapaxes(self.F, -1, -2).conj() @ self.F
        return float(np.max(frob(FtF - np.eye(n))))

    def left_multiply(self, g) -> "FrameField":
        return FrameField(self.grid, np.asarray(g) @ self.F, self.group_tag)


def _mgs(Q: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt on the columns of a stack of real matrices."""
    Q = Q.copy()
    n = Q.shape[-1]
    for k in range(n):
        v = Q[..., :, k]
        v /= np.linalg.norm(v, axis=-1, keepdims=True)
        Q[..., :, k] = v
        for j in range(k + 1, n):
            proj = np.sum(v * Q[..., :, j], axis=-1, keepdims=True)
            Q[..., :, j] -= proj * v
    return Q


def edge_steps(alpha: MatForm1):
    """Edge transports ``exp(h * edge-mean of alpha)`` along x and y edges."""
    g = alpha.grid
    Ex = mat_exp(0.5 * g.hx * (alpha.ax[:-1] + alpha.ax[1:]))
    Ey = mat_exp(0.5 * g.hy * (alpha.ay[:, :-1] + alpha.ay[:, 1:])) if g.ny > 1 else None
    return Ex, Ey


def _check_algebra(alpha: MatForm1, group_tag: str, tol: float = 1e-10):
    if group_tag not in GROUP_TAGS:
        raise InvalidInputError(f"unknown group tag {group_tag!r}")
    if group_tag == "general":
        return
    if np.iscomplexobj(alpha.ax) and (np.abs(alpha.ax.imag).max() > tol
                                      or np.abs(alpha.ay.imag).max() > tol):
        raise NotInAlgebraError("orthogonal frames need real skew forms")
    r = max(algebra_residual(alpha.ax.real, "skew"), algebra_residual(alpha.ay.real, "skew"))
    if r > tol:
        raise NotInAlgebraError(f"form is not skew (residual {r:.3e})")


def integrate_frame(alpha: MatForm1, F0, grid: Grid | None = None, *,
                    group_tag: str = "special-orthogonal", reorth_every: int | None = 32,
                    path: str = "row-first") -> FrameField:
    """Integrate ``F^-1 dF = alpha`` from ``F(0, 0) = F0`` along a canonical path.

    ``row-first`` walks the row j = 0 in x and then every column in y;
    ``column-first`` does the transpose. Each step right-multiplies by the
    exponential of the edge-averaged form. For orthogonal tags the
    accumulated transport is re-orthonormalised every ``reorth_every`` steps
    (``None`` or 0 disables it).
    """
    grid = grid or alpha.grid
    if grid != alpha.grid:
        raise InvalidInputError("grid does not match the form's grid")
    _check_algebra(alpha, group_tag)
    F0 = as_mat(F0)
    if F0.shape[-1] != alpha.shape[-1]:
        raise InvalidInputError("initial frame dimension does not match the form")
    if group_tag != "general":
        alpha = MatForm1(grid, alpha.ax.real, alpha.ay.real)

    Ex, Ey = edge_steps(alpha)
    n = alpha.shape[-1]
    dtype = np.result_type(Ex, F0) if Ey is None else np.result_type(Ex, Ey, F0)
    P = np.empty((grid.nx, grid.ny, n, n), dtype=dtype)
    reorth = group_tag != "general" and reorth_every
    if path not in ("row-first", "column-first"):
        raise InvalidInputError(f"unknown path {path!r}")

    if path == "row-first":
        P[0, 0] = np.eye(n)
        for i in range(grid.nx - 1):
            P[i + 1, 0] = P[i, 0] @ Ex[i, 0]
            if reorth and (i + 1) % reorth_every == 0:
                P[i + 1, 0] = _mgs(P[i + 1, 0])
        for j in range(grid.ny - 1):
            P[:, j + 1] = P[:, j] @ Ey[:, j]
            if reorth and (grid.nx - 1 + j + 1) % reorth_every == 0:
                P[:, j + 1] = _mgs(P[:, j + 1])
    else:
        P[0, 0] = np.eye(n)
        for j in range(grid.ny - 1):
            P[0, j + 1] = P[0, j] @ Ey[0, j]
            if reorth and (j + 1) % reorth_every == 0:
                P[0, j + 1] = _mgs(P[0, j + 1])
        for i in range(grid.nx - 1):
            P[i + 1, :] = P[i, :] @ Ex[i, :]
            if reorth and (grid.ny - 1 + i + 1) % reorth_every == 0:
                P[i + 1, :] = _mgs(P[i + 1, :])

    F = F0 @ P
    F[0, 0] = F0
    return FrameField(grid, F, group_tag)


def plaquette_holonomy(alpha: MatForm1) -> np.ndarray:
    """Per-cell ``||E_bottom E_right E_top^-1 E_left^-1 - I||``."""
    g = alpha.grid
    if g.ny < 2:
        return np.zeros((g.nx - 1, 0))
    Ex, Ey = edge_steps(alpha)
    Ex_inv = mat_exp(-0.5 * g.hx * (alpha.ax[:-1] + alpha.ax[1:]))
    Ey_inv = mat_exp(-0.5 * g.hy * (alpha.ay[:, :-1] + alpha.ay[:, 1:]))
    loop = Ex[:, :-1] @ Ey[1:, :] @ Ex_inv[:, 1:] @ Ey_inv[:-1, :]
    return frob(loop - np.eye(alpha.shape[-1]))


def holonomy_residual(alpha: MatForm1, frames: FrameField | None = None) -> float:
    """Max plaquette holonomy defect; the discrete integrability witness."""
    if frames is not None and frames.grid != alpha.grid:
        raise InvalidInputError("frame field and form live on different grids")
    h = plaquette_holonomy(alpha)
    return float(h.max()) if h.size else 0.0


def _threads() -> int:
    env = os.environ.get("LOOPGEOM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidInputError(f"LOOPGEOM_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def integrate_family(alpha: LoopForm1, F0, lam_samples, *, group_tag: str = "general",
                     setup=None, tol: float = 1e-10, **kwargs) -> list:
    """Integrate ``alpha(lam)`` for every sample; returns ``[(lam, FrameField)]``.

    With a ``setup`` the value at each sample lying on the real axis, the
    imaginary axis or the unit circle is first checked against that range's
    real form.
    """
    from .loop import reality_range_residual  # local: avoid cycle at import

    lams = list(lam_samples)
    if setup is not None:
        for lam in lams:
            for rng in _ranges_of(lam):
                for k, coeffs in (("ax", alpha.ax), ("ay", alpha.ay)):
                    r = reality_range_residual((alpha.lo, coeffs), rng, setup, [lam])
                    if r > tol:
                        raise NotInAlgebraError(
                            f"alpha({lam}) leaves the {rng} real form ({k}: {r:.3e})")

    def one(lam):
        return lam, integrate_frame(alpha.eval(lam), F0, alpha.grid, group_tag=group_tag, **kwargs)

    workers = min(_threads(), len(lams)) or 1
    if workers == 1:
        return [one(lam) for lam in lams]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(one, lams))


def _ranges_of(lam) -> list:
    lam = complex(lam)
    out = []
    if lam.imag == 0:
        out.append("real-axis")
    if lam.real == 0:
        out.append("imaginary-axis")
    if abs(abs(lam) - 1.0) < 1e-14:
        out.append("unit-circle")
    return out


def maurer_cartan_form(frames: FrameField) -> MatForm1:
    """Recover ``F^-1 dF`` from a frame field by second-order differences."""
    dFx, dFy = node_derivatives(frames.F, frames.grid)
    if frames.group_tag == "general":
        Finv = np.linalg.inv(frames.F)
    else:
        Finv = np.swapaxes(frames.F, -1, -2).conj()
    return MatForm1(frames.grid, Finv @ dFx, Finv @ dFy)
