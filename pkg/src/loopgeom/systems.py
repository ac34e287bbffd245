"""Concrete systems: flat surfaces in S^3, curves in S^2, vacuum loops."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateDataError, InvalidInputError, NotAVacuumError
from .forms import Grid, LoopForm1, MatForm1
from .geometry import assemble_blocks, solve_connection
from .loop import (RANGES, TWISTS, LoopPoly, ThreeInvolutionSetup, reality_range_residual,
                   require_twists, twist_residual)
from .matrix import (Involution, complex_conjugation, frob, identity_involution,
                     inner_involution, mat_exp)

SIN_FLOOR = 1e-3


# --------------------------------------------------------------------------
# flat surfaces in S^3

@dataclass(frozen=True)
class WaveData:
    """Angle ``phi = phi1(x) + phi2(y)`` between asymptotic lines, sampled on nodes.

    ``extra`` is an optional non-separable node field added to ``phi``. It
    exists to feed the builder data that violates the wave equation.
    """

    phi1: np.ndarray
    phi2: np.ndarray
    extra: np.ndarray | None = None

    @classmethod
    def from_functions(cls, f1: Callable, f2: Callable, grid: Grid) -> "WaveData":
        return cls(np.broadcast_to(np.asarray(f1(grid.x), dtype=float), (grid.nx,)).copy(),
                   np.broadcast_to(np.asarray(f2(grid.y), dtype=float), (grid.ny,)).copy())

    @classmethod
    def from_field(cls, f: Callable, grid: Grid) -> "WaveData":
        """Arbitrary ``phi(x, y)``; ``f`` receives the node mesh as two arrays."""
        X, Y = grid.mesh()
        extra = np.broadcast_to(np.asarray(f(X, Y), dtype=float), X.shape).copy()
        return cls(np.zeros(grid.nx), np.zeros(grid.ny), extra)

    def phi(self) -> np.ndarray:
        phi = self.phi1[:, None] + self.phi2[None, :]
        return phi if self.extra is None else phi + self.extra

    def sub(self, i0, i1, j0, j1) -> "WaveData":
        extra = None if self.extra is None else self.extra[i0:i1 + 1, j0:j1 + 1]
        return WaveData(self.phi1[i0:i1 + 1], self.phi2[j0:j1 + 1], extra)


def _largest_rectangle(ok: np.ndarray):
    """Largest all-True axis-aligned sub-rectangle (histogram method)."""
    nx, ny = ok.shape
    heights = np.zeros(ny, dtype=int)
    best = (0, None)
    for i in range(nx):
        heights = np.where(ok[i], heights + 1, 0)
        stack = []
        for j in range(ny + 1):
            h = heights[j] if j < ny else 0
            start = j
            while stack and stack[-1][1] >= h:
                start, hh = stack.pop()
                area = hh * (j - start)
                if area > best[0]:
                    best = (area, (i - hh + 1, i, start, j - 1))
            stack.append((start, h))
    return best[1]


def clip_domain(w: WaveData, grid: Grid, floor: float = SIN_FLOOR):
    """Shrink to the largest node rectangle with ``|sin phi| >= floor``.

    Returns ``(w, grid, (i0, i1, j0, j1))``; raises when fewer than 2x2
    nodes survive.
    """
    ok = np.abs(np.sin(w.phi())) >= floor
    if ok.all():
        return w, grid, (0, grid.nx - 1, 0, grid.ny - 1)
    rect = _largest_rectangle(ok)
    if rect is None or rect[1] - rect[0] < 1 or rect[3] - rect[2] < 1:
        raise DegenerateDataError("no 2x2 node rectangle with |sin phi| above the floor")
    i0, i1, j0, j1 = (int(v) for v in rect)
    return w.sub(i0, i1, j0, j1), grid.sub(i0, i1, j0, j1), (i0, i1, j0, j1)


def flat_s3_blocks(w: WaveData, grid: Grid):
    """``(omega, beta, theta)`` for the asymptotic-coordinate ansatz.

    theta^1 = cos(phi/2)(dx + dy), theta^2 = sin(phi/2)(dy - dx),
    beta = -S theta with S = diag(tan(phi/2), -cot(phi/2)), and omega the
    Levi-Civita connection of theta.
    """
    if w.phi1.shape != (grid.nx,) or w.phi2.shape != (grid.ny,) or \
            (w.extra is not None and w.extra.shape != (grid.nx, grid.ny)):
        raise InvalidInputError("wave data does not match the grid")
    phi = w.phi()
    s = np.sin(phi)
    bad = np.argwhere(~(np.abs(s) >= SIN_FLOOR))
    if len(bad):
        node = tuple(int(v) for v in bad[0])
        raise DegenerateDataError(
            f"|sin phi| = {abs(s[node]):.2e} < {SIN_FLOOR:g} at node {node}", node=node)
    c2, s2 = np.cos(phi / 2), np.sin(phi / 2)
    shape = phi.shape + (2, 1)
    tx, ty = np.zeros(shape), np.zeros(shape)
    tx[..., 0, 0], ty[..., 0, 0] = c2, c2
    tx[..., 1, 0], ty[..., 1, 0] = -s2, s2
    theta = MatForm1(grid, tx, ty)
    S = np.zeros(phi.shape + (2, 2))
    S[..., 0, 0] = np.tan(phi / 2)
    S[..., 1, 1] = -1.0 / np.tan(phi / 2)
    beta = MatForm1(grid, -S @ tx, -S @ ty)
    omega = solve_connection(theta)
    return omega, beta, theta


def build_flat_s3_family(w: WaveData, grid: Grid) -> LoopForm1:
    """Loop form ``a0 + a1 lam``: a0 the connection block, a1 the (beta, theta) blocks."""
    omega, beta, theta = flat_s3_blocks(w, grid)
    zero = MatForm1(grid, np.zeros_like(beta.ax), np.zeros_like(beta.ay))
    zero_o = MatForm1(grid, np.zeros_like(omega.ax), np.zeros_like(omega.ay))
    a0 = assemble_blocks(omega, zero, zero)
    a1 = assemble_blocks(zero_o, beta, theta)
    return LoopForm1(grid, 0, np.stack([a0.ax, a1.ax]), np.stack([a0.ay, a1.ay]))


SIGMA_S3 = np.diag([1.0, 1.0, -1.0, -1.0])


def flat_s3_setup() -> ThreeInvolutionSetup:
    """rho = complex conjugation, sigma-hat = Ad diag(1,1,-1,-1), tau-bar = identity.

    A family with degrees [0, 1] cannot be fixed by any tau-bar twist (it
    maps lam to -1/lam), so tau-bar here is only a placeholder that keeps the
    pair (rho, sigma-hat) in the three-involution interface.
    """
    return ThreeInvolutionSetup(complex_conjugation(), inner_involution(SIGMA_S3, "sigma-hat"),
                                identity_involution(4), 4)


def clifford_wave(grid: Grid) -> WaveData:
    return WaveData(np.full(grid.nx, np.pi / 2), np.zeros(grid.ny))


def clifford_immersion(x, y) -> np.ndarray:
    """Closed-form flat torus ``(cos(x+y), sin(x+y), cos(y-x), sin(y-x)) / sqrt 2``."""
    u, v = x + y, y - x
    return np.stack([np.cos(u), np.sin(u), np.cos(v), np.sin(v)], axis=-1) / np.sqrt(2)


def clifford_frame(x, y) -> np.ndarray:
    """Adapted frame ``[e1 e2 n f]`` of the Clifford torus matching the builder."""
    u, v = np.asarray(x + y, float), np.asarray(y - x, float)
    z = np.zeros_like(u)
    r = 1 / np.sqrt(2)
    e1 = np.stack([-np.sin(u), np.cos(u), z, z], axis=-1)
    e2 = np.stack([z, z, -np.sin(v), np.cos(v)], axis=-1)
    n = np.stack([-r * np.cos(u), -r * np.sin(u), r * np.cos(v), r * np.sin(v)], axis=-1)
    f = clifford_immersion(x, y)
    return np.stack([e1, e2, n, f], axis=-1)


# --------------------------------------------------------------------------
# curves in S^2

S2_TAU = inner_involution([1.0, 1.0, -1.0], "tau-bar")
S2_P_BASIS = (np.array([[0.0, 0, 1], [0, 0, 0], [-1, 0, 0]]),)


@dataclass(frozen=True)
class SphereCurve:
    """Unit-speed curve on S^2 given by position, velocity and acceleration."""

    pos: Callable
    vel: Callable
    acc: Callable
    name: str = "curve"


def great_circle() -> SphereCurve:
    return SphereCurve(
        lambda t: np.stack([np.cos(t), np.sin(t), 0 * t], -1),
        lambda t: np.stack([-np.sin(t), np.cos(t), 0 * t], -1),
        lambda t: np.stack([-np.cos(t), -np.sin(t), 0 * t], -1),
        "great-circle")


def small_circle(latitude: float) -> SphereCurve:
    """Circle at polar angle ``latitude`` (radians from the north pole), unit speed."""
    r, z = np.sin(latitude), np.cos(latitude)
    if r <= 1e-6:
        raise InvalidInputError("small circle radius is degenerate")
    return SphereCurve(
        lambda t: np.stack([r * np.cos(t / r), r * np.sin(t / r), z + 0 * t], -1),
        lambda t: np.stack([-np.sin(t / r), np.cos(t / r), 0 * t], -1),
        lambda t: np.stack([-np.cos(t / r) / r, -np.sin(t / r) / r, 0 * t], -1),
        "small-circle")


def curve_frames(curve: SphereCurve, t, rotate: float = 0.0):
    """Frames ``[e, n, f]`` and their t-derivatives along the curve.

    ``rotate`` turns (e, n) by a constant angle, giving a non-adapted frame.
    """
    t = np.asarray(t, dtype=float)
    f, e, a = curve.pos(t), curve.vel(t), curve.acc(t)
    if np.abs(np.linalg.norm(f, axis=-1) - 1).max() > 1e-10:
        raise InvalidInputError("curve samples are not on the unit sphere")
    if np.abs(np.linalg.norm(e, axis=-1) - 1).max() > 1e-10:
        raise InvalidInputError("curve is not unit speed")
    n = np.cross(f, e)
    dn = np.cross(f, a)  # d(f x e) = e x e + f x e'
    c, s = np.cos(rotate), np.sin(rotate)
    E, N = c * e + s * n, -s * e + c * n
    dE, dN = c * a + s * dn, -s * a + c * dn
    F = np.stack([E, N, f], axis=-1)
    dF = np.stack([dE, dN, e], axis=-1)
    return F, dF


def build_s2_curve_example(t_samples, curve: SphereCurve | None = None, *,
                           rotate: float = 0.0, swap: bool = False):
    """Maurer-Cartan form of a frame along a curve on a 1D grid, plus the p basis.

    ``t_samples`` must be equally spaced. ``swap`` exchanges the e and n
    columns (another non-adapted frame).
    """
    t = np.asarray(t_samples, dtype=float)
    if t.ndim != 1 or len(t) < 2:
        raise InvalidInputError("need at least two t samples")
    h = np.diff(t)
    if np.abs(h - h[0]).max() > 1e-12 * max(1.0, abs(h[0])) or h[0] <= 0:
        raise InvalidInputError("t samples must be increasing and equally spaced")
    F, dF = curve_frames(curve or great_circle(), t, rotate)
    if swap:
        F, dF = F[..., [1, 0, 2]], dF[..., [1, 0, 2]]
    alpha = np.swapaxes(F, -1, -2) @ dF
    grid = Grid(len(t), 1, float(t[0]), 0.0, float(h[0]), 1.0)
    ax = alpha[:, None]
    return MatForm1(grid, ax, np.zeros_like(ax)), S2_P_BASIS, F[:, None]


# --------------------------------------------------------------------------
# vacuum solutions of the three-involution system

def default_vacuum_setup() -> ThreeInvolutionSetup:
    """rho = conj, sigma-hat = Ad of the swap (12)(34), tau-bar = Ad of (13)(24)."""
    P = np.eye(4)[[1, 0, 3, 2]]
    Q = np.eye(4)[[2, 3, 0, 1]]
    return ThreeInvolutionSetup(complex_conjugation(), Involution("conjugation", P, "sigma-hat"),
                                Involution("conjugation", Q, "tau-bar"), 4)


def default_vacuum_seeds():
    """Diagonal commuting seeds fixed by the default setup's three twists."""
    def seeds(a, p, q):
        return {-1: np.diag([-q, q, -p, p]), 0: a * np.eye(4), 1: np.diag([p, -p, q, -q])}
    return seeds(0.2, 0.5, -0.3), seeds(-0.1, 0.25, 0.4)


@dataclass(frozen=True)
class VacuumFamily:
    form: LoopForm1
    A: LoopPoly = field(repr=False)
    B: LoopPoly = field(repr=False)
    twist: dict = field(default_factory=dict)

    def closed_form(self, lam, F0=None) -> np.ndarray:
        """``F0 exp(x A(lam) + y B(lam))`` at every node."""
        X, Y = self.form.grid.mesh()
        G = X[..., None, None] * self.A(lam) + Y[..., None, None] * self.B(lam)
        E = mat_exp(G)
        return E if F0 is None else np.asarray(F0) @ E


def build_vacuum_family(setup: ThreeInvolutionSetup, A_seeds: dict, B_seeds: dict,
                        grid: Grid, tol: float = 1e-12) -> VacuumFamily:
    """``alpha = A(lam) dx + B(lam) dy`` with constant commuting Laurent coefficients."""
    for s in (A_seeds, B_seeds):
        if set(s) - {-1, 0, 1}:
            raise InvalidInputError("vacuum seeds have degrees -1, 0, 1 only")
    full = {k: np.zeros((setup.n, setup.n)) for k in (-1, 0, 1)}
    A = LoopPoly.from_dict({**full, **A_seeds})
    B = LoopPoly.from_dict({**full, **B_seeds})
    if A.dim != setup.n:
        raise InvalidInputError(f"seeds are {A.dim}x{A.dim}, setup is {setup.n}x{setup.n}")
    comm = A @ B - B @ A
    c = float(np.max(frob(comm.coeffs)))
    if c > tol:
        raise NotAVacuumError(f"[A(lam), B(lam)] has coefficient norm {c:.3e}")
    twist = {}
    for name, P in (("A", A), ("B", B)):
        for t, r in require_twists(P, setup, tol).items():
            twist[t] = max(twist.get(t, 0.0), r)
    shape = (3, grid.nx, grid.ny, setup.n, setup.n)
    ax = np.broadcast_to(A.coeffs[:, None, None], shape).copy()
    ay = np.broadcast_to(B.coeffs[:, None, None], shape).copy()
    return VacuumFamily(LoopForm1(grid, -1, ax, ay), A, B, twist)


# --------------------------------------------------------------------------

def twist_report(alpha: LoopForm1, setup: ThreeInvolutionSetup, lam_samples=None) -> dict:
    return {t: max(twist_residual((alpha.lo, alpha.ax), t, setup, lam_samples),
                   twist_residual((alpha.lo, alpha.ay), t, setup, lam_samples))
            for t in TWISTS}


def reality_report(alpha: LoopForm1, setup: ThreeInvolutionSetup, lam_samples=None) -> dict:
    """Distance of ``alpha(lam)`` to the real form of each lambda range, all nodes.

    ``lam_samples`` may map a range name to its sample list.
    """
    out = {}
    for rng in RANGES:
        samples = None if lam_samples is None else lam_samples.get(rng)
        out[rng] = max(reality_range_residual((alpha.lo, alpha.ax), rng, setup, samples),
                       reality_range_residual((alpha.lo, alpha.ay), rng, setup, samples))
    return out
