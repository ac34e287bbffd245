"""Laurent polynomials in the spectral parameter with matrix coefficients.

A loop-algebra element ``sum_{k=lo}^{hi} a_k lam^k`` is stored as a
coefficient array of shape ``(hi - lo + 1, ..., n, n)``; the extra leading
axes let one polynomial carry a whole grid of matrices.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, PoleError, TwistError
from .matrix import Involution, as_mat, commutation_residual, frob

TWISTS = ("rho", "sigma-hat", "tau-bar")
RANGES = ("real-axis", "imaginary-axis", "unit-circle")

_GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


def eval_coeffs(coeffs, lo: int, lam) -> np.ndarray:
    """Horner evaluation of ``sum_k coeffs[k - lo] lam^k``."""
    coeffs = np.asarray(coeffs)
    lam = complex(lam) if np.iscomplexobj(lam) else lam
    if lam == 0:
        if lo < 0:
            raise PoleError("evaluation at lambda = 0 with negative degrees")
        if lo > 0:
            return np.zeros_like(coeffs[0])
        return coeffs[0].copy()
    if isinstance(lam, complex) and lam.imag == 0.0 and not np.iscomplexobj(coeffs):
        lam = lam.real
    acc = coeffs[-1] * 1
    for c in coeffs[-2::-1]:
        acc = acc * lam + c
    if lo != 0:
        acc = acc * lam ** lo
    return acc


@dataclass(frozen=True)
class LoopPoly:
    """``sum_{k=lo}^{hi} coeffs[k-lo] lam^k`` with square matrix coefficients."""

    lo: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = as_mat(np.asarray(self.coeffs))
        if c.ndim < 3:
            raise InvalidInputError("coeffs must be a sequence of matrices")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_dict(cls, terms: dict) -> "LoopPoly":
        """Build from ``{degree: matrix}``; missing degrees are zero."""
        lo, hi = min(terms), max(terms)
        first = np.asarray(terms[lo])
        dtype = np.result_type(*[np.asarray(v) for v in terms.values()], np.float64)
        c = np.zeros((hi - lo + 1,) + first.shape, dtype=dtype)
        for k, v in terms.items():
            c[k - lo] = v
        return cls(lo, c)

    @property
    def hi(self) -> int:
        return self.lo + len(self.coeffs) - 1

    @property
    def dim(self) -> int:
        return self.coeffs.shape[-1]

    def coeff(self, k: int) -> np.ndarray:
        if self.lo <= k <= self.hi:
            return self.coeffs[k - self.lo]
        return np.zeros_like(self.coeffs[0])

    def __call__(self, lam) -> np.ndarray:
        return eval_coeffs(self.coeffs, self.lo, lam)

    eval = __call__

    def _widen(self, lo, hi):
        c = np.zeros((hi - lo + 1,) + self.coeffs.shape[1:], dtype=self.coeffs.dtype)
        c[self.lo - lo:self.hi - lo + 1] = self.coeffs
        return c

    def __add__(self, other: "LoopPoly") -> "LoopPoly":
        lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        return LoopPoly(lo, self._widen(lo, hi) + other._widen(lo, hi))

    def __sub__(self, other: "LoopPoly") -> "LoopPoly":
        return self + other.scale(-1.0)

    def scale(self, s) -> "LoopPoly":
        return LoopPoly(self.lo, self.coeffs * s)

    def __matmul__(self, other: "LoopPoly") -> "LoopPoly":
        """Product by coefficient convolution."""
        m, k = len(self.coeffs), len(other.coeffs)
        dtype = np.result_type(self.coeffs, other.coeffs)
        out = np.zeros((m + k - 1,) + np.broadcast_shapes(
            self.coeffs.shape[1:], other.coeffs.shape[1:]), dtype=dtype)
        for i in range(m):
            for j in range(k):
                out[i + j] += self.coeffs[i] @ other.coeffs[j]
        return LoopPoly(self.lo + other.lo, out)

    __mul__ = __matmul__

    def map_coeffs(self, fn) -> "LoopPoly":
        return LoopPoly(self.lo, np.asarray([fn(c) for c in self.coeffs]))

    @classmethod
    def interpolate(cls, lams, values, lo: int, hi: int) -> "LoopPoly":
        """Recover coefficients in degrees ``[lo, hi]`` from values at ``lams``."""
        lams = np.asarray(lams, dtype=complex)
        m = hi - lo + 1
        if len(lams) < m or len(set(lams.tolist())) < m:
            raise InvalidInputError(f"need {m} distinct samples, got {len(lams)}")
        if np.any(lams == 0) and lo < 0:
            raise PoleError("interpolation node at lambda = 0")
        V = lams[:, None] ** np.arange(lo, hi + 1)[None, :]
        vals = np.asarray(values)
        flat = vals.reshape(len(lams), -1)
        sol, *_ = np.linalg.lstsq(V, flat, rcond=None)
        c = sol.reshape((m,) + vals.shape[1:])
        if not np.iscomplexobj(vals) and np.all(np.isreal(lams)):
            c = c.real
        return cls(lo, c)


@dataclass(frozen=True)
class ThreeInvolutionSetup:
    """Pairwise commuting involutions ``rho`` (antilinear), ``sigma_hat``, ``tau_bar``."""

    rho: Involution
    sigma_hat: Involution
    tau_bar: Involution
    n: int
    tol: float = 1e-12

    def __post_init__(self):
        if not self.rho.antilinear:
            raise InvalidInputError("rho must be antilinear")
        if self.sigma_hat.antilinear or self.tau_bar.antilinear:
            raise InvalidInputError("sigma-hat and tau-bar must be complex linear")
        for name, inv in self.items():
            if inv.dim is not None and inv.dim != self.n:
                raise InvalidInputError(f"{name} acts on dimension {inv.dim}, not {self.n}")
        res = self.commutation_residuals()
        bad = {k: v for k, v in res.items() if v > self.tol}
        if bad:
            raise InvalidInputError(f"involutions do not commute: {bad}")
        rng = np.random.default_rng(1)
        X = rng.standard_normal((self.n, self.n)) + 1j * rng.standard_normal((self.n, self.n))
        for name, inv in self.items():
            if frob(inv.apply(inv.apply(X)) - X) > self.tol * max(1.0, float(frob(X))):
                raise InvalidInputError(f"{name} is not an involution")

    def items(self):
        return (("rho", self.rho), ("sigma-hat", self.sigma_hat), ("tau-bar", self.tau_bar))

    def get(self, twist: str) -> Involution:
        return dict(self.items())[twist]

    def commutation_residuals(self) -> dict:
        pairs = (("rho", "sigma-hat"), ("rho", "tau-bar"), ("sigma-hat", "tau-bar"))
        return {f"{a}|{b}": commutation_residual(self.get(a), self.get(b), self.n)
                for a, b in pairs}

    def range_involution(self, rng: str) -> Involution:
        """Combined involution whose fixed set holds ``X(lam)`` on a lambda range.

        Real lam: conj(lam) = lam, so X = rho X.  Imaginary lam: conj(lam) =
        -lam, so X(lam) = rho X(-lam) = rho sigma X(lam).  Unit circle:
        conj(lam) = 1/lam and X(1/lam) = tau X(-lam) = tau sigma X(lam), so
        X = rho tau sigma X.
        """
        if rng == "real-axis":
            return self.rho
        if rng == "imaginary-axis":
            return self.rho.compose(self.sigma_hat, self.n)
        if rng == "unit-circle":
            return self.rho.compose(self.tau_bar.compose(self.sigma_hat, self.n), self.n)
        raise InvalidInputError(f"unknown lambda range {rng!r}")


def residual_degrees(lo: int, hi: int) -> range:
    """Degrees reached by ``d a_k`` and ``a_i ^ a_j``; ``[2lo, 2hi]`` when lo <= 0 <= hi."""
    return range(min(lo, 2 * lo), max(hi, 2 * hi) + 1)


def default_samples(lo: int, hi: int, curve: str = "generic") -> list:
    """One sample per residual degree (at least 3), moduli in [1/2, 2]."""
    m = max(len(residual_degrees(lo, hi)), 3)
    radii = np.geomspace(0.5, 2.0, m)
    signs = np.where(np.arange(m) % 2 == 0, 1.0, -1.0)
    if curve == "generic":
        ang = 0.3 + _GOLDEN_ANGLE * np.arange(m)
        pts = radii * np.exp(1j * ang)
    elif curve == "real-axis":
        pts = radii * signs
    elif curve == "imaginary-axis":
        pts = 1j * radii * signs
    elif curve == "unit-circle":
        pts = np.exp(1j * (0.3 + 2 * np.pi * np.arange(m) / m))
    else:
        raise InvalidInputError(f"unknown sample curve {curve!r}")
    return [complex(p) if np.iscomplexobj(pts) else float(p) for p in pts]


def _resolve(involutions) -> ThreeInvolutionSetup | dict:
    if isinstance(involutions, ThreeInvolutionSetup):
        return involutions
    if isinstance(involutions, dict):
        return involutions
    rho, sig, tau = involutions
    return {"rho": rho, "sigma-hat": sig, "tau-bar": tau}


def _get(involutions, twist):
    inv = _resolve(involutions)
    if isinstance(inv, ThreeInvolutionSetup):
        return inv.get(twist)
    return inv[twist]


def twisted_eval(coeffs, lo: int, twist: str, inv: Involution, lam) -> np.ndarray:
    """Value at ``lam`` of the twisted-extended involution applied to the loop."""
    if twist == "rho":
        return inv.apply(eval_coeffs(coeffs, lo, np.conj(lam)))
    if twist == "sigma-hat":
        return inv.apply(eval_coeffs(coeffs, lo, -lam))
    if twist == "tau-bar":
        if lam == 0:
            raise PoleError("tau-bar twist sampled at lambda = 0")
        return inv.apply(eval_coeffs(coeffs, lo, -1.0 / lam))
    raise InvalidInputError(f"unknown twist {twist!r}")


def twist_residual(P, twist: str, involutions, lam_samples=None) -> float:
    """max over samples of ``||P(lam) - (twist P)(lam)||``.

    ``P`` is a :class:`LoopPoly` or a ``(lo, coeffs)`` pair; stacked
    coefficients are reduced by the maximum over the stack.
    """
    lo, coeffs = (P.lo, P.coeffs) if isinstance(P, LoopPoly) else P
    hi = lo + len(coeffs) - 1
    inv = _get(involutions, twist)
    if lam_samples is None:
        lam_samples = default_samples(lo, hi)
    worst = 0.0
    for lam in lam_samples:
        if lam == 0:
            raise PoleError("twist residual sampled at lambda = 0")
        d = eval_coeffs(coeffs, lo, lam) - twisted_eval(coeffs, lo, twist, inv, lam)
        worst = max(worst, float(np.max(frob(d))))
    return worst


def reality_range_residual(P, rng: str, setup: ThreeInvolutionSetup, lam_samples=None) -> float:
    """max over samples on ``rng`` of the distance of ``P(lam)`` to the real form.

    The distance to the fixed set of the combined involution ``k`` is
    ``||X - kX|| / 2``, exact when ``k`` preserves the Frobenius norm.
    """
    lo, coeffs = (P.lo, P.coeffs) if isinstance(P, LoopPoly) else P
    hi = lo + len(coeffs) - 1
    kappa = setup.range_involution(rng)
    if lam_samples is None:
        lam_samples = default_samples(lo, hi, rng)
    worst = 0.0
    for lam in lam_samples:
        if lam == 0:
            raise PoleError("reality residual sampled at lambda = 0")
        X = eval_coeffs(coeffs, lo, lam)
        worst = max(worst, float(np.max(frob(X - kappa.apply(X)))) / 2)
    return worst


def require_twists(P, setup: ThreeInvolutionSetup, tol: float = 1e-12, twists=TWISTS) -> dict:
    """Compute twist residuals and raise :class:`TwistError` on the first failure."""
    out = {}
    for t in twists:
        r = twist_residual(P, t, setup)
        out[t] = r
        if r > tol:
            raise TwistError(f"{t} twist residual {r:.3e} exceeds {tol:g}", involution=t)
    return out
