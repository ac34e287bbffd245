"""Small dense matrices: exponential, involutions and membership residuals.

Matrices are plain numpy arrays. Most functions accept stacks of matrices
with shape ``(..., n, n)`` so that whole grids can be processed at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

MAX_DIM = 16

# Taylor degree for the scaled exponential; with ||A/2^s|| <= 1/2 the
# truncation term is below 1e-20.
_TAYLOR_DEGREE = 18
_SCALE_TARGET = 0.5


def as_mat(X, *, square=True) -> np.ndarray:
    """Validate and return ``X`` as a float64 or complex128 array."""
    A = np.asarray(X)
    if A.dtype.kind not in "fc":
        A = A.astype(np.float64)
    elif A.dtype.kind == "f":
        A = A.astype(np.float64, copy=False)
    else:
        A = A.astype(np.complex128, copy=False)
    if A.ndim < 2:
        raise InvalidInputError(f"expected a matrix, got shape {A.shape}")
    if square and A.shape[-1] != A.shape[-2]:
        raise InvalidInputError(f"matrix must be square, got {A.shape[-2:]}")
    if max(A.shape[-2:]) > MAX_DIM:
        raise InvalidInputError(f"matrix dimension {A.shape[-2:]} exceeds {MAX_DIM}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    return A


def frob(X) -> np.ndarray:
    """Frobenius norm over the last two axes."""
    return np.sqrt(np.sum(np.abs(X) ** 2, axis=(-2, -1)))


def mat_exp(A) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Taylor core.

    Works on a single matrix or a stack ``(..., n, n)``; each matrix gets its
    own scaling exponent.
    """
    A = as_mat(A)
    n = A.shape[-1]
    norms = np.max(np.sum(np.abs(A), axis=-2), axis=-1)  # 1-norm
    with np.errstate(divide="ignore"):
        s = np.where(norms > _SCALE_TARGET,
                     np.ceil(np.log2(np.maximum(norms, 1e-300) / _SCALE_TARGET)), 0)
    s = s.astype(int)
    B = A / (2.0 ** s)[..., None, None]

    eye = np.broadcast_to(np.eye(n, dtype=A.dtype), A.shape)
    result = eye.copy()
    term = eye.copy()
    for k in range(1, _TAYLOR_DEGREE + 1):
        term = term @ B / k
        result = result + term

    smax = int(s.max()) if s.size else 0
    for k in range(smax):
        mask = s > k
        if A.ndim == 2:
            result = result @ result
        else:
            result[mask] = result[mask] @ result[mask]
    return result


@dataclass(frozen=True)
class Involution:
    """An (anti)linear involution of a matrix algebra, stored extensionally.

    ``kind`` is ``"conjugation"`` (X -> C X C^-1), ``"complex-conjugation"``
    (X -> conj X) or ``"composition"`` (X -> C conj(X) C^-1).
    """

    kind: str
    conjugator: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("conjugation", "complex-conjugation", "composition"):
            raise InvalidInputError(f"unknown involution kind {self.kind!r}")
        if self.kind != "complex-conjugation":
            if self.conjugator is None:
                raise InvalidInputError(f"{self.kind} involution needs a conjugator")
            C = as_mat(self.conjugator)
            object.__setattr__(self, "conjugator", C)
            object.__setattr__(self, "_inv", np.linalg.inv(C))

    @property
    def antilinear(self) -> bool:
        return self.kind != "conjugation"

    @property
    def dim(self) -> int | None:
        return None if self.conjugator is None else self.conjugator.shape[0]

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X)
        if self.dim is not None and X.shape[-2:] != (self.dim, self.dim):
            raise InvalidInputError(
                f"involution acts on {self.dim}x{self.dim}, got {X.shape[-2:]}")
        if self.antilinear:
            X = np.conj(X)
        if self.kind == "complex-conjugation":
            return X
        return self.conjugator @ X @ self._inv

    __call__ = apply

    def compose(self, other: "Involution", n: int | None = None) -> "Involution":
        """Return ``self o other``; the caller is responsible for commutation."""
        anti = self.antilinear != other.antilinear
        n = n or self.dim or other.dim
        if n is None:
            raise InvalidInputError("composition of two conjugations needs n")
        C1 = np.eye(n) if self.conjugator is None else self.conjugator
        C2 = np.eye(n) if other.conjugator is None else other.conjugator
        # self(other(X)) with other(X) = C2 X' C2^-1 (X' = conj X if antilinear)
        C = C1 @ (np.conj(C2) if self.antilinear else C2)
        name = f"{self.name}*{other.name}" if self.name and other.name else ""
        if anti:
            return Involution("composition", C, name)
        return Involution("conjugation", C, name)


def identity_involution(n: int) -> Involution:
    return Involution("conjugation", np.eye(n), "id")


def inner_involution(diag_or_matrix, name: str = "") -> Involution:
    C = np.asarray(diag_or_matrix, dtype=float)
    if C.ndim == 1:
        C = np.diag(C)
    return Involution("conjugation", C, name)


def complex_conjugation(name: str = "rho") -> Involution:
    return Involution("complex-conjugation", None, name)


def fixed_point_project(sigma: Involution, X) -> np.ndarray:
    """Projection ``(X + sigma X)/2`` onto the +1 eigenspace of ``sigma``."""
    X = as_mat(X)
    return 0.5 * (X + sigma.apply(X))


def anti_fixed_project(sigma: Involution, X) -> np.ndarray:
    """Complementary projection ``(X - sigma X)/2`` onto the -1 eigenspace."""
    X = as_mat(X)
    return 0.5 * (X - sigma.apply(X))


def commutation_residual(s1: Involution, s2: Involution, n: int, trials: int = 3,
                         seed: int = 0) -> float:
    """max ||s1 s2 X - s2 s1 X|| over seeded random complex X."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        d = s1.apply(s2.apply(X)) - s2.apply(s1.apply(X))
        worst = max(worst, float(frob(d)))
    return worst


def _orthonormal_basis(basis) -> np.ndarray:
    """Orthonormalise matrices w.r.t. the real Frobenius inner product.

    Complex matrices are treated as real vectors of twice the length so that
    the span is a real subspace, which is what the fixed-point sets are.
    """
    B = np.asarray([as_mat(b) for b in basis])
    flat = B.reshape(len(B), -1)
    if np.iscomplexobj(flat):
        flat = np.concatenate([flat.real, flat.imag], axis=1)
    q, r = np.linalg.qr(flat.T)
    keep = np.abs(np.diag(r)) > 1e-12
    return q[:, keep].T


def subspace_distance(X, basis) -> np.ndarray:
    """Frobenius distance from ``X`` (or a stack) to the real span of ``basis``."""
    X = np.asarray(X)
    Q = _orthonormal_basis(basis)
    lead = X.shape[:-2]
    flat = X.reshape(lead + (-1,))
    if np.iscomplexobj(flat) or Q.shape[1] != flat.shape[-1]:
        flat = np.concatenate([flat.real, np.imag(flat)], axis=-1)
        if Q.shape[1] != flat.shape[-1]:
            Q = np.concatenate([Q, np.zeros_like(Q)], axis=1)
    coords = flat @ Q.T
    resid = flat - coords @ Q
    return np.sqrt(np.sum(resid ** 2, axis=-1))


def algebra_residual(X, algebra: str = "skew", *, blocks=None, basis=None) -> float:
    """Distance from ``X`` to a named matrix subspace.

    ``algebra`` is ``"skew"``, ``"skew-block"`` (needs ``blocks=(p, q)``;
    skew matrices that are block diagonal with blocks p and q) or
    ``"subspace-span"`` (needs ``basis``). Stacks return the maximum.
    """
    X = as_mat(X)
    if algebra == "skew":
        d = frob(0.5 * (X + np.swapaxes(X, -1, -2)))
    elif algebra == "skew-block":
        if blocks is None:
            raise InvalidInputError("skew-block needs blocks=(p, q)")
        p, q = blocks
        if p + q != X.shape[-1]:
            raise InvalidInputError(f"blocks {blocks} do not fit dimension {X.shape[-1]}")
        sym = 0.5 * (X + np.swapaxes(X, -1, -2))
        skew = X - sym
        off = np.zeros_like(X)
        off[..., :p, p:] = skew[..., :p, p:]
        off[..., p:, :p] = skew[..., p:, :p]
        d = np.sqrt(frob(sym) ** 2 + frob(off) ** 2)
    elif algebra == "subspace-span":
        if basis is None or len(basis) == 0:
            raise InvalidInputError("subspace-span needs a non-empty basis")
        d = subspace_distance(X, basis)
    else:
        raise InvalidInputError(f"unknown algebra tag {algebra!r}")
    return float(np.max(d))
