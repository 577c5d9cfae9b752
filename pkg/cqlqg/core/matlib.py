"""Dense real-matrix utilities shared by the rest of the package.

Everything here is a pure function on numpy arrays. Matrices are float64 and
vectorization is column-wise (Fortran order), so that
vec(A X + X A^T) = (I kron A + A kron I) vec(X).
"""

from collections import namedtuple
from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla

from .exceptions import DimensionError, NumericalError, NoUniqueSolutionError, PreconditionError

J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])

HURWITZ_MARGIN = 1e-9
SYMMETRY_TOL = 1e-10

VecMap = namedtuple("VecMap", ["vec", "unvec"])


@dataclass(frozen=True)
class LyapunovSolution:
    X: np.ndarray
    residual_norm: float

    def relative_residual(self, A: np.ndarray, W: np.ndarray) -> float:
        scale = np.linalg.norm(A) * np.linalg.norm(self.X) + np.linalg.norm(W)
        return self.residual_norm / scale if scale > 0 else self.residual_norm


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Converts to a 2D float array and rejects NaN/Inf entries"""
    M = np.array(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2 dimensional, got {M.ndim} dimensions")
    if not np.all(np.isfinite(M)):
        raise NumericalError(f"{name} has non-finite entries")
    return M


def check_square(M: np.ndarray, name: str = "matrix") -> int:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    return M.shape[0]


def sym(M: np.ndarray) -> np.ndarray:
    return (M + M.T) / 2


def asym(M: np.ndarray) -> np.ndarray:
    return (M - M.T) / 2


def split_sym_asym(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Returns the symmetric and antisymmetric parts (S, K) with S + K = M"""
    M = np.asarray(M, dtype=float)
    check_square(M)
    return sym(M), asym(M)


def ccr_block(n: int) -> np.ndarray:
    """Standard CCR matrix I_{n/2} kron J of even order n"""
    if int(n) != n or n < 2 or n % 2:
        raise DimensionError(f"CCR matrix order must be even and positive, got {n}")
    return np.kron(np.eye(int(n) // 2), J2)


def is_ccr_matrix(theta: np.ndarray, tol: float = 1e-12) -> bool:
    """Antisymmetric with theta^2 = -I"""
    n = check_square(theta)
    return (
        np.linalg.norm(theta + theta.T) <= tol
        and np.linalg.norm(theta @ theta + np.eye(n)) <= tol
    )


def spectral_abscissa(M: np.ndarray) -> tuple[float, np.ndarray]:
    check_square(M)
    try:
        eigs = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as err:
        raise NumericalError(
            f"Eigenvalue iteration failed: {err}",
            diagnostics={"norm": float(np.linalg.norm(M)), "shape": M.shape},
        )
    return float(np.max(eigs.real)), eigs


def is_hurwitz(M: np.ndarray, margin: float = HURWITZ_MARGIN) -> tuple[bool, float]:
    """Returns (verdict, spectral abscissa); verdict is abscissa < -margin"""
    if margin < 0:
        raise PreconditionError(f"Hurwitz margin must be nonnegative, got {margin}")
    alpha, _ = spectral_abscissa(np.asarray(M, dtype=float))
    return alpha < -margin, alpha


def vec(M: np.ndarray) -> np.ndarray:
    return np.reshape(M, -1, order="F")


def unvec(x: np.ndarray, rows: int, cols: int = None) -> np.ndarray:
    if cols is None:
        cols = x.size // rows
    if rows * cols != x.size:
        raise DimensionError(f"Cannot reshape {x.size} entries into {rows}x{cols}")
    return np.reshape(x, (rows, cols), order="F")


def kron_sum(M: np.ndarray) -> np.ndarray:
    """M (+) M = I kron M + M kron I"""
    n = check_square(M)
    eye = np.eye(n)
    return np.kron(eye, M) + np.kron(M, eye)


def vec_and_kron_sum(M: np.ndarray) -> tuple[VecMap, np.ndarray]:
    n = check_square(np.asarray(M))
    return VecMap(vec, lambda x: unvec(x, n, n)), kron_sum(np.asarray(M, dtype=float))


def _lyapunov_kron(A: np.ndarray, W: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    K = kron_sum(A)
    try:
        x = np.linalg.solve(K, -vec(W))
    except np.linalg.LinAlgError as err:
        raise NoUniqueSolutionError(
            f"Lyapunov operator is singular: {err}",
            diagnostics={"cond": float(np.linalg.cond(K))},
        )
    return unvec(x, n, n)


def _lyapunov_schur(A: np.ndarray, W: np.ndarray) -> np.ndarray:
    # scipy solves A X + X A^H = Q
    try:
        return spla.solve_continuous_lyapunov(A, -W)
    except (np.linalg.LinAlgError, ValueError) as err:
        raise NoUniqueSolutionError(f"Bartels-Stewart solver failed: {err}")


def solve_lyapunov(
    A: np.ndarray,
    W: np.ndarray,
    method: str = "kron",
    check_hurwitz: bool = True,
    margin: float = 0.0,
) -> LyapunovSolution:
    """Solves A X + X A^T + W = 0 for X.

    The dual equation A^T Q + Q A + W = 0 is obtained by passing A^T. A symmetric
    forcing term gives a symmetric solution, which is explicitly symmetrized.
    """
    A = np.asarray(A, dtype=float)
    W = np.asarray(W, dtype=float)
    n = check_square(A, "A")
    if W.shape != (n, n):
        raise DimensionError(f"W must be {n}x{n}, got {W.shape}")
    if check_hurwitz:
        ok, alpha = is_hurwitz(A, margin)
        if not ok:
            raise NoUniqueSolutionError(
                f"A is not Hurwitz (spectral abscissa {alpha:.3e})",
                diagnostics={"spectral_abscissa": alpha},
            )

    if method == "kron":
        X = _lyapunov_kron(A, W)
    elif method == "schur":
        X = _lyapunov_schur(A, W)
    else:
        raise PreconditionError(f"Unknown Lyapunov method {method}")

    if np.allclose(W, W.T, rtol=0, atol=SYMMETRY_TOL * (1 + np.abs(W).max())):
        X = sym(X)
    residual = np.linalg.norm(A @ X + X @ A.T + W)
    return LyapunovSolution(X=X, residual_norm=float(residual))


def symplectic_residual(S: np.ndarray, theta: np.ndarray) -> float:
    """||S theta S^T - theta|| (Frobenius)"""
    return float(np.linalg.norm(S @ theta @ S.T - theta))


def symplectic_exp(theta2: np.ndarray, phi: np.ndarray, lam: float) -> np.ndarray:
    """exp(lam * theta2 @ phi), a symplectic matrix for symmetric phi"""
    phi = np.asarray(phi, dtype=float)
    n = check_square(phi, "phi")
    if theta2.shape != (n, n):
        raise DimensionError(f"theta2 must be {n}x{n}, got {theta2.shape}")
    if np.linalg.norm(phi - phi.T) > SYMMETRY_TOL * (1 + np.linalg.norm(phi)):
        raise PreconditionError("phi must be symmetric")
    return spla.expm(lam * (theta2 @ sym(phi)))


def sym_basis(n: int) -> list[np.ndarray]:
    """Orthonormal basis of the symmetric n x n matrices: E_ii and (E_ij + E_ji)/sqrt(2)"""
    basis = []
    for i in range(n):
        for j in range(i, n):
            S = np.zeros((n, n))
            if i == j:
                S[i, i] = 1.0
            else:
                S[i, j] = S[j, i] = 1.0 / np.sqrt(2.0)
            basis.append(S)
    return basis


def sym_coords(S: np.ndarray) -> np.ndarray:
    """Coordinates of a symmetric matrix in the sym_basis ordering"""
    n = S.shape[0]
    iu = np.triu_indices(n)
    weights = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
    return S[iu] * weights


def sym_from_coords(x: np.ndarray, n: int) -> np.ndarray:
    iu = np.triu_indices(n)
    weights = np.where(iu[0] == iu[1], 1.0, 1.0 / np.sqrt(2.0))
    S = np.zeros((n, n))
    S[iu] = x * weights
    return S + np.triu(S, 1).T
