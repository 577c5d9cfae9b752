"""Closed-loop assembly, Gramians and the LQG cost"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla

from .config import config
from .exceptions import DimensionError, NumericalError, UnstableSystemError
from .matlib import HURWITZ_MARGIN, solve_lyapunov, spectral_abscissa, vec_and_kron_sum
from .model import ControllerParams, ControllerRealization, PlantModel, realize_controller


@dataclass(eq=False)
class ClosedLoopSystem:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    theta: np.ndarray
    J: np.ndarray
    hurwitz: bool
    spectral_abscissa: float
    eigenvalues: np.ndarray
    n: int

    def sorted_eigenvalues(self) -> np.ndarray:
        """Eigenvalues ordered by real part then imaginary part"""
        eigs = self.eigenvalues
        return eigs[np.lexsort((eigs.imag, eigs.real))]


@dataclass(eq=False)
class GramianSet:
    P: np.ndarray
    Q: np.ndarray
    H: np.ndarray
    n: int
    P_residual: float = 0.0
    Q_residual: float = 0.0

    def block(self, name: str, i: int, j: int) -> np.ndarray:
        """n x n block (i, j), 1-based, of P, Q or H"""
        X = getattr(self, name)
        n = self.n
        return X[(i - 1) * n : i * n, (j - 1) * n : j * n]


@dataclass(frozen=True)
class CostValue:
    value: float
    stabilizing: bool

    @classmethod
    def unstable(cls) -> "CostValue":
        return cls(value=float("inf"), stabilizing=False)

    def __float__(self) -> float:
        return self.value


def assemble(
    plant: PlantModel, real: ControllerRealization, margin: float = HURWITZ_MARGIN
) -> ClosedLoopSystem:
    """Closed-loop matrices of the plant in feedback with the controller realization"""
    n = plant.n
    if real.a.shape != (n, n) or real.c.shape != (plant.p2, n):
        raise DimensionError(
            f"Controller realization (a {real.a.shape}, c {real.c.shape}) does not fit plant order {n}"
        )
    if real.e.shape != (n, plant.p1) or real.b.shape != (n, plant.m2):
        raise DimensionError(
            f"Controller gains (b {real.b.shape}, e {real.e.shape}) do not fit the plant"
        )
    A = np.block([[plant.A, plant.E @ real.c], [real.e @ plant.C, real.a]])
    B = np.block([[plant.B, plant.E @ real.d], [real.e @ plant.D, real.b]])
    C = np.hstack([plant.F, plant.G @ real.c])
    theta = spla.block_diag(plant.theta1, plant.theta2)
    J = spla.block_diag(plant.J1, plant.J2)
    alpha, eigs = spectral_abscissa(A)
    return ClosedLoopSystem(
        A=A,
        B=B,
        C=C,
        theta=theta,
        J=J,
        hurwitz=alpha < -margin,
        spectral_abscissa=alpha,
        eigenvalues=eigs,
        n=n,
    )


def closed_loop(
    plant: PlantModel, u: ControllerParams, margin: float = HURWITZ_MARGIN
) -> tuple[ControllerRealization, ClosedLoopSystem]:
    real = realize_controller(plant, u)
    return real, assemble(plant, real, margin=margin)


def gramians(sys: ClosedLoopSystem, tol: float = 1e-8, method: str = None) -> GramianSet:
    """Controllability and observability Gramians and the Hankelian H = QP"""
    if not sys.hurwitz:
        raise UnstableSystemError(
            f"Closed loop is not Hurwitz (spectral abscissa {sys.spectral_abscissa:.3e})",
            spectral_abscissa=sys.spectral_abscissa,
        )
    if method is None:
        method = config.lyapunov_method

    BB = sys.B @ sys.B.T
    CC = sys.C.T @ sys.C
    P = solve_lyapunov(sys.A, BB, method=method, check_hurwitz=False)
    Q = solve_lyapunov(sys.A.T, CC, method=method, check_hurwitz=False)
    for name, sol, W, A in (("P", P, BB, sys.A), ("Q", Q, CC, sys.A.T)):
        rel = sol.relative_residual(A, W)
        if rel > tol:
            raise NumericalError(
                f"Gramian {name} residual {rel:.3e} exceeds {tol:.1e}",
                diagnostics={"relative_residual": rel, "spectral_abscissa": sys.spectral_abscissa},
            )
    return GramianSet(
        P=P.X, Q=Q.X, H=Q.X @ P.X, n=sys.n, P_residual=P.residual_norm, Q_residual=Q.residual_norm
    )


def lqg_cost(
    plant: PlantModel, u: ControllerParams, margin: float = HURWITZ_MARGIN, method: str = None
) -> CostValue:
    """Steady-state LQG cost; +inf for controllers that do not stabilize the plant"""
    _, sys = closed_loop(plant, u, margin)
    if not sys.hurwitz:
        return CostValue.unstable()
    gram = gramians(sys, method=method)
    return CostValue(value=0.5 * float(np.sum((sys.C.T @ sys.C) * gram.P)), stabilizing=True)


def lqg_cost_vectorized(
    plant: PlantModel, u: ControllerParams, margin: float = HURWITZ_MARGIN
) -> CostValue:
    """The same cost through the Kronecker sum of the closed-loop matrix"""
    _, sys = closed_loop(plant, u, margin)
    if not sys.hurwitz:
        raise UnstableSystemError(
            "Vectorized cost requires a stabilizing controller",
            spectral_abscissa=sys.spectral_abscissa,
        )
    vm, K = vec_and_kron_sum(sys.A)
    x = np.linalg.solve(K, vm.vec(sys.B @ sys.B.T))
    return CostValue(value=float(-0.5 * vm.vec(sys.C.T @ sys.C) @ x), stabilizing=True)


def cost_identities(sys: ClosedLoopSystem, gram: GramianSet) -> dict:
    """Three expressions of the cost that agree at any stabilizing point"""
    return {
        "output": 0.5 * float(np.sum((sys.C.T @ sys.C) * gram.P)),
        "input": 0.5 * float(np.sum(gram.Q * (sys.B @ sys.B.T))),
        "hankelian": -float(np.sum(gram.H * sys.A)),
    }


def ccr_preservation_residual(sys: ClosedLoopSystem) -> float:
    return float(np.linalg.norm(sys.A @ sys.theta + sys.theta @ sys.A.T + sys.B @ sys.J @ sys.B.T))


def covariance_positivity(
    gram: GramianSet, theta: np.ndarray, tol: float = 1e-9
) -> tuple[float, bool]:
    """Smallest eigenvalue of the quantum covariance matrix P + i theta"""
    min_eig = float(spla.eigvalsh(gram.P + 1j * theta)[0])
    return min_eig, min_eig >= -tol
