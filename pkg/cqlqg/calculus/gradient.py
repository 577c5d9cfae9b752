"""First and second derivatives of the LQG cost with respect to u = (R, b, e).

Every derivative is computed in closed form from the closed-loop Gramians: the
gradient needs the two Gramians at u, and a derivative along a direction v needs two
more Lyapunov solves for the variations of the Gramians along v.
"""

from dataclasses import dataclass

import numpy as np

from ..core.config import config
from ..core.closedloop import ClosedLoopSystem, GramianSet, closed_loop, gramians, lqg_cost
from ..core.exceptions import UnstableSystemError
from ..core.matlib import HURWITZ_MARGIN, asym, solve_lyapunov, sym
from ..core.model import ControllerParams, ControllerRealization, GradientTriple, PlantModel, Triple


@dataclass(frozen=True, eq=False)
class GradientWorkspace:
    psi: np.ndarray
    chi: np.ndarray
    gramians: GramianSet
    realization: ControllerRealization
    sys: ClosedLoopSystem
    cost: float


@dataclass(frozen=True, eq=False)
class DirectionalVariation:
    """First-order variations of the closed loop along a direction v"""

    dA: np.ndarray
    dB: np.ndarray
    dC: np.ndarray
    da: np.ndarray
    dc: np.ndarray
    dP: np.ndarray
    dQ: np.ndarray
    dH: np.ndarray

    def block(self, name: str, i: int, j: int, n: int) -> np.ndarray:
        X = getattr(self, name)
        return X[(i - 1) * n : i * n, (j - 1) * n : j * n]


def gradient_workspace(
    plant: PlantModel, u: ControllerParams, margin: float, method: str
) -> GradientWorkspace:
    real, sys = closed_loop(plant, u, margin)
    if not sys.hurwitz:
        raise UnstableSystemError(
            f"Controller does not stabilize the plant (spectral abscissa {sys.spectral_abscissa:.3e})",
            spectral_abscissa=sys.spectral_abscissa,
        )
    gram = gramians(sys, method=method)

    theta2_inv = -plant.theta2
    P21, P22 = gram.block("P", 2, 1), gram.block("P", 2, 2)
    H12, H22 = gram.block("H", 1, 2), gram.block("H", 2, 2)
    GtG = plant.G.T @ plant.G

    psi = asym(H22 @ theta2_inv)
    chi = theta2_inv @ (H12.T @ plant.E + P21 @ plant.F.T @ plant.G + P22 @ real.c.T @ GtG)
    cost = 0.5 * float(np.sum((sys.C.T @ sys.C) * gram.P))
    return GradientWorkspace(psi=psi, chi=chi, gramians=gram, realization=real, sys=sys, cost=cost)


def gradient(
    plant: PlantModel,
    u: ControllerParams,
    margin: float = HURWITZ_MARGIN,
    method: str = None,
) -> tuple[GradientTriple, GradientWorkspace]:
    """Frechet derivative g(u) = (dE/dR, dE/db, dE/de) at a stabilizing u"""
    ws = gradient_workspace(plant, u, margin, method)
    gram, real = ws.gramians, ws.realization
    theta2, J2 = plant.theta2, plant.J2

    H21, H22 = gram.block("H", 2, 1), gram.block("H", 2, 2)
    Q21, Q22 = gram.block("Q", 2, 1), gram.block("Q", 2, 2)

    dR = -2 * sym(theta2 @ H22)
    db = Q21 @ plant.E @ plant.d + Q22 @ u.b - ws.psi @ u.b @ J2 - ws.chi @ plant.d @ J2
    de = (
        H21 @ plant.C.T
        + (Q21 @ plant.B + Q22 @ u.e @ plant.D) @ plant.D.T
        - ws.psi @ u.e @ plant.M1
    )
    return GradientTriple(dR, db, de), ws


def _variation_of_realization(plant: PlantModel, u: ControllerParams, v: Triple):
    theta2_inv = -plant.theta2
    J2, M1 = plant.J2, plant.M1
    dc = -plant.d @ J2 @ v.b.T @ theta2_inv
    da = 2 * plant.theta2 @ sym(v.R) - (
        asym(v.e @ M1 @ u.e.T) + asym(v.b @ J2 @ u.b.T)
    ) @ theta2_inv
    return da, dc


def directional_gramians(
    plant: PlantModel,
    u: ControllerParams,
    v: Triple,
    ws: GradientWorkspace = None,
    margin: float = HURWITZ_MARGIN,
    method: str = None,
) -> DirectionalVariation:
    """Variations of the Gramians and the Hankelian along v, from the differentiated Lyapunov equations"""
    if ws is None:
        ws = gradient_workspace(plant, u, margin, method)
    n = plant.n
    sys, gram = ws.sys, ws.gramians

    da, dc = _variation_of_realization(plant, u, v)
    zeros_n = np.zeros((n, n))
    dA = np.block([[zeros_n, plant.E @ dc], [v.e @ plant.C, da]])
    dB = np.block([[np.zeros((n, plant.m1)), np.zeros((n, plant.m2))], [v.e @ plant.D, v.b]])
    dC = np.hstack([np.zeros((plant.r_out, n)), plant.G @ dc])

    WP = 2 * sym(dA @ gram.P) + 2 * sym(dB @ sys.B.T)
    WQ = 2 * sym(gram.Q @ dA) + 2 * sym(sys.C.T @ dC)
    dP = solve_lyapunov(sys.A, WP, method=method or config.lyapunov_method, check_hurwitz=False).X
    dQ = solve_lyapunov(sys.A.T, WQ, method=method or config.lyapunov_method, check_hurwitz=False).X
    dH = dQ @ gram.P + gram.Q @ dP
    return DirectionalVariation(dA=dA, dB=dB, dC=dC, da=da, dc=dc, dP=dP, dQ=dQ, dH=dH)


def hessian_vector_product(
    plant: PlantModel,
    u: ControllerParams,
    v: Triple,
    ws: GradientWorkspace = None,
    margin: float = HURWITZ_MARGIN,
    method: str = None,
) -> GradientTriple:
    """Derivative of the gradient along v, i.e. the Hessian operator applied to v"""
    if ws is None:
        ws = gradient_workspace(plant, u, margin, method)
    n = plant.n
    var = directional_gramians(plant, u, v, ws=ws, method=method)
    gram, real = ws.gramians, ws.realization
    theta2, theta2_inv = plant.theta2, -plant.theta2
    J2, M1, E, d = plant.J2, plant.M1, plant.E, plant.d
    GtG = plant.G.T @ plant.G

    P22, Q21, Q22 = gram.block("P", 2, 2), gram.block("Q", 2, 1), gram.block("Q", 2, 2)
    dP21, dP22 = var.block("dP", 2, 1, n), var.block("dP", 2, 2, n)
    dQ21, dQ22 = var.block("dQ", 2, 1, n), var.block("dQ", 2, 2, n)
    dH12, dH21, dH22 = var.block("dH", 1, 2, n), var.block("dH", 2, 1, n), var.block("dH", 2, 2, n)

    d_psi = asym(dH22 @ theta2_inv)
    d_chi = theta2_inv @ (
        dH12.T @ E + dP21 @ plant.F.T @ plant.G + dP22 @ real.c.T @ GtG + P22 @ var.dc.T @ GtG
    )

    dR = -2 * sym(theta2 @ dH22)
    db = (
        dQ21 @ E @ d
        + dQ22 @ u.b
        + Q22 @ v.b
        - d_psi @ u.b @ J2
        - ws.psi @ v.b @ J2
        - d_chi @ d @ J2
    )
    de = (
        dH21 @ plant.C.T
        + (dQ21 @ plant.B + (dQ22 @ u.e + Q22 @ v.e) @ plant.D) @ plant.D.T
        - (d_psi @ u.e + ws.psi @ v.e) @ M1
    )
    return GradientTriple(dR, db, de)


def directional_second_derivative(
    plant: PlantModel,
    u: ControllerParams,
    v: Triple,
    ws: GradientWorkspace = None,
    margin: float = HURWITZ_MARGIN,
    method: str = None,
) -> float:
    """Second Gateaux derivative of the cost at u along v"""
    return hessian_vector_product(plant, u, v, ws=ws, margin=margin, method=method).inner(v)


def fd_second_derivative(
    plant: PlantModel,
    u: ControllerParams,
    v: Triple,
    step: float = 1e-5,
    margin: float = HURWITZ_MARGIN,
    cost_u: float = None,
    method: str = None,
) -> float:
    """Second central difference of s -> E(u + s v), scaled to the sizes of u and v"""
    h = step * (1 + u.norm()) / (1 + v.norm())
    if cost_u is None:
        cost_u = lqg_cost(plant, u, margin, method).value
    plus = lqg_cost(plant, u + h * v, margin, method).value
    minus = lqg_cost(plant, u - h * v, margin, method).value
    if not (np.isfinite(plus) and np.isfinite(minus)):
        raise UnstableSystemError("Finite-difference stencil leaves the stabilizing set")
    return (plus - 2 * cost_u + minus) / h**2


def hessian_quadratic_form(
    plant: PlantModel,
    u: ControllerParams,
    v: Triple,
    w: Triple,
    ws: GradientWorkspace = None,
    margin: float = HURWITZ_MARGIN,
    method: str = None,
) -> float:
    """<Hessian(u) v, w> by polarization of the second derivative"""
    if ws is None:
        ws = gradient_workspace(plant, u, margin, method)
    plus = directional_second_derivative(plant, u, v + w, ws=ws, method=method)
    minus = directional_second_derivative(plant, u, v - w, ws=ws, method=method)
    return (plus - minus) / 4
