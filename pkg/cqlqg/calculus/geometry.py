"""Symplectic similarity transformations of controllers and the geometry they induce on U.

Controllers related by u -> (S^-T R S^-1, S b, S e), with S symplectic, have the same
cost. Their orbit through u has the tangent space
    T(u) = {(-2 sym(R theta2 phi), theta2 phi b, theta2 phi e) : phi symmetric}
and the gradient is orthogonal to it.
"""

from dataclasses import dataclass

import numpy as np

from ..core.exceptions import PreconditionError
from ..core.matlib import SYMMETRY_TOL, sym, sym_basis, sym_from_coords, symplectic_residual
from ..core.model import ControllerParams, GradientTriple, PlantModel, TangentVector, Triple
from .gradient import gradient

DEGENERATE_THRESHOLD = 1e-8
LSTSQ_RCOND = 1e-12


@dataclass(frozen=True, eq=False)
class Projection:
    tangent: TangentVector
    normal: Triple
    phi: np.ndarray


@dataclass(frozen=True, eq=False)
class ModifiedDirection:
    direction: Triple
    gamma: TangentVector
    fallback: bool
    gradient: GradientTriple


def _check_symmetric(phi: np.ndarray) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 2 or phi.shape[0] != phi.shape[1]:
        raise PreconditionError(f"phi must be square, got {phi.shape}")
    if np.linalg.norm(phi - phi.T) > SYMMETRY_TOL * (1 + np.linalg.norm(phi)):
        raise PreconditionError("phi must be symmetric")
    return sym(phi)


def tangent_lift(u: Triple, phi: np.ndarray, theta2: np.ndarray) -> TangentVector:
    """Velocity of the orbit of u under exp(s theta2 phi) at s = 0"""
    phi = _check_symmetric(phi)
    sigma = theta2 @ phi
    return TangentVector(-2 * sym(u.R @ sigma), sigma @ u.b, sigma @ u.e, phi=phi)


def tangent_basis(u: Triple, theta2: np.ndarray) -> np.ndarray:
    """Columns are the coordinates of the lifts of an orthonormal basis of symmetric matrices"""
    return np.column_stack([tangent_lift(u, S, theta2).to_vector() for S in sym_basis(u.n)])


def tangent_dimension(u: Triple, theta2: np.ndarray, rtol: float = 1e-10) -> int:
    T = tangent_basis(u, theta2)
    sv = np.linalg.svd(T, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def project_tangent(u: Triple, v: Triple, theta2: np.ndarray) -> Projection:
    """Orthogonal decomposition v = tangent + normal with respect to the orbit of u"""
    T = tangent_basis(u, theta2)
    coef, *_ = np.linalg.lstsq(T, v.to_vector(), rcond=LSTSQ_RCOND)
    phi = sym_from_coords(coef, u.n)
    tangent = tangent_lift(u, phi, theta2)
    normal = Triple(v.R - tangent.R, v.b - tangent.b, v.e - tangent.e)
    return Projection(tangent=tangent, normal=normal, phi=phi)


def skew_hamiltonian_residual(u: Triple, v: Triple, theta2: np.ndarray) -> np.ndarray:
    """sym(theta2 (2 R rho - beta b^T - eps e^T)) for v = (rho, beta, eps); zero iff v is normal to the orbit"""
    return sym(theta2 @ (2 * u.R @ v.R - v.b @ u.b.T - v.e @ u.e.T))


def orthogonality_residual(u: Triple, g: Triple, theta2: np.ndarray) -> float:
    return float(np.linalg.norm(skew_hamiltonian_residual(u, g, theta2)))


def balance_residual(u: Triple, theta2: np.ndarray) -> np.ndarray:
    """Vanishes exactly when u is norm-balanced within its orbit"""
    return sym(theta2 @ (2 * u.R @ u.R - u.b @ u.b.T - u.e @ u.e.T))


def modified_direction(
    plant: PlantModel,
    u: ControllerParams,
    g: GradientTriple = None,
    threshold: float = DEGENERATE_THRESHOLD,
) -> ModifiedDirection:
    """Descent direction gamma - g, where the tangent correction gamma keeps ||u|| constant
    along the flow without changing the rate of cost decay.
    """
    theta2 = plant.theta2
    if g is None:
        g, _ = gradient(plant, u)
    proj = project_tangent(u, u, theta2)
    tangent_norm = proj.tangent.norm()

    if tangent_norm <= threshold * u.norm():
        zero = TangentVector.zeros(*u.shape)
        zero.phi = np.zeros((u.n, u.n))
        return ModifiedDirection(direction=Triple(-g.R, -g.b, -g.e), gamma=zero, fallback=True, gradient=g)

    coef = proj.normal.inner(g) / tangent_norm**2
    gamma = TangentVector(
        coef * proj.tangent.R, coef * proj.tangent.b, coef * proj.tangent.e, phi=coef * proj.phi
    )
    direction = Triple(gamma.R - g.R, gamma.b - g.b, gamma.e - g.e)
    return ModifiedDirection(direction=direction, gamma=gamma, fallback=False, gradient=g)


def apply_symplectic(
    u: ControllerParams, sigma: np.ndarray, theta2: np.ndarray, tol: float = 1e-8
) -> ControllerParams:
    """(S^-T R S^-1, S b, S e), with S^-1 = theta2 S^T theta2^-1"""
    scale = 1 + np.linalg.norm(sigma) ** 2
    if symplectic_residual(sigma, theta2) > tol * scale:
        raise PreconditionError("Transformation matrix is not symplectic")
    sigma_inv = -theta2 @ sigma.T @ theta2
    return ControllerParams(sigma_inv.T @ u.R @ sigma_inv, sigma @ u.b, sigma @ u.e)


def deviation_estimate(u: Triple, u_star: Triple, theta2: np.ndarray) -> float:
    """Distance from u to the orbit of u_star, to first order around u_star"""
    return project_tangent(u_star, u - u_star, theta2).normal.norm()
