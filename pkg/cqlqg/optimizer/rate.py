"""Local convergence diagnostics at a minimizer.

The Hessian of the cost vanishes along the orbit of symplectically equivalent
controllers, so conditioning is measured on the normal subspace only.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla
from tqdm import tqdm

from ..calculus.geometry import tangent_basis
from ..calculus.gradient import gradient_workspace, gradient, hessian_vector_product
from ..core.logger import get_logger
from ..core.matlib import HURWITZ_MARGIN
from ..core.model import ControllerParams, PlantModel, Triple
from .config import SolverConfig

log = get_logger(__name__)

TANGENT_RTOL = 1e-10


@dataclass(eq=False)
class RateEstimate:
    ell: float
    L: float
    r: float
    hessian_spectrum_normal: np.ndarray
    tangent_dim: int
    asymmetry: float
    tangent_form_ratio: float
    grad_norm: float
    local_minimum: bool
    f: float
    sigma: float

    def summary(self) -> dict:
        spec = self.hessian_spectrum_normal
        return {
            "ell": self.ell,
            "L": self.L,
            "r": self.r,
            "tangent_dim": self.tangent_dim,
            "normal_dim": int(spec.size),
            "negative_eigenvalues": int(np.sum(spec < 0)),
            "asymmetry": self.asymmetry,
            "tangent_form_ratio": self.tangent_form_ratio,
            "grad_norm": self.grad_norm,
            "local_minimum": self.local_minimum,
        }


@dataclass(eq=False)
class EmpiricalRate:
    ratios: np.ndarray
    geometric_mean: float
    tail_max: float
    e_star: float


def convergence_rate(ell: float, L: float, f: float, sigma: float) -> float:
    """1 - 4 f sigma (1 - sigma) ell / L"""
    return 1 - 4 * f * sigma * (1 - sigma) * ell / L


def dense_hessian(
    plant: PlantModel,
    u: ControllerParams,
    margin: float = HURWITZ_MARGIN,
    method: str = None,
    progress: bool = False,
) -> np.ndarray:
    """Hessian in the orthonormal coordinates of Triple.to_vector, one column per basis element"""
    ws = gradient_workspace(plant, u, margin, method)
    N = plant.param_dim
    columns = range(N)
    if progress:
        columns = tqdm(columns, desc="hessian", leave=False)
    H = np.empty((N, N))
    for i in columns:
        unit = np.zeros(N)
        unit[i] = 1.0
        v = Triple.from_vector(unit, plant.n, plant.m2, plant.p1)
        H[:, i] = hessian_vector_product(plant, u, v, ws=ws, method=method).to_vector()
    return H


def estimate_rate(
    plant: PlantModel,
    u_star: ControllerParams,
    cfg: SolverConfig,
    grad_warn: float = 1e-3,
    neg_tol: float = 1e-8,
    progress: bool = False,
) -> RateEstimate:
    """Extreme eigenvalues ell, L of the Hessian restricted to the normal subspace at u_star
    and the resulting linear rate bound r.
    """
    g, _ = gradient(plant, u_star, margin=cfg.hurwitz_margin, method=cfg.lyapunov_method)
    grad_norm = g.norm()
    if grad_norm > grad_warn * (1 + u_star.norm()):
        log.warning(f"gradient norm {grad_norm:.3e} is large, u_star may be far from stationary")

    H = dense_hessian(
        plant, u_star, margin=cfg.hurwitz_margin, method=cfg.lyapunov_method, progress=progress
    )
    scale = np.linalg.norm(H)
    asymmetry = float(np.linalg.norm(H - H.T) / scale) if scale > 0 else 0.0
    H = (H + H.T) / 2

    T = tangent_basis(u_star, plant.theta2)
    U, sv, _ = np.linalg.svd(T, full_matrices=True)
    rank = int(np.sum(sv > TANGENT_RTOL * sv[0])) if sv.size and sv[0] > 0 else 0
    tangent, normal = U[:, :rank], U[:, rank:]

    spectrum = spla.eigvalsh(normal.T @ H @ normal)
    ell, L = float(spectrum[0]), float(spectrum[-1])

    if rank:
        tangent_forms = np.abs(np.einsum("ij,ik,kj->j", tangent, H, tangent))
        tangent_form_ratio = float(tangent_forms.max() / abs(L)) if L else float("inf")
    else:
        tangent_form_ratio = 0.0

    local_minimum = ell > -neg_tol * abs(L)
    if not local_minimum:
        log.warning(f"normal Hessian has a negative eigenvalue {ell:.3e}; u_star is not a local minimum")

    r = convergence_rate(ell, L, cfg.f, cfg.sigma)
    log.info(f"rate estimate: ell={ell:.4e} L={L:.4e} r={r:.6f} tangent_dim={rank}")
    return RateEstimate(
        ell=ell,
        L=L,
        r=r,
        hessian_spectrum_normal=spectrum,
        tangent_dim=rank,
        asymmetry=asymmetry,
        tangent_form_ratio=tangent_form_ratio,
        grad_norm=grad_norm,
        local_minimum=local_minimum,
        f=cfg.f,
        sigma=cfg.sigma,
    )


def empirical_rate(costs, e_star: float = None, floor_offset: float = 0.0, tail: int = None) -> EmpiricalRate:
    """Per-step ratios (E_{k+1} - E*) / (E_k - E*) of a cost sequence.

    E* defaults to the smallest cost seen minus floor_offset; steps whose gap is not
    positive are dropped.
    """
    costs = np.asarray(costs, dtype=float)
    if e_star is None:
        e_star = float(costs.min()) - floor_offset
    gaps = costs - e_star
    keep = (gaps[:-1] > 0) & (gaps[1:] > 0)
    ratios = gaps[1:][keep] / gaps[:-1][keep]
    if ratios.size == 0:
        return EmpiricalRate(ratios=ratios, geometric_mean=float("nan"), tail_max=float("nan"), e_star=e_star)
    tail_ratios = ratios if tail is None else ratios[-tail:]
    return EmpiricalRate(
        ratios=ratios,
        geometric_mean=float(np.exp(np.mean(np.log(ratios)))),
        tail_max=float(tail_ratios.max()),
        e_star=e_star,
    )
