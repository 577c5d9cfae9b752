"""Finite-difference oracles and sampling utilities shared by the tests"""

import numpy as np

from cqlqg.core.closedloop import closed_loop, gramians, lqg_cost
from cqlqg.core.model import ControllerParams, Triple


def random_direction(u: Triple, rng: np.random.Generator) -> Triple:
    """Unit-norm direction with the shape of u"""
    n, m2, p1 = u.shape
    v = Triple.from_vector(rng.standard_normal(u.dim), n, m2, p1)
    return v * (1 / v.norm())


def perturbed(plant, u: ControllerParams, rng: np.random.Generator, size: float, attempts: int = 20):
    """u + size ||u|| w for a random unit w, redrawn until the closed loop is stable"""
    for _ in range(attempts):
        w = random_direction(u, rng)
        candidate = u + (size * u.norm()) * w
        if lqg_cost(plant, candidate).stabilizing:
            return candidate
    raise RuntimeError("no stabilizing perturbation found")


def cost(plant, u) -> float:
    return lqg_cost(plant, u).value


def fd_gradient(plant, u: ControllerParams, rel_step: float = 1e-4) -> np.ndarray:
    """Fourth-order central differences of the cost in the coordinates of Triple.to_vector"""
    n, m2, p1 = u.shape
    x0 = u.to_vector()
    h = rel_step * (1 + u.norm())
    grad = np.zeros(x0.size)
    for j in range(x0.size):
        values = []
        for k in (2, 1, -1, -2):
            x = x0.copy()
            x[j] += k * h
            values.append(cost(plant, ControllerParams.from_vector(x, n, m2, p1)))
        f2, f1, fm1, fm2 = values
        grad[j] = (-f2 + 8 * f1 - 8 * fm1 + fm2) / (12 * h)
    return grad


def fd_second(plant, u: ControllerParams, v: Triple, rel_step: float = 1e-3) -> float:
    """Fourth-order second difference of s -> E(u + s v)"""
    h = rel_step * (1 + u.norm()) / v.norm()
    f = {k: cost(plant, u + (k * h) * v) for k in (-2, -1, 0, 1, 2)}
    return (-f[2] + 16 * f[1] - 30 * f[0] + 16 * f[-1] - f[-2]) / (12 * h**2)


def fd_gramians(plant, u: ControllerParams, v: Triple, rel_step: float = 1e-5):
    """Central differences of the Gramians P and Q along v"""
    h = rel_step * (1 + u.norm()) / v.norm()
    _, sys_plus = closed_loop(plant, u + h * v)
    _, sys_minus = closed_loop(plant, u - h * v)
    plus, minus = gramians(sys_plus), gramians(sys_minus)
    return (plus.P - minus.P) / (2 * h), (plus.Q - minus.Q) / (2 * h)


def rel_err(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))
