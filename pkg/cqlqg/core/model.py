"""Plants, Hamiltonian controller parameters and physical realizability checks.

A PR controller is encoded by u = (R, b, e); the matrices a and c of its state-space
realization are recovered from u in closed form, so every u gives a PR controller.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, PreconditionError, StabilizationNotFoundError
from .logger import get_logger
from .matlib import (
    HURWITZ_MARGIN,
    as_matrix,
    ccr_block,
    sym,
    sym_coords,
    sym_from_coords,
    vec,
    unvec,
)

log = get_logger(__name__)


@dataclass(eq=False)
class Triple:
    """An element (R, b, e) of the parameter space with the direct-sum Frobenius inner product"""

    R: np.ndarray
    b: np.ndarray
    e: np.ndarray

    # numpy scalars defer to __rmul__
    __array_ufunc__ = None

    def __post_init__(self) -> None:
        self.R = np.asarray(self.R, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.e = np.asarray(self.e, dtype=float)
        if self.R.ndim != 2 or self.R.shape[0] != self.R.shape[1]:
            raise DimensionError(f"R must be square, got {self.R.shape}")
        n = self.R.shape[0]
        if self.b.ndim != 2 or self.b.shape[0] != n:
            raise DimensionError(f"b must have {n} rows, got {self.b.shape}")
        if self.e.ndim != 2 or self.e.shape[0] != n:
            raise DimensionError(f"e must have {n} rows, got {self.e.shape}")

    @classmethod
    def zeros(cls, n: int, m2: int, p1: int):
        return cls(np.zeros((n, n)), np.zeros((n, m2)), np.zeros((n, p1)))

    @classmethod
    def from_vector(cls, x: np.ndarray, n: int, m2: int, p1: int):
        """Inverse of to_vector"""
        k = n * (n + 1) // 2
        if x.size != k + n * (m2 + p1):
            raise DimensionError(f"Vector of size {x.size} does not fit dims ({n}, {m2}, {p1})")
        R = sym_from_coords(x[:k], n)
        b = unvec(x[k : k + n * m2], n, m2)
        e = unvec(x[k + n * m2 :], n, p1)
        return cls(R, b, e)

    @property
    def n(self) -> int:
        return self.R.shape[0]

    @property
    def shape(self) -> tuple[int, int, int]:
        """(n, m2, p1)"""
        return self.R.shape[0], self.b.shape[1], self.e.shape[1]

    @property
    def dim(self) -> int:
        n, m2, p1 = self.shape
        return n * (n + 1) // 2 + n * (m2 + p1)

    def to_vector(self) -> np.ndarray:
        """Coordinates in an orthonormal basis, so that vector dot products are triple inner products"""
        return np.concatenate([sym_coords(sym(self.R)), vec(self.b), vec(self.e)])

    def inner(self, other: "Triple") -> float:
        return float(
            np.sum(self.R * other.R) + np.sum(self.b * other.b) + np.sum(self.e * other.e)
        )

    def norm(self) -> float:
        return float(np.sqrt(self.inner(self)))

    def _check_compatible(self, other: "Triple") -> None:
        if self.shape != other.shape:
            raise DimensionError(f"Triple shapes differ: {self.shape} vs {other.shape}")

    def __add__(self, other: "Triple"):
        self._check_compatible(other)
        return type(self)(self.R + other.R, self.b + other.b, self.e + other.e)

    def __sub__(self, other: "Triple"):
        self._check_compatible(other)
        return type(self)(self.R - other.R, self.b - other.b, self.e - other.e)

    def __mul__(self, alpha: float):
        return type(self)(alpha * self.R, alpha * self.b, alpha * self.e)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def astype(self, cls):
        return cls(self.R.copy(), self.b.copy(), self.e.copy())

    def allclose(self, other: "Triple", rtol: float = 1e-10, atol: float = 1e-12) -> bool:
        return (
            self.shape == other.shape
            and np.allclose(self.R, other.R, rtol=rtol, atol=atol)
            and np.allclose(self.b, other.b, rtol=rtol, atol=atol)
            and np.allclose(self.e, other.e, rtol=rtol, atol=atol)
        )


@dataclass(eq=False)
class ControllerParams(Triple):
    """u = (R, b, e); R is stored symmetrized"""

    def __post_init__(self) -> None:
        super().__post_init__()
        self.R = sym(self.R)

    def check_plant(self, plant: "PlantModel") -> None:
        expected = (plant.n, plant.m2, plant.p1)
        if self.shape != expected:
            raise DimensionError(
                f"Controller (n, m2, p1) = {self.shape} does not match plant {expected}"
            )


@dataclass(eq=False)
class GradientTriple(Triple):
    """Frechet derivative of the cost with respect to (R, b, e)"""

    def __post_init__(self) -> None:
        super().__post_init__()
        self.R = sym(self.R)

    @property
    def dR(self) -> np.ndarray:
        return self.R

    @property
    def db(self) -> np.ndarray:
        return self.b

    @property
    def de(self) -> np.ndarray:
        return self.e


@dataclass(eq=False)
class TangentVector(Triple):
    phi: np.ndarray = None


@dataclass(eq=False)
class PlantModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    d: np.ndarray
    theta1: np.ndarray = None
    name: str = ""
    notes: str = ""

    def __post_init__(self) -> None:
        for key in "ABCDEFGd":
            setattr(self, key, as_matrix(getattr(self, key), key))

        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DimensionError(f"A must be square, got {self.A.shape}")
        if n % 2:
            raise DimensionError(f"Plant order n must be even, got {n}")
        if self.B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got {self.B.shape}")
        if self.B.shape[1] % 2:
            raise DimensionError(f"m1 must be even, got {self.B.shape[1]}")
        if self.C.shape[1] != n:
            raise DimensionError(f"C must have {n} columns, got {self.C.shape}")
        if self.D.shape != (self.C.shape[0], self.B.shape[1]):
            raise DimensionError(
                f"D must be {self.C.shape[0]}x{self.B.shape[1]}, got {self.D.shape}"
            )
        if self.E.shape[0] != n:
            raise DimensionError(f"E must have {n} rows, got {self.E.shape}")
        if self.F.shape[1] != n:
            raise DimensionError(f"F must have {n} columns, got {self.F.shape}")
        if self.G.shape != (self.F.shape[0], self.E.shape[1]):
            raise DimensionError(
                f"G must be {self.F.shape[0]}x{self.E.shape[1]}, got {self.G.shape}"
            )
        if self.d.shape[0] != self.E.shape[1]:
            raise DimensionError(f"d must have {self.E.shape[1]} rows, got {self.d.shape}")
        if self.d.shape[1] % 2:
            raise DimensionError(f"m2 must be even, got {self.d.shape[1]}")

        if self.theta1 is None:
            self.theta1 = ccr_block(n)
        else:
            self.theta1 = as_matrix(self.theta1, "theta1")
            if self.theta1.shape != (n, n):
                raise DimensionError(f"theta1 must be {n}x{n}, got {self.theta1.shape}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m1(self) -> int:
        return self.B.shape[1]

    @property
    def m2(self) -> int:
        return self.d.shape[1]

    @property
    def p1(self) -> int:
        return self.C.shape[0]

    @property
    def p2(self) -> int:
        return self.E.shape[1]

    @property
    def r_out(self) -> int:
        return self.F.shape[0]

    @property
    def dims(self) -> dict:
        return {"n": self.n, "m1": self.m1, "m2": self.m2, "p1": self.p1, "p2": self.p2, "r": self.r_out}

    @property
    def theta2(self) -> np.ndarray:
        return ccr_block(self.n)

    @property
    def J1(self) -> np.ndarray:
        return ccr_block(self.m1)

    @property
    def J2(self) -> np.ndarray:
        return ccr_block(self.m2)

    @property
    def M1(self) -> np.ndarray:
        """D J1 D^T, the measurement-noise commutation matrix seen by the controller"""
        return self.D @ self.J1 @ self.D.T

    @property
    def param_dim(self) -> int:
        n = self.n
        return n * (n + 1) // 2 + n * (self.m2 + self.p1)

    def open_loop_eigenvalues(self) -> np.ndarray:
        eigs = np.linalg.eigvals(self.A)
        return eigs[np.lexsort((eigs.imag, -eigs.real))]


@dataclass(eq=False)
class ControllerRealization:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    e: np.ndarray
    d: np.ndarray


@dataclass(eq=False)
class PrReport:
    residuals: dict
    scales: dict
    tolerance: float
    relative: bool = True
    passed: bool = field(init=False)

    def __post_init__(self) -> None:
        self.passed = all(self.score(k) <= self.tolerance for k in self.residuals)

    def score(self, key: str) -> float:
        """Residual compared against the tolerance"""
        if self.relative:
            return self.residuals[key] / self.scales[key]
        return self.residuals[key]

    def failing(self) -> list[str]:
        return [k for k in self.residuals if self.score(k) > self.tolerance]

    def rows(self) -> list[list]:
        return [
            [k, self.residuals[k], self.score(k), "ok" if self.score(k) <= self.tolerance else "FAIL"]
            for k in self.residuals
        ]


def _residual(*terms: np.ndarray) -> tuple[float, float]:
    total = sum(terms)
    return float(np.linalg.norm(total)), 1.0 + sum(float(np.linalg.norm(t)) for t in terms)


def check_plant_pr(plant: PlantModel, tol: float, relative: bool = True) -> PrReport:
    """PR conditions of the plant: CCR preservation, non-demolition and the feedthrough normalization"""
    A, B, C, D, E, d = plant.A, plant.B, plant.C, plant.D, plant.E, plant.d
    theta1, J1, J2 = plant.theta1, plant.J1, plant.J2

    residuals, scales = {}, {}
    residuals["eq19"], scales["eq19"] = _residual(
        A @ theta1, theta1 @ A.T, B @ J1 @ B.T, E @ d @ J2 @ d.T @ E.T
    )
    residuals["eq22"], scales["eq22"] = _residual(theta1 @ C.T, B @ J1 @ D.T)
    residuals["eq26_D"], scales["eq26_D"] = _residual(D @ D.T, -np.eye(plant.p1))
    residuals["eq26_d"], scales["eq26_d"] = _residual(d @ d.T, -np.eye(plant.p2))
    return PrReport(residuals=residuals, scales=scales, tolerance=tol, relative=relative)


def realize_controller(plant: PlantModel, u: ControllerParams) -> ControllerRealization:
    """State-space matrices (a, b, c, e) of the PR controller encoded by u"""
    u.check_plant(plant)
    theta2 = plant.theta2
    theta2_inv = -theta2
    R, b, e = u.R, u.b, u.e
    a = 2 * theta2 @ R - 0.5 * (e @ plant.M1 @ e.T + b @ plant.J2 @ b.T) @ theta2_inv
    c = -plant.d @ plant.J2 @ b.T @ theta2_inv
    return ControllerRealization(a=a, b=b.copy(), c=c, e=e.copy(), d=plant.d.copy())


def check_controller_pr(
    plant: PlantModel, real: ControllerRealization, tol: float, relative: bool = True
) -> PrReport:
    theta1, theta2, J1, J2 = plant.theta1, plant.theta2, plant.J1, plant.J2
    a, b, c, e, d = real.a, real.b, real.c, real.e, real.d
    n = plant.n
    if a.shape != (n, n) or b.shape != (n, plant.m2) or e.shape != (n, plant.p1):
        raise DimensionError("Controller realization does not match the plant dimensions")
    if c.shape != (plant.p2, n) or d.shape != (plant.p2, plant.m2):
        raise DimensionError("Controller output matrices do not match the plant dimensions")

    residuals, scales = {}, {}
    residuals["eq20"], scales["eq20"] = _residual(
        a @ theta2, theta2 @ a.T, e @ plant.M1 @ e.T, b @ J2 @ b.T
    )
    residuals["eq23"], scales["eq23"] = _residual(c @ theta2, d @ J2 @ b.T)
    residuals["eq21"], scales["eq21"] = _residual(
        theta1 @ plant.C.T @ e.T, plant.B @ J1 @ plant.D.T @ e.T, plant.E @ c @ theta2, plant.E @ d @ J2 @ b.T
    )
    return PrReport(residuals=residuals, scales=scales, tolerance=tol, relative=relative)


def _draw(plant: PlantModel, rng: np.random.Generator, scale: float) -> ControllerParams:
    n = plant.n
    Z = rng.standard_normal((n, n))
    b = rng.standard_normal((n, plant.m2))
    e = rng.standard_normal((n, plant.p1))
    return ControllerParams(sym(scale * Z), scale * b, scale * e)


def random_controller(plant: PlantModel, rng_seed: int, scale: float = 1.0) -> ControllerParams:
    """Gaussian draw of (R, b, e) with standard deviation `scale`; R is symmetrized after the draw"""
    if scale < 0:
        raise PreconditionError(f"scale must be nonnegative, got {scale}")
    return _draw(plant, np.random.default_rng(rng_seed), scale)


def random_stabilizing(
    plant: PlantModel,
    rng_seed: int,
    scale: float = 1.0,
    max_tries: int = 100000,
    margin: float = HURWITZ_MARGIN,
) -> tuple[ControllerParams, int]:
    """Random search for a controller whose closed loop is Hurwitz.

    Draws from a single generator seeded once, so a given seed always returns the
    same controller after the same number of tries.
    """
    from .closedloop import assemble

    if max_tries < 1:
        raise PreconditionError(f"max_tries must be at least 1, got {max_tries}")
    if scale < 0:
        raise PreconditionError(f"scale must be nonnegative, got {scale}")

    rng = np.random.default_rng(rng_seed)
    for tries in range(1, max_tries + 1):
        u = _draw(plant, rng, scale)
        sys = assemble(plant, realize_controller(plant, u), margin=margin)
        if sys.hurwitz:
            log.debug(f"seed {rng_seed}: stabilizing controller after {tries} tries")
            return u, tries

    raise StabilizationNotFoundError(
        f"No stabilizing controller in {max_tries} tries (seed {rng_seed}, scale {scale})",
        tries_used=max_tries,
    )
