"""Gradient descent over the controller parameters with an adaptive search horizon and
an Armijo stepsize rule, plus seeded multi-start orchestration.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Callable

import numpy as np
import polars as pl
from tqdm import tqdm

from ..calculus.gradient import directional_second_derivative, fd_second_derivative, gradient
from ..core.closedloop import lqg_cost
from ..core.exceptions import (
    ArmijoExhaustedError,
    PreconditionError,
    StabilizationNotFoundError,
    UnstableSystemError,
)
from ..core.logger import get_logger
from ..core.model import ControllerParams, GradientTriple, PlantModel, random_stabilizing
from .config import SolverConfig

log = get_logger(__name__)

# below this |d2| the horizon falls back to h_max
CURVATURE_FLOOR = 1e-300

TRACE_SCHEMA = {
    "k": pl.Int64,
    "cost": pl.Float64,
    "grad_norm": pl.Float64,
    "horizon": pl.Float64,
    "stepsize": pl.Float64,
    "armijo_j": pl.Int64,
    "u_norm": pl.Float64,
}


class Termination(Enum):
    GRADIENT_SMALL = "gradient_small"
    MAX_ITERS = "max_iters"
    ARMIJO_EXHAUSTED = "armijo_exhausted"


@dataclass
class IterateRecord:
    k: int
    cost: float
    grad_norm: float
    horizon: float
    stepsize: float
    armijo_j: int
    u_norm: float


@dataclass(eq=False)
class RunResult:
    final_u: ControllerParams
    final_cost: float
    iterations: int
    terminated: Termination
    trace: list[IterateRecord] = field(default_factory=list)
    seed: int = None
    tries_used: int = 0

    def to_frame(self) -> pl.DataFrame:
        if not self.trace:
            return pl.DataFrame(schema=TRACE_SCHEMA)
        return pl.DataFrame([asdict(r) for r in self.trace], schema=TRACE_SCHEMA)

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.trace] + [self.final_cost])


def search_horizon(g_norm_sq: float, d2: float, h_max: float) -> float:
    """min(h_max, ||g||^2 / |d2|), the minimizer of the quadratic model along -g"""
    if g_norm_sq < 0:
        raise PreconditionError(f"Squared gradient norm must be nonnegative, got {g_norm_sq}")
    if not np.isfinite(d2) or abs(d2) < CURVATURE_FLOOR:
        return h_max
    return min(h_max, g_norm_sq / abs(d2))


def armijo_step(
    plant: PlantModel,
    u: ControllerParams,
    g: GradientTriple,
    cost_u: float,
    h_k: float,
    cfg: SolverConfig,
    cost_fn: Callable[[ControllerParams], float] = None,
) -> tuple[float, int, float]:
    """Largest s = h_k f^j with E(u) - E(u - s g) >= sigma s ||g||^2.

    Returns (s, j, E(u - s g)). Candidates outside the stabilizing set cost +inf and
    never pass the test.
    """
    if cost_fn is None:
        def cost_fn(v):
            return lqg_cost(plant, v, margin=cfg.hurwitz_margin, method=cfg.lyapunov_method).value

    g_norm_sq = g.inner(g)
    for mu in range(cfg.armijo_max_mu + 1):
        s = h_k * cfg.f**mu
        cost_new = cost_fn(u - s * g)
        if np.isfinite(cost_new) and cost_u - cost_new >= cfg.sigma * s * g_norm_sq:
            return s, mu, cost_new

    raise ArmijoExhaustedError(
        f"No acceptable stepsize within {cfg.armijo_max_mu} reductions of h = {h_k:.3e}",
        mu=cfg.armijo_max_mu,
    )


def _second_derivative(plant, u, g, ws, cost_u, cfg: SolverConfig) -> float:
    """Curvature of the cost along g; NaN when the difference stencil leaves the stabilizing set"""
    if cfg.second_derivative == "fd":
        try:
            return fd_second_derivative(
                plant,
                u,
                g,
                step=cfg.fd_step,
                margin=cfg.hurwitz_margin,
                cost_u=cost_u,
                method=cfg.lyapunov_method,
            )
        except UnstableSystemError as err:
            log.debug(f"{err}, search horizon falls back to h_max")
            return float("nan")
    return directional_second_derivative(plant, u, g, ws=ws, method=cfg.lyapunov_method)


def descend(
    plant: PlantModel, u0: ControllerParams, cfg: SolverConfig, progress: bool = False
) -> RunResult:
    """Gradient descent u_{k+1} = u_k - s_k g(u_k) from a stabilizing u0.

    Stops once s_k ||g(u_k)|| <= epsilon ||u_k||, when max_iters steps have been
    taken, or when the Armijo ladder runs out.
    """
    u0.check_plant(plant)
    if not lqg_cost(plant, u0, margin=cfg.hurwitz_margin, method=cfg.lyapunov_method).stabilizing:
        raise PreconditionError("Initial controller does not stabilize the plant")

    u = u0
    trace = []
    terminated = Termination.MAX_ITERS
    log.info(f"descent started: cfg={cfg.to_dict()}")

    iterator = range(cfg.max_iters)
    if progress:
        iterator = tqdm(iterator, desc="descent", leave=False)

    for k in iterator:
        g, ws = gradient(plant, u, margin=cfg.hurwitz_margin, method=cfg.lyapunov_method)
        cost_u = ws.cost
        g_norm_sq = g.inner(g)
        u_norm = u.norm()
        if g_norm_sq == 0:
            terminated = Termination.GRADIENT_SMALL
            break

        d2 = _second_derivative(plant, u, g, ws, cost_u, cfg)
        h_k = search_horizon(g_norm_sq, d2, cfg.h_max)
        try:
            s_k, j, cost_new = armijo_step(plant, u, g, cost_u, h_k, cfg)
        except ArmijoExhaustedError as err:
            log.warning(f"step {k}: {err}")
            terminated = Termination.ARMIJO_EXHAUSTED
            break

        trace.append(
            IterateRecord(
                k=k,
                cost=cost_u,
                grad_norm=float(np.sqrt(g_norm_sq)),
                horizon=h_k,
                stepsize=s_k,
                armijo_j=j,
                u_norm=u_norm,
            )
        )
        u = u - s_k * g
        if k % cfg.log_every == 0:
            log.debug(f"step {k}: cost={cost_new:.10g} |g|={np.sqrt(g_norm_sq):.3e} h={h_k:.3e} s={s_k:.3e}")

        if s_k * np.sqrt(g_norm_sq) <= cfg.epsilon * u_norm:
            terminated = Termination.GRADIENT_SMALL
            break

    final_cost = lqg_cost(plant, u, margin=cfg.hurwitz_margin, method=cfg.lyapunov_method).value
    log.info(
        f"descent finished after {len(trace)} steps ({terminated.value}), cost {final_cost:.10g}"
    )
    return RunResult(
        final_u=u, final_cost=final_cost, iterations=len(trace), terminated=terminated, trace=trace
    )


def start_seeds(rng_seed: int, n_starts: int) -> list[int]:
    """Independent integer seeds derived from one root seed"""
    children = np.random.SeedSequence(rng_seed).spawn(n_starts)
    return [int(c.generate_state(1)[0]) for c in children]


def multi_start(
    plant: PlantModel,
    cfg: SolverConfig,
    n_starts: int = 10,
    scale: float = 1.0,
    max_tries: int = 100000,
    workers: int = 1,
    progress: bool = False,
) -> tuple[RunResult, list[RunResult]]:
    """Random stabilizing starts followed by descent; returns the best run and all runs in seed order"""
    if n_starts < 1:
        raise PreconditionError(f"n_starts must be at least 1, got {n_starts}")
    seeds = start_seeds(cfg.rng_seed, n_starts)

    def run(seed: int):
        try:
            u0, tries = random_stabilizing(
                plant, seed, scale=scale, max_tries=max_tries, margin=cfg.hurwitz_margin
            )
        except StabilizationNotFoundError as err:
            log.warning(f"seed {seed}: {err}")
            return err
        result = descend(plant, u0, cfg)
        result.seed = seed
        result.tries_used = tries
        return result

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        outcomes = pool.map(run, seeds)
        if progress:
            outcomes = tqdm(outcomes, total=n_starts, desc="starts")
        outcomes = list(outcomes)

    results = [r for r in outcomes if isinstance(r, RunResult)]
    if not results:
        tries_used = sum(err.tries_used for err in outcomes)
        raise StabilizationNotFoundError(
            f"None of the {n_starts} starts found a stabilizing controller ({tries_used} tries in total)",
            tries_used=tries_used,
        )
    best = min(results, key=lambda r: r.final_cost)
    log.info(f"multi-start: best cost {best.final_cost:.10g} from seed {best.seed}")
    return best, results
