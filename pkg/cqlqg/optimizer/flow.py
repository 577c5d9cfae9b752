"""Explicit Euler integration of the gradient flow and of its norm-preserving modification"""

from dataclasses import dataclass, field

import numpy as np
import polars as pl
from tqdm import tqdm

from ..calculus.geometry import balance_residual, modified_direction
from ..calculus.gradient import gradient
from ..core.closedloop import lqg_cost
from ..core.exceptions import FlowEscapedError, PreconditionError, UnstableSystemError
from ..core.logger import get_logger
from ..core.matlib import HURWITZ_MARGIN
from ..core.model import ControllerParams, PlantModel

log = get_logger(__name__)

FLOW_MODES = ("plain", "balanced")

FLOW_SCHEMA = {
    "step": pl.Int64,
    "tau": pl.Float64,
    "cost": pl.Float64,
    "grad_norm": pl.Float64,
    "u_norm": pl.Float64,
    "balance_residual": pl.Float64,
    "u_dot_u": pl.Float64,
}


@dataclass(eq=False)
class FlowRecord:
    step: int
    tau: float
    cost: float
    grad_norm: float
    u_norm: float
    balance_residual: float
    u_dot_u: float
    balance: np.ndarray
    fallback: bool = False

    def to_row(self) -> dict:
        return {key: getattr(self, key) for key in FLOW_SCHEMA}


@dataclass(eq=False)
class FlowTrace:
    mode: str
    dtau: float
    records: list[FlowRecord] = field(default_factory=list)
    final_u: ControllerParams = None

    def to_frame(self) -> pl.DataFrame:
        return pl.DataFrame([r.to_row() for r in self.records], schema=FLOW_SCHEMA)

    def balance_drift(self) -> float:
        """||balance(end) - balance(start)||"""
        return float(np.linalg.norm(self.records[-1].balance - self.records[0].balance))

    def norm_drift(self) -> float:
        return abs(self.records[-1].u_norm - self.records[0].u_norm)


def integrate_flow(
    plant: PlantModel,
    u0: ControllerParams,
    mode: str = "plain",
    dtau: float = 1e-3,
    steps: int = 1000,
    progress: bool = False,
    margin: float = HURWITZ_MARGIN,
    method: str = None,
) -> FlowTrace:
    """Euler steps u <- u + dtau * du, with du = -g (plain) or gamma - g (balanced).

    One record is kept per visited point, so `steps` steps give steps + 1 records.
    `margin` and `method` decide stability and the Lyapunov backend at every step.
    """
    if mode not in FLOW_MODES:
        raise PreconditionError(f"mode must be one of {FLOW_MODES}, got {mode}")
    if dtau <= 0 or steps < 0:
        raise PreconditionError("dtau must be positive and steps nonnegative")
    u0.check_plant(plant)
    if not lqg_cost(plant, u0, margin, method).stabilizing:
        raise PreconditionError("Initial controller does not stabilize the plant")

    theta2 = plant.theta2
    trace = FlowTrace(mode=mode, dtau=dtau)
    u = u0

    iterator = range(steps + 1)
    if progress:
        iterator = tqdm(iterator, desc=f"{mode} flow", leave=False)

    for step in iterator:
        try:
            g, ws = gradient(plant, u, margin=margin, method=method)
        except UnstableSystemError as err:
            trace.final_u = u
            raise FlowEscapedError(
                f"Flow left the stabilizing set at step {step} (tau = {step * dtau:.6g}): {err}",
                trace=trace,
            )

        fallback = False
        if mode == "plain":
            du = -g
        else:
            md = modified_direction(plant, u, g=g)
            du, fallback = md.direction, md.fallback

        balance = balance_residual(u, theta2)
        trace.records.append(
            FlowRecord(
                step=step,
                tau=step * dtau,
                cost=ws.cost,
                grad_norm=g.norm(),
                u_norm=u.norm(),
                balance_residual=float(np.linalg.norm(balance)),
                u_dot_u=u.inner(du) if mode == "balanced" else 0.0,
                balance=balance,
                fallback=fallback,
            )
        )
        if step == steps:
            break
        u = u + dtau * du

    trace.final_u = u
    log.info(f"{mode} flow: {steps} steps of {dtau:g}, cost {trace.records[-1].cost:.10g}")
    return trace
