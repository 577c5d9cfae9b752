import sys
import argparse

import numpy as np
from tabulate import tabulate

from ..utils import display, format_complex, timeit
from ..calculus.gradient import gradient
from ..core.closedloop import closed_loop, cost_identities, covariance_positivity, gramians, lqg_cost
from ..core.config import Config
from ..core.exceptions import (
    ConfigurationError,
    ControllerFileError,
    CqlqgError,
    DimensionError,
    FlowEscapedError,
    PlantFileError,
    PreconditionError,
    StabilizationNotFoundError,
    UnstableSystemError,
)
from ..core.fileio import load_controller, load_plant, read_trace, store_controller, write_trace
from ..core.logger import Logger
from ..core.model import check_controller_pr, check_plant_pr
from ..optimizer.config import SolverConfig
from ..optimizer.descent import descend, multi_start
from ..optimizer.flow import FLOW_MODES, integrate_flow
from ..optimizer.rate import estimate_rate

EXIT_OK = 0
EXIT_PR_FAILED = 1
EXIT_FILE = 2
EXIT_STABILIZATION = 3
EXIT_FLOW_ESCAPED = 4
EXIT_DIMENSION = 5
EXIT_NUMERICAL = 6

# first match wins
EXIT_CODES = (
    (PlantFileError, EXIT_FILE),
    (ControllerFileError, EXIT_FILE),
    (ConfigurationError, EXIT_FILE),
    (OSError, EXIT_FILE),
    (StabilizationNotFoundError, EXIT_STABILIZATION),
    (UnstableSystemError, EXIT_STABILIZATION),
    (PreconditionError, EXIT_STABILIZATION),
    (FlowEscapedError, EXIT_FLOW_ESCAPED),
    (DimensionError, EXIT_DIMENSION),
    (CqlqgError, EXIT_NUMERICAL),
)


def exit_code(err: Exception) -> int:
    for cls, code in EXIT_CODES:
        if isinstance(err, cls):
            return code
    return EXIT_NUMERICAL


def _load_pair(opts) -> tuple:
    plant = load_plant(opts.plant)
    u = load_controller(opts.controller)
    u.check_plant(plant)
    return plant, u


def _eig_rows(eigs: np.ndarray) -> str:
    return ", ".join(format_complex(z) for z in eigs)


@timeit("Checked plant")
def cmd_check(opts, conf: Config, logger: Logger) -> int:
    plant = load_plant(opts.plant)
    tol = conf.file_pr_tolerance if opts.tol is None else opts.tol
    report = check_plant_pr(plant, tol, relative=not opts.absolute)

    print(tabulate(report.rows(), headers=["condition", "residual", "score", "status"], floatfmt=".3e"))
    display(f"open-loop eigenvalues: {_eig_rows(plant.open_loop_eigenvalues())}", timestamp=False)
    if report.passed:
        logger.info(f"{opts.plant} passes the PR checks at tol {tol:g}", cml=True)
        return EXIT_OK
    logger.error(f"{opts.plant} fails {', '.join(report.failing())} at tol {tol:g}", cml=True)
    return EXIT_PR_FAILED


@timeit("Synthesis finished")
def cmd_synthesize(opts, conf: Config, logger: Logger) -> int:
    plant = load_plant(opts.plant)
    cfg = SolverConfig.from_config(
        conf,
        h_max=opts.h_max,
        f=opts.f,
        sigma=opts.sigma,
        epsilon=opts.epsilon,
        max_iters=opts.max_iters,
        rng_seed=opts.seed,
    )
    progress = not opts.quiet

    if opts.init is not None:
        u0 = load_controller(opts.init)
        u0.check_plant(plant)
        best = descend(plant, u0, cfg, progress=progress)
        results = [best]
    else:
        search = conf.random_search
        scale = search["scale"] if opts.scale is None else opts.scale
        best, results = multi_start(
            plant,
            cfg,
            n_starts=opts.starts,
            scale=scale,
            max_tries=search["max_tries"],
            workers=opts.workers,
            progress=progress,
        )
        rows = [[r.seed, r.tries_used, r.iterations, r.terminated.value, r.final_cost] for r in results]
        print(tabulate(rows, headers=["seed", "tries", "iterations", "terminated", "cost"], floatfmt=".10g"))

    if opts.out_controller is not None:
        store_controller(best.final_u, opts.out_controller, plant)
        logger.info(f"controller written to {opts.out_controller}")
    if opts.out_trace is not None:
        write_trace(best.to_frame(), opts.out_trace)
        logger.info(f"trace written to {opts.out_trace}")

    summary = [
        ["final cost", f"{best.final_cost:.10g}"],
        ["iterations", best.iterations],
        ["terminated", best.terminated.value],
    ]
    print(tabulate(summary, tablefmt="plain"))
    logger.info(f"best cost {best.final_cost:.10g} after {best.iterations} iterations ({best.terminated.value})")
    return EXIT_OK


@timeit("Evaluated controller")
def cmd_cost(opts, conf: Config, logger: Logger) -> int:
    plant, u = _load_pair(opts)
    cfg = SolverConfig.from_config(conf)
    margin, method = cfg.hurwitz_margin, cfg.lyapunov_method
    real, sys = closed_loop(plant, u, margin=margin)
    cost = lqg_cost(plant, u, margin=margin, method=method)
    pr = check_controller_pr(plant, real, conf.pr_tolerance)

    rows = [
        ["cost", f"{cost.value:.10g}"],
        ["stabilizing", cost.stabilizing],
        ["spectral abscissa", f"{sys.spectral_abscissa:.6e}"],
    ]
    if cost.stabilizing:
        g, ws = gradient(plant, u, margin=margin, method=method)
        min_eig, positive = covariance_positivity(ws.gramians, sys.theta)
        rows.append(["gradient norm", f"{g.norm():.6e}"])
        rows.append(["covariance min eigenvalue", f"{min_eig:.6e}" + ("" if positive else " (NEGATIVE)")])
        for name, value in cost_identities(sys, gramians(sys, method=method)).items():
            rows.append([f"cost ({name})", f"{value:.10g}"])
    print(tabulate(rows, tablefmt="plain"))
    print(tabulate(pr.rows(), headers=["condition", "residual", "score", "status"], floatfmt=".3e"))
    display(f"closed-loop eigenvalues: {_eig_rows(sys.sorted_eigenvalues())}", timestamp=False)

    if not cost.stabilizing:
        logger.warning("controller does not stabilize the plant, cost is +inf", cml=True)
    return EXIT_OK


@timeit("Flow integrated")
def cmd_flow(opts, conf: Config, logger: Logger) -> int:
    plant, u = _load_pair(opts)
    cfg = SolverConfig.from_config(conf)
    try:
        trace = integrate_flow(
            plant,
            u,
            mode=opts.mode,
            dtau=opts.dtau,
            steps=opts.steps,
            progress=not opts.quiet,
            margin=cfg.hurwitz_margin,
            method=cfg.lyapunov_method,
        )
    except FlowEscapedError as err:
        if opts.out_trace is not None and err.trace is not None:
            write_trace(err.trace.to_frame(), opts.out_trace)
            logger.warning(f"partial trace written to {opts.out_trace}")
        raise

    if opts.out_trace is not None:
        write_trace(trace.to_frame(), opts.out_trace)
        logger.info(f"flow trace written to {opts.out_trace}")

    first, last = trace.records[0], trace.records[-1]
    rows = [
        ["mode", trace.mode],
        ["steps", len(trace.records) - 1],
        ["tau", f"{last.tau:.6g}"],
        ["cost", f"{first.cost:.10g} -> {last.cost:.10g}"],
        ["norm drift", f"{trace.norm_drift():.6e}"],
        ["balance drift", f"{trace.balance_drift():.6e}"],
    ]
    print(tabulate(rows, tablefmt="plain"))
    return EXIT_OK


@timeit("Rate estimated")
def cmd_rate(opts, conf: Config, logger: Logger) -> int:
    plant, u = _load_pair(opts)
    cfg = SolverConfig.from_config(conf, f=opts.f, sigma=opts.sigma)
    est = estimate_rate(plant, u, cfg, grad_warn=opts.grad_warn, progress=not opts.quiet)

    summary = est.summary()
    if est.grad_norm > opts.grad_warn * (1 + u.norm()):
        logger.warning(f"gradient norm {est.grad_norm:.3e}: controller is far from stationary", cml=True)
    if not est.local_minimum:
        logger.warning("normal Hessian is indefinite, not a local minimum", cml=True)
    print(tabulate([[k, v] for k, v in summary.items()], tablefmt="plain", floatfmt=".6g"))
    spec = est.hessian_spectrum_normal
    display(f"normal spectrum: min {spec[0]:.4e}, median {np.median(spec):.4e}, max {spec[-1]:.4e}", timestamp=False)
    return EXIT_OK


@timeit("Plotted traces")
def cmd_plot(opts, conf: Config, logger: Logger) -> int:
    import matplotlib

    matplotlib.use("Agg")
    from ..plotters.tracePlotter import TracePlotter

    traces = [read_trace(path) for path in opts.traces]
    e_min = opts.e_min
    if e_min is None:
        e_min = min(float(t["cost"].min()) for t in traces) - opts.floor_offset
        logger.info(f"no E_min supplied, using {e_min:.10g}")
    style = conf.plot_style if opts.style is None else opts.style
    plotter = TracePlotter(traces, e_min, style=style)
    plotter.plot(labels=opts.labels)
    plotter.save(opts.out)
    logger.info(f"plot written to {opts.out}", cml=True)
    return EXIT_OK


def _add_pair(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("plant", type=str, help="Plant file (.plant)")
    parser.add_argument("controller", type=str, help="Controller file (.controller)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqlqg", description="Coherent quantum LQG controller synthesis"
    )
    parser.add_argument("--config", type=str, default=None, help="Configuration JSON, overrides $CQLQG_CONFIG")
    parser.add_argument("--log-dir", type=str, default=None, help="Directory of cqlqg.log")
    parser.add_argument("-q", "--quiet", action="store_true", help="Disable progress bars")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="Physical realizability checks of a plant")
    p.add_argument("plant", type=str)
    p.add_argument("--tol", type=float, default=None, help="Tolerance, defaults to file_pr_tolerance")
    p.add_argument("--absolute", action="store_true", help="Compare raw residual norms instead of scaled ones")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("synthesize", help="Gradient descent synthesis")
    p.add_argument("plant", type=str)
    p.add_argument("--h-max", type=float, default=None)
    p.add_argument("--f", type=float, default=None, help="Armijo reduction factor")
    p.add_argument("--sigma", type=float, default=None, help="Armijo parameter")
    p.add_argument("--epsilon", type=float, default=None, help="Relative stopping threshold")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--starts", type=int, default=10, help="Number of random starts")
    p.add_argument("--scale", type=float, default=None, help="Standard deviation of random starts")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--init", type=str, default=None, help="Descend from this controller instead")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-c", "--out-controller", type=str, default=None)
    p.add_argument("-t", "--out-trace", type=str, default=None)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("cost", help="Cost, gradient norm and spectrum of a controller")
    _add_pair(p)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("flow", help="Euler integration of the gradient flow")
    _add_pair(p)
    p.add_argument("--mode", choices=FLOW_MODES, default="plain")
    p.add_argument("--dtau", type=float, default=1e-3)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("-t", "--out-trace", type=str, default=None)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("rate", help="Local convergence rate at a minimizer")
    _add_pair(p)
    p.add_argument("--f", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--grad-warn", type=float, default=1e-3, help="Relative gradient norm that triggers a warning")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("plot", help="Relative cost deviation of descent traces")
    p.add_argument("traces", type=str, nargs="+")
    p.add_argument("-o", "--out", type=str, required=True, help="Image file")
    p.add_argument("--e-min", type=float, default=None)
    p.add_argument("--floor-offset", type=float, default=0.0)
    p.add_argument("--labels", type=str, nargs="+", default=None)
    p.add_argument("--style", type=str, default=None)
    p.set_defaults(func=cmd_plot)

    """
    cqlqg check cqlqg/fixtures/example8.plant
    cqlqg synthesize example10.plant --starts 10 --seed 7 -c best.controller -t best.csv
    cqlqg rate example9.plant example9_opt.controller --f 0.333 --sigma 0.9
    """
    return parser


def main(argv: list[str] = None) -> int:
    parser = build_parser()
    opts = parser.parse_args(argv)

    try:
        conf = Config(opts.config)
    except ConfigurationError as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_FILE

    log_dir = conf.log_dir if opts.log_dir is None else opts.log_dir
    logger = Logger(log_dir, conf.log_level)
    logger.set_msg_prefix(opts.command)
    logger.debug(f"configuration from {conf.config_path or 'built-in defaults'}")
    try:
        return opts.func(opts, conf, logger)
    except (CqlqgError, OSError) as err:
        logger.error(f"{type(err).__name__}: {err}")
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return exit_code(err)
    finally:
        logger.close()


if __name__ == "__main__":
    sys.exit(main())
