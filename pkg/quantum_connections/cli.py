"""Command-line surface: verify, holonomy, geodesic and scan."""
import argparse
import itertools
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

from . import calculus, geodesics, metric_geometry
from .checks import default_suite
from .common_types import (
    CheckRecord,
    ConfigError,
    GeodesicState,
    QuantumGeometryError,
    RunConfig,
    VerificationReport,
)
from .config import Settings, load_settings
from .connections import AlphaConnection, build_connection
from .exp_family import ExpFamilyModel, load_model, log_partition

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1


def prepare(config: RunConfig, settings: Settings | None = None) -> tuple[ExpFamilyModel, Settings]:
    """Loads the model and the run settings, and checks theta against the model.

    Raises:
        ConfigError: If the model cannot be loaded or theta has the wrong length.
    """
    settings = settings or load_settings(fd_step=config.fd_step, samples=config.samples)
    model = load_model(config.model)
    if len(config.theta) != model.dim_param:
        raise ConfigError(f"theta has {len(config.theta)} entries, model '{model.name}' has n={model.dim_param}",
                          field="theta")
    return model, settings


def exit_status(report: VerificationReport) -> int:
    if report.errors:
        return QuantumGeometryError.exit_code
    return EXIT_OK if report.all_passed else EXIT_CHECK_FAILED


def cmd_verify(config: RunConfig, settings: Settings | None = None) -> VerificationReport:
    model, settings = prepare(config, settings)
    logger.info(f"Verifying model '{model.name}' at theta={config.theta} with {config.workers} worker(s)")
    report = default_suite().run(model, config, settings)
    logger.info(f"Verification finished: {report.summary.model_dump()}, {len(report.errors)} error(s)")
    return report


def cmd_holonomy(config: RunConfig, p: int | None = None, q: int | None = None,
                 settings: Settings | None = None) -> VerificationReport:
    """Compares the formula and loop estimates of the holonomy tensor.

    Raises:
        ConfigError: If the model has fewer than two parameters or p, q are out of range.
    """
    model, settings = prepare(config, settings)
    n = model.dim_param
    if n < 2:
        raise ConfigError("holonomy requires n >= 2", field="model")
    if p is None or q is None:
        pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    else:
        if not (0 <= p < n and 0 <= q < n) or p == q:
            raise ConfigError(f"need distinct indices in [0, {n}), got p={p}, q={q}", field="p")
        pairs = [(p, q)]
    theta = np.asarray(config.theta, dtype=float)
    conn = build_connection(config.connection, model, theta, alpha=config.alpha, settings=settings, seed=config.seed)
    formula = calculus.holonomy_formula(conn, theta)
    tolerance = 50 * settings.fd_tol()
    records = []
    for a, b in pairs:
        loop = calculus.holonomy_loop(conn, theta, a, b)
        from_formula = formula.components[a][b]
        records.append(CheckRecord.measure(
            f"holonomy.agreement[{a},{b}]", "holonomy from loops and from potentials", theta,
            np.linalg.norm(loop - from_formula, 2), tolerance,
            detail={
                "formula_norm": float(np.linalg.norm(from_formula, 2)),
                "loop_norm": float(np.linalg.norm(loop, 2)),
            },
        ))
    records.append(CheckRecord.measure("holonomy.antisymmetry", "holonomy is antisymmetric", theta,
                                       formula.antisymmetry_defect(), tolerance, informational=True))
    return VerificationReport(
        suite="holonomy",
        records=records,
        config={**config.model_dump(), "connection_name": conn.describe()},
    )


def cmd_geodesic(config: RunConfig, settings: Settings | None = None) -> tuple[VerificationReport, pd.DataFrame]:
    """Integrates a geodesic from config.theta and tabulates the trace.

    Raises:
        DegenerateMetricError: If the metric at the initial point is degenerate.
    """
    model, settings = prepare(config, settings)
    theta = np.asarray(config.theta, dtype=float)
    n = theta.size
    velocity = np.asarray(config.initial_velocity if config.initial_velocity is not None else np.eye(n)[0], dtype=float)
    conn = build_connection(config.connection, model, theta, alpha=config.alpha, settings=settings, seed=config.seed)
    trace = geodesics.integrate_geodesic(conn, GeodesicState(theta=theta, velocity=velocity, time=0.0),
                                         config.horizon, config.geodesic_step)
    diagnostics = geodesics.geodesic_diagnostics(conn, trace)
    preconditions = geodesics.conservation_preconditions(diagnostics, settings)
    self_dual = isinstance(conn, AlphaConnection) and conn.alpha == 0.0

    frame = pd.DataFrame({"t": trace.times})
    for i in range(n):
        frame[f"theta_{i + 1}"] = [s.theta[i] for s in trace.states]
    for i in range(n):
        frame[f"thetadot_{i + 1}"] = [s.velocity[i] for s in trace.states]
    frame["tangent_length"] = trace.tangent_length
    frame["residual_a"] = diagnostics.drift_a

    records = [
        CheckRecord.measure(
            "geodesics.conservation", "tangent length along the geodesic", theta, trace.relative_drift(), 1e-4,
            informational=not (self_dual and all(preconditions.values())),
            detail={"preconditions": preconditions, "steps": len(trace.states) - 1},
        ),
    ]
    for name, value in (("a", diagnostics.residual_a), ("b", diagnostics.residual_b), ("c", diagnostics.residual_c)):
        records.append(CheckRecord.measure(f"geodesics.diagnostic_{name}", "operator-level geodesic residual",
                                           theta, value, settings.diag_tol, informational=True))
    report = VerificationReport(
        suite="geodesic",
        records=records,
        config={**config.model_dump(), "connection_name": conn.describe()},
        errors=[f"trace truncated: {trace.failure}"] if trace.truncated else [],
    )
    return report, frame


def parse_grid(axes: list[str] | None, n: int) -> list[np.ndarray]:
    """Expands 'lo:hi:count' axis specs into the points of their product grid.

    Raises:
        ConfigError: If an axis is malformed or the axis count differs from n.
    """
    axes = axes or []
    if len(axes) != n:
        raise ConfigError(f"grid needs {n} axes of the form lo:hi:count, got {len(axes)}", field="grid")
    values = []
    for axis in axes:
        try:
            lo, hi, count = axis.split(":")
            values.append(np.linspace(float(lo), float(hi), int(count)))
        except ValueError as e:
            raise ConfigError(f"malformed grid axis '{axis}'", field="grid") from e
    return [np.array(point) for point in itertools.product(*values)]


def _scan_columns(n: int) -> list[str]:
    columns = [f"theta_{i + 1}" for i in range(n)]
    columns += [f"g_{p + 1}{q + 1}" for p in range(n) for q in range(n)]
    columns += [f"H_{p + 1}{q + 1}" for p in range(n) for q in range(p + 1, n)]
    return columns + ["alpha", "flagged", "error"]


def _scan_point(model: ExpFamilyModel, config: RunConfig, settings: Settings, point: np.ndarray) -> dict:
    n = point.size
    row = {f"theta_{i + 1}": float(x) for i, x in enumerate(point)}
    row.update({"flagged": False, "error": ""})
    try:
        row["alpha"] = log_partition(model, point)
        conn = build_connection(config.connection, model, point, alpha=config.alpha, settings=settings,
                                seed=config.seed)
        potential = calculus.vector_potential(conn, point)
        g = metric_geometry.metric_tensor(conn, potential).g
        holonomy = calculus.holonomy_formula(conn, point, potential)
    except QuantumGeometryError as e:
        logger.warning(f"Scan point {point.tolist()} flagged: {type(e).__name__}: {e}")
        row.update({"flagged": True, "error": f"{type(e).__name__}: {e}"})
        return row
    for p in range(n):
        for q in range(n):
            row[f"g_{p + 1}{q + 1}"] = float(g[p, q])
            if q > p:
                row[f"H_{p + 1}{q + 1}"] = float(np.linalg.norm(holonomy.components[p][q], 2))
    return row


def cmd_scan(config: RunConfig, grid: list[str] | None, settings: Settings | None = None) -> pd.DataFrame:
    """Tabulates g, |H| and the log-partition over a parameter grid.

    Failing points are flagged and the scan continues.
    """
    model, settings = prepare(config, settings)
    points = parse_grid(grid, model.dim_param)
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        rows = list(pool.map(lambda point: _scan_point(model, config, settings, point), points))
    frame = pd.DataFrame(rows, columns=_scan_columns(model.dim_param))
    flagged = int(frame["flagged"].sum()) if len(frame) else 0
    logger.info(f"Scanned {len(frame)} point(s), {flagged} flagged")
    return frame


## Output


def write_report(report: VerificationReport, out: str | None, stream=None):
    if out is None:
        print(report.to_json(), file=stream or sys.stdout)
        return
    Path(out).write_text(report.to_json())
    logger.info(f"Wrote {report.suite} report to {out}")


def write_frame(frame: pd.DataFrame, out: str | None):
    if out is None:
        frame.to_csv(sys.stdout, index=False)
        return
    frame.to_csv(out, index=False)
    logger.info(f"Wrote {len(frame)} row(s) to {out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quantum-connections",
                                     description="Quantum connections on finite-dimensional exponential families.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", default="pauli2", help="preset name or model JSON file")
    common.add_argument("--theta", type=float, nargs="+", required=True)
    common.add_argument("--connection", choices=["m", "dual", "alpha", "synthetic"], default="m")
    common.add_argument("--alpha", type=float, default=0.0)
    common.add_argument("--fd-step", type=float, default=None)
    common.add_argument("--samples", type=int, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None)
    common.add_argument("--workers", type=int, default=1)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="run the verification suite")
    holonomy = sub.add_parser("holonomy", parents=[common], help="formula and loop holonomy")
    holonomy.add_argument("--p", type=int, default=None)
    holonomy.add_argument("--q", type=int, default=None)
    geodesic = sub.add_parser("geodesic", parents=[common], help="integrate a geodesic")
    geodesic.add_argument("--velocity", type=float, nargs="+", default=None)
    geodesic.add_argument("--horizon", type=float, default=1.0)
    geodesic.add_argument("--step", type=float, default=1 / 256)
    scan = sub.add_parser("scan", parents=[common], help="tabulate g and |H| over a grid")
    scan.add_argument("--grid", nargs="*", default=None, metavar="LO:HI:COUNT")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    try:
        return RunConfig(
            model=args.model,
            theta=args.theta,
            connection=args.connection,
            alpha=args.alpha,
            fd_step=args.fd_step,
            samples=args.samples,
            seed=args.seed,
            out=args.out,
            workers=args.workers,
            initial_velocity=getattr(args, "velocity", None),
            horizon=getattr(args, "horizon", 1.0),
            geodesic_step=getattr(args, "step", 1 / 256),
        )
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def run(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    if args.command == "verify":
        report = cmd_verify(config)
        write_report(report, config.out)
        return exit_status(report)
    if args.command == "holonomy":
        report = cmd_holonomy(config, args.p, args.q)
        write_report(report, config.out)
        return exit_status(report)
    if args.command == "geodesic":
        report, frame = cmd_geodesic(config)
        write_frame(frame, config.out)
        if config.out is None:
            write_report(report, None, stream=sys.stderr)
        else:
            write_report(report, str(Path(config.out).with_suffix(".json")))
        return exit_status(report)
    frame = cmd_scan(config, args.grid)
    write_frame(frame, config.out)
    return EXIT_CHECK_FAILED if len(frame) and frame["flagged"].any() else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level)
    try:
        return run(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return e.exit_code
    except QuantumGeometryError as e:
        logger.exception(f"{args.command} aborted: {e}")
        return e.exit_code
