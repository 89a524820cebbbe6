"""Registered verification checks and the suite that runs them."""
import logging
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from . import calculus, geodesics, metric_geometry
from .common_types import (
  CheckRecord,
  ConnectionKind,
  GeodesicState,
  QuantumGeometryError,
  RunConfig,
  VerificationReport,
)
from .config import Settings
from .connections import (
  AlphaConnection,
  Connection,
  DualConnection,
  MConnection,
  ProductFormConnection,
  SyntheticConnection,
  basis_frame,
  build_connection,
  composition_residual,
  lift_transport,
  metric_propagation_residual,
  random_product_frame,
  synthetic_field,
)
from .exp_family import ExpFamilyModel, density
from .gns import GaugeChart, gns_context, lift, lifted_closure_residual, metric_operator, wave_covariance_defect
from .matrix_kernel import kubo_transform
from .paths import composite, segment

logger = logging.getLogger(__name__)

ALPHAS = (-1.0, -0.5, 0.0, 0.5, 1.0)


@dataclass(frozen=True)
class CheckContext:
  model: ExpFamilyModel
  theta: np.ndarray
  settings: Settings
  config: RunConfig

  def connection(self, kind: ConnectionKind | str | None = None, anchor=None) -> Connection:
    kind = kind or self.config.connection
    anchor = self.theta if anchor is None else anchor
    return build_connection(kind, self.model, anchor, alpha=self.config.alpha,
                            settings=self.settings, seed=self.config.seed)

  def nearby(self, rng: np.random.Generator, scale: float = 0.1) -> np.ndarray:
    return self.theta + scale * rng.standard_normal(self.theta.size)

  def random_segment(self, rng: np.random.Generator):
    return segment(self.nearby(rng), self.nearby(rng))

  def random_matrix(self, rng: np.random.Generator) -> np.ndarray:
    n = self.model.dim_hilbert
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)

  def random_lifted(self, rng: np.random.Generator) -> np.ndarray:
    return lift(self.random_matrix(rng))

  def fd_tol(self) -> float:
    return self.settings.fd_tol()


CheckFn = Callable[[CheckContext, np.random.Generator], list[CheckRecord]]


## Kernel and representation


def check_kubo(ctx: CheckContext, rng: np.random.Generator) -> list[CheckRecord]:
  rho = density(ctx.model, ctx.theta, ctx.settings)
  x, y = ctx.random_matrix(rng), ctx.random_matrix(rng)
  kx, ky = kubo_transform(rho, x, ctx.settings), kubo_transform(rho, y, ctx.settings)
  scale = max(1.0, np.linalg.norm(x, 2) * np.linalg.norm(y, 2))
  identity = np.eye(ctx.model.dim_hilbert)
  residuals = {
      "kubo.identity": np.linalg.norm(kubo_transform(rho, identity, ctx.settings) - rho, 2),
      "kubo.adjoint": np.linalg.norm(kx.conj().T - kubo_transform(rho, x.conj().T, ctx.settings), 2) / scale,
      "kubo.trace_symmetry": abs(np.trace(kx @ y) - np.trace(x @ ky)) / scale,
      "kubo.trace": abs(np.trace(kx) - np.trace(rho @ x)) / scale,
  }
  records = [CheckRecord.measure(name, "Kubo transform identities", ctx.theta, r, 1e-10)
             for name, r in residuals.items()]

  w, u = np.linalg.eigh(rho)
  xt = u.conj().T @ x @ u

  def integrand(s: float) -> np.ndarray:
    return u @ ((w ** s)[:, None] * xt * (w ** (1 - s))[None, :]) @ u.conj().T

  quadrature, _ = integrate.quad_vec(integrand, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12)
  records.append(CheckRecord.measure(
      "kubo.quadrature", "Kubo transform as an integral", ctx.theta,
      np.linalg.norm(kx - quadrature, 2) / max(1.0, np.linalg.norm(x, 2)), 1e-7))
  return records


def check_gns(ctx: CheckContext, rng: np.random.Generator) -> list[CheckRecord]:
  worst, defect = 0.0, 0.0
  for _ in range(5):
    theta = ctx.nearby(rng)
    gns = gns_context(ctx.model, theta, settings=ctx.settings)
    rho = density(ctx.model, theta, ctx.settings)
    for _ in range(20):
      b = ctx.random_matrix(rng)
      worst = max(worst, abs(np.trace(rho @ b) - np.vdot(gns.omega, lift(b) @ gns.omega)))
    defect = max(defect, wave_covariance_defect(gns, metric_operator(ctx.model, theta, gns)))
  return [
      CheckRecord.measure("gns.identity", "GNS representation of the state", ctx.theta, worst, 1e-10),
      CheckRecord.measure("gns.wave_covariance", "metric operator fixes the wave vector", ctx.theta,
                          defect, 1e-10, informational=True),
  ]


## Connections


def check_axioms(ctx: CheckContext, rng: np.random.Generator) -> list[CheckRecord]:
  conn = ctx.connection()
  path = ctx.random_segment(rng)
  identity = np.eye(conn.dim)
  a1 = np.linalg.norm(conn.transport_matrix(path, 0.4, 0.4) - identity, 2)
  a2 = np.linalg.norm(conn.transport_matrix(path, 1.0, 0.0) @ conn.transport_matrix(path, 0.0, 1.0) - identity, 2)
  omega_s, omega_t = conn.context(path.point(0.0)).omega, conn.context(path.point(1.0)).omega
  a4 = np.linalg.norm(conn.transport_matrix(path, 0.0, 1.0) @ omega_s - omega_t)
  records = [
      CheckRecord.measure("connections.identity", "transport at equal times", ctx.theta, a1, 1e-10),
      CheckRecord.measure("connections.inverse", "transport back and forth", ctx.theta, a2, 1e-8),
      CheckRecord.measure("connections.covariance", "transport of the wave vector", ctx.theta, a4, 1e-8,
                          informational=not isinstance(conn, MConnection)),
  ]
  if isinstance(conn, ProductFormConnection):
    records.append(CheckRecord.measure("connections.composition", "composition law of product forms", ctx.theta,
                                       composition_residual(conn, path, (0.0, 0.3, 1.0)), 1e-10))

  potential = calculus.vector_potential(conn, ctx.theta)
  tol = calculus.fd_tolerance(ctx.settings, potential)
  v = rng.standard_normal(ctx.theta.size)
  linearity = np.linalg.norm(calculus.directional_potential(conn, ctx.theta, v) - potential.along(v), 2)
  records.append(CheckRecord.measure("calculus.linearity", "directional vector potential", ctx.theta,
                                     linearity, 10 * tol))
  if conn.is_unitary:
    records.append(CheckRecord.measure("calculus.hermitian_potential", "vector potential of a unitary connection",
                                       ctx.theta, potential.hermiticity_defect(), 5 * tol))
  if isinstance(conn, MConnection):
    records.append(CheckRecord.measure("calculus.schrodinger", "evolution of the wave vector", ctx.theta,
                                       calculus.schrodinger_residual(conn, path), 10 * tol))
  return records


def check_duality(ctx: CheckContext, rng: np.random.Generator) -> list[CheckRecord]:
  m = ctx.connection(ConnectionKind.M_CONNECTION)
  dual = m.dual()
  worst = 0.0
  for _ in range(5):
    path = ctx.random_segment(rng)
    for _ in range(20):
      residual, scale = metric_geometry.transported_pairing_residual(
          m, dual, path, 0.0, 1.0, ctx.random_lifted(rng), ctx.random_lifted(rng))
      worst = max(worst, residual / scale)
  path = ctx.random_segment(rng)
  pi = dual.transport_matrix(path, 0.0, 1.0)
  unitarity = np.linalg.norm(pi.conj().T @ pi - np.eye(dual.dim), 2)
  return [
      CheckRecord.measure("connections.duality", "dual connection pairing", ctx.theta, worst, 1e-7),
      CheckRecord.measure("connections.dual_unitary", "dual of the m-connection is unitary", ctx.theta,
                          unitarity, 1e-8),
  ]


def check_alpha_family(ctx: CheckContext, rng: np.random.Generator) -> list[CheckRecord]:
  m = ctx.connection(ConnectionKind.M_CONNECTION)
  unitary = DualConnection(m)
  family = {alpha: AlphaConnection(alpha, unitary) for alpha in ALPHAS + (1.5, 2.0, 2.5, 3.0)}
  path = ctx.random_segment(rng)
  records = []
  for alpha in ALPHAS:
    worst = 0.0
    for _ in range(10):
      residual, scale = metric_geometry.transported_pairing_residual(
          family[alpha], family[-alpha], path, 0.0, 1.0, ctx.random_lifted(rng), ctx.random_lifted(rng))
      worst = max(worst, residual / scale)
    records.append(CheckRecord.measure(f"connections.alpha_duality[{alpha:g}]", "dual of an alpha connection",
                                       ctx.theta, worst, 1e-7))
    forward = family[alpha].transport_matrix(path, 0.0, 1.0)
    dagger = np.linalg.norm(forward.conj().T - family[2 - alpha].transport_matrix(path, 1.0, 0.0), 2)
    dagger /= max(1.0, np.linalg.norm(forward, 2))
    records.append(CheckRecord.measure(f"connections.alpha_adjoint[{alpha:g}]", "adjoint of an alpha transport",
                                       ctx.theta, dagger, 1e-8))
  minus_one = np.linalg.norm(
      family[-1.0].transport_matrix(path, 0.0, 1.0) - DualConnection(family[1.0]).transport_matrix(path, 0.0, 1.0), 2)
  records.append(CheckRecord.measure("connections.alpha_minus_one", "alpha = -1 is the dual of alpha = 1",
                                     ctx.theta, minus_one, 1e-8))
  same_as_dual = np.linalg.norm(
      family[1.0].transport_matrix(path, 0.0, 1.0) - unitary.transport_matrix(path, 0.0, 1.0), 2)
  records.append(CheckRecord.measure("connections.alpha_one", "alpha = 1 is the unitary connection",
                                     ctx.theta, same_as_dual, 1e-10))
  return records


def check_adjoint(ctx: CheckContext, rng: np.random.Generator) -> list[CheckRecord]:
  conn = ctx.connection()
  worst = 0.0
  for _ in range(20):
    path = ctx.random_segment(rng)
    residual, scale = metric_geometry.adjoint_pairing_residual(
        conn, path, 0.0, 1.0, ctx.random_lifted(rng), ctx.random_lifted(rng))
    worst = max(worst, residual / scale)
  return [CheckRecord.measure("connections.adjoint", "adjoint of the lifted transport", ctx.theta, worst, 1e-7)]


def check_closure(ctx: CheckContext, rng: np.random.Generator) -> list[CheckRecord]:
  m = ctx.connection(ConnectionKind.M_CONNECTION)
  conns = [m, DualConnection(m), AlphaConnection(0.5, DualConnection(m))]
  path = ctx.random_segment(rng)
  closure, homomorphism = 0.0, 0.0
  for conn in conns:
    pi = conn.transport(path, 0.0, 1.0)
    for _ in range(10):
      x, y = ctx.random_lifted(rng), ctx.random_lifted(rng)
      moved = lift_transport(pi, x)
      closure = max(closure, lifted_closure_residual(moved, ctx.model.dim_hilbert) / np.linalg.norm(moved, 2))
      product = np.linalg.norm(lift_transport(pi, x @ y) - moved @ lift_transport(pi, y), 2)
      homomorphism = max(homomorphism, product / max(1.0, np.linalg.norm(x, 2) * np.linalg.norm(y, 2)))
  return [
      CheckRecord.measure("connections.closure", "lifted transport preserves the lifted algebra", ctx.theta,
                          closure, 1e-8),
      CheckRecord.measure("connections.homomorphism", "lifted transport preserves products", ctx.theta,
                          homomorphism, 1e-9),
  ]


def check_metric_propagation(ctx: CheckContext, rng: np.random.Generator) -> list[CheckRecord]:
  conn = ctx.connection()
  worst = 0.0
  for _ in range(5):
    path = ctx.random_segment(rng)
    scale = np.linalg.norm(conn.metric_power(path.point(0.0), 2.0), 2)
    worst = max(worst, metric_propagation_residual(conn, path, 0.0, 1.0) / scale)
  return [CheckRecord.measure("connections.metric_propagation", "metric carried by a dual pair", ctx.theta,
                              worst, 1e-8)]


def check_commutative(ctx: CheckContext, rng: np.random.Generator) -> list[CheckRecord]:
  if not ctx.model.is_commutative():
    return []
  dual = DualConnection(ctx.connection(ConnectionKind.M_CONNECTION))
  first = ctx.random_segment(rng)
  second = segment(first.end, ctx.nearby(rng))
  worst = 0.0
  identity = np.eye(dual.dim)
  for path in (first, second, composite([first, second])):
    for s, t in ((0.0, 1.0), (1.0, 0.0), (0.2, 0.7)):
      worst = max(worst, np.linalg.norm(dual.transport_matrix(path, s, t) - identity, 2))
  return [CheckRecord.measure("connections.commutative_dual", "dual transport of a commutative family",
                              ctx.theta, worst, 1e-8)]


## Differential calculus


def _synthetic(ctx: CheckContext, anchor=None) -> SyntheticConnection:
  chart = GaugeChart(ctx.model, ctx.theta if anchor is None else anchor, ctx.settings)
  return SyntheticConnection(ctx.model, synthetic_field(ctx.model, ctx.config.seed, ctx.settings.hbar),
                             chart=chart, settings=ctx.settings)


def check_product_holonomy(ctx: CheckContext, rng: np.random.Generator) -> list[CheckRecord]:
  if ctx.theta.size < 2:
    return []
  tol = ctx.fd_tol()
  m = ctx.connection(ConnectionKind.M_CONNECTION)
  frame = random_product_frame(ctx.model, int(rng.integers(2 ** 31)))
  product = ProductFormConnection(ctx.model, frame, chart=m.chart, settings=ctx.settings)
  synthetic_norm = calculus.holonomy_formula(_synthetic(ctx), ctx.theta).max_norm()
  return [
      CheckRecord.measure("calculus.m_holonomy", "holonomy of a product-form connection", ctx.theta,
                          calculus.holonomy_formula(m, ctx.theta).max_norm(), 10 * tol),
      CheckRecord.measure("calculus.product_holonomy", "holonomy of a product-form connection", ctx.theta,
                          calculus.holonomy_formula(product, ctx.theta).max_norm(), 10 * tol),
      CheckRecord.measure("calculus.holonomy_sensitivity", "non-product connection has holonomy", ctx.theta,
                          100 * tol / max(synthetic_norm, 1e-300), 1.0, detail={"holonomy_norm": synthetic_norm}),
  ]


def check_holonomy_agreement(ctx: CheckContext, rng: np.random.Generator) -> list[CheckRecord]:
  if ctx.theta.size < 2:
    return []
  conn = _synthetic(ctx)
  formula = calculus.holonomy_formula(conn, ctx.theta)
  worst = 0.0
  n = ctx.theta.size
  for p in range(n):
    for q in range(p + 1, n):
      loop = calculus.holonomy_loop(conn, ctx.theta, p, q)
      worst = max(worst, np.linalg.norm(loop - formula.components[p][q], 2))
  return [CheckRecord.measure("calculus.holonomy_agreement", "holonomy from loops and from potentials",
                              ctx.theta, worst, 50 * ctx.fd_tol())]


def check_curvature(ctx: CheckContext, rng: np.random.Generator) -> list[CheckRecord]:
  if ctx.theta.size < 2:
    return []
  conn = _synthetic(ctx)
  holonomy = calculus.holonomy_formula(conn, ctx.theta).components[0][1]
  worst = 0.0
  for _ in range(5):
    base = [ctx.random_lifted(rng) for _ in range(ctx.theta.size + 2)]

    def field(theta: np.ndarray, base=base) -> np.ndarray:
      out = base[0] + np.sin(theta[0]) * base[1]
      for k, th in enumerate(theta):
        out = out + th * base[k + 2]
      return out

    x = field(ctx.theta)
    commutator = calculus.curvature_commutator(conn, field, ctx.theta, 0, 1)
    residual = np.linalg.norm(1j * conn.hbar * commutator - (holonomy @ x - x @ holonomy), 2)
    worst = max(worst, residual / max(1.0, np.linalg.norm(x, 2)))
  return [CheckRecord.measure("calculus.curvature", "curvature from holonomy", ctx.theta, worst, 100 * ctx.fd_tol())]


def check_dual_conjugation(ctx: CheckContext, rng: np.random.Generator) -> list[CheckRecord]:
  records = [calculus.dual_holonomy_conjugation(_synthetic(ctx), ctx.theta)]
  unitary = DualConnection(ctx.connection(ConnectionKind.M_CONNECTION))
  both = max(calculus.holonomy_formula(unitary, ctx.theta).max_norm(),
             calculus.holonomy_formula(unitary.dual(), ctx.theta).max_norm())
  records.append(CheckRecord.measure("calculus.dual_flatness", "holonomy and dual holonomy vanish together",
                                     ctx.theta, both, 50 * ctx.fd_tol()))
  return records


def check_dual_potential(ctx: CheckContext, rng: np.random.Generator) -> list[CheckRecord]:
  conn = ctx.connection()
  return [calculus.dual_potential_relation(conn, ctx.nearby(rng, 0.05)) for _ in range(5)]


## Metric geometry


def check_metric(ctx: CheckContext, rng: np.random.Generator) -> list[CheckRecord]:
  conn = ctx.connection()
  potential = calculus.vector_potential(conn, ctx.theta)
  g = metric_geometry.metric_tensor(conn, potential)
  shifted = metric_geometry.metric_tensor(
      conn, metric_geometry.gauge_shifted(potential, rng.standard_normal(ctx.theta.size)))
  records = [
      CheckRecord.measure("metric.gauge_invariance", "metric under a scalar gauge shift", ctx.theta,
                          np.max(np.abs(g.g - shifted.g)), 1e-8),
      CheckRecord.measure("metric.positive_definite", "non-degenerate metric", ctx.theta,
                          -g.min_eigenvalue, -1e-8, detail={"min_eigenvalue": g.min_eigenvalue}),
  ]
  if not g.degenerate:
    records.append(CheckRecord.measure(
        "metric.christoffel_orthogonality", "remainder of the covariant derivative of A", ctx.theta,
        metric_geometry.christoffel_orthogonality_residual(conn, ctx.theta), 1e-6))
  bkm = metric_geometry.bkm_metric(ctx.model, ctx.theta, ctx.settings)
  relative = np.linalg.norm(g.g - bkm) / max(np.linalg.norm(bkm), 1e-300)
  records.append(CheckRecord.measure("metric.bkm_comparison", "comparison with Kubo-Mori information", ctx.theta,
                                     relative, 1e-6, informational=True,
                                     detail={"g": g.g.tolist(), "bkm": bkm.tolist()}))
  return records


## Geodesics


def check_autoparallel(ctx: CheckContext, rng: np.random.Generator) -> list[CheckRecord]:
  tol = ctx.settings.autoparallel_tol
  m = ctx.connection(ConnectionKind.M_CONNECTION)
  unitary = ProductFormConnection(ctx.model, basis_frame(m.chart), chart=m.chart, settings=ctx.settings)
  dual = DualConnection(m)
  path = ctx.random_segment(rng)
  d = m.dim

  def draw() -> np.ndarray:
    return (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2 * d)

  x, y = geodesics.frame_field(m, draw()), geodesics.frame_field(m, draw())
  u = geodesics.frame_field(unitary, draw())
  records = [
      CheckRecord.measure("geodesics.identity_field", "identity is autoparallel", ctx.theta,
                          geodesics.autoparallel_residual(m, lambda th: np.eye(d), path), tol),
      CheckRecord.measure("geodesics.frame_field", "frame fields are autoparallel", ctx.theta,
                          geodesics.autoparallel_residual(m, x, path), tol),
      CheckRecord.measure("geodesics.field_sum", "autoparallel fields form an algebra", ctx.theta,
                          geodesics.autoparallel_residual(m, geodesics.field_sum(x, y), path), 2 * tol),
      CheckRecord.measure("geodesics.field_product", "autoparallel fields form an algebra", ctx.theta,
                          geodesics.autoparallel_residual(m, geodesics.field_product(x, y), path), 2 * tol),
      CheckRecord.measure("geodesics.field_adjoint", "adjoint fields for a unitary connection", ctx.theta,
                          geodesics.autoparallel_residual(dual, geodesics.field_adjoint(u), path), tol),
  ]
  for alpha in (-0.5, 0.0, 0.5):
    conjugated = geodesics.alpha_conjugate(m, u, alpha)
    records.append(CheckRecord.measure(
        f"geodesics.alpha_conjugate[{alpha:g}]", "conjugated fields are autoparallel for alpha connections",
        ctx.theta, geodesics.autoparallel_residual(AlphaConnection(alpha, dual), conjugated, path), tol))
  records.append(CheckRecord.measure(
      "geodesics.covariant_consistency", "covariant derivative of an autoparallel field", ctx.theta,
      geodesics.covariant_consistency(m, x, path), 10 * tol))
  return records


def check_conservation(ctx: CheckContext, rng: np.random.Generator) -> list[CheckRecord]:
  n = ctx.theta.size
  velocity = np.asarray(ctx.config.initial_velocity or np.eye(n)[0], dtype=float)
  initial = GeodesicState(theta=ctx.theta, velocity=velocity, time=0.0)
  m = ctx.connection(ConnectionKind.M_CONNECTION)
  self_dual = AlphaConnection(0.0, DualConnection(m))
  trace = geodesics.integrate_geodesic(self_dual, initial, ctx.config.horizon, ctx.config.geodesic_step)
  diagnostics = geodesics.geodesic_diagnostics(self_dual, trace)
  preconditions = geodesics.conservation_preconditions(diagnostics, ctx.settings)
  informational = not all(preconditions.values()) or trace.truncated
  control = geodesics.integrate_geodesic(m, initial, ctx.config.horizon, ctx.config.geodesic_step)
  detail = {"preconditions": preconditions, **diagnostics.model_dump(exclude={"drift_a"})}
  records = [
      CheckRecord.measure("geodesics.conservation", "tangent length along a self-dual geodesic", ctx.theta,
                          trace.relative_drift(), 1e-4, informational=informational, detail=detail),
      CheckRecord.measure("geodesics.m_control", "tangent length drifts for the m-connection", ctx.theta,
                          -control.relative_drift(), -1e-2, informational=informational),
  ]
  for name, value in (("a", diagnostics.residual_a), ("b", diagnostics.residual_b), ("c", diagnostics.residual_c)):
    records.append(CheckRecord.measure(f"geodesics.diagnostic_{name}", "operator-level geodesic residual",
                                       ctx.theta, value, ctx.settings.diag_tol, informational=True))
  return records


class VerificationSuite:
  """Ordered registry of checks.

  Checks run concurrently; each draws from its own generator seeded by
  (seed, registry position), so results do not depend on scheduling.
  """

  def __init__(self):
    self.checks: dict[str, CheckFn] = {}

  def register(self, name: str, fn: CheckFn):
    if name in self.checks:
      raise ValueError(f"check '{name}' is already registered")
    self.checks[name] = fn

  def list_checks(self) -> list[str]:
    return list(self.checks)

  def _run_one(self, index: int, name: str, ctx: CheckContext) -> tuple[list[CheckRecord], str | None]:
    rng = np.random.default_rng([ctx.config.seed, index])
    logger.info(f"Running check {name}")
    try:
      return self.checks[name](ctx, rng), None
    except QuantumGeometryError as e:
      logger.error(f"Check {name} raised {type(e).__name__}: {e}")
      logger.debug(traceback.format_exc())
      return [], f"{name}: {type(e).__name__}: {e}"

  def run(self, model: ExpFamilyModel, config: RunConfig, settings: Settings,
          only: list[str] | None = None) -> VerificationReport:
    theta = np.asarray(config.theta, dtype=float)
    ctx = CheckContext(model=model, theta=theta, settings=settings, config=config)
    selected = [(i, name) for i, name in enumerate(self.checks) if only is None or name in only]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
      futures = [pool.submit(self._run_one, i, name, ctx) for i, name in selected]
      results = [f.result() for f in futures]
    records = [r for recs, _ in results for r in recs]
    errors = [err for _, err in results if err]
    return VerificationReport(
        suite="verify",
        records=records,
        config={**config.model_dump(), "model_name": model.name, "settings": settings.model_dump()},
        errors=errors,
    )


def default_suite() -> VerificationSuite:
  suite = VerificationSuite()
  suite.register("kubo", check_kubo)
  suite.register("gns", check_gns)
  suite.register("axioms", check_axioms)
  suite.register("duality", check_duality)
  suite.register("alpha_family", check_alpha_family)
  suite.register("adjoint", check_adjoint)
  suite.register("closure", check_closure)
  suite.register("metric_propagation", check_metric_propagation)
  suite.register("commutative", check_commutative)
  suite.register("product_holonomy", check_product_holonomy)
  suite.register("holonomy_agreement", check_holonomy_agreement)
  suite.register("curvature", check_curvature)
  suite.register("dual_conjugation", check_dual_conjugation)
  suite.register("dual_potential", check_dual_potential)
  suite.register("metric", check_metric)
  suite.register("autoparallel", check_autoparallel)
  suite.register("conservation", check_conservation)
  return suite
