"""Quantum connections: the m-connection, duals, the alpha family, product forms and a synthetic unitary connection."""
import logging
import math
import threading
from abc import ABC, abstractmethod
from typing import Callable

import numpy as np
from scipy import linalg

from .common_types import (
  ConnectionKind,
  GNSContext,
  MetricOperator,
  SingularTransportError,
  TransportOperator,
)
from .config import Settings, resolve
from .exp_family import ExpFamilyModel
from .gns import GaugeChart, lift
from .paths import CurvePath

logger = logging.getLogger(__name__)

Frame = Callable[[np.ndarray], np.ndarray]
Field = Callable[[np.ndarray], list[np.ndarray]]


class Connection(ABC):
  """A family of invertible transports Pi(gamma)^t_s on C^N (x) C^N."""

  kind: ConnectionKind

  def __init__(
      self,
      model: ExpFamilyModel,
      chart: GaugeChart | None = None,
      anchor_theta=None,
      settings: Settings | None = None,
  ):
    self.settings = resolve(settings if settings is not None else (chart.settings if chart else None))
    self.model = model
    if chart is None:
      if anchor_theta is None:
        raise ValueError("a connection needs a gauge chart or an anchor point")
      chart = GaugeChart(model, anchor_theta, self.settings)
    self.chart = chart

  @property
  def hbar(self) -> float:
    return self.settings.hbar

  @property
  def dim(self) -> int:
    return self.model.dim_hilbert ** 2

  @property
  def is_unitary(self) -> bool:
    return False

  @abstractmethod
  def transport_matrix(self, path: CurvePath, s: float, t: float) -> np.ndarray:
    """Returns the matrix of Pi(path)^t_s."""

  def transport(self, path: CurvePath, s: float, t: float) -> TransportOperator:
    return TransportOperator(
        matrix=self.transport_matrix(path, s, t),
        s=float(s),
        t=float(t),
        connection_kind=self.kind,
        path_kind=path.kind,
    )

  def dual(self) -> "Connection":
    return DualConnection(self)

  def context(self, theta) -> GNSContext:
    return self.chart.context(theta)

  def metric(self, theta) -> MetricOperator:
    return self.chart.metric(theta)

  def metric_power(self, theta, lam: float) -> np.ndarray:
    """Returns T(theta)**lam."""
    return self.chart.metric(theta).power(lam)

  def describe(self) -> str:
    return self.kind.value


class ProductFormConnection(Connection):
  """Pi(gamma)^t_s = V(gamma_t) V(gamma_s)^-1 for a frame field V."""

  kind = ConnectionKind.PRODUCT_FORM

  def __init__(
      self,
      model: ExpFamilyModel,
      frame: Frame | None = None,
      chart: GaugeChart | None = None,
      anchor_theta=None,
      settings: Settings | None = None,
      max_condition: float = 1e12,
  ):
    super().__init__(model, chart, anchor_theta, settings)
    self._frame_fn = frame
    self.max_condition = max_condition
    self._cache: dict[bytes, tuple[np.ndarray, np.ndarray]] = {}
    self._lock = threading.Lock()

  def frame(self, theta) -> np.ndarray:
    if self._frame_fn is None:
      raise NotImplementedError("product-form connection without a frame field")
    return np.asarray(self._frame_fn(np.asarray(theta, dtype=float)), dtype=complex)

  def frame_inverse(self, theta, v: np.ndarray) -> np.ndarray:
    try:
      inverse = np.linalg.inv(v)
    except np.linalg.LinAlgError as e:
      raise SingularTransportError(float(np.linalg.cond(v))) from e
    condition = np.linalg.norm(v, 2) * np.linalg.norm(inverse, 2)
    if not np.isfinite(condition) or condition > self.max_condition:
      raise SingularTransportError(float(condition))
    return inverse

  def frame_pair(self, theta) -> tuple[np.ndarray, np.ndarray]:
    theta = np.asarray(theta, dtype=float)
    key = theta.tobytes()
    with self._lock:
      cached = self._cache.get(key)
    if cached is not None:
      return cached
    v = self.frame(theta)
    pair = (v, self.frame_inverse(theta, v))
    with self._lock:
      if len(self._cache) > 8192:
        self._cache.clear()
      self._cache[key] = pair
    return pair

  def transport_matrix(self, path: CurvePath, s: float, t: float) -> np.ndarray:
    if s == t:
      return np.eye(self.dim, dtype=complex)
    v_t, _ = self.frame_pair(path.point(t))
    _, v_s_inv = self.frame_pair(path.point(s))
    return v_t @ v_s_inv


class MConnection(ProductFormConnection):
  """The m-connection, V(theta) = (W diag(sqrt p)) (x) W in the chart gauge."""

  kind = ConnectionKind.M_CONNECTION

  def frame(self, theta) -> np.ndarray:
    ctx = self.context(theta)
    return np.kron(ctx.basis * np.sqrt(ctx.probs), ctx.basis)

  def frame_inverse(self, theta, v: np.ndarray) -> np.ndarray:
    ctx = self.context(theta)
    w_inv = ctx.basis.conj().T
    return np.kron(w_inv / np.sqrt(ctx.probs)[:, None], w_inv)


class DualConnection(Connection):
  """Pi*(gamma)^t_s = T_t^-2 [Pi(gamma)^s_t]^dagger T_s^2."""

  kind = ConnectionKind.UNITARY_DUAL

  def __init__(self, base: Connection):
    super().__init__(base.model, base.chart, settings=base.settings)
    self.base = base

  @property
  def is_unitary(self) -> bool:
    return isinstance(self.base, MConnection)

  def transport_matrix(self, path: CurvePath, s: float, t: float) -> np.ndarray:
    if s == t:
      return np.eye(self.dim, dtype=complex)
    reverse = self.base.transport_matrix(path, t, s)
    return self.metric_power(path.point(t), -2.0) @ reverse.conj().T @ self.metric_power(path.point(s), 2.0)

  def dual(self) -> Connection:
    return self.base

  def describe(self) -> str:
    return f"dual({self.base.describe()})"


class AlphaConnection(Connection):
  """Pi_alpha(gamma)^t_s = T_t^-(1-alpha) Pi_1(gamma)^t_s T_s^(1-alpha) over a unitary base Pi_1."""

  kind = ConnectionKind.ALPHA

  def __init__(self, alpha: float, base: Connection):
    if not base.is_unitary:
      raise ValueError(f"alpha family needs a unitary base connection, got {base.describe()}")
    super().__init__(base.model, base.chart, settings=base.settings)
    self.alpha = float(alpha)
    self.base = base

  @property
  def is_unitary(self) -> bool:
    return self.alpha == 1.0

  def transport_matrix(self, path: CurvePath, s: float, t: float) -> np.ndarray:
    if s == t:
      return np.eye(self.dim, dtype=complex)
    if self.alpha == 1.0:
      return self.base.transport_matrix(path, s, t)
    exponent = 1.0 - self.alpha
    core = self.base.transport_matrix(path, s, t)
    return self.metric_power(path.point(t), -exponent) @ core @ self.metric_power(path.point(s), exponent)

  def dual(self) -> Connection:
    return AlphaConnection(-self.alpha, self.base)

  def describe(self) -> str:
    return f"alpha({self.alpha:g})"


class SyntheticConnection(Connection):
  """Unitary connection integrated from a Hermitian generator field by RK4.

  Solves d Pi/du = -(i/hbar) gamma'(u)^p A_p(gamma(u)) Pi from Pi(s) = I,
  leg by leg on composite paths.
  """

  kind = ConnectionKind.SYNTHETIC

  def __init__(
      self,
      model: ExpFamilyModel,
      field: Field,
      chart: GaugeChart | None = None,
      anchor_theta=None,
      settings: Settings | None = None,
      steps_per_unit: int | None = None,
  ):
    super().__init__(model, chart, anchor_theta, settings)
    self.field = field
    self.steps_per_unit = steps_per_unit or self.settings.samples

  @property
  def is_unitary(self) -> bool:
    return True

  def generator(self, theta, velocity) -> np.ndarray:
    components = self.field(np.asarray(theta, dtype=float))
    return sum(v * a for v, a in zip(velocity, components))

  def _integrate(self, path: CurvePath, s: float, t: float) -> np.ndarray:
    steps = max(4, math.ceil(abs(t - s) * self.steps_per_unit))
    h = (t - s) / steps
    scale = -1j / self.hbar

    def rhs(u: float, pi: np.ndarray) -> np.ndarray:
      return scale * self.generator(path.point(u), path.velocity(u)) @ pi

    pi = np.eye(self.dim, dtype=complex)
    u = s
    for _ in range(steps):
      k1 = rhs(u, pi)
      k2 = rhs(u + h / 2, pi + h / 2 * k1)
      k3 = rhs(u + h / 2, pi + h / 2 * k2)
      k4 = rhs(u + h, pi + h * k3)
      pi = pi + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
      u += h
    return pi

  def transport_matrix(self, path: CurvePath, s: float, t: float) -> np.ndarray:
    if s == t:
      return np.eye(self.dim, dtype=complex)
    if not path.legs:
      return self._integrate(path, s, t)
    count = len(path.legs)
    lo, hi = min(s, t), max(s, t)
    cuts = [lo] + [k / count for k in range(1, count) if lo < k / count < hi] + [hi]
    if t < s:
      cuts = cuts[::-1]
    pi = np.eye(self.dim, dtype=complex)
    for a, b in zip(cuts, cuts[1:]):
      # stay inside one leg so the velocity is smooth
      mid = (a + b) / 2
      k = min(int(mid * count), count - 1)
      leg = path.legs[k]
      pi = self._integrate(leg, a * count - k, b * count - k) @ pi
    return pi


def hermitian_basis(n: int) -> list[np.ndarray]:
  """Orthogonal Hermitian basis of the traceless n x n matrices."""
  mats = []
  for j in range(n):
    for k in range(j + 1, n):
      sym = np.zeros((n, n), dtype=complex)
      sym[j, k] = sym[k, j] = 1
      anti = np.zeros((n, n), dtype=complex)
      anti[j, k], anti[k, j] = -1j, 1j
      mats.extend([sym, anti])
  for d in range(1, n):
    diag = np.zeros(n)
    diag[:d] = 1
    diag[d] = -d
    mats.append(np.diag(diag / math.sqrt(d * (d + 1) / 2)).astype(complex))
  return mats


def synthetic_field(model: ExpFamilyModel, seed: int, hbar: float = 1.0, strength: float = 0.5) -> Field:
  """A seeded non-commuting Hermitian field with curl different from its commutator.

  A_p(theta) = hbar sum_k (a_pk + b_pk theta_(p+1) + c_pk sin theta_p) G_k (x) I.
  """
  rng = np.random.default_rng(seed)
  n = model.dim_param
  basis = [lift(g) for g in hermitian_basis(model.dim_hilbert)]
  a, b, c = (strength * rng.standard_normal((n, len(basis))) for _ in range(3))

  def field(theta: np.ndarray) -> list[np.ndarray]:
    out = []
    for p in range(n):
      nxt = theta[(p + 1) % n]
      coeffs = a[p] + b[p] * nxt + c[p] * math.sin(theta[p])
      out.append(hbar * sum(x * g for x, g in zip(coeffs, basis)))
    return out

  return field


def constant_field(operators: list[np.ndarray]) -> Field:
  ops = [np.asarray(o, dtype=complex) for o in operators]
  return lambda theta: ops


def random_product_frame(model: ExpFamilyModel, seed: int, strength: float = 0.3) -> Frame:
  """V(theta) = expm(theta^k K_k) V_0 with seeded complex K_k and a well-conditioned V_0."""
  rng = np.random.default_rng(seed)
  d = model.dim_hilbert ** 2
  gens = [strength * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(d)
          for _ in range(model.dim_param)]
  v0 = np.eye(d) + 0.2 * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(d)

  def frame(theta: np.ndarray) -> np.ndarray:
    return linalg.expm(sum(t * k for t, k in zip(theta, gens))) @ v0

  return frame


def build_connection(
    kind: ConnectionKind | str,
    model: ExpFamilyModel,
    anchor_theta,
    alpha: float = 0.0,
    settings: Settings | None = None,
    seed: int = 0,
) -> Connection:
  """Builds one of the named connections over a fresh chart anchored at anchor_theta."""
  settings = resolve(settings)
  kind = ConnectionKind(kind)
  chart = GaugeChart(model, anchor_theta, settings)
  m = MConnection(model, chart=chart, settings=settings)
  if kind == ConnectionKind.M_CONNECTION:
    return m
  if kind == ConnectionKind.UNITARY_DUAL:
    return DualConnection(m)
  if kind == ConnectionKind.ALPHA:
    return AlphaConnection(alpha, DualConnection(m))
  if kind == ConnectionKind.SYNTHETIC:
    return SyntheticConnection(model, synthetic_field(model, seed, settings.hbar), chart=chart, settings=settings)
  return ProductFormConnection(model, random_product_frame(model, seed), chart=chart, settings=settings)


## Module-level operations


def transport_m(conn: MConnection, path: CurvePath, s: float, t: float) -> TransportOperator:
  if not isinstance(conn, MConnection):
    raise TypeError(f"expected the m-connection, got {conn.describe()}")
  return conn.transport(path, s, t)


def transport_dual(conn: Connection, path: CurvePath, s: float, t: float) -> TransportOperator:
  return conn.dual().transport(path, s, t)


def transport_alpha(conn: MConnection, alpha: float, path: CurvePath, s: float, t: float) -> TransportOperator:
  return AlphaConnection(alpha, DualConnection(conn)).transport(path, s, t)


def transport_product_form(v: Frame, model: ExpFamilyModel, path: CurvePath, s: float, t: float,
                           chart: GaugeChart | None = None) -> TransportOperator:
  conn = ProductFormConnection(model, v, chart=chart, anchor_theta=path.start)
  return conn.transport(path, s, t)


def lift_transport(pi: TransportOperator | np.ndarray, x: np.ndarray) -> np.ndarray:
  """Returns Pi X Pi^-1."""
  m = pi.matrix if isinstance(pi, TransportOperator) else np.asarray(pi)
  return m @ x @ np.linalg.inv(m)


def adjoint_operator(conn: Connection, path: CurvePath, s: float, t: float) -> np.ndarray:
  """Returns Z^s_t = T_s^-2 [Pi^t_s]^dagger T_t^2."""
  forward = conn.transport_matrix(path, s, t)
  return conn.metric_power(path.point(s), -2.0) @ forward.conj().T @ conn.metric_power(path.point(t), 2.0)


def composition_residual(conn: Connection, path: CurvePath, times: tuple[float, float, float]) -> float:
  p, s, t = times
  lhs = conn.transport_matrix(path, s, t) @ conn.transport_matrix(path, p, s)
  return float(np.linalg.norm(lhs - conn.transport_matrix(path, p, t), 2))


def metric_propagation_residual(conn: Connection, path: CurvePath, s: float, t: float) -> float:
  """Returns |T_s^2 - [Pi^t_s]^dagger T_t^2 Pi*^t_s|."""
  forward = conn.transport_matrix(path, s, t)
  dual = conn.dual().transport_matrix(path, s, t)
  rhs = forward.conj().T @ conn.metric_power(path.point(t), 2.0) @ dual
  return float(np.linalg.norm(conn.metric_power(path.point(s), 2.0) - rhs, 2))


def basis_frame(chart: GaugeChart) -> Frame:
  """theta -> W (x) W; its product-form connection is the unitary basis change."""
  def frame(theta: np.ndarray) -> np.ndarray:
    basis = chart.context(theta).basis
    return np.kron(basis, basis)
  return frame
