"""Explicit GNS representation on C^N (x) C^N with a continued eigenbasis gauge."""
import logging
import threading

import numpy as np

from .common_types import (
    ContinuationLostError,
    DegeneracyError,
    GNSContext,
    MetricOperator,
)
from .config import Settings, resolve
from .exp_family import ExpFamilyModel, check_point, density
from .matrix_kernel import eig_hermitian, kron

logger = logging.getLogger(__name__)


def lift(b) -> np.ndarray:
    """Returns B (x) I."""
    b = np.asarray(b, dtype=complex)
    return kron(b, np.eye(b.shape[0]))


def wave_vector(probs: np.ndarray, basis: np.ndarray) -> np.ndarray:
    n = probs.shape[0]
    return np.einsum("ai,bi,i->ab", basis, basis, np.sqrt(probs)).reshape(n * n)


def _pivot_phases(basis: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(basis), axis=0)
    pivots = basis[idx, np.arange(basis.shape[1])]
    return basis * (np.abs(pivots) / pivots)


def gns_context(
    model: ExpFamilyModel,
    theta,
    continuation: GNSContext | None = None,
    settings: Settings | None = None,
) -> GNSContext:
    """Builds the eigen-data and wave vector of rho_theta in a fixed gauge.

    Without a continuation the eigenvalues are sorted descending and each
    column's largest entry is made real positive. With one, each reference
    column is matched to the eigenvector of largest overlap and the overlap
    is made real positive.

    Raises:
        DegeneracyError: If two eigenvalues collide and no continuation is given.
        ContinuationLostError: If the overlap matching is ambiguous.
    """
    settings = resolve(settings)
    theta = check_point(model, theta)
    system = eig_hermitian(density(model, theta, settings), settings)
    values, vectors = system.eigenvalues, system.eigenvectors

    if continuation is None:
        order = np.argsort(-values, kind="stable")
        probs = values[order]
        gaps = probs[:-1] - probs[1:]
        if gaps.size and gaps.min() <= settings.degeneracy_guard:
            k = int(np.argmin(gaps))
            raise DegeneracyError((float(probs[k]), float(probs[k + 1])), settings.degeneracy_guard)
        basis = _pivot_phases(vectors[:, order])
        tag = "anchor:" + ",".join(f"{x:.12g}" for x in theta)
    else:
        overlaps = continuation.basis.conj().T @ vectors
        order = np.argmax(np.abs(overlaps), axis=1)
        best = np.abs(overlaps[np.arange(len(order)), order]) ** 2
        if len(set(order.tolist())) != len(order) or best.min() < settings.continuation_min_overlap:
            raise ContinuationLostError(float(best.min()))
        probs = values[order]
        matched = overlaps[np.arange(len(order)), order]
        basis = vectors[:, order] * (np.abs(matched) / matched)
        tag = continuation.reference_tag

    probs = np.clip(probs.real, 0.0, None)
    return GNSContext(
        theta=theta,
        probs=probs,
        basis=basis,
        omega=wave_vector(probs, basis),
        reference_tag=tag,
    )


def continue_context(
    model: ExpFamilyModel,
    theta,
    anchor: GNSContext,
    settings: Settings | None = None,
) -> GNSContext:
    """Continues the anchor gauge to theta along the straight segment.

    The segment is always walked in continuation_steps equal substeps, so the
    resulting basis is a smooth function of theta. A substep whose overlap
    drops is bisected.

    Raises:
        ContinuationLostError: After max_halvings bisections of one substep.
    """
    settings = resolve(settings)
    target = check_point(model, theta)
    start = anchor.theta
    current = anchor
    steps = settings.continuation_steps
    for k in range(1, steps + 1):
        end = target if k == steps else start + (k / steps) * (target - start)
        current = _continue_substep(model, current, end, settings)
    return current


def _continue_substep(model: ExpFamilyModel, current: GNSContext, end: np.ndarray,
                      settings: Settings) -> GNSContext:
    start = current.theta
    position, step, halvings = 0.0, 1.0, 0
    while position < 1.0:
        trial = min(1.0, position + step)
        point = end if trial == 1.0 else start + trial * (end - start)
        try:
            current = gns_context(model, point, continuation=current, settings=settings)
        except ContinuationLostError:
            halvings += 1
            if halvings > settings.max_halvings:
                raise
            step /= 2
            continue
        position = trial
    return current


def track_path(model: ExpFamilyModel, points, anchor: GNSContext | None = None,
               settings: Settings | None = None) -> list[GNSContext]:
    """Contexts along consecutive parameter points, each continued from its predecessor."""
    settings = resolve(settings)
    contexts = []
    previous = anchor
    for point in points:
        if previous is None:
            previous = gns_context(model, point, settings=settings)
        else:
            previous = continue_context(model, point, previous, settings)
        contexts.append(previous)
    return contexts


def metric_operator(model: ExpFamilyModel, theta, gns: GNSContext) -> MetricOperator:
    """Returns T = rho^(-1/4) (x) I built from the context's eigen-data."""
    theta = check_point(model, theta)
    if np.max(np.abs(theta - gns.theta)) > 0:
        raise ValueError("GNS context was built at a different theta")
    b = gns.basis
    factor = (b * gns.probs ** -0.25) @ b.conj().T
    return MetricOperator(
        t_matrix=np.kron(factor, np.eye(gns.dim_hilbert)),
        theta=theta,
        probs=gns.probs,
        basis=gns.basis,
    )


def wave_covariance_defect(gns: GNSContext, metric: MetricOperator) -> float:
    """Returns |T Omega - Omega|, which need not vanish for T = rho^(-1/4) (x) I."""
    return float(np.linalg.norm(metric.t_matrix @ gns.omega - gns.omega))


def lifted_closure_residual(x: np.ndarray, dim_hilbert: int) -> float:
    """Distance of an N^2 x N^2 operator from the lifted algebra {B (x) I}."""
    n = dim_hilbert
    blocks = x.reshape(n, n, n, n)
    b = np.einsum("abcb->ac", blocks) / n
    return float(np.linalg.norm(x - lift(b), 2))


class GaugeChart:
    """Single-anchor continuation chart with a per-theta cache.

    Every context is continued from the anchor along the straight segment,
    so the gauge at a point does not depend on query order.
    """

    def __init__(self, model: ExpFamilyModel, anchor_theta, settings: Settings | None = None,
                 max_cache: int = 8192):
        self.model = model
        self.settings = resolve(settings)
        self.anchor = gns_context(model, anchor_theta, settings=self.settings)
        self.max_cache = max_cache
        self._contexts: dict[bytes, GNSContext] = {}
        self._metrics: dict[bytes, MetricOperator] = {}
        self._lock = threading.Lock()

    @property
    def reference_tag(self) -> str:
        return self.anchor.reference_tag

    def context(self, theta) -> GNSContext:
        theta = check_point(self.model, theta)
        key = theta.tobytes()
        with self._lock:
            cached = self._contexts.get(key)
        if cached is not None:
            return cached
        ctx = continue_context(self.model, theta, self.anchor, self.settings)
        with self._lock:
            if len(self._contexts) >= self.max_cache:
                self._contexts.clear()
                self._metrics.clear()
            self._contexts[key] = ctx
        return ctx

    def metric(self, theta) -> MetricOperator:
        theta = check_point(self.model, theta)
        key = theta.tobytes()
        with self._lock:
            cached = self._metrics.get(key)
        if cached is not None:
            return cached
        op = metric_operator(self.model, theta, self.context(theta))
        with self._lock:
            self._metrics[key] = op
        return op
