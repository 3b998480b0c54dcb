"""Loss streams, best-fixed comparators and bandit gradient estimators.

A stream is fully realized at construction (arrays indexed by round ``t``
in ``[0, T)`` and learner ``i`` in ``[0, n)``), so every query is a pure
function of ``(seed, t, i, x)``.  Two families cover every construction:

* :class:`LinearStream` -- ``f_{t,i}(x) = <g_{t,i}, x> + c_{t,i}``
* :class:`QuadraticStream` -- ``f_{t,i}(x) = mu/2 ||x - theta_{t,i}||^2``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ComparatorFailure, InvalidConstruction, InvalidExploration
from .geometry import Domain

__all__ = [
    "LossStream",
    "LinearStream",
    "QuadraticStream",
    "GradientEstimate",
    "linear_adversarial_stream",
    "quadratic_stream",
    "zero_stream",
    "lower_bound_convex_stream",
    "lower_bound_sc_stream",
    "lower_bound_groups",
    "best_fixed_comparator",
    "sample_sphere",
    "one_point_estimate",
    "two_point_estimate",
]


class LossStream:
    """Common interface of all loss streams.

    Subclasses provide the batched primitives; the scalar ``value``/``grad``
    queries are thin wrappers over them.
    """

    n: int
    d: int
    T: int
    G: float
    mu: float = 0.0
    name: str = "stream"
    seed: int | None = None
    params: dict

    @property
    def convexity(self) -> str:
        return "strongly_convex" if self.mu > 0 else "convex"

    @property
    def fingerprint(self) -> tuple:
        return (self.name, self.n, self.d, self.T, self.seed)

    def value(self, t: int, i: int, x) -> float:
        raise NotImplementedError

    def grad(self, t: int, i: int, x) -> np.ndarray:
        raise NotImplementedError

    def values(self, t: int, xs: np.ndarray) -> np.ndarray:
        """``f_{t,i}(xs[i])`` for every learner ``i``."""
        raise NotImplementedError

    def grads(self, t: int, xs: np.ndarray) -> np.ndarray:
        """``grad f_{t,i}(xs[i])`` for every learner ``i``."""
        raise NotImplementedError

    def global_values(self, t: int, xs: np.ndarray) -> np.ndarray:
        """Global loss ``f_t(xs[k]) = sum_j f_{t,j}(xs[k])`` for every row ``k``."""
        raise NotImplementedError

    def global_values_at(self, x) -> np.ndarray:
        """Global loss of the fixed point ``x`` in every round, shape ``(T,)``."""
        raise NotImplementedError

    def total_value(self, x) -> float:
        return float(math.fsum(self.global_values_at(x)))

    def total_grad(self, x) -> np.ndarray:
        """Gradient of ``sum_t sum_j f_{t,j}`` at ``x``."""
        raise NotImplementedError

    def total_smoothness(self) -> float:
        return 0.0

    def closed_form_comparator(self, dom: Domain) -> np.ndarray | None:
        return None


class LinearStream(LossStream):
    """Linear losses with optional constant offsets."""

    def __init__(self, coef, offset=None, *, G=None, name="linear", seed=None, params=None):
        coef = np.array(coef, dtype=float)
        if coef.ndim != 3:
            raise InvalidConstruction("coef must have shape (T, n, d)")
        self.T, self.n, self.d = coef.shape
        self.coef = coef
        self.offset = np.zeros((self.T, self.n)) if offset is None else np.array(offset, dtype=float)
        self._gsum = coef.sum(axis=1)
        self._csum = self.offset.sum(axis=1)
        self.G = float(np.max(np.linalg.norm(coef, axis=2))) if G is None else float(G)
        self.name = name
        self.seed = seed
        self.params = dict(params or {})

    def value(self, t, i, x):
        return float(self.coef[t, i] @ np.asarray(x, dtype=float) + self.offset[t, i])

    def grad(self, t, i, x):
        return self.coef[t, i].copy()

    def values(self, t, xs):
        return np.einsum("id,id->i", self.coef[t], xs) + self.offset[t]

    def grads(self, t, xs):
        return self.coef[t].copy()

    def global_values(self, t, xs):
        return xs @ self._gsum[t] + self._csum[t]

    def global_values_at(self, x):
        return self._gsum @ np.asarray(x, dtype=float) + self._csum

    def total_grad(self, x):
        return self._gsum.sum(axis=0)

    def closed_form_comparator(self, dom):
        if dom.variant == "ball":
            return None
        g = self.total_grad(None)
        # minimize each coordinate of a separable linear objective over [lo, hi]
        return np.where(g > 0, dom.lo, np.where(g < 0, dom.hi, np.clip(0.0, dom.lo, dom.hi)))


class QuadraticStream(LossStream):
    """``mu/2 ||x - theta_{t,i}||^2`` losses (mu-strongly convex)."""

    def __init__(self, theta, mu, *, G, name="quadratic", seed=None, params=None):
        theta = np.array(theta, dtype=float)
        if theta.ndim != 3:
            raise InvalidConstruction("theta must have shape (T, n, d)")
        if not mu > 0:
            raise InvalidConstruction(f"mu must be positive, got {mu}")
        self.T, self.n, self.d = theta.shape
        self.theta = theta
        self.mu = float(mu)
        self.G = float(G)
        self._tsum = theta.sum(axis=1)
        self._tsq = np.einsum("tnd,tnd->t", theta, theta)
        self.name = name
        self.seed = seed
        self.params = dict(params or {})

    def value(self, t, i, x):
        diff = np.asarray(x, dtype=float) - self.theta[t, i]
        return 0.5 * self.mu * float(diff @ diff)

    def grad(self, t, i, x):
        return self.mu * (np.asarray(x, dtype=float) - self.theta[t, i])

    def values(self, t, xs):
        diff = xs - self.theta[t]
        return 0.5 * self.mu * np.einsum("id,id->i", diff, diff)

    def grads(self, t, xs):
        return self.mu * (xs - self.theta[t])

    def global_values(self, t, xs):
        sq = np.einsum("kd,kd->k", xs, xs)
        return 0.5 * self.mu * (self.n * sq - 2.0 * xs @ self._tsum[t] + self._tsq[t])

    def global_values_at(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * self.mu * (self.n * float(x @ x) - 2.0 * self._tsum @ x + self._tsq)

    def total_grad(self, x):
        x = np.asarray(x, dtype=float)
        return self.mu * (self.n * self.T * x - self._tsum.sum(axis=0))

    def total_smoothness(self):
        return self.mu * self.n * self.T

    def closed_form_comparator(self, dom):
        # sum of equal-curvature quadratics is a quadratic around the mean target
        return dom.project(self._tsum.sum(axis=0) / (self.n * self.T))


def zero_stream(n: int, d: int, T: int) -> LinearStream:
    return LinearStream(np.zeros((T, n, d)), G=0.0, name="zero", seed=0)


def linear_adversarial_stream(n: int, d: int, T: int, G: float, seed: int) -> LinearStream:
    """Each coordinate of every ``g_{t,i}`` is an independent fair sign times ``G/sqrt(d)``."""
    rng = np.random.default_rng(seed)
    signs = np.where(rng.random((T, n, d)) < 0.5, -1.0, 1.0)
    return LinearStream(
        signs * (G / math.sqrt(d)), G=G, name="linear_adversarial", seed=seed,
        params={"G": G},
    )


def quadratic_stream(n, d, T, mu, D, seed, *, p: float = 0.5, targets=None) -> QuadraticStream:
    """Quadratic losses around targets in ``{0, (D/sqrt d) 1}``.

    Each ``theta_{t,i}`` is ``(D/sqrt d) * 1`` with probability ``p`` and the
    origin otherwise.  ``targets`` (shape ``(T, n, d)``) overrides the draw.
    The gradient bound ``G = mu * D`` holds on any domain of diameter ``D``
    containing the targets, e.g. ``[0, D/sqrt d]^d``.
    """
    if targets is None:
        rng = np.random.default_rng(seed)
        w = (rng.random((T, n)) < p).astype(float)
        targets = np.broadcast_to((D / math.sqrt(d)) * w[:, :, None], (T, n, d))
    return QuadraticStream(
        targets, mu, G=mu * D, name="quadratic", seed=seed,
        params={"mu": mu, "D": D, "p": p},
    )


def lower_bound_groups(n: int, omega: float) -> tuple[int, int, np.ndarray]:
    """Return ``(K, K1, far_mask)`` of the cycle lower-bound construction.

    With ``n = 2m + 2``, ``K = ceil(m/2)`` and ``K1 = ceil(m/(2 omega))``.
    Learners ``0..K-1`` and ``n-K+1..n-1`` (0-based) form the near group
    around learner 0 and get the "quiet" loss; the remaining ``n - 2K + 1``
    learners carry the interval-wise random loss.
    """
    if n < 4 or n % 2:
        raise InvalidConstruction(f"construction needs n = 2m + 2 with m >= 1, got n={n}")
    if not (0.0 < omega <= 1.0):
        raise InvalidConstruction(f"omega must lie in (0, 1], got {omega}")
    m = (n - 2) // 2
    K = math.ceil(m / 2)
    K1 = math.ceil(m / (2 * omega))
    far = np.zeros(n, dtype=bool)
    far[K : n - K + 1] = True
    return K, K1, far


def lower_bound_convex_stream(n, d, T, G, omega, seed) -> LinearStream:
    """Zero losses near learner 0; interval-constant random sign losses elsewhere."""
    K, K1, far = lower_bound_groups(n, omega)
    rng = np.random.default_rng(seed)
    n_int = (T - 1) // K1 + 1
    w = np.where(rng.random((n_int, d)) < 0.5, -1.0, 1.0) * (G / math.sqrt(d))
    interval = np.arange(T) // K1
    coef = np.zeros((T, n, d))
    coef[:, far, :] = w[interval][:, None, :]
    return LinearStream(
        coef, G=G, name="lower_bound_convex", seed=seed,
        params={"G": G, "omega": omega, "K": K, "K1": K1},
    )


class _LowerBoundSC(QuadraticStream):
    def expected_minimizer(self) -> np.ndarray:
        """Minimizer of the expected global loss, ``(n-2K+1) D p / (n sqrt d) * 1``."""
        K, D, p = self.params["K"], self.params["D"], self.params["p"]
        return np.full(self.d, (self.n - 2 * K + 1) * D * p / (self.n * math.sqrt(self.d)))


def lower_bound_sc_stream(n, d, T, mu, D, omega, p, seed) -> QuadraticStream:
    """``mu/2 ||x||^2`` near learner 0; interval-wise random targets elsewhere."""
    if not (0.25 <= p <= 0.75):
        raise InvalidConstruction(f"p must lie in [1/4, 3/4], got {p}")
    K, K1, far = lower_bound_groups(n, omega)
    rng = np.random.default_rng(seed)
    n_int = (T - 1) // K1 + 1
    w = (rng.random(n_int) < p).astype(float) * (D / math.sqrt(d))
    theta = np.zeros((T, n, d))
    theta[:, far, :] = w[np.arange(T) // K1][:, None, None]
    return _LowerBoundSC(
        theta, mu, G=mu * D, name="lower_bound_sc", seed=seed,
        params={"mu": mu, "D": D, "p": p, "omega": omega, "K": K, "K1": K1},
    )


def best_fixed_comparator(
    stream: LossStream,
    dom: Domain,
    *,
    method: str = "auto",
    tol: float = 1e-8,
    max_iter: int = 1_000_000,
) -> np.ndarray:
    """``argmin_{x in dom} sum_t sum_j f_{t,j}(x)``.

    Closed forms are used when the stream has one for ``dom`` (linear over a
    box, quadratic over anything); otherwise, or with ``method="pgd"``,
    projected gradient descent on the per-term average loss runs until the
    gradient mapping has norm ``<= tol``.
    """
    if method not in ("auto", "pgd"):
        raise ValueError(f"unknown comparator method {method!r}")
    if method == "auto":
        x = stream.closed_form_comparator(dom)
        if x is not None:
            return x
    scale = 1.0 / (stream.n * stream.T)

    def grad(x):
        return scale * stream.total_grad(x)

    x = dom.project(np.zeros(stream.d))
    smooth = scale * stream.total_smoothness()
    if smooth > 0:
        step = 1.0 / smooth
    else:
        g0 = float(np.linalg.norm(grad(x)))
        if g0 == 0.0:
            return x
        step = 10.0 * max(dom.diameter, 1.0) / g0
    for _ in range(max_iter):
        x_next = dom.project(x - step * grad(x))
        if np.linalg.norm(x_next - x) / step <= tol:
            return x_next
        x = x_next
    raise ComparatorFailure(f"projected gradient descent did not converge in {max_iter} iterations")


@dataclass(frozen=True)
class GradientEstimate:
    ghat: np.ndarray
    queries: tuple = field(default=())


def sample_sphere(rng: np.random.Generator, d: int) -> np.ndarray:
    """Uniform draw from the unit sphere in ``R^d``."""
    z = rng.standard_normal(d)
    return z / np.linalg.norm(z)


def _check_eps(eps: float, r: float | None) -> None:
    if not eps > 0 or (r is not None and eps > r):
        raise InvalidExploration(f"exploration radius must lie in (0, r], got eps={eps}, r={r}")


def one_point_estimate(stream, t, i, center, eps, rng, *, r=None) -> GradientEstimate:
    """``(d/eps) f(center + eps u) u`` with ``u`` uniform on the unit sphere."""
    _check_eps(eps, r)
    center = np.asarray(center, dtype=float)
    u = sample_sphere(rng, stream.d)
    q = center + eps * u
    ghat = (stream.d / eps) * stream.value(t, i, q) * u
    return GradientEstimate(ghat, (q,))


def two_point_estimate(stream, t, i, center, eps, rng, *, r=None) -> GradientEstimate:
    """``(d/(2 eps)) (f(center + eps u) - f(center - eps u)) u``."""
    _check_eps(eps, r)
    center = np.asarray(center, dtype=float)
    u = sample_sphere(rng, stream.d)
    q1 = center + eps * u
    q2 = center - eps * u
    ghat = (stream.d / (2.0 * eps)) * (stream.value(t, i, q1) - stream.value(t, i, q2)) * u
    return GradientEstimate(ghat, (q1, q2))
