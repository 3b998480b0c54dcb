"""Feasible domains with closed-form Euclidean projections."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDomain, InvalidShrinkage

__all__ = ["Domain", "project", "shrink"]

# relative slack on the ball radius; keeps projection exactly idempotent
# despite rounding in the radial rescale
_BALL_SLACK = 1e-13


@dataclass(frozen=True)
class Domain:
    """A ball centred at the origin or an axis-aligned box.

    ``variant`` is ``"ball"`` (radius ``R``), ``"box"`` (symmetric, half
    width per coordinate) or ``"shifted_box"`` (arbitrary ``lo``/``hi``).
    Boxes keep their bounds as read-only arrays.
    """

    variant: str
    d: int
    radius: float | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None

    @classmethod
    def ball(cls, R: float, d: int) -> "Domain":
        if not R > 0:
            raise InvalidDomain(f"ball radius must be positive, got {R}")
        return cls("ball", int(d), radius=float(R))

    @classmethod
    def box(cls, half_width, d: int) -> "Domain":
        hw = np.broadcast_to(np.asarray(half_width, dtype=float), (d,)).copy()
        if np.any(hw <= 0):
            raise InvalidDomain("box half width must be positive")
        return cls._boxed("box", -hw, hw)

    @classmethod
    def shifted_box(cls, lo, hi, d: int | None = None) -> "Domain":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if d is not None:
            lo = np.broadcast_to(lo, (d,)).copy()
            hi = np.broadcast_to(hi, (d,)).copy()
        if lo.shape != hi.shape or np.any(lo > hi):
            raise InvalidDomain("shifted box needs lo <= hi coordinate-wise")
        return cls._boxed("shifted_box", lo, hi)

    @classmethod
    def _boxed(cls, variant, lo, hi) -> "Domain":
        lo = np.array(lo, dtype=float)
        hi = np.array(hi, dtype=float)
        lo.setflags(write=False)
        hi.setflags(write=False)
        return cls(variant, lo.shape[0], lo=lo, hi=hi)

    @classmethod
    def from_dict(cls, spec: dict, d: int) -> "Domain":
        spec = dict(spec)
        variant = spec.pop("variant", "ball")
        if variant == "ball":
            return cls.ball(spec.pop("R", 1.0), d)
        if variant == "box":
            return cls.box(spec.pop("half_width", 1.0), d)
        if variant == "shifted_box":
            return cls.shifted_box(spec.pop("lo"), spec.pop("hi"), d)
        raise InvalidDomain(f"unknown domain variant {variant!r}")

    def to_dict(self) -> dict:
        if self.variant == "ball":
            return {"variant": "ball", "R": self.radius}
        if self.variant == "box":
            return {"variant": "box", "half_width": self.hi.tolist()}
        return {"variant": "shifted_box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @property
    def R(self) -> float:
        """Radius of the smallest origin-centred ball containing the domain."""
        if self.variant == "ball":
            return self.radius
        corner = np.maximum(np.abs(self.lo), np.abs(self.hi))
        return float(np.linalg.norm(corner))

    @property
    def r(self) -> float:
        """Radius of the largest origin-centred ball inside the domain (0 if none)."""
        if self.variant == "ball":
            return self.radius
        if np.any(self.lo >= 0) or np.any(self.hi <= 0):
            return 0.0
        return float(min(np.min(-self.lo), np.min(self.hi)))

    @property
    def diameter(self) -> float:
        if self.variant == "ball":
            return 2.0 * self.radius
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, x, tol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        if self.variant == "ball":
            return bool(np.all(np.linalg.norm(x, axis=-1) <= self.radius * (1 + tol)))
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def project(self, x) -> np.ndarray:
        """Projection of a vector, or of every row of a matrix."""
        x = np.asarray(x, dtype=float)
        if self.variant != "ball":
            return np.clip(x, self.lo, self.hi)
        if x.ndim == 1:
            nrm = math.sqrt(float(x @ x))
            if nrm <= self.radius * (1 + _BALL_SLACK):
                return x.copy()
            return x * (self.radius / nrm)
        nrm = np.linalg.norm(x, axis=1)
        scale = np.where(nrm <= self.radius * (1 + _BALL_SLACK), 1.0, self.radius / np.maximum(nrm, 1e-300))
        return x * scale[:, None]

    def shrink(self, zeta: float) -> "Domain":
        """The scaled domain ``(1 - zeta) * self``."""
        if not (0.0 < zeta < 1.0):
            raise InvalidShrinkage(f"shrinkage must lie in (0, 1), got {zeta}")
        s = 1.0 - zeta
        if self.variant == "ball":
            return Domain.ball(s * self.radius, self.d)
        return Domain._boxed(self.variant, s * self.lo, s * self.hi)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Domain) or (self.variant, self.d) != (other.variant, other.d):
            return False
        if self.variant == "ball":
            return self.radius == other.radius
        return bool(np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi))

    __hash__ = None


def project(dom: Domain, x) -> np.ndarray:
    return dom.project(x)


def shrink(dom: Domain, zeta: float) -> Domain:
    return dom.shrink(zeta)
