"""Closed-form free flight between two bounces.

Inside the disc the reduced radial motion obeys r'' = c^2 / r^3 with the
first integral A = rdot^2 + c^2/r^2 (twice the energy), giving

    r(t)     = sqrt((A^2 (t+B)^2 + c^2) / A),
    theta(t) = theta0 + arctan-antiderivative of c / r^2.

Fixing r = R at both endpoints determines (A, B) in closed form; the
physically admissible branch leaves the boundary inward.  Everything here
is algebra on (t0, t1, c, profile): no integrator, no discretisation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError
from .radius import ProfileBounds, RadiusProfile, alpha_constant, bounds


@dataclass(frozen=True)
class FlightSegment:
    """One straight flight: r(t0) = R(t0), r(t1) = R(t1), r < R in between."""

    t0: float
    t1: float
    c: float
    A: float  # 2E, first integral
    B: float  # time offset of closest approach
    theta0: float
    dtheta: float  # angular advance over the segment, in (pi/2, pi]

    @property
    def duration(self) -> float:
        return self.t1 - self.t0

    @property
    def energy(self) -> float:
        return 0.5 * self.A

    @property
    def speed(self) -> float:
        return math.sqrt(self.A)

    @property
    def chord_length(self) -> float:
        return self.duration * self.speed


@dataclass(frozen=True)
class WindowReport:
    """Per-condition validity of a candidate flight window."""

    tau: float
    momentum_limit: float   # eps * r_min^2 / c
    slope_limit: float      # r_min / (2 ||Rdot||)
    curvature_limit: float  # 2 sqrt(1+sqrt(1-eps^2)) r_min / sqrt(||(R^2)''||)

    @property
    def momentum_ok(self) -> bool:
        return 0.0 < self.tau < self.momentum_limit

    @property
    def slope_ok(self) -> bool:
        return 0.0 < self.tau < self.slope_limit

    @property
    def curvature_ok(self) -> bool:
        return 0.0 < self.tau < self.curvature_limit

    @property
    def ok(self) -> bool:
        return self.momentum_ok and self.slope_ok and self.curvature_ok

    def as_dict(self) -> dict:
        return {
            "tau": self.tau,
            "momentum": {"limit": self.momentum_limit, "ok": self.momentum_ok},
            "slope": {"limit": self.slope_limit, "ok": self.slope_ok},
            "curvature": {"limit": self.curvature_limit, "ok": self.curvature_ok},
            "ok": self.ok,
        }


def validate_window(t0: float, t1: float, c: float, profile: RadiusProfile,
                    eps: float, b: ProfileBounds | None = None) -> WindowReport:
    """Check the three sufficient conditions for the flight to exist."""
    if t1 <= t0:
        raise PreconditionError(f"need t1 > t0, got {t0}, {t1}")
    if b is None:
        b = bounds(profile, eps)
    tau = t1 - t0
    momentum = eps * b.r_min ** 2 / c if c > 0 else math.inf
    slope = b.r_min / (2.0 * b.dR_norm) if b.dR_norm > 0 else math.inf
    curvature = (2.0 * alpha_constant(eps) * b.r_min / math.sqrt(b.ddR2_norm)
                 if b.ddR2_norm > 0 else math.inf)
    return WindowReport(tau=tau, momentum_limit=momentum,
                        slope_limit=slope, curvature_limit=curvature)


def flight_coeffs(t0: float, t1: float, c: float,
                  profile: RadiusProfile) -> tuple[float, float, float]:
    """(A, B, ell_minus) of the admissible flight from t0 to t1.

    ell_minus = A*(t0+B) is the inward branch of the endpoint condition;
    the outward branch never yields a bouncing solution and is discarded.
    """
    if t1 <= t0:
        raise PreconditionError(f"need t1 > t0, got {t0}, {t1}")
    tau = t1 - t0
    r0 = profile.radius(t0)
    r1 = profile.radius(t1)
    disc = r0 * r0 * r1 * r1 - c * c * tau * tau
    if disc <= 0.0:
        raise DomainError(
            f"window violation: R0^2 R1^2 - c^2 tau^2 = {disc} <= 0 for tau = {tau}")
    s = math.sqrt(disc)
    a = (r0 * r0 + r1 * r1 + 2.0 * s) / (tau * tau)
    b_off = -(t0 + (r0 * r0 + s) / (tau * a))
    ell = -(r0 * r0 + s) / tau
    return a, b_off, ell


def angular_advance(t0: float, t1: float, c: float, profile: RadiusProfile) -> float:
    """Polar-angle advance over one flight: pi - arctan(c tau / sqrt(disc))."""
    if c < 0:
        raise PreconditionError("angular momentum must be >= 0")
    tau = t1 - t0
    r0 = profile.radius(t0)
    r1 = profile.radius(t1)
    disc = r0 * r0 * r1 * r1 - c * c * tau * tau
    if disc <= 0.0:
        raise DomainError(f"window violation: discriminant {disc} <= 0")
    return math.pi - math.atan(c * tau / math.sqrt(disc))


def make_segment(profile: RadiusProfile, t0: float, t1: float, c: float,
                 theta0: float = 0.0) -> FlightSegment:
    a, b_off, _ = flight_coeffs(t0, t1, c, profile)
    return FlightSegment(t0=t0, t1=t1, c=c, A=a, B=b_off, theta0=theta0,
                         dtheta=angular_advance(t0, t1, c, profile))


def flight_state(seg: FlightSegment, t: float) -> tuple[float, float, float]:
    """(r, rdot, theta) at time t in [t0, t1].

    theta uses the closed arctangent antiderivative of c/r^2; for c = 0 the
    flight runs along a diameter and theta jumps by pi at the centre.
    """
    if not (seg.t0 <= t <= seg.t1):
        raise DomainError(f"t = {t} outside [{seg.t0}, {seg.t1}]")
    a, b, c = seg.A, seg.B, seg.c
    lin = a * (t + b)
    r = math.sqrt((lin * lin + c * c) / a)
    rdot = lin / r if r > 0 else math.copysign(math.sqrt(a), lin)
    if c > 0:
        theta = seg.theta0 + math.atan(lin / c) - math.atan(a * (seg.t0 + b) / c)
    else:
        theta = seg.theta0 + (math.pi if lin >= 0 else 0.0)
    return r, rdot, theta


def segment_samples(seg: FlightSegment, dt: float) -> np.ndarray:
    """Rows (t, r, theta, x, y) sampled every dt, endpoints included."""
    if dt <= 0:
        raise PreconditionError(f"dt must be positive, got {dt}")
    n = max(1, int(math.ceil(seg.duration / dt)))
    ts = np.linspace(seg.t0, seg.t1, n + 1)
    rows = np.empty((len(ts), 5))
    for i, t in enumerate(ts):
        r, _, theta = flight_state(seg, float(t))
        rows[i] = (t, r, theta, r * math.cos(theta), r * math.sin(theta))
    return rows
