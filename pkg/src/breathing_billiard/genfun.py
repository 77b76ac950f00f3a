"""Generating function of the bounce-to-bounce map.

h(t0, t1) is the reduced-Lagrangian action of the flight joining boundary
hits at t0 and t1 (plus a fixed additive constant c*pi absorbed into the
arctangent branch):

    h = tau*A/2 + c * arctan(c tau / sqrt(R0^2 R1^2 - c^2 tau^2)).

Its first partials are the outgoing/incoming radial actions that define the
cylinder map implicitly; the second partials feed the twist condition, the
map Jacobian and the invariant-curve destruction criterion.  All derivatives
are explicit closed forms (no numerical differentiation); finite-difference
oracles in the test suite guard the transcriptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DomainError, PreconditionError
from .radius import ProfileBounds, RadiusProfile, bounds as profile_bounds

_C_SLACK = 1.0 + 1e-9  # tolerate the closed end of the admissible c range


@dataclass(frozen=True)
class GenFunContext:
    """Profile + angular momentum + working strip 0 < t1 - t0 <= sigma.

    sigma defaults to the profile's flight-window constant; for constant
    profiles (sigma = +inf) a finite working sigma must be supplied.  The
    admissible momentum range is 0 <= c <= eps * r_min^2 / sigma, which keeps
    the endpoint discriminant positive on the whole strip.
    """

    profile: RadiusProfile
    c: float
    eps: float
    bounds: ProfileBounds
    sigma: float

    def __post_init__(self):
        if self.c < 0:
            raise PreconditionError(f"angular momentum must be >= 0, got {self.c}")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise PreconditionError("context needs a finite positive sigma "
                                    "(constant profiles: pass a working sigma)")
        c_max = self.eps * self.bounds.r_min ** 2 / self.sigma
        if self.c > c_max * _C_SLACK:
            raise PreconditionError(
                f"momentum too large for the strip: c = {self.c} > "
                f"eps*r_min^2/sigma = {c_max}")


def make_context(profile: RadiusProfile, c: float, eps: float,
                 sigma: float | None = None, grid_n: int = 4096) -> GenFunContext:
    b = profile_bounds(profile, eps, grid_n)
    if sigma is None:
        sigma = b.sigma
    return GenFunContext(profile=profile, c=c, eps=eps, bounds=b, sigma=sigma)


def with_sigma(ctx: GenFunContext, sigma: float) -> GenFunContext:
    return replace(ctx, sigma=sigma)


def _core(ctx: GenFunContext, t0: float, t1: float):
    """Shared endpoint data: tau, radii/derivatives, discriminant root."""
    tau = t1 - t0
    # the closed upper edge tolerates the rounding of t0 + sigma - t0
    if not (0.0 < tau <= ctx.sigma * (1.0 + 1e-12)):
        raise DomainError(f"(t0, t1) outside strip: tau = {tau}, sigma = {ctx.sigma}")
    r0, dr0, ddr0 = ctx.profile.eval(t0)
    r1, dr1, ddr1 = ctx.profile.eval(t1)
    disc = r0 * r0 * r1 * r1 - ctx.c * ctx.c * tau * tau
    # cannot fail under the context momentum bound; a failure means the
    # context was built with an out-of-contract sigma/c pair
    assert disc > 0.0, f"degenerate discriminant {disc} inside the strip"
    return tau, r0, dr0, ddr0, r1, dr1, ddr1, math.sqrt(disc)


def h(ctx: GenFunContext, t0: float, t1: float) -> float:
    """Action value of the flight (t0, t1)."""
    tau, r0, _, _, r1, _, _, s = _core(ctx, t0, t1)
    a = (r0 * r0 + r1 * r1 + 2.0 * s) / (tau * tau)
    return 0.5 * tau * a + ctx.c * math.atan(ctx.c * tau / s)


def grad_h(ctx: GenFunContext, t0: float, t1: float) -> tuple[float, float]:
    """(d1 h, d2 h).

    d1 h =  c^2/(2 R0^2) + u0^2/2 + Rdot0 * u0   with u0 = (R0^2+S)/(R0 tau),
    d2 h = -c^2/(2 R1^2) - u1^2/2 + Rdot1 * u1   with u1 = (R1^2+S)/(R1 tau);
    u0 = -rdot(t0+) and u1 = +rdot(t1-) of the connecting flight.
    """
    tau, r0, dr0, _, r1, dr1, _, s = _core(ctx, t0, t1)
    c2 = ctx.c * ctx.c
    u0 = (r0 * r0 + s) / (r0 * tau)
    u1 = (r1 * r1 + s) / (r1 * tau)
    d1 = 0.5 * c2 / (r0 * r0) + 0.5 * u0 * u0 + dr0 * u0
    d2 = -0.5 * c2 / (r1 * r1) - 0.5 * u1 * u1 + dr1 * u1
    return d1, d2


def hess_h(ctx: GenFunContext, t0: float, t1: float) -> tuple[float, float, float]:
    """(d11 h, d12 h, d22 h) in closed form; d12 h < 0 on the whole strip."""
    tau, r0, dr0, ddr0, r1, dr1, ddr1, s = _core(ctx, t0, t1)
    c2 = ctx.c * ctx.c
    tau2 = tau * tau
    u0 = (r0 * r0 + s) / (r0 * tau)
    u1 = (r1 * r1 + s) / (r1 * tau)

    du0_dt1 = r0 * (r1 * dr1 * tau - s - r1 * r1) / (tau2 * s)
    d12 = (u0 + dr0) * du0_dt1

    du0_dt0 = ((2.0 * r0 * dr0 + (r0 * dr0 * r1 * r1 + c2 * tau) / s) * r0 * tau
               - (r0 * r0 + s) * (dr0 * tau - r0)) / (r0 * r0 * tau2)
    d11 = -c2 * dr0 / (r0 ** 3) + (u0 + dr0) * du0_dt0 + ddr0 * u0

    du1_dt1 = ((2.0 * r1 * dr1 + (r1 * dr1 * r0 * r0 - c2 * tau) / s) * r1 * tau
               - (r1 * r1 + s) * (dr1 * tau + r1)) / (r1 * r1 * tau2)
    d22 = c2 * dr1 / (r1 ** 3) + (dr1 - u1) * du1_dt1 + ddr1 * u1
    return d11, d12, d22
