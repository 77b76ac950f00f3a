"""Converse-KAM certification: destroying invariant curves by sign.

On an invariant curve of an exact symplectic twist map the second variation
of the action along its orbits must be nonnegative, so the diagnostic

    a(t, K) = d11 h(t, t_next) + d22 h(t_prev, t)

is positive on every curve.  For profiles in class R_tilde there is a
rotation-number window whose curves, if they existed, would be forced to
carry a point (t_witness, K) with K in an explicit action band; evaluating
a on that band and finding it negative everywhere certifies that no such
curve exists, which is the mechanism behind positive-entropy motion.  A
Lyapunov-exponent estimator supplies numerical evidence for the chaos the
certificate implies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bmap
from ._version import VERSION
from .bmap import CylinderState
from .errors import DomainError, PreconditionError
from .genfun import GenFunContext, grad_h, hess_h, make_context
from .radius import ClassVerdict, RadiusProfile, classify

DEFAULT_OMEGA_GRID = 33
DEFAULT_K_SAMPLES = 257


@dataclass(frozen=True)
class KBand:
    """Action band forced on invariant curves of rotation number omega."""

    omega: float
    k_lo: float
    k_hi: float


@dataclass
class ChaosCertificate:
    profile: RadiusProfile
    eps: float
    c: float
    t_witness: float
    ddR_witness: float
    omega_window: tuple[float, float]
    bands: list[KBand]
    k_range: tuple[float, float]
    widen_margin: float
    a_grid: list[tuple[float, float]]
    a_max: float
    certified: bool
    reason: str | None = None
    margins: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "tool_version": VERSION,
            "profile": {"mean": self.profile.mean,
                        "harmonics": [[k, d] for k, d in self.profile.harmonics]},
            "profile_literal": self.profile.to_json(),
            "eps": self.eps,
            "c": self.c,
            "t_witness": self.t_witness,
            "ddR_witness": self.ddR_witness,
            "omega_window": list(self.omega_window),
            "bands": [[b.omega, b.k_lo, b.k_hi] for b in self.bands],
            "k_range": list(self.k_range),
            "widen_margin": self.widen_margin,
            "a_grid": [[k, a] for k, a in self.a_grid],
            "a_max": self.a_max,
            "certified": self.certified,
            "reason": self.reason,
            "margins": self.margins,
        }


@dataclass(frozen=True)
class LyapunovEstimate:
    lam: float
    steps: int
    completed: bool
    log_norms: tuple[float, ...] | None = None


@dataclass
class C0SearchResult:
    c0: float | None
    c_max: float
    tested: list[tuple[float, bool]]
    monotone_observed: bool
    reason: str | None = None


def _strongest_witness(verdict: ClassVerdict) -> tuple[float, float]:
    if verdict.klass != "R_tilde" or not verdict.witnesses:
        raise PreconditionError("profile is not in class R_tilde")
    return verdict.witnesses[0]


def xi_interval(profile: RadiusProfile, eps: float,
                verdict: ClassVerdict | None = None) -> tuple[float, float]:
    """Open rotation-number window attached to the strongest witness,
    intersected with (3, sigma - 1)."""
    if verdict is None:
        verdict = classify(profile, eps)
    t_bar, ddr = _strongest_witness(verdict)
    b = verdict.bounds
    decel = -(ddr * b.r_min + b.dR_norm * b.r_max)
    if decel <= 0:
        raise PreconditionError("witness fails the deceleration condition")
    w_lo = 1.0 + math.sqrt(2.0 * b.r_max ** 2 / decel)
    w_hi = -1.0 + math.sqrt(
        2.0 * b.r_min ** 2 / (2.0 * b.r_max ** 2 / b.sigma ** 2 + b.dR_norm * b.r_max))
    w_lo = max(w_lo, 3.0)
    w_hi = min(w_hi, b.sigma - 1.0)
    if not w_lo < w_hi:
        raise PreconditionError(f"empty rotation-number window ({w_lo}, {w_hi})")
    return w_lo, w_hi


def k_band(profile: RadiusProfile, omega: float, eps: float,
           verdict: ClassVerdict | None = None) -> KBand:
    """Forced action band for invariant curves of rotation number omega."""
    if verdict is None:
        verdict = classify(profile, eps)
    w_lo, w_hi = xi_interval(profile, eps, verdict)
    if not (w_lo < omega < w_hi):
        raise DomainError(f"omega = {omega} outside the window ({w_lo}, {w_hi})")
    b = verdict.bounds
    k_lo = 2.0 * b.r_min ** 2 / (omega + 1.0) ** 2 - 2.0 * b.dR_norm * b.r_max / (omega + 1.0)
    k_hi = 2.0 * b.r_max ** 2 / (omega - 1.0) ** 2 + 2.0 * b.dR_norm * b.r_max / (omega - 1.0)
    return KBand(omega=omega, k_lo=k_lo, k_hi=k_hi)


def a_exact(ctx: GenFunContext, t_bar: float, K: float) -> float:
    """Second-variation diagnostic at (t_bar, K) using the exact neighbour
    bounce times of the map (forward and backward)."""
    s = CylinderState(t_bar, K)
    t1 = bmap.forward(ctx, s).t
    t_m1 = bmap.backward(ctx, s).t
    d11 = hess_h(ctx, t_bar, t1)[0]
    d22 = hess_h(ctx, t_m1, t_bar)[2]
    return d11 + d22


def alpha_limit(profile: RadiusProfile, t_bar: float, K: float,
                r_min: float | None = None) -> tuple[float, float]:
    """Zero-momentum limit of the diagnostic at a stationary witness.

    Returns (limit value, upper bound 2 sqrt(2K) (Rddot + K / r_min)).
    The limit uses the c -> 0 neighbour spacings t +- (R(t) + R(nbr)) /
    sqrt(2K), solved by fixed point; the neighbour radii are the radii at
    those bounce times.
    """
    r_t, dr_t, ddr_t = profile.eval(t_bar)
    if abs(dr_t) > 1e-8 * max(1.0, abs(profile.mean)):
        raise PreconditionError(f"t_bar = {t_bar} is not stationary: Rdot = {dr_t}")
    if K <= 0:
        raise PreconditionError(f"need K > 0, got {K}")
    if r_min is None:
        r_min = profile.mean - sum(abs(d) for _, d in profile.harmonics)
    speed = math.sqrt(2.0 * K)
    upper = 2.0 * speed * (ddr_t + K / r_min)

    t_next = t_bar + 2.0 * r_t / speed
    t_prev = t_bar - 2.0 * r_t / speed
    for _ in range(64):
        t_next_new = t_bar + (r_t + profile.radius(t_next)) / speed
        t_prev_new = t_bar - (r_t + profile.radius(t_prev)) / speed
        if (abs(t_next_new - t_next) < 1e-14 * max(1.0, abs(t_next))
                and abs(t_prev_new - t_prev) < 1e-14 * max(1.0, abs(t_prev))):
            t_next, t_prev = t_next_new, t_prev_new
            break
        t_next, t_prev = t_next_new, t_prev_new
    r_next = profile.radius(t_next)
    r_prev = profile.radius(t_prev)
    limit = 2.0 * speed * (ddr_t + K * (1.0 / (r_prev + r_t) + 1.0 / (r_next + r_t)))
    return limit, upper


def certify(profile: RadiusProfile, eps: float, c: float,
            omega_grid: int = DEFAULT_OMEGA_GRID,
            k_samples: int = DEFAULT_K_SAMPLES,
            grid_n: int = 4096) -> ChaosCertificate:
    """Full destruction certificate at a concrete momentum c.

    Pipeline: class R_tilde check, strongest stationary witness, rotation
    window, union of forced action bands over an omega grid, then the
    diagnostic sampled across the band union widened by twice the largest
    observed gap between the exact diagnostic and its zero-momentum limit.
    Certified means every sample is negative: any invariant curve with
    rotation number in the window would have to carry a nonnegative value
    inside the band.
    """

    def refused(reason, verdict=None, witness=(math.nan, math.nan)):
        return ChaosCertificate(
            profile=profile, eps=eps, c=c, t_witness=witness[0],
            ddR_witness=witness[1], omega_window=(math.nan, math.nan), bands=[],
            k_range=(math.nan, math.nan), widen_margin=math.nan, a_grid=[],
            a_max=math.nan, certified=False, reason=reason,
            margins=dict(verdict.margins) if verdict is not None else {})

    verdict = classify(profile, eps, grid_n)
    if verdict.klass != "R_tilde":
        return refused(f"profile class is {verdict.klass}, needs R_tilde", verdict)
    witness = _strongest_witness(verdict)
    t_bar, ddr = witness
    b = verdict.bounds
    c_max = eps * b.r_min ** 2 / b.sigma
    if not (0.0 < c < c_max):
        return refused(f"momentum c = {c} outside (0, {c_max})", verdict, witness)

    w_lo, w_hi = xi_interval(profile, eps, verdict)
    omegas = np.linspace(w_lo, w_hi, omega_grid + 2)[1:-1]
    bands = [k_band(profile, float(w), eps, verdict) for w in omegas]

    # chain margins of the band construction (positive = holds)
    floor_k = 2.0 * b.r_max ** 2 / b.sigma ** 2
    ceil_k = -ddr * b.r_min
    chain_low = min(band.k_lo - floor_k for band in bands)
    chain_high = min(ceil_k - band.k_hi for band in bands)
    chain_order = min(band.k_hi - band.k_lo for band in bands)

    ctx = make_context(profile, c, eps, grid_n=grid_n)
    margins = {
        "window_width": w_hi - w_lo,
        "band_above_floor": chain_low,
        "band_below_ceiling": chain_high,
        "band_nonempty": chain_order,
    }

    # empirical widening: gap between exact diagnostic and its c->0 limit,
    # observed at the band edges of the omega grid
    gap = 0.0
    try:
        for band in bands:
            for k_val in (band.k_lo, band.k_hi):
                a_val = a_exact(ctx, t_bar, k_val)
                lim, _ = alpha_limit(profile, t_bar, k_val, r_min=b.r_min)
                gap = max(gap, abs(a_val - lim))
    except DomainError as exc:
        out = refused(f"diagnostic left the map domain on the band grid: {exc}",
                      verdict, witness)
        out.omega_window = (w_lo, w_hi)
        out.bands = bands
        return out
    widen = 2.0 * gap

    k_min = min(band.k_lo for band in bands) - widen
    k_max = max(band.k_hi for band in bands) + widen
    s_star = bmap.sigma_star(ctx)
    if k_min <= s_star:
        margins["k_range_clamped_at"] = s_star
        k_min = s_star * (1.0 + 1e-9)

    ks = np.linspace(k_min, k_max, k_samples)
    a_vals = []
    try:
        for k_val in ks:
            a_vals.append(a_exact(ctx, t_bar, float(k_val)))
    except DomainError as exc:
        out = refused(f"diagnostic left the map domain on the K grid: {exc}",
                      verdict, witness)
        out.omega_window = (w_lo, w_hi)
        out.bands = bands
        return out
    a_max = max(a_vals)
    margins["a_max_negative"] = -a_max
    margins.update(verdict.margins)

    return ChaosCertificate(
        profile=profile, eps=eps, c=c, t_witness=t_bar, ddR_witness=ddr,
        omega_window=(w_lo, w_hi), bands=bands, k_range=(float(k_min), float(k_max)),
        widen_margin=widen, a_grid=[(float(k), float(a)) for k, a in zip(ks, a_vals)],
        a_max=a_max, certified=bool(a_max < 0.0), reason=None, margins=margins)


def c0_search(profile: RadiusProfile, eps: float, iters: int = 20,
              omega_grid: int = DEFAULT_OMEGA_GRID,
              k_samples: int = DEFAULT_K_SAMPLES) -> C0SearchResult:
    """Largest certified momentum by bisection on (0, eps r_min^2 / sigma).

    Monotonicity of the verdict in c is plausible but unproven; the result
    reports whether the tested verdicts happened to be monotone instead of
    asserting it.
    """
    verdict = classify(profile, eps)
    if verdict.klass != "R_tilde":
        return C0SearchResult(c0=None, c_max=math.nan, tested=[],
                              monotone_observed=True,
                              reason=f"profile class is {verdict.klass}, needs R_tilde")
    b = verdict.bounds
    c_max = eps * b.r_min ** 2 / b.sigma
    tested: list[tuple[float, bool]] = []

    def ok(c):
        cert = certify(profile, eps, c, omega_grid=omega_grid, k_samples=k_samples)
        tested.append((c, cert.certified))
        return cert.certified

    hi = c_max * (1.0 - 1e-9)
    if ok(hi):
        return C0SearchResult(c0=hi, c_max=c_max, tested=tested,
                              monotone_observed=_monotone(tested))
    lo = None
    c_try = hi
    for _ in range(40):
        c_try *= 0.5
        if ok(c_try):
            lo = c_try
            break
    if lo is None:
        return C0SearchResult(c0=None, c_max=c_max, tested=tested,
                              monotone_observed=_monotone(tested),
                              reason="no certified momentum found down to "
                                     f"{c_try}")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return C0SearchResult(c0=lo, c_max=c_max, tested=tested,
                          monotone_observed=_monotone(tested))


def _monotone(tested):
    by_c = sorted(tested)
    seen_false = False
    for _, good in by_c:
        if not good:
            seen_false = True
        elif seen_false:
            return False
    return True


def lyapunov(ctx: GenFunContext, s0: CylinderState, n: int,
             store_norms: bool = False) -> LyapunovEstimate:
    """Largest Lyapunov exponent estimate along the orbit of s0.

    One tangent vector is pushed by the map Jacobian and renormalised each
    step; lam is the average of the stored log-norms.  An orbit leaving the
    map domain yields a partial (flagged) estimate.
    """
    if n < 1:
        raise PreconditionError(f"need n >= 1, got {n}")
    s_star = bmap.sigma_star(ctx)
    if s0.K <= s_star:
        raise DomainError(f"initial state below map domain: K = {s0.K} <= {s_star}")
    v = (1.0, 0.0)
    s = s0
    total = 0.0
    steps = 0
    guess = None
    norms = [] if store_norms else None
    completed = True
    for _ in range(n):
        if s.K <= s_star:
            completed = False
            break
        try:
            t1 = bmap.forward_time(ctx, s.t, s.K, guess=guess)
        except DomainError:
            completed = False
            break
        jac = bmap.jacobian(ctx, s, t1=t1)
        d1, d2 = grad_h(ctx, s.t, t1)
        k1 = s.K - (d1 + d2)
        v = jac.apply(v)
        norm = math.hypot(v[0], v[1])
        if norm == 0.0:
            completed = False
            break
        total += math.log(norm)
        if norms is not None:
            norms.append(math.log(norm))
        v = (v[0] / norm, v[1] / norm)
        guess = t1 + (t1 - s.t)
        s = CylinderState(t1, k1)
        steps += 1
    lam = total / steps if steps else math.nan
    return LyapunovEstimate(lam=lam, steps=steps, completed=completed,
                            log_norms=tuple(norms) if norms is not None else None)


def lyapunov_table(ctx: GenFunContext, k_lo: float, k_hi: float,
                   seeds: int, n: int, seed: int = 0) -> list[dict]:
    """Lyapunov estimates for `seeds` random states in a K band."""
    if not (k_lo < k_hi):
        raise PreconditionError("need k_lo < k_hi")
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(seeds):
        t0 = float(rng.uniform(0.0, 1.0))
        k0 = float(rng.uniform(k_lo, k_hi))
        est = lyapunov(ctx, CylinderState(t0, k0), n)
        rows.append({"seed_index": i, "t0": t0, "K0": k0, "lambda": est.lam,
                     "steps": est.steps, "completed": est.completed})
    return rows
