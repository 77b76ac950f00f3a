"""Boundary radius profiles of the breathing circle.

A profile is a mean radius plus finitely many sine harmonics,

    R(t) = M + sum_i  d_i * sin(2 pi k_i t),

which is strictly positive, exactly 1-periodic and C-infinity, with
analytic first and second derivatives.  On top of evaluation this module
computes the sup-norms entering the flight-window constant sigma,
classifies profiles into the regularity classes "R" (sigma > 2, enough
for the twist-map machinery) and "R_tilde" (additional deceleration
conditions that force destruction of invariant curves), and constructs
members of the two admissible sine families by searching the mean M.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from ._search import bisect_root, circle_sup
from .errors import ConvergenceError, PreconditionError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class RadiusProfile:
    """R(t) = mean + sum of d*sin(2*pi*k*t) harmonics, with mean > sum|d|."""

    mean: float
    harmonics: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        if self.mean <= 0:
            raise PreconditionError(f"mean radius must be positive, got {self.mean}")
        harm = tuple((int(k), float(d)) for k, d in self.harmonics)
        object.__setattr__(self, "harmonics", harm)
        for k, _ in harm:
            if k < 1:
                raise PreconditionError(f"harmonic frequency must be a positive integer, got {k}")
        if sum(abs(d) for _, d in harm) >= self.mean:
            raise PreconditionError("profile not strictly positive: mean <= sum |amplitudes|")

    @property
    def is_constant(self) -> bool:
        return all(d == 0.0 for _, d in self.harmonics)

    def eval(self, t: float) -> tuple[float, float, float]:
        """Exact (R, Rdot, Rddot) at time t."""
        r = self.mean
        dr = 0.0
        ddr = 0.0
        for k, d in self.harmonics:
            w = TWO_PI * k
            a = w * t
            s = math.sin(a)
            c = math.cos(a)
            r += d * s
            dr += d * w * c
            ddr -= d * w * w * s
        return r, dr, ddr

    def radius(self, t: float) -> float:
        r = self.mean
        for k, d in self.harmonics:
            r += d * math.sin(TWO_PI * k * t)
        return r

    def d_radius(self, t: float) -> float:
        dr = 0.0
        for k, d in self.harmonics:
            w = TWO_PI * k
            dr += d * w * math.cos(w * t)
        return dr

    def dd_radius(self, t: float) -> float:
        ddr = 0.0
        for k, d in self.harmonics:
            w = TWO_PI * k
            ddr -= d * w * w * math.sin(w * t)
        return ddr

    def dd_radius_sq(self, t: float) -> float:
        """(R^2)'' = 2 (Rdot^2 + R * Rddot)."""
        r, dr, ddr = self.eval(t)
        return 2.0 * (dr * dr + r * ddr)

    def to_json(self) -> str:
        return json.dumps({"mean": self.mean,
                           "harmonics": [[k, d] for k, d in self.harmonics]})

    @classmethod
    def from_json(cls, text: str) -> "RadiusProfile":
        try:
            obj = json.loads(text)
            return cls(mean=float(obj["mean"]),
                       harmonics=tuple((int(k), float(d)) for k, d in obj.get("harmonics", [])))
        except (KeyError, TypeError, ValueError) as exc:
            raise PreconditionError(f"malformed profile literal: {exc}") from exc


@dataclass(frozen=True)
class ProfileBounds:
    """Sup-norms of a profile and the flight-window constant sigma.

    sigma = min( r_min / (2 ||Rdot||),
                 2 sqrt(1 + sqrt(1 - eps^2)) r_min / sqrt(||(R^2)''||) ),
    with the convention +inf when a denominator vanishes (constant profile).
    """

    eps: float
    r_min: float
    r_max: float
    dR_norm: float
    ddR2_norm: float
    sigma: float

    def __post_init__(self):
        if not (0.0 < self.eps < 1.0):
            raise PreconditionError(f"eps must lie in (0,1), got {self.eps}")
        if not (0.0 < self.r_min <= self.r_max):
            raise PreconditionError("bounds require 0 < r_min <= r_max")
        if not self.sigma > 0:
            raise PreconditionError("sigma must be positive")


@dataclass(frozen=True)
class ClassVerdict:
    """Outcome of the class-R / class-R_tilde test.

    witnesses are the stationary points (t, Rddot(t)) that pass the full
    per-point chain (deceleration, window ordering, curvature), sorted by
    |Rddot| descending; margins hold the signed slack of every inequality,
    evaluated at the strongest candidate witness (positive = satisfied).
    """

    klass: str  # "none" | "R" | "R_tilde"
    witnesses: tuple[tuple[float, float], ...]
    margins: dict[str, float]
    bounds: ProfileBounds
    degenerate: bool = False
    window: tuple[float, float] | None = None  # (omega_lo, omega_hi) of best witness


def alpha_constant(eps: float) -> float:
    """sqrt(1 + sqrt(1 - eps^2)), the curvature-window constant."""
    if not (0.0 < eps < 1.0):
        raise PreconditionError(f"eps must lie in (0,1), got {eps}")
    return math.sqrt(1.0 + math.sqrt(1.0 - eps * eps))


def bounds(profile: RadiusProfile, eps: float, grid_n: int = 4096) -> ProfileBounds:
    """Sup-norms by dense sampling plus golden-section refinement.

    grid_n >= 256 points on one period; each bracketed local extremum is
    refined to ~1e-13 in the argument, i.e. ~1e-10 relative in the value.
    """
    if grid_n < 256:
        raise PreconditionError(f"grid_n must be >= 256, got {grid_n}")
    if not (0.0 < eps < 1.0):
        raise PreconditionError(f"eps must lie in (0,1), got {eps}")
    _, r_max = circle_sup(profile.radius, grid_n)
    _, neg_min = circle_sup(lambda t: -profile.radius(t), grid_n)
    r_min = -neg_min
    _, dr_norm = circle_sup(lambda t: abs(profile.d_radius(t)), grid_n)
    _, dd2_norm = circle_sup(lambda t: abs(profile.dd_radius_sq(t)), grid_n)
    s1 = r_min / (2.0 * dr_norm) if dr_norm > 0 else math.inf
    s2 = (2.0 * alpha_constant(eps) * r_min / math.sqrt(dd2_norm)
          if dd2_norm > 0 else math.inf)
    return ProfileBounds(eps=eps, r_min=r_min, r_max=r_max,
                         dR_norm=dr_norm, ddR2_norm=dd2_norm,
                         sigma=min(s1, s2))


def stationary_points(profile: RadiusProfile, samples: int = 1024) -> list[tuple[float, float]]:
    """All roots of Rdot in [0,1), each paired with Rddot there.

    Sign-change bracketing on `samples` points followed by bisection to
    1e-12; tangential (double) roots are outside the contract.
    """
    if profile.is_constant:
        raise PreconditionError("constant profile: every point is stationary")
    f = profile.d_radius
    step = 1.0 / samples
    vals = [f(i * step) for i in range(samples)]
    roots = []
    for i in range(samples):
        a = i * step
        fa, fb = vals[i], vals[(i + 1) % samples]
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(bisect_root(f, a, a + step, xtol=1e-12))
    return [(t, profile.dd_radius(t)) for t in roots]


def _window_edges(b: ProfileBounds, ddr: float) -> tuple[float, float] | None:
    """Rotation-number window edges attached to a stationary point with
    curvature ddr; None when the deceleration condition fails."""
    decel = -(ddr * b.r_min + b.dR_norm * b.r_max)
    if decel <= 0.0:
        return None
    lo = 1.0 + math.sqrt(2.0 * b.r_max ** 2 / decel)
    hi = -1.0 + math.sqrt(2.0 * b.r_min ** 2
                          / (2.0 * b.r_max ** 2 / b.sigma ** 2 + b.dR_norm * b.r_max))
    return lo, hi


def classify(profile: RadiusProfile, eps: float, grid_n: int = 4096) -> ClassVerdict:
    """Class test: "R" needs sigma > 2 only; "R_tilde" needs sigma > 4 plus a
    stationary point passing the deceleration, window and curvature chain."""
    b = bounds(profile, eps, grid_n)
    if profile.is_constant:
        margins = {"sigma_gt_2": math.inf, "sigma_gt_4": math.inf}
        return ClassVerdict(klass="R", witnesses=(), margins=margins,
                            bounds=b, degenerate=True)

    stat = stationary_points(profile)
    witnesses = []
    candidates = []  # (|ddr|, t, ddr, window, margins-at-point)
    for t_bar, ddr in stat:
        decel = -(ddr * b.r_min + b.dR_norm * b.r_max)
        edges = _window_edges(b, ddr)
        curvature = (-2.0 * b.r_max ** 2 / (b.sigma ** 2 * b.r_min)) - ddr
        point = {
            "deceleration": decel,
            "window_above_3": (edges[0] - 3.0) if edges else -math.inf,
            "window_nonempty": (edges[1] - edges[0]) if edges else -math.inf,
            "curvature": curvature,
        }
        ok = (decel > 0 and edges is not None
              and 3.0 < edges[0] < edges[1] and curvature > 0)
        candidates.append((abs(ddr), t_bar, ddr, edges, point))
        if ok:
            witnesses.append((abs(ddr), t_bar, ddr, edges, point))

    pool = witnesses if witnesses else candidates
    best = max(pool, key=lambda w: w[0])
    margins = {"sigma_gt_2": b.sigma - 2.0, "sigma_gt_4": b.sigma - 4.0}
    margins.update(best[4])

    if b.sigma > 4.0 and witnesses:
        klass = "R_tilde"
    elif b.sigma > 2.0:
        klass = "R"
    else:
        klass = "none"
    witnesses.sort(key=lambda w: -w[0])
    return ClassVerdict(
        klass=klass,
        witnesses=tuple((w[1], w[2]) for w in witnesses),
        margins=margins,
        bounds=b,
        window=best[3] if (witnesses and b.sigma > 4.0) else None,
    )


# --- constructive sine families ------------------------------------------

def two_harmonic_k_threshold(eps: float) -> float:
    """Least admissible frequency bound k_bar for the two-harmonic family:
    integers k > k_bar are admissible."""
    a2 = alpha_constant(eps) ** 2
    return (a2 + math.sqrt(2.0 * a2 * a2 - 1.0)) / (a2 - 1.0)


def delta_window(k: int) -> tuple[float, float]:
    """Admissible amplitude range (open interval) for frequency k."""
    if k < 1:
        raise PreconditionError(f"k must be a positive integer, got {k}")
    return 1.0 / (4.0 * math.pi ** 2 * (k * k + 1)), 1.0 / (TWO_PI * (k + 1))


def single_harmonic_eps_max() -> float:
    """Largest eps for which the single-harmonic family can reach R_tilde."""
    return math.sqrt(1.0 - 1.0 / (math.pi - 1.0) ** 2)


def sufficient_mean_bound(k: int, delta: float) -> float:
    """Closed-form sufficient lower bound on M (far more conservative than
    the exact classifier)."""
    m1 = max(34.0 * delta, 2.0 * delta + 216.0 * math.pi ** 2 * (k + 1) ** 2)
    g = 4.0 * math.pi ** 2 * delta * (k * k + 1)
    if g <= 1.0:
        raise PreconditionError("amplitude below the admissible window")
    m3 = 2.0 * delta * (g + 1.0) / (g - 1.0)
    return max(m1, m3)


def family_profile(k: int, delta: float, mean: float) -> RadiusProfile:
    """Member of the constructive family: single sine for k = 1, otherwise
    the pair sin(2 pi k t) + sin(2 pi t) with a common amplitude."""
    if k == 1:
        return RadiusProfile(mean=mean, harmonics=((1, delta),))
    return RadiusProfile(mean=mean, harmonics=((k, delta), (1, delta)))


def find_member(k: int, delta: float, eps: float,
                M_hint: float | None = None,
                min_window: float | None = None,
                grid_factor: float = 1.25,
                rel_tol: float = 1e-3) -> tuple[float, ClassVerdict]:
    """Smallest mean M (on a geometric grid, refined to 3 significant digits)
    whose family profile classifies as R_tilde.

    min_window, when given, additionally requires the rotation-number window
    of the strongest witness to be wider than min_window; the certification
    pipeline needs some width to work with, while the bare classifier accepts
    means whose window is arbitrarily thin.
    """
    lo_d, hi_d = delta_window(k)
    if k == 1:
        if eps >= single_harmonic_eps_max():
            raise PreconditionError(
                f"single-harmonic family needs eps < {single_harmonic_eps_max():.6f}, got {eps}")
    else:
        k_bar = two_harmonic_k_threshold(eps)
        if k <= k_bar:
            raise PreconditionError(
                f"two-harmonic family needs k > k_bar(eps) = {k_bar:.6f}, got k = {k}")
    if not (lo_d < delta < hi_d):
        raise PreconditionError(
            f"amplitude outside the admissible window ({lo_d:.6g}, {hi_d:.6g}): got {delta}")

    def accept(mean):
        v = classify(family_profile(k, delta, mean), eps)
        if v.klass != "R_tilde":
            return False, v
        if min_window is not None and (v.window is None or
                                       v.window[1] - v.window[0] <= min_window):
            return False, v
        return True, v

    mean = M_hint if M_hint is not None else max(1.0, 4.0 * delta)
    ok, verdict = accept(mean)
    lo = None
    scans = 0
    while not ok:
        lo = mean
        mean *= grid_factor
        scans += 1
        if scans > 200:
            raise ConvergenceError("no admissible mean found on the geometric grid",
                                   {"last_mean": mean, "k": k, "delta": delta})
        ok, verdict = accept(mean)
    if lo is None:
        # hint already passes; walk down to bracket the threshold
        while True:
            lower = mean / grid_factor
            ok_lower, v_lower = accept(lower)
            if not ok_lower:
                lo = lower
                break
            mean, verdict = lower, v_lower
            if mean < 4.0 * delta:
                return mean, verdict
    # geometric bisection of (lo fail, mean pass) to 3 significant digits
    while mean / lo > 1.0 + rel_tol:
        mid = math.sqrt(lo * mean)
        ok_mid, v_mid = accept(mid)
        if ok_mid:
            mean, verdict = mid, v_mid
        else:
            lo = mid
    return mean, verdict
