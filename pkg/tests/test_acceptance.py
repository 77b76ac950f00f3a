"""Acceptance gate: one test per criterion, each printing a PASS line.

Criteria run at their stated tolerances and wall-clock budgets.  The chaos
evidence criterion (10) is soft by design: if no random seed exhibits a
positive exponent the table is attached as a warning instead of failing.
"""

import math
import time
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from breathing_billiard import aubry, bmap, chaoscert, flight, genfun, radius, simulate
from breathing_billiard.bmap import CylinderState

EPS = 0.5


def announce(capsys, n, detail):
    with capsys.disabled():
        print(f"\n[acceptance] criterion {n:2d}: PASS  {detail}")


def random_strip_points(ctx, count, seed, margin=0.05):
    rng = np.random.default_rng(seed)
    lo, hi = margin * ctx.sigma, (1 - margin) * ctx.sigma
    return [(float(rng.uniform(0, 1)), float(rng.uniform(lo, hi)))
            for _ in range(count)]


def random_domain_states(ctx, count, seed, k_span=(1.2, 4.0)):
    rng = np.random.default_rng(seed)
    s_star = bmap.sigma_star(ctx)
    return [CylinderState(float(rng.uniform(0, 1)),
                          float(rng.uniform(k_span[0] * s_star, k_span[1] * s_star)))
            for _ in range(count)]


def test_criterion_01_derivative_oracle(small_ctx, capsys):
    """Analytic gradient/Hessian vs central finite differences, rel 1e-5."""
    start = time.perf_counter()
    s = 1e-5
    worst = 0.0
    for t0, dt in random_strip_points(small_ctx, 1000, seed=101):
        t1 = t0 + dt
        d1, d2 = genfun.grad_h(small_ctx, t0, t1)
        fd1 = (genfun.h(small_ctx, t0 + s, t1) - genfun.h(small_ctx, t0 - s, t1)) / (2 * s)
        fd2 = (genfun.h(small_ctx, t0, t1 + s) - genfun.h(small_ctx, t0, t1 - s)) / (2 * s)
        d11, d12, d22 = genfun.hess_h(small_ctx, t0, t1)
        g = genfun.grad_h
        fd11 = (g(small_ctx, t0 + s, t1)[0] - g(small_ctx, t0 - s, t1)[0]) / (2 * s)
        fd12 = (g(small_ctx, t0, t1 + s)[0] - g(small_ctx, t0, t1 - s)[0]) / (2 * s)
        fd22 = (g(small_ctx, t0, t1 + s)[1] - g(small_ctx, t0, t1 - s)[1]) / (2 * s)
        for got, ref in ((d1, fd1), (d2, fd2), (d11, fd11), (d12, fd12), (d22, fd22)):
            rel = abs(got - ref) / abs(ref)
            worst = max(worst, rel)
            assert rel < 1e-5
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    announce(capsys, 1, f"worst rel error {worst:.2e} over 1000 points in {elapsed:.2f}s")


def test_criterion_02_action_identity(small_ctx, capsys):
    """h equals the flight action (fixed additive constant c*pi) to 1e-9."""
    c = small_ctx.c
    worst = 0.0
    for t0, dt in random_strip_points(small_ctx, 200, seed=102):
        t1 = t0 + dt
        seg = flight.make_segment(small_ctx.profile, t0, t1, c)

        def lagrangian(t):
            r, rdot, _ = flight.flight_state(seg, t)
            return 0.5 * rdot * rdot - 0.5 * c * c / (r * r)

        oracle, err = quad(lagrangian, t0, t1, epsabs=1e-13, epsrel=1e-13, limit=200)
        assert err < 1e-10
        diff = abs(genfun.h(small_ctx, t0, t1) - c * math.pi - oracle)
        worst = max(worst, diff)
        assert diff < 1e-9
    announce(capsys, 2, f"worst |h - action| = {worst:.2e} over 200 segments")


def test_criterion_03_static_circle_regression(static_profile, capsys):
    """Constant radius: K exactly conserved, bounce gap matches the chord law."""
    for c in (0.0, 0.1):
        ctx = genfun.make_context(static_profile, c, EPS, sigma=4.0)
        m = static_profile.mean
        s = CylinderState(0.0, 2.0)
        guess = None
        worst_k = 0.0
        worst_tau = 0.0
        for _ in range(10_000):
            s_next = bmap.forward(ctx, s, t1_guess=guess)
            worst_k = max(worst_k, abs(s_next.K - 2.0))
            # chord geometry: perpendicular distance c/speed, speed sqrt(2K)
            speed = math.sqrt(2.0 * s.K)
            tau_ref = 2.0 * math.sqrt(m * m - (c / speed) ** 2) / speed
            worst_tau = max(worst_tau, abs((s_next.t - s.t) - tau_ref))
            guess = s_next.t + (s_next.t - s.t)
            s = s_next
        assert worst_k < 1e-12
        assert worst_tau < 1e-10
    announce(capsys, 3, f"K drift {worst_k:.1e}, chord-law gap {worst_tau:.1e} over 1e4 steps")


def test_criterion_04_symplecticity(member_ctx, capsys):
    """Unit Jacobian determinant and negative twist on 1e4 random states."""
    worst = 0.0
    for s in random_domain_states(member_ctx, 10_000, seed=104):
        jac = bmap.jacobian(member_ctx, s)
        worst = max(worst, abs(jac.det - 1.0))
        assert abs(jac.det - 1.0) < 1e-8
        assert jac.dt1_dK0 < 0
    announce(capsys, 4, f"max |det J - 1| = {worst:.2e} on 1e4 states")


def test_criterion_05_physics_laws(static_profile, member_ctx, capsys):
    """Reflection law, Euler-Lagrange residual and confinement on 1e3 bounces."""
    runs = []
    ctx_static = genfun.make_context(static_profile, 0.1, EPS, sigma=4.0)
    runs.append((ctx_static, CylinderState(0.0, 2.0)))
    runs.append((member_ctx, CylinderState(0.2, 3.0e4)))
    worst_refl = worst_el = 0.0
    for ctx, s0 in runs:
        res = simulate.run(ctx, s0, 1000)
        assert res.completed, res.reason
        worst_refl = max(worst_refl, simulate.reflection_residual(ctx, res.records))
        worst_el = max(worst_el, simulate.euler_lagrange_residual(ctx, res.records))
        for rec in res.records[:: 50]:
            if rec.segment is None:
                continue
            for t in np.linspace(rec.segment.t0, rec.segment.t1, 18)[1:-1]:
                r, _, _ = flight.flight_state(rec.segment, float(t))
                assert r < ctx.profile.radius(float(t))
    assert worst_refl < 1e-9
    assert worst_el < 1e-9
    announce(capsys, 5, f"reflection {worst_refl:.1e}, EL {worst_el:.1e} over 1e3-bounce runs")


def test_criterion_06_cross_formulation(member_ctx, capsys):
    """Impact-variable map agrees with the action map on (t1, rdot+) to 1e-9."""
    worst_t = worst_v = 0.0
    for s in random_domain_states(member_ctx, 1000, seed=106):
        image = bmap.forward(member_ctx, s)
        v_plus_action = bmap.rdot_plus_from_action(member_ctx, image.t, image.K)
        i0 = bmap.action_to_impact(member_ctx, s.t, s.K)
        t1_impact, i1 = bmap.laederich_map(member_ctx, s.t, i0)
        v_plus_impact = -i1 / member_ctx.profile.radius(t1_impact)
        worst_t = max(worst_t, abs(t1_impact - image.t))
        worst_v = max(worst_v, abs(v_plus_impact - v_plus_action))
        assert abs(t1_impact - image.t) < 1e-9
        assert abs(v_plus_impact - v_plus_action) < 1e-9
    announce(capsys, 6, f"dt1 {worst_t:.1e}, drdot {worst_v:.1e} on 1e3 states")


def test_criterion_07_family_reproduction(capsys):
    """Closed-form family constants and the member search round trip."""
    start = time.perf_counter()
    k_bar = radius.two_harmonic_k_threshold(0.5)
    assert k_bar == pytest.approx(4.975, abs=1e-3)
    lo, hi = radius.delta_window(5)
    assert lo == pytest.approx(9.75e-4, rel=1e-3)
    assert hi == pytest.approx(2.653e-2, rel=1e-3)
    assert radius.single_harmonic_eps_max() == pytest.approx(0.8839, abs=1e-3)
    mean, verdict = radius.find_member(1, 0.05, EPS)
    assert verdict.klass == "R_tilde"
    recheck = radius.classify(radius.family_profile(1, 0.05, mean), EPS)
    assert recheck.klass == "R_tilde"
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    announce(capsys, 7, f"k_bar {k_bar:.4f}, member mean {mean:.4g} in {elapsed:.1f}s")


def test_criterion_08_certificate(member, capsys):
    """Full destruction certificate for the constructed member at c = 1."""
    profile, mean, verdict = member
    start = time.perf_counter()
    assert verdict.klass == "R_tilde"
    cert = chaoscert.certify(profile, EPS, 1.0)
    elapsed = time.perf_counter() - start
    assert cert.omega_window[1] - cert.omega_window[0] > 1.0
    assert cert.margins["band_above_floor"] > 0
    assert cert.margins["band_below_ceiling"] > 0
    assert cert.a_max < 0
    assert cert.certified
    assert elapsed < 60.0
    announce(capsys, 8, f"window {cert.omega_window[1]-cert.omega_window[0]:.3f} wide, "
                        f"a_max {cert.a_max:.3f}, {elapsed:.2f}s (mean {mean:.4g})")


def test_criterion_09_aubry_mather(member, member_ctx, capsys):
    """Minimal orbit with rotation number inside the window closes under the map."""
    profile, _, verdict = member
    start = time.perf_counter()
    w_lo, w_hi = chaoscert.xi_interval(profile, EPS, verdict)
    q = 5
    p = round(q * 0.5 * (w_lo + w_hi))
    assert w_lo < p / q < w_hi
    orbit = aubry.periodic_orbit(member_ctx, p, q, starts=32, seed=109)
    assert orbit.residual < 1e-8
    omega = p / q
    full = list(orbit.times) + [t + orbit.p for t in orbit.times]
    for i in range(len(full)):
        for j in range(i + 1, len(full)):
            assert abs(full[j] - full[i] - (j - i) * omega) <= 1.0 + 1e-9
    s = CylinderState(orbit.times[0], orbit.Ks[0])
    for _ in range(q):
        s = bmap.forward(member_ctx, s)
    assert s.t == pytest.approx(orbit.times[0] + p, abs=1e-8)
    assert s.K == pytest.approx(orbit.Ks[0], abs=1e-8 * max(1.0, orbit.Ks[0]))
    elapsed = time.perf_counter() - start
    assert elapsed < 120.0
    announce(capsys, 9, f"(p,q)=({p},{q}) residual {orbit.residual:.1e} in {elapsed:.1f}s")


def test_criterion_10_chaos_evidence(static_profile, member, member_ctx, capsys):
    """Integrable profile: vanishing exponent.  Certified band: 20-seed table,
    at least one positive exponent expected (soft: warn with table attached)."""
    ctx_static = genfun.make_context(static_profile, 0.05, EPS, sigma=4.0)
    est = chaoscert.lyapunov(ctx_static, CylinderState(0.1, 2.0), 100_000)
    assert est.completed
    assert abs(est.lam) < 1e-3

    profile, _, _ = member
    cert = chaoscert.certify(profile, EPS, 1.0)
    assert cert.certified
    rows = chaoscert.lyapunov_table(member_ctx, cert.k_range[0], cert.k_range[1],
                                    seeds=20, n=100_000, seed=110)
    assert len(rows) == 20
    table = "\n".join(
        f"    seed {r['seed_index']:2d}: t0={r['t0']:.4f} K0={r['K0']:9.2f} "
        f"lambda={r['lambda']:+.4f} steps={r['steps']:6d} completed={r['completed']}"
        for r in rows)
    best = max(r["lambda"] for r in rows)
    if best > 0.01:
        announce(capsys, 10, f"static |lambda| = {abs(est.lam):.1e}, "
                             f"best band exponent {best:.3f}")
        with capsys.disabled():
            print(table)
    else:
        warnings.warn("no seed exceeded lambda = 0.01; table attached:\n" + table)
        announce(capsys, 10, f"static part PASS; band part soft-warned (best {best:.4f})")
