import numpy as np
import pytest
from scipy.integrate import quad as scipy_quad

from carnot_hardy import (Point, ZFieldSpec, cc, heisenberg, heisenberg_product,
                          koranyi, nonisotropic)
from carnot_hardy.verify import (BumpProfile, QuadratureSpec, check_ibp_identity,
                                 check_w_identity, counterexample_scan,
                                 euler_adjoint_defect, extremal_residual,
                                 fit_log_excess, g_cutoff, g_cutoff_d,
                                 hardy_quotient, integrate, integrate_many,
                                 product_check, radial_bump, random_bump,
                                 sharpness_sequence, smoothstep, smoothstep_d,
                                 weak_divergence_defect)

H1 = heisenberg(1)


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------

def test_smoothstep_shape():
    x = np.linspace(-0.5, 1.5, 401)
    s = smoothstep(x)
    assert np.all(s[x <= 0] == 0.0) and np.all(s[x >= 1] == 1.0)
    assert np.all(np.diff(s) >= -1e-12)
    assert smoothstep(np.array(0.5)) == pytest.approx(0.5, abs=1e-12)
    # derivative consistent with central differences
    xs = np.linspace(0.05, 0.95, 19)
    fd = (smoothstep(xs + 1e-6) - smoothstep(xs - 1e-6)) / 2e-6
    assert np.max(np.abs(fd - smoothstep_d(xs))) < 1e-8


def test_g_cutoff_plateau_and_derivative_bounds():
    eps = 1e-3
    lam = np.array([eps / 2, eps, 2 * eps, 0.1, 1.0, 1 / (2 * eps), 1 / eps, 2 / eps])
    g = g_cutoff(lam, eps)
    assert g[0] == 0.0 and g[1] == 0.0 and g[-2] == pytest.approx(0.0, abs=1e-15)
    assert g[-1] == 0.0
    assert np.all(g[2:6] == pytest.approx(1.0, abs=1e-12))
    assert np.all((g >= 0) & (g <= 1))
    # |g'| <= c/eps on [eps, 2 eps] and <= c eps on [1/(2 eps), 1/eps]
    lam_in = np.linspace(eps, 2 * eps, 200)
    lam_out = np.linspace(1 / (2 * eps), 1 / eps, 200)
    c_in = np.max(np.abs(g_cutoff_d(lam_in, eps))) * eps
    c_out = np.max(np.abs(g_cutoff_d(lam_out, eps))) / eps
    assert 0 < c_in < 10 and 0 < c_out < 10
    # the same constant works for a different eps (c independent of eps)
    eps2 = 1e-5
    c_in2 = np.max(np.abs(g_cutoff_d(np.linspace(eps2, 2 * eps2, 200), eps2))) * eps2
    assert c_in2 == pytest.approx(c_in, rel=1e-6)


def test_bump_profile_support():
    prof = BumpProfile(0.25, 0.5, 1.5, 2.0)
    s = np.array([0.2, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5])
    v = prof(s)
    assert v[0] == 0 and v[1] == 0 and v[5] == 0 and v[6] == 0
    assert v[2] == pytest.approx(1.0) and v[3] == 1.0 and v[4] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        BumpProfile(0.5, 0.25, 1.5, 2.0)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def test_integrate_zero_and_mass_oracle():
    quad = QuadratureSpec(sigma_range=(0.25, 2.0))
    zero = integrate(H1, lambda z, t: np.zeros(z.shape[0]), quad)
    assert zero.value == 0.0

    # radial mass integral against its separable 1-D reduction:
    # int eta(rho)^2 / rho^2 = 2 pi * pi * int sigma^{3-2} eta(sigma)^2 dsigma...
    # in the chart: int sigma^{3-ptheta} eta^2 dsigma * (angle 2pi) * (int dpsi = pi)
    prof = BumpProfile()
    u = radial_bump(H1, prof)

    def f(z, t):
        d = koranyi(H1).value(z, t)
        return u.value(z, t) ** 2 / d**2

    got = integrate(H1, f, quad)
    oracle, est_err = scipy_quad(lambda s: s * prof(np.array(s)) ** 2, 0.25, 2.0,
                                 epsabs=1e-13, epsrel=1e-13)
    oracle *= 2 * np.pi * np.pi
    # the mollifier is smooth but not analytic; 80 Gauss nodes reach ~1e-7
    assert got.value == pytest.approx(oracle, rel=1e-6)
    assert got.error < 1e-3 * abs(oracle)


def test_chart_equivalence_ambient_vs_phi_polar():
    # ten integrands sharing the same support: bumps times gauge powers and
    # vertical modulations
    rho = koranyi(H1)
    bumps = [radial_bump(H1, BumpProfile(), modulation=a, modulation2=b)
             for a, b in ((0.0, 0.0), (0.3, 0.0), (-0.4, 0.25))]
    fs = []
    for u in bumps:
        for power in (0.0, 1.0, 2.0):
            def f(z, t, u=u, power=power):
                return u.value(z, t) ** 2 / rho.value(z, t) ** power
            fs.append(f)
    fs.append(lambda z, t: bumps[0].value(z, t) * np.asarray(t)[..., 0] ** 2)
    assert len(fs) == 10
    chart = integrate_many(H1, fs, QuadratureSpec(sigma_range=(0.25, 2.0)))
    box = integrate_many(H1, fs, QuadratureSpec(coordinates="ambient", n_sigma=140,
                                                box=(2.0, 4.0)))
    for rc, rb in zip(chart, box):
        assert abs(rc.value - rb.value) / abs(rc.value) < 1e-3


def test_dilation_scaling_of_integral():
    # int u(delta_gamma x) dx = gamma^{-Q} int u
    gam = 1.7
    prof = BumpProfile()
    u = radial_bump(H1, prof)

    def f(z, t):
        return u.value(z, t)

    def f_dil(z, t):
        return u.value(gam * np.asarray(z), gam**2 * np.asarray(t))

    base = integrate(H1, f, QuadratureSpec(sigma_range=(0.25, 2.0)))
    scaled = integrate(H1, f_dil, QuadratureSpec(sigma_range=(0.25 / gam, 2.0 / gam)))
    assert scaled.value == pytest.approx(base.value / gam**4, rel=1e-3)


def test_monte_carlo_deterministic_and_consistent():
    prof = BumpProfile()
    u = radial_bump(H1, prof)

    def f(z, t):
        return u.value(z, t)

    quad = QuadratureSpec(method="monte_carlo", samples=200_000, seed=7,
                          box=(2.0, 4.0))
    a = integrate(H1, f, quad)
    b = integrate(H1, f, quad)
    assert a.value == b.value          # bit-identical for a fixed seed
    grid = integrate(H1, f, QuadratureSpec(sigma_range=(0.25, 2.0)))
    assert abs(a.value - grid.value) < 5 * a.error + 1e-3 * abs(grid.value)


def test_integrate_flags_nonfinite():
    quad = QuadratureSpec(sigma_range=(0.25, 2.0))
    with pytest.raises(ValueError):
        integrate(H1, lambda z, t: np.full(z.shape[0], np.nan), quad)


# ---------------------------------------------------------------------------
# the weight identity
# ---------------------------------------------------------------------------

def test_w_identity_p2_exact():
    rng = np.random.default_rng(50)
    f, g = rng.normal(size=100), rng.normal(size=100)
    rep = check_w_identity(2.0, f, g)
    assert rep.passed and rep.values["rel_defect"] <= 1e-14


def test_w_identity_f_equals_g():
    rng = np.random.default_rng(51)
    f = rng.normal(size=60)
    for p in (2.0, 3.0):
        rep = check_w_identity(p, f, f)
        assert rep.passed
        assert abs(rep.values["lhs"]) < 1e-12


def test_w_identity_p3_random_vectors():
    rng = np.random.default_rng(52)
    rep = check_w_identity(3.0, rng.normal(size=100), rng.normal(size=100))
    assert rep.passed and rep.values["rel_defect"] <= 1e-10


def test_w_weight_against_mpmath():
    # independent high-precision route for the weight integral itself
    import mpmath
    from carnot_hardy.verify.checks import _w_sq
    mpmath.mp.dps = 30
    for p, f, g in ((2.5, 1.3, -0.7), (3.0, -0.2, 0.9), (4.0, 2.0, 2.5)):
        pieces = [0, 1]
        if f != g and 0 < f / (f - g) < 1:
            pieces = [0, f / (f - g), 1]   # split at the |.|^{p-2} kink
        ref = mpmath.quad(lambda s: s * abs(s * g + (1 - s) * f) ** (p - 2), pieces)
        ref *= p * (p - 1)
        assert _w_sq(p, f, g) == pytest.approx(float(ref), rel=1e-10)


def test_w_identity_rejects_bad_input():
    with pytest.raises(ValueError):
        check_w_identity(1.5, np.ones(3), np.ones(3))
    with pytest.raises(ValueError):
        check_w_identity(2.0, np.ones(3), np.ones(4))


# ---------------------------------------------------------------------------
# integration by parts and Hardy quotients
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("p,theta", [(2.0, 0.0), (2.0, 1.0), (3.0, 1.0)])
def test_ibp_identity_koranyi(p, theta):
    spec = ZFieldSpec(H1, koranyi(H1), p, theta)
    u = radial_bump(H1, modulation=0.3)
    rep = check_ibp_identity(spec, u)
    assert rep.passed, rep.values
    assert rep.values["defect"] <= 2e-3


def test_ibp_identity_degenerate_ptheta():
    spec = ZFieldSpec(H1, koranyi(H1), 2.0, 2.0)     # p theta = Q = 4
    rep = check_ibp_identity(spec, radial_bump(H1, modulation=0.2))
    assert rep.passed
    assert abs(rep.values["I3"]) == 0.0
    assert rep.values["defect"] <= 1e-4


def test_ibp_identity_cc():
    spec = ZFieldSpec(H1, cc(H1), 2.0, 1.0)
    rep = check_ibp_identity(spec, radial_bump(H1, modulation=0.25))
    assert rep.passed, rep.values


def test_hardy_quotients_dominate():
    rng = np.random.default_rng(53)
    for model, full_bound in ((koranyi(H1), 0.25), (cc(H1), 0.25)):
        spec = ZFieldSpec(H1, model, 2.0, 1.0)
        for _ in range(3):
            u = random_bump(H1, rng)
            proj = hardy_quotient(spec, u, projected=True)
            assert proj >= 1.0 - 1e-3
            full = hardy_quotient(spec, u, projected=False)
            assert full >= full_bound - 1e-3


def test_hardy_quotient_dilation_invariant():
    # replacing u by u o delta_gamma leaves the quotient unchanged
    spec = ZFieldSpec(H1, koranyi(H1), 2.0, 1.0)
    gam = 2.0
    u1 = radial_bump(H1, BumpProfile(0.25, 0.5, 1.5, 2.0), modulation=0.2)
    u2 = radial_bump(H1, BumpProfile(0.25 / gam, 0.5 / gam, 1.5 / gam, 2.0 / gam),
                     modulation=0.2)
    q1 = hardy_quotient(spec, u1)
    q2 = hardy_quotient(spec, u2)
    assert q1 == pytest.approx(q2, rel=1e-9)


def test_sharpness_sequence_quick():
    spec = ZFieldSpec(H1, koranyi(H1), 2.0, 1.0)
    pts = sharpness_sequence(spec, [1e-2, 1e-3])
    assert pts[1].quotient <= pts[0].quotient + 1e-3
    assert all(sp.quotient >= 1.0 - 1e-9 for sp in pts)
    assert pts[1].denominator > pts[0].denominator
    with pytest.raises(ValueError):
        sharpness_sequence(spec, [1e-3, 1e-2])


# ---------------------------------------------------------------------------
# extremal residual
# ---------------------------------------------------------------------------

def test_extremal_residual_koranyi():
    spec = ZFieldSpec(H1, koranyi(H1), 2.0, 1.0)
    assert extremal_residual(spec, Point([1.0, 0.0], 1.0)) < 1e-8
    rng = np.random.default_rng(54)
    for _ in range(10):
        x = Point(rng.normal(size=2), rng.uniform(0.2, 2.0, size=1))
        assert extremal_residual(spec, x) < 1e-7


def test_extremal_residual_cc():
    spec = ZFieldSpec(H1, cc(H1), 2.0, 1.0)
    assert extremal_residual(spec, Point([1.0, 0.0], 1.0)) < 1e-7


def test_extremal_residual_degenerate():
    # p theta = Q: the reduction factor vanishes, the pairing itself is tiny
    spec = ZFieldSpec(H1, koranyi(H1), 2.0, 2.0)
    assert extremal_residual(spec, Point([1.0, 0.0], 1.0)) < 1e-8


def test_extremal_residual_guards():
    from carnot_hardy import CenterError
    spec = ZFieldSpec(H1, koranyi(H1), 2.0, 1.0)
    with pytest.raises(CenterError):
        extremal_residual(spec, Point([1.0, 0.0], 0.0))
    with pytest.raises(CenterError):
        extremal_residual(spec, Point([0.0, 0.0], 1.0))


# ---------------------------------------------------------------------------
# weak divergence identities and the adjoint of the dilation generator
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("which", ["i", "ii"])
def test_weak_divergence_identities(which):
    # the quadratic vertical modulation keeps both sides away from the
    # parity cancellations that make radial bumps integrate to zero here
    phi = radial_bump(H1, modulation=0.2, modulation2=0.3)
    defect, lhs, rhs = weak_divergence_defect(koranyi(H1), 2.0, phi, which)
    assert abs(lhs) > 1e-3
    assert defect <= 2e-3, (which, lhs, rhs)


def test_euler_adjoint():
    rng = np.random.default_rng(55)
    for _ in range(3):
        u = random_bump(H1, rng)
        v = random_bump(H1, rng)
        lo = min(u.support[0], v.support[0])
        hi = max(u.support[1], v.support[1])
        quad = QuadratureSpec(sigma_range=(lo, hi))
        assert euler_adjoint_defect(H1, u, v, quad) <= 2e-3


# ---------------------------------------------------------------------------
# scans (reduced sizes here; acceptance runs the full configuration)
# ---------------------------------------------------------------------------

def test_vertical_excess_is_zero_on_horizontal_plane():
    from carnot_hardy import balogh_tyson
    from carnot_hardy.verify.checks import _vertical_excess
    g = nonisotropic([0.5, 1.0])
    spec = ZFieldSpec(g, balogh_tyson(g), 2.0, 1.0)
    rng = np.random.default_rng(60)
    z = rng.normal(size=(30, 4))
    assert np.max(np.abs(_vertical_excess(spec, z, np.zeros((30, 1))))) == 0.0


def test_counterexample_scan_finds_positive_excess():
    rep = counterexample_scan(samples_log2=13, seed=3)
    assert rep.passed
    assert rep.values["max_excess"] > 1e-6
    # frozen from an independent parameter sweep: the excess near
    # z = (0.99, 0, 0.54, 0), t = 0.50 is about 0.486
    from carnot_hardy import balogh_tyson
    g = nonisotropic([0.5, 1.0])
    spec = ZFieldSpec(g, balogh_tyson(g), 2.0, 1.0)
    from carnot_hardy.verify.checks import _vertical_excess
    val = _vertical_excess(spec, np.array([[0.99, 0.0, 0.54, 0.0]]),
                           np.array([[0.50]]))[0]
    assert val > 0.45
    assert rep.values["max_excess"] >= val - 1e-6


def test_counterexample_isotropic_control():
    rep = counterexample_scan(samples_log2=13, seed=3, isotropic_control=True)
    assert rep.passed
    assert rep.values["max_excess"] <= 1e-6


def test_product_check_small():
    rep = product_check(1, 2, 2.0, 1.0, samples_log2=13, mc_samples=2_000_000)
    assert rep.passed, rep.values
    assert rep.values["sampled_sup"] <= 2.0 + 1e-9
    assert rep.values["argmax_t_norm"] <= 1e-4
    assert rep.values["identity_rel_defect"] <= 5e-3
    # on the slice {t = 0} the field reduces to (n+1)/n z/rho exactly
    from carnot_hardy import heisenberg_product, koranyi
    from carnot_hardy.zfield import z_field_components
    gp = heisenberg_product(1, 2)
    spec = ZFieldSpec(gp, koranyi(gp), 2.0, 1.0, variant="product")
    rng = np.random.default_rng(61)
    z = rng.normal(size=(20, 4))
    vals = np.linalg.norm(z_field_components(spec, z, np.zeros((20, 2))), axis=-1)
    assert np.allclose(vals, 2.0, rtol=1e-14)


def test_product_check_hypothesis_violated():
    # n = 1, p theta = 12: the vertical term can push |Z| above (n+1)/n
    rep = product_check(1, 2, 2.0, 6.0, samples_log2=13)
    assert rep.values["hypothesis_holds"] is False
    assert rep.values["sampled_sup"] > 2.0 + 1e-9
    assert rep.passed


def test_report_serialization():
    rep = counterexample_scan(samples_log2=10, seed=1)
    d = rep.to_dict()
    assert set(d) == {"name", "passed", "tol", "values", "diagnostics"}
    import json
    json.dumps(d)
