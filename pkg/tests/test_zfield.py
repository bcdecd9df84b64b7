import numpy as np
import pytest

from carnot_hardy import (Point, ZFieldSpec, balogh_tyson, cc, g_cc, heisenberg,
                          heisenberg_product, koranyi, koranyi_b,
                          koranyi_profile_max, nonisotropic, sup_z_norm,
                          symplectic_norm, z_field_at, z_profile_koranyi)
from carnot_hardy.norms import cc_from_polar, CCPolar, symplectic_norm_sq_arrays
from carnot_hardy.zfield import golden_section_max, z_field_components

H1 = heisenberg(1)


def test_z_field_on_horizontal_plane():
    # at t = 0 the vertical term drops: Z = (Q/(Q-2)) z/rho, norm 2 on H^1
    spec = ZFieldSpec(H1, koranyi(H1), 2.0, 1.0)
    for zvec in ([1.0, 0.0], [0.3, -0.4], [-2.0, 1.0]):
        x = Point(zvec, 0.0)
        v = z_field_at(spec, x)
        assert v.norm() == pytest.approx(2.0, rel=1e-14)
        assert np.allclose(v.components, 2.0 * x.z / np.linalg.norm(x.z), rtol=1e-14)


def test_z_field_profile_consistency_koranyi():
    # |Z|^2 at t/|z|^2 = lam equals the closed profile
    rng = np.random.default_rng(30)
    for p, theta in ((2.0, 1.0), (2.0, 6.0), (3.0, 0.5), (2.5, -1.0)):
        spec = ZFieldSpec(H1, koranyi(H1), p, theta)
        for _ in range(25):
            z = rng.normal(size=(1, 2))
            lam = rng.normal() * 3.0
            t = np.array([[lam * float(np.sum(z * z))]])
            val = np.sum(z_field_components(spec, z, t) ** 2)
            prof = float(z_profile_koranyi(4.0, p, theta, lam))
            assert abs(val - prof) < 1e-8 * max(1.0, prof)


def test_z_field_gradient_free_when_ptheta_zero():
    spec = ZFieldSpec(H1, cc(H1), 2.0, 0.0)
    rng = np.random.default_rng(31)
    for _ in range(10):
        z = rng.normal(size=2)
        t = rng.normal(size=1)
        x = Point(z, t)
        v = z_field_at(spec, x)
        d = cc(H1).value_at(x)
        assert np.allclose(v.components, 2.0 * z / d, rtol=1e-10)


def test_z_field_degree_zero_homogeneity():
    rng = np.random.default_rng(32)
    for model in (koranyi(H1), cc(H1)):
        spec = ZFieldSpec(H1, model, 2.0, 1.5)
        for _ in range(25):
            z = rng.normal(size=(1, 2))
            t = rng.normal(size=(1, 1))
            gam = rng.uniform(0.3, 4.0)
            v1 = np.linalg.norm(z_field_components(spec, z, t))
            v2 = np.linalg.norm(z_field_components(spec, gam * z, gam**2 * t))
            assert abs(v1 - v2) < 1e-9 * max(1.0, v1)


def test_profile_koranyi_values():
    assert float(z_profile_koranyi(4.0, 2.0, 1.0, 0.0)) == pytest.approx(4.0)
    # frozen: Q=4, p=2, theta=6 interior maximum 192/27 at s = 5/9
    lam_star = np.sqrt((5.0 / 9.0) / (4.0 / 9.0))
    assert float(z_profile_koranyi(4.0, 2.0, 6.0, lam_star)) == pytest.approx(192.0 / 27.0, rel=1e-13)
    # decay ~ beta/lam for large lam
    assert float(z_profile_koranyi(4.0, 2.0, 6.0, 1e9)) < 2e-8
    with pytest.raises(ValueError):
        z_profile_koranyi(2.0, 2.0, 1.0, 0.0)


def test_profile_max_closed_form():
    sup_sq, lam_star, branch = koranyi_profile_max(4.0, 2.0, 1.0)
    assert sup_sq == 4.0 and lam_star == 0.0 and branch == "endpoint"
    sup_sq, lam_star, branch = koranyi_profile_max(4.0, 2.0, 6.0)
    assert branch == "interior"
    assert sup_sq == pytest.approx(192.0 / 27.0, rel=1e-14)
    assert lam_star**2 / (1 + lam_star**2) == pytest.approx(5.0 / 9.0, rel=1e-12)
    # golden-section confirmation on the compactified variable
    alpha, beta = 4.0, 12.0
    _, val = golden_section_max(lambda s: np.sqrt(1 - s) * (alpha + beta * s),
                                0.0, 1.0 - 1e-12)
    assert val == pytest.approx(192.0 / 27.0, rel=1e-10)


def test_g_cc_values():
    # frozen: limits at 0 and the value at pi for Q=4, p theta = 2
    assert float(g_cc(4.0, 2.0, 1.0, 0.0)) == pytest.approx(4.0)
    assert float(g_cc(4.0, 2.0, 17.0, 0.0)) == pytest.approx(4.0)
    assert float(g_cc(4.0, 2.0, 1.0, np.pi)) == pytest.approx(4.0 / np.pi**2, rel=1e-13)
    assert float(g_cc(4.0, 2.0, 1.0, np.pi)) == pytest.approx(0.405285, abs=1e-6)
    # even in nu
    rng = np.random.default_rng(33)
    nus = rng.uniform(0, 2 * np.pi, 50)
    assert np.allclose(g_cc(4.0, 2.0, 1.0, nus), g_cc(4.0, 2.0, 1.0, -nus), rtol=1e-14)
    # series/direct seam: no jump beyond the genuine O(nu dnu) variation
    seam = np.array([0.9999e-4, 1.0001e-4])
    v = g_cc(4.0, 3.0, 2.0, seam)
    assert abs(v[0] - v[1]) < 1e-10
    with pytest.raises(ValueError):
        g_cc(4.0, 2.0, 1.0, 7.0)


def test_cc_profile_consistency():
    # |Z_cc|^2 at Phi(a+ib, nu, r) equals g(nu), independent of a, b, r
    rng = np.random.default_rng(34)
    spec = ZFieldSpec(H1, cc(H1), 2.0, 1.0)
    for _ in range(40):
        phi = rng.uniform(0, 2 * np.pi)
        a, b = np.array([np.cos(phi)]), np.array([np.sin(phi)])
        nu = rng.uniform(-2 * np.pi + 0.1, 2 * np.pi - 0.1)
        r = rng.uniform(0.2, 5.0)
        x = cc_from_polar(CCPolar(a, b, nu, r))
        val = z_field_at(spec, x).norm() ** 2
        assert abs(val - float(g_cc(4.0, 2.0, 1.0, nu))) < 1e-7


def test_koranyi_b_profile():
    # |Z_{rho_B}|_B^2 on t = lam |z|_B^2 equals the same closed profile
    g = nonisotropic([1.0, 2.0])
    rb = koranyi_b(g)
    Q = float(g.Q)
    rng = np.random.default_rng(35)
    for p, theta in ((2.0, 1.0), (2.0, 6.0), (3.0, 1.0)):
        spec = ZFieldSpec(g, rb, p, theta)
        for _ in range(35):
            z = rng.normal(size=(1, 4))
            lam = rng.normal() * 2.0
            zb2 = float(symplectic_norm_sq_arrays(g, z)[0])
            t = np.array([[lam * zb2]])
            comp = z_field_components(spec, z, t)
            val = float(symplectic_norm_sq_arrays(g, comp)[0])
            prof = float(z_profile_koranyi(Q, p, theta, lam))
            assert abs(val - prof) < 1e-7 * max(1.0, prof)


def test_sup_z_norm_koranyi():
    sup = sup_z_norm(ZFieldSpec(H1, koranyi(H1), 2.0, 1.0))
    assert sup.method == "closed_form"
    assert sup.sup_sq == pytest.approx(4.0, abs=1e-9)
    assert sup.arg == 0.0
    sup6 = sup_z_norm(ZFieldSpec(H1, koranyi(H1), 2.0, 6.0))
    assert sup6.sup_sq == pytest.approx(192.0 / 27.0, rel=1e-12)


def test_sup_z_norm_cc():
    sup = sup_z_norm(ZFieldSpec(H1, cc(H1), 2.0, 1.0))
    assert sup.method == "scan_golden"
    assert abs(sup.sup_sq - 4.0) < 1e-7
    assert abs(sup.arg) < 1e-3
    # outside the closed-branch condition the max moves off nu = 0
    sup_neg = sup_z_norm(ZFieldSpec(H1, cc(H1), 2.0, -3.0))
    assert sup_neg.sup_sq > 4.0
    assert abs(sup_neg.arg) > 0.1


def test_sup_z_norm_product_closed():
    gp = heisenberg_product(1, 2)
    spec = ZFieldSpec(gp, koranyi(gp), 2.0, 1.0, variant="product")
    sup = sup_z_norm(spec)
    assert sup.method == "closed_form"
    assert sup.sup_value == pytest.approx(2.0)


def test_sup_z_norm_multistart_balogh_tyson():
    g = nonisotropic([0.5, 1.0])
    spec = ZFieldSpec(g, balogh_tyson(g), 2.0, 1.0)
    sup = sup_z_norm(spec, seed=2024)
    assert sup.method == "multistart"
    assert sup.samples > 10**5
    # a sampled lower bound dominates any sampled value, here at t = 0
    probe = Point([1.0, 0.0, 0.0, 0.0], 0.0)
    spot = z_field_at(spec, probe).norm()
    assert sup.sup_value >= spot - 1e-12


def test_product_field_reduces_to_single_on_one_factor():
    # (H^1)^1 with the product construction matches the single construction
    gp = heisenberg_product(1, 1)
    g1 = heisenberg(1)
    rng = np.random.default_rng(36)
    spec_p = ZFieldSpec(gp, koranyi(gp), 2.0, 1.0, variant="product")
    spec_s = ZFieldSpec(g1, koranyi(g1), 2.0, 1.0)
    for _ in range(10):
        z = rng.normal(size=(1, 2))
        t = rng.normal(size=(1, 1))
        assert np.allclose(z_field_components(spec_p, z, t),
                           z_field_components(spec_s, z, t), rtol=1e-13)


def test_general_variant_reduces_on_h1():
    g1 = heisenberg(1)
    gg = heisenberg_product(1, 1)  # carries selected = (0,)
    rng = np.random.default_rng(37)
    spec_g = ZFieldSpec(gg, koranyi(gg), 2.0, 1.5, variant="general")
    spec_s = ZFieldSpec(g1, koranyi(g1), 2.0, 1.5)
    for _ in range(10):
        z = rng.normal(size=(1, 2))
        t = rng.normal(size=(1, 1))
        assert np.allclose(z_field_components(spec_g, z, t),
                           z_field_components(spec_s, z, t), rtol=1e-13)


def test_general_variant_bounded_on_two_vertical():
    # two vertical directions, invertible A: |Z_d| stays bounded on the slice
    from carnot_hardy import general_group
    couplings = [[2.0, 1.0], [1.0, 3.0]]
    g = general_group(couplings, selected=(0, 1))
    rho = koranyi(g)
    spec = ZFieldSpec(g, rho, 2.0, 1.0, variant="general")
    sup = sup_z_norm(spec, seed=1)
    assert sup.method == "multistart"
    assert 0 < sup.sup_value < 50


def test_symplectic_norm():
    assert symplectic_norm(heisenberg(1), [0.6, 0.8]) == pytest.approx(1.0)
    g = nonisotropic([1.0, 2.0])
    assert symplectic_norm(g, [1.0, 0.0, 0.0, 0.0]) == pytest.approx(0.5)
    assert symplectic_norm(g, [3.0, 0.0, 0.0, 0.0]) == pytest.approx(1.5)


def test_spec_validation():
    with pytest.raises(ValueError):
        ZFieldSpec(H1, koranyi(H1), 1.5, 1.0)
    with pytest.raises(ValueError):
        ZFieldSpec(H1, koranyi(H1), 2.0, 1.0, variant="bogus")
    with pytest.raises(ValueError):
        ZFieldSpec(heisenberg(1), koranyi(heisenberg(1)), 2.0, 1.0, variant="general")
    with pytest.raises(ValueError):
        z_field_components(ZFieldSpec(H1, koranyi(H1), 2.0, 1.0),
                           np.zeros((1, 2)), np.zeros((1, 1)))
