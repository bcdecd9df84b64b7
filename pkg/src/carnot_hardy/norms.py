"""Homogeneous gauges: Koranyi, its anisotropic generalization, the
Carnot-Caratheodory distance from the origin, and the Balogh-Tyson gauge.

All evaluators are batched: z has shape (..., 2n), t has shape (..., h).
Horizontal gradients are returned as components in the orthonormal X-frame.

The Carnot-Caratheodory distance on the Heisenberg group H^n (block
eigenvalues 4) is computed through polar coordinates (a + ib, nu, r) with
|a + ib| = 1, nu in [-2pi, 2pi], r > 0:

    z_{2i-1} = (b_i (1 - cos nu) + a_i sin nu) r / nu,
    z_{2i}   = (-a_i (1 - cos nu) + b_i sin nu) r / nu,
    t        = 2 (nu - sin nu) / nu^2 * r^2,

(limit (a r, b r, 0) at nu = 0), where the distance of the image point is
exactly r.  Inversion solves mu(nu) := (nu - sin nu)/(1 - cos nu) = t/|z|^2,
which is odd and strictly increasing on (-2pi, 2pi), then recovers r and
(a, b) by undoing the planar rotation on each block.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .groups import (Array, CenterError, HVector, Point, ScalarField,
                     StepTwoGroup, default_step, fd_partials, hgrad_batch,
                     heisenberg, nonisotropic)

TWO_PI = 2.0 * np.pi


class ConvergenceError(RuntimeError):
    """The monotone root finder failed to reach its tolerance."""


# ---------------------------------------------------------------------------
# mu(nu) = (nu - sin nu)/(1 - cos nu) and its monotone inversion
# ---------------------------------------------------------------------------

def _mu(nu: Array) -> Array:
    """mu(nu), with a series for small nu and 1 - cos nu = 2 sin^2(nu/2)."""
    nu = np.asarray(nu, dtype=float)
    small = np.abs(nu) < 1e-3
    nus = np.where(small, 1.0, nu)
    omc = 2.0 * np.sin(nus / 2.0) ** 2
    series = nu / 3.0 + nu**3 / 90.0 + nu**5 / 2520.0
    return np.where(small, series, (nus - np.sin(nus)) / omc)


# seed table for the Newton iteration, graded toward the pole at 2pi
_NU_TABLE = np.concatenate([
    np.linspace(0.0, TWO_PI - 1e-3, 12000),
    TWO_PI - np.geomspace(1e-3, 1e-10, 4000)[1:],
])
_MU_TABLE = _mu(_NU_TABLE)


def solve_mu_inverse(m: Array, tol: float = 1e-10) -> Array:
    """Solve mu(nu) = m for nu in (-2pi, 2pi), vectorized.

    Small |m| uses the inverted series nu = 3m - 0.9 m^3 + (729/1400) m^5;
    otherwise a table seed plus Newton steps on the cancellation-free form
    (nu - sin nu) - m (1 - cos nu) = 0.
    """
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError("mu inversion needs finite t/|z|^2 (center points excluded)")
    sgn = np.sign(m)
    ma = np.abs(m)
    out = np.empty(ma.shape)

    tiny = ma < 1e-3
    mt = ma[tiny]
    out[tiny] = 3.0 * mt - 0.9 * mt**3 + (729.0 / 1400.0) * mt**5

    rest = ~tiny
    mr = ma[rest]
    nu = np.interp(mr, _MU_TABLE, _NU_TABLE)
    big = mr > _MU_TABLE[-1]
    if np.any(big):
        nu[big] = TWO_PI - np.sqrt(4.0 * np.pi / mr[big])
    for _ in range(4):
        s = np.sin(nu)
        omc = 2.0 * np.sin(nu / 2.0) ** 2
        f = (nu - s) - mr * omc
        df = omc - mr * s
        nu = np.clip(nu - f / df, 1e-3, TWO_PI * (1.0 - 1e-17))
    resid = np.abs((nu - np.sin(nu)) - mr * 2.0 * np.sin(nu / 2.0) ** 2)
    scale = np.maximum(1.0, mr * 2.0 * np.sin(nu / 2.0) ** 2)
    if np.any(resid > tol * scale):
        raise ConvergenceError("mu(nu) = m iteration did not reach tolerance")
    out[rest] = nu
    return sgn * out


def _half_angle_ratios(nu: Array):
    """(nu/2)/sin(nu/2) and (nu/2)/tan(nu/2), stable through nu = 0."""
    x = 0.5 * np.asarray(nu, dtype=float)
    small = np.abs(x) < 1e-8
    xs = np.where(small, 1.0, x)
    inv_sinc = np.where(small, 1.0 + x * x / 6.0, xs / np.sin(xs))
    cot = np.where(small, 1.0 - x * x / 3.0, xs / np.tan(xs))
    return inv_sinc, cot


def cc_polar_arrays(z: Array, t: Array):
    """Vectorized polar data (nu, r, a, b) for off-center points of H^n.

    t is the single vertical coordinate with shape matching z[..., 0].
    """
    z = np.asarray(z, dtype=float)
    t = np.asarray(t, dtype=float)
    zn2 = np.sum(z * z, axis=-1)
    if np.any(zn2 == 0.0):
        raise CenterError("polar inversion is undefined on the center {z = 0}")
    nu = solve_mu_inverse(t / zn2)
    inv_sinc, cot = _half_angle_ratios(nu)
    r = np.sqrt(zn2) * inv_sinc
    x = 0.5 * nu
    a = (cot[..., None] * z[..., 0::2] - x[..., None] * z[..., 1::2]) / r[..., None]
    b = (x[..., None] * z[..., 0::2] + cot[..., None] * z[..., 1::2]) / r[..., None]
    return nu, r, a, b


def cc_value_arrays(z: Array, t: Array) -> Array:
    """Carnot-Caratheodory distance, extended by sqrt(pi |t|) on the center."""
    z = np.asarray(z, dtype=float)
    t = np.asarray(t, dtype=float)
    zn2 = np.sum(z * z, axis=-1)
    out = np.empty(np.broadcast(zn2, t).shape)
    center = zn2 == 0.0
    if np.any(center):
        out[center] = np.sqrt(np.pi * np.abs(np.broadcast_to(t, out.shape)[center]))
    off = ~center
    if np.any(off):
        _, r, _, _ = cc_polar_arrays(z[off], np.broadcast_to(t, out.shape)[off])
        out[off] = r
    return out


def cc_hgrad_arrays(z: Array, t: Array) -> Array:
    """Frame components of grad delta_cc; unit horizontal norm off the center."""
    nu, r, a, b = cc_polar_arrays(z, t)
    s = np.sin(nu)[..., None]
    c = np.cos(nu)[..., None]
    g = np.empty_like(np.asarray(z, dtype=float))
    g[..., 0::2] = b * s + a * c
    g[..., 1::2] = b * c - a * s
    return g


def cc_dt_arrays(z: Array, t: Array) -> Array:
    """d delta_cc / dt = nu / (4 r) off the center."""
    nu, r, _, _ = cc_polar_arrays(z, t)
    return nu / (4.0 * r)


# ---------------------------------------------------------------------------
# norm models
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NormModel:
    """A homogeneous gauge with batched value / gradient evaluators.

    ``value(z, t) -> (...)``; ``hgrad(z, t) -> (..., 2n)`` in the X-frame;
    ``dt(z, t) -> (..., h)``.  Gradient evaluators may be None (the
    Balogh-Tyson gauge ships without closed derivatives); ``hgrad_or_fd``
    then falls back to central differences of the value.

    rotation_invariant records whether <z, B^{-1} grad_z d> = 0, the
    hypothesis under which the sharp constant is attained.
    """

    kind: str
    group: StepTwoGroup
    value: Callable[[Array, Array], Array]
    hgrad: Optional[Callable[[Array, Array], Array]] = None
    dt: Optional[Callable[[Array, Array], Array]] = None
    rotation_invariant: bool = True

    def value_at(self, x: Point) -> float:
        return float(self.value(x.z[None], x.t[None])[0])

    def hgrad_at(self, x: Point) -> HVector:
        if self.kind == "cc" and x.on_center():
            raise CenterError("the cc distance is not differentiable on the center")
        if x.is_origin():
            raise CenterError("gauge gradients are undefined at the origin")
        if self.hgrad is not None:
            return HVector(self.hgrad(x.z[None], x.t[None])[0])
        return HVector(self.hgrad_or_fd(x.z[None], x.t[None])[0])

    def dt_at(self, x: Point) -> Array:
        if self.kind == "cc" and x.on_center():
            raise CenterError("the cc distance is not differentiable on the center")
        if self.dt is not None:
            return self.dt(x.z[None], x.t[None])[0]
        _, dtv = fd_partials(self.value, x.z[None], x.t[None], default_step(x))
        return dtv[0]

    def hgrad_or_fd(self, z: Array, t: Array, step: float = 1e-6) -> Array:
        if self.hgrad is not None:
            return self.hgrad(z, t)
        return hgrad_batch(self.group, self.value, z, t, step)

    def as_scalar_field(self) -> ScalarField:
        return ScalarField(self.value, self.hgrad,
                           self.dt if self.dt is not None else None)


def koranyi(group: StepTwoGroup) -> NormModel:
    """rho = (|z|^4 + |t|^2)^{1/4} with closed frame gradient.

    Valid on any group here; the gradient accounts for the couplings, so the
    same model serves H^n and products of Heisenberg groups.
    """
    L = group.couplings  # (h, n)

    def value(z, t):
        zn2 = np.sum(np.asarray(z, float)**2, axis=-1)
        tn2 = np.sum(np.asarray(t, float)**2, axis=-1)
        return (zn2**2 + tn2) ** 0.25

    def hgrad(z, t):
        z = np.asarray(z, float)
        t = np.asarray(t, float)
        zn2 = np.sum(z * z, axis=-1)
        rho3 = value(z, t) ** 3
        lt4 = (t @ L) / 4.0                      # (..., n): sum_j lam^(j)_i t_j / 4
        g = np.empty_like(z)
        g[..., 0::2] = (zn2[..., None] * z[..., 0::2] + z[..., 1::2] * lt4) / rho3[..., None]
        g[..., 1::2] = (zn2[..., None] * z[..., 1::2] - z[..., 0::2] * lt4) / rho3[..., None]
        return g

    def dt(z, t):
        t = np.asarray(t, float)
        return t / (2.0 * value(z, t)[..., None] ** 3)

    return NormModel("koranyi", group, value, hgrad, dt, rotation_invariant=True)


def symplectic_norm_sq_arrays(group: StepTwoGroup, z: Array) -> Array:
    """|z|_B^2 = sum_i (lam_i / 4)(z_{2i-1}^2 + z_{2i}^2), single vertical direction."""
    lam = group.lambdas
    z = np.asarray(z, dtype=float)
    return np.sum((z[..., 0::2]**2 + z[..., 1::2]**2) * lam / 4.0, axis=-1)


def koranyi_b(group: StepTwoGroup) -> NormModel:
    """Generalized gauge rho_B = (|z|_B^4 + t^2)^{1/4} with the symplectic norm."""
    if group.h != 1:
        raise ValueError("the generalized Koranyi gauge needs a single vertical direction")
    lam = group.lambdas

    def value(z, t):
        t1 = np.asarray(t, float)[..., 0]
        return (symplectic_norm_sq_arrays(group, z)**2 + t1**2) ** 0.25

    def hgrad(z, t):
        z = np.asarray(z, float)
        t1 = np.asarray(t, float)[..., 0]
        zb2 = symplectic_norm_sq_arrays(group, z)
        rho3 = value(z, t) ** 3
        g = np.empty_like(z)
        coef = lam / (4.0 * rho3[..., None])
        g[..., 0::2] = coef * (zb2[..., None] * z[..., 0::2] + z[..., 1::2] * t1[..., None])
        g[..., 1::2] = coef * (zb2[..., None] * z[..., 1::2] - z[..., 0::2] * t1[..., None])
        return g

    def dt(z, t):
        t = np.asarray(t, float)
        return t / (2.0 * value(z, t)[..., None] ** 3)

    return NormModel("koranyi_b", group, value, hgrad, dt, rotation_invariant=True)


def cc(group: StepTwoGroup) -> NormModel:
    """Carnot-Caratheodory distance from the origin on H^n (lam_i = 4)."""
    if not group.is_isotropic_heisenberg():
        raise ValueError("the cc distance model is implemented for H^n with lam = 4")

    def value(z, t):
        return cc_value_arrays(z, np.asarray(t, float)[..., 0])

    def hgrad(z, t):
        return cc_hgrad_arrays(z, np.asarray(t, float)[..., 0])

    def dt(z, t):
        return cc_dt_arrays(z, np.asarray(t, float)[..., 0])[..., None]

    return NormModel("cc", group, value, hgrad, dt, rotation_invariant=True)


def balogh_tyson(group: StepTwoGroup) -> NormModel:
    """The explicit fundamental-solution gauge on the (1/2, 1) group.

    With w = (z1^2 + z2^2)/2 + z3^2 + z4^2 and s = hypot(w, t):

        rho = s^{1/4} ((z1^2 + z2^2)/2 + s)^{3/8} / (w + s)^{1/8}.

    No closed gradient is provided; consumers fall back to finite
    differences.
    """
    if group.h != 1 or group.n != 2 or not np.allclose(group.lambdas, [0.5, 1.0]):
        raise ValueError("the Balogh-Tyson gauge lives on the (1/2, 1) group")

    def value(z, t):
        z = np.asarray(z, float)
        t1 = np.asarray(t, float)[..., 0]
        half = (z[..., 0]**2 + z[..., 1]**2) / 2.0
        w = half + z[..., 2]**2 + z[..., 3]**2
        s = np.hypot(w, t1)
        return s**0.25 * (half + s)**0.375 / (w + s)**0.125

    return NormModel("balogh_tyson", group, value, None, None, rotation_invariant=True)


def make_norm(kind: str, group: StepTwoGroup) -> NormModel:
    factory = {"koranyi": koranyi, "koranyi_b": koranyi_b,
               "cc": cc, "balogh_tyson": balogh_tyson}
    if kind not in factory:
        raise ValueError(f"unknown norm kind {kind!r}")
    return factory[kind](group)


# ---------------------------------------------------------------------------
# point-level operations (Heisenberg conventions where a group is implied)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CCPolar:
    """Polar data (a + ib, nu, r) with |a + ib| = 1, nu in [-2pi, 2pi], r > 0."""

    a: Array
    b: Array
    nu: float
    r: float

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if a.shape != b.shape:
            raise ValueError("a and b must have the same length")
        if abs(float(a @ a + b @ b) - 1.0) > 1e-9:
            raise ValueError("|a + ib| must equal 1")
        if not (-TWO_PI - 1e-12 <= self.nu <= TWO_PI + 1e-12):
            raise ValueError("nu must lie in [-2pi, 2pi]")
        if not self.r > 0:
            raise ValueError("r must be positive")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "r", float(self.r))


def cc_from_polar(p: CCPolar) -> Point:
    """Image of the polar chart; its cc distance equals r."""
    nu, r = p.nu, p.r
    z = np.empty(2 * p.a.shape[0])
    if abs(nu) < 1e-14:
        z[0::2] = p.a * r
        z[1::2] = p.b * r
        return Point(z, np.zeros(1))
    omc = 2.0 * np.sin(nu / 2.0) ** 2
    s = np.sin(nu)
    z[0::2] = (p.b * omc + p.a * s) / nu * r
    z[1::2] = (-p.a * omc + p.b * s) / nu * r
    t = 2.0 * (nu - np.sin(nu)) / nu**2 * r**2
    return Point(z, np.array([t]))


def cc_invert(x: Point) -> CCPolar:
    """Recover polar data from an off-origin point of H^n.

    On the center {z = 0} the chart degenerates: nu = +-2pi, r = sqrt(pi |t|)
    and the direction (a, b) is set to the first coordinate axis.
    """
    if x.is_origin():
        raise CenterError("the origin has no polar representation")
    n = x.z.shape[0] // 2
    t = float(x.t[0])
    if x.on_center():
        a = np.zeros(n)
        a[0] = 1.0
        return CCPolar(a, np.zeros(n), np.copysign(TWO_PI, t), np.sqrt(np.pi * abs(t)))
    nu, r, a, b = cc_polar_arrays(x.z[None], np.array([t]))
    if abs(nu[0]) < 1e-12:
        zn = np.linalg.norm(x.z)
        return CCPolar(x.z[0::2] / zn, x.z[1::2] / zn, float(nu[0]), float(r[0]))
    return CCPolar(a[0], b[0], float(nu[0]), float(r[0]))


def cc_value(x: Point) -> float:
    """cc distance; continuous through the center, zero at the origin."""
    if x.is_origin():
        return 0.0
    return float(cc_value_arrays(x.z[None], np.array([float(x.t[0])]))[0])


def cc_hgrad(x: Point) -> HVector:
    if x.on_center():
        raise CenterError("the cc distance is not differentiable on the center")
    return HVector(cc_hgrad_arrays(x.z[None], np.array([float(x.t[0])]))[0])


def cc_dt(x: Point) -> float:
    if x.on_center():
        raise CenterError("the cc distance is not differentiable on the center")
    return float(cc_dt_arrays(x.z[None], np.array([float(x.t[0])]))[0])


def koranyi_value(x: Point) -> float:
    zn2 = float(x.z @ x.z)
    return (zn2**2 + float(x.t @ x.t)) ** 0.25


def koranyi_hgrad(x: Point) -> HVector:
    """Closed Koranyi gradient on H^n; satisfies |grad rho|^2 = |z|^2 / rho^2."""
    if x.is_origin():
        raise CenterError("gauge gradients are undefined at the origin")
    g = heisenberg(x.z.shape[0] // 2)
    return HVector(koranyi(g).hgrad(x.z[None], x.t[None])[0])


def koranyi_B_value(group: StepTwoGroup, x: Point) -> float:
    zb2 = float(symplectic_norm_sq_arrays(group, x.z[None])[0])
    return (zb2**2 + float(x.t[0]) ** 2) ** 0.25


def balogh_tyson_value(x: Point) -> float:
    return balogh_tyson(nonisotropic([0.5, 1.0])).value_at(x)


# ---------------------------------------------------------------------------
# structural checks shared by the test-suite and the verification module
# ---------------------------------------------------------------------------

def rotation_defect_arrays(norm: NormModel, z: Array, t: Array) -> Array:
    """<z, B^{-1} grad_z d> with the Euclidean z-gradient, from frame data.

    Vanishes identically for gauges invariant under blockwise rotations.
    """
    g = norm.hgrad_or_fd(z, t)
    if norm.dt is not None:
        dt = norm.dt(z, t)
    else:
        _, dt = fd_partials(norm.value, z, t, 1e-6)
    # ambient z-partials: d_{z_i} = X_i - (Bz)_i . d_t / 2
    bz = norm.group.bz(z)
    dz = g - 0.5 * np.einsum("...jk,...j->...k", bz, dt)
    lam = norm.group.lambdas
    zper = np.asarray(z, float)
    num = (zper[..., 1::2] * dz[..., 0::2] - zper[..., 0::2] * dz[..., 1::2]) / lam
    return np.sum(num, axis=-1)


def reconstruction_defect_arrays(norm: NormModel, z: Array, t: Array) -> Array:
    """4 (t/|z|^2) <B^{-1} grad d, z> + <z, grad d> - d, zero off the center
    for blockwise rotation-invariant gauges (single vertical direction)."""
    z = np.asarray(z, float)
    t1 = np.asarray(t, float)[..., 0]
    g = norm.hgrad_or_fd(z, t)
    lam = norm.group.lambdas
    binv_dot_z = np.sum((z[..., 1::2] * g[..., 0::2] - z[..., 0::2] * g[..., 1::2]) / lam,
                        axis=-1)
    zn2 = np.sum(z * z, axis=-1)
    zdotg = np.sum(z * g, axis=-1)
    return 4.0 * (t1 / zn2) * binv_dot_z + zdotg - norm.value(z, t)


def equivalence_ratio_range(norm_a: NormModel, norm_b: NormModel,
                            n_samples: int = 4096, seed: int = 0):
    """Empirical (min, max) of norm_a / norm_b over the unit Koranyi sphere."""
    if norm_a.group is not norm_b.group and norm_a.group.dim != norm_b.group.dim:
        raise ValueError("norms live on incompatible groups")
    rng = np.random.default_rng(seed)
    g = norm_a.group
    z = rng.normal(size=(n_samples, 2 * g.n))
    t = rng.normal(size=(n_samples, g.h))
    rho = (np.sum(z * z, -1)**2 + np.sum(t * t, -1)) ** 0.25
    z /= rho[:, None]
    t /= rho[:, None] ** 2
    ratio = norm_a.value(z, t) / norm_b.value(z, t)
    return float(ratio.min()), float(ratio.max())
