"""Admissible test functions: smooth bumps, the extremal profile, and the
logarithmic cut-off family.

Everything is built from one C-infinity step S: [0, 1] -> [0, 1], the
normalized antiderivative of exp(-1/(x(1-x))).  The step is represented by a
high-degree Chebyshev fit (computed once at import, accurate to ~1e-13) so
that value and derivative evaluations stay cheap on large quadrature grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from numpy.polynomial.legendre import leggauss

from ..groups import Array, ScalarField, StepTwoGroup
from ..norms import koranyi

LOG2 = float(np.log(2.0))


def _mollifier(x: Array) -> Array:
    out = np.zeros_like(x)
    inside = (x > 0.0) & (x < 1.0)
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (xi * (1.0 - xi)))
    return out


def _fit_step(degree: int = 160):
    # antiderivative of the mollifier at the Chebyshev points, by Gauss quadrature
    gx, gw = leggauss(96)
    u = 0.5 * (gx + 1.0)
    w = 0.5 * gw
    pts = np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1))
    x = 0.5 * (pts + 1.0)
    vals = x * np.sum(w * _mollifier(x[:, None] * u), axis=1)
    coeffs = _cheb.chebfit(pts, vals, degree)
    c0 = _cheb.chebval(-1.0, coeffs)
    c1 = _cheb.chebval(1.0, coeffs)
    return coeffs, float(c0), float(c1)


_STEP_COEFFS, _STEP_LO, _STEP_HI = _fit_step()
_STEP_SCALE = _STEP_HI - _STEP_LO
_STEP_DERIV = _cheb.chebder(_STEP_COEFFS) * 2.0 / _STEP_SCALE


def smoothstep(x) -> Array:
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, strictly increasing between."""
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, 0.0, 1.0)
    v = (_cheb.chebval(2.0 * xc - 1.0, _STEP_COEFFS) - _STEP_LO) / _STEP_SCALE
    return np.where(x <= 0.0, 0.0, np.where(x >= 1.0, 1.0, v))


def smoothstep_d(x) -> Array:
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape)
    inside = (x > 0.0) & (x < 1.0)
    out[inside] = _cheb.chebval(2.0 * x[inside] - 1.0, _STEP_DERIV)
    return out


def g_cutoff(lam, eps: float) -> Array:
    """Radial cut-off in lam = t/|z|^2: support [eps, 1/eps], plateau
    [2 eps, 1/(2 eps)], built log-radially so that |g'| <= c/eps on the inner
    transition and <= c * eps on the outer one."""
    lam = np.asarray(lam, dtype=float)
    pos = lam > 0.0
    out = np.zeros(lam.shape)
    lv = np.log(np.where(pos, lam, 1.0))
    le = np.log(eps)
    out[pos] = (smoothstep((lv[pos] - le) / LOG2)
                * smoothstep((-le - lv[pos]) / LOG2))
    return out


def g_cutoff_d(lam, eps: float) -> Array:
    lam = np.asarray(lam, dtype=float)
    pos = lam > 0.0
    out = np.zeros(lam.shape)
    lv = np.log(np.where(pos, lam, 1.0))
    le = np.log(eps)
    s1 = smoothstep((lv - le) / LOG2)
    d1 = smoothstep_d((lv - le) / LOG2)
    s2 = smoothstep((-le - lv) / LOG2)
    d2 = smoothstep_d((-le - lv) / LOG2)
    out[pos] = ((d1 * s2 - s1 * d2) / (lam * LOG2))[pos]
    return out


@dataclass(frozen=True)
class BumpProfile:
    """Radial plateau profile: 1 on [r1, R1], supported on [r2, R2]."""

    r2: float = 0.25
    r1: float = 0.5
    R1: float = 1.5
    R2: float = 2.0

    def __post_init__(self):
        if not (0 < self.r2 < self.r1 < self.R1 < self.R2):
            raise ValueError("bump radii must satisfy 0 < r2 < r1 < R1 < R2")

    def __call__(self, s) -> Array:
        return (smoothstep((np.asarray(s, float) - self.r2) / (self.r1 - self.r2))
                * smoothstep((self.R2 - np.asarray(s, float)) / (self.R2 - self.R1)))

    def deriv(self, s) -> Array:
        s = np.asarray(s, float)
        up = smoothstep((s - self.r2) / (self.r1 - self.r2))
        dn = smoothstep((self.R2 - s) / (self.R2 - self.R1))
        return (smoothstep_d((s - self.r2) / (self.r1 - self.r2)) / (self.r1 - self.r2) * dn
                - up * smoothstep_d((self.R2 - s) / (self.R2 - self.R1)) / (self.R2 - self.R1))


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A compactly supported test function with analytic evaluators.

    ``value`` and ``hgrad`` follow the batched conventions of the rest of
    the package; ``euler`` evaluates the generator of dilations applied to
    the function.  ``hgrad`` may be None for value-only functions (the
    extremal profile, differentiated by finite differences where needed).
    """

    kind: str
    params: dict
    value: Callable[[Array, Array], Array]
    hgrad: Optional[Callable[[Array, Array], Array]] = None
    euler: Optional[Callable[[Array, Array], Array]] = None
    support: tuple = (0.25, 2.0)

    def as_scalar_field(self) -> ScalarField:
        return ScalarField(self.value, self.hgrad)


def radial_bump(group: StepTwoGroup, profile: BumpProfile = BumpProfile(),
                modulation: float = 0.0, modulation2: float = 0.0) -> TestFunction:
    """eta(rho) (1 + a s + b s^2) with s = t/rho^2: smooth, supported in a
    gauge annulus.

    The modulation (only for a single vertical direction) makes the bump
    genuinely non-radial while keeping every derivative closed-form; s stays
    in [-1, 1], so moderate a, b keep the factor harmless.  The quadratic
    term breaks the t -> -t symmetry cancellations that make some paired
    integrals vanish identically for purely radial bumps.
    """
    rho = koranyi(group)
    a = float(modulation)
    b = float(modulation2)
    modulated = a != 0.0 or b != 0.0
    if modulated and group.h != 1:
        raise ValueError("modulated bumps are implemented for h = 1")

    def _s(z, t, d):
        return np.asarray(t, float)[..., 0] / d**2

    def _inside(d):
        return (d > profile.r2) & (d < profile.R2)

    # evaluations are masked to the support so that points at or near the
    # origin (where rho-quotients degenerate) yield exact zeros, not NaNs
    def value(z, t):
        d = rho.value(z, t)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = profile(d)
            if modulated:
                s = _s(z, t, d)
                out = out * (1.0 + a * s + b * s * s)
        return np.where(_inside(d), out, 0.0)

    def hgrad(z, t):
        z = np.asarray(z, float)
        d = rho.value(z, t)
        with np.errstate(invalid="ignore", divide="ignore"):
            gr = rho.hgrad(z, t)
            out = profile.deriv(d)[..., None] * gr
            if modulated:
                s = _s(z, t, d)
                t1 = np.asarray(t, float)[..., 0]
                out = out * (1.0 + a * s + b * s * s)[..., None]
                # grad(t/rho^2) = (Bz/2)/rho^2 - 2 t grad(rho) / rho^3
                gt = 0.5 * group.bz(z)[..., 0, :]
                gmod = gt / (d**2)[..., None] - 2.0 * (t1 / d**3)[..., None] * gr
                out = out + (profile(d) * (a + 2.0 * b * s))[..., None] * gmod
        return np.where(_inside(d)[..., None], out, 0.0)

    def euler(z, t):
        # E rho = rho and E(t/rho^2) = 0 by homogeneity
        d = rho.value(z, t)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = profile.deriv(d) * d
            if modulated:
                s = _s(z, t, d)
                out = out * (1.0 + a * s + b * s * s)
        return np.where(_inside(d), out, 0.0)

    return TestFunction("bump", {"radii": (profile.r2, profile.r1, profile.R1, profile.R2),
                                 "modulation": (a, b)},
                        value, hgrad, euler, support=(profile.r2, profile.R2))


def random_bump(group: StepTwoGroup, rng: np.random.Generator) -> TestFunction:
    """A seeded random bump: random annulus radii and vertical modulation."""
    r2 = rng.uniform(0.2, 0.5)
    r1 = r2 + rng.uniform(0.2, 0.5)
    R1 = r1 + rng.uniform(0.3, 1.0)
    R2 = R1 + rng.uniform(0.3, 1.0)
    a = rng.uniform(-0.5, 0.5) if group.h == 1 else 0.0
    return radial_bump(group, BumpProfile(r2, r1, R1, R2), modulation=a)


def extremal_power(group: StepTwoGroup, p: float) -> TestFunction:
    """u = (|t|/|z|^2)^{(Q-2)/(2p)}, the profile attaining equality."""
    kappa = (group.Q - 2.0) / (2.0 * p)

    def value(z, t):
        z = np.asarray(z, float)
        zn2 = np.sum(z * z, axis=-1)
        t1 = np.abs(np.asarray(t, float)[..., 0])
        return (t1 / zn2) ** kappa

    return TestFunction("extremal", {"exponent": kappa}, value,
                        support=(0.0, np.inf))


def sharpness_function(group: StepTwoGroup, p: float, eps: float,
                       profile: BumpProfile = BumpProfile()) -> TestFunction:
    """u_eps = (t/|z|^2)^{(Q-2)/(2p)} g_eps(t/|z|^2) eta(d), supported where
    t/|z|^2 is in [eps, 1/eps] (so only t > 0 contributes).

    Built for a single vertical direction with the Koranyi gauge inside eta.
    """
    if group.h != 1:
        raise ValueError("the cut-off family is implemented for h = 1")
    rho = koranyi(group)
    kappa = (group.Q - 2.0) / (2.0 * p)

    def _pieces(z, t):
        z = np.asarray(z, float)
        t1 = np.asarray(t, float)[..., 0]
        zn2 = np.sum(z * z, axis=-1)
        lam = t1 / zn2
        inside = (lam > eps) & (lam < 1.0 / eps)
        lam_s = np.where(inside, lam, 1.0)
        w = np.where(inside, lam_s**kappa * g_cutoff(lam_s, eps), 0.0)
        wd = np.where(inside,
                      kappa * lam_s ** (kappa - 1.0) * g_cutoff(lam_s, eps)
                      + lam_s**kappa * g_cutoff_d(lam_s, eps), 0.0)
        return t1, zn2, lam, w, wd

    def value(z, t):
        d = rho.value(z, t)
        _, _, _, w, _ = _pieces(z, t)
        return w * profile(d)

    def hgrad(z, t):
        z = np.asarray(z, float)
        d = rho.value(z, t)
        t1, zn2, lam, w, wd = _pieces(z, t)
        # grad(t/|z|^2) = -2 t z / |z|^4 + Bz / (2 |z|^2)
        glam = (-2.0 * (t1 / zn2**2)[..., None] * z
                + 0.5 * group.bz(z)[..., 0, :] / zn2[..., None])
        gr = rho.hgrad(z, t)
        return (wd * profile(d))[..., None] * glam + (w * profile.deriv(d))[..., None] * gr

    return TestFunction("extremal_cutoff",
                        {"eps": eps, "exponent": kappa,
                         "radii": (profile.r2, profile.r1, profile.R1, profile.R2)},
                        value, hgrad, support=(profile.r2, profile.R2))
