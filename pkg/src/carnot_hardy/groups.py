"""Step-two Carnot groups in block-diagonal coordinates.

The underlying manifold is R^{2n} x R^h.  Each vertical direction j carries
a skew-symmetric matrix B^(j) made of 2x2 blocks [[0, lam], [-lam, 0]], so a
group is fully described by the nonnegative coupling matrix lam^(j)_i of
shape (h, n).  The group law is

    (z, t) o (eta, tau) = (z + eta, t + tau + <Bz, eta>/2),

with <Bz, eta> understood per vertical direction, and the dilations are
delta_gamma(z, t) = (gamma z, gamma^2 t).  An orthonormal horizontal frame is

    X_{2i-1} = d/dz_{2i-1} + sum_j (lam^(j)_i / 2) z_{2i}   d/dt_j,
    X_{2i}   = d/dz_{2i}   - sum_j (lam^(j)_i / 2) z_{2i-1} d/dt_j,

whose only nonzero brackets are [X_{2i}, X_{2i-1}] = sum_j lam^(j)_i d/dt_j.
The homogeneous dimension is Q = 2n + 2h.

Batched evaluators use arrays z of shape (..., 2n) and t of shape (..., h);
scalar fields return shape (...).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

Array = np.ndarray


class CenterError(ValueError):
    """An operation required smoothness that fails on the center {z = 0}."""


def _readonly(a: Array) -> Array:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StepTwoGroup:
    """A step-two group given by its block couplings.

    couplings[j, i] is the eigenvalue lam^(j)_i of the j-th vertical matrix
    on the i-th horizontal 2-plane.  For a single vertical direction this is
    the row of block eigenvalues lam_1..lam_n, all strictly positive.  For
    h > 1 individual entries may vanish but every 2-plane must couple to at
    least one vertical direction (trivial kernel).

    ``selected`` lists one block index per vertical direction; the square
    matrix A[k, j] = couplings[j, selected[k]] must be invertible.  It is
    only needed by the general multi-vertical vector-field construction.
    """

    couplings: Array
    selected: Optional[tuple] = None

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.couplings, dtype=float))
        if c.ndim != 2 or c.size == 0 or not np.all(np.isfinite(c)):
            raise ValueError("couplings must be a finite (h, n) matrix")
        if np.any(c < 0):
            raise ValueError("block eigenvalues must be nonnegative")
        if c.shape[0] == 1:
            if np.any(c <= 0):
                raise ValueError("single-vertical groups need all lam_i > 0")
        elif np.any(c.max(axis=0) <= 0):
            raise ValueError("every horizontal 2-plane must couple to some vertical direction")
        object.__setattr__(self, "couplings", _readonly(c))
        if self.selected is not None:
            sel = tuple(int(i) for i in self.selected)
            if len(sel) != c.shape[0] or any(i < 0 or i >= c.shape[1] for i in sel):
                raise ValueError("selected must pick one block per vertical direction")
            a = np.array([[c[j, k] for j in range(c.shape[0])] for k in sel])
            if abs(np.linalg.det(a)) < 1e-12:
                raise ValueError("selected blocks give a singular coupling matrix A")
            object.__setattr__(self, "selected", sel)

    @property
    def n(self) -> int:
        return self.couplings.shape[1]

    @property
    def h(self) -> int:
        return self.couplings.shape[0]

    @property
    def horizontal_dim(self) -> int:
        return 2 * self.n

    @property
    def dim(self) -> int:
        return 2 * self.n + self.h

    @property
    def Q(self) -> int:
        """Homogeneous dimension 2n + 2h."""
        return 2 * self.n + 2 * self.h

    @property
    def lambdas(self) -> Array:
        if self.h != 1:
            raise ValueError("lambdas is only defined for a single vertical direction")
        return self.couplings[0]

    def a_matrix(self) -> Array:
        if self.selected is None:
            raise ValueError("group has no selected blocks")
        return np.array([[self.couplings[j, k] for j in range(self.h)]
                         for k in self.selected])

    def is_isotropic_heisenberg(self) -> bool:
        return self.h == 1 and np.allclose(self.couplings[0], 4.0)

    def bz(self, z: Array) -> Array:
        """B^(j) z for every vertical direction, shape (..., h, 2n)."""
        z = np.asarray(z, dtype=float)
        lam = np.repeat(self.couplings, 2, axis=1)          # (h, 2n)
        out = np.empty(z.shape[:-1] + (self.h, 2 * self.n))
        out[..., :, 0::2] = z[..., None, 1::2]
        out[..., :, 1::2] = -z[..., None, 0::2]
        return out * lam

    def describe(self) -> dict:
        d = {"n": self.n, "h": self.h, "Q": self.Q,
             "couplings": self.couplings.tolist()}
        if self.selected is not None:
            d["selected"] = list(self.selected)
        return d


def heisenberg(n: int = 1) -> StepTwoGroup:
    """The Heisenberg group H^n with the convention lam_i = 4."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return StepTwoGroup(np.full((1, n), 4.0))


def nonisotropic(lambdas: Sequence[float]) -> StepTwoGroup:
    """Single vertical direction with prescribed block eigenvalues."""
    return StepTwoGroup(np.asarray(lambdas, dtype=float)[None, :])


def heisenberg_product(n: int, N: int) -> StepTwoGroup:
    """The N-fold product of H^n: h = N vertical directions, nN blocks."""
    if n < 1 or N < 1:
        raise ValueError("n and N must be >= 1")
    c = np.kron(np.eye(N), np.full((1, n), 4.0))
    return StepTwoGroup(c, selected=tuple(j * n for j in range(N)))


def general_group(couplings, selected) -> StepTwoGroup:
    """Step-two group with several vertical directions and selected blocks."""
    return StepTwoGroup(np.asarray(couplings, dtype=float), selected=tuple(selected))


@dataclass(frozen=True, eq=False)
class Point:
    """Ambient coordinates (z, t).  t is stored with shape (h,)."""

    z: Array
    t: Array

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=float))
        t = np.atleast_1d(np.asarray(self.t, dtype=float))
        if z.ndim != 1 or t.ndim != 1:
            raise ValueError("Point components must be one-dimensional")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(t))):
            raise ValueError("Point components must be finite")
        object.__setattr__(self, "z", _readonly(z))
        object.__setattr__(self, "t", _readonly(t))

    def on_center(self, tol: float = 0.0) -> bool:
        return bool(np.linalg.norm(self.z) <= tol)

    def is_origin(self, tol: float = 0.0) -> bool:
        return self.on_center(tol) and bool(np.linalg.norm(self.t) <= tol)


@dataclass(frozen=True, eq=False)
class HVector:
    """A horizontal vector by its components in the orthonormal X-frame."""

    components: Array

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.components, dtype=float))
        object.__setattr__(self, "components", _readonly(c))

    def norm(self) -> float:
        return float(np.linalg.norm(self.components))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A scalar function with optional analytic derivative evaluators.

    ``value(z, t)`` must accept batched arrays.  ``analytic_hgrad`` returns
    frame components of shape (..., 2n); ``analytic_dt`` returns (..., h).
    """

    value: Callable[[Array, Array], Array]
    analytic_hgrad: Optional[Callable[[Array, Array], Array]] = None
    analytic_dt: Optional[Callable[[Array, Array], Array]] = None


def _check_dims(g: StepTwoGroup, x: Point):
    if x.z.shape[0] != 2 * g.n or x.t.shape[0] != g.h:
        raise ValueError(f"point of shape ({x.z.shape[0]}, {x.t.shape[0]}) "
                         f"does not fit a group with (2n, h) = ({2*g.n}, {g.h})")


def group_law(g: StepTwoGroup, x: Point, y: Point) -> Point:
    """x o y = (z + eta, t + tau + <Bz, eta>/2), one entry per vertical direction."""
    _check_dims(g, x)
    _check_dims(g, y)
    cross = 0.5 * (g.bz(x.z) @ y.z)
    return Point(x.z + y.z, x.t + y.t + cross)


def group_inverse(g: StepTwoGroup, x: Point) -> Point:
    _check_dims(g, x)
    return Point(-x.z, -x.t)


def dilate(g: StepTwoGroup, gamma: float, x: Point) -> Point:
    """delta_gamma(z, t) = (gamma z, gamma^2 t)."""
    _check_dims(g, x)
    if not (gamma > 0):
        raise ValueError("dilation parameter must be positive")
    return Point(gamma * x.z, gamma * gamma * x.t)


def default_step(x: Point) -> float:
    """Central-difference step 1e-5 * max(1, |x|), balancing truncation and roundoff."""
    scale = np.sqrt(np.sum(x.z**2) + np.sum(x.t**2))
    return 1e-5 * max(1.0, float(scale))


def fd_partials(value, z: Array, t: Array, step: float):
    """Central-difference ambient partials of a batched scalar evaluator.

    Returns (dz, dt) of shapes (..., 2n) and (..., h).
    """
    z = np.asarray(z, dtype=float)
    t = np.asarray(t, dtype=float)
    nz = z.shape[-1]
    nt = t.shape[-1]
    dz = np.empty(z.shape)
    for k in range(nz):
        zp = z.copy()
        zp[..., k] += step
        zm = z.copy()
        zm[..., k] -= step
        dz[..., k] = (value(zp, t) - value(zm, t)) / (2.0 * step)
    dt = np.empty(t.shape)
    for j in range(nt):
        tp = t.copy()
        tp[..., j] += step
        tm = t.copy()
        tm[..., j] -= step
        dt[..., j] = (value(z, tp) - value(z, tm)) / (2.0 * step)
    return dz, dt


def frame_from_partials(g: StepTwoGroup, z: Array, dz: Array, dt: Array) -> Array:
    """Assemble X_i u from ambient partials: X_i u = d_{z_i} u + (Bz)_i . d_t u / 2."""
    bz = g.bz(z)                                   # (..., h, 2n)
    return dz + 0.5 * np.einsum("...jk,...j->...k", bz, dt)


def hgrad_batch(g: StepTwoGroup, value, z: Array, t: Array, step: float) -> Array:
    """Finite-difference horizontal gradient of a batched evaluator."""
    dz, dt = fd_partials(value, z, t, step)
    return frame_from_partials(g, z, dz, dt)


def horizontal_gradient(g: StepTwoGroup, u: ScalarField, x: Point,
                        scheme: str = "central_fd", step: Optional[float] = None) -> HVector:
    """Horizontal gradient (X_1 u, ..., X_{2n} u) at a point.

    scheme "analytic" uses the field's analytic evaluator and fails if it is
    absent; "central_fd" assembles the frame from central differences of the
    ambient partials.
    """
    _check_dims(g, x)
    if scheme == "analytic":
        if u.analytic_hgrad is None:
            raise ValueError("field has no analytic horizontal gradient")
        return HVector(u.analytic_hgrad(x.z[None], x.t[None])[0])
    if scheme != "central_fd":
        raise ValueError(f"unknown scheme {scheme!r}")
    h = default_step(x) if step is None else float(step)
    if h <= 0:
        raise ValueError("step must be positive")
    return HVector(hgrad_batch(g, u.value, x.z[None], x.t[None], h)[0])


def euler_apply(g: StepTwoGroup, u: ScalarField, x: Point,
                step: Optional[float] = None) -> float:
    """Generator of dilations: E u = <z, grad_z u> + 2 <t, d_t u>."""
    _check_dims(g, x)
    h = default_step(x) if step is None else float(step)
    if u.analytic_hgrad is not None and u.analytic_dt is not None:
        xg = u.analytic_hgrad(x.z[None], x.t[None])[0]
        dt = u.analytic_dt(x.z[None], x.t[None])[0]
        # recover the ambient z-partials from the frame components
        dz = xg - 0.5 * np.einsum("jk,j->k", g.bz(x.z), dt)
    else:
        dz, dt = fd_partials(u.value, x.z[None], x.t[None], h)
        dz, dt = dz[0], dt[0]
    return float(x.z @ dz + 2.0 * (x.t @ dt))


def horizontal_divergence(g: StepTwoGroup, V: Callable[[Point], HVector], x: Point,
                          step: Optional[float] = None) -> float:
    """sum_i X_i(V_i) by central differences on each component."""
    _check_dims(g, x)
    h = default_step(x) if step is None else float(step)
    bz = g.bz(x.z)
    total = 0.0
    nz = 2 * g.n
    for i in range(nz):
        zp = x.z.copy()
        zp[i] += h
        zm = x.z.copy()
        zm[i] -= h
        dzi = (V(Point(zp, x.t)).components[i] - V(Point(zm, x.t)).components[i]) / (2 * h)
        dti = 0.0
        for j in range(g.h):
            tp = x.t.copy()
            tp[j] += h
            tm = x.t.copy()
            tm[j] -= h
            dvi = (V(Point(x.z, tp)).components[i] - V(Point(x.z, tm)).components[i]) / (2 * h)
            dti += 0.5 * bz[j, i] * dvi
        total += dzi + dti
    return float(total)


def lambda_min(g: StepTwoGroup) -> float:
    """Smallest block eigenvalue; block form makes (-B^2)^{1/2} diagonal."""
    lams = g.lambdas
    if lams.size == 0:
        raise ValueError("empty eigenvalue list")
    return float(lams.min())


def commutator_vertical(g: StepTwoGroup, u: ScalarField, x: Point, i: int,
                        step: Optional[float] = None) -> float:
    """(X_{2i} X_{2i-1} - X_{2i-1} X_{2i}) u by nested central differences.

    Should equal sum_j lam^(j)_i d_{t_j} u up to O(step^2).
    """
    _check_dims(g, x)
    if not 0 <= i < g.n:
        raise ValueError("block index out of range")
    h = default_step(x) if step is None else float(step)

    def x_a(z, t, a):
        bz = g.bz(z)
        za = z.copy()
        za[..., a] += h
        zb = z.copy()
        zb[..., a] -= h
        dz = (u.value(za, t) - u.value(zb, t)) / (2 * h)
        dt = np.zeros(z.shape[:-1])
        for j in range(g.h):
            tp = t.copy()
            tp[..., j] += h
            tm = t.copy()
            tm[..., j] -= h
            dt = dt + 0.5 * bz[..., j, a] * (u.value(z, tp) - u.value(z, tm)) / (2 * h)
        return dz + dt

    a, b = 2 * i, 2 * i + 1

    def apply_then(first, then, z, t):
        # X_then (X_first u) at (z, t), with the inner derivative by fd
        bz = g.bz(z)
        zp = z.copy()
        zp[..., then] += h
        zm = z.copy()
        zm[..., then] -= h
        dz = (x_a(zp, t, first) - x_a(zm, t, first)) / (2 * h)
        dt = np.zeros(z.shape[:-1])
        for j in range(g.h):
            tp = t.copy()
            tp[..., j] += h
            tm = t.copy()
            tm[..., j] -= h
            dt = dt + 0.5 * bz[..., j, then] * (x_a(z, tp, first) - x_a(z, tm, first)) / (2 * h)
        return dz + dt

    z1, t1 = x.z[None], x.t[None]
    return float(apply_then(a, b, z1, t1)[0] - apply_then(b, a, z1, t1)[0])
