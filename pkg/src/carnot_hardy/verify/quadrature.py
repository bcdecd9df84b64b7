"""Quadrature over step-two groups.

Two charts are supported:

* ``phi_polar`` - the change of variables (omega, lam) -> (z, t) with
  z = omega (1 + lam^2)^{-1/4}, t = lam |omega|^2 (1 + lam^2)^{-1/2}, under
  which Lebesgue measure becomes |omega|^2 (1 + lam^2)^{-(n+1)/2} domega dlam
  and |omega| equals the Koranyi gauge of the image point.  The tensor grid
  uses Gauss-Legendre in sigma = |omega|, a uniform circle rule in the
  angle, and either graded Gauss panels in psi = arctan(lam) (whole line) or
  log-spaced panels in log(lam) when a positive lambda window is requested
  (the cut-off family of the sharpness test lives on such windows).

* ``ambient`` - a plain tensor Gauss grid on a coordinate box, as a cross
  check of the chart above.

Monte Carlo integration over a coordinate box covers the product and
five-dimensional non-isotropic cases, with a fixed seed and chunked,
order-deterministic accumulation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..groups import StepTwoGroup

LOG2 = float(np.log(2.0))


@dataclass
class QuadratureSpec:
    """Integration method, chart, resolution and support window."""

    method: str = "tensor_grid"          # tensor_grid | monte_carlo
    coordinates: str = "phi_polar"       # phi_polar | ambient
    n_sigma: int = 80                    # Gauss nodes in sigma (and per ambient axis)
    n_angle: int = 16                    # circle nodes
    psi_nodes: int = 12                  # Gauss nodes per psi panel
    psi_levels: int = 10                 # dyadic grading depth toward psi = pi/2
    log_nodes: int = 16                  # Gauss nodes per log-lambda panel
    samples: int = 1 << 20               # Monte Carlo sample count
    seed: int = 2024
    rel_tol: float = 2e-3                # target relative tolerance for checks
    sigma_range: tuple = (0.25, 2.0)     # gauge support of the integrand
    lambda_range: Optional[tuple] = None  # positive (lo, hi): one-sided log grid
    box: Optional[tuple] = None          # (z_half, t_half) for ambient / MC
    chunk: int = 1 << 17

    def describe(self) -> dict:
        d = {"method": self.method, "coordinates": self.coordinates,
             "seed": self.seed, "rel_tol": self.rel_tol}
        if self.method == "tensor_grid":
            d.update(n_sigma=self.n_sigma, n_angle=self.n_angle,
                     sigma_range=list(self.sigma_range))
            if self.lambda_range is not None:
                d["lambda_range"] = list(self.lambda_range)
        else:
            d["samples"] = self.samples
            d["box"] = list(self.box) if self.box else None
        return d


@dataclass
class IntegralResult:
    value: float
    error: float          # grid-refinement difference or MC standard error
    n_evals: int
    method: str


def _gauss_on(a: float, b: float, n: int):
    x, w = leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def _graded_psi(levels: int, nodes: int):
    """Symmetric Gauss panels on (-pi/2, pi/2), dyadically graded at the ends."""
    edges = [0.0] + [np.pi / 2 * (1.0 - 2.0 ** (-j)) for j in range(1, levels + 1)]
    edges.append(np.pi / 2)
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = _gauss_on(a, b, nodes)
        xs.append(x)
        ws.append(w)
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    return np.concatenate([-x[::-1], x]), np.concatenate([w[::-1], w])


def _log_lambda(lo: float, hi: float, nodes: int):
    """Gauss panels in v = log(lam) over [log lo, log hi].

    Panel width is capped at 2 and the first/last panels match the width
    log(2) of the cut-off transition regions.
    """
    if not (0 < lo < hi):
        raise ValueError("lambda_range must be positive and increasing")
    va, vb = np.log(lo), np.log(hi)
    edges = [va]
    if vb - va > 2 * LOG2:
        edges.append(va + LOG2)
        body_end = vb - LOG2
        v = edges[-1]
        while v < body_end - 1e-12:
            v = min(v + 2.0, body_end)
            edges.append(v)
    edges.append(vb)
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = _gauss_on(a, b, nodes)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def phi_polar_nodes(group: StepTwoGroup, quad: QuadratureSpec, coarse: bool = False):
    """Tensor nodes (z, t, w) of the phi chart for H^1."""
    if group.h != 1 or group.n != 1:
        raise ValueError("the phi_polar tensor grid is implemented for H^1")
    shrink = 2 if coarse else 1
    slo, shi = quad.sigma_range
    sig, wsig = _gauss_on(slo, shi, max(quad.n_sigma // shrink, 8))
    nang = max(quad.n_angle // shrink, 4)
    ang = (np.arange(nang) + 0.5) * 2.0 * np.pi / nang
    wang = np.full(nang, 2.0 * np.pi / nang)

    if quad.lambda_range is None:
        psi, wpsi = _graded_psi(quad.psi_levels, max(quad.psi_nodes // shrink, 4))
        lam = np.tan(psi)
        # measure (1+lam^2)^{-1} dlam = dpsi for n = 1
        wlam = wpsi
    else:
        v, wv = _log_lambda(*quad.lambda_range, max(quad.log_nodes // shrink, 4))
        lam = np.exp(v)
        wlam = lam / (1.0 + lam**2) * wv

    S, A, L = np.meshgrid(sig, ang, lam, indexing="ij")
    WS, WA, WL = np.meshgrid(wsig, wang, wlam, indexing="ij")
    clam = 1.0 / np.sqrt(1.0 + L**2)
    z = np.stack([S * np.cos(A), S * np.sin(A)], axis=-1) * np.sqrt(clam)[..., None]
    t = (L * S**2 * clam)[..., None]
    w = S**3 * WS * WA * WL
    return z.reshape(-1, 2), t.reshape(-1, 1), w.reshape(-1)


def ambient_nodes(group: StepTwoGroup, quad: QuadratureSpec, coarse: bool = False):
    """Tensor Gauss nodes on a coordinate box, for groups of ambient dim <= 3."""
    if group.dim > 3:
        raise ValueError("ambient tensor grids are limited to 3 ambient dimensions")
    if quad.box is None:
        raise ValueError("ambient integration needs a (z_half, t_half) box")
    z_half, t_half = quad.box
    n = max(quad.n_sigma // (2 if coarse else 1), 8)
    n += n % 2      # an odd Gauss count would place a node at the origin
    axes, wts = [], []
    for _ in range(2 * group.n):
        x, w = _gauss_on(-z_half, z_half, n)
        axes.append(x)
        wts.append(w)
    for _ in range(group.h):
        x, w = _gauss_on(-t_half, t_half, n)
        axes.append(x)
        wts.append(w)
    grids = np.meshgrid(*axes, indexing="ij")
    wgrids = np.meshgrid(*wts, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    w = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return pts[:, :2 * group.n], pts[:, 2 * group.n:], w


def _accumulate(fs, z, t, w, chunk: int):
    totals = np.zeros(len(fs))
    n = z.shape[0]
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        zc, tc, wc = z[lo:hi], t[lo:hi], w[lo:hi]
        for k, f in enumerate(fs):
            vals = f(zc, tc)
            if not np.all(np.isfinite(vals)):
                raise ValueError("non-finite integrand sample: check the support "
                                 "window against the integrand's singularities")
            totals[k] += float(wc @ vals)
    return totals


def integrate_many(group: StepTwoGroup, fs: Sequence[Callable], quad: QuadratureSpec):
    """Integrate several integrands on shared nodes; returns IntegralResults."""
    if quad.method == "tensor_grid":
        builder = phi_polar_nodes if quad.coordinates == "phi_polar" else ambient_nodes
        z, t, w = builder(group, quad)
        totals = _accumulate(fs, z, t, w, quad.chunk)
        zc, tc, wc = builder(group, quad, coarse=True)
        coarse = _accumulate(fs, zc, tc, wc, quad.chunk)
        return [IntegralResult(float(v), float(abs(v - c)), z.shape[0], "tensor_grid")
                for v, c in zip(totals, coarse)]

    if quad.method != "monte_carlo":
        raise ValueError(f"unknown quadrature method {quad.method!r}")
    if quad.box is None:
        raise ValueError("monte_carlo integration needs a (z_half, t_half) box")
    z_half, t_half = quad.box
    dim_z, dim_t = 2 * group.n, group.h
    vol = (2.0 * z_half) ** dim_z * (2.0 * t_half) ** dim_t
    rng = np.random.default_rng(quad.seed)
    sums = np.zeros(len(fs))
    sq = np.zeros(len(fs))
    done = 0
    while done < quad.samples:
        m = min(quad.chunk, quad.samples - done)
        z = rng.uniform(-z_half, z_half, size=(m, dim_z))
        t = rng.uniform(-t_half, t_half, size=(m, dim_t))
        for k, f in enumerate(fs):
            vals = f(z, t)
            if not np.all(np.isfinite(vals)):
                raise ValueError("non-finite integrand sample in Monte Carlo box")
            sums[k] += float(vals.sum())
            sq[k] += float(vals @ vals)
        done += m
    mean = sums / quad.samples
    var = np.maximum(sq / quad.samples - mean**2, 0.0)
    err = vol * np.sqrt(var / quad.samples)
    return [IntegralResult(float(vol * mu), float(e), quad.samples, "monte_carlo")
            for mu, e in zip(mean, err)]


def integrate(group: StepTwoGroup, f: Callable, quad: QuadratureSpec) -> IntegralResult:
    """Integral of a batched scalar integrand f(z, t) over the group."""
    return integrate_many(group, [f], quad)[0]
