"""Fiber-circle quadrature: volume density, symbol, weight, and averaged metrics.

All fiber integrals are evaluated on the dual direction circle.  Writing
p_hat(phi) = (cos phi, sin phi) for the Euclidean-unit covector in direction
phi, the three per-point fields entering the spectral problem are

    mu(x)        = (1/2pi) Int  F*(x, p_hat)^(-2) dphi
    sigma*[p,p]  = (1/(pi mu(x))) Int  F*(x, p_hat)^(-2) (p . v(phi))^2 dphi
    a(x)         = mu(x) sqrt(det sigma*(x))

where v(phi) = grad_p F*(x, p_hat(phi)) is the forward-unit vector whose
Legendre image points in direction phi.  The measure F*^(-2) dphi is the
push-forward of the canonical fiber angle measure to the dual circle, so mu
is the density of the Holmes-Thompson volume against dx dy and the fiber
density (1/mu) F*^(-2) integrates to exactly 2 pi at every point.  Both mu
and sigma* reduce to sqrt(det g) and g^(-1) when the metric is Riemannian.

Integrands are smooth and periodic, so the equal-weight trapezoid rule
converges geometrically in the node count; near-degenerate Randers drifts
(|rho| -> 1) sharpen the integrand and are handled by the adaptive doubling
in ``resolve_fiber_nodes``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .grid import TorusGrid
from .metrics import IllPosedMetricError, base_metric

_TWO_PI = 2.0 * np.pi

# F* below this on any fiber node means the metric degenerated numerically.
_DUAL_FLOOR = 1e-8


class QuadratureError(RuntimeError):
    """A fiber integral failed to resolve (e.g. produced a non-SPD symbol)."""


@dataclass(frozen=True, eq=False)
class FiberQuadrature:
    """Node/weight rule on the direction circle; weights sum to 2 pi."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise ValueError("nodes and weights must be matching 1-d arrays")
        if np.any(self.weights <= 0.0):
            raise ValueError("quadrature weights must be positive")
        if abs(float(self.weights.sum()) - _TWO_PI) > 1e-12:
            raise ValueError("quadrature weights must sum to 2 pi")

    @classmethod
    def trapezoid(cls, n):
        """Equal-weight rule at angles 2 pi j / n (spectrally accurate on the circle)."""
        n = int(n)
        if n < 16:
            raise ValueError("fiber quadrature needs at least 16 nodes")
        phi = _TWO_PI * np.arange(n) / n
        return cls(nodes=phi, weights=np.full(n, _TWO_PI / n))

    @property
    def size(self):
        return self.nodes.size

    def unit_covectors(self):
        return np.stack([np.cos(self.nodes), np.sin(self.nodes)], axis=-1)


def _dual_on_fiber(spec, x, y, quad):
    """F*(x, p_hat(phi_j)) with a trailing fiber axis; guards degeneracy."""
    xs = np.asarray(x, dtype=float)[..., None]
    ys = np.asarray(y, dtype=float)[..., None]
    dual = spec.dual(xs, ys, quad.unit_covectors())
    if np.any(dual < _DUAL_FLOOR):
        raise IllPosedMetricError("dual norm collapsed below 1e-8 on the fiber; "
                                  "the metric is numerically degenerate")
    return xs, ys, dual


def volume_density(spec, x, y, quad):
    """Holmes-Thompson density mu(x) of the metric's volume against dx dy."""
    _, _, dual = _dual_on_fiber(spec, x, y, quad)
    return (quad.weights / dual**2).sum(axis=-1) / _TWO_PI


def symbol_matrix(spec, x, y, quad, mu=None):
    """Dual quadratic form sigma*(x) of the averaged second-order operator.

    Assembled from the polarizations p in {dx, dy, dx+dy}.  Raises
    QuadratureError if the assembled matrix fails to be SPD, which signals an
    under-resolved fiber rule.
    """
    xs, ys, dual = _dual_on_fiber(spec, x, y, quad)
    density = quad.weights / dual**2
    if mu is None:
        mu = density.sum(axis=-1) / _TWO_PI
    v = spec.dual_gradient(xs, ys, quad.unit_covectors()) / dual[..., None]
    norm = np.pi * np.asarray(mu)
    q_dx = (density * v[..., 0] ** 2).sum(axis=-1) / norm
    q_dy = (density * v[..., 1] ** 2).sum(axis=-1) / norm
    q_diag = (density * (v[..., 0] + v[..., 1]) ** 2).sum(axis=-1) / norm
    s12 = 0.5 * (q_diag - q_dx - q_dy)
    sig = np.empty(np.shape(q_dx) + (2, 2))
    sig[..., 0, 0] = q_dx
    sig[..., 0, 1] = s12
    sig[..., 1, 0] = s12
    sig[..., 1, 1] = q_dy
    det = q_dx * q_dy - s12 * s12
    if np.any(q_dx <= 0.0) or np.any(det <= 0.0):
        raise QuadratureError("assembled symbol is not positive-definite; "
                              "raise the fiber node count")
    return sig


def weight(sigma_star, mu):
    """Drift weight a = mu sqrt(det sigma*), the density of the metric volume
    against the Riemannian volume of the symbol metric."""
    sigma_star = np.asarray(sigma_star, dtype=float)
    det = (sigma_star[..., 0, 0] * sigma_star[..., 1, 1]
           - sigma_star[..., 0, 1] * sigma_star[..., 1, 0])
    return np.asarray(mu) * np.sqrt(det)


def conformal_transform(sigma_star, mu, f_value):
    """Rescale a symbol/density pair under F -> exp(f) F on a surface:
    sigma* picks up exp(-2f), mu picks up exp(+2f)."""
    f_value = np.asarray(f_value, dtype=float)
    scale = np.exp(2.0 * f_value)
    return sigma_star / scale[..., None, None], np.asarray(mu) * scale


# ---------------------------------------------------------------------------
# Randers closed forms
# ---------------------------------------------------------------------------

def randers_axis_symbol(h, r, eta):
    """Closed-form symbol entries for the flat torus diag(h^2, r^2) with
    constant drift eta*h dx:

        A = 2 h^-2 / ((1 + s) s),   B = 2 r^-2 / (1 + s),   s = sqrt(1 - eta^2)

    Reduces to (h^-2, r^-2) at eta = 0 and must agree with symbol_matrix on
    the same data to quadrature tolerance.
    """
    h = float(h)
    r = float(r)
    eta = float(eta)
    if h <= 0.0 or r <= 0.0:
        raise ValueError("axis lengths must be positive")
    if not 0.0 <= eta < 1.0:
        raise IllPosedMetricError("Randers drift ratio must satisfy 0 <= eta < 1")
    s = np.sqrt(1.0 - eta * eta)
    return 2.0 / (h * h * (1.0 + s) * s), 2.0 / (r * r * (1.0 + s))


def randers_angular_integrals(eta, n_nodes=512):
    """Trapezoid values of the three drift-averaged angular integrals

        Int cos^2 / (1 + eta cos),  Int 2 cos sin / (1 + eta cos),
        Int sin^2 / (1 + eta cos)      over [0, 2pi).
    """
    eta = float(eta)
    if not 0.0 <= eta < 1.0:
        raise IllPosedMetricError("Randers drift ratio must satisfy 0 <= eta < 1")
    theta = _TWO_PI * np.arange(int(n_nodes)) / int(n_nodes)
    w = _TWO_PI / int(n_nodes)
    den = 1.0 + eta * np.cos(theta)
    c2 = float((np.cos(theta) ** 2 / den).sum() * w)
    cs = float((2.0 * np.cos(theta) * np.sin(theta) / den).sum() * w)
    s2 = float((np.sin(theta) ** 2 / den).sum() * w)
    return c2, cs, s2


def randers_angular_closed_forms(eta):
    """Exact values of the integrals above: (2pi/((1+s)s), 0, 2pi/(1+s))."""
    eta = float(eta)
    s = np.sqrt(1.0 - eta * eta)
    return _TWO_PI / ((1.0 + s) * s), 0.0, _TWO_PI / (1.0 + s)


# ---------------------------------------------------------------------------
# Binet-Legendre averaging
# ---------------------------------------------------------------------------

def binet_legendre(spec, x, y, quad, radial_nodes=4):
    """Averaged Riemannian metric from second moments of the forward unit ball.

    The dual form is (n+2)/vol(B) * Int_B p(v) q(v) dv over the F-unit ball,
    evaluated in polar form: fiber nodes for the angle, a Gauss rule in the
    radius up to R(theta) = 1/F(x, u(theta)).  Affine invariance makes the
    result equal g itself for Riemannian input; in general the metric is
    bi-Lipschitz to F with constants controlled by the quasireversibility.
    """
    xs = np.asarray(x, dtype=float)[..., None]
    ys = np.asarray(y, dtype=float)[..., None]
    u = quad.unit_covectors()  # tangent directions this time
    fv = spec.value(xs, ys, u)
    if np.any(fv < _DUAL_FLOOR):
        raise IllPosedMetricError("forward norm collapsed on the unit circle")
    radius = 1.0 / fv
    t, wt = np.polynomial.legendre.leggauss(int(radial_nodes))
    t = 0.5 * (t + 1.0)
    wt = 0.5 * wt
    mom3 = float((wt * t**3).sum())  # = 1/4 exactly for >= 2 nodes
    mom1 = float((wt * t).sum())     # = 1/2
    r2 = radius**2
    r4 = r2 * r2
    area = (quad.weights * r2).sum(axis=-1) * mom1
    n11 = (quad.weights * r4 * u[..., 0] ** 2).sum(axis=-1) * mom3
    n22 = (quad.weights * r4 * u[..., 1] ** 2).sum(axis=-1) * mom3
    n12 = (quad.weights * r4 * u[..., 0] * u[..., 1]).sum(axis=-1) * mom3
    dual_form = np.empty(np.shape(area) + (2, 2))
    dual_form[..., 0, 0] = 4.0 * n11 / area
    dual_form[..., 0, 1] = 4.0 * n12 / area
    dual_form[..., 1, 0] = dual_form[..., 0, 1]
    dual_form[..., 1, 1] = 4.0 * n22 / area
    det = (dual_form[..., 0, 0] * dual_form[..., 1, 1] - dual_form[..., 0, 1] ** 2)
    if np.any(det <= 0.0):
        raise QuadratureError("Binet-Legendre dual form is not positive-definite")
    metric = np.empty_like(dual_form)
    metric[..., 0, 0] = dual_form[..., 1, 1] / det
    metric[..., 0, 1] = -dual_form[..., 0, 1] / det
    metric[..., 1, 0] = metric[..., 0, 1]
    metric[..., 1, 1] = dual_form[..., 0, 0] / det
    return metric


# ---------------------------------------------------------------------------
# Field assembly over a grid
# ---------------------------------------------------------------------------

def resolve_fiber_nodes(spec, start=256, cap=4096, tol=1e-10, probe=8):
    """Double the trapezoid node count until mu stabilizes below tol.

    Probes an evenly spaced probe x probe point set; returns the accepted
    quadrature (the first whose doubling changed mu by less than tol).
    """
    t = np.arange(probe) / probe
    xs = t[:, None]
    ys = t[None, :]
    n = max(int(start), 16)
    mu_prev = volume_density(spec, xs, ys, FiberQuadrature.trapezoid(n))
    while n < cap:
        n *= 2
        mu_next = volume_density(spec, xs, ys, FiberQuadrature.trapezoid(n))
        if float(np.abs(mu_next - mu_prev).max()) < tol:
            return FiberQuadrature.trapezoid(n)
        mu_prev = mu_next
    return FiberQuadrature.trapezoid(cap)


@dataclass
class SymbolField:
    """Per-node symbol data on a torus grid: sigma* (SPD), mu > 0, weight a."""

    grid: TorusGrid
    sigma_star: np.ndarray  # (nx, ny, 2, 2)
    mu: np.ndarray          # (nx, ny)
    a: np.ndarray           # (nx, ny)
    fiber_nodes: int

    @classmethod
    def compute(cls, spec, grid, quad=None, chunk=8192):
        """Evaluate mu, sigma*, a at every grid node (chunked, vectorized).

        Constant-coefficient metrics are evaluated at a single point and
        broadcast, which makes very large fiber rules affordable for them.
        """
        from .metrics import is_constant_coefficient

        if quad is None:
            quad = resolve_fiber_nodes(spec)
        shape = (grid.nx, grid.ny)
        if is_constant_coefficient(spec):
            mu0 = volume_density(spec, 0.0, 0.0, quad)
            sig0 = symbol_matrix(spec, 0.0, 0.0, quad, mu=mu0)
            mu = np.full(shape, float(mu0))
            sig = np.broadcast_to(sig0, shape + (2, 2)).copy()
        else:
            xs, ys = grid.flat_mesh()
            n = xs.size
            mu = np.empty(n)
            sig = np.empty((n, 2, 2))
            for lo in range(0, n, int(chunk)):
                hi = min(lo + int(chunk), n)
                mu[lo:hi] = volume_density(spec, xs[lo:hi], ys[lo:hi], quad)
                sig[lo:hi] = symbol_matrix(spec, xs[lo:hi], ys[lo:hi], quad,
                                           mu=mu[lo:hi])
            mu = mu.reshape(shape)
            sig = sig.reshape(shape + (2, 2))
        return cls(grid=grid, sigma_star=sig, mu=mu, a=weight(sig, mu),
                   fiber_nodes=quad.size)

    def sigma_min_eigenvalues(self):
        s = self.sigma_star
        half_trace = 0.5 * (s[..., 0, 0] + s[..., 1, 1])
        disc = np.sqrt(np.maximum(
            (0.5 * (s[..., 0, 0] - s[..., 1, 1])) ** 2 + s[..., 0, 1] ** 2, 0.0))
        return half_trace - disc

    def total_volume(self):
        return float(self.mu.sum()) * self.grid.cell_area

    def to_csv(self, path):
        """Flat table (node, sigma11, sigma12, sigma22, mu, a) for inspection."""
        s = self.sigma_star.reshape(-1, 2, 2)
        mu = self.mu.ravel()
        a = self.a.ravel()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["node", "sigma11", "sigma12", "sigma22", "mu", "a"])
            for n in range(mu.size):
                writer.writerow([n,
                                 format(s[n, 0, 0], ".17g"),
                                 format(s[n, 0, 1], ".17g"),
                                 format(s[n, 1, 1], ".17g"),
                                 format(mu[n], ".17g"),
                                 format(a[n], ".17g")])


# ---------------------------------------------------------------------------
# Two-route energies (tangent-side oracle for Randers data)
# ---------------------------------------------------------------------------

def energy_from_symbol(field, grad_fn, grid=None):
    """Energy Int sigma*(df, df) mu dx dy for an analytic gradient field."""
    grid = field.grid if grid is None else grid
    x, y = grid.mesh()
    df = grad_fn(x, y)
    s = field.sigma_star
    dens = (s[..., 0, 0] * df[..., 0] ** 2
            + 2.0 * s[..., 0, 1] * df[..., 0] * df[..., 1]
            + s[..., 1, 1] * df[..., 1] ** 2) * field.mu
    return float(dens.sum()) * grid.cell_area


def randers_energy_direct(spec, grad_fn, grid, quad):
    """Tangent-circle route to the Randers energy, bypassing sigma* entirely:

        E(f) = (1/pi) Int_M [ Int (df . v(t))^2 / (1 + rho(v(t))) dt ] sqrt(det g) dx dy

    with v(t) running over the g-orthonormal unit circle.  Agreement with
    ``energy_from_symbol`` validates the dual-circle route end to end.
    """
    base = base_metric(spec)
    x, y = grid.mesh()
    g = base.matrix(x, y)
    a = g[..., 0, 0]
    b = g[..., 0, 1]
    c = g[..., 1, 1]
    # g-orthonormal frame from the Cholesky factor g = L L'
    l11 = np.sqrt(a)
    l21 = b / l11
    l22 = np.sqrt(c - l21**2)
    e1 = np.stack([1.0 / l11, np.zeros_like(l11)], axis=-1)
    e2 = np.stack([-l21 / (l11 * l22), 1.0 / l22], axis=-1)
    theta = quad.nodes
    v = (np.cos(theta)[:, None] * e1[..., None, :]
         + np.sin(theta)[:, None] * e2[..., None, :])  # (nx, ny, Q, 2)
    df = grad_fn(x, y)
    pairing = np.einsum("...i,...qi->...q", df, v)
    rho_v = np.einsum("...i,...qi->...q", spec.drift(x, y), v)
    if np.any(1.0 + rho_v <= 0.0):
        raise IllPosedMetricError("drift exceeds the unit ball on the fiber")
    fiber = ((pairing**2 / (1.0 + rho_v)) * quad.weights).sum(axis=-1)
    dens = fiber * np.sqrt(a * c - b * b) / np.pi
    return float(dens.sum()) * grid.cell_area
