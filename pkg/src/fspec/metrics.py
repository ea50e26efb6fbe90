"""Finsler metric families on the flat 2-torus.

Three families, closed under every operation used downstream:

* Riemannian:  F(x, v) = sqrt(v' g(x) v)
* Randers:     F(x, v) = sqrt(v' g(x) v) + rho(x) . v,  with |rho|_{g*} < 1
* Conformal:   F(x, v) = exp(f(x)) F_base(x, v)

Each metric exposes the forward norm, the dual co-norm, the fiberwise
Legendre transform and its inverse gradient map, all vectorized: x and y
broadcast against the leading axes of v or p, whose final axis has length 2.

Duality conventions.  The dual norm is the support function

    F*(x, p) = sup { p(v) : F(x, v) = 1 }.

For a Randers metric, after normalizing g to the identity the dual unit ball
is the Euclidean unit ball translated by the drift covector; solving
|p/t - beta| = 1 for t gives the closed form

    F*(p) = (sqrt(<p,p>* (1 - |rho|*^2) + <p,rho>*^2) - <p,rho>*) / (1 - |rho|*^2)

where <.,.>* is the g-inverse pairing.  Note the minus sign: the support of
the translated ball is smaller against the drift than along it.
``dual_norm_sampled`` is the brute-force support-function oracle the closed
form is validated against in the test suite.

The Legendre transform L(x, v) = (1/2) d/dt F^2(x, v + t u)|_{t=0} and the
inverse map grad_p (1/2) F*^2 satisfy L(v)(v) = F(v)^2, F*(L(v)) = F(v), and
round-trip to the identity on nonzero vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Field, as_field


class IllPosedMetricError(ValueError):
    """The metric data violates an admissibility condition."""


def _quad_form(g, u, w):
    return np.einsum("...ij,...i,...j->...", g, u, w)


def _apply_form(g, u):
    return np.einsum("...ij,...j->...i", g, u)


def _pair(p, v):
    return np.einsum("...i,...i->...", p, v)


def _require_nonzero(v, what):
    v = np.asarray(v, dtype=float)
    if np.any(np.all(v == 0.0, axis=-1)):
        raise ValueError(f"{what} is undefined on the zero vector")
    return v


class RiemannianMetric:
    """F(x, v) = sqrt(v' g(x) v) for a symmetric positive-definite matrix field g."""

    variant = "riemannian"

    def __init__(self, g11, g12=0.0, g22=1.0):
        self.g11 = as_field(g11)
        self.g12 = as_field(g12)
        self.g22 = as_field(g22)

    @classmethod
    def euclidean(cls):
        return cls(1.0, 0.0, 1.0)

    @classmethod
    def stretched(cls, h, r=None):
        """Constant diag(h^2, r^2); r defaults to 1/h so the torus has unit area."""
        h = float(h)
        r = 1.0 / h if r is None else float(r)
        return cls(h * h, 0.0, r * r)

    def _coefficients(self, x, y):
        a = self.g11(x, y)
        b = self.g12(x, y)
        c = self.g22(x, y)
        det = a * c - b * b
        if np.any(a <= 0.0) or np.any(det <= 0.0):
            raise IllPosedMetricError("metric matrix is not positive-definite "
                                      "at a sampled point")
        return a, b, c, det

    def matrix(self, x, y):
        a, b, c, _ = self._coefficients(x, y)
        g = np.empty(np.broadcast_shapes(np.shape(a), np.shape(b), np.shape(c)) + (2, 2))
        g[..., 0, 0] = a
        g[..., 0, 1] = b
        g[..., 1, 0] = b
        g[..., 1, 1] = c
        return g

    def inverse_matrix(self, x, y):
        a, b, c, det = self._coefficients(x, y)
        gi = np.empty(np.broadcast_shapes(np.shape(a), np.shape(b), np.shape(c)) + (2, 2))
        gi[..., 0, 0] = c / det
        gi[..., 0, 1] = -b / det
        gi[..., 1, 0] = -b / det
        gi[..., 1, 1] = a / det
        return gi

    def value(self, x, y, v):
        v = np.asarray(v, dtype=float)
        q = _quad_form(self.matrix(x, y), v, v)
        return np.sqrt(np.maximum(q, 0.0))

    _value_raw = value

    def dual(self, x, y, p):
        p = np.asarray(p, dtype=float)
        q = _quad_form(self.inverse_matrix(x, y), p, p)
        return np.sqrt(np.maximum(q, 0.0))

    def legendre(self, x, y, v):
        v = _require_nonzero(v, "the Legendre transform")
        return _apply_form(self.matrix(x, y), v)

    def dual_gradient(self, x, y, p):
        p = _require_nonzero(p, "the inverse Legendre map")
        return _apply_form(self.inverse_matrix(x, y), p)


class RandersMetric:
    """F = sqrt(g) + rho for a Riemannian base g and a drift 1-form rho.

    Admissibility requires |rho(x)|_{g*} < 1 at every sampled point; evaluation
    raises IllPosedMetricError otherwise.  Construct with check_admissible=False
    only to probe deliberately ill-posed data (e.g. convexity diagnostics).
    """

    variant = "randers"

    def __init__(self, base, rho_x, rho_y, check_admissible=True):
        if not isinstance(base, RiemannianMetric):
            raise TypeError("Randers base must be a RiemannianMetric")
        self.base = base
        self.rho_x = as_field(rho_x)
        self.rho_y = as_field(rho_y)
        self.check_admissible = bool(check_admissible)

    @classmethod
    def axis_drift_torus(cls, h, eta, r=None, profile=1.0):
        """diag(h^2, r^2) base with drift eta*h*profile(x, y) dx; r defaults to 1/h."""
        base = RiemannianMetric.stretched(h, r)
        rho_x = float(eta) * float(h) * as_field(profile)
        return cls(base, rho_x, 0.0)

    def drift(self, x, y):
        rx = self.rho_x(x, y)
        ry = self.rho_y(x, y)
        rho = np.empty(np.broadcast_shapes(np.shape(rx), np.shape(ry)) + (2,))
        rho[..., 0] = rx
        rho[..., 1] = ry
        return rho

    def drift_norm(self, x, y):
        """|rho(x)|_{g*}, the dual norm of the drift against the base metric."""
        rho = self.drift(x, y)
        q = _quad_form(self.base.inverse_matrix(x, y), rho, rho)
        return np.sqrt(np.maximum(q, 0.0))

    def _drift_slack(self, x, y, gi=None, rho=None):
        # w = 1 - |rho|_{g*}^2; admissible iff w > 0
        if gi is None:
            gi = self.base.inverse_matrix(x, y)
        if rho is None:
            rho = self.drift(x, y)
        return np.asarray(1.0 - _quad_form(gi, rho, rho))

    def _require_admissible(self, w):
        if np.any(w <= 0.0):
            raise IllPosedMetricError(
                "Randers drift reaches |rho|_{g*} >= 1 at a sampled point; "
                "the metric is not admissible there")

    def _value_raw(self, x, y, v):
        v = np.asarray(v, dtype=float)
        alpha = self.base.value(x, y, v)
        return alpha + _pair(self.drift(x, y), v)

    def value(self, x, y, v):
        if self.check_admissible:
            self._require_admissible(self._drift_slack(x, y))
        return self._value_raw(x, y, v)

    def dual(self, x, y, p):
        p = np.asarray(p, dtype=float)
        gi = self.base.inverse_matrix(x, y)
        rho = self.drift(x, y)
        w = self._drift_slack(x, y, gi, rho)
        self._require_admissible(w)
        c = _pair(p, _apply_form(gi, rho))
        q2 = _quad_form(gi, p, p)
        root = np.sqrt(np.maximum(w * q2 + c * c, 0.0))
        return (root - c) / w

    def legendre(self, x, y, v):
        v = _require_nonzero(v, "the Legendre transform")
        g = self.base.matrix(x, y)
        rho = self.drift(x, y)
        alpha = np.sqrt(np.maximum(_quad_form(g, v, v), 0.0))
        if self.check_admissible:
            self._require_admissible(self._drift_slack(x, y))
        value = alpha + _pair(rho, v)
        return value[..., None] * (_apply_form(g, v) / alpha[..., None] + rho)

    def dual_gradient(self, x, y, p):
        p = _require_nonzero(p, "the inverse Legendre map")
        gi = self.base.inverse_matrix(x, y)
        rho = self.drift(x, y)
        w = self._drift_slack(x, y, gi, rho)
        self._require_admissible(w)
        gi_rho = _apply_form(gi, rho)
        gi_p = _apply_form(gi, p)
        c = _pair(p, gi_rho)
        q2 = _quad_form(gi, p, p)
        root = np.sqrt(np.maximum(w * q2 + c * c, 0.0))
        w_ = w[..., None]
        grad_dual = ((w_ * gi_p + c[..., None] * gi_rho) / root[..., None] - gi_rho) / w_
        dual = (root - c) / w
        return dual[..., None] * grad_dual


class ConformalMetric:
    """F(x, v) = exp(f(x)) F_base(x, v) for a scalar exponent field f."""

    variant = "conformal"

    def __init__(self, base, exponent):
        self.base = base
        self.exponent = as_field(exponent)

    def scale(self, x, y):
        return np.exp(self.exponent(x, y))

    def value(self, x, y, v):
        return self.scale(x, y) * self.base.value(x, y, v)

    def _value_raw(self, x, y, v):
        raw = getattr(self.base, "_value_raw", self.base.value)
        return self.scale(x, y) * raw(x, y, v)

    def dual(self, x, y, p):
        return self.base.dual(x, y, p) / self.scale(x, y)

    def legendre(self, x, y, v):
        s2 = self.scale(x, y) ** 2
        return s2[..., None] * self.base.legendre(x, y, v)

    def dual_gradient(self, x, y, p):
        s2 = self.scale(x, y) ** 2
        return self.base.dual_gradient(x, y, p) / s2[..., None]


def base_metric(spec):
    """Strip Randers drift / conformal factors down to the Riemannian core."""
    if isinstance(spec, RandersMetric):
        return spec.base
    if isinstance(spec, ConformalMetric):
        return base_metric(spec.base)
    return spec


def is_constant_coefficient(spec):
    """True when every defining scalar field of the metric is constant."""
    if isinstance(spec, RiemannianMetric):
        fields = (spec.g11, spec.g12, spec.g22)
    elif isinstance(spec, RandersMetric):
        return (is_constant_coefficient(spec.base)
                and spec.rho_x.constant_value() is not None
                and spec.rho_y.constant_value() is not None)
    elif isinstance(spec, ConformalMetric):
        return (is_constant_coefficient(spec.base)
                and spec.exponent.constant_value() is not None)
    else:
        return False
    return all(f.constant_value() is not None for f in fields)


# ---------------------------------------------------------------------------
# Sampling-based operations and oracles
# ---------------------------------------------------------------------------

def unit_directions(n):
    """n equispaced Euclidean-unit vectors on the circle."""
    phi = 2.0 * np.pi * np.arange(n) / n
    return np.stack([np.cos(phi), np.sin(phi)], axis=-1)


def _point_mesh(n_points):
    m = max(int(np.ceil(np.sqrt(n_points))), 1)
    t = np.arange(m) / m
    return t[:, None, None], t[None, :, None]


def _refine_peak(vals, axis=-1, mode="max"):
    """Sharpen a sampled periodic extremum with a 3-point parabola fit."""
    vals = np.moveaxis(np.asarray(vals, dtype=float), axis, -1)
    idx = np.argmax(vals, axis=-1) if mode == "max" else np.argmin(vals, axis=-1)
    n = vals.shape[-1]
    f0 = np.take_along_axis(vals, idx[..., None], -1)[..., 0]
    fp = np.take_along_axis(vals, ((idx + 1) % n)[..., None], -1)[..., 0]
    fm = np.take_along_axis(vals, ((idx - 1) % n)[..., None], -1)[..., 0]
    a = 0.5 * (fp + fm) - f0
    b = 0.5 * (fp - fm)
    with np.errstate(divide="ignore", invalid="ignore"):
        vertex = f0 - np.where(a != 0.0, b * b / (4.0 * a), 0.0)
    good = (a < 0.0) if mode == "max" else (a > 0.0)
    return np.where(good, vertex, f0)


def dual_norm_sampled(spec, x, y, p, n_directions=10_000, refine=True):
    """Brute-force support function: maximize p(v)/F(x, v) over unit directions.

    With refine=True the sampled maximum is sharpened by a parabola fit, which
    drops the O((2pi/n)^2) sampling bias to O((2pi/n)^4).
    """
    u = unit_directions(n_directions)
    fv = spec.value(x, y, u)
    p = np.asarray(p, dtype=float)
    ratios = np.einsum("...i,ki->...k", p, u) / fv
    if refine:
        return _refine_peak(ratios)
    return ratios.max(axis=-1)


def quasireversibility(spec, direction_samples=1024, point_samples=256, refine=True):
    """Sampled sup of F(x, -v) over F-unit v, i.e. sup F(x,-u)/F(x,u).

    Equals 1 exactly for reversible metrics.  The raw sampled supremum
    (refine=False) is monotone nondecreasing under nested sample refinement
    (directions doubled, point mesh doubled per axis); refine=True sharpens
    the direction maximum with a parabola fit.
    """
    if direction_samples < 16 or point_samples < 16:
        raise ValueError("quasireversibility needs at least 16 samples each way")
    xs, ys = _point_mesh(point_samples)
    u = unit_directions(direction_samples)
    forward = spec.value(xs, ys, u)
    backward = spec.value(xs, ys, -u)
    ratio = backward / forward
    if refine:
        return float(np.max(_refine_peak(ratio)))
    return float(ratio.max())


def bilipschitz_ratio(spec, reference, direction_samples=1024, point_samples=256,
                      refine=True):
    """Sampled (inf, sup) of F/F_reference over points and nonzero directions."""
    if direction_samples < 16 or point_samples < 16:
        raise ValueError("bilipschitz_ratio needs at least 16 samples each way")
    xs, ys = _point_mesh(point_samples)
    u = unit_directions(direction_samples)
    ratio = spec.value(xs, ys, u) / reference.value(xs, ys, u)
    if refine:
        lo = float(np.min(_refine_peak(ratio, mode="min")))
        hi = float(np.max(_refine_peak(ratio, mode="max")))
        return lo, hi
    return float(ratio.min()), float(ratio.max())


@dataclass(frozen=True)
class MetricConstants:
    """Coarse geometric constants of a metric (against a reference)."""

    quasireversibility: float
    bilipschitz: tuple  # (inf, sup) of F/F_reference


def metric_constants(spec, reference, direction_samples=1024, point_samples=256):
    return MetricConstants(
        quasireversibility=quasireversibility(spec, direction_samples, point_samples),
        bilipschitz=bilipschitz_ratio(spec, reference, direction_samples, point_samples),
    )


def check_strong_convexity(spec, x, y, samples=64, rel_step=1e-5, tol=1e-10):
    """Finite-difference test that the v-Hessian of F^2 is positive-definite.

    Central differences with step rel_step * |v| on Euclidean-unit directions;
    accepts iff the smallest Hessian eigenvalue exceeds tol times the largest
    at every sampled direction.  Uses the raw evaluation path so deliberately
    inadmissible data can be diagnosed.
    """
    raw = getattr(spec, "_value_raw", spec.value)

    def fsq(v):
        return raw(x, y, v) ** 2

    v = unit_directions(samples)
    h = rel_step
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    f0 = fsq(v)
    hxx = (fsq(v + ex) - 2.0 * f0 + fsq(v - ex)) / h**2
    hyy = (fsq(v + ey) - 2.0 * f0 + fsq(v - ey)) / h**2
    hxy = (fsq(v + ex + ey) - fsq(v + ex - ey)
           - fsq(v - ex + ey) + fsq(v - ex - ey)) / (4.0 * h**2)
    half_trace = 0.5 * (hxx + hyy)
    disc = np.sqrt(np.maximum((0.5 * (hxx - hyy)) ** 2 + hxy**2, 0.0))
    lam_min = half_trace - disc
    lam_max = half_trace + disc
    return bool(np.all(lam_max > 0.0) and np.all(lam_min > tol * lam_max))


def legendre_numeric(spec, x, y, v, rel_step=1e-5):
    """Generic-path Legendre transform: central differences of F^2 / 2."""
    v = np.asarray(v, dtype=float)
    h = rel_step * float(np.linalg.norm(v))
    if h == 0.0:
        raise ValueError("the Legendre transform is undefined on the zero vector")
    out = np.empty(2)
    for i, e in enumerate(np.eye(2)):
        out[i] = (spec.value(x, y, v + h * e) ** 2
                  - spec.value(x, y, v - h * e) ** 2) / (4.0 * h)
    return out


def dual_gradient_numeric(spec, x, y, p, rel_step=1e-5, n_directions=200_000):
    """Generic-path inverse Legendre map: differences of the sampled F*^2 / 2."""
    p = np.asarray(p, dtype=float)
    h = rel_step * float(np.linalg.norm(p))
    if h == 0.0:
        raise ValueError("the inverse Legendre map is undefined on the zero covector")

    def half_dual_sq(q):
        return 0.5 * float(dual_norm_sampled(spec, x, y, q, n_directions)) ** 2

    out = np.empty(2)
    for i, e in enumerate(np.eye(2)):
        out[i] = (half_dual_sq(p + h * e) - half_dual_sq(p - h * e)) / (2.0 * h)
    return out
