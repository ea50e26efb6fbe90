"""Weighted-Laplacian discretization and generalized eigensolvers on the torus.

The energy Int sigma*(df, df) mu dx dy is discretized in flux form on a
periodic nx x ny grid: the diagonal coefficients D = mu sigma* act through
edge-averaged fluxes, the mixed coefficient through symmetric centered
cross-differences, so the stiffness operator K is symmetric with the
constants exactly in its kernel and f' K f reproduces the energy quadrature
to second order.  The mass operator is M = diag(mu dx dy) and the spectrum
solves K u = lambda M u.

Constant-coefficient problems diagonalize in Fourier modes, giving the exact
oracle lambda = 4 pi^2 (A m^2 + B n^2) used to validate assembly and solver.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dataclass_field

import numpy as np
import scipy.linalg
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .grid import TorusGrid

_DENSE_LIMIT = 48 * 48  # dense generalized solve up to this many nodes


class SolverError(RuntimeError):
    """Eigensolver failure or a violated discrete invariant."""


def _forward_diff(m, step):
    """Periodic forward difference (f[k+1] - f[k]) / step as a sparse matrix."""
    k = np.arange(m)
    rows = np.concatenate([k, k])
    cols = np.concatenate([k, (k + 1) % m])
    data = np.concatenate([-np.ones(m), np.ones(m)]) / step
    return sparse.csr_matrix((data, (rows, cols)), shape=(m, m))


def _centered_diff(m, step):
    """Periodic centered difference (f[k+1] - f[k-1]) / (2 step)."""
    k = np.arange(m)
    rows = np.concatenate([k, k])
    cols = np.concatenate([(k + 1) % m, (k - 1) % m])
    half = 0.5 / step
    data = np.concatenate([np.full(m, half), np.full(m, -half)])
    return sparse.csr_matrix((data, (rows, cols)), shape=(m, m))


@dataclass
class Spectrum:
    """Sorted eigenvalues with M-orthonormal eigenvectors and residuals."""

    values: np.ndarray      # (k+1,) ascending
    vectors: np.ndarray     # (n_nodes, k+1)
    residuals: np.ndarray   # ||K u - lambda M u|| / ||M u|| per pair

    def multiplets(self, rel_tol=1e-6):
        """Group eigenvalues within relative rel_tol into (value, count) pairs."""
        groups = []
        for lam in self.values:
            if groups and abs(lam - groups[-1][0]) <= rel_tol * max(abs(lam), 1e-300):
                value, count = groups[-1]
                groups[-1] = ((value * count + lam) / (count + 1), count + 1)
            else:
                groups.append((float(lam), 1))
        return groups

    def _multiplicity_labels(self, rel_tol=1e-6):
        labels = np.empty(self.values.size, dtype=int)
        i = 0
        for value, count in self.multiplets(rel_tol):
            labels[i:i + count] = count
            i += count
        return labels

    def to_csv(self, path, rel_tol=1e-6):
        mult = self._multiplicity_labels(rel_tol)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "lambda", "multiplicity", "residual"])
            for k, lam in enumerate(self.values):
                writer.writerow([k, format(lam, ".17g"), mult[k],
                                 format(self.residuals[k], ".17g")])

    def save_vectors(self, path, grid=None):
        """Optional binary dump of eigenvectors, reshaped to grid arrays if given."""
        vecs = self.vectors
        if grid is not None:
            vecs = vecs.reshape(grid.nx, grid.ny, -1)
        np.save(path, vecs)


@dataclass
class SpectralProblem:
    """Stiffness K (symmetric PSD, constants in the kernel), diagonal mass M."""

    K: sparse.csr_matrix
    M: sparse.dia_matrix
    grid: TorusGrid
    lambda_scale: float
    spectrum: Spectrum | None = dataclass_field(default=None, repr=False)

    @property
    def n_nodes(self):
        return self.K.shape[0]


def assemble(field, grid=None):
    """Build the flux-form stiffness and diagonal mass operators from a SymbolField.

    Edge coefficients are arithmetic means of the adjacent nodes' mu * sigma*;
    the mixed sigma*_12 term uses centered cross-differences, keeping K exactly
    symmetric.  Raises SolverError if symmetry is lost.
    """
    grid = field.grid if grid is None else grid
    cell = grid.cell_area
    D = field.mu[..., None, None] * field.sigma_star
    d11 = D[..., 0, 0]
    d22 = D[..., 1, 1]
    d12 = D[..., 0, 1]

    w11 = 0.5 * (d11 + np.roll(d11, -1, axis=0)).ravel() * cell
    w22 = 0.5 * (d22 + np.roll(d22, -1, axis=1)).ravel() * cell
    w12 = d12.ravel() * cell

    ix = sparse.identity(grid.nx, format="csr")
    iy = sparse.identity(grid.ny, format="csr")
    Dx = sparse.kron(_forward_diff(grid.nx, grid.dx), iy, format="csr")
    Dy = sparse.kron(ix, _forward_diff(grid.ny, grid.dy), format="csr")
    Gx = sparse.kron(_centered_diff(grid.nx, grid.dx), iy, format="csr")
    Gy = sparse.kron(ix, _centered_diff(grid.ny, grid.dy), format="csr")

    K = (Dx.T @ sparse.diags(w11) @ Dx
         + Dy.T @ sparse.diags(w22) @ Dy)
    if np.any(w12 != 0.0):
        cross = Gx.T @ sparse.diags(w12) @ Gy
        K = K + cross + cross.T
    K = (0.5 * (K + K.T)).tocsr()
    K.eliminate_zeros()

    asym = sparse.linalg.norm(K - K.T) if K.nnz else 0.0
    scale = float(np.abs(K.data).max()) if K.nnz else 1.0
    if asym > 1e-12 * scale:
        raise SolverError(f"stiffness assembly lost symmetry: |K - K'| = {asym:.3e}")

    M = sparse.diags(field.mu.ravel() * cell)
    lambda_scale = 4.0 * np.pi**2 * float(field.sigma_min_eigenvalues().min())
    return SpectralProblem(K=K, M=M, grid=grid, lambda_scale=lambda_scale)


def solve(problem, k, method="auto", restol=1e-9, seed=0):
    """First k+1 eigenpairs of K u = lambda M u, ascending, M-orthonormal.

    method: 'dense' (direct generalized solve), 'shift-invert' (ARPACK about a
    small negative shift), or 'auto' (dense up to 48x48 grids).  Residuals
    ||K u - lambda M u|| / ||M u|| are checked against restol relative to each
    eigenvalue's own scale; lambda_0 must be a numerical zero.
    """
    n = problem.n_nodes
    if k + 1 > n:
        raise ValueError(f"requested {k + 1} eigenpairs from a {n}-node problem")
    if method == "auto":
        method = "dense" if n <= _DENSE_LIMIT else "shift-invert"

    if method == "dense":
        Kd = problem.K.toarray()
        Md = np.diag(problem.M.diagonal())
        values, vectors = scipy.linalg.eigh(Kd, Md, subset_by_index=(0, k))
    elif method == "shift-invert":
        if k + 2 >= n:
            raise ValueError("shift-invert needs k + 2 < n; use the dense method")
        sigma = -0.5 * max(problem.lambda_scale, 1e-12)
        v0 = np.random.default_rng(seed).standard_normal(n)
        try:
            values, vectors = spla.eigsh(problem.K.tocsc(), k=k + 1,
                                         M=problem.M.tocsc(), sigma=sigma,
                                         which="LM", v0=v0, tol=0)
        except spla.ArpackNoConvergence as exc:
            raise SolverError(
                f"shift-invert iteration converged only {exc.eigenvalues.size} "
                f"of {k + 1} pairs (shift {sigma:.3e}, n = {n})") from exc
    else:
        raise ValueError(f"unknown solver method {method!r}")

    order = np.argsort(values)
    values = np.asarray(values)[order]
    vectors = np.asarray(vectors)[:, order]

    KV = problem.K @ vectors
    MV = problem.M @ vectors
    num = np.linalg.norm(KV - MV * values[None, :], axis=0)
    den = np.linalg.norm(MV, axis=0)
    residuals = num / den

    ref = float(values[1]) if k >= 1 else max(float(values[0]), 1.0)
    rel = residuals / np.maximum(np.abs(values), ref)
    if float(rel.max()) > restol:
        raise SolverError(
            f"eigensolver residuals exceed tolerance: max rel residual "
            f"{rel.max():.3e} > {restol:.1e} (method {method}, n = {n})")
    if k >= 1 and abs(float(values[0])) > 1e-10 * float(values[1]):
        raise SolverError(
            f"lambda_0 = {values[0]:.3e} is not a numerical zero "
            f"(lambda_1 = {values[1]:.3e})")

    spectrum = Spectrum(values=values, vectors=vectors, residuals=residuals)
    problem.spectrum = spectrum
    return spectrum


def rayleigh(problem, f):
    """Rayleigh quotient f'Kf / f'Mf of a grid function (flat or grid-shaped)."""
    f = np.asarray(f, dtype=float).ravel()
    if f.size != problem.n_nodes:
        raise ValueError("grid function has the wrong number of nodes")
    if not np.any(f):
        raise ValueError("Rayleigh quotient of the zero function")
    return float(f @ (problem.K @ f)) / float(f @ (problem.M @ f))


def fourier_oracle(A, B, k):
    """Exact constant-coefficient spectrum: sorted {4 pi^2 (A m^2 + B n^2)}.

    Returns the first k+1 values with multiplicities, enumerating a lattice
    window large enough that no omitted mode could undercut the returned ones.
    """
    A = float(A)
    B = float(B)
    if A <= 0.0 or B <= 0.0:
        raise ValueError("oracle coefficients must be positive")
    mmax = 4
    while True:
        m = np.arange(-mmax, mmax + 1)
        vals = 4.0 * np.pi**2 * (A * m[:, None] ** 2 + B * m[None, :] ** 2)
        vals = np.sort(vals.ravel())
        outside = 4.0 * np.pi**2 * min(A, B) * (mmax + 1) ** 2
        if vals.size > k and vals[k] < outside:
            return vals[:k + 1]
        mmax *= 2


def prolong(values, fine_grid):
    """Bilinear periodic prolongation of a coarse grid function to a fine grid."""
    from .fields import Field

    x, y = fine_grid.mesh()
    return Field.from_grid(np.asarray(values, dtype=float))(x, y)


def convergence_study(spec, grid_sizes, k=1, fiber_nodes=256, reference="auto"):
    """Solve on a ladder of grids and report lambda errors and observed orders.

    reference: 'auto' uses the Fourier oracle when the symbol field is constant
    and diagonal, else the finest grid; or pass explicit (A, B).
    Rows carry n, lambdas, error and order estimates for lambda_1.
    """
    from .fiber import FiberQuadrature, SymbolField

    sizes = sorted(int(n) for n in grid_sizes)
    if len(sizes) < 3:
        raise ValueError("a convergence study needs at least 3 grid sizes")
    quad = FiberQuadrature.trapezoid(fiber_nodes)

    runs = []
    for n in sizes:
        field = SymbolField.compute(spec, TorusGrid.square(n), quad)
        spectrum = solve(assemble(field), k)
        runs.append((n, field, spectrum.values.copy()))

    oracle_vals = None
    if reference == "auto":
        field0 = runs[0][1]
        D = field0.mu[..., None, None] * field0.sigma_star
        spread = np.abs(D - D.reshape(-1, 2, 2)[0]).max()
        if spread < 1e-12 and abs(field0.sigma_star[0, 0, 0, 1]) < 1e-12:
            oracle_vals = fourier_oracle(field0.sigma_star[0, 0, 0, 0],
                                         field0.sigma_star[0, 0, 1, 1], k)
    elif reference != "finest":
        A, B = reference
        oracle_vals = fourier_oracle(A, B, k)

    ref_vals = oracle_vals if oracle_vals is not None else runs[-1][2]
    rows = []
    for idx, (n, _, vals) in enumerate(runs):
        row = {"n": n, "lambda": vals.tolist(),
               "reference": "oracle" if oracle_vals is not None else "finest"}
        if oracle_vals is not None or idx < len(runs) - 1:
            row["error_lambda1"] = abs(vals[1] - ref_vals[1]) if k >= 1 else 0.0
        rows.append(row)
    for prev, cur in zip(rows, rows[1:]):
        e0 = prev.get("error_lambda1")
        e1 = cur.get("error_lambda1")
        if e0 and e1 and cur["n"] != prev["n"]:
            span = np.log2(cur["n"] / prev["n"])
            cur["order_lambda1"] = float(np.log2(e0 / e1) / span)
    return rows
