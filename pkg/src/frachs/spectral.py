"""
Discrete Dirichlet Laplacian and the fractional calculus built on its spectrum.

The stencils follow the classical node-centred construction: the 1-D matrix
``spdiags([1, -2, 1])`` with exterior zeros, tensorised with ``kron`` in 2-D.
Grids that carry a conductivity tensor (flattened curved domains) get the
symmetric form ``D^T K D`` instead.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .core import GridFunction
from .errors import EigenSolverError, GridMismatchError, ParameterDomainError, TruncationError
from .infrastructure.config import (
    DENSE_LIMIT,
    EIGEN_RESIDUAL_TOL,
    ORTHONORMALITY_TOL,
    TAIL_MASS_TOL,
    TORUS_FACTOR,
)

log = logging.getLogger(__name__)


def lap1d(n):
    v = np.ones(n)
    return sparse.spdiags([v, -2 * v, v], [-1, 0, 1], n, n)


def edge_difference(n):
    """(n+1) x n differences across every edge, exterior values zero."""
    v = np.ones(n + 1)
    return sparse.spdiags([-v, v], [-1, 0], n + 1, n)


def one_sided_differences(n):
    v = np.ones(n)
    forward = sparse.spdiags([-v, v], [0, 1], n, n)
    backward = sparse.spdiags([-v, v], [-1, 0], n, n)
    return forward, backward


@dataclass(frozen=True, eq=False)
class DirichletOperator:
    """Symmetric positive definite stencil with homogeneous exterior values."""

    grid: object
    matrix: sparse.csr_matrix

    @property
    def size(self):
        return self.matrix.shape[0]

    def apply(self, values):
        return self.matrix @ values


def _axis_operator(block, axis, counts):
    eyes = [sparse.identity(c, format="csr") for c in counts]
    eyes[axis] = block
    out = eyes[0]
    for m in eyes[1:]:
        out = sparse.kron(out, m, format="csr")
    return out


def _constant_laplacian(grid):
    matrix = None
    for axis, (N, h) in enumerate(zip(grid.counts, grid.h)):
        term = _axis_operator(-lap1d(N) / h**2, axis, grid.counts)
        matrix = term if matrix is None else matrix + term
    return matrix.tocsr()


def _edge_midpoints(grid, axis):
    """Coordinates of the edge midpoints along ``axis`` for every transverse node."""
    axes = list(grid.axes)
    x = axes[axis]
    h = grid.h[axis]
    axes[axis] = np.concatenate([[x[0] - 0.5 * h], x + 0.5 * h])
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _variable_laplacian(grid, conductivity):
    """Symmetric form D^T K D on a 2-D grid with tensor coefficients."""
    if grid.dim != 2:
        raise ParameterDomainError("tensor coefficients are supported on 2-D grids only")
    N0, N1 = grid.counts
    h0, h1 = grid.h
    # edge operators are (N0+1) x N1 resp. N0 x (N1+1) blocks flattened in C order
    gx = sparse.kron(edge_difference(N0), sparse.identity(N1), format="csr") / h0
    gy = sparse.kron(sparse.identity(N0), edge_difference(N1), format="csr") / h1
    k11, _, _ = conductivity(_edge_midpoints(grid, 0))
    _, _, k22 = conductivity(_edge_midpoints(grid, 1))
    matrix = gx.T @ sparse.diags(k11) @ gx + gy.T @ sparse.diags(k22) @ gy

    _, k12, _ = conductivity(grid.nodes)
    f0, b0 = one_sided_differences(N0)
    f1, b1 = one_sided_differences(N1)
    coupling = sparse.diags(k12)
    cross = None
    for dx in (f0, b0):
        for dy in (f1, b1):
            ddx = sparse.kron(dx, sparse.identity(N1), format="csr") / h0
            ddy = sparse.kron(sparse.identity(N0), dy, format="csr") / h1
            term = ddx.T @ coupling @ ddy
            term = term + term.T
            cross = term if cross is None else cross + term
    return (matrix + 0.25 * cross).tocsr()


def dirichlet_laplacian(grid):
    """Finite-difference Dirichlet Laplacian on ``grid`` (3-point / 5-point)."""
    conductivity = grid.conductivity()
    if conductivity is None:
        matrix = _constant_laplacian(grid)
    else:
        matrix = _variable_laplacian(grid, conductivity)
    log.debug("Dirichlet operator of size %d (nnz=%d)", matrix.shape[0], matrix.nnz)
    return DirichletOperator(grid=grid, matrix=matrix)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenpairs of a Dirichlet operator, orthonormal in the grid inner product."""

    grid: object
    lambdas: np.ndarray
    phis: np.ndarray
    operator_size: int
    operator: object = None

    @property
    def count(self):
        return self.lambdas.size

    @property
    def complete(self):
        return self.count == self.operator_size

    def coefficients(self, values):
        return self.phis.T @ (self.grid.weights * values)

    def synthesize(self, coefficients):
        return self.phis @ coefficients

    def apply_power(self, values, power):
        c = self.coefficients(values)
        return self.synthesize(self.lambdas**power * c)

    def quadratic_form(self, values, power):
        c = self.coefficients(values)
        return float(np.sum(self.lambdas**power * c**2))

    def tail_mass(self, values):
        """Squared grid norm of ``values`` not captured by the retained modes."""
        c = self.coefficients(values)
        return max(self.grid.inner(values, values) - float(np.sum(c**2)), 0.0)


def _check_pairs(op, lambdas, vectors):
    if lambdas[0] <= 0.0:
        raise EigenSolverError(f"operator is not positive definite (lambda_1={lambdas[0]:.3e})")
    if np.any(np.diff(lambdas) < -1e-12 * abs(lambdas[-1])):
        raise EigenSolverError("eigenvalues are not sorted")
    residual = op.matrix @ vectors - vectors * lambdas
    res = np.linalg.norm(residual, axis=0)
    worst = np.max(res / lambdas)
    if worst > EIGEN_RESIDUAL_TOL:
        raise EigenSolverError(f"eigen-residual {worst:.3e} above {EIGEN_RESIDUAL_TOL}")
    gram = vectors.T @ vectors
    drift = np.max(np.abs(gram - np.eye(gram.shape[0])))
    if drift > ORTHONORMALITY_TOL:
        raise EigenSolverError(f"eigenvectors lost orthonormality ({drift:.3e})")


def eigenpairs(op, k=None):
    """Lowest ``k`` eigenpairs of ``op`` (all of them when ``k`` is None).

    Dense symmetric solves up to ``DENSE_LIMIT`` unknowns; shift-invert
    Lanczos above that when only part of the spectrum is requested.
    """
    size = op.size
    k = size if k is None else int(k)
    if not 1 <= k <= size:
        raise ParameterDomainError(f"cannot retain {k} eigenpairs of a {size}x{size} operator")

    if size <= DENSE_LIMIT or k == size:
        try:
            lambdas, vectors = linalg.eigh(op.matrix.toarray(), subset_by_index=[0, k - 1])
        except linalg.LinAlgError as e:
            raise EigenSolverError(f"dense eigensolver failed: {e}") from e
    else:
        try:
            lambdas, vectors = eigsh(op.matrix.tocsc(), k=k, sigma=0.0, which="LM")
        except ArpackNoConvergence as e:
            raise EigenSolverError(
                "Lanczos iteration did not converge",
                iterations=getattr(e, "iterations", None),
                converged=len(e.eigenvalues),
            ) from e
        order = np.argsort(lambdas)
        lambdas, vectors = lambdas[order], vectors[:, order]

    _check_pairs(op, lambdas, vectors)
    # fix signs: largest entry of each eigenvector positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    vectors = vectors * np.where(signs == 0, 1.0, signs)

    phis = vectors / np.sqrt(op.grid.weights)[:, None]
    log.info("eigenpairs: %d of %d, lambda_1=%.6g lambda_k=%.6g", k, size, lambdas[0], lambdas[-1])
    return SpectralDecomposition(
        grid=op.grid, lambdas=lambdas, phis=phis, operator_size=size, operator=op
    )


def _check_on(dec, u):
    if u.grid is not dec.grid and u.grid != dec.grid:
        raise GridMismatchError("function and decomposition live on different grids")


def check_retained(dec, u):
    """Reject ``u`` when too much of it lies beyond the retained modes."""
    _check_on(dec, u)
    if not dec.complete:
        tail = dec.tail_mass(u.values)
        total = u.norm() ** 2
        if tail > TAIL_MASS_TOL * max(total, np.finfo(float).tiny):
            raise TruncationError(
                f"{tail / total:.3e} of the squared norm lies beyond {dec.count} retained modes"
            )


def spectral_form(dec, u, s):
    """<(-Delta)^s_Sp u, u> = sum_j lambda_j^s <u, phi_j>^2."""
    check_retained(dec, u)
    return dec.quadratic_form(u.values, s)


def riesz_form(u, s, torus_factor=TORUS_FACTOR):
    """Whole-space form int |xi|^{2s} |F u|^2 via zero padding on a larger torus."""
    if torus_factor < 2:
        raise ParameterDomainError(f"torus_factor={torus_factor} < 2 lets periodization dominate")
    grid = u.grid
    shape = tuple(int(torus_factor) * (N + 1) for N in grid.counts)
    padded = np.zeros(shape)
    padded[tuple(slice(1, N + 1) for N in grid.counts)] = u.reshaped()

    u_hat = np.fft.fftn(padded) * grid.cell_volume
    freqs = [2.0 * np.pi * np.fft.fftfreq(M, d=h) for M, h in zip(shape, grid.h)]
    mesh = np.meshgrid(*freqs, indexing="ij")
    xi2 = sum(m**2 for m in mesh)
    torus_volume = float(np.prod([M * h for M, h in zip(shape, grid.h)]))
    return float(np.sum(xi2**s * np.abs(u_hat) ** 2) / torus_volume)


def weighted_norm(u, p):
    """|| |x|^{sigma-s} u ||_{L_{2*_sigma}} with the origin-clamped radius."""
    grid = u.grid
    q = p.two_star_sigma
    density = grid.weights * grid.radius**p.weight_power * np.abs(u.values) ** q
    return float(np.sum(density) ** (1.0 / q))


def rayleigh_quotient(dec, u, p):
    if not np.any(u.values):
        raise ParameterDomainError("the quotient is undefined for u = 0")
    return spectral_form(dec, u, p.s) / weighted_norm(u, p) ** 2


def max_principle_margin(dec, f, s):
    """min_x A^{-s} f; nonnegative whenever f >= 0 (discrete maximum principle)."""
    _check_on(dec, f)
    return float(np.min(dec.apply_power(f.values, -s)))


def bump(x, center, width):
    r = (x - center) / width
    out = np.zeros_like(x)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


def random_bumps(grid, count, rng, width_range=(0.1, 0.22), margin=0.06, amplitude_decades=4):
    """Seeded smooth bumps compactly supported inside the grid box."""
    functions = []
    for _ in range(count):
        values = np.ones(grid.size)
        for axis, (a, b) in enumerate(grid.domain_bounds):
            length = b - a
            width = rng.uniform(*width_range) * length
            lo = a + margin * length + width
            hi = b - margin * length - width
            center = rng.uniform(lo, hi)
            values *= bump(grid.nodes[:, axis], center, width)
        amplitude = 10.0 ** rng.uniform(-amplitude_decades, 0.0)
        functions.append(GridFunction(grid, amplitude * values))
    return functions

