"""Parameters, tensor grids and grid functions shared by every module."""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy.special import gamma

from .errors import GridError, GridMismatchError, NumericalFailure, ParameterDomainError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FracParams:
    """Dimension, orders and the derived exponents of the quotient.

    Attributes
    ----------
    n : int
        Space dimension.
    s : float
        Order of the fractional Laplacian, in (0, 1).
    sigma : float
        Weight order, in (0, s); ``sigma == s`` only when built with
        ``allow_endpoint=True``.
    two_star_sigma : float
        Critical exponent 2n/(n - 2 sigma).
    c_s : float
        Extension constant 4^s Gamma(1+s) / (2s Gamma(1-s)).
    q_frak : float
        sigma (n - 2s) / (n - 2 sigma).
    y_frak : float
        (n - 2s) / 2, the scaling exponent of trial functions.
    """

    n: int
    s: float
    sigma: float
    two_star_sigma: float
    c_s: float
    q_frak: float
    y_frak: float
    two_star_s: float
    weight_power: float

    def as_dict(self):
        return {"n": self.n, "s": self.s, "sigma": self.sigma}


def extension_constant(s):
    return 4.0**s * gamma(1.0 + s) / (2.0 * s * gamma(1.0 - s))


def make_params(n, s, sigma, *, min_dim=2, allow_endpoint=False):
    """Validate ``(n, s, sigma)`` and compute the derived constants.

    ``min_dim=1`` admits the one-dimensional lab setting, where ``n > 2s`` is
    required so every critical exponent stays finite. ``allow_endpoint``
    admits ``sigma == s`` (unit weight).
    """
    if isinstance(n, bool) or int(n) != n:
        raise ParameterDomainError(f"dimension must be an integer, got {n!r}")
    n = int(n)
    s = float(s)
    sigma = float(sigma)
    if n < min_dim:
        raise ParameterDomainError(f"dimension n={n} below the minimum {min_dim}")
    if not 0.0 < s < 1.0:
        raise ParameterDomainError(f"order s={s} must lie in (0, 1)")
    upper_ok = sigma <= s if allow_endpoint else sigma < s
    if not (0.0 < sigma and upper_ok):
        raise ParameterDomainError(f"weight order sigma={sigma} must lie in (0, s={s})")
    if n <= 2.0 * s:
        raise ParameterDomainError(f"n={n} must exceed 2s={2 * s} for finite critical exponents")

    two_star_sigma = 2.0 * n / (n - 2.0 * sigma)
    two_star_s = 2.0 * n / (n - 2.0 * s)
    params = FracParams(
        n=n,
        s=s,
        sigma=sigma,
        two_star_sigma=two_star_sigma,
        c_s=float(extension_constant(s)),
        q_frak=sigma * (n - 2.0 * s) / (n - 2.0 * sigma),
        y_frak=(n - 2.0 * s) / 2.0,
        two_star_s=two_star_s,
        weight_power=(sigma - s) * two_star_sigma,
    )
    log.debug("params %s", params)
    return params


@dataclass(frozen=True)
class Grid:
    """Tensor grid of interior nodes of a box with Dirichlet exterior values.

    Axis ``i`` carries ``counts[i]`` nodes ``a + k h`` (k = 1..N) with
    ``h = (b - a)/(N + 1)``. When the origin would be a node, the affected
    axes are shifted by ``-h/2`` and ``offset`` records it.
    """

    bounds: Tuple[Tuple[float, float], ...]
    counts: Tuple[int, ...]
    offset: Tuple[bool, ...] = field(default=())

    def __post_init__(self):
        if not self.offset:
            object.__setattr__(self, "offset", (False,) * len(self.counts))

    @property
    def dim(self):
        return len(self.counts)

    @property
    def shape(self):
        return tuple(self.counts)

    @property
    def size(self):
        return int(np.prod(self.counts))

    @property
    def origin_policy(self):
        return "offset" if any(self.offset) else "none"

    @cached_property
    def h(self):
        return tuple((b - a) / (N + 1) for (a, b), N in zip(self.bounds, self.counts))

    @cached_property
    def axes(self):
        axes = []
        for (a, _), N, h, off in zip(self.bounds, self.counts, self.h, self.offset):
            x = a + h * np.arange(1, N + 1)
            axes.append(x - 0.5 * h if off else x)
        return tuple(axes)

    @cached_property
    def nodes(self):
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def physical_nodes(self):
        return self.nodes

    @property
    def cell_volume(self):
        return float(np.prod(self.h))

    @cached_property
    def weights(self):
        return np.full(self.size, self.cell_volume)

    @cached_property
    def radius(self):
        """Distance to the origin in physical coordinates, clamped below by min(h)/2."""
        r = np.linalg.norm(self.physical_nodes, axis=1)
        return np.maximum(r, 0.5 * min(self.h))

    @property
    def volume(self):
        return float(np.prod([b - a for a, b in self.bounds]))

    @property
    def domain_bounds(self):
        """Box whose faces carry the exterior zeros (shifted with the offset)."""
        return tuple(
            (a - 0.5 * h, b - 0.5 * h) if off else (a, b)
            for (a, b), h, off in zip(self.bounds, self.h, self.offset)
        )

    def trapezoid_volume(self):
        """Sum of closed-box trapezoid weights, boundary nodes included."""
        total = np.ones(())
        for N, h in zip(self.counts, self.h):
            w = np.full(N + 2, h)
            w[[0, -1]] = 0.5 * h
            total = np.multiply.outer(total, w)
        return float(total.sum())

    def conductivity(self):
        """Coefficient tensor of the Dirichlet form; None means the identity."""
        return None

    def inner(self, u, v):
        return float(np.dot(self.weights * u, v))


def make_grid(spec, resolution, origin_policy="auto"):
    """Build a grid on the box ``spec`` (sequence of (a, b) pairs).

    ``origin_policy`` is ``"auto"`` (offset only when the origin would be a
    node), ``"offset"`` (always shift axes that contain 0) or ``"none"``.
    """
    bounds = tuple((float(a), float(b)) for a, b in spec)
    if not 1 <= len(bounds) <= 2:
        raise GridError(f"grids are 1- or 2-dimensional, got {len(bounds)} axes")
    if np.isscalar(resolution):
        counts = (int(resolution),) * len(bounds)
    else:
        counts = tuple(int(c) for c in resolution)
    if len(counts) != len(bounds):
        raise GridError("one resolution per axis is required")
    for (a, b), N in zip(bounds, counts):
        if N <= 0:
            raise GridError(f"resolution must be positive, got {N}")
        if N < 3:
            raise GridError(f"at least 3 nodes per axis are required, got {N}")
        if not (np.isfinite(a) and np.isfinite(b)) or b <= a:
            raise GridError(f"bounded box with a < b required, got ({a}, {b})")

    hs = [(b - a) / (N + 1) for (a, b), N in zip(bounds, counts)]
    hits = []
    for (a, b), N, h in zip(bounds, counts, hs):
        k = -a / h
        hits.append(a < 0.0 < b and abs(k - round(k)) < 1e-9 and 1 <= round(k) <= N)
    if origin_policy == "none":
        offset = (False,) * len(bounds)
    elif origin_policy == "offset":
        offset = tuple(a < 0.0 < b for a, b in bounds)
    elif origin_policy == "auto":
        offset = tuple(hits) if all(hits) else (False,) * len(bounds)
    else:
        raise GridError(f"unknown origin policy {origin_policy!r}")
    grid = Grid(bounds=bounds, counts=counts, offset=offset)
    log.debug("grid %s counts=%s policy=%s", bounds, counts, grid.origin_policy)
    return grid


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real values, one per interior node of ``grid``."""

    grid: object
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).ravel()
        if values.size != self.grid.size:
            raise GridMismatchError(
                f"{values.size} values for a grid with {self.grid.size} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise NumericalFailure("grid function has non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, grid, f: Callable):
        coords = [grid.nodes[:, i] for i in range(grid.nodes.shape[1])]
        return cls(grid, f(*coords))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.size))

    def norm(self):
        return float(np.sqrt(self.grid.inner(self.values, self.values)))

    def reshaped(self):
        return self.values.reshape(self.grid.shape)

    def with_values(self, values):
        return GridFunction(self.grid, values)

    def __abs__(self):
        return self.with_values(np.abs(self.values))

    def __mul__(self, c):
        return self.with_values(c * self.values)

    __rmul__ = __mul__

    def __add__(self, other):
        check_same_grid(self, other)
        return self.with_values(self.values + other.values)


def check_same_grid(*functions):
    grid = functions[0].grid
    for f in functions[1:]:
        if f.grid is not grid and f.grid != grid:
            raise GridMismatchError("grid functions live on different grids")
    return grid


def check_nodes(values: Sequence[float], name="t_nodes"):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ParameterDomainError(f"{name} must be a non-empty 1-D sequence")
    return arr
