"""
Finite metric measure spaces.

A space is a finite point set carrying a symmetric distance matrix and a
positive measure. Spaces built from weighted edge lists use the all-pairs
shortest path metric. Balls are closed: B(x, r) = {y : rho(x, y) <= r}.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from heatwave.errors import SpaceError, ValidationError

LOGGER = logging.getLogger(__name__)

# Absolute tolerance used for every ball membership decision.
BALL_TOL = 1e-12

# Largest space for which the triangle inequality is checked exhaustively.
TRIANGLE_CHECK_LIMIT = 512

Edge = Tuple[int, int, float]


@dataclass(eq=False)
class MetricMeasureSpace:
    """A finite point set with metric rho and measure mu."""
    rho: np.ndarray
    mu: np.ndarray
    provenance: str = ''
    edges: Tuple[Edge, ...] = ()
    positions: Optional[np.ndarray] = None
    _diameter: float = field(default=0.0, init=False, repr=False)

    def __post_init__(self) -> None:
        self.rho = np.array(self.rho, dtype=float)
        self.mu = np.array(self.mu, dtype=float)
        self.rho.setflags(write=False)
        self.mu.setflags(write=False)
        self._diameter = float(self.rho.max()) if self.rho.size else 0.0

    @property
    def n(self) -> int:
        """Number of points."""
        return int(self.mu.shape[0])

    @property
    def diameter(self) -> float:
        """Largest distance between two points."""
        return self._diameter

    @property
    def total_measure(self) -> float:
        """mu of the whole space."""
        return float(self.mu.sum())

    def min_positive_distance(self) -> float:
        """Smallest nonzero distance, or 0 for a single point."""
        positive = self.rho[self.rho > BALL_TOL]
        return float(positive.min()) if positive.size else 0.0

    def ball(self, x: int, r: float) -> Tuple[np.ndarray, float]:
        """Returns the indices of B(x, r) and its measure."""
        return ball(self, x, r)

    def volumes(self, r: float) -> np.ndarray:
        """mu(B(x, r)) for every point x."""
        return (self.rho <= r + BALL_TOL) @ self.mu

    def scaled(self, factor: float) -> 'MetricMeasureSpace':
        """Returns the same metric with the measure multiplied by factor."""
        if factor <= 0:
            raise ValidationError(f'measure scale must be positive, got {factor}')
        return MetricMeasureSpace(self.rho, self.mu * factor,
                                  f'{self.provenance}, measure x{factor:g}', self.edges,
                                  self.positions)

    def __repr__(self) -> str:
        return f'MetricMeasureSpace(n={self.n}, {self.provenance!r})'


@dataclass(frozen=True)
class DoublingProfile:
    """Observed doubling constant and fitted growth exponent."""
    c_doubling: float
    d_exponent: float
    radii_grid: Tuple[float, ...]

    def as_dict(self) -> Dict[str, Any]:
        """Returns a plain dictionary for reports."""
        return {
            'c_doubling': self.c_doubling,
            'd_exponent': self.d_exponent,
            'radii_grid': list(self.radii_grid),
        }


def _check_measures(measures: Sequence[float]) -> np.ndarray:
    mu = np.asarray(measures, dtype=float)
    if mu.ndim != 1 or mu.size == 0:
        raise ValidationError('measures must be a nonempty list of masses')
    bad = np.flatnonzero(~(mu > 0))
    if bad.size:
        raise ValidationError(f'mass at point {bad[0]} is {mu[bad[0]]}, must be positive')
    return mu


def build_space(edges: Sequence[Edge],
                measures: Sequence[float],
                provenance: str = '',
                positions: Optional[np.ndarray] = None) -> MetricMeasureSpace:
    """Builds a space from a weighted edge list using the shortest path metric.

    Parallel edges keep the shortest length. Every point must be reachable,
    otherwise the metric is undefined.
    """
    mu = _check_measures(measures)
    n = mu.size
    clean: List[Edge] = []
    for idx, (a, b, length) in enumerate(edges):
        a, b, length = int(a), int(b), float(length)
        if not (0 <= a < n and 0 <= b < n):
            raise ValidationError(f'edge {idx} ({a}, {b}) references a point outside 0..{n - 1}')
        if not length > 0:
            raise ValidationError(f'edge {idx} ({a}, {b}) has length {length}, must be positive')
        if a == b:
            raise ValidationError(f'edge {idx} is a loop at point {a}')
        clean.append((a, b, length))

    if n == 1:
        rho = np.zeros((1, 1))
    else:
        if not clean:
            raise SpaceError('metric undefined: graph has no edges')
        rows = [e[0] for e in clean]
        cols = [e[1] for e in clean]
        lens = [e[2] for e in clean]
        # coo -> csr sums duplicates, so collapse parallel edges first.
        best: Dict[Tuple[int, int], float] = {}
        for a, b, length in zip(rows, cols, lens):
            key = (min(a, b), max(a, b))
            best[key] = min(length, best.get(key, np.inf))
        keys = list(best)
        graph = coo_matrix(([best[k] for k in keys], ([k[0] for k in keys], [k[1] for k in keys])),
                           shape=(n, n)).tocsr()
        rho = shortest_path(graph, method='D', directed=False)
        if not np.all(np.isfinite(rho)):
            unreachable = int(np.flatnonzero(~np.isfinite(rho[0]))[0])
            raise SpaceError(f'metric undefined: point {unreachable} is not connected to point 0')
    space = MetricMeasureSpace(rho, mu, provenance, tuple(clean), positions)
    LOGGER.debug('built %r', space)
    return space


def space_from_metric(rho: np.ndarray,
                      measures: Sequence[float],
                      provenance: str = '',
                      positions: Optional[np.ndarray] = None) -> MetricMeasureSpace:
    """Builds a space from an explicit distance matrix after validating it."""
    mu = _check_measures(measures)
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (mu.size, mu.size):
        raise ValidationError(f'metric has shape {rho.shape}, expected {(mu.size, mu.size)}')
    space = MetricMeasureSpace(rho, mu, provenance, (), positions)
    validate_metric(space)
    return space


def validate_metric(space: MetricMeasureSpace, tol: float = BALL_TOL) -> None:
    """Raises SpaceError if rho is not a metric.

    Symmetry and the zero diagonal are always checked. The triangle
    inequality is checked over every triple when n <= 512.
    """
    rho = space.rho
    if not np.all(np.isfinite(rho)):
        raise SpaceError('metric has non-finite entries')
    if np.any(np.diag(rho) != 0):
        raise SpaceError('metric has a nonzero diagonal')
    if np.any(rho < 0):
        raise SpaceError('metric has negative entries')
    if not np.array_equal(rho, rho.T):
        raise SpaceError('metric is not symmetric')
    off = rho + np.eye(space.n)
    if space.n > 1 and np.any(off <= 0):
        raise SpaceError('distinct points at distance 0')
    if space.n <= TRIANGLE_CHECK_LIMIT:
        for k in range(space.n):
            via = rho[:, k, None] + rho[None, k, :]
            if np.any(rho > via + tol):
                x, y = np.argwhere(rho > via + tol)[0]
                raise SpaceError(f'triangle inequality fails for ({x}, {y}) through {k}')
    else:
        LOGGER.debug('skipping triangle inequality check for n = %d', space.n)


def ball(space: MetricMeasureSpace, x: int, r: float) -> Tuple[np.ndarray, float]:
    """Returns (members, measure) of the closed ball B(x, r)."""
    if r < 0:
        raise ValidationError(f'ball radius must be nonnegative, got {r}')
    members = np.flatnonzero(space.rho[x] <= r + BALL_TOL)
    return members, float(space.mu[members].sum())


def default_radii(space: MetricMeasureSpace, count: int = 8) -> np.ndarray:
    """Geometric radius grid from the smallest positive distance to the diameter."""
    low = space.min_positive_distance()
    if low == 0:
        return np.array([1.0])
    high = max(space.diameter, low)
    return np.geomspace(low, high, count)


def doubling_profile(space: MetricMeasureSpace,
                     radii: Optional[Sequence[float]] = None,
                     gammas: Sequence[float] = (1.0, 2.0, 4.0, 8.0)) -> DoublingProfile:
    """Measures the doubling constant and fits the volume growth exponent.

    c_doubling is the largest mu(B(x, 2r)) / mu(B(x, r)) over all points and
    grid radii. d_exponent is the least squares slope of
    log max_x,r mu(B(x, gamma r)) / mu(B(x, r)) against log(1 + gamma).
    """
    grid = default_radii(space) if radii is None else np.asarray(radii, dtype=float)
    if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValidationError('radii must be nonempty, positive and increasing')

    base = np.stack([space.volumes(r) for r in grid])
    doubled = np.stack([space.volumes(2 * r) for r in grid])
    c_doubling = float(np.max(doubled / base))

    worst = []
    for gamma in gammas:
        grown = np.stack([space.volumes(gamma * r) for r in grid])
        worst.append(float(np.max(grown / base)))
    slope = np.polyfit(np.log1p(np.asarray(gammas)), np.log(worst), 1)[0]
    d_exponent = max(float(slope), 0.0)
    LOGGER.debug('doubling profile of %r: C = %g, D = %g', space, c_doubling, d_exponent)
    return DoublingProfile(c_doubling, d_exponent, tuple(float(r) for r in grid))


# Builders for the reference spaces


def cycle(n: int, length: float = 1.0, mass: float = 1.0) -> MetricMeasureSpace:
    """Cycle C_n with uniform edge lengths and measure."""
    if n < 3:
        raise ValidationError(f'a cycle needs at least 3 points, got {n}')
    edges = [(i, (i + 1) % n, length) for i in range(n)]
    return build_space(edges, [mass] * n, f'cycle C_{n}, edges {length:g}, measure {mass:g}')


def path(n: int, length: float = 1.0, mass: float = 1.0) -> MetricMeasureSpace:
    """Path P_n with uniform edge lengths and measure."""
    if n < 1:
        raise ValidationError(f'a path needs at least 1 point, got {n}')
    edges = [(i, i + 1, length) for i in range(n - 1)]
    return build_space(edges, [mass] * n, f'path P_{n}, edges {length:g}, measure {mass:g}')


def grid(rows: int, cols: int) -> MetricMeasureSpace:
    """rows x cols lattice; point (r, c) has index r * cols + c."""
    if rows < 1 or cols < 1:
        raise ValidationError(f'grid must be at least 1x1, got {rows}x{cols}')
    edges: List[Edge] = []
    for r in range(rows):
        for c in range(cols):
            idx = r * cols + c
            if c + 1 < cols:
                edges.append((idx, idx + 1, 1.0))
            if r + 1 < rows:
                edges.append((idx, idx + cols, 1.0))
    positions = np.array([(r, c) for r in range(rows) for c in range(cols)], dtype=float)
    return build_space(edges, [1.0] * (rows * cols), f'grid {rows}x{cols}, unit edges',
                       positions)


def star(leaves: int) -> MetricMeasureSpace:
    """Star with center 0 and the given number of leaves."""
    if leaves < 1:
        raise ValidationError(f'a star needs at least one leaf, got {leaves}')
    edges = [(0, i, 1.0) for i in range(1, leaves + 1)]
    return build_space(edges, [1.0] * (leaves + 1), f'star with {leaves} leaves')


# Persistence


def space_to_dict(space: MetricMeasureSpace) -> Dict[str, Any]:
    """Returns the YAML-ready description of a space."""
    data: Dict[str, Any] = {
        'provenance': space.provenance,
        'points': [{'mass': float(m)} for m in space.mu],
    }
    if space.edges:
        data['edges'] = [[int(a), int(b), float(length)] for a, b, length in space.edges]
    else:
        data['metric'] = [[float(v) for v in row] for row in space.rho]
    return data


def space_from_dict(data: Dict[str, Any]) -> MetricMeasureSpace:
    """Inverse of space_to_dict."""
    if not isinstance(data, dict) or 'points' not in data:
        raise ValidationError("space description needs a 'points' list")
    unknown = set(data) - {'provenance', 'points', 'edges', 'metric'}
    if unknown:
        raise ValidationError(f'unknown keys in space description: {sorted(unknown)}')
    masses = [float(p['mass']) for p in data['points']]
    provenance = str(data.get('provenance', ''))
    if 'metric' in data:
        return space_from_metric(np.array(data['metric'], dtype=float), masses, provenance)
    edges = [(int(a), int(b), float(length)) for a, b, length in data.get('edges', [])]
    return build_space(edges, masses, provenance)


def save_space(space: MetricMeasureSpace, filename: str) -> None:
    """Writes a space as YAML."""
    with open(filename, 'w', encoding='utf-8') as out_file:
        yaml.safe_dump(space_to_dict(space), out_file, sort_keys=False)


def load_space(filename: str) -> MetricMeasureSpace:
    """Reads a space written by save_space."""
    with open(filename, 'r', encoding='utf-8') as in_file:
        return space_from_dict(yaml.safe_load(in_file))
