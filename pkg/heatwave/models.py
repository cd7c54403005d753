"""
Reference models: magnetic Schrodinger operators, graph Hodge complexes and
the spectral model of the unit sphere, with the checks that exercise them.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from heatwave.bundle_op import (BundleOperator, SpectralDecomposition, apply_values, laplacian,
                                spectral_decompose)
from heatwave.check_report import CheckReport
from heatwave.cz_riesz import LocalOperator, lp_norm_estimate
from heatwave.errors import ValidationError
from heatwave.space import BALL_TOL, MetricMeasureSpace, build_space, space_from_metric

LOGGER = logging.getLogger(__name__)

PHASE_TOL = 1e-12

# Magnetic Schrodinger operators


@dataclass(eq=False)
class MagneticSchrodinger:
    """L_{Y,V}: edge phases theta_ab (theta_ba = -theta_ab) and a potential V >= 0.

    The quadratic form is
    sum_e w_e |f(a) - e^{i theta_e} f(b)|^2 + sum_x V(x)^2 |f(x)|^2 mu(x)
    with w_e = 1 / length^2.
    """
    space: MetricMeasureSpace
    phases: np.ndarray
    potential: np.ndarray
    operator: BundleOperator

    def quadratic_form(self, section: np.ndarray) -> float:
        """Direct edge-by-edge evaluation of the form."""
        f = np.asarray(section)
        total = float(np.sum(self.potential**2 * np.abs(f)**2 * self.space.mu))
        for (a, b, length), theta in zip(self.space.edges, self.phases):
            total += abs(f[a] - np.exp(1j * theta) * f[b])**2 / length**2
        return total


def _edge_phases(space: MetricMeasureSpace, phases) -> np.ndarray:
    """Per-edge phases from a per-edge list or an antisymmetric n x n matrix."""
    if phases is None:
        return np.zeros(len(space.edges))
    values = np.asarray(phases, dtype=float)
    if values.shape == (len(space.edges),):
        return values
    if values.shape != (space.n, space.n):
        raise ValidationError(f'phases must have one value per edge ({len(space.edges)}) '
                              f'or be an n x n matrix, got shape {values.shape}')
    wrapped = np.angle(np.exp(1j * (values + values.T)))
    if np.abs(wrapped).max() > PHASE_TOL:
        a, b = np.argwhere(np.abs(wrapped) > PHASE_TOL)[0]
        raise ValidationError(f'phases are not antisymmetric at ({a}, {b})')
    return np.array([values[a, b] for a, b, _ in space.edges])


def build_magnetic(space: MetricMeasureSpace,
                   phases=None,
                   potential: Optional[Sequence[float]] = None) -> MagneticSchrodinger:
    """Assembles L_{Y,V} as a BundleOperator with l = 1."""
    if not space.edges:
        raise ValidationError('magnetic operators need a space built from edges')
    theta = _edge_phases(space, phases)
    values = np.zeros(space.n) if potential is None else np.asarray(potential, dtype=float)
    if values.shape != (space.n,):
        raise ValidationError(f'potential has shape {values.shape}, expected ({space.n},)')
    if np.any(values < 0):
        bad = int(np.flatnonzero(values < 0)[0])
        raise ValidationError(f'potential is negative at point {bad}; the form uses V^2, '
                              'pass V >= 0')
    form = np.zeros((space.n, space.n), dtype=complex)
    for (a, b, length), angle in zip(space.edges, theta):
        w = 1.0 / length**2
        form[a, a] += w
        form[b, b] += w
        form[a, b] -= w * np.exp(1j * angle)
        form[b, a] -= w * np.exp(-1j * angle)
    form += np.diag(values**2 * space.mu)
    matrix = form / space.mu[:, None]
    if not np.any(theta):
        matrix = matrix.real
    op = BundleOperator(space, matrix, 1, 1, 'magnetic schrodinger')
    return MagneticSchrodinger(space, theta, values, op)


def gauge_transform(ms: MagneticSchrodinger, gauge: Sequence[float]) -> MagneticSchrodinger:
    """Conjugates by the vertex phase field e^{i gauge}; spectrum and |kernel| are unchanged."""
    gauge = np.asarray(gauge, dtype=float)
    if gauge.shape != (ms.space.n,):
        raise ValidationError(f'gauge has shape {gauge.shape}, expected ({ms.space.n},)')
    theta = np.array([angle + gauge[b] - gauge[a]
                      for (a, b, _), angle in zip(ms.space.edges, ms.phases)])
    return build_magnetic(ms.space, theta, ms.potential)


def random_phases(space: MetricMeasureSpace, seed: int = 0) -> np.ndarray:
    """Uniform phases in [0, 2 pi), one per edge."""
    return np.random.default_rng(seed).uniform(0, 2 * math.pi, len(space.edges))


def covariant_gradient(ms: MagneticSchrodinger) -> LocalOperator:
    """(f(a) - e^{i theta} f(b)) / length on each edge; L_{Y,0} = grad* grad."""
    space = ms.space
    m = len(space.edges)
    matrix = np.zeros((m, space.n), dtype=complex)
    distance = np.zeros((m, space.n))
    half = 0.0
    for idx, ((a, b, length), theta) in enumerate(zip(space.edges, ms.phases)):
        matrix[idx, a] = 1.0 / length
        matrix[idx, b] = -np.exp(1j * theta) / length
        distance[idx] = np.minimum(space.rho[a], space.rho[b]) + length / 2
        half = max(half, length / 2)
    if not np.any(ms.phases):
        matrix = matrix.real
    return LocalOperator(space, matrix, distance, np.ones(m), half, 1, 'covariant gradient')


def domination_check(ms: MagneticSchrodinger,
                     t_grid: Sequence[float] = (0.1, 1.0, 10.0),
                     tolerance: float = 1e-12) -> CheckReport:
    """|K_exp(-t L_{Y,V})(x, y)| <= K_exp(-t L_{0,0})(x, y) at every entry."""
    times = np.asarray(t_grid, dtype=float)
    if times.size == 0 or np.any(times <= 0):
        raise ValidationError('t_grid must be nonempty and positive')
    space = ms.space
    dec = spectral_decompose(ms.operator)
    free = spectral_decompose(laplacian(space))
    rows = []
    exceedance = -math.inf
    margin = math.inf
    for t in times:
        magnetic = np.abs(apply_values(dec, np.exp(-t * dec.eigenvalues))) / space.mu[None, :]
        plain = np.real(apply_values(free, np.exp(-t * free.eigenvalues))) / space.mu[None, :]
        gap = magnetic - plain
        worst = float(gap.max())
        # relative margin over entries that carry information
        significant = plain > 1e-8 * plain.max()
        slack = float(np.min(-gap[significant] / plain[significant]))
        exceedance = max(exceedance, worst)
        margin = min(margin, slack)
        rows.append({'t': float(t), 'exceedance': worst, 'margin': slack})
    passed = exceedance <= tolerance
    LOGGER.info('domination: exceedance %.3g, margin %.3g', exceedance, margin)
    return CheckReport('domination',
                       'domination of the magnetic heat kernel', {'t_grid': times.tolist()},
                       exceedance,
                       tolerance,
                       passed,
                       rows=rows,
                       details={'margin': margin})


# Energy decay


def lipschitz_constant(space: MetricMeasureSpace, xi: np.ndarray) -> float:
    """max over edges of |xi(a) - xi(b)| / length."""
    return max((abs(xi[a] - xi[b]) / length for a, b, length in space.edges), default=0.0)


def _growth_rate(dec: SpectralDecomposition, xi: np.ndarray, columns: np.ndarray,
                 times: np.ndarray) -> Tuple[float, List[float]]:
    """max_t ln ||e^{xi/2} e^{-tL} e^{-xi/2} P_B||^2 / t in the mu-weighted norm."""
    l = dec.l
    root = np.sqrt(dec.operator.weights)
    up = np.repeat(np.exp(xi / 2), l) * root
    down = np.repeat(np.exp(-xi / 2), l) / root
    rates = []
    for t in times:
        heat = apply_values(dec, np.exp(-t * dec.eigenvalues))
        scaled = up[:, None] * heat[:, columns] * down[None, columns]
        sigma = float(np.linalg.norm(scaled, 2))
        rates.append(2 * math.log(sigma) / t)
    return max(max(rates), 0.0), rates


def energy_decay_check(model: Union[MagneticSchrodinger, BundleOperator],
                       xi: Sequence[float],
                       kappa: Optional[float] = None,
                       t_grid: Sequence[float] = (1e-3, 1e-2, 0.1, 1.0),
                       ball: Optional[Tuple[int, float]] = None,
                       rescale_levels: Sequence[float] = (0.5, 0.25),
                       continuum_tolerance: Optional[float] = 0.15) -> CheckReport:
    """Growth of E(t) = int |e^{-tL} w|^2 e^xi dmu over initial data in a ball.

    The fitted rate c must stay below the discrete bound
    2 max_e (cosh(|d xi_e| / 2) - 1) max_x deg_w(x) / mu(x), and c / (kappa^2 / 2)
    must approach 1 as xi is scaled down. Edge weights are 1 / length^2.
    """
    op = model.operator if isinstance(model, MagneticSchrodinger) else model
    space = op.space
    if not space.edges:
        raise ValidationError('energy decay needs a space built from edges')
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (space.n,):
        raise ValidationError(f'xi has shape {xi.shape}, expected ({space.n},)')
    measured = lipschitz_constant(space, xi)
    if kappa is None:
        kappa = measured
    for a, b, length in space.edges:
        if abs(xi[a] - xi[b]) > kappa * length + 1e-12:
            raise ValidationError(f'xi is not {kappa:g}-Lipschitz on edge ({a}, {b}): '
                                  f'|{xi[a]:g} - {xi[b]:g}| > {kappa * length:g}')
    times = np.asarray(t_grid, dtype=float)
    if times.size == 0 or np.any(times <= 0):
        raise ValidationError('t_grid must be nonempty and positive')
    center, radius = (0, space.diameter) if ball is None else ball
    members = np.flatnonzero(space.rho[center] <= radius + BALL_TOL)
    columns = (members[:, None] * op.l + np.arange(op.l)[None, :]).reshape(-1)

    degree = np.zeros(space.n)
    for a, b, length in space.edges:
        degree[a] += 1 / length**2
        degree[b] += 1 / length**2
    max_degree = float(np.max(degree / space.mu))

    def bound(field: np.ndarray) -> float:
        worst = max(math.cosh(abs(field[a] - field[b]) / 2) - 1 for a, b, _ in space.edges)
        return 2 * worst * max_degree

    dec = spectral_decompose(op)
    rate, rates = _growth_rate(dec, xi, columns, times)
    limit = bound(xi)
    bound_ok = rate <= limit * (1 + 1e-9) + 1e-9
    rows = [{'t': float(t), 'rate': r, 'scale': 1.0} for t, r in zip(times, rates)]

    ratios: Dict[str, float] = {}
    continuum_ok = True
    if kappa > 0:
        for level in rescale_levels:
            scaled_rate, scaled_rates = _growth_rate(dec, level * xi, columns, times)
            ratio = scaled_rate / ((level * kappa)**2 / 2)
            ratios[f'{level:g}'] = ratio
            rows.extend({'t': float(t), 'rate': r, 'scale': float(level)}
                        for t, r in zip(times, scaled_rates))
            if continuum_tolerance is not None and abs(ratio - 1) > continuum_tolerance:
                continuum_ok = False
    passed = bound_ok and continuum_ok
    LOGGER.info('energy decay: rate %.6g, discrete bound %.6g, kappa^2/2 %.6g', rate, limit,
                kappa**2 / 2)
    return CheckReport('energy_decay',
                       'weighted energy growth along the heat flow', {
                           't_grid': times.tolist(),
                           'kappa': kappa,
                           'ball': [int(center), float(radius)],
                           'rescale_levels': list(rescale_levels)
                       },
                       rate,
                       limit,
                       passed,
                       rows=rows,
                       details={
                           'continuum_rate': kappa**2 / 2,
                           'measured_lipschitz': measured,
                           'rescaled_ratios': ratios,
                           'bound_ok': bound_ok,
                           'continuum_ok': continuum_ok,
                       })


def tent_weight(space: MetricMeasureSpace, kappa: float, apex: int = 0) -> np.ndarray:
    """xi(x) = kappa * rho(x, apex), kappa-Lipschitz for every metric."""
    return kappa * np.array(space.rho[apex])


# Hodge complexes


@dataclass(eq=False)
class HodgeComplex:  # pylint: disable=too-many-instance-attributes
    """Vertices, oriented edges and triangles of a simplicial 2-complex.

    d0[e, a] = -1 and d0[e, b] = +1 for e = (a, b); d1[t, e] is the sign of e
    in the oriented boundary of t.
    """
    edges: List[Tuple[int, int]]
    triangles: List[Tuple[int, int, int]]
    d0: np.ndarray
    d1: np.ndarray
    vertex_space: MetricMeasureSpace
    edge_space: MetricMeasureSpace
    l0: BundleOperator
    l1: BundleOperator

    @property
    def n(self) -> int:
        """Number of vertices."""
        return self.d0.shape[1]


def _edge_metric(vertex_space: MetricMeasureSpace, edges: Sequence[Tuple[int, int]]) -> np.ndarray:
    """Distances between edge midpoints in the unit-length metric graph."""
    ends = np.array(edges)
    rho = vertex_space.rho
    best = np.minimum.reduce([
        rho[np.ix_(ends[:, i], ends[:, j])] for i in (0, 1) for j in (0, 1)
    ])
    metric = best + 1.0
    np.fill_diagonal(metric, 0.0)
    return metric


def build_hodge(n: int,
                edges: Sequence[Tuple[int, int]],
                triangles: Sequence[Tuple[int, int, int]] = (),
                require_coherent: bool = True) -> HodgeComplex:
    """Assembles d0, d1, L0 = d0^T d0 and L1 = d0 d0^T + d1^T d1 with unit weights.

    A triangle (a, b, c) has boundary a -> b -> c -> a; each side must be an
    edge in either orientation. With require_coherent, triangles sharing an
    edge must traverse it in opposite directions.
    """
    edges = [(int(a), int(b)) for a, b in edges]
    index: Dict[Tuple[int, int], int] = {}
    for idx, (a, b) in enumerate(edges):
        if a == b or not (0 <= a < n and 0 <= b < n):
            raise ValidationError(f'edge {idx} ({a}, {b}) is not an edge between two of {n} points')
        if (a, b) in index or (b, a) in index:
            raise ValidationError(f'edge ({a}, {b}) is listed twice')
        index[(a, b)] = idx
    d0 = np.zeros((len(edges), n))
    for idx, (a, b) in enumerate(edges):
        d0[idx, a] = -1.0
        d0[idx, b] = 1.0

    d1 = np.zeros((len(triangles), len(edges)))
    for t_idx, tri in enumerate(triangles):
        a, b, c = (int(v) for v in tri)
        if len({a, b, c}) < 3:
            raise ValidationError(f'triangle {t_idx} {tri} is degenerate')
        for u, v in ((a, b), (b, c), (c, a)):
            if (u, v) in index:
                d1[t_idx, index[(u, v)]] = 1.0
            elif (v, u) in index:
                d1[t_idx, index[(v, u)]] = -1.0
            else:
                raise ValidationError(f'triangle {t_idx} {tri} uses missing edge ({u}, {v})')
    if require_coherent and len(triangles):
        for e_idx in range(len(edges)):
            signs = d1[:, e_idx][d1[:, e_idx] != 0]
            if signs.size > 2 or (signs.size == 2 and signs.sum() != 0):
                raise ValidationError(f'inconsistent orientation: edge {edges[e_idx]} is '
                                      'traversed the same way by two triangles')

    vertex_space = build_space([(a, b, 1.0) for a, b in edges], np.ones(n),
                               f'hodge complex with {n} vertices')
    edge_space = space_from_metric(_edge_metric(vertex_space, edges), np.ones(len(edges)),
                                   f'edge midpoints of a {len(edges)}-edge complex')
    l0 = BundleOperator(vertex_space, d0.T @ d0, 1, 1, 'hodge L0')
    l1 = BundleOperator(edge_space, d0 @ d0.T + d1.T @ d1, 1, 2, 'hodge L1')
    LOGGER.debug('hodge complex: %d vertices, %d edges, %d triangles', n, len(edges),
                 len(triangles))
    return HodgeComplex(edges, [tuple(int(v) for v in tri) for tri in triangles], d0, d1,
                        vertex_space, edge_space, l0, l1)


def k3_complex(with_face: bool = True) -> HodgeComplex:
    """The triangle K3, optionally with its 2-cell."""
    triangles = [(0, 1, 2)] if with_face else []
    return build_hodge(3, [(0, 1), (1, 2), (0, 2)], triangles)


def grid_complex(rows: int, cols: int, seed: int = 0) -> HodgeComplex:
    """rows x cols unit squares, each cut along a random diagonal into two triangles.

    Edge orientations are random; triangles are counterclockwise, hence
    coherent.
    """
    if rows < 1 or cols < 1:
        raise ValidationError(f'grid complex needs at least one square, got {rows}x{cols}')
    rng = np.random.default_rng(seed)
    width = cols + 1

    def vertex(r: int, c: int) -> int:
        return r * width + c

    sides = []
    for r in range(rows + 1):
        for c in range(cols + 1):
            if c < cols:
                sides.append((vertex(r, c), vertex(r, c + 1)))
            if r < rows:
                sides.append((vertex(r, c), vertex(r + 1, c)))
    triangles = []
    for r in range(rows):
        for c in range(cols):
            p00, p01 = vertex(r, c), vertex(r, c + 1)
            p10, p11 = vertex(r + 1, c), vertex(r + 1, c + 1)
            if rng.random() < 0.5:
                sides.append((p00, p11))
                triangles.extend([(p00, p01, p11), (p00, p11, p10)])
            else:
                sides.append((p01, p10))
                triangles.extend([(p00, p01, p10), (p01, p11, p10)])
    flips = rng.random(len(sides)) < 0.5
    edges = [(b, a) if flip else (a, b) for (a, b), flip in zip(sides, flips)]
    return build_hodge((rows + 1) * width, edges, triangles)


def pseudo_inverse_root(op: BundleOperator, rel_tol: float = 1e-9) -> np.ndarray:
    """L^{-1/2} on (ker L)^perp and zero on ker L."""
    dec = spectral_decompose(op)
    cutoff = rel_tol * max(dec.spectral_radius, 1.0)
    values = np.zeros_like(dec.eigenvalues)
    keep = dec.eigenvalues > cutoff
    values[keep] = dec.eigenvalues[keep]**-0.5
    return np.real_if_close(apply_values(dec, values))


def commutation_check(hc: HodgeComplex, p: float = 2.0, seed: int = 0) -> CheckReport:
    """Intertwining of the Hodge Laplacians and the dual Riesz transforms.

    (i) d0 L0 = L1 d0; (ii) d0^T L1^{-1/2} = L0^{-1/2} d0^T; (iii) the norms of
    d0 L0^{-1/2} and d0^T L1^{-1/2} agree. For p != 2 the p and p' norms are
    estimated and reported.
    """
    d0 = hc.d0
    l0 = hc.l0.matrix
    l1 = hc.l1.matrix
    scale = max(1.0, float(np.linalg.norm(d0, 2) * np.linalg.norm(l0, 2)))
    identity = float(np.linalg.norm(d0 @ l0 - l1 @ d0)) / scale
    complex_residual = float(np.abs(hc.d1 @ d0).max()) if hc.d1.size else 0.0

    root0 = pseudo_inverse_root(hc.l0)
    root1 = pseudo_inverse_root(hc.l1)
    riesz = d0 @ root0
    dual = d0.T @ root1
    intertwining = float(np.linalg.norm(dual - root0 @ d0.T, 2))
    norm_riesz = float(np.linalg.norm(riesz, 2))
    norm_dual = float(np.linalg.norm(dual, 2))
    duality = abs(norm_riesz - norm_dual)

    details = {
        'boundary_residual': complex_residual,
        'norm_riesz': norm_riesz,
        'norm_dual': norm_dual,
    }
    if p != 2:
        # ||T||_{p' -> p'} = ||T^T||_{p -> p}
        details['lp_riesz'] = lp_norm_estimate(riesz, p, seed)
        details['lp_dual'] = lp_norm_estimate(dual.T, p, seed)
    passed = identity <= 1e-10 and intertwining <= 1e-8 and duality <= 1e-8 \
        and complex_residual == 0
    LOGGER.info('hodge commutation: identity %.3g, intertwining %.3g, norms %.12g / %.12g',
                identity, intertwining, norm_riesz, norm_dual)
    return CheckReport('commutation',
                       'Hodge Laplacian intertwining', {
                           'vertices': hc.n,
                           'edges': len(hc.edges),
                           'triangles': len(hc.triangles),
                           'p': p
                       },
                       max(identity, intertwining, duality),
                       1e-8,
                       passed,
                       rows=[{
                           'quantity': 'identity',
                           'residual': identity
                       }, {
                           'quantity': 'intertwining',
                           'residual': intertwining
                       }, {
                           'quantity': 'duality',
                           'residual': duality
                       }],
                       details=details)


# Round sphere


@dataclass(frozen=True)
class SphereHeatModel:
    """Heat kernel of the unit 2-sphere at antipodal points, truncated at l_max.

    Eigenvalues l(l+1) with multiplicity 2l+1; the zonal harmonic at the
    antipode is (-1)^l.
    """
    l_max: int

    def term(self, l: int, t: float) -> float:
        """(2l+1)(-1)^l e^{-t l(l+1)}."""
        return (2 * l + 1) * (-1)**l * math.exp(-t * l * (l + 1))

    def kernel(self, t: float) -> float:
        """K(t) = (4 pi)^{-1} sum_{l <= l_max} (2l+1)(-1)^l e^{-t l(l+1)}."""
        return math.fsum(self.term(l, t) for l in range(self.l_max + 1)) / (4 * math.pi)

    def tail_bound(self, t: float) -> float:
        """Geometric bound on the omitted terms l > l_max."""
        first = self.l_max + 1
        ratio = (2 * first + 3) / (2 * first + 1) * math.exp(-2 * t * (first + 1))
        if ratio >= 1:
            return math.inf
        return abs(self.term(first, t)) / (1 - ratio) / (4 * math.pi)


def sphere_spectral_model(l_max: int) -> SphereHeatModel:
    """Antipodal heat evaluator on the unit sphere."""
    if l_max < 1:
        raise ValidationError(f'l_max must be at least 1, got {l_max}')
    return SphereHeatModel(int(l_max))
