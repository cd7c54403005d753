"""
Wave propagator cos(t sqrt L), heat semigroup exp(-tL), resolvent powers
and the estimates relating them: finite propagation speed, Davies-Gaffney
off-diagonal decay, subordination of the heat semigroup to the wave
propagator, and the equivalence of on-diagonal heat and resolvent bounds.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from heatwave.bundle_op import (SpectralDecomposition, OperatorKernel, apply_function,
                                apply_values, hs_row_norms, kernel_of)
from heatwave.check_report import CheckReport
from heatwave.errors import ValidationError
from heatwave.space import MetricMeasureSpace

LOGGER = logging.getLogger(__name__)

DEFAULT_EPS = 1e-12

PairTriple = Tuple[int, int, float]


def wave_kernel(dec: SpectralDecomposition, t: float) -> OperatorKernel:
    """Kernel of cos(t sqrt L)."""
    if t < 0:
        raise ValidationError(f'wave time must be nonnegative, got {t}')
    matrix = apply_function(dec, lambda lam: np.cos(t * np.sqrt(lam)))
    return kernel_of(matrix, dec.space, dec.l)


def heat_matrix(dec: SpectralDecomposition, t: float) -> np.ndarray:
    """Matrix of exp(-tL)."""
    if t < 0:
        raise ValidationError(f'heat time must be nonnegative, got {t}')
    return apply_function(dec, lambda lam: np.exp(-t * lam))


def heat_kernel(dec: SpectralDecomposition, t: float) -> OperatorKernel:
    """Kernel of exp(-tL)."""
    return kernel_of(heat_matrix(dec, t), dec.space, dec.l)


def eps_support_radius(kernel: OperatorKernel, space: MetricMeasureSpace,
                       eps: float = DEFAULT_EPS) -> float:
    """Smallest r with |K(x, y)| <= eps * max|K| whenever rho(x, y) > r."""
    if eps <= 0:
        raise ValidationError(f'eps must be positive, got {eps}')
    norms = kernel.norms('operator')
    peak = float(norms.max())
    if peak == 0:
        return 0.0
    above = norms > eps * peak
    return float(space.rho[above].max()) if above.any() else 0.0


def propagation_speed_estimate(dec: SpectralDecomposition,
                               space: MetricMeasureSpace,
                               t_grid: Sequence[float],
                               eps: float = 1e-10,
                               cone_factor: float = 1.1) -> CheckReport:
    """Fits the slope of the wave eps-support radius against time.

    Passes when the slope over the upper half of the grid is within 10% of
    the full slope and the slope is at most cone_factor * e sqrt(||L||) / 2.
    """
    times = np.asarray(t_grid, dtype=float)
    if times.size < 3:
        raise ValidationError(f'need at least 3 times for a slope fit, got {times.size}')
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValidationError('t_grid must be positive and increasing')
    radii = np.array([eps_support_radius(wave_kernel(dec, t), space, eps) for t in times])
    slope = float(np.polyfit(times, radii, 1)[0])
    upper = times.size // 2
    upper_times, upper_radii = times[upper:], radii[upper:]
    upper_slope = float(np.polyfit(upper_times, upper_radii, 1)[0])
    allowed = 0.1 * abs(slope)
    cone_bound = math.e * math.sqrt(dec.spectral_radius) / 2
    stable = math.isfinite(slope) and abs(upper_slope - slope) <= allowed
    within_cone = slope <= cone_factor * cone_bound
    LOGGER.info('propagation slope %.4g (upper half %.4g), cone bound %.4g', slope, upper_slope,
                cone_bound)
    rows = [{'t': float(t), 'radius': float(r)} for t, r in zip(times, radii)]
    return CheckReport('propagation_speed',
                       'finite propagation speed', {
                           't_grid': times.tolist(),
                           'eps': eps,
                           'cone_factor': cone_factor
                       },
                       slope,
                       cone_bound,
                       stable and within_cone,
                       rows=rows,
                       details={
                           'upper_slope': upper_slope,
                           'allowed_deviation': allowed,
                           'stable': stable,
                           'within_cone_bound': within_cone,
                       })


def default_pair_grid(space: MetricMeasureSpace,
                      distances: Iterable[float] = (2, 4, 8, 16, 32),
                      times: Iterable[float] = (0.5, 1, 2, 4),
                      x: int = 0,
                      max_ratio: float = 4.0) -> List[PairTriple]:
    """(x, y, t) triples with rho(x, y) in distances and rho <= max_ratio * t."""
    triples = []
    for rho in distances:
        hits = np.flatnonzero(np.isclose(space.rho[x], rho))
        if not hits.size:
            continue
        for t in times:
            if rho <= max_ratio * t:
                triples.append((x, int(hits[0]), float(t)))
    return triples


def davies_gaffney_check(dec: SpectralDecomposition,
                         space: MetricMeasureSpace,
                         pair_grid: Optional[Sequence[PairTriple]] = None,
                         constant: float = 2.0,
                         probe: str = 'point',
                         ball_radius: float = 0.0) -> CheckReport:
    """Ratio |<exp(-tL) f1, f2>| / exp(-d^2 / 4t) over normalized probes.

    probe='point' uses f = delta_x / sqrt(mu(x)); probe='ball' uses the
    normalized indicator of B(x, ball_radius) and the separation
    max(0, rho(x, y) - 2 * ball_radius).
    """
    if probe not in ('point', 'ball'):
        raise ValidationError(f"probe must be 'point' or 'ball', got {probe!r}")
    triples = list(pair_grid) if pair_grid is not None else default_pair_grid(space)
    if any(t <= 0 for _, _, t in triples):
        raise ValidationError('Davies-Gaffney times must be positive')
    l = dec.l
    weights = np.repeat(space.mu, l)
    cache: Dict[float, np.ndarray] = {}
    rows = []
    worst = 0.0
    for x, y, t in triples:
        if t not in cache:
            cache[t] = heat_matrix(dec, t)
        heat = cache[t]
        if probe == 'point':
            sx = slice(x * l, (x + 1) * l)
            sy = slice(y * l, (y + 1) * l)
            block = heat[sy, sx] * math.sqrt(space.mu[y] / space.mu[x])
            pairing = float(np.linalg.norm(block, 2))
            gap = space.rho[x, y]
        else:
            members_x = np.flatnonzero(space.rho[x] <= ball_radius + 1e-12)
            members_y = np.flatnonzero(space.rho[y] <= ball_radius + 1e-12)
            cols = (members_x[:, None] * l + np.arange(l)).ravel()
            rows_y = (members_y[:, None] * l + np.arange(l)).ravel()
            mass_x = space.mu[members_x].sum()
            mass_y = space.mu[members_y].sum()
            # <e^{-tL} 1_Bx e, 1_By e'>_mu summed per fiber pair.
            sub = (weights[rows_y, None] * heat[np.ix_(rows_y, cols)])
            block = sub.reshape(len(members_y), l, len(members_x), l).sum(axis=(0, 2))
            pairing = float(np.linalg.norm(block, 2) / math.sqrt(mass_x * mass_y))
            gap = max(0.0, space.rho[x, y] - 2 * ball_radius)
        ratio = pairing / math.exp(-gap**2 / (4 * t))
        worst = max(worst, ratio)
        rows.append({'x': x, 'y': y, 't': t, 'distance': float(gap), 'pairing': pairing,
                     'ratio': ratio})
        LOGGER.debug('davies-gaffney x=%d y=%d t=%g ratio=%.6g', x, y, t, ratio)
    passed = worst <= constant
    LOGGER.info('davies-gaffney max ratio %.6g (constant %g)', worst, constant)
    return CheckReport('davies_gaffney',
                       'Davies-Gaffney off-diagonal estimate', {
                           'probe': probe,
                           'ball_radius': ball_radius,
                           'triples': [list(t) for t in triples]
                       },
                       worst,
                       constant,
                       passed,
                       rows=rows)


def subordination_weight(times: np.ndarray, s: float) -> np.ndarray:
    """Gaussian weight exp(-t^2 / 4s) / sqrt(pi s) on the half line."""
    return np.exp(-times**2 / (4 * s)) / math.sqrt(math.pi * s)


def subordination_window(s: float, tol: float, safety: float = 1.25) -> float:
    """Truncation point T with Gaussian tail mass below tol."""
    return 2 * math.sqrt(s * math.log(1 / tol)) * safety


def subordination_error(dec: SpectralDecomposition,
                        s: float,
                        nodes: int,
                        threshold: float = 1e-6,
                        safety: float = 1.25) -> Tuple[float, float]:
    """Max entrywise deviation of the reconstructed exp(-sL), and T."""
    window = subordination_window(s, threshold / 2, safety)
    points, weights = np.polynomial.legendre.leggauss(nodes)
    times = window * (points + 1) / 2
    weights = weights * window / 2 * subordination_weight(times, s)
    root = np.sqrt(dec.eigenvalues)
    values = np.cos(np.outer(root, times)) @ weights
    reconstructed = apply_values(dec, values)
    direct = apply_function(dec, lambda lam: np.exp(-s * lam))
    return float(np.abs(reconstructed - direct).max()), window


def subordination_check(dec: SpectralDecomposition,
                        s: float,
                        nodes: int = 64,
                        threshold: float = 1e-6,
                        safety: float = 1.25) -> CheckReport:
    """Rebuilds exp(-sL) from cos(t sqrt L) by Gauss-Legendre quadrature."""
    if s <= 0:
        raise ValidationError(f's must be positive, got {s}')
    if nodes < 16:
        raise ValidationError(f'need at least 16 quadrature nodes, got {nodes}')
    deviation, window = subordination_error(dec, s, nodes, threshold, safety)
    passed = deviation <= threshold
    details = {'window': window, 'safety': safety}
    if not passed:
        details['suggested_nodes'] = 2 * nodes
        LOGGER.error('subordination deviation %.3g above %.3g; try %d nodes', deviation, threshold,
                     2 * nodes)
    else:
        LOGGER.info('subordination deviation %.3g with %d nodes', deviation, nodes)
    return CheckReport('subordination',
                       'subordination of the heat semigroup to the wave propagator', {
                           's': s,
                           'nodes': nodes
                       },
                       deviation,
                       threshold,
                       passed,
                       rows=[{'s': s, 'nodes': nodes, 'window': window, 'deviation': deviation}],
                       details=details)


@dataclass(eq=False)
class OnDiagProfile:
    """Row norms V_x(t) over a time grid with the volume column mu(B(x, t))^{-1/2}.

    values[x, k] is V_x(t_grid[k]).
    """
    t_grid: np.ndarray
    values: np.ndarray
    volume: np.ndarray
    n_power: int
    choice: str

    def index(self, t: float) -> int:
        """Grid position of t."""
        hits = np.flatnonzero(np.isclose(self.t_grid, t))
        if not hits.size:
            raise ValidationError(f'time {t:g} is not on the profile grid')
        return int(hits[0])

    def value(self, x: int, t: float) -> float:
        """V_x at a grid time."""
        return float(self.values[x, self.index(t)])


def resolvent_row_norms(dec: SpectralDecomposition, t: float, n_power: int) -> np.ndarray:
    """||K_{(I + t^2 L)^{-N/4}}(x, .)||_{L^2} at every x."""
    matrix = apply_function(dec, lambda lam: (1 + t * t * lam)**(-n_power / 4))
    return hs_row_norms(matrix, dec.space, dec.l)


def resolvent_profile(dec: SpectralDecomposition,
                      space: MetricMeasureSpace,
                      t_grid: Sequence[float],
                      n_power: int = 4,
                      choice: str = 'resolvent') -> OnDiagProfile:
    """Tabulates V_x(t) from resolvent or heat row norms."""
    if n_power < 1:
        raise ValidationError(f'N must be at least 1, got {n_power}')
    times = np.asarray(t_grid, dtype=float)
    if np.any(times <= 0):
        raise ValidationError('t_grid must be positive')
    columns = []
    for t in times:
        if choice == 'resolvent':
            columns.append(resolvent_row_norms(dec, t, n_power))
        elif choice == 'heat':
            columns.append(hs_row_norms(heat_matrix(dec, t * t), space, dec.l))
        else:
            raise ValidationError(f"choice must be 'resolvent' or 'heat', got {choice!r}")
    volume = np.stack([space.volumes(t)**-0.5 for t in times], axis=1)
    return OnDiagProfile(times, np.stack(columns, axis=1), volume, n_power, choice)


def subordination_constant(m: float, d_exponent: float) -> float:
    """int_0^inf e^{-s} s^{m/4-1} (1 + 1/s)^{D/4} ds / Gamma(m/4)."""

    def integrand(s: float) -> float:
        return math.exp(-s) * s**(m / 4 - 1) * (1 + 1 / s)**(d_exponent / 4)

    head = integrate.quad(integrand, 0, 1, limit=200)[0]
    tail = integrate.quad(integrand, 1, np.inf, limit=200)[0]
    return (head + tail) / special.gamma(m / 4)


def ondiag_factor(m: float, l: int = 1) -> float:
    """sqrt(l) * sup_{u >= 0} e^{-u} (1 + u)^m, attained at u = m - 1."""
    peak = max(m - 1, 0.0)
    return math.sqrt(l) * math.exp(-peak) * (1 + peak)**m


def ellip_equivalence_check(dec: SpectralDecomposition,
                            space: MetricMeasureSpace,
                            t_grid: Sequence[float],
                            m: float,
                            d_exponent: float) -> CheckReport:
    """Compares resolvent and heat row norms in both directions.

    (a) ||K_{(I+tL)^{-m/4}}(x, .)|| <= C_m ||K_{exp(-tL)}(x, .)||
    (b) ||K_{exp(-tL)}(x, .)|| <= sqrt(l) sup_u e^{-u}(1+u)^m ||K_{(I+tL)^{-m}}(x, .)||
    Both hold for m > D when the heat row norms grow at most like the
    doubling profile predicts.
    """
    if m <= d_exponent:
        raise ValidationError(f'equivalence of on-diagonal bounds needs m > D, '
                              f'got m={m}, D={d_exponent}')
    times = np.asarray(t_grid, dtype=float)
    if np.any(times <= 0):
        raise ValidationError('t_grid must be positive')
    c_m = subordination_constant(m, d_exponent)
    factor = ondiag_factor(m, dec.l)
    rows = []
    worst_a = 0.0
    worst_b = 0.0
    for t in times:
        heat = hs_row_norms(heat_matrix(dec, t), space, dec.l)
        quarter = hs_row_norms(apply_function(dec, lambda lam, t=t: (1 + t * lam)**(-m / 4)),
                               space, dec.l)
        full = hs_row_norms(apply_function(dec, lambda lam, t=t: (1 + t * lam)**(-m)), space,
                            dec.l)
        ratio_a = float(np.max(quarter / heat))
        ratio_b = float(np.max(heat / full))
        worst_a = max(worst_a, ratio_a)
        worst_b = max(worst_b, ratio_b)
        rows.append({'t': float(t), 'ratio_a': ratio_a, 'ratio_b': ratio_b})
    observed = max(worst_a / c_m, worst_b / factor)
    threshold = 1 + 1e-6
    passed = observed <= threshold
    LOGGER.info('on-diagonal equivalence: (a) %.6g <= %.6g, (b) %.6g <= %.6g', worst_a, c_m,
                worst_b, factor)
    return CheckReport('ellip_equivalence',
                       'equivalence of on-diagonal heat and resolvent bounds', {
                           't_grid': times.tolist(),
                           'm': m,
                           'd_exponent': d_exponent
                       },
                       observed,
                       threshold,
                       passed,
                       rows=rows,
                       details={
                           'constant_a': c_m,
                           'constant_b': factor,
                           'ratio_a': worst_a,
                           'ratio_b': worst_b,
                       })
