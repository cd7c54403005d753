"""
Calderon-Zygmund decomposition, local operators and the Riesz transform
harness.

Sections are arrays of shape (n,) or (n, l); their pointwise size is the
Euclidean norm over the fiber. Riesz transforms are A L^{-alpha} with
L^{-alpha} taken on the orthogonal complement of ker L.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from heatwave.bundle_op import SpectralDecomposition, apply_values, hs_column_norms
from heatwave.check_report import CheckReport
from heatwave.errors import ValidationError
from heatwave.multiplier import PhiFamily
from heatwave.space import BALL_TOL, MetricMeasureSpace
from heatwave.wave_heat import eps_support_radius, resolvent_profile, wave_kernel

LOGGER = logging.getLogger(__name__)

# Whitney balls use radius WHITNEY * dist(x, complement); bad balls double it.
WHITNEY = 0.2


@dataclass(eq=False)
class LocalOperator:
    """Block-sparse map from sections over a space to values on target positions.

    target_distance[t, y] is the distance from target t to point y and
    target_measure[t] its mass.
    """
    space: MetricMeasureSpace
    matrix: np.ndarray
    target_distance: np.ndarray
    target_measure: np.ndarray
    locality_radius: float
    l: int = 1
    name: str = ''

    @property
    def target_fiber(self) -> int:
        """Scalar components per target."""
        return self.matrix.shape[0] // self.target_measure.size

    def apply(self, section: np.ndarray) -> np.ndarray:
        """A f for a flattened section."""
        return self.matrix @ np.asarray(section).reshape(-1)

    def support_violation(self, radii: Sequence[float] = (0.0, 1.0, 2.0)) -> float:
        """Largest distance by which A 1_B(x, r) leaks past r + locality_radius."""
        worst = 0.0
        for x in range(self.space.n):
            for r in radii:
                members = np.flatnonzero(self.space.rho[x] <= r + BALL_TOL)
                section = np.zeros((self.space.n, self.l))
                section[members] = 1.0
                image = np.abs(self.apply(section)).reshape(-1, self.target_fiber).sum(axis=1)
                hit = np.flatnonzero(image > 0)
                if hit.size:
                    # distance from each hit target to the ball's support
                    reach = self.target_distance[np.ix_(hit, members)].min(axis=1).max()
                    worst = max(worst, float(reach - self.locality_radius))
        return worst


def gradient_operator(space: MetricMeasureSpace, l: int = 1) -> LocalOperator:
    """d0 f(e) = sqrt(w_e) (f(b) - f(a)) with w_e = 1/length^2, targets at edge midpoints."""
    if not space.edges:
        raise ValidationError('gradient needs a space built from edges')
    m = len(space.edges)
    scalar = np.zeros((m, space.n))
    distance = np.zeros((m, space.n))
    half = 0.0
    for idx, (a, b, length) in enumerate(space.edges):
        root = 1.0 / length
        scalar[idx, a] = -root
        scalar[idx, b] = root
        distance[idx] = np.minimum(space.rho[a], space.rho[b]) + length / 2
        half = max(half, length / 2)
    matrix = np.kron(scalar, np.eye(l)) if l > 1 else scalar
    return LocalOperator(space, matrix, distance, np.ones(m), half, l, 'gradient')


def multiplication_operator(space: MetricMeasureSpace, values: Sequence[float],
                            l: int = 1) -> LocalOperator:
    """Pointwise multiplication; targets are the points themselves."""
    diag = np.repeat(np.asarray(values, dtype=float), l)
    return LocalOperator(space, np.diag(diag), np.array(space.rho), np.array(space.mu), 0.0, l,
                         'multiplication')


def fractional_power(dec: SpectralDecomposition, alpha: float) -> np.ndarray:
    """L^{-alpha} on (ker L)^perp, zero on ker L."""
    lam = dec.eigenvalues
    values = np.zeros_like(lam)
    positive = lam > 0
    values[positive] = lam[positive]**(-alpha)
    return apply_values(dec, values)


def riesz_matrix(op: LocalOperator, dec: SpectralDecomposition, alpha: float) -> np.ndarray:
    """Matrix of A L^{-alpha}."""
    if op.matrix.shape[1] != dec.operator.size:
        raise ValidationError(f'operator acts on {op.matrix.shape[1]} unknowns, '
                              f'L on {dec.operator.size}')
    return op.matrix @ fractional_power(dec, alpha)


def riesz_l2_norm(op: LocalOperator,
                  dec: SpectralDecomposition,
                  alpha: float,
                  tol: float = 1e-8,
                  max_iter: int = 10000,
                  seed: int = 0) -> float:
    """Largest singular value of A L^{-alpha} in the weighted L^2 spaces."""
    if alpha <= 0:
        raise ValidationError(f'alpha must be positive, got {alpha}')
    transform = riesz_matrix(op, dec, alpha)
    source = dec.operator.weights
    target = np.repeat(op.target_measure, op.target_fiber)
    vector = np.random.default_rng(seed).standard_normal(transform.shape[1])
    estimate = 0.0
    for iteration in range(max_iter):
        image = transform @ vector
        norm_in = math.sqrt(float(np.sum(np.abs(vector)**2 * source)))
        if norm_in == 0:
            return 0.0
        previous = estimate
        estimate = math.sqrt(float(np.sum(np.abs(image)**2 * target))) / norm_in
        if estimate == 0:
            return 0.0
        if iteration and abs(estimate - previous) <= tol * estimate:
            break
        vector = (transform.conj().T @ (target * image)) / source
        vector = vector / math.sqrt(float(np.sum(np.abs(vector)**2 * source)))
    LOGGER.debug('riesz L2 norm %.12g after %d iterations', estimate, iteration + 1)
    return estimate


def weak11_estimate(transform: np.ndarray,
                    space: MetricMeasureSpace,
                    probes: Optional[Sequence[int]] = None,
                    target_measure: Optional[np.ndarray] = None,
                    l: int = 1) -> float:
    """max over atoms delta_y / mu(y) and levels of lam * nu{|T a| > lam}."""
    target_measure = space.mu if target_measure is None else np.asarray(target_measure)
    probes = range(space.n) if probes is None else probes
    fiber_t = transform.shape[0] // target_measure.size
    best = 0.0
    for y in probes:
        for k in range(l):
            column = transform[:, y * l + k] / space.mu[y]
            sizes = np.sqrt((np.abs(column)**2).reshape(-1, fiber_t).sum(axis=1))
            order = np.argsort(-sizes, kind='stable')
            cumulative = np.cumsum(target_measure[order])
            best = max(best, float(np.max(sizes[order] * cumulative)))
    return best


def one_norm(transform: np.ndarray,
             space: MetricMeasureSpace,
             target_measure: Optional[np.ndarray] = None) -> float:
    """||T||_{L^1 -> L^1}: the largest weighted column sum (l = 1)."""
    target_measure = space.mu if target_measure is None else np.asarray(target_measure)
    sums = (np.abs(transform) * target_measure[:, None]).sum(axis=0) / space.mu
    return float(sums.max())


def _dual(vector: np.ndarray, p: float) -> np.ndarray:
    size = np.abs(vector)
    norm = np.sum(size**p)**(1 / p)
    if norm == 0:
        return np.zeros_like(vector)
    phase = np.where(size > 0, vector / np.where(size > 0, size, 1), 0)
    return size**(p - 1) * phase / norm**(p - 1)


def lp_norm_estimate(transform: np.ndarray,
                     p: float,
                     seed: int = 0,
                     iterations: int = 100,
                     source_measure: Optional[np.ndarray] = None,
                     target_measure: Optional[np.ndarray] = None) -> float:
    """Lower bound for ||T||_{p -> p} by the nonlinear power method.

    Sections are treated entrywise. The returned value is the best estimate
    seen, so it never decreases with more iterations.
    """
    if not 1 < p <= 2:
        raise ValidationError(f'p must lie in (1, 2], got {p}')
    if iterations < 10:
        raise ValidationError(f'need at least 10 iterations, got {iterations}')
    scaled = np.array(transform)
    if target_measure is not None:
        scaled = np.asarray(target_measure)[:, None]**(1 / p) * scaled
    if source_measure is not None:
        scaled = scaled / np.asarray(source_measure)[None, :]**(1 / p)
    q = p / (p - 1)
    vector = np.random.default_rng(seed).standard_normal(scaled.shape[1])
    vector = vector / np.sum(np.abs(vector)**p)**(1 / p)
    best = 0.0
    for _ in range(iterations):
        image = scaled @ vector
        estimate = float(np.sum(np.abs(image)**p)**(1 / p))
        best = max(best, estimate)
        if estimate == 0:
            break
        back = scaled.conj().T @ _dual(image, p)
        back_norm = float(np.sum(np.abs(back)**q)**(1 / q))
        if back_norm <= float(np.real(np.vdot(back, vector))) + 1e-14 * back_norm:
            break
        vector = _dual(back, q)
    return best


def maximal_function(space: MetricMeasureSpace,
                     f: np.ndarray,
                     radii: Optional[Sequence[float]] = None) -> np.ndarray:
    """Mf(x) = max_r mu(B(x, r))^{-1} int_B(x, r) |f| dmu over the radius grid.

    The default grid is every distinct distance, radius 0 included, which
    gives the exact maximal function over all balls.
    """
    size = pointwise_size(f)
    grid = np.unique(space.rho) if radii is None else np.asarray(radii, dtype=float)
    if grid.size == 0:
        raise ValidationError('maximal function needs a nonempty radius grid')
    weighted = size * space.mu
    best = np.zeros(space.n)
    for r in grid:
        inside = space.rho <= r + BALL_TOL
        best = np.maximum(best, (inside @ weighted) / (inside @ space.mu))
    return best


def pointwise_size(f: np.ndarray) -> np.ndarray:
    """|f(x)|, the fiber norm at each point."""
    f = np.asarray(f)
    if f.ndim == 1:
        return np.abs(f)
    return np.sqrt((np.abs(f)**2).sum(axis=1))


@dataclass(eq=False)
class CZDecomposition:
    """f = g + sum_i b_i with b_i supported in ball (center_i, radius_i)."""
    level: float
    good: np.ndarray
    bad: List[np.ndarray]
    balls: List[Tuple[int, float]]
    constants: Dict[str, float] = field(default_factory=dict)

    def reconstruction(self) -> np.ndarray:
        """g + sum b_i."""
        total = np.array(self.good, copy=True)
        for part in self.bad:
            total = total + part
        return total

    def as_dict(self, space: MetricMeasureSpace) -> Dict[str, Any]:
        """JSON-ready summary: level, balls, per-ball integrals, constants."""
        return {
            'level': self.level,
            'balls': [{'center': c, 'radius': r, 'integral': float(np.sum(pointwise_size(b) *
                                                                         space.mu))}
                      for (c, r), b in zip(self.balls, self.bad)],
            'constants': dict(self.constants),
        }


def cz_decompose(space: MetricMeasureSpace, f: np.ndarray, level: float) -> CZDecomposition:
    """Whitney-Vitali decomposition of f at the given level.

    Omega = {Mf > level}. Each x in Omega gets the Whitney radius
    WHITNEY * dist(x, complement); a greedy Vitali selection by decreasing
    radius keeps disjoint balls, and every point of Omega goes to the first
    selected ball whose double contains it. Bad parts are f restricted to
    those cells; no means are subtracted.
    """
    f = np.asarray(f)
    if level <= 0:
        raise ValidationError(f'level must be positive, got {level}')
    size = pointwise_size(f)
    norm1 = float(np.sum(size * space.mu))
    if norm1 <= 0:
        raise ValidationError('f must have positive L1 norm')
    maximal = maximal_function(space, f)
    omega = maximal > level
    if omega.all():
        raise ValidationError(f'level below global average: Mf > {level:g} everywhere')
    if not omega.any():
        return CZDecomposition(level, np.array(f, copy=True), [], [],
                               _cz_constants(space, f, np.array(f, copy=True), [], [], level,
                                             norm1))

    outside = np.flatnonzero(~omega)
    inside = np.flatnonzero(omega)
    dist = space.rho[np.ix_(inside, outside)].min(axis=1)
    radius = WHITNEY * dist
    order = sorted(range(inside.size), key=lambda i: (-radius[i], inside[i]))
    selected: List[int] = []
    for i in order:
        x = inside[i]
        if all(space.rho[x, inside[j]] > radius[i] + radius[j] + BALL_TOL for j in selected):
            selected.append(i)

    owner = np.full(space.n, -1)
    for rank, i in enumerate(selected):
        center = inside[i]
        cover = omega & (space.rho[center] <= 2 * radius[i] + BALL_TOL) & (owner < 0)
        owner[cover] = rank
    if np.any(owner[inside] < 0):
        raise ValidationError('Vitali selection failed to cover the level set')

    good = np.array(f, copy=True)
    good[omega] = 0
    bad = []
    balls = []
    for rank, i in enumerate(selected):
        cell = owner == rank
        if not cell.any():
            continue
        part = np.zeros_like(f)
        part[cell] = f[cell]
        bad.append(part)
        balls.append((int(inside[i]), float(2 * radius[i])))
    constants = _cz_constants(space, f, good, bad, balls, level, norm1)
    LOGGER.debug('cz level %g: %d bad balls, constants %s', level, len(bad), constants)
    return CZDecomposition(level, good, bad, balls, constants)


def _cz_constants(space: MetricMeasureSpace, f: np.ndarray, good: np.ndarray,
                  bad: List[np.ndarray], balls: List[Tuple[int, float]], level: float,
                  norm1: float) -> Dict[str, float]:
    good_size = pointwise_size(good)
    constants = {
        'good_sup': float(good_size.max()) / level,
        'good_l1': float(np.sum(good_size * space.mu)) / norm1,
        'bad_mass': 0.0,
        'ball_measure': 0.0,
        'overlap': 0.0,
        'residual': float(np.abs(good + sum(bad, np.zeros_like(f)) - f).max()) if bad else 0.0,
    }
    if balls:
        volumes = np.array([space.volumes(r)[c] for c, r in balls])
        integrals = np.array([np.sum(pointwise_size(b) * space.mu) for b in bad])
        constants['bad_mass'] = float(np.max(integrals / (level * volumes)))
        constants['ball_measure'] = float(level * volumes.sum() / norm1)
        counts = np.zeros(space.n)
        for c, r in balls:
            counts += space.rho[c] <= 2 * r + BALL_TOL
        constants['overlap'] = float(counts.max())
    return constants


def multiplier_constant(phi: PhiFamily, dec: SpectralDecomposition, r: float,
                        n_power: int) -> float:
    """sup over the spectrum of |Phi(r sqrt lam)| (1 + r^2 lam)^{N/4}."""
    lam = dec.eigenvalues
    return float(np.max(np.abs(phi(r * np.sqrt(lam))) * (1 + r * r * lam)**(n_power / 4)))


def good_function_diagnostic(space: MetricMeasureSpace,
                             dec: SpectralDecomposition,
                             f: np.ndarray,
                             level: float,
                             phi: PhiFamily,
                             eps: float = 1e-10,
                             n_power: int = 4,
                             constant: float = 16.0) -> CheckReport:
    """Builds G = g + sum_i Phi_{r_i}(sqrt L) b_i and checks its three bounds.

    (i) each Phi_{r_i}(sqrt L) b_i stays within r_i plus the wave cone at
    time r_i. (ii) the kernel columns over supp b_i satisfy
    ||K(., y)|| <= C mu(B(y, r_i))^{-1/2}, and ||Phi_{r_i}(sqrt L) b_i||^2
    <= C lambda ||b_i||_1. (iii) ||G||^2 <= C lambda ||f||_1.

    C is `constant` for every gate. The profile bound
    sup |Phi(r sqrt lam)| (1 + r^2 lam)^{N/4} * max V_y(r) mu(B(y, r))^{1/2}
    caps the column constant in (ii) and is reported as lemma_bound.
    """
    if constant <= 0:
        raise ValidationError(f'constant must be positive, got {constant}')
    czd = cz_decompose(space, f, level)
    l = dec.l
    flat = np.asarray(f).reshape(-1)
    weights = dec.operator.weights
    norm1 = float(np.sum(pointwise_size(f) * space.mu))
    hop = space.min_positive_distance()
    root = np.sqrt(dec.eigenvalues)
    radii = sorted({radius for _, radius in czd.balls})
    profile = resolvent_profile(dec, space, radii, n_power) if radii else None
    wave_cache: Dict[float, float] = {}

    pieces = []
    rows = []
    support_ok = True
    lemma_constant = 0.0
    lemma_bound = 0.0
    energy_ratio = 0.0
    for (center, radius), part in zip(czd.balls, czd.bad):
        smoother = apply_values(dec, phi(radius * root))
        piece = smoother @ part.reshape(-1)
        pieces.append(piece)
        size = np.sqrt((np.abs(piece)**2).reshape(space.n, l).sum(axis=1))
        part_size = pointwise_size(part)
        part_l1 = float(np.sum(part_size * space.mu))
        if part_l1 == 0:
            continue
        if radius not in wave_cache:
            wave_cache[radius] = eps_support_radius(wave_kernel(dec, radius), space, eps * 1e-2)
        peak = size.max()
        reach = float(space.rho[center, size > eps * peak].max()) if peak > 0 else 0.0
        allowed = radius + wave_cache[radius] + hop
        support_ok = support_ok and reach <= allowed + BALL_TOL

        k = radii.index(radius)
        support = part_size > 0
        root_volume = space.volumes(radius)[support]**0.5
        columns = hs_column_norms(smoother, space, l)[support]
        column_constant = float(np.max(columns * root_volume))
        profile_constant = float(np.max(profile.values[support, k] * root_volume))
        bound = multiplier_constant(phi, dec, radius, n_power) * profile_constant
        energy = float(np.sum(np.abs(piece)**2 * weights))
        lemma_constant = max(lemma_constant, column_constant)
        lemma_bound = max(lemma_bound, bound)
        energy_ratio = max(energy_ratio, energy / (level * part_l1))
        rows.append({'center': center, 'radius': radius, 'reach': reach, 'allowed': allowed,
                     'energy': energy, 'bad_l1': part_l1, 'column_constant': column_constant,
                     'lemma_bound': bound})

    good = czd.good.reshape(-1)
    total = good + sum(pieces, np.zeros_like(flat, dtype=np.result_type(flat, complex)))
    g_energy = float(np.sum(np.abs(total)**2 * weights))
    g_ratio = g_energy / (level * norm1)
    lemma_ok = lemma_constant <= constant and energy_ratio <= constant
    energy_ok = g_ratio <= constant
    passed = support_ok and lemma_ok and energy_ok
    observed = max(lemma_constant, energy_ratio, g_ratio)
    LOGGER.info('good function: %d bad balls, column constant %.4g, good ratio %.4g',
                len(pieces), lemma_constant, g_ratio)
    return CheckReport('good_function',
                       'modified good function bounds', {
                           'level': level,
                           'k_order': phi.k_order,
                           'eps': eps,
                           'n_power': n_power
                       },
                       observed,
                       constant,
                       passed,
                       rows=rows,
                       details={
                           'support_ok': support_ok,
                           'lemma_constant': lemma_constant,
                           'lemma_bound': lemma_bound,
                           'energy_ratio': energy_ratio,
                           'good_ratio': g_ratio,
                           'decomposition': czd.as_dict(space),
                       },
                       artifacts={'good_function': total, 'decomposition': czd})


def riesz_tail_bound_check(op: LocalOperator,
                           dec: SpectralDecomposition,
                           space: MetricMeasureSpace,
                           phi: PhiFamily,
                           alpha: float = 0.5,
                           r: float = 4.0,
                           j_max: int = 6,
                           probes: Optional[Sequence[int]] = None,
                           ratio_limit: float = 0.75,
                           floor: float = 1e-10) -> CheckReport:
    """Annulus masses of the kernel of A L^{-alpha} (1 - Phi_r)(sqrt L).

    term_j(y) = mu(B(y, 2^j r))^{1/2} (int_{rho >= 2^{j-1} r} |K(., y)|^2 dnu)^{1/2}
    must decay geometrically for j >= 3; terms below floor times the
    largest term are treated as converged.
    """
    if r <= 0:
        raise ValidationError(f'r must be positive, got {r}')
    if j_max < 3:
        raise ValidationError(f'j_max must be at least 3, got {j_max}')
    lam = dec.eigenvalues
    values = np.zeros_like(lam)
    positive = lam > 0
    values[positive] = lam[positive]**(-alpha) * (1 - phi(r * np.sqrt(lam[positive])))
    transform = op.matrix @ apply_values(dec, values)
    probes = list(probes) if probes is not None else sorted({0, space.n // 3})
    l = dec.l
    fiber_t = op.target_fiber
    rows = []
    worst = 0.0
    total = 0.0
    for y in probes:
        cols = transform[:, y * l:(y + 1) * l] / space.mu[y]
        sizes = (np.abs(cols)**2).sum(axis=1).reshape(-1, fiber_t).sum(axis=1)
        terms = []
        for j in range(1, j_max + 1):
            far = op.target_distance[:, y] >= 2.0**(j - 1) * r - BALL_TOL
            mass = math.sqrt(float(np.sum(sizes[far] * op.target_measure[far])))
            volume = float(space.volumes(2.0**j * r)[y])
            terms.append(math.sqrt(volume) * mass)
        top = max(terms) if terms else 0.0
        for j in range(3, j_max + 1):
            prev, cur = terms[j - 2], terms[j - 1]
            if prev <= floor * top:
                continue
            worst = max(worst, cur / prev)
        total = max(total, sum(terms))
        for j, term in enumerate(terms, start=1):
            rows.append({'y': y, 'j': j, 'term': term})
    passed = worst <= ratio_limit
    LOGGER.info('riesz tail: worst ratio %.4g, annulus sum %.4g', worst, total)
    return CheckReport('riesz_tail',
                       'annulus decay of the Riesz transform tail', {
                           'alpha': alpha,
                           'r': r,
                           'j_max': j_max,
                           'probes': probes
                       },
                       worst,
                       ratio_limit,
                       passed,
                       rows=rows,
                       details={'annulus_sum': total})


def cz_decomposition_check(space: MetricMeasureSpace,
                           samples: int = 50,
                           seed: int = 0,
                           level_factor: float = 2.0,
                           overlap_limit: float = 16.0) -> CheckReport:
    """Decomposes seeded heavy-tailed sections and checks the decomposition bounds.

    The level is level_factor times the global average of |f|.
    """
    if samples < 1:
        raise ValidationError(f'need at least one sample, got {samples}')
    rng = np.random.default_rng(seed)
    total_mass = float(space.mu.sum())
    rows = []
    worst: Dict[str, float] = {}
    passed = True
    skipped = 0
    for sample in range(samples):
        f = rng.exponential(size=space.n)**3
        norm1 = float(np.sum(f * space.mu))
        level = level_factor * norm1 / total_mass
        try:
            czd = cz_decompose(space, f, level)
        except ValidationError as err:
            LOGGER.debug('sample %d skipped: %s', sample, err)
            skipped += 1
            continue
        constants = czd.constants
        for key, value in constants.items():
            worst[key] = max(worst.get(key, 0.0), value)
        ok = constants['residual'] <= 1e-12 * norm1 and constants['good_sup'] <= 1 + 1e-12 \
            and constants['good_l1'] <= 1 + 1e-12 and constants['overlap'] <= overlap_limit
        passed = passed and ok
        rows.append({'sample': sample, 'level': level, 'bad_balls': len(czd.bad), **constants})
    passed = passed and bool(rows)
    LOGGER.info('cz decomposition over %d samples: worst constants %s', len(rows), worst)
    return CheckReport('cz_decomposition',
                       'Calderon-Zygmund decomposition bounds', {
                           'samples': samples,
                           'seed': seed,
                           'level_factor': level_factor
                       },
                       worst.get('overlap', 0.0),
                       overlap_limit,
                       passed,
                       rows=rows,
                       details={'worst': worst, 'skipped': skipped})


def riesz_l2_check(op: LocalOperator,
                   dec: SpectralDecomposition,
                   alpha: float = 0.5,
                   expected: Optional[float] = None,
                   p: float = 1.5,
                   seed: int = 0,
                   tol: float = 1e-8) -> CheckReport:
    """L^2 norm of A L^{-alpha}, with weak (1,1) and L^p lower bounds alongside.

    Passes when the norm is at most 1 + tol, or within tol of expected.
    """
    norm = riesz_l2_norm(op, dec, alpha)
    transform = riesz_matrix(op, dec, alpha)
    space = op.space
    weak = weak11_estimate(transform, space, target_measure=op.target_measure, l=dec.l)
    details = {
        'weak11': weak,
        'lp_norm': lp_norm_estimate(transform, p, seed, source_measure=dec.operator.weights,
                                    target_measure=np.repeat(op.target_measure,
                                                             op.target_fiber)),
        'projection': 'orthogonal complement of ker L',
        'null_dim': dec.null_dim,
    }
    if dec.l == 1:
        details['one_norm'] = one_norm(transform, space, op.target_measure)
    if expected is None:
        passed = norm <= 1 + tol
        threshold = 1 + tol
    else:
        passed = abs(norm - expected) <= tol
        threshold = expected
    LOGGER.info('riesz transform %s: L2 norm %.12g, weak(1,1) %.4g', op.name, norm, weak)
    return CheckReport('riesz_l2',
                       'L2 boundedness of the Riesz transform', {
                           'operator': op.name,
                           'alpha': alpha,
                           'p': p
                       },
                       norm,
                       threshold,
                       passed,
                       rows=[{'quantity': k, 'value': v} for k, v in details.items()
                             if isinstance(v, float)],
                       details=details)


def riesz_uniformity_check(levels: Sequence[Tuple[LocalOperator, SpectralDecomposition]],
                           alpha: float = 0.5,
                           p: float = 1.5,
                           seed: int = 0,
                           limit: float = 0.25) -> CheckReport:
    """L^p and weak (1,1) estimates of the Riesz transform across a refinement sequence.

    Passes when max / min - 1 stays within limit for both quantities.
    """
    levels = list(levels)
    if len(levels) < 2:
        raise ValidationError(f'need at least two operators to compare, got {len(levels)}')
    if limit < 0:
        raise ValidationError(f'limit must be nonnegative, got {limit}')
    rows = []
    for op, dec in levels:
        transform = riesz_matrix(op, dec, alpha)
        lp_norm = lp_norm_estimate(transform, p, seed, source_measure=dec.operator.weights,
                                   target_measure=np.repeat(op.target_measure, op.target_fiber))
        weak = weak11_estimate(transform, op.space, target_measure=op.target_measure, l=dec.l)
        rows.append({'operator': op.name, 'n': op.space.n, 'lp_norm': lp_norm, 'weak11': weak})
        LOGGER.debug('riesz uniformity n=%d: L^%g %.6g, weak(1,1) %.6g', op.space.n, p, lp_norm,
                     weak)
    spreads = {}
    for key in ('lp_norm', 'weak11'):
        values = [row[key] for row in rows]
        spreads[key] = max(values) / min(values) - 1 if min(values) > 0 else math.inf
    worst = max(spreads.values())
    passed = worst <= limit
    LOGGER.info('riesz uniformity over n=%s: spread L^p %.4g, weak(1,1) %.4g (limit %g)',
                [row['n'] for row in rows], spreads['lp_norm'], spreads['weak11'], limit)
    return CheckReport('riesz_uniformity',
                       'Riesz transform estimates uniform under refinement', {
                           'alpha': alpha,
                           'p': p,
                           'sizes': [row['n'] for row in rows]
                       },
                       worst,
                       limit,
                       passed,
                       rows=rows,
                       details={
                           'lp_spread': spreads['lp_norm'],
                           'weak11_spread': spreads['weak11']
                       })
