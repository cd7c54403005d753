"""
Sampled even functions, their cosine transforms, and the explicit function
families used by the Gaussian and Riesz estimates.

Transforms use the convention  f_hat(lam) = int f(x) e^{-i lam x} dx,  which
for even f is  2 int_0^inf f(x) cos(lam x) dx.  A trapezoid rule on the grid
x_k = k h, k = 0..m, is exactly a type-I DCT, and the dual grid is
lam_j = j pi / (m h). Applying the transform twice gives 2 pi times the
original samples.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as poly
from scipy import fft, interpolate

from heatwave.bundle_op import SpectralDecomposition, apply_values, kernel_of
from heatwave.check_report import CheckReport
from heatwave.errors import FamilyError, ValidationError
from heatwave.space import MetricMeasureSpace
from heatwave.wave_heat import eps_support_radius, wave_kernel

LOGGER = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-12
SUPPORT_TOL = 1e-10

# Number of Gauss-Legendre nodes used to integrate the smooth bump.
BUMP_NODES = 64

# Cosine sums at arbitrary frequencies are evaluated in chunks of this many.
CHUNK = 256


@dataclass(eq=False)
class SampledEvenFunction:
    """Samples of an even function at x_k = k * step, k = 0..m."""
    step: float
    values: np.ndarray
    declared_ft_support: Optional[float] = None
    name: str = ''

    @property
    def grid(self) -> np.ndarray:
        """Sample points (nonnegative half)."""
        return self.step * np.arange(self.values.size)

    @property
    def half_width(self) -> float:
        """T, the last sample point."""
        return self.step * (self.values.size - 1)

    @property
    def peak(self) -> float:
        """max |f|."""
        return float(np.abs(self.values).max())

    def full_values(self) -> np.ndarray:
        """Samples on [-T, T], symmetric by construction."""
        return np.concatenate([self.values[:0:-1], self.values])

    def trapezoid_weights(self) -> np.ndarray:
        """Weights of the full-line trapezoid rule folded onto the half grid."""
        weights = np.full(self.values.size, 2 * self.step)
        weights[0] = self.step
        weights[-1] = self.step
        return weights

    def l2_norm_squared(self) -> float:
        """int |f|^2 over the real line by the trapezoid rule."""
        return float(np.sum(self.trapezoid_weights() * np.abs(self.values)**2))

    def l1_norm(self) -> float:
        """int |f| over the real line by the trapezoid rule."""
        return float(np.sum(self.trapezoid_weights() * np.abs(self.values)))

    def to_csv(self, filename: str) -> None:
        """Two columns: grid point, value (real part and imaginary part if complex)."""
        with open(filename, 'w', encoding='utf-8', newline='') as out_file:
            writer = csv.writer(out_file)
            if np.iscomplexobj(self.values):
                writer.writerow(['x', 'real', 'imag'])
                for x, v in zip(self.grid, self.values):
                    writer.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])
            else:
                writer.writerow(['x', 'value'])
                for x, v in zip(self.grid, self.values):
                    writer.writerow([repr(float(x)), repr(float(v))])


def _dct1(values: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(values):
        return fft.dct(values.real, type=1) + 1j * fft.dct(values.imag, type=1)
    return fft.dct(values, type=1)


def transform_even(func: SampledEvenFunction,
                   check_window: bool = True,
                   name: str = '') -> SampledEvenFunction:
    """Cosine transform of an even function by the trapezoid rule (DCT-I)."""
    if func.values.size < 2:
        raise ValidationError('need at least two samples to transform')
    peak = func.peak
    if check_window and abs(func.values[-1]) > BOUNDARY_TOL * peak:
        suggested = 2 * func.half_width
        raise FamilyError(f'window too small for {func.name or "function"}: '
                          f'|f(T)| = {abs(func.values[-1]):.3g} at T = {func.half_width:g}; '
                          f'try T = {suggested:g}')
    m = func.values.size - 1
    dual_step = math.pi / (m * func.step)
    return SampledEvenFunction(dual_step, func.step * _dct1(func.values), None,
                               name or f'transform of {func.name}')


def inverse_transform_even(func: SampledEvenFunction, name: str = '') -> SampledEvenFunction:
    """Inverse of transform_even on the dual grid."""
    inverse = transform_even(func, check_window=False, name=name)
    inverse.values = inverse.values / (2 * math.pi)
    return inverse


def transform_at(func: SampledEvenFunction, lam: np.ndarray) -> np.ndarray:
    """Trapezoid cosine transform evaluated at arbitrary frequencies."""
    lam = np.asarray(lam, dtype=float)
    flat = lam.ravel()
    weighted = func.trapezoid_weights() * func.values
    grid = func.grid
    out = np.empty(flat.size, dtype=np.result_type(func.values, float))
    for start in range(0, flat.size, CHUNK):
        part = flat[start:start + CHUNK]
        out[start:start + CHUNK] = np.cos(np.outer(part, grid)) @ weighted
    return out.reshape(lam.shape)


def sample_even(func: Callable[[np.ndarray], np.ndarray],
                step: float,
                half_width: float,
                name: str = '',
                support: Optional[float] = None) -> SampledEvenFunction:
    """Samples func on 0, step, ..., half_width."""
    count = int(round(half_width / step))
    grid = step * np.arange(count + 1)
    return SampledEvenFunction(step, np.asarray(func(grid)), support, name)


def ft_support_violation(transform: SampledEvenFunction, radius: float) -> float:
    """max |f_hat| outside [-radius, radius] relative to the peak."""
    outside = transform.grid > radius * (1 + 1e-12) + transform.step
    if not outside.any():
        return 0.0
    return float(np.abs(transform.values[outside]).max() / transform.peak)


# Smooth plateau functions


@lru_cache(maxsize=1)
def _bump_nodes():
    return np.polynomial.legendre.leggauss(BUMP_NODES)


def _bump(u: np.ndarray) -> np.ndarray:
    inside = (u > 0) & (u < 1)
    out = np.zeros_like(u)
    out[inside] = np.exp(-1 / (u[inside] * (1 - u[inside])))
    return out


def smooth_step(u: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for u <= 0, 1 for u >= 1, integrated bump between."""
    u = np.asarray(u, dtype=float)
    nodes, weights = _bump_nodes()
    out = np.clip(u, 0.0, 1.0)
    ramp = (u > 0) & (u < 1)
    if ramp.any():
        upper = u[ramp]
        # int_0^u bump, mapped onto Gauss-Legendre nodes per point
        points = upper[:, None] * (nodes[None, :] + 1) / 2
        partial = (_bump(points) * weights[None, :]).sum(axis=1) * upper / 2
        total = (_bump((nodes + 1) / 2) * weights).sum() / 2
        out[ramp] = partial / total
    return out


def psi(y: np.ndarray) -> np.ndarray:
    """0 for y <= -1, 1 for y >= -1/2, smooth between."""
    return smooth_step(2 * (np.asarray(y, dtype=float) + 1))


def mollifier(u: np.ndarray) -> np.ndarray:
    """Even bump: 1 on [-1/4, 1/4], 0 outside [-1/2, 1/2]."""
    return smooth_step((0.5 - np.abs(np.asarray(u, dtype=float))) / 0.25)


def gaussian(x: np.ndarray) -> np.ndarray:
    """(4 pi)^{-1/2} e^{-x^2/4}, whose transform is e^{-lam^2}."""
    return np.exp(-np.asarray(x)**2 / 4) / math.sqrt(4 * math.pi)


def triangle(radius: float) -> Callable[[np.ndarray], np.ndarray]:
    """max(0, 1 - |t| / radius)."""
    return lambda t: np.maximum(0.0, 1 - np.abs(t) / radius)


def triangle_pair(radius: float) -> Callable[[np.ndarray], np.ndarray]:
    """Inverse transform of the triangle: (1 - cos(r x)) / (pi r x^2)."""

    def pair(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        small = np.abs(x) < 1e-4
        safe = np.where(small, 1.0, x)
        out = (1 - np.cos(radius * safe)) / (math.pi * radius * safe**2)
        # series for small x: r/(2 pi) (1 - (r x)^2 / 12)
        return np.where(small, radius / (2 * math.pi) * (1 - (radius * x)**2 / 12), out)

    return pair


# Band-limited calculus


@dataclass(eq=False)
class BandLimitedResult:
    """F(sqrt L) from a compactly supported transform, with its support radii."""
    matrix: np.ndarray
    support_radius: float
    wave_radius: float
    nodes: int


def apply_band_limited(dec: SpectralDecomposition,
                       f_hat: SampledEvenFunction,
                       space: Optional[MetricMeasureSpace] = None,
                       eps: float = 1e-10) -> BandLimitedResult:
    """F(sqrt L) = (1/pi) int_0^r f_hat(t) cos(t sqrt L) dt by the trapezoid rule."""
    radius = f_hat.declared_ft_support
    if radius is None:
        raise ValidationError('apply_band_limited needs a declared transform support')
    nyquist = math.pi / math.sqrt(dec.spectral_radius) if dec.spectral_radius > 0 else np.inf
    if f_hat.step > nyquist:
        raise ValidationError(f'node spacing {f_hat.step:g} is coarser than the Nyquist spacing '
                              f'{nyquist:g} for spectral radius {dec.spectral_radius:g}')
    violation = ft_support_violation(f_hat, radius)
    if violation > 1e-10:
        raise ValidationError(f"{f_hat.name or 'f_hat'} has relative size {violation:.3g} "
                              f"outside its declared support {radius:g}")
    keep = f_hat.grid <= radius * (1 + 1e-12)
    window = SampledEvenFunction(f_hat.step, f_hat.values[keep], radius, f_hat.name)
    values = transform_at(window, np.sqrt(dec.eigenvalues)) / (2 * math.pi)
    matrix = apply_values(dec, values)
    support = wave = 0.0
    if space is not None:
        support = eps_support_radius(kernel_of(matrix, space, dec.l), space, eps)
        wave = eps_support_radius(wave_kernel(dec, radius), space, eps)
    return BandLimitedResult(matrix, support, wave, int(keep.sum()))


# Gaussian truncation family


@dataclass(eq=False)
class Gl2Family:  # pylint: disable=too-many-instance-attributes
    """phi_s(x) = psi(s(|x| - s)) splitting the Gaussian into F_s + R_s.

    R_s vanishes for |x| > s - 1/(2s); F_s vanishes for |x| < s - 1/s.
    """
    s: float
    step: float
    gaussian: SampledEvenFunction
    phi: np.ndarray
    f_part: SampledEvenFunction
    r_part: SampledEvenFunction
    f_hat: SampledEvenFunction = field(repr=False)
    r_hat: SampledEvenFunction = field(repr=False)

    @property
    def r_support(self) -> float:
        """Half-width of the support of R_s."""
        return self.s - 1 / (2 * self.s)

    def ft_at(self, lam: np.ndarray) -> np.ndarray:
        """F_hat_s at arbitrary frequencies."""
        return transform_at(self.f_part, lam)

    def j_root(self, t: float, lam: np.ndarray) -> np.ndarray:
        """J(lam) = sqrt(F_hat_s(sqrt(t) lam)), principal complex branch."""
        return np.sqrt(self.ft_at(math.sqrt(t) * np.asarray(lam)) + 0j)


def gl2_grid(s: float, step: Optional[float], half_width: Optional[float]):
    """Default sampling: 32 points across the ramp of width 1/(2s)."""
    if step is None:
        step = 1 / (64 * s)
    if half_width is None:
        half_width = max(s + 12, 10 * math.pi * s)
    return step, half_width


def build_gl2_family(s: float,
                     step: Optional[float] = None,
                     half_width: Optional[float] = None) -> Gl2Family:
    """Splits (4 pi)^{-1/2} e^{-x^2/4} by the smooth cutoff phi_s."""
    if s <= 1:
        raise ValidationError(f'the truncation family needs s > 1, got {s}')
    step, half_width = gl2_grid(s, step, half_width)
    base = sample_even(gaussian, step, half_width, 'gaussian')
    phi = psi(s * (base.grid - s))
    f_part = SampledEvenFunction(step, phi * base.values, None, f'F_{s:g}')
    r_part = SampledEvenFunction(step, base.values - f_part.values, s - 1 / (2 * s),
                                 f'R_{s:g}')
    f_hat = transform_even(f_part, name=f'F_hat_{s:g}')
    r_hat = transform_even(r_part, name=f'R_hat_{s:g}')
    LOGGER.debug('gl2 family s=%g: %d samples, step %g, T %g', s, base.values.size, step,
                 half_width)
    return Gl2Family(s, step, base, phi, f_part, r_part, f_hat, r_hat)


def osz_constant(family: Gl2Family, n_power: int, max_ratio: float = 10.0) -> float:
    """sup_lam |F_hat_s(lam)| s (1 + lam^2/s^2)^{N/2} e^{s^2/4} over lam <= max_ratio s."""
    s = family.s
    lam = family.f_hat.grid
    keep = lam <= max_ratio * s
    weight = s * (1 + (lam[keep] / s)**2)**(n_power / 2) * math.exp(s * s / 4)
    return float(np.max(np.abs(family.f_hat.values[keep]) * weight))


def verify_osz_decay(n_power: int = 2,
                     s_values: Sequence[float] = (2.0, 4.0, 8.0),
                     tolerance: float = 0.2,
                     families: Optional[Dict[float, Gl2Family]] = None) -> CheckReport:
    """Checks that the decay constant of F_hat_s is stable across s."""
    if n_power < 0:
        raise ValidationError(f'N must be nonnegative, got {n_power}')
    families = families or {}
    rows = []
    constants = []
    for s in s_values:
        family = families.get(s) or build_gl2_family(s)
        value = osz_constant(family, n_power)
        constants.append(value)
        rows.append({'s': s, 'constant': value, 'step': family.step,
                     'half_width': family.f_part.half_width})
    finite = all(math.isfinite(c) and c > 0 for c in constants)
    spread = max(constants) / min(constants) - 1 if finite else math.inf
    passed = finite and spread <= tolerance
    LOGGER.info('osz decay N=%d constants %s, spread %.3g', n_power,
                ', '.join(f'{c:.4g}' for c in constants), spread)
    return CheckReport('osz_decay',
                       'decay of the truncated Gaussian transform', {
                           'n_power': n_power,
                           's_values': list(s_values)
                       },
                       max(constants),
                       tolerance,
                       passed,
                       rows=rows,
                       details={'spread': spread})


# Phi family


def _sinc_power_taylor(p: int, terms: int) -> np.ndarray:
    """Coefficients in u^2 of sinc(u/p)^p, where sinc(z) = sin z / z."""
    base = np.array([(-1)**k / math.factorial(2 * k + 1) / p**(2 * k) for k in range(terms)])
    return poly.polypow(base, p)[:terms]


def _sinc_power(u: np.ndarray, p: int) -> np.ndarray:
    return np.sinc(np.asarray(u) / (p * math.pi))**p


@dataclass(eq=False)
class PhiFamily:
    """Phi(x) = sum_i c_i S(a_i x), S(u) = sinc(u/p)^p, transform inside [-1, 1].

    Phi(0) = 1 and the even derivatives of order 2..K vanish at 0.
    """
    k_order: int
    power: int
    dilations: np.ndarray
    coefficients: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a, c in zip(self.dilations, self.coefficients):
            out = out + c * _sinc_power(a * x, self.power)
        return out

    def dilated(self, r: float) -> Callable[[np.ndarray], np.ndarray]:
        """Phi_r(x) = Phi(r x)."""
        return lambda x: self(r * np.asarray(x))

    def vanishing_order(self) -> int:
        """q such that 1 - Phi(x) = O(x^q) at 0."""
        return 2 * (self.k_order // 2 + 1)

    def ft(self, lam: np.ndarray) -> np.ndarray:
        """Closed-form Phi_hat: sum_i c_i (2 pi / a_i) (p/2) B_p(lam / a_i).

        B_p is the cardinal B-spline of degree p - 1 on p + 1 equally spaced
        knots in [-1, 1], the density of a sum of p uniforms scaled by 2/p.
        """
        lam = np.asarray(lam, dtype=float)
        knots = np.linspace(-1, 1, self.power + 1)
        spline = interpolate.BSpline.basis_element(knots, extrapolate=False)
        out = np.zeros_like(lam)
        for a, c in zip(self.dilations, self.coefficients):
            scaled = lam / a
            values = np.nan_to_num(spline(scaled))
            out = out + c * (2 * math.pi / a) * (self.power / 2) * values
        return out

    def sampled(self, step: float = 0.25, half_width: float = 1000.0) -> SampledEvenFunction:
        """Samples of Phi with declared transform support 1."""
        return sample_even(self, step, half_width, f'Phi K={self.k_order}', 1.0)


def build_phi_family(k_order: int, power: Optional[int] = None, max_cond: float = 1e12) -> PhiFamily:
    """Solves the moment system for Phi with K vanishing derivatives at 0."""
    if k_order < 0:
        raise ValidationError(f'K must be nonnegative, got {k_order}')
    if k_order == 0:
        return PhiFamily(0, 2, np.array([1.0]), np.array([1.0]))
    if power is None:
        power = max(8, k_order + 4)
    moments = k_order // 2
    count = moments + 1
    dilations = 1 - np.arange(count) / (2 * count)
    # Phi^{(2j)}(0) = (2j)! S_j sum_i c_i a_i^{2j} with S_j the Taylor coefficient of S,
    # so row j only needs the powers a_i^{2j}.
    system = np.array([[a**(2 * j) for a in dilations] for j in range(count)])
    rhs = np.zeros(count)
    rhs[0] = 1.0
    cond = np.linalg.cond(system)
    if not np.isfinite(cond) or cond > max_cond:
        raise FamilyError(f'moment system for K={k_order} is singular (condition {cond:.3g}); '
                          f'try {count + 1} dilations')
    coefficients = np.linalg.solve(system, rhs)
    LOGGER.debug('phi family K=%d p=%d dilations %s coefficients %s', k_order, power, dilations,
                 coefficients)
    return PhiFamily(k_order, power, dilations, coefficients)


def phi_derivatives(phi: PhiFamily, order: int, h: float = 1e-3) -> List[float]:
    """Central finite-difference derivatives of Phi at 0, orders 1..order."""
    out = []
    for k in range(1, order + 1):
        offsets = np.arange(k + 1) - k / 2
        coeffs = np.array([(-1)**j * math.comb(k, j) for j in range(k + 1)])[::-1]
        out.append(float(np.dot(coeffs, phi(offsets * h)) / h**k))
    return out


# Riesz tail family


@dataclass(eq=False)
class RieszTailFamily:  # pylint: disable=too-many-instance-attributes
    """Mollification split of h(lam) = lam^{-2 alpha} (1 - Phi(lam)).

    R is the inverse transform of h_hat(u) phi(2^{-j} u), F = h - R, and
    J(lam) = (1 + 2^{2j} lam^2)^m lam^{2 alpha} F(lam).
    """
    alpha: float
    j: int
    m: int
    phi: PhiFamily
    h_part: SampledEvenFunction
    h_hat: SampledEvenFunction
    f_part: SampledEvenFunction
    r_part: SampledEvenFunction
    r_hat: SampledEvenFunction

    @property
    def grid(self) -> np.ndarray:
        """Spectral grid."""
        return self.h_part.grid

    def j_values(self) -> np.ndarray:
        """J_j on the grid."""
        lam = self.grid
        return (1 + 4.0**self.j * lam**2)**self.m * lam**(2 * self.alpha) * self.f_part.values

    def scan_window(self) -> float:
        """Sup scans stay inside [0, T/2], away from the periodic seam."""
        return min(128 * 2.0**-self.j, self.h_part.half_width / 2)

    def tail_value(self, lam: np.ndarray) -> np.ndarray:
        """h at arbitrary lam > 0."""
        lam = np.asarray(lam, dtype=float)
        return lam**(-2 * self.alpha) * (1 - self.phi(lam))


def riesz_tail_profile(phi: PhiFamily, alpha: float, lam: np.ndarray) -> np.ndarray:
    """lam^{-2 alpha} (1 - Phi(lam)) with its limit at lam = 0."""
    lam = np.asarray(lam, dtype=float)
    order = phi.vanishing_order()
    out = np.empty_like(lam)
    positive = lam > 0
    out[positive] = lam[positive]**(-2 * alpha) * (1 - phi(lam[positive]))
    if order > 2 * alpha:
        limit = 0.0
    else:
        taylor = _sinc_power_taylor(phi.power, order // 2 + 1)
        coefficient = sum(c * a**order for a, c in zip(phi.dilations, phi.coefficients))
        limit = -float(coefficient * taylor[order // 2])
    out[~positive] = limit
    return out


def build_riesz_tail_family(alpha: float,
                            j: int,
                            m: int,
                            k_order: int = 2,
                            phi: Optional[PhiFamily] = None,
                            step: Optional[float] = None,
                            half_width: float = 256.0) -> RieszTailFamily:
    """Builds F_j, R_j and J_j on a periodic grid over [0, T]."""
    if alpha < 0:
        raise ValidationError(f'alpha must be nonnegative, got {alpha}')
    if j < 1:
        raise ValidationError(f'j must be at least 1, got {j}')
    if m < 0:
        raise ValidationError(f'm must be nonnegative, got {m}')
    phi = phi or build_phi_family(k_order)
    if phi.vanishing_order() < 2 * alpha:
        raise FamilyError(f'K={phi.k_order} leaves lam^(-2 alpha) (1 - Phi) unbounded near 0 '
                          f'for alpha={alpha}; Phi needs more vanishing derivatives at 0')
    if step is None:
        step = 2.0**-j / 64
    h_part = sample_even(lambda lam: riesz_tail_profile(phi, alpha, lam), step, half_width,
                         f'H_{alpha:g}')
    h_hat = transform_even(h_part, check_window=False)
    cut = mollifier(2.0**-j * h_hat.grid)
    r_hat = SampledEvenFunction(h_hat.step, h_hat.values * cut, 2.0**(j - 1), f'R_hat_{j}')
    f_hat = SampledEvenFunction(h_hat.step, h_hat.values - r_hat.values, None, f'F_hat_{j}')
    r_part = inverse_transform_even(r_hat, name=f'R_{j}')
    f_part = inverse_transform_even(f_hat, name=f'F_{j}')
    return RieszTailFamily(alpha, j, m, phi, h_part, h_hat, f_part, r_part, r_hat)


def verify_pom_estimate(alpha: float = 0.5,
                        m: int = 1,
                        k_order: int = 2,
                        j_values: Sequence[int] = (1, 2, 3, 4, 5, 6),
                        ratio_limit: float = 0.6) -> CheckReport:
    """sup_lam |J_j(lam)| must decay geometrically in j."""
    phi = build_phi_family(k_order)
    rows = []
    sups = []
    for j in j_values:
        family = build_riesz_tail_family(alpha, j, m, phi=phi)
        keep = family.grid <= family.scan_window()
        sup = float(np.abs(family.j_values()[keep]).max())
        sups.append(sup)
        rows.append({'j': j, 'sup': sup, 'scaled_sup': sup * 2.0**j})
    ratios = [b / a for a, b in zip(sups, sups[1:]) if a > 0]
    worst = max(ratios) if ratios else 0.0
    passed = all(math.isfinite(s) for s in sups) and worst <= ratio_limit
    LOGGER.info('pom estimate alpha=%g m=%d: worst consecutive ratio %.4g', alpha, m, worst)
    return CheckReport('pom_estimate',
                       'dyadic decay of the Riesz tail pieces', {
                           'alpha': alpha,
                           'm': m,
                           'k_order': k_order,
                           'j_values': list(j_values)
                       },
                       worst,
                       ratio_limit,
                       passed,
                       rows=rows,
                       details={'bound': max(r['scaled_sup'] for r in rows)})
