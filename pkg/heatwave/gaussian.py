"""
Off-diagonal Gaussian bounds for the heat kernel.

The heat kernel at (x, y) is compared with the kernel of F_hat_s(sqrt(tL)),
s = rho(x, y) / sqrt(t), which differs from exp(-tL) only by R_hat_s, whose
transform lives inside the wave cone. The remaining checks measure the
constant of the Gaussian upper bound against resolvent or volume profiles,
and the exponent of the antipodal heat kernel on the round sphere.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from heatwave.bundle_op import (SpectralDecomposition, apply_values, hs_column_norms,
                                hs_row_norms)
from heatwave.check_report import CheckReport
from heatwave.errors import RegimeError, ValidationError
from heatwave.models import SphereHeatModel, sphere_spectral_model
from heatwave.multiplier import Gl2Family, build_gl2_family
from heatwave.space import MetricMeasureSpace
from heatwave.wave_heat import OnDiagProfile, resolvent_row_norms

LOGGER = logging.getLogger(__name__)

# Smallest time for which the antipodal sphere series is summed.
SPHERE_GUARD = 0.1

Triple = Tuple[int, int, float]


def pair_block(dec: SpectralDecomposition, x: int, y: int, values: np.ndarray) -> np.ndarray:
    """Kernel blocks K(x, y) for a stack of spectral value rows, shape (k, l, l)."""
    l = dec.l
    left = dec.eigenvectors[x * l:(x + 1) * l, :]
    right = dec.inverse[:, y * l:(y + 1) * l]
    values = np.atleast_2d(values)
    return np.einsum('ak,tk,kb->tab', left, values, right) / dec.space.mu[y]


def block_norm(block: np.ndarray) -> float:
    """Operator norm of an l x l block."""
    return float(np.linalg.norm(block, 2))


def check_regime(space: MetricMeasureSpace, triples: Sequence[Triple]) -> None:
    """Rejects triples outside t < rho(x, y)^2."""
    for x, y, t in triples:
        rho = space.rho[x, y]
        if t <= 0:
            raise ValidationError(f'time must be positive, got t={t} at ({x}, {y})')
        if t >= rho**2:
            raise RegimeError(f'triple ({x}, {y}, t={t}) is outside the Gaussian regime '
                              f't < rho^2 = {rho**2:g}')


def truncation_identity_check(dec: SpectralDecomposition,
                              space: MetricMeasureSpace,
                              triples: Sequence[Triple],
                              wave_samples: int = 64,
                              families: Optional[Dict[float, Gl2Family]] = None) -> CheckReport:
    """Compares K_exp(-tL)(x, y) with K_{F_hat_s(sqrt(tL))}(x, y).

    The difference is the kernel of R_hat_s(sqrt(tL)), bounded by
    ||R_s||_1 times the wave amplitude at (x, y) for |u| sqrt(t) inside
    the support of R_s. The square-root chain
    |K_heat| <= ||K_J(x, .)|| ||K_J(., y)|| + difference, J^2 = F_hat_s(sqrt t .),
    is evaluated alongside.
    """
    check_regime(space, triples)
    families = {} if families is None else families
    lam = dec.eigenvalues
    root = np.sqrt(lam)
    rows = []
    worst = 0.0
    passed = True
    for x, y, t in triples:
        s = float(space.rho[x, y] / math.sqrt(t))
        if s not in families:
            families[s] = build_gl2_family(s)
        family = families[s]
        heat_values = np.exp(-t * lam)
        trunc_values = family.ft_at(math.sqrt(t) * root)
        heat = pair_block(dec, x, y, heat_values)[0]
        trunc = pair_block(dec, x, y, trunc_values)[0]
        difference = block_norm(heat - trunc)

        taus = np.linspace(0, family.r_support * math.sqrt(t), wave_samples)
        waves = pair_block(dec, x, y, np.cos(np.outer(taus, root)))
        wave_sup = max(block_norm(w) for w in waves)
        bound = wave_sup * family.r_part.l1_norm()
        allowed = max(1e-8, bound) * (1 + 1e-6)

        j_matrix = apply_values(dec, family.j_root(t, root))
        row_x = hs_row_norms(j_matrix, space, dec.l)[x]
        col_y = hs_column_norms(j_matrix, space, dec.l)[y]
        chain_rhs = row_x * col_y + difference
        chain_holds = block_norm(heat) <= chain_rhs * (1 + 1e-9) + 1e-15

        ok = difference <= allowed and chain_holds
        passed = passed and ok
        worst = max(worst, difference / allowed)
        rows.append({
            'x': x,
            'y': y,
            't': t,
            's': s,
            'heat': block_norm(heat),
            'difference': difference,
            'wave_sup': wave_sup,
            'bound': bound,
            'chain_rhs': chain_rhs,
            'chain_holds': chain_holds,
        })
        LOGGER.debug('truncation (%d, %d, t=%g) s=%.4g diff %.3g bound %.3g', x, y, t, s,
                     difference, bound)
    LOGGER.info('truncation identity: worst difference/allowed %.4g', worst)
    return CheckReport('truncation_identity',
                       'truncated Gaussian representation of the heat kernel',
                       {'triples': [list(tr) for tr in triples]},
                       worst,
                       1.0,
                       passed,
                       rows=rows)


def _check_profile(profile: Optional[OnDiagProfile], space: MetricMeasureSpace,
                   n_power: int) -> None:
    if profile is None:
        return
    if profile.choice != 'resolvent':
        raise ValidationError(f"profile must come from the resolvent, got {profile.choice!r}")
    if profile.n_power != n_power:
        raise ValidationError(f'profile was built with N={profile.n_power}, expected N={n_power}')
    if profile.values.shape[0] != space.n:
        raise ValidationError(f'profile covers {profile.values.shape[0]} points, '
                              f'space has {space.n}')


def gl2_constant(dec: SpectralDecomposition,
                 space: MetricMeasureSpace,
                 triples: Sequence[Triple],
                 n_power: int = 4,
                 variant: str = 'zw1',
                 profile: Optional[OnDiagProfile] = None) -> Tuple[float, List[Dict[str, float]]]:
    """Observed constant |K_heat| (rho/sqrt t) e^{rho^2/4t} / (V_x V_y) and the rows.

    A precomputed resolvent profile must hold every t / rho of the triples.
    """
    if variant not in ('zw1', 'zw2'):
        raise ValidationError(f"variant must be 'zw1' or 'zw2', got {variant!r}")
    _check_profile(profile, space, n_power)
    check_regime(space, triples)
    profiles: Dict[float, np.ndarray] = {}
    rows = []
    worst = 0.0
    for x, y, t in triples:
        rho = float(space.rho[x, y])
        tau = t / rho
        if tau not in profiles:
            if profile is not None:
                table = profile.values if variant == 'zw1' else profile.volume
                profiles[tau] = table[:, profile.index(tau)]
            elif variant == 'zw1':
                profiles[tau] = resolvent_row_norms(dec, tau, n_power)
            else:
                profiles[tau] = space.volumes(tau)**-0.5
        column = profiles[tau]
        heat = block_norm(pair_block(dec, x, y, np.exp(-t * dec.eigenvalues))[0])
        # log form keeps e^{rho^2/4t} from overflowing far from the diagonal
        log_value = (math.log(heat) if heat > 0 else -math.inf) + math.log(rho / math.sqrt(t)) \
            + rho**2 / (4 * t) - math.log(column[x] * column[y])
        value = math.exp(log_value) if log_value > -math.inf else 0.0
        worst = max(worst, value)
        rows.append({'x': x, 'y': y, 't': t, 'rho': rho, 'heat': heat, 'v_x': float(column[x]),
                     'v_y': float(column[y]), 'constant': value})
    return worst, rows


def gl2_bound_check(dec: SpectralDecomposition,
                    space: MetricMeasureSpace,
                    triples: Sequence[Triple],
                    n_power: int = 4,
                    variant: str = 'zw1',
                    refined: Optional[Tuple[SpectralDecomposition, MetricMeasureSpace]] = None,
                    tolerance: float = 0.25,
                    profile: Optional[OnDiagProfile] = None) -> CheckReport:
    """Gaussian upper bound constant, stable under model refinement.

    With refined = (dec2, space2) the same triples are evaluated on the
    larger model and the constants must agree within tolerance. A given
    profile replaces the resolvent row norms and volumes of the base model.
    """
    constant, rows = gl2_constant(dec, space, triples, n_power, variant, profile)
    other = 'zw2' if variant == 'zw1' else 'zw1'
    cross, _ = gl2_constant(dec, space, triples, n_power, other, profile)
    details: Dict[str, float] = {f'constant_{other}': cross}
    passed = math.isfinite(constant)
    if refined is not None:
        refined_constant, _ = gl2_constant(refined[0], refined[1], triples, n_power, variant)
        details['refined_constant'] = refined_constant
        change = abs(refined_constant - constant) / max(constant, np.finfo(float).tiny)
        details['relative_change'] = change
        passed = passed and math.isfinite(refined_constant) and change <= tolerance
    LOGGER.info('gaussian bound %s constant %.6g (%s %.6g)', variant, constant, other, cross)
    return CheckReport('gl2_bound',
                       'off-diagonal Gaussian upper bound', {
                           'variant': variant,
                           'n_power': n_power,
                           'triples': [list(tr) for tr in triples],
                           'refined': refined is not None
                       },
                       constant,
                       tolerance,
                       passed,
                       rows=rows,
                       details=details)


def trivial_bound_check(dec: SpectralDecomposition,
                        space: MetricMeasureSpace,
                        pairs: Sequence[Tuple[int, int]],
                        times: Sequence[float]) -> CheckReport:
    """|K_{exp(-2tL)}(x, y)| <= ||K_{exp(-tL)}(x, .)|| ||K_{exp(-tL)}(., y)||."""
    rows = []
    worst = 0.0
    for t in times:
        half = apply_values(dec, np.exp(-t * dec.eigenvalues))
        row_norms = hs_row_norms(half, space, dec.l)
        col_norms = hs_column_norms(half, space, dec.l)
        for x, y in pairs:
            lhs = block_norm(pair_block(dec, x, y, np.exp(-2 * t * dec.eigenvalues))[0])
            rhs = float(row_norms[x] * col_norms[y])
            ratio = lhs / rhs if rhs > 0 else 0.0
            worst = max(worst, ratio)
            rows.append({'x': x, 'y': y, 't': float(t), 'lhs': lhs, 'rhs': rhs})
    threshold = 1 + 1e-9
    return CheckReport('trivial_bound', 'large-time product bound', {'times': list(times)}, worst,
                       threshold, worst <= threshold, rows=rows)


def molchanov_sphere_check(l_max: int = 60,
                           t_grid: Sequence[float] = (0.15, 0.2, 0.25, 0.3),
                           tolerance: float = 0.05,
                           model: Optional[SphereHeatModel] = None) -> CheckReport:
    """Fits the exponent of the antipodal heat kernel on the unit sphere.

    ln[K(t) t / (1 + pi/sqrt t)] against 1/t should have slope -pi^2/4.
    """
    if l_max < 30:
        raise ValidationError(f'l_max must be at least 30, got {l_max}')
    times = np.asarray(t_grid, dtype=float)
    if times.size < 2:
        raise ValidationError('need at least two times for the exponent fit')
    if np.any(times < SPHERE_GUARD):
        raise RegimeError(f'times below {SPHERE_GUARD} lose all digits to cancellation')
    model = model or sphere_spectral_model(l_max)
    kernels = np.array([model.kernel(t) for t in times])
    if np.any(kernels <= 0):
        raise RegimeError('antipodal series lost positivity; increase l_max or t')
    logs = np.log(kernels * times / (1 + math.pi / np.sqrt(times)))
    slope, intercept = np.polyfit(1 / times, logs, 1)
    target = -math.pi**2 / 4
    error = abs(slope - target) / abs(target)
    passed = error <= tolerance
    LOGGER.info('sphere exponent slope %.5g, target %.5g', slope, target)
    rows = [{
        't': float(t),
        'kernel': float(k),
        'log_scaled': float(v),
        'fitted': float(slope / t + intercept),
        'tail_bound': model.tail_bound(t),
    } for t, k, v in zip(times, kernels, logs)]
    return CheckReport('molchanov',
                       'antipodal heat kernel exponent on the sphere', {
                           'l_max': l_max,
                           't_grid': times.tolist()
                       },
                       float(error),
                       tolerance,
                       passed,
                       rows=rows,
                       details={'slope': float(slope), 'target': target})
