"""
Check registry and suite runner.

Every check is a function of (model, params, seed) returning a CheckReport.
Parameters start from the registry defaults, are overridden by the run
configuration, and the check's tolerance parameter is multiplied by the
tolerance scale unless an explicit tolerance is configured.
"""

import csv
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy

from heatwave import bundle_op, cz_riesz, gaussian, multiplier, wave_heat
from heatwave import models as model_checks
from heatwave.check_report import CheckReport
from heatwave.errors import ConfigError, HeatwaveError
from heatwave.log_setup import GOOD, attach_run_log, detach_run_log
from heatwave.model_spec import Model, build_model
from heatwave.run_config import RunConfig, write_resolved
from heatwave.space import doubling_profile
from heatwave.version import __version__

LOGGER = logging.getLogger(__name__)

SUMMARY_COLUMNS = ['check', 'status', 'observed', 'threshold']

CheckFunction = Callable[[Model, Dict[str, Any], int], CheckReport]


@dataclass(frozen=True)
class CheckEntry:
    """A registered check: its function, default parameters and tolerance parameter."""
    function: CheckFunction
    defaults: Dict[str, Any]
    tolerance_key: Optional[str] = None
    description: str = ''


def _triples(model: Model, distances, times, x: int = 0) -> List[Tuple[int, int, float]]:
    """(x, y, t) with rho(x, y) in distances and t < rho^2."""
    triples = []
    for rho in distances:
        hits = np.flatnonzero(np.isclose(model.space.rho[x], rho))
        if not hits.size:
            continue
        for t in times:
            if t < rho * rho:
                triples.append((x, int(hits[0]), float(t)))
    if not triples:
        raise ConfigError(f'model {model.name} has no points at distances {list(distances)} '
                          f'from point {x}')
    return triples


def _magnetic(model: Model, seed: int) -> model_checks.MagneticSchrodinger:
    if model.magnetic is not None:
        return model.magnetic
    return model_checks.build_magnetic(model.space,
                                       model_checks.random_phases(model.space, seed))


def _riesz_operator(model: Model) -> Tuple[cz_riesz.LocalOperator, Optional[float]]:
    """The gradient matching the model operator and the exact norm when it is known."""
    if model.magnetic is not None:
        exact = None if np.any(model.magnetic.potential) else 1.0
        return model_checks.covariant_gradient(model.magnetic), exact
    if model.operator.name in ('laplacian', 'hodge L0'):
        return cz_riesz.gradient_operator(model.space), 1.0
    raise ConfigError(f'model {model.name} has no gradient matching its operator')


def _functional_calculus(model: Model, p: Dict[str, Any], _seed: int) -> CheckReport:
    return bundle_op.functional_calculus_check(model.operator, p['t'], p['degree'],
                                               p['tolerance'])


def _compose_bound(model: Model, p: Dict[str, Any], _seed: int) -> CheckReport:
    wave_time, t = p['wave_time'], p['t']
    return bundle_op.compose_bound_check(lambda lam: np.cos(wave_time * np.sqrt(lam)),
                                         lambda lam: np.exp(-t * lam), model.decomposition(),
                                         p['norm'])


def _ellip_equivalence(model: Model, p: Dict[str, Any], _seed: int) -> CheckReport:
    d_exponent = p['d_exponent']
    if d_exponent is None:
        d_exponent = doubling_profile(model.space).d_exponent
    return wave_heat.ellip_equivalence_check(model.decomposition(), model.space, p['t_grid'],
                                             p['m'], d_exponent)


def _propagation_speed(model: Model, p: Dict[str, Any], _seed: int) -> CheckReport:
    return wave_heat.propagation_speed_estimate(model.decomposition(), model.space, p['t_grid'],
                                                p['eps'], p['cone_factor'])


def _davies_gaffney(model: Model, p: Dict[str, Any], _seed: int) -> CheckReport:
    grid = wave_heat.default_pair_grid(model.space, p['distances'], p['times'])
    return wave_heat.davies_gaffney_check(model.decomposition(), model.space, grid,
                                          p['constant'], p['probe'], p['ball_radius'])


def _subordination(model: Model, p: Dict[str, Any], _seed: int) -> CheckReport:
    return wave_heat.subordination_check(model.decomposition(), p['s'], p['nodes'],
                                         p['threshold'])


def _truncation_identity(model: Model, p: Dict[str, Any], _seed: int) -> CheckReport:
    triples = _triples(model, p['distances'], p['times'])
    return gaussian.truncation_identity_check(model.decomposition(), model.space, triples,
                                              p['wave_samples'])


def _gl2_bound(model: Model, p: Dict[str, Any], seed: int) -> CheckReport:
    triples = _triples(model, p['distances'], p['times'])
    refined = None
    if p['refine'] and model.refined_spec:
        larger = build_model(model.refined_spec, seed)
        refined = (larger.decomposition(), larger.space)
    return gaussian.gl2_bound_check(model.decomposition(), model.space, triples, p['n_power'],
                                    p['variant'], refined, p['tolerance'])


def _trivial_bound(model: Model, p: Dict[str, Any], _seed: int) -> CheckReport:
    pairs = [(x, y) for x, y, _ in _triples(model, p['distances'], [0.0])]
    return gaussian.trivial_bound_check(model.decomposition(), model.space, pairs, p['times'])


def _osz_decay(_model: Model, p: Dict[str, Any], _seed: int) -> CheckReport:
    return multiplier.verify_osz_decay(p['n_power'], p['s_values'], p['tolerance'])


def _pom_estimate(_model: Model, p: Dict[str, Any], _seed: int) -> CheckReport:
    return multiplier.verify_pom_estimate(p['alpha'], p['m'], p['k_order'], p['j_values'],
                                          p['ratio_limit'])


def _molchanov(_model: Model, p: Dict[str, Any], _seed: int) -> CheckReport:
    return gaussian.molchanov_sphere_check(p['l_max'], p['t_grid'], p['tolerance'])


def _cz_decomposition(model: Model, p: Dict[str, Any], seed: int) -> CheckReport:
    return cz_riesz.cz_decomposition_check(model.space, p['samples'], seed, p['level_factor'],
                                           p['overlap_limit'])


def _riesz_l2(model: Model, p: Dict[str, Any], seed: int) -> CheckReport:
    op, expected = _riesz_operator(model)
    return cz_riesz.riesz_l2_check(op, model.decomposition(), p['alpha'], expected, p['p'], seed,
                                   p['tolerance'])


def _riesz_uniformity(model: Model, p: Dict[str, Any], seed: int) -> CheckReport:
    levels = [model]
    for _ in range(p['doublings']):
        if not levels[-1].refined_spec:
            raise ConfigError(f'model {levels[-1].name} has no refinement to compare against')
        levels.append(build_model(levels[-1].refined_spec, seed))
    pairs = [(_riesz_operator(level)[0], level.decomposition()) for level in levels]
    return cz_riesz.riesz_uniformity_check(pairs, p['alpha'], p['p'], seed, p['limit'])


def _good_function(model: Model, p: Dict[str, Any], _seed: int) -> CheckReport:
    space = model.space
    atom = np.zeros((space.n, model.operator.l))
    atom[p['point'], 0] = 1.0 / space.mu[p['point']]
    if model.operator.l == 1:
        atom = atom[:, 0]
    phi = multiplier.build_phi_family(p['k_order'])
    return cz_riesz.good_function_diagnostic(space, model.decomposition(), atom, p['level'], phi,
                                           n_power=p['n_power'], constant=p['constant'])


def _riesz_tail(model: Model, p: Dict[str, Any], _seed: int) -> CheckReport:
    op, _ = _riesz_operator(model)
    phi = multiplier.build_phi_family(p['k_order'])
    return cz_riesz.riesz_tail_bound_check(op, model.decomposition(), model.space, phi,
                                           p['alpha'], p['r'], p['j_max'], None,
                                           p['ratio_limit'])


def _domination(model: Model, p: Dict[str, Any], seed: int) -> CheckReport:
    return model_checks.domination_check(_magnetic(model, seed), p['t_grid'], p['tolerance'])


def _energy_decay(model: Model, p: Dict[str, Any], _seed: int) -> CheckReport:
    space = model.space
    xi = model_checks.tent_weight(space, p['kappa'], p['apex'])
    degree = np.zeros(space.n)
    for a, b, _ in space.edges:
        degree[a] += 1
        degree[b] += 1
    # kappa^2/2 is the limit only where the graph is locally one-dimensional
    continuum = p['continuum_tolerance'] if degree.max() <= 2 else None
    return model_checks.energy_decay_check(model.operator, xi, p['kappa'], p['t_grid'], None,
                                           p['rescale_levels'], continuum)


def _commutation(model: Model, p: Dict[str, Any], seed: int) -> CheckReport:
    hc = model.hodge
    if hc is None:
        hc = model_checks.build_hodge(model.space.n, [(a, b) for a, b, _ in model.space.edges])
    return model_checks.commutation_check(hc, p['p'], seed)


CHECKS: Dict[str, CheckEntry] = {
    'functional_calculus':
        CheckEntry(_functional_calculus, {
            't': 1.0,
            'degree': 30,
            'tolerance': 1e-10
        }, 'tolerance', 'exp(-tL) by eigensystem, expm and Chebyshev'),
    'compose_bound':
        CheckEntry(_compose_bound, {
            'wave_time': 1.0,
            't': 1.0,
            'norm': 'hilbert-schmidt'
        }, None, 'row norm bound for F1(L) F2(L)'),
    'ellip_equivalence':
        CheckEntry(_ellip_equivalence, {
            't_grid': [0.5, 1.0, 2.0, 4.0, 8.0],
            'm': 4.0,
            'd_exponent': None
        }, None, 'heat and resolvent on-diagonal bounds'),
    'propagation_speed':
        CheckEntry(_propagation_speed, {
            't_grid': [2.0, 4.0, 6.0, 8.0],
            'eps': 1e-10,
            'cone_factor': 1.1
        }, 'cone_factor', 'support growth of cos(t sqrt L)'),
    'davies_gaffney':
        CheckEntry(_davies_gaffney, {
            'distances': [2, 4, 8, 16, 32],
            'times': [0.5, 1.0, 2.0, 4.0],
            'constant': 2.0,
            'probe': 'point',
            'ball_radius': 0.0
        }, 'constant', 'Gaussian off-diagonal decay of exp(-tL)'),
    'subordination':
        CheckEntry(_subordination, {
            's': 0.5,
            'nodes': 64,
            'threshold': 1e-6
        }, 'threshold', 'exp(-sL) from wave propagators'),
    'truncation_identity':
        CheckEntry(_truncation_identity, {
            'distances': [8, 16],
            'times': [4.0],
            'wave_samples': 64
        }, None, 'truncated Gaussian heat kernel'),
    'gl2_bound':
        CheckEntry(_gl2_bound, {
            'distances': [8, 16],
            'times': [2.0, 4.0],
            'n_power': 4,
            'variant': 'zw1',
            'refine': True,
            'tolerance': 0.25
        }, 'tolerance', 'Gaussian upper bound constant'),
    'trivial_bound':
        CheckEntry(_trivial_bound, {
            'distances': [2, 4],
            'times': [16.0, 32.0]
        }, None, 'large-time product bound'),
    'osz_decay':
        CheckEntry(_osz_decay, {
            'n_power': 2,
            's_values': [2.0, 4.0, 8.0],
            'tolerance': 0.2
        }, 'tolerance', 'decay of the truncated Gaussian transform'),
    'pom_estimate':
        CheckEntry(_pom_estimate, {
            'alpha': 0.5,
            'm': 1,
            'k_order': 2,
            'j_values': [1, 2, 3, 4, 5, 6],
            'ratio_limit': 0.6
        }, 'ratio_limit', 'dyadic decay of the Riesz tail pieces'),
    'molchanov':
        CheckEntry(_molchanov, {
            'l_max': 60,
            't_grid': [0.15, 0.2, 0.25, 0.3],
            'tolerance': 0.05
        }, 'tolerance', 'antipodal heat kernel exponent on the sphere'),
    'cz_decomposition':
        CheckEntry(_cz_decomposition, {
            'samples': 50,
            'level_factor': 2.0,
            'overlap_limit': 16.0
        }, 'overlap_limit', 'Calderon-Zygmund decomposition bounds'),
    'riesz_l2':
        CheckEntry(_riesz_l2, {
            'alpha': 0.5,
            'p': 1.5,
            'tolerance': 1e-8
        }, 'tolerance', 'L2 norm of the Riesz transform'),
    'riesz_uniformity':
        CheckEntry(_riesz_uniformity, {
            'alpha': 0.5,
            'p': 1.5,
            'doublings': 3,
            'limit': 0.25
        }, 'limit', 'Riesz L^p and weak (1,1) estimates under refinement'),
    'good_function':
        CheckEntry(_good_function, {
            'point': 0,
            'level': 0.125,
            'k_order': 2,
            'n_power': 4,
            'constant': 16.0
        }, 'constant', 'modified good function bounds'),
    'riesz_tail':
        CheckEntry(_riesz_tail, {
            'alpha': 0.5,
            'r': 4.0,
            'j_max': 6,
            'k_order': 2,
            'ratio_limit': 0.75
        }, 'ratio_limit', 'annulus decay of the Riesz transform tail'),
    'domination':
        CheckEntry(_domination, {
            't_grid': [0.1, 1.0, 10.0],
            'tolerance': 1e-12
        }, 'tolerance', 'magnetic heat kernel domination'),
    'energy_decay':
        CheckEntry(_energy_decay, {
            'kappa': 0.5,
            'apex': 0,
            't_grid': [1e-3, 1e-2, 0.1, 1.0],
            'rescale_levels': [0.5, 0.25],
            'continuum_tolerance': 0.15
        }, 'continuum_tolerance', 'weighted energy growth along the heat flow'),
    'commutation':
        CheckEntry(_commutation, {'p': 2.0}, None, 'Hodge Laplacian intertwining'),
}


def check_names() -> List[str]:
    """Registered check names, sorted."""
    return sorted(CHECKS)


def resolve_params(name: str,
                   overrides: Optional[Dict[str, Any]] = None,
                   tolerance_scale: float = 1.0,
                   tolerance: Optional[float] = None) -> Dict[str, Any]:
    """Defaults, then overrides, then the tolerance adjustments."""
    if name not in CHECKS:
        raise ConfigError(f"unknown check '{name}'; valid checks: {', '.join(check_names())}")
    entry = CHECKS[name]
    params = dict(entry.defaults)
    overrides = overrides or {}
    unknown = sorted(set(overrides) - set(params))
    if unknown:
        raise ConfigError(f"check '{name}' has no parameters {', '.join(unknown)}; "
                          f"valid: {', '.join(sorted(params))}")
    params.update(overrides)
    key = entry.tolerance_key
    if key is not None and params[key] is not None:
        if tolerance is not None:
            params[key] = float(tolerance)
        elif key not in overrides:
            params[key] = params[key] * tolerance_scale
    return params


def run_check(name: str, model: Model, params: Dict[str, Any], seed: int = 0) -> CheckReport:
    """Runs one check and records its wall time on the report."""
    start = time.perf_counter()
    report = CHECKS[name].function(model, params, seed)
    report.runtime_ms = (time.perf_counter() - start) * 1000.0
    if report.passed:
        LOGGER.log(GOOD, 'PASS %s: observed %.6g, threshold %.6g', name,
                   report.observed_constant, report.threshold)
    else:
        LOGGER.error('FAIL %s: observed %.6g, threshold %.6g', name, report.observed_constant,
                     report.threshold)
    return report


def write_summary(reports: List[CheckReport], out_dir: str) -> str:
    """Writes summary.csv with one row per check."""
    filename = os.path.join(out_dir, 'summary.csv')
    with open(filename, 'w', encoding='utf-8', newline='') as out_file:
        writer = csv.writer(out_file)
        writer.writerow(SUMMARY_COLUMNS)
        for report in reports:
            writer.writerow(report.summary_row())
    return filename


def read_summary(out_dir: str) -> List[List[str]]:
    """Rows of summary.csv, rebuilt from the report files when it is missing."""
    filename = os.path.join(out_dir, 'summary.csv')
    if os.path.exists(filename):
        with open(filename, 'r', encoding='utf-8', newline='') as in_file:
            rows = list(csv.reader(in_file))
        return rows[1:]
    if not os.path.isdir(out_dir):
        raise ConfigError(f"no report directory '{out_dir}'")
    rows = []
    for entry in sorted(os.listdir(out_dir)):
        if not entry.endswith('.json') or entry == 'metadata.json':
            continue
        with open(os.path.join(out_dir, entry), 'r', encoding='utf-8') as in_file:
            data = json.load(in_file)
        if 'check_name' not in data:
            continue
        rows.append([
            data['check_name'], 'PASS' if data['pass'] else 'FAIL',
            f"{float(data['observed_constant']):.6g}", f"{float(data['threshold']):.6g}"
        ])
    if not rows:
        raise ConfigError(f"no reports found in '{out_dir}'")
    return rows


def _needs_spectrum(names: List[str]) -> bool:
    independent = {'osz_decay', 'pom_estimate', 'molchanov', 'cz_decomposition', 'domination',
                   'energy_decay', 'commutation', 'functional_calculus'}
    return any(name not in independent for name in names)


def run_suite(config: RunConfig) -> Tuple[int, List[CheckReport]]:
    """Runs the configured checks and writes the report bundle.

    Returns (status, reports) with status 0 when every check passes and 1
    otherwise. Configuration and model problems raise ConfigError.
    """
    names = config.check_names()
    if not names:
        raise ConfigError('no checks selected')
    params = [
        resolve_params(c.name, c.params, config.tolerance_scale, config.tolerances.get(c.name))
        for c in config.checks
    ]
    model = build_model(config.model, config.seed)
    os.makedirs(config.output, exist_ok=True)
    log_handler = attach_run_log(config.output)
    started = datetime.now(timezone.utc)
    try:
        LOGGER.info('model %s: %d points, fiber %d', model.name, model.space.n, model.operator.l)
        try:
            if _needs_spectrum(names):
                # computed once up front so concurrent checks share it
                model.decomposition()

            def run(index: int) -> CheckReport:
                return run_check(names[index], model, params[index], config.seed)

            if config.jobs > 1:
                with ThreadPoolExecutor(max_workers=config.jobs) as pool:
                    reports = list(pool.map(run, range(len(names))))
            else:
                reports = [run(i) for i in range(len(names))]
        except ConfigError:
            raise
        except HeatwaveError as err:
            raise ConfigError(f'{type(err).__name__}: {err}') from err

        for report in reports:
            report.write(config.output)
        write_summary(reports, config.output)
        write_resolved(config, config.output)
        metadata = {
            'started': started.isoformat(),
            'finished': datetime.now(timezone.utc).isoformat(),
            'runtime_ms': {r.check_name: r.runtime_ms for r in reports},
            'model': model.summary(),
            'versions': {
                'heatwave': __version__,
                'numpy': np.__version__,
                'scipy': scipy.__version__
            },
        }
        with open(os.path.join(config.output, 'metadata.json'), 'w',
                  encoding='utf-8') as out_file:
            json.dump(metadata, out_file, indent=2, sort_keys=True)
    finally:
        detach_run_log(log_handler)
    failed = [r.check_name for r in reports if not r.passed]
    status = 1 if failed else 0
    if failed:
        LOGGER.error('%d of %d checks failed: %s', len(failed), len(reports), ', '.join(failed))
    else:
        LOGGER.log(GOOD, 'all %d checks passed', len(reports))
    return status, reports

