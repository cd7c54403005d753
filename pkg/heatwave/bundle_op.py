"""
Self-adjoint positive block operators on sections of a trivial bundle.

A section assigns a vector of length l to every point of a space, flattened
point-major into a vector of length n*l. Operators act on the mu-weighted
inner product <f, g> = sum_x (f(x), g(x)) mu(x), so an operator matrix M is
self-adjoint when W M is Hermitian, with W the diagonal of fiber-repeated
masses.

Kernels divide by the right weight: (S f)(x) = sum_y K(x, y) f(y) mu(y).
"""

import csv
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import yaml
from numpy.polynomial import Chebyshev
from scipy import linalg

from heatwave.check_report import CheckReport
from heatwave.errors import OperatorError, ValidationError
from heatwave.space import MetricMeasureSpace, space_from_dict, space_to_dict

LOGGER = logging.getLogger(__name__)

# Dense eigendecomposition is refused above this many unknowns.
DENSE_LIMIT = 4096

SELF_ADJOINT_TOL = 1e-10
POSITIVITY_TOL = 1e-10

SpectralFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(eq=False)
class BundleOperator:
    """Matrix of a mu-self-adjoint operator on l-dimensional fibers."""
    space: MetricMeasureSpace
    matrix: np.ndarray
    l: int = 1
    locality_hops: Optional[int] = None
    name: str = ''

    def __post_init__(self) -> None:
        self.matrix = np.array(self.matrix)
        size = self.space.n * self.l
        if self.matrix.shape != (size, size):
            raise ValidationError(f'operator matrix has shape {self.matrix.shape}, '
                                  f'expected {(size, size)} for n={self.space.n}, l={self.l}')
        if not np.all(np.isfinite(self.matrix)):
            raise OperatorError('operator matrix has non-finite entries')
        weighted = self.weights[:, None] * self.matrix
        scale = max(float(np.abs(weighted).max()), np.finfo(float).tiny)
        asym = float(np.abs(weighted - weighted.conj().T).max())
        if asym > SELF_ADJOINT_TOL * scale:
            raise OperatorError(f'operator is not self-adjoint for the weighted inner product '
                                f'(asymmetry {asym:.3g}, scale {scale:.3g})')

    @property
    def size(self) -> int:
        """Number of scalar unknowns n*l."""
        return self.space.n * self.l

    @property
    def weights(self) -> np.ndarray:
        """mu repeated over each fiber."""
        return np.repeat(self.space.mu, self.l)

    def scaled(self, factor: float) -> 'BundleOperator':
        """Returns factor * L."""
        return BundleOperator(self.space, factor * self.matrix, self.l, self.locality_hops,
                              f'{factor:g}*{self.name}' if self.name else '')

    def __repr__(self) -> str:
        return f'BundleOperator({self.name or "L"}, n={self.space.n}, l={self.l})'


@dataclass(eq=False)
class SpectralDecomposition:
    """Eigensystem of a BundleOperator.

    eigenvectors are mu-orthonormal columns, U^* W U = I, so that
    F(L) = U diag(F(lambda)) U^* W.
    """
    operator: BundleOperator
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    null_dim: int

    @property
    def space(self) -> MetricMeasureSpace:
        """Space the operator acts over."""
        return self.operator.space

    @property
    def l(self) -> int:
        """Fiber dimension."""
        return self.operator.l

    @property
    def spectral_radius(self) -> float:
        """Largest eigenvalue."""
        return float(self.eigenvalues[-1]) if self.eigenvalues.size else 0.0

    @property
    def inverse(self) -> np.ndarray:
        """U^{-1} = U^* W."""
        return self.eigenvectors.conj().T * self.operator.weights[None, :]


@dataclass(eq=False)
class OperatorKernel:
    """Kernel blocks K(x, y) of shape (n, n, l, l) and the measure they refer to."""
    blocks: np.ndarray
    mu: np.ndarray

    @property
    def n(self) -> int:
        """Number of points."""
        return int(self.blocks.shape[0])

    @property
    def l(self) -> int:
        """Fiber dimension."""
        return int(self.blocks.shape[2])

    def block(self, x: int, y: int) -> np.ndarray:
        """The l x l block K(x, y)."""
        return self.blocks[x, y]

    def norms(self, norm: str = 'operator') -> np.ndarray:
        """n x n array of block norms."""
        if self.l == 1:
            return np.abs(self.blocks[:, :, 0, 0])
        if norm == 'operator':
            return np.linalg.norm(self.blocks, ord=2, axis=(2, 3))
        if norm == 'hilbert-schmidt':
            return np.linalg.norm(self.blocks, ord='fro', axis=(2, 3))
        raise ValidationError(f"unknown block norm '{norm}'")

    def to_csv(self, filename: str) -> None:
        """Writes x, y, |K|, |K|_HS in row-major order."""
        op_norms = self.norms('operator')
        hs_norms = self.norms('hilbert-schmidt')
        with open(filename, 'w', encoding='utf-8', newline='') as out_file:
            writer = csv.writer(out_file)
            writer.writerow(['x', 'y', 'operator_norm', 'hs_norm'])
            for x in range(self.n):
                for y in range(self.n):
                    writer.writerow([x, y, repr(float(op_norms[x, y])), repr(float(hs_norms[x, y]))])


def check_dense_size(op: BundleOperator) -> None:
    """Raises OperatorError when the dense path would be too large."""
    if op.size > DENSE_LIMIT:
        raise OperatorError(f'n*l = {op.size} exceeds the dense limit of {DENSE_LIMIT}; '
                            'use a smaller model')


def symmetrized(op: BundleOperator) -> np.ndarray:
    """W^{1/2} M W^{-1/2}, Hermitian up to rounding, with the same spectrum as L."""
    root = np.sqrt(op.weights)
    sym = root[:, None] * op.matrix / root[None, :]
    return (sym + sym.conj().T) / 2


def spectral_decompose(op: BundleOperator) -> SpectralDecomposition:
    """Dense eigendecomposition with a deterministic eigenvector phase."""
    check_dense_size(op)
    values, vectors = linalg.eigh(symmetrized(op))
    radius = float(np.abs(values).max()) if values.size else 0.0
    bound = POSITIVITY_TOL * radius
    if values.size and values[0] < -bound:
        raise OperatorError(f'operator not positive: eigenvalue {values[0]:.6g} '
                            f'below -{bound:.3g}')
    null = values <= bound
    values = np.where(null, 0.0, values)

    # Make the first significant coefficient of each column real positive.
    for col in range(vectors.shape[1]):
        column = vectors[:, col]
        significant = np.flatnonzero(np.abs(column) > 1e-8 * np.abs(column).max())
        lead = column[significant[0]]
        vectors[:, col] = column * (np.conj(lead) / abs(lead))

    eigenvectors = vectors / np.sqrt(op.weights)[:, None]
    dec = SpectralDecomposition(op, values, eigenvectors, int(null.sum()))
    LOGGER.debug('decomposed %r: spectrum [%.6g, %.6g], null_dim %d', op, values[0], values[-1],
                 dec.null_dim)
    return dec


def evaluate_on_spectrum(dec: SpectralDecomposition, func: SpectralFunction) -> np.ndarray:
    """F at every eigenvalue, checked for NaN."""
    values = np.asarray(func(dec.eigenvalues))
    if values.ndim == 0:
        values = np.full(dec.eigenvalues.shape, values[()])
    if values.shape != dec.eigenvalues.shape:
        raise ValidationError(f'function returned shape {values.shape}, '
                              f'expected {dec.eigenvalues.shape}')
    bad = np.flatnonzero(np.isnan(values))
    if bad.size:
        raise OperatorError(f'function undefined at eigenvalue {dec.eigenvalues[bad[0]]:.12g}')
    return values


def apply_values(dec: SpectralDecomposition, values: np.ndarray) -> np.ndarray:
    """U diag(values) U^{-1} for precomputed spectral values."""
    return (dec.eigenvectors * values[None, :]) @ dec.inverse


def apply_function(dec: SpectralDecomposition, func: SpectralFunction) -> np.ndarray:
    """F(L) by functional calculus. func receives the array of eigenvalues."""
    return apply_values(dec, evaluate_on_spectrum(dec, func))


def kernel_of(matrix: np.ndarray, space: MetricMeasureSpace, l: int = 1) -> OperatorKernel:
    """Kernel blocks of an operator matrix: block(x, y) / mu(y)."""
    n = space.n
    if matrix.shape != (n * l, n * l):
        raise ValidationError(f'matrix shape {matrix.shape} does not match n={n}, l={l}')
    blocks = matrix.reshape(n, l, n, l).transpose(0, 2, 1, 3) / space.mu[None, :, None, None]
    return OperatorKernel(blocks, space.mu)


def row_l2_norms(kernel: OperatorKernel, x: int, norm: str = 'hilbert-schmidt') -> float:
    """(sum_y |K(x, y)|^2 mu(y))^(1/2) in the chosen block norm."""
    if kernel.l == 1:
        row = np.abs(kernel.blocks[x, :, 0, 0])
    elif norm == 'operator':
        row = np.linalg.norm(kernel.blocks[x], ord=2, axis=(1, 2))
    elif norm == 'hilbert-schmidt':
        row = np.linalg.norm(kernel.blocks[x], ord='fro', axis=(1, 2))
    else:
        raise ValidationError(f"unknown block norm '{norm}'")
    return float(np.sqrt(np.sum(row**2 * kernel.mu)))


def hs_row_norms(matrix: np.ndarray, space: MetricMeasureSpace, l: int = 1) -> np.ndarray:
    """Hilbert-Schmidt row norms of the kernel of matrix at every point."""
    weights = np.repeat(space.mu, l)
    per_row = np.sum(np.abs(matrix)**2 / weights[None, :], axis=1)
    return np.sqrt(per_row.reshape(space.n, l).sum(axis=1))


def hs_column_norms(matrix: np.ndarray, space: MetricMeasureSpace, l: int = 1) -> np.ndarray:
    """(sum_x |K(x, y)|_HS^2 mu(x))^(1/2) at every point y."""
    weights = np.repeat(space.mu, l)
    per_col = np.sum(np.abs(matrix)**2 * weights[:, None], axis=0) / weights**2
    return np.sqrt(per_col.reshape(space.n, l).sum(axis=1))


def trace_identity_residual(dec: SpectralDecomposition, func: SpectralFunction) -> float:
    """max_x |Tr K_{|F|^2(L)}(x, x) - ||K_{F(L)}(x, .)||_HS^2|."""
    values = evaluate_on_spectrum(dec, func)
    space = dec.space
    rows = hs_row_norms(apply_values(dec, values), space, dec.l)
    squared = kernel_of(apply_values(dec, np.abs(values)**2), space, dec.l)
    traces = np.real(np.trace(squared.blocks[np.arange(space.n), np.arange(space.n)], axis1=1,
                              axis2=2))
    return float(np.max(np.abs(traces - rows**2)))


def compose_bound_check(func1: SpectralFunction,
                        func2: SpectralFunction,
                        dec: SpectralDecomposition,
                        norm: str = 'hilbert-schmidt') -> CheckReport:
    """Checks ||K_{F1 F2(L)}(x, .)|| <= sup|F1| ||K_{F2(L)}(x, .)|| at every x."""
    values1 = evaluate_on_spectrum(dec, func1)
    values2 = evaluate_on_spectrum(dec, func2)
    space = dec.space
    composed = kernel_of(apply_values(dec, values1 * values2), space, dec.l)
    second = kernel_of(apply_values(dec, values2), space, dec.l)
    sup1 = float(np.abs(values1).max())
    rows = []
    worst = 0.0
    for x in range(space.n):
        lhs = row_l2_norms(composed, x, norm)
        rhs = sup1 * row_l2_norms(second, x, norm)
        ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else np.inf)
        worst = max(worst, ratio)
        rows.append({'x': x, 'lhs': lhs, 'rhs': rhs, 'ratio': ratio})
    threshold = 1 + 1e-9
    return CheckReport('compose_bound',
                       'composition bound for kernel row norms', {
                           'norm': norm,
                           'n': space.n,
                           'l': dec.l
                       },
                       worst,
                       threshold,
                       worst <= threshold,
                       rows=rows,
                       details={'sup_f1': sup1})


def extreme_eigenvalues(op: BundleOperator) -> Tuple[float, float]:
    """Smallest and largest eigenvalue of L."""
    sym = symmetrized(op)
    last = sym.shape[0] - 1
    low = linalg.eigvalsh(sym, subset_by_index=[0, 0])[0]
    high = linalg.eigvalsh(sym, subset_by_index=[last, last])[0]
    return float(low), float(high)


def chebyshev_apply(op: BundleOperator,
                    func: SpectralFunction,
                    degree: int,
                    spectral_interval: Optional[Sequence[float]] = None,
                    check_interval: bool = True) -> np.ndarray:
    """Degree-k Chebyshev approximation of F(L) by the three-term recurrence.

    The default interval is [0, max absolute row sum of M], which contains
    the spectrum. With a one-hop stencil the result vanishes beyond k hops.
    """
    if degree < 0:
        raise ValidationError(f'degree must be nonnegative, got {degree}')
    matrix = op.matrix
    if spectral_interval is None:
        low, high = 0.0, float(np.abs(matrix).sum(axis=1).max())
    else:
        low, high = (float(v) for v in spectral_interval)
    if high <= low:
        high = low + 1.0
    if check_interval:
        check_dense_size(op)
        lam_min, lam_max = extreme_eigenvalues(op)
        slack = 1e-10 * max(abs(low), abs(high), 1.0)
        if lam_min < low - slack or lam_max > high + slack:
            raise OperatorError(f'interval [{low:.6g}, {high:.6g}] excludes eigenvalues in '
                                f'[{lam_min:.6g}, {lam_max:.6g}]')

    def sampled(points: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(func(points)), points.shape)

    coef = Chebyshev.interpolate(sampled, degree, domain=[low, high]).coef
    identity = np.eye(op.size, dtype=matrix.dtype)
    mapped = (2 * matrix - (low + high) * identity) / (high - low)
    prev, cur = identity, mapped
    result = coef[0] * identity
    if degree >= 1:
        result = result + coef[1] * mapped
    for k in range(2, degree + 1):
        prev, cur = cur, 2 * mapped @ cur - prev
        result = result + coef[k] * cur
    LOGGER.debug('chebyshev degree %d on [%g, %g], last coefficient %.3g', degree, low, high,
                 abs(coef[-1]))
    return result


def functional_calculus_check(op: BundleOperator,
                              t: float = 1.0,
                              degree: int = 30,
                              tolerance: float = 1e-10) -> CheckReport:
    """exp(-tL) three ways: eigendecomposition, dense matrix exponential, Chebyshev."""
    dec = spectral_decompose(op)
    spectral = apply_function(dec, lambda lam: np.exp(-t * lam))
    dense = linalg.expm(-t * op.matrix)
    cheb = chebyshev_apply(op, lambda lam: np.exp(-t * lam), degree)
    dense_gap = float(np.abs(spectral - dense).max())
    cheb_gap = float(np.abs(spectral - cheb).max())
    trace_gap = trace_identity_residual(dec, lambda lam: np.exp(-t * lam))
    observed = max(dense_gap, cheb_gap, trace_gap)
    LOGGER.info('functional calculus: expm %.3g, chebyshev %.3g, trace %.3g', dense_gap, cheb_gap,
                trace_gap)
    return CheckReport('functional_calculus',
                       'spectral functional calculus', {
                           't': t,
                           'degree': degree,
                           'n': op.space.n,
                           'l': op.l
                       },
                       observed,
                       tolerance,
                       observed <= tolerance,
                       rows=[{
                           'path': 'expm',
                           'deviation': dense_gap
                       }, {
                           'path': 'chebyshev',
                           'deviation': cheb_gap
                       }, {
                           'path': 'trace_identity',
                           'deviation': trace_gap
                       }],
                       details={'null_dim': dec.null_dim})


# Builders


def laplacian(space: MetricMeasureSpace, weights: Optional[Sequence[float]] = None) -> BundleOperator:
    """Weighted graph Laplacian, L f(x) = mu(x)^{-1} sum_y w_xy (f(x) - f(y)).

    Edge weights default to 1 / length^2.
    """
    if not space.edges:
        raise ValidationError('laplacian needs a space built from edges')
    n = space.n
    adjacency = np.zeros((n, n))
    for idx, (a, b, length) in enumerate(space.edges):
        w = 1.0 / length**2 if weights is None else float(weights[idx])
        adjacency[a, b] += w
        adjacency[b, a] += w
    form = np.diag(adjacency.sum(axis=1)) - adjacency
    return BundleOperator(space, form / space.mu[:, None], 1, 1, 'laplacian')


def bundle_laplacian(space: MetricMeasureSpace, transports: Sequence[np.ndarray]) -> BundleOperator:
    """Connection Laplacian with a unitary l x l transport per edge.

    The quadratic form is sum_e w_e |f(a) - T_e f(b)|^2 with w_e = 1/length^2.
    """
    if len(transports) != len(space.edges):
        raise ValidationError(f'{len(transports)} transports for {len(space.edges)} edges')
    l = int(np.asarray(transports[0]).shape[0]) if transports else 1
    n = space.n
    form = np.zeros((n * l, n * l), dtype=complex)
    eye = np.eye(l)
    for (a, b, length), trans in zip(space.edges, transports):
        trans = np.asarray(trans, dtype=complex)
        if trans.shape != (l, l) or not np.allclose(trans.conj().T @ trans, eye, atol=1e-12):
            raise ValidationError(f'transport on edge ({a}, {b}) is not a unitary {l}x{l} matrix')
        w = 1.0 / length**2
        sa, sb = slice(a * l, (a + 1) * l), slice(b * l, (b + 1) * l)
        form[sa, sa] += w * eye
        form[sb, sb] += w * eye
        form[sa, sb] -= w * trans
        form[sb, sa] -= w * trans.conj().T
    weights = np.repeat(space.mu, l)
    return BundleOperator(space, form / weights[:, None], l, 1, f'connection laplacian l={l}')


def diagonal_operator(space: MetricMeasureSpace, values: Sequence[float]) -> BundleOperator:
    """Multiplication by nonnegative values; stays diagonal under the calculus."""
    return BundleOperator(space, np.diag(np.asarray(values, dtype=float)), 1, 0, 'diagonal')


# Persistence


def save_operator(op: BundleOperator, filename: str) -> None:
    """Writes an operator as YAML with an explicit (n, l, convention) header."""
    matrix = op.matrix
    data = {
        'n': op.space.n,
        'l': op.l,
        'convention': 'mu-weighted',
        'locality_hops': op.locality_hops,
        'name': op.name,
        'space': space_to_dict(op.space),
        'real': [[float(v) for v in row] for row in matrix.real],
    }
    if np.iscomplexobj(matrix):
        data['imag'] = [[float(v) for v in row] for row in matrix.imag]
    with open(filename, 'w', encoding='utf-8') as out_file:
        yaml.safe_dump(data, out_file, sort_keys=False)


def load_operator(filename: str) -> BundleOperator:
    """Reads an operator written by save_operator."""
    with open(filename, 'r', encoding='utf-8') as in_file:
        data = yaml.safe_load(in_file)
    if data.get('convention') != 'mu-weighted':
        raise ValidationError(f"unsupported operator convention {data.get('convention')!r}")
    matrix = np.array(data['real'], dtype=float)
    if 'imag' in data:
        matrix = matrix + 1j * np.array(data['imag'], dtype=float)
    op = BundleOperator(space_from_dict(data['space']), matrix, int(data['l']),
                        data.get('locality_hops'), data.get('name', ''))
    if op.space.n != int(data['n']):
        raise ValidationError(f"header says n={data['n']}, space has {op.space.n} points")
    return op
