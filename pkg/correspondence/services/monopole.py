"""
Monopole pairs on R^{1,2}
Construction of (V, A) from a cylinder function or a potential, the residual
of the monopole equation *dV = dA, gauge fixing through a Poisson solve on
the initial plane, and recovery of the wave potential from a fixed pair.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import cumulative_simpson
from scipy.interpolate import RectBivariateSpline
from scipy.signal import fftconvolve

from .defaults import setting
from .geometry import SpacetimePoint
from .profiles import CylinderFunction, PlaneFunction
from .transforms import WaveField, wave_fd_solve

logger = logging.getLogger(__name__)

MAX_PARTIAL_ORDER = 3

GAUSS_LEGENDRE_NODES = 24

FieldFn = Callable[..., np.ndarray]


class MonopoleError(Exception):
    """Custom exception for monopole construction and gauge fixing failures"""
    pass


def _check_order(deriv: Sequence[int]) -> Tuple[int, int, int]:
    deriv = tuple(int(n) for n in deriv)
    if len(deriv) != 3 or min(deriv) < 0 or sum(deriv) > MAX_PARTIAL_ORDER:
        raise MonopoleError(f"Partial {deriv} outside order 0..{MAX_PARTIAL_ORDER}")
    return deriv


def _shift(deriv: Tuple[int, int, int], axis: int) -> Tuple[int, int, int]:
    out = list(deriv)
    out[axis] += 1
    return tuple(out)


def _zeros(t, x1, x2, deriv=(0, 0, 0)) -> np.ndarray:
    return np.zeros(np.broadcast(np.asarray(t), np.asarray(x1), np.asarray(x2)).shape)


class MonopolePair:
    """
    A scalar field V and a 1-form A = A_t dt + A_1 dx1 + A_2 dx2 on R^{1,2}.

    Evaluators take (t, x1, x2, deriv) with deriv a multi-index in (t, x1, x2).
    """

    def __init__(self, V: FieldFn, A: Tuple[FieldFn, FieldFn, FieldFn], provenance: str = 'external',
                 source: Any = None, label: str = '', supports_partials: bool = True):
        if provenance not in ('from_h', 'external'):
            raise MonopoleError(f"Unknown provenance '{provenance}'")
        self._V = V
        self._A = tuple(A)
        self.provenance = provenance
        self.source = source
        self.label = label
        self.supports_partials = supports_partials

    def V(self, t, x1, x2, deriv: Sequence[int] = (0, 0, 0)) -> np.ndarray:
        return np.asarray(self._V(t, x1, x2, _check_order(deriv)), dtype=float)

    def A(self, component: int, t, x1, x2, deriv: Sequence[int] = (0, 0, 0)) -> np.ndarray:
        if component not in (0, 1, 2):
            raise MonopoleError(f"A has components 0 (t), 1, 2; got {component}")
        return np.asarray(self._A[component](t, x1, x2, _check_order(deriv)), dtype=float)

    def A_vector(self, t, x1, x2) -> np.ndarray:
        return np.stack([self.A(c, t, x1, x2) for c in range(3)], axis=-1)


def monopole_from_potential(u: FieldFn, provenance: str = 'external', source: Any = None,
                            label: str = '') -> MonopolePair:
    """V = 1 - u_t, A_t = 0, A_1 = -u_x2, A_2 = u_x1 for any potential with partials."""
    def V(t, x1, x2, deriv):
        value = -u(t, x1, x2, _shift(deriv, 0))
        return value + 1.0 if deriv == (0, 0, 0) else value

    def A1(t, x1, x2, deriv):
        return -u(t, x1, x2, _shift(deriv, 2))

    def A2(t, x1, x2, deriv):
        return u(t, x1, x2, _shift(deriv, 1))

    return MonopolePair(V, (_zeros, A1, A2), provenance=provenance, source=source, label=label)


def monopole_from_h(h: CylinderFunction, n_theta: Optional[int] = None) -> MonopolePair:
    """The pair V = 1 - d/dt Rh, A = *d Rh wired through the transform."""
    field_u = WaveField.from_transform(h, n_theta)
    return monopole_from_potential(field_u, provenance='from_h', source=h, label=h.label or 'from_h')


def combine_pairs(v_pair: MonopolePair, a_pair: MonopolePair) -> MonopolePair:
    """V from one pair, A from another."""
    return MonopolePair(v_pair._V, a_pair._A, provenance='external',
                        label=f"V[{v_pair.label}] A[{a_pair.label}]",
                        supports_partials=v_pair.supports_partials and a_pair.supports_partials)


def gauge_transform(m: MonopolePair, psi: FieldFn) -> MonopolePair:
    """(V, A) -> (V, A + d psi)."""
    def shifted(component):
        def evaluate(t, x1, x2, deriv):
            return m.A(component, t, x1, x2, deriv) + psi(t, x1, x2, _shift(deriv, component))
        return evaluate

    return MonopolePair(m._V, tuple(shifted(c) for c in range(3)), provenance='external',
                        source=m.source, label=f"{m.label}+dpsi", supports_partials=m.supports_partials)


# Monopole equation

@dataclass
class MonopoleResidual:
    max_abs: float
    components: Tuple[float, float, float]


def _partial(fn: Callable, axis: int, t, x1, x2, step: float) -> np.ndarray:
    point = [np.asarray(t, dtype=float), np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)]
    plus, minus = list(point), list(point)
    plus[axis] = point[axis] + step
    minus[axis] = point[axis] - step
    return (fn(*plus) - fn(*minus)) / (2.0 * step)


def monopole_residual_array(m: MonopolePair, t, x1, x2, step: float = 1e-4,
                            analytic: Optional[bool] = None) -> np.ndarray:
    """
    Components of *dV - dA in the basis (dt^dx1, dt^dx2, dx1^dx2).

    With the star of -dt^2 + dx1^2 + dx2^2 and volume dt^dx1^dx2:
    *dt = -dx1^dx2, *dx1 = -dt^dx2, *dx2 = dt^dx1.
    """
    if step <= 0:
        raise MonopoleError(f"step must be positive, got {step}")
    analytic = m.supports_partials if analytic is None else analytic

    if analytic:
        def dV(axis):
            return m.V(t, x1, x2, _shift((0, 0, 0), axis))

        def dA(component, axis):
            return m.A(component, t, x1, x2, _shift((0, 0, 0), axis))
    else:
        def dV(axis):
            return _partial(lambda a, b, c: m.V(a, b, c), axis, t, x1, x2, step)

        def dA(component, axis):
            return _partial(lambda a, b, c: m.A(component, a, b, c), axis, t, x1, x2, step)

    r_t1 = dV(2) - dA(1, 0) + dA(0, 1)
    r_t2 = -dV(1) - dA(2, 0) + dA(0, 2)
    r_12 = -dV(0) - dA(2, 1) + dA(1, 2)
    return np.stack([r_t1, r_t2, r_12], axis=-1)


def monopole_residual(m: MonopolePair, p: SpacetimePoint, step: float = 1e-4,
                      analytic: Optional[bool] = None) -> MonopoleResidual:
    components = monopole_residual_array(m, p.t, p.x1, p.x2, step, analytic)
    values = tuple(float(c) for c in components)
    return MonopoleResidual(max_abs=max(abs(c) for c in values), components=values)


@dataclass
class PositivityReport:
    min_V: float
    min_abs_V: float
    n_points: int

    @property
    def passed(self) -> bool:
        return self.min_V > 0.0


def positivity_gate(m: MonopolePair, t_range: Tuple[float, float] = (-1.0, 1.0), x_half: float = 2.0,
                    n: int = 21, strict: bool = False) -> PositivityReport:
    """
    Sample V over a box. min V > 0 is the hypothesis d/dt Rh < 1 of the metric
    construction; min |V| = min |1 - u_t| is the full-rank margin of the disk family.
    """
    t = np.linspace(t_range[0], t_range[1], n)
    x = np.linspace(-x_half, x_half, n)
    T, X1, X2 = np.meshgrid(t, x, x, indexing='ij')
    values = m.V(T, X1, X2)
    report = PositivityReport(min_V=float(np.min(values)), min_abs_V=float(np.min(np.abs(values))),
                              n_points=int(values.size))
    if strict and not report.passed:
        raise MonopoleError(f"V reaches {report.min_V:.3e} <= 0 in the sampled region")
    return report


# Gauge fixing

def _log_rectangle_antiderivative(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    # F with d2F/dXdY = log sqrt(X^2 + Y^2)
    r2 = X * X + Y * Y
    with np.errstate(divide='ignore', invalid='ignore'):
        log_term = np.where(r2 > 0, X * Y * np.log(np.where(r2 > 0, r2, 1.0)), 0.0)
        atan_x = np.where(X != 0, X * X * np.arctan(Y / np.where(X != 0, X, 1.0)), 0.0)
        atan_y = np.where(Y != 0, Y * Y * np.arctan(X / np.where(Y != 0, Y, 1.0)), 0.0)
    return 0.5 * (log_term - 3.0 * X * Y + atan_x + atan_y)


def green_box_integral(x1: np.ndarray, x2: np.ndarray, half_width: float) -> np.ndarray:
    """(1/2pi) int over [-L, L]^2 of log|x - y| dy, in closed form."""
    a, b = -half_width, half_width
    F = _log_rectangle_antiderivative
    total = (F(b - x1, b - x2) - F(a - x1, b - x2) - F(b - x1, a - x2) + F(a - x1, a - x2))
    return total / (2.0 * np.pi)


def _spline_laplacian(spline: RectBivariateSpline, x: np.ndarray) -> np.ndarray:
    return spline(x, x, dx=2) + spline(x, x, dy=2)


def solve_poisson(source: np.ndarray, x: np.ndarray) -> np.ndarray:
    """
    Free-space solution of Lap(phi) = source on a square grid.

    Convolution with (1/2pi) log|x - y| by the trapezoid rule, with the
    singular cell handled by subtracting source(x) and adding it back times
    the exact box integral of the kernel. The trapezoid error of the kernel
    itself splits into the singular-cell part and an edge part of h^2/12
    (the kernel flux through the box edge is 1); only the former belongs to
    the singular correction, so the edge part is returned to the result.
    """
    n = len(x)
    h = x[1] - x[0]
    half_width = x[-1]
    offsets = h * np.arange(-(n - 1), n)
    O1, O2 = np.meshgrid(offsets, offsets, indexing='ij')
    r = np.hypot(O1, O2)
    kernel = np.zeros_like(r)
    np.log(r, out=kernel, where=r > 0)
    kernel /= 2.0 * np.pi

    w1 = np.full(n, h)
    w1[0] = w1[-1] = 0.5 * h
    weights = np.outer(w1, w1)

    core = slice(n - 1, 2 * n - 1)
    weighted = fftconvolve(source * weights, kernel, mode='full')[core, core]
    mass = fftconvolve(weights, kernel, mode='full')[core, core]
    X1, X2 = np.meshgrid(x, x, indexing='ij')
    box = green_box_integral(X1, X2, half_width)
    return weighted - source * mass + source * (box + h * h / 12.0)


@dataclass
class GaugeReport:
    phi: Callable[..., np.ndarray]
    fixed_pair: MonopolePair
    poisson_residual: float
    anchor: Tuple[float, float]
    x: np.ndarray
    phi_check: np.ndarray
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'poisson_residual': self.poisson_residual,
            'anchor': list(self.anchor),
            'phi_check_sup': float(np.max(np.abs(self.phi_check))),
            'grid_half_width': float(self.x[-1]),
            'grid_spacing': float(self.x[1] - self.x[0]),
            'warnings': list(self.warnings),
        }


def decay_issues(m: MonopolePair, radius: float, bound: float = 1e-3, samples: int = 64) -> List[str]:
    """(V - 1) and A on the circle of the given radius at t = 0."""
    angles = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    x1, x2 = radius * np.cos(angles), radius * np.sin(angles)
    t = np.zeros_like(x1)
    issues = []
    checks = {'V-1': m.V(t, x1, x2) - 1.0, 'A_t': m.A(0, t, x1, x2),
              'A_1': m.A(1, t, x1, x2), 'A_2': m.A(2, t, x1, x2)}
    for name, values in checks.items():
        worst = float(np.max(np.abs(values)))
        if worst > bound:
            issues.append(f"{name} = {worst:.3e} at radius {radius} exceeds {bound:.1e}")
    return issues


def _time_integral(m: MonopolePair, t, x1, x2, spatial: Tuple[int, int], nt: int) -> np.ndarray:
    """d^nt/dt^nt of int_0^t d^spatial A_t(tau, x) dtau."""
    if nt > 0:
        return m._A[0](t, x1, x2, (nt - 1, spatial[0], spatial[1]))
    t, x1, x2 = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x1, dtype=float),
                                    np.asarray(x2, dtype=float))
    nodes, weights = leggauss(GAUSS_LEGENDRE_NODES)
    total = np.zeros(t.shape)
    for node, weight in zip(nodes, weights):
        tau = 0.5 * t * (node + 1.0)
        total = total + 0.5 * t * weight * m._A[0](tau, x1, x2, (0, spatial[0], spatial[1]))
    return total


def gauge_fix(m: MonopolePair, half_width: Optional[float] = None, spacing: Optional[float] = None,
              anchor: Tuple[float, float] = (0.0, 0.0), decay_bound: float = 1e-3,
              poisson_tolerance: Optional[float] = None, refinements: Optional[int] = None) -> GaugeReport:
    """
    Gauge transform a pair to A_t = 0 with divergence-free spatial A at t = 0.

    phi(t, x) = -int_0^t A_t(tau, x) dtau + phi_check(x) with
    Lap(phi_check) = -(d1 A_1 + d2 A_2) at t = 0, normalized to vanish at the anchor.

    Args:
        m: Monopole pair whose initial data decay
        half_width, spacing: Poisson grid [-L, L]^2 and its spacing
        anchor: Grid point where phi_check vanishes
        decay_bound: Bound for |V - 1| and |A| near the grid edge
        poisson_tolerance: Discrete residual above which a warning is recorded
        refinements: Defect-correction passes after the first Poisson solve

    Returns:
        GaugeReport with the fixed pair (V unchanged)

    Raises:
        MonopoleError: If the initial data do not decay on the grid
    """
    half_width = setting('TWISTOR_POISSON_HALF_WIDTH') if half_width is None else float(half_width)
    spacing = setting('TWISTOR_POISSON_SPACING') if spacing is None else float(spacing)
    poisson_tolerance = setting('TWISTOR_POISSON_TOLERANCE') if poisson_tolerance is None else poisson_tolerance
    refinements = setting('TWISTOR_POISSON_REFINEMENTS') if refinements is None else int(refinements)
    if refinements < 0:
        raise MonopoleError(f"refinements must be >= 0, got {refinements}")

    issues = []
    for radius in (0.75 * half_width, 0.9 * half_width):
        issues.extend(decay_issues(m, radius, decay_bound))
    if issues:
        raise MonopoleError("Initial data are not rapidly decreasing on the Poisson grid: " + "; ".join(issues))

    n = 2 * int(round(half_width / spacing)) + 1
    x = np.linspace(-half_width, half_width, n)
    h = x[1] - x[0]
    X1, X2 = np.meshgrid(x, x, indexing='ij')
    zero_t = np.zeros_like(X1)
    if m.supports_partials:
        divergence = m.A(1, zero_t, X1, X2, (0, 1, 0)) + m.A(2, zero_t, X1, X2, (0, 0, 1))
    else:
        divergence = (np.gradient(m.A(1, zero_t, X1, X2), h, axis=0)
                      + np.gradient(m.A(2, zero_t, X1, X2), h, axis=1))
    source = -divergence

    # defect correction against the spline Laplacian the fixed pair is differentiated with
    phi_check = solve_poisson(source, x)
    spline = RectBivariateSpline(x, x, phi_check, kx=5, ky=5, s=0)
    for _ in range(refinements):
        defect = source - _spline_laplacian(spline, x)
        phi_check = phi_check + solve_poisson(defect, x)
        spline = RectBivariateSpline(x, x, phi_check, kx=5, ky=5, s=0)

    i_anchor = int(np.argmin(np.abs(x - anchor[0])))
    j_anchor = int(np.argmin(np.abs(x - anchor[1])))
    phi_check = phi_check - phi_check[i_anchor, j_anchor]
    spline = RectBivariateSpline(x, x, phi_check, kx=5, ky=5, s=0)

    poisson_residual = float(np.max(np.abs(_spline_laplacian(spline, x) - source)))
    warnings = []
    if poisson_residual > poisson_tolerance:
        warnings.append(f"Poisson residual {poisson_residual:.3e} exceeds {poisson_tolerance:.1e}")
        logger.warning(warnings[-1])
    logger.info(f"Gauge fix on {n}x{n} grid after {refinements} refinements: "
                f"Poisson residual {poisson_residual:.3e}")

    def phi_check_partial(x1, x2, d1: int, d2: int) -> np.ndarray:
        x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        edge = half_width * (1 + 1e-12)
        if np.any(np.abs(x1) > edge) or np.any(np.abs(x2) > edge):
            raise MonopoleError(f"Point outside the gauge grid |x| <= {half_width}")
        return spline.ev(x1.ravel(), x2.ravel(), dx=d1, dy=d2).reshape(x1.shape)

    def phi(t, x1, x2) -> np.ndarray:
        return -_time_integral(m, t, x1, x2, (0, 0), 0) + phi_check_partial(x1, x2, 0, 0)

    def fixed_spatial(component: int) -> FieldFn:
        def evaluate(t, x1, x2, deriv):
            spatial = (deriv[1] + (component == 1), deriv[2] + (component == 2))
            value = m.A(component, t, x1, x2, deriv) - _time_integral(m, t, x1, x2, spatial, deriv[0])
            if deriv[0] == 0:
                value = value + phi_check_partial(x1, x2, spatial[0], spatial[1])
            return value
        return evaluate

    fixed = MonopolePair(m._V, (_zeros, fixed_spatial(1), fixed_spatial(2)), provenance='external',
                         source=m.source, label=f"{m.label} (gauge fixed)",
                         supports_partials=m.supports_partials)
    return GaugeReport(phi=phi, fixed_pair=fixed, poisson_residual=poisson_residual,
                       anchor=(float(x[i_anchor]), float(x[j_anchor])), x=x, phi_check=phi_check,
                       warnings=warnings)


# Recovering the potential

@dataclass
class RecoveredWave:
    f0: PlaneFunction
    f1: PlaneFunction
    u: WaveField
    curl_max: float
    x: np.ndarray
    warnings: List[str] = field(default_factory=list)


def _integrate_from_center(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    values = np.moveaxis(values, axis, 0)
    c = values.shape[0] // 2
    right = cumulative_simpson(values[c:], dx=h, axis=0, initial=0)
    left = -cumulative_simpson(values[c::-1], dx=h, axis=0, initial=0)[::-1]
    return np.moveaxis(np.concatenate([left[:-1], right], axis=0), 0, axis)


def recover_u(m: MonopolePair, half_width: Optional[float] = None, spacing: Optional[float] = None,
              fd_spacing: Optional[float] = None, T: float = 1.0, region: float = 2.0,
              curl_tolerance: Optional[float] = None, normalize: str = 'decay') -> RecoveredWave:
    """
    Cauchy data and evolution of the potential u of a gauge-fixed pair.

    f1 = 1 - V at t = 0; f0 integrates d1 u = A_2, d2 u = -A_1 outward from the
    origin (first along x1, then along x2) and is normalized either to vanish
    on average over the outer grid ring ('decay') or at the origin ('anchor').
    u is the leapfrog evolution of (f0, f1) on [-T, T].

    Raises:
        MonopoleError: If A_t or the divergence of A at t = 0 exceed curl_tolerance
    """
    half_width = setting('TWISTOR_POISSON_HALF_WIDTH') if half_width is None else float(half_width)
    spacing = setting('TWISTOR_POISSON_SPACING') if spacing is None else float(spacing)
    fd_spacing = setting('TWISTOR_FD_SPACING') if fd_spacing is None else float(fd_spacing)
    curl_tolerance = setting('TWISTOR_CURL_TOLERANCE') if curl_tolerance is None else curl_tolerance
    if normalize not in ('decay', 'anchor'):
        raise MonopoleError(f"Unknown normalization '{normalize}'")

    n = 2 * int(round(half_width / spacing)) + 1
    x = np.linspace(-half_width, half_width, n)
    h = x[1] - x[0]
    X1, X2 = np.meshgrid(x, x, indexing='ij')
    zero_t = np.zeros_like(X1)

    a_t = float(np.max(np.abs(m.A(0, zero_t, X1, X2))))
    if a_t > curl_tolerance:
        raise MonopoleError(f"A_t = {a_t:.3e} at t = 0: pair is not in the fixed gauge")

    A1 = m.A(1, zero_t, X1, X2)
    A2 = m.A(2, zero_t, X1, X2)
    if m.supports_partials:
        divergence = m.A(1, zero_t, X1, X2, (0, 1, 0)) + m.A(2, zero_t, X1, X2, (0, 0, 1))
    else:
        divergence = np.gradient(A1, h, axis=0) + np.gradient(A2, h, axis=1)
    curl_max = float(np.max(np.abs(divergence)))
    if curl_max > curl_tolerance:
        raise MonopoleError(f"Curl check failed: d1(-A_1) - d2(A_2) reaches {curl_max:.3e} "
                            f"> {curl_tolerance:.1e}; A is not the rotated gradient of a potential")

    c = n // 2
    along_x1 = _integrate_from_center(A2[:, c], h, axis=0)
    f0 = along_x1[:, None] + _integrate_from_center(-A1, h, axis=1)
    if normalize == 'decay':
        ring = (np.abs(X1) >= 0.95 * half_width) | (np.abs(X2) >= 0.95 * half_width)
        f0 = f0 - float(np.mean(f0[ring]))
    f1 = 1.0 - m.V(zero_t, X1, X2)

    f0_fn = PlaneFunction.from_grid(x, x, f0, label='recovered f0')
    f1_fn = PlaneFunction.from_grid(x, x, f1, label='recovered f1')
    box = region + 2.0 * T + 0.25
    if box > half_width:
        raise MonopoleError(f"Evolution box {box} exceeds the data grid half-width {half_width}")
    u = wave_fd_solve(f0_fn, f1_fn, T, fd_spacing, box, region=region, two_sided=True, save_every=2)
    logger.info(f"Recovered Cauchy data on {n}x{n} grid, curl {curl_max:.2e}, evolved to |t| <= {T}")
    return RecoveredWave(f0=f0_fn, f1=f1_fn, u=u, curl_max=curl_max, x=x)


def field_samples(m: MonopolePair, t_values: Sequence[float], x: np.ndarray) -> np.ndarray:
    """Rows (t, x1, x2, V, A_t, A_1, A_2) over a grid, for CSV export."""
    T, X1, X2 = np.meshgrid(np.asarray(t_values, dtype=float), x, x, indexing='ij')
    T, X1, X2 = T.ravel(), X1.ravel(), X2.ravel()
    return np.column_stack([T, X1, X2, m.V(T, X1, X2), m.A(0, T, X1, X2), m.A(1, T, X1, X2),
                            m.A(2, T, X1, X2)])
