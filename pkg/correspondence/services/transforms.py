"""
Integral transforms
The circle-average transform R, Radon and dual Radon transforms, the real
principal-value Hilbert transform, Radon inversion, the Cauchy-data to
cylinder-function map, and a leapfrog oracle for the 2+1 wave equation.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicSpline, RectBivariateSpline

from .defaults import setting
from .geometry import CylinderPoint, SpacetimePoint
from .profiles import MAX_DV_ORDER, CylinderFunction, PlaneFunction

logger = logging.getLogger(__name__)

# Upper bound on points x theta-nodes evaluated at once
CHUNK_ELEMENTS = 2_000_000

MIN_N_THETA = 16


class TransformError(Exception):
    """Custom exception for transform and sampling failures"""
    pass


def theta_nodes(n_theta: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n_theta) / n_theta


def _check_deriv(deriv: Sequence[int]) -> Tuple[int, int, int]:
    if len(deriv) != 3 or any(int(n) < 0 for n in deriv):
        raise TransformError(f"Invalid multi-index {tuple(deriv)}")
    deriv = tuple(int(n) for n in deriv)
    if sum(deriv) > MAX_DV_ORDER:
        raise TransformError(f"Derivative order {sum(deriv)} exceeds {MAX_DV_ORDER}")
    return deriv


def eval_cylinder_fn(h: CylinderFunction, p: CylinderPoint, dv_order: int = 0) -> float:
    if dv_order < 0 or dv_order > MAX_DV_ORDER:
        raise TransformError(f"dv_order {dv_order} outside 0..{MAX_DV_ORDER}")
    return float(h.evaluate(p.theta, p.v, dv_order))


# Transform R

def transform_R_array(h: CylinderFunction, t, x1, x2, deriv: Sequence[int] = (0, 0, 0),
                      n_theta: Optional[int] = None) -> np.ndarray:
    """
    Partials of Rh on arrays of points, differentiating under the circle average.

    d/dt pushes to d/dv h, d/dx_i to omega_i d/dv h; the theta average is the
    trapezoid rule on n_theta equispaced nodes.
    """
    n_t, n_1, n_2 = _check_deriv(deriv)
    n_theta = setting('TWISTOR_N_THETA') if n_theta is None else int(n_theta)
    if n_theta < MIN_N_THETA:
        raise TransformError(f"n_theta must be at least {MIN_N_THETA}, got {n_theta}")

    t, x1, x2 = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x1, dtype=float),
                                    np.asarray(x2, dtype=float))
    shape = t.shape
    t, x1, x2 = t.ravel(), x1.ravel(), x2.ravel()
    out = np.zeros(t.size)
    if h.is_zero or t.size == 0:
        return out.reshape(shape)

    theta = theta_nodes(n_theta)
    cos, sin = np.cos(theta), np.sin(theta)
    weight = cos ** n_1 * sin ** n_2
    order = n_t + n_1 + n_2
    chunk = max(1, CHUNK_ELEMENTS // n_theta)
    for start in range(0, t.size, chunk):
        sl = slice(start, start + chunk)
        v = t[sl, None] + x1[sl, None] * cos[None, :] + x2[sl, None] * sin[None, :]
        out[sl] = np.mean(weight[None, :] * h.evaluate(theta[None, :], v, order), axis=1)
    return out.reshape(shape)


def transform_R(h: CylinderFunction, p: SpacetimePoint, deriv: Sequence[int] = (0, 0, 0),
                n_theta: Optional[int] = None) -> float:
    return float(transform_R_array(h, p.t, p.x1, p.x2, deriv, n_theta))


def transform_R_adaptive(h: CylinderFunction, p: SpacetimePoint,
                         deriv: Sequence[int] = (0, 0, 0)) -> float:
    """Adaptive-quadrature evaluation of the same average, used as an oracle."""
    n_t, n_1, n_2 = _check_deriv(deriv)
    order = n_t + n_1 + n_2

    def integrand(theta):
        v = p.t + p.x1 * math.cos(theta) + p.x2 * math.sin(theta)
        return math.cos(theta) ** n_1 * math.sin(theta) ** n_2 * float(h.evaluate(theta, v, order))

    value, _ = integrate.quad(integrand, 0.0, 2.0 * np.pi, epsabs=1e-14, epsrel=1e-13, limit=400)
    return value / (2.0 * np.pi)


def dalembertian_fd(u: Callable, t, x1, x2, delta: float) -> np.ndarray:
    """Centered second-difference -u_tt + u_11 + u_22 of an evaluator u(t, x1, x2)."""
    center = 2.0 * u(t, x1, x2)
    u_tt = u(t + delta, x1, x2) - center + u(t - delta, x1, x2)
    u_11 = u(t, x1 + delta, x2) - center + u(t, x1 - delta, x2)
    u_22 = u(t, x1, x2 + delta) - center + u(t, x1, x2 - delta)
    return (-u_tt + u_11 + u_22) / delta ** 2


def wave_residual_orders(h: CylinderFunction, points: np.ndarray,
                         deltas: Sequence[float] = (1e-2, 5e-3, 2.5e-3),
                         n_theta: Optional[int] = None) -> Dict[str, Any]:
    """
    Sup of the finite-difference d'Alembertian of Rh over points, per step.

    Returns:
        Dict with 'errors' per delta and observed 'orders' between consecutive deltas
    """
    def u(t, x1, x2):
        return transform_R_array(h, t, x1, x2, (0, 0, 0), n_theta)

    t, x1, x2 = points[:, 0], points[:, 1], points[:, 2]
    errors = [float(np.max(np.abs(dalembertian_fd(u, t, x1, x2, d)))) for d in deltas]
    orders = []
    for (d0, e0), (d1, e1) in zip(zip(deltas, errors), zip(deltas[1:], errors[1:])):
        if e0 <= 1e-13 and e1 <= 1e-13:
            orders.append(math.inf)
        else:
            orders.append(math.log(e0 / max(e1, 1e-300)) / math.log(d0 / d1))
    return {'deltas': list(deltas), 'errors': errors, 'orders': orders}


# Wave fields

@dataclass(frozen=True, eq=False)
class FDGrid:
    times: np.ndarray
    x: np.ndarray
    levels: np.ndarray
    dt: float
    dx: float


class WaveField:
    """
    Evaluator for a solution u(t, x1, x2) of the wave equation.

    'transform' backing evaluates Rh with partials up to order 4;
    'fd' backing interpolates stored leapfrog levels (values only).
    """

    def __init__(self, backing: str, source: Optional[CylinderFunction] = None,
                 n_theta: Optional[int] = None, grid: Optional[FDGrid] = None):
        if backing not in ('transform', 'fd'):
            raise TransformError(f"Unknown wave field backing '{backing}'")
        self.backing = backing
        self.source = source
        self.n_theta = n_theta
        self.grid = grid
        self._splines: Dict[int, RectBivariateSpline] = {}

    @classmethod
    def from_transform(cls, h: CylinderFunction, n_theta: Optional[int] = None) -> 'WaveField':
        return cls('transform', source=h, n_theta=n_theta)

    @classmethod
    def from_fd(cls, grid: FDGrid) -> 'WaveField':
        return cls('fd', grid=grid)

    @property
    def max_order(self) -> int:
        return MAX_DV_ORDER if self.backing == 'transform' else 0

    def __call__(self, t, x1, x2, deriv: Sequence[int] = (0, 0, 0)) -> np.ndarray:
        if self.backing == 'transform':
            return transform_R_array(self.source, t, x1, x2, deriv, self.n_theta)
        if any(deriv):
            raise TransformError("Finite-difference wave fields only evaluate values")
        return self._fd_values(t, x1, x2)

    def _level_spline(self, index: int) -> RectBivariateSpline:
        if index not in self._splines:
            self._splines[index] = RectBivariateSpline(self.grid.x, self.grid.x, self.grid.levels[index],
                                                       kx=3, ky=3, s=0)
        return self._splines[index]

    def _fd_values(self, t, x1, x2) -> np.ndarray:
        grid = self.grid
        t, x1, x2 = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x1, dtype=float),
                                        np.asarray(x2, dtype=float))
        shape = t.shape
        t, x1, x2 = t.ravel(), x1.ravel(), x2.ravel()
        span = 1e-12 * max(1.0, abs(grid.times[-1]))
        if np.any(t < grid.times[0] - span) or np.any(t > grid.times[-1] + span):
            raise TransformError(f"Time outside the evolved range [{grid.times[0]}, {grid.times[-1]}]")
        edge = grid.x[-1] * (1 + 1e-12)
        if np.any(np.abs(x1) > edge) or np.any(np.abs(x2) > edge):
            raise TransformError(f"Point outside the evolution box |x| <= {grid.x[-1]}")

        n_levels = len(grid.times)
        step = grid.times[1] - grid.times[0]
        pos = np.clip((t - grid.times[0]) / step, 0.0, n_levels - 1)
        out = np.zeros(t.size)

        if n_levels < 4:
            i0 = np.minimum(np.floor(pos).astype(int), n_levels - 2)
            for start in np.unique(i0):
                mask = i0 == start
                s = pos[mask] - start
                out[mask] = ((1 - s) * self._level_spline(start).ev(x1[mask], x2[mask])
                             + s * self._level_spline(start + 1).ev(x1[mask], x2[mask]))
            return out.reshape(shape)

        # cubic Lagrange interpolation in time over four stored levels
        i0 = np.clip(np.floor(pos).astype(int) - 1, 0, n_levels - 4)
        for start in np.unique(i0):
            mask = i0 == start
            s = pos[mask] - start
            weights = (
                -(s - 1) * (s - 2) * (s - 3) / 6.0,
                s * (s - 2) * (s - 3) / 2.0,
                -s * (s - 1) * (s - 3) / 2.0,
                s * (s - 1) * (s - 2) / 6.0,
            )
            for k, w in enumerate(weights):
                out[mask] += w * self._level_spline(start + k).ev(x1[mask], x2[mask])
        return out.reshape(shape)


def _laplacian_interior(u: np.ndarray) -> np.ndarray:
    return u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4.0 * u[1:-1, 1:-1]


def _leapfrog(u0: np.ndarray, v0: np.ndarray, dt: float, dx: float, n_steps: int,
              save_every: int) -> List[np.ndarray]:
    r2 = (dt / dx) ** 2
    prev = u0
    current = u0 + dt * v0
    current[1:-1, 1:-1] += 0.5 * r2 * _laplacian_interior(u0)
    current[0, :], current[-1, :], current[:, 0], current[:, -1] = u0[0, :], u0[-1, :], u0[:, 0], u0[:, -1]

    saved = [u0.copy()]
    if save_every == 1:
        saved.append(current.copy())
    for step in range(2, n_steps + 1):
        nxt = current.copy()
        nxt[1:-1, 1:-1] = 2.0 * current[1:-1, 1:-1] - prev[1:-1, 1:-1] + r2 * _laplacian_interior(current)
        prev, current = current, nxt
        if step % save_every == 0:
            saved.append(current.copy())
    return saved


def wave_fd_solve(f0: PlaneFunction, f1: PlaneFunction, T: float, dx: Optional[float] = None,
                  box: float = 4.0, region: Optional[float] = None, two_sided: bool = False,
                  save_every: int = 1) -> WaveField:
    """
    Leapfrog evolution of -u_tt + u_11 + u_22 = 0 on [-box, box]^2.

    Args:
        f0, f1: Cauchy data u(0, .) and u_t(0, .)
        T: Final time (also the initial time -T when two_sided)
        dx: Grid spacing; dt = T / ceil(T / (0.5 dx)) <= dx / 2
        box: Half-width of the square grid; boundary values are held at f0
        region: Half-width (sup norm) of the comparison region; must stay
            outside the boundary's domain of influence
        save_every: Store every n-th level (n_steps must be divisible by it)

    Returns:
        WaveField with fd backing
    """
    dx = setting('TWISTOR_FD_SPACING') if dx is None else float(dx)
    if T <= 0 or dx <= 0 or box <= 0:
        raise TransformError(f"T, dx and box must be positive (T={T}, dx={dx}, box={box})")
    n = 2 * int(round(box / dx)) + 1
    x = np.linspace(-box, box, n)
    dx_eff = x[1] - x[0]
    n_steps = max(1, math.ceil(T / (0.5 * dx_eff) - 1e-9))
    if n_steps % save_every:
        n_steps += save_every - n_steps % save_every
    dt = T / n_steps

    if region is not None and region + n_steps * dx_eff >= box:
        raise TransformError(
            f"Comparison region |x| <= {region} is not causally isolated from the boundary: "
            f"needs box > {region + n_steps * dx_eff:.3f}, got {box}"
        )

    X1, X2 = np.meshgrid(x, x, indexing='ij')
    u0 = f0(X1, X2)
    v0 = f1(X1, X2)
    logger.debug(f"Leapfrog: {n}x{n} grid, dx={dx_eff:.4g}, dt={dt:.4g}, {n_steps} steps, two_sided={two_sided}")

    forward = _leapfrog(u0, v0, dt, dx_eff, n_steps, save_every)
    stored_dt = dt * save_every
    if two_sided:
        backward = _leapfrog(u0, -v0, dt, dx_eff, n_steps, save_every)
        levels = np.stack(backward[:0:-1] + forward)
        count = len(forward) - 1
        times = stored_dt * np.arange(-count, count + 1)
    else:
        levels = np.stack(forward)
        times = stored_dt * np.arange(len(forward))
    return WaveField.from_fd(FDGrid(times=times, x=x, levels=levels, dt=dt, dx=dx_eff))


def cauchy_plane_functions(h: CylinderFunction, n_theta: Optional[int] = None
                           ) -> Tuple[PlaneFunction, PlaneFunction]:
    """Cauchy data (Rh, d/dt Rh) at t = 0 as direct (unsampled) evaluators."""
    f0 = PlaneFunction(lambda x1, x2: transform_R_array(h, 0.0, x1, x2, (0, 0, 0), n_theta),
                       label=f"Rh(0,.) {h.label}")
    f1 = PlaneFunction(lambda x1, x2: transform_R_array(h, 0.0, x1, x2, (1, 0, 0), n_theta),
                       label=f"d/dt Rh(0,.) {h.label}")
    return f0, f1


def sampled_cauchy_data(h: CylinderFunction, half_width: Optional[float] = None,
                        spacing: Optional[float] = None, n_theta: Optional[int] = None
                        ) -> Tuple[PlaneFunction, PlaneFunction]:
    """Cauchy data of Rh sampled on a square grid and interpolated by quintic splines."""
    half_width = setting('TWISTOR_POISSON_HALF_WIDTH') if half_width is None else half_width
    spacing = setting('TWISTOR_POISSON_SPACING') if spacing is None else spacing
    n = 2 * int(round(half_width / spacing)) + 1
    x = np.linspace(-half_width, half_width, n)
    X1, X2 = np.meshgrid(x, x, indexing='ij')
    f0 = transform_R_array(h, 0.0, X1, X2, (0, 0, 0), n_theta)
    f1 = transform_R_array(h, 0.0, X1, X2, (1, 0, 0), n_theta)
    return (PlaneFunction.from_grid(x, x, f0, label='f0 sampled'),
            PlaneFunction.from_grid(x, x, f1, label='f1 sampled'))


# Radon transform and sampled line functions

@dataclass
class LineIntegral:
    value: float
    tail: float
    warnings: List[str] = field(default_factory=list)


def radon(f: PlaneFunction, p: CylinderPoint, half_length: Optional[float] = None,
          n_s: Optional[int] = None, tail_bound: float = 1e-10) -> LineIntegral:
    """
    Line integral of f over {x : <omega, x> = v}, x = v omega + s omega_perp.

    Composite trapezoid over s in [-half_length, half_length]; the larger
    endpoint magnitude of f is reported as the tail and warned about.
    """
    half_length = setting('TWISTOR_RADON_HALF_LENGTH') if half_length is None else float(half_length)
    n_s = setting('TWISTOR_N_S') if n_s is None else int(n_s)
    s = np.linspace(-half_length, half_length, n_s)
    c, sn = math.cos(p.theta), math.sin(p.theta)
    values = f(p.v * c - s * sn, p.v * sn + s * c)
    tail = float(max(abs(values[0]), abs(values[-1])))
    warnings = []
    if tail > tail_bound:
        warnings.append(f"tail |f| = {tail:.3e} at |s| = {half_length} exceeds {tail_bound:.1e}")
    return LineIntegral(value=float(integrate.trapezoid(values, s)), tail=tail, warnings=warnings)


def _fourth_order_dv(values: np.ndarray, dv: float) -> np.ndarray:
    out = np.empty_like(values)
    out[..., 2:-2] = (values[..., :-4] - 8 * values[..., 1:-3] + 8 * values[..., 3:-1] - values[..., 4:]) / (12 * dv)
    f = values
    out[..., 0] = (-25 * f[..., 0] + 48 * f[..., 1] - 36 * f[..., 2] + 16 * f[..., 3] - 3 * f[..., 4]) / (12 * dv)
    out[..., 1] = (-3 * f[..., 0] - 10 * f[..., 1] + 18 * f[..., 2] - 6 * f[..., 3] + f[..., 4]) / (12 * dv)
    out[..., -1] = (25 * f[..., -1] - 48 * f[..., -2] + 36 * f[..., -3] - 16 * f[..., -4] + 3 * f[..., -5]) / (12 * dv)
    out[..., -2] = (3 * f[..., -1] + 10 * f[..., -2] - 18 * f[..., -3] + 6 * f[..., -4] - f[..., -5]) / (12 * dv)
    return out


def _trapezoid_weights(n: int, step: float) -> np.ndarray:
    w = np.full(n, step)
    w[0] = w[-1] = 0.5 * step
    return w


def _endpoint_log_term(v, v_max: float, dv: float):
    # exact PV of the constant part plus the Euler-Maclaurin endpoint term of the remainder
    return (np.log((v_max - v) / (v_max + v))
            - dv * dv / 12.0 * (1.0 / (v_max - v) ** 2 - 1.0 / (v_max + v) ** 2))


@lru_cache(maxsize=8)
def hilbert_matrix(v_max: float, n_v: int) -> np.ndarray:
    """
    Dense operator for the real PV transform at interior v-grid nodes.

    (M g)_i = (1/pi) [sum_j w_j (g_j - g_i)/(v_j - v_i) + w_i g'(v_i) + g_i log((V-v_i)/(V+v_i))]
    with g' from fourth-order differences. Rows of the two end nodes are zero.
    """
    vs = np.linspace(-v_max, v_max, n_v)
    dv = vs[1] - vs[0]
    w = _trapezoid_weights(n_v, dv)
    diff = vs[None, :] - vs[:, None]
    np.fill_diagonal(diff, 1.0)
    kernel = w[None, :] / diff
    np.fill_diagonal(kernel, 0.0)

    derivative = _fourth_order_dv(np.eye(n_v), dv).T
    matrix = kernel + w[:, None] * derivative
    interior = np.arange(1, n_v - 1)
    matrix[interior, interior] += (-kernel.sum(axis=1)[interior]
                                   + _endpoint_log_term(vs[interior], v_max, dv))
    matrix[0, :] = 0.0
    matrix[-1, :] = 0.0
    matrix /= np.pi
    matrix.flags.writeable = False
    return matrix


@dataclass(frozen=True, eq=False)
class SampledLineFunction:
    """Values g(theta_i, v_j) on equispaced theta nodes and a uniform symmetric v-grid."""
    thetas: np.ndarray
    vs: np.ndarray
    values: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        thetas = np.array(self.thetas, dtype=float)
        vs = np.array(self.vs, dtype=float)
        values = np.array(self.values, dtype=float)
        n_theta = len(thetas)
        if n_theta < 8 or n_theta % 2:
            raise TransformError(f"Need an even number of at least 8 theta nodes, got {n_theta}")
        if not np.allclose(thetas, theta_nodes(n_theta), rtol=0, atol=1e-12):
            raise TransformError("theta nodes must be 2*pi*j/N")
        if len(vs) < 5:
            raise TransformError("v-grid needs at least 5 nodes")
        steps = np.diff(vs)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0) or steps[0] <= 0:
            raise TransformError("v-grid must be uniform and increasing")
        if values.shape != (n_theta, len(vs)):
            raise TransformError(f"values shape {values.shape} does not match grid {(n_theta, len(vs))}")
        for array in (thetas, vs, values):
            array.flags.writeable = False
        object.__setattr__(self, 'thetas', thetas)
        object.__setattr__(self, 'vs', vs)
        object.__setattr__(self, 'values', values)

    @property
    def n_theta(self) -> int:
        return len(self.thetas)

    @property
    def n_v(self) -> int:
        return len(self.vs)

    @property
    def v_max(self) -> float:
        return float(self.vs[-1])

    @property
    def dv(self) -> float:
        return float(self.vs[1] - self.vs[0])

    @classmethod
    def grid(cls, n_theta: Optional[int] = None, v_max: Optional[float] = None,
             n_v: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
        n_theta = setting('TWISTOR_N_THETA') if n_theta is None else n_theta
        v_max = setting('TWISTOR_V_MAX') if v_max is None else v_max
        n_v = setting('TWISTOR_N_V') if n_v is None else n_v
        return theta_nodes(n_theta), np.linspace(-v_max, v_max, n_v)

    @classmethod
    def from_cylinder_function(cls, h: CylinderFunction, n_theta: Optional[int] = None,
                               v_max: Optional[float] = None, n_v: Optional[int] = None,
                               dv_order: int = 0) -> 'SampledLineFunction':
        thetas, vs = cls.grid(n_theta, v_max, n_v)
        return cls(thetas, vs, h.evaluate(thetas[:, None], vs[None, :], dv_order),
                   metadata={'source': h.label or 'cylinder function'})

    @classmethod
    def constant(cls, value: float, n_theta: Optional[int] = None, v_max: Optional[float] = None,
                 n_v: Optional[int] = None) -> 'SampledLineFunction':
        thetas, vs = cls.grid(n_theta, v_max, n_v)
        return cls(thetas, vs, np.full((len(thetas), len(vs)), float(value)))

    def with_values(self, values: np.ndarray, **metadata) -> 'SampledLineFunction':
        merged = dict(self.metadata)
        merged.update(metadata)
        return SampledLineFunction(self.thetas, self.vs, values, merged)

    def derivative_v(self) -> 'SampledLineFunction':
        """Fourth-order finite-difference d/dv."""
        return self.with_values(_fourth_order_dv(self.values, self.dv))

    def hilbert(self) -> 'SampledLineFunction':
        """Real PV transform at every interior node; end nodes are set to zero."""
        matrix = hilbert_matrix(self.v_max, self.n_v)
        return self.with_values(self.values @ matrix.T)

    def theta_index(self, theta: float) -> int:
        step = 2.0 * np.pi / self.n_theta
        index = int(round(theta / step)) % self.n_theta
        if abs(math.remainder(theta - self.thetas[index], 2.0 * np.pi)) > 1e-9:
            raise TransformError(f"theta = {theta} is not a grid angle")
        return index

    def tail_norm(self, fraction: float = 0.75) -> float:
        mask = np.abs(self.vs) >= fraction * self.v_max
        return float(np.max(np.abs(self.values[:, mask]))) if np.any(mask) else 0.0

    def header(self) -> Dict[str, Any]:
        return {
            'n_theta': self.n_theta,
            'n_v': self.n_v,
            'v_max': self.v_max,
            'columns': ['theta', 'v', 'value'],
            'metadata': {k: v for k, v in self.metadata.items() if isinstance(v, (str, int, float, list))},
        }

    def to_csv(self, path: Path) -> Path:
        path = Path(path)
        theta_col = np.repeat(self.thetas, self.n_v)
        v_col = np.tile(self.vs, self.n_theta)
        np.savetxt(path, np.column_stack([theta_col, v_col, self.values.ravel()]),
                   delimiter=',', header='theta,v,value', comments='', fmt='%.17g')
        return path

    def write(self, directory: Path, stem: str) -> List[Path]:
        """JSON header plus CSV payload."""
        directory = Path(directory)
        header_path = directory / f"{stem}.json"
        header_path.write_text(json.dumps(self.header(), indent=2, sort_keys=True))
        return [header_path, self.to_csv(directory / f"{stem}.csv")]


def sample_radon(f: PlaneFunction, n_theta: Optional[int] = None, v_max: Optional[float] = None,
                 n_v: Optional[int] = None, half_length: Optional[float] = None,
                 n_s: Optional[int] = None, tail_bound: float = 1e-10) -> SampledLineFunction:
    """
    Radon transform of f on the (theta, v) grid.

    Rows for theta >= pi are filled from f_hat(theta + pi, v) = f_hat(theta, -v).
    """
    thetas, vs = SampledLineFunction.grid(n_theta, v_max, n_v)
    half_length = setting('TWISTOR_RADON_HALF_LENGTH') if half_length is None else float(half_length)
    n_s = setting('TWISTOR_N_S') if n_s is None else int(n_s)
    n_theta = len(thetas)
    if n_theta % 2:
        raise TransformError(f"n_theta must be even, got {n_theta}")

    s = np.linspace(-half_length, half_length, n_s)
    values = np.empty((n_theta, len(vs)))
    worst_tail = 0.0
    for j in range(n_theta // 2):
        c, sn = math.cos(thetas[j]), math.sin(thetas[j])
        samples = f(vs[:, None] * c - s[None, :] * sn, vs[:, None] * sn + s[None, :] * c)
        values[j] = integrate.trapezoid(samples, s, axis=1)
        worst_tail = max(worst_tail, float(np.max(np.abs(samples[:, [0, -1]]))))
    values[n_theta // 2:] = values[:n_theta // 2, ::-1]

    warnings = []
    if worst_tail > tail_bound:
        warnings.append(f"Radon tail |f| = {worst_tail:.3e} at |s| = {half_length} exceeds {tail_bound:.1e}")
        logger.warning(warnings[-1])
    return SampledLineFunction(thetas, vs, values, metadata={
        'source': f"radon({f.label})", 'radon_tail': worst_tail, 'warnings': warnings,
        'half_length': half_length, 'n_s': n_s,
    })


def transform_R_sampled(g: SampledLineFunction, t, x1, x2) -> np.ndarray:
    """Circle average of sampled data: (1/N) sum_j g(theta_j, t + <omega_j, x>)."""
    t, x1, x2 = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x1, dtype=float),
                                    np.asarray(x2, dtype=float))
    reach = np.abs(t) + np.hypot(x1, x2)
    if reach.size and float(np.max(reach)) > g.v_max:
        raise TransformError(f"Lookup |v| up to {float(np.max(reach)):.3f} outside the v-grid [-{g.v_max}, {g.v_max}]")
    total = np.zeros(t.shape)
    for j in range(g.n_theta):
        v = t + x1 * math.cos(g.thetas[j]) + x2 * math.sin(g.thetas[j])
        total = total + np.interp(v, g.vs, g.values[j])
    return total / g.n_theta


def dual_radon(g: SampledLineFunction, x1, x2) -> np.ndarray:
    """Dual Radon transform (1/2pi) int g(omega, <omega, x>) dtheta, linear in v."""
    return transform_R_sampled(g, 0.0, x1, x2)


# Hilbert transform

def hilbert_pv(g: SampledLineFunction, p: CylinderPoint) -> float:
    """
    Real PV transform (1/pi) pv int g(theta, nu) / (nu - v) dnu at a grid angle.

    Singularity subtraction: the remainder (g(nu) - g(v)) / (nu - v) is
    integrated by the trapezoid rule and g(v) log((V - v)/(V + v)) added.
    """
    j = g.theta_index(p.theta)
    v = p.v
    if v <= g.vs[0] or v >= g.vs[-1]:
        raise TransformError(f"v = {v} is not strictly inside the v-grid")
    row = g.values[j]
    spline = CubicSpline(g.vs, row)
    g_v = float(spline(v))
    diff = g.vs - v
    close = np.abs(diff) <= 1e-12 * g.dv
    remainder = np.where(close, float(spline(v, 1)), (row - g_v) / np.where(close, 1.0, diff))
    integral = integrate.trapezoid(remainder, g.vs)
    return float((integral + g_v * _endpoint_log_term(v, g.v_max, g.dv)) / np.pi)


def hilbert_pv_symmetric(func: Callable[[float], float], v: float, reach: float = 16.0) -> float:
    """Oracle: (1/pi) int_0^reach [g(v + r) - g(v - r)] / r dr by adaptive quadrature."""
    def integrand(r):
        if r == 0.0:
            return 0.0
        return (func(v + r) - func(v - r)) / r

    value, _ = integrate.quad(integrand, 0.0, reach, epsabs=1e-13, epsrel=1e-12, limit=400)
    return value / np.pi


def hilbert_gaussian(v) -> np.ndarray:
    """Closed form of the real PV transform of exp(-nu^2): -(2/sqrt(pi)) D(v), D Dawson's integral."""
    return -2.0 / np.sqrt(np.pi) * special.dawsn(v)


# Inversion

@dataclass
class PlaneReconstruction:
    x1: np.ndarray
    x2: np.ndarray
    values: np.ndarray
    warnings: List[str] = field(default_factory=list)

    def as_plane_function(self) -> PlaneFunction:
        return PlaneFunction.from_grid(self.x1, self.x2, self.values, label='reconstruction')

    def sup_error(self, f: PlaneFunction) -> float:
        X1, X2 = np.meshgrid(self.x1, self.x2, indexing='ij')
        return float(np.max(np.abs(self.values - f(X1, X2))))


def invert_radon(f: PlaneFunction, n_theta: Optional[int] = None, v_max: Optional[float] = None,
                 n_v: Optional[int] = None, half_length: Optional[float] = None,
                 n_s: Optional[int] = None, box: float = 3.0, n_box: int = 61) -> PlaneReconstruction:
    """
    Reconstruct f from its Radon transform: f = -1/2 (H d/dv f_hat)^dual.

    Args:
        f: Rapidly decreasing plane function
        box, n_box: Square [-box, box]^2 sampled with n_box points per axis

    Returns:
        PlaneReconstruction on the box grid
    """
    f_hat = sample_radon(f, n_theta, v_max, n_v, half_length, n_s)
    filtered = f_hat.derivative_v().hilbert()
    x = np.linspace(-box, box, n_box)
    X1, X2 = np.meshgrid(x, x, indexing='ij')
    values = -0.5 * dual_radon(filtered, X1, X2)
    logger.info(f"Reconstructed {f.label} on [-{box},{box}]^2 from {f_hat.n_theta}x{f_hat.n_v} samples")
    return PlaneReconstruction(x1=x, x2=x, values=values, warnings=list(f_hat.metadata.get('warnings', [])))


def cauchy_to_h(f0: PlaneFunction, f1: PlaneFunction, n_theta: Optional[int] = None,
                v_max: Optional[float] = None, n_v: Optional[int] = None,
                half_length: Optional[float] = None, n_s: Optional[int] = None) -> SampledLineFunction:
    """
    Cylinder function h with Rh(0, .) = f0 and d/dt Rh(0, .) = f1.

    h = -1/2 H(d/dv f0_hat + f1_hat); real because every stage is real.
    """
    f0_hat = sample_radon(f0, n_theta, v_max, n_v, half_length, n_s)
    f1_hat = sample_radon(f1, n_theta, v_max, n_v, half_length, n_s)
    combined = f0_hat.derivative_v().values + f1_hat.values
    h_values = -0.5 * f0_hat.with_values(combined).hilbert().values
    warnings = list(f0_hat.metadata.get('warnings', [])) + list(f1_hat.metadata.get('warnings', []))
    h_rec = SampledLineFunction(f0_hat.thetas, f0_hat.vs, h_values, metadata={
        'source': f"cauchy_to_h({f0.label}, {f1.label})",
        'warnings': warnings,
    })
    h_rec.metadata['tail_norm'] = h_rec.tail_norm()
    logger.info(f"cauchy_to_h: tail norm {h_rec.metadata['tail_norm']:.3e}, {len(warnings)} warnings")
    return h_rec
