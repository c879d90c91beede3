"""
Cylinder and plane function profiles
Closed-form v-profiles, Fourier-in-theta cylinder functions h(theta, v),
rapidly decreasing plane functions f(x1, x2) and separable space-time fields.
"""
import json
import logging
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import RectBivariateSpline

logger = logging.getLogger(__name__)

MAX_DV_ORDER = 4

PROFILE_KINDS = ('gaussian_poly', 'sech_pow', 'zero', 'constant')

_SHORTHAND = re.compile(r'^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$')


class ProfileError(Exception):
    """Custom exception for invalid profile definitions"""
    pass


def _stable_sech(y: np.ndarray) -> np.ndarray:
    ay = np.abs(y)
    e = np.exp(-ay)
    return 2.0 * e / (1.0 + e * e)


@dataclass(frozen=True)
class VProfile:
    """
    A v-profile with closed-form derivatives.

    gaussian_poly: P(y) * exp(-y^2) with y = (v - center) / width
    sech_pow:      amplitude * sech(y)^power
    constant:      amplitude (not decaying; only for kernel demonstrations)
    zero:          0
    """
    kind: str
    coefficients: Tuple[float, ...] = (1.0,)
    center: float = 0.0
    width: float = 1.0
    amplitude: float = 1.0
    power: float = 2.0

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ProfileError(f"Unknown profile kind '{self.kind}'")
        if self.width <= 0:
            raise ProfileError(f"Profile width must be positive, got {self.width}")
        if self.kind == 'sech_pow' and self.power <= 0:
            raise ProfileError(f"sech_pow power must be positive, got {self.power}")
        if self.kind == 'gaussian_poly' and len(self.coefficients) == 0:
            raise ProfileError("gaussian_poly needs at least one coefficient")

    # Constructors

    @classmethod
    def gaussian(cls, amplitude: float = 1.0, center: float = 0.0, width: float = 1.0) -> 'VProfile':
        return cls(kind='gaussian_poly', coefficients=(float(amplitude),), center=float(center), width=float(width))

    @classmethod
    def gaussian_poly(cls, coefficients: Sequence[float], center: float = 0.0, width: float = 1.0) -> 'VProfile':
        return cls(kind='gaussian_poly', coefficients=tuple(float(c) for c in coefficients),
                   center=float(center), width=float(width))

    @classmethod
    def hermite_gaussian(cls, order: int, scale: float = 1.0, center: float = 0.0,
                         width: float = 1.0) -> 'VProfile':
        """scale * (d/dy)^order exp(-y^2), a profile whose first `order` moments vanish."""
        poly = Polynomial([1.0])
        y = Polynomial([0.0, 1.0])
        for _ in range(order):
            poly = poly.deriv() - 2.0 * y * poly
        return cls.gaussian_poly(tuple(scale * c for c in poly.coef), center=center, width=width)

    @classmethod
    def sech_pow(cls, amplitude: float = 1.0, center: float = 0.0, width: float = 1.0,
                 power: float = 2.0) -> 'VProfile':
        return cls(kind='sech_pow', amplitude=float(amplitude), center=float(center),
                   width=float(width), power=float(power))

    @classmethod
    def zero(cls) -> 'VProfile':
        return cls(kind='zero')

    @classmethod
    def constant(cls, amplitude: float = 1.0) -> 'VProfile':
        return cls(kind='constant', amplitude=float(amplitude))

    @classmethod
    def from_spec(cls, spec: Union[str, Dict[str, Any], None]) -> 'VProfile':
        """
        Build a profile from a config value.

        Accepts the shorthand strings gaussian(a,c,w), gaussian_poly([c0,...],c,w),
        hermite(n,scale,c,w), sech_pow(a,c,w,p), constant(a), zero, or a dict
        with an explicit 'kind'.
        """
        if spec is None:
            return cls.zero()
        if isinstance(spec, VProfile):
            return spec
        if isinstance(spec, dict):
            data = dict(spec)
            kind = data.pop('kind', None)
            if kind == 'gaussian':
                return cls.gaussian(**data)
            if kind == 'hermite':
                return cls.hermite_gaussian(**data)
            if kind not in PROFILE_KINDS:
                raise ProfileError(f"Unknown profile kind '{kind}'")
            allowed = {'coefficients', 'center', 'width', 'amplitude', 'power'}
            unknown = set(data) - allowed
            if unknown:
                raise ProfileError(f"Unknown profile keys: {sorted(unknown)}")
            if 'coefficients' in data:
                data['coefficients'] = tuple(float(c) for c in data['coefficients'])
            return cls(kind=kind, **data)
        if not isinstance(spec, str):
            raise ProfileError(f"Profile spec must be a string or mapping, got {type(spec).__name__}")

        match = _SHORTHAND.match(spec)
        if not match:
            raise ProfileError(f"Cannot parse profile '{spec}'")
        name, arg_text = match.group(1), match.group(2)
        try:
            args = json.loads(f"[{arg_text}]") if arg_text else []
        except json.JSONDecodeError as e:
            raise ProfileError(f"Cannot parse arguments of profile '{spec}': {e.msg}")

        builders: Dict[str, Callable[..., VProfile]] = {
            'gaussian': cls.gaussian,
            'gaussian_poly': cls.gaussian_poly,
            'hermite': cls.hermite_gaussian,
            'sech_pow': cls.sech_pow,
            'constant': cls.constant,
            'zero': cls.zero,
        }
        if name not in builders:
            raise ProfileError(f"Unknown profile kind '{name}'")
        try:
            return builders[name](*args)
        except TypeError as e:
            raise ProfileError(f"Bad arguments for profile '{spec}': {e}")

    def to_spec(self) -> Dict[str, Any]:
        if self.kind == 'zero':
            return {'kind': 'zero'}
        if self.kind == 'constant':
            return {'kind': 'constant', 'amplitude': self.amplitude}
        if self.kind == 'sech_pow':
            return {'kind': 'sech_pow', 'amplitude': self.amplitude, 'center': self.center,
                    'width': self.width, 'power': self.power}
        return {'kind': 'gaussian_poly', 'coefficients': list(self.coefficients),
                'center': self.center, 'width': self.width}

    # Evaluation

    @property
    def is_zero(self) -> bool:
        if self.kind == 'zero':
            return True
        if self.kind == 'gaussian_poly':
            return all(c == 0.0 for c in self.coefficients)
        return self.amplitude == 0.0

    @property
    def decays(self) -> bool:
        return self.kind != 'constant' or self.amplitude == 0.0

    @cached_property
    def _derivative_polys(self) -> Tuple[Polynomial, ...]:
        # gaussian_poly: Q_{n+1}(y) = Q_n'(y) - 2y Q_n(y)
        # sech_pow:      Q_{n+1}(T) = -p T Q_n(T) + (1 - T^2) Q_n'(T), T = tanh(y)
        x = Polynomial([0.0, 1.0])
        if self.kind == 'gaussian_poly':
            polys = [Polynomial(self.coefficients)]
            for _ in range(MAX_DV_ORDER):
                q = polys[-1]
                polys.append(q.deriv() - 2.0 * x * q)
        else:
            polys = [Polynomial([1.0])]
            for _ in range(MAX_DV_ORDER):
                q = polys[-1]
                polys.append(-self.power * x * q + (1.0 - x * x) * q.deriv())
        return tuple(polys)

    def derivative(self, v: Union[float, np.ndarray], n: int = 0) -> np.ndarray:
        """n-th v-derivative, 0 <= n <= 4."""
        if n < 0 or n > MAX_DV_ORDER:
            raise ProfileError(f"Derivative order {n} outside 0..{MAX_DV_ORDER}")
        v = np.asarray(v, dtype=float)
        if self.is_zero:
            return np.zeros_like(v)
        if self.kind == 'constant':
            return np.full_like(v, self.amplitude) if n == 0 else np.zeros_like(v)

        y = (v - self.center) / self.width
        scale = self.width ** (-n)
        if self.kind == 'gaussian_poly':
            return scale * self._derivative_polys[n](y) * np.exp(-y * y)
        sech = _stable_sech(y)
        return scale * self.amplitude * sech ** self.power * self._derivative_polys[n](np.tanh(y))

    def __call__(self, v: Union[float, np.ndarray]) -> np.ndarray:
        return self.derivative(v, 0)

    def scaled(self, factor: float) -> 'VProfile':
        if self.kind == 'gaussian_poly':
            return VProfile.gaussian_poly(tuple(factor * c for c in self.coefficients),
                                          center=self.center, width=self.width)
        if self.kind in ('sech_pow', 'constant'):
            return VProfile(kind=self.kind, amplitude=factor * self.amplitude, center=self.center,
                            width=self.width, power=self.power)
        return self

    def tail_bound(self, cutoff: float, samples: int = 64) -> float:
        """max over |v| >= cutoff and l <= 4 of |v|^4 |d^l/dv^l profile(v)|."""
        if self.is_zero:
            return 0.0
        radii = np.linspace(cutoff, 4.0 * cutoff, samples)
        v = np.concatenate([self.center + radii, self.center - radii])
        worst = 0.0
        for n in range(MAX_DV_ORDER + 1):
            worst = max(worst, float(np.max(np.abs(v) ** 4 * np.abs(self.derivative(v, n)))))
        return worst


@dataclass(frozen=True)
class Mode:
    """One Fourier mode a_k(v) cos(k theta) + b_k(v) sin(k theta)."""
    k: int
    cos_profile: VProfile
    sin_profile: Optional[VProfile] = None

    def __post_init__(self):
        if self.k < 0:
            raise ProfileError(f"Mode index must be non-negative, got {self.k}")
        if self.k == 0 and self.sin_profile is not None and not self.sin_profile.is_zero:
            raise ProfileError("The k = 0 mode has no sine profile")


@dataclass(frozen=True)
class CylinderFunction:
    """h(theta, v) = sum_k a_k(v) cos(k theta) + b_k(v) sin(k theta)."""
    modes: Tuple[Mode, ...] = field(default_factory=tuple)
    label: str = ''

    @classmethod
    def zero(cls) -> 'CylinderFunction':
        return cls(modes=(), label='zero')

    @classmethod
    def single_mode(cls, k: int, cos: Optional[VProfile] = None, sin: Optional[VProfile] = None,
                    label: str = '') -> 'CylinderFunction':
        return cls(modes=(Mode(k=k, cos_profile=cos or VProfile.zero(), sin_profile=sin),), label=label)

    @classmethod
    def from_spec(cls, spec: List[Dict[str, Any]], label: str = '') -> 'CylinderFunction':
        modes = []
        for index, item in enumerate(spec):
            if 'k' not in item:
                raise ProfileError(f"h_spec[{index}] has no 'k'")
            unknown = set(item) - {'k', 'cos', 'sin'}
            if unknown:
                raise ProfileError(f"h_spec[{index}] has unknown keys {sorted(unknown)}")
            modes.append(Mode(
                k=int(item['k']),
                cos_profile=VProfile.from_spec(item.get('cos')),
                sin_profile=VProfile.from_spec(item['sin']) if item.get('sin') is not None else None,
            ))
        return cls(modes=tuple(modes), label=label)

    def to_spec(self) -> List[Dict[str, Any]]:
        spec = []
        for mode in self.modes:
            item: Dict[str, Any] = {'k': mode.k, 'cos': mode.cos_profile.to_spec()}
            if mode.sin_profile is not None:
                item['sin'] = mode.sin_profile.to_spec()
            spec.append(item)
        return spec

    @property
    def is_zero(self) -> bool:
        return all(
            m.cos_profile.is_zero and (m.sin_profile is None or m.sin_profile.is_zero)
            for m in self.modes
        )

    @property
    def max_k(self) -> int:
        return max((m.k for m in self.modes), default=0)

    def evaluate(self, theta: Union[float, np.ndarray], v: Union[float, np.ndarray],
                 n: int = 0) -> np.ndarray:
        """n-th v-derivative of h at (theta, v); arrays broadcast."""
        if n < 0 or n > MAX_DV_ORDER:
            raise ProfileError(f"dv_order {n} outside 0..{MAX_DV_ORDER}")
        theta = np.asarray(theta, dtype=float)
        v = np.asarray(v, dtype=float)
        total = np.zeros(np.broadcast(theta, v).shape)
        for mode in self.modes:
            if not mode.cos_profile.is_zero:
                total = total + mode.cos_profile.derivative(v, n) * np.cos(mode.k * theta)
            if mode.sin_profile is not None and not mode.sin_profile.is_zero:
                total = total + mode.sin_profile.derivative(v, n) * np.sin(mode.k * theta)
        return total

    def __call__(self, theta, v, n: int = 0) -> np.ndarray:
        return self.evaluate(theta, v, n)

    def scaled(self, factor: float) -> 'CylinderFunction':
        return CylinderFunction(
            modes=tuple(
                Mode(k=m.k, cos_profile=m.cos_profile.scaled(factor),
                     sin_profile=m.sin_profile.scaled(factor) if m.sin_profile is not None else None)
                for m in self.modes
            ),
            label=f"{factor}*{self.label}" if self.label else '',
        )

    def plus(self, other: 'CylinderFunction') -> 'CylinderFunction':
        return CylinderFunction(modes=self.modes + other.modes, label=f"{self.label}+{other.label}")

    def decay_issues(self, cutoff: float = 6.0, bound: float = 1e-3) -> List[str]:
        """Profiles whose |v|^4-weighted derivatives exceed `bound` beyond `cutoff`."""
        issues = []
        for mode in self.modes:
            for name, profile in (('cos', mode.cos_profile), ('sin', mode.sin_profile)):
                if profile is None or profile.is_zero:
                    continue
                if not profile.decays:
                    issues.append(f"k={mode.k} {name} profile is not rapidly decreasing")
                    continue
                tail = profile.tail_bound(cutoff)
                if tail >= bound:
                    issues.append(f"k={mode.k} {name} profile tail {tail:.3e} >= {bound:.1e} beyond |v|={cutoff}")
        return issues


class PlaneFunction:
    """A function f(x1, x2) on the initial plane, vectorized over arrays."""

    def __init__(self, func: Callable[[np.ndarray, np.ndarray], np.ndarray],
                 gradient: Optional[Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]] = None,
                 label: str = '', support: Optional[float] = None):
        self._func = func
        self._gradient = gradient
        self.label = label
        self.support = support

    def __call__(self, x1, x2) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        return np.asarray(self._func(x1, x2), dtype=float) * np.ones(np.broadcast(x1, x2).shape)

    def gradient(self, x1, x2, step: float = 1e-5) -> Tuple[np.ndarray, np.ndarray]:
        if self._gradient is not None:
            return self._gradient(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        g1 = (self(x1 + step, x2) - self(x1 - step, x2)) / (2 * step)
        g2 = (self(x1, x2 + step) - self(x1, x2 - step)) / (2 * step)
        return g1, g2

    def decay_issues(self, radii: Sequence[float] = (4.0, 6.0, 8.0), bound: float = 1e-2,
                     power: int = 4, samples: int = 64) -> List[str]:
        """Sample |x|^power |f| on circles; rapidly decreasing data stays below `bound`."""
        issues = []
        angles = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
        for r in radii:
            if self.support is not None and r > self.support:
                continue
            values = np.abs(self(r * np.cos(angles), r * np.sin(angles)))
            weighted = float(np.max(r ** power * values))
            if weighted >= bound:
                issues.append(f"|x|^{power}|f| = {weighted:.3e} at radius {r}")
        return issues

    # Constructors

    @classmethod
    def zero(cls) -> 'PlaneFunction':
        return cls(lambda x1, x2: np.zeros(np.broadcast(x1, x2).shape),
                   gradient=lambda x1, x2: (np.zeros(np.broadcast(x1, x2).shape),) * 2,
                   label='zero')

    @classmethod
    def gaussian(cls, amplitude: float = 1.0, width: float = 1.0,
                 center: Tuple[float, float] = (0.0, 0.0)) -> 'PlaneFunction':
        c1, c2 = center

        def func(x1, x2):
            return amplitude * np.exp(-((x1 - c1) ** 2 + (x2 - c2) ** 2) / width ** 2)

        def grad(x1, x2):
            f = func(x1, x2)
            return -2 * (x1 - c1) / width ** 2 * f, -2 * (x2 - c2) / width ** 2 * f

        return cls(func, gradient=grad, label=f"gaussian({amplitude},{width})")

    @classmethod
    def x1_gaussian(cls, amplitude: float = 1.0, width: float = 1.0) -> 'PlaneFunction':
        def func(x1, x2):
            return amplitude * x1 * np.exp(-(x1 ** 2 + x2 ** 2) / width ** 2)

        def grad(x1, x2):
            e = amplitude * np.exp(-(x1 ** 2 + x2 ** 2) / width ** 2)
            return e * (1 - 2 * x1 ** 2 / width ** 2), -2 * x1 * x2 / width ** 2 * e

        return cls(func, gradient=grad, label=f"x1_gaussian({amplitude},{width})")

    @classmethod
    def linear(cls, a0: float = 0.0, a1: float = 1.0, a2: float = 0.0) -> 'PlaneFunction':
        """a0 + a1 x1 + a2 x2; not decaying, used for exact-stencil checks."""
        return cls(lambda x1, x2: a0 + a1 * x1 + a2 * x2,
                   gradient=lambda x1, x2: (np.full(np.broadcast(x1, x2).shape, a1),
                                            np.full(np.broadcast(x1, x2).shape, a2)),
                   label=f"linear({a0},{a1},{a2})")

    @classmethod
    def from_spec(cls, spec: Union[str, Dict[str, Any], None]) -> 'PlaneFunction':
        """gaussian(a,w), x1_gaussian(a,w), linear(a0,a1,a2) or zero."""
        if spec is None:
            return cls.zero()
        if isinstance(spec, dict):
            data = dict(spec)
            name = data.pop('kind', None)
            args: List[Any] = []
            kwargs = data
        else:
            match = _SHORTHAND.match(str(spec))
            if not match:
                raise ProfileError(f"Cannot parse plane function '{spec}'")
            name, arg_text = match.group(1), match.group(2)
            try:
                args = json.loads(f"[{arg_text}]") if arg_text else []
            except json.JSONDecodeError as e:
                raise ProfileError(f"Cannot parse arguments of '{spec}': {e.msg}")
            kwargs = {}
        builders = {'gaussian': cls.gaussian, 'x1_gaussian': cls.x1_gaussian,
                    'linear': cls.linear, 'zero': cls.zero}
        if name not in builders:
            raise ProfileError(f"Unknown plane function '{name}'")
        try:
            return builders[name](*args, **kwargs)
        except TypeError as e:
            raise ProfileError(f"Bad arguments for plane function '{spec}': {e}")

    @classmethod
    def from_grid(cls, x1: np.ndarray, x2: np.ndarray, values: np.ndarray,
                  label: str = 'sampled', degree: int = 5) -> 'PlaneFunction':
        """Interpolating bivariate spline of samples; zero outside the sampled box."""
        spline = RectBivariateSpline(x1, x2, values, kx=degree, ky=degree, s=0)
        lo1, hi1, lo2, hi2 = x1[0], x1[-1], x2[0], x2[-1]

        def _inside(a, b):
            return (a >= lo1) & (a <= hi1) & (b >= lo2) & (b <= hi2)

        def func(a, b):
            a, b = np.broadcast_arrays(a, b)
            out = np.zeros(a.shape)
            mask = _inside(a, b)
            if np.any(mask):
                out[mask] = spline.ev(a[mask], b[mask])
            return out

        def grad(a, b):
            a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
            g1 = np.zeros(a.shape)
            g2 = np.zeros(a.shape)
            mask = _inside(a, b)
            if np.any(mask):
                g1[mask] = spline.ev(a[mask], b[mask], dx=1)
                g2[mask] = spline.ev(a[mask], b[mask], dy=1)
            return g1, g2

        return cls(func, gradient=grad, label=label, support=float(max(hi1, hi2) * np.sqrt(2)))


class PolynomialFactor:
    """A polynomial factor p(x) with exact derivatives, for separable fields."""

    def __init__(self, coefficients: Sequence[float]):
        self.poly = Polynomial(list(coefficients))

    def derivative(self, x, n: int = 0) -> np.ndarray:
        return self.poly.deriv(n)(np.asarray(x, dtype=float)) if n else self.poly(np.asarray(x, dtype=float))


class SeparableField:
    """
    u(t, x1, x2) = T(t) X1(x1) X2(x2) with closed-form partials.

    Factors are VProfile or PolynomialFactor instances.
    """

    def __init__(self, t_factor, x1_factor, x2_factor, label: str = ''):
        self.factors = (t_factor, x1_factor, x2_factor)
        self.label = label

    def __call__(self, t, x1, x2, deriv: Tuple[int, int, int] = (0, 0, 0)) -> np.ndarray:
        ft, f1, f2 = self.factors
        return ft.derivative(t, deriv[0]) * f1.derivative(x1, deriv[1]) * f2.derivative(x2, deriv[2])

    @classmethod
    def gaussian_bump(cls, amplitude: float = 1.0, width: float = 1.0) -> 'SeparableField':
        """amplitude * exp(-(t^2 + x1^2 + x2^2) / width^2)"""
        return cls(VProfile.gaussian(amplitude, 0.0, width), VProfile.gaussian(1.0, 0.0, width),
                   VProfile.gaussian(1.0, 0.0, width), label=f"bump({amplitude},{width})")

    @classmethod
    def t_squared_gaussian(cls, amplitude: float = 1.0) -> 'SeparableField':
        """amplitude * t^2 * exp(-|x|^2); does not solve the wave equation."""
        return cls(PolynomialFactor([0.0, 0.0, amplitude]), VProfile.gaussian(), VProfile.gaussian(),
                   label=f"t2_gaussian({amplitude})")

    @classmethod
    def from_spec(cls, spec: str) -> 'SeparableField':
        """bump(a,w) or t2_gaussian(a)."""
        match = _SHORTHAND.match(str(spec))
        if not match:
            raise ProfileError(f"Cannot parse field '{spec}'")
        name, arg_text = match.group(1), match.group(2)
        try:
            args = json.loads(f"[{arg_text}]") if arg_text else []
        except json.JSONDecodeError as e:
            raise ProfileError(f"Cannot parse arguments of field '{spec}': {e.msg}")
        builders = {'bump': cls.gaussian_bump, 't2_gaussian': cls.t_squared_gaussian}
        if name not in builders:
            raise ProfileError(f"Unknown field '{name}'")
        try:
            return builders[name](*args)
        except TypeError as e:
            raise ProfileError(f"Bad arguments for field '{spec}': {e}")
