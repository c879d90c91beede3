"""
Twistor space of the deformed correspondence
Projective points of CP^3, the trivialization over the cylinder, the real
locus P_h, Fourier splitting of h along planar circles, the holomorphic disk
family with its boundary and holomorphy checks, the quotient maps and the
(C, R)-action.
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .defaults import setting
from .geometry import CylinderPoint, normalize_angle
from .profiles import CylinderFunction

logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-12

EQUATOR_TOLERANCE = 1e-12


class TwistorError(Exception):
    """Custom exception for projective and disk computations"""
    pass


def _canonical_index(values: np.ndarray) -> int:
    moduli = np.abs(values)
    top = float(np.max(moduli))
    return int(np.flatnonzero(moduli >= top * (1.0 - TIE_TOLERANCE))[0])


@dataclass(frozen=True, eq=False)
class ProjPoint3:
    """A point [y0:y1:y2:y3] of CP^3 stored by its canonical representative."""
    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=complex).reshape(4)
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) == 0.0:
            raise TwistorError("Homogeneous coordinates must be finite and not all zero")
        y = y / y[_canonical_index(y)]
        y.flags.writeable = False
        object.__setattr__(self, 'y', y)

    def chart(self) -> np.ndarray:
        """Representative with y0 = 1."""
        if abs(self.y[0]) == 0.0:
            raise TwistorError("y0 = 0: point outside the affine chart")
        return self.y / self.y[0]

    def distance(self, other: 'ProjPoint3') -> float:
        """min over unit phases c of |a - c b| for unit representatives a, b."""
        a = self.y / np.linalg.norm(self.y)
        b = other.y / np.linalg.norm(other.y)
        overlap = np.vdot(b, a)
        phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
        return float(np.linalg.norm(a - phase * b))

    def close_to(self, other: 'ProjPoint3', tol: float = 1e-12) -> bool:
        return self.distance(other) <= tol


@dataclass(frozen=True, eq=False)
class WeightedPoint:
    """[y0:y1; v] with [y0:y1; v] ~ [l y0 : l y1 ; l^2 v]."""
    base: np.ndarray
    fiber: complex

    def __post_init__(self):
        base = np.asarray(self.base, dtype=complex).reshape(2)
        if np.max(np.abs(base)) == 0.0:
            raise TwistorError("Base coordinates (y0, y1) must not both vanish")
        scale = base[_canonical_index(base)]
        base = base / scale
        base.flags.writeable = False
        object.__setattr__(self, 'base', base)
        object.__setattr__(self, 'fiber', complex(self.fiber) / scale ** 2)

    def in_chart(self, index: int) -> Tuple[complex, complex]:
        """(other base coordinate, fiber) with base[index] scaled to 1."""
        pivot = self.base[index]
        if abs(pivot) == 0.0:
            raise TwistorError(f"base[{index}] = 0: point outside the chart")
        return complex(self.base[1 - index] / pivot), complex(self.fiber / pivot ** 2)

    def distance(self, other: 'WeightedPoint') -> float:
        index = _canonical_index(self.base)
        mine = np.array(self.in_chart(index))
        try:
            theirs = np.array(other.in_chart(index))
        except TwistorError:
            return math.inf
        return float(np.max(np.abs(mine - theirs)))

    def cylinder_coordinates(self) -> Tuple[float, complex]:
        """(theta, v) for a point over the unit circle: omega = y1/y0, v = conj(omega) w / y0^2."""
        y0, y1 = self.base
        omega = y1 / y0
        if abs(abs(omega) - 1.0) > EQUATOR_TOLERANCE * 10:
            raise TwistorError(f"|y1/y0| = {abs(omega)} is not 1")
        return normalize_angle(math.atan2(omega.imag, omega.real)), complex(np.conj(omega) * self.fiber / y0 ** 2)


# Trivialization over the cylinder and the real locus

def trivialize(p: CylinderPoint, nu: complex) -> ProjPoint3:
    """[1 : omega : omega (v - i nu) : v + i nu], the chart form of the trivialization."""
    omega = p.omega
    nu = complex(nu)
    return ProjPoint3(np.array([1.0, omega, omega * (p.v - 1j * nu), p.v + 1j * nu]))


def sigma(q: ProjPoint3) -> ProjPoint3:
    """Real structure [y0:y1:y2:y3] -> [conj y1 : conj y0 : conj y3 : conj y2]."""
    y = np.conj(q.y)
    return ProjPoint3(np.array([y[1], y[0], y[3], y[2]]))


def invert_trivialization(q: ProjPoint3) -> Tuple[float, float, complex]:
    """
    (theta, v, nu) of a point over the cylinder.

    Raises:
        TwistorError: If |y0| != |y1| or the point does not lie over a real height v
    """
    y = q.y
    if abs(abs(y[0]) - abs(y[1])) > EQUATOR_TOLERANCE * max(abs(y[0]), abs(y[1])) or abs(y[0]) == 0.0:
        raise TwistorError(f"Base point |y0| = {abs(y[0]):.6g}, |y1| = {abs(y[1]):.6g} is not on the equator")
    chart = y / y[0]
    omega = chart[1] / abs(chart[1])
    v = 0.5 * (chart[2] * np.conj(omega) + chart[3])
    nu = (chart[3] - chart[2] * np.conj(omega)) / 2j
    if abs(v.imag) > 1e-9 * max(1.0, abs(v.real)):
        raise TwistorError(f"Point lies over complex height v = {v}, not over the cylinder")
    return normalize_angle(math.atan2(omega.imag, omega.real)), float(v.real), complex(nu)


def in_Ph_residual(h: CylinderFunction, q: ProjPoint3) -> float:
    """Im nu - h(theta, v) after inverting the trivialization."""
    theta, v, nu = invert_trivialization(q)
    return float(nu.imag - h.evaluate(theta, v))


# Fourier splitting along planar circles

@dataclass
class FourierSplit:
    """Coefficients H_k, |k| <= K, of H(theta) = h(theta, t + Re(z e^{-i theta}))."""
    t: float
    z: complex
    K: int
    n_theta: int
    coefficients: np.ndarray
    tail_bound: float

    def H(self, k: int) -> complex:
        if abs(k) > self.K:
            return 0j
        return complex(self.coefficients[k + self.K])

    @property
    def u(self) -> float:
        return float(self.coefficients[self.K].real)

    def _series(self, omega, ks: np.ndarray) -> np.ndarray:
        omega = np.asarray(omega, dtype=complex)
        powers = omega[..., None] ** ks
        return np.sum(self.coefficients[ks + self.K] * powers, axis=-1)

    def H_plus(self, omega) -> np.ndarray:
        return self._series(omega, np.arange(1, self.K + 1))

    def H_minus(self, omega) -> np.ndarray:
        """sum_{k<0} H_k omega^k, meaningful on |omega| = 1."""
        return self._series(omega, -np.arange(1, self.K + 1))

    def eta(self, omega) -> np.ndarray:
        return self.u + 2.0 * self.H_plus(omega)


def circle_samples(h: CylinderFunction, t: float, z: complex, n_theta: int) -> Tuple[np.ndarray, np.ndarray]:
    thetas = 2.0 * np.pi * np.arange(n_theta) / n_theta
    return thetas, h.evaluate(thetas, t + z.real * np.cos(thetas) + z.imag * np.sin(thetas))


def fourier_H(h: CylinderFunction, t: float, z: complex, K: Optional[int] = None,
              n_theta: Optional[int] = None) -> FourierSplit:
    """
    Trapezoid Fourier coefficients of h along the circle of (t, z).

    Args:
        K: Truncation (default TWISTOR_FOURIER_K)
        n_theta: Quadrature size, at least 4K (default max(4K, 128))

    Raises:
        TwistorError: If K < 1 or n_theta < 4K
    """
    K = setting('TWISTOR_FOURIER_K') if K is None else int(K)
    if K < 1:
        raise TwistorError(f"K must be at least 1, got {K}")
    n_theta = max(4 * K, 128) if n_theta is None else int(n_theta)
    if n_theta < 4 * K:
        raise TwistorError(f"n_theta = {n_theta} < 4K = {4 * K}: coefficients would alias")

    z = complex(z)
    _, samples = circle_samples(h, t, z, n_theta)
    spectrum = np.fft.fft(samples) / n_theta
    ks = np.arange(-K, K + 1)
    raw = spectrum[ks % n_theta]
    # H_{-k} = conj(H_k) for real H
    coefficients = 0.5 * (raw + np.conj(raw[::-1]))
    outside = np.abs(np.fft.fftfreq(n_theta, 1.0 / n_theta)) > K
    tail = float(np.max(np.abs(spectrum[outside]))) if np.any(outside) else 0.0
    return FourierSplit(t=float(t), z=z, K=K, n_theta=n_theta, coefficients=coefficients, tail_bound=tail)


def fourier_relations(h: CylinderFunction, t: float, z: complex, K: Optional[int] = None,
                      step: float = 1e-4) -> Dict[str, float]:
    """
    Finite-difference check of -d_t H_k + 2 d_z H_{k-1} = 0 and
    -d_t H_k + 2 d_zbar H_{k+1} = 0 with d_z = (d_1 - i d_2)/2.
    """
    z = complex(z)

    def coefficients(tt, zz):
        return fourier_H(h, tt, zz, K).coefficients

    d_t = (coefficients(t + step, z) - coefficients(t - step, z)) / (2 * step)
    d_1 = (coefficients(t, z + step) - coefficients(t, z - step)) / (2 * step)
    d_2 = (coefficients(t, z + 1j * step) - coefficients(t, z - 1j * step)) / (2 * step)
    d_z = 0.5 * (d_1 - 1j * d_2)
    d_zbar = 0.5 * (d_1 + 1j * d_2)
    lowering = -d_t[1:] + 2 * d_z[:-1]
    raising = -d_t[:-1] + 2 * d_zbar[1:]
    return {'lowering': float(np.max(np.abs(lowering))), 'raising': float(np.max(np.abs(raising)))}


# Holomorphic disks

def disk_coordinates(split: FourierSplit, s: float, omega) -> np.ndarray:
    """Rows [1, omega, (t - is + eta) omega + z, t + is - eta + conj(z) omega]."""
    omega = np.atleast_1d(np.asarray(omega, dtype=complex))
    eta = split.eta(omega)
    t, z = split.t, split.z
    return np.column_stack([
        np.ones_like(omega),
        omega,
        (t - 1j * s + eta) * omega + z,
        t + 1j * s - eta + np.conj(z) * omega,
    ])


def disk_point(h: CylinderFunction, s: float, t: float, z: complex, omega: complex,
               K: Optional[int] = None, split: Optional[FourierSplit] = None) -> ProjPoint3:
    """Point of the holomorphic disk of (s, t, z) at omega, |omega| <= 1."""
    if abs(omega) > 1.0 + 1e-12:
        raise TwistorError(f"|omega| = {abs(omega)} > 1 is outside the disk")
    split = fourier_H(h, t, z, K) if split is None else split
    return ProjPoint3(disk_coordinates(split, s, omega)[0])


def holomorphy_residual(h: CylinderFunction, s: float, t: float, z: complex, K: Optional[int] = None,
                        n_theta: Optional[int] = None, corrected: bool = True) -> float:
    """
    Largest negative-frequency coefficient of the boundary functions
    F1 = z - omega(i kappa - H) and F2 = conj(z) omega + i kappa - H,
    kappa = s + i(H_+ - H_-) (or kappa = s when not corrected).
    """
    split = fourier_H(h, t, z, K, n_theta)
    z = complex(z)
    thetas, H = circle_samples(h, t, z, split.n_theta)
    omega = np.exp(1j * thetas)
    kappa = s + 1j * (split.H_plus(omega) - split.H_minus(omega)) if corrected else np.full_like(omega, s)
    F1 = z - omega * (1j * kappa - H)
    F2 = np.conj(z) * omega + 1j * kappa - H
    n = split.n_theta
    negative = np.arange(n // 2 + 1, n)
    residual = max(float(np.max(np.abs(np.fft.fft(F1)[negative]))),
                   float(np.max(np.abs(np.fft.fft(F2)[negative])))) / n
    return residual


@dataclass
class DiskSample:
    s: float
    t: float
    z: complex
    K: int
    omegas: np.ndarray
    coordinates: np.ndarray
    eta: np.ndarray
    boundary_theta: np.ndarray
    boundary_v: np.ndarray
    boundary_im_nu: np.ndarray
    boundary_residual: np.ndarray
    tail_bound: float

    def points(self) -> List[ProjPoint3]:
        return [ProjPoint3(row) for row in self.coordinates]

    def summary(self) -> Dict[str, Any]:
        return {
            'parameters': {'s': self.s, 't': self.t, 'z': [self.z.real, self.z.imag]},
            'K': self.K,
            'n_samples': int(len(self.omegas)),
            'boundary_residual_max': float(np.max(np.abs(self.boundary_residual))),
            'tail_bound': self.tail_bound,
        }

    def boundary_rows(self) -> np.ndarray:
        return np.column_stack([self.boundary_theta, self.boundary_v, self.boundary_im_nu, self.boundary_residual])

    def to_csv(self, path: Path) -> Path:
        np.savetxt(path, self.boundary_rows(), delimiter=',', header='theta,v,Im_nu,residual',
                   comments='', fmt='%.17g')
        return Path(path)


def disk_sample(h: CylinderFunction, s: float, t: float, z: complex, K: Optional[int] = None,
                n_boundary: int = 64, n_rings: int = 4) -> DiskSample:
    """Boundary ring (exact unit omegas) plus interior rings and the center."""
    split = fourier_H(h, t, z, K)
    boundary_theta = 2.0 * np.pi * np.arange(n_boundary) / n_boundary
    boundary = np.exp(1j * boundary_theta)
    boundary = boundary / np.abs(boundary)
    radii = np.arange(1, n_rings + 1) / (n_rings + 1)
    interior = (radii[:, None] * boundary[None, :]).ravel()
    omegas = np.concatenate([boundary, interior, [0j]])
    coordinates = disk_coordinates(split, s, omegas)

    v = np.empty(n_boundary)
    im_nu = np.empty(n_boundary)
    residual = np.empty(n_boundary)
    for j in range(n_boundary):
        theta, v[j], nu = invert_trivialization(ProjPoint3(coordinates[j]))
        im_nu[j] = nu.imag
        residual[j] = nu.imag - float(h.evaluate(theta, v[j]))
    return DiskSample(s=float(s), t=float(t), z=complex(z), K=split.K, omegas=omegas,
                      coordinates=coordinates, eta=split.eta(omegas), boundary_theta=boundary_theta,
                      boundary_v=v, boundary_im_nu=im_nu, boundary_residual=residual,
                      tail_bound=split.tail_bound)


# Quotients and the (C, R)-action

def project_pi(q: ProjPoint3) -> WeightedPoint:
    """[y0:y1:y2:y3] -> [y0:y1; (y0 y2 + y1 y3)/2]."""
    y = q.y
    if max(abs(y[0]), abs(y[1])) <= 1e-14 * np.max(np.abs(y)):
        raise TwistorError("(y0, y1) = 0: the projection is undefined on the removed line")
    return WeightedPoint(y[:2], 0.5 * (y[0] * y[2] + y[1] * y[3]))


def act_nu(nu: complex, q: ProjPoint3) -> ProjPoint3:
    """[y0 : y1 : y2 - i nu y1 : y3 + i nu y0]."""
    y = q.y
    nu = complex(nu)
    return ProjPoint3(np.array([y[0], y[1], y[2] - 1j * nu * y[1], y[3] + 1j * nu * y[0]]))


def underline_disk_point(t: float, z: complex, omega: complex) -> WeightedPoint:
    """[1 : omega ; z/2 + t omega + conj(z) omega^2 / 2]."""
    if abs(omega) > 1.0 + 1e-12:
        raise TwistorError(f"|omega| = {abs(omega)} > 1 is outside the disk")
    z = complex(z)
    return WeightedPoint(np.array([1.0, omega]), 0.5 * z + t * omega + 0.5 * np.conj(z) * omega ** 2)


# Flat model

def standard_disk_point(a: complex, b: complex, omega: complex) -> ProjPoint3:
    """[1 : omega : conj(a) omega + b : conj(b) omega + a]."""
    return ProjPoint3(np.array([1.0, omega, np.conj(a) * omega + b, np.conj(b) * omega + a]))


def second_family_point(a: complex, b: complex, omega: complex) -> ProjPoint3:
    """[omega : 1 : conj(a) + b omega : conj(b) + a omega]."""
    return ProjPoint3(np.array([omega, 1.0, np.conj(a) + b * omega, np.conj(b) + a * omega]))


def varpi(a: complex, b: complex) -> Tuple[float, complex]:
    """Quotient of the disk parameters by the R-action: (Re a, b) = (t, z)."""
    return float(complex(a).real), complex(b)


def parameter_action(nu: float, a: complex, b: complex) -> Tuple[complex, complex]:
    return complex(a) + 1j * nu, complex(b)


def flat_parameter_metric(da: complex, db: complex) -> float:
    """-|da|^2 + |db|^2."""
    return -abs(da) ** 2 + abs(db) ** 2
