"""
Metric g_(V,A) on R x R^{1,2}
Assembly of -V^{-1}(ds + A)^2 + V(-dt^2 + dx1^2 + dx2^2) in coordinates
(s, t, x1, x2), Christoffel symbols, Riemann and Weyl tensors, the
self-dual / anti-self-dual Weyl split and the beta-plane frame check.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .defaults import setting
from .monopole import MonopolePair

logger = logging.getLogger(__name__)

# Sign of the volume form on (s, t, x1, x2): epsilon_{s t x1 x2} = ORIENTATION * sqrt|det g|.
# With it, the beta-frame bivector m1 ^ m2 is anti-self-dual and so is the vanishing Weyl part.
ORIENTATION = -1.0

FLAT_G = np.diag([0.0, -1.0, 1.0, 1.0])


class MetricError(Exception):
    """Custom exception for metric assembly and curvature failures"""
    pass


def _levi_civita_symbol() -> np.ndarray:
    symbol = np.zeros((4, 4, 4, 4))
    for perm in itertools.permutations(range(4)):
        inversions = sum(1 for i in range(4) for j in range(i + 1, 4) if perm[i] > perm[j])
        symbol[perm] = -1.0 if inversions % 2 else 1.0
    return symbol


LEVI_CIVITA = _levi_civita_symbol()


def _as_point(p: Sequence[float]) -> Tuple[float, float, float, float]:
    if len(p) != 4:
        raise MetricError(f"Expected a point (s, t, x1, x2), got {p}")
    return tuple(float(c) for c in p)


def metric_at(m: MonopolePair, p: Sequence[float], with_partials: bool = False, scale: float = 1.0):
    """
    Metric matrix at p = (s, t, x1, x2).

    Args:
        m: Source monopole pair
        p: Point; g does not depend on s
        with_partials: Also return dg[k] = d g / d x^k, k over (s, t, x1, x2)
        scale: Constant conformal factor

    Returns:
        g, or (g, dg) when with_partials

    Raises:
        MetricError: If V(p) <= 0
    """
    _, t, x1, x2 = _as_point(p)
    V = float(m.V(t, x1, x2))
    if V <= 0.0:
        raise MetricError(f"V = {V:.3e} <= 0 at {p}: outside the region where g is defined")
    a = np.array([1.0] + [float(m.A(c, t, x1, x2)) for c in range(3)])
    g = scale * (-np.outer(a, a) / V + V * FLAT_G)
    if not with_partials:
        return g

    dg = np.zeros((4, 4, 4))
    for k, axis in ((1, 0), (2, 1), (3, 2)):
        deriv = [0, 0, 0]
        deriv[axis] = 1
        dV = float(m.V(t, x1, x2, deriv))
        da = np.array([0.0] + [float(m.A(c, t, x1, x2, deriv)) for c in range(3)])
        dg[k] = scale * (dV / V ** 2 * np.outer(a, a) - (np.outer(da, a) + np.outer(a, da)) / V + dV * FLAT_G)
    return g, dg


def signature(g: np.ndarray) -> Tuple[int, int]:
    """(negative, positive) eigenvalue counts."""
    eigenvalues = np.linalg.eigvalsh(g)
    return int(np.sum(eigenvalues < 0)), int(np.sum(eigenvalues > 0))


def christoffel(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Gamma^r_{mn} = 1/2 g^{rs} (d_m g_{sn} + d_n g_{sm} - d_s g_{mn})."""
    g_inv = np.linalg.inv(g)
    lowered = 0.5 * (np.einsum('msn->smn', dg) + np.einsum('nsm->smn', dg) - dg)
    return np.einsum('rs,smn->rmn', g_inv, lowered)


def riemann_from_christoffel(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    """R^r_{smn} = d_m G^r_{ns} - d_n G^r_{ms} + G^r_{ml} G^l_{ns} - G^r_{nl} G^l_{ms}."""
    return (np.einsum('mrns->rsmn', dgamma) - np.einsum('nrms->rsmn', dgamma)
            + np.einsum('rml,lns->rsmn', gamma, gamma) - np.einsum('rnl,lms->rsmn', gamma, gamma))


def weyl_tensor(riemann: np.ndarray, g: np.ndarray) -> np.ndarray:
    g_inv = np.linalg.inv(g)
    ricci = np.einsum('ac,abcd->bd', g_inv, riemann)
    scalar = float(np.einsum('bd,bd->', g_inv, ricci))
    # Kulkarni-Nomizu products in four dimensions
    ricci_part = 0.5 * (np.einsum('ac,bd->abcd', g, ricci) - np.einsum('ad,bc->abcd', g, ricci)
                        - np.einsum('bc,ad->abcd', g, ricci) + np.einsum('bd,ac->abcd', g, ricci))
    scalar_part = scalar / 6.0 * (np.einsum('ac,bd->abcd', g, g) - np.einsum('ad,bc->abcd', g, g))
    return riemann - ricci_part + scalar_part


def volume_form(g: np.ndarray) -> np.ndarray:
    return ORIENTATION * math.sqrt(abs(np.linalg.det(g))) * LEVI_CIVITA


def hodge_pair(tensor: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Hodge dual on the first antisymmetric index pair: 1/2 eps_ab^{ef} T_ef..."""
    g_inv = np.linalg.inv(g)
    eps_mixed = np.einsum('abpq,pe,qf->abef', volume_form(g), g_inv, g_inv)
    return 0.5 * np.einsum('abef,ef...->ab...', eps_mixed, tensor)


def _metric_contraction(tensor: np.ndarray, g: np.ndarray) -> float:
    g_inv = np.linalg.inv(g)
    raised = np.einsum('ae,bf,cg,dh,efgh->abcd', g_inv, g_inv, g_inv, g_inv, tensor)
    return float(np.einsum('abcd,abcd->', tensor, raised))


@dataclass
class CurvatureReport:
    point: Tuple[float, float, float, float]
    step: float
    christoffel: np.ndarray
    riemann: np.ndarray
    weyl: np.ndarray
    weyl_sd: np.ndarray
    weyl_asd: np.ndarray
    weyl_sd_norm: float
    weyl_asd_norm: float
    weyl_sd_contraction: float
    weyl_asd_contraction: float
    symmetry_defect: float
    bianchi_defect: float
    trace_defect: float
    truncation_estimate: Optional[float] = None

    @property
    def riemann_max(self) -> float:
        return float(np.max(np.abs(self.riemann)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'point': list(self.point),
            'step': self.step,
            'weyl_sd_norm': self.weyl_sd_norm,
            'weyl_asd_norm': self.weyl_asd_norm,
            'weyl_sd_contraction': self.weyl_sd_contraction,
            'weyl_asd_contraction': self.weyl_asd_contraction,
            'riemann_max': self.riemann_max,
            'symmetry_defect': self.symmetry_defect,
            'bianchi_defect': self.bianchi_defect,
            'trace_defect': self.trace_defect,
            'truncation_estimate': self.truncation_estimate,
        }


def _riemann_lowered(m: MonopolePair, point, step: float, scale: float):
    g, dg = metric_at(m, point, with_partials=True, scale=scale)
    gamma = christoffel(g, dg)
    dgamma = np.zeros((4, 4, 4, 4))
    for k in (1, 2, 3):
        shifted_plus = list(point)
        shifted_minus = list(point)
        shifted_plus[k] += step
        shifted_minus[k] -= step
        gamma_plus = christoffel(*metric_at(m, shifted_plus, with_partials=True, scale=scale))
        gamma_minus = christoffel(*metric_at(m, shifted_minus, with_partials=True, scale=scale))
        dgamma[k] = (gamma_plus - gamma_minus) / (2.0 * step)
    riemann_up = riemann_from_christoffel(gamma, dgamma)
    return g, gamma, np.einsum('ar,rbcd->abcd', g, riemann_up)


def curvature_report(m: MonopolePair, p: Sequence[float], step: Optional[float] = None,
                     truncation: bool = False, scale: float = 1.0) -> CurvatureReport:
    """
    Curvature of g_(V,A) at p by centered differences of analytic Christoffels.

    Args:
        m: Source pair
        p: Point (s, t, x1, x2)
        step: Finite-difference step for d Gamma
        truncation: Also estimate the truncation error from a second pass at 2*step
        scale: Constant conformal factor

    Returns:
        CurvatureReport

    Raises:
        MetricError: If the stencil leaves the region V > 0
    """
    point = _as_point(p)
    step = setting('TWISTOR_CURVATURE_STEP') if step is None else float(step)
    if step <= 0:
        raise MetricError(f"step must be positive, got {step}")

    g, gamma, riemann = _riemann_lowered(m, point, step, scale)
    weyl = weyl_tensor(riemann, g)
    star_weyl = hodge_pair(weyl, g)
    weyl_sd = 0.5 * (weyl + star_weyl)
    weyl_asd = 0.5 * (weyl - star_weyl)

    g_inv = np.linalg.inv(g)
    symmetry = max(
        float(np.max(np.abs(riemann + np.einsum('bacd->abcd', riemann)))),
        float(np.max(np.abs(riemann + np.einsum('abdc->abcd', riemann)))),
        float(np.max(np.abs(riemann - np.einsum('cdab->abcd', riemann)))),
    )
    bianchi = float(np.max(np.abs(riemann + np.einsum('acdb->abcd', riemann) + np.einsum('adbc->abcd', riemann))))
    trace = float(np.max(np.abs(np.einsum('ac,abcd->bd', g_inv, weyl))))

    estimate = None
    if truncation:
        _, _, coarse = _riemann_lowered(m, point, 2.0 * step, scale)
        estimate = float(np.max(np.abs(coarse - riemann))) / 3.0

    report = CurvatureReport(
        point=point, step=step, christoffel=gamma, riemann=riemann, weyl=weyl,
        weyl_sd=weyl_sd, weyl_asd=weyl_asd,
        weyl_sd_norm=float(np.sqrt(np.sum(weyl_sd ** 2))),
        weyl_asd_norm=float(np.sqrt(np.sum(weyl_asd ** 2))),
        weyl_sd_contraction=_metric_contraction(weyl_sd, g),
        weyl_asd_contraction=_metric_contraction(weyl_asd, g),
        symmetry_defect=symmetry, bianchi_defect=bianchi, trace_defect=trace,
        truncation_estimate=estimate,
    )
    logger.debug(f"Curvature at {point} (step {step}): |W+| = {report.weyl_sd_norm:.3e}, "
                 f"|W-| = {report.weyl_asd_norm:.3e}")
    return report


def self_duality_study(m: MonopolePair, p: Sequence[float],
                       steps: Sequence[float] = (1e-2, 5e-3, 2.5e-3), scale: float = 1.0) -> Dict[str, Any]:
    """ASD and SD Weyl norms across steps with observed convergence orders of the ASD part."""
    reports = [curvature_report(m, p, step, scale=scale) for step in steps]
    asd = [r.weyl_asd_norm for r in reports]
    sd = [r.weyl_sd_norm for r in reports]
    orders = []
    for i in range(len(steps) - 1):
        if asd[i] <= 1e-14 and asd[i + 1] <= 1e-14:
            orders.append(math.inf)
        else:
            orders.append(math.log(asd[i] / max(asd[i + 1], 1e-300)) / math.log(steps[i] / steps[i + 1]))
    ratios = [a / max(s, np.finfo(float).eps) for a, s in zip(asd, sd)]
    return {'steps': list(steps), 'weyl_asd_norm': asd, 'weyl_sd_norm': sd,
            'ratios': ratios, 'asd_orders': orders}


# Beta planes

@dataclass
class BetaFrame:
    point: Tuple[float, float, float, float]
    omega: complex
    m1: np.ndarray
    m2: np.ndarray

    def bivector(self) -> np.ndarray:
        return np.outer(self.m1, self.m2) - np.outer(self.m2, self.m1)


@dataclass
class BetaCheck:
    frame: BetaFrame
    max_g: float
    gram: np.ndarray = field(repr=False, default=None)


def beta_frame(m: MonopolePair, p: Sequence[float], omega: complex, s_scale: float = 1.0) -> BetaFrame:
    """
    Complex frame of the beta-plane through p for the direction omega.

    m1 = -d_t + 2 omega d_z - i(1 - u_t - 2 omega u_z) d_s,
    m2 = -omega d_t + 2 d_zbar + i(omega(1 - u_t) - 2 u_zbar) d_s,
    with d_z = (d_1 - i d_2)/2 and u read off the pair: u_t = 1 - V, u_1 = A_2, u_2 = -A_1.
    s_scale multiplies the d_s coefficient of m1 (negative controls).
    """
    if abs(abs(omega) - 1.0) > 1e-12:
        raise MetricError(f"|omega| must be 1, got {abs(omega)}")
    point = _as_point(p)
    _, t, x1, x2 = point
    V = float(m.V(t, x1, x2))
    if V <= 0.0:
        raise MetricError(f"V = {V:.3e} <= 0 at {p}")
    u_1 = float(m.A(2, t, x1, x2))
    u_2 = -float(m.A(1, t, x1, x2))
    u_z = 0.5 * (u_1 - 1j * u_2)
    u_zbar = 0.5 * (u_1 + 1j * u_2)
    omega = complex(omega)

    m1 = np.array([-1j * (V - 2.0 * omega * u_z) * s_scale, -1.0, omega, -1j * omega], dtype=complex)
    m2 = np.array([1j * (omega * V - 2.0 * u_zbar), -omega, 1.0, 1j], dtype=complex)
    return BetaFrame(point=point, omega=omega, m1=m1, m2=m2)


def beta_check(m: MonopolePair, p: Sequence[float], omega: complex, s_scale: float = 1.0) -> BetaCheck:
    """max |g(m_j, m_k)| over the complex-bilinear Gram matrix of the beta frame."""
    frame = beta_frame(m, p, omega, s_scale)
    g = metric_at(m, frame.point)
    vectors = np.stack([frame.m1, frame.m2])
    gram = vectors @ g @ vectors.T
    return BetaCheck(frame=frame, max_g=float(np.max(np.abs(gram))), gram=gram)


def bivector_duality(frame: BetaFrame, g: np.ndarray) -> Dict[str, float]:
    """Distance of the frame bivector from the self-dual and anti-self-dual eigenspaces."""
    upper = frame.bivector()
    lowered = g @ upper @ g.T
    star = hodge_pair(lowered, g)
    size = max(float(np.max(np.abs(lowered))), np.finfo(float).eps)
    return {
        'self_dual_defect': float(np.max(np.abs(star - lowered))) / size,
        'anti_self_dual_defect': float(np.max(np.abs(star + lowered))) / size,
    }


def curvature_sweep(m: MonopolePair, points: Sequence[Sequence[float]], step: Optional[float] = None
                    ) -> List[Dict[str, float]]:
    """Rows (t, x1, x2, weyl_sd_norm, weyl_asd_norm, V) for CSV export."""
    rows = []
    for p in points:
        report = curvature_report(m, p, step)
        _, t, x1, x2 = report.point
        rows.append({'t': t, 'x1': x1, 'x2': x2, 'weyl_sd_norm': report.weyl_sd_norm,
                     'weyl_asd_norm': report.weyl_asd_norm, 'V': float(m.V(t, x1, x2))})
    return rows
