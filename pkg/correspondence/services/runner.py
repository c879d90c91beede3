"""
Command runner
Each command samples its inputs with a generator seeded from the config,
delegates to the service modules and records checks, diagnostics and CSV
tables in a RunReport.
"""
import logging
import math
import time
from contextlib import contextmanager
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from django.utils import timezone

from .geometry import (CausalType, GeometryError, MinkowskiVector, SpacetimePoint, classify_direction,
                       cone_relation, cone_relation_sampled)
from .metric import (MetricError, beta_check, bivector_duality, curvature_report, curvature_sweep, metric_at,
                     self_duality_study, signature)
from .monopole import (MonopoleError, MonopolePair, combine_pairs, field_samples, gauge_fix, gauge_transform,
                       monopole_from_h, monopole_from_potential, monopole_residual_array, positivity_gate,
                       recover_u)
from .profiles import PlaneFunction, ProfileError, SeparableField
from .reports import RunReport
from .run_config import RunConfig
from .transforms import (TransformError, cauchy_to_h, invert_radon, sampled_cauchy_data, transform_R_adaptive,
                         transform_R_array, transform_R_sampled, wave_residual_orders)
from .twistor import (TwistorError, act_nu, disk_point, disk_sample, fourier_H, holomorphy_residual, project_pi,
                      underline_disk_point)

logger = logging.getLogger(__name__)

DEFAULT_PLANE = 'gaussian(1.0, 1.0)'

DEFAULT_GAUGE = 'bump(0.05, 1.0)'

CONE_SAMPLES = 4096

ORACLE_POINTS = 5

BETA_POINTS = 50

SWEEP_POINTS = 5

FLAT_STEP_LIMIT = 1e-2

MODULE_ERRORS = (GeometryError, ProfileError, TransformError, MonopoleError, MetricError, TwistorError)


class RunnerError(Exception):
    """Custom exception for failed command runs"""
    pass


@contextmanager
def _timed(report: RunReport, stage: str):
    started = time.perf_counter()
    try:
        yield
    finally:
        report.timing[f"{stage}_seconds"] = time.perf_counter() - started


def _random_points(cfg: RunConfig, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    t0, t1 = cfg.grid.t_range
    x_half = cfg.grid.x_half
    return rng.uniform(t0, t1, n), rng.uniform(-x_half, x_half, n), rng.uniform(-x_half, x_half, n)


def _spatial_axis(cfg: RunConfig, n: Optional[int] = None) -> np.ndarray:
    return np.linspace(-cfg.grid.x_half, cfg.grid.x_half, cfg.grid.n_grid if n is None else n)


def _pair(cfg: RunConfig) -> MonopolePair:
    """The pair described by the config: an explicit potential or h, optionally gauge shifted."""
    potential = cfg.monopole.get('potential')
    if potential:
        m = monopole_from_potential(SeparableField.from_spec(potential), label=potential)
    else:
        m = monopole_from_h(cfg.h, cfg.grid.n_theta)
    gauge = cfg.monopole.get('gauge')
    if gauge:
        m = gauge_transform(m, SeparableField.from_spec(gauge))
    return m


def _is_flat(cfg: RunConfig) -> bool:
    return cfg.h.is_zero and not cfg.monopole.get('potential')


# Commands

def run_transform(cfg: RunConfig, report: RunReport, rng: np.random.Generator) -> None:
    """Rh on a grid, quadrature oracle and the wave-equation convergence order."""
    grid = cfg.grid
    x = _spatial_axis(cfg)
    T, X1, X2 = np.meshgrid(np.asarray(grid.t_values), x, x, indexing='ij')
    with _timed(report, 'grid'):
        values = transform_R_array(cfg.h, T, X1, X2, n_theta=grid.n_theta)
    report.add_table('rh_grid.csv', ['t', 'x1', 'x2', 'Rh'],
                     np.column_stack([T.ravel(), X1.ravel(), X2.ravel(), values.ravel()]))
    if cfg.h.is_zero:
        report.add_check('flat', float(np.max(np.abs(values))), cfg.tolerance('flat'))

    t, x1, x2 = _random_points(cfg, rng, grid.n_points)
    with _timed(report, 'oracle'):
        worst = 0.0
        for i in range(min(ORACLE_POINTS, grid.n_points)):
            trapezoid = float(transform_R_array(cfg.h, t[i], x1[i], x2[i], n_theta=grid.n_theta))
            adaptive = transform_R_adaptive(cfg.h, SpacetimePoint(t[i], x1[i], x2[i]))
            worst = max(worst, abs(trapezoid - adaptive))
    report.add_check('quadrature', worst, cfg.tolerance('quadrature'))

    with _timed(report, 'wave'):
        study = wave_residual_orders(cfg.h, np.column_stack([t, x1, x2]), grid.steps, grid.n_theta)
    report.diagnostics['wave_residual'] = study
    report.add_check('wave_order', min(study['orders']), cfg.tolerance('wave_order'), 'ge',
                     detail="observed order of the finite-difference d'Alembertian of Rh")


def run_invert(cfg: RunConfig, report: RunReport, rng: np.random.Generator) -> None:
    """Radon inversion of a plane function; with nonzero h also Cauchy data of Rh back to h."""
    grid = cfg.grid
    plane = PlaneFunction.from_spec(cfg.plane or DEFAULT_PLANE)
    with _timed(report, 'inversion'):
        reconstruction = invert_radon(plane, grid.n_theta, grid.v_max, grid.n_v, n_s=grid.n_s,
                                      box=grid.box, n_box=grid.n_box)
    report.add_check('radon_inversion', reconstruction.sup_error(plane), cfg.tolerance('radon_inversion'),
                     detail=f"sup error on [-{grid.box}, {grid.box}]^2")
    report.warnings.extend(reconstruction.warnings)
    X1, X2 = np.meshgrid(reconstruction.x1, reconstruction.x2, indexing='ij')
    report.add_table('reconstruction.csv', ['x1', 'x2', 'f_rec', 'f'],
                     np.column_stack([X1.ravel(), X2.ravel(), reconstruction.values.ravel(), plane(X1, X2).ravel()]))

    if cfg.h.is_zero:
        return
    with _timed(report, 'cauchy_to_h'):
        f0, f1 = sampled_cauchy_data(cfg.h, n_theta=grid.n_theta)
        h_rec = cauchy_to_h(f0, f1, grid.n_theta, grid.v_max, grid.n_v, n_s=grid.n_s)
    t, x1, x2 = _random_points(cfg, rng, grid.n_points)
    error = np.abs(transform_R_sampled(h_rec, t, x1, x2) - transform_R_array(cfg.h, t, x1, x2, n_theta=grid.n_theta))
    report.add_check('cauchy_roundtrip', float(np.max(error)), cfg.tolerance('cauchy_roundtrip'))
    report.diagnostics['h_rec_tail_norm'] = h_rec.metadata['tail_norm']
    report.warnings.extend(h_rec.metadata.get('warnings', []))
    report.line_functions['h_rec'] = h_rec


def run_monopole(cfg: RunConfig, report: RunReport, rng: np.random.Generator) -> None:
    """Monopole residual sweep and the positivity gate V = 1 - d/dt Rh > 0."""
    grid = cfg.grid
    m = _pair(cfg)
    t, x1, x2 = _random_points(cfg, rng, grid.n_points)
    with _timed(report, 'residual'):
        residual = monopole_residual_array(m, t, x1, x2)
    report.add_check('monopole_residual', float(np.max(np.abs(residual))), cfg.tolerance('monopole_residual'))

    gate = positivity_gate(m, tuple(grid.t_range), grid.x_half, n=grid.n_grid)
    report.diagnostics['positivity'] = {'min_V': gate.min_V, 'min_abs_V': gate.min_abs_V, 'n_points': gate.n_points}
    report.add_check('positivity', gate.min_V, 0.0, 'gt', detail='min V over the sampled box')

    if cfg.controls:
        control = monopole_from_potential(SeparableField.t_squared_gaussian(1.0), label='non-wave control')
        control_residual = float(np.max(np.abs(monopole_residual_array(control, t, x1, x2))))
        report.add_check('non_wave_control', control_residual, cfg.tolerance('non_wave_control'), 'ge',
                         detail='a potential that is not a wave must break the monopole equation')

    report.add_table('monopole_fields.csv', ['t', 'x1', 'x2', 'V', 'A_t', 'A_1', 'A_2'],
                     field_samples(m, grid.t_values, _spatial_axis(cfg)))


def run_metric(cfg: RunConfig, report: RunReport, rng: np.random.Generator) -> None:
    """Signature, ASD-Weyl convergence study, beta-plane degeneracy and a curvature sweep."""
    grid = cfg.grid
    m = _pair(cfg)
    points = [tuple(p) for p in grid.points]

    defect = 0
    det_gap = 0.0
    for p in points:
        g = metric_at(m, p)
        negative, positive = signature(g)
        defect = max(defect, abs(negative - 2) + abs(positive - 2))
        V = float(m.V(*p[1:]))
        det_gap = max(det_gap, abs(np.linalg.det(g) - V ** 2) / V ** 2)
    report.add_check('signature', defect, 0.0, 'eq', detail='eigenvalue counts (2, 2)')
    report.diagnostics['det_relative_gap'] = det_gap

    with _timed(report, 'curvature'):
        if _is_flat(cfg):
            flat_steps = [step for step in grid.steps if step <= FLAT_STEP_LIMIT]
            if not flat_steps:
                raise RunnerError(f"The flat check needs a step <= {FLAT_STEP_LIMIT}, got {grid.steps}")
            riemann = max(curvature_report(m, p, step).riemann_max for p in points for step in flat_steps)
            report.add_check('flat', riemann, cfg.tolerance('flat'),
                             detail=f"max |Riemann| over steps {flat_steps}")
        else:
            studies = [self_duality_study(m, p, grid.steps) for p in points]
            report.diagnostics['self_duality'] = studies
            report.add_check('asd_order', min(min(s['asd_orders']) for s in studies), cfg.tolerance('asd_order'), 'ge')
            report.add_check('sd_floor', min(min(s['weyl_sd_norm']) for s in studies), cfg.tolerance('sd_floor'), 'ge')
            if cfg.controls and not cfg.monopole.get('potential'):
                broken = combine_pairs(m, monopole_from_h(cfg.h.scaled(2.0), grid.n_theta))
                broken_study = self_duality_study(broken, points[0], grid.steps)
                report.diagnostics['broken_control'] = broken_study
                report.add_check('broken_control', max(broken_study['asd_orders']), cfg.tolerance('asd_order'), 'le',
                                 detail='ASD Weyl part of V and A from different h must not converge away')
                report.add_check('broken_asd_floor', broken_study['weyl_asd_norm'][-1],
                                 cfg.tolerance('broken_asd_floor'), 'ge')

    n_beta = min(grid.n_points, BETA_POINTS)
    t, x1, x2 = _random_points(cfg, rng, n_beta)
    s = rng.uniform(-1.0, 1.0, n_beta)
    phases = rng.uniform(0.0, 2.0 * math.pi, n_beta)
    worst_gram = 0.0
    worst_duality = 0.0
    for i in range(n_beta):
        p = (s[i], t[i], x1[i], x2[i])
        check = beta_check(m, p, complex(math.cos(phases[i]), math.sin(phases[i])))
        worst_gram = max(worst_gram, check.max_g)
        duality = bivector_duality(check.frame, metric_at(m, p))
        worst_duality = max(worst_duality, duality['anti_self_dual_defect'])
    report.add_check('beta_degeneracy', worst_gram, cfg.tolerance('beta_degeneracy'))
    report.diagnostics['beta_bivector_asd_defect'] = worst_duality

    x = _spatial_axis(cfg, min(grid.n_grid, SWEEP_POINTS))
    sweep_points = [(0.0, grid.t_values[0], a, b) for a in x for b in x]
    with _timed(report, 'sweep'):
        rows = curvature_sweep(m, sweep_points, grid.steps[-1])
    columns = ['t', 'x1', 'x2', 'weyl_sd_norm', 'weyl_asd_norm', 'V']
    report.add_table('curvature_sweep.csv', columns, np.array([[row[c] for c in columns] for row in rows]))


def run_disks(cfg: RunConfig, report: RunReport, rng: np.random.Generator) -> None:
    """Disk boundary incidence, holomorphy, quotient compatibility and R-equivariance."""
    grid = cfg.grid
    h = cfg.h
    K = grid.fourier_k
    n = grid.n_points
    t, x1, x2 = _random_points(cfg, rng, n)
    s = rng.uniform(-1.0, 1.0, n)
    nus = rng.uniform(-1.0, 1.0, n)

    boundary = holomorphy = control = quotient = equivariance = tail = 0.0
    rows = []
    with _timed(report, 'disks'):
        for i in range(n):
            z = complex(x1[i], x2[i])
            sample = disk_sample(h, s[i], t[i], z, K)
            boundary = max(boundary, float(np.max(np.abs(sample.boundary_residual))))
            tail = max(tail, sample.tail_bound)
            rows.append(np.column_stack([np.full(len(sample.boundary_theta), i), sample.boundary_rows()]))

            holomorphy = max(holomorphy, holomorphy_residual(h, s[i], t[i], z, K))
            if cfg.controls and not h.is_zero:
                control = max(control, holomorphy_residual(h, s[i], t[i], z, K, corrected=False))

            for omega, point in zip(sample.omegas[::8], sample.points()[::8]):
                quotient = max(quotient, project_pi(point).distance(underline_disk_point(t[i], z, omega)))

            split = fourier_H(h, t[i], z, K)
            for omega in sample.omegas[:2]:
                moved = act_nu(nus[i], disk_point(h, s[i], t[i], z, omega, split=split))
                target = disk_point(h, s[i] + nus[i], t[i], z, omega, split=split)
                equivariance = max(equivariance, moved.distance(target))

    report.add_check('disk_boundary', boundary, cfg.tolerance('disk_boundary'), detail='max |Im nu - h| on boundaries')
    report.add_check('holomorphy', holomorphy, cfg.tolerance('holomorphy'),
                     detail='largest negative-frequency coefficient of the boundary functions')
    if cfg.controls and not h.is_zero:
        report.add_check('kappa_control', control, cfg.tolerance('kappa_control'), 'ge',
                         detail='boundary functions without the Fourier correction')
    report.add_check('quotient', quotient, cfg.tolerance('quotient'))
    report.add_check('equivariance', equivariance, cfg.tolerance('equivariance'))
    report.diagnostics['fourier_tail_bound'] = tail
    report.add_table('disk_boundary.csv', ['sample', 'theta', 'v', 'Im_nu', 'residual'], np.vstack(rows))


def run_geodesics(cfg: RunConfig, report: RunReport, rng: np.random.Generator) -> None:
    """Metric against axis classification of directions, and closed-form against sampled cone relations."""
    grid = cfg.grid
    directions = rng.normal(size=(grid.n_directions, 3))
    n_null = max(1, grid.n_directions // 100)
    radii = rng.uniform(0.1, 3.0, n_null)
    angles = rng.uniform(0.0, 2.0 * math.pi, n_null)
    signs = rng.choice([-1.0, 1.0], n_null)
    null = np.column_stack([signs * radii, radii * np.cos(angles), radii * np.sin(angles)])

    counts: Dict[str, int] = {c.value: 0 for c in CausalType}
    mismatches = 0
    with _timed(report, 'directions'):
        for d in np.vstack([directions, null]):
            result = classify_direction(MinkowskiVector(*d))
            counts[result.by_metric.value] += 1
            mismatches += not result.consistent
    report.add_check('classification_agreement', mismatches, 0.0, 'le',
                     detail=f"{len(directions) + n_null} directions")
    report.diagnostics['direction_counts'] = counts

    t0, t1 = grid.t_range
    low = np.array([t0, -grid.x_half, -grid.x_half])
    high = np.array([t1, grid.x_half, grid.x_half])
    first = rng.uniform(low, high, size=(grid.n_pairs, 3))
    second = rng.uniform(low, high, size=(grid.n_pairs, 3))
    disagreements = 0
    relations: Dict[str, int] = {}
    with _timed(report, 'cones'):
        for a, b in zip(first, second):
            c, c2 = SpacetimePoint(*a), SpacetimePoint(*b)
            relation = cone_relation(c, c2)
            relations[relation.value] = relations.get(relation.value, 0) + 1
            disagreements += relation != cone_relation_sampled(c, c2, CONE_SAMPLES)
    report.add_check('cone_agreement', disagreements, 0.0, 'le', detail=f"{grid.n_pairs} pairs")
    report.diagnostics['cone_relations'] = dict(sorted(relations.items()))


def run_roundtrip(cfg: RunConfig, report: RunReport, rng: np.random.Generator) -> None:
    """h -> monopole -> gauge perturbation -> gauge fix -> u -> h_rec -> R h_rec against Rh."""
    grid = cfg.grid
    T = grid.evolution_time
    if max(abs(grid.t_range[0]), abs(grid.t_range[1])) > T:
        raise RunnerError(f"t_range {grid.t_range} leaves the evolved interval [-{T}, {T}]")

    m = monopole_from_h(cfg.h, grid.n_theta)
    perturbed = gauge_transform(m, SeparableField.from_spec(cfg.monopole.get('gauge', DEFAULT_GAUGE)))
    with _timed(report, 'gauge_fix'):
        fix = gauge_fix(perturbed)
    report.diagnostics['gauge'] = fix.to_dict()
    report.warnings.extend(fix.warnings)

    with _timed(report, 'recover_u'):
        recovered = recover_u(fix.fixed_pair, T=T, region=grid.x_half,
                              curl_tolerance=cfg.tolerance('curl_after_gauge'))
    report.diagnostics['curl_max'] = recovered.curl_max

    with _timed(report, 'cauchy_to_h'):
        h_rec = cauchy_to_h(recovered.f0, recovered.f1, grid.n_theta, grid.v_max, grid.n_v, n_s=grid.n_s)
    report.diagnostics['h_rec_tail_norm'] = h_rec.metadata['tail_norm']
    report.warnings.extend(h_rec.metadata.get('warnings', []))

    t, x1, x2 = _random_points(cfg, rng, grid.n_points)
    u_ref = transform_R_array(cfg.h, t, x1, x2, n_theta=grid.n_theta)
    u_fd = recovered.u(t, x1, x2)
    u_rec = transform_R_sampled(h_rec, t, x1, x2)
    report.add_check('recovered_u', float(np.max(np.abs(u_fd - u_ref))), cfg.tolerance('roundtrip_u'),
                     detail='leapfrog evolution of the recovered Cauchy data')
    report.add_check('roundtrip_u', float(np.max(np.abs(u_rec - u_ref))), cfg.tolerance('roundtrip_u'),
                     detail='R of the rebuilt cylinder function')
    report.add_table('roundtrip_samples.csv', ['t', 'x1', 'x2', 'u_ref', 'u_fd', 'u_rec'],
                     np.column_stack([t, x1, x2, u_ref, u_fd, u_rec]))
    report.line_functions['h_rec'] = h_rec


COMMAND_HANDLERS: Dict[str, Callable[[RunConfig, RunReport, np.random.Generator], None]] = {
    'transform': run_transform,
    'invert': run_invert,
    'monopole': run_monopole,
    'metric': run_metric,
    'disks': run_disks,
    'geodesics': run_geodesics,
    'roundtrip': run_roundtrip,
}


def run_command(cfg: RunConfig) -> RunReport:
    """
    Run the configured command.

    Args:
        cfg: Validated run config; its seed drives every random sample

    Returns:
        RunReport with checks, diagnostics, tables and timing

    Raises:
        RunnerError: Wrapping the module error that stopped the run
    """
    if cfg.command not in COMMAND_HANDLERS:
        raise RunnerError(f"Unknown command '{cfg.command}'")
    rng = np.random.default_rng(cfg.seed)
    report = RunReport(command=cfg.command, seed=cfg.seed, config=cfg.echo())
    report.timing['started_at'] = timezone.now().isoformat()
    report.warnings.extend(cfg.h.decay_issues())

    logger.info(f"Running {cfg.command} (seed {cfg.seed})")
    started = time.perf_counter()
    try:
        COMMAND_HANDLERS[cfg.command](cfg, report, rng)
    except MODULE_ERRORS as e:
        logger.error(f"Run {cfg.command} failed: {e}", exc_info=True)
        raise RunnerError(f"{cfg.command}: {e}") from e
    report.timing['total_seconds'] = time.perf_counter() - started
    logger.info(f"Finished {cfg.command}: {len(report.checks)} checks, {'pass' if report.passed else 'fail'}")
    return report
