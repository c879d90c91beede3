"""
Twistor correspondence status check management command.
Checks settings, numerical smoke tests and the run-record store.
"""
import logging
import math

import numpy as np
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from ...models import RunRecord
from ...services.defaults import DEFAULTS, setting
from ...services.geometry import MinkowskiVector, classify_direction
from ...services.monopole import monopole_from_h, monopole_residual_array
from ...services.profiles import CylinderFunction, VProfile
from ...services.transforms import SampledLineFunction, hilbert_gaussian, transform_R_array

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Perform a status check of the twistor correspondence toolkit'

    def add_arguments(self, parser):
        parser.add_argument(
            '--fail-on-issues',
            action='store_true',
            help='Exit with an error if any issue is found'
        )
        parser.add_argument(
            '--verbose',
            action='store_true',
            help='Enable verbose output'
        )

    def handle(self, *args, **options):
        self.verbose = options['verbose']

        self.stdout.write(self.style.SUCCESS('Twistor Correspondence Toolkit - Status Check'))
        self.stdout.write('=' * 60)

        issues = []
        issues.extend(self._check_settings())
        issues.extend(self._check_numerics())
        issues.extend(self._check_database())
        issues.extend(self._check_broker())

        self._print_summary(issues)
        if options['fail_on_issues'] and any(severity != 'warning' for severity, _ in issues):
            raise CommandError(f'{len(issues)} issues found', returncode=1)

    def _report(self, issues, severity, issue):
        issues.append((severity, issue))
        style = self.style.WARNING if severity == 'warning' else self.style.ERROR
        self.stdout.write(style(f'{severity.upper()}: {issue}'))

    def _check_settings(self):
        """Check numerical defaults"""
        self.stdout.write('\nSettings')
        self.stdout.write('-' * 30)

        issues = []
        for name in DEFAULTS:
            value = setting(name)
            if self.verbose:
                self.stdout.write(f'{name} = {value}')
            if isinstance(value, (int, float)) and not isinstance(value, bool) and value <= 0:
                self._report(issues, 'error', f'{name} must be positive, got {value}')

        if setting('TWISTOR_N_THETA') % 2:
            self._report(issues, 'error', 'TWISTOR_N_THETA must be even')
        if setting('TWISTOR_FD_SPACING') > 0.05:
            self._report(issues, 'warning', 'TWISTOR_FD_SPACING above 0.05 limits leapfrog accuracy to about 1e-3')
        if setting('TWISTOR_POISSON_HALF_WIDTH') < 6.0:
            self._report(issues, 'warning', 'Poisson grids narrower than 6 usually fail the decay check')
        if not issues:
            self.stdout.write('OK: numerical defaults are consistent')
        return issues

    def _check_numerics(self):
        """Run fast smoke checks of the core transforms"""
        self.stdout.write('\nNumerical smoke checks')
        self.stdout.write('-' * 30)

        issues = []
        try:
            flat = monopole_from_h(CylinderFunction.zero())
            flat_gap = float(np.max(np.abs(flat.V(0.3, 0.1, -0.2) - 1.0)))
            if flat_gap != 0.0:
                self._report(issues, 'error', f'Flat model gives V - 1 = {flat_gap:.3e}')
            else:
                self.stdout.write('OK: h = 0 gives V = 1')

            h = CylinderFunction.single_mode(1, cos=VProfile.gaussian(), label='cos e^-v^2')
            points = np.array([[0.1, 0.2, -0.3], [-0.4, 0.5, 0.1]])
            residual = float(np.max(np.abs(monopole_residual_array(monopole_from_h(h), *points.T))))
            if residual > 1e-9:
                self._report(issues, 'error', f'Monopole residual {residual:.3e} exceeds 1e-9')
            else:
                self.stdout.write(f'OK: monopole residual {residual:.1e}')

            line = SampledLineFunction.constant(0.0, n_theta=16, v_max=8.0, n_v=513)
            gaussian = line.with_values(np.exp(-line.vs ** 2)[None, :].repeat(line.n_theta, axis=0))
            interior = np.abs(line.vs) <= 4.0
            gap = float(np.max(np.abs(gaussian.hilbert().values[0, interior] - hilbert_gaussian(line.vs[interior]))))
            if gap > 1e-4:
                self._report(issues, 'error', f'Hilbert transform of a Gaussian off by {gap:.3e}')
            else:
                self.stdout.write(f'OK: Hilbert transform error {gap:.1e}')

            average = float(transform_R_array(h, 0.0, 0.0, 0.0))
            if abs(average) > 1e-14:
                self._report(issues, 'error', f'R of a k = 1 mode at the origin is {average:.3e}, not 0')

            direction = classify_direction(MinkowskiVector(1.0, math.cos(0.3), math.sin(0.3)))
            if not direction.consistent:
                self._report(issues, 'error', 'Null direction classified inconsistently')
        except Exception as e:
            logger.error(f"Numerical smoke checks failed: {e}", exc_info=True)
            self._report(issues, 'critical', f'Numerical smoke checks raised: {e}')
        return issues

    def _check_database(self):
        """Check the run-record store"""
        self.stdout.write('\nRun records')
        self.stdout.write('-' * 30)

        issues = []
        try:
            total = RunRecord.objects.count()
            failed = RunRecord.objects.filter(passed=False).count()
            self.stdout.write(f'OK: database reachable, {total} runs stored, {failed} failed')
            latest = RunRecord.objects.first()
            if latest is not None and not latest.passed:
                self._report(issues, 'warning', f'Latest run {latest} did not pass')
        except Exception as e:
            self._report(issues, 'critical', f'Database error: {e}')
        return issues

    def _check_broker(self):
        """Report the Celery configuration (no connection attempt)"""
        self.stdout.write('\nAsync runs')
        self.stdout.write('-' * 30)

        issues = []
        broker = getattr(settings, 'CELERY_BROKER_URL', '')
        if not broker:
            self._report(issues, 'warning', 'CELERY_BROKER_URL is not set; --async runs are unavailable')
        else:
            eager = getattr(settings, 'CELERY_TASK_ALWAYS_EAGER', False)
            self.stdout.write(f'Broker: {broker}{" (eager)" if eager else ""}')
        return issues

    def _print_summary(self, issues):
        self.stdout.write('\n' + '=' * 60)
        if not issues:
            self.stdout.write(self.style.SUCCESS('All checks passed'))
            return
        counts = {}
        for severity, _ in issues:
            counts[severity] = counts.get(severity, 0) + 1
        summary = ', '.join(f'{count} {severity}' for severity, count in sorted(counts.items()))
        self.stdout.write(self.style.WARNING(f'Issues found: {summary}'))
