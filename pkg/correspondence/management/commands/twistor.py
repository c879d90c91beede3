"""
Twistor correspondence run command.
python manage.py twistor <command> --config <path> [--out <dir>] [--seed <n>]
Exits with status 0 iff every check of the report passes.
"""
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from ...serializers import COMMANDS
from ...services.defaults import setting
from ...services.reports import ReportError, persist_run, write_report
from ...services.run_config import ConfigError, load_config
from ...services.runner import RunnerError, run_command

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Run a twistor correspondence pipeline from a JSON config and write report.json plus CSVs'

    def add_arguments(self, parser):
        parser.add_argument('command', choices=COMMANDS, help='Pipeline to run')
        parser.add_argument('--config', required=True, help='Path to the JSON run config')
        parser.add_argument('--out', help='Output directory (default: config output or TWISTOR_REPORT_DIR/<command>)')
        parser.add_argument('--seed', type=int, help='Override the config seed')
        parser.add_argument('--async', action='store_true', dest='run_async',
                            help='Queue the run on the Celery worker instead of running it here')
        parser.add_argument('--persist', action='store_true', help='Store the report as a RunRecord')

    def handle(self, *args, **options):
        command = options['command']
        try:
            cfg = load_config(options['config'], command=command).with_seed(options['seed'])
        except ConfigError as e:
            raise CommandError(str(e))

        out_dir = Path(options['out'] or cfg.output or Path(setting('TWISTOR_REPORT_DIR')) / command)
        persist = options['persist'] or setting('TWISTOR_PERSIST_RUNS')

        if options['run_async']:
            from ...tasks import run_config_task
            result = run_config_task.delay(str(options['config']), str(out_dir), command, cfg.seed, persist)
            self.stdout.write(self.style.SUCCESS(f'Queued {command} run as task {result.id}'))
            return

        self.stdout.write(self.style.SUCCESS(f'Twistor correspondence - {command} (seed {cfg.seed})'))
        self.stdout.write('=' * 60)
        try:
            report = run_command(cfg)
            written = write_report(report, out_dir)
        except (RunnerError, ReportError) as e:
            raise CommandError(str(e))

        for check in report.checks:
            line = f'{check.name:<26} {check.value:>12.3e}  {check.comparison} {check.tolerance:.1e}'
            if check.passed:
                self.stdout.write(f'  pass  {line}')
            else:
                self.stdout.write(self.style.ERROR(f'  FAIL  {line}'))
        for warning in report.warnings:
            self.stdout.write(self.style.WARNING(f'  warning: {warning}'))
        self.stdout.write('-' * 60)
        self.stdout.write(f'Wrote {", ".join(path.name for path in written)} to {out_dir}')

        if persist:
            record = persist_run(report, out_dir)
            self.stdout.write(f'Stored run record {record.id}')

        if not report.passed:
            failed = [check.name for check in report.checks if not check.passed]
            raise CommandError(f'{command} failed checks: {", ".join(failed)}', returncode=1)
        self.stdout.write(self.style.SUCCESS(f'{command}: all {len(report.checks)} checks passed'))
