"""
Tests for run configs, reports, the runner and the management commands.
"""
import json
from io import StringIO

import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from correspondence.models import RunRecord
from correspondence.serializers import RunConfigSerializer
from correspondence.services.reports import CheckRecord, ReportError, RunReport, persist_run, write_report
from correspondence.services.run_config import DEFAULT_TOLERANCES, ConfigError, config_from_dict, load_config
from correspondence.services.runner import RunnerError, run_command
from correspondence.tasks import run_config_task
from factories import RunConfigPayloadFactory, RunRecordFactory

FLAT_TRANSFORM = {'command': 'transform', 'h_spec': [], 'grid_spec': {'n_points': 5, 'n_grid': 3}}

REFERENCE_H_SPEC = [{'k': 1, 'cos': 'hermite(4, 0.08333333333333333, 0, 1.5)', 'sin': 'hermite(5, 0.05, 0, 1.5)'}]

WEAK_H_SPEC = [{'k': 1, 'cos': 'gaussian(0.1, 0, 1)'}]


class TestRunConfig:

    def test_defaults_are_filled_in(self):
        cfg = config_from_dict(RunConfigPayloadFactory())
        assert cfg.command == 'transform'
        assert cfg.grid.n_theta == 256
        assert cfg.grid.steps == [1e-2, 5e-3, 2.5e-3]
        assert cfg.tolerance('wave_order') == 1.9
        assert cfg.controls is True
        assert cfg.h.max_k == 1

    def test_tolerance_overrides(self):
        cfg = config_from_dict(RunConfigPayloadFactory(tolerances={'quadrature': 1e-8}))
        assert cfg.tolerance('quadrature') == 1e-8
        assert cfg.tolerance('flat') == DEFAULT_TOLERANCES['flat']

    @pytest.mark.parametrize('payload, field', [
        ({'h_spec': [{'k': -1, 'cos': 'gaussian'}]}, 'h_spec[0].k'),
        ({'grid_spec': {'n_grid': 0}}, 'grid_spec.n_grid'),
        ({'grid_spec': {'n_theta': 33}}, 'n_theta'),
        ({'grid_spec': {'steps': [1e-3, 1e-2]}}, 'grid_spec.steps'),
        ({'colour': 'blue'}, 'colour'),
        ({'tolerances': {'speed': 1.0}}, 'tolerances'),
        ({'plane': 'cone(1)'}, 'plane'),
        ({'monopole': {'potential': 'ripple(1)'}}, 'monopole.potential'),
        ({'h_spec': [{'k': 1, 'cos': 'wobble(2)'}]}, 'h_spec[0].cos'),
    ])
    def test_invalid_fields_are_named(self, payload, field):
        with pytest.raises(ConfigError, match='invalid config') as excinfo:
            config_from_dict(RunConfigPayloadFactory(**payload))
        assert field in str(excinfo.value)

    def test_top_level_must_be_an_object(self):
        with pytest.raises(ConfigError, match='top level'):
            config_from_dict([1, 2, 3])

    def test_parse_errors_carry_the_position(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"command": "transform",\n  "seed": }')
        with pytest.raises(ConfigError) as excinfo:
            load_config(path)
        assert str(excinfo.value).startswith(f'{path}:2:')

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match='Cannot read config'):
            load_config(tmp_path / 'absent.json')

    def test_command_line_command(self, write_config):
        path = write_config({'h_spec': []})
        assert load_config(path, command='disks').command == 'disks'
        with pytest.raises(ConfigError, match='does not match'):
            load_config(write_config(FLAT_TRANSFORM, 'flat.json'), command='invert')

    def test_seed_override_and_echo(self):
        cfg = config_from_dict(RunConfigPayloadFactory()).with_seed(7)
        echo = cfg.echo()
        assert echo['seed'] == 7
        assert echo['h_spec'][0]['k'] == 1
        json.dumps(echo)

    def test_serializer_rejects_nested_unknown_fields(self):
        serializer = RunConfigSerializer(data={'command': 'transform', 'grid_spec': {'n_gird': 3}},
                                         known_tolerances=DEFAULT_TOLERANCES)
        assert not serializer.is_valid()
        assert 'n_gird' in serializer.errors['grid_spec']


class TestReports:

    def test_comparisons(self):
        assert CheckRecord('a', 1e-9, 1e-8).passed
        assert not CheckRecord('b', 1.0, 2.0, 'ge').passed
        assert CheckRecord('c', 2.0, 2.0, 'ge').passed
        assert not CheckRecord('d', 2.0, 2.0, 'gt').passed
        assert CheckRecord('e', 0.0, 0.0, 'eq').passed
        assert not CheckRecord('f', float('nan'), 1.0).passed
        with pytest.raises(ReportError):
            CheckRecord('g', 1.0, 1.0, 'lt')

    def test_empty_report_passes(self):
        report = RunReport(command='transform', seed=1, config={})
        assert report.passed
        assert report.to_dict()['pass'] is True
        assert report.to_dict()['artifacts'] == ['report.json']

    def test_write_report(self, tmp_path):
        report = RunReport(command='transform', seed=1, config={'seed': 1})
        report.add_check('flat', 0.0, 1e-10)
        report.add_check('order', float('inf'), 1.9, 'ge')
        report.add_table('values.csv', ['a', 'b'], [[1.0, 2.0], [3.0, 4.0]])
        written = write_report(report, tmp_path / 'out')
        assert [path.name for path in written] == ['report.json', 'values.csv']

        data = json.loads(written[0].read_text())
        assert data['pass'] is True
        assert data['schema_version'] == '1.0'
        assert data['checks'][1]['value'] == 'inf'
        assert data['determinism_hash'] == report.determinism_hash()
        assert written[1].read_text().splitlines() == ['a,b', '1,2', '3,4']

    def test_tables_must_be_csv(self):
        with pytest.raises(ReportError):
            RunReport(command='transform', seed=1, config={}).add_table('values.txt', ['a'], [[1.0]])

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / 'file'
        blocker.write_text('')
        with pytest.raises(ReportError, match='Cannot write report'):
            write_report(RunReport(command='transform', seed=1, config={}), blocker)

    @pytest.mark.django_db
    def test_persist_run(self, tmp_path):
        report = RunReport(command='metric', seed=3, config={})
        report.add_check('asd_order', 1.0, 1.8, 'ge')
        record = persist_run(report, tmp_path)
        stored = RunRecord.objects.get(pk=record.pk)
        assert not stored.passed
        assert stored.determinism_hash == report.determinism_hash()
        assert str(stored) == 'metric (seed 3) - fail'


class TestRunner:

    def test_flat_transform(self):
        report = run_command(config_from_dict(FLAT_TRANSFORM))
        assert report.passed
        assert {check.name for check in report.checks} == {'flat', 'quadrature', 'wave_order'}
        assert set(report.tables) == {'rh_grid.csv'}
        assert report.tables['rh_grid.csv'].rows.shape == (9, 4)

    def test_reports_are_deterministic(self):
        cfg = config_from_dict(RunConfigPayloadFactory(grid_spec={'n_points': 5, 'n_grid': 3}))
        first = run_command(cfg)
        assert run_command(cfg).determinism_hash() == first.determinism_hash()
        assert run_command(cfg.with_seed(43)).determinism_hash() != first.determinism_hash()

    def test_disks(self):
        cfg = config_from_dict(RunConfigPayloadFactory(command='disks', grid_spec={'n_points': 3}))
        report = run_command(cfg)
        assert report.passed, [check.to_dict() for check in report.checks if not check.passed]
        assert 'kappa_control' in {check.name for check in report.checks}
        assert 'disk_boundary.csv' in report.tables

    def test_geodesics(self):
        cfg = config_from_dict({'command': 'geodesics', 'grid_spec': {'n_pairs': 200, 'n_directions': 500}})
        report = run_command(cfg)
        assert report.passed
        assert sum(report.diagnostics['cone_relations'].values()) == 200

    def test_monopole(self):
        cfg = config_from_dict(RunConfigPayloadFactory(command='monopole', grid_spec={'n_points': 20, 'n_grid': 5}))
        report = run_command(cfg)
        assert report.passed, [check.to_dict() for check in report.checks if not check.passed]
        assert {check.name for check in report.checks} == {'monopole_residual', 'positivity', 'non_wave_control'}
        assert set(report.tables) == {'monopole_fields.csv'}
        assert report.tables['monopole_fields.csv'].rows.shape == (25, 7)
        assert report.diagnostics['positivity']['min_V'] > 0.0

    def test_flat_metric(self):
        cfg = config_from_dict({'command': 'metric', 'h_spec': [], 'grid_spec': {'n_points': 5, 'n_grid': 3}})
        report = run_command(cfg)
        assert report.passed
        assert {check.name for check in report.checks} == {'signature', 'flat', 'beta_degeneracy'}
        flat = next(check for check in report.checks if check.name == 'flat')
        assert '0.01' in flat.detail and '0.0025' in flat.detail
        assert set(report.tables) == {'curvature_sweep.csv'}
        assert report.tables['curvature_sweep.csv'].rows.shape == (9, 6)

    def test_flat_metric_needs_a_small_step(self):
        cfg = config_from_dict({'command': 'metric', 'h_spec': [], 'grid_spec': {'steps': [0.1, 0.05]}})
        with pytest.raises(RunnerError, match='flat check'):
            run_command(cfg)

    def test_metric(self):
        cfg = config_from_dict({'command': 'metric', 'h_spec': WEAK_H_SPEC,
                                'grid_spec': {'n_points': 5, 'n_grid': 3, 'points': [[0.0, 0.0, 0.5, 0.0]]}})
        report = run_command(cfg)
        assert report.passed, [check.to_dict() for check in report.checks if not check.passed]
        assert {check.name for check in report.checks} == {
            'signature', 'asd_order', 'sd_floor', 'broken_control', 'broken_asd_floor', 'beta_degeneracy'}
        broken = next(check for check in report.checks if check.name == 'broken_control')
        assert broken.value == max(report.diagnostics['broken_control']['asd_orders'])
        assert abs(report.diagnostics['broken_control']['asd_orders'][-1]) < 0.5
        assert broken.tolerance == cfg.tolerance('asd_order')
        assert set(report.tables) == {'curvature_sweep.csv'}

    @pytest.mark.slow
    def test_invert(self):
        cfg = config_from_dict({'command': 'invert', 'h_spec': REFERENCE_H_SPEC,
                                'grid_spec': {'n_points': 50, 'x_half': 1.4}})
        report = run_command(cfg)
        assert report.passed, [check.to_dict() for check in report.checks if not check.passed]
        assert {check.name for check in report.checks} == {'radon_inversion', 'cauchy_roundtrip'}
        assert set(report.tables) == {'reconstruction.csv'}
        assert report.tables['reconstruction.csv'].rows.shape == (61 * 61, 4)
        assert 'h_rec' in report.line_functions

    @pytest.mark.slow
    def test_roundtrip(self):
        cfg = config_from_dict({'command': 'roundtrip', 'h_spec': REFERENCE_H_SPEC,
                                'grid_spec': {'n_points': 50, 'x_half': 1.4}})
        report = run_command(cfg)
        assert report.passed, [check.to_dict() for check in report.checks if not check.passed]
        assert {check.name for check in report.checks} == {'recovered_u', 'roundtrip_u'}
        assert set(report.tables) == {'roundtrip_samples.csv'}
        assert report.tables['roundtrip_samples.csv'].rows.shape == (50, 6)
        assert report.diagnostics['curl_max'] <= cfg.tolerance('curl_after_gauge')
        assert report.diagnostics['gauge']['warnings'] == []


class TestTwistorCommand:

    def test_flat_transform_writes_the_report(self, write_config, tmp_path):
        out = tmp_path / 'out'
        stdout = StringIO()
        call_command('twistor', 'transform', '--config', str(write_config(FLAT_TRANSFORM)), '--out', str(out),
                     stdout=stdout)
        assert 'all 3 checks passed' in stdout.getvalue()

        data = json.loads((out / 'report.json').read_text())
        assert data['pass'] is True
        assert data['command'] == 'transform'
        lines = (out / 'rh_grid.csv').read_text().splitlines()
        assert lines[0] == 't,x1,x2,Rh'
        assert all(float(line.split(',')[3]) == 0.0 for line in lines[1:])

    def test_failing_checks_set_the_exit_status(self, write_config, tmp_path):
        payload = RunConfigPayloadFactory(grid_spec={'n_points': 5, 'n_grid': 3}, tolerances={'wave_order': 10.0})
        with pytest.raises(CommandError, match='wave_order') as excinfo:
            call_command('twistor', 'transform', '--config', str(write_config(payload)),
                         '--out', str(tmp_path / 'out'), stdout=StringIO())
        assert excinfo.value.returncode == 1
        assert (tmp_path / 'out' / 'report.json').exists()

    def test_invalid_config(self, write_config, tmp_path):
        with pytest.raises(CommandError, match='h_spec'):
            call_command('twistor', 'transform', '--config', str(write_config({'h_spec': [{'k': -1}]})),
                         '--out', str(tmp_path), stdout=StringIO())

    @pytest.mark.django_db
    def test_persist(self, write_config, tmp_path):
        call_command('twistor', 'transform', '--config', str(write_config(FLAT_TRANSFORM)),
                     '--out', str(tmp_path / 'out'), '--seed', '5', '--persist', stdout=StringIO())
        record = RunRecord.objects.get()
        assert record.seed == 5
        assert record.passed
        assert record.report['seed'] == 5


@pytest.mark.django_db
class TestStatusCheck:

    def test_reports_numerics_and_records(self):
        RunRecordFactory(passed=False)
        stdout = StringIO()
        call_command('twistor_status_check', stdout=stdout)
        output = stdout.getvalue()
        assert 'OK: h = 0 gives V = 1' in output
        assert '1 runs stored, 1 failed' in output
        assert 'did not pass' in output


class TestTask:

    def test_task_runs_a_config(self, write_config, tmp_path):
        result = run_config_task(str(write_config(FLAT_TRANSFORM)), str(tmp_path / 'out'))
        assert result['success']
        assert result['pass']
        assert result['run_record_id'] is None
        assert result['files'][0].endswith('report.json')

    def test_task_returns_config_errors(self, write_config, tmp_path):
        result = run_config_task(str(write_config({'command': 'transform', 'seed': -1})), str(tmp_path))
        assert result == {'success': False, 'error': result['error']}
        assert 'seed' in result['error']
