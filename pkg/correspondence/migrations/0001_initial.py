# Generated by Django 4.2.16

from django.db import migrations, models
import uuid


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='RunRecord',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
                ('command', models.CharField(choices=[('transform', 'Transform R sweep'), ('invert', 'Radon inversion'), ('monopole', 'Monopole residuals'), ('metric', 'Curvature study'), ('disks', 'Holomorphic disks'), ('geodesics', 'Geodesic classification'), ('roundtrip', 'Converse roundtrip')], max_length=20)),
                ('seed', models.BigIntegerField(help_text='Seed of all random sampling in the run')),
                ('passed', models.BooleanField(default=False, help_text='All checks passed')),
                ('determinism_hash', models.CharField(db_index=True, help_text='sha256 of the report without timing', max_length=64)),
                ('output_dir', models.CharField(help_text='Directory holding report.json and CSVs', max_length=500)),
                ('report', models.JSONField(help_text='Full report payload')),
                ('elapsed_seconds', models.FloatField(blank=True, null=True)),
            ],
            options={
                'db_table': 'twistor_run_records',
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['command', 'passed'], name='twistor_run_command_idx')],
            },
        ),
    ]
