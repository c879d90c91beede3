"""
Database models for the twistor correspondence app.
Run records keep the report of every persisted command run.
"""
import uuid

from django.db import models


class BaseModel(models.Model):
    """Base model with common fields"""
    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    class Meta:
        abstract = True


class RunRecord(BaseModel):
    """
    One executed run: command, seed, outcome and the full report payload.
    """
    COMMAND_CHOICES = [
        ('transform', 'Transform R sweep'),
        ('invert', 'Radon inversion'),
        ('monopole', 'Monopole residuals'),
        ('metric', 'Curvature study'),
        ('disks', 'Holomorphic disks'),
        ('geodesics', 'Geodesic classification'),
        ('roundtrip', 'Converse roundtrip'),
    ]

    command = models.CharField(max_length=20, choices=COMMAND_CHOICES)
    seed = models.BigIntegerField(help_text="Seed of all random sampling in the run")
    passed = models.BooleanField(default=False, help_text="All checks passed")
    determinism_hash = models.CharField(max_length=64, db_index=True,
                                        help_text="sha256 of the report without timing")
    output_dir = models.CharField(max_length=500, help_text="Directory holding report.json and CSVs")
    report = models.JSONField(help_text="Full report payload")
    elapsed_seconds = models.FloatField(null=True, blank=True)

    class Meta:
        db_table = 'twistor_run_records'
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['command', 'passed'], name='twistor_run_command_idx'),
        ]

    def __str__(self):
        outcome = 'pass' if self.passed else 'fail'
        return f"{self.command} (seed {self.seed}) - {outcome}"
