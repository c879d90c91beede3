"""
Run reports
Check records, the versioned report.json payload with its determinism hash,
CSV tables for plotting and optional persistence as RunRecord rows.
"""
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .transforms import SampledLineFunction

logger = logging.getLogger(__name__)

SCHEMA_VERSION = '1.0'

REPORT_FILENAME = 'report.json'

COMPARISONS = ('le', 'ge', 'gt', 'eq')


class ReportError(Exception):
    """Custom exception for report assembly and writing failures"""
    pass


def _jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings 'inf', '-inf' and 'nan'."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    if isinstance(value, complex):
        return [_jsonable(value.real), _jsonable(value.imag)]
    if isinstance(value, Path):
        return str(value)
    return value


@dataclass
class CheckRecord:
    """A named measurement compared against a tolerance."""
    name: str
    value: float
    tolerance: float
    comparison: str = 'le'
    detail: str = ''

    def __post_init__(self):
        if self.comparison not in COMPARISONS:
            raise ReportError(f"Unknown comparison '{self.comparison}' for check {self.name}")
        self.value = float(self.value)
        self.tolerance = float(self.tolerance)

    @property
    def passed(self) -> bool:
        if math.isnan(self.value):
            return False
        if self.comparison == 'le':
            return self.value <= self.tolerance
        if self.comparison == 'ge':
            return self.value >= self.tolerance
        if self.comparison == 'gt':
            return self.value > self.tolerance
        return self.value == self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'name': self.name,
            'value': _jsonable(self.value),
            'tolerance': _jsonable(self.tolerance),
            'comparison': self.comparison,
            'pass': self.passed,
        }
        if self.detail:
            data['detail'] = self.detail
        return data


@dataclass
class CsvTable:
    columns: List[str]
    rows: np.ndarray

    def write(self, path: Path) -> Path:
        rows = np.asarray(self.rows, dtype=float).reshape(-1, len(self.columns))
        np.savetxt(path, rows, delimiter=',', header=','.join(self.columns), comments='', fmt='%.17g')
        return path


@dataclass
class RunReport:
    command: str
    seed: int
    config: Dict[str, Any]
    checks: List[CheckRecord] = field(default_factory=list)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    timing: Dict[str, Any] = field(default_factory=dict)
    tables: Dict[str, CsvTable] = field(default_factory=dict)
    line_functions: Dict[str, SampledLineFunction] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def add_check(self, name: str, value: float, tolerance: float, comparison: str = 'le',
                  detail: str = '') -> CheckRecord:
        record = CheckRecord(name, value, tolerance, comparison, detail)
        self.checks.append(record)
        level = logging.INFO if record.passed else logging.WARNING
        logger.log(level, f"[{self.command}] {name}: {record.value:.3e} ({comparison} {record.tolerance:.1e}) "
                          f"{'pass' if record.passed else 'FAIL'}")
        return record

    def add_table(self, filename: str, columns: Sequence[str], rows: np.ndarray) -> None:
        if not filename.endswith('.csv'):
            raise ReportError(f"Table file {filename} must be a .csv")
        self.tables[filename] = CsvTable(list(columns), np.asarray(rows, dtype=float))

    def artifact_names(self) -> List[str]:
        names = [REPORT_FILENAME] + list(self.tables)
        for stem in self.line_functions:
            names.extend([f"{stem}.json", f"{stem}.csv"])
        return sorted(names)

    def payload(self) -> Dict[str, Any]:
        """Everything except timing; the determinism hash is taken over this."""
        return _jsonable({
            'schema_version': SCHEMA_VERSION,
            'command': self.command,
            'seed': self.seed,
            'config': self.config,
            'checks': [check.to_dict() for check in self.checks],
            'diagnostics': self.diagnostics,
            'warnings': list(self.warnings),
            'pass': self.passed,
            'artifacts': self.artifact_names(),
        })

    def determinism_hash(self) -> str:
        payload_str = json.dumps(self.payload(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(payload_str.encode()).hexdigest()

    def to_dict(self) -> Dict[str, Any]:
        data = self.payload()
        data['determinism_hash'] = self.determinism_hash()
        data['timing'] = _jsonable(self.timing)
        return data


def write_report(report: RunReport, directory) -> List[Path]:
    """
    Write report.json and every declared CSV into directory.

    Returns:
        Paths written, report.json first

    Raises:
        ReportError: If the directory cannot be created or written
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        report_path = directory / REPORT_FILENAME
        report_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + '\n')
        written = [report_path]
        for filename, table in report.tables.items():
            written.append(table.write(directory / filename))
        for stem, line_function in report.line_functions.items():
            written.extend(line_function.write(directory, stem))
    except OSError as e:
        logger.error(f"Writing report to {directory} failed: {e}", exc_info=True)
        raise ReportError(f"Cannot write report to {directory}: {e.strerror or e}")
    logger.info(f"Wrote {len(written)} files to {directory} ({'pass' if report.passed else 'fail'})")
    return written


def persist_run(report: RunReport, directory) -> Optional[Any]:
    """Store the report as a RunRecord row."""
    from ..models import RunRecord

    record = RunRecord.objects.create(
        command=report.command,
        seed=report.seed,
        passed=report.passed,
        determinism_hash=report.determinism_hash(),
        output_dir=str(directory),
        report=report.to_dict(),
        elapsed_seconds=report.timing.get('total_seconds'),
    )
    logger.info(f"Persisted run {record.id} ({report.command})")
    return record
