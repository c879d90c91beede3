"""
Celery tasks for the twistor correspondence toolkit.
Runs configured commands asynchronously and optionally persists the report.
"""
import logging
from typing import Any, Dict, Optional

from celery import shared_task

from .services.reports import ReportError, persist_run, write_report
from .services.run_config import ConfigError, load_config
from .services.runner import RunnerError, run_command

logger = logging.getLogger(__name__)


@shared_task(bind=True, max_retries=3)
def run_config_task(self, config_path: str, out_dir: str, command: Optional[str] = None,
                    seed: Optional[int] = None, persist: bool = False) -> Dict[str, Any]:
    """
    Load a config, run its command and write the report.
    Numerical failures are returned, not retried; only I/O failures retry.
    """
    try:
        cfg = load_config(config_path, command=command).with_seed(seed)
        logger.info(f"Task {self.request.id}: running {cfg.command} from {config_path}")
        report = run_command(cfg)
        written = write_report(report, out_dir)
        record_id = None
        if persist:
            record_id = str(persist_run(report, out_dir).id)
        return {
            'success': True,
            'command': report.command,
            'pass': report.passed,
            'determinism_hash': report.determinism_hash(),
            'files': [str(path) for path in written],
            'run_record_id': record_id,
        }
    except (ConfigError, RunnerError) as e:
        logger.error(f"Task {self.request.id} failed: {e}", exc_info=True)
        return {'success': False, 'error': str(e)}
    except ReportError as e:
        logger.error(f"Task {self.request.id} could not write its report: {e}")
        raise self.retry(exc=e, countdown=30)
