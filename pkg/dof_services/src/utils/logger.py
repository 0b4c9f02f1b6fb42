import json
import logging
import sys
from datetime import datetime, timezone
from typing import Any, Dict, Optional

from sentry_sdk import add_breadcrumb, capture_exception

# Attributes every LogRecord carries; anything else came in through `extra=`.
_RESERVED = set(vars(logging.LogRecord("", 0, "", 0, "", (), None))) | {"message", "asctime"}


class JSONFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        log_data = {
            'timestamp': datetime.now(timezone.utc).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'module': record.module,
            'function': record.funcName,
            'line': record.lineno,
        }

        for key, value in record.__dict__.items():
            if key not in _RESERVED and not key.startswith('_'):
                log_data[key] = value

        if record.exc_info:
            log_data['exception'] = self.formatException(record.exc_info)

        return json.dumps(log_data, default=str)


class StderrHandler(logging.StreamHandler):
    """Writes to whatever `sys.stderr` is when a record is emitted."""

    def __init__(self):
        super().__init__(sys.stderr)

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, value):
        pass


def setup_logger(name: str, level: Optional[str] = None) -> logging.Logger:
    logger = logging.getLogger(name)
    if level is None:
        from ..config import get_settings
        settings = get_settings()
        level = "DEBUG" if settings.debug else settings.log_level
    logger.setLevel(level.upper())

    # Console handler with JSON formatting, stdout is reserved for command output
    if not any(getattr(h, '_relay_dof', False) for h in logger.handlers):
        console_handler = StderrHandler()
        console_handler.setFormatter(JSONFormatter())
        console_handler._relay_dof = True
        logger.addHandler(console_handler)
        logger.propagate = False

    return logger


def log_error(error: Exception, context: Optional[Dict[str, Any]] = None) -> None:
    logger = logging.getLogger('relay_dof')
    error_data = {
        'error_type': type(error).__name__,
        'error_message': str(error),
        **(context or {})
    }
    logger.error('Error occurred', extra=error_data)
    capture_exception(error)


def log_performance(metric: str, value: float, tags: Optional[Dict[str, Any]] = None) -> None:
    logger = logging.getLogger('relay_dof.performance')
    log_data = {
        'metric': metric,
        'value': value,
        **(tags or {})
    }
    logger.info('Performance metric', extra=log_data)
    add_breadcrumb(category='performance', message=metric, data=log_data, level='info')
