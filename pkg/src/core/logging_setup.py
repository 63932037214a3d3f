"""
Logging configuration shared by the CLI and the web app.
"""
import logging
import os
from typing import Optional

from .settings import LoggingSettings

_configured = False


def configure_logging(settings: Optional[LoggingSettings] = None, level: Optional[str] = None):
    """Install one stream handler on the package logger"""
    global _configured
    settings = settings or LoggingSettings()
    level = level or os.environ.get('BBTIME_LOG_LEVEL') or settings.level

    root = logging.getLogger('src')
    if not _configured:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(settings.format))
        root.addHandler(handler)
        root.propagate = False
        _configured = True
    root.setLevel(level.upper())
