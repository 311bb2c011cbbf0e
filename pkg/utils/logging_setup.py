import logging
import os
import sys
from logging.handlers import RotatingFileHandler

from colorama import Fore, Style

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
_SIZE_UNITS = {"KB": 1024, "MB": 1024 ** 2, "GB": 1024 ** 3}


def parse_size(value, default=10485760):
    """Accepts a byte count or strings like '10MB'."""
    if value is None:
        return default
    if isinstance(value, int):
        return value
    text = str(value).strip().upper()
    for unit, factor in _SIZE_UNITS.items():
        if text.endswith(unit):
            return int(text[: -len(unit)].strip()) * factor
    return int(text)


class TruncateLongMessagesFilter(logging.Filter):
    """Caps rendered messages; ladders and member lists can get very long."""

    def __init__(self, max_message_length=400):
        super().__init__()
        self.max_message_length = max_message_length

    def filter(self, record):
        message = record.getMessage()
        if len(message) > self.max_message_length:
            record.msg = f"{message[:self.max_message_length]}... [truncated]"
            record.args = ()
        return True


class ColorFormatter(logging.Formatter):
    COLORS = {
        logging.DEBUG: Fore.BLUE,
        logging.INFO: Fore.GREEN,
        logging.WARNING: Fore.YELLOW,
        logging.ERROR: Fore.RED,
        logging.CRITICAL: Fore.RED + Style.BRIGHT,
    }

    def format(self, record):
        levelname = record.levelname
        record.levelname = f"{self.COLORS.get(record.levelno, '')}{levelname}{Style.RESET_ALL}"
        try:
            return super().format(record)
        finally:
            record.levelname = levelname


def setup_logging(settings=None, level=None):
    """Set up root logging from the ``logging`` block of the settings."""
    log_settings = (settings or {}).get("logging", {})
    log_level = (level or os.getenv("INVOLUTOR_LOG_LEVEL") or log_settings.get("level", "INFO")).upper()
    log_file = log_settings.get("file", "volumes/logs/involutor.log")
    max_size = parse_size(log_settings.get("max_size"))
    backup_count = int(log_settings.get("backup_count", 2))
    max_message_length = int(log_settings.get("max_message_length", 400))
    numeric_level = getattr(logging, log_level, logging.INFO)

    directory = os.path.dirname(log_file)
    if directory:
        os.makedirs(directory, exist_ok=True)

    root = logging.getLogger()
    # Clear existing handlers to avoid duplicate logs
    root.handlers.clear()
    root.filters.clear()
    root.setLevel(numeric_level)

    file_handler = RotatingFileHandler(log_file, maxBytes=max_size, backupCount=backup_count,
                                       encoding="utf-8")
    file_handler.setLevel(numeric_level)
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))

    # Console goes to stderr so stdout carries only command results
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(numeric_level)
    console_handler.setFormatter(ColorFormatter(LOG_FORMAT))

    truncate = TruncateLongMessagesFilter(max_message_length)
    for handler in (file_handler, console_handler):
        handler.addFilter(truncate)
        root.addHandler(handler)

    logging.debug(f"Logging setup complete at level {log_level}, file {log_file}")
