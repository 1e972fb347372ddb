import logging
import sys

_LOGGER = logging.getLogger("phaseforge")

if not _LOGGER.handlers:
    _handler = logging.StreamHandler(sys.stderr)
    _handler.setFormatter(logging.Formatter("%(message)s"))
    _LOGGER.addHandler(_handler)
    _LOGGER.setLevel(logging.INFO)
    _LOGGER.propagate = False


def set_verbosity(level):
    _LOGGER.setLevel(level)


def log_info(msg):
    _LOGGER.info(f"[phaseforge] {msg}")

def log_warn(msg):
    _LOGGER.warning(f"[phaseforge:WARN] {msg}")

def log_error(msg):
    _LOGGER.error(f"[phaseforge:ERROR] {msg}")
