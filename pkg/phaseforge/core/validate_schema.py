import json
import os

from jsonschema import Draft202012Validator

from phaseforge.core.errors import ConfigError

# Absolute, explicit, direct load of phaseforge/config/schema.json
SCHEMA_PATH = os.path.abspath(os.path.join(
    os.path.dirname(__file__),   # phaseforge/core/
    "..",
    "config",
    "schema.json"
))

if not os.path.exists(SCHEMA_PATH):
    raise RuntimeError(
        f"FATAL ERROR: Could not find phaseforge schema at:\n  {SCHEMA_PATH}"
    )

with open(SCHEMA_PATH, "r") as f:
    SCHEMA = json.load(f)

_VALIDATOR = Draft202012Validator(SCHEMA)


def _error_path(error):
    """Key path of the offending entry; unknown keys point at the key itself."""
    path = tuple(error.absolute_path)
    if error.validator == "additionalProperties" and isinstance(error.instance, dict):
        known = set(error.schema.get("properties", {}))
        extra = sorted(k for k in error.instance if k not in known)
        if extra:
            path = path + (extra[0],)
    return path


def _pretty_schema_error(error):
    path = " → ".join(str(x) for x in _error_path(error)) or "<root>"
    return f"Schema validation error at '{path}': {error.message}"


def schema_errors(cfg):
    return sorted(_VALIDATOR.iter_errors(cfg), key=lambda e: list(map(str, e.absolute_path)))


def validate_config(cfg, line_of=None):
    """
    Raise ConfigError for the first schema violation. `line_of` maps a key
    path to its 1-based line in the source file.
    """
    errors = schema_errors(cfg)
    if not errors:
        return
    first = errors[0]
    line = line_of(_error_path(first)) if line_of else None
    raise ConfigError(_pretty_schema_error(first), line=line)
