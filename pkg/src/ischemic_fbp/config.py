"""Parameter configuration loading.

This module parses JSON configuration text into validated Parameters.
Keys must match Parameters field names exactly; missing keys take their
defaults and unknown keys are rejected.
"""

import json
import logging
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from ischemic_fbp.errors import ConfigError
from ischemic_fbp.schema import Parameters

logger = logging.getLogger(__name__)


def load_parameters(path: Path | str) -> Parameters:
    """Load Parameters from a JSON file.

    Args:
        path: Path to the configuration file.

    Returns:
        Validated Parameters.

    Raises:
        ConfigError: If the file is missing, is not a JSON object, or
            holds unknown keys or out-of-range values.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        content = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    params = load_parameters_from_string(content, source=str(path))
    logger.info(f"Loaded parameters from {path}")
    return params


def load_parameters_from_string(content: str, source: str = "<string>") -> Parameters:
    """Parse Parameters from JSON text.

    Empty text yields the default parameter set.

    Raises:
        ConfigError: On malformed JSON or invalid values.
    """
    if not content.strip():
        return Parameters()
    try:
        data = json.loads(content)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Malformed JSON in {source}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{source} must hold a JSON object, got {type(data).__name__}")
    return build_parameters(data, source=source)


def build_parameters(data: dict[str, Any], source: str = "<dict>") -> Parameters:
    """Validate a key-value mapping into Parameters.

    Raises:
        ConfigError: On unknown keys or invalid values.
    """
    try:
        return Parameters(**data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'parameters'}: {err['msg']}"
            for err in e.errors()
        )
        raise ConfigError(f"Invalid parameters in {source}: {problems}") from e


def override(params: Parameters, **updates: Any) -> Parameters:
    """Apply non-None overrides and re-validate.

    Raises:
        ConfigError: If an override is out of range.
    """
    changes = {k: v for k, v in updates.items() if v is not None}
    if not changes:
        return params
    return build_parameters({**params.model_dump(), **changes}, source="command-line overrides")
