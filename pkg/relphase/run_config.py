import cmath
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import jsonschema
import yaml

from relphase.exceptions import ConfigurationError

SUBCOMMANDS = ("phase-average", "way-demo", "relphase-fidelity", "sweep", "selftest")
DEFAULT_SWEEP_BETA = "2:16:x2"
MAX_SEED = 2**64 - 1

Number = Union[str, int, float]


@dataclass(frozen=True)
class RunConfig:
    """The resolved settings of one CLI run.

    ``alpha`` and ``beta`` are kept as given (``1.0``, ``1.0@0.7``, ``1+2j`` or a sweep range) so
    the report metadata echoes exactly what was asked for; parse them with ``parse_complex`` and
    ``parse_range``.
    """

    subcommand: str
    alpha: Number = "1.0"
    beta: Number = "8.0"
    cutoff: Optional[int] = None
    rel_cutoff: Optional[int] = None
    resolution: Optional[int] = None
    prior: str = "flat"
    compare_priors: str = "flat,delta:0.3,vonmises:1,5"
    d: int = 31
    priors: str = "flat,delta:0,delta:5"
    format: str = "csv"
    out: Optional[str] = None
    jobs: int = 1
    seed: int = 0
    verbose: bool = False

    @classmethod
    def schema(cls) -> dict:
        """
        Return a JSON schema of the keys a run configuration accepts.

        Reference: https://github.com/Julian/jsonschema
        """
        number_or_string = {"type": ["string", "number"]}
        optional_cutoff = {"type": ["integer", "null"], "minimum": 0}
        return {
            "$schema": "http://json-schema.org/draft-07/schema#",
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "subcommand": {"type": "string", "enum": list(SUBCOMMANDS)},
                "alpha": number_or_string,
                "beta": number_or_string,
                "cutoff": optional_cutoff,
                "rel_cutoff": optional_cutoff,
                "resolution": {"type": ["integer", "null"], "minimum": 1},
                "prior": {"type": "string", "minLength": 1},
                "compare_priors": {"type": "string"},
                "d": {"type": "integer", "minimum": 1, "not": {"multipleOf": 2}},
                "priors": {"type": "string", "minLength": 1},
                "format": {"type": "string", "enum": ["csv", "json"]},
                "out": {"type": ["string", "null"]},
                "jobs": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0, "maximum": MAX_SEED},
                "verbose": {"type": "boolean"},
            },
            "required": ["subcommand"],
        }

    @classmethod
    def from_sources(
        cls, arguments: Mapping[str, Any], config_file: Optional[Path] = None
    ) -> "RunConfig":
        """
        Merge defaults, the YAML config file and explicit CLI arguments (in rising priority) and
        validate the result.

        Raises:
            ConfigurationError: the file cannot be read or the merged settings fail the schema
        """
        settings: Dict[str, Any] = {}
        if config_file is not None:
            settings.update(load_config_file(config_file))
        settings.update({key: value for key, value in arguments.items() if value is not None})
        if settings.get("subcommand") == "sweep" and "beta" not in settings:
            settings["beta"] = DEFAULT_SWEEP_BETA

        try:
            jsonschema.validate(settings, cls.schema(), cls=jsonschema.Draft7Validator)
        except jsonschema.ValidationError as ex:
            location = ".".join(str(part) for part in ex.absolute_path) or "config"
            raise ConfigurationError(f"Invalid configuration at {location}: {ex.message}") from ex
        return cls(**settings)

    def as_meta(self) -> Dict[str, Any]:
        """Every setting that affects the numbers; output location and verbosity are left out."""
        meta = asdict(self)
        for key in ("out", "verbose"):
            meta.pop(key)
        return meta


def load_config_file(path: Path) -> Dict[str, Any]:
    """Read a YAML mapping whose keys are the long flag names; dashes may be used or not."""
    if not path.exists():
        raise ConfigurationError(f"Config file {path} does not exist.")
    try:
        with path.open() as f:
            loaded = yaml.safe_load(f)
    except yaml.YAMLError as ex:
        raise ConfigurationError(f"Config file {path} is not valid YAML: {ex}") from ex
    if loaded is None:
        return {}
    if not isinstance(loaded, dict):
        raise ConfigurationError(f"Config file {path} must contain a mapping of settings.")
    # Unknown keys are left in place for the schema to reject.
    return {str(key).replace("-", "_"): value for key, value in loaded.items()}


def parse_complex(value: Number) -> complex:
    """
    Parse ``1.0`` (real), ``1.0@0.7`` (modulus@phase in radians) or a complex literal ``1+2j``.

    Raises:
        ConfigurationError: the value has none of these forms or is not finite
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        parsed = complex(value)
    else:
        parsed = _parse_complex_text(value)
    if not cmath.isfinite(parsed):
        raise ConfigurationError(f"Amplitude {value!r} must be finite")
    return parsed


def _parse_complex_text(value: Number) -> complex:
    text = str(value).strip().replace(" ", "")
    try:
        if "@" in text:
            modulus, phase = text.split("@")
            return cmath.rect(float(modulus), float(phase))
        try:
            return complex(float(text))
        except ValueError:
            return complex(text)
    except ValueError as ex:
        raise ConfigurationError(
            f"Cannot parse {value!r} as a complex number; use 1.0, 1.0@0.7 or 1+2j"
        ) from ex


def parse_range(value: Number) -> List[float]:
    """
    Parse ``start:stop:xF`` (geometric, factor F > 1), ``start:stop:+S`` (linear, step S > 0),
    ``start:stop`` (step 1) or a single value. ``stop`` is included when the grid lands on it.

    Raises:
        ConfigurationError: the range is malformed or empty
    """
    text = str(value).strip()
    parts = text.split(":")
    try:
        if len(parts) == 1:
            values = [float(parts[0])]
            if not math.isfinite(values[0]):
                raise ValueError("values must be finite")
            return values
        if len(parts) not in (2, 3):
            raise ValueError("expected start:stop[:xF|:+S]")
        start, stop = float(parts[0]), float(parts[1])
        if not (math.isfinite(start) and math.isfinite(stop)):
            raise ValueError("bounds must be finite")
        step = parts[2] if len(parts) == 3 else "+1"
        if step.startswith("x"):
            factor = float(step[1:])
            if factor <= 1 or start <= 0:
                raise ValueError("geometric ranges need start > 0 and factor > 1")
            count = int(math.floor(math.log(stop / start) / math.log(factor) + 1e-9)) + 1
            values = [start * factor**i for i in range(count)]
        else:
            increment = float(step.lstrip("+"))
            if increment <= 0:
                raise ValueError("linear ranges need a positive step")
            count = int(math.floor((stop - start) / increment + 1e-9)) + 1
            values = [start + increment * i for i in range(count)]
    except (ValueError, ZeroDivisionError) as ex:
        raise ConfigurationError(f"Invalid range {value!r}: {ex}") from ex
    if not values:
        raise ConfigurationError(f"Range {value!r} is empty")
    return values
