"""JSON experiment records.

Quantities that may under- or overflow are carried as :class:`LogValue`. On
output they become plain numbers when |log| <= 700 and a tagged log form
``{"value": L, "log_space": true}`` otherwise, so nothing is exponentiated
into underflow.
"""

import datetime as _dt
import json
import math
import os
from dataclasses import dataclass, field

from .errors import DomainError

SCHEMA_VERSION = 1
MODELS = ("reset", "clumsy", "careless", "combined")
LOG_LIMIT = 700.0


class LogValue:
    """A positive quantity stored as its natural log."""

    __slots__ = ("log",)

    def __init__(self, log):
        self.log = float(log)

    def __eq__(self, other):
        return isinstance(other, LogValue) and self.log == other.log

    def __repr__(self):
        return f"LogValue({self.log!r})"


def _encode(value):
    if isinstance(value, LogValue):
        if value.log == -math.inf:
            return {"value": "-inf", "log_space": True}
        if not math.isfinite(value.log):
            raise DomainError(f"log value {value.log!r} is not representable")
        if abs(value.log) > LOG_LIMIT:
            return {"value": value.log, "log_space": True}
        return math.exp(value.log)
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if value == -math.inf:
            return "-inf"
        if not math.isfinite(value):
            raise DomainError(f"output {value!r} is neither finite nor -inf")
        return value
    if isinstance(value, dict):
        return {str(k): _encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if hasattr(value, "tolist"):  # numpy arrays and scalars
        return _encode(value.tolist())
    raise DomainError(f"cannot encode {type(value).__name__}")


def _decode(value):
    if isinstance(value, dict):
        if set(value) == {"value", "log_space"} and value["log_space"] is True:
            v = value["value"]
            return LogValue(-math.inf if v == "-inf" else v)
        return {k: _decode(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_decode(v) for v in value]
    return value


def utc_timestamp():
    """ISO-8601 UTC; honours SOURCE_DATE_EPOCH for reproducible output."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    moment = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
              else _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0))
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


def tool_version():
    from . import __version__
    return __version__


@dataclass
class ExperimentRecord:
    model: str
    params: dict
    seed: int
    outputs: dict
    tool_version: str = field(default_factory=tool_version)
    timestamp: str = field(default_factory=utc_timestamp)
    schema_version: int = SCHEMA_VERSION
    data: dict = None
    error: dict = None

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise DomainError(f"unsupported schema_version {self.schema_version!r}")
        if self.model not in MODELS:
            raise DomainError(f"model must be one of {MODELS}, got {self.model!r}")
        self.seed = int(self.seed) & 0xFFFFFFFFFFFFFFFF

    def to_dict(self):
        d = {"schema_version": self.schema_version, "model": self.model,
             "params": _encode(self.params), "seed": self.seed,
             "outputs": _encode(self.outputs), "tool_version": self.tool_version,
             "timestamp": self.timestamp}
        if self.data is not None:
            d["data"] = _encode(self.data)
        if self.error is not None:
            d["error"] = _encode(self.error)
        return d

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True, allow_nan=False)

    @classmethod
    def from_dict(cls, d):
        return cls(model=d["model"], params=_decode(d["params"]), seed=d["seed"],
                   outputs=_decode(d["outputs"]), tool_version=d["tool_version"],
                   timestamp=d["timestamp"], schema_version=d["schema_version"],
                   data=_decode(d.get("data")), error=_decode(d.get("error")))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def flat_outputs(self):
        """Scalar outputs only, nested keys joined with dots, for CSV."""
        flat = {}

        def walk(prefix, value):
            if isinstance(value, dict) and not (set(value) == {"value", "log_space"}):
                for k, v in value.items():
                    walk(f"{prefix}.{k}" if prefix else k, v)
            elif isinstance(value, dict):
                flat[prefix + ".log"] = value["value"]
            elif not isinstance(value, list):
                flat[prefix] = value

        walk("", _encode(self.outputs))
        return flat


def dumps(obj, indent=2):
    return json.dumps(_encode(obj), indent=indent, sort_keys=True, allow_nan=False)
