"""Python access to the clerms core.

The extension passes structured values as canonical JSON text; this wrapper
decodes them into plain dicts and lists.
"""

import json

from . import _clerms
from ._clerms import ClermsError, encode_frame, sha256_hex

__all__ = [
    "ClermsError",
    "Service",
    "compute_invoice",
    "compute_line_cost",
    "decode_frame",
    "encode_frame",
    "error_code",
    "request_schema",
    "sha256_hex",
    "transition_table",
    "validate_submission",
]


def error_code(exc):
    """Module-level error name carried by a ClermsError."""
    return exc.args[0]


def _dumps(value):
    return value if isinstance(value, str) else json.dumps(value)


def validate_submission(body):
    return json.loads(_clerms.validate_submission(_dumps(body)))


def request_schema():
    return json.loads(_clerms.request_schema())


def transition_table():
    return json.loads(_clerms.transition_table())


def compute_line_cost(hourly_rate, hours, quantity=1):
    """Cost of one resource line as a two-decimal string."""
    return _clerms.compute_line_cost(str(hourly_rate), str(hours), int(quantity))


def compute_invoice(body, format="json"):
    out = _clerms.compute_invoice(_dumps(body), format)
    return json.loads(out) if format == "json" else out


def decode_frame(frame):
    kind, payload = _clerms.decode_frame(bytes(frame))
    return kind, json.loads(payload)


class Service:
    """A data directory opened through its config file."""

    def __init__(self, config_file, read_only=False, start_worker=False):
        self._s = _clerms.Service(str(config_file), read_only, start_worker)

    def __getattr__(self, name):
        fn = getattr(self._s, name)

        def call(*args, **kwargs):
            # dict bodies cross as JSON; lists stay lists (e.g. document refs)
            args = [_dumps(a) if isinstance(a, dict) else a for a in args]
            out = fn(*args, **kwargs)
            if isinstance(out, str) and out[:1] in ("{", "["):
                return json.loads(out)
            return out

        return call
