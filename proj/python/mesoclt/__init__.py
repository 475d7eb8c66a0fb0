"""Mesoscopic linear statistics of Wigner matrices."""

import json as _json

from ._mesoclt import *  # noqa: F401,F403
from ._mesoclt import _run_summary, __version__


def run_summary(config):
    """Run an experiment in-process and return its summary as a dict.

    ``config`` maps dotted config keys (``"ensemble.dimension"``) to values.
    """
    flat = {str(k): _flatten(v) for k, v in config.items()}
    return _json.loads(_run_summary(flat))


def _flatten(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, complex):
        return f"{v.real!r}{'+' if v.imag >= 0 else ''}{v.imag!r}i"
    if isinstance(v, (list, tuple)):
        return ", ".join(_flatten(x) for x in v)
    return str(v)
