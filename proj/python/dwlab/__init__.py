"""Python access to the dwlab numerical core."""

import json as _json

from ._dwlab import *  # noqa: F401,F403
from ._dwlab import run_experiment as _run_experiment


def run(config):
    """Run an experiment from a dict config and return the report as a dict."""
    return _json.loads(_run_experiment(_json.dumps(config)))
