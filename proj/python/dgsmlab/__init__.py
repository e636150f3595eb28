"""Active learning of derivative-based global sensitivity measures."""

import os as _os

from ._core import *  # noqa: F401,F403
from ._core import set_data_dir as _set_data_dir

_here = _os.path.join(_os.path.dirname(__file__), "data")
if not _os.environ.get("DGSMLAB_DATA_DIR") and _os.path.isfile(_os.path.join(_here, "problems.json")):
    _set_data_dir(_here)
