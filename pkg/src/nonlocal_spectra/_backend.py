"""Selects the compiled core when it is importable.

Set NONLOCAL_SPECTRA_BACKEND=python to force the numpy fallback.
"""
import os

from . import _pycore

if os.environ.get("NONLOCAL_SPECTRA_BACKEND", "").lower() == "python":
    core = _pycore
else:
    try:
        from . import _core as core
    except ImportError:  # extension not built
        core = _pycore

NAME = "python" if core is _pycore else "cython"
