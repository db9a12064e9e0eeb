"""Kernel backend selection.

The compiled extension is preferred when it imports; ``PHASEMOTION_BACKEND``
(``auto``, ``cython`` or ``python``) overrides the choice at import time and
:func:`use` switches it at runtime (benchmarks compare both).
"""
import contextlib
import os

from . import _kernels_py

try:
    from . import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

BACKENDS = {"python": _kernels_py}
if _kernels_c is not None:
    BACKENDS["cython"] = _kernels_c


def _resolve(name):
    if name in (None, "", "auto"):
        return BACKENDS.get("cython", _kernels_py)
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"backend {name!r} is not available; choose from {sorted(BACKENDS)}"
        ) from None


_active = _resolve(os.environ.get("PHASEMOTION_BACKEND", "auto"))


def kernels():
    """Return the module implementing the active kernels."""
    return _active


def available():
    return sorted(BACKENDS)


def active_name():
    return _active.NAME


def set_backend(name):
    global _active
    _active = _resolve(name)
    return _active.NAME


@contextlib.contextmanager
def use(name):
    """Temporarily switch the kernel backend."""
    global _active
    previous = _active
    _active = _resolve(name)
    try:
        yield _active
    finally:
        _active = previous


def fft_workers():
    """Thread cap for FFTs, from ``PHASEMOTION_THREADS`` (default 1)."""
    raw = os.environ.get("PHASEMOTION_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)
