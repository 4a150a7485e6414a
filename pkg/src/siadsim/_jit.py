"""JIT switch for the hot kernels.

Kernels are written in the numba-compatible subset of Python/numpy.  When
numba is importable and ``SIADSIM_DISABLE_JIT`` is unset (or ``0``), they are
compiled with ``numba.njit``; otherwise the very same functions run as plain
Python on numpy arrays.  The flag is read once, at import time.

numba's on-disk cache only checks the file that defines each function, so a
kernel that inlines a helper from another module would keep running stale
code after that helper changes.  The cache therefore lives in a directory
named after a digest of every source file in the package.
"""

import hashlib
import os
from pathlib import Path

ENV_FLAG = "SIADSIM_DISABLE_JIT"
CACHE_ENV = "SIADSIM_CACHE_DIR"


def _flag_set() -> bool:
    return os.environ.get(ENV_FLAG, "0").strip().lower() not in ("", "0", "false", "no")


def source_digest() -> str:
    h = hashlib.sha256()
    root = Path(__file__).resolve().parent
    for p in sorted(root.rglob("*.py")):
        h.update(p.relative_to(root).as_posix().encode())
        h.update(p.read_bytes())
    return h.hexdigest()[:16]


def _cache_dir() -> str:
    base = os.environ.get(CACHE_ENV)
    if base is None:
        xdg = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
        base = os.path.join(xdg, "siadsim")
    return os.path.join(base, "numba-" + source_digest())


try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

JIT_ENABLED = numba is not None and not _flag_set()

if JIT_ENABLED and not os.environ.get("NUMBA_CACHE_DIR"):
    numba.config.CACHE_DIR = _cache_dir()


def njit(fn=None, **kwargs):
    """``numba.njit(cache=True)`` when enabled, identity otherwise."""
    if not JIT_ENABLED:
        if fn is None:
            return lambda f: f
        return fn
    kwargs.setdefault("cache", True)
    if fn is None:
        return numba.njit(**kwargs)
    return numba.njit(**kwargs)(fn)
