"""Link-level Monte-Carlo simulator for dynamic interference steering.

The heavy lifting lives in the C++ extension module; this package just
re-exports it under a stable name.
"""

try:
    from ._steersim import *  # noqa: F401,F403
    from . import _steersim as _impl
except ImportError:  # development builds keep the extension next to the package
    from _steersim import *  # noqa: F401,F403
    import _steersim as _impl

__doc__ = _impl.__doc__
__all__ = [name for name in dir(_impl) if not name.startswith("_")]
