"""Multiplicative-weight allocation of a shared resource under per-user SLAs."""

try:
    from ._mwsla import *  # noqa: F401,F403
    from ._mwsla import __doc__  # noqa: F401
except ImportError:  # in-tree build: the extension sits next to the build outputs
    from _mwsla import *  # noqa: F401,F403
