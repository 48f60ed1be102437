"""Batched circuit kernels with a compiled core and a numpy fallback.

The compiled extension ``_fast`` is used when it imports; setting the
environment variable ``HQNN_KERNEL=python`` forces the numpy fallback.
Both backends expose the same five functions::

    sv_states(ops, nq, angles)          -> complex (B, 2**nq)
    sv_features(ops, nq, angles)        -> (B, 3*nq)
    sv_jacobian(ops, nq, angles)        -> (B, 3*nq), (B, 3*nq, A)
    dm_features(ops, nq, angles, p1, p2)
    dm_jacobian(ops, nq, angles, p1, p2)

``angles`` is a ``(B, A)`` table; each op reads column ``slot``.
"""
import os
from types import SimpleNamespace

from . import _reference
from .rules import FOUR_TERM, OPCODES, TWO_TERM, encode_ops, shift_rule

_NAMES = ("sv_states", "sv_features", "sv_jacobian", "dm_features", "dm_jacobian")


def _namespace(module, name):
    return SimpleNamespace(name=name, **{n: getattr(module, n) for n in _NAMES})


def available_backends():
    names = ["python"]
    try:
        from . import _fast  # noqa: F401
        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


def get_backend(name=None):
    """Return the kernel namespace for ``name`` ("compiled" or "python")."""
    if name is None:
        name = "python" if os.environ.get("HQNN_KERNEL", "").lower() == "python" else "compiled"
    if name == "compiled":
        try:
            from . import _fast
        except ImportError:
            return _namespace(_reference, "python")
        return _namespace(_fast, "compiled")
    if name == "python":
        return _namespace(_reference, "python")
    raise ValueError(f"unknown kernel backend {name!r}")


backend = get_backend()
BACKEND = backend.name

__all__ = [
    "BACKEND", "FOUR_TERM", "OPCODES", "TWO_TERM", "available_backends", "backend",
    "encode_ops", "get_backend", "shift_rule",
]
