"""Import-time selection of the hot-loop implementation.

The compiled extension (byzcast._speedups, Cython) and the pure-Python twin
(byzcast._fallback) expose the same two kernels:

* ``count_vertex_disjoint`` — unit-capacity vertex-disjoint path counting,
* ``FloodCore`` — batched per-round flood message processing.

The compiled one is preferred when importable; setting ``BYZCAST_PURE=1`` in
the environment forces the fallback (used by the differential tests and the
kernel benchmark). Both produce identical counts, records, and traces.
"""

from __future__ import annotations

import os

from . import _fallback

if os.environ.get("BYZCAST_PURE", "") not in ("", "0"):
    impl = _fallback
else:
    try:
        from . import _speedups as impl  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - build environment dependent
        impl = _fallback

ACTIVE = impl.KERNEL_NAME
PURE = _fallback


def available() -> tuple[str, ...]:
    """Names of the kernel implementations importable right now."""
    names = ["pure"]
    try:
        from . import _speedups  # noqa: F401

        names.insert(0, "compiled")
    except ImportError:
        pass
    return tuple(names)
