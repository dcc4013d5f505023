"""Backend selection for the fused posterior-attention kernel.

The compiled extension is used when it was built; otherwise the numpy
implementation.  Set ``GMASIMT_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

GAUSSIAN, LAPLACE, LINEAR, NONE = (_kernels_py.GAUSSIAN, _kernels_py.LAPLACE,
                                   _kernels_py.LINEAR, _kernels_py.NONE)

_compiled = None
if not os.environ.get("GMASIMT_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined, no-redef]
    except ImportError:
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def available_backends() -> list[str]:
    return ["python"] + (["compiled"] if _compiled is not None else [])


def _module(backend: str | None):
    backend = backend or BACKEND
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        return _compiled
    if backend == "python":
        return _kernels_py
    raise ValueError(f"unknown backend {backend!r}")


def _rows(p, sigma, g):
    return (np.ascontiguousarray(p, dtype=np.float64).reshape(-1),
            np.ascontiguousarray(sigma, dtype=np.float64).reshape(-1),
            np.ascontiguousarray(g, dtype=np.int64).reshape(-1))


def posterior_forward(scores, p, sigma, g, variant: int, backend: str | None = None) -> np.ndarray:
    """``scores`` is (N, J); ``p``, ``sigma``, ``g`` are length N."""
    p, sigma, g = _rows(p, sigma, g)
    if g.size and g.min() < 1:
        raise ValueError("support bound g must be >= 1")
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    return _module(backend).posterior_forward(scores, p, sigma, g, int(variant))


def posterior_backward(beta, grad_beta, p, sigma, g, variant: int, backend: str | None = None):
    p, sigma, g = _rows(p, sigma, g)
    return _module(backend).posterior_backward(
        np.ascontiguousarray(beta, dtype=np.float64),
        np.ascontiguousarray(grad_beta, dtype=np.float64),
        p, sigma, g, int(variant))
