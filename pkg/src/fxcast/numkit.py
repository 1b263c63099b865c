"""Dense float64 vector/matrix helpers and the four activation functions.

Everything here is a pure function over numpy arrays (or scalars, for the
activations).  All arithmetic is 64-bit: gradient certification by finite
differences needs the full double-precision budget.
"""

from __future__ import annotations

import enum
from typing import Union

import numpy as np
from scipy.special import expit

from .errors import ShapeError

ArrayLike = Union[float, np.ndarray]


class ActivationKind(enum.Enum):
    SIGMOID = "sigmoid"
    TANH = "tanh"
    RELU = "relu"
    LINEAR = "linear"


def as_vector(x) -> np.ndarray:
    """Coerce to a contiguous float64 1-d array."""
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"expected a 1-d vector, got shape {v.shape}")
    return v


def as_matrix(x) -> np.ndarray:
    """Coerce to a contiguous float64 2-d array."""
    m = np.ascontiguousarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got shape {m.shape}")
    return m


def matvec(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Matrix-vector product with an explicit conformance check."""
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if a.ndim != 2 or x.ndim != 1 or a.shape[1] != x.shape[0]:
        raise ShapeError(
            f"matvec shape mismatch: matrix {a.shape} times vector {x.shape}"
        )
    return a @ x


def activate(kind: ActivationKind, x: ArrayLike) -> ArrayLike:
    """Apply an activation elementwise.

    The sigmoid goes through scipy's ``expit``, which evaluates the two
    numerically stable branches (``1/(1+e^-x)`` for x >= 0, ``e^x/(1+e^x)``
    otherwise) and never overflows.
    """
    if kind is ActivationKind.SIGMOID:
        return expit(x)
    if kind is ActivationKind.TANH:
        return np.tanh(x)
    if kind is ActivationKind.RELU:
        return np.maximum(x, 0.0)
    if kind is ActivationKind.LINEAR:
        return x
    raise ValueError(f"unknown activation kind: {kind!r}")


def activate_prime(kind: ActivationKind, x: ArrayLike) -> ArrayLike:
    """First derivative of ``activate`` at pre-activation ``x``.

    The relu derivative at exactly 0 is defined as 1 (any constant in [0, 1]
    is a valid subgradient; 1 keeps the choice deterministic).
    """
    if kind is ActivationKind.SIGMOID:
        s = expit(x)
        return s * (1.0 - s)
    if kind is ActivationKind.TANH:
        t = np.tanh(x)
        return 1.0 - t * t
    if kind is ActivationKind.RELU:
        return np.where(np.asarray(x) < 0, 0.0, 1.0)
    if kind is ActivationKind.LINEAR:
        return np.ones_like(np.asarray(x, dtype=np.float64))
    raise ValueError(f"unknown activation kind: {kind!r}")


def prime_from_output(kind: ActivationKind, out: ArrayLike, pre: ArrayLike) -> ArrayLike:
    """Activation derivative recovered from the cached output.

    Sigmoid and tanh derivatives are cheap functions of the activation's
    *output*; relu needs the pre-activation sign.  Backward passes use this to
    avoid re-evaluating transcendentals.
    """
    if kind is ActivationKind.SIGMOID:
        return out * (1.0 - out)
    if kind is ActivationKind.TANH:
        return 1.0 - out * out
    if kind is ActivationKind.RELU:
        return np.where(np.asarray(pre) < 0, 0.0, 1.0)
    if kind is ActivationKind.LINEAR:
        return np.ones_like(np.asarray(out, dtype=np.float64))
    raise ValueError(f"unknown activation kind: {kind!r}")
