"""Input coercion helpers used by the estimator front end."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .exceptions import DimensionMismatch, ValidationFailed
from .povm import Povm, QuantumState, validate


def check_povm(X, *, validate_elements: bool = True) -> Povm:
    """Accept a :class:`Povm` or a path to a manifest and return a checked Povm."""
    if isinstance(X, (str, Path)):
        from .io import load

        return load(X, check=validate_elements)[1]
    if not isinstance(X, Povm):
        raise TypeError(f"expected a Povm or a manifest path, got {type(X).__name__}")
    if validate_elements:
        report = validate(X)
        if not report.valid:
            raise ValidationFailed(report.first_failure(), report)
    return X


def check_states(states, dimension: int) -> np.ndarray:
    """Coerce states into an ``(n, D, D)`` stack of density matrices.

    Accepts a single :class:`QuantumState`, a list of them, a ``(D, D)``
    density matrix, a ``(n, D, D)`` stack, or ``(n, D)`` / ``(D,)`` pure-state
    vectors (normalized here).
    """
    if isinstance(states, QuantumState):
        states = [states]
    if isinstance(states, (list, tuple)) and states and isinstance(states[0], QuantumState):
        arr = np.stack([s.matrix for s in states])
    else:
        arr = np.asarray(states, dtype=complex)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim == 2 and arr.shape == (dimension, dimension):
            arr = arr[None]
        elif arr.ndim == 2:
            if arr.shape[1] != dimension:
                raise DimensionMismatch(f"state vectors have length {arr.shape[1]}, expected {dimension}")
            norms = np.linalg.norm(arr, axis=1)
            if np.any(norms == 0):
                raise ValueError("zero state vector")
            v = arr / norms[:, None]
            arr = np.einsum("ni,nj->nij", v, v.conj())
    if arr.ndim != 3 or arr.shape[1:] != (dimension, dimension):
        raise DimensionMismatch(f"states have shape {arr.shape}, expected (n, {dimension}, {dimension})")
    for rho in arr:
        QuantumState(rho)
    return arr
