"""POVM containers, validation and the basic per-outcome quantities."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import (
    DimensionMismatch,
    NumericalInconsistency,
    ValidationFailed,
    ZeroTraceElement,
)
from .hilbert import FockBasis

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-9
TRACE_TOL = 1e-12
NULL_LABEL = "null"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def hermitian_eigvalsh(matrix) -> np.ndarray:
    """Eigenvalues of the Hermitian part of ``matrix`` (ascending)."""
    m = np.asarray(matrix)
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))


@dataclass(frozen=True, eq=False)
class PovmElement:
    """One measurement outcome: a label, its click count and a D x D operator."""

    label: str
    clicks: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"element {self.label!r}: matrix must be square, got {m.shape}")
        if int(self.clicks) != self.clicks or self.clicks < 0:
            raise ValueError(f"element {self.label!r}: clicks must be a nonnegative integer")
        object.__setattr__(self, "clicks", int(self.clicks))
        object.__setattr__(self, "label", str(self.label))
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))


@dataclass(frozen=True, eq=False)
class Povm:
    """Click outcomes on a shared Fock basis; the no-click element is derived.

    ``null_element`` is always ``I - sum(elements)``, so completeness holds by
    construction and validation only has to check positivity.
    """

    basis: FockBasis
    elements: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        elements = tuple(self.elements)
        d = self.basis.dimension
        labels = set()
        for e in elements:
            if e.dimension != d:
                raise DimensionMismatch(
                    f"element {e.label!r} has dimension {e.dimension}, basis has {d}"
                )
            if e.label in labels or e.label == NULL_LABEL:
                raise ValueError(f"duplicate or reserved outcome label {e.label!r}")
            labels.add(e.label)
        object.__setattr__(self, "elements", elements)

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    @property
    def labels(self) -> list[str]:
        return [e.label for e in self.elements]

    def __len__(self):
        return len(self.elements)

    def __getitem__(self, label: str) -> PovmElement:
        if label == NULL_LABEL:
            return self.null_element
        for e in self.elements:
            if e.label == label:
                return e
        raise KeyError(label)

    def total(self) -> np.ndarray:
        """Sum of all click elements."""
        out = np.zeros((self.dimension, self.dimension), dtype=complex)
        for e in self.elements:
            out += e.matrix
        return out

    @property
    def null_element(self) -> PovmElement:
        return PovmElement(NULL_LABEL, 0, np.eye(self.dimension) - self.total())

    def all_elements(self) -> list[PovmElement]:
        return [*self.elements, self.null_element]


@dataclass(frozen=True, eq=False)
class QuantumState:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch("density matrix must be square")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1) > 1e-10:
            raise ValueError("density matrix must have unit trace")
        if hermitian_eigvalsh(m)[0] < -PSD_TOL:
            raise ValueError("density matrix is not positive semidefinite")
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def pure(cls, vector) -> "QuantumState":
        v = np.asarray(vector, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


@dataclass
class ElementDiagnostics:
    label: str
    hermiticity_defect: float
    min_eigenvalue: float
    max_eigenvalue: float

    @property
    def ok(self) -> bool:
        return (
            self.hermiticity_defect <= HERMITIAN_TOL
            and self.min_eigenvalue >= -PSD_TOL
            and self.max_eigenvalue <= 1 + PSD_TOL
        )

    def problem(self) -> str | None:
        if self.hermiticity_defect > HERMITIAN_TOL:
            return f"not Hermitian (defect {self.hermiticity_defect:.3g})"
        if self.min_eigenvalue < -PSD_TOL:
            return f"not positive semidefinite (min eigenvalue {self.min_eigenvalue:.3g})"
        if self.max_eigenvalue > 1 + PSD_TOL:
            return f"eigenvalue above 1 ({self.max_eigenvalue:.6g})"
        return None


@dataclass
class ValidationReport:
    dimension: int
    elements: list
    sum_min_eigenvalue: float
    sum_max_eigenvalue: float

    @property
    def num_outcomes(self) -> int:
        """Non-null outcomes."""
        return len(self.elements)

    @property
    def valid(self) -> bool:
        return (
            all(e.ok for e in self.elements)
            and self.sum_min_eigenvalue >= -PSD_TOL
            and self.sum_max_eigenvalue <= 1 + PSD_TOL
        )

    def first_failure(self) -> str | None:
        for e in self.elements:
            p = e.problem()
            if p is not None:
                return f"element {e.label!r}: {p}"
        if self.sum_max_eigenvalue > 1 + PSD_TOL:
            return (
                "completeness violated: sum of click elements has eigenvalue "
                f"{self.sum_max_eigenvalue:.6g} > 1, null element not positive"
            )
        if self.sum_min_eigenvalue < -PSD_TOL:
            return f"sum of click elements has negative eigenvalue {self.sum_min_eigenvalue:.3g}"
        return None

    def to_text(self) -> str:
        lines = [
            f"dimension: {self.dimension}",
            f"non-null outcomes: {self.num_outcomes}",
            f"outcomes incl. null: {self.num_outcomes + 1}",
            f"sum spectrum: [{self.sum_min_eigenvalue:.12g}, {self.sum_max_eigenvalue:.12g}]",
        ]
        for e in self.elements:
            lines.append(
                f"  {e.label}: herm_defect={e.hermiticity_defect:.3g} "
                f"eig=[{e.min_eigenvalue:.12g}, {e.max_eigenvalue:.12g}]"
                + ("" if e.ok else "  FAIL")
            )
        lines.append("valid" if self.valid else f"INVALID: {self.first_failure()}")
        return "\n".join(lines)


def validate(povm: Povm) -> ValidationReport:
    diags = []
    d = povm.dimension
    for e in povm.elements:
        m = e.matrix
        if m.shape != (d, d):
            raise DimensionMismatch(f"element {e.label!r} is {m.shape}, expected {(d, d)}")
        defect = float(np.max(np.abs(m - m.conj().T), initial=0.0))
        ev = hermitian_eigvalsh(m)
        diags.append(ElementDiagnostics(e.label, defect, float(ev[0]), float(ev[-1])))
    ev = hermitian_eigvalsh(povm.total())
    return ValidationReport(d, diags, float(ev[0]), float(ev[-1]))


def check_valid(povm: Povm) -> ValidationReport:
    """Like :func:`validate` but raise :class:`ValidationFailed` on failure."""
    report = validate(povm)
    if not report.valid:
        raise ValidationFailed(report.first_failure(), report)
    return report


def born_probability(state: QuantumState, element: PovmElement) -> float:
    """``Tr(rho Pi)``; values within tolerance of [0, 1] are clamped."""
    rho = state.matrix if isinstance(state, QuantumState) else np.asarray(state)
    if rho.shape != element.matrix.shape:
        raise DimensionMismatch("state and element dimensions differ")
    p = float(np.real(np.einsum("ij,ji->", rho, element.matrix)))
    if p < -PSD_TOL or p > 1 + PSD_TOL:
        raise NumericalInconsistency(f"Born probability {p} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def outcome_probabilities(povm: Povm, state: QuantumState) -> np.ndarray:
    """Probabilities of every click outcome followed by the null outcome."""
    return np.array([born_probability(state, e) for e in povm.all_elements()])


def _matrix(element) -> np.ndarray:
    return element.matrix if isinstance(element, PovmElement) else np.asarray(element)


def purity(element) -> float:
    """``Tr(Pi**2) / Tr(Pi)**2``; 1 for rank-one elements, 1/D when flat."""
    m = _matrix(element)
    tr = np.real(np.trace(m))
    if tr <= TRACE_TOL:
        label = getattr(element, "label", "?")
        raise ZeroTraceElement(f"element {label!r} has trace {tr:.3g}")
    # Tr(Pi^2) = sum |Pi_ij|^2 for Hermitian Pi
    return float(np.sum(np.abs(m) ** 2) / tr**2)


def effective_dimension(element) -> float:
    return 1.0 / purity(element)


def overlap(a, b) -> float:
    """``Tr(Pi_a Pi_b)``; nonzero for non-orthogonal outcomes."""
    return float(np.real(np.einsum("ij,ji->", _matrix(a), _matrix(b))))
