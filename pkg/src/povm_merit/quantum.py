"""Photon-statistics figures of merit: number resolution, efficiency,
dark counts, response time and detection rate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .classical import _eigh_desc, shannon_bits, summed_block
from .exceptions import (
    EmptyNumberSupport,
    InsensitiveMode,
    InvalidDuration,
    ModeOutsideSpan,
    NoTwoPhotonSector,
)
from .hilbert import (
    FockBasis,
    ModeFunction,
    apply_creation,
    inner_product,
    time_translate,
)
from .povm import Povm, PovmElement, purity

EMPTY_SUPPORT = 1e-15
SPAN_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class NumberWeights:
    """``Omega_{k,i}^(n)`` for n = 0..n_max and their sum ``W_{k,i}``."""

    label: str
    mode: int
    weights: np.ndarray

    @property
    def normalizer(self) -> float:
        return float(np.sum(self.weights))

    @property
    def empty(self) -> bool:
        return bool(np.all(self.weights < EMPTY_SUPPORT))

    def posterior(self) -> np.ndarray:
        """``Pr(n|k,i)`` under a flat prior over the truncation range."""
        w = self.normalizer
        if w <= 1e-12:
            raise EmptyNumberSupport(
                f"outcome {self.label!r} has no photon-number support in mode {self.mode}"
            )
        return np.clip(self.weights, 0.0, None) / w


@dataclass(frozen=True, eq=False)
class EfficiencySpectrum:
    """Eigen-efficiencies of the summed single-photon block, descending."""

    weights: np.ndarray
    vectors: np.ndarray

    @property
    def eta_max(self) -> float:
        return float(self.weights[0]) if self.weights.size else 0.0


@dataclass(frozen=True, eq=False)
class ResponseProfile:
    mode: int | None
    tau_10: float
    tau_90: float
    taus: np.ndarray = field(repr=False)
    joint: np.ndarray = field(repr=False)
    p0: float = 0.0
    monotone: bool = True

    @property
    def theta(self) -> float:
        if math.isinf(self.tau_90):
            return math.inf
        return self.tau_90 - self.tau_10


def number_weights(element: PovmElement, basis: FockBasis, mode: int) -> NumberWeights:
    """Diagonal elements ``<n_i|Pi_k|n_i>`` for n photons in ``mode``, vacuum elsewhere.

    Built as ``<vac| a^n Pi (a^+)^n |vac> / n!`` from the ladder action and
    cross-checked against the direct diagonal lookup.
    """
    if not 0 <= mode < basis.num_modes:
        raise IndexError(f"mode {mode} out of range")
    m = element.matrix
    c = np.zeros(basis.num_modes)
    c[mode] = 1.0
    vec = np.zeros(basis.dimension, dtype=complex)
    vec[0] = 1.0
    out = np.empty(basis.n_max + 1)
    for n in range(basis.n_max + 1):
        if n > 0:
            vec = apply_creation(basis, c, vec)
        val = np.real(np.vdot(vec, m @ vec)) / math.factorial(n)
        direct = np.real(m[basis.fock_index(mode, n), basis.fock_index(mode, n)])
        if abs(val - direct) > 1e-9 * max(1.0, abs(direct)):
            raise ArithmeticError("ladder-operator and diagonal weights disagree")
        out[n] = val
    return NumberWeights(element.label, mode, out)


def number_entropy(weights: NumberWeights) -> float:
    """Shannon entropy (bits) of the photon-number posterior."""
    return shannon_bits(weights.posterior())


def mode_occupation_mask(basis: FockBasis, mode: int) -> np.ndarray:
    n = basis.states[:, mode]
    return n[:, None] == n[None, :]


def mode_restricted_element(element: PovmElement, basis: FockBasis, mode: int) -> PovmElement:
    """``sum_n P_n Pi P_n``, ``P_n`` projecting on exactly n photons in ``mode``.

    Removes all coherences between different photon numbers in ``mode``.
    """
    if not 0 <= mode < basis.num_modes:
        raise IndexError(f"mode {mode} out of range")
    mask = mode_occupation_mask(basis, mode)
    return PovmElement(element.label, element.clicks, np.where(mask, element.matrix, 0))


def number_collision_entropy(element: PovmElement, basis: FockBasis, mode: int) -> float:
    return -math.log2(purity(mode_restricted_element(element, basis, mode))) + 0.0


def efficiency_spectrum(povm: Povm) -> EfficiencySpectrum:
    w, v = _eigh_desc(summed_block(povm))
    return EfficiencySpectrum(w, v)


def _coefficients(povm: Povm, mode: ModeFunction, normalized: bool = True) -> np.ndarray:
    mb = povm.basis.mode_basis
    c = mb.coefficients(mode)
    norm2 = mode.norm() ** 2
    deficit = norm2 - float(np.sum(np.abs(c) ** 2))
    if normalized and deficit > SPAN_TOL:
        raise ModeOutsideSpan(f"mode has {deficit:.3g} of its norm outside the basis span")
    return c


def mode_efficiency(povm: Povm, mode: ModeFunction) -> float:
    """``<phi|Pi|phi>`` for a one-photon state in an arbitrary mode of the span."""
    c = _coefficients(povm, mode)
    return float(np.real(np.vdot(c, summed_block(povm) @ c)))


def dark_counts(povm: Povm) -> np.ndarray:
    """``<vac|Pi_k|vac>`` for each click outcome."""
    return np.array([float(np.real(e.matrix[0, 0])) for e in povm.elements])


def dark_count_rate(povm: Povm, duration: float) -> float:
    """Expected dark clicks per second for a detector switched on for ``duration``."""
    if not duration > 0:
        raise InvalidDuration(f"duration must be positive, got {duration}")
    clicks = np.array([e.clicks for e in povm.elements], dtype=float)
    return float(dark_counts(povm) @ clicks / duration) if len(povm) else 0.0


@dataclass(frozen=True)
class JointDetection:
    probability: float
    raw: float
    overlap: complex


def _joint(povm: Povm, total: np.ndarray, c: np.ndarray, c_tau: np.ndarray, ov: complex) -> JointDetection:
    basis = povm.basis
    vac = np.zeros(basis.dimension, dtype=complex)
    vac[0] = 1.0
    psi = apply_creation(basis, c, apply_creation(basis, c_tau, vac))
    raw = float(np.real(np.vdot(psi, total @ psi)))
    norm2 = 1.0 + abs(ov) ** 2
    return JointDetection(raw / norm2, raw, ov)


def joint_detection(povm: Povm, phi: ModeFunction, tau: float, *, detail: bool = False):
    """Click probability for one photon in ``phi`` and one in ``phi`` delayed by ``tau``.

    The two-photon state ``a^+[phi] a^+[phi_tau] |vac>`` has squared norm
    ``1 + |<phi|phi_tau>|**2``; that factor is divided out.  Components of
    ``phi_tau`` outside the basis span are invisible to the detector and are
    dropped.  With ``detail=True`` the unnormalized value and the overlap are
    returned as well.
    """
    if povm.basis.n_max < 2:
        raise NoTwoPhotonSector("Fock basis has no two-photon states (n_max < 2)")
    phi = phi.normalized()
    c = _coefficients(povm, phi)
    shifted = time_translate(phi, tau)
    c_tau = _coefficients(povm, shifted, normalized=False)
    res = _joint(povm, povm.total(), c, c_tau, inner_product(shifted, phi))
    return res if detail else res.probability


def single_detection(povm: Povm, phi: ModeFunction) -> float:
    """``P(0) = <phi|Pi|phi>`` for a normalized copy of ``phi``."""
    return mode_efficiency(povm, phi.normalized())


def pulse_duration(phi: ModeFunction) -> float:
    """Transform-limited duration ``1 / (2 * rms spectral width)``."""
    w = phi.grid.points
    p = phi.intensity()
    p = p / p.sum()
    mean = p @ w
    sigma = math.sqrt(max(p @ (w - mean) ** 2, 0.0))
    if sigma == 0:
        return 1.0 / phi.grid.d_omega
    return 1.0 / (2 * sigma)


def default_scan(phi: ModeFunction, num: int = 200) -> np.ndarray:
    d = pulse_duration(phi)
    return np.concatenate([[0.0], np.logspace(-3, 3, num) * d])


def _first_crossing(curve, taus, values, start, level, rel_tol, max_iter=200):
    """Smallest tau >= taus[start] where ``curve(tau) >= level``, or None."""
    hits = np.flatnonzero(values[start:] >= level)
    if hits.size == 0:
        return None
    j = start + hits[0]
    if j == start:
        return float(taus[j])
    lo, hi = float(taus[j - 1]), float(taus[j])
    for _ in range(max_iter):
        if hi - lo <= rel_tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if curve(mid) >= level:
            hi = mid
        else:
            lo = mid
    return hi


def response_profile(
    curve: Callable[[float], float],
    p0: float,
    taus: Sequence[float],
    rel_tol: float = 1e-4,
    mode: int | None = None,
) -> ResponseProfile:
    """10%-90% rise of a joint-detection curve ``P(0, tau)`` relative to ``P(0)**2``.

    ``tau_10`` is the first scan crossing of ``0.1 * P(0)**2`` and ``tau_90``
    the first crossing of ``0.9 * P(0)**2`` at or after it; each is refined by
    bisection between neighbouring scan points.  ``tau_90`` is infinite when
    the 90% level is never reached.
    """
    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or taus.size < 2 or taus[0] != 0 or np.any(np.diff(taus) <= 0):
        raise ValueError("tau scan must be strictly increasing from 0")
    if p0 < 1e-9:
        raise InsensitiveMode(f"single-photon detection probability {p0:.3g} is too small")
    values = np.array([curve(t) for t in taus])
    ref = p0**2
    tau_10 = _first_crossing(curve, taus, values, 0, 0.1 * ref, rel_tol)
    if tau_10 is None:
        tau_10, tau_90 = math.inf, math.inf
    else:
        search = np.concatenate([[tau_10], taus[taus > tau_10]])
        svals = np.concatenate([[curve(tau_10)], values[taus > tau_10]])
        t90 = _first_crossing(curve, search, svals, 0, 0.9 * ref, rel_tol)
        tau_90 = math.inf if t90 is None else t90
    monotone = bool(np.all(np.diff(values) >= -1e-12 * max(ref, 1e-300)))
    return ResponseProfile(mode, tau_10, tau_90, taus, values, p0, monotone)


def response_time(
    povm: Povm,
    phi: ModeFunction,
    scan: Sequence[float] | None = None,
    rel_tol: float = 1e-4,
    mode: int | None = None,
) -> ResponseProfile:
    if povm.basis.n_max < 2:
        raise NoTwoPhotonSector("Fock basis has no two-photon states (n_max < 2)")
    phi = phi.normalized()
    p0 = single_detection(povm, phi)
    if p0 < 1e-9:
        raise InsensitiveMode(f"mode is detected with probability {p0:.3g}")
    total = povm.total()
    c = _coefficients(povm, phi)
    mb = povm.basis.mode_basis

    def curve(tau):
        shifted = time_translate(phi, tau)
        c_tau = mb.coefficients(shifted)
        return _joint(povm, total, c, c_tau, inner_product(shifted, phi)).probability

    taus = default_scan(phi) if scan is None else scan
    return response_profile(curve, p0, taus, rel_tol, mode)


def eigenmode_response_times(povm: Povm, scan=None, min_weight: float = 1e-9) -> list[ResponseProfile]:
    """Response profiles for the modes that diagonalize the summed one-photon block."""
    spec = efficiency_spectrum(povm)
    mb = povm.basis.mode_basis
    out = []
    for i, w in enumerate(spec.weights):
        if w < min_weight:
            continue
        out.append(response_time(povm, mb.synthesize(spec.vectors[:, i]), scan, mode=i))
    return out


def detection_rate(profiles) -> float:
    """``sum_i 1/theta_i``; infinite response times contribute nothing.

    A zero response time (the curve already starts above 90%) makes the
    rate infinite.
    """
    thetas = [p.theta if isinstance(p, ResponseProfile) else float(p) for p in profiles]
    if any(t == 0 for t in thetas):
        return math.inf
    return float(sum(0.0 if math.isinf(t) else 1.0 / t for t in thetas))
