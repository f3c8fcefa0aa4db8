"""Spectral and temporal figures of merit from the single-photon sector.

Everything here works on the restriction of POVM elements to one-photon
states: bandwidths, eigenmode decompositions, outcome entropies, posterior
frequency/time distributions, binned entropies and the resulting
frequency/timing resolutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import (
    BinTooFine,
    NoSinglePhotonSector,
    ResolutionUnresolvable,
    ZeroBandwidth,
    ZeroTraceElement,
)
from .hilbert import FockBasis, ModeBasis, ModeFunction, TimeWindow, temporal_densities
from .povm import TRACE_TOL, Povm, PovmElement, purity

E_PI = math.e * math.pi
WEIGHT_CUTOFF = 1e-12


@dataclass(frozen=True, eq=False)
class SinglePhotonBlock:
    """``<1_i|Pi_k|1_j>`` for modes ``i, j`` of the mode basis."""

    label: str
    matrix: np.ndarray

    @property
    def bandwidth(self) -> float:
        return bandwidth(self)


@dataclass(frozen=True, eq=False)
class EigenmodeDecomposition:
    """Diagonal form of a single-photon block, weights in descending order.

    ``vectors[:, i]`` holds the coefficients of eigenmode ``i`` in the mode
    basis, ``modes[i]`` the same eigenmode as a grid function.
    """

    label: str
    weights: np.ndarray
    vectors: np.ndarray
    modes: tuple

    @property
    def bandwidth(self) -> float:
        return float(np.sum(self.weights))

    def posterior_weights(self, prior=None) -> np.ndarray:
        """``Pr(i|k)``; with no prior this is ``w_i / Omega_k``."""
        w = np.clip(self.weights, 0.0, None)
        if prior is not None:
            w = w * np.asarray(prior, dtype=float)
        total = w.sum()
        if total <= TRACE_TOL:
            raise ZeroBandwidth(f"outcome {self.label!r} has no single-photon support")
        return w / total


@dataclass(frozen=True, eq=False)
class GridDistribution:
    """Piecewise-constant density on cells ``[start + g*step, start + (g+1)*step)``."""

    start: float
    step: float
    density: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return self.start + (np.arange(self.density.size) + 0.5) * self.step

    @property
    def stop(self) -> float:
        return self.start + self.density.size * self.step

    def total(self) -> float:
        return float(np.sum(self.density) * self.step)


@dataclass(frozen=True, eq=False)
class BinnedDistribution:
    """``probabilities[m]`` is the mass of bin ``j = first_index + m``.

    Bin ``j`` covers ``[origin + (j-1)*delta, origin + j*delta)``.
    ``captured_mass`` is the raw mass before normalization; values below 1
    reveal truncation by a finite window.
    """

    delta: float
    origin: float
    first_index: int
    probabilities: np.ndarray
    captured_mass: float

    @property
    def indices(self) -> np.ndarray:
        return self.first_index + np.arange(self.probabilities.size)

    @property
    def bin_starts(self) -> np.ndarray:
        return self.origin + (self.indices - 1) * self.delta


@dataclass(frozen=True)
class UncertaintyCheck:
    lhs: float
    rhs: float
    satisfied: bool

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs


@dataclass(frozen=True)
class ResolutionResult:
    delta_omega: float
    delta_t: float
    entropy_omega: float
    entropy_t: float
    resolution_omega: float
    resolution_t: float

    @property
    def product(self) -> float:
        return self.resolution_omega * self.resolution_t

    @property
    def satisfies_bound(self) -> bool:
        return self.product >= E_PI - 1e-3


def single_photon_block(element: PovmElement, basis: FockBasis) -> SinglePhotonBlock:
    if basis.n_max < 1:
        raise NoSinglePhotonSector("Fock basis has no one-photon states (n_max = 0)")
    idx = basis.single_photon_indices()
    return SinglePhotonBlock(element.label, np.array(element.matrix[np.ix_(idx, idx)]))


def bandwidth(block: SinglePhotonBlock) -> float:
    """Trace of the block: effective number of single-photon modes covered."""
    return float(np.real(np.trace(block.matrix)))


def total_bandwidth(povm: Povm) -> float:
    if not povm.elements:
        return 0.0
    return float(sum(bandwidth(single_photon_block(e, povm.basis)) for e in povm.elements))


def summed_block(povm: Povm) -> np.ndarray:
    """Single-photon block of the sum of all click elements."""
    if povm.basis.n_max < 1:
        raise NoSinglePhotonSector("Fock basis has no one-photon states (n_max = 0)")
    idx = povm.basis.single_photon_indices()
    return povm.total()[np.ix_(idx, idx)]


def _eigh_desc(matrix):
    m = np.asarray(matrix)
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def eigenmodes(block: SinglePhotonBlock, basis: ModeBasis) -> EigenmodeDecomposition:
    w, v = _eigh_desc(block.matrix)
    modes = tuple(basis.synthesize(v[:, i]) for i in range(v.shape[1]))
    return EigenmodeDecomposition(block.label, w, v, modes)


def _normalized_spectrum(matrix, label) -> np.ndarray:
    w = np.linalg.eigvalsh(np.asarray(matrix))
    tr = float(np.sum(w))
    if tr <= TRACE_TOL:
        raise ZeroTraceElement(f"block {label!r} has trace {tr:.3g}")
    p = w[w > WEIGHT_CUTOFF * tr] / tr
    return p


def shannon_bits(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p))) + 0.0


def outcome_shannon_entropy(block: SinglePhotonBlock) -> float:
    """Entropy in bits of the normalized block ``Pi^(1) / Tr Pi^(1)``."""
    return shannon_bits(_normalized_spectrum(block.matrix, block.label))


def outcome_collision_entropy(block: SinglePhotonBlock) -> float:
    try:
        return -math.log2(purity(block.matrix)) + 0.0
    except ZeroTraceElement:
        raise ZeroTraceElement(f"block {block.label!r} has zero trace") from None


def _mixture(decomp: EigenmodeDecomposition, densities: np.ndarray, prior=None) -> np.ndarray:
    p = decomp.posterior_weights(prior)
    keep = decomp.weights > WEIGHT_CUTOFF * max(decomp.bandwidth, TRACE_TOL)
    return p[keep] @ densities[keep]


def posterior_frequency(decomp: EigenmodeDecomposition, prior=None) -> GridDistribution:
    """``Pr(w|k) = sum_i Pr(i|k) |phi_i^(k)(w)|**2`` on the frequency grid."""
    if not decomp.modes:
        raise ZeroBandwidth("empty decomposition")
    grid = decomp.modes[0].grid
    intensities = np.stack([m.intensity() for m in decomp.modes])
    return GridDistribution(grid.omega_min, grid.d_omega, _mixture(decomp, intensities, prior))


def posterior_time(
    decomp: EigenmodeDecomposition, window: TimeWindow | None = None, prior=None
) -> GridDistribution:
    """Mixture of ideal detection-time densities of the eigenmodes."""
    if not decomp.modes:
        raise ZeroBandwidth("empty decomposition")
    grid = decomp.modes[0].grid
    if window is None:
        window = TimeWindow.covering(np.stack([m.amplitudes for m in decomp.modes]), grid)
    elif not isinstance(window, TimeWindow):
        window = TimeWindow(*window)
    decomp.posterior_weights(prior)  # raises ZeroBandwidth before the expensive part
    keep = decomp.weights > WEIGHT_CUTOFF * max(decomp.bandwidth, TRACE_TOL)
    amps = np.stack([decomp.modes[i].amplitudes for i in np.flatnonzero(keep)])
    dens = np.zeros((len(decomp.modes), window.num_points))
    dens[keep] = temporal_densities(amps, grid, window)
    return GridDistribution(window.t_min, window.dt, _mixture(decomp, dens, prior))


def bin_distribution(dist: GridDistribution, delta: float, origin: float | None = None) -> BinnedDistribution:
    """Integrate ``dist`` over bins of width ``delta`` anchored at ``origin``.

    The density is taken as constant within each grid cell, so cells that
    straddle a bin edge are split in proportion to the overlap.
    """
    if not delta > 0:
        raise ValueError("bin width must be positive")
    if delta < 2 * dist.step * (1 - 1e-12):
        raise BinTooFine(f"bin width {delta:.6g} is below twice the grid spacing {dist.step:.6g}")
    if origin is None:
        origin = dist.start
    masses = np.clip(dist.density, 0.0, None) * dist.step
    total = float(masses.sum())
    if total <= 0:
        raise ZeroBandwidth("distribution carries no mass")
    cell_edges = dist.start + np.arange(dist.density.size + 1) * dist.step
    cdf = np.concatenate([[0.0], np.cumsum(masses)])
    j_first = math.floor((dist.start - origin) / delta) + 1
    j_last = math.ceil((dist.stop - origin) / delta)
    j_last = max(j_last, j_first)
    bin_edges = origin + np.arange(j_first - 1, j_last + 1) * delta
    p = np.diff(np.interp(bin_edges, cell_edges, cdf))
    p = np.clip(p, 0.0, None)
    return BinnedDistribution(float(delta), float(origin), j_first, p / p.sum(), total)


bin = bin_distribution


def binned_entropy(binned: BinnedDistribution) -> float:
    return shannon_bits(binned.probabilities)


def uncertainty_rhs(delta_omega: float, delta_t: float) -> float:
    """``log2(e) - 1 - log2(d_omega * d_t / 2 pi)``."""
    return math.log2(math.e) - 1 - math.log2(delta_omega * delta_t / (2 * math.pi))


def uncertainty_check(h_omega: float, h_t: float, delta_omega: float, delta_t: float) -> UncertaintyCheck:
    lhs = h_omega + h_t
    rhs = uncertainty_rhs(delta_omega, delta_t)
    return UncertaintyCheck(lhs, rhs, lhs > rhs - 1e-9)


class PosteriorSet:
    """Per-outcome posterior distributions of a POVM, computed once.

    Only outcomes with positive single-photon bandwidth take part;
    ``fractions`` holds their weights ``Omega_k / Omega`` in the averages.
    """

    def __init__(self, povm: Povm, window: TimeWindow | None = None, prior=None):
        basis = povm.basis
        grid = basis.mode_basis.grid
        self.window = window if window is not None else TimeWindow.for_basis(basis.mode_basis)
        if not isinstance(self.window, TimeWindow):
            self.window = TimeWindow(*self.window)
        self.labels = []
        self.bandwidths = []
        self.frequency = []
        self.time = []
        for e in povm.elements:
            block = single_photon_block(e, basis)
            omega_k = bandwidth(block)
            if omega_k <= TRACE_TOL:
                continue
            d = eigenmodes(block, basis.mode_basis)
            self.labels.append(e.label)
            self.bandwidths.append(omega_k)
            self.frequency.append(posterior_frequency(d, prior))
            self.time.append(posterior_time(d, self.window, prior))
        total = float(np.sum(self.bandwidths))
        if total <= TRACE_TOL:
            raise ZeroBandwidth("POVM has zero total single-photon bandwidth")
        self.fractions = np.asarray(self.bandwidths) / total
        self.omega_step = grid.d_omega
        self.omega_range = (grid.omega_min, grid.omega_max)

    def entropies(self, domain: str, delta: float, origin=None) -> np.ndarray:
        dists = self.frequency if domain == "freq" else self.time
        return np.array([binned_entropy(bin_distribution(d, delta, origin)) for d in dists])

    def averaged(self, domain: str, delta: float, origin=None) -> float:
        return float(self.fractions @ self.entropies(domain, delta, origin))

    def delta_limits(self, domain: str) -> tuple[float, float]:
        if domain == "freq":
            return 2 * self.omega_step, self.omega_range[1] - self.omega_range[0]
        return 2 * self.window.dt, self.window.t_max - self.window.t_min


def averaged_entropies(
    povm: Povm, delta_omega: float, delta_t: float, window: TimeWindow | None = None
) -> tuple[float, float]:
    """Bandwidth-weighted mean binned entropies over click outcomes."""
    ps = PosteriorSet(povm, window)
    return ps.averaged("freq", delta_omega), ps.averaged("time", delta_t)


def _solve_bin_width(ps: PosteriorSet, domain: str, target: float, tol: float, max_iter: int):
    lo_delta, hi_delta = ps.delta_limits(domain)
    h_lo = ps.averaged(domain, lo_delta)
    if h_lo < target:
        raise ResolutionUnresolvable(
            f"{domain}: finest allowed bins give only {h_lo:.4g} bits < {target} bits"
        )
    h_hi = ps.averaged(domain, hi_delta)
    if h_hi > target:
        raise ResolutionUnresolvable(f"{domain}: coarsest bins still give {h_hi:.4g} bits")
    lo, hi = math.log2(lo_delta), math.log2(hi_delta)
    best = (abs(h_lo - target), lo_delta, h_lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        delta = 2.0**mid
        h = ps.averaged(domain, delta)
        if abs(h - target) < best[0]:
            best = (abs(h - target), delta, h)
        if abs(h - target) < 1e-2 * tol:
            break
        if h > target:
            lo = mid
        else:
            hi = mid
    if best[0] > tol:
        raise ResolutionUnresolvable(
            f"{domain}: bisection ended {best[0]:.3g} bits from the {target}-bit target"
        )
    return best[1], best[2]


def resolutions(
    povm: Povm,
    target_bits: float = 4.0,
    window: TimeWindow | None = None,
    tol: float = 0.01,
    max_iter: int = 60,
    posteriors: PosteriorSet | None = None,
) -> ResolutionResult:
    """Frequency and timing resolution ``2**H * delta`` at ``target_bits`` entropy.

    Bin widths are found by bisection on ``log2(delta)`` so that the averaged
    binned entropies equal ``target_bits`` to within ``tol``.
    """
    ps = posteriors if posteriors is not None else PosteriorSet(povm, window)
    d_omega, h_omega = _solve_bin_width(ps, "freq", target_bits, tol, max_iter)
    d_t, h_t = _solve_bin_width(ps, "time", target_bits, tol, max_iter)
    return ResolutionResult(d_omega, d_t, h_omega, h_t, 2.0**h_omega * d_omega, 2.0**h_t * d_t)
