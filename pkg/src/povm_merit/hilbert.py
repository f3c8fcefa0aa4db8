"""Truncated single- and multi-mode Fock spaces over a discretized frequency axis.

Mode functions live on a uniform grid of positive angular frequencies and are
integrated with the midpoint rule.  Multimode Fock states are truncated by the
*total* photon number and ordered graded-lexicographically, so that matrix
layouts in files are unambiguous.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .exceptions import (
    DegenerateModeSet,
    DimensionCap,
    GridMismatch,
    InvalidWindow,
)

DEFAULT_DIMENSION_CAP = 5000
NORM_TOL = 1e-10
GRAM_TOL = 1e-8


def _frozen(a) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid of ``num_points`` cells on ``[omega_min, omega_max]`` (rad/s).

    Samples sit at cell centres; each carries quadrature weight ``d_omega``.
    """

    omega_min: float
    omega_max: float
    num_points: int

    def __post_init__(self):
        if not self.omega_min >= 0:
            raise ValueError("omega_min must be >= 0 (positive frequencies only)")
        if not self.omega_max > self.omega_min:
            raise ValueError("omega_max must exceed omega_min")
        if int(self.num_points) != self.num_points or self.num_points < 1:
            raise ValueError("num_points must be a positive integer")
        object.__setattr__(self, "num_points", int(self.num_points))

    @property
    def d_omega(self) -> float:
        return (self.omega_max - self.omega_min) / self.num_points

    @property
    def points(self) -> np.ndarray:
        return self.omega_min + (np.arange(self.num_points) + 0.5) * self.d_omega


@dataclass(frozen=True)
class TimeWindow:
    """Uniform time grid of ``num_points`` cells on ``[t_min, t_max]`` (seconds)."""

    t_min: float
    t_max: float
    num_points: int

    def __post_init__(self):
        if not (np.isfinite(self.t_min) and np.isfinite(self.t_max)):
            raise InvalidWindow("time window bounds must be finite")
        if not self.t_max > self.t_min:
            raise InvalidWindow(f"empty time window [{self.t_min}, {self.t_max}]")
        if int(self.num_points) != self.num_points or self.num_points < 1:
            raise InvalidWindow("time window needs at least one point")
        object.__setattr__(self, "num_points", int(self.num_points))

    @property
    def dt(self) -> float:
        return (self.t_max - self.t_min) / self.num_points

    @property
    def points(self) -> np.ndarray:
        return self.t_min + (np.arange(self.num_points) + 0.5) * self.dt

    @classmethod
    def for_grid(cls, grid: FrequencyGrid, oversample: int = 2) -> "TimeWindow":
        """One full aliasing period ``2*pi/d_omega`` centred on t = 0.

        The discrete spectral sum is periodic in t with this period, so the
        window holds the whole temporal density of any mode on ``grid``.
        """
        half = np.pi / grid.d_omega
        return cls(-half, half, oversample * grid.num_points)

    @classmethod
    def covering(
        cls, amplitudes, grid: FrequencyGrid, num_points: int = 8192, mass_tol: float = 1e-10
    ) -> "TimeWindow":
        """Finely sampled window around where the modes' temporal mass lies.

        A coarse pass over one aliasing period locates the interval holding
        all but ``mass_tol`` of the summed densities; it is padded by 10% on
        each side and resampled with ``num_points`` cells.
        """
        coarse = cls.for_grid(grid)
        dens = temporal_densities(amplitudes, grid, coarse).sum(axis=0)
        cdf = np.cumsum(dens)
        total = cdf[-1]
        if total <= 0:
            return coarse
        lo = int(np.searchsorted(cdf, 0.5 * mass_tol * total))
        hi = int(np.searchsorted(cdf, (1 - 0.5 * mass_tol) * total))
        t = coarse.points
        lo_t = t[max(lo - 1, 0)] - 0.5 * coarse.dt
        hi_t = t[min(hi + 1, t.size - 1)] + 0.5 * coarse.dt
        pad = 0.1 * (hi_t - lo_t)
        lo_t = max(lo_t - pad, coarse.t_min)
        hi_t = min(hi_t + pad, coarse.t_max)
        return cls(float(lo_t), float(hi_t), num_points)

    @classmethod
    def for_basis(cls, mode_basis: "ModeBasis", num_points: int = 8192) -> "TimeWindow":
        return cls.covering(mode_basis.amplitudes, mode_basis.grid, num_points)


class ModeFunction:
    """Complex spectral amplitude sampled on a :class:`FrequencyGrid`.

    Amplitudes carry units of 1/sqrt(rad/s) so that
    ``sum(|amplitudes|**2) * d_omega`` is dimensionless.
    """

    __slots__ = ("grid", "amplitudes")

    def __init__(self, grid: FrequencyGrid, amplitudes):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if amplitudes.shape != (grid.num_points,):
            raise GridMismatch(
                f"expected {grid.num_points} amplitudes, got shape {amplitudes.shape}"
            )
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "amplitudes", _frozen(amplitudes))

    def __setattr__(self, name, value):
        raise AttributeError("ModeFunction is immutable")

    def __repr__(self):
        return f"ModeFunction(grid={self.grid!r}, norm={self.norm():.6g})"

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.d_omega))

    def normalized(self) -> "ModeFunction":
        n = self.norm()
        if n == 0:
            raise DegenerateModeSet("cannot normalize a zero mode")
        return ModeFunction(self.grid, self.amplitudes / n)

    def intensity(self) -> np.ndarray:
        """Spectral density ``|phi(omega)|**2`` on the grid."""
        return np.abs(self.amplitudes) ** 2


def _check_same_grid(f: ModeFunction, g: ModeFunction) -> None:
    if f.grid != g.grid:
        raise GridMismatch("mode functions are sampled on different grids")


def inner_product(f: ModeFunction, g: ModeFunction) -> complex:
    """``sum_g f(w_g) conj(g(w_g)) d_omega``, i.e. the bra-ket ``<g|f>``."""
    _check_same_grid(f, g)
    return complex(np.vdot(g.amplitudes, f.amplitudes) * f.grid.d_omega)


class ModeBasis:
    """Ordered list of orthonormal modes sharing one grid."""

    __slots__ = ("grid", "modes", "amplitudes")

    def __init__(self, modes: Sequence[ModeFunction], *, check: bool = True):
        modes = tuple(modes)
        if not modes:
            raise ValueError("a mode basis needs at least one mode")
        grid = modes[0].grid
        for m in modes[1:]:
            if m.grid != grid:
                raise GridMismatch("all modes of a basis must share one grid")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "amplitudes", _frozen(np.stack([m.amplitudes for m in modes])))
        if check:
            err = np.max(np.abs(self.gram() - np.eye(len(modes))))
            if err > GRAM_TOL:
                raise DegenerateModeSet(
                    f"modes are not orthonormal (max Gram defect {err:.3g})"
                )

    def __setattr__(self, name, value):
        raise AttributeError("ModeBasis is immutable")

    def __len__(self):
        return len(self.modes)

    def __getitem__(self, i) -> ModeFunction:
        return self.modes[i]

    def __iter__(self):
        return iter(self.modes)

    def __repr__(self):
        return f"ModeBasis(M={len(self)}, grid={self.grid!r})"

    def gram(self) -> np.ndarray:
        """Matrix of ``<phi_i, phi_j>`` in the :func:`inner_product` convention."""
        a = self.amplitudes
        return (a @ a.conj().T) * self.grid.d_omega

    def coefficients(self, mode: ModeFunction) -> np.ndarray:
        """Expansion coefficients ``c_j = <phi_j|mode>`` of ``mode`` in this basis."""
        if mode.grid != self.grid:
            raise GridMismatch("mode is sampled on a different grid than the basis")
        return (self.amplitudes.conj() @ mode.amplitudes) * self.grid.d_omega

    def synthesize(self, coefficients) -> ModeFunction:
        """Grid function ``sum_j c_j phi_j(omega)``."""
        c = np.asarray(coefficients, dtype=complex)
        return ModeFunction(self.grid, c @ self.amplitudes)


def orthonormalize(raw_modes: Sequence[ModeFunction], tol: float = NORM_TOL) -> ModeBasis:
    """Modified Gram-Schmidt; the span and the phase of the first mode are kept.

    Raises :class:`DegenerateModeSet` when a mode's residual norm after
    projection drops below ``tol``.
    """
    raw_modes = list(raw_modes)
    if not raw_modes:
        raise DegenerateModeSet("no modes given")
    grid = raw_modes[0].grid
    d_omega = grid.d_omega
    out: list[np.ndarray] = []
    for k, m in enumerate(raw_modes):
        if m.grid != grid:
            raise GridMismatch("all modes must share one grid")
        v = m.amplitudes.astype(complex)
        for q in out:
            v = v - (np.vdot(q, v) * d_omega) * q
        n = np.sqrt(np.sum(np.abs(v) ** 2) * d_omega)
        if n < tol:
            raise DegenerateModeSet(f"mode {k} is linearly dependent on the preceding modes")
        out.append(v / n)
    return ModeBasis([ModeFunction(grid, v) for v in out])


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Occupation-number basis of ``M`` modes with total photon number <= ``n_max``.

    ``states`` is a read-only ``(D, M)`` integer array in graded-lexicographic
    order: by total photon number, then lexicographically on the counts.  Row 0
    is the vacuum.
    """

    mode_basis: ModeBasis
    n_max: int
    states: np.ndarray
    index: Mapping[tuple, int] = field(repr=False)

    @property
    def num_modes(self) -> int:
        return len(self.mode_basis)

    @property
    def dimension(self) -> int:
        return self.states.shape[0]

    @property
    def totals(self) -> np.ndarray:
        return self.states.sum(axis=1)

    def index_of(self, counts) -> int:
        return self.index[tuple(int(c) for c in counts)]

    def fock_index(self, mode: int, n: int) -> int:
        """Index of ``|n>_mode`` with vacuum in every other mode."""
        counts = [0] * self.num_modes
        counts[mode] = n
        return self.index_of(counts)

    def sector(self, n: int) -> np.ndarray:
        """Indices of all states with exactly ``n`` photons in total."""
        return np.flatnonzero(self.totals == n)

    def single_photon_indices(self) -> np.ndarray:
        """Indices of ``|1>_i`` in ModeBasis order ``i = 0..M-1``."""
        return np.array([self.fock_index(i, 1) for i in range(self.num_modes)], dtype=int)


def fock_dimension(num_modes: int, n_max: int) -> int:
    return math.comb(num_modes + n_max, num_modes)


def enumerate_fock(
    mode_basis: ModeBasis, n_max: int, dimension_cap: int = DEFAULT_DIMENSION_CAP
) -> FockBasis:
    if int(n_max) != n_max or n_max < 0:
        raise ValueError("n_max must be a nonnegative integer")
    n_max = int(n_max)
    m = len(mode_basis)
    d = fock_dimension(m, n_max)
    if d > dimension_cap:
        raise DimensionCap(f"Fock dimension {d} exceeds cap {dimension_cap}")
    states = []
    for n in range(n_max + 1):
        shell = []
        for combo in itertools.combinations_with_replacement(range(m), n):
            counts = [0] * m
            for c in combo:
                counts[c] += 1
            shell.append(tuple(counts))
        shell.sort()
        states.extend(shell)
    index = MappingProxyType({s: k for k, s in enumerate(states)})
    arr = _frozen(np.array(states, dtype=np.int64).reshape(len(states), m))
    return FockBasis(mode_basis, n_max, arr, index)


def ladder_matrix(basis: FockBasis, mode_index: int, kind: str = "lowering") -> np.ndarray:
    """Dense matrix of ``a_i`` or ``a_i^+`` on the truncated space.

    Raising transitions out of the top shell are dropped, so the truncated
    commutator is exact only below ``n_max``.
    """
    if not 0 <= mode_index < basis.num_modes:
        raise IndexError(f"mode index {mode_index} out of range")
    if kind not in ("lowering", "raising"):
        raise ValueError("kind must be 'lowering' or 'raising'")
    d = basis.dimension
    low = np.zeros((d, d), dtype=complex)
    for b, counts in enumerate(basis.states):
        n = counts[mode_index]
        if n == 0:
            continue
        target = counts.copy()
        target[mode_index] -= 1
        low[basis.index_of(target), b] = np.sqrt(n)
    return low if kind == "lowering" else low.conj().T


def apply_creation(basis: FockBasis, coefficients, vector) -> np.ndarray:
    """Apply ``sum_j c_j a_j^+`` to a state vector, dropping the overflow shell.

    Equivalent to summing :func:`ladder_matrix` products but avoids building
    dense D x D matrices.
    """
    c = np.asarray(coefficients, dtype=complex)
    vector = np.asarray(vector, dtype=complex)
    out = np.zeros(basis.dimension, dtype=complex)
    for b in np.flatnonzero(vector):
        counts = basis.states[b]
        if counts.sum() >= basis.n_max:
            continue
        for j, cj in enumerate(c):
            if cj == 0:
                continue
            target = counts.copy()
            target[j] += 1
            out[basis.index_of(target)] += cj * np.sqrt(target[j]) * vector[b]
    return out


def number_operator_diagonal(basis: FockBasis, mode_index: int) -> np.ndarray:
    return basis.states[:, mode_index].astype(float)


@dataclass(frozen=True, eq=False)
class TemporalDensity:
    window: TimeWindow
    values: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.window.points

    def integral(self) -> float:
        return float(np.sum(self.values) * self.window.dt)


def _spectral_sum(amplitudes: np.ndarray, grid: FrequencyGrid, times: np.ndarray) -> np.ndarray:
    """``sum_g a_g exp(-i w_g t) d_omega`` for every t (rows of ``amplitudes``)."""
    w = grid.points
    amplitudes = np.atleast_2d(amplitudes)
    out = np.empty((amplitudes.shape[0], times.size), dtype=complex)
    chunk = max(1, 2_000_000 // max(1, w.size))
    for s in range(0, times.size, chunk):
        t = times[s : s + chunk]
        # factor out the lowest frequency so the phase matrix stays well scaled
        phase = np.exp(-1j * np.outer(w - w[0], t))
        out[:, s : s + chunk] = (amplitudes @ phase) * np.exp(-1j * w[0] * t)
    return out * grid.d_omega


def temporal_densities(amplitudes, grid: FrequencyGrid, window: TimeWindow) -> np.ndarray:
    """Ideal detection-time densities for each row of ``amplitudes``."""
    s = _spectral_sum(np.asarray(amplitudes, dtype=complex), grid, window.points)
    return np.abs(s) ** 2 / (2 * np.pi)


def temporal_density(mode: ModeFunction, time_window) -> TemporalDensity:
    """Ideal single-photon detection-time density of ``mode``.

    ``P(t) = |sum_g phi(w_g) exp(-i w_g t) d_omega|**2 / (2 pi)``.  Mass that
    falls outside the window is simply not represented; compare
    :meth:`TemporalDensity.integral` with 1 to see it.
    """
    window = time_window if isinstance(time_window, TimeWindow) else TimeWindow(*time_window)
    values = temporal_densities(mode.amplitudes, mode.grid, window)[0]
    return TemporalDensity(window, _frozen(values))


def time_translate(mode: ModeFunction, tau: float) -> ModeFunction:
    """Free evolution by ``tau``: amplitudes times ``exp(-i w tau)``."""
    return ModeFunction(mode.grid, mode.amplitudes * np.exp(-1j * mode.grid.points * tau))
