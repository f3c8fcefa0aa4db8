"""Built-in detector POVMs with closed-form properties.

The noisy on/off and counting-pixel models use the usual binomial-loss plus
dark-count form; pixel arrays are composed as products of commuting
(photon-number diagonal) operators, i.e. pixels click independently.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import SpectralLeakage, TruncationWarning, UnsupportedComposition
from .hilbert import (
    FockBasis,
    FrequencyGrid,
    ModeBasis,
    ModeFunction,
    enumerate_fock,
    orthonormalize,
)
from .povm import Povm, PovmElement, hermitian_eigvalsh

MODEL_KINDS = ("ideal_pnr", "on_off", "heterodyne", "pixel_array", "gaussian_basis")


def _check_prob(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


def hermite_functions(x: np.ndarray, num: int) -> np.ndarray:
    """Orthonormal Hermite functions ``psi_0..psi_{num-1}`` by the stable recurrence."""
    out = np.empty((num, x.size))
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x**2)
    if num > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, num - 1):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def gaussian_basis(grid: FrequencyGrid, num_modes: int, center: float, width: float) -> ModeBasis:
    """First ``num_modes`` Hermite-Gauss modes, re-orthonormalized on ``grid``.

    ``width`` is the rms width of the fundamental mode's spectral intensity.
    """
    if num_modes < 1:
        raise ValueError("need at least one mode")
    if not width > 0:
        raise ValueError("width must be positive")
    if center - grid.omega_min <= 6 * width or grid.omega_max - center <= 6 * width:
        raise SpectralLeakage(
            f"modes centred at {center} with width {width} are not contained in "
            f"[{grid.omega_min}, {grid.omega_max}] (need 6 widths of margin)"
        )
    x = (grid.points - center) / (np.sqrt(2.0) * width)
    raw = hermite_functions(x, num_modes) / np.sqrt(np.sqrt(2.0) * width)
    return orthonormalize([ModeFunction(grid, r) for r in raw])


def default_grid(center: float = 50.0, width: float = 1.0, num_modes: int = 1,
                 points_per_width: int = 50) -> FrequencyGrid:
    """Grid wide enough for ``num_modes`` Hermite-Gauss modes with room to spare."""
    half = max(12.0, 2.0 * np.sqrt(2 * num_modes + 1) + 8.0) * width
    lo = max(0.0, center - half)
    n = int(round((center + half - lo) / width * points_per_width))
    return FrequencyGrid(lo, center + half, n)


def ideal_pnr(basis: FockBasis) -> Povm:
    """Projectors onto exactly n >= 1 photons in one mode and vacuum elsewhere."""
    if basis.n_max < 1:
        raise ValueError("ideal PNR model needs n_max >= 1")
    d = basis.dimension
    elements = []
    for i in range(basis.num_modes):
        for n in range(1, basis.n_max + 1):
            m = np.zeros((d, d), dtype=complex)
            k = basis.fock_index(i, n)
            m[k, k] = 1.0
            elements.append(PovmElement(f"mode{i}_n{n}", 1, m))
    return Povm(basis, tuple(elements), {"model": "ideal_pnr"})


def no_click_diagonal(basis: FockBasis, mode: int, eta: float, p_dark: float) -> np.ndarray:
    """``(1 - p_dark) (1 - eta)**n_mode`` for every basis state."""
    n = basis.states[:, mode]
    return (1.0 - p_dark) * (1.0 - eta) ** n


def on_off(basis: FockBasis, mode: int = 0, eta: float = 1.0, p_dark: float = 0.0) -> Povm:
    """Bucket detector on one mode: a single click element, null derived."""
    _check_prob("eta", eta)
    _check_prob("p_dark", p_dark)
    if not 0 <= mode < basis.num_modes:
        raise IndexError(f"mode {mode} out of range")
    click = np.diag(1.0 - no_click_diagonal(basis, mode, eta, p_dark)).astype(complex)
    meta = {"model": "on_off", "mode": mode, "eta": eta, "p_dark": p_dark}
    return Povm(basis, (PovmElement("click", 1, click),), meta)


def click_distribution(n: int, eta: float, p_dark: float, max_clicks: int) -> np.ndarray:
    """Distribution of ``min(Binomial(n, eta) + Bernoulli(p_dark), max_clicks)``."""
    det = np.array([math.comb(n, k) * eta**k * (1 - eta) ** (n - k) for k in range(n + 1)])
    total = np.zeros(n + 2)
    total[: n + 1] += det * (1 - p_dark)
    total[1 : n + 2] += det * p_dark
    out = np.zeros(max_clicks + 1)
    out[:max_clicks] = total[:max_clicks]
    out[max_clicks] = total[max_clicks:].sum()
    return out


def counting_pixel(basis: FockBasis, mode: int, eta: float, p_dark: float, max_clicks: int) -> Povm:
    """Single pixel that can click up to ``max_clicks`` times.

    With ``max_clicks = 1`` this is exactly :func:`on_off`.
    """
    _check_prob("eta", eta)
    _check_prob("p_dark", p_dark)
    if max_clicks < 1:
        raise ValueError("max_clicks must be >= 1")
    probs = np.array(
        [click_distribution(int(n), eta, p_dark, max_clicks) for n in basis.states[:, mode]]
    )
    elements = tuple(
        PovmElement(str(c), c, np.diag(probs[:, c]).astype(complex)) for c in range(1, max_clicks + 1)
    )
    meta = {"model": "counting_pixel", "mode": mode, "eta": eta, "p_dark": p_dark,
            "max_clicks": max_clicks}
    return Povm(basis, elements, meta)


def _pixel_outcomes(pixel: Povm, max_clicks: int | None) -> list[np.ndarray]:
    """Operators indexed by click count 0..C, counts above ``max_clicks`` folded in."""
    top = max((e.clicks for e in pixel.elements), default=0)
    cap = top if max_clicks is None else max_clicks
    d = pixel.dimension
    ops = [np.zeros((d, d), dtype=complex) for _ in range(cap + 1)]
    ops[0] += pixel.null_element.matrix
    for e in pixel.elements:
        ops[min(e.clicks, cap)] += e.matrix
    return ops


def pixel_array(pixels: Sequence[Povm], max_clicks_per_pixel: int | None = None) -> Povm:
    """Compose single-pixel POVMs into one outcome per tuple of click counts.

    Pixel operators must commute; the composed element for ``(c_1, ..., c_P)``
    is their product and carries ``sum(c)`` clicks.  The all-zero tuple becomes
    the derived null element.
    """
    if not pixels:
        raise ValueError("need at least one pixel")
    basis = pixels[0].basis
    for p in pixels[1:]:
        if p.basis is not basis and p.dimension != basis.dimension:
            raise UnsupportedComposition("pixels act on different Fock spaces")
    per_pixel = [_pixel_outcomes(p, max_clicks_per_pixel) for p in pixels]
    for (a, ops_a), (b, ops_b) in itertools.combinations(enumerate(per_pixel), 2):
        for x in ops_a:
            for y in ops_b:
                if np.max(np.abs(x @ y - y @ x), initial=0.0) > 1e-10:
                    raise UnsupportedComposition(f"pixels {a} and {b} do not commute")
    elements = []
    for counts in itertools.product(*(range(len(ops)) for ops in per_pixel)):
        if not any(counts):
            continue
        m = np.eye(basis.dimension, dtype=complex)
        for ops, c in zip(per_pixel, counts):
            m = m @ ops[c]
        elements.append(PovmElement(",".join(map(str, counts)), sum(counts), m))
    meta = {"model": "pixel_array", "pixels": len(pixels),
            "max_clicks_per_pixel": max_clicks_per_pixel}
    return Povm(basis, tuple(elements), meta)


def coherent_amplitudes(alpha: complex, n_max: int) -> np.ndarray:
    """``<n|alpha>`` for n = 0..n_max (untruncated normalization)."""
    out = np.empty(n_max + 1, dtype=complex)
    out[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, n_max + 1):
        out[n] = out[n - 1] * alpha / np.sqrt(n)
    return out


def alpha_lattice(extent: float, step: float) -> np.ndarray:
    if not step > 0:
        raise ValueError("alpha grid spacing must be positive")
    k = int(np.floor(extent / step + 1e-9))
    x = np.arange(-k, k + 1) * step
    return (x[None, :] + 1j * x[:, None]).ravel()


def heterodyne(basis: FockBasis, mode: int = 0, extent: float = 4.0, step: float = 0.5) -> Povm:
    """Coherent-state POVM ``(dx dy / pi) |alpha><alpha|`` on a square lattice.

    Other modes are left untouched (identity).  The lattice sum only
    approximates the identity, so if it overshoots all elements are scaled
    down, and a ``residual`` element ``I - sum`` is appended to restore
    completeness.
    """
    if not 0 <= mode < basis.num_modes:
        raise IndexError(f"mode {mode} out of range")
    alphas = alpha_lattice(extent, step)
    weight = step * step / np.pi
    n_i = basis.states[:, mode]
    others = np.delete(basis.states, mode, axis=1)
    same_rest = np.all(others[:, None, :] == others[None, :, :], axis=2)
    mats = []
    for a in alphas:
        v = coherent_amplitudes(a, basis.n_max)[n_i]
        mats.append(weight * np.where(same_rest, np.outer(v, v.conj()), 0))
    d = basis.dimension
    s = np.sum(mats, axis=0) if mats else np.zeros((d, d), dtype=complex)
    top = hermitian_eigvalsh(s)[-1]
    scale = 1.0
    if top > 1.0:
        scale = 1.0 / top
        mats = [m * scale for m in mats]
        s = s * scale
    low = np.flatnonzero(basis.totals <= basis.n_max // 2)
    defect = float(np.max(np.abs((s - np.eye(d))[np.ix_(low, low)]), initial=0.0))
    meta = {"model": "heterodyne", "mode": mode, "extent": extent, "step": step,
            "scale": scale, "truncation_defect": defect, "truncation_warning": defect > 0.05}
    if defect > 0.05:
        warnings.warn(
            f"heterodyne lattice misses {defect:.1%} of completeness on the low-photon sector",
            TruncationWarning,
            stacklevel=2,
        )
    elements = [
        PovmElement(f"alpha={a.real:+.6g}{a.imag:+.6g}j", 1, m) for a, m in zip(alphas, mats)
    ]
    elements.append(PovmElement("residual", 1, np.eye(d) - s))
    return Povm(basis, tuple(elements), meta)


@dataclass
class ModelSpec:
    """Parameters for one of the built-in detector models."""

    kind: str
    num_modes: int = 1
    n_max: int = 2
    eta: float = 1.0
    p_dark: float = 0.0
    mode: int = 0
    pixels: int = 2
    max_clicks: int = 2
    alpha_extent: float = 4.0
    alpha_step: float = 0.5
    center: float = 50.0
    width: float = 1.0
    points_per_width: int = 50
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; choose from {MODEL_KINDS}")
        _check_prob("eta", self.eta)
        _check_prob("p_dark", self.p_dark)
        if not self.alpha_step > 0:
            raise ValueError("alpha grid spacing must be positive")


def build_model(spec: ModelSpec) -> Povm:
    """Construct the POVM described by ``spec`` on a Hermite-Gauss mode basis.

    ``pixel_array`` uses one mode per pixel unless ``num_modes`` says
    otherwise; ``gaussian_basis`` is a perfect single-photon on/off detector
    (``eta = 1``, no dark counts) on the fundamental Gaussian mode.
    """
    num_modes = spec.num_modes
    if spec.kind == "pixel_array" and num_modes < spec.pixels:
        num_modes = spec.pixels
    grid = default_grid(spec.center, spec.width, num_modes, spec.points_per_width)
    modes = gaussian_basis(grid, num_modes, spec.center, spec.width)
    fock = enumerate_fock(modes, spec.n_max)
    if spec.kind == "ideal_pnr":
        return ideal_pnr(fock)
    if spec.kind == "on_off":
        return on_off(fock, spec.mode, spec.eta, spec.p_dark)
    if spec.kind == "gaussian_basis":
        return on_off(fock, 0, 1.0, 0.0)
    if spec.kind == "heterodyne":
        return heterodyne(fock, spec.mode, spec.alpha_extent, spec.alpha_step)
    pixels = [
        counting_pixel(fock, p % num_modes, spec.eta, spec.p_dark, spec.max_clicks)
        for p in range(spec.pixels)
    ]
    return pixel_array(pixels, spec.max_clicks)
