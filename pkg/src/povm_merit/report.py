"""Assemble every figure of merit for a POVM into one deterministic report."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import classical, quantum
from .exceptions import PovmMeritError, ZeroTraceElement
from .hilbert import TimeWindow
from .povm import HERMITIAN_TOL, PSD_TOL, Povm, effective_dimension, purity

THREADS_ENV = "POVM_MERIT_THREADS"


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer >= 1, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be an integer >= 1, got {raw!r}")
    return n


def parallel_map(fn, items):
    """Ordered map, threaded up to ``POVM_MERIT_THREADS`` workers."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _maybe(fn, *args):
    try:
        return fn(*args)
    except (ZeroTraceElement, PovmMeritError):
        return None


@dataclass
class MeritReport:
    outcomes: list
    detector: dict
    provenance: dict
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "outcomes": self.outcomes,
            "detector": self.detector,
            "provenance": self.provenance,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict()) + "\n"

    def to_markdown(self) -> str:
        lines = ["# Detector figures of merit", ""]
        det = self.detector
        lines += ["## Detector", "", "| quantity | value |", "|---|---|"]
        for key in sorted(det):
            lines.append(f"| {key} | {_fmt_cell(det[key])} |")
        lines += ["", "## Outcomes", ""]
        if self.outcomes:
            keys = [k for k in self.outcomes[0] if k != "number_entropy"]
            lines.append("| " + " | ".join(keys) + " |")
            lines.append("|" + "---|" * len(keys))
            for o in self.outcomes:
                lines.append("| " + " | ".join(_fmt_cell(o[k]) for k in keys) + " |")
            if any(o.get("number_entropy") for o in self.outcomes):
                lines += ["", "### Photon-number entropy (bits) per mode", ""]
                for o in self.outcomes:
                    ne = o.get("number_entropy") or {}
                    parts = ", ".join(f"mode {m}: {_fmt_cell(v)}" for m, v in sorted(ne.items()))
                    lines.append(f"- {o['label']}: {parts}")
        lines += ["", "## Provenance", ""]
        for key in sorted(self.provenance):
            lines.append(f"- {key}: {_fmt_cell(self.provenance[key])}")
        if self.notes:
            lines += ["", "## Notes", ""] + [f"- {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        return _fmt_float(v).strip('"')
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt_cell(x) for x in v) + "]"
    if v is None:
        return "-"
    return str(v)


def dumps(obj, indent: int = 1, _level: int = 0) -> str:
    """JSON with sorted keys and every float printed to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad}{_json_str(str(k))}: {dumps(obj[k], indent, _level + 1)}"
            for k in sorted(obj, key=str)
        ]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(x, (dict, list, tuple)) for x in obj):
            return "[" + ", ".join(dumps(x, indent, _level + 1) for x in obj) + "]"
        items = [pad + dumps(x, indent, _level + 1) for x in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if obj is None:
        return "null"
    return _json_str(str(obj))


def _json_str(s: str) -> str:
    import json

    return json.dumps(s, ensure_ascii=False)


def _outcome_entry(povm: Povm, element, modes) -> dict:
    basis = povm.basis
    block = classical.single_photon_block(element, basis) if basis.n_max >= 1 else None
    number = {}
    number_collision = {}
    for i in modes:
        w = quantum.number_weights(element, basis, i)
        number[str(i)] = _maybe(quantum.number_entropy, w)
        number_collision[str(i)] = _maybe(quantum.number_collision_entropy, element, basis, i)
    return {
        "label": element.label,
        "clicks": element.clicks,
        "purity": _maybe(purity, element),
        "effective_dimension": _maybe(effective_dimension, element),
        "bandwidth": classical.bandwidth(block) if block is not None else None,
        "shannon_entropy": _maybe(classical.outcome_shannon_entropy, block) if block is not None else None,
        "collision_entropy": _maybe(classical.outcome_collision_entropy, block) if block is not None else None,
        "dark_count": float(np.real(element.matrix[0, 0])),
        "number_entropy": number,
        "number_collision_entropy": number_collision,
    }


def build_report(
    povm: Povm,
    *,
    modes=None,
    target_bits: float = 4.0,
    time_window: TimeWindow | None = None,
    duration: float = 1.0,
    response: bool = True,
    input_hash: str | None = None,
) -> MeritReport:
    """Compute per-outcome and detector-wide figures of merit.

    Quantities that are undefined for a given POVM (zero-trace outcomes, no
    two-photon sector, unresolvable bin widths) are reported as ``None`` with
    an explanatory note instead of aborting the whole report.
    """
    basis = povm.basis
    modes = list(range(basis.num_modes)) if modes is None else [int(m) for m in modes]
    for m in modes:
        if not 0 <= m < basis.num_modes:
            raise IndexError(f"mode {m} out of range")
    notes = []
    outcomes = parallel_map(lambda e: _outcome_entry(povm, e, modes), povm.elements)
    for o in outcomes:
        if o["purity"] is None:
            notes.append(f"outcome {o['label']!r} has zero trace; purity undefined")

    window = time_window
    if window is None and basis.n_max >= 1:
        window = TimeWindow.for_basis(basis.mode_basis)
    det = {
        "num_outcomes": len(povm),
        "dimension": basis.dimension,
        "dark_count_rate": quantum.dark_count_rate(povm, duration),
        "total_bandwidth": None,
        "efficiency_spectrum": None,
        "eta_max": None,
        "H_omega": None,
        "H_t": None,
        "delta_omega": None,
        "delta_t": None,
        "Delta_omega": None,
        "Delta_t": None,
        "resolution_product": None,
        "time_window_mass": None,
        "response_times": None,
        "response_ratio_at_zero": None,
        "detection_rate": None,
    }
    if basis.n_max >= 1:
        det["total_bandwidth"] = classical.total_bandwidth(povm)
        spec = quantum.efficiency_spectrum(povm)
        det["efficiency_spectrum"] = [float(w) for w in spec.weights]
        det["eta_max"] = spec.eta_max
        try:
            ps = classical.PosteriorSet(povm, window)
            # posterior time mass inside the finite window (1 = nothing truncated)
            det["time_window_mass"] = min(d.total() for d in ps.time)
            res = classical.resolutions(povm, target_bits, window, posteriors=ps)
        except PovmMeritError as exc:
            notes.append(f"resolution: {exc}")
        else:
            det.update(
                H_omega=res.entropy_omega,
                H_t=res.entropy_t,
                delta_omega=res.delta_omega,
                delta_t=res.delta_t,
                Delta_omega=res.resolution_omega,
                Delta_t=res.resolution_t,
                resolution_product=res.product,
            )
    else:
        notes.append("no single-photon sector (N_max = 0)")
    if response:
        if basis.n_max >= 2:
            try:
                profiles = quantum.eigenmode_response_times(povm)
            except PovmMeritError as exc:
                notes.append(f"response time: {exc}")
            else:
                det["response_times"] = [p.theta for p in profiles]
                det["response_ratio_at_zero"] = [float(p.joint[0] / p.p0**2) for p in profiles]
                det["detection_rate"] = quantum.detection_rate(profiles)
                if any(p.theta == 0 for p in profiles):
                    notes.append("joint detection already exceeds 90% at zero delay; detection rate is infinite")
                if not all(p.monotone for p in profiles):
                    notes.append("joint detection curve is not monotone; first crossings used")
        else:
            notes.append("response time needs N_max >= 2")

    prov = {
        "input_hash": input_hash,
        "tolerances": {"hermitian": HERMITIAN_TOL, "psd": PSD_TOL, "resolution_bits": 0.01},
        "target_bits": target_bits,
        "duration": duration,
        "modes": modes,
        "time_window": None if window is None else [window.t_min, window.t_max, window.num_points],
        "frequency_bin_origin": basis.mode_basis.grid.omega_min,
    }
    return MeritReport(outcomes, det, prov, notes)
