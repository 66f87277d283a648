import os
import csv
import json
import math
import logging
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .. import __version__
from .atlas import SweepRecord, TransitionReport
from .errors import ResolutionError
from .limit_cycle import LimitCycle
from .thermo import dynamical_temperature_profile

logger = logging.getLogger("otto.export")

TRAJECTORY_COLUMNS = [
    "time", "segment", "omega", "Omega", "E", "L", "C", "D",
    "S_VN", "S_E", "coherence", "T_dyn", "T_dyn_singular",
]  # fmt: skip
SWEEP_COLUMNS = [
    "tau_cycle", "cooling_power", "entropy_production", "lambda2_modulus", "classification", "geometry",
    "energy_coherence_ratio_at_A", "q_cold", "q_hot", "work_per_cycle", "E_A", "L_A", "C_A", "D_A", "error",
]  # fmt: skip
TRANSITION_COLUMNS = [
    "kind", "l", "tau_lo", "tau_hi", "tau_star", "tau_adiabat", "tau_cycle",
    "from_class", "to_class", "in_short_circuit_window", "name", "value",
]  # fmt: skip

CONVENTIONS = {
    "heat": "positive into the working medium; entropy production uses bath-side heats",
    "equilibrium_energy": "E_eq = -Omega tanh(Omega / 2T)",
    "anchor": "point A, start of the cold isochore",
    "coherence": "(L^2 + C^2) / Omega^2",
    "json_non_finite": "NaN is null, infinities are the strings inf and -inf",
}


def _cell(value: Any) -> str:
    """17 significant digits for floats, empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write(path: str, writer_fn) -> Tuple[str, bool]:
    try:
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer_fn(f)
        return f"Successfully wrote {path}", True
    except OSError as e:
        logger.error(f"Error writing {path}: {e}")
        return f"Error writing {path}: {str(e)}", False


def _write_csv(path: str, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> Tuple[str, bool]:
    def write(f):
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])

    return _write(path, write)


def _json_safe(value: Any) -> Any:
    """NaN becomes null and infinities become the strings "inf" and "-inf"."""
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {key: _json_safe(v) for key, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _write_json(path: str, payload: Dict[str, Any]) -> Tuple[str, bool]:
    def write(f):
        json.dump(_json_safe(payload), f, indent=2, sort_keys=False, allow_nan=False)
        f.write("\n")

    return _write(path, write)


def trajectory_rows(lc: LimitCycle) -> List[List[Any]]:
    """One row per sampled point; T_dyn is left empty on adiabats."""
    profiles: Dict[str, list] = {}
    for name in ("c", "h"):
        try:
            profiles[name] = dynamical_temperature_profile(lc, name)
        except ResolutionError:
            logger.info(f"segment {name!r} too short for a dynamical temperature")

    counters = {"c": 0, "h": 0}
    rows = []
    for p in lc.trajectory:
        t_dyn: Optional[float] = None
        singular: Optional[bool] = None
        if p.segment in profiles:
            entry = profiles[p.segment][counters[p.segment]]
            counters[p.segment] += 1
            t_dyn, singular = entry.t_dyn, entry.singular
        s = p.state
        rows.append(
            [p.time, p.segment, p.omega, p.omega_inst, s.e_val, s.l_val, s.c_val, s.d_val,
             p.s_vn, p.s_e, p.coherence, t_dyn, singular]
        )  # fmt: skip
    return rows


def export_trajectory(lc: LimitCycle, path: str, fmt: str = "csv") -> Tuple[str, bool]:
    """
    Write the sampled limit cycle to `path` as CSV or JSON.

    Returns:
        Tuple of (message, success status)
    """
    rows = trajectory_rows(lc)
    if fmt == "csv":
        return _write_csv(path, TRAJECTORY_COLUMNS, rows)
    metadata = {
        "version": __version__,
        "parameters": lc.params.to_dict(),
        "conventions": CONVENTIONS,
        "lambda2": lc.lambda2,
    }
    return _write_json(path, {"metadata": metadata, "columns": TRAJECTORY_COLUMNS, "rows": rows})


def sweep_rows(records: Sequence[SweepRecord]) -> List[List[Any]]:
    rows = []
    for r in records:
        anchor = [r.anchor.e_val, r.anchor.l_val, r.anchor.c_val, r.anchor.d_val] if r.anchor else [None] * 4
        rows.append(
            [r.tau_cycle, r.cooling_power, r.entropy_production, r.lambda2_modulus, r.classification, r.geometry,
             r.energy_coherence_ratio_at_A, r.q_cold, r.q_hot, r.work_per_cycle, *anchor, r.error]
        )  # fmt: skip
    return rows


def transition_rows(report: Optional[TransitionReport]) -> List[List[Any]]:
    if report is None:
        return []
    rows: List[List[Any]] = []
    blank = [None] * len(TRANSITION_COLUMNS)

    def row(**values):
        line = list(blank)
        for key, value in values.items():
            line[TRANSITION_COLUMNS.index(key)] = value
        rows.append(line)

    for t in report.transitions:
        row(kind="transition", tau_lo=t.tau_lo, tau_hi=t.tau_hi, tau_star=t.tau_star, from_class=t.from_class,
            to_class=t.to_class)  # fmt: skip
    for lo, hi in report.short_circuit_windows:
        row(kind="short_circuit_window", tau_lo=lo, tau_hi=hi)
    for m in report.landmarks:
        row(kind="landmark", l=m.l, tau_adiabat=m.tau_adiabat, tau_cycle=m.tau_cycle,
            in_short_circuit_window=m.in_short_circuit_window)  # fmt: skip
    for name in ("entropy_max_tau", "cooling_min_tau", "ratio_min_tau", "geometry_flip_tau", "flip_to_half_landmark"):
        value = getattr(report, name)
        if value is not None:
            row(kind="summary", name=name, value=value)
    return rows


def _report_dict(report: Optional[TransitionReport]) -> Dict[str, Any]:
    if report is None:
        return {"transitions": [], "landmarks": []}
    return {
        "transitions": [asdict(t) for t in report.transitions],
        "short_circuit_windows": [list(w) for w in report.short_circuit_windows],
        "landmarks": [asdict(m) for m in report.landmarks],
        "entropy_max_tau": report.entropy_max_tau,
        "cooling_min_tau": report.cooling_min_tau,
        "ratio_min_tau": report.ratio_min_tau,
        "entropy_max_in_window": report.entropy_max_in_window,
        "geometry_flip_tau": report.geometry_flip_tau,
        "flip_to_half_landmark": report.flip_to_half_landmark,
    }


def export_sweep(
    records: Sequence[SweepRecord],
    report: Optional[TransitionReport],
    path: str,
    fmt: str = "csv",
    metadata: Optional[Dict[str, Any]] = None,
) -> Tuple[str, bool]:
    """
    Write sweep records ordered by cycle time. CSV output puts transitions and
    landmarks in a `<stem>.transitions.csv` sidecar.

    Returns:
        Tuple of (message, success status)
    """
    records = sorted(records, key=lambda r: r.tau_cycle)
    if fmt == "csv":
        message, success = _write_csv(path, SWEEP_COLUMNS, sweep_rows(records))
        if not success:
            return message, False
        sidecar = str(Path(path).with_suffix(".transitions.csv"))
        side_message, side_success = _write_csv(sidecar, TRANSITION_COLUMNS, transition_rows(report))
        return (f"{message} and {sidecar}", True) if side_success else (side_message, False)

    payload = {
        "metadata": {"version": __version__, "conventions": CONVENTIONS, **(metadata or {})},
        "columns": SWEEP_COLUMNS,
        "records": sweep_rows(records),
        **_report_dict(report),
    }
    return _write_json(path, payload)


def export_landmarks(report: TransitionReport, path: str, fmt: str = "csv") -> Tuple[str, bool]:
    """
    Write the quantization landmark table on its own.

    Returns:
        Tuple of (message, success status)
    """
    if fmt == "csv":
        return _write_csv(path, TRANSITION_COLUMNS, transition_rows(report))
    payload = {"metadata": {"version": __version__}, "landmarks": [asdict(m) for m in report.landmarks]}
    return _write_json(path, payload)
