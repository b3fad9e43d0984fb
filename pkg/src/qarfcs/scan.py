"""Parameter sweeps over (E21, beta_H): cooling-window grids and line cuts.

Every grid point is an independent model evaluation written by index, so
results are deterministic regardless of evaluation order. Negative currents
are kept in the data; masking is the consumer's choice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .fcs import _current_from_family, heat_current
from .liouvillian import build_counting_family
from .model import PRESET_IDS, preset

_FIXED_DEFAULTS = {
    "e31": 1.0,
    "beta_c": 1.0,
    "beta_w": 0.1,
    "omega_c": 10.0,
    "gamma": 1e-3,
}


@dataclass(frozen=True, eq=False)
class ScanGrid:
    """Cold current and cooling mask over an (E21, beta_H) grid.

    current[i, j] belongs to (e21_axis[i], betaH_axis[j]); the mask is the
    sign certificate of the cooling condition at each point.
    """

    preset_id: str
    e21_axis: np.ndarray
    betaH_axis: np.ndarray
    current: np.ndarray
    cooling_mask: np.ndarray
    params: dict = field(default_factory=dict)

    def cooling_fraction(self) -> float:
        return float(self.cooling_mask.mean())

    def max_current(self) -> tuple[float, float, float]:
        """(max J, its e21, its betaH)."""
        i, j = np.unravel_index(int(np.argmax(self.current)), self.current.shape)
        return float(self.current[i, j]), float(self.e21_axis[i]), float(self.betaH_axis[j])


@dataclass(frozen=True, eq=False)
class LineScan:
    """Cold-current curves J_C(E21) at fixed beta_H, one per preset."""

    betaH: float
    e21_axis: np.ndarray
    currents: dict[str, np.ndarray]
    params: dict = field(default_factory=dict)


def _merged_params(overrides: dict | None) -> dict:
    params = dict(_FIXED_DEFAULTS)
    if overrides:
        unknown = set(overrides) - set(_FIXED_DEFAULTS)
        if unknown:
            raise ValidationError(f"unknown scan overrides: {sorted(unknown)}")
        params.update(overrides)
    return params


def _default_axes(params: dict, n_e21: int, n_betaH: int) -> tuple[np.ndarray, np.ndarray]:
    e31 = params["e31"]
    beta_c, beta_w = params["beta_c"], params["beta_w"]
    e21_axis = np.linspace(0.01 * e31, 0.99 * e31, n_e21)
    betaH_axis = np.linspace(beta_w + 0.01, beta_c - 0.01, n_betaH)
    return e21_axis, betaH_axis


def grid_scan(
    preset_id: str,
    n_e21: int = 101,
    n_betaH: int = 101,
    overrides: dict | None = None,
    *,
    e21_axis: np.ndarray | None = None,
    betaH_axis: np.ndarray | None = None,
) -> ScanGrid:
    """Cold current and cooling mask for one preset over the full window."""
    preset_id = preset_id.upper()
    if preset_id not in PRESET_IDS:
        raise ValidationError(f"unknown preset {preset_id!r}")
    if n_e21 < 2 or n_betaH < 2:
        raise ValidationError("grid needs at least 2 points per axis")
    params = _merged_params(overrides)
    ax_e21, ax_bh = _default_axes(params, n_e21, n_betaH)
    if e21_axis is not None:
        ax_e21 = np.asarray(e21_axis, dtype=float)
    if betaH_axis is not None:
        ax_bh = np.asarray(betaH_axis, dtype=float)
    if np.any(np.diff(ax_e21) <= 0) or np.any(np.diff(ax_bh) <= 0):
        raise ValidationError("scan axes must be strictly increasing")
    current = np.empty((len(ax_e21), len(ax_bh)))
    mask = np.empty((len(ax_e21), len(ax_bh)), dtype=bool)
    for i, e21 in enumerate(ax_e21):
        for j, bh in enumerate(ax_bh):
            try:
                model = preset(
                    preset_id,
                    float(e21),
                    float(bh),
                    e31=params["e31"],
                    beta_c=params["beta_c"],
                    beta_w=params["beta_w"],
                    omega_c=params["omega_c"],
                    gamma=params["gamma"],
                )
            except ValidationError as exc:
                raise ValidationError(
                    f"grid point (e21={e21:.6g}, betaH={bh:.6g}): {exc}"
                ) from exc
            # cold current and cooling certificate share one counting family
            family = build_counting_family(model, model.cold_index)
            j_cold, value, _ = _current_from_family(family)
            current[i, j] = j_cold
            mask[i, j] = value > 0.0
    return ScanGrid(
        preset_id=preset_id,
        e21_axis=ax_e21,
        betaH_axis=ax_bh,
        current=current,
        cooling_mask=mask,
        params=params,
    )


def line_scan(
    preset_ids,
    betaH: float,
    n_e21: int = 201,
    overrides: dict | None = None,
) -> LineScan:
    """J_C(E21) curves at fixed beta_H for a list of presets."""
    ids = [p.upper() for p in preset_ids]
    for p in ids:
        if p not in PRESET_IDS:
            raise ValidationError(f"unknown preset {p!r}")
    if n_e21 < 2:
        raise ValidationError("line scan needs at least 2 points")
    params = _merged_params(overrides)
    ax_e21, _ = _default_axes(params, n_e21, 2)
    currents: dict[str, np.ndarray] = {}
    for pid in ids:
        row = np.empty(len(ax_e21))
        for i, e21 in enumerate(ax_e21):
            model = preset(
                pid,
                float(e21),
                float(betaH),
                e31=params["e31"],
                beta_c=params["beta_c"],
                beta_w=params["beta_w"],
                omega_c=params["omega_c"],
                gamma=params["gamma"],
            )
            row[i] = heat_current(model, model.cold_index)
        currents[pid] = row
    return LineScan(betaH=float(betaH), e21_axis=ax_e21, currents=currents, params=params)


def _fmt(x: float) -> str:
    return f"{x:.17e}"


def _header_lines(kind: str, params: dict, extra: dict) -> list[str]:
    items = {**params, **extra}
    lines = [f"# {kind}"]
    for key in sorted(items):
        lines.append(f"# {key} = {items[key]}")
    return lines


def write_grid_csv(grid: ScanGrid, path: str | Path) -> None:
    """Long-format CSV: e21, betaH, current, cooling (full precision)."""
    lines = _header_lines(
        "qarfcs grid scan",
        grid.params,
        {"preset": grid.preset_id, "tolerance_policy": "scale-relative, see module docs"},
    )
    lines.append("e21,betaH,current,cooling")
    for i, e21 in enumerate(grid.e21_axis):
        for j, bh in enumerate(grid.betaH_axis):
            lines.append(
                f"{_fmt(e21)},{_fmt(bh)},{_fmt(grid.current[i, j])},"
                f"{int(grid.cooling_mask[i, j])}"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_grid_json(grid: ScanGrid, path: str | Path) -> None:
    payload = {
        "kind": "qarfcs grid scan",
        "preset": grid.preset_id,
        "params": grid.params,
        "e21_axis": [float(x) for x in grid.e21_axis],
        "betaH_axis": [float(x) for x in grid.betaH_axis],
        "current": [[float(v) for v in row] for row in grid.current],
        "cooling_mask": [[bool(v) for v in row] for row in grid.cooling_mask],
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def read_grid_json(path: str | Path) -> ScanGrid:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return ScanGrid(
        preset_id=data["preset"],
        e21_axis=np.array(data["e21_axis"]),
        betaH_axis=np.array(data["betaH_axis"]),
        current=np.array(data["current"]),
        cooling_mask=np.array(data["cooling_mask"], dtype=bool),
        params=data.get("params", {}),
    )


def write_line_csv(scan: LineScan, path: str | Path) -> None:
    """Long-format CSV: preset, e21, current."""
    lines = _header_lines("qarfcs line scan", scan.params, {"betaH": scan.betaH})
    lines.append("preset,e21,current")
    for pid in sorted(scan.currents):
        for e21, j in zip(scan.e21_axis, scan.currents[pid]):
            lines.append(f"{pid},{_fmt(e21)},{_fmt(j)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_line_json(scan: LineScan, path: str | Path) -> None:
    payload = {
        "kind": "qarfcs line scan",
        "betaH": scan.betaH,
        "params": scan.params,
        "e21_axis": [float(x) for x in scan.e21_axis],
        "currents": {pid: [float(v) for v in row] for pid, row in scan.currents.items()},
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
