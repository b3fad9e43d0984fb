"""Refrigerator models: levels, baths, detailed-balance rate constants, presets.

Units: hbar = k_B = 1 throughout, so energies and inverse temperatures are
dimensionless. Level indices are 0-based in code; file I/O is 1-based to
match the usual |1>, |2>, ... labelling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ValidationError

Pair = tuple[int, int]

DEFAULT_GAP_TOL = 1e-6


def bose_occupation(omega: float, beta: float) -> float:
    """Bose-Einstein occupation 1/(e^(beta*omega) - 1) for omega, beta > 0."""
    if omega <= 0.0:
        raise ValidationError(f"transition energy must be positive, got {omega}")
    if beta <= 0.0:
        raise ValidationError(f"inverse temperature must be positive, got {beta}")
    return 1.0 / math.expm1(beta * omega)


@dataclass(frozen=True)
class OhmicSpectralDensity:
    """Ohmic coupling spectrum gamma * omega * exp(-|omega|/omega_c).

    Only the on-resonance values enter weak-coupling rates, so any object with
    a compatible ``value(gamma, omega)`` can stand in for this class.
    """

    omega_c: float = 10.0
    kind: str = "ohmic"

    def __post_init__(self) -> None:
        if self.kind != "ohmic":
            raise ValidationError(f"unknown spectral density kind {self.kind!r}")
        if self.omega_c <= 0.0:
            raise ValidationError(f"cutoff must be positive, got {self.omega_c}")

    def value(self, gamma: float, omega: float) -> float:
        if gamma < 0.0:
            raise ValidationError(f"coupling must be nonnegative, got {gamma}")
        return gamma * omega * math.exp(-abs(omega) / self.omega_c)


def spectral_value(sd: OhmicSpectralDensity, gamma: float, omega: float) -> float:
    """Spectrum evaluated on resonance; omega must be positive."""
    if omega <= 0.0:
        raise ValidationError(f"transition energy must be positive, got {omega}")
    return sd.value(gamma, omega)


@dataclass(frozen=True)
class SystemSpec:
    """Ordered working-medium levels E_1 < E_2 < ... (strictly increasing)."""

    energies: tuple[float, ...]
    gap_tol: float = DEFAULT_GAP_TOL

    def __post_init__(self) -> None:
        object.__setattr__(self, "energies", tuple(float(e) for e in self.energies))
        if len(self.energies) < 2:
            raise ValidationError("a working medium needs at least 2 levels")
        for i in range(len(self.energies) - 1):
            gap = self.energies[i + 1] - self.energies[i]
            if gap < self.gap_tol:
                raise ValidationError(
                    f"levels {i + 1} and {i + 2} are separated by {gap:.3g} "
                    f"< gap tolerance {self.gap_tol:.3g}; quasidegenerate "
                    "levels are outside the secular regime"
                )

    @property
    def n_levels(self) -> int:
        return len(self.energies)

    def gap(self, i: int, j: int) -> float:
        """E_i - E_j (0-based)."""
        return self.energies[i] - self.energies[j]


def _normalize_pair(pair: Pair) -> Pair:
    i, j = int(pair[0]), int(pair[1])
    if i == j:
        raise ValidationError(f"coupling pair must join distinct levels, got {pair}")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class BathSpec:
    """One thermal reservoir: inverse temperature plus per-transition couplings.

    ``couplings`` maps unordered 0-based level pairs (i, j), i < j, to the
    dimensionless strength gamma >= 0; absent pairs mean zero.
    """

    label: str
    beta: float
    couplings: Mapping[Pair, float]
    spectral: OhmicSpectralDensity = field(default_factory=OhmicSpectralDensity)

    def __post_init__(self) -> None:
        if self.beta <= 0.0:
            raise ValidationError(
                f"bath {self.label!r}: inverse temperature must be positive, "
                f"got {self.beta}"
            )
        norm: dict[Pair, float] = {}
        for pair, g in dict(self.couplings).items():
            g = float(g)
            if g < 0.0:
                raise ValidationError(
                    f"bath {self.label!r}: coupling for pair {pair} is negative"
                )
            norm[_normalize_pair(pair)] = g
        object.__setattr__(self, "couplings", norm)

    def coupling(self, i: int, j: int) -> float:
        return self.couplings.get(_normalize_pair((i, j)), 0.0)


@dataclass(frozen=True)
class QarModel:
    """A validated multilevel model: system, baths, and the refrigerated bath."""

    system: SystemSpec
    baths: tuple[BathSpec, ...]
    cold_index: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "baths", tuple(self.baths))
        if not self.baths:
            raise ValidationError("at least one bath is required")
        if not 0 <= self.cold_index < len(self.baths):
            raise ValidationError(f"cold bath index {self.cold_index} out of range")
        n = self.system.n_levels
        seen: set[Pair] = set()
        for bath in self.baths:
            for (i, j), g in bath.couplings.items():
                if not (0 <= i < n and 0 <= j < n):
                    raise ValidationError(
                        f"bath {bath.label!r}: pair ({i}, {j}) references a "
                        f"level outside 0..{n - 1}"
                    )
                if g > 0.0:
                    seen.add((i, j))
        # unique steady state needs every level reachable through some coupling
        reached = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for (i, j) in seen:
                if i == u and j not in reached:
                    reached.add(j)
                    stack.append(j)
                elif j == u and i not in reached:
                    reached.add(i)
                    stack.append(i)
        if len(reached) != n:
            missing = sorted(set(range(n)) - reached)
            raise ValidationError(
                f"transition graph is disconnected: levels {missing} are not "
                "reachable, so the steady state is not unique"
            )

    @property
    def n_levels(self) -> int:
        return self.system.n_levels

    @property
    def n_baths(self) -> int:
        return len(self.baths)

    def bath_index(self, label: str) -> int:
        for k, bath in enumerate(self.baths):
            if bath.label == label:
                return k
        raise ValidationError(f"no bath labelled {label!r}")


def rate(model: QarModel, frm: int, to: int, bath: int) -> float:
    """Rate constant k_{frm->to} induced by one bath.

    Upward transitions absorb a resonant quantum (spectrum times occupation);
    downward ones emit (occupation + 1). Zero when the pair is uncoupled.
    """
    if frm == to:
        raise ValidationError("rate requires two distinct levels")
    b = model.baths[bath]
    g = b.coupling(frm, to)
    if g == 0.0:
        return 0.0
    e_from = model.system.energies[frm]
    e_to = model.system.energies[to]
    omega = abs(e_to - e_from)
    gam = spectral_value(b.spectral, g, omega)
    n = bose_occupation(omega, b.beta)
    return gam * n if e_to > e_from else gam * (n + 1.0)


def rate_table(model: QarModel, bath: int) -> np.ndarray:
    """Dense (N, N) table with entry [i, j] = k_{i->j} for one bath."""
    n = model.n_levels
    k = np.zeros((n, n))
    b = model.baths[bath]
    for (i, j), g in b.couplings.items():
        if g == 0.0:
            continue
        k[i, j] = rate(model, i, j, bath)
        k[j, i] = rate(model, j, i, bath)
    return k


PRESET_IDS = ("A", "B", "C", "D")

_PRESET_NOTES = {
    "A": "ideal three-level refrigerator: C on 1-2, H on 1-3, W on 2-3",
    "B": "ideal couplings plus weak (gamma/50) couplings of every bath to "
    "the remaining transitions",
    "C": "ideal couplings plus a hot-bath leak on the 1-2 transition",
    "D": "ideal couplings plus a work-bath leak on the 1-2 transition",
}


def preset(
    model_id: str,
    e21: float,
    beta_h: float,
    *,
    e31: float = 1.0,
    beta_c: float = 1.0,
    beta_w: float = 0.1,
    omega_c: float = 10.0,
    gamma: float = 1e-3,
    gamma_weak: float | None = None,
) -> QarModel:
    """Three-level refrigerator presets A-D.

    A is the ideal machine (each bath drives exactly one transition). B adds
    weak couplings of every bath to every other transition. C and D add a
    full-strength leak of the hot (C) or work (D) bath on the cold transition.
    """
    model_id = model_id.upper()
    if model_id not in PRESET_IDS:
        raise ValidationError(f"unknown preset {model_id!r}; choose from {PRESET_IDS}")
    if not 0.0 < e21 < e31:
        raise ValidationError(f"need 0 < E21 < E31={e31}, got E21={e21}")
    if not beta_w < beta_h < beta_c:
        raise ValidationError(
            f"need beta_w < beta_h < beta_c, got {beta_w}, {beta_h}, {beta_c}"
        )
    gt = gamma / 50.0 if gamma_weak is None else gamma_weak
    c: dict[Pair, float] = {(0, 1): gamma}
    h: dict[Pair, float] = {(0, 2): gamma}
    w: dict[Pair, float] = {(1, 2): gamma}
    if model_id == "B":
        c[(0, 2)] = gt
        c[(1, 2)] = gt
        w[(0, 2)] = gt
        w[(0, 1)] = gt
        h[(1, 2)] = gt
        h[(0, 1)] = gt
    elif model_id == "C":
        h[(0, 1)] = gamma
    elif model_id == "D":
        w[(0, 1)] = gamma
    sd = OhmicSpectralDensity(omega_c=omega_c)
    return QarModel(
        system=SystemSpec(energies=(0.0, e21, e31)),
        baths=(
            BathSpec("C", beta_c, c, sd),
            BathSpec("H", beta_h, h, sd),
            BathSpec("W", beta_w, w, sd),
        ),
        cold_index=0,
    )


def preset_note(model_id: str) -> str:
    return _PRESET_NOTES[model_id.upper()]


def model_from_dict(data: dict) -> QarModel:
    """Build a model from the JSON schema (1-based level indices)."""
    try:
        energies = data["energies"]
        baths_raw = data["baths"]
        cold = data["cold"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"model file is missing field {exc}") from exc
    system = SystemSpec(energies=tuple(energies), gap_tol=data.get("gap_tol", DEFAULT_GAP_TOL))
    baths = []
    for raw in baths_raw:
        coup: dict[Pair, float] = {}
        for entry in raw.get("couplings", []):
            i, j = int(entry["i"]), int(entry["j"])
            if i < 1 or j < 1:
                raise ValidationError(
                    f"bath {raw.get('label')!r}: file couplings are 1-based, got ({i}, {j})"
                )
            coup[(i - 1, j - 1)] = float(entry["gamma"])
        baths.append(
            BathSpec(
                label=str(raw["label"]),
                beta=float(raw["beta"]),
                couplings=coup,
                spectral=OhmicSpectralDensity(omega_c=float(raw.get("omega_c", 10.0))),
            )
        )
    labels = [b.label for b in baths]
    if cold not in labels:
        raise ValidationError(f"cold bath {cold!r} not among baths {labels}")
    return QarModel(system=system, baths=tuple(baths), cold_index=labels.index(cold))


def model_to_dict(model: QarModel) -> dict:
    """Inverse of model_from_dict (emits 1-based indices)."""
    return {
        "energies": list(model.system.energies),
        "baths": [
            {
                "label": b.label,
                "beta": b.beta,
                "omega_c": b.spectral.omega_c,
                "couplings": [
                    {"i": i + 1, "j": j + 1, "gamma": g}
                    for (i, j), g in sorted(b.couplings.items())
                ],
            }
            for b in model.baths
        ],
        "cold": model.baths[model.cold_index].label,
    }


def load_model(path: str | Path) -> QarModel:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"model file {path} is not valid JSON: {exc}") from exc
    return model_from_dict(data)


def save_model(model: QarModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")
