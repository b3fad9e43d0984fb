"""Closed-form reference results and the cycle/leak current decomposition.

Covers the two-level (spin-boson) current and noise, the ideal three-level
cooling condition and coefficient of performance, the per-cycle cooling
inequalities, the leaky-model condition, and an exact decomposition of the
cold current numerator into cycle and leak parts by multilinear extraction
in per-bath rate scalings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, CopUndefinedError, TopologyError, ValidationError
from .fcs import charpoly, heat_current, _trace_product
from .liouvillian import build_generator
from .model import QarModel, bose_occupation, rate_table

Pair = tuple[int, int]


def sb_current(
    omega0: float, gamma_c: float, gamma_h: float, beta_c: float, beta_h: float
) -> float:
    """Two-level two-bath heat current into the system from the cold side.

    gamma_c / gamma_h are the spectra already evaluated on resonance.
    """
    n_c = bose_occupation(omega0, beta_c)
    n_h = bose_occupation(omega0, beta_h)
    den = gamma_c * (1.0 + 2.0 * n_c) + gamma_h * (1.0 + 2.0 * n_h)
    return omega0 * gamma_c * gamma_h * (n_c - n_h) / den


def sb_noise(
    omega0: float, gamma_c: float, gamma_h: float, beta_c: float, beta_h: float
) -> float:
    """Zero-frequency noise of the two-level cold-bath current."""
    n_c = bose_occupation(omega0, beta_c)
    n_h = bose_occupation(omega0, beta_h)
    den = gamma_c * (1.0 + 2.0 * n_c) + gamma_h * (1.0 + 2.0 * n_h)
    j = omega0 * gamma_c * gamma_h * (n_c - n_h) / den
    num = omega0**2 * gamma_c * gamma_h * ((1.0 + n_c) * n_h + (1.0 + n_h) * n_c)
    return (num - 2.0 * j * j) / den


def _check_ordering(e21: float, e31: float, beta_c: float, beta_h: float, beta_w: float) -> None:
    if not 0.0 < e21 < e31:
        raise ValidationError(f"need 0 < E21 < E31, got E21={e21}, E31={e31}")
    if not beta_w < beta_h < beta_c:
        raise ValidationError(
            f"need beta_w < beta_h < beta_c, got {beta_w}, {beta_h}, {beta_c}"
        )


def ideal_cooling(
    e21: float, e31: float, beta_c: float, beta_h: float, beta_w: float
) -> bool:
    """Ideal three-level machine cools iff E21/E31 < (bH - bW)/(bC - bW)."""
    _check_ordering(e21, e31, beta_c, beta_h, beta_w)
    return e21 / e31 < (beta_h - beta_w) / (beta_c - beta_w)


def cycle_conditions(
    e21: float, e31: float, beta_c: float, beta_h: float, beta_w: float
) -> tuple[bool, bool]:
    """Cooling conditions of the two competing cycles.

    The cycle pumping at the lower transition cools for small enough E21,
    the one pumping at the upper transition for large enough E21; the two
    bounds conflict, closing the window at both ends.
    """
    _check_ordering(e21, e31, beta_c, beta_h, beta_w)
    ratio = e21 / e31
    cond21 = ratio <= (beta_h - beta_w) / (beta_c - beta_w)
    cond32 = ratio >= (beta_c - beta_h) / (beta_c - beta_w)
    return cond21, cond32


def _ideal_roles(model: QarModel) -> tuple[int, int, int]:
    """(cold, hot, work) bath indices for the dominant A-type topology."""
    if model.n_levels != 3 or model.n_baths != 3:
        raise TopologyError("expected a three-level, three-bath model")
    cold = model.cold_index
    others = [b for b in range(3) if b != cold]
    hot = max(others, key=lambda b: model.baths[b].beta)
    work = min(others, key=lambda b: model.baths[b].beta)
    return cold, hot, work


def _require_couplings(model: QarModel, bath: int, pairs: set[Pair], what: str) -> None:
    actual = {p for p, g in model.baths[bath].couplings.items() if g > 0.0}
    if actual != pairs:
        raise TopologyError(
            f"{what}: bath {model.baths[bath].label!r} couples {sorted(actual)}, "
            f"expected {sorted(pairs)}"
        )


def cop(model: QarModel) -> tuple[float, float]:
    """Coefficient of performance of the ideal machine, with its Carnot bound.

    eta is the ratio of the cold to the work heat current (both from the
    counting pipeline); for the ideal topology it equals E21/E32. Undefined
    outside the cooling window.
    """
    cold, hot, work = _ideal_roles(model)
    _require_couplings(model, cold, {(0, 1)}, "ideal refrigerator")
    _require_couplings(model, hot, {(0, 2)}, "ideal refrigerator")
    _require_couplings(model, work, {(1, 2)}, "ideal refrigerator")
    energies = model.system.energies
    e21 = energies[1] - energies[0]
    e31 = energies[2] - energies[0]
    beta_c = model.baths[cold].beta
    beta_h = model.baths[hot].beta
    beta_w = model.baths[work].beta
    if not ideal_cooling(e21, e31, beta_c, beta_h, beta_w):
        raise CopUndefinedError(
            f"E21/E31 = {e21 / e31:.6g} is outside the cooling window "
            f"(threshold {(beta_h - beta_w) / (beta_c - beta_w):.6g})"
        )
    j_cold = heat_current(model, cold)
    j_work = heat_current(model, work)
    eta = j_cold / j_work
    eta_carnot = (beta_h - beta_w) / (beta_c - beta_h)
    return eta, eta_carnot


def leaky_cooling(model: QarModel) -> tuple[float, float, bool]:
    """Cooling condition split of the leaky three-level machine.

    For a dominant A-type machine whose hot or work bath additionally loads
    the cold (1-2) transition, the cooling condition reads ideal_term +
    leak_term > 0 with the leak part never positive. Returns both terms and
    the verdict.
    """
    cold, hot, work = _ideal_roles(model)
    _require_couplings(model, cold, {(0, 1)}, "leaky refrigerator")
    hot_pairs = {p for p, g in model.baths[hot].couplings.items() if g > 0.0}
    work_pairs = {p for p, g in model.baths[work].couplings.items() if g > 0.0}
    if hot_pairs == {(0, 2), (0, 1)} and work_pairs == {(1, 2)}:
        leak = hot
    elif hot_pairs == {(0, 2)} and work_pairs == {(1, 2), (0, 1)}:
        leak = work
    else:
        raise TopologyError(
            "expected the A-type couplings plus exactly one hot- or work-bath "
            f"leak on the 1-2 transition; hot couples {sorted(hot_pairs)}, "
            f"work couples {sorted(work_pairs)}"
        )
    energies = model.system.energies
    e21 = energies[1] - energies[0]
    e31 = energies[2] - energies[0]
    e32 = e31 - e21
    beta_c = model.baths[cold].beta
    beta_h = model.baths[hot].beta
    beta_w = model.baths[work].beta
    beta_l = model.baths[leak].beta
    kt_hot = rate_table(model, hot)
    kt_work = rate_table(model, work)
    kt_leak = rate_table(model, leak)
    k_leak_down = kt_leak[1, 0]
    k_hot_down = kt_hot[2, 0]
    k_work_down = kt_work[2, 1]
    ideal_term = math.exp(-beta_c * e21 - beta_w * e32) - math.exp(-beta_h * e31)
    leak_term = (
        k_leak_down
        * (1.0 / k_hot_down + 1.0 / k_work_down)
        * (math.exp(-beta_c * e21) - math.exp(-beta_l * e21))
    )
    return ideal_term, leak_term, ideal_term + leak_term > 0.0


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Cold-current numerator split into cycle and leak parts.

    Keys are 0-based level pairs; leak keys also carry the leaking bath's
    label. Parts sum to a_{N-1}(0) * J_C unless ``current_units`` divided
    them through by a_{N-1}(0).
    """

    cycles: dict[Pair, float]
    leaks: dict[tuple[str, Pair], float]
    total: float
    normalization: float
    current_units: bool
    reconstruction_residual: float
    magnitude: float

    def part_sum(self) -> float:
        return math.fsum(list(self.cycles.values()) + list(self.leaks.values()))


_EXTRACTION_POINTS = (
    (1.0, 1.0, 1.0),
    (2.0, 1.0, 1.0),
    (1.0, 2.0, 1.0),
    (1.0, 1.0, 2.0),
    (2.0, 2.0, 1.0),
    (1.0, 2.0, 2.0),
)


def decompose(model: QarModel, *, current_units: bool = False) -> Decomposition:
    """Exact cycle/leak decomposition of the cold current (three baths).

    For each cold-coupled transition, the counted-numerator contribution is a
    homogeneous quadratic in per-bath rate scalings (the adjugate supplies two
    rate factors), so its six monomial coefficients follow exactly from
    evaluations at small-integer scaling points. Classification: a hot- or
    work-bath rate acting on the counted transition itself marks a leak of
    that bath (its terms carry the exp(-beta_C dE) - exp(-beta_mu dE) factor);
    with those rates removed, a mixed hot/work monomial is the genuine
    three-bath cycle, a single-other-bath monomial is a composite two-bath
    leak, and the pure-cold coefficient must vanish (one bath alone drives no
    current). Because the on-transition rates enter the numerator linearly,
    the on/off split is exact.
    """
    cold, hot, work = _ideal_roles(model)
    tables = [rate_table(model, b) for b in range(3)]
    energies = model.system.energies
    n = 3
    labels = {hot: model.baths[hot].label, work: model.baths[work].label}

    basis = lambda x: (
        x[0] * x[0],
        x[1] * x[1],
        x[2] * x[2],
        x[0] * x[1],
        x[0] * x[2],
        x[1] * x[2],
    )
    vand = np.array([basis(p) for p in _EXTRACTION_POINTS])

    def generator_of(tabs, x: tuple[float, float, float]) -> np.ndarray:
        scales = {cold: x[0], hot: x[1], work: x[2]}
        l = np.zeros((n, n))
        for b in range(3):
            k = tabs[b]
            l += scales[b] * (k.T - np.diag(k.sum(axis=1)))
        return l

    def without_on_transition(bath: int, pair: Pair, tabs):
        i, j = pair
        out = list(tabs)
        k = tabs[bath].copy()
        k[i, j] = 0.0
        k[j, i] = 0.0
        out[bath] = k
        return out

    cycles: dict[Pair, float] = {}
    leaks: dict[tuple[str, Pair], float] = {}
    scale_ref = 0.0
    pure_cold_worst = 0.0
    k_cold = tables[cold]
    unit = (1.0, 1.0, 1.0)
    for i in range(n):
        for j in range(i + 1, n):
            if k_cold[i, j] == 0.0 and k_cold[j, i] == 0.0:
                continue
            de = energies[j] - energies[i]
            d1 = np.zeros((n, n))
            d1[j, i] = de * k_cold[i, j]
            d1[i, j] = -de * k_cold[j, i]

            raw_scale = 0.0

            def numerator(tabs, x=unit):
                nonlocal raw_scale
                adj = charpoly(generator_of(tabs, x)).adjugate
                # cancellation-free magnitude: the roundoff floor of the
                # extraction, which stays finite where the signed numerator
                # vanishes (cooling boundary)
                raw_scale = max(raw_scale, _trace_product(np.abs(adj), np.abs(d1)))
                return (-1.0) ** (n + 1) * _trace_product(adj, d1)

            tabs_no_work = without_on_transition(work, (i, j), tables)
            tabs_bare = without_on_transition(hot, (i, j), tabs_no_work)
            vals = np.array([numerator(tabs_bare, p) for p in _EXTRACTION_POINTS])
            c_cc, c_hh, c_ww, c_ch, c_cw, c_hw = np.linalg.solve(vand, vals)
            t_bare = math.fsum([c_cc, c_hh, c_ww, c_ch, c_cw, c_hw])
            t_no_work = numerator(tabs_no_work)
            t_full = numerator(tables)
            scale_ref = max(scale_ref, raw_scale)
            pure_cold_worst = max(pure_cold_worst, abs(c_cc))
            cycles[(i, j)] = float(c_hw)
            leaks[(labels[hot], (i, j))] = float(c_ch + c_hh) + (t_no_work - t_bare)
            leaks[(labels[work], (i, j))] = float(c_cw + c_ww) + (t_full - t_no_work)

    if pure_cold_worst > 1e-12 * max(scale_ref, 1e-300):
        raise ConsistencyError(
            f"pure cold-bath part {pure_cold_worst:.3g} exceeds 1e-12 of the "
            f"extraction scale {scale_ref:.3g}; a single bath cannot drive a "
            "steady current"
        )

    cp = charpoly(build_generator(model))
    a_pen = cp.coefficient(2)
    family_d1 = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            de = energies[j] - energies[i]
            family_d1[j, i] += de * k_cold[i, j]
            family_d1[i, j] += -de * k_cold[j, i]
    numerator = (-1.0) ** (n + 1) * _trace_product(cp.adjugate, family_d1)
    parts = math.fsum(list(cycles.values()) + list(leaks.values()))
    residual = abs(parts - numerator)

    magnitude = scale_ref
    if current_units:
        cycles = {k: v / a_pen for k, v in cycles.items()}
        leaks = {k: v / a_pen for k, v in leaks.items()}
        total = numerator / a_pen
        residual /= a_pen
        magnitude /= a_pen
    else:
        total = numerator
    return Decomposition(
        cycles=cycles,
        leaks=leaks,
        total=total,
        normalization=a_pen,
        current_units=current_units,
        reconstruction_residual=residual,
        magnitude=magnitude,
    )
