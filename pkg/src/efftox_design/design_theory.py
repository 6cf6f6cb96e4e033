"""Support-size bounds and closed-form minimally supported D-optimal designs.

The bounds are a lookup table: for each (efficacy, toxicity) family pair,
any design can be improved in the Loewner order by one with at most
``max_points`` doses, and a design with index at least ``index_threshold``
can be improved by one containing the listed boundary points.  Pairs not in
the table are obtained by swapping the roles of the two outcomes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import IdenticalHalfMaxError, NoClosedFormError
from .infomat import BivariateModel, Design, DoseRange, make_design
from .models import ModelFamily

LIN = ModelFamily.LINEAR
QUAD = ModelFamily.QUADRATIC
MM = ModelFamily.MICHAELIS_MENTEN
EMAX = ModelFamily.EMAX


@dataclass(frozen=True)
class SupportBound:
    max_points: int
    index_threshold: float
    boundary: frozenset


_LR = frozenset({"L", "R"})

_BOUNDS = {
    (LIN, LIN): SupportBound(2, 1.0, _LR),
    (LIN, QUAD): SupportBound(3, 2.0, _LR),
    (LIN, MM): SupportBound(4, 3.0, _LR),
    (LIN, EMAX): SupportBound(4, 3.0, _LR),
    (QUAD, QUAD): SupportBound(3, 2.0, _LR),
    (QUAD, MM): SupportBound(5, 4.0, _LR),
    (QUAD, EMAX): SupportBound(5, 4.0, _LR),
    (MM, MM): SupportBound(5, 4.0, frozenset({"R"})),
    (MM, EMAX): SupportBound(5, 4.0, _LR),
    (EMAX, EMAX): SupportBound(5, 4.0, _LR),
}

_MIN_POINTS = {LIN: 2, QUAD: 3, MM: 2, EMAX: 3}


def support_bound(eff: ModelFamily, tox: ModelFamily) -> SupportBound:
    eff, tox = ModelFamily(eff), ModelFamily(tox)
    if (eff, tox) in _BOUNDS:
        return _BOUNDS[eff, tox]
    return _BOUNDS[tox, eff]


def minimal_support_size(eff: ModelFamily, tox: ModelFamily) -> int:
    """Fewest distinct doses giving a nonsingular information matrix."""
    return max(_MIN_POINTS[ModelFamily(eff)], _MIN_POINTS[ModelFamily(tox)])


def _two_point_left(L, R, b):
    """Lower dose of the linear / Michaelis-Menten pair, clamped to ``L``."""
    return max(L, 0.5 * (math.sqrt(R * R + 10.0 * R * b + 9.0 * b * b) - R - 3.0 * b))


def _mm_mm_left(L, R, be, bt):
    s = R + be + bt
    return max(L, (math.sqrt(R * be * bt * s + (be * bt) ** 2) - be * bt) / s)


def _log_mid(L, R, b):
    return math.sqrt((L + b) * (R + b)) - b


def _emax_emax_mid(L, R, be, bt):
    num = math.sqrt((L + be) * (L + bt) * (R + be) * (R + bt)) + L * R - be * bt
    return num / (L + R + be + bt)


def _check_distinct(be, bt, pair):
    if be == bt:
        raise IdenticalHalfMaxError(
            f"{pair[0].value}/{pair[1].value} needs different half-maximal doses, both are {be}"
        )


def closed_form_points(bm: BivariateModel, dose_range: DoseRange) -> list:
    """Support of the minimally supported D-optimal design.

    Raises :class:`NoClosedFormError` for pairs without a known closed form.
    """
    L, R = dose_range.L, dose_range.R
    eff, tox = bm.efficacy, bm.toxicity
    pair = (eff.family, tox.family)

    if pair == (LIN, LIN):
        return [L, R]
    if pair in ((LIN, MM), (MM, LIN)):
        b = tox.ed50 if tox.family is MM else eff.ed50
        return [_two_point_left(L, R, b), R]
    if pair == (QUAD, QUAD):
        return [L, 0.5 * (L + R), R]
    if pair in ((QUAD, EMAX), (EMAX, QUAD)):
        b = tox.ed50 if tox.family is EMAX else eff.ed50
        return [L, _log_mid(L, R, b), R]
    if pair == (MM, MM):
        _check_distinct(eff.ed50, tox.ed50, pair)
        return [_mm_mm_left(L, R, eff.ed50, tox.ed50), R]
    if pair == (EMAX, EMAX):
        _check_distinct(eff.ed50, tox.ed50, pair)
        return [L, _emax_emax_mid(L, R, eff.ed50, tox.ed50), R]

    k = minimal_support_size(*pair)
    raise NoClosedFormError(
        f"no closed-form minimal design for {pair[0].value}/{pair[1].value}; "
        f"run the optimizer with k = {k}",
        suggested_k=k,
    )


def minimal_d_design(bm: BivariateModel, dose_range: DoseRange) -> Design:
    """Minimally supported D-optimal design (uniform weights)."""
    pts = closed_form_points(bm, dose_range)
    return make_design(pts, None, dose_range)
