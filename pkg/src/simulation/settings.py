"""Named Monte-Carlo settings.

Settings I* measure imputation accuracy and II*-IV* rank selection. The
``normality*`` and ``size`` designs run the row test under a null with the first
mode-1 loading row set to zero. ``power`` is the ``size`` design with the first
mode-1 entry of the normalised loading set by ``power_override``.
"""

from typing import Any

from imputation.errors import UnknownSettingError
from simulation.config import MissingSpec, SimConfig


def _weak(ranks: tuple[int, ...], zeta: float) -> list[list[float]]:
    return [[zeta] * r for r in ranks]


def _first_weak(ranks: tuple[int, ...], zeta: float) -> list[list[float]]:
    return [[zeta] + [0.0] * (r - 1) for r in ranks]


_NULL_AR = (0.05,)
_NULL_PROCESS: dict[str, Any] = {
    "ar_factor": _NULL_AR,
    "ar_noise_common": _NULL_AR,
    "ar_noise_idio": _NULL_AR,
    "missing": "M-i",
}


def _zero_first_row(K: int, rank: int) -> dict[str, Any]:
    return {
        "ranks": (rank,) + (1,) * (K - 1),
        "fixed_loadings": [{"mode": 1, "row": 1, "col": c, "value": 0.0} for c in range(1, rank + 1)],
        **_NULL_PROCESS,
    }


def power_override(value: float) -> dict[str, Any]:
    """Overrides that set the first mode-1 entry of the normalised loading to ``value``."""
    return {"fixed_loadings": [{"mode": 1, "row": 1, "col": 1, "value": value, "normalized": True}]}


_NULL_DESIGN = _zero_first_row(2, 1)

SETTINGS: dict[str, dict[str, Any]] = {
    # imputation accuracy, K = 2
    "Ia": {"dims": (40, 40), "T": 100, "ranks": (1, 2), "missing": "M-i"},
    "Ib": {"dims": (40, 40), "T": 100, "ranks": (1, 2), "zetas": _first_weak((1, 2), 0.2), "missing": "M-i"},
    "Ic": {
        "dims": (40, 40),
        "T": 100,
        "ranks": (1, 2),
        "zetas": _weak((1, 2), 0.2),
        "innovation": "student_t",
        "missing": "M-i",
    },
    "Id": {
        "dims": (80, 80),
        "T": 200,
        "ranks": (1, 2),
        "zetas": _weak((1, 2), 0.2),
        "innovation": "student_t",
        "missing": "M-i",
    },
    # imputation accuracy, K = 3
    "Ie": {"dims": (20, 20, 20), "T": 80, "ranks": (2, 2, 2), "missing": "M-i"},
    "If": {"dims": (20, 20, 20), "T": 80, "ranks": (2, 2, 2), "zetas": _weak((2, 2, 2), 0.2), "missing": "M-i"},
    "Ig": {"dims": (40, 40, 40), "T": 200, "ranks": (2, 2, 2), "zetas": _weak((2, 2, 2), 0.2), "missing": "M-i"},
    # rank selection
    "IIa": {"dims": (80,), "T": 80, "ranks": (2,), "missing": "M-ii"},
    "IIb": {"dims": (80,), "T": 80, "ranks": (2,), "zetas": [[0.1, 0.0]], "missing": "M-ii"},
    "IIc": {"dims": (80,), "T": 80, "ranks": (2,), "zetas": [[0.1, 0.15]], "missing": "M-ii"},
    "IId": {"dims": (80,), "T": 160, "ranks": (2,), "zetas": [[0.1, 0.15]], "missing": "M-ii"},
    "IIIa": {"dims": (40, 40), "T": 40, "ranks": (2, 3), "missing": "M-ii"},
    "IIIb": {"dims": (40, 40), "T": 40, "ranks": (2, 3), "zetas": _weak((2, 3), 0.1), "missing": "M-ii"},
    "IIIc": {"dims": (80, 80), "T": 80, "ranks": (2, 3), "zetas": _weak((2, 3), 0.1), "missing": "M-ii"},
    "IVa": {"dims": (20, 20, 20), "T": 20, "ranks": (2, 3, 4), "missing": "M-ii"},
    "IVb": {"dims": (20, 20, 20), "T": 20, "ranks": (2, 3, 4), "innovation": "student_t", "missing": "M-ii"},
    "IVc": {"dims": (20, 20, 20), "T": 40, "ranks": (2, 3, 4), "missing": "M-ii"},
    # row test under the null; T and the trailing dims are half of d_1
    "normality": {"dims": (200, 100), "T": 100, **_NULL_DESIGN},
    "normality-k1": {"dims": (1000,), "T": 500, **_zero_first_row(1, 2)},
    "normality-k3": {"dims": (60, 30, 30), "T": 30, **_zero_first_row(3, 1)},
    "size": {"dims": (400, 200), "T": 200, **_NULL_DESIGN},
    # row test under alternatives; see power_override
    "power": {"dims": (400, 200), "T": 200, **_NULL_DESIGN, **power_override(0.0)},
}


def setting_names() -> list[str]:
    return list(SETTINGS)


def setting_config(name: str, pattern: str | None = None, seed: int = 0, **overrides: Any) -> SimConfig:
    """SimConfig for a named setting, optionally with another missing pattern and field overrides."""
    try:
        params = dict(SETTINGS[name])
    except KeyError:
        raise UnknownSettingError(f"unknown setting {name!r}; known settings: {', '.join(SETTINGS)}") from None
    params.update(overrides)
    if pattern is not None:
        params["missing"] = pattern
    missing = params.pop("missing")
    params["missing"] = MissingSpec(pattern=missing) if isinstance(missing, str) else missing
    return SimConfig.model_validate({**params, "seed": seed})
