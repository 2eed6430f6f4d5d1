"""Controller descriptions shared by the estimator (unrolling) and the loop runner."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError

COEFF_MODES = ("paper", "mmse")


@dataclass(frozen=True)
class FreeRun:
    name = "free_run"


@dataclass(frozen=True)
class Feedback:
    """C_k = -(gain / g_k) * (last LLO sample of cycle k)."""

    gain: float = 1.0
    name = "feedback"


@dataclass(frozen=True)
class _Hff:
    n: int
    gain: float = 1.0
    coeff_mode: str = "paper"
    coefficients: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("HFF needs n >= 1", field="controller.n")
        if self.coeff_mode not in COEFF_MODES:
            raise ConfigurationError(
                f"coeff_mode must be one of {COEFF_MODES}, got {self.coeff_mode!r}",
                field="controller.coeff_mode",
            )
        if self.coefficients is not None:
            object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
            if len(self.coefficients) != self.n:
                raise ConfigurationError("need one fixed coefficient per window", field="controller.coefficients")


@dataclass(frozen=True)
class HffBlock(_Hff):
    """Hybrid feedforward over the n windows of each cycle (non-overlapping blocks)."""

    name = "hff_block"


@dataclass(frozen=True)
class HffMoving(_Hff):
    """Hybrid feedforward over the latest n windows, one correction per cycle."""

    name = "hff_moving"


ControllerKind = FreeRun | Feedback | HffBlock | HffMoving


def controller_from_dict(d: dict) -> ControllerKind:
    """Build a controller from a config table such as ``{kind = "hff_moving", n = 2}``."""
    d = dict(d)
    kind = d.pop("kind", None)
    d.pop("label", None)
    kinds = {"free_run": FreeRun, "feedback": Feedback, "hff_block": HffBlock, "hff_moving": HffMoving}
    if kind not in kinds:
        raise ConfigurationError(
            f"unknown controller kind {kind!r}; valid: {sorted(kinds)}", field="controllers.kind"
        )
    try:
        return kinds[kind](**d)
    except TypeError as exc:
        raise ConfigurationError(str(exc), field=f"controllers.{kind}") from exc


def controller_label(c: ControllerKind) -> str:
    if isinstance(c, (HffBlock, HffMoving)):
        return f"{c.name}_n{c.n}_{c.coeff_mode}"
    return c.name
