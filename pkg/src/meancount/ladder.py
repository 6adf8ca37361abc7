"""Discretisation of the T -> inf and sigma0 -> 0+ limits."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import MeanCountError

DEFAULT_SIGMA_LADDER = (0.2, 0.1, 0.05, 0.025, 0.0125)


@dataclass(frozen=True)
class LadderSpec:
    """T rungs t0 * growth**k for k < steps; ``t0=None`` means 32 quasi-periods."""

    t0: float | None = None
    steps: int = 6
    growth: float = 2.0
    sigma_ladder: tuple[float, ...] = DEFAULT_SIGMA_LADDER
    rel_tol: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "sigma_ladder", tuple(float(x) for x in self.sigma_ladder))
        if self.t0 is not None and not self.t0 > 0:
            raise MeanCountError("INVALID", "t0 must be positive")
        if int(self.steps) != self.steps or self.steps < 2:
            raise MeanCountError("INVALID", "steps must be an integer >= 2")
        if not self.growth > 1:
            raise MeanCountError("INVALID", "growth must exceed 1")
        sl = self.sigma_ladder
        if not sl or any(x <= 0 for x in sl) or any(b >= a for a, b in zip(sl, sl[1:])):
            raise MeanCountError("INVALID", "sigma_ladder must be positive and strictly decreasing")
        if not self.rel_tol > 0:
            raise MeanCountError("INVALID", "rel_tol must be positive")

    def t_values(self, quasi_period: float) -> list[float]:
        t0 = self.t0 if self.t0 is not None else 32.0 * quasi_period
        return [t0 * self.growth**k for k in range(self.steps)]
