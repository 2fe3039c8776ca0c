from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional


@dataclass(frozen=True)
class SolverParams:
    """Parameters of the decoupled energy and of the numerical solvers.

    ``c_eps`` and ``delta_eps`` default to the schedule sqrt(eps) and eps,
    both of which go to zero with ``delta_eps / c_eps = sqrt(eps)``.
    """

    epsilon: float
    h: float
    c_eps: Optional[float] = None
    delta_eps: Optional[float] = None
    lambda_cap: float = 2.0
    cg_tol: float = 1e-8
    max_outer: int = 30
    sheet_sweeps: int = 20
    armijo_shrink: float = 0.5
    armijo_slope: float = 1e-4
    check_lemmas: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.c_eps is None:
            object.__setattr__(self, "c_eps", math.sqrt(self.epsilon))
        if self.delta_eps is None:
            object.__setattr__(self, "delta_eps", self.epsilon)
        if not self.c_eps > 0:
            raise ValueError("c_eps must be positive")
        if self.delta_eps < 0:
            raise ValueError("delta_eps must be nonnegative")
        if not self.lambda_cap > 0:
            raise ValueError("lambda_cap must be positive")

    def lemma_hypothesis(self, eta0: float) -> bool:
        """The standing assumption 11 eps < eta0 / 4 of the decay and Hölder estimates."""
        return 11.0 * self.epsilon < eta0 / 4.0

    def with_(self, **kw) -> "SolverParams":
        return replace(self, **kw)
