"""The four benchmark problems: domains, parameters, initial and boundary data.

Problem 1 is the traveling-wave accuracy benchmark with a closed-form
solution; 2 is the classical chaotic periodic run on [0, 32 pi]; 3 and 4 are
homogeneous Dirichlet problems (Gaussian pulse, decaying sine).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .compact_fd import BoundaryScheme, Grid
from .system import KseParameters, SemiDiscreteKse, assemble

EXAMPLE1_MU = 5.0
EXAMPLE1_NU = 1.0 / (2.0 * math.sqrt(19.0))
EXAMPLE1_X0 = -25.0

# Problem 4's convergence table is computed at 1.1/pi^2; the sweep values
# 0.4/pi^2 .. 0.8/pi^2 produce the cellular / multi-peak regimes.
TABLE_BETA_PROBLEM4 = 1.1 / math.pi**2
SWEEP_BETAS_PROBLEM4 = (0.4 / math.pi**2, 0.6 / math.pi**2, 0.8 / math.pi**2)


def example1_exact(x, t, mu: float = EXAMPLE1_MU, nu: float = EXAMPLE1_NU,
                   x0: float = EXAMPLE1_X0):
    """Traveling-wave solution mu + (15 tanh^3(s) - 45 tanh(s)) / 19^(3/2).

    ``s = nu (x - mu t - x0)``; valid for alpha = -1, beta = 1.
    """
    s = np.tanh(nu * (np.asarray(x, dtype=float) - mu * t - x0))
    return mu + (15.0 * s**3 - 45.0 * s) / 19.0**1.5


@dataclass(frozen=True)
class ProblemSpec:
    """Static description of one benchmark problem."""

    problem_id: int
    domain: tuple
    params: KseParameters
    scheme: BoundaryScheme
    initial_condition: Callable
    exact_solution: Optional[Callable] = None
    boundary_values: Optional[Callable] = None
    extra: dict = field(default_factory=dict)

    def grid(self, n_points: int) -> Grid:
        return Grid(self.domain[0], self.domain[1], n_points, self.scheme)

    def build_system(self, n_points: int) -> SemiDiscreteKse:
        return assemble(self.params, self.grid(n_points), self.boundary_values)

    def initial_state(self, sys: SemiDiscreteKse) -> np.ndarray:
        return sys.initial_state(self.initial_condition)


def _ic_problem2(x):
    return np.cos(x / 16.0) * (1.0 + np.sin(x / 16.0))


def _ic_problem3(x):
    return np.exp(-np.asarray(x, dtype=float) ** 2)


def _ic_problem4(x):
    return -np.sin(np.pi * np.asarray(x, dtype=float))


def make_problem(problem_id: int, beta: Optional[float] = None) -> ProblemSpec:
    """Build the ProblemSpec for one of the four benchmarks.

    ``beta`` may override the fourth-derivative coefficient of problem 4
    only; the other problems have fixed parameters.
    """
    if beta is not None and problem_id != 4:
        raise ValueError("beta override is only available for problem 4")
    if problem_id == 1:
        return ProblemSpec(
            problem_id=1,
            domain=(-50.0, 50.0),
            params=KseParameters(alpha=-1.0, beta=1.0),
            scheme=BoundaryScheme.DIRICHLET,
            initial_condition=lambda x: example1_exact(x, 0.0),
            exact_solution=example1_exact,
            boundary_values=example1_exact,
            extra={"mu": EXAMPLE1_MU, "nu": EXAMPLE1_NU, "x0": EXAMPLE1_X0},
        )
    if problem_id == 2:
        return ProblemSpec(
            problem_id=2,
            domain=(0.0, 32.0 * math.pi),
            params=KseParameters(alpha=1.0, beta=1.0),
            scheme=BoundaryScheme.PERIODIC,
            initial_condition=_ic_problem2,
        )
    if problem_id == 3:
        return ProblemSpec(
            problem_id=3,
            domain=(-30.0, 30.0),
            params=KseParameters(alpha=1.0, beta=1.0),
            scheme=BoundaryScheme.DIRICHLET,
            initial_condition=_ic_problem3,
        )
    if problem_id == 4:
        return ProblemSpec(
            problem_id=4,
            domain=(-1.0, 1.0),
            params=KseParameters(alpha=1.0, beta=1.1 if beta is None else beta),
            scheme=BoundaryScheme.DIRICHLET,
            initial_condition=_ic_problem4,
            extra={"beta_sweep": SWEEP_BETAS_PROBLEM4, "table_beta": TABLE_BETA_PROBLEM4},
        )
    raise ValueError(f"unknown problem id {problem_id}")
