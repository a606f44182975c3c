"""Semi-discrete Kuramoto-Sivashinsky system U_t + L U = F(U, t).

``L = alpha D2 + beta D4`` collects the stiff linear terms and the quadratic
transport enters explicitly through ``F(U) = -1/2 D1 (U * U)``.

Boundary handling comes in three flavors, chosen by grid scheme and boundary
data:

* periodic - every node is an unknown, nothing else to do;
* Dirichlet with boundary data - all N nodes evolve with the one-sided
  closure operators and the outermost two nodes per end are overwritten with
  the supplied data after every stage.  Pinning a single endpoint is not
  enough: the composed fourth-derivative closure then carries a strongly
  amplifying pseudo-mode and fine grids blow up mid-run;
* homogeneous Dirichlet - the system is reduced to the N-2 interior nodes
  with the truncated tridiagonal operators.  Injecting zeros into the full
  closure operators instead is unstable whenever the solution is not already
  flat next to the walls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import compact_fd
from .compact_fd import BoundaryScheme, Grid

# nodes overwritten per end when boundary data is injected
INJECTION_BAND = 2


@dataclass(frozen=True)
class KseParameters:
    """Coefficients of u_xx (alpha) and u_xxxx (beta); both must be nonzero."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha != 0.0):
            raise ValueError("alpha must be finite and nonzero")
        if not (np.isfinite(self.beta) and self.beta != 0.0):
            raise ValueError("beta must be finite and nonzero")


@dataclass(frozen=True, eq=False)
class SemiDiscreteKse:
    params: KseParameters
    grid: Grid
    scheme: BoundaryScheme
    linear_matrix: np.ndarray
    d1_matrix: np.ndarray
    boundary_values: Optional[Callable] = None
    homogeneous: bool = field(default=False)

    @property
    def state_size(self) -> int:
        return self.linear_matrix.shape[0]

    def active_nodes(self) -> np.ndarray:
        """Positions of the evolving unknowns."""
        if self.homogeneous:
            return self.grid.interior_nodes()
        return self.grid.nodes()

    def nonlinear_rhs(self, u: np.ndarray, t: float) -> np.ndarray:
        """F(U, t) = -1/2 D1 (U * U)."""
        u = np.asarray(u)
        if u.shape[0] != self.state_size:
            raise ValueError(f"state has length {u.shape[0]}, expected {self.state_size}")
        return -0.5 * (self.d1_matrix @ (u * u))

    def apply_boundary(self, u: np.ndarray, t: float) -> np.ndarray:
        """Return a copy of ``u`` with the boundary band set to boundary data.

        For injected systems the band is two nodes per end evaluated from the
        boundary function; for homogeneous systems the (eliminated) endpoint
        values are zero by construction, so this is the identity on the active
        state.
        """
        if self.scheme is BoundaryScheme.PERIODIC:
            raise ValueError("apply_boundary is undefined for periodic systems")
        out = np.array(u, dtype=float, copy=True)
        if self.homogeneous:
            return out
        x = self.grid.nodes()
        for i in (*range(INJECTION_BAND), *range(-INJECTION_BAND, 0)):
            out[i] = self.boundary_values(x[i], t)
        return out

    def constrain_stage(self, u: np.ndarray, t: float) -> np.ndarray:
        """Boundary hook the stepper applies to each stage vector."""
        if self.scheme is BoundaryScheme.DIRICHLET and not self.homogeneous:
            return self.apply_boundary(u, t)
        return u

    def initial_state(self, initial_condition: Callable, t0: float = 0.0) -> np.ndarray:
        """Sample an initial-condition function onto the active unknowns."""
        u = np.asarray(initial_condition(self.active_nodes()), dtype=float)
        if self.scheme is BoundaryScheme.DIRICHLET and not self.homogeneous:
            u = self.apply_boundary(u, t0)
        return u

    def full_state(self, u: np.ndarray) -> np.ndarray:
        """Embed the active state on the full grid (zero walls when reduced)."""
        if not self.homogeneous:
            return np.array(u, dtype=float, copy=True)
        out = np.zeros(self.grid.n_points)
        out[1:-1] = u
        return out


def assemble(
    params: KseParameters,
    grid: Grid,
    boundary_values: Optional[Callable] = None,
) -> SemiDiscreteKse:
    """Build L = alpha D2 + beta D4 and the transport operator for the grid.

    ``boundary_values`` is a callable ``g(x, t)`` giving the imposed solution
    values near the walls; it is required for Dirichlet grids unless the
    boundary data is identically zero (pass ``None`` for the homogeneous
    reduction).  Periodic grids accept no boundary data.
    """
    if grid.scheme is BoundaryScheme.PERIODIC:
        if boundary_values is not None:
            raise ValueError("periodic systems take no boundary values")
        d1 = compact_fd.build_first_derivative(grid)
        d2 = compact_fd.build_second_derivative(grid)
        homogeneous = False
    elif boundary_values is not None:
        d1 = compact_fd.build_first_derivative(grid)
        d2 = compact_fd.build_second_derivative(grid)
        homogeneous = False
    else:
        d1 = compact_fd.build_interior_first_derivative(grid)
        d2 = compact_fd.build_interior_second_derivative(grid)
        homogeneous = True
    d4 = d2.matrix @ d2.matrix
    linear = params.alpha * d2.matrix + params.beta * d4
    linear.setflags(write=False)
    return SemiDiscreteKse(
        params=params,
        grid=grid,
        scheme=grid.scheme,
        linear_matrix=linear,
        d1_matrix=d1.matrix,
        boundary_values=boundary_values,
        homogeneous=homogeneous,
    )
