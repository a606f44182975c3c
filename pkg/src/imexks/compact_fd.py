"""Fourth-order compact finite-difference operators on uniform 1-D grids.

The derivative of order p at the nodes is obtained from an implicit banded
relation ``L u^(p) = M u``; materializing ``D = L^-1 M`` once gives a dense
matrix that downstream code can shift, combine and factor freely.

Two boundary treatments are built here:

* periodic: circulant tridiagonal L and M, N unknowns with x_{N+1} == x_1;
* Dirichlet: one-sided closures at the first and last node, so the matrices
  act on all N nodes including the endpoints.

For homogeneous Dirichlet problems there are also ``interior_*`` builders
that drop the closure rows entirely and act on the N-2 interior nodes with
pure tridiagonal Toeplitz relations.  Those assume the boundary values (and
the boundary entries of the implicit left-hand sides) vanish; they are the
stable choice when nothing has to be fed in from the walls, because the
one-sided closures turn strongly non-normal once they are squared for the
fourth derivative.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import linalg


class BoundaryScheme(enum.Enum):
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class Grid:
    """Uniform spatial partition of [a, b].

    Periodic grids hold ``n_points`` unknowns x_i = a + (i-1) h with
    h = (b-a)/n_points and x_{n+1} identified with x_1.  Dirichlet grids hold
    ``n_points`` nodes including both endpoints, h = (b-a)/(n_points-1).
    """

    a: float
    b: float
    n_points: int
    scheme: BoundaryScheme

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.b > self.a):
            raise ValueError(f"invalid domain [{self.a}, {self.b}]")
        if self.n_points < 3:
            raise ValueError(f"need at least 3 grid points, got {self.n_points}")

    @property
    def h(self) -> float:
        if self.scheme is BoundaryScheme.PERIODIC:
            return (self.b - self.a) / self.n_points
        return (self.b - self.a) / (self.n_points - 1)

    def nodes(self) -> np.ndarray:
        return self.a + self.h * np.arange(self.n_points)

    def interior_nodes(self) -> np.ndarray:
        if self.scheme is not BoundaryScheme.DIRICHLET:
            raise ValueError("interior nodes are only defined for Dirichlet grids")
        return self.nodes()[1:-1]


@dataclass(frozen=True, eq=False)
class DerivativeOperator:
    """Dense realization of a compact-difference derivative."""

    order: int
    matrix: np.ndarray
    grid: Grid
    scheme: BoundaryScheme


def _freeze(matrix: np.ndarray) -> np.ndarray:
    matrix.setflags(write=False)
    return matrix


def _circulant(n: int, lo: float, diag: float, hi: float) -> np.ndarray:
    out = np.zeros((n, n))
    idx = np.arange(n)
    out[idx, idx] = diag
    out[idx, (idx - 1) % n] = lo
    out[idx, (idx + 1) % n] = hi
    return out


def _tridiag(n: int, lo: float, diag: float, hi: float) -> np.ndarray:
    out = np.diag(np.full(n, float(diag)))
    out += np.diag(np.full(n - 1, float(lo)), -1)
    out += np.diag(np.full(n - 1, float(hi)), 1)
    return out


def _materialize(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return linalg.lu_solve(linalg.lu_factor(lhs), rhs)


def _check_size(grid: Grid, minimum: int, what: str):
    if grid.n_points < minimum:
        raise ValueError(f"{what} needs at least {minimum} points, grid has {grid.n_points}")
    if grid.h <= 0:
        raise ValueError("grid spacing must be positive")


def build_first_derivative(grid: Grid) -> DerivativeOperator:
    """u' from u'_{i-1} + 4 u'_i + u'_{i+1} = (3/h)(u_{i+1} - u_{i-1}).

    Dirichlet grids close the ends with the one-sided relation
    4 u'_1 + 12 u'_2 = (3/h)(-34/9 u_1 + 2 u_2 + 2 u_3 - 2/9 u_4) and its
    mirror image, both fourth order.
    """
    _check_size(grid, 6, "first-derivative operator")
    n = grid.n_points
    h = grid.h
    if grid.scheme is BoundaryScheme.PERIODIC:
        lhs = _circulant(n, 1.0, 4.0, 1.0)
        rhs = _circulant(n, -1.0, 0.0, 1.0) * (3.0 / h)
    else:
        lhs = _tridiag(n, 1.0, 4.0, 1.0)
        rhs = _tridiag(n, -1.0, 0.0, 1.0)
        lhs[0, :2] = (4.0, 12.0)
        rhs[0, :4] = (-34.0 / 9.0, 2.0, 2.0, -2.0 / 9.0)
        lhs[-1, -2:] = (12.0, 4.0)
        rhs[-1, -4:] = (2.0 / 9.0, -2.0, -2.0, 34.0 / 9.0)
        rhs *= 3.0 / h
    return DerivativeOperator(1, _freeze(_materialize(lhs, rhs)), grid, grid.scheme)


def build_second_derivative(grid: Grid) -> DerivativeOperator:
    """u'' from u''_{i-1} + 10 u''_i + u''_{i+1} = (12/h^2)(u_{i-1} - 2u_i + u_{i+1}).

    The Dirichlet closure is
    10 u''_1 + 100 u''_2 = (12/h^2)(725/72 u_1 - 190/9 u_2 + 145/12 u_3
    - 10/9 u_4 + 5/72 u_5), mirrored on the right.
    """
    _check_size(grid, 7, "second-derivative operator")
    n = grid.n_points
    h = grid.h
    if grid.scheme is BoundaryScheme.PERIODIC:
        lhs = _circulant(n, 1.0, 10.0, 1.0)
        rhs = _circulant(n, 1.0, -2.0, 1.0) * (12.0 / h**2)
    else:
        lhs = _tridiag(n, 1.0, 10.0, 1.0)
        rhs = _tridiag(n, 1.0, -2.0, 1.0)
        lhs[0, :2] = (10.0, 100.0)
        rhs[0, :5] = (725.0 / 72.0, -190.0 / 9.0, 145.0 / 12.0, -10.0 / 9.0, 5.0 / 72.0)
        lhs[-1, -2:] = (100.0, 10.0)
        rhs[-1, -5:] = (5.0 / 72.0, -10.0 / 9.0, 145.0 / 12.0, -190.0 / 9.0, 725.0 / 72.0)
        rhs *= 12.0 / h**2
    return DerivativeOperator(2, _freeze(_materialize(lhs, rhs)), grid, grid.scheme)


def build_fourth_derivative(grid: Grid) -> DerivativeOperator:
    """u'''' as the square of the assembled second-derivative operator."""
    d2 = build_second_derivative(grid)
    matrix = linalg.mat_product(d2.matrix, d2.matrix)
    return DerivativeOperator(4, _freeze(matrix), grid, grid.scheme)


def build_interior_first_derivative(grid: Grid) -> DerivativeOperator:
    """First derivative on the interior nodes of a Dirichlet grid.

    Rows are the plain interior relation; boundary couplings are dropped,
    which is exact when u and u' vanish at both walls.
    """
    if grid.scheme is not BoundaryScheme.DIRICHLET:
        raise ValueError("interior operators require a Dirichlet grid")
    _check_size(grid, 6, "interior first-derivative operator")
    m = grid.n_points - 2
    lhs = _tridiag(m, 1.0, 4.0, 1.0)
    rhs = _tridiag(m, -1.0, 0.0, 1.0) * (3.0 / grid.h)
    return DerivativeOperator(1, _freeze(_materialize(lhs, rhs)), grid, grid.scheme)


def build_interior_second_derivative(grid: Grid) -> DerivativeOperator:
    """Second derivative on the interior nodes of a Dirichlet grid (zero walls)."""
    if grid.scheme is not BoundaryScheme.DIRICHLET:
        raise ValueError("interior operators require a Dirichlet grid")
    _check_size(grid, 7, "interior second-derivative operator")
    m = grid.n_points - 2
    lhs = _tridiag(m, 1.0, 10.0, 1.0)
    rhs = _tridiag(m, 1.0, -2.0, 1.0) * (12.0 / grid.h**2)
    return DerivativeOperator(2, _freeze(_materialize(lhs, rhs)), grid, grid.scheme)


def write_operator_csv(op: DerivativeOperator, path):
    """Debug dump of the dense operator matrix, row-major, full precision."""
    np.savetxt(path, op.matrix, delimiter=",", fmt="%.17e")
