"""Fourth-order implicit-explicit Runge-Kutta time stepper.

The linear part is propagated through the (2,2)-Pade rational
``R(z) = (12 - 6z + z^2) / (12 + 6z + z^2)`` of exp(-z) and its half-step
analogue ``(48 - 12z + z^2) / (48 + 12z + z^2)``.  Partial fractions turn
every stage into one backward-Euler-type complex solve: the denominators have
a single conjugate pole pair each, so for real data the conjugate half is the
mirror of the other and ``2 Re(.)`` of one solve suffices.  Only two LU
factorizations are needed for the whole time loop, one per denominator.

A dense reference implementation of the same update, evaluated directly from
the rational matrix functions, serves as the oracle for the partial-fraction
path, and scalar phi-functions are provided for order checks against the
underlying exponential integrator.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import linalg
from .system import SemiDiscreteKse

_SQRT3 = math.sqrt(3.0)


class InstabilityError(RuntimeError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, message: str, step_index: Optional[int] = None,
                 time: Optional[float] = None, max_abs: Optional[float] = None):
        self.step_index = step_index
        self.time = time
        self.max_abs = max_abs
        super().__init__(message)


@dataclass(frozen=True)
class ImexCoefficients:
    """Pole and residue weights of the partial-fraction stage solves.

    ``c1`` is the upper-half-plane root of z^2 + 6z + 12 (full step) and
    ``c1_half`` the upper-half-plane root of z^2 + 12z + 48 (half step).
    """

    c1: complex
    w1: complex
    w11: complex
    w21: complex
    w31: complex
    c1_half: complex
    w1_half: complex
    omega1_half: complex
    omega2_half: complex


def coefficients() -> ImexCoefficients:
    """The stage constants, written out to full precision."""
    return ImexCoefficients(
        c1=complex(-3.0, 1.7320508075688772935),
        w1=complex(-6.0, -10.39230484541326376),
        w11=complex(0.0, -3.4641016151377545871),
        w21=complex(0.5, -0.8660254037844386467),
        w31=complex(1.0, -0.57735026918962576452),
        c1_half=complex(-6.0, 3.4641016151377545871),
        w1_half=complex(-12.0, -20.784609690826527522),
        omega1_half=complex(0.0, -3.4641016151377545870),
        omega2_half=complex(1.0, -1.7320508075688772935),
    )


def derive_coefficients() -> ImexCoefficients:
    """Recompute each constant as a residue of its rational stage function.

    For a denominator q with conjugate roots, the residue of p/q at the
    upper root c is p(c) / (c - conj(c)).
    """
    c1 = complex(-3.0, _SQRT3)
    c1h = complex(-6.0, 2.0 * _SQRT3)

    def residue(p_at_pole: complex, pole: complex) -> complex:
        return p_at_pole / (pole - pole.conjugate())

    return ImexCoefficients(
        c1=c1,
        w1=residue(-12.0 * c1, c1),
        w11=residue(12.0 + 0j, c1),
        w21=residue(6.0 + c1, c1),
        w31=residue(2.0 * (4.0 + c1), c1),
        c1_half=c1h,
        w1_half=residue(-24.0 * c1h, c1h),
        omega1_half=residue(24.0 + 0j, c1h),
        omega2_half=residue(2.0 * (12.0 + c1h), c1h),
    )


_PHI_SERIES_RADIUS = 0.25
_PHI_SERIES_TERMS = 24


def phi_scalar(mu: int, z: complex, method: str = "auto") -> complex:
    """phi_0(z) = exp(-z); phi_mu(z) = (-z)^-mu (exp(-z) - sum_{j<mu} (-z)^j / j!).

    Near z = 0 the direct formula cancels catastrophically, so small
    arguments are evaluated by the Taylor series sum_m (-z)^m / (m + mu)!.
    """
    if mu not in (0, 1, 2, 3):
        raise ValueError("mu must be one of 0, 1, 2, 3")
    z = complex(z)
    if mu == 0:
        return cmath.exp(-z)
    if method == "auto":
        method = "series" if abs(z) < _PHI_SERIES_RADIUS else "direct"
    if method == "series":
        acc = 0.0 + 0.0j
        term = 1.0 + 0.0j
        for m in range(_PHI_SERIES_TERMS):
            acc += term / math.factorial(m + mu)
            term *= -z
        return acc
    if method == "direct":
        partial = sum((-z) ** j / math.factorial(j) for j in range(mu))
        return (cmath.exp(-z) - partial) / (-z) ** mu
    raise ValueError(f"unknown method {method!r}")


_POLE_GUARD = 1e-8


def scalar_amplification(x, y):
    """One-step growth factor of the scheme on u' = -c u + gamma u.

    ``x = gamma k`` scales the explicitly treated term and ``y = -c k`` the
    implicit one, so the update is evaluated at z = k c = -y.  The result is
    an exact degree-4 polynomial in x with y-dependent coefficients; ``x``
    may be an array.
    """
    z = -complex(y)
    for pole in (complex(-3.0, _SQRT3), complex(-3.0, -_SQRT3),
                 complex(-6.0, 2 * _SQRT3), complex(-6.0, -2 * _SQRT3)):
        if abs(z - pole) < _POLE_GUARD:
            raise ValueError(f"z = {z} is too close to the stage pole {pole}")
    x_arr = np.asarray(x, dtype=complex)
    den = 12.0 + 6.0 * z + z * z
    den_h = 48.0 + 12.0 * z + z * z
    r_full = (12.0 - 6.0 * z + z * z) / den
    p1 = 12.0 / den
    p2 = (6.0 + z) / den
    p3 = 2.0 * (4.0 + z) / den
    r_half = (48.0 - 12.0 * z + z * z) / den_h
    p1_h = 24.0 / den_h
    p2_h = 2.0 * (12.0 + z) / den_h
    a = r_half + p1_h * x_arr
    b = r_half + p1_h * x_arr + p2_h * x_arr * (a - 1.0)
    c = r_full + p1 * x_arr + 2.0 * p2 * x_arr * (b - 1.0)
    r = (r_full + p1 * x_arr + p2 * x_arr * (-3.0 + 2.0 * a + 2.0 * b - c)
         + p3 * x_arr * (1.0 - a - b + c))
    if x_arr.ndim == 0:
        return complex(r)
    return r


@dataclass(eq=False)
class StepperWorkspace:
    """The two reusable complex factorizations for one (system, k) pair."""

    sys: SemiDiscreteKse
    k: float
    factor_full: linalg.LuFactorization
    factor_half: linalg.LuFactorization
    coeffs: ImexCoefficients
    refine: int = 1

    def solve_full(self, rhs: np.ndarray) -> np.ndarray:
        return linalg.lu_solve(self.factor_full, rhs, refine=self.refine)

    def solve_half(self, rhs: np.ndarray) -> np.ndarray:
        return linalg.lu_solve(self.factor_half, rhs, refine=self.refine)


def prepare(sys: SemiDiscreteKse, k: float, refine: int = 1) -> StepperWorkspace:
    """Factor (kL - c1 I) and (kL - c1_half I) once for the whole time loop."""
    if not (np.isfinite(k) and k > 0):
        raise ValueError("time step must be positive")
    co = coefficients()
    z = k * sys.linear_matrix
    eye = np.eye(sys.state_size)
    factor_full = linalg.lu_factor(z - co.c1 * eye)
    factor_half = linalg.lu_factor(z - co.c1_half * eye)
    return StepperWorkspace(sys=sys, k=k, factor_full=factor_full,
                            factor_half=factor_half, coeffs=co, refine=refine)


def _check_finite(u: np.ndarray, label: str):
    if not np.all(np.isfinite(u)):
        finite = u[np.isfinite(u)]
        peak = float(np.abs(finite).max()) if finite.size else math.inf
        raise InstabilityError(f"non-finite values in stage {label}", max_abs=peak)


def step(ws: StepperWorkspace, u_n: np.ndarray, t_n: float) -> np.ndarray:
    """Advance one step of size k from (t_n, u_n).

    Four complex solves against the stored factorizations; stage vectors stay
    real via 2 Re(.) of each solve.  Dirichlet stages are re-injected with
    boundary data at t_n + k/2, t_n + k/2, t_n + k and t_n + k.
    """
    sys = ws.sys
    co = ws.coeffs
    k = ws.k
    u_n = np.asarray(u_n, dtype=float)
    # overflow in a diverging run is caught by the finite checks below
    with np.errstate(over="ignore", invalid="ignore"):
        f_n = sys.nonlinear_rhs(u_n, t_n)

        r_a = ws.solve_half(co.w1_half * u_n + k * co.omega1_half * f_n)
        a_n = sys.constrain_stage(u_n + 2.0 * r_a.real, t_n + k / 2)
        _check_finite(a_n, "a")
        f_a = sys.nonlinear_rhs(a_n, t_n + k / 2)

        r_b = ws.solve_half(co.w1_half * u_n + k * (co.omega1_half - co.omega2_half) * f_n
                            + k * co.omega2_half * f_a)
        b_n = sys.constrain_stage(u_n + 2.0 * r_b.real, t_n + k / 2)
        _check_finite(b_n, "b")
        f_b = sys.nonlinear_rhs(b_n, t_n + k / 2)

        r_c = ws.solve_full(co.w1 * u_n + k * (co.w11 - 2.0 * co.w21) * f_n
                            + 2.0 * k * co.w21 * f_b)
        c_n = sys.constrain_stage(u_n + 2.0 * r_c.real, t_n + k)
        _check_finite(c_n, "c")
        f_c = sys.nonlinear_rhs(c_n, t_n + k)

        r_u = ws.solve_full(co.w1 * u_n + k * (co.w11 - 3.0 * co.w21 + co.w31) * f_n
                            + k * (2.0 * co.w21 - co.w31) * (f_a + f_b)
                            - k * (co.w21 - co.w31) * f_c)
        u_next = sys.constrain_stage(u_n + 2.0 * r_u.real, t_n + k)
    _check_finite(u_next, "u")
    return u_next


_DENSE_REFERENCE_LIMIT = 512


def step_dense_reference(sys: SemiDiscreteKse, u_n: np.ndarray, t_n: float, k: float) -> np.ndarray:
    """One step evaluated directly from the rational matrix functions.

    Forms (12 I + 6 kL + (kL)^2) and (48 I + 12 kL + (kL)^2) and solves with
    them densely; no partial fractions involved.  Oracle for :func:`step`.
    """
    n = sys.state_size
    if n > _DENSE_REFERENCE_LIMIT:
        raise ValueError(f"dense reference limited to {_DENSE_REFERENCE_LIMIT} unknowns")
    u_n = np.asarray(u_n, dtype=float)
    z = k * sys.linear_matrix
    z2 = z @ z
    eye = np.eye(n)
    den = linalg.lu_factor(12.0 * eye + 6.0 * z + z2)
    den_h = linalg.lu_factor(48.0 * eye + 12.0 * z + z2)

    def apply_full(num: np.ndarray, vec: np.ndarray) -> np.ndarray:
        return linalg.lu_solve(den, num @ vec)

    def apply_half(num: np.ndarray, vec: np.ndarray) -> np.ndarray:
        return linalg.lu_solve(den_h, num @ vec)

    f_n = sys.nonlinear_rhs(u_n, t_n)
    a_n = apply_half(48.0 * eye - 12.0 * z + z2, u_n) + 24.0 * k * linalg.lu_solve(den_h, f_n)
    a_n = sys.constrain_stage(a_n, t_n + k / 2)
    f_a = sys.nonlinear_rhs(a_n, t_n + k / 2)

    b_n = (apply_half(48.0 * eye - 12.0 * z + z2, u_n)
           + 24.0 * k * linalg.lu_solve(den_h, f_n)
           + 2.0 * k * apply_half(12.0 * eye + z, f_a - f_n))
    b_n = sys.constrain_stage(b_n, t_n + k / 2)
    f_b = sys.nonlinear_rhs(b_n, t_n + k / 2)

    r22u = apply_full(12.0 * eye - 6.0 * z + z2, u_n)
    p1f = 12.0 * k * linalg.lu_solve(den, f_n)
    c_n = r22u + p1f + 2.0 * k * apply_full(6.0 * eye + z, f_b - f_n)
    c_n = sys.constrain_stage(c_n, t_n + k)
    f_c = sys.nonlinear_rhs(c_n, t_n + k)

    u_next = (r22u + p1f
              + k * apply_full(6.0 * eye + z, -3.0 * f_n + 2.0 * f_a + 2.0 * f_b - f_c)
              + 2.0 * k * apply_full(4.0 * eye + z, f_n - f_a - f_b + f_c))
    return sys.constrain_stage(u_next, t_n + k)


def integrate(
    sys: SemiDiscreteKse,
    u0: np.ndarray,
    k: float,
    t_final: float,
    observer: Optional[Callable[[float, np.ndarray], None]] = None,
    workspace: Optional[StepperWorkspace] = None,
) -> np.ndarray:
    """Run step() over M = t_final / k steps with a single prepared workspace.

    ``t_final`` must be an integer multiple of ``k``.  The observer, when
    given, receives (t_j, u_j) for j = 0..M.
    """
    if not (np.isfinite(t_final) and t_final >= 0):
        raise ValueError("final time must be nonnegative")
    steps_float = t_final / k
    n_steps = int(round(steps_float))
    if abs(steps_float - n_steps) > 1e-9 * max(1.0, abs(steps_float)):
        raise ValueError(f"final time {t_final} is not an integer multiple of k = {k}")
    if workspace is None:
        workspace = prepare(sys, k)
    if workspace.sys is not sys or workspace.k != k:
        raise ValueError("workspace was prepared for a different system or step size")
    u = np.array(u0, dtype=float, copy=True)
    if u.shape[0] != sys.state_size:
        raise ValueError(f"initial state has length {u.shape[0]}, expected {sys.state_size}")
    if observer is not None:
        observer(0.0, u)
    for j in range(n_steps):
        t = j * k
        try:
            u = step(workspace, u, t)
        except InstabilityError as err:
            err.step_index = j
            err.time = t
            raise
        if observer is not None:
            observer((j + 1) * k, u)
    return u
