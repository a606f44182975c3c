"""Error norms, convergence orders, truncation checks and stability regions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .stepper import scalar_amplification

amplification_factor = scalar_amplification


@dataclass
class ErrorReport:
    """Errors, observed order and timing of one run."""

    max_norm: float
    gre: Optional[float] = None
    e_k: Optional[float] = None
    observed_order: Optional[float] = None
    cpu_seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "max_norm": self.max_norm,
            "gre": self.gre,
            "e_k": self.e_k,
            "observed_order": self.observed_order,
            "cpu_seconds": self.cpu_seconds,
        }


def _pair(exact, numeric) -> Tuple[np.ndarray, np.ndarray]:
    exact = np.asarray(exact, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    if exact.shape != numeric.shape:
        raise ValueError(f"length mismatch: {exact.shape} vs {numeric.shape}")
    return exact, numeric


def max_norm_error(exact, numeric) -> float:
    """max_i |exact_i - numeric_i|."""
    exact, numeric = _pair(exact, numeric)
    return float(np.max(np.abs(exact - numeric)))


def gre(exact, numeric) -> float:
    """Global relative error: sum_i |exact_i - numeric_i| / sum_i |exact_i|."""
    exact, numeric = _pair(exact, numeric)
    denom = float(np.sum(np.abs(exact)))
    if denom == 0.0:
        raise ValueError("GRE undefined for an identically zero reference")
    return float(np.sum(np.abs(exact - numeric))) / denom


def observed_order(e_coarse: float, e_fine: float) -> float:
    """log2 of the error drop under one halving of the discretization."""
    if not (e_coarse > 0 and e_fine > 0):
        raise ValueError("observed order needs two positive errors")
    return math.log10(e_coarse / e_fine) / math.log10(2.0)


def self_difference_error(u_k, u_2k) -> float:
    """E_k = ||U_k - U_2k||_inf between final states at steps k and 2k."""
    u_k, u_2k = _pair(u_k, u_2k)
    return float(np.max(np.abs(u_k - u_2k)))


def linear_truncation_check(l_value: float, r_value: float,
                            k_list: Sequence[float]) -> List[Tuple[float, float]]:
    """One-step errors of the scheme on u' = -L u + R u, starting from u = 1.

    R is treated explicitly, L implicitly; the error is measured against the
    exact propagator exp((R - L) k).  Consecutive halvings shrink the error
    by about 2^5.
    """
    ks = list(k_list)
    if any(k <= 0 for k in ks):
        raise ValueError("step sizes must be positive")
    if any(b >= a for a, b in zip(ks, ks[1:])):
        raise ValueError("step sizes must decrease")
    out = []
    for k in ks:
        u1 = scalar_amplification(r_value * k, -l_value * k)
        out.append((k, abs(u1 - math.exp((r_value - l_value) * k))))
    return out


DEFAULT_WINDOW = (-8.0, 4.0, -8.0, 8.0)


@dataclass(eq=False)
class StabilityField:
    """Sampled |r(x, y)| over a rectangle of the complex x plane."""

    y: complex
    window: tuple
    re_axis: np.ndarray
    im_axis: np.ndarray
    magnitudes: np.ndarray  # shape (len(im_axis), len(re_axis))
    boundary: List[np.ndarray] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        """True when the window contains no |r| <= 1 samples."""
        return not bool(np.any(self.magnitudes <= 1.0))

    def area(self) -> float:
        """Grid-cell estimate of the |r| <= 1 area inside the window."""
        cell = (self.re_axis[1] - self.re_axis[0]) * (self.im_axis[1] - self.im_axis[0])
        return float(np.sum(self.magnitudes <= 1.0)) * cell


def _bisect_crossing(y: complex, p_in: complex, p_out: complex, iterations: int = 48) -> complex:
    """Point on the segment [p_in, p_out] where |r| crosses 1."""
    f_in = abs(scalar_amplification(p_in, y)) - 1.0
    for _ in range(iterations):
        mid = 0.5 * (p_in + p_out)
        f_mid = abs(scalar_amplification(mid, y)) - 1.0
        if (f_mid <= 0.0) == (f_in <= 0.0):
            p_in, f_in = mid, f_mid
        else:
            p_out = mid
        if abs(p_out - p_in) < 1e-12:
            break
    return 0.5 * (p_in + p_out)


def _link_segments(segments: List[Tuple[complex, complex]]) -> List[np.ndarray]:
    """Join cell segments that share endpoints into polylines."""

    def key(p: complex):
        return (round(p.real, 9), round(p.imag, 9))

    adjacency: dict = {}
    for seg in segments:
        for end in seg:
            adjacency.setdefault(key(end), []).append(seg)
    unused = set(range(len(segments)))
    seg_index = {id(s): i for i, s in enumerate(segments)}
    polylines = []
    while unused:
        i = unused.pop()
        a, b = segments[i]
        chain = [a, b]
        for grow_tail in (True, False):
            while True:
                tip = chain[-1] if grow_tail else chain[0]
                nxt = None
                for seg in adjacency.get(key(tip), ()):
                    j = seg_index[id(seg)]
                    if j in unused:
                        nxt = seg
                        break
                if nxt is None:
                    break
                unused.discard(seg_index[id(nxt)])
                p, q = nxt
                new_pt = q if key(p) == key(tip) else p
                if grow_tail:
                    chain.append(new_pt)
                else:
                    chain.insert(0, new_pt)
        polylines.append(np.array([(p.real, p.imag) for p in chain]))
    return polylines


def stability_scan(y, window: tuple = DEFAULT_WINDOW, resolution: int = 512) -> StabilityField:
    """Sample |r(x, y)| on the window and extract the |r| = 1 level set.

    Marching squares over the sample grid locates sign changes of |r| - 1;
    each crossing is then refined by bisection on the exact scalar scheme, so
    boundary points satisfy ||r| - 1| <= 1e-3 regardless of resolution.  An
    empty field (window entirely outside the stability region) is flagged,
    not an error.
    """
    y = complex(y)
    re_min, re_max, im_min, im_max = window
    if not (re_max > re_min and im_max > im_min):
        raise ValueError(f"degenerate window {window}")
    if resolution < 16:
        raise ValueError("resolution must be at least 16 samples per axis")
    re_axis = np.linspace(re_min, re_max, resolution)
    im_axis = np.linspace(im_min, im_max, resolution)
    x_grid = re_axis[None, :] + 1j * im_axis[:, None]
    magnitudes = np.abs(scalar_amplification(x_grid, y))

    inside = magnitudes <= 1.0
    segments: List[Tuple[complex, complex]] = []
    for j in range(resolution - 1):
        for i in range(resolution - 1):
            corners = (inside[j, i], inside[j, i + 1], inside[j + 1, i + 1], inside[j + 1, i])
            total = sum(corners)
            if total in (0, 4):
                continue
            pts = []
            edges = (
                (x_grid[j, i], x_grid[j, i + 1], corners[0], corners[1]),
                (x_grid[j, i + 1], x_grid[j + 1, i + 1], corners[1], corners[2]),
                (x_grid[j + 1, i + 1], x_grid[j + 1, i], corners[2], corners[3]),
                (x_grid[j + 1, i], x_grid[j, i], corners[3], corners[0]),
            )
            for p, q, flag_p, flag_q in edges:
                if flag_p != flag_q:
                    p_in, p_out = (p, q) if flag_p else (q, p)
                    pts.append(_bisect_crossing(y, p_in, p_out))
            if len(pts) == 2:
                segments.append((pts[0], pts[1]))
            elif len(pts) == 4:
                # saddle cell: orient by the center sample
                center_in = abs(scalar_amplification(x_grid[j, i] + 0.5 * (
                    x_grid[j + 1, i + 1] - x_grid[j, i]), y)) <= 1.0
                if center_in == corners[0]:
                    segments.append((pts[0], pts[1]))
                    segments.append((pts[2], pts[3]))
                else:
                    segments.append((pts[0], pts[3]))
                    segments.append((pts[1], pts[2]))
    boundary = _link_segments(segments)
    return StabilityField(y=y, window=tuple(window), re_axis=re_axis, im_axis=im_axis,
                          magnitudes=magnitudes, boundary=boundary)


def write_field_csv(stability_field: StabilityField, path):
    """Flatten the sampled field to rows of (re_x, im_x, abs_r)."""
    re = np.broadcast_to(stability_field.re_axis[None, :], stability_field.magnitudes.shape)
    im = np.broadcast_to(stability_field.im_axis[:, None], stability_field.magnitudes.shape)
    data = np.column_stack([re.ravel(), im.ravel(), stability_field.magnitudes.ravel()])
    np.savetxt(path, data, delimiter=",", fmt="%.17e", header="re_x,im_x,abs_r", comments="")


def write_boundary_csv(stability_field: StabilityField, path):
    """Boundary polylines as (polyline_index, re_x, im_x) rows."""
    rows = []
    for idx, line in enumerate(stability_field.boundary):
        for px, py in line:
            rows.append((idx, px, py))
    if rows:
        np.savetxt(path, np.array(rows), delimiter=",",
                   fmt=("%d", "%.17e", "%.17e"), header="polyline,re_x,im_x", comments="")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("polyline,re_x,im_x\n")
