"""Test systems: a small rank-deficient system, a convection-diffusion
discretization, and a parallel-beam tomography problem, plus the two noise models."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .linalg import as_vector

MP1_MATRIX = (
    (1.0, 3.0, 2.0, -1.0),
    (1.0, 2.0, -1.0, -2.0),
    (1.0, -1.0, 2.0, 3.0),
    (2.0, 1.0, 1.0, 1.0),
    (5.0, 5.0, 4.0, 1.0),
    (4.0, -1.0, 5.0, 7.0),
)
MP1_RHS = (5.0, 0.0, 5.0, 5.0, 15.0, 15.0)

BETA = 10000.0


@dataclass(frozen=True)
class ProblemSpec:
    a: np.ndarray
    b: np.ndarray
    true_solution: np.ndarray | None
    label: str
    grid_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.a.shape[0] != self.b.shape[0]:
            raise ValueError(f"A has {self.a.shape[0]} rows but b has {self.b.shape[0]} entries")
        if self.true_solution is not None and self.true_solution.shape[0] != self.a.shape[1]:
            raise ValueError("true solution length does not match the columns of A")


def model_problem_1() -> ProblemSpec:
    """The 6x4 consistent, rank-3 system with solution (1, 1, 1, 1)."""
    return ProblemSpec(np.array(MP1_MATRIX), np.array(MP1_RHS), np.ones(4), "mp1")


# --- convection-diffusion ----------------------------------------------------


def mp2_solution(x, y):
    return x * np.exp(x * y) * np.sin(np.pi * x) * np.sin(np.pi * y)


def mp2_source(x, y, beta: float = BETA):
    """Right-hand side g for the operator

    -(e^{-xy} u_x)_x - (e^{xy} u_y)_y + beta (x+y) u_y + [beta (x+y) u]_y + u/(1+x+y).
    """
    pi = np.pi
    e = np.exp(x * y)
    sx, cx = np.sin(pi * x), np.cos(pi * x)
    sy, cy = np.sin(pi * y), np.cos(pi * y)
    u = x * e * sx * sy
    ux = sy * e * (sx + x * y * sx + pi * x * cx)
    uxx = sy * e * (2 * y * sx + x * y * y * sx + 2 * pi * x * y * cx + 2 * pi * cx - pi * pi * x * sx)
    uy = x * sx * e * (x * sy + pi * cy)
    uyy = x * sx * e * (x * x * sy + 2 * pi * x * cy - pi * pi * sy)
    return (
        np.exp(-x * y) * (y * ux - uxx)
        - e * (uyy + x * uy)
        + 2 * beta * (x + y) * uy
        + (beta + 1.0 / (1.0 + x + y)) * u
    )


def convection_diffusion_matrix(n: int, beta: float = BETA) -> np.ndarray:
    """Five-point scheme on the n x n interior grid of the unit square.

    h = 1/(n+1), homogeneous Dirichlet data, diffusion coefficients at half
    points, first-order terms by central differences. Unknown (i, j), with i
    the x index and j the y index, sits at position ``j*n + i``.
    """
    h = 1.0 / (n + 1)
    h2 = h * h
    a = np.zeros((n * n, n * n))
    coords = np.arange(1, n + 1) * h
    for j, y in enumerate(coords):
        for i, x in enumerate(coords):
            row = j * n + i
            cw = np.exp(-(x - h / 2) * y)
            ce = np.exp(-(x + h / 2) * y)
            cs = np.exp(x * (y - h / 2))
            cn = np.exp(x * (y + h / 2))
            a[row, row] = (cw + ce + cs + cn) / h2 + 1.0 / (1.0 + x + y)
            if i > 0:
                a[row, row - 1] = -cw / h2
            if i < n - 1:
                a[row, row + 1] = -ce / h2
            # beta (x+y) u_y + [beta (x+y) u]_y
            north = -cn / h2 + beta * ((x + y) + (x + y + h)) / (2 * h)
            south = -cs / h2 - beta * ((x + y) + (x + y - h)) / (2 * h)
            if j > 0:
                a[row, row - n] = south
            if j < n - 1:
                a[row, row + n] = north
    return a


def model_problem_2(n: int = 32, beta: float = BETA) -> ProblemSpec:
    if n < 2:
        raise ValueError("grid size n must be at least 2")
    h = 1.0 / (n + 1)
    coords = np.arange(1, n + 1) * h
    xx, yy = np.meshgrid(coords, coords)  # yy varies along rows, matching j*n + i
    a = convection_diffusion_matrix(n, beta)
    b = mp2_source(xx, yy, beta).ravel()
    u = mp2_solution(xx, yy).ravel()
    return ProblemSpec(a, b, u, "mp2", {"n": n, "h": h, "beta": beta})


# --- tomography -------------------------------------------------------------

# (intensity, semi-axis x, semi-axis y, center x, center y, rotation in degrees)
SHEPP_LOGAN_CANONICAL = (
    (2.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.98, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
    (-0.02, 0.1100, 0.3100, 0.22, 0.0, -18.0),
    (-0.02, 0.1600, 0.4100, -0.22, 0.0, 18.0),
    (0.01, 0.2100, 0.2500, 0.0, 0.35, 0.0),
    (0.01, 0.0460, 0.0460, 0.0, 0.1, 0.0),
    (0.01, 0.0460, 0.0460, 0.0, -0.1, 0.0),
    (0.01, 0.0460, 0.0230, -0.08, -0.605, 0.0),
    (0.01, 0.0230, 0.0230, 0.0, -0.606, 0.0),
    (0.01, 0.0230, 0.0460, 0.06, -0.605, 0.0),
)

# Same ellipses with contrast-enhanced intensities, as used by common CT toolboxes.
SHEPP_LOGAN_MODIFIED = tuple(
    (rho, *row[1:])
    for rho, row in zip((1.0, -0.8, -0.2, -0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1), SHEPP_LOGAN_CANONICAL)
)

PHANTOMS = {"canonical": SHEPP_LOGAN_CANONICAL, "modified": SHEPP_LOGAN_MODIFIED}


def pixel_centers(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Centers on [-1, 1]^2 for an n x n row-major image, row 0 at the top."""
    c = (np.arange(n) + 0.5) / n * 2.0 - 1.0
    x, y = np.meshgrid(c, -c)
    return x, y


def shepp_logan_phantom(n: int = 50, variant: str = "modified") -> np.ndarray:
    """Ten-ellipse head phantom as a row-major n*n vector.

    A pixel takes the summed intensity of every ellipse containing its center.
    """
    if n < 8:
        raise ValueError("phantom size must be at least 8")
    if variant not in PHANTOMS:
        raise ValueError(f"unknown phantom variant {variant!r}; choose from {sorted(PHANTOMS)}")
    table = PHANTOMS[variant]
    x, y = pixel_centers(n)
    img = np.zeros((n, n))
    for rho, ax, ay, x0, y0, phi in table:
        t = np.deg2rad(phi)
        dx, dy = x - x0, y - y0
        xr = dx * np.cos(t) + dy * np.sin(t)
        yr = -dx * np.sin(t) + dy * np.cos(t)
        img[(xr / ax) ** 2 + (yr / ay) ** 2 <= 1.0] += rho
    img[np.abs(img) < 1e-12] = 0.0  # cancelling intensities leave round-off
    return img.ravel()


def ray_pixel_lengths(n: int, theta: float, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Pixel indices and intersection lengths of one ray through the grid.

    The grid covers [-n/2, n/2]^2 in pixel units, pixels indexed row-major
    with row 0 at the top. The ray is ``t * (-sin, cos) + s * (cos, sin)``.
    """
    half = n / 2.0
    d = np.array([np.cos(theta), np.sin(theta)])
    p0 = t * np.array([-d[1], d[0]])
    s_in, s_out = -np.inf, np.inf
    crossings = []
    for axis in range(2):
        if abs(d[axis]) < 1e-14:
            if not -half <= p0[axis] <= half:
                return np.empty(0, dtype=np.intp), np.empty(0)
            continue
        lines = np.arange(n + 1) - half
        s = (lines - p0[axis]) / d[axis]
        s_in = max(s_in, s.min())
        s_out = min(s_out, s.max())
        crossings.append(s)
    if not s_out > s_in:
        return np.empty(0, dtype=np.intp), np.empty(0)
    s = np.concatenate(crossings + [np.array([s_in, s_out])])
    s = np.unique(s[(s >= s_in) & (s <= s_out)])
    lengths = np.diff(s)
    mid = 0.5 * (s[:-1] + s[1:])
    keep = lengths > 1e-12
    lengths, mid = lengths[keep], mid[keep]
    px = p0[0] + mid * d[0]
    py = p0[1] + mid * d[1]
    col = np.clip(np.floor(px + half).astype(np.intp), 0, n - 1)
    row = np.clip(np.floor(half - py).astype(np.intp), 0, n - 1)
    return row * n + col, lengths


def detector_geometry(n: int, angles: int, rays: int) -> tuple[np.ndarray, np.ndarray]:
    """Angles spread evenly over [0, 2*pi) and offsets spanning the grid diagonal."""
    thetas = 2.0 * np.pi * np.arange(angles) / angles
    dt = n * sqrt(2.0) / rays
    offsets = (np.arange(1, rays + 1) - (rays + 1) / 2.0) * dt
    return thetas, offsets


def parallel_projector(n: int, angles: int, rays: int) -> np.ndarray:
    """(angles*rays) x n^2 ray-length matrix; rays missing the grid give zero rows."""
    if min(n, angles, rays) < 1:
        raise ValueError("n, angles and rays must all be >= 1")
    thetas, offsets = detector_geometry(n, angles, rays)
    a = np.zeros((angles * rays, n * n))
    for ia, theta in enumerate(thetas):
        for ir, t in enumerate(offsets):
            idx, lengths = ray_pixel_lengths(n, theta, t)
            np.add.at(a[ia * rays + ir], idx, lengths)
    return a


def drop_zero_rows(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Remove all-zero rows; returns the reduced matrix and the kept row indices."""
    keep = np.flatnonzero(np.any(a != 0.0, axis=1))
    return a[keep], keep


def model_problem_3(n: int = 50, angles: int = 36, rays: int = 75, variant: str = "modified") -> ProblemSpec:
    """Phantom reconstruction problem with zero rows removed.

    ``grid_meta["kept_rows"]`` maps each remaining row to its index in the
    full ``angles * rays`` sinogram.
    """
    full = parallel_projector(n, angles, rays)
    a, keep = drop_zero_rows(full)
    x = shepp_logan_phantom(n, variant)
    meta = {"n": n, "angles": angles, "rays": rays, "full_rows": full.shape[0], "kept_rows": keep}
    return ProblemSpec(a, a @ x, x, "mp3", meta)


# --- noise ------------------------------------------------------------------


def perturb_uniform(b, delta: float) -> tuple[np.ndarray, float]:
    """Shift every entry by ``delta * max|b_i|``; returns ``(b_delta, |b_delta - b|_2)``."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    b = as_vector(b, "b")
    shift = delta * float(np.max(np.abs(b))) if b.size else 0.0
    return b + shift, shift * sqrt(b.size)


def perturb_gaussian(b, eta: float, seed: int = 0) -> tuple[np.ndarray, float]:
    """Add Gaussian noise rescaled so that ``|b_delta - b| = eta |b|`` exactly."""
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    b = as_vector(b, "b")
    if eta == 0:
        return b.copy(), 0.0
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        raise ValueError("relative noise level is undefined for b = 0")
    w = np.random.default_rng(seed).standard_normal(b.size)
    noise = (eta * bnorm / np.linalg.norm(w)) * w
    return b + noise, float(np.linalg.norm(noise))
