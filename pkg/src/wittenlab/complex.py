"""Periodic cubical complexes, locally flat Morse functions and deformed coboundaries.

Cells of each degree are grouped in orientation blocks.  On the circle the
blocks are ``()`` (vertices) and ``(1,)`` (edges); on the torus they are
``()``, ``(1,)`` (x-edges), ``(2,)`` (y-edges) and ``(1, 2)`` (faces).  Inside a
block, the cell at grid position ``(i, j)`` has index ``offset + i + nx * j``
and its barycenter is shifted by half a cell along every axis in the
orientation.  Each block is therefore itself a regular periodic grid.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy import sparse

from .errors import ConfigurationError, ConstructionError, DomainError, OverflowGuardError

MIN_CELLS_PER_AXIS = 8
EXP_GUARD = 700.0


@dataclass(frozen=True)
class CellBlock:
    """Cells of one orientation inside a degree."""

    orientation: tuple
    offset: int
    size: int


@dataclass(frozen=True, eq=False)
class CellComplex:
    """Periodic cubical complex of dimension 1 or 2 with the flat product metric."""

    dim: int
    shape: tuple
    periods: tuple
    blocks: tuple  # blocks[r] -> tuple of CellBlock
    barycenters: tuple  # barycenters[r] -> (m_r, dim) array
    measures: tuple  # primal length/area per cell
    dual_measures: tuple  # measure of the dual cell
    incidence: tuple  # incidence[r] -> sparse (m_{r+1}, m_r) integer matrix

    @property
    def spacing(self):
        return tuple(L / n for L, n in zip(self.periods, self.shape))

    @property
    def max_spacing(self):
        return max(self.spacing)

    def n_cells(self, r):
        return self.barycenters[r].shape[0]

    @property
    def counts(self):
        return tuple(self.n_cells(r) for r in range(self.dim + 1))

    @property
    def euler_characteristic(self):
        return sum((-1) ** r * c for r, c in enumerate(self.counts))

    def orientation_of(self, r):
        """Orientation multi-index of every r-cell."""
        out = []
        for block in self.blocks[r]:
            out.extend([block.orientation] * block.size)
        return out

    def block(self, r, orientation):
        for b in self.blocks[r]:
            if b.orientation == tuple(orientation):
                return b
        raise DomainError(f"no {r}-cells with orientation {orientation}")

    def displacement(self, r, point):
        """Minimal-image displacement of every r-cell barycenter from ``point``."""
        delta = self.barycenters[r] - np.asarray(point, dtype=float)
        periods = np.asarray(self.periods)
        return delta - periods * np.round(delta / periods)

    def distance(self, r, point):
        return np.linalg.norm(self.displacement(r, point), axis=1)

    def describe(self):
        return {
            "manifold": "circle" if self.dim == 1 else "torus",
            "shape": list(self.shape),
            "periods": [float(p) for p in self.periods],
            "counts": list(self.counts),
        }


def _block_barycenters(shape, spacing, orientation):
    axes = [np.arange(n, dtype=float) * h for n, h in zip(shape, spacing)]
    for axis in orientation:
        axes[axis - 1] = axes[axis - 1] + 0.5 * spacing[axis - 1]
    if len(shape) == 1:
        return axes[0][:, None]
    # index i + nx * j  ->  x varies fastest
    X, Y = np.meshgrid(axes[0], axes[1], indexing="xy")
    return np.column_stack([X.ravel(), Y.ravel()])


def _check_grid(n, name):
    if int(n) != n or n < MIN_CELLS_PER_AXIS:
        raise ConfigurationError(f"{name} must be an integer >= {MIN_CELLS_PER_AXIS}, got {n}")


def _check_period(L, name):
    if not L > 0:
        raise ConfigurationError(f"{name} must be positive, got {L}")


def build_circle_complex(n_cells, length=2 * math.pi):
    """Uniform periodic 1-complex with ``n_cells`` vertices and edges."""
    _check_grid(n_cells, "n_cells")
    _check_period(length, "length")
    n = int(n_cells)
    h = length / n
    idx = np.arange(n)
    d0 = sparse.csr_matrix(
        (np.r_[-np.ones(n), np.ones(n)], (np.r_[idx, idx], np.r_[idx, (idx + 1) % n])),
        shape=(n, n), dtype=np.int64,
    )
    return CellComplex(
        dim=1,
        shape=(n,),
        periods=(float(length),),
        blocks=((CellBlock((), 0, n),), (CellBlock((1,), 0, n),)),
        barycenters=(_block_barycenters((n,), (h,), ()), _block_barycenters((n,), (h,), (1,))),
        measures=(np.ones(n), np.full(n, h)),
        dual_measures=(np.full(n, h), np.ones(n)),
        incidence=(d0,),
    )


def build_torus_complex(nx, ny, Lx=2 * math.pi, Ly=2 * math.pi):
    """Uniform periodic cubical 2-complex on ``[0, Lx) x [0, Ly)``."""
    _check_grid(nx, "nx")
    _check_grid(ny, "ny")
    _check_period(Lx, "Lx")
    _check_period(Ly, "Ly")
    nx, ny = int(nx), int(ny)
    hx, hy = Lx / nx, Ly / ny
    m = nx * ny
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    i, j = i.ravel(), j.ravel()

    def v(a, b):
        return (a % nx) + nx * (b % ny)

    cell = v(i, j)
    xe = cell  # x-edges occupy [0, m), y-edges [m, 2m)
    ye = m + cell

    rows = np.r_[xe, xe, ye, ye]
    cols = np.r_[v(i, j), v(i + 1, j), v(i, j), v(i, j + 1)]
    vals = np.r_[-np.ones(m), np.ones(m), -np.ones(m), np.ones(m)]
    d0 = sparse.csr_matrix((vals, (rows, cols)), shape=(2 * m, m), dtype=np.int64)

    # boundary of face (i, j): xe(i,j) + ye(i+1,j) - xe(i,j+1) - ye(i,j)
    rows = np.r_[cell, cell, cell, cell]
    cols = np.r_[v(i, j), m + v(i + 1, j), v(i, j + 1), m + v(i, j)]
    vals = np.r_[np.ones(m), np.ones(m), -np.ones(m), -np.ones(m)]
    d1 = sparse.csr_matrix((vals, (rows, cols)), shape=(m, 2 * m), dtype=np.int64)

    shape, spacing = (nx, ny), (hx, hy)
    bary = (
        _block_barycenters(shape, spacing, ()),
        np.vstack([_block_barycenters(shape, spacing, (1,)), _block_barycenters(shape, spacing, (2,))]),
        _block_barycenters(shape, spacing, (1, 2)),
    )
    return CellComplex(
        dim=2,
        shape=shape,
        periods=(float(Lx), float(Ly)),
        blocks=(
            (CellBlock((), 0, m),),
            (CellBlock((1,), 0, m), CellBlock((2,), m, m)),
            (CellBlock((1, 2), 0, m),),
        ),
        barycenters=bary,
        measures=(np.ones(m), np.r_[np.full(m, hx), np.full(m, hy)], np.full(m, hx * hy)),
        dual_measures=(np.full(m, hx * hy), np.r_[np.full(m, hy), np.full(m, hx)], np.ones(m)),
        incidence=(d0, d1),
    )


# -- Morse functions ----------------------------------------------------------

_SMOOTHSTEP = Polynomial([0, 0, 0, 10, -15, 6])


@dataclass(frozen=True)
class MorseProfile1D:
    """Circle Morse function, exactly quadratic within ``rho0`` of its two critical points.

    ``f'`` equals ``+(x - min_pos)`` and ``-(x - max_pos)`` on the windows.  On
    each connector it is a quintic-smoothstep blend between the linear
    continuation of the window slope and a plateau; ``amplitude`` is the
    plateau of the ascending connector and the descending plateau is solved
    for so that ``f`` closes up periodically.
    """

    length: float
    min_pos: float
    max_pos: float
    rho0: float = 0.35
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.length > 0:
            raise ConstructionError(f"circle length must be positive, got {self.length}")
        if not self.rho0 > 0:
            raise ConstructionError(f"rho0 must be positive, got {self.rho0}")
        if not self.amplitude > 0:
            raise ConstructionError(f"amplitude must be positive, got {self.amplitude}")
        gap = self.separation
        if gap - 2 * self.rho0 <= 0 or self.length - gap - 2 * self.rho0 <= 0:
            raise ConstructionError(
                f"windows of radius {self.rho0} around {self.min_pos} and {self.max_pos} overlap"
            )
        if self.descending_amplitude <= 0:
            raise ConstructionError(
                "periodic closure needs a negative plateau slope; increase amplitude or move the critical points"
            )

    @property
    def separation(self):
        return (self.max_pos - self.min_pos) % self.length

    @property
    def _bridges(self):
        return self.separation - 2 * self.rho0, self.length - self.separation - 2 * self.rho0

    def _rise(self, bridge, amp):
        half = bridge / 2
        return half * (self.rho0 + amp) + 2 * half * half / 7

    @property
    def descending_amplitude(self):
        up, down = self._bridges
        half = down / 2
        return (self._rise(up, self.amplitude) - 2 * half * half / 7) / half - self.rho0

    @property
    def peak(self):
        """``f(max_pos) - f(min_pos)``."""
        return self.rho0 ** 2 + self._rise(self._bridges[0], self.amplitude)

    @property
    def connector_slope_bound(self):
        """Lower bound of ``|f'|`` outside both windows."""
        return min(self.rho0, self.amplitude, self.descending_amplitude)

    def _half_antiderivative(self, bridge, amp):
        half = bridge / 2
        integrand = (1 - _SMOOTHSTEP) * Polynomial([self.rho0, half]) + _SMOOTHSTEP * amp
        return (integrand * half).integ()

    def _bridge(self, s, bridge, amp):
        """Value and derivative along a connector at arc length ``s``."""
        half = bridge / 2
        G = self._half_antiderivative(bridge, amp)
        total = 2 * G(1.0)
        m = np.minimum(s, bridge - s)
        sigma = m / half
        S = _SMOOTHSTEP(sigma)
        slope = (1 - S) * (self.rho0 + m) + S * amp
        value = np.where(s <= half, G(sigma), total - G(sigma))
        return value, slope

    def _evaluate(self, x):
        x = np.asarray(x, dtype=float)
        L, rho0, d = self.length, self.rho0, self.separation
        up, down = self._bridges
        u = np.mod(x - self.min_pos, L)
        value = np.empty_like(u)
        slope = np.empty_like(u)

        left = u <= rho0
        value[left], slope[left] = 0.5 * u[left] ** 2, u[left]
        right = u >= L - rho0
        w = u[right] - L
        value[right], slope[right] = 0.5 * w ** 2, w
        top = np.abs(u - d) <= rho0
        w = u[top] - d
        value[top], slope[top] = self.peak - 0.5 * w ** 2, -w

        asc = (u > rho0) & (u < d - rho0)
        bv, bs = self._bridge(u[asc] - rho0, up, self.amplitude)
        value[asc], slope[asc] = 0.5 * rho0 ** 2 + bv, bs
        desc = (u > d + rho0) & (u < L - rho0)
        bv, bs = self._bridge(u[desc] - d - rho0, down, self.descending_amplitude)
        value[desc], slope[desc] = self.peak - 0.5 * rho0 ** 2 - bv, -bs
        return value, slope

    def __call__(self, x):
        return self._evaluate(x)[0]

    def derivative(self, x):
        return self._evaluate(x)[1]

    def params(self):
        return {
            "length": self.length, "min_pos": self.min_pos, "max_pos": self.max_pos,
            "rho0": self.rho0, "amplitude": self.amplitude,
        }


@dataclass(frozen=True)
class CriticalPoint:
    """Critical point with its Morse index and exact quadratic-window radius.

    ``hessian_signs`` lists the Hessian sign along each grid axis, so the
    normal form near ``location`` is ``sum_i hessian_signs[i] * dx_i^2 / 2``.
    """

    location: tuple
    index: int
    radius: float
    hessian_signs: tuple

    def normal_form(self, displacement):
        displacement = np.asarray(displacement, dtype=float)
        return 0.5 * np.sum(np.asarray(self.hessian_signs) * displacement ** 2, axis=-1)


@dataclass(eq=False)
class ScalarField:
    """Morse function sampled at every cell barycenter, plus critical-point metadata."""

    complex: CellComplex
    values: tuple  # values[r] -> array over r-cells
    critical_points: list
    function: object = None  # callable on (m, dim) point arrays, when known
    gradient: object = None
    params: dict = field(default_factory=dict)

    def value_at(self, point):
        return float(self.function(np.atleast_2d(np.asarray(point, dtype=float)))[0])

    def window_mask(self, r, point_index=None):
        """Cells of degree r lying inside some (or one given) quadratic window."""
        cps = self.critical_points if point_index is None else [self.critical_points[point_index]]
        mask = np.zeros(self.complex.n_cells(r), dtype=bool)
        for cp in cps:
            disp = self.complex.displacement(r, cp.location)
            mask |= np.all(np.abs(disp) <= cp.radius, axis=1)
        return mask

    def normal_form_defect(self, r=None):
        """Max ``|f - f(p) - normal form|`` over cells inside the windows."""
        degrees = range(self.complex.dim + 1) if r is None else [r]
        worst = 0.0
        for deg in degrees:
            for cp in self.critical_points:
                disp = self.complex.displacement(deg, cp.location)
                inside = np.all(np.abs(disp) <= cp.radius, axis=1)
                if not inside.any():
                    continue
                base = self.value_at(cp.location)
                defect = self.values[deg][inside] - base - cp.normal_form(disp[inside])
                worst = max(worst, float(np.max(np.abs(defect))))
        return worst

    def critical_point_table(self):
        """Morse numbers ``(m_0, ..., m_n)``."""
        counts = [0] * (self.complex.dim + 1)
        for cp in self.critical_points:
            counts[cp.index] += 1
        return tuple(counts)

    def describe(self):
        return {
            "params": self.params,
            "critical_points": [
                {"location": list(map(float, cp.location)), "index": cp.index, "radius": cp.radius}
                for cp in self.critical_points
            ],
        }


def _sample(complex, fn):
    return tuple(fn(complex.barycenters[r]) for r in range(complex.dim + 1))


def blended_morse_function_1d(complex, min_pos, max_pos, rho0=0.35, amplitude=1.0):
    """Two-critical-point circle Morse function with exact quadratic windows."""
    if complex.dim != 1:
        raise ConfigurationError("blended_morse_function_1d needs a circle complex")
    profile = MorseProfile1D(complex.periods[0], float(min_pos), float(max_pos), float(rho0), float(amplitude))

    def fn(points):
        return profile(np.asarray(points)[:, 0])

    def grad(points):
        return profile.derivative(np.asarray(points)[:, 0])[:, None]

    cps = [
        CriticalPoint((profile.min_pos,), 0, profile.rho0, (1,)),
        CriticalPoint((profile.max_pos % profile.length,), 1, profile.rho0, (-1,)),
    ]
    params = {"kind": "blended_1d", **profile.params(), "connector_slope_bound": profile.connector_slope_bound}
    return ScalarField(complex, _sample(complex, fn), cps, fn, grad, params)


def product_morse_function_2d(complex, phi_x, phi_y):
    """``f(x, y) = phi_x(x) + phi_y(y)`` on the torus from two circle profiles."""
    if complex.dim != 2:
        raise ConfigurationError("product_morse_function_2d needs a torus complex")
    for prof, period, name in ((phi_x, complex.periods[0], "phi_x"), (phi_y, complex.periods[1], "phi_y")):
        if not math.isclose(prof.length, period):
            raise ConstructionError(f"{name} has length {prof.length} but the torus period is {period}")

    def fn(points):
        points = np.asarray(points)
        return phi_x(points[:, 0]) + phi_y(points[:, 1])

    def grad(points):
        points = np.asarray(points)
        return np.column_stack([phi_x.derivative(points[:, 0]), phi_y.derivative(points[:, 1])])

    radius = min(phi_x.rho0, phi_y.rho0)
    cps = []
    for xpos, sx in ((phi_x.min_pos, 1), (phi_x.max_pos % phi_x.length, -1)):
        for ypos, sy in ((phi_y.min_pos, 1), (phi_y.max_pos % phi_y.length, -1)):
            index = (sx < 0) + (sy < 0)
            cps.append(CriticalPoint((xpos, ypos), int(index), radius, (sx, sy)))
    cps.sort(key=lambda cp: cp.index)
    params = {
        "kind": "product_2d",
        "phi_x": phi_x.params(),
        "phi_y": phi_y.params(),
        "connector_slope_bound": min(phi_x.connector_slope_bound, phi_y.connector_slope_bound),
    }
    return ScalarField(complex, _sample(complex, fn), cps, fn, grad, params)


def constant_field(complex, value=0.0):
    return ScalarField(
        complex,
        tuple(np.full(complex.n_cells(r), float(value)) for r in range(complex.dim + 1)),
        [],
        lambda pts: np.full(len(pts), float(value)),
        lambda pts: np.zeros_like(np.asarray(pts, dtype=float)),
        {"kind": "constant", "value": float(value)},
    )


# -- deformed coboundary ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DeformedCoboundary:
    """Sparse ``d_k = e^{-kf} d e^{kf}`` from r-cochains to (r+1)-cochains."""

    k: float
    r: int
    matrix: sparse.csr_matrix


def local_differences(complex, f, r):
    """``f(sigma_r) - f(sigma_{r+1})`` for every nonzero incidence pair, in CSR order."""
    inc = complex.incidence[r].tocsr()
    rows = np.repeat(np.arange(inc.shape[0]), np.diff(inc.indptr))
    return f.values[r][inc.indices] - f.values[r + 1][rows]


def max_admissible_k(complex, f):
    """Largest k keeping every local exponent below the overflow guard."""
    worst = max(
        (float(np.max(np.abs(local_differences(complex, f, r)))) for r in range(complex.dim)),
        default=0.0,
    )
    return math.inf if worst == 0.0 else EXP_GUARD / worst


def deformed_coboundary(complex, f, k, r):
    """Conjugated coboundary built entrywise from local exponent differences.

    Entry ``(sigma_{r+1}, sigma_r)`` is ``inc * exp(k (f(sigma_r) - f(sigma_{r+1})))``;
    no global ``e^{kf}`` is formed, so only ``k * max|local difference|`` is bounded.
    """
    if not k >= 0:
        raise DomainError(f"k must be non-negative, got {k}")
    if not 0 <= r < complex.dim:
        raise DomainError(f"coboundary degree must lie in [0, {complex.dim - 1}], got {r}")
    inc = complex.incidence[r].tocsr()
    if f is None or k == 0:
        data = inc.data.astype(float)
    else:
        diff = local_differences(complex, f, r)
        worst = float(np.max(np.abs(diff)))
        if k * worst > EXP_GUARD:
            limit = max_admissible_k(complex, f)
            raise OverflowGuardError(
                f"k={k} exceeds the overflow guard (k * max local difference = {k * worst:.1f} > {EXP_GUARD}); "
                f"max admissible k for this grid is {limit:.6g}",
                limit,
            )
        data = inc.data * np.exp(k * diff)
    matrix = sparse.csr_matrix((data, inc.indices.copy(), inc.indptr.copy()), shape=inc.shape)
    return DeformedCoboundary(float(k), r, matrix)


# -- CSV interchange ----------------------------------------------------------


def write_scalar_field_csv(f, path):
    """Write ``degree, cell_id, coords..., value`` rows with critical points in comment lines."""
    cx = f.complex
    coords = ["x", "y"][: cx.dim]
    with open(path, "w", newline="") as fh:
        fh.write("# complex: " + json.dumps(cx.describe(), sort_keys=True) + "\n")
        for cp in f.critical_points:
            fh.write(
                "# critical_point: "
                + json.dumps(
                    {"location": list(cp.location), "index": cp.index, "radius": cp.radius,
                     "hessian_signs": list(cp.hessian_signs)},
                    sort_keys=True,
                )
                + "\n"
            )
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["degree", "cell_id"] + [f"{c}[length]" for c in coords] + ["value[-]"])
        for r in range(cx.dim + 1):
            for i, (bc, val) in enumerate(zip(cx.barycenters[r], f.values[r])):
                writer.writerow([r, i] + [repr(float(c)) for c in bc] + [repr(float(val))])


def read_scalar_field_csv(path, complex, atol=1e-9):
    """Read a field written by :func:`write_scalar_field_csv` onto a matching complex."""
    values = [np.full(complex.n_cells(r), np.nan) for r in range(complex.dim + 1)]
    cps = []
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("# critical_point: "):
            d = json.loads(line[len("# critical_point: "):])
            cps.append(CriticalPoint(tuple(d["location"]), int(d["index"]), float(d["radius"]),
                                     tuple(d["hessian_signs"])))
        elif not line.startswith("#"):
            body.append(line)
    reader = csv.reader(body)
    next(reader)
    for row in reader:
        r, i = int(row[0]), int(row[1])
        coords = np.array([float(c) for c in row[2:2 + complex.dim]])
        if r > complex.dim or i >= complex.n_cells(r):
            raise ConfigurationError(f"cell ({r}, {i}) does not exist in the target complex")
        if not np.allclose(coords, complex.barycenters[r][i], atol=atol):
            raise ConfigurationError(f"barycenter mismatch for cell ({r}, {i})")
        values[r][i] = float(row[-1])
    if any(np.isnan(v).any() for v in values):
        raise ConfigurationError("field CSV does not cover every cell")
    return ScalarField(complex, tuple(values), cps, None, None, {"kind": "imported", "source": str(path)})
