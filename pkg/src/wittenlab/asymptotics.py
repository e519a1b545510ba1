"""Numerical experiments on the semi-classical behaviour of Witten heat kernels.

Points passed to the probes are in model coordinates: the cell at distance
``x / sqrt(k)`` from a critical point corresponds to the model point ``x``.
Off-node kernel values come from tensor-product four-point Lagrange
interpolation on the orientation block of the requested component; the
difference to linear interpolation is reported as the interpolation residual.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError, DomainError, ProbeError, ResolutionError
from .model_oscillator import axis_kernel_component, axis_sign_profile, oscillator_heat_kernel
from .report import ExperimentReport
from .spectral import (
    SpectrumCache,
    assemble_witten_laplacian,
    heat_kernel_diagonal,
)

DEFAULT_EPS = 0.25


def _component(complex, r, component):
    blocks = complex.blocks[r]
    if component is None:
        if len(blocks) != 1:
            raise DomainError(f"degree {r} has several components; pass component explicitly")
        return blocks[0]
    return complex.block(r, tuple(component))


def _lagrange_weights(s, order):
    if order == "linear":
        return np.array([0.0, 1 - s, s, 0.0])
    return np.array([
        -s * (s - 1) * (s - 2) / 6,
        (s + 1) * (s - 1) * (s - 2) / 2,
        -(s + 1) * s * (s - 2) / 2,
        (s + 1) * s * (s - 1) / 6,
    ])


def interpolation_stencil(complex, block, point, order="cubic"):
    """Cell indices and weights interpolating a block-grid function at ``point``.

    Returns ``(indices, weights, nearest_distance)``.
    """
    point = np.asarray(point, dtype=float)
    per_axis = []
    nearest = 0.0
    for axis, (n, L) in enumerate(zip(complex.shape, complex.periods)):
        h = L / n
        shift = 0.5 * h if (axis + 1) in block.orientation else 0.0
        pos = ((point[axis] - shift) % L) / h
        base = math.floor(pos)
        s = pos - base
        nearest = max(nearest, min(s, 1 - s) * h)
        idx = (base - 1 + np.arange(4)) % n
        per_axis.append((idx, _lagrange_weights(s, order)))
    if complex.dim == 1:
        idx, w = per_axis[0]
        return block.offset + idx, w, nearest
    (ix, wx), (iy, wy) = per_axis
    idx = (ix[None, :] + complex.shape[0] * iy[:, None]).ravel()
    w = (wx[None, :] * wy[:, None]).ravel()
    return block.offset + idx, w, nearest


def _interp_rows(dec, block, points, order):
    cx = dec.complex
    modes = dec.modes
    rows = np.empty((len(points), modes.shape[1]))
    nearest = 0.0
    for i, pt in enumerate(points):
        idx, w, d = interpolation_stencil(cx, block, pt, order)
        rows[i] = w @ modes[idx]
        nearest = max(nearest, d)
    return rows, nearest


def _physical_points(p, k, points, check_window):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != len(p.location):
        raise ProbeError(f"points must have dimension {len(p.location)}")
    offsets = pts / math.sqrt(k)
    if check_window and np.any(np.abs(offsets) > p.radius):
        worst = float(np.max(np.abs(offsets)))
        raise ProbeError(
            f"scaled probe offset {worst:.4g} leaves the quadratic window of radius {p.radius} at k={k}"
        )
    return np.asarray(p.location, dtype=float) + offsets


def scaled_kernel_matrix(dec, p, k, t, x_points, y_points=None, component=None,
                         check_window=True, order="cubic", return_info=False):
    """``A_(k)(t, x, y) = k^{-n/2} e^{-(t/k) Delta_k}(p + x/sqrt(k), p + y/sqrt(k))`` over point pairs."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if not math.isclose(dec.k, k, rel_tol=1e-12, abs_tol=1e-12):
        raise DomainError(f"decomposition was built for k={dec.k}, not k={k}")
    y_points = x_points if y_points is None else y_points
    cx = dec.complex
    block = _component(cx, dec.degree, component)
    px = _physical_points(p, k, x_points, check_window)
    py = _physical_points(p, k, y_points, check_window)
    decay = np.exp(-(t / k) * dec.eigenvalues)
    pref = k ** (-cx.dim / 2)
    rx, nx = _interp_rows(dec, block, px, order)
    ry, ny = _interp_rows(dec, block, py, order)
    values = pref * (rx * decay) @ ry.T
    if not return_info:
        return values
    other = "linear" if order != "linear" else "cubic"
    lx, _ = _interp_rows(dec, block, px, other)
    ly, _ = _interp_rows(dec, block, py, other)
    residual = float(np.max(np.abs(values - pref * (lx * decay) @ ly.T)))
    return values, {"nearest_distance": max(nx, ny), "interpolation_residual": residual}


def scaled_kernel(dec, p, k, t, x, y, component=None, check_window=True, order="cubic"):
    """Scaled heat kernel at a single model-coordinate pair."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return float(scaled_kernel_matrix(dec, p, k, t, [x], [y], component, check_window, order)[0, 0])


def model_reference(p, component, t, x_points, y_points=None):
    """Model kernel ``e^{-t Delta_{f,p}^I}`` over point pairs, axes in grid order."""
    y_points = x_points if y_points is None else y_points
    signs = axis_sign_profile(p.hessian_signs, component)
    X = np.atleast_2d(np.asarray(x_points, dtype=float))
    Y = np.atleast_2d(np.asarray(y_points, dtype=float))
    return axis_kernel_component(signs, t, X[:, None, :], Y[None, :, :])


def _base_manifest(complex, f, **extra):
    out = {"grid": complex.describe(), "f": f.describe() if f is not None else None}
    out.update(extra)
    return out


def _point_list(point_grid, dim):
    grid = np.asarray(point_grid, dtype=float)
    if grid.ndim == 1:
        axes = [grid] * dim
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])
    return grid


def convergence_report(complex, f, p, r, k_list, t_list, point_grid, component=None, cache=None,
                       rel_tol=0.05, max_scaled_spacing=0.05, order="cubic"):
    """Sampled sup-norm distance between the scaled kernel and the model kernel.

    ``point_grid`` is either a 1D array of axis samples (tensorized to all
    model points) or an explicit ``(m, n)`` point list; the sup runs over all
    ordered pairs.  Points must lie in the quadratic window at the largest k.
    """
    k_list = [float(k) for k in k_list]
    if any(b <= a for a, b in zip(k_list, k_list[1:])):
        raise ConfigurationError("k_list must be strictly increasing")
    cache = cache or SpectrumCache()
    r = int(r)
    block = _component(complex, r, component)
    I = block.orientation
    points = _point_list(point_grid, complex.dim)
    _physical_points(p, k_list[-1], points, check_window=True)
    h = complex.max_spacing
    for k in k_list:
        if math.sqrt(k) * h > max_scaled_spacing:
            raise ResolutionError(
                f"sqrt(k) * h = {math.sqrt(k) * h:.4g} exceeds {max_scaled_spacing} at k={k}; refine the grid"
            )
    report = ExperimentReport(
        "convergence",
        [("k", ""), ("t", "time"), ("sup_abs_error", "density"), ("model_sup", "density"),
         ("rel_error", "-"), ("scaled_spacing", "-"), ("nearest_node_distance", "length"),
         ("interpolation_residual", "density"), ("points_in_window", "-")],
        manifest=_base_manifest(complex, f, critical_point=list(p.location), index=p.index,
                                degree=r, component=list(I), order=order),
    )
    by_t = {float(t): [] for t in t_list}
    for k in k_list:
        dec = cache.get(complex, f, k, r)
        in_window = bool(np.all(np.abs(points) / math.sqrt(k) <= p.radius))
        for t in t_list:
            measured, info = scaled_kernel_matrix(dec, p, k, t, points, component=I, check_window=False,
                                                  order=order, return_info=True)
            ref = model_reference(p, I, t, points)
            err = float(np.max(np.abs(measured - ref)))
            sup = float(np.max(np.abs(ref)))
            by_t[float(t)].append(err / sup)
            report.add_row(k=k, t=float(t), sup_abs_error=err, model_sup=sup, rel_error=err / sup,
                           scaled_spacing=math.sqrt(k) * h, nearest_node_distance=info["nearest_distance"],
                           interpolation_residual=info["interpolation_residual"], points_in_window=in_window)
    for t, errs in by_t.items():
        mono = all(b < a for a, b in zip(errs, errs[1:]))
        report.add_check(f"MONOTONE t={t:g}", mono, " > ".join(f"{e:.3e}" for e in errs))
        report.add_check(f"FINAL t={t:g}", errs[-1] < rel_tol, f"rel error {errs[-1]:.3e} < {rel_tol}")
    return report


def heat_equation_check(dec, p, k, t, points, component=None, dt=1e-3, dx=0.1, rel_tol=1e-3, order="cubic"):
    """Finite-difference check that the scaled kernel solves the model heat equation in ``(t, x)``.

    Compares ``dA/dt`` (central difference in t) with ``-Delta_model A``
    (five-point second differences in x, step ``dx`` in model units) at the
    pairs ``(x, x)``, differentiating in the first argument only.  Returns
    ``(relative_residual, passed)``.
    """
    block = _component(dec.complex, dec.degree, component)
    signs = axis_sign_profile(p.hessian_signs, block.orientation)
    pts = _point_list(points, dec.complex.dim)
    n = dec.complex.dim

    def A(tt, xs, ys):
        return np.diag(scaled_kernel_matrix(dec, p, k, tt, xs, ys, block.orientation, order=order))

    dA_dt = (A(t + dt, pts, pts) - A(t - dt, pts, pts)) / (2 * dt)
    centre = A(t, pts, pts)
    lap = np.zeros_like(centre)
    for i in range(n):
        e = np.zeros(n)
        e[i] = dx
        lap += (-A(t, pts + 2 * e, pts) + 16 * A(t, pts + e, pts) - 30 * centre
                + 16 * A(t, pts - e, pts) - A(t, pts - 2 * e, pts)) / (12 * dx ** 2)
    model_op = -lap + (np.sum(pts ** 2, axis=1) + sum(signs)) * centre
    resid = float(np.max(np.abs(dA_dt + model_op)) / np.max(np.abs(dA_dt)))
    return resid, resid < rel_tol


def scaling_identity_check(complex, f, p, k, r, component=None, width=1.0 / 3.0, factor=2.0):
    """Apply ``Delta_k`` to k-scaled Gaussian samples and compare with k times the model operator.

    The test function is ``G(X) = exp(-width |X|^2)`` in model coordinates,
    placed in component ``I``.  Returns ``(error, tolerance, cross_component)``
    where the error is relative to ``k max|L G|`` over window cells, the
    tolerance is ``factor * (h^2 + k h^2)`` and ``cross_component`` is the
    largest relative leakage into the other orientation blocks.
    """
    block = _component(complex, r, component)
    signs = np.asarray(axis_sign_profile(p.hessian_signs, block.orientation))
    op = assemble_witten_laplacian(complex, f, k, r)
    disp = complex.displacement(r, p.location)
    X = disp * math.sqrt(k)
    G = np.exp(-width * np.sum(X ** 2, axis=1))
    coeff = np.zeros(complex.n_cells(r))
    sl = slice(block.offset, block.offset + block.size)
    coeff[sl] = G[sl]
    cochain = coeff * complex.measures[r]
    applied = (op.matrix @ cochain) / complex.measures[r]
    a = width
    LG = (np.sum((1 - 4 * a * a) * X ** 2, axis=1) + 2 * a * complex.dim + signs.sum()) * G
    target = k * LG
    inside = np.all(np.abs(disp) <= p.radius, axis=1)
    own = np.zeros(complex.n_cells(r), dtype=bool)
    own[sl] = True
    scale = float(np.max(np.abs(target[own & inside])))
    err = float(np.max(np.abs(applied - target)[own & inside])) / scale
    others = inside & ~own
    cross = float(np.max(np.abs(applied[others]))) / scale if others.any() else 0.0
    h = complex.max_spacing
    return err, factor * (h * h + k * h * h), cross


def annulus_decay_probe(decs, p, D, t, radii=None, eps=DEFAULT_EPS, n0=4.0, component=None,
                        direction=None, n_radii=8):
    """Diagonal scaled kernel on ``B_{k^eps} minus B_{2D}`` and its log-log slope, per k.

    ``decs`` maps k to the decomposition of ``Delta_k^{(r)}``.
    """
    if not D > 1:
        raise ConfigurationError(f"D must exceed 1, got {D}")
    if not hasattr(decs, "items"):
        decs = {dec.k: dec for dec in decs}
    first = next(iter(decs.values()))
    cx = first.complex
    block = _component(cx, first.degree, component)
    direction = np.eye(cx.dim)[0] if direction is None else np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    report = ExperimentReport(
        "annulus_decay",
        [("k", ""), ("t", "time"), ("radius", "model length"), ("value", "density"), ("scaled_offset", "length")],
        manifest={"grid": cx.describe(), "critical_point": list(p.location), "index": p.index,
                  "degree": first.degree, "component": list(block.orientation), "eps": eps, "D": D, "N0": n0},
    )
    for k, dec in sorted(decs.items()):
        lo, hi = 2 * D, k ** eps
        if radii is None:
            rs = np.linspace(lo, hi, n_radii) if hi > lo else np.array([])
        else:
            rs = np.asarray([x for x in radii if lo <= x <= hi], dtype=float)
        if rs.size < 2:
            raise ConfigurationError(f"no admissible radii in [2D, k^eps] = [{lo:.4g}, {hi:.4g}] at k={k}")
        pts = rs[:, None] * direction[None, :]
        values = np.diag(scaled_kernel_matrix(dec, p, k, t, pts, component=block.orientation))
        for rad, val in zip(rs, values):
            report.add_row(k=float(k), t=float(t), radius=float(rad), value=float(val),
                           scaled_offset=float(rad / math.sqrt(k)))
        mono = bool(np.all(np.diff(np.abs(values)) < 0))
        report.add_check(f"MONOTONE k={k:g}", mono)
        if np.all(values > 0):
            slope = float(np.polyfit(np.log(rs), np.log(values), 1)[0])
            report.add_check(f"SLOPE k={k:g}", slope <= -n0, f"slope {slope:.3f} <= -{n0:g}")
        else:
            report.add_check(f"SLOPE k={k:g}", None, "non-positive diagonal values; slope undefined")
    return report


def far_field_mask(complex, f, r, k, eps=DEFAULT_EPS):
    """Cells of degree r outside every ball ``B_{k^{-1/2+eps}}`` around a critical point."""
    radius = k ** (eps - 0.5)
    outside = np.ones(complex.n_cells(r), dtype=bool)
    for cp in f.critical_points:
        outside &= complex.distance(r, cp.location) >= radius
    return outside


def far_field_decay_probe(complex, f, r, k_list, t, eps=DEFAULT_EPS, factor=10.0, cache=None):
    """Sup of the diagonal kernel density off the shrinking critical windows, per k.

    The check requires a shrink of at least ``factor`` per quadrupling of k.
    """
    k_list = [float(k) for k in k_list]
    if any(b <= a for a, b in zip(k_list, k_list[1:])):
        raise ConfigurationError("k_list must be strictly increasing")
    cache = cache or SpectrumCache()
    report = ExperimentReport(
        "far_field_decay",
        [("k", ""), ("t", "time"), ("window_radius", "length"), ("sup_value", "density"),
         ("argmax_cell", ""), ("n_cells_outside", "")],
        manifest=_base_manifest(complex, f, degree=r, eps=eps, factor=factor),
    )
    sups = []
    for k in k_list:
        mask = far_field_mask(complex, f, r, k, eps)
        if not mask.any():
            raise ConfigurationError(f"critical windows cover the whole complex at k={k}")
        diag = heat_kernel_diagonal(cache.get(complex, f, k, r), t / k)
        masked = np.where(mask, diag, -np.inf)
        arg = int(np.argmax(masked))
        sups.append(float(masked[arg]))
        report.add_row(k=k, t=float(t), window_radius=k ** (eps - 0.5), sup_value=sups[-1],
                       argmax_cell=arg, n_cells_outside=int(mask.sum()))
    for (k1, v1), (k2, v2) in zip(zip(k_list, sups), zip(k_list[1:], sups[1:])):
        need = factor ** (math.log(k2 / k1) / math.log(4.0))
        ratio = v1 / v2 if v2 > 0 else math.inf
        report.add_check(f"SHRINK k={k1:g}->{k2:g}", ratio >= need, f"ratio {ratio:.3f} >= {need:.3f}")
    return report


def rayleigh_quotient(op, cochain):
    """``(Delta omega | omega) / (omega | omega)`` in the Hodge inner product."""
    cochain = np.asarray(cochain, dtype=float)
    w = op.inner.weights[op.r]
    norm2 = float(np.sum(w * cochain * cochain))
    if norm2 == 0.0:
        raise DomainError("Rayleigh quotient undefined for the zero cochain")
    psi = np.sqrt(w) * cochain
    return float(psi @ (op.symmetric @ psi)) / norm2


def annulus_mask(complex, p, r, k, x_norm, eps=DEFAULT_EPS):
    inner = x_norm / (2 * math.sqrt(k))
    outer = k ** (eps - 0.5)
    dist = complex.distance(r, p.location)
    return (dist >= inner) & (dist <= outer), inner, outer


def bochner_rayleigh_check(complex, f, k, p, x_norm, trials=50, r=0, eps=DEFAULT_EPS, slack=0.1,
                           constant=0.25, seed=0):
    """Rayleigh quotients of random annulus-supported cochains divided by ``k |x|^2``.

    Trials are random superpositions of Gaussian bumps centred in the discrete
    annulus, Hodge-normalized.  Two extra rows are appended: the smallest
    eigenvalue of the operator restricted to the annulus (the exact infimum,
    ``restricted_min``) and that of its zeroth-order part ``Delta_k - Delta_0``
    (``potential_floor``), which carries the ``1/4 - O(1/|x|^2)`` lower bound.
    """
    mask, inner, outer = annulus_mask(complex, p, r, k, x_norm, eps)
    if outer > p.radius:
        raise ConfigurationError(
            f"annulus outer radius {outer:.4g} exceeds the quadratic window radius {p.radius}"
        )
    if not mask.any() or inner >= outer:
        raise ConfigurationError(
            f"empty discrete annulus [{inner:.4g}, {outer:.4g}] for |x|={x_norm}, k={k}, eps={eps}"
        )
    op = assemble_witten_laplacian(complex, f, k, r)
    rng = np.random.default_rng(seed)
    cells = np.flatnonzero(mask)
    bary = complex.barycenters[r]
    width = max((outer - inner) / 4, complex.max_spacing)
    threshold = constant * (1 - slack)
    report = ExperimentReport(
        "bochner",
        [("trial", ""), ("k", ""), ("x_norm", "model length"), ("rayleigh", "1/length^2"), ("ratio", "-")],
        manifest=_base_manifest(complex, f, critical_point=list(p.location), degree=r, eps=eps,
                                seed=seed, annulus=[inner, outer], slack=slack),
    )
    scale = k * x_norm ** 2
    ratios = []
    for trial in range(trials):
        centres = rng.choice(cells, size=min(4, cells.size), replace=True)
        amps = rng.standard_normal(centres.size)
        coeff = np.zeros(complex.n_cells(r))
        for c, a in zip(centres, amps):
            disp = bary - bary[c]
            disp -= np.asarray(complex.periods) * np.round(disp / np.asarray(complex.periods))
            coeff += a * np.exp(-np.sum(disp ** 2, axis=1) / (2 * width ** 2))
        coeff[~mask] = 0.0
        cochain = coeff * complex.measures[r]
        w = op.inner.weights[r]
        cochain /= math.sqrt(float(np.sum(w * cochain * cochain)))
        rq = rayleigh_quotient(op, cochain)
        ratios.append(rq / scale)
        report.add_row(trial=trial, k=float(k), x_norm=float(x_norm), rayleigh=rq, ratio=rq / scale)
    sub = op.symmetric[cells][:, cells].toarray()
    restricted = float(np.linalg.eigvalsh(sub)[0]) / scale
    report.add_row(trial="restricted_min", k=float(k), x_norm=float(x_norm), rayleigh=restricted * scale,
                   ratio=restricted)
    # zeroth-order part only: the deformation minus the plain Laplacian
    plain = assemble_witten_laplacian(complex, f, 0.0, r).symmetric
    potential = (op.symmetric - plain)[cells][:, cells].toarray()
    floor = float(np.linalg.eigvalsh(potential)[0]) / scale
    report.add_row(trial="potential_floor", k=float(k), x_norm=float(x_norm), rayleigh=floor * scale,
                   ratio=floor)
    report.add_check("BOCHNER trials", min(ratios) >= threshold, f"min ratio {min(ratios):.4f} >= {threshold:.4f}")
    report.add_check("BOCHNER infimum", restricted >= threshold, f"restricted ratio {restricted:.4f} >= {threshold:.4f}")
    return report


def model_diagonal(sign, t, x):
    """Convenience: diagonal of a single 1D oscillator kernel."""
    return oscillator_heat_kernel(sign, t, x, x)
