"""Witten Laplacians on cubical complexes and their dense spectral calculus.

Cochains carry the diagonal Hodge inner product ``w_r = dual measure /
primal measure``.  With ``B_r = W_{r+1}^{1/2} d_{k,r} W_r^{-1/2}`` the
Laplacian is similar to the sum of squares ``B_r^T B_r + B_{r-1} B_{r-1}^T``,
which is what gets diagonalized.

Kernel densities are reported in the coefficient frame: an r-cochain value
divided by the cell measure is the coefficient of ``dx^I``, and the cell
volume element is ``measure * dual measure``.
"""

from __future__ import annotations

import logging
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .complex import deformed_coboundary
from .errors import DomainError, EigensolverError, GapAmbiguityError

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class HodgeInner:
    """Per-degree diagonal weights of the cochain inner product."""

    weights: tuple
    volumes: tuple

    def inner(self, r, a, b):
        return float(np.sum(self.weights[r] * a * b))


def hodge_inner(complex):
    weights = tuple(complex.dual_measures[r] / complex.measures[r] for r in range(complex.dim + 1))
    volumes = tuple(complex.dual_measures[r] * complex.measures[r] for r in range(complex.dim + 1))
    return HodgeInner(weights, volumes)


@dataclass(eq=False)
class WittenOperator:
    """Assembled ``Delta_k^{(r)}`` with its symmetric (weight-similar) form."""

    complex: object
    scalar_field: object
    k: float
    r: int
    matrix: sparse.csr_matrix  # acts on cochains
    symmetric: sparse.csr_matrix  # W^{1/2} Delta W^{-1/2}
    inner: HodgeInner

    @property
    def size(self):
        return self.matrix.shape[0]


def _scaled_coboundary(complex, f, k, r, inner):
    d = deformed_coboundary(complex, f, k, r).matrix
    left = sparse.diags(np.sqrt(inner.weights[r + 1]))
    right = sparse.diags(1.0 / np.sqrt(inner.weights[r]))
    return (left @ d @ right).tocsr(), d


def assemble_witten_laplacian(complex, f, k, r):
    """``Delta_k^{(r)} = d_k^* d_k + d_k d_k^*`` with adjoints from the Hodge inner product."""
    if not 0 <= r <= complex.dim:
        raise DomainError(f"degree r={r} outside [0, {complex.dim}]")
    inner = hodge_inner(complex)
    n = complex.n_cells(r)
    sym = sparse.csr_matrix((n, n))
    if r < complex.dim:
        B, _ = _scaled_coboundary(complex, f, k, r, inner)
        sym = sym + B.T @ B
    if r > 0:
        B, _ = _scaled_coboundary(complex, f, k, r - 1, inner)
        sym = sym + B @ B.T
    sym = sym.tocsr()
    root = np.sqrt(inner.weights[r])
    matrix = (sparse.diags(1.0 / root) @ sym @ sparse.diags(root)).tocsr()
    return WittenOperator(complex, f, float(k), r, matrix, sym, inner)


@dataclass(eq=False)
class SpectralDecomposition:
    """Full eigensystem of one ``Delta_k^{(r)}``; eigenvectors are Hodge-orthonormal cochains."""

    degree: int
    k: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, cochain basis
    measures: np.ndarray
    volumes: np.ndarray
    weights: np.ndarray
    operator_norm: float
    complex: object = None
    scalar_field: object = None
    metadata: dict = field(default_factory=dict)

    @property
    def modes(self):
        """Eigenvectors as ``dx^I`` coefficients (density frame)."""
        cached = self.metadata.get("_modes")
        if cached is None:
            cached = self.eigenvectors / self.measures[:, None]
            self.metadata["_modes"] = cached
        return cached

    def __len__(self):
        return self.eigenvalues.size


def _fix_signs(vectors):
    scale = np.max(np.abs(vectors), axis=0)
    significant = np.abs(vectors) > 1e-8 * scale
    first = np.argmax(significant, axis=0)
    signs = np.sign(vectors[first, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _dump(op):
    fd, path = tempfile.mkstemp(prefix=f"witten_k{op.k:g}_r{op.r}_", suffix=".npz")
    os.close(fd)
    np.savez(path, symmetric=op.symmetric.toarray(), k=op.k, r=op.r)
    return path


def eigendecompose(op, validate=True):
    """Dense symmetric eigendecomposition with deterministic ordering and sign convention."""
    dense = op.symmetric.toarray()
    dense = 0.5 * (dense + dense.T)
    try:
        lam, psi = np.linalg.eigh(dense)
    except np.linalg.LinAlgError as exc:
        path = _dump(op)
        raise EigensolverError(f"eigensolver failed for k={op.k}, r={op.r}: {exc}; operator dumped to {path}", path)
    order = np.argsort(lam, kind="stable")
    lam, psi = lam[order], _fix_signs(psi[:, order])
    norm = float(np.max(np.abs(lam))) if lam.size else 0.0
    if validate:
        _validate(op, dense, lam, psi, norm)
    weights = op.inner.weights[op.r]
    phi = psi / np.sqrt(weights)[:, None]
    cx = op.complex
    return SpectralDecomposition(
        degree=op.r,
        k=op.k,
        eigenvalues=lam,
        eigenvectors=phi,
        measures=cx.measures[op.r],
        volumes=op.inner.volumes[op.r],
        weights=weights,
        operator_norm=norm,
        complex=cx,
        scalar_field=op.scalar_field,
        metadata={"grid": cx.describe(), "size": op.size},
    )


def _validate(op, dense, lam, psi, norm):
    problems = []
    if lam.size and lam[0] < -1e-10 * norm:
        problems.append(f"negative eigenvalue {lam[0]:.3e}")
    resid = np.max(np.linalg.norm(dense @ psi - psi * lam, axis=0)) if lam.size else 0.0
    if resid > 1e-9 * max(norm, 1e-300):
        problems.append(f"residual {resid:.3e} exceeds 1e-9 * |Delta| = {1e-9 * norm:.3e}")
    gram = np.max(np.abs(psi.T @ psi - np.eye(psi.shape[1]))) if lam.size else 0.0
    if gram > 1e-10:
        problems.append(f"Gram defect {gram:.3e}")
    if problems:
        path = _dump(op)
        raise EigensolverError(
            f"decomposition invariants violated for k={op.k}, r={op.r}: {'; '.join(problems)}; operator dumped to {path}",
            path,
        )


def compute_spectra(complex, f, k, degrees=None, validate=True):
    """Decompositions of ``Delta_k^{(r)}`` for each requested degree, keyed by degree."""
    degrees = range(complex.dim + 1) if degrees is None else degrees
    return {r: eigendecompose(assemble_witten_laplacian(complex, f, k, r), validate) for r in degrees}


class SpectrumCache:
    """Memoizes decompositions per (complex, field, k, r)."""

    def __init__(self, validate=True):
        self.validate = validate
        self._store = {}

    def get(self, complex, f, k, r):
        # the undeformed operator does not depend on f
        key = (id(complex), id(f) if k else None, float(k), int(r))
        if key not in self._store:
            log.info("eigendecomposing k=%g r=%d (%d cells)", k, r, complex.n_cells(r))
            op = assemble_witten_laplacian(complex, f, k, r)
            self._store[key] = (complex, f, eigendecompose(op, self.validate))
        return self._store[key][2]

    def spectra(self, complex, f, k, degrees=None):
        degrees = range(complex.dim + 1) if degrees is None else degrees
        return {r: self.get(complex, f, k, r) for r in degrees}


# -- heat kernels --------------------------------------------------------------


def _check_t(t_eff):
    if not t_eff > 0:
        raise DomainError(f"t_eff must be positive, got {t_eff}")


def _decay(dec, t_eff):
    return np.exp(-t_eff * dec.eigenvalues)


def heat_kernel_entry(dec, t_eff, a, b):
    """Kernel density ``sum_j e^{-t lambda_j} phi_j(a) phi_j(b)`` in the coefficient frame."""
    _check_t(t_eff)
    modes = dec.modes
    return float(np.sum(_decay(dec, t_eff) * modes[a] * modes[b]))


def heat_kernel_block(dec, t_eff, rows, cols):
    _check_t(t_eff)
    modes = dec.modes
    return (modes[np.asarray(rows)] * _decay(dec, t_eff)) @ modes[np.asarray(cols)].T


def heat_kernel_diagonal(dec, t_eff):
    _check_t(t_eff)
    return (dec.modes ** 2) @ _decay(dec, t_eff)


@dataclass(eq=False)
class HeatEvaluation:
    t_eff: float
    diagonal: np.ndarray
    trace: float
    quadrature_trace: float


def heat_evaluation(dec, t_eff):
    diag = heat_kernel_diagonal(dec, t_eff)
    return HeatEvaluation(float(t_eff), diag, heat_trace(dec, t_eff), float(np.sum(diag * dec.volumes)))


def heat_trace(dec, t_eff):
    """``sum_j e^{-t_eff lambda_j}`` with multiplicity."""
    _check_t(t_eff)
    return float(np.sum(_decay(dec, t_eff)))


# -- kernel detection ---------------------------------------------------------


@dataclass(frozen=True)
class GapPolicy:
    """Spectral-gap rule separating numerical zeros from the positive spectrum.

    Eigenvalues are floored at ``floor_rel * lambda_max``; the kernel ends at
    the largest multiplicative jump below the median.  A jump smaller than
    ``min_ratio``, or one not ``dominance`` times larger than the runner-up,
    is ambiguous.
    """

    floor_rel: float = 1e-9
    min_ratio: float = 1e3
    dominance: float = 10.0


def _gap_candidates(eigenvalues, policy):
    lam = np.sort(np.asarray(eigenvalues, dtype=float))
    lam_max = float(np.max(np.abs(lam))) if lam.size else 0.0
    if lam_max == 0.0:
        return [(math.inf, lam.size)]
    floor = policy.floor_rel * lam_max
    clipped = np.maximum(lam, floor)
    upto = max(1, lam.size // 2)
    # candidate count c: jump between the (c-1)-th value (or the floor) and the c-th
    prev = np.r_[floor, clipped[: upto - 1]]
    ratios = clipped[:upto] / prev
    return sorted(((float(q), c) for c, q in enumerate(ratios)), reverse=True)


def kernel_dimension(dec, gap_policy=None):
    """Number of eigenvalues below the detected spectral gap."""
    policy = gap_policy or GapPolicy()
    eig = dec.eigenvalues if hasattr(dec, "eigenvalues") else dec
    ranked = _gap_candidates(eig, policy)
    best_ratio, best = ranked[0]
    second_ratio, second = ranked[1] if len(ranked) > 1 else (1.0, best)
    if best_ratio < policy.min_ratio or best_ratio < policy.dominance * second_ratio:
        raise GapAmbiguityError(
            f"no clean spectral gap: candidate kernel dimensions {best} (jump {best_ratio:.3g}) "
            f"and {second} (jump {second_ratio:.3g})",
            (best, second),
        )
    return best


# -- cross-degree identities -----------------------------------------------------


def alternating_heat_trace(spectra, t_eff):
    """``sum_r (-1)^r Z^r(t_eff)`` over a dict of per-degree decompositions."""
    return sum((-1) ** r * heat_trace(dec, t_eff) for r, dec in spectra.items())


def supersymmetric_pairing(spectra, rel_tol=1e-6, gap_policy=None):
    """Cluster nonzero eigenvalues across degrees and tabulate alternating dimension sums.

    Returns ``(rows, ok)``.  Each row holds the cluster centre, its dimension in
    every degree and the partial sums ``sum_{j<=r} (-1)^{r-j} dim E^{(j)}``;
    ``ok`` is True when every partial sum is non-negative and the top one is 0.
    """
    degrees = sorted(spectra)
    points = []
    for r in degrees:
        dec = spectra[r]
        kdim = kernel_dimension(dec, gap_policy)
        points.extend((float(v), r) for v in dec.eigenvalues[kdim:])
    points.sort()
    clusters = []
    for value, r in points:
        if clusters and value - clusters[-1][-1][0] <= rel_tol * max(abs(value), 1e-300):
            clusters[-1].append((value, r))
        else:
            clusters.append([(value, r)])
    rows, ok = [], True
    top = degrees[-1]
    for members in clusters:
        dims = {r: 0 for r in degrees}
        for _, r in members:
            dims[r] += 1
        partial = []
        for r in degrees:
            partial.append(sum((-1) ** (r - j) * dims[j] for j in degrees if j <= r))
        good = all(p >= 0 for p in partial) and partial[degrees.index(top)] == 0
        ok &= good
        rows.append({
            "mu": float(np.mean([v for v, _ in members])),
            "dims": tuple(dims[r] for r in degrees),
            "partial_sums": tuple(partial),
            "ok": good,
        })
    return rows, ok
