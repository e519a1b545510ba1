"""Betti numbers, Morse counts, heat-trace identities and the Morse inequalities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sympy import QQ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.sdm import SDM

from .errors import GapAmbiguityError
from .report import ExperimentReport
from .spectral import SpectrumCache, heat_trace, kernel_dimension


def exact_rank(matrix):
    """Rank over the rationals of an integer sparse matrix."""
    coo = matrix.tocoo()
    rows = {}
    for i, j, v in zip(coo.row, coo.col, coo.data):
        if v:
            rows.setdefault(int(i), {})[int(j)] = QQ(int(v))
    return int(DomainMatrix.from_rep(SDM(rows, matrix.shape, QQ)).rank())


def betti_from_ranks(complex):
    """``b_r = dim C^r - rank d_r - rank d_{r-1}`` from the integer incidence matrices."""
    ranks = [exact_rank(d) for d in complex.incidence]
    out = []
    for r in range(complex.dim + 1):
        out.append(complex.n_cells(r) - (ranks[r] if r < complex.dim else 0) - (ranks[r - 1] if r > 0 else 0))
    return tuple(out)


def betti_numbers(complex, gap_policy=None, cache=None):
    """Kernel dimensions of the undeformed Hodge Laplacian per degree."""
    cache = cache or SpectrumCache()
    return tuple(
        kernel_dimension(cache.get(complex, None, 0.0, r), gap_policy) for r in range(complex.dim + 1)
    )


def morse_counts(f):
    """Number of critical points of each index."""
    dim = f.complex.dim
    counts = [0] * (dim + 1)
    for cp in f.critical_points:
        counts[cp.index] += 1
    return tuple(counts)


def _alternating_partial(values, r):
    return sum((-1) ** (r - j) * values[j] for j in range(r + 1))


def _t_eff(k, t):
    return t / k if k > 0 else t


def mckean_singer_report(complex, f, k_list, t_list, cache=None, rel_tol=1e-8, gap_policy=None,
                         betti=None):
    """Per-degree heat traces ``Z^r = tr e^{-t Delta_k^{(r)}}`` and their alternating sums.

    The times in ``t_list`` are applied as given (no division by k).
    """
    cache = cache or SpectrumCache()
    betti = betti if betti is not None else betti_from_ranks(complex)
    chi = complex.euler_characteristic
    n = complex.dim
    report = ExperimentReport(
        "mckean_singer",
        [("k", ""), ("t_eff", "time"), ("r", ""), ("trace", "-"), ("partial_trace", "-"),
         ("partial_betti", "-"), ("betti", "")],
        manifest={"grid": complex.describe(), "f": f.describe() if f is not None else None,
                  "betti": list(betti), "euler_characteristic": chi},
    )
    for k in k_list:
        spectra = cache.spectra(complex, f, float(k))
        for t in t_list:
            Z = [heat_trace(spectra[r], t) for r in range(n + 1)]
            lower_ok = True
            for r in range(n + 1):
                pz, pb = _alternating_partial(Z, r), _alternating_partial(betti, r)
                slack = rel_tol * max(1.0, sum(Z))
                lower_ok &= pb <= pz + slack and betti[r] <= Z[r] + slack
                report.add_row(k=float(k), t_eff=float(t), r=r, trace=Z[r], partial_trace=pz,
                               partial_betti=pb, betti=betti[r])
            full = _alternating_partial(Z, n) * (-1) ** n
            scale = max(1.0, sum(Z))
            report.add_check(f"PARTIAL k={k:g} t={t:g}", lower_ok)
            report.add_check(f"EULER k={k:g} t={t:g}", abs(full - chi) <= rel_tol * scale,
                             f"sum {full:.3e} vs chi {chi}, scale {scale:.3g}")
    return report


def trace_integral_limit_report(complex, f, r, k_list, t_list, tol=0.05, cache=None):
    """``Z^r(t/k)`` over a (k, t) ladder compared with the Morse number ``m_r``.

    The last ladder cell is certified against ``tol`` and the deviation must
    not grow along t at the largest k.  The trend along k at the largest t is
    recorded in the manifest only, since grid resolution caps it.
    """
    cache = cache or SpectrumCache()
    m_r = morse_counts(f)[r]
    k_list = [float(k) for k in k_list]
    t_list = [float(t) for t in t_list]
    report = ExperimentReport(
        "trace_integral_limit",
        [("k", ""), ("t", "time"), ("t_eff", "time"), ("r", ""), ("trace", "-"), ("morse_number", ""),
         ("deviation", "-")],
        manifest={"grid": complex.describe(), "f": f.describe(), "degree": r, "tolerance": tol},
    )
    grid = {}
    for k in k_list:
        dec = cache.get(complex, f, k, r)
        for t in t_list:
            z = heat_trace(dec, _t_eff(k, t))
            grid[k, t] = abs(z - m_r)
            report.add_row(k=k, t=t, t_eff=_t_eff(k, t), r=r, trace=z, morse_number=m_r, deviation=grid[k, t])
    along_k = [grid[k, t_list[-1]] for k in k_list]
    along_t = [grid[k_list[-1], t] for t in t_list]
    # on a fixed grid the k-trend is bounded by resolution, so it is reported, not checked
    report.manifest["deviation_along_k"] = along_k
    report.add_check(f"APPROACH r={r} along t", all(b <= a for a, b in zip(along_t, along_t[1:])))
    final = grid[k_list[-1], t_list[-1]]
    report.add_check(f"LIMIT r={r}", final < tol, f"|Z - m_r| = {final:.3e} < {tol}")
    return report


@dataclass
class MorseReport(ExperimentReport):
    betti: tuple = ()
    morse: tuple = ()
    inconclusive: bool = False


def morse_inequality_report(complex, f, k, t, cache=None, gap_policy=None):
    """Weak and strong Morse inequalities with heat-trace evidence at ``(k, t/k)``.

    Betti numbers come from the kernel of the undeformed Laplacian and are
    cross-checked against the exact incidence ranks.  A spectral-gap
    ambiguity marks every affected check inconclusive.
    """
    cache = cache or SpectrumCache()
    n = complex.dim
    m = morse_counts(f)
    rank_betti = betti_from_ranks(complex)
    report = MorseReport(
        "morse_inequalities",
        [("r", ""), ("betti", ""), ("morse_number", ""), ("kernel_dim_k", ""), ("k", ""), ("t_eff", "time"),
         ("trace", "-")],
        manifest={"grid": complex.describe(), "f": f.describe(), "k": k, "t": t},
        morse=m,
    )
    try:
        betti = betti_numbers(complex, gap_policy, cache)
        kdims = tuple(kernel_dimension(cache.get(complex, f, k, r), gap_policy) for r in range(n + 1))
    except GapAmbiguityError as exc:
        report.inconclusive = True
        report.betti = rank_betti
        for r in range(n + 1):
            report.add_check(f"WEAK r={r}", None, str(exc))
            report.add_check(f"STRONG r={r}", None, str(exc))
        report.add_check("EULER", None, str(exc))
        return report
    report.betti = betti
    t_eff = _t_eff(k, t)
    for r in range(n + 1):
        report.add_row(r=r, betti=betti[r], morse_number=m[r], kernel_dim_k=kdims[r], k=float(k), t_eff=t_eff,
                       trace=heat_trace(cache.get(complex, f, k, r), t_eff))
    report.add_check("BETTI rank oracle", betti == rank_betti, f"kernel {betti} vs ranks {rank_betti}")
    report.add_check("BETTI k-independence", kdims == betti, f"k={k:g}: {kdims}")
    for r in range(n + 1):
        report.add_check(f"WEAK r={r}", betti[r] <= m[r], f"b={betti[r]} <= m={m[r]}")
    for r in range(n + 1):
        pb, pm = _alternating_partial(betti, r), _alternating_partial(m, r)
        report.add_check(f"STRONG r={r}", pb <= pm, f"{pb} <= {pm}")
    eb = sum((-1) ** r * b for r, b in enumerate(betti))
    em = sum((-1) ** r * v for r, v in enumerate(m))
    report.add_check("EULER", eb == em and np.isfinite(report.column("trace")).all(), f"{eb} == {em}")
    return report
