import numpy as np
import pytest
import sympy
from scipy import sparse

from wittenlab import morse
from wittenlab.complex import build_circle_complex, build_torus_complex
from wittenlab.spectral import GapPolicy, SpectrumCache


@pytest.mark.parametrize("seed", range(5))
def test_exact_rank_matches_sympy_dense(seed):
    rng = np.random.default_rng(seed)
    M = rng.integers(-1, 2, size=(12, 9)) * (rng.random((12, 9)) < 0.3)
    M[:, 4] = M[:, 1] - M[:, 2]
    assert morse.exact_rank(sparse.csr_matrix(M)) == sympy.Matrix(M).rank()


def test_betti_numbers_match_rank_oracle():
    for cx, expected in ((build_circle_complex(16), (1, 1)), (build_torus_complex(9, 8), (1, 2, 1))):
        assert morse.betti_from_ranks(cx) == expected
        assert morse.betti_numbers(cx) == expected


def test_morse_counts(circle_small, torus_small):
    assert morse.morse_counts(circle_small[1]) == (1, 1)
    counts = morse.morse_counts(torus_small[1])
    assert counts == (1, 2, 1)
    assert sum((-1) ** r * m for r, m in enumerate(counts)) == 0


def test_mckean_singer_torus(torus_small):
    cx, f = torus_small
    rep = morse.mckean_singer_report(cx, f, [0, 3, 12], [0.01, 0.1, 1.0])
    assert rep.passed, rep.verdict_lines()
    for row in rep.rows:
        assert row["trace"] >= row["betti"] - 1e-9


def test_trace_limit_report(circle_512, cache):
    cx, f = circle_512
    rep = morse.trace_integral_limit_report(cx, f, 0, [16, 64], [2, 4, 8], tol=0.05, cache=cache)
    assert rep.passed
    assert len(rep.rows) == 6
    assert len(rep.manifest["deviation_along_k"]) == 2


def test_morse_report_perfect(torus_small):
    cx, f = torus_small
    rep = morse.morse_inequality_report(cx, f, 8.0, 4.0)
    assert rep.passed and not rep.inconclusive
    assert rep.betti == rep.morse == (1, 2, 1)
    names = [line.split(" (")[0] for line in rep.verdict_lines()]
    assert "WEAK r=0 PASS" in names and "STRONG r=2 PASS" in names and "EULER PASS" in names


def test_morse_report_inconclusive_on_ambiguous_gap(circle_small):
    cx, f = circle_small
    rep = morse.morse_inequality_report(cx, f, 4.0, 1.0, cache=SpectrumCache(),
                                        gap_policy=GapPolicy(min_ratio=1e300))
    assert rep.inconclusive and not rep.passed
    assert all(c.passed is None for c in rep.checks)
    assert any("INCONCLUSIVE" in line for line in rep.verdict_lines())
