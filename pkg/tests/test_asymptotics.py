import math

import numpy as np
import pytest

from wittenlab import asymptotics as A
from wittenlab.complex import MorseProfile1D, build_circle_complex, build_torus_complex, product_morse_function_2d
from wittenlab.errors import ConfigurationError, DomainError, ProbeError, ResolutionError
from wittenlab.spectral import assemble_witten_laplacian, compute_spectra, heat_kernel_entry


def test_cubic_stencil_reproduces_cubics():
    cx = build_torus_complex(40, 30, 4.0, 3.0)
    g = lambda P: 1 + P[..., 0] - 2 * P[..., 0] ** 2 * P[..., 1] + P[..., 1] ** 3
    for block in cx.blocks[1]:
        vals = g(cx.barycenters[1])
        idx, w, near = A.interpolation_stencil(cx, block, (1.37, 1.11))
        assert w @ vals[idx] == pytest.approx(g(np.array([1.37, 1.11])), rel=1e-12)
        assert 0 <= near <= 0.5 * 4.0 / 40


def test_linear_stencil_weights():
    cx = build_circle_complex(10, 10.0)
    idx, w, near = A.interpolation_stencil(cx, cx.blocks[0][0], (3.25,), order="linear")
    assert list(idx[1:3]) == [3, 4] and w[1:3] == pytest.approx([0.75, 0.25])
    assert near == pytest.approx(0.25)


@pytest.fixture(scope="module")
def coarse():
    cx = build_circle_complex(256)
    from wittenlab.complex import blended_morse_function_1d

    f = blended_morse_function_1d(cx, math.pi / 2, 3 * math.pi / 2, 0.6, 1.0)
    return cx, f, compute_spectra(cx, f, 1.0)


def test_unit_k_is_plain_kernel_density(coarse):
    cx, f, spectra = coarse
    p = f.critical_points[0]
    dec = spectra[0]
    a, b = 70, 60
    x = cx.barycenters[0][a] - p.location[0]
    y = cx.barycenters[0][b] - p.location[0]
    assert A.scaled_kernel(dec, p, 1.0, 0.4, x, y) == pytest.approx(heat_kernel_entry(dec, 0.4, a, b), rel=1e-10)


def test_scaled_kernel_symmetric(coarse):
    cx, f, spectra = coarse
    p = f.critical_points[1]
    a = A.scaled_kernel(spectra[1], p, 1.0, 0.7, 0.13, -0.31)
    b = A.scaled_kernel(spectra[1], p, 1.0, 0.7, -0.31, 0.13)
    assert a == pytest.approx(b, rel=1e-12)


def test_scaled_kernel_guards(coarse):
    cx, f, spectra = coarse
    p = f.critical_points[0]
    with pytest.raises(ProbeError):
        A.scaled_kernel(spectra[0], p, 1.0, 1.0, 0.7, 0.0)
    with pytest.raises(DomainError):
        A.scaled_kernel(spectra[0], p, 1.0, 0.0, 0.1, 0.0)
    with pytest.raises(DomainError):
        A.scaled_kernel(spectra[0], p, 4.0, 1.0, 0.1, 0.0)


def test_convergence_report_guards(coarse):
    cx, f, _ = coarse
    p = f.critical_points[0]
    with pytest.raises(ResolutionError):
        A.convergence_report(cx, f, p, 0, [25, 50], [1.0], np.linspace(-1, 1, 3))
    with pytest.raises(ConfigurationError):
        A.convergence_report(cx, f, p, 0, [50, 25], [1.0], np.linspace(-1, 1, 3))
    with pytest.raises(ProbeError):
        A.convergence_report(cx, f, p, 0, [1, 2], [1.0], np.linspace(-2, 2, 3))


def test_heat_equation_cross_check(circle_narrow, cache):
    cx, f = circle_narrow
    for p, r in ((f.critical_points[0], 0), (f.critical_points[1], 1)):
        dec = cache.get(cx, f, 200.0, r)
        resid, ok = A.heat_equation_check(dec, p, 200.0, 1.0, np.linspace(-1.5, 1.5, 7)[:, None])
        assert ok, resid


def test_scaling_identity_circle(circle_fine):
    cx, f = circle_fine
    for p, r in ((f.critical_points[0], 0), (f.critical_points[1], 1), (f.critical_points[0], 1)):
        err, tol, cross = A.scaling_identity_check(cx, f, p, 100.0, r)
        assert err < tol and cross == 0.0


def test_scaling_identity_torus_components():
    cx = build_torus_complex(96, 96)
    prof = MorseProfile1D(2 * math.pi, math.pi / 2, 3 * math.pi / 2, 0.6, 1.0)
    f = product_morse_function_2d(cx, prof, prof)
    p = f.critical_points[1]  # index one
    for comp in ((1,), (2,)):
        err, tol, cross = A.scaling_identity_check(cx, f, p, 16.0, 1, comp)
        assert err < tol
        assert cross < tol


def test_annulus_probe(circle_fine, cache):
    cx, f = circle_fine
    p = f.critical_points[0]
    decs = {400.0: cache.get(cx, f, 400.0, 0)}
    rep = A.annulus_decay_probe(decs, p, 2.0, 1.0)
    assert rep.passed
    radii = [4.0, 4.2, 4.4]
    v1 = A.annulus_decay_probe(decs, p, 1.5, 1.0, radii=radii).column("value")
    v2 = A.annulus_decay_probe(decs, p, 2.0, 1.0, radii=radii).column("value")
    assert v1 == v2
    with pytest.raises(ConfigurationError):
        A.annulus_decay_probe(decs, p, 3.0, 1.0)
    with pytest.raises(ConfigurationError):
        A.annulus_decay_probe(decs, p, 0.5, 1.0)


def test_far_field_guards(circle_small):
    cx, f = circle_small
    with pytest.raises(ConfigurationError):
        A.far_field_decay_probe(cx, f, 0, [0.1, 1.0], 1.0)
    with pytest.raises(ConfigurationError):
        A.far_field_decay_probe(cx, f, 0, [4.0, 1.0], 1.0)
    mask = A.far_field_mask(cx, f, 0, 16.0)
    assert mask.any() and not mask.all()


def test_far_field_midpoint_decreases(circle_fine, cache):
    cx, f = circle_fine
    mid = int(np.argmin(np.abs(cx.barycenters[0][:, 0] - math.pi)))
    vals = [A.heat_kernel_diagonal(cache.get(cx, f, k, 0), 1.0 / k)[mid] for k in (16.0, 64.0, 256.0)]
    assert vals[0] > vals[1] > vals[2]


def test_rayleigh_quotient(circle_small):
    cx, f = circle_small
    op = assemble_witten_laplacian(cx, f, 3.0, 0)
    dec = compute_spectra(cx, f, 3.0, [0])[0]
    assert A.rayleigh_quotient(op, dec.eigenvectors[:, 5]) == pytest.approx(dec.eigenvalues[5], rel=1e-9)
    with pytest.raises(DomainError):
        A.rayleigh_quotient(op, np.zeros(cx.n_cells(0)))


def test_bochner_structure(circle_fine):
    cx, f = circle_fine
    p = f.critical_points[0]
    with pytest.raises(ConfigurationError):
        A.bochner_rayleigh_check(cx, f, 256.0, p, 8.0, eps=0.25)
    floors = []
    for xn in (4.0, 6.0, 8.0):
        rep = A.bochner_rayleigh_check(cx, f, 256.0, p, xn, trials=5, eps=0.4)
        floors.append(rep.rows[-1]["ratio"])
        assert rep.rows[-1]["trial"] == "potential_floor"
    assert floors[0] < floors[1] < floors[2] < 0.25


def test_bochner_seed_reproducible(circle_fine):
    cx, f = circle_fine
    p = f.critical_points[1]
    a = A.bochner_rayleigh_check(cx, f, 256.0, p, 8.0, trials=5, r=1, eps=0.4, seed=3)
    b = A.bochner_rayleigh_check(cx, f, 256.0, p, 8.0, trials=5, r=1, eps=0.4, seed=3)
    assert a.body_csv() == b.body_csv()
    assert a.passed
