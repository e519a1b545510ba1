"""Command-line front end.

Exit codes: 0 when every check passes, 1 when any check fails or is
inconclusive, 2 on configuration or usage errors.
"""

from __future__ import annotations

import logging
import os
import sys

import click
import numpy as np

from . import asymptotics, model_oscillator as mo, morse
from .config import load_config, make_config, resolve_output_dir
from .errors import ConfigurationError, ProbeError, ResolutionError, WittenLabError
from .report import ExperimentReport
from .complex import deformed_coboundary
from .spectral import SpectrumCache, kernel_dimension, supersymmetric_pairing

log = logging.getLogger("wittenlab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class Run:
    """Resolved configuration, output directory and spectrum cache for one invocation."""

    def __init__(self, cfg, output_dir):
        self.cfg = cfg
        self.output_dir = output_dir
        self.complex, self.f = cfg.validate()
        self.cache = SpectrumCache()
        self.reports = []

    def emit(self, report, filename):
        report.manifest.setdefault("config", self.cfg.manifest())
        path = os.path.join(self.output_dir, filename)
        report.to_csv(path)
        self.reports.append(report)
        for line in report.verdict_lines():
            click.echo(line)
        click.echo(f"wrote {path}")
        return report

    @property
    def exit_code(self):
        return EXIT_OK if all(r.passed for r in self.reports) else EXIT_FAIL

    def degrees(self):
        return self.cfg.degrees or list(range(self.complex.dim + 1))


def _common(fn):
    fn = click.option("--output-dir", type=click.Path(file_okay=False), default=None,
                      help="Output directory (overrides WITTENLAB_OUTPUT_DIR and the config).")(fn)
    fn = click.option("--t", "t_values", type=float, multiple=True, help="Time value(s); repeatable.")(fn)
    fn = click.option("--k", "k_values", type=float, multiple=True, help="Deformation parameter(s); repeatable.")(fn)
    fn = click.option("--n", type=int, default=None, help="Cells per axis.")(fn)
    fn = click.option("--manifold", type=click.Choice(["circle", "torus"]), default=None)(fn)
    fn = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                      help="INI configuration file.")(fn)
    return fn


def _prepare(config_path, manifold, n, output_dir, overrides=None):
    base = {"manifold": manifold, "n": n}
    base.update(overrides or {})
    if config_path is not None:
        cfg = load_config(config_path, overrides=base)
    else:
        cfg = make_config({k: v for k, v in base.items() if v is not None})
    return Run(cfg, resolve_output_dir(cfg, output_dir))


def _execute(body, config_path, manifold, n, output_dir, overrides=None):
    try:
        run = _prepare(config_path, manifold, n, output_dir, overrides)
        body(run)
    except (ConfigurationError, ResolutionError, ProbeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    except WittenLabError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_FAIL)
    sys.exit(run.exit_code)


def _override(values, attr, as_list=True):
    """Map repeated CLI values onto one config attribute (the last value for scalars)."""
    if not values:
        return {}
    return {attr: list(values) if as_list else values[-1]}


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log eigendecompositions.")
def main(verbose):
    """Discrete Witten Laplacian experiments on the circle and the flat torus."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(name)s: %(message)s")


@main.command("model-check")
@_common
def model_check(config_path, manifold, n, k_values, t_values, output_dir):
    """Closed-form oscillator identities: Mehler series, trace integrals, model traces."""

    def body(run):
        rep = ExperimentReport("mehler", [("rho", "-"), ("n_max", ""), ("x", "model length"),
                                          ("y", "model length"), ("series", "density"), ("closed", "density"),
                                          ("abs_error", "density")])
        worst = 0.0
        grid = [-3.0, -1.5, 0.0, 1.5, 3.0]
        for rho in (0.0, 0.3, 0.6, 0.9):
            # the partial sum needs about log(tol)/log(rho) terms; 80 is not enough at rho = 0.9
            order = max(80, mo.mehler_truncation_order(rho))
            for x in grid:
                for y in grid:
                    s, c = mo.mehler_series(rho, x, y, order), mo.mehler_closed(rho, x, y)
                    worst = max(worst, abs(s - c))
                    rep.add_row(rho=rho, n_max=order, x=x, y=y, series=s, closed=c, abs_error=abs(s - c))
        rep.add_check("MEHLER", worst < 1e-9, f"max error {worst:.3e} < 1e-9")
        run.emit(rep, "mehler.csv")

        rep = ExperimentReport("trace_integral", [("sign", ""), ("t", "time"), ("quadrature", "-"),
                                                  ("exact", "-"), ("abs_error", "-")])
        worst = 0.0
        for sign in (-1, 1):
            for t in t_values or (0.5, 1.0, 2.0):
                q, e = mo.oscillator_trace_quadrature(sign, t), mo.oscillator_trace_integral(sign, t)
                worst = max(worst, abs(q - e))
                rep.add_row(sign=sign, t=t, quadrature=q, exact=e, abs_error=abs(q - e))
        rep.add_check("TRACE INTEGRAL", worst < 1e-8, f"max error {worst:.3e} < 1e-8")
        run.emit(rep, "trace_integral.csv")

        rep = ExperimentReport("model_trace", [("r", ""), ("t", "time"), ("value", "-"), ("indicator", "")])
        p = mo.ModelCriticalPoint(2, 1)
        ts = (2.0, 4.0, 8.0, 12.0)
        for r in range(3):
            vals = [mo.model_trace_integral(p, r, t) for t in ts]
            target = 1.0 if r == p.l else 0.0
            for t, v in zip(ts, vals):
                rep.add_row(r=r, t=t, value=v, indicator=int(target))
            devs = [abs(v - target) for v in vals]
            rep.add_check(f"INDICATOR r={r}", devs[-1] < 1e-4 and all(b < a for a, b in zip(devs, devs[1:])),
                          f"|value - {target:g}| = {devs[-1]:.3e} at t={ts[-1]:g}")
        run.emit(rep, "model_trace.csv")

    _execute(body, config_path, manifold, n, output_dir)


@main.command("spectrum")
@_common
def spectrum(config_path, manifold, n, k_values, t_values, output_dir):
    """Eigenvalues of the Witten Laplacian per degree, with kernel and pairing checks."""

    def body(run):
        cfg, cx, f = run.cfg, run.complex, run.f
        betti = morse.betti_from_ranks(cx)
        rep = ExperimentReport("spectrum", [("k", ""), ("r", ""), ("index", ""), ("eigenvalue", "1/length^2")],
                               manifest={"grid": cx.describe(), "f": f.describe()})
        for k in cfg.k_list:
            spectra = run.cache.spectra(cx, f, k, run.degrees())
            for r, dec in spectra.items():
                for i, lam in enumerate(dec.eigenvalues):
                    rep.add_row(k=k, r=r, index=i, eigenvalue=float(lam))
                kd = kernel_dimension(dec)
                rep.add_check(f"KERNEL k={k:g} r={r}", kd == betti[r], f"{kd} vs rank oracle {betti[r]}")
                if r < cx.dim:
                    d0 = deformed_coboundary(cx, f, k, r).matrix
                    if r + 1 < cx.dim:
                        d1 = deformed_coboundary(cx, f, k, r + 1).matrix
                        prod = abs(d1 @ d0).max()
                        scale = abs(d1).max() * abs(d0).max()
                        rep.add_check(f"NILPOTENT k={k:g} r={r}", prod < 1e-13 * scale, f"{prod:.2e}")
            if len(spectra) == cx.dim + 1:
                _, ok = supersymmetric_pairing(spectra)
                rep.add_check(f"PAIRING k={k:g}", ok)
        run.emit(rep, "spectrum.csv")

    _execute(body, config_path, manifold, n, output_dir, _override(k_values, "k_list"))


@main.command("heat-trace")
@_common
def heat_trace_cmd(config_path, manifold, n, k_values, t_values, output_dir):
    """Heat traces: alternating-sum identity and the small-time-over-k limit."""

    def body(run):
        cfg, cx, f = run.cfg, run.complex, run.f
        ms = morse.mckean_singer_report(cx, f, cfg.k_list, cfg.t_list, run.cache, cfg.mckean_singer_rel)
        run.emit(ms, "mckean_singer.csv")
        for r in run.degrees():
            rep = morse.trace_integral_limit_report(cx, f, r, cfg.trace_k, cfg.trace_t, cfg.trace_limit, run.cache)
            run.emit(rep, f"heat_trace_r{r}.csv")

    _execute(body, config_path, manifold, n, output_dir,
             {**_override(k_values, "trace_k"), **_override(t_values, "trace_t")})


@main.command("scaled-kernel")
@_common
@click.option("--point", "point_index", type=int, default=0, help="Critical point (sorted by index).")
@click.option("--degree", type=int, default=None, help="Form degree; defaults to the point's index.")
def scaled_kernel_cmd(config_path, manifold, n, k_values, t_values, output_dir, point_index, degree):
    """Sup distance between the scaled kernel and the model kernel over a point grid."""

    def body(run):
        cfg, cx, f = run.cfg, run.complex, run.f
        p = f.critical_points[point_index]
        r = p.index if degree is None else degree
        component = tuple(range(1, r + 1)) if cx.dim > 1 else None
        axis = np.linspace(-cfg.point_half_width, cfg.point_half_width, cfg.point_samples)
        rep = asymptotics.convergence_report(cx, f, p, r, cfg.convergence_k, cfg.convergence_t, axis,
                                             component=component, cache=run.cache, rel_tol=cfg.convergence_rel)
        run.emit(rep, "scaled_kernel.csv")

    _execute(body, config_path, manifold, n, output_dir,
             {**_override(k_values, "convergence_k"), **_override(t_values, "convergence_t")})


@main.command("decay")
@_common
def decay_cmd(config_path, manifold, n, k_values, t_values, output_dir):
    """Annulus decay near the minimum and far-field decay away from all critical points."""

    def body(run):
        cfg, cx, f = run.cfg, run.complex, run.f
        t = t_values[-1] if t_values else 1.0
        p = f.critical_points[0]
        dec = run.cache.get(cx, f, cfg.decay_k, p.index)
        rep = asymptotics.annulus_decay_probe({cfg.decay_k: dec}, p, cfg.D, t, eps=cfg.eps, n0=cfg.n0)
        run.emit(rep, "annulus_decay.csv")
        for r in run.degrees():
            rep = asymptotics.far_field_decay_probe(cx, f, r, cfg.far_field_k, t, cfg.eps, cfg.factor, run.cache)
            run.emit(rep, f"far_field_r{r}.csv")

    _execute(body, config_path, manifold, n, output_dir, _override(k_values, "far_field_k"))


@main.command("bochner")
@_common
def bochner_cmd(config_path, manifold, n, k_values, t_values, output_dir):
    """Rayleigh quotients of random annulus-supported cochains near the minimum."""

    def body(run):
        cfg, cx, f = run.cfg, run.complex, run.f
        p = f.critical_points[0]
        rep = asymptotics.bochner_rayleigh_check(cx, f, cfg.bochner_k, p, cfg.x_norm, cfg.trials, r=0,
                                                 eps=cfg.bochner_eps, slack=cfg.slack, seed=cfg.seed)
        run.emit(rep, "bochner.csv")

    _execute(body, config_path, manifold, n, output_dir, _override(k_values, "bochner_k", as_list=False))


@main.command("morse-report")
@_common
def morse_report_cmd(config_path, manifold, n, k_values, t_values, output_dir):
    """Weak and strong Morse inequalities and the Euler identity."""

    def body(run):
        cfg = run.cfg
        rep = morse.morse_inequality_report(run.complex, run.f, cfg.morse_k, cfg.morse_t, run.cache)
        run.emit(rep, "morse_report.csv")

    overrides = {**_override(k_values, "morse_k", False), **_override(t_values, "morse_t", False)}
    _execute(body, config_path, manifold, n, output_dir, overrides)


if __name__ == "__main__":  # pragma: no cover
    main()
