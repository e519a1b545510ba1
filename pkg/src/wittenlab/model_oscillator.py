"""Closed-form harmonic-oscillator model kernels.

The one-dimensional building blocks are the perturbed oscillators

    L^{+/-} = -d^2/dx^2 + x^2 +/- 1,

whose spectra are {2N + 2} and {2N} on the Hermite functions.  A model
critical point of dimension ``n`` and Morse index ``l`` attaches to each
multi-index ``I`` a product of such oscillators, one per axis, selected by
the sign profile ``s_i = eps_i * eps_i^I``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, ShapeError

HERMITE_MAX_ORDER = 200
MAX_MODEL_DIMENSION = 4

_PI_QUARTER = math.pi ** -0.25


@dataclass(frozen=True)
class ModelCriticalPoint:
    """Dimension ``n`` and Morse index ``l`` of a model critical point."""

    n: int
    l: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_MODEL_DIMENSION:
            raise DomainError(f"model dimension must lie in [1, {MAX_MODEL_DIMENSION}], got {self.n}")
        if not 0 <= self.l <= self.n:
            raise DomainError(f"Morse index must satisfy 0 <= l <= n, got l={self.l}, n={self.n}")

    @property
    def hessian_signs(self):
        # normal form: the first l axes are descending
        return tuple(-1 if i <= self.l else 1 for i in range(1, self.n + 1))


def validate_multi_index(I, n):
    """Return ``I`` as a tuple after checking it is strictly increasing in [1, n]."""
    I = tuple(int(i) for i in I)
    if any(i < 1 or i > n for i in I):
        raise DomainError(f"multi-index {I} has entries outside [1, {n}]")
    if any(a >= b for a, b in zip(I, I[1:])):
        raise DomainError(f"multi-index {I} is not strictly increasing")
    return I


def multi_indices(n, r):
    """All strictly increasing multi-indices of length ``r`` over ``1..n``."""
    if not 0 <= r <= n:
        raise DomainError(f"degree r={r} outside [0, {n}]")
    return list(itertools.combinations(range(1, n + 1), r))


# -- Hermite functions -------------------------------------------------------


def hermite_functions(n_max, x):
    """Return ``Phi_0(x), ..., Phi_{n_max}(x)`` stacked along the first axis.

    Uses the normalized recurrence
    ``Phi_{N+1} = sqrt(2/(N+1)) x Phi_N - sqrt(N/(N+1)) Phi_{N-1}``
    so neither ``H_N`` nor ``2^N N!`` is ever formed.
    """
    n_max = int(n_max)
    if not 0 <= n_max <= HERMITE_MAX_ORDER:
        raise DomainError(f"Hermite order must lie in [0, {HERMITE_MAX_ORDER}], got {n_max}")
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = _PI_QUARTER * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for N in range(1, n_max):
        out[N + 1] = math.sqrt(2.0 / (N + 1)) * x * out[N] - math.sqrt(N / (N + 1)) * out[N - 1]
    return out


def hermite_function(N, x):
    """Normalized Hermite function ``Phi_N(x) = H_N(x) e^{-x^2/2} / (pi^{1/4} sqrt(2^N N!))``."""
    N = int(N)
    if not 0 <= N <= HERMITE_MAX_ORDER:
        raise DomainError(f"Hermite order must lie in [0, {HERMITE_MAX_ORDER}], got {N}")
    values = hermite_functions(N, x)[N]
    return values if np.ndim(values) else float(values)


# -- Mehler kernel -----------------------------------------------------------


def _check_rho(rho):
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"rho must lie in [0, 1), got {rho}")


def _mehler(rho, one_minus_rho2, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    expo = (4.0 * x * y * rho - (1.0 + rho * rho) * (x * x + y * y)) / (2.0 * one_minus_rho2)
    return np.exp(expo) / np.sqrt(math.pi * one_minus_rho2)


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


def mehler_closed(rho, x, y):
    """Closed form of ``sum_N rho^N Phi_N(x) Phi_N(y)`` (pi^{-1/2} prefactor included)."""
    _check_rho(rho)
    return _scalar(_mehler(rho, 1.0 - rho * rho, x, y))


def mehler_truncation_order(rho, tail=1e-12):
    """Smallest order whose geometric tail bound ``rho^(N+1) / (1 - rho)`` is below ``tail``.

    ``|Phi_N| <= pi^{-1/4}`` so the bound dominates the true remainder; the
    result is capped at the largest supported order.
    """
    _check_rho(rho)
    if rho == 0.0:
        return 0
    n = math.ceil(math.log(tail * (1.0 - rho)) / math.log(rho)) - 1
    return int(min(max(n, 0), HERMITE_MAX_ORDER))


def mehler_series(rho, x, y, n_max):
    """Partial sum ``sum_{N <= n_max} rho^N Phi_N(x) Phi_N(y)``."""
    _check_rho(rho)
    if n_max < 0:
        raise DomainError(f"n_max must be non-negative, got {n_max}")
    phi_x = hermite_functions(n_max, x)
    phi_y = hermite_functions(n_max, y)
    powers = rho ** np.arange(n_max + 1, dtype=float)
    powers = powers.reshape((-1,) + (1,) * (phi_x.ndim - 1))
    return _scalar(np.sum(powers * phi_x * phi_y, axis=0))


# -- one-dimensional perturbed oscillators -----------------------------------


def _check_sign(sign):
    if sign not in (1, -1):
        raise DomainError(f"oscillator sign must be +1 or -1, got {sign}")


def _check_time(t):
    if not t > 0:
        raise DomainError(f"time must be positive, got {t}")


def oscillator_heat_kernel(sign, t, x, y):
    """Heat kernel ``e^{-t L^{sign}}(x, y)``; ``sign=-1`` selects ``L^-``."""
    _check_sign(sign)
    _check_time(t)
    rho = math.exp(-2.0 * t)
    base = _mehler(rho, -math.expm1(-4.0 * t), x, y)
    if sign == 1:
        base = base * math.exp(-2.0 * t)
    return _scalar(base)


def oscillator_eigenvalue(sign, N):
    _check_sign(sign)
    return 2 * N + (2 if sign == 1 else 0)


def oscillator_trace_integral(sign, t):
    """Exact ``int e^{-t L^{sign}}(x, x) dx``: geometric series of the spectrum."""
    _check_sign(sign)
    _check_time(t)
    if sign == -1:
        return 1.0 / -math.expm1(-2.0 * t)
    return 1.0 / math.expm1(2.0 * t)


def quadrature_half_width(t, tail=1e-14):
    """Half-width ``L`` beyond which the diagonal kernel is below ``tail``.

    The diagonal decays like ``exp(-tanh(t) x^2)`` with prefactor at most
    ``(pi (1 - e^{-4t}))^{-1/2}``.
    """
    _check_time(t)
    prefactor = 1.0 / math.sqrt(math.pi * -math.expm1(-4.0 * t))
    return math.sqrt(max(math.log(prefactor / tail), 1.0) / math.tanh(t))


def oscillator_trace_quadrature(sign, t, tail=1e-14):
    """Adaptive Gauss-Kronrod quadrature of the diagonal of ``e^{-t L^{sign}}``."""
    _check_sign(sign)
    half = quadrature_half_width(t, tail)
    value, _ = integrate.quad(
        lambda s: oscillator_heat_kernel(sign, t, s, s),
        -half, half, epsabs=1e-13, epsrel=1e-13, limit=200, points=[0.0],
    )
    return value


# -- model critical point ----------------------------------------------------


def axis_sign_profile(hessian_signs, I):
    """Per-axis oscillator selector for an arbitrary axis ordering.

    ``hessian_signs[i-1]`` is -1 on descending axes (that is ``eps_i``) and
    ``eps_i^I`` is +1 exactly on the axes listed in ``I``.
    """
    n = len(hessian_signs)
    I = validate_multi_index(I, n)
    return tuple(int(e) * (1 if i in I else -1) for i, e in enumerate(hessian_signs, start=1))


def model_sign_profile(p, I):
    """Sign profile ``s_i = eps_i eps_i^I``; -1 selects ``L_i^-`` and +1 selects ``L_i^+``."""
    return axis_sign_profile(p.hessian_signs, I)


def _as_point(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (n,):
        raise ShapeError(f"expected points with trailing dimension {n}, got shape {x.shape}")
    return x


def axis_kernel_component(signs, t, x, y):
    """Product of 1D oscillator kernels along axes with given sign profile."""
    n = len(signs)
    x = _as_point(x, n)
    y = _as_point(y, n)
    value = 1.0
    for i, s in enumerate(signs):
        value = value * oscillator_heat_kernel(s, t, x[..., i], y[..., i])
    return _scalar(value)


def model_kernel_component(p, I, t, x, y):
    """``e^{-t Delta_{f,p}^I}(x, y)`` as a product of one-dimensional kernels."""
    _check_time(t)
    return axis_kernel_component(model_sign_profile(p, I), t, x, y)


def model_eigenvalue(p, I, N):
    """Eigenvalue of ``Delta_{f,p}^I`` on the product Hermite function indexed by ``N``."""
    N = tuple(int(v) for v in N)
    if len(N) != p.n:
        raise ShapeError(f"expected {p.n} quantum numbers, got {len(N)}")
    if any(v < 0 for v in N):
        raise DomainError(f"quantum numbers must be non-negative, got {N}")
    return sum(oscillator_eigenvalue(s, v) for s, v in zip(model_sign_profile(p, I), N))


def model_trace(p, r, t, x):
    """Pointwise trace ``sum'_I e^{-t Delta_{f,p}^I}(x, x)`` over ``|I| = r``."""
    _check_time(t)
    return sum(model_kernel_component(p, I, t, x, x) for I in multi_indices(p.n, r))


def model_trace_integral(p, r, t):
    """``int tr e^{-t Delta_{f,p}^{(r)}}(x, x) dx``; tends to 1 if ``r == l`` else 0."""
    _check_time(t)
    total = 0.0
    for I in multi_indices(p.n, r):
        term = 1.0
        for s in model_sign_profile(p, I):
            term *= oscillator_trace_integral(s, t)
        total += term
    return total
