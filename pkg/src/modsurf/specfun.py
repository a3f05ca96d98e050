"""Special functions for the transform and L-function layers.

Imaginary-order K-Bessel and conical Legendre functions are evaluated by
quadrature of integral representations (the endpoint singularity of the
Mehler-Dirichlet formula is removed by a square-root substitution).  The
Riemann and Hurwitz zeta functions use Euler-Maclaurin summation, valid
comfortably on Re s >= 1/2 with |Im s| <= 1e3.  Dirichlet L-functions of
quadratic characters are assembled from Hurwitz zeta values; the gamma
factors for the Weyl-sum identities are computed in log-gamma space.
"""

from __future__ import annotations

import math
import warnings
from fractions import Fraction

import numpy as np
from scipy.special import digamma, loggamma

from ._gl import gl_panels


class PoleError(ValueError):
    """Evaluation requested at a pole."""


class UnderflowWarning(RuntimeWarning):
    """Result underflowed to zero and was clamped."""


# ---------------------------------------------------------------------------
# Gamma


def log_gamma_complex(s: complex) -> complex:
    """Principal branch of log Gamma(s).

    Raises
    ------
    PoleError
        At the poles s = 0, -1, -2, ...
    """
    s = complex(s)
    if s.imag == 0.0 and s.real <= 0.0 and s.real == int(s.real):
        raise PoleError(f"log-gamma pole at s = {s.real}")
    return complex(loggamma(s))


# ---------------------------------------------------------------------------
# Euler-Maclaurin zeta

# B_{2j} for j = 1..15, exact rationals.
_B2J = [
    Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30),
    Fraction(5, 66), Fraction(-691, 2730), Fraction(7, 6), Fraction(-3617, 510),
    Fraction(43867, 798), Fraction(-174611, 330), Fraction(854513, 138),
    Fraction(-236364091, 2730), Fraction(8553103, 6),
    Fraction(-23749461029, 870), Fraction(8615841276005, 14322),
]


def _b2j_over_fact(j_max: int) -> np.ndarray:
    """B_{2j}/(2j)! for j = 1..j_max; exact table, then via zeta(2j)."""
    out = []
    for j in range(1, j_max + 1):
        if j <= len(_B2J):
            out.append(float(_B2J[j - 1]) / math.factorial(2 * j))
        else:
            zeta2j = sum(k ** (-2 * j) for k in range(1, 8))
            out.append((-1) ** (j + 1) * 2.0 * zeta2j / (2.0 * math.pi) ** (2 * j))
    return np.array(out)


# Read-only after import; sized for double the default order.
_B2J_FACT = _b2j_over_fact(32)

_EM_ORDER = 14


def _hurwitz_many(s: complex, a: np.ndarray, n_terms: int | None = None,
                  order: int | None = None) -> np.ndarray:
    """Euler-Maclaurin Hurwitz zeta for an array of shifts a in (0, 1]."""
    s = complex(s)
    if s == 1:
        raise PoleError("zeta pole at s = 1")
    N = n_terms if n_terms is not None else max(25, math.ceil(1.2 * abs(s.imag)))
    M = order if order is not None else _EM_ORDER
    a = np.asarray(a, dtype=float)
    k = np.arange(N, dtype=float)
    base = k[:, None] + a[None, :]
    head = np.exp(-s * np.log(base)).sum(axis=0)
    z = N + a
    logz = np.log(z)
    zs = np.exp(-s * logz)
    out = head + zs * z / (s - 1.0) + 0.5 * zs
    # asymptotic tail: sum over j >= 1 of B_2j/(2j)! * (s)_{2j-1} * z^(-s-2j+1)
    poch = s  # (s)_1
    zpow = zs / z  # z^(-s-1)
    z2 = z * z
    for j in range(M):
        out += _B2J_FACT[j] * poch * zpow
        poch *= (s + 2 * j + 1) * (s + 2 * j + 2)
        zpow = zpow / z2
    return out


def hurwitz_zeta(s: complex, a: float, n_terms: int | None = None,
                 order: int | None = None) -> complex:
    """Hurwitz zeta zeta(s, a) for 0 < a <= 1, s != 1.

    Euler-Maclaurin summation; the defaults are calibrated so that doubling
    both the truncation and the order moves the value by < 1e-10 on
    Re s >= 1/2, |Im s| <= 1e3.
    """
    if not (0.0 < a <= 1.0):
        raise ValueError(f"shift a must lie in (0, 1], got {a}")
    return complex(_hurwitz_many(s, np.array([a]), n_terms, order)[0])


def riemann_zeta(s: complex, n_terms: int | None = None,
                 order: int | None = None) -> complex:
    """Riemann zeta via Euler-Maclaurin; pole error at s = 1."""
    return hurwitz_zeta(s, 1.0, n_terms, order)


# ---------------------------------------------------------------------------
# Quadratic characters and L-functions


def kronecker_symbol(D: int, n: int) -> int:
    """Kronecker symbol (D|n), the quadratic character chi_D when D is fundamental."""
    a, b = D, n
    if b == 0:
        return 1 if abs(a) == 1 else 0
    if a % 2 == 0 and b % 2 == 0:
        return 0
    k = 1
    v = 0
    while b % 2 == 0:
        b //= 2
        v += 1
    if v % 2 == 1 and a % 8 in (3, 5):
        k = -1
    if b < 0:
        b = -b
        if a < 0:
            k = -k
    a %= b
    while a != 0:
        v = 0
        while a % 2 == 0:
            a //= 2
            v += 1
        if v % 2 == 1 and b % 8 in (3, 5):
            k = -k
        if a % 4 == 3 and b % 4 == 3:
            k = -k
        a, b = b % a, a
    return k if b == 1 else 0


def _check_fundamental(D: int) -> None:
    from .arithmetic import is_fundamental

    if not is_fundamental(D):
        raise ValueError(f"{D} is not a fundamental discriminant")


def dirichlet_l(s: complex, D: int) -> complex:
    """L(s, chi_D) for a fundamental discriminant D.

    For s != 1 this is |D|^-s sum_a chi_D(a) zeta(s, a/|D|); at s = 1 the
    digamma formula L(1, chi) = -(1/q) sum_a chi(a) psi(a/q) is used, which
    avoids the cancelling zeta poles.
    """
    _check_fundamental(D)
    q = abs(D)
    a = np.arange(1, q + 1)
    chi = np.array([kronecker_symbol(D, int(x)) for x in a], dtype=float)
    s = complex(s)
    if s == 1:
        return complex(-(chi * digamma(a / q)).sum() / q)
    vals = _hurwitz_many(s, a / q)
    return complex(np.exp(-s * math.log(q)) * (chi * vals).sum())


# ---------------------------------------------------------------------------
# K-Bessel of imaginary order

_BESSEL_X_MAX = 700.0


def _bessel_nodes(tau: float, x_min: float) -> tuple[np.ndarray, np.ndarray]:
    theta_max = math.acosh(1.0 + 46.0 / x_min)
    h = min(0.5, 2.5 / max(1.0, abs(tau)))
    n_panels = max(4, math.ceil(theta_max / h))
    return gl_panels(0.0, theta_max, n_panels, 16)


def bessel_k_imag_many(tau: float, xs: np.ndarray) -> np.ndarray:
    """Vectorised K_{i tau}(x) over an array of positive arguments."""
    xs = np.asarray(xs, dtype=float)
    out = np.zeros(xs.shape)
    live = xs <= _BESSEL_X_MAX
    if np.any(xs <= 0.0):
        raise ValueError("bessel_k_imag requires x > 0")
    if not np.all(live):
        warnings.warn("K_{i tau}(x) underflows for x > 700; clamped to 0",
                      UnderflowWarning, stacklevel=2)
    if np.any(live):
        xl = xs[live]
        nodes, wts = _bessel_nodes(tau, float(xl.min()))
        ker = np.exp(-np.multiply.outer(xl, np.cosh(nodes)))
        out[live] = ker @ (wts * np.cos(tau * nodes))
    return out


def bessel_k_imag(tau: float, x: float) -> float:
    """K_{i tau}(x) = int_0^inf exp(-x cosh t) cos(tau t) dt; real, even in tau."""
    return float(bessel_k_imag_many(tau, np.array([x]))[0])


# ---------------------------------------------------------------------------
# Conical Legendre function


def conical_p(t: float, u: float) -> float:
    """Conical function P_{-1/2 + it}(1 + 2u) for real t and u >= 0.

    Mehler-Dirichlet representation on the geodesic scale xi = 2 arsinh
    sqrt(u), with the endpoint singularity removed by the substitution
    s = xi - q^2 and the difference of cosh rewritten as a product of sinh
    to avoid cancellation.
    """
    if u < 0.0:
        raise ValueError("u must be nonnegative")
    if u == 0.0:
        return 1.0
    xi = 2.0 * math.asinh(math.sqrt(u))
    tau = abs(float(t))
    n_panels = max(2, math.ceil(tau * xi / 2.5))
    q, w = gl_panels(0.0, math.sqrt(xi), n_panels, 16)
    q2 = q * q
    integrand = 2.0 * q * np.cos(tau * (xi - q2)) / np.sqrt(
        2.0 * np.sinh(xi - 0.5 * q2) * np.sinh(0.5 * q2)
    )
    return float(math.sqrt(2.0) / math.pi * (w * integrand).sum())


def conical_p_many(t: float, us: np.ndarray) -> np.ndarray:
    """Vectorised conical_p over an array of nonnegative u."""
    return np.array([conical_p(t, float(u)) for u in np.asarray(us, dtype=float)])


# ---------------------------------------------------------------------------
# Gamma factors of the Weyl-sum identities


def h_minus(t: float) -> float:
    """The constant gamma factor 2 pi^2 attached to imaginary discriminants."""
    return 2.0 * math.pi**2


def h_plus(t: float) -> float:
    """Gamma factor for real discriminants; positive and even in t.

    Equals |Gamma(1/4 + it/2)^2 / Gamma(1/2 + it)|^2 for real t.
    """
    t = float(t)
    lg1 = loggamma(complex(0.25, 0.5 * t)).real
    lg2 = loggamma(complex(0.5, t)).real
    return math.exp(4.0 * lg1 - 2.0 * lg2)


def h_watson(t: float, t_g: float) -> float:
    """Gamma-quotient weight H(t, t_g) of the mass-equidistribution Weyl sums.

    Positive, even in t; decays like exp(-pi(|t| - 2 t_g)) past |t| = 2 t_g.
    """
    if not t_g > 0:
        raise ValueError("t_g must be positive")
    t = float(t)
    t_g = float(t_g)
    log_h = (
        4.0 * loggamma(complex(0.25, 0.5 * t)).real
        - 2.0 * loggamma(complex(0.5, t)).real
        + 2.0 * loggamma(complex(0.25, 0.5 * (2.0 * t_g + t))).real
        + 2.0 * loggamma(complex(0.25, 0.5 * (2.0 * t_g - t))).real
        - 4.0 * loggamma(complex(0.5, t_g)).real
    )
    return math.exp(log_h)
