"""Eisenstein series on the modular surface and Weyl-sum identities.

The series is evaluated on the critical line through its Fourier expansion

    E(z, 1/2 + it) = y^s + phi(t) y^{1-s}
        + (4 sqrt(y) / xi(1 + 2it)) sum_{n >= 1} lam_t(n) K_{it}(2 pi n y)
          cos(2 pi n x),

with xi(s) = pi^{-s/2} Gamma(s/2) zeta(s), scattering coefficient
phi(t) = xi(1 - 2it)/xi(1 + 2it) (unimodular), and the real divisor sums
lam_t(n) = sum_{ad=n} (a/d)^{it}.

Empirical Weyl sums integrate E against discrete measures; the exact
squared Weyl sums for Heegner/geodesic measures come out of the class
number formula with the gamma factors H_-/H_+, and the two routes are
compared by `weyl_compare`.  `berry_esseen_rhs` assembles the spectral
upper bound for the Wasserstein distance, with the cuspidal contribution
supplied as external data.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import loggamma

from ._gl import gl_panels
from .arithmetic import (
    SURFACE_AREA,
    DiscreteMeasure,
    geodesic_measure,
    heegner_measure,
    is_fundamental,
)
from .specfun import (
    bessel_k_imag_many,
    dirichlet_l,
    h_minus,
    h_plus,
    riemann_zeta,
)

_T_MIN = 1e-6


class FourierTruncationWarning(RuntimeWarning):
    """First omitted Fourier term may exceed the stated tolerance."""


@dataclass(frozen=True)
class EisensteinParams:
    """Fourier truncation and t-quadrature controls.

    ``n_fourier`` of None selects, per evaluation, the smallest n with
    2 pi n y_min > 40, making omitted Bessel terms negligible.
    ``t_quad`` is a (panels, nodes-per-panel) Gauss-Legendre descriptor for
    each half-line of the spectral integral; ``t_max`` truncates it and
    must cover at least 3T for the bandwidth in use.
    """

    n_fourier: int | None = None
    t_quad: tuple[int, int] = (12, 16)
    t_max: float = 15.0

    def __post_init__(self):
        if self.n_fourier is not None and self.n_fourier < 1:
            raise ValueError("n_fourier must be at least 1")
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")


DEFAULT_PARAMS = EisensteinParams()


def _check_t(t: float) -> float:
    t = float(t)
    if abs(t) < _T_MIN:
        raise ValueError(f"|t| must be at least {_T_MIN}; the scattering quotient "
                         "is numerically delicate at t = 0")
    return t


def _log_xi(s: complex) -> complex:
    """log xi(s) for the completed zeta xi(s) = pi^{-s/2} Gamma(s/2) zeta(s)."""
    return -0.5 * s * math.log(math.pi) + loggamma(s / 2.0) + cmath.log(riemann_zeta(s))


def scattering_phi(t: float) -> complex:
    """Scattering coefficient phi(1/2 + it) = xi(2s - 1)/xi(2s); unimodular.

    Computed through the functional equation as xi(1 - 2it)/xi(1 + 2it),
    whose numerator is the conjugate of the denominator for real t, so the
    result is a pure phase.
    """
    t = _check_t(t)
    s = complex(1.0, 2.0 * t)
    phase = -2.0 * _log_xi(s).imag
    return cmath.exp(1j * phase)


def _divisor_lambdas(n_max: int, t: float) -> np.ndarray:
    """Real coefficients lam_t(n) = sum_{ad=n} (a/d)^{it} for n = 1..n_max."""
    lam = np.zeros(n_max)
    for n in range(1, n_max + 1):
        total = 0.0
        for d in range(1, n + 1):
            if n % d == 0:
                total += math.cos(t * math.log(n / (d * d)))
        lam[n - 1] = total
    return lam


def _auto_n_fourier(y_min: float, t: float) -> int:
    # past 2 pi n y > max(40, |t| + 15) the Bessel factor is in its
    # exponential regime and each further term drops by ~e^{-2 pi y};
    # one extra term keeps the omitted part below 1e-12 relative
    return max(1, math.ceil(max(40.0, abs(t) + 15.0) / (2.0 * math.pi * y_min))) + 1


def eisenstein_eval_many(xs: np.ndarray, ys: np.ndarray, t: float,
                         p: EisensteinParams = DEFAULT_PARAMS) -> np.ndarray:
    """E(z, 1/2 + it) at an array of points; vectorised Fourier expansion."""
    t = _check_t(t)
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    y_min = float(ys.min())
    n_f = p.n_fourier if p.n_fourier is not None else _auto_n_fourier(y_min, t)

    xi_2s = cmath.exp(_log_xi(complex(1.0, 2.0 * t)))
    phi = scattering_phi(t)
    sqrt_y = np.sqrt(ys)
    logy = np.log(ys)
    out = sqrt_y * (np.exp(1j * t * logy) + phi * np.exp(-1j * t * logy))

    lam = _divisor_lambdas(n_f, t)
    ns = np.arange(1, n_f + 1, dtype=float)
    with warnings.catch_warnings():
        # arguments beyond 700 belong to atoms high in the cusp whose
        # Fourier terms are exact zeros at double precision
        warnings.simplefilter("ignore")
        kb = bessel_k_imag_many(t, 2.0 * math.pi * np.multiply.outer(ns, ys))
    fourier = (lam[:, None] * kb * np.cos(2.0 * math.pi * np.outer(ns, xs))).sum(axis=0)
    out = out + (4.0 / xi_2s) * sqrt_y * fourier

    # estimate the first omitted term from the last included one: in the
    # exponential regime each n-step loses a factor ~e^{-2 pi y_min}
    last = 4.0 / abs(xi_2s) * float((sqrt_y * np.abs(lam[-1] * kb[-1])).max())
    omitted = last * math.exp(-2.0 * math.pi * y_min)
    if omitted > 1e-12 * float(np.abs(out).max() + 1e-300):
        warnings.warn(
            f"first omitted Fourier term ~{omitted:.2e} exceeds 1e-12 of the value",
            FourierTruncationWarning, stacklevel=2,
        )
    return out


def eisenstein_eval(z, t: float, p: EisensteinParams = DEFAULT_PARAMS) -> complex:
    """E(z, 1/2 + it) at a single point (no reduction is applied)."""
    return complex(eisenstein_eval_many(np.array([z.x]), np.array([z.y]), t, p)[0])


def weyl_sum_empirical(m: DiscreteMeasure, t: float,
                       p: EisensteinParams = DEFAULT_PARAMS) -> complex:
    """Integral of E(., 1/2 + it) against a discrete measure."""
    vals = eisenstein_eval_many(m.xs, m.ys, t, p)
    return complex((m.weights * vals).sum())


def weyl_sum_exact_sq(D: int, t: float) -> float:
    """Exact squared Weyl sum |int E dnu_D|^2 from the L-function identity.

    Equals H_{sgn D}(t) / (4 sqrt|D| L(1, chi_D)^2) times
    |zeta(1/2+it) L(1/2+it, chi_D) / zeta(1+2it)|^2; nonnegative, even in t.
    """
    if not is_fundamental(D):
        raise ValueError(f"{D} is not a fundamental discriminant")
    t = _check_t(t)
    H = h_minus(t) if D < 0 else h_plus(t)
    L1 = dirichlet_l(1.0, D).real
    s = complex(0.5, t)
    num = riemann_zeta(s) * dirichlet_l(s, D)
    den = riemann_zeta(complex(1.0, 2.0 * t))
    return H / (4.0 * math.sqrt(abs(D)) * L1 * L1) * abs(num / den) ** 2


@dataclass(frozen=True)
class WeylComparison:
    empirical_sq: float
    exact_sq: float
    ratio: float


def weyl_compare(D: int, t: float, p: EisensteinParams = DEFAULT_PARAMS,
                 samples_per_unit_length: int = 200) -> WeylComparison:
    """Empirical versus exact squared Weyl sum for the measure of discriminant D.

    For D < 0 the measure is the Heegner-point measure; for D > 0 the
    closed geodesics are sampled at the given rate.  The headline identity
    is ratio = 1.
    """
    m = heegner_measure(D) if D < 0 else geodesic_measure(D, samples_per_unit_length)
    emp = abs(weyl_sum_empirical(m, t, p)) ** 2
    exact = weyl_sum_exact_sq(D, t)
    return WeylComparison(empirical_sq=emp, exact_sq=exact, ratio=emp / exact)


# ---------------------------------------------------------------------------
# Maass cusp form data (externally supplied) and the Berry-Esseen bound


@dataclass(frozen=True)
class MaassData:
    """Rows (t_f, squared Weyl-sum difference) for the cuspidal spectrum."""

    t_f: np.ndarray
    weyl_sq_diff: np.ndarray

    def __post_init__(self):
        tf = np.asarray(self.t_f, dtype=float)
        wd = np.asarray(self.weyl_sq_diff, dtype=float)
        object.__setattr__(self, "t_f", tf)
        object.__setattr__(self, "weyl_sq_diff", wd)
        if len(tf) != len(wd):
            raise ValueError("t_f and weyl_sq_diff must have equal length")
        if len(tf) and (np.any(tf <= 0) or np.any(np.diff(tf) <= 0)):
            raise ValueError("t_f must be positive and strictly increasing")
        if np.any(wd < 0):
            raise ValueError("squared Weyl-sum differences must be nonnegative")

    @classmethod
    def load(cls, path: str) -> "MaassData":
        """Read rows "t_f weyl_sq_diff" from a plain-text file; '#' comments."""
        tf, wd = [], []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise ValueError(f"malformed MaassData row: {line!r}")
                tf.append(float(parts[0]))
                wd.append(float(parts[1]))
        return cls(np.array(tf), np.array(wd))


@dataclass(frozen=True)
class BerryEsseenBound:
    """Evaluated right-hand side of the Wasserstein Berry-Esseen inequality."""

    leading_term: float
    eisenstein_term: float
    cuspidal_term: float
    total: float
    eisenstein_tail_bound: float
    is_partial: bool


def berry_esseen_rhs(
    m1: DiscreteMeasure,
    m2: DiscreteMeasure,
    T: float,
    data: MaassData | None = None,
    p: EisensteinParams = DEFAULT_PARAMS,
) -> BerryEsseenBound:
    """Spectral upper bound 1/T + sqrt(mu) sqrt(cuspidal + eisenstein).

    The Eisenstein term is (1/4 pi) int e^{-t^2/T^2}/(1/4+t^2) |Delta E(t)|^2 dt
    over |t| <= t_max (Gauss-Legendre panels; nodes avoid t = 0), with the
    Gaussian tail beyond t_max reported as an analytic bound rather than
    silently dropped.  Without cuspidal data the result is a partial
    evaluation of the bound, flagged by ``is_partial``.
    """
    if T < 1.0:
        raise ValueError("T must be at least 1")
    if p.t_max < 3.0 * T:
        raise ValueError(f"t_max = {p.t_max} is below 3T = {3*T}")

    nodes, wts = gl_panels(0.0, p.t_max, *p.t_quad)
    sq = np.empty_like(nodes)
    for i, t in enumerate(nodes):
        d = weyl_sum_empirical(m1, float(t), p) - weyl_sum_empirical(m2, float(t), p)
        sq[i] = abs(d) ** 2
    weight = np.exp(-(nodes**2) / (T * T)) / (0.25 + nodes**2)
    # even integrand: both half-lines
    eis = float(2.0 * (wts * weight * sq).sum() / (4.0 * math.pi))

    # tail bound: |Delta E|^2 <= 2 max computed, Gaussian decay past t_max
    a = p.t_max
    m_sq = 2.0 * float(sq.max(initial=0.0))
    tail = m_sq * math.exp(-a * a / (T * T)) * T * T / (2.0 * a * (0.25 + a * a))
    tail *= 2.0 / (4.0 * math.pi)

    if data is None or len(data.t_f) == 0:
        cusp = 0.0
        partial = True
        warnings.warn(
            "no cuspidal data supplied; the bound is a partial evaluation "
            "(Eisenstein part only)",
            stacklevel=2,
        )
    else:
        w = np.exp(-data.t_f**2 / (T * T)) / (0.25 + data.t_f**2)
        cusp = float((w * data.weyl_sq_diff).sum())
        partial = False

    leading = 1.0 / T
    total = leading + math.sqrt(SURFACE_AREA) * math.sqrt(cusp + eis)
    return BerryEsseenBound(
        leading_term=leading,
        eisenstein_term=eis,
        cuspidal_term=cusp,
        total=total,
        eisenstein_tail_bound=tail,
        is_partial=partial,
    )
