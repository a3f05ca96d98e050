"""Binary quadratic forms, Heegner points, closed geodesics and measures.

Class groups are enumerated through reduced forms: for D < 0 the standard
reduction |b| <= a <= c (with b >= 0 on ties), for D > 0 one representative
per cycle of reduced indefinite forms, which is in bijection with the
narrow class group.  The probability measures produced here are the
Heegner-point measure (equal weights), the closed-geodesic measure
(uniform in hyperbolic arclength) and a cell-centred discretisation of the
normalised Haar measure with an explicit cusp-tail atom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import hypgeo
from .hypgeo import Point, UnimodularMatrix, fundamental_domain_grid

SURFACE_AREA = math.pi / 3.0  # mu(Gamma \ H) for the modular group

_PELL_MAX_PERIOD = 100_000


def _squarefree(n: int) -> bool:
    n = abs(n)
    d = 2
    while d * d <= n:
        if n % (d * d) == 0:
            return False
        d += 1
    return True


def is_fundamental(D: int) -> bool:
    """True iff D is a fundamental discriminant."""
    if D == 0 or D == 1:
        return False
    if D % 4 == 1:
        return _squarefree(D)
    if D % 4 == 0:
        m = D // 4
        return m % 4 in (2, 3) and _squarefree(m)
    return False


def _require_fundamental(D: int) -> None:
    if not is_fundamental(D):
        raise ValueError(f"{D} is not a fundamental discriminant")


@dataclass(frozen=True)
class QuadraticForm:
    """Primitive integral binary quadratic form a x^2 + b xy + c y^2."""

    a: int
    b: int
    c: int

    def __post_init__(self):
        if math.gcd(math.gcd(self.a, self.b), self.c) != 1:
            raise ValueError(f"form {self} is not primitive")
        if self.discriminant < 0 and self.a <= 0:
            raise ValueError("definite forms must be positive definite (a > 0)")

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def heegner_point(self) -> Point:
        """Root (-b + i sqrt(|D|)) / (2a) in the upper half-plane (D < 0)."""
        D = self.discriminant
        if D >= 0:
            raise ValueError("Heegner points require D < 0")
        return Point(-self.b / (2 * self.a), math.sqrt(-D) / (2 * self.a))


@dataclass(frozen=True)
class ClosedGeodesic:
    """The closed geodesic attached to a narrow class of discriminant D > 0."""

    form: QuadraticForm
    endpoints: tuple[float, float]
    length: float
    automorph: UnimodularMatrix


# ---------------------------------------------------------------------------
# Form enumeration


def reduced_forms(D: int) -> list[QuadraticForm]:
    """One reduced-form representative per (narrow, if D > 0) class."""
    _require_fundamental(D)
    if D < 0:
        return _reduced_forms_definite(D)
    return [cycle[0] for cycle in _form_cycles(D)]


def _reduced_forms_definite(D: int) -> list[QuadraticForm]:
    forms = []
    a_max = math.isqrt(-D // 3)
    for a in range(1, a_max + 1):
        for b in range(-a, a + 1):
            if (b * b - D) % (4 * a) != 0:
                continue
            c = (b * b - D) // (4 * a)
            if c < a:
                continue
            if b < 0 and (-b == a or a == c):
                continue
            if math.gcd(math.gcd(a, b), c) != 1:
                continue
            forms.append(QuadraticForm(a, b, c))
    return sorted(forms, key=lambda f: (f.a, f.b, f.c))


def _is_reduced_indefinite(a: int, b: int, c: int, D: int) -> bool:
    s = math.sqrt(D)
    return 0 < b < s and s - b < 2 * abs(a) < s + b


def _rho_step(f: QuadraticForm, D: int) -> QuadraticForm:
    """Reduction step (a, b, c) -> (c, b', c') continuing the cycle."""
    a, b, c = f.a, f.b, f.c
    s = math.isqrt(D)
    # b' = -b mod 2|c|, shifted into (sqrt(D) - 2|c|, sqrt(D))
    m = 2 * abs(c)
    b1 = (-b) % m
    while b1 + m <= s:
        b1 += m
    while b1 > s or (b1 * b1 > D and b1 - m > 0):
        b1 -= m
    c1 = (b1 * b1 - D) // (4 * c)
    return QuadraticForm(c, b1, c1)


def _form_cycles(D: int) -> list[list[QuadraticForm]]:
    """Cycles of reduced indefinite forms; one cycle per narrow class."""
    s = math.isqrt(D)
    reduced = set()
    for b in range(1, s + 1):
        if (D - b * b) % 4 != 0:
            continue
        ac = (b * b - D) // 4  # negative
        for a in range(1, s + 1):
            if ac % a != 0:
                continue
            for aa in (a, -a):
                c = ac // aa
                if not _is_reduced_indefinite(aa, b, c, D):
                    continue
                if math.gcd(math.gcd(aa, b), c) != 1:
                    continue
                reduced.add((aa, b, c))
    cycles = []
    remaining = set(reduced)
    for start in sorted(reduced):
        if start not in remaining:
            continue
        cycle = []
        f = QuadraticForm(*start)
        while True:
            key = (f.a, f.b, f.c)
            if key not in remaining:
                break
            remaining.discard(key)
            cycle.append(f)
            f = _rho_step(f, D)
        cycles.append(cycle)
    return cycles


def class_number(D: int) -> int:
    """Class number h(D) (narrow class number for D > 0) by enumeration."""
    return len(reduced_forms(D))


# ---------------------------------------------------------------------------
# Pell equation and closed geodesics


def _pell_unit(n: int) -> tuple[int, int]:
    """Fundamental solution of x^2 - n y^2 = 1 by continued fractions."""
    a0 = math.isqrt(n)
    m, d, a = 0, 1, a0
    h0, h1 = 1, a0
    k0, k1 = 0, 1
    for _ in range(_PELL_MAX_PERIOD):
        if h1 * h1 - n * k1 * k1 == 1:
            return h1, k1
        m = d * a - m
        d = (n - m * m) // d
        a = (a0 + m) // d
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
    raise RuntimeError(f"Pell solver exceeded {_PELL_MAX_PERIOD} iterations for n = {n}")


def _icbrt(n: int) -> int:
    # integer Newton iteration; safe for n beyond float range
    r = 1 << ((n.bit_length() + 2) // 3)
    while True:
        r2 = (2 * r + n // (r * r)) // 3
        if r2 >= r:
            break
        r = r2
    while r**3 > n:
        r -= 1
    while (r + 1) ** 3 <= n:
        r += 1
    return r


def pell_fundamental(D: int) -> tuple[int, int]:
    """Smallest positive solution (t, u) of t^2 - D u^2 = 4.

    For D = 0 mod 4 this reduces to the classical Pell equation for D/4.
    For D = 1 mod 4 the fundamental unit may be half-integral; it is then
    the (integer-verified) cube root of the x^2 - D y^2 = 1 solution, since
    the unit-group index divides 3.
    """
    _require_fundamental(D)
    if D <= 0:
        raise ValueError("Pell solutions require D > 0")
    if D % 4 == 0:
        x, y = _pell_unit(D // 4)
        return 2 * x, y
    x, y = _pell_unit(D)
    # try eta with eta^3 = x + y sqrt(D): eta ~ cbrt(2x), t = eta + 1/eta
    eta = _icbrt(2 * x)
    t0 = eta if eta >= 3 else round(eta + 1.0 / max(eta, 1))
    for t in (t0 - 1, t0, t0 + 1, t0 + 2):
        if t <= 0:
            continue
        v = t * t - 4
        if v % D == 0:
            u2 = v // D
            u = math.isqrt(u2)
            if u > 0 and u * u == u2 and (t + u) % 2 == 0:
                return t, u
    return 2 * x, 2 * y


def closed_geodesics(D: int) -> list[ClosedGeodesic]:
    """One closed geodesic per narrow class of discriminant D > 0.

    The common length is 2 log((t + u sqrt(D))/2) with (t, u) the
    fundamental solution of t^2 - D u^2 = 4; the automorph of the form
    (a, b, c) is ((t - bu)/2, -cu; au, (t + bu)/2).
    """
    _require_fundamental(D)
    if D <= 0:
        raise ValueError("closed geodesics require D > 0")
    t, u = pell_fundamental(D)
    length = 2.0 * math.log((t + u * math.sqrt(D)) / 2.0)
    out = []
    for f in reduced_forms(D):
        r = math.sqrt(D)
        e1 = (-f.b - r) / (2 * f.a)
        e2 = (-f.b + r) / (2 * f.a)
        auto = UnimodularMatrix(
            (t - f.b * u) // 2, -f.c * u, f.a * u, (t + f.b * u) // 2
        )
        out.append(ClosedGeodesic(f, (e1, e2), length, auto))
    return out


# ---------------------------------------------------------------------------
# Measures


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure on the modular surface.

    Atoms are stored as coordinate arrays (already reduced to the
    fundamental domain); weights are positive and sum to one.
    """

    xs: np.ndarray
    ys: np.ndarray
    weights: np.ndarray
    label: str = field(default="measure")

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        ws = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "weights", ws)
        if not (len(xs) == len(ys) == len(ws)) or len(xs) == 0:
            raise ValueError("atoms and weights must be nonempty and aligned")
        if np.any(ws <= 0):
            raise ValueError("weights must be positive")
        if abs(ws.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {ws.sum()}, not 1")
        if np.any(xs < -0.5) or np.any(xs >= 0.5) or np.any(xs * xs + ys * ys < 1.0 - 1e-9):
            raise ValueError("atoms must be reduced to the fundamental domain")

    def __len__(self) -> int:
        return len(self.weights)

    def points(self) -> list[Point]:
        return [Point(float(x), float(y)) for x, y in zip(self.xs, self.ys)]


def heegner_measure(D: int) -> DiscreteMeasure:
    """Uniform probability measure on the Heegner points of discriminant D < 0."""
    _require_fundamental(D)
    if D >= 0:
        raise ValueError("Heegner measures require D < 0")
    forms = reduced_forms(D)
    pts = [hypgeo.reduce(f.heegner_point()).point for f in forms]
    h = len(forms)
    return DiscreteMeasure(
        np.array([p.x for p in pts]),
        np.array([p.y for p in pts]),
        np.full(h, 1.0 / h),
        label=f"heegner D={D}",
    )


def geodesic_path_points(geo: ClosedGeodesic, samples_per_unit_length: int) -> np.ndarray:
    """Equal-arclength sample points along one period, as unreduced complex numbers.

    The geodesic is the semicircle through the form's real endpoints; with
    arclength parameter s the polar angle is theta = 2 arctan(e^s), and one
    period has length ``geo.length``.
    """
    center = 0.5 * (geo.endpoints[0] + geo.endpoints[1])
    radius = 0.5 * abs(geo.endpoints[1] - geo.endpoints[0])
    n = max(2, math.ceil(geo.length * samples_per_unit_length))
    s = (np.arange(n) + 0.5) * (geo.length / n)
    theta = 2.0 * np.arctan(np.exp(s))
    return center + radius * np.exp(1j * theta)


def _apex(f: QuadraticForm, D: int) -> tuple[float, float]:
    return -f.b / (2.0 * f.a), math.sqrt(D) / (2.0 * abs(f.a))


def _flow_param(f: QuadraticForm, D: int, x: float, y: float) -> float:
    """Signed arclength along the axis of f, zero at the apex.

    The parameter increases toward the attracting endpoint
    (-b + sqrt(D))/(2a) of the form's automorph.
    """
    center = -f.b / (2.0 * f.a)
    theta = math.atan2(y, x - center)
    sigma = 1.0 if f.a > 0 else -1.0
    return -sigma * math.log(math.tan(0.5 * theta))


def _cycle_arcs(cycle: list[QuadraticForm], D: int):
    """Arc decomposition of a closed geodesic along its reduction cycle.

    Between consecutive cycle forms the step matrix (0, -1; 1, m) with
    m = (b_k + b_{k+1})/(2 c_k) carries the axis of f_{k+1} onto the axis
    of f_k, so the image of the next apex marks where the geodesic leaves
    the current form's arc.  Every arc is short (a single reduction step),
    which keeps the raw coordinates far from the real axis regardless of
    the total length.

    Returns (arcs, total): arcs as (form, arc_length), total their sum,
    which equals the class's closed-geodesic length.
    """
    ell = len(cycle)
    arcs = []
    total = 0.0
    for k in range(ell):
        f = cycle[k]
        g = cycle[(k + 1) % ell]
        num = f.b + g.b
        if num % (2 * f.c) != 0:
            raise RuntimeError(f"broken reduction cycle at {f} -> {g}")
        m = num // (2 * f.c)
        ax, ay = _apex(g, D)
        # step matrix (0, -1; 1, m) applied to the next apex
        den = ax * ax + ay * ay + 2.0 * m * ax + m * m
        bx = (-(ax + m)) / den
        by = ay / den
        delta = _flow_param(f, D, bx, by)
        if delta <= 0:
            raise RuntimeError(f"non-positive arc length at {f}")
        arcs.append((f, delta))
        total += delta
    return arcs, total


def _sample_cycle(cycle: list[QuadraticForm], D: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """n reduced equal-arclength samples along the cycle's closed geodesic."""
    arcs, total = _cycle_arcs(cycle, D)
    bounds = np.cumsum([0.0] + [d for _, d in arcs])
    t = (np.arange(n) + 0.5) * (total / n)
    idx = np.searchsorted(bounds, t, side="right") - 1
    xs = np.empty(n)
    ys = np.empty(n)
    r = math.sqrt(D)
    for k, (f, _delta) in enumerate(arcs):
        sel = idx == k
        if not np.any(sel):
            continue
        s = t[sel] - bounds[k]
        sigma = 1.0 if f.a > 0 else -1.0
        theta = 2.0 * np.arctan(np.exp(-sigma * s))
        center = -f.b / (2.0 * f.a)
        radius = r / (2.0 * abs(f.a))
        xs[sel] = center + radius * np.cos(theta)
        ys[sel] = radius * np.sin(theta)
    return hypgeo.reduce_batch(xs, ys)


def geodesic_measure(D: int, samples_per_unit_length: int) -> DiscreteMeasure:
    """Arclength-uniform sampling of the closed geodesics of discriminant D > 0.

    Each narrow class is sampled along its reduction cycle, one short arc
    per reduced form, so the construction is numerically stable for
    arbitrarily long geodesics.  Every class contributes the same number
    of equally spaced samples (the lengths agree), so all atoms carry
    equal weight and the measure refines to the normalised line-integral
    measure.
    """
    if samples_per_unit_length <= 0:
        raise ValueError("sampling rate must be positive")
    _require_fundamental(D)
    if D <= 0:
        raise ValueError("geodesic measures require D > 0")
    t, u = pell_fundamental(D)
    length = 2.0 * math.log((t + u * math.sqrt(D)) / 2.0)
    n = max(2, math.ceil(length * samples_per_unit_length))
    xs, ys = [], []
    for cycle in _form_cycles(D):
        x, y = _sample_cycle(cycle, D, n)
        xs.append(x)
        ys.append(y)
    xs = np.concatenate(xs)
    ys = np.concatenate(ys)
    total = len(xs)
    return DiscreteMeasure(xs, ys, np.full(total, 1.0 / total), label=f"geodesic D={D}")


def haar_discretization(n_x: int, n_levels: int, y_max: float) -> DiscreteMeasure:
    """Cell-centred discretisation of the probability Haar measure.

    Atoms carry (3/pi) times the exact mu-mass of their cell below height
    ``y_max``; the cusp tail mass 3/(pi y_max) sits on a single atom at
    height y_max, so the total mass is exactly one.
    """
    xs, ys, mu_w = fundamental_domain_grid(n_x, n_levels, y_max)
    scale = 3.0 / math.pi
    xs = np.append(xs, 0.0)
    ys = np.append(ys, y_max)
    ws = np.append(scale * mu_w, scale / y_max)
    return DiscreteMeasure(xs, ys, ws, label=f"haar n_x={n_x} n_levels={n_levels} Y={y_max}")


def cuspidal_mass(m: DiscreteMeasure, Y: float) -> float:
    """Total weight of atoms lying above height Y (in the cuspidal zone)."""
    if Y < 1.0:
        raise ValueError("Y must be at least 1")
    return float(m.weights[m.ys > Y].sum())


# ---------------------------------------------------------------------------
# Plain-text serialisation (17 significant digits; exact decimal round-trip)


def save_measure(m: DiscreteMeasure, path: str) -> None:
    """Write a measure as a text table: header line, then rows x y weight."""
    with open(path, "w") as fh:
        fh.write(f"# modsurf-measure label={m.label!r} atoms={len(m)}\n")
        for x, y, w in zip(m.xs, m.ys, m.weights):
            fh.write(f"{x:.17g} {y:.17g} {w:.17g}\n")


def load_measure(path: str) -> DiscreteMeasure:
    """Read a measure written by :func:`save_measure`."""
    label = "measure"
    xs, ys, ws = [], [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "label=" in line:
                    label = line.split("label=", 1)[1].split(" atoms=")[0].strip("'\"")
                continue
            sx, sy, sw = line.split()
            xs.append(float(sx))
            ys.append(float(sy))
            ws.append(float(sw))
    return DiscreteMeasure(np.array(xs), np.array(ys), np.array(ws), label=label)
