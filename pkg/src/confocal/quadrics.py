"""Confocal families of quadrics in E^n, S^n and H^n.

Euclidean families are pencils  sum_i x_i^2 / (a_i - lam) = 1  with
a_1 > ... > a_n > 0.  Spherical and hyperbolic families are the traces on
the model surface of the pencils of cones

    sum_i x_i^2 / (a_i - lam) - x_0^2 / (b + lam) = 0      (spherical)
    sum_i x_i^2 / (a_i - lam) - x_0^2 / (b - lam) = 0      (hyperbolic, a_i < b)

Through a generic model point pass n members of the family, one per class
interval; their parameters are the elliptic coordinates of the point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DegeneratePoint, InvalidParameters, NoRealPoint
from .geometry import Geometry, Kind, check_on_model, euclidean, geodesic_distance

DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class ConfocalFamily:
    geometry: Geometry
    a: tuple
    b: float | None = None

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        object.__setattr__(self, "a", a)
        if len(a) != self.geometry.n:
            raise InvalidParameters("need one semiaxis parameter per dimension")
        if any(v <= 0 for v in a):
            raise InvalidParameters("semiaxis parameters must be positive")
        strict = all(a[i] > a[i + 1] for i in range(len(a) - 1))
        if not strict:
            # the concentric-circle degeneration (all a_i equal) is allowed
            if not (self.geometry.kind is Kind.EUCLIDEAN and len(set(a)) == 1):
                raise InvalidParameters("semiaxis parameters must be strictly decreasing")
        if self.geometry.kind is Kind.EUCLIDEAN:
            if self.b is not None:
                raise InvalidParameters("b is only meaningful for curved families")
        else:
            if self.b is None or self.b <= 0:
                raise InvalidParameters("curved families need b > 0")
            if self.geometry.kind is Kind.HYPERBOLIC and max(a) >= self.b:
                raise InvalidParameters("hyperbolic families require a_i < b "
                                        "(light-cone containment)")

    @property
    def n(self) -> int:
        return self.geometry.n

    @property
    def is_circular(self) -> bool:
        return self.geometry.kind is Kind.EUCLIDEAN and len(set(self.a)) == 1

    def class_intervals(self):
        """The n open lambda-intervals, ascending: index 0 is the lowest
        (ellipsoid-like) class, index n-1 sits just below a_1."""
        a = sorted(self.a)
        if self.geometry.kind is Kind.SPHERICAL:
            lo = -self.b
        else:
            lo = -np.inf
        bounds = [lo] + a
        return [(bounds[i], bounds[i + 1]) for i in range(self.n)]

    def class_of(self, lam: float) -> int:
        for k, (lo, hi) in enumerate(self.class_intervals()):
            if lo <= lam <= hi:
                return k
        raise InvalidParameters(f"lambda={lam} outside the admissible range")


@dataclass(frozen=True)
class QuadricMember:
    family: ConfocalFamily
    lam: float

    def __post_init__(self):
        for ai in self.family.a:
            if abs(self.lam - ai) < DEGENERATE_TOL and not self.family.is_circular:
                raise InvalidParameters("lambda collides with a semiaxis parameter")
        self.family.class_of(self.lam)

    @property
    def class_index(self) -> int:
        return self.family.class_of(self.lam)


@dataclass(frozen=True)
class EllipticCoords:
    """Confocal parameters through a point, sorted descending, plus the
    orthant sign bits (the x0 sign leads for curved geometries)."""

    lam: tuple
    signs: tuple
    degenerate: tuple = field(default=())


def _split_point(family: ConfocalFamily, point):
    """Return (x0sq or None, spatial squares) for a model point."""
    x = np.asarray(point, dtype=float)
    if family.geometry.kind is Kind.EUCLIDEAN:
        return None, x * x
    x = check_on_model(family.geometry, x)
    return x[0] * x[0], x[1:] * x[1:]


def confocal_equation(family: ConfocalFamily, lam, point):
    """Rational confocal condition; zero when the lam-member passes through
    the point.  Euclidean: sum - 1; curved: the cone form q_lam."""
    x0sq, sq = _split_point(family, point)
    a = np.asarray(family.a)
    val = np.sum(sq / (a - lam))
    if family.geometry.kind is Kind.EUCLIDEAN:
        return val - 1.0
    if family.geometry.kind is Kind.SPHERICAL:
        return val - x0sq / (family.b + lam)
    return val - x0sq / (family.b - lam)


def _root_in_interval(g, lo, hi, expand_left=False):
    """One root of g in (lo, hi); g -> -inf at lo+ and +inf at hi- (or,
    with expand_left, g < 0 far to the left)."""
    if expand_left:
        width = max(1.0, abs(hi))
        left = hi - width
        while g(left) >= 0.0:
            width *= 4.0
            left = hi - width
            if width > 1e18:
                raise NoRealPoint("no sign change found expanding left")
        lo = left
        glo = g(lo)
    else:
        eps = (hi - lo) * 1e-9
        while True:
            glo = g(lo + eps)
            if glo < 0.0:
                lo = lo + eps
                break
            eps /= 16.0
            if eps < (hi - lo) * 1e-18:
                # root pinned at the left endpoint
                return lo
    eps = (hi - lo) * 1e-9
    while True:
        ghi = g(hi - eps)
        if ghi > 0.0:
            hi = hi - eps
            break
        eps /= 16.0
        if eps < (hi - lo) * 1e-18:
            return hi
    return brentq(g, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)


def confocal_parameters(family: ConfocalFamily, point, strict: bool = False) -> EllipticCoords:
    """Elliptic coordinates of a point: the n confocal parameters through it.

    Zero coordinates make a root collide with the matching semiaxis
    parameter (or with -b / b for x0 = 0); by default those roots are
    returned exactly and flagged, with strict=True they raise
    DegeneratePoint instead.
    """
    if family.is_circular:
        raise InvalidParameters("elliptic coordinates degenerate for circular families")
    geo = family.geometry
    x = np.asarray(point, dtype=float)
    x0sq, sq = _split_point(family, x)
    a = np.asarray(family.a)

    # coordinates below the degeneracy scale pin a root to the matching pole
    tiny = DEGENERATE_TOL ** 2
    zero_sp = [i for i in range(family.n) if sq[i] <= tiny]
    zero_x0 = geo.kind is not Kind.EUCLIDEAN and x0sq <= tiny
    if strict and (zero_sp or zero_x0):
        raise DegeneratePoint("point has a vanishing coordinate")
    if geo.kind is Kind.HYPERBOLIC and zero_x0:
        raise DegeneratePoint("hyperbolic model points have x0 >= 1")

    known = [a[i] for i in zero_sp]
    if zero_x0 and geo.kind is Kind.SPHERICAL:
        known.append(-family.b)

    keep = [i for i in range(family.n) if i not in zero_sp]
    ak = a[keep]
    sqk = sq[keep]

    def g(lam):
        val = np.sum(sqk / (ak - lam))
        if geo.kind is Kind.EUCLIDEAN:
            return val - 1.0
        if geo.kind is Kind.SPHERICAL:
            return val if zero_x0 else val - x0sq / (family.b + lam)
        return val - x0sq / (family.b - lam)

    asc = np.sort(ak)
    roots = []
    # one root between each pair of consecutive surviving poles
    for j in range(len(asc) - 1):
        roots.append(_root_in_interval(g, asc[j], asc[j + 1]))
    # the bottom root (absent when x0 = 0 on the sphere: only n'-1 roots)
    if len(asc) > 0 and not zero_x0:
        if geo.kind is Kind.SPHERICAL:
            roots.append(_root_in_interval(g, -family.b, asc[0]))
        else:
            roots.append(_root_in_interval(g, -np.inf, asc[0], expand_left=True))

    lam = tuple(sorted(roots + known, reverse=True))
    if geo.kind is Kind.EUCLIDEAN:
        signs = tuple(int(np.sign(v)) if v != 0 else 1 for v in x)
    else:
        signs = tuple(int(np.sign(v)) if v != 0 else 1 for v in x)
    return EllipticCoords(lam=lam, signs=signs, degenerate=tuple(sorted(known, reverse=True)))


def point_from_parameters(family: ConfocalFamily, coords: EllipticCoords | tuple,
                          signs=None) -> np.ndarray:
    """Invert the elliptic coordinates: solve the linear-in-squares system.

    The confocal condition is linear in the squared coordinates, so the n
    parameters (plus the model constraint for curved geometries) determine
    x_i^2 uniquely; signs pick the orthant.
    """
    if isinstance(coords, EllipticCoords):
        lam = np.asarray(coords.lam, dtype=float)
        if signs is None:
            signs = coords.signs
    else:
        lam = np.asarray(coords, dtype=float)
    geo = family.geometry
    a = np.asarray(family.a)
    m = geo.ambient_dim
    if signs is None:
        signs = (1,) * m
    signs = tuple(signs)

    # pair degenerate parameters with the coordinates they force to zero
    forced = {}  # column index in the ambient ordering -> 0
    free_lam = []
    for lv in lam:
        hit = None
        for i, ai in enumerate(a):
            if abs(lv - ai) < 1e-9:
                hit = i + (0 if geo.kind is Kind.EUCLIDEAN else 1)
                break
        if hit is None and geo.kind is Kind.SPHERICAL and abs(lv + family.b) < 1e-9:
            hit = 0
        if hit is not None:
            if hit in forced:
                raise NoRealPoint("two parameters collide with the same semiaxis")
            forced[hit] = 0.0
        else:
            free_lam.append(lv)

    cols = [j for j in range(m) if j not in forced]
    rows = []
    rhs = []
    for lv in free_lam:
        row = []
        for j in cols:
            if geo.kind is Kind.EUCLIDEAN:
                row.append(1.0 / (a[j] - lv))
            elif j == 0:
                denom = (family.b + lv) if geo.kind is Kind.SPHERICAL else (family.b - lv)
                row.append(-1.0 / denom)
            else:
                row.append(1.0 / (a[j - 1] - lv))
        rows.append(row)
        rhs.append(1.0 if geo.kind is Kind.EUCLIDEAN else 0.0)
    if geo.kind is Kind.SPHERICAL:
        rows.append([1.0] * len(cols))
        rhs.append(1.0)
    elif geo.kind is Kind.HYPERBOLIC:
        rows.append([-1.0 if j == 0 else 1.0 for j in cols])
        rhs.append(-1.0)

    if rows:
        sol = np.linalg.solve(np.asarray(rows), np.asarray(rhs))
    else:
        sol = np.zeros(0)
    squares = np.zeros(m)
    for j, v in zip(cols, sol):
        squares[j] = v
    if np.min(squares) < -1e-10:
        raise NoRealPoint(f"negative squared coordinate: {squares}")
    x = np.array(signs, dtype=float) * np.sqrt(np.clip(squares, 0.0, None))
    if geo.kind is Kind.HYPERBOLIC:
        x[0] = abs(x[0])  # upper sheet
    return x


def confocal_gradient(family: ConfocalFamily, lam: float, point) -> np.ndarray:
    """Ambient gradient of the confocal defining function at a point."""
    x = np.asarray(point, dtype=float)
    a = np.asarray(family.a)
    if family.geometry.kind is Kind.EUCLIDEAN:
        return 2.0 * x / (a - lam)
    g = np.empty_like(x)
    g[1:] = 2.0 * x[1:] / (a - lam)
    denom = (family.b + lam) if family.geometry.kind is Kind.SPHERICAL else (family.b - lam)
    g[0] = -2.0 * x[0] / denom
    return g


def tangent_parameters_of_line(family: ConfocalFamily, base_point, direction,
                               residual_tol: float = 1e-10):
    """Parameters of the n-1 confocal quadrics tangent to a Euclidean line.

    The restriction of the lam-quadric to the line {P + t d} is quadratic
    in t; tangency is a vanishing discriminant.  Returns the real roots of
    the cleared-denominator discriminant polynomial (degenerate focal
    parameters a_i are flagged separately by the caller via closeness).
    """
    if family.geometry.kind is not Kind.EUCLIDEAN:
        raise InvalidParameters("line tangency is implemented for Euclidean families")
    p = np.asarray(base_point, dtype=float)
    d = np.asarray(direction, dtype=float)
    a = np.asarray(family.a)
    n = family.n

    if n == 2:
        # closed form: the line with unit normal nu and offset c = nu . P is
        # tangent to the lam-member iff (a1-lam) nu1^2 + (a2-lam) nu2^2 = c^2
        nu = np.array([-d[1], d[0]]) / np.hypot(d[0], d[1])
        c = float(nu @ p)
        lam = float(a[0] * nu[0] ** 2 + a[1] * nu[1] ** 2 - c * c)
        return [lam]

    # general n: polynomial discriminant in lam
    from numpy.polynomial import polynomial as P

    def pi_except(i):
        poly = np.array([1.0])
        for j in range(n):
            if j != i:
                poly = P.polymul(poly, np.array([a[j], -1.0]))
        return poly

    big = P.polymul(pi_except(0), np.array([a[0], -1.0]))
    s_pd = np.zeros(1)
    s_dd = np.zeros(1)
    s_pp = np.zeros(1)
    for i in range(n):
        pi = pi_except(i)
        s_pd = P.polyadd(s_pd, p[i] * d[i] * pi)
        s_dd = P.polyadd(s_dd, d[i] * d[i] * pi)
        s_pp = P.polyadd(s_pp, p[i] * p[i] * pi)
    disc = P.polysub(P.polymul(s_pd, s_pd), P.polymul(s_dd, P.polysub(s_pp, big)))
    roots = np.polynomial.polynomial.polyroots(disc)
    out = []
    for r in roots:
        if abs(r.imag) > 1e-8:
            continue
        lam = float(r.real)
        if any(abs(lam - ai) < 1e-9 for ai in a):
            continue
        # keep only genuine tangencies (double root with d-quadratic term != 0)
        qdd = np.sum(d * d / (a - lam))
        qpd = np.sum(p * d / (a - lam))
        qpp = np.sum(p * p / (a - lam)) - 1.0
        if abs(qdd) < 1e-12:
            continue
        if abs(qpd * qpd - qdd * qpp) <= residual_tol * max(1.0, abs(qdd)):
            out.append(lam)
    out = sorted(set(round(v, 12) for v in out))
    return out


def ivory_parallelepiped_check(family: ConfocalFamily, intervals, signs=None,
                               tol: float = 1e-8) -> dict:
    """Great-diagonal lengths of a confocal coordinate parallelepiped.

    intervals: one (lo, hi) pair per class, ordered by descending lambda
    (matching the ordering of EllipticCoords.lam).  For circular families
    the second 'interval' is an angle range and the first a radius-class
    range, reflecting the polar degeneration.
    """
    geo = family.geometry
    n = family.n

    if family.is_circular:
        a0 = family.a[0]
        (l0, l1), (t0, t1) = intervals
        rs = [np.sqrt(a0 - l0), np.sqrt(a0 - l1)]
        corners = {}
        for i in range(2):
            for j in range(2):
                th = (t0, t1)[j]
                corners[(i, j)] = np.array([rs[i] * np.cos(th), rs[i] * np.sin(th)])
        d1 = geodesic_distance(geo, corners[(0, 0)], corners[(1, 1)])
        d2 = geodesic_distance(geo, corners[(0, 1)], corners[(1, 0)])
        spread = abs(d1 - d2)
        return {"vertices": corners, "diagonals": [d1, d2], "spread": spread,
                "passed": spread < tol}

    if len(intervals) != n:
        raise InvalidParameters("need one lambda interval per class")
    corners = {}
    for bits in np.ndindex(*(2,) * n):
        lam = tuple(intervals[k][bits[k]] for k in range(n))
        corners[bits] = point_from_parameters(family, lam, signs=signs)
    diagonals = []
    for bits in sorted(corners):
        if bits[0] == 1:
            continue
        opp = tuple(1 - bv for bv in bits)
        diagonals.append(geodesic_distance(geo, corners[bits], corners[opp]))
    spread = float(np.max(diagonals) - np.min(diagonals))
    return {"vertices": corners, "diagonals": diagonals, "spread": spread,
            "passed": spread < tol}


def random_interior_point(family: ConfocalFamily, rng) -> np.ndarray:
    """A generic model point with all coordinates bounded away from zero."""
    geo = family.geometry
    if geo.kind is Kind.EUCLIDEAN:
        while True:
            x = rng.uniform(0.15, 1.0, size=family.n) * rng.choice([-1.0, 1.0], size=family.n)
            x *= np.sqrt(np.asarray(family.a)) * rng.uniform(0.3, 0.95)
            if np.min(np.abs(x)) > 1e-3:
                return x
    while True:
        v = rng.normal(size=geo.ambient_dim)
        if geo.kind is Kind.SPHERICAL:
            x = v / np.linalg.norm(v)
            x[0] = abs(x[0])
        else:
            v[0] = 0.0
            v = 0.7 * v / max(1.0, np.linalg.norm(v))
            x = np.empty(geo.ambient_dim)
            x[1:] = v[1:]
            x[0] = np.sqrt(1.0 + v[1:] @ v[1:])
        if np.min(np.abs(x)) > 5e-2:
            return x
