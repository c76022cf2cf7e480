"""Liouville and Stackel metrics: separable geodesics and the Ivory property.

A Stackel metric on a coordinate box is defined by a matrix of one-variable
functions u_ij(q_i) (row i depends only on q_i):

    ds^2 = sum_i g_ii dq_i^2,   g_ii = (-1)^(1+i) det M / det M_i1,

where M_i1 deletes row i and column 1.  The Hamilton-Jacobi equation
separates: p_i^2 = h_i(q_i, alpha) = 2 sum_j u_ij(q_i) alpha_j with the
commuting integrals alpha = (1/2) M^{-1} (p_1^2, ..., p_n^2).  Geodesics
between opposite corners of a coordinate box are found by solving the n-1
quadrature constraints for alpha_2..alpha_n (alpha_1 = 1/2 for unit speed);
the elapsed time of the first quadrature is the length.  All 2^(n-1) great
diagonals of a box share the same alpha and have equal lengths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    CornerHit,
    InvalidParameters,
    NoMonotoneDiagonal,
    SingularStaeckelMatrix,
    SolverDiverged,
)
from .geometry import Geometry, euclidean, geodesic_distance, spherical

_DET_TOL = 1e-14


@dataclass(frozen=True)
class ScalarFunction1D:
    """One-variable smooth function with a derivative rule."""

    f: Callable[[float], float]
    df: Optional[Callable[[float], float]] = None

    def __call__(self, t: float) -> float:
        return self.f(t)

    def deriv(self, t: float) -> float:
        if self.df is not None:
            return self.df(t)
        h = 1e-6
        return (self.f(t + h) - self.f(t - h)) / (2.0 * h)

    @staticmethod
    def rational(num, den) -> "ScalarFunction1D":
        """num(t)/den(t) for polynomial coefficient sequences (high->low)."""
        pn, pd = np.poly1d(num), np.poly1d(den)
        dn, dd = pn.deriv(), pd.deriv()

        def f(t):
            return pn(t) / pd(t)

        def df(t):
            d = pd(t)
            return (dn(t) * d - pn(t) * dd(t)) / (d * d)

        return ScalarFunction1D(f, df)

    @staticmethod
    def constant(c: float) -> "ScalarFunction1D":
        return ScalarFunction1D(lambda t: c, lambda t: 0.0)


@dataclass
class StaeckelMetric:
    """Stackel matrix of one-variable entries plus a coordinate box."""

    n: int
    u: Sequence[Sequence[ScalarFunction1D]]
    box: Sequence[tuple]
    name: str = ""
    ambient: Optional[Callable] = None
    ambient_geometry: Optional[Geometry] = None

    def __post_init__(self):
        if len(self.u) != self.n or any(len(row) != self.n for row in self.u):
            raise InvalidParameters("Stackel matrix must be n x n")
        if len(self.box) != self.n:
            raise InvalidParameters("need one box interval per coordinate")

    def matrix(self, q) -> np.ndarray:
        return np.array([[self.u[i][j](q[i]) for j in range(self.n)]
                         for i in range(self.n)])

    def row(self, i: int, qi: float) -> np.ndarray:
        return np.array([self.u[i][j](qi) for j in range(self.n)])

    def row_deriv(self, i: int, qi: float) -> np.ndarray:
        return np.array([self.u[i][j].deriv(qi) for j in range(self.n)])

    def h(self, i: int, qi: float, alpha) -> float:
        return 2.0 * float(self.row(i, qi) @ alpha)

    def random_box(self, rng, max_span: float = 0.4):
        """A random coordinate sub-box of the metric's box (moderate spans,
        so that chord initial guesses stay in the convergence basin)."""
        out = []
        for lo, hi in self.box:
            span = rng.uniform(0.1, max_span) * (hi - lo)
            a = rng.uniform(lo, hi - span)
            out.append((a, a + span))
        return out


@dataclass(frozen=True)
class LiouvilleMetric:
    """Planar metric (u1 - u2)(v1 dq1^2 + v2 dq2^2)."""

    u1: ScalarFunction1D
    u2: ScalarFunction1D
    v1: ScalarFunction1D
    v2: ScalarFunction1D
    box: Sequence[tuple]

    def to_staeckel(self) -> StaeckelMetric:
        def prod(f, g, s):
            return ScalarFunction1D(
                lambda t: s * f(t) * g(t),
                lambda t: s * (f.deriv(t) * g(t) + f(t) * g.deriv(t)))

        def scal(g, s):
            return ScalarFunction1D(lambda t: s * g(t), lambda t: s * g.deriv(t))

        u = [[prod(self.u1, self.v1, 1.0), scal(self.v1, 1.0)],
             [prod(self.u2, self.v2, -1.0), scal(self.v2, -1.0)]]
        return StaeckelMetric(2, u, self.box, name="liouville")


@dataclass
class SeparationData:
    """Separation constants and sign pattern of a monotone geodesic leg."""

    metric: StaeckelMetric
    alpha: np.ndarray
    signs: np.ndarray

    def h(self, i: int, qi: float) -> float:
        return self.metric.h(i, qi, self.alpha)

    def momentum(self, q) -> np.ndarray:
        return np.array([self.signs[i] * np.sqrt(max(self.h(i, q[i]), 0.0))
                         for i in range(self.metric.n)])


def _minor_det(M: np.ndarray, i: int, j: int) -> float:
    sub = np.delete(np.delete(M, i, axis=0), j, axis=1)
    if sub.size == 0:
        return 1.0
    return float(np.linalg.det(sub))


def metric_coeffs(metric: StaeckelMetric, q) -> np.ndarray:
    M = metric.matrix(q)
    det = float(np.linalg.det(M))
    if abs(det) < _DET_TOL:
        raise SingularStaeckelMatrix(f"det M = {det} at q = {q}")
    g = np.empty(metric.n)
    for i in range(metric.n):
        g[i] = (-1.0) ** i * det / _minor_det(M, i, 0)
    return g


def hamiltonian(metric: StaeckelMetric, q, p) -> float:
    g = metric_coeffs(metric, q)
    p = np.asarray(p, dtype=float)
    return float(0.5 * np.sum(p * p / g))


def integrals_alpha(metric: StaeckelMetric, q, p) -> np.ndarray:
    M = metric.matrix(q)
    if abs(np.linalg.det(M)) < _DET_TOL:
        raise SingularStaeckelMatrix(f"singular Stackel matrix at q = {q}")
    p = np.asarray(p, dtype=float)
    return 0.5 * np.linalg.solve(M, p * p)


# ---------------------------------------------------------------------------
# separable quadratures


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(80)


def _half_integral(metric: StaeckelMetric, i: int, end: float, sign: float,
                   smax: float, alpha, col: int) -> float:
    s = 0.5 * smax * (_GL_NODES + 1.0)
    w = 0.5 * smax * _GL_WEIGHTS
    qv = end + sign * s * s
    hv = 2.0 * sum(alpha[j] * np.asarray(metric.u[i][j](qv), dtype=float)
                   for j in range(metric.n))
    vals = (2.0 * s * np.asarray(metric.u[i][col](qv), dtype=float)
            / np.sqrt(np.maximum(hv, 1e-300)))
    return float(w @ vals)


def _leg_integral(metric: StaeckelMetric, i: int, a: float, b: float,
                  alpha, col: int) -> float:
    """Integral of u_i,col / sqrt(h_i) over [a, b], robust to square-root
    vanishing of h_i at either endpoint (substitution q = end +/- s^2
    turns the inverse-square-root singularity into a smooth integrand,
    then fixed-order Gauss-Legendre on each half)."""
    if b <= a:
        return 0.0
    mid = 0.5 * (a + b)
    return (_half_integral(metric, i, a, 1.0, np.sqrt(mid - a), alpha, col)
            + _half_integral(metric, i, b, -1.0, np.sqrt(b - mid), alpha, col))


def _min_h_inside(metric: StaeckelMetric, i: int, a: float, b: float, alpha,
                  samples: int = 64) -> float:
    ts = np.linspace(a, b, samples)
    return min(metric.h(i, t, alpha) for t in ts)


def _chord_alpha(metric: StaeckelMetric, c0, c1) -> np.ndarray:
    """Initial guess: momenta of the straight coordinate chord at the box
    midpoint, rescaled to energy 1/2."""
    c0 = np.asarray(c0, dtype=float)
    c1 = np.asarray(c1, dtype=float)
    qm = 0.5 * (c0 + c1)
    g = metric_coeffs(metric, qm)
    v = c1 - c0
    p = g * v
    alpha = integrals_alpha(metric, qm, p)
    if alpha[0] <= 0:
        raise SolverDiverged("chord guess has nonpositive energy")
    return alpha * (0.5 / alpha[0])


def geodesic_between(metric: StaeckelMetric, corner0, corner1,
                     residual_tol: float = 1e-9, max_iter: int = 60) -> dict:
    """Geodesic joining opposite corners of a coordinate box, monotone in
    every coordinate, via the separation constants."""
    c0 = np.asarray(corner0, dtype=float)
    c1 = np.asarray(corner1, dtype=float)
    n = metric.n
    if np.allclose(c0, c1):
        return {"alpha": None, "signs": np.ones(n), "length": 0.0,
                "residual": 0.0, "separation": None}
    if np.any(c0 == c1):
        raise InvalidParameters("corners must differ in every coordinate")
    lo = np.minimum(c0, c1)
    hi = np.maximum(c0, c1)
    signs = np.sign(c1 - c0)

    if n == 1:
        alpha = np.array([0.5])
        length = abs(_leg_integral(metric, 0, lo[0], hi[0], alpha, 0))
        return {"alpha": alpha, "signs": signs, "length": float(length),
                "residual": 0.0,
                "separation": SeparationData(metric, alpha, signs)}

    alpha = _chord_alpha(metric, c0, c1)

    def residuals(al):
        cols = []
        for j in range(1, n):
            cols.append(sum(_leg_integral(metric, i, lo[i], hi[i], al, j)
                            for i in range(n)))
        return np.array(cols)

    beta = alpha[1:].copy()

    def wrap(bv):
        return residuals(np.concatenate([[0.5], bv]))

    F = wrap(beta)
    for _ in range(max_iter):
        if np.max(np.abs(F)) < residual_tol * 1e-2:
            break
        J = np.empty((n - 1, n - 1))
        for k in range(n - 1):
            hstep = 1e-7 * max(1.0, abs(beta[k]))
            bp = beta.copy(); bp[k] += hstep
            J[:, k] = (wrap(bp) - F) / hstep
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise SolverDiverged("singular quadrature Jacobian") from exc
        lam = 1.0
        for _ in range(30):
            bn = beta + lam * step
            Fn = wrap(bn)
            if np.linalg.norm(Fn) < np.linalg.norm(F):
                beta, F = bn, Fn
                break
            lam *= 0.5
        else:
            alpha_cur = np.concatenate([[0.5], beta])
            if any(_min_h_inside(metric, i, lo[i], hi[i], alpha_cur) < 0.0
                   for i in range(n)):
                raise NoMonotoneDiagonal(
                    "no monotone diagonal: h_i turns negative inside a leg")
            raise SolverDiverged("line search failed in separation solver")
    resid = float(np.max(np.abs(F)))
    if resid > residual_tol:
        raise SolverDiverged(f"separation residual {resid} > {residual_tol}")
    alpha = np.concatenate([[0.5], beta])
    for i in range(n):
        inner = _min_h_inside(metric, i, lo[i], hi[i], alpha)
        if inner < -1e-12:
            raise NoMonotoneDiagonal(f"h_{i} vanishes inside the leg")
        # a double root of h_i at an endpoint makes the approach asymptotic
        # (logarithmically divergent time); refuse to integrate through it
        for end in (lo[i], hi[i]):
            if abs(metric.h(i, end, alpha)) < 1e-12:
                dh = 2.0 * float(metric.row_deriv(i, end) @ alpha)
                if abs(dh) < 1e-10:
                    raise NoMonotoneDiagonal(
                        f"h_{i} has a double root at the endpoint {end}")
    length = abs(sum(_leg_integral(metric, i, lo[i], hi[i], alpha, 0)
                     for i in range(n)))
    return {"alpha": alpha, "signs": signs, "length": float(length),
            "residual": resid,
            "separation": SeparationData(metric, alpha, signs)}


def ivory_check(metric: StaeckelMetric, box, tol: float = 1e-8) -> dict:
    """Solve all 2^(n-1) great diagonals of the box independently and
    report the spread of their lengths."""
    n = metric.n
    lengths = []
    alphas = []
    for bits in np.ndindex(*(2,) * (n - 1)):
        eps = (0,) + bits
        c0 = [box[i][eps[i]] for i in range(n)]
        c1 = [box[i][1 - eps[i]] for i in range(n)]
        sol = geodesic_between(metric, c0, c1)
        lengths.append(sol["length"])
        alphas.append(sol["alpha"])
    spread = float(np.max(lengths) - np.min(lengths))
    return {"lengths": lengths, "alphas": alphas, "spread": spread,
            "passed": spread < tol}


# ---------------------------------------------------------------------------
# billiards in coordinate boxes


def _dH_dq(metric: StaeckelMetric, q, p) -> np.ndarray:
    """Analytic partial of H in q through the row-derivative of det M."""
    n = metric.n
    M = metric.matrix(q)
    det = float(np.linalg.det(M))
    if abs(det) < _DET_TOL:
        raise SingularStaeckelMatrix(f"singular Stackel matrix at q = {q}")
    minors = np.array([_minor_det(M, k, 0) for k in range(n)])
    p2 = np.asarray(p) ** 2
    grad = np.empty(n)
    for i in range(n):
        Mi = M.copy()
        Mi[i] = metric.row_deriv(i, q[i])
        ddet = float(np.linalg.det(Mi))
        for_i = np.empty(n)
        for k in range(n):
            if k == i:
                for_i[k] = 0.0
            else:
                sub = np.delete(np.delete(Mi, k, axis=0), 0, axis=1)
                for_i[k] = float(np.linalg.det(sub))
        grad[i] = 0.5 * sum((-1.0) ** k * p2[k]
                            * (for_i[k] * det - minors[k] * ddet) / det ** 2
                            for k in range(n))
    return grad


def staeckel_billiard_trajectory(metric: StaeckelMetric, walls, q0, p0,
                                 bounces: int, rtol: float = 1e-12) -> dict:
    """Billiard in the coordinate box `walls`: free geodesic motion with
    sign flips of p_i at the walls q_i = const.  Simultaneous wall hits
    (corners) are resolved by composing the reflections."""
    n = metric.n
    q = np.asarray(q0, dtype=float).copy()
    p = np.asarray(p0, dtype=float).copy()
    alpha0 = integrals_alpha(metric, q, p)

    def rhs(t, y):
        qv, pv = y[:n], y[n:]
        g = metric_coeffs(metric, qv)
        return np.concatenate([pv / g, -_dH_dq(metric, qv, pv)])

    events = []
    for i in range(n):
        for side in range(2):
            def ev(t, y, i=i, side=side):
                return y[i] - walls[i][side]
            ev.terminal = True
            events.append(ev)

    t_total = 0.0
    bounce_times = []
    states = [(0.0, q.copy(), p.copy())]
    corner_hits = 0
    done = 0
    t_eps = 1e-7
    while done < bounces:
        y0 = np.concatenate([q, p])
        if done > 0:
            # leave the wall before re-arming the terminal events, so the
            # just-resolved reflection does not retrigger at time zero
            burn = solve_ivp(rhs, (0.0, t_eps), y0, method="DOP853",
                             rtol=rtol, atol=1e-14)
            y0 = burn.y[:, -1]
            t_total += t_eps
        sol = solve_ivp(rhs, (0.0, 1e6), y0, method="DOP853",
                        events=events, rtol=rtol, atol=1e-14, dense_output=False)
        hit_times = [ev[0] for ev in sol.t_events if len(ev)]
        if not hit_times:
            raise SolverDiverged("no wall hit found")
        t_hit = min(hit_times)
        y = sol.y[:, -1]
        q, p = y[:n].copy(), y[n:].copy()
        flipped = []
        for i in range(n):
            for side in range(2):
                ev_t = sol.t_events[2 * i + side]
                if len(ev_t) and abs(ev_t[0] - t_hit) < 1e-9:
                    if i not in flipped:
                        flipped.append(i)
                    q[i] = walls[i][side]
        for i in flipped:
            p[i] = -p[i]
        if len(flipped) > 1:
            corner_hits += 1
        t_total += t_hit
        bounce_times.append(t_total)
        states.append((t_total, q.copy(), p.copy()))
        done += 1
    alpha1 = integrals_alpha(metric, q, p)
    return {"q": q, "p": p, "time": t_total, "bounce_times": bounce_times,
            "states": states, "alpha_start": alpha0, "alpha_end": alpha1,
            "alpha_drift": float(np.max(np.abs(alpha1 - alpha0))),
            "corner_hits": corner_hits}


# ---------------------------------------------------------------------------
# builtin metrics


def _cubic(a, b, c):
    """4(a-t)(b-t)(c-t) as a polynomial in t."""
    return -4.0 * np.poly1d(np.poly(np.array([a, b, c])))


def builtin_metric(name: str, params) -> StaeckelMetric:
    """Named Stackel metrics with analytic entries and ambient models.

    names: elliptic_R2(a, b); ellipsoidal_R3(a, b, c);
    spheroconical_R3(a, b, c); ellipsoid_intrinsic(a, b, c);
    sphere_conical(a, b, c).
    """
    R = ScalarFunction1D.rational
    if name == "elliptic_R2":
        a, b = map(float, params)
        if not a > b > 0:
            raise InvalidParameters("need a > b > 0")
        # 4(a-t)(t-b) and 4(a-t)(b-t)
        d1 = (4.0 * np.poly1d([-1.0, a]) * np.poly1d([1.0, -b])).coeffs
        d2 = (4.0 * np.poly1d([-1.0, a]) * np.poly1d([-1.0, b])).coeffs
        u = [[R([1.0, 0.0], d1), R([1.0], d1)],
             [R([-1.0, 0.0], d2), R([-1.0], d2)]]
        m = 0.02 * (a - b)
        box = [(b + m, a - m), (b - (a - b), b - m)]

        def ambient(q):
            lam, mu = q
            x = np.sqrt((a - lam) * (a - mu) / (a - b))
            y = np.sqrt((lam - b) * (b - mu) / (a - b))
            return np.array([x, y])

        return StaeckelMetric(2, u, box, name=name, ambient=ambient,
                              ambient_geometry=euclidean(2))

    if name in ("ellipsoidal_R3", "spheroconical_R3", "ellipsoid_intrinsic",
                "sphere_conical"):
        a, b, c = map(float, params)
        if not a > b > c > 0:
            raise InvalidParameters("need a > b > c > 0")
        hpoly = _cubic(a, b, c).coeffs
        m1 = 0.02 * (a - b)
        m2 = 0.02 * (b - c)

        if name == "ellipsoidal_R3":
            u = [[R([1.0, 0.0, 0.0], hpoly), R([1.0, 0.0], hpoly), R([1.0], hpoly)]
                 for _ in range(3)]
            box = [(b + m1, a - m1), (c + m2, b - m2), (c - (b - c), c - m2)]

            def ambient(q):
                lam, mu, nu = q
                x2 = (a - lam) * (a - mu) * (a - nu) / ((a - b) * (a - c))
                y2 = (b - lam) * (b - mu) * (b - nu) / ((b - a) * (b - c))
                z2 = (c - lam) * (c - mu) * (c - nu) / ((c - a) * (c - b))
                return np.sqrt(np.array([x2, y2, z2]))

            return StaeckelMetric(3, u, box, name=name, ambient=ambient,
                                  ambient_geometry=euclidean(3))

        if name == "spheroconical_R3":
            u = [[ScalarFunction1D.constant(1.0), R([-1.0], [1.0, 0.0, 0.0]),
                  ScalarFunction1D.constant(0.0)],
                 [ScalarFunction1D.constant(0.0), R([1.0, 0.0], hpoly), R([1.0], hpoly)],
                 [ScalarFunction1D.constant(0.0), R([1.0, 0.0], hpoly), R([1.0], hpoly)]]
            box = [(0.6, 1.8), (b + m1, a - m1), (c + m2, b - m2)]

            def ambient(q):
                r, lam, mu = q
                x2 = (a - lam) * (a - mu) / ((a - b) * (a - c))
                y2 = (b - lam) * (b - mu) / ((b - a) * (b - c))
                z2 = (c - lam) * (c - mu) / ((c - a) * (c - b))
                return r * np.sqrt(np.array([x2, y2, z2]))

            return StaeckelMetric(3, u, box, name=name, ambient=ambient,
                                  ambient_geometry=euclidean(3))

        if name == "ellipsoid_intrinsic":
            u = [[R([1.0, 0.0, 0.0], hpoly), R([1.0, 0.0], hpoly)],
                 [R([1.0, 0.0, 0.0], hpoly), R([1.0, 0.0], hpoly)]]
            box = [(b + m1, a - m1), (c + m2, b - m2)]

            def ambient(q):
                lam, mu = q
                x2 = a * (a - lam) * (a - mu) / ((a - b) * (a - c))
                y2 = b * (b - lam) * (b - mu) / ((b - a) * (b - c))
                z2 = c * (c - lam) * (c - mu) / ((c - a) * (c - b))
                return np.sqrt(np.array([x2, y2, z2]))

            return StaeckelMetric(2, u, box, name=name, ambient=ambient,
                                  ambient_geometry=euclidean(3))

        # sphere_conical
        u = [[R([1.0, 0.0], hpoly), R([1.0], hpoly)],
             [R([1.0, 0.0], hpoly), R([1.0], hpoly)]]
        box = [(b + m1, a - m1), (c + m2, b - m2)]

        def ambient(q):
            lam, mu = q
            x2 = (a - lam) * (a - mu) / ((a - b) * (a - c))
            y2 = (b - lam) * (b - mu) / ((b - a) * (b - c))
            z2 = (c - lam) * (c - mu) / ((c - a) * (c - b))
            return np.sqrt(np.array([x2, y2, z2]))

        return StaeckelMetric(2, u, box, name=name, ambient=ambient,
                              ambient_geometry=spherical(2))

    raise InvalidParameters(f"unknown builtin metric {name!r}")


def induced_metric_on_face(metric: StaeckelMetric, i: int, c: float) -> StaeckelMetric:
    """Restriction of a Stackel metric to the coordinate hypersurface
    q_i = c, again in Stackel form.

    Setting p_i = 0 constrains sum_k u_ik(c) alpha_k = 0; eliminating one
    alpha_k (k >= 2 with u_ik(c) != 0) from the remaining rows produces an
    (n-1) x (n-1) Stackel matrix whose coefficients reproduce the ambient
    g_jj restricted to the face.
    """
    n = metric.n
    if not 0 <= i < n:
        raise InvalidParameters("row index out of range")
    lo, hi = metric.box[i]
    if not lo <= c <= hi:
        raise InvalidParameters("face value outside the box")
    row_c = metric.row(i, c)
    k = None
    for kk in range(n - 1, 0, -1):
        if abs(row_c[kk]) > 1e-12:
            k = kk
            break
    if k is None:
        raise InvalidParameters("frozen row vanishes in all columns >= 2")
    ratios = row_c / row_c[k]
    rows = [j for j in range(n) if j != i]
    cols = [jj for jj in range(n) if jj != k]

    def entry(j, kp):
        uj_kp = metric.u[j][kp]
        uj_k = metric.u[j][k]
        r = ratios[kp]
        return ScalarFunction1D(
            lambda t: uj_kp(t) - uj_k(t) * r,
            lambda t: uj_kp.deriv(t) - uj_k.deriv(t) * r)

    u_new = [[entry(j, kp) for kp in cols] for j in rows]
    box_new = [metric.box[j] for j in rows]
    amb = None
    if metric.ambient is not None:
        def amb(qface, _i=i, _c=c):
            qfull = list(qface)
            qfull.insert(_i, _c)
            return metric.ambient(np.asarray(qfull))
    return StaeckelMetric(n - 1, u_new, box_new, name=f"{metric.name}|q{i}={c}",
                          ambient=amb, ambient_geometry=metric.ambient_geometry)
