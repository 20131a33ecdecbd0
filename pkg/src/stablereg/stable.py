"""Alpha-stable distributions: density, CDF, quantile, score, sampling, tables.

The four-parameter family is indexed by ``StableParams(alpha, b, gamma,
delta)``: tail index alpha in (0, 2], skewness b in [-1, 1], scale gamma > 0
and location delta.  The standardized member (gamma=1, delta=0) follows the
continuous-in-alpha "0" parameterization documented in :mod:`._nolan`; every
operation reduces to the standardized law through

    f(x; alpha, b, gamma, delta) = f((x - delta)/gamma; alpha, b) / gamma.

Notable standardized members: alpha=2 is Normal(0, 2); (alpha=1, b=0) is the
standard Cauchy; (alpha=1/2, b=1) is the Levy law supported on (-1, inf).

Random variates use the Chambers-Mallows-Stuck transformation mapped into the
same parameterization, so sampler and cdf can be cross-validated against each
other (they share no code path).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import _nolan

__all__ = [
    "StableParams",
    "StableTable",
    "NumericError",
    "pdf",
    "cdf",
    "quantile",
    "score",
    "fisher_information",
    "sample",
    "build_table",
    "cached_table",
]

# quantiles beyond this tail mass come from the power-tail asymptote rather
# than root-finding (quadrature CDFs lose relative accuracy out there)
TAIL_SWITCH = 1e-6

CACHE_ENV = "STABLEREG_CACHE_DIR"


class NumericError(RuntimeError):
    """A quadrature or root-finding step failed to reach its tolerance."""

    def __init__(self, message, *, x=None, params=None, achieved=None):
        super().__init__(message)
        self.x = x
        self.params = params
        self.achieved = achieved


@dataclass(frozen=True)
class StableParams:
    """Parameter vector (alpha, b, gamma, delta) of a stable law."""

    alpha: float
    b: float = 0.0
    gamma: float = 1.0
    delta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "delta", float(self.delta))
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must be in (0, 2], got {self.alpha}")
        if not -1.0 <= self.b <= 1.0:
            raise ValueError(f"skewness b must be in [-1, 1], got {self.b}")
        if not self.gamma > 0.0:
            raise ValueError(f"scale gamma must be positive, got {self.gamma}")
        if not math.isfinite(self.delta):
            raise ValueError(f"location delta must be finite, got {self.delta}")

    def standardized(self):
        return StableParams(self.alpha, self.b)

    @property
    def is_standard(self):
        return self.gamma == 1.0 and self.delta == 0.0


def _std_coords(theta, x):
    z = (np.asarray(x, dtype=float) - theta.delta) / theta.gamma
    return np.atleast_1d(z), np.ndim(x) == 0


def _check_finite(values, theta, x, what):
    if not np.all(np.isfinite(values)):
        bad = np.asarray(x)[~np.isfinite(values)] if np.ndim(x) else x
        raise NumericError(
            f"{what} evaluation did not converge", x=bad, params=theta
        )
    return values


def pdf(theta, x):
    """Density f(x) under ``theta``; vectorized over x."""
    z, scalar = _std_coords(theta, x)
    val = _nolan.std_pdf(theta.alpha, theta.b, z) / theta.gamma
    _check_finite(val, theta, x, "pdf")
    return float(val[0]) if scalar else val


def cdf(theta, x):
    """Distribution function F(x) under ``theta``; vectorized over x."""
    z, scalar = _std_coords(theta, x)
    val = _nolan.std_cdf(theta.alpha, theta.b, z)
    _check_finite(val, theta, x, "cdf")
    return float(val[0]) if scalar else val


def sf(theta, x):
    """Survival function 1 - F(x), computed without cancellation."""
    z, scalar = _std_coords(theta, x)
    val = _nolan.std_sf(theta.alpha, theta.b, z)
    _check_finite(val, theta, x, "sf")
    return float(val[0]) if scalar else val


def score(theta, x):
    """Location score phi(x) = -f'(x)/f(x); vectorized over x."""
    z, scalar = _std_coords(theta, x)
    val = _nolan.std_score(theta.alpha, theta.b, z) / theta.gamma
    if scalar:
        v = float(val[0])
        if not math.isfinite(v):
            raise NumericError("score evaluation did not converge", x=x, params=theta)
        return v
    return val


def _support_lower(alpha, b):
    """Lower endpoint of the standardized support (-inf unless alpha<1, b=1)."""
    if alpha < 1.0 and b == 1.0:
        return _nolan._zeta(alpha, b)
    return -np.inf


def _support_upper(alpha, b):
    if alpha < 1.0 and b == -1.0:
        return _nolan._zeta(alpha, b)
    return np.inf


def _tail_quantile_std(alpha, b, p, upper):
    """Power-tail asymptote x with P(X > x) ~ p (upper) or P(X < x) ~ p."""
    weight = (1.0 + b) if upper else (1.0 - b)
    if alpha == 2.0 or weight <= 0.0:
        return None
    c = _nolan.tail_constant(alpha) * weight
    x = (c / p) ** (1.0 / alpha)
    return x if upper else -x


def _std_quantile_scalar(alpha, b, u):
    if not 0.0 < u < 1.0:
        raise ValueError(f"quantile level must be in (0, 1), got {u}")
    if alpha == 2.0:
        from scipy.special import ndtri
        return math.sqrt(2.0) * ndtri(u)
    if abs(alpha - 1.0) < _nolan._ALPHA_ONE_BAND and b == 0.0:
        return math.tan(math.pi * (u - 0.5))
    if alpha == 0.5 and abs(b) == 1.0:
        from scipy.special import erfcinv
        if b == 1.0:
            return -1.0 + 0.5 / erfcinv(u) ** 2
        return 1.0 - 0.5 / erfcinv(1.0 - u) ** 2

    if u > 1.0 - TAIL_SWITCH:
        xt = _tail_quantile_std(alpha, b, 1.0 - u, upper=True)
        if xt is not None:
            return xt
    if u < TAIL_SWITCH:
        xt = _tail_quantile_std(alpha, b, u, upper=False)
        if xt is not None:
            return xt

    lo_sup = _support_lower(alpha, b)
    hi_sup = _support_upper(alpha, b)

    def fun(x):
        return _nolan.std_cdf(alpha, b, np.array([x]))[0] - u

    # expanding bracket, then brentq; bounded-support sides search in a
    # log-shifted coordinate so the edge is resolved
    if math.isfinite(lo_sup) and u < 0.25:
        gun = lambda w: _nolan.std_cdf(alpha, b, np.array([lo_sup + math.exp(w)]))[0] - u
        w_hi = 2.0
        while gun(w_hi) < 0 and w_hi < 700:
            w_hi += 2.0
        w_lo = w_hi - 2.0
        while gun(w_lo) > 0 and w_lo > -700:
            w_lo -= 4.0
        if gun(w_lo) > 0 or gun(w_hi) < 0:
            raise NumericError("quantile bracketing failed", x=u,
                               params=(alpha, b))
        w = brentq(gun, w_lo, w_hi, xtol=1e-14, rtol=8.9e-16)
        return lo_sup + math.exp(w)
    if math.isfinite(hi_sup) and u > 0.75:
        gun = lambda w: _nolan.std_cdf(alpha, b, np.array([hi_sup - math.exp(w)]))[0] - u
        w_hi = 2.0
        while gun(w_hi) > 0 and w_hi < 700:
            w_hi += 2.0
        w_lo = w_hi - 2.0
        while gun(w_lo) < 0 and w_lo > -700:
            w_lo -= 4.0
        if gun(w_lo) < 0 or gun(w_hi) > 0:
            raise NumericError("quantile bracketing failed", x=u,
                               params=(alpha, b))
        w = brentq(lambda t: -gun(t), w_lo, w_hi, xtol=1e-14, rtol=8.9e-16)
        return hi_sup - math.exp(w)

    lo, hi = -1.0, 1.0
    for _ in range(80):
        if fun(lo) <= 0.0:
            break
        lo *= 2.0
    for _ in range(80):
        if fun(hi) >= 0.0:
            break
        hi *= 2.0
    if fun(lo) > 0 or fun(hi) < 0:
        raise NumericError("quantile bracketing failed", x=u, params=(alpha, b))
    return brentq(fun, lo, hi, xtol=1e-13, rtol=8.9e-16, maxiter=200)


def quantile(theta, u):
    """Quantile F^{-1}(u); vectorized over u in (0, 1)."""
    if np.ndim(u) == 0:
        z = _std_quantile_scalar(theta.alpha, theta.b, float(u))
        return theta.gamma * z + theta.delta
    uu = np.asarray(u, dtype=float)
    z = _std_quantile_grid(theta.alpha, theta.b, uu.ravel()).reshape(uu.shape)
    return theta.gamma * z + theta.delta


def _std_quantile_grid(alpha, b, u, x0=None):
    """Vectorized quantiles: coarse CDF scan, monotone inverse, Newton polish.

    ``x0`` optionally warm-starts the core Newton iteration (used by the
    adaptive table refinement, where good guesses are already available).
    """
    if np.any((u <= 0.0) | (u >= 1.0)):
        raise ValueError("quantile levels must be in (0, 1)")
    if alpha == 2.0:
        from scipy.special import ndtri
        return math.sqrt(2.0) * ndtri(u)
    if abs(alpha - 1.0) < _nolan._ALPHA_ONE_BAND and b == 0.0:
        return np.tan(math.pi * (u - 0.5))
    if alpha == 0.5 and abs(b) == 1.0:
        return np.array([_std_quantile_scalar(alpha, b, ui) for ui in u])

    out = np.empty(u.shape)
    lo_tail = u < TAIL_SWITCH
    hi_tail = u > 1.0 - TAIL_SWITCH
    for i in np.nonzero(lo_tail | hi_tail)[0]:
        out[i] = _std_quantile_scalar(alpha, b, u[i])
    core = ~(lo_tail | hi_tail)
    if not np.any(core):
        return out
    uc = u[core]

    # coarse grid wide enough for the most extreme core levels
    lo_sup = _support_lower(alpha, b)
    hi_sup = _support_upper(alpha, b)
    zeta = _nolan._zeta(alpha, b)
    if math.isfinite(lo_sup):
        left = lo_sup + np.geomspace(1e-12, 60.0, 90)
    else:
        lo_x = _tail_quantile_std(alpha, b, TAIL_SWITCH / 2, upper=False)
        left = zeta - np.geomspace(max(-lo_x + zeta, 1e-3), 1e-3, 120)
    if math.isfinite(hi_sup):
        right = hi_sup - np.geomspace(60.0, 1e-12, 90)
    else:
        hi_x = _tail_quantile_std(alpha, b, TAIL_SWITCH / 2, upper=True)
        right = zeta + np.geomspace(1e-3, max(hi_x - zeta, 1e-3), 120)
    grid = np.unique(np.concatenate([left, zeta + np.linspace(-1.0, 1.0, 41), right]))
    fg = _nolan.std_cdf(alpha, b, grid)
    keep = np.concatenate([[True], np.diff(fg) > 0])
    grid, fg = grid[keep], fg[keep]
    x = np.interp(uc, fg, grid) if x0 is None else np.array(x0[core], dtype=float)

    lo_b = np.full(uc.shape, grid[0])
    hi_b = np.full(uc.shape, grid[-1])
    tol = 1e-13 + 1e-11 * np.minimum(uc, 1 - uc)
    active = np.arange(uc.size)
    worst = np.inf
    for _ in range(80):
        xa = x[active]
        f_val = _nolan.std_cdf(alpha, b, xa)
        resid = f_val - uc[active]
        hi_b[active] = np.where(resid >= 0, np.minimum(xa, hi_b[active]),
                                hi_b[active])
        lo_b[active] = np.where(resid <= 0, np.maximum(xa, lo_b[active]),
                                lo_b[active])
        tight = hi_b[active] - lo_b[active] <= 1e-14 * (1.0 + np.abs(xa))
        done = (np.abs(resid) <= tol[active]) | tight
        if np.all(done):
            worst = 0.0
            break
        keep_going = ~done
        active = active[keep_going]
        resid = resid[keep_going]
        xa = xa[keep_going]
        dens = _nolan.std_pdf(alpha, b, xa)
        x_new = xa - resid / np.maximum(dens, 1e-300)
        bad = (x_new <= lo_b[active]) | (x_new >= hi_b[active]) | ~np.isfinite(x_new)
        x[active] = np.where(bad, 0.5 * (lo_b[active] + hi_b[active]), x_new)
        worst = float(np.max(np.abs(resid)))
    if worst > 1e-9:
        raise NumericError(
            "vectorized quantile iteration did not converge",
            x=uc, params=(alpha, b), achieved=worst,
        )
    out[core] = x
    return out


def fisher_information(theta):
    """Fisher information of the location family, int phi^2 f dx."""
    std = theta.standardized()
    zeta = _nolan._zeta(std.alpha, std.b) if std.alpha != 1.0 else 0.0

    def integrand(x):
        arr = np.array([x])
        f = _nolan.std_pdf(std.alpha, std.b, arr)[0]
        s = _nolan.std_score(std.alpha, std.b, arr)[0]
        return s * s * f

    pieces = [(-np.inf, zeta - 8.0), (zeta - 8.0, zeta), (zeta, zeta + 8.0),
              (zeta + 8.0, np.inf)]
    total = 0.0
    err = 0.0
    for lo, hi in pieces:
        v, e = quad(integrand, lo, hi, limit=300, epsabs=1e-12, epsrel=1e-9)
        total += v
        err += e
    if not (math.isfinite(total) and total > 0.0):
        raise NumericError("fisher information quadrature failed", params=theta,
                           achieved=err)
    if err > 1e-6 * total:
        raise NumericError("fisher information quadrature too inaccurate",
                           params=theta, achieved=err / total)
    return total / theta.gamma**2


def sample(theta, n, rng_seed):
    """n i.i.d. draws via the Chambers-Mallows-Stuck transformation.

    ``rng_seed`` may be anything acceptable to :func:`numpy.random.default_rng`;
    identical seeds give identical output.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(rng_seed)
    alpha, b = theta.alpha, theta.b
    u = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size=n)
    w = rng.exponential(1.0, size=n)
    if alpha == 2.0:
        z = 2.0 * np.sin(u) * np.sqrt(w)
        return theta.gamma * z + theta.delta
    if abs(alpha - 1.0) < _nolan._ALPHA_ONE_BAND:
        bu = math.pi / 2.0 + b * u
        z = (2.0 / math.pi) * (
            bu * np.tan(u)
            - b * np.log((math.pi / 2.0) * w * np.cos(u) / bu)
        ) if b != 0.0 else np.tan(u)
        return theta.gamma * z + theta.delta
    tan_half = math.tan(math.pi * alpha / 2.0)
    theta0 = math.atan(b * tan_half) / alpha
    s_ab = (1.0 + b * b * tan_half * tan_half) ** (1.0 / (2.0 * alpha))
    z1 = (
        s_ab
        * np.sin(alpha * (u + theta0))
        / np.cos(u) ** (1.0 / alpha)
        * (np.cos(u - alpha * (u + theta0)) / w) ** ((1.0 - alpha) / alpha)
    )
    z0 = z1 - b * tan_half
    return theta.gamma * z0 + theta.delta


# ---------------------------------------------------------------------------
# precomputed tables

_TABLE_VERSION = "stablereg-table v1"


class StableTable:
    """Precomputed (u, quantile, density, score) rows of a standardized law.

    The quantile column is interpolated with a monotone cubic, the score
    column linearly.  Construction guarantees a strictly increasing quantile
    column, strictly positive densities and coverage of
    [u_min, 1 - u_min] with u_min <= 1e-4.
    """

    def __init__(self, params, u, quantiles, densities, scores, resolution):
        if not params.is_standard:
            raise ValueError("tables are built for standardized parameters")
        u = np.asarray(u, dtype=float)
        quantiles = np.asarray(quantiles, dtype=float)
        densities = np.asarray(densities, dtype=float)
        scores = np.asarray(scores, dtype=float)
        if not np.all(np.diff(u) > 0):
            raise ValueError("table grid must be strictly increasing in u")
        if not np.all(np.diff(quantiles) > 0):
            raise NumericError("quantile column is not strictly increasing",
                               params=params)
        if not np.all(densities > 0):
            raise NumericError("density column has nonpositive entries",
                               params=params)
        if u[0] > 1e-4 or u[-1] < 1.0 - 1e-4:
            raise ValueError("table must cover [1e-4, 1 - 1e-4]")
        self.params = params
        self.u = u
        self.quantiles = quantiles
        self.densities = densities
        self.scores = scores
        self.resolution = int(resolution)

    @cached_property
    def _quantile_interp(self):
        from scipy.interpolate import PchipInterpolator
        return PchipInterpolator(self.u, self.quantiles, extrapolate=False)

    def coverage(self):
        return self.u[0], self.u[-1]

    def quantile_at(self, u):
        u = np.clip(np.asarray(u, dtype=float), self.u[0], self.u[-1])
        return self._quantile_interp(u)

    def score_at(self, u, with_flags=False):
        uu = np.asarray(u, dtype=float)
        clamped = (uu < self.u[0]) | (uu > self.u[-1])
        val = np.interp(np.clip(uu, self.u[0], self.u[-1]), self.u, self.scores)
        if with_flags:
            return val, clamped
        return val

    def density_at(self, u):
        u = np.clip(np.asarray(u, dtype=float), self.u[0], self.u[-1])
        return np.interp(u, self.u, self.densities)

    def save_csv(self, path):
        header = (
            f"{_TABLE_VERSION}\n"
            f"alpha={self.params.alpha},b={self.params.b},"
            f"resolution={self.resolution}\n"
            "u,quantile,density,score"
        )
        data = np.column_stack([self.u, self.quantiles, self.densities,
                                self.scores])
        np.savetxt(path, data, delimiter=",", header=header, comments="# ")

    @classmethod
    def load_csv(cls, path):
        with open(path) as fh:
            version = fh.readline().strip().lstrip("# ")
            if version != _TABLE_VERSION:
                raise ValueError(f"unsupported table file version: {version!r}")
            meta = dict(
                item.split("=") for item in fh.readline().strip().lstrip("# ").split(",")
            )
        data = np.loadtxt(path, delimiter=",", skiprows=3)
        params = StableParams(float(meta["alpha"]), float(meta["b"]))
        return cls(params, data[:, 0], data[:, 1], data[:, 2], data[:, 3],
                   int(meta["resolution"]))


def _table_grid(resolution, u_min):
    n_tail = 200
    tail = np.geomspace(u_min, 0.02, n_tail)
    core = np.linspace(0.02, 0.98, resolution)
    u = np.unique(np.concatenate([tail, core, 1.0 - tail]))
    return u


def build_table(theta, resolution=2000, u_min=1e-6, score_tol=5e-5):
    """Precompute quantile/density/score rows of the standardized law.

    The u-grid starts from a uniform core with geometric tails and is then
    refined adaptively until the midpoint error of linear score
    interpolation drops below ``score_tol`` (the score's curvature in u can
    spike at parameter-dependent places, so no fixed grid fits all laws).
    """
    if not theta.is_standard:
        raise ValueError("build_table expects standardized parameters "
                         "(gamma=1, delta=0)")
    if u_min > 1e-4:
        raise ValueError("u_min must be <= 1e-4")
    alpha, b = theta.alpha, theta.b
    u = _table_grid(resolution, u_min)
    q = _std_quantile_grid(alpha, b, u)
    pdf_v, _, _, score_v = _nolan.std_eval(alpha, b, q, want_score=True)
    for _ in range(6):
        u_mid = 0.5 * (u[:-1] + u[1:])
        lin = 0.5 * (score_v[:-1] + score_v[1:])
        x_guess = 0.5 * (q[:-1] + q[1:])
        q_mid = _std_quantile_grid(alpha, b, u_mid, x0=x_guess)
        p_mid, _, _, s_mid = _nolan.std_eval(alpha, b, q_mid, want_score=True)
        bad = np.abs(lin - s_mid) > score_tol
        if not np.any(bad):
            break
        u = np.concatenate([u, u_mid[bad]])
        q = np.concatenate([q, q_mid[bad]])
        pdf_v = np.concatenate([pdf_v, p_mid[bad]])
        score_v = np.concatenate([score_v, s_mid[bad]])
        order = np.argsort(u)
        u, q, pdf_v, score_v = u[order], q[order], pdf_v[order], score_v[order]
    # strictness repair for float-level ties in the extreme tails
    dq = np.diff(q)
    if np.any(dq <= 0):
        keep = np.concatenate([[True], dq > 0])
        u, q, pdf_v, score_v = u[keep], q[keep], pdf_v[keep], score_v[keep]
    return StableTable(theta, u, q, pdf_v, score_v, resolution)


def cached_table(alpha, b, resolution=2000, cache_dir=None):
    """Disk-backed :func:`build_table`, keyed by (alpha, b, resolution).

    The cache directory is, in order: the explicit argument, the
    ``STABLEREG_CACHE_DIR`` environment variable, or no caching at all.
    """
    theta = StableParams(alpha, b)
    directory = cache_dir or os.environ.get(CACHE_ENV)
    if directory is None:
        return build_table(theta, resolution)
    os.makedirs(directory, exist_ok=True)
    name = f"stable_a{alpha:g}_b{b:g}_r{resolution}.csv"
    path = os.path.join(directory, name)
    if os.path.exists(path):
        try:
            return StableTable.load_csv(path)
        except (ValueError, OSError):
            pass
    table = build_table(theta, resolution)
    table.save_csv(path)
    return table
