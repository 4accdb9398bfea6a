from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest

from optdesign import ExperimentalRegion, ModelSpec, ParamPoint, new_design


def ustar_oracle() -> float:
    """Root of 2 + u + 2e^u - u e^u at 50 digits, independent of the library solver."""
    with mpmath.workdps(50):
        g = lambda u: 2 + u + 2 * mpmath.e**u - u * mpmath.e**u  # noqa: E731
        return float(mpmath.findroot(g, (mpmath.mpf(2) + mpmath.mpf("1e-9"), 10), solver="anderson"))


def golden_section(fn, lo, hi, dps=40, iters=200):
    """Golden-section minimizer in multiprecision; returns (argmin, min) as mpf."""
    with mpmath.workdps(dps):
        invphi = (mpmath.sqrt(5) - 1) / 2
        a, b = mpmath.mpf(lo), mpmath.mpf(hi)
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc, fd = fn(c), fn(d)
        for _ in range(iters):
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = fn(c)
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = fn(d)
        x = (a + b) / 2
        return x, fn(x)


def mp_info(omega, u0, F_rest, w_rest):
    """Multiprecision intercept information of omega*origin + (1-omega)*rest.

    ``F_rest`` holds the no-intercept weighted regressors of the remaining
    support; the intercept regressor there is ``u~^(1/2)``, which the caller
    passes as the first column.
    """
    p = F_rest.shape[1]
    M = mpmath.zeros(p, p)
    M[0, 0] = omega * u0
    for f, w in zip(F_rest, w_rest):
        fv = [mpmath.mpf(float(t)) for t in f]
        for i in range(p):
            for j in range(p):
                M[i, j] += (1 - omega) * mpmath.mpf(float(w)) * fv[i] * fv[j]
    return M


def random_xi0_instance(rng: np.random.Generator, family: str, nu: int):
    """Random design in the origin-plus-hyperplane class.

    Points are ``x_i = z_i / c_i`` with ``z`` on the simplex, so ``c^T x = 1``.
    Logistic instances use ``beta0 = 0``.
    """
    c = rng.uniform(0.3, 2.0, nu)
    r = nu + int(rng.integers(0, 3))
    Z = rng.dirichlet(np.ones(nu), size=r) if nu > 1 else np.ones((r, 1))
    if nu == 1:
        r = 1
        Z = Z[:1]
    X = Z / c
    upper = float(np.max(X)) + 1.0
    region = ExperimentalRegion.box([0.0] * nu, [upper] * nu)
    w = rng.dirichlet(np.ones(r))
    rest = new_design(list(zip(X, w)), region)
    slope = rng.uniform(-1.5, 1.5, nu) if family == "logistic" else np.zeros(nu)
    m = ModelSpec(family, True, nu)
    beta = ParamPoint(0.0, slope)
    omega = float(rng.uniform(0.1, 0.9))
    return m, beta, c, rest, omega


@pytest.fixture(scope="session")
def ustar() -> float:
    return ustar_oracle()


@pytest.fixture
def unit_square():
    return ExperimentalRegion.unit_box(2)


def rel_frob(a, b) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def isclose(a, b, tol) -> bool:
    return math.isclose(a, b, rel_tol=tol, abs_tol=tol)
