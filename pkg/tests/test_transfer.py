import math

import mpmath
import numpy as np
import pytest
from conftest import golden_section, random_xi0_instance
from scipy.optimize import minimize_scalar

from optdesign import (
    ExperimentalRegion,
    ModelSpec,
    ParamPoint,
    a_trace_at_optimal_origin_weight,
    augment_origin,
    check_condition_a,
    check_condition_d,
    compute_T1,
    compute_T2,
    criterion_value,
    find_hyperplane_c,
    info_matrix,
    make_grid,
    new_design,
    origin_weight,
    sensitivity,
    strip_origin,
    transfer_to_intercept,
    transfer_to_no_intercept,
    verify_local_optimality,
)
from optdesign.errors import (
    ConditionViolated,
    NoNonOriginPoints,
    NonpositiveInput,
    NotInXi0,
    NotOptimalInput,
    PremiseViolated,
    T1Negative,
    WrongOriginWeight,
)
from optdesign.models import weighted_regressors_many
from optdesign.premises import POISSON_REDUCTION

THIRD = 1 / 3
POIS = ModelSpec("poisson", True, 2)
B_POIS = ParamPoint(0, [-2, -2])
LOGI = ModelSpec("logistic", True, 2)
B_LOGI = ParamPoint(0, [1, 1])
LIN1 = ModelSpec("linear", True, 1)
B_LIN1 = ParamPoint(0, [0])
UNIT1 = ExperimentalRegion.unit_box(1)
SQ10 = ExperimentalRegion.truncated([0, 0], [10, 10], [0, 1])


@pytest.fixture
def poisson_star(unit_square):
    return new_design([((0, 0), THIRD), ((1, 0), THIRD), ((0, 1), THIRD)], unit_square)


@pytest.fixture
def logistic_rest(ustar):
    return new_design([((0, ustar), 0.5), ((ustar, 0), 0.5)], SQ10)


def test_find_hyperplane_c_examples(poisson_star, logistic_rest, ustar, unit_square):
    cert = find_hyperplane_c(poisson_star, POIS, B_POIS)
    np.testing.assert_allclose(cert.c, [1, 1], atol=1e-14)
    assert cert.residual < 1e-14 and cert.in_xi0
    cert = find_hyperplane_c(logistic_rest, LOGI, B_LOGI)
    np.testing.assert_allclose(cert.c, [1 / ustar, 1 / ustar], rtol=1e-14)
    assert not cert.in_xi0  # no origin
    region = ExperimentalRegion.box([0, 0], [2, 2])
    bad = new_design([((0, 0), 0.25), ((1, 0), 0.25), ((2, 0), 0.25), ((0, 1), 0.25)], region)
    cert = find_hyperplane_c(bad, ModelSpec("linear", True, 2), ParamPoint(0, [0, 0]))
    assert cert.residual > 0.1 and not cert.in_xi0
    with pytest.raises(NoNonOriginPoints):
        find_hyperplane_c(new_design([((0, 0), 1)], unit_square), POIS, B_POIS)


def test_find_hyperplane_c_rank_deficient_takes_minimum_norm():
    region = ExperimentalRegion.box([0, 0], [2, 2])
    xi = new_design([((0, 0), 0.5), ((1, 1), 0.5)], region)
    cert = find_hyperplane_c(xi, ModelSpec("linear", True, 2), ParamPoint(0, [0, 0]))
    assert cert.rank_deficient
    np.testing.assert_allclose(cert.c, [0.5, 0.5], atol=1e-14)


def test_origin_weight_examples():
    assert origin_weight("D", 2) == THIRD
    assert origin_weight("A", 1, c=[1.0, 1.0], u0=1.0, tau=3.0) == pytest.approx(0.5, rel=1e-15)
    w = origin_weight("A", 1, c=[1.0], u0=1.0, tau=1.0)
    assert w == pytest.approx(math.sqrt(2) / (math.sqrt(2) + 1), rel=1e-15)
    arg, _ = golden_section(lambda t: 2 / t + 1 / (1 - t), mpmath.mpf("1e-6"), 1 - mpmath.mpf("1e-6"))
    assert abs(w - float(arg)) < 1e-8
    with pytest.raises(NonpositiveInput):
        origin_weight("A", 1, c=[1.0], u0=0.0, tau=1.0)
    with pytest.raises(NonpositiveInput):
        origin_weight("A", 1, c=[1.0], u0=1.0, tau=0.0)
    with pytest.raises(NonpositiveInput):
        origin_weight("D", 0)


def test_check_condition_d_logistic(logistic_rest, ustar):
    c = [1 / ustar, 1 / ustar]
    scan = check_condition_d(logistic_rest, LOGI, B_LOGI, c, make_grid(SQ10, 101))
    assert scan.margin >= -1e-6
    shrunk = new_design([((0, ustar), 0.9), ((ustar, 0), 0.1)], SQ10)
    assert check_condition_d(shrunk, LOGI, B_LOGI, c, make_grid(SQ10, 101)).margin < -1e-3


def test_check_condition_d_zero_at_support(poisson_star):
    rest = strip_origin(poisson_star)
    scan = check_condition_d(rest, POIS, B_POIS, [1, 1], make_grid(rest.region, 3))
    assert abs(scan.margin) < 1e-12


def test_d_equivalence_chain_identity():
    """psi_D of the augmented design equals (nu+1) - ((nu+1)/nu) * margin."""
    rng = np.random.default_rng(11)
    for family in ("linear", "logistic"):
        for nu in (1, 2, 3):
            m, b, c, rest, _ = random_xi0_instance(rng, family, nu)
            xi = augment_origin(rest, 1 / (nu + 1))
            X = rest.region.lower + (np.asarray(rest.region.upper) - rest.region.lower) * rng.uniform(
                0, 1, (50, nu)
            )
            from optdesign.transfer import _Tilde

            t = _Tilde.build(rest, m, b, c)
            q = t.parts(X)
            margin = nu * (1 - q["pen"]) - q["lhs_d"]
            for x, mg in zip(X, margin):
                psi = sensitivity(xi, m, b, x, "D")
                assert psi == pytest.approx((nu + 1) - (nu + 1) / nu * mg, rel=1e-9, abs=1e-9)


def test_a_identity_with_t1():
    """(1-omega)^2 (tr M^-1 - psi_A) = tau - f~^T M~^-2 f~ - T1 at the A-optimal origin weight."""
    rng = np.random.default_rng(12)
    for family in ("linear", "logistic"):
        for nu in (1, 2, 3):
            m, b, c, rest, _ = random_xi0_instance(rng, family, nu)
            mt, bt = m.as_no_intercept(), b.without_intercept()
            Mt = info_matrix(rest, mt, bt).entries
            tau = float(np.trace(np.linalg.inv(Mt)))
            u0 = 0.25 if family == "logistic" else 1.0
            w = origin_weight("A", nu, c, u0, tau)
            xi = augment_origin(rest, w)
            tr = criterion_value(info_matrix(xi, m, b), "A")
            assert tr == pytest.approx(a_trace_at_optimal_origin_weight(c, u0, tau), rel=1e-9)
            X = np.asarray(rest.region.upper) * rng.uniform(0, 1, (30, nu))
            T1 = compute_T1(X, rest, m, b, c)
            F = weighted_regressors_many(mt, bt, X)
            Minv = np.linalg.inv(Mt)
            lhs_a = np.einsum("ij,ij->i", F @ Minv @ Minv, F)
            for x, t1, la in zip(X, T1, lhs_a):
                psi = sensitivity(xi, m, b, x, "A")
                assert (1 - w) ** 2 * (tr - psi) == pytest.approx(tau - la - t1, rel=1e-8, abs=1e-8 * tau)


def test_t2_vanishes_at_origin_and_support(logistic_rest, ustar):
    c = [1 / ustar, 1 / ustar]
    assert compute_T2([0, 0], logistic_rest, LOGI, B_LOGI, c) == 0.0
    assert np.max(np.abs(compute_T2(logistic_rest.points, logistic_rest, LOGI, B_LOGI, c))) < 1e-10
    t1_support = compute_T1(logistic_rest.points, logistic_rest, LOGI, B_LOGI, c)
    assert np.max(np.abs(t1_support)) < 1e-10


def test_t1_t2_against_transcription(logistic_rest, ustar):
    """Term-by-term evaluation of T1 and T2 written out independently."""
    c = np.array([1 / ustar, 1 / ustar])
    x = np.array([1.3, 0.4])
    u = lambda z: math.exp(z.sum()) / (1 + math.exp(z.sum())) ** 2  # noqa: E731
    Mt = sum(0.5 * u(p) * np.outer(p, p) for p in logistic_rest.points)
    Mi = np.linalg.inv(Mt)
    tau = np.trace(Mi)
    u0 = 0.25
    f = math.sqrt(u(x)) * x
    s = math.sqrt(u(x))
    k2 = c @ c + 1
    t2 = 2 * math.sqrt(tau / (u0 * k2)) * (f @ Mi @ np.outer(c, c) @ f - c @ Mi @ (s * f))
    t1 = tau * (c @ f - s) ** 2 / u0 + t2
    assert compute_T2(x, logistic_rest, LOGI, B_LOGI, c) == pytest.approx(t2, rel=1e-12)
    assert compute_T1(x, logistic_rest, LOGI, B_LOGI, c) == pytest.approx(t1, rel=1e-12)


def test_check_condition_a_linear_toy():
    rest = new_design([((1.0,), 1.0)], UNIT1)
    grid = make_grid(UNIT1, 101)
    scan = check_condition_a(rest, LIN1, B_LIN1, [1.0], grid)
    assert scan.margin >= -1e-12
    # closed form of the margin: (2 + sqrt 2)(x - x^2)
    from optdesign.transfer import _Tilde

    q = _Tilde.build(rest, LIN1, B_LIN1, [1.0]).parts(grid.points)
    margin = 1.0 * (1 - q["pen"]) - q["t2"] - q["lhs_a"]
    x = grid.points[:, 0]
    np.testing.assert_allclose(margin, (2 + math.sqrt(2)) * (x - x**2), atol=1e-12)
    # T1 = (x - 1)((1 + sqrt 2) x - 1): negative on (sqrt2 - 1, 1)
    np.testing.assert_allclose(q["t1"], (x - 1) * ((1 + math.sqrt(2)) * x - 1), atol=1e-12)


def test_check_condition_a_equality_at_support():
    rng = np.random.default_rng(13)
    for family in ("linear", "logistic"):
        for nu in (2, 3):
            m, b, c, rest, _ = random_xi0_instance(rng, family, nu)
            mt, bt = m.as_no_intercept(), b.without_intercept()
            X = rest.points[:nu]
            F = weighted_regressors_many(mt, bt, X)
            a = np.linalg.norm(np.linalg.inv(F), axis=0)
            xa = new_design(list(zip(X, a / a.sum())), rest.region)
            from optdesign.transfer import _Tilde

            q = _Tilde.build(xa, m, b, c).parts(X)
            tau = np.trace(np.linalg.inv(info_matrix(xa, mt, bt).entries))
            margin = tau * (1 - q["pen"]) - q["t2"] - q["lhs_a"]
            np.testing.assert_allclose(margin / tau, 0.0, atol=1e-9)


def test_check_condition_a_random_nonoptimal_reports_negative():
    rng = np.random.default_rng(14)
    negatives = 0
    for _ in range(10):
        m, b, c, rest, _ = random_xi0_instance(rng, "linear", 2)
        scan = check_condition_a(rest, m, b, c, make_grid(rest.region, 21))
        negatives += scan.margin < 0
    assert negatives >= 8


def test_transfer_to_no_intercept_poisson(poisson_star, unit_square):
    rep = transfer_to_no_intercept(poisson_star, POIS, B_POIS, "D", make_grid(unit_square, 101))
    assert rep.verified
    assert rep.result.allclose(new_design([((1, 0), 0.5), ((0, 1), 0.5)], unit_square), atol=1e-15)
    assert rep.condition_margin >= -1e-6
    assert rep.to_dict()["certified"] is True


def test_transfer_to_no_intercept_logistic(ustar, logistic_rest):
    xi = augment_origin(logistic_rest, THIRD)
    rep = transfer_to_no_intercept(xi, LOGI, B_LOGI, "D", make_grid(SQ10, 101))
    assert rep.verified and rep.truncated
    assert rep.result.allclose(logistic_rest, atol=1e-14)


def test_transfer_to_no_intercept_errors(poisson_star, unit_square):
    grid = make_grid(unit_square, 11)
    heavy = new_design([((0, 0), 0.5), ((1, 0), 0.25), ((0, 1), 0.25)], unit_square)
    with pytest.raises(WrongOriginWeight) as e:
        transfer_to_no_intercept(heavy, POIS, B_POIS, "D", grid)
    assert e.value.expected == THIRD and e.value.actual == 0.5
    with pytest.raises(NotInXi0):
        transfer_to_no_intercept(strip_origin(poisson_star), POIS, B_POIS, "D", grid)
    off = new_design([((0, 0), THIRD), ((1, 0), 2 / 9), ((0, 1), 2 / 9), ((1, 1), 2 / 9)], unit_square)
    with pytest.raises(NotInXi0):
        transfer_to_no_intercept(off, POIS, B_POIS, "D", grid)
    with pytest.raises(PremiseViolated):
        transfer_to_no_intercept(poisson_star, LOGI, ParamPoint(1.0, [1, 1]), "D", grid)


def test_transfer_a_to_no_intercept_surfaces_negative_t1():
    w = math.sqrt(2) / (math.sqrt(2) + 1)
    xi = new_design([((0.0,), w), ((1.0,), 1 - w)], UNIT1)
    assert verify_local_optimality(xi, LIN1, B_LIN1, "A", make_grid(UNIT1, 101)).passed
    with pytest.raises(T1Negative) as e:
        transfer_to_no_intercept(xi, LIN1, B_LIN1, "A", make_grid(UNIT1, 101))
    assert e.value.minimum < 0
    assert math.sqrt(2) - 1 < e.value.argmin[0] < 1


def test_transfer_to_intercept_poisson_reduction(unit_square):
    rest = new_design([((1, 0), 0.5), ((0, 1), 0.5)], unit_square)
    m = ModelSpec("poisson", False, 2)
    rep = transfer_to_intercept(rest, m, ParamPoint(1.5, [-2, -2]), "D", make_grid(unit_square, 101))
    assert rep.route == POISSON_REDUCTION
    assert rep.verified
    expected = new_design([((0, 0), THIRD), ((1, 0), THIRD), ((0, 1), THIRD)], unit_square)
    assert rep.result.allclose(expected, atol=1e-15)


def test_transfer_to_intercept_logistic(logistic_rest, ustar):
    rep = transfer_to_intercept(logistic_rest, LOGI.as_no_intercept(), B_LOGI.without_intercept(), "D",
                                make_grid(SQ10, 101))
    assert rep.verified and rep.truncated
    assert rep.origin_weight == THIRD
    assert rep.condition_margin >= -1e-6
    assert rep.result.origin_weight == pytest.approx(THIRD, abs=1e-15)


def test_transfer_to_intercept_linear_a():
    rest = new_design([((1.0,), 1.0)], UNIT1)
    rep = transfer_to_intercept(rest, LIN1.as_no_intercept(), ParamPoint(None, [0]), "A", make_grid(UNIT1, 101))
    assert rep.verified
    assert rep.origin_weight == pytest.approx(math.sqrt(2) / (math.sqrt(2) + 1), rel=1e-15)
    tr = criterion_value(info_matrix(rep.result, LIN1, B_LIN1), "A")
    assert tr == pytest.approx(a_trace_at_optimal_origin_weight([1.0], 1.0, rep.tau_tilde), rel=1e-9)
    assert tr == pytest.approx((math.sqrt(2) + 1) ** 2, rel=1e-12)
    assert rep.t2_support_max < 1e-12


def test_transfer_to_intercept_errors(unit_square):
    grid = make_grid(unit_square, 51)
    m = ModelSpec("poisson", False, 2)
    shrunk = new_design([((1, 0), 0.9), ((0, 1), 0.1)], unit_square)
    with pytest.raises(NotOptimalInput):
        transfer_to_intercept(shrunk, m, ParamPoint(None, [-2, -2]), "D", grid)
    with pytest.raises(PremiseViolated):
        transfer_to_intercept(new_design([((0, 0), 0.5), ((1, 0), 0.5)], unit_square), m,
                              ParamPoint(None, [-2, -2]), "D", grid)
    # Poisson, one factor, slope 5: {1} is D-optimal without intercept but {0, 1} is not with it
    one = ModelSpec("poisson", False, 1)
    rest = new_design([((1.0,), 1.0)], UNIT1)
    assert verify_local_optimality(rest, one, ParamPoint(None, [5]), "D", make_grid(UNIT1, 101)).passed
    with pytest.raises(ConditionViolated) as e:
        transfer_to_intercept(rest, one, ParamPoint(None, [5]), "D", make_grid(UNIT1, 101))
    assert e.value.margin < 0
    assert e.value.argmin[0] == pytest.approx(0.6, abs=0.02)


def test_round_trip_between_directions(poisson_star, unit_square, logistic_rest):
    grid = make_grid(unit_square, 51)
    down = transfer_to_no_intercept(poisson_star, POIS, B_POIS, "D", grid)
    up = transfer_to_intercept(down.result, POIS.as_no_intercept(), B_POIS.without_intercept(), "D", grid)
    assert up.result.allclose(poisson_star, atol=1e-10)
    xi = augment_origin(logistic_rest, THIRD)
    g = make_grid(SQ10, 51)
    down = transfer_to_no_intercept(xi, LOGI, B_LOGI, "D", g)
    up = transfer_to_intercept(down.result, LOGI, B_LOGI, "D", g)
    assert up.result.allclose(xi, atol=1e-10)


def emax_xstar(b2: float, upper: float) -> float:
    """Interior point maximizing det of the equal-weight design {0, x, upper}."""
    m = ModelSpec("emax", True, 1)
    b = ParamPoint(0, [1, b2])
    region = ExperimentalRegion.box([0], [upper])

    def neg_logdet(x):
        xi = new_design([((0.0,), THIRD), ((x,), THIRD), ((upper,), THIRD)], region)
        return -np.linalg.slogdet(info_matrix(xi, m, b).entries)[1]

    return minimize_scalar(neg_logdet, bounds=(1e-6, upper - 1e-6), method="bounded",
                           options={"xatol": 1e-10}).x


def test_emax_three_point_round_trip():
    region = ExperimentalRegion.box([0], [150])
    xs = emax_xstar(25.0, 150.0)
    assert xs == pytest.approx(150 * 25 / 200, rel=1e-7)
    m = ModelSpec("emax", True, 1)
    b = ParamPoint(0, [1, 25])
    xi = new_design([((0.0,), THIRD), ((150 * 25 / 200,), THIRD), ((150.0,), THIRD)], region)
    grid = make_grid(region, 1501)
    assert verify_local_optimality(xi, m, b, "D", grid).passed
    down = transfer_to_no_intercept(xi, m, b, "D", grid)
    assert down.verified and len(down.result) == 2
    up = transfer_to_intercept(down.result, m.as_no_intercept(), b.without_intercept(), "D", grid)
    assert up.verified
    assert up.result.allclose(xi, atol=1e-10)


def test_exponential_fails_origin_premise():
    region = ExperimentalRegion.box([0], [150])
    m = ModelSpec("exponential", True, 1)
    xi = new_design([((0.0,), THIRD), ((100.0,), THIRD), ((150.0,), THIRD)], region)
    with pytest.raises(PremiseViolated) as e:
        transfer_to_no_intercept(xi, m, ParamPoint(0, [1, 50]), "D", make_grid(region, 11))
    assert "f_tilde(0)=0" in str(e.value)
