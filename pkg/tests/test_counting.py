import math

import numpy as np
import pytest

from meancount.counting import (
    counting_finite,
    counting_grid_csv,
    counting_sigma,
    limit_interchange_probe,
    littlewood_bound,
    mean_counting,
    submean_check,
    theta_inverse,
    unweighted_counting,
)
from meancount.dirichlet import DirichletPolynomial as D, constant_symbol, validate_symbol
from meancount.errors import MeanCountError
from meancount.ladder import LadderSpec
from meancount.oracles import affine_counting, phi_nu, phi_nu_counting, theta_inverse_closed

LOG2 = math.log(2.0)
PERIOD = 2 * math.pi / LOG2
PHI1 = phi_nu(1.0)
AFFINE = validate_symbol(D({1: 1.5, 2: 0.5}))
CONST = constant_symbol(1.2)
LATTICE = D({1: 1, 2: -2})


def test_counting_finite_examples():
    assert counting_finite(PHI1, 2.0, 0.5, PERIOD) == pytest.approx(LOG2, abs=1e-9)
    assert counting_finite(CONST, 2.0, 0.5, 10.0) == 0.0
    for s0, T in [(0.1, 5.0), (0.5, 40.0), (0.01, 123.4)]:
        assert counting_finite(AFFINE, 3.0, s0, T) == 0.0


def test_counting_finite_rejects_bad_input():
    with pytest.raises(MeanCountError) as exc:
        counting_finite(PHI1, 1.0, 0.5, 10.0)
    assert exc.value.code == "W_EQUALS_NU"
    with pytest.raises(MeanCountError):
        counting_finite(PHI1, 2.0, 0.0, 10.0)
    with pytest.raises(MeanCountError):
        counting_finite(PHI1, 2.0, 0.5, -1.0)


def test_counting_finite_half_weight_at_window_edge():
    # T = P/2 puts two replicated solutions exactly on |Im s| = T
    v = counting_finite(AFFINE, 1.75, 0.5, PERIOD / 2)
    assert v == pytest.approx(math.pi / (PERIOD / 2) * 1.0, abs=1e-9)


def test_counting_sigma_examples():
    est = counting_sigma(PHI1, 2.0, 0.5)
    assert est.converged
    assert est.value == pytest.approx(LOG2, abs=max(est.error_estimate, 1e-9))
    c = counting_sigma(CONST, 2.0, 0.5)
    assert c.value == 0.0 and len(c.t_ladder) == 1
    a = counting_sigma(AFFINE, 1.75, 0.5)
    assert a.value == pytest.approx(LOG2, abs=max(a.error_estimate, 1e-9))


def test_counting_sigma_nonconverged_reports_ladder():
    # a two-rung ladder with a slowly varying count cannot meet a tiny tolerance
    f = D({1: 1, 2: -1.5, 3: 0.8j, 5: 0.6})
    lad = LadderSpec(t0=3.1, steps=2, rel_tol=1e-12)
    with pytest.raises(MeanCountError) as exc:
        unweighted_counting(f, 0.1, lad)
    assert exc.value.code == "NONCONVERGED"
    assert len(exc.value.diagnostics["per_T_values"]) == 2


def test_mean_counting_examples():
    est = mean_counting(PHI1, 2.0)
    assert est.value == pytest.approx(LOG2, abs=1e-6)
    assert est.jessen_value == pytest.approx(LOG2, abs=1e-3)
    assert mean_counting(CONST, 0.9 + 2j).value == 0.0
    lat = mean_counting(LATTICE, 0.0)
    assert lat.value == pytest.approx(LOG2, abs=1e-6)


@pytest.mark.parametrize("w", [1.5 + 0.5j, 0.8 - 0.3j, 3.0 + 1.0j, 1.2 + 4.0j])
def test_mean_counting_matches_closed_form(w):
    est = mean_counting(PHI1, w)
    want = phi_nu_counting(1.0, w)
    assert est.value == pytest.approx(want, abs=max(1e-3, est.error_estimate))
    assert est.value <= littlewood_bound(w, 1.0).bound + 1e-3


def test_mean_counting_affine_symbol():
    for w in (1.75, 1.5 + 0.3j, 1.1 + 0.1j):
        est = mean_counting(AFFINE, w)
        assert est.value == pytest.approx(affine_counting(1.5, 0.5, w), abs=1e-3)
    assert mean_counting(AFFINE, 3.0).value == 0.0


def test_monotone_in_sigma0():
    # w close to the image edge: its solutions sit at Re s ~ 0.1, inside the ladder
    nu = 1.3 + 0.7j
    z = 0.93 * np.exp(0.7j)
    w = complex((nu + (1 - nu.conjugate()) * z) / (1 + z))
    est = mean_counting(phi_nu(nu), w)
    vals = est.per_sigma_values
    assert vals[0] == 0.0 and vals[-1] > 0.07
    assert all(b >= a - est.error_estimate - 1e-12 for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(phi_nu_counting(nu, w), abs=1e-9)


def test_unweighted_examples():
    assert unweighted_counting(LATTICE, 0.5).value == pytest.approx(LOG2 / (2 * math.pi), abs=1e-4)
    assert unweighted_counting(LATTICE, 1.5).value == 0.0
    assert unweighted_counting(D({1: 2.5}), 0.3).value == 0.0
    with pytest.raises(MeanCountError):
        unweighted_counting(D({}), 0.5)


def test_littlewood_examples():
    lb = littlewood_bound(2.0, 1.0)
    assert lb.bound == pytest.approx(LOG2)
    eps = [1e-2, 1e-4, 1e-6]
    bs = [littlewood_bound(1.0 + e, 1.0).bound for e in eps]
    assert np.allclose(np.diff(bs), math.log(100), rtol=5e-3)
    far = littlewood_bound(1 + 10j, 1.0)
    assert far.upper_env == pytest.approx(5e-3)
    assert far.bound == pytest.approx(far.upper_env, rel=2e-2)
    assert far.lower_env <= far.bound <= far.upper_env


def test_littlewood_sandwich_random():
    rng = np.random.default_rng(4)
    for _ in range(50):
        w = complex(rng.uniform(0.51, 4), rng.uniform(-5, 5))
        nu = complex(rng.uniform(0.51, 4), rng.uniform(-5, 5))
        b = littlewood_bound(w, nu)
        assert b.bound >= 0
        assert b.lower_env - 1e-12 <= b.bound <= b.upper_env + 1e-12


def test_littlewood_rejects_coincidence():
    with pytest.raises(MeanCountError) as exc:
        littlewood_bound(1.5, 1.5)
    assert exc.value.code == "W_EQUALS_NU"


def test_theta_inverse_examples():
    assert abs(theta_inverse(1.0)) < 1e-15
    assert theta_inverse(0.0) == pytest.approx(-1.0)
    v = theta_inverse(0.25)
    assert abs(v) < 1
    for s in (0.25, 0.4 + 0.9j, 2.0 - 1.0j, 5.0):
        assert theta_inverse(s) == pytest.approx(theta_inverse_closed(s), abs=1e-14)
        assert abs(theta_inverse(s)) <= 1 + 1e-12
    with pytest.raises(MeanCountError):
        theta_inverse(-0.1)
    with pytest.raises(MeanCountError):
        theta_inverse(0.5 + 1.5j)


def test_theta_inverse_log_subordination_constant():
    # pi Re s <= C log(1/|theta^{-1}(s)|) on |Im s| <= 1/2; the constant degrades
    # toward |Im s| = 1, where |theta^{-1}| = 1 identically
    xs = np.linspace(0.01, 0.5, 30)
    ys = np.linspace(-0.5, 0.5, 21)
    ratios = [math.pi * x / -math.log(abs(theta_inverse(complex(x, y)))) for x in xs for y in ys]
    assert max(ratios) < 4.0
    for x in (0.1, 0.7, 2.0):
        assert abs(theta_inverse(complex(x, 1.0))) == pytest.approx(1.0, abs=1e-12)


def test_interchange_probe_examples():
    p = limit_interchange_probe(PHI1, 2.0)
    assert p.gap <= 1e-3 * max(1.0, p.order_a)
    assert limit_interchange_probe(CONST, 2.0).gap == 0.0
    q = limit_interchange_probe(AFFINE, 1.75)
    assert q.gap <= 1e-3 * max(1.0, q.order_a)


def test_submean_property():
    chk = submean_check(PHI1, 1.6 + 0.4j, 0.3)
    assert chk.slack >= -1e-3
    assert chk.nodes == 96


def test_submean_rejects_disc_through_nu():
    with pytest.raises(MeanCountError):
        submean_check(PHI1, 1.2, 0.3)


def test_grid_csv():
    text = counting_grid_csv(PHI1, [2.0, 1.5 + 1j])
    lines = text.splitlines()
    assert lines[0] == "w_re,w_im,value,error_estimate,bound"
    assert len(lines) == 3
    row = lines[1].split(",")
    assert float(row[2]) == pytest.approx(LOG2, abs=1e-6)
    assert float(row[4]) == pytest.approx(LOG2)
