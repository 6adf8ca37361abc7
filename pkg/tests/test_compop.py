import json
import math

import mpmath
import numpy as np
import pytest
from scipy.special import i0

from meancount.compop import (
    compactness_profile,
    composition_norm,
    composition_norm_details,
    h2_norm,
    hilbert_schmidt_details,
    hilbert_schmidt_norm,
    hs_partial_sum,
    kernel_norms,
    littlewood_paley_check,
    littlewood_paley_residual,
    mean_counting_circle,
    mean_counting_roots,
    stanton_check,
)
from meancount.counting import mean_counting
from meancount.dirichlet import DirichletPolynomial as D, constant_symbol, validate_symbol
from meancount.errors import MeanCountError
from meancount.oracles import affine_counting, phi_nu, phi_nu_composition_norm_sq
from meancount.zeta import zeta, zeta_dd

LOG2 = math.log(2.0)
PHI1 = phi_nu(1.0)
SKEW = phi_nu(1.3 + 0.7j)
AFFINE = validate_symbol(D({1: 1.5, 2: 0.5}))
QUAD = validate_symbol(D({1: 2.0, 2: 0.6, 4: 0.3j}))

# sum_n n^{-3} I_0(log n): scipy i0e summed to 2e6 plus an mpmath tail beyond it
HS_AFFINE_SQ = 1.2768557396121987


def test_h2_norm_examples():
    assert h2_norm(D({2: 1})) == 1.0
    assert h2_norm(D({1: 1, 2: 1, 3: 1})) == pytest.approx(math.sqrt(3))
    assert h2_norm(D({})) == 0.0


def test_composition_norm_trivial_cases():
    f = D({1: 0.5, 2: 1j, 3: -2})
    nu = 0.9 + 0.4j
    want = abs(sum(a * n ** (-nu) for n, a in f))
    assert composition_norm(f, constant_symbol(nu)) == pytest.approx(want, rel=1e-14)
    for phi in (PHI1, AFFINE, QUAD):
        assert composition_norm(D({1: 1}), phi) == pytest.approx(1.0)


def test_composition_norm_affine_symbol():
    # coefficients 2^{-3/2} (-log2/2)^k / k! at 2^k, so the squared norm is I_0(log 2) / 8
    want = math.sqrt(i0(LOG2) / 8)
    assert composition_norm(D({2: 1}), AFFINE) == pytest.approx(want, rel=1e-12)
    assert want == pytest.approx(0.374795, abs=1e-6)


@pytest.mark.parametrize("nu", [1.0, 1.3 + 0.7j, 2.0, 0.6 + 3j])
@pytest.mark.parametrize("f", [D({2: 1}), D({1: 1, 2: 1}), D({1: 0.3, 3: -1, 4: 0.5j})])
def test_composition_norm_extremal_closed_form(nu, f):
    d = composition_norm_details(f, phi_nu(nu))
    want = phi_nu_composition_norm_sq(nu, f)
    assert d.value**2 == pytest.approx(want, abs=max(3 * d.error, 1e-12))
    assert abs(d.value**2 - want) <= 1e-3 * max(1.0, want)


def test_composition_norm_truncation_error():
    with pytest.raises(MeanCountError) as exc:
        composition_norm_details(D({2: 1}), PHI1, target=1e-9, max_cut=128)
    assert exc.value.code == "TRUNCATION"
    loose = composition_norm_details(D({2: 1}), PHI1, target=1e-9, max_cut=128, strict=False)
    assert loose.error > 1e-9


def test_composition_norm_rejects_small_nu():
    with pytest.raises(MeanCountError):
        composition_norm(D({2: 1}), D({1: 0.4, 2: 0.1}))


def test_littlewood_paley_examples():
    assert littlewood_paley_residual(D({2: 1})) <= 1e-3
    assert littlewood_paley_residual(D({1: 4.0})) == 0.0
    chk = littlewood_paley_check(D({1: 1, 2: 1, 6: 1}))
    assert chk.norm_squared == pytest.approx(3.0)
    assert chk.residual <= 1e-3


def test_roots_route_matches_affine_oracle():
    rng = np.random.default_rng(8)
    ws = 1.5 + 0.6 * np.sqrt(rng.uniform(0, 1, 40)) * np.exp(2j * np.pi * rng.uniform(0, 1, 40))
    got = mean_counting_roots(AFFINE, ws)
    want = [affine_counting(1.5, 0.5, w) for w in ws]
    assert np.allclose(got, want, atol=1e-12)


def test_roots_route_matches_zero_route():
    # a degree-two symbol: the zero finder and the companion eigenvalues share nothing
    for w in (2.3 + 0.2j, 1.6 - 0.1j, 2.0 + 0.5j, 2.4 - 0.4j):
        zero_route = mean_counting(QUAD, w).value
        assert mean_counting_roots(QUAD, [w])[0] == pytest.approx(zero_route, abs=1e-8)


def test_circle_route_matches_roots_away_from_boundary():
    ws = np.array([1.75, 1.5 + 0.2j, 1.3 - 0.1j, 2.5 + 1j])
    val, err = mean_counting_circle(AFFINE, ws, nodes=512)
    exact = mean_counting_roots(AFFINE, ws)
    assert np.all(np.abs(val - exact) <= err + 1e-9)


def test_stanton_constant_symbol():
    f = D({1: 1, 2: -0.5, 3: 2j})
    r = stanton_check(f, constant_symbol(1.4 - 0.2j))
    assert r.abs_gap < 1e-13
    assert r.lhs == pytest.approx(r.rhs)


@pytest.mark.parametrize(
    "f, phi",
    [(D({2: 1}), PHI1), (D({2: 1}), AFFINE), (D({1: 1, 2: 1}), SKEW)],
    ids=["two-phi1", "two-affine", "one-plus-two-skew"],
)
def test_stanton_gap_within_budget(f, phi):
    r = stanton_check(f, phi)
    assert r.rel_gap <= 2e-2
    assert r.abs_gap <= r.error_budget
    assert r.error_budget >= r.tail_bound + r.singular_patch_bound


def test_stanton_report_serialises():
    r = stanton_check(D({2: 1}), AFFINE)
    d = json.loads(r.to_json())
    for key in ("lhs", "rhs", "abs_gap", "rel_gap", "quad_cells", "tail_bound", "singular_patch_bound"):
        assert key in d
    head, row = r.to_csv().splitlines()
    assert len(head.split(",")) == len(row.split(","))


def test_zeta_against_mpmath():
    xs = [1.01, 1.1, 1.19, 1.2, 1.5, 2.0, 3.0, 7.5, 40.0]
    for x in xs:
        assert zeta(x) == pytest.approx(float(mpmath.zeta(x)), rel=1e-10)
        dd = float(mpmath.diff(lambda t: mpmath.zeta(t), x, 2))
        assert zeta_dd(x) == pytest.approx(dd, rel=1e-10)
    assert np.allclose(zeta(np.array(xs)), [zeta(x) for x in xs], rtol=1e-15)
    with pytest.raises(MeanCountError):
        zeta(1.0)


def test_hs_constant_symbols():
    assert hilbert_schmidt_norm(constant_symbol(1.0)) == pytest.approx(math.pi**2 / 6, abs=1e-10)
    assert hilbert_schmidt_norm(constant_symbol(1.5)) == pytest.approx(float(mpmath.zeta(3)), abs=1e-10)


def test_hs_affine_symbol_against_series_oracle():
    d = hilbert_schmidt_details(AFFINE)
    assert not d.divergent
    budget = d.quad_error + d.tail_bound + d.singular_patch_bound
    assert abs(d.value - HS_AFFINE_SQ) <= budget
    assert d.value == pytest.approx(HS_AFFINE_SQ, rel=1e-3)


def test_hs_partial_sums_increase_toward_the_norm():
    sums = [hs_partial_sum(AFFINE, n) for n in (16, 64, 256)]
    assert sums[0] < sums[1] < sums[2] < HS_AFFINE_SQ
    assert HS_AFFINE_SQ - sums[2] < 2e-3


def test_hs_extremal_symbol_diverges():
    d = hilbert_schmidt_details(PHI1)
    assert d.divergent and math.isinf(d.value)
    assert json.loads(d.to_json())["value"] == "inf"


def test_compactness_verdicts():
    prof = compactness_profile(PHI1)
    assert prof.verdict == "NONCOMPACT_CONSISTENT"
    for s in prof.samples:
        w = s["w"]
        assert s["ratio"] >= 0
        assert s["ratio"] <= 2 * 0.5 / abs(w - 1) ** 2 + 1e-6
    assert compactness_profile(AFFINE).verdict == "COMPACT_CONSISTENT"
    assert compactness_profile(constant_symbol(1.0)).verdict == "COMPACT_CONSISTENT"
    assert all(s["m_value"] == 0 for s in compactness_profile(AFFINE).samples)


def test_compactness_rejects_bad_path():
    with pytest.raises(MeanCountError):
        compactness_profile(PHI1, [0.4 + 0.1j])


def test_kernel_ordering():
    a = kernel_norms(PHI1)
    b = kernel_norms(AFFINE)
    assert b.values[-1] < b.values[0]
    assert a.values[-1] >= a.values[0]
    assert a.values[-1] > 2 * b.values[-1]
    assert all(0 <= t < 1 for t in a.kernel_tails)
