"""Empirical-measure machinery, smoothing kernels, and the end-to-end
weighted CLT experiment at a small desk modulus."""

import math

import mpmath
import numpy as np
import pytest

from molliclt._special import trigamma
from molliclt.dirichlet_l import l_values_afe
from molliclt.mollifier import params_desk
from molliclt.stats import (
    CLTReport,
    SelbergFunction,
    WeightedEmpiricalMeasure,
    beurling_B,
    char_fn_plain,
    char_fn_weighted,
    clt_experiment,
    fejer_K,
    fejer_hat,
    gauss_cdf,
    ks_distance,
    measure_of_interval,
    normalized_log_values,
    selberg_minorant,
    typical_set_filter,
    write_charfn_csv,
    write_interval_csv,
)

KS_GRID = np.linspace(-4.0, 4.0, 512)


# ---------------------------------------------------------------------------
# gaussian cdf

def test_gauss_cdf_anchors():
    assert gauss_cdf(0.0) == pytest.approx(0.5, abs=1e-15)
    assert gauss_cdf(1.9599639845400545) == pytest.approx(0.975, abs=1e-12)
    assert gauss_cdf(math.inf) == 1.0
    assert gauss_cdf(-math.inf) == 0.0


def test_gauss_cdf_symmetry_and_vector_form():
    ts = np.array([-2.5, -0.3, 0.0, 1.1, 3.7])
    vals = gauss_cdf(ts)
    flipped = gauss_cdf(-ts)
    assert np.allclose(vals + flipped[::-1][::-1] * 0 + gauss_cdf(-ts), 1.0, atol=1e-15)
    assert np.all(np.diff(vals) > 0)


# ---------------------------------------------------------------------------
# weighted empirical measures

def test_measure_total_and_interval():
    m = WeightedEmpiricalMeasure(obs=np.array([-1.0, 0.0, 1.0]), wt=np.array([1.0, 1.0j, 1.0]))
    assert m.total == 2.0 + 1.0j
    assert m.cdf(0.0) == pytest.approx((1.0 + 1.0j) / (2.0 + 1.0j))
    assert measure_of_interval(m, (-0.5, 0.5)) == pytest.approx(1.0j / (2.0 + 1.0j))


def test_measure_interval_endpoints_are_open():
    # mass sitting exactly on an endpoint is excluded from the open interval
    m = WeightedEmpiricalMeasure(obs=np.array([0.0, 1.0]), wt=np.array([1.0, 1.0]))
    assert m.interval(0.0, 1.0) == 0.0
    assert m.interval(-0.1, 1.1) == 1.0
    # the cdf is right-closed
    assert m.cdf(0.0) == 0.5
    assert m.cdf(-1e-12) == 0.0


def test_measure_guards():
    with pytest.raises(ValueError, match="differ in length"):
        WeightedEmpiricalMeasure(obs=np.zeros(3), wt=np.zeros(2))
    cancel = WeightedEmpiricalMeasure(obs=np.array([0.0, 1.0]), wt=np.array([1.0, -1.0]))
    with pytest.raises(ValueError, match="zero total"):
        cancel.interval(-1.0, 2.0)
    with pytest.raises(ValueError, match="zero total"):
        cancel.cdf(0.0)
    with pytest.raises(ValueError, match="zero total"):
        ks_distance(cancel)


def test_ks_distance_single_atom_matches_hand_formula():
    """One unit atom at 0: the CDF is a step, so the KS statistic against
    the Gaussian is max over the grid of |1(t >= 0) - Phi(t)|."""
    m = WeightedEmpiricalMeasure(obs=np.array([0.0]), wt=np.array([1.0]))
    expected = float(np.max(np.abs((KS_GRID >= 0.0).astype(float) - gauss_cdf(KS_GRID))))
    assert ks_distance(m) == pytest.approx(expected, abs=1e-15)
    assert 0.49 < expected < 0.5


def test_ks_distance_gaussian_control():
    rng = np.random.default_rng(7)
    obs = rng.standard_normal(10_000)
    m = WeightedEmpiricalMeasure(obs=obs, wt=np.ones(len(obs)))
    assert ks_distance(m) < 0.05


def test_ks_distance_custom_grid():
    m = WeightedEmpiricalMeasure(obs=np.array([10.0]), wt=np.array([1.0]))
    # a grid strictly left of the atom sees cdf 0, so the sup is Phi(grid max)
    grid = np.array([-1.0, 0.0, 2.0])
    assert ks_distance(m, grid=grid) == pytest.approx(gauss_cdf(2.0), abs=1e-15)


# ---------------------------------------------------------------------------
# normalization of log |L|

def test_normalized_log_values_array_input():
    q = 10007
    scale = math.sqrt(0.5 * math.log(math.log(q)))
    arr = np.array([math.e, math.e**2, 1e-20])
    out, excluded = normalized_log_values(arr, "asymptotic", q=q)
    assert out[0] == pytest.approx(1.0 / scale, rel=1e-14)
    assert out[1] == pytest.approx(2.0 / scale, rel=1e-14)
    assert list(excluded) == [False, False, True]
    assert out[2] == 0.0


def test_normalized_log_values_central_value_set(table101):
    lv = l_values_afe(table101, 0.5)
    out, excluded = normalized_log_values(lv, "asymptotic")
    assert len(out) == table101.q - 2
    assert not excluded.any()  # no vanishing central values in this family
    assert np.all(np.isfinite(out))


def test_normalized_log_values_empirical_mode(desk_quarter):
    recip = desk_quarter.intervals[0].reciprocal_sum()
    out, _ = normalized_log_values(np.array([math.e]), "empirical", params=desk_quarter)
    assert out[0] == pytest.approx(1.0 / math.sqrt(0.5 * recip), rel=1e-14)


def test_normalized_log_values_guards():
    with pytest.raises(ValueError, match="needs the modulus"):
        normalized_log_values(np.array([1.0]), "asymptotic")
    with pytest.raises(ValueError, match="needs mollifier params"):
        normalized_log_values(np.array([1.0]), "empirical")
    with pytest.raises(ValueError, match="unknown variance mode"):
        normalized_log_values(np.array([1.0]), "wrong", q=101)


# ---------------------------------------------------------------------------
# characteristic functions

def test_char_fn_plain_single_point():
    val = char_fn_plain(np.array([0.7]), 1.3)
    assert val == pytest.approx(complex(math.cos(0.91), math.sin(0.91)), abs=1e-15)


def test_char_fn_plain_two_points_average():
    obs = np.array([0.5, -0.5])
    assert char_fn_plain(obs, 2.0) == pytest.approx(math.cos(1.0), abs=1e-15)


def test_char_fn_weighted_reduces_to_plain_on_unit_weights():
    obs = np.array([0.3, -1.2, 2.4])
    wt = np.ones(3)
    for u in (0.5, 1.0, 3.0):
        assert char_fn_weighted(wt, obs, u) == pytest.approx(char_fn_plain(obs, u), abs=1e-14)


def test_char_fn_weighted_hand_case():
    obs = np.array([1.0, -1.0])
    wt = np.array([2.0, 1.0])
    expect = (2.0 * np.exp(1.0j) + 1.0 * np.exp(-1.0j)) / 3.0
    assert char_fn_weighted(wt, obs, 1.0) == pytest.approx(complex(expect), abs=1e-15)


def test_char_fn_imaginary_frequency_axis():
    obs = np.array([0.25 + 0.5j])
    val = char_fn_plain(obs, 0.0, v=2.0)
    assert val == pytest.approx(np.exp(1.0j), abs=1e-15)


# ---------------------------------------------------------------------------
# fejer kernel and beurling majorant

def test_fejer_kernel_values():
    assert fejer_K(0.0) == 1.0
    assert np.allclose(fejer_K(np.arange(1, 6)), 0.0, atol=1e-30)
    assert fejer_K(0.5) == pytest.approx((2.0 / math.pi) ** 2, rel=1e-14)


def test_fejer_hat_is_the_tent():
    u = np.array([-2.0, -1.0, -0.25, 0.0, 0.5, 1.0, 3.0])
    assert np.allclose(fejer_hat(u), [0.0, 0.0, 0.75, 1.0, 0.5, 0.0, 0.0], atol=1e-15)


def test_trigamma_anchors():
    assert trigamma(1.0) == pytest.approx(math.pi**2 / 6.0, rel=1e-13)
    assert trigamma(0.5) == pytest.approx(math.pi**2 / 2.0, rel=1e-13)
    assert trigamma(2.0) == pytest.approx(math.pi**2 / 6.0 - 1.0, rel=1e-13)


def test_trigamma_against_mpmath_grid():
    for x in (0.1, 0.7, 1.3, 4.2, 17.5, 120.0):
        ref = float(mpmath.polygamma(1, x))
        assert trigamma(x) == pytest.approx(ref, rel=1e-12)


def test_beurling_interpolates_sign_at_integers():
    # equality cases of the majorant: B(n) = 1 and B(-n) = -1 at integers
    assert np.allclose(beurling_B(np.array([1.0, 2.0, 5.0])), 1.0, atol=1e-12)
    assert np.allclose(beurling_B(np.array([-1.0, -3.0])), -1.0, atol=1e-12)


def test_beurling_majorizes_sign_on_dense_grid():
    xs = np.linspace(-20.0, 20.0, 4001)
    slack = beurling_B(xs) - np.sign(xs)
    assert slack.min() >= -1e-9


def test_beurling_origin_branch():
    assert beurling_B(0.0) == 1.0
    assert beurling_B(1e-9) == pytest.approx(1.0 + 2e-9, abs=1e-18)
    # continuity across the series/Taylor switch at |x| = 1e-8
    assert abs(beurling_B(2e-8) - beurling_B(5e-9)) < 1e-7


def test_beurling_against_pole_series():
    """The defining two-sided pole expansion, summed directly with mpmath:

        B(z) = (sin pi z / pi)^2 (2/z + sum_{n>=0} (z-n)^-2 - sum_{n>=1} (z+n)^-2)

    This route never touches the trigamma reflection the implementation
    rests on, so agreement checks the whole algebraic collapse."""
    mpmath.mp.dps = 30
    for z in (0.3, 1.2, 2.7, -0.6, -3.4):
        zm = mpmath.mpf(z)
        series = (
            2.0 / zm
            + mpmath.nsum(lambda n: (zm - n) ** -2, [0, mpmath.inf])
            - mpmath.nsum(lambda n: (zm + n) ** -2, [1, mpmath.inf])
        )
        ref = float((mpmath.sin(mpmath.pi * zm) / mpmath.pi) ** 2 * series)
        assert beurling_B(z) == pytest.approx(ref, rel=1e-10), z


# ---------------------------------------------------------------------------
# selberg minorant

@pytest.fixture(scope="module")
def selberg():
    return selberg_minorant((-1.0, 1.0), 8.0)


def test_selberg_constructor_and_guards():
    s = selberg_minorant((0.0, 0.5), 1.0)
    assert isinstance(s, SelbergFunction)
    assert s.narrow  # delta * length = 0.5 < 1
    assert not selberg_minorant((0.0, 2.0), 1.0).narrow
    with pytest.raises(ValueError, match="bandwidth"):
        selberg_minorant((0.0, 1.0), 0.0)
    with pytest.raises(ValueError, match="positive length"):
        selberg_minorant((1.0, 1.0), 2.0)


def test_selberg_sandwich(selberg):
    xs = np.linspace(-5.0, 5.0, 3001)
    ind = ((xs >= selberg.a) & (xs <= selberg.b)).astype(float)
    assert np.min(ind - selberg.minorant(xs)) >= -1e-9
    assert np.min(selberg.majorant(xs) - ind) >= -1e-9


def test_selberg_majorant_minus_minorant_is_the_fejer_pair(selberg):
    # B(t) + B(-t) = 2 K(t) collapses the difference to the two kernels
    xs = np.linspace(-4.0, 4.0, 997)
    gap = selberg.majorant(xs) - selberg.minorant(xs)
    assert np.allclose(gap, selberg.fejer_bound(xs), atol=1e-12)


def test_selberg_fejer_bound_dominates_defect(selberg):
    xs = np.linspace(-6.0, 6.0, 2001)
    ind = ((xs >= selberg.a) & (xs <= selberg.b)).astype(float)
    defect = ind - selberg.minorant(xs)
    assert np.min(selberg.fejer_bound(xs) - defect) >= -1e-9


def test_selberg_narrow_interval_still_sandwiched():
    s = selberg_minorant((0.0, 0.25), 2.0)
    xs = np.linspace(-3.0, 3.0, 1501)
    ind = ((xs >= 0.0) & (xs <= 0.25)).astype(float)
    assert np.min(ind - s.minorant(xs)) >= -1e-9
    assert np.min(s.majorant(xs) - ind) >= -1e-9


def test_selberg_fourier_band_limit_and_mass(selberg):
    freqs, spectrum = selberg.fourier()
    mags = np.abs(spectrum)
    band = (np.abs(freqs) >= selberg.delta) & (np.abs(freqs) <= 1.6 * selberg.delta)
    assert band.any()
    assert mags[band].max() < 1e-6
    zero_idx = int(np.argmin(np.abs(freqs)))
    assert freqs[zero_idx] == 0.0
    f0 = spectrum[zero_idx]
    length = selberg.b - selberg.a
    assert abs(f0 - length) <= 2.0 / selberg.delta + 1e-9
    # the mass defect is the extremal one: exactly 1/delta below the length
    assert abs(f0 - (length - 1.0 / selberg.delta)) < 1e-6
    assert np.all(np.diff(freqs) > 0)


# ---------------------------------------------------------------------------
# typical set filter

def test_typical_set_filter_tallies(table101):
    w = np.array([1.0, 100.0, 0.001, 5.0])
    tail_piece = np.array([1.0, 1.0, 3.0, 1.0])  # tail bound is (log log 101)^2 ~ 2.34
    pieces = [np.ones(4), tail_piece]
    p = np.array([0.1, 0.2, 0.3, 10.0])
    rep = typical_set_filter(table101, w, pieces, p, weight_band=25.0, prime_sum_limit=3.0)
    assert rep.dropped_weight_band == 2
    assert rep.dropped_tail_product == 1
    assert rep.dropped_prime_sum == 1
    assert list(rep.kept) == [True, False, False, False]
    assert rep.kept_count == 1
    assert rep.tail_bound == pytest.approx(math.log(math.log(101)) ** 2)


def test_typical_set_filter_single_interval_skips_tail_condition(table101):
    w = np.ones(3)
    rep = typical_set_filter(table101, w, [np.ones(3)], np.zeros(3), prime_sum_limit=1.0)
    assert rep.dropped_tail_product == 0
    assert rep.kept_count == 3


def test_typical_set_filter_default_prime_limit(table101):
    # default limit is log log log q, which exists at q = 101
    rep = typical_set_filter(table101, np.ones(2), [np.ones(2)], np.zeros(2))
    assert rep.prime_sum_limit == pytest.approx(math.log(math.log(math.log(101))))


def test_typical_set_filter_guards(table101):
    from molliclt.characters import build_table

    with pytest.raises(ValueError, match="at least 1"):
        typical_set_filter(table101, np.ones(2), [np.ones(2)], np.zeros(2), weight_band=0.5)
    tiny = build_table(5)
    with pytest.raises(ValueError, match="pass prime_sum_limit"):
        typical_set_filter(tiny, np.ones(2), [np.ones(2)], np.zeros(2))


# ---------------------------------------------------------------------------
# the full experiment

@pytest.fixture(scope="module")
def report1009(table1009):
    params = params_desk(1009, [0.5], c0=1.0)
    return clt_experiment(table1009, params), params


def test_clt_report_shape_and_sigma(report1009, table1009):
    report, params = report1009
    assert isinstance(report, CLTReport)
    assert report.q == 1009
    sigma = math.sqrt(0.5 * params.intervals[0].reciprocal_sum())
    assert report.sigma_hat == pytest.approx(sigma, rel=1e-14)
    assert len(report.rows) == 6
    assert len(report.psi) == len(report.u_grid) == len(report.phi) == 12
    assert report.exclusion_count == 0
    assert report.wall_time > 0.0


def test_clt_rows_against_gaussian(report1009):
    report, _ = report1009
    for row in report.rows:
        assert row.gauss == pytest.approx(gauss_cdf(row.hi) - gauss_cdf(row.lo), abs=1e-15)
        assert row.abs_diff == abs(row.mu - row.gauss)
    # the six unit intervals partition (-3, 3): weighted masses sum near 1
    assert sum(row.mu for row in report.rows) == pytest.approx(1.0, abs=0.05)


def test_clt_characteristic_functions_behave(report1009):
    report, _ = report1009
    assert all(abs(p) <= 1.0 + 1e-12 for p in report.psi)
    # plain and weighted tables both track the Gaussian target at this size
    for u, phi in zip(report.u_grid, report.phi):
        assert abs(phi - math.exp(-0.5 * u * u)) < 0.2


def test_clt_ks_statistics(report1009):
    report, _ = report1009
    assert 0.0 <= report.ks_plain < 0.1
    assert report.ks_weighted < 0.25
    assert report.ks_weighted_filtered < 0.3
    assert abs(report.total_weight.imag) < 1e-9 * abs(report.total_weight)


def test_clt_accepts_precomputed_l_values(table1009, report1009):
    report, params = report1009
    lv = l_values_afe(table1009, 0.5)
    again = clt_experiment(table1009, params, l_values=lv)
    assert again.sigma_hat == report.sigma_hat
    assert again.ks_weighted == report.ks_weighted
    assert again.psi == report.psi


def test_clt_is_deterministic(table1009, report1009):
    report, params = report1009
    rerun = clt_experiment(table1009, params)
    assert rerun.rows == report.rows
    assert rerun.phi == report.phi
    assert rerun.total_weight == report.total_weight
    assert rerun.filter_report.kept_count == report.filter_report.kept_count


def test_clt_custom_grids(table1009, report1009):
    _, params = report1009
    rep = clt_experiment(
        table1009, params, intervals=((-1.0, 1.0),), u_grid=(0.5, 1.0)
    )
    assert len(rep.rows) == 1
    assert rep.u_grid == (0.5, 1.0)
    assert rep.rows[0].mu == pytest.approx(0.6827, abs=0.1)


# ---------------------------------------------------------------------------
# csv writers

def test_write_interval_csv_round_trips(report1009, tmp_path):
    report, _ = report1009
    path = tmp_path / "intervals.csv"
    write_interval_csv(report, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "interval_lo,interval_hi,mu_re,mu_im,gauss,abs_diff"
    assert len(lines) == 1 + len(report.rows)
    first = lines[1].split(",")
    assert float(first[0]) == report.rows[0].lo
    assert float(first[2]) == report.rows[0].mu.real
    assert float(first[5]) == report.rows[0].abs_diff


def test_write_charfn_csv_round_trips(tmp_path):
    path = tmp_path / "charfn.csv"
    write_charfn_csv([0.5, 1.0], [0.8 + 0.01j, 0.6 - 0.02j], str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "u,phi_re,phi_im,target"
    assert len(lines) == 3
    u, re, im, target = (float(v) for v in lines[1].split(","))
    assert (u, re, im) == (0.5, 0.8, 0.01)
    assert target == pytest.approx(math.exp(-0.125), rel=1e-15)
