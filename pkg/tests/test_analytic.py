"""Closed-form outage expressions against frozen independent references.

The tables below were produced by a standalone prototype built only on
scipy.special/scipy.integrate (quad with epsabs=epsrel=1e-13) plus mpmath for
the special-function seeds, then pasted here. Nothing in this file recomputes
them through the package's own quadrature, so agreement is a real cross-check.
"""

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bscout import analytic, montecarlo
from bscout.analytic import (
    OutageReport,
    ProductChannelDist,
    as_probability,
    backscatter_best,
    backscatter_outage_exact,
    backscatter_outage_floor,
    backscatter_outage_gc,
    backscatter_outage_highsnr,
    backscatter_worst,
    cdf_gmax_hat,
    cdf_gmin,
    dist_cdf,
    dist_pdf,
    legacy_best,
    legacy_best_floor,
    legacy_no_backscatter,
    legacy_outage,
    legacy_outage_floor,
    legacy_worst,
    legacy_worst_floor,
    outage_capacity,
    prob_all_active,
    theta_k,
)
from bscout.scenario import derive_constants, load_config
from bscout.specfun import adaptive_integrate
from tests.conftest import at_power, single_link

ABS = 2e-9  # frozen-value tolerance: integration tol 1e-10 each side + slack

# Per-device exact backscatter outage, bundled scenario, by transmit power dBm.
BSC_EXACT = {
    10.0: (0.999999999999445, 0.994822548607405, 0.999998612789079),
    20.0: (0.966214525595606, 0.763489297864804, 0.873527152323578),
    30.0: (0.595263255446647, 0.653403406956627, 0.603737649344857),
    50.0: (0.468135109641671, 0.638522413664024, 0.550695034171686),
    55.0: (0.467130741929351, 0.638417443034363, 0.550305017401239),
    60.0: (0.466812738424736, 0.638384242063182, 0.550181612825779),
}
# Ten-node Gauss-Chebyshev variant of the same quantity.
BSC_GC10 = {
    10.0: (0.994822410709663,),  # device 2 only; devices 1/3 sit at ~1 anyway
    20.0: (0.966214408418579, 0.763488528620303, 0.873526709240453),
}
BSC_HIGHSNR = {
    10.0: (0.994822552134376,),  # device 2; the expansion is already tight
    20.0: (0.966214526090728, 0.76348929985578, 0.87352715389759),
    50.0: (0.468135109641684,),
}
BSC_FLOOR = (0.466665605488206, 0.63836888640328, 0.550124529806562)
BSC_BEST = {10.0: 0.994821168578149, 20.0: 0.644396131960844, 30.0: 0.234821971133004,
            55.0: 0.164114391239596, 60.0: 0.163957364605501}
BSC_WORST = {10.0: 1.0, 20.0: 0.998989402740491, 30.0: 0.944412168161562,
             55.0: 0.913354466614903, 60.0: 0.913271004499461}

LEG_SINGLE = {
    10.0: (0.991423982704408, 0.991445612294321, 0.991423985240581),
    20.0: (0.381300370205762, 0.450226253395986, 0.395406248690852),
    30.0: (0.0949922251558616, 0.207414467136804, 0.126985348048745),
    55.0: (0.0671324950140576, 0.176206433326428, 0.0959571558701339),
    60.0: (0.0670764761839157, 0.176137828258107, 0.0958904195674542),
}
LEG_FLOOR = (0.0670505763678786, 0.176106098785984, 0.0958595567086779)
NO_SL = {10.0: 0.991423982704407, 20.0: 0.378661070532279, 30.0: 0.0464733041411112,
         60.0: 4.75867242950567e-05}
# Selection outage with all three devices interfering, exact quadrature.
LEG_BEST = {10.0: 0.991423982704407, 20.0: 0.378814713166707, 30.0: 0.0594409762723191,
            55.0: 0.0213450193470822, 60.0: 0.0212647296597233}
LEG_WORST = {10.0: 0.991445614811582, 20.0: 0.46273300042369, 30.0: 0.263441174886702,
             55.0: 0.241983808595499, 60.0: 0.241937955188843}
LEG_BEST_FLOOR = 0.0212276022292853
LEG_WORST_FLOOR = 0.241916750246519

POWERS = (10.0, 20.0, 30.0)


def test_dist_cdf_frozen():
    # mpmath: 1 - 2 K1(2) at x = mu = 1.
    assert math.isclose(dist_cdf(1.0, 1.0), 0.72026823636695515, rel_tol=1e-12)
    assert dist_cdf(0.0, 1.0) == 0.0
    assert dist_cdf(-1.0, 1.0) == 0.0
    assert dist_cdf(1e9, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_dist_pdf_integrates_to_cdf():
    for mu in (1e-6, 1.0, 100.0):
        for frac in (0.3, 1.0, 5.0):
            x = frac * mu
            got = adaptive_integrate(lambda t: dist_pdf(t, mu), 0.0, x, 1e-10)
            assert math.isclose(got, dist_cdf(x, mu), abs_tol=1e-8), (mu, frac)


@given(
    st.floats(min_value=-6.0, max_value=6.0),
    st.floats(min_value=-6.0, max_value=6.0),
    st.floats(min_value=1e-3, max_value=1e3),
)
@settings(max_examples=150, deadline=None)
def test_dist_cdf_monotone(log_a, log_b, mu):
    a, b = sorted((10.0 ** log_a, 10.0 ** log_b))
    ca, cb = dist_cdf(a * mu, mu), dist_cdf(b * mu, mu)
    assert 0.0 <= ca <= cb <= 1.0


def test_dist_cdf_against_live_sampling():
    # The product of two unit exponentials must follow the K1-based law.
    rng = np.random.Generator(np.random.Philox(1234))
    n = 1_000_000
    x = rng.exponential(1.0, n) * rng.exponential(1.0, n)
    for q in (0.1, 0.5, 1.0, 3.0):
        emp = float(np.mean(x <= q))
        ana = dist_cdf(q, 1.0)
        se = math.sqrt(ana * (1.0 - ana) / n)
        assert abs(emp - ana) <= 5.0 * se, (q, emp, ana)


def test_product_channel_dist_wrapper():
    d = ProductChannelDist(2.5)
    assert d.cdf(1.3) == dist_cdf(1.3, 2.5)
    assert d.pdf(1.3) == dist_pdf(1.3, 2.5)
    assert math.isinf(d.pdf(0.0))


def test_theta_frozen():
    assert theta_k(0.0) == 0.0
    assert theta_k(math.inf) == 1.0
    assert math.isclose(theta_k(1e-6), 1.3238309131365003e-05, rel_tol=1e-12)
    assert math.isclose(theta_k(1.0), 0.59634736232319407, rel_tol=1e-12)
    assert math.isclose(theta_k(50.0), 0.98075549650574352, rel_tol=1e-12)
    with pytest.raises(ValueError):
        theta_k(-0.5)


@given(st.floats(min_value=-8.0, max_value=8.0), st.floats(min_value=0.01, max_value=2.0))
@settings(max_examples=200, deadline=None)
def test_theta_monotone_unit_interval(log_w, bump):
    w = 10.0 ** log_w
    lo, hi = theta_k(w), theta_k(w * (1.0 + bump))
    assert 0.0 < lo < hi < 1.0


def test_backscatter_exact_frozen(scn):
    for dbm, refs in BSC_EXACT.items():
        s = at_power(scn, dbm)
        for k, ref in enumerate(refs):
            got = backscatter_outage_exact(s, k)
            assert abs(got - ref) <= ABS, (dbm, k, got, ref)


def test_backscatter_gc_frozen(scn):
    for dbm, refs in BSC_GC10.items():
        s = at_power(scn, dbm)
        ks = (1,) if len(refs) == 1 else (0, 1, 2)
        for k, ref in zip(ks, refs):
            got = backscatter_outage_gc(s, k, order=10)
            assert abs(got - ref) <= ABS, (dbm, k, got, ref)


def test_backscatter_highsnr_frozen(scn):
    for dbm, refs in BSC_HIGHSNR.items():
        s = at_power(scn, dbm)
        ks = (1,) if dbm == 10.0 else ((0,) if dbm == 50.0 else (0, 1, 2))
        for k, ref in zip(ks, refs):
            got = backscatter_outage_highsnr(s, k)
            assert abs(got - ref) <= ABS, (dbm, k, got, ref)


def test_backscatter_floor_frozen(scn):
    for k, ref in enumerate(BSC_FLOOR):
        assert abs(backscatter_outage_floor(scn, k) - ref) <= ABS
    # The floor carries no transmit power at all.
    for dbm in (0.0, 25.0, 60.0):
        s = at_power(scn, dbm)
        for k, ref in enumerate(BSC_FLOOR):
            assert math.isclose(backscatter_outage_floor(s, k), ref, rel_tol=1e-9)


def test_backscatter_selection_frozen(scn):
    for dbm, ref in BSC_BEST.items():
        got = backscatter_best(at_power(scn, dbm))
        assert abs(got - ref) <= 1e-8, (dbm, got, ref)
    for dbm, ref in BSC_WORST.items():
        got = backscatter_worst(at_power(scn, dbm))
        assert abs(got - ref) <= 1e-8, (dbm, got, ref)


def test_gc_converges_to_exact(scn):
    # A 200-node rule should track the adaptive integral almost to roundoff.
    for dbm in (20.0, 30.0):
        s = at_power(scn, dbm)
        for k in range(3):
            gc = backscatter_outage_gc(s, k, order=200)
            exact = backscatter_outage_exact(s, k)
            assert abs(gc - exact) <= 5e-9, (dbm, k, gc, exact)


def test_highsnr_tracks_exact_at_high_power(scn):
    s = at_power(scn, 50.0)
    for k in range(3):
        hs = backscatter_outage_highsnr(s, k)
        exact = backscatter_outage_exact(s, k)
        assert abs(hs - exact) <= 1e-9, (k, hs, exact)


def test_exact_approaches_floor(scn):
    s = at_power(scn, 60.0)
    for k in range(3):
        gap = backscatter_outage_exact(s, k) - backscatter_outage_floor(s, k)
        assert 0.0 < gap <= 1e-3, (k, gap)


def test_legacy_frozen(scn):
    for dbm, refs in LEG_SINGLE.items():
        s = at_power(scn, dbm)
        for k, ref in enumerate(refs):
            got = legacy_outage(s, k)
            assert abs(got - ref) <= ABS, (dbm, k, got, ref)
    for dbm, ref in NO_SL.items():
        got = legacy_no_backscatter(at_power(scn, dbm))
        assert abs(got - ref) <= ABS, (dbm, got, ref)
    for k, ref in enumerate(LEG_FLOOR):
        assert abs(legacy_outage_floor(scn, k) - ref) <= ABS


def test_legacy_selection_frozen(scn):
    for dbm, ref in LEG_BEST.items():
        got = legacy_best(at_power(scn, dbm), method="exact")
        assert abs(got - ref) <= 5e-9, (dbm, got, ref)
    for dbm, ref in LEG_WORST.items():
        got = legacy_worst(at_power(scn, dbm), method="exact")
        assert abs(got - ref) <= 5e-9, (dbm, got, ref)
    assert abs(legacy_best_floor(scn, method="exact") - LEG_BEST_FLOOR) <= 5e-9
    assert abs(legacy_worst_floor(scn, method="exact") - LEG_WORST_FLOOR) <= 5e-9


def test_legacy_selection_gc_close_to_exact(scn):
    # The Gauss-Chebyshev path trades absolute accuracy (~order^-2) for
    # speed; it must stay near the exact quadrature but is NOT used in
    # ordering-sensitive tests (at low power its truncation error exceeds
    # the true best/no-interferer gap).
    for dbm in POWERS:
        s = at_power(scn, dbm)
        assert abs(legacy_best(s, order=100) - LEG_BEST[dbm]) <= 1e-4
        assert abs(legacy_worst(s, order=100) - LEG_WORST[dbm]) <= 1e-4


def test_single_device_selection_collapses(scn):
    # With one device, "pick the best interferer" and "suffer the worst" are
    # the same channel, and both must equal the single-interferer closed form.
    for dbm in POWERS:
        s1 = single_link(at_power(scn, dbm))
        direct = legacy_outage(s1, 0)
        assert abs(legacy_worst(s1, method="exact") - direct) <= 2e-9
        assert abs(legacy_best(s1, method="exact") - direct) <= 2e-9
        assert abs(legacy_worst(s1, order=10) - direct) <= 5e-3


def test_ordering_chains(scn):
    for dbm in POWERS:
        s = at_power(scn, dbm)
        per = [backscatter_outage_exact(s, k) for k in range(3)]
        best, worst = backscatter_best(s), backscatter_worst(s)
        assert best <= min(per) + 1e-12
        assert worst >= max(per) - 1e-12
        leg = [legacy_outage(s, k) for k in range(3)]
        no_sl = legacy_no_backscatter(s)
        lbest = legacy_best(s, method="exact")
        lworst = legacy_worst(s, method="exact")
        assert no_sl <= lbest + 1e-9
        assert lbest <= min(leg) + 1e-9
        assert lworst >= max(leg) - 1e-9


def test_floors_lower_bound_everything(scn):
    s = at_power(scn, 60.0)
    for k in range(3):
        assert legacy_outage_floor(s, k) <= legacy_outage(s, k) + 1e-12
    assert legacy_best_floor(s, method="exact") <= legacy_best(s, method="exact") + 1e-9
    assert legacy_worst_floor(s, method="exact") <= legacy_worst(s, method="exact") + 1e-9


def test_interference_cdf_edges(scn):
    assert cdf_gmin(scn, 0.0) == 0.0
    assert cdf_gmin(scn, -1.0) == 0.0
    inactive_all = math.prod(
        1.0 - derive_constants(scn.system, scn.legacy, link).p_active
        for link in scn.links
    )
    # At zero the max-interference CDF carries the all-devices-dead atom.
    assert math.isclose(cdf_gmax_hat(scn, 0.0), inactive_all, rel_tol=1e-12)
    assert cdf_gmax_hat(scn, -1.0) == 0.0
    big = 1e3 * max(
        derive_constants(scn.system, scn.legacy, link).mu_int for link in scn.links
    )
    assert cdf_gmax_hat(scn, big) == pytest.approx(1.0, abs=1e-6)
    assert cdf_gmin(scn, big) == pytest.approx(1.0, abs=1e-6)


@given(st.floats(min_value=-14.0, max_value=-6.0), st.floats(min_value=0.05, max_value=1.0))
@settings(max_examples=100, deadline=None)
def test_interference_cdfs_monotone(log_x, bump):
    scn = at_power(load_config(), 20.0)
    x = 10.0 ** log_x
    y = x * (1.0 + bump)
    assert cdf_gmin(scn, x) <= cdf_gmin(scn, y) + 1e-15
    assert cdf_gmax_hat(scn, x) <= cdf_gmax_hat(scn, y) + 1e-15


def test_prob_all_active_composes(scn):
    want = math.prod(
        derive_constants(scn.system, scn.legacy, link).p_active for link in scn.links
    )
    assert math.isclose(prob_all_active(scn), want, rel_tol=1e-12)
    assert 0.0 < prob_all_active(scn) < 1.0


def test_zero_noise_collapses_to_interference_only(scn):
    system = dataclasses.replace(scn.system, noise_power=0.0)
    s = scn._replace(system=system)
    for k in range(3):
        dc = derive_constants(s.system, s.legacy, s.links[k])
        want = 1.0 - dc.p_active * (1.0 - theta_k(dc.int_to_sig_br * dc.gamma_th_b))
        for fn in (backscatter_outage_exact, backscatter_outage_gc,
                   backscatter_outage_highsnr):
            assert math.isclose(fn(s, k), want, rel_tol=1e-12), fn.__name__


def test_zero_rate_means_no_outage(scn):
    system = dataclasses.replace(scn.system, legacy_rate=0.0)
    s = scn._replace(system=system)
    assert legacy_no_backscatter(s) == 0.0
    assert legacy_outage(s, 0) == 0.0
    assert legacy_best(s, method="exact") == 0.0
    assert legacy_worst(s, method="exact") == 0.0
    system_b = dataclasses.replace(scn.system, backscatter_rate=0.0)
    sb = scn._replace(system=system_b)
    dc = derive_constants(sb.system, sb.legacy, sb.links[0])
    # No rate to miss: only the energy outage is left.
    assert math.isclose(backscatter_outage_exact(sb, 0), 1.0 - dc.p_active, rel_tol=1e-12)


def test_method_dispatch(scn):
    s = at_power(scn, 20.0)
    assert backscatter_best(s, method="floor") == pytest.approx(
        math.prod(BSC_FLOOR), rel=1e-9)
    gc = backscatter_best(s, method="gc", order=64)
    assert abs(gc - BSC_BEST[20.0]) <= 1e-6
    with pytest.raises(ValueError):
        backscatter_best(s, method="magic")
    with pytest.raises(ValueError):
        legacy_best(s, method="magic")


def test_probability_guard():
    assert as_probability(0.5) == 0.5
    assert as_probability(-5e-10) == 0.0
    assert as_probability(1.0 + 5e-10) == 1.0
    with pytest.raises(ArithmeticError):
        as_probability(-1e-6)
    with pytest.raises(ArithmeticError):
        as_probability(1.001)
    with pytest.raises(ArithmeticError):
        as_probability(math.nan)
    report = OutageReport("demo", 1.0 + 2e-10)
    assert report.probability == 1.0


def test_outage_capacity():
    assert outage_capacity(1e3, 0.25) == pytest.approx(750.0, rel=1e-15)
    assert outage_capacity(1e3, 0.0) == 1e3
    assert outage_capacity(0.0, 0.5) == 0.0
    with pytest.raises(ValueError):
        outage_capacity(-1.0, 0.5)
    with pytest.raises(ArithmeticError):
        outage_capacity(1e3, 1.5)


def test_two_identical_devices_multiply(scn):
    # Independent identical devices: best-selection outage is the square of
    # the single-device outage; checked against a direct simulation as well.
    s = at_power(scn, 25.0)
    twin = s._replace(links=(s.links[0], s.links[0]))
    p1 = backscatter_outage_exact(twin, 0)
    assert math.isclose(backscatter_best(twin), p1 * p1, rel_tol=1e-12)
    est = montecarlo.estimate_backscatter_selection(twin, "best", trials=200_000, seed=7)
    assert abs(est.probability - p1 * p1) <= max(5.0 * est.stderr, 2e-3)
