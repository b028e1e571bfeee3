import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from walkmax import (DegenerateSupport, DriftUnattainable, DriftWalkSpec, LatticePmf,
                     NotNormalized, Periodic, PositiveDrift, convolve, gen_fn, load_pmf,
                     lundberg_exponent, moments, tilt_to_drift, validate)

from conftest import LAZY, SYM_LAZY


def pmf(probs, span=1):
    return LatticePmf(span=span, probs=probs)


def test_validate_accepts_lazy_walk():
    p = pmf(LAZY)
    assert validate(p) is p


@pytest.mark.parametrize("probs, exc", [
    ({-2: 0.5, 2: 0.5}, Periodic),
    ({0: 0.5, 1: 0.5}, DegenerateSupport),
    ({-1: 1.0}, DegenerateSupport),
    ({-1: 0.5, 1: 0.6}, NotNormalized),
    ({-1: 1.2, 1: -0.2}, NotNormalized),
])
def test_validate_rejects(probs, exc):
    with pytest.raises(exc):
        validate(pmf(probs))


def test_validate_errors_are_value_errors():
    with pytest.raises(ValueError):
        validate(pmf({-2: 0.5, 2: 0.5}))


def test_periodic_after_shift_detected():
    # support {-3, 1, 5}: differences share a factor of 4
    with pytest.raises(Periodic):
        validate(pmf({-3: 0.5, 1: 0.25, 5: 0.25}))


def test_moments_symmetric_lazy():
    mean, var, _ = moments(pmf(SYM_LAZY))
    assert mean == 0.0
    assert var == pytest.approx(0.5, abs=1e-15)


def test_moments_lazy():
    mean, var, smom = moments(pmf(LAZY))
    assert mean == pytest.approx(-0.1, abs=1e-15)
    assert var == pytest.approx(0.49, abs=1e-15)
    assert smom == pytest.approx(0.2)


def test_moments_scale_with_span():
    mean, var, _ = moments(pmf(LAZY, span=3))
    assert mean == pytest.approx(-0.3)
    assert var == pytest.approx(9 * 0.49)


def test_drift_walk_spec_consistency():
    w = DriftWalkSpec.from_pmf(pmf(LAZY))
    assert w.drift_a == pytest.approx(0.1)
    assert w.sigma2 == pytest.approx(0.49)
    with pytest.raises(ValueError):
        DriftWalkSpec(pmf=pmf(LAZY), drift_a=0.2, sigma2=0.49)
    with pytest.raises(PositiveDrift):
        DriftWalkSpec.from_pmf(pmf({-1: 0.2, 0: 0.5, 1: 0.3}))


def test_load_pmf_round_trip(tmp_path):
    p = pmf({-2: 0.35, -1: 0.1, 0: 0.2, 1: 0.2, 2: 0.15})
    path = tmp_path / "walk.json"
    path.write_text(json.dumps(p.to_dict()))
    q = load_pmf(path)
    assert q == p and q.probs == p.probs


def test_malformed_document_rejected():
    with pytest.raises(ValueError):
        LatticePmf.from_dict({"probs": {"1": 1.0}})
    with pytest.raises(ValueError):
        LatticePmf.from_dict({"span": 1, "probs": {"x": 1.0}})


def test_tilt_identity_at_zero_drift():
    w = tilt_to_drift(pmf(SYM_LAZY), 0.0)
    assert w.tilt_theta == 0.0
    assert w.pmf.probs == pmf(SYM_LAZY).probs


def test_tilt_reaches_target_drift():
    w = tilt_to_drift(pmf(SYM_LAZY), 0.1)
    mean, _, _ = moments(w.pmf)
    assert abs(mean + 0.1) <= 1e-12
    assert w.pmf.support == [-1, 0, 1]
    assert w.tilt_theta < 0


def test_tilt_unattainable():
    with pytest.raises(DriftUnattainable):
        tilt_to_drift(pmf(SYM_LAZY), 1.0)


def test_tilt_requires_zero_mean_base():
    with pytest.raises(ValueError):
        tilt_to_drift(pmf(LAZY), 0.05)


def test_gen_fn_examples():
    g = gen_fn({1: 1.0}, 5, 2.0)
    assert (g.f_y, g.mu_y) == (2.0, 1.0)
    g = gen_fn({1: 0.5, 2: 0.5}, 2, 1.0)
    assert (g.f_y, g.mu_y) == (1.0, 1.5)
    g = gen_fn({1: 0.5, 2: 0.5}, 1, 1.0)
    assert (g.f_y, g.mu_y) == (0.5, 0.5)


def test_gen_fn_rejects_bad_arguments():
    with pytest.raises(ValueError):
        gen_fn({1: 1.0}, 0, 1.0)
    with pytest.raises(ValueError):
        gen_fn({1: 1.0}, 3, 0.5)


def test_convolve_examples():
    q = {-1: 0.3, 0: 0.4, 2: 0.3}
    assert convolve({0: 1.0}, q) == q
    assert convolve({1: 1.0}, {1: 1.0}) == {2: 1.0}
    assert convolve({1: 0.5, 2: 0.5}, {1: 0.5, 2: 0.5}) == {2: 0.25, 3: 0.5, 4: 0.25}


def test_convolve_arrays():
    out = convolve(np.array([0.5, 0.5]), np.array([0.5, 0.5]))
    np.testing.assert_allclose(out, [0.25, 0.5, 0.25])


def test_lundberg_exponent_lazy():
    # 0.3 e^{-t} + 0.5 + 0.2 e^{t} = 1 has root e^t = 3/2
    t = lundberg_exponent(pmf(LAZY))
    assert t == pytest.approx(math.log(1.5), abs=1e-12)
    assert t <= math.log(1.5)


small_pmfs = st.dictionaries(st.integers(-4, 4), st.floats(0.01, 1.0), min_size=1, max_size=5).map(
    lambda d: {k: v / math.fsum(d.values()) for k, v in d.items()})


def _close(p, q, tol=1e-13):
    keys = set(p) | set(q)
    return all(abs(p.get(k, 0.0) - q.get(k, 0.0)) <= tol for k in keys)


@settings(max_examples=60, deadline=None)
@given(small_pmfs, small_pmfs)
def test_convolve_commutes(p, q):
    assert _close(convolve(p, q), convolve(q, p))


@settings(max_examples=60, deadline=None)
@given(small_pmfs, small_pmfs, small_pmfs)
def test_convolve_associates(p, q, r):
    assert _close(convolve(convolve(p, q), r), convolve(p, convolve(q, r)))


zero_mean_bases = st.sampled_from([
    SYM_LAZY,
    {-2: 0.1, -1: 0.2, 0: 0.4, 1: 0.2, 2: 0.1},
    {-3: 0.1, -1: 0.3, 0: 0.2, 1: 0.2, 2: 0.2},
    {-1: 0.4, 0: 0.2, 1: 0.4},
])


@settings(max_examples=25, deadline=None)
@given(zero_mean_bases, st.lists(st.floats(0.01, 0.6), min_size=2, max_size=6, unique=True))
def test_tilt_preserves_support_and_orders_means(base, drifts):
    b = pmf(base)
    walks = [tilt_to_drift(b, a) for a in sorted(drifts)]
    for w in walks:
        assert w.pmf.support == b.support
        validate(w.pmf)
    thetas = [w.tilt_theta for w in walks]
    # larger drift needs a more negative tilt
    assert all(t1 > t2 for t1, t2 in zip(thetas, thetas[1:]))


@settings(max_examples=40, deadline=None)
@given(small_pmfs, st.integers(1, 6), st.floats(1.0, 3.0))
def test_gen_fn_monotone(d, y, z):
    f = {k + 5: v for k, v in d.items()}  # shift onto positive offsets
    assert gen_fn(f, y, z).f_y <= gen_fn(f, y + 1, z).f_y
    assert gen_fn(f, y, z).f_y <= gen_fn(f, y, z + 0.5).f_y


def test_tilted_variance_tends_to_base_variance():
    base = pmf({-2: 0.1, -1: 0.2, 0: 0.4, 1: 0.2, 2: 0.1})
    var0 = moments(base)[1]
    gaps = [abs(tilt_to_drift(base, 0.4 * 2.0 ** -k).sigma2 - var0) for k in range(8)]
    assert all(g1 > g2 for g1, g2 in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-4
