import pytest
from hypothesis import given
from hypothesis import strategies as st

from qrepeater.bell import make_dephased, make_werner
from qrepeater.errors import ConfigError, DomainError
from qrepeater.link import LinkParams, default_link_table, link_params, one_way_latency


def test_default_table():
    assert default_link_table() == {10.0: (0.40, 0.77), 20.0: (0.38, 0.638)}


def test_table_is_a_copy():
    t = default_link_table()
    t[30.0] = (0.1, 0.6)
    assert 30.0 not in default_link_table()


def test_lookup_20km():
    link = link_params(20)
    assert link.p_success == 0.38
    assert link.base_state == make_dephased(0.638)


def test_lookup_10km():
    link = link_params(10)
    assert (link.p_success, link.base_fidelity) == (0.40, 0.77)


def test_interpolated_15km():
    link = link_params(15)
    assert link.p_success == pytest.approx(0.39, abs=1e-12)
    assert link.base_fidelity == pytest.approx(0.704, abs=1e-12)


def test_override_passthrough():
    link = link_params(5, {"p_success": 0.40, "base_fidelity": 0.85})
    assert link.p_success == 0.40
    assert link.base_state == make_dephased(0.85)


def test_werner_switch():
    assert link_params(20, {"state_model": "werner"}).base_state == make_werner(0.638)


@pytest.mark.parametrize("km", [5, 9.99, 20.01, 40])
def test_no_extrapolation_without_overrides(km):
    with pytest.raises(ConfigError):
        link_params(km)
    # one override alone does not unlock it either
    with pytest.raises(ConfigError):
        link_params(km, {"p_success": 0.3})


@pytest.mark.parametrize(
    "overrides",
    [{"state_model": "bogus"}, {"fidelity": 0.9}, {"p_success": 0.4, "base_fidelity": 0.5}],
)
def test_bad_overrides(overrides):
    with pytest.raises(ConfigError):
        link_params(20, overrides)


def test_link_params_invariants():
    with pytest.raises(ConfigError):
        LinkParams(0, 0.17, 0.7, 0.4, make_dephased(0.9))
    with pytest.raises(ConfigError):
        LinkParams(20, 0.17, 1.2, 0.4, make_dephased(0.9))
    with pytest.raises(ConfigError):
        LinkParams(20, 0.17, 0.7, 1.4, make_dephased(0.9))


@pytest.mark.parametrize(
    "km,frac,expected",
    [(20, 0.7, 9.531e-5), (10, 0.7, 4.765e-5), (20, 1.0, 6.671e-5)],
)
def test_latency_examples(km, frac, expected):
    # quoted figures are four significant digits
    assert one_way_latency(km, frac) == pytest.approx(expected, rel=1e-4)
    assert one_way_latency(km, frac) == km / (frac * 299792.458)


def test_latency_matches_link():
    assert link_params(20).one_way_latency == one_way_latency(20, 0.7)


@pytest.mark.parametrize("args", [(0, 0.7), (20, 0), (-1, 0.5)])
def test_latency_domain(args):
    with pytest.raises(DomainError):
        one_way_latency(*args)


@given(st.floats(0.1, 1000), st.floats(0.1, 1000), st.floats(0.05, 1.0))
def test_latency_linear_and_inverse(l1, l2, v):
    assert one_way_latency(l1 + l2, v) == pytest.approx(one_way_latency(l1, v) + one_way_latency(l2, v), rel=1e-12)
    assert one_way_latency(l1, v / 2) == pytest.approx(2 * one_way_latency(l1, v), rel=1e-12)


@given(st.floats(10, 20), st.floats(10, 20))
def test_interpolated_fidelity_non_increasing(x, y):
    lo, hi = sorted((x, y))
    assert link_params(lo).base_fidelity >= link_params(hi).base_fidelity - 1e-15
