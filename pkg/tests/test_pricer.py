import json
import logging
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdsv.errors import OutOfBounds
from qdsv.model import REFERENCE_PARAMS
from qdsv.pricer import (TABLE_COLUMNS, Payoff, PricingRequest, bs_call, convergence_table, implied_vol,
                         implied_vol_or_none, price, table_to_csv, table_to_json)

T1 = 1.0 / 12.0


@pytest.fixture(scope="module")
def atm():
    return price(PricingRequest(REFERENCE_PARAMS, Payoff.call(1.0), T1, n=10), with_implied_vol=True)


def test_one_price_per_degree(atm):
    assert len(atm.pi_by_degree) == 11
    assert len(atm.implied_vol_by_degree) == 11
    assert len(atm.regularization_by_degree) == 11
    assert atm.price == atm.pi_by_degree[-1]
    assert atm.mixture_size == 15
    assert atm.martingale


def test_prices_respect_call_bounds(atm):
    for p in atm.pi_by_degree:
        assert 0.0 < p < 1.0


def test_prices_settle(atm):
    pis = np.array(atm.pi_by_degree)
    assert abs(pis[10] - pis[9]) < abs(pis[5] - pis[4])
    # rough band around the Monte-Carlo value of about 0.0231
    assert 0.021 < pis[10] < 0.025


def test_implied_vols_near_level(atm):
    assert all(0.15 < v < 0.26 for v in atm.implied_vol_by_degree)


def test_result_json_round_trip(atm):
    data = json.loads(atm.to_json())
    assert data["pi_by_degree"] == atm.pi_by_degree


def test_lower_degrees_reuse_the_same_system():
    full = price(PricingRequest(REFERENCE_PARAMS, Payoff.call(1.05), T1, n=8))
    part = price(PricingRequest(REFERENCE_PARAMS, Payoff.call(1.05), T1, n=5))
    np.testing.assert_allclose(part.pi_by_degree, full.pi_by_degree[:6], rtol=1e-12, atol=1e-15)


def test_generic_call_close_to_closed_form():
    closed = price(PricingRequest(REFERENCE_PARAMS, Payoff.call(1.0), T1, n=8)).price
    generic = price(PricingRequest(REFERENCE_PARAMS, Payoff.generic(lambda s: np.maximum(s - 1.0, 0.0)), T1, n=8)).price
    assert abs(generic - closed) < 1e-4


def test_put_is_priced_by_its_own_vector():
    put = price(PricingRequest(REFERENCE_PARAMS, Payoff.put(1.0), T1, n=8)).price
    call = price(PricingRequest(REFERENCE_PARAMS, Payoff.call(1.0), T1, n=8)).price
    # parity holds only up to the projection error of e^x
    assert abs((call - put) - 0.0) < 2e-3
    assert put > 0


def test_payoff_callables():
    s = np.array([0.5, 1.0, 2.0])
    np.testing.assert_array_equal(Payoff.call(1.0)(s), [0.0, 0.0, 1.0])
    np.testing.assert_array_equal(Payoff.put(1.0)(s), [0.5, 0.0, 0.0])
    np.testing.assert_array_equal(Payoff.generic(np.sqrt)(s), np.sqrt(s))


@pytest.mark.parametrize("kw", [dict(T=0.0), dict(n=-1), dict(d=0), dict(K=0)])
def test_request_validation(kw):
    base = dict(params=REFERENCE_PARAMS, payoff=Payoff.call(1.0), T=T1)
    base.update(kw)
    with pytest.raises(ValueError):
        PricingRequest(**base)


def test_non_martingale_warns(caplog):
    params = REFERENCE_PARAMS.replace(R1=0.0, rho=0.5)
    with caplog.at_level(logging.WARNING):
        res = price(PricingRequest(params, Payoff.call(1.0), T1, n=3))
    assert not res.martingale
    assert any("martingale" in r.message for r in caplog.records)


@given(st.floats(0.05, 1.0), st.floats(0.7, 1.4), st.floats(0.02, 3.0))
def test_implied_vol_inverts_black_scholes(vol, strike, T):
    p = bs_call(1.0, strike, vol, T)
    if p - max(1.0 - strike, 0.0) < 1e-10:
        return
    assert implied_vol(p, 1.0, strike, T) == pytest.approx(vol, rel=1e-6)


def test_implied_vol_outside_bounds():
    with pytest.raises(OutOfBounds):
        implied_vol(1.5, 1.0, 1.0, 1.0)
    with pytest.raises(OutOfBounds):
        implied_vol(0.0, 1.0, 1.0, 1.0)
    assert implied_vol_or_none(-1.0, 1.0, 1.0, 1.0) is None


def test_black_scholes_zero_vol_is_intrinsic():
    assert bs_call(1.0, 0.9, 0.0, 1.0) == pytest.approx(0.1)
    assert bs_call(1.0, 1.1, 0.2, 0.0) == 0.0


def test_convergence_table_without_monte_carlo():
    rows = convergence_table(REFERENCE_PARAMS, [T1], [math.exp(-0.1), 1.0], n_max=4, d_values=(1, 2))
    assert len(rows) == 2 * 2 * 4
    assert all(r.mc_estimate is None and r.inside_ci is None for r in rows)
    text = table_to_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0] == ",".join(TABLE_COLUMNS)
    assert len(lines) == 1 + len(rows)
    assert lines[1].split(",")[5] == ""
    assert len(json.loads(table_to_json(rows))) == len(rows)


def test_convergence_table_csv_has_full_precision():
    rows = convergence_table(REFERENCE_PARAMS, [T1], [1.0], n_max=1)
    field = table_to_csv(rows).split("\n")[1].split(",")[3]
    assert float(field) == rows[0].pi_n
