import math

import numpy as np
import pytest

from interlace_lab import continuum as c


@pytest.fixture(scope="module")
def spec():
    return c.ContinuumSpec(kappa=1.0)


def test_mollifier_normalized(spec):
    assert spec.fhat(0.0)[0] == pytest.approx(1.0, rel=1e-12)
    assert spec.mollifier_constant == pytest.approx(2.14357, rel=1e-5)


def test_h_closed_form(spec):
    for s in (0.5, 10.0, 1000.0):
        assert c.h(spec, s) == pytest.approx(c.h_brownian_closed(1.0, s), rel=1e-10)
    assert c.h(spec, 0.0) == 0.0


def test_brownian_convolution_closed_form(spec):
    eps = 0.5
    a2 = 2 * spec.kappa * eps**2
    for mu in (0.3, 2.0, 7.0):
        assert c._brownian_conv(np.array([mu]), a2)[0] == pytest.approx(
            c._numeric_conv(spec, eps, mu), rel=1e-7)


def test_interpolated_convolution_on_closed_form(spec):
    eps = 0.125
    a2 = 2 * spec.kappa * eps**2
    mu = np.geomspace(1e-3, 40.0, 200)
    approx = c.interpolated_conv(mu, eps / 16, lambda m: c._brownian_conv(np.array([m]), a2)[0])
    assert np.max(np.abs(approx / c._brownian_conv(mu, a2) - 1)) < 1e-3


def test_chain_dual_routes(spec):
    hc = c.HankelChain(spec, 0.25)
    assert hc.chain(1) == pytest.approx(c.real_space_chain1(spec, 0.25), rel=1e-8)
    assert hc.chain(1) == pytest.approx(hc.chain_fourier_first(), rel=1e-10)
    assert hc.chain(1) <= hc.fourier_power_bound(1)


def test_cycle_dual_route(spec):
    assert c.cycle_fn2(spec, 0.5) == pytest.approx(c.real_space_cycle2(spec, 0.5), rel=1e-8)


@pytest.mark.slow
def test_log_exponent(spec):
    log = c.ContinuumSpec(kappa=1.0, exponent="log", log_power=1.0)
    # psi_log(xi) = xi^2 / log(e + xi) < xi^2 / 2 once log(e + xi) > 2
    assert c.h(log, 100.0) > c.h(spec, 100.0)
    hc = c.HankelChain(log, 0.25)
    assert hc.chain(1) == pytest.approx(hc.chain_fourier_first(), rel=1e-10)
    assert 0 < c.cycle_fn2(log, 0.5)


def test_real_space_needs_brownian():
    with pytest.raises(ValueError):
        c.real_space_chain1(c.ContinuumSpec(exponent="log", log_power=1.0), 0.5)
    with pytest.raises(ValueError):
        c.ContinuumSpec(exponent="stable")


@pytest.mark.slow
def test_bounded_ratios(spec):
    rep = c.asymptotics(spec, 3)
    assert all(rep.spread(k) < 10 for k in (1, 2, 3))
    assert max(rep.cycle_ratios()) / min(rep.cycle_ratios()) < 10
    assert rep.to_csv().splitlines()[0].startswith("eps,h_inv_eps,ch1")
