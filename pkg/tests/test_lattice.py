import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from interlace_lab.errors import SingularSystemError
from interlace_lab.lattice import (GreenTable, WalkSpec, characteristic_exponent, equilibrium,
                                   green, green_table, hitting_potential,
                                   nearest_neighbor_green_1d)

# d=1, rate-1 nearest-neighbour walk: u(x) = r^|x| / sqrt(kappa^2 + 2 kappa),
# r = 1 + kappa - sqrt(kappa^2 + 2 kappa).  For kappa = 1: u(0) = 1/sqrt 3, r = 2 - sqrt 3.
U0 = 1 / math.sqrt(3)
R = 2 - math.sqrt(3)


def test_green_origin_closed_form(line):
    assert green(line, 0) == pytest.approx(U0, rel=1e-10)


@pytest.mark.parametrize("x", [1, 2, 5, -3])
def test_green_off_origin(line, x):
    assert green(line, x) == pytest.approx(U0 * R ** abs(x), rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(kappa=st.floats(0.05, 20.0), x=st.integers(-6, 6))
def test_green_matches_1d_formula(kappa, x):
    spec = WalkSpec.nearest_neighbor(1, kappa)
    exact = nearest_neighbor_green_1d(kappa, x)
    assert green(spec, x) == pytest.approx(exact, rel=1e-8, abs=1e-13 * green(spec, 0))


def test_characteristic_exponent_nn():
    spec = WalkSpec.nearest_neighbor(2, 0.5)
    th = np.array([[0.3, -1.1]])
    expect = 1 - 0.5 * (math.cos(0.3) + math.cos(-1.1))
    assert characteristic_exponent(spec, th)[0] == pytest.approx(expect)


def test_table_resolvent_and_symmetry():
    spec = WalkSpec.nearest_neighbor(2, 0.3)
    t = green_table(spec, 3)
    assert t.resolvent_residual() < 1e-9
    assert t((1, 2)) == pytest.approx(t((-2, 1)), rel=1e-12)
    assert t((1, 0)) < t.u0


def test_table_out_of_range(line_table):
    with pytest.raises(ValueError):
        line_table(17)


def test_table_round_trips(line_table):
    back = GreenTable.from_json(line_table.to_json())
    assert back.values == line_table.values
    rows = line_table.to_csv().splitlines()
    assert rows[0] == "x0,u" and len(rows) == 1 + 9


def test_kernel_validation():
    with pytest.raises(ValueError):
        WalkSpec(1, (((1,), 0.7), ((-1,), 0.3)), 1.0)
    with pytest.raises(ValueError):
        WalkSpec.nearest_neighbor(1, 0.0)
    with pytest.raises(ValueError):
        WalkSpec(1, (((0,), 1.0),), 1.0)


def test_capacity_point_and_pair(line_table):
    assert equilibrium(line_table, [0]).capacity == pytest.approx(math.sqrt(3))
    # e = 1/(u0 + u1) at both points, cap = 2/(u0 + u1) = 1 + sqrt 3
    eq = equilibrium(line_table, [0, 1])
    assert eq.capacity == pytest.approx(1 + math.sqrt(3))
    assert eq.weight((0,)) == pytest.approx((1 + math.sqrt(3)) / 2)


def test_equilibrium_rejects_out_of_table(line_table):
    with pytest.raises((ValueError, SingularSystemError)):
        equilibrium(line_table, [0, 40])


@settings(max_examples=20, deadline=None)
@given(st.sets(st.integers(-3, 3), min_size=1, max_size=4))
def test_capacity_monotone_and_hitting(K):
    t = green_table(WalkSpec.nearest_neighbor(1, 1.0), 8)
    K = sorted(K)
    eq = equilibrium(t, K)
    assert np.all(eq.weights > 0)
    for x in K:
        assert hitting_potential(t, eq, x) == pytest.approx(1.0, abs=1e-10)
    assert hitting_potential(t, eq, 5) < 1.0
    bigger = equilibrium(t, K + [max(K) + 1])
    assert bigger.capacity >= eq.capacity - 1e-12
    assert json.dumps(eq.to_dict())
