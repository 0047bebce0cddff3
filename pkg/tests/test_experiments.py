import numpy as np
import pytest

from llecont.experiments import (LOWER, UPPER, ThresholdError, circular_distance, constant_crossings,
                                 distinct_points, is_constant, locate_threshold, loop_partner)
from llecont.model import Params

P = Params(d=-0.1, zeta=3.0, omega=1.0, f0=2.0)
N = 64


def test_loop_partner_labels():
    assert loop_partner(P.with_(zeta=3.0), N)[0] == LOWER
    assert loop_partner(P.with_(zeta=4.0), N)[0] == UPPER
    with pytest.raises(ThresholdError):
        loop_partner(P.with_(zeta=2.4), N)


def test_constant_crossings_of_loop():
    _, b = loop_partner(P.with_(zeta=3.0), N)
    assert constant_crossings(b) == [0, 1]


def test_threshold_bisection():
    r = locate_threshold(P, 3.0, 3.3, 0.02, N)
    assert r.hi - r.lo <= 0.02 and 3.0 <= r.lo < r.hi <= 3.3
    labels = dict(r.history)
    assert labels[3.0] == LOWER and labels[3.3] == UPPER


def test_threshold_degenerate_bracket():
    r = locate_threshold(P, 3.1, 3.1, 0.01, N)
    assert (r.lo, r.hi, r.history) == (3.1, 3.1, [])


def test_threshold_no_switch():
    with pytest.raises(ThresholdError, match="lower pair at both ends"):
        locate_threshold(P, 2.75, 2.8, 0.02, N)


def test_threshold_bad_bracket():
    with pytest.raises(ValueError):
        locate_threshold(P, 3.3, 3.0, 0.02, N)


def test_helpers():
    assert is_constant(np.full(8, 1 + 1j)) and not is_constant(np.arange(8.0))
    assert circular_distance(0.1, 2 * np.pi - 0.1) == pytest.approx(0.2)
    assert distinct_points([]) == []
