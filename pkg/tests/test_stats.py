import math

import numpy as np
import pytest

from fingerfuse import stats
from fingerfuse.errors import InvalidInputError
from fingerfuse.evalstats import anova_from_sums, one_way_anova


def test_f_sf_matches_reference(frozen):
    for f, d1, d2, expected in frozen["f_sf"]:
        assert stats.f_sf(f, d1, d2) == pytest.approx(expected, rel=1e-8, abs=1e-14)


def test_t_two_sided_matches_reference(frozen):
    for t, df, expected in frozen["t_sf2"]:
        assert stats.t_sf2(t, df) == pytest.approx(expected, rel=1e-8, abs=1e-14)


def test_t_quantile_matches_reference(frozen):
    for alpha, df, expected in frozen["t_ppf2"]:
        assert stats.t_ppf2(alpha, df) == pytest.approx(expected, rel=1e-8)


def test_f_sf_edges():
    assert stats.f_sf(0.0, 2, 10) == 1.0
    assert stats.f_sf(math.inf, 2, 10) == 0.0


def test_betainc_symmetry():
    for a, b, x in [(0.5, 3.0, 0.2), (4.0, 1.5, 0.9), (10.0, 10.0, 0.5)]:
        assert stats.betainc(a, b, x) + stats.betainc(b, a, 1 - x) == pytest.approx(1.0, abs=1e-12)


def test_table2_anova(frozen):
    r = anova_from_sums(3.331, 2, 51.602, 69)
    # the published sums are rounded to 3 decimals, the mean squares to 5
    assert r.ms_between == pytest.approx(1.66543, abs=2.5e-4)
    assert r.ms_within == pytest.approx(0.74785, abs=1e-5)
    assert r.F == pytest.approx(2.227, abs=1e-3)
    assert r.p == pytest.approx(0.1156, abs=5e-4)
    assert r.F == pytest.approx(frozen["table2"]["F"], rel=1e-12)
    assert r.p == pytest.approx(frozen["table2"]["p"], rel=1e-8)


def test_identical_groups():
    r = one_way_anova([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]])
    assert r.F == 0.0 and r.p == 1.0


def test_seeded_groups_match_reference(frozen):
    ref = frozen["anova_three_groups"]
    r = one_way_anova(ref["groups"])
    assert r.F == pytest.approx(ref["F"], rel=1e-9)
    assert r.p == pytest.approx(ref["p"], rel=1e-8)
    assert (r.df_between, r.df_within) == (2, 9)


def test_anova_preconditions():
    with pytest.raises(InvalidInputError):
        one_way_anova([[1.0, 2.0]])
    with pytest.raises(InvalidInputError):
        one_way_anova([[1.0], [2.0, 3.0]])


def test_zero_within_variance():
    assert one_way_anova([[1.0, 1.0], [2.0, 2.0]]).F == math.inf
