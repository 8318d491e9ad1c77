import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscillax.errors import DomainError, InfeasibleError
from oscillax.experiment import (CSV_COLUMNS, BlowupConfig, BlowupReport, BlowupRow,
                                 choose_epsilon, emit_report, lower_bound, run_blowup,
                                 slope_per_doubling)
from oscillax.mollifier import RadialScale, constant_mollifier, linear_mollifier
from oscillax.operator import find_N0

LINEAR_G = RadialScale(linear_mollifier())


@pytest.fixture(scope="module")
def report1(cutoff, fast_b):
    return run_blowup(BlowupConfig(n=1, beta=0.9, p_list=[1, 2, 4, 8], mollifier=fast_b,
                                   cutoff=cutoff, full_domain=True))


@pytest.fixture(scope="module")
def report2(cutoff, fast_b):
    return run_blowup(BlowupConfig(n=2, beta=0.9, p_list=[1, 2, 4, 8], mollifier=fast_b,
                                   cutoff=cutoff))


def test_lower_bound_formula():
    assert lower_bound(2, 0.9, 1) == pytest.approx(0.9 * math.sqrt(2 * math.pi))
    assert lower_bound(8, 0.9, 2) == pytest.approx(0.9 * 2 * math.pi * 4)


# choose_epsilon -----------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("p", [1, 2, 4, 8, 16])
def test_choose_epsilon_linear_closed_form(p, n):
    # b(t) = t: eps / g = 1 / (p^2 n eps), so eps* = 1 / (p^2 n N0) unless the cap binds
    N0 = 2.203125
    expected = min(1.0 / (p * p * n * N0), 0.9 / p)
    assert choose_epsilon(p, N0, 0.9, LINEAR_G, n) == pytest.approx(expected, rel=1e-10)


@settings(max_examples=60)
@given(st.integers(1, 64), st.floats(0.6, 500.0))
def test_choose_epsilon_linear_property(p, N0):
    expected = min(1.0 / (p * p * N0), 0.9 / p)
    got = choose_epsilon(p, N0, 0.9, LINEAR_G, 1)
    assert got == pytest.approx(expected, rel=1e-10)
    assert got / float(LINEAR_G(np.array([p * got]))) >= N0 * (1 - 1e-10)


def test_choose_epsilon_cap_binds():
    assert choose_epsilon(1, 1e-3, 0.9, LINEAR_G, 1) == 0.9


def test_choose_epsilon_constant_b_branches():
    g = RadialScale(constant_mollifier(0.5))
    # eps / g(p eps) = 1 / (0.5 p): feasible for every eps iff that exceeds N0
    assert choose_epsilon(1, 1.5, 0.9, g, 1) == 0.9
    with pytest.raises(InfeasibleError):
        choose_epsilon(1, 2.5, 0.9, g, 1)


@pytest.mark.parametrize("p,N0", [(0, 1.0), (1, 0.0), (1, -1.0)])
def test_choose_epsilon_rejects(p, N0):
    with pytest.raises(DomainError):
        choose_epsilon(p, N0, 0.9, LINEAR_G, 1)


def test_choose_epsilon_nonincreasing_in_p(fast_b):
    g = RadialScale(fast_b)
    eps = [choose_epsilon(p, 2.2, 0.9, g, 1) for p in range(1, 20)]
    assert all(b <= a for a, b in zip(eps, eps[1:]))


# config -------------------------------------------------------------------

def test_blowup_config_validation(cutoff, fast_b):
    for kw in ({"beta": 1.0}, {"p_list": []}, {"p_list": [2, 1]}, {"p_list": [0, 1]}, {"n": 0}):
        args = dict(n=1, beta=0.9, p_list=[1, 2], mollifier=fast_b, cutoff=cutoff)
        args.update(kw)
        with pytest.raises(DomainError):
            BlowupConfig(**args)


# run_blowup ---------------------------------------------------------------

EPS_N1 = [0.09228629576004539, 0.005330609485058538, 3.6906176082985786e-05,
          2.7699218696339008e-09]
RATIO_N1 = [1.8402195866081352, 2.608831387845108, 3.695243792438312, 5.230047675659979]
RATIO_N2 = [3.1701029504726526, 6.346346462861442, 12.699208861808208, 25.40512212826513]


def test_blowup_n1_baseline(report1):
    assert report1.N0_used == 2.203125
    np.testing.assert_allclose([r.epsilon_p for r in report1.rows], EPS_N1, rtol=1e-10)
    np.testing.assert_allclose([r.ratio_computed for r in report1.rows], RATIO_N1, rtol=1e-8)
    assert all(r.margin > 0 for r in report1.rows)
    assert report1.passed


def test_blowup_n1_bound_and_growth(report1):
    for r in report1.rows:
        assert r.ratio_computed >= 0.95 * 0.9 * math.sqrt(2 * math.pi) * math.sqrt(r.p / 2)
    assert report1.rows[-1].ratio_computed / report1.rows[0].ratio_computed >= 2.5
    assert slope_per_doubling(report1) == pytest.approx(0.5, abs=0.05)


def test_blowup_restricted_below_full(report1):
    assert report1.invariants["restricted_le_full"]
    assert all(r.ratio_full >= r.ratio_computed for r in report1.rows)


def test_blowup_n2_baseline(report2):
    np.testing.assert_allclose([r.ratio_computed for r in report2.rows], RATIO_N2, rtol=1e-6)
    assert 0.85 <= slope_per_doubling(report2) <= 1.15
    assert report2.passed


def test_blowup_feasibility_identity(report1, report2):
    for rep in (report1, report2):
        for r in rep.rows:
            assert r.feasibility >= rep.N0_used * (1 - 1e-10)
            assert r.p * r.epsilon_p <= 0.9


def test_blowup_single_row(cutoff, fast_b):
    rep = run_blowup(BlowupConfig(n=1, beta=0.9, p_list=[1], mollifier=fast_b, cutoff=cutoff))
    assert len(rep.rows) == 1 and rep.rows[0].margin > 0 and rep.passed


def test_blowup_unbounded_growth(cutoff, fast_b):
    # exceeds any fixed constant once p is large enough; check C = the p = 8 bound
    rep = run_blowup(BlowupConfig(n=1, beta=0.9, p_list=[1, 4, 16, 32], mollifier=fast_b,
                                  cutoff=cutoff))
    assert rep.passed
    assert rep.rows[-1].ratio_computed > lower_bound(8, 0.9, 1) * 2


def test_blowup_infeasible_mollifier_aborts(cutoff):
    bad = constant_mollifier(1.0)
    with pytest.raises(InfeasibleError):
        run_blowup(BlowupConfig(n=1, beta=0.9, p_list=[1, 2], mollifier=bad, cutoff=cutoff))


def test_blowup_linear_mollifier_stays_feasible(cutoff):
    rep = run_blowup(BlowupConfig(n=1, beta=0.9, p_list=[1, 2, 4], mollifier=linear_mollifier(),
                                  cutoff=cutoff))
    N0 = find_N0(cutoff, 0.9, 1)
    for r in rep.rows:
        assert r.epsilon_p == pytest.approx(min(1 / (r.p**2 * N0), 0.9 / r.p), rel=1e-10)
    assert rep.passed


def test_invariant_violation_is_reported(report1):
    rows = list(reversed(report1.rows))
    from oscillax.experiment import check_invariants
    inv = check_invariants(BlowupReport(rows=rows, N0_used=report1.N0_used, config={}),
                           report1.N0_used, 0.9)
    assert not inv["ratio_increasing"]


# reports ------------------------------------------------------------------

def test_csv_layout(report1, tmp_path):
    path = tmp_path / "b.csv"
    emit_report(report1, "csv", path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 5
    row = next(csv.DictReader(path.open()))
    assert row["p"] == "1"
    assert float(row["ratio_computed"]) == pytest.approx(RATIO_N1[0], rel=1e-11)
    assert len(row["ratio_computed"].replace(".", "").lstrip("0")) <= 12


def test_csv_three_rows_four_lines(report1, tmp_path):
    rep = BlowupReport(rows=report1.rows[:3], N0_used=report1.N0_used, config={})
    emit_report(rep, "csv", tmp_path / "r.csv")
    assert len((tmp_path / "r.csv").read_text().splitlines()) == 4


def test_csv_empty_report(tmp_path):
    emit_report(BlowupReport(rows=[], N0_used=1.0, config={}), "csv", tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == ",".join(CSV_COLUMNS) + "\n"


def test_json_round_trip_is_exact(report1, tmp_path):
    emit_report(report1, "json", tmp_path / "r.json")
    back = json.loads((tmp_path / "r.json").read_text())
    for got, row in zip(back["rows"], report1.rows):
        assert BlowupRow(**got) == row
    assert back["config"]["mollifier"] == report1.config["mollifier"]
    assert back["passed"] is True


def test_emit_errors(report1, tmp_path):
    with pytest.raises(DomainError):
        emit_report(report1, "xml", tmp_path / "r.xml")
    with pytest.raises(OSError, match="missing"):
        emit_report(report1, "csv", tmp_path / "missing" / "r.csv")
