import pytest

from oscillax.crosscheck import (DIRECT_VS_REDUCED_TOL, REDUCED_VS_BOX_TOL, direct_vs_reduced,
                                 reduced_vs_box, run_crosscheck, zero_input)


def test_crosscheck_n1(sym1):
    res = run_crosscheck(sym1, 64.0, 2**14)
    assert res["passed"]
    assert len(res["direct_vs_reduced"]) == 5
    assert all(e["max_imag"] <= 1e-12 for e in res["direct_vs_reduced"])


def test_box_agreement_n2(sym2):
    assert max(e["rel"] for e in reduced_vs_box(sym2)) <= REDUCED_VS_BOX_TOL


def test_zero_input_n2(sym2):
    assert zero_input(sym2, 8.0, 64) == {"direct_max": 0.0, "reduced_max": 0.0}


@pytest.mark.slow
def test_direct_vs_reduced_n2(sym2):
    res = direct_vs_reduced(sym2, 32.0, 2**10)
    assert max(e["rel_l2"] for e in res) <= DIRECT_VS_REDUCED_TOL
