from dataclasses import replace

import pytest

from src.common import criteria as cr
from src.common import matrix_groups as mg
from src.common.dynkin import datum_for, tilde_datum
from src.common.errors import IncompleteDatum, NonPrime, UnknownFamily

FIXTURES = list(cr.criteria_fixtures().itertuples(index=False))


def test_exception_list_lookup():
    assert cr.listed("2.2.5", 4) == ["PGL_2"]
    assert "PGSp_4" in cr.listed("2.3", 2)
    assert "PGSp_4" not in cr.listed("2.2.5", 2)
    assert cr.exception_hits("2.2.5", [datum_for("PGL", 2, k1_degree=2)], 2) == ["Res PGL_2"]
    assert cr.exception_hits("2.2.5", [datum_for("PGL", 2, k1_degree=3)], 2) == []


def test_prime_of():
    assert cr.prime_of(9) == 3
    with pytest.raises(NonPrime):
        cr.prime_of(12)


def test_check_2_2_5():
    listed = cr.check_2_2_5(datum_for("PGL", 2), 3)
    assert listed.conditions == {"2.2.5(i)": True, "2.2.5(ii)": False}
    assert listed.conclusion is None
    ok = cr.check_2_2_5(datum_for("SL", 3), 4)
    assert ok.conclusion == "2.2.5"
    assert cr.check_2_2_5(datum_for("PGL", 2), 5).conclusion == "2.2.5"
    assert cr.check_2_2_5(datum_for("PGL", 2), 2).failed() == ["2.2.5(i)", "2.2.5(ii)"]


def test_check_2_3_flags_pgsp4():
    report = cr.check_2_3_exceptions(datum_for("Sp", 4), 2)
    assert report.conditions["2.3(list)"] is False
    assert report.conditions["2.3(c)"] is True
    assert report.notes
    assert cr.check_2_3_exceptions([datum_for("SL", 3), datum_for("Sp", 6)], 5).conclusion == "2.3"


def test_abelian_part_and_unit_powers():
    assert cr.abelian_part(datum_for("PGL", 4), 3) == 2
    assert cr.abelian_part(datum_for("PGSp", 6), 2) == 1
    assert cr.unit_power_image(2, 1, 1) == 4
    assert cr.unit_power_image(2, 1, 2) == 1
    assert cr.unit_power_image(3, 1, 3) == 6


def test_isogeny_validation():
    with pytest.raises(IncompleteDatum):
        cr.IsogenyDecomposition([cr.TorusFactor(0, 2)], 2)
    with pytest.raises(IncompleteDatum):
        cr.IsogenyDecomposition([cr.TorusFactor(1, 2)], 2, ab_rank=2)
    iso = cr.IsogenyDecomposition([cr.TorusFactor(1, 4), cr.TorusFactor(2, 3)], 2)
    assert iso.I_p == [0]
    assert iso.others_prime_to_p()
    with pytest.raises(IncompleteDatum):
        cr.check_2_4(tilde_datum("GL", 3), iso, 3)


@pytest.mark.parametrize("row", FIXTURES, ids=[r.fixture for r in FIXTURES])
def test_criteria_fixtures(row):
    report = cr.run_fixture(row.fixture)
    expected = None if row.expected == "none" else row.expected
    assert report.conclusion == expected, report.to_dict()
    if row.clause:
        assert report.clause == row.clause


def test_check_2_4_condition_keys():
    report = cr.run_fixture("GL-6-q4", compute=False)
    assert report.conditions["2.4(ii)"] is False
    assert report.conditions["2.4.2(ii')"] is True
    assert report.conditions["2.4(va)"] is False
    assert report.conditions["2.4(vb)"] is True
    assert report.conclusion == "2.4.2(a)"
    assert any("Ker(G^ab" in n for n in report.notes)


def test_i_prime_needs_degree_prime_to_p_from_sl_mod_mu_p():
    iso = cr.IsogenyDecomposition([cr.TorusFactor(1, 2)], 2)
    report = cr.check_2_4(datum_for("SL_mod_mu_m", 4, m=2), iso, 2)
    assert report.conditions["2.4.2(i')"] is True
    assert report.conditions["2.4(i)"] is False
    assert report.conclusion == "2.4.2(b)"
    assert cr.run_fixture("SL4-mod-mu2-q2").conditions["2.4.2(i')"] is True


@pytest.mark.parametrize("name, size, m, holds", [
    ("PGL", 4, None, False),
    ("SL", 4, None, False),
    ("SL_mod_mu_m", 4, 2, True),
    ("SL_mod_mu_m", 8, 2, True),
    ("SL_mod_mu_m", 8, 4, False),
    ("SL_mod_mu_m", 12, 6, True),
    ("SL_mod_mu_m", 6, 2, False),
])
def test_i_prime_type_a(name, size, m, holds):
    assert bool(cr._i_prime(datum_for(name, size, m=m), 2)) is holds


def test_adjoint_fixture_fails_i_prime():
    report = cr.run_fixture("GL-4-q2")
    assert report.conditions["2.4.2(i')"] is False
    assert report.conclusion == "2.4.1(b)"


def test_i_prime_excludes_pgu4_at_q2():
    datum = replace(datum_for("SL_mod_mu_m", 4, m=2), label="SU_4/mu_2", split=False)
    iso = cr.IsogenyDecomposition([cr.TorusFactor(1, 2)], 2)
    report = cr.check_2_4(datum, iso, 2)
    assert report.conditions["2.4.2(i')"] is False
    assert report.evidence["2.4.2(i')"] == "PGU_4 at q=2 is excluded"
    assert report.applicable["2.4.2(b)"] is False
    assert report.conclusion is None
    wider = cr.check_2_4(datum, iso, 4)
    assert wider.conditions["2.4.2(i')"] is True
    assert wider.conclusion == "2.4.2(b)"


@pytest.mark.parametrize("name, size, m, p, expected", [
    ("SL_mod_mu_m", 6, 2, 2, 1),
    ("PGL", 6, None, 2, 1),
    ("SL_mod_mu_m", 6, 3, 2, 0),
    ("SL_mod_mu_m", 4, 2, 2, 1),
    ("SL", 4, None, 2, 0),
    ("SL", 2, None, 2, 2),
    ("SL_mod_mu_m", 9, 3, 3, 1),
])
def test_lie_quotient_table_type_a(name, size, m, p, expected):
    assert cr.lie_quotient_table(datum_for(name, size, m=m), p) == expected


def test_partial_lie_quotient_bound():
    datum = tilde_datum("GL", 4)
    iso = cr.IsogenyDecomposition([cr.TorusFactor(1, 3)], 2)
    report = cr.check_2_4(datum, iso, 2, lie_quotient=2)
    assert report.conditions["2.4(iii)"] is False
    assert report.conclusion is None


def test_center_invariants():
    out = cr.center_invariants(mg.parse_descriptor("GL(4, W(p=3,r=1,n=1))"))
    assert (out["o_G"], out["c_G"]) == (4, 1)
    assert out["center_points"] == out["center_points_expected"] == 2
    assert out["consistent"]
    assert cr.center_invariants("PGL(3)")["c_G"] == 3
    with pytest.raises(UnknownFamily):
        cr.center_invariants(mg.parse_descriptor("PGL(2, W(p=3,r=1,n=1))"))


def test_check_3_3_1():
    report = cr.check_3_3_1(datum_for("SL", 2), datum_for("PGL", 2), 5, disjoint_asserted=True)
    assert report.applicable["3.3.1(a)"] and report.applicable["3.3.1(b)"]
    assert report.bounds["index_divides"] == 8
    assert report.bounds["index_divides_o"] == 2
    blocked = cr.check_3_3_1(datum_for("SL", 2), datum_for("PGL", 2), 3)
    assert blocked.conditions["3.3.1(list)"] is False
    assert not any(blocked.applicable.values())


@pytest.mark.parametrize("name, size, a, b", [
    ("Sp", 6, True, True),
    ("SL", 4, True, True),
    ("PGL", 4, True, False),
    ("GSpin_plus", 8, True, True),
    ("SO_plus", 8, False, False),
    ("Sp", 4, False, False),
])
def test_check_3_4_1(name, size, a, b):
    report = cr.check_3_4_1(datum_for(name, size), 2)
    assert report.applicable["3.4.1.1(a)"] is a
    assert report.applicable["3.4.1.1(b)"] is b


def test_check_3_4_1_needs_p2():
    assert not cr.check_3_4_1(datum_for("Sp", 6), 3).applicable["3.4.1.1(a)"]
