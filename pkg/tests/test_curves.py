import pytest

from src.common import curves as cv
from src.common.errors import BadDegree, BadPrime, BadReduction, ParseError, ZeroDiscriminant


def test_parse_polynomial_forms():
    f = cv.parse_polynomial("x^3 - 2")
    assert f == cv.make_input([1, 0, 0, -2])
    assert cv.parse_polynomial("1, 0, 0, -2") == f
    assert cv.parse_polynomial("[0, 1, 0, 0, -2]") == f
    assert (f.degree, f.genus, f.lead) == (3, 1, 1)
    assert str(f) == "x^3 - 2"


@pytest.mark.parametrize("text, exc", [
    ("x^3 + y", ParseError),
    ("x^3 +* 1", ParseError),
    ("x^2 - 2*x + 1", ZeroDiscriminant),
    ("x + 1", BadDegree),
])
def test_parse_polynomial_errors(text, exc):
    with pytest.raises(exc):
        cv.parse_polynomial(text)


@pytest.mark.parametrize("coeffs, d, part", [
    ([1, 0, 0, -2], -108, -3),
    ([1, 0, -1, -1], -23, -23),
    ([1, 0, 6, 4], -1296, -1),
    ([1, 0, -5, 2], 392, 2),
    ([1, 0, 0, 0, 0, -1, -1], 49781, 49781),
    ([1, 0, 0, 0, 0, 0, -2], 1492992, 2),
])
def test_discriminant_and_squarefree_part(coeffs, d, part):
    data = cv.disc_sqfree(cv.make_input(coeffs))
    assert data.disc == d
    assert data.squarefree_part == part


def test_discriminant_factors():
    data = cv.disc_sqfree(cv.make_input([1, 0, 0, 0, 0, -1, -1]))
    assert data.factors == {67: 1, 743: 1}
    assert data.to_dict()["factors"] == {"67": 1, "743": 1}


def test_factor_pattern():
    f = cv.make_input([1, 0, 0, -2])
    assert cv.factor_pattern_mod(f, 5) == (1, 2)
    with pytest.raises(BadPrime):
        cv.factor_pattern_mod(f, 3)
    with pytest.raises(BadPrime):
        cv.factor_pattern_mod(f, 9)


def test_good_primes_skip_bad_reduction():
    gen = cv.good_primes(cv.make_input([1, 0, 0, -2]))
    assert [next(gen) for _ in range(3)] == [5, 7, 11]


def test_rational_roots():
    assert cv.rational_roots(cv.make_input([1, 0, -5, 2])) == [2]
    assert cv.rational_roots(cv.make_input([1, 0, 0, -2])) == []


def test_certificate_for_cubics():
    cert = cv.certify_Sn(cv.make_input([1, 0, -1, -1]))
    assert cert.verdict == cv.SN_CERTIFIED and cert.irreducible
    square = cv.certify_Sn(cv.make_input([1, 0, -3, 1]))
    assert square.verdict == cv.NOT_SN
    assert "square" in square.witness
    rooted = cv.certify_Sn(cv.make_input([1, 0, -1, 0]))
    assert rooted.verdict == cv.NOT_SN


def test_certificate_for_sextic():
    cert = cv.certify_Sn(cv.make_input([1, 0, 0, 0, 0, -1, -1]))
    assert cert.verdict == cv.SN_CERTIFIED
    assert cert.irreducible and cert.long_cycle_seen and cert.transposition_seen
    assert cert.to_dict()["primes_used"] == len(cert.primes)


def test_certificate_budget():
    cert = cv.certify_Sn(cv.make_input([1, 0, 0, 0, 0, -1, -1]), prime_budget=0)
    assert cert.verdict == cv.SN_UNKNOWN
    assert "budget" in cert.witness


@pytest.mark.parametrize("coeffs, outcome", [
    ([1, 0, 0, -2], cv.SURJECTIVE),
    ([1, 0, -1, -1], cv.SURJECTIVE),
    ([1, 0, 1, 1], cv.SURJECTIVE),
    ([1, 0, 3, 2], cv.SURJECTIVE),
    ([1, 0, -4, 2], cv.SURJECTIVE),
    ([1, 0, -1, 0], cv.NOT_SURJECTIVE),
    ([1, 0, -3, 1], cv.NOT_SURJECTIVE),
    ([1, 0, 6, 4], cv.NOT_SURJECTIVE),
    ([1, 0, -2, 0], cv.NOT_SURJECTIVE),
    ([1, 0, -5, 2], cv.NOT_SURJECTIVE),
    ([1, 0, 0, 0, 0, -1, -1], cv.SURJECTIVE),
    ([1, 0, 0, 0, 0, 0, -2], cv.NOT_SURJECTIVE),
    ([1, 0, 0, 0, 0, 0, -1], cv.NOT_SURJECTIVE),
])
def test_mod2_image_verdict(coeffs, outcome):
    verdict = cv.verdict_4_2_1(cv.make_input(coeffs))
    assert verdict.outcome == outcome, verdict.reason
    assert verdict.exit_code == (0 if outcome == cv.SURJECTIVE else 20)


def test_verdict_reports_excluded_field():
    verdict = cv.verdict_4_2_1(cv.make_input([1, 0, 6, 4]))
    assert "sqrt -1" in verdict.reason
    out = verdict.to_dict()
    assert out["target"] == "GSp_2(Z_2)"
    assert [t["key"] for t in out["trail"]] == ["4.2.1(i)", "4.2.1(ii)"]


def test_verdict_degree_checks():
    with pytest.raises(BadDegree):
        cv.verdict_4_2_1(cv.make_input([1, 0, 0, 0, 1, 1]))
    with pytest.raises(BadDegree):
        cv.verdict_4_2_1(cv.make_input([1, 0, 0, -2]), d=2)
    assert cv.verdict_4_2_1(cv.make_input([1, 0, 0, -2]), assert_E_is_Q=True).hypotheses == ("E = Q",)


def test_search_cubic():
    f = cv.search_cubic([-1, 2, -2], 6)
    assert f.degree == 3
    assert cv.disc_sqfree(f).squarefree_part in (-1, 2, -2)
    assert cv.certify_Sn(f).verdict == cv.SN_CERTIFIED
    assert cv.verdict_4_2_1(f).outcome == cv.NOT_SURJECTIVE


def test_point_count_elliptic():
    data = cv.count_points_lpoly(cv.make_input([1, 0, 0, -2]), 5)
    assert data.counts == [6]
    assert data.lpoly == [1, 0, 5]
    assert data.jacobian_order == 6
    assert data.weil_ok and data.functional_equation_ok
    assert data.extra_count_ok is True


def test_point_count_genus_two():
    f = cv.make_input([1, 0, 0, 0, 0, 1])
    assert cv.count_points(f, 3, 1) == 4
    data = cv.count_points_lpoly(f, 3)
    assert data.genus == 2 and len(data.lpoly) == 5
    assert data.lpoly[0] == 1 and data.lpoly[4] == 9
    assert data.weil_ok and data.functional_equation_ok
    assert data.extra_count_ok is True


def test_point_count_errors():
    f = cv.make_input([1, 0, 0, -2])
    with pytest.raises(BadReduction):
        cv.count_points_lpoly(f, 3)
    with pytest.raises(BadReduction):
        cv.count_points_lpoly(f, 2)
    with pytest.raises(BadDegree):
        cv.count_points_lpoly(cv.make_input([1, 0, 0, 0, 1]), 5)


def test_frobenius_table_is_ordered():
    f = cv.make_input([1, 0, -1, -1])
    rows = cv.frobenius_table(f, [11, 5, 7], threads=2)
    assert [r.ell for r in rows] == [5, 7, 11]
    assert [r.lpoly for r in rows] == [r.lpoly for r in cv.frobenius_table(f, [5, 7, 11])]
    frame = cv.frobenius_frame(rows)
    assert list(frame.index) == [5, 7, 11]


def test_plane_quartic():
    assert cv.plane_quartic_count(2) == 4
    with pytest.raises(BadPrime):
        cv.plane_quartic_count(4)


def test_permutation_charpoly_mod2():
    assert cv.permutation_charpoly_mod2((1, 2)) == [1, 0, 1]
    assert cv.permutation_charpoly_mod2((3,)) == [1, 1, 1]
    assert cv.permutation_charpoly_mod2((1, 1, 1)) == [1, 0, 1]


def test_mod2_consistency_elliptic():
    check = cv.mod2_consistency(cv.make_input([1, 0, 0, -2]), 5)
    assert check.pattern == (1, 2)
    assert check.lpoly_mod2 == [1, 0, 1]
    assert check.equal


@pytest.mark.parametrize("ell", [3, 5, 7])
def test_mod2_consistency_sextic(ell):
    assert cv.mod2_consistency(cv.make_input([1, 0, 0, 0, 0, -1, -1]), ell).equal


def test_mod2_consistency_rejects_even_prime():
    with pytest.raises(BadPrime):
        cv.mod2_consistency(cv.make_input([1, 0, 0, -2]), 2)
