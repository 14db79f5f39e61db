"""End-to-end checks against brute force; the full-size sweeps carry the slow marker."""
import numpy as np
import pytest
import sympy

from src.common import curves as cv
from src.common import lie_layers as ll
from src.common import matrix_groups as mg
from src.common import oracle
from src.common import ring_matrix as rm
from src.common import subgroup_engine as se


def _kernel_element(D, rng):
    g = mg.random_element(D, rng)
    e = oracle.element_order(D.at_level(1), mg.reduce_element(g, D, 1))
    return rm.mat_pow(D.ring, g, e)


def _random_generators(D, rng, count=2):
    return [mg.random_element(D, rng, length=int(rng.integers(1, 5))) for _ in range(count)]


def _bracket_sweep(text, pairs, seed):
    D = mg.parse_descriptor(text)
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(pairs):
        x, y = _kernel_element(D, rng), _kernel_element(D, rng)
        failures += not ll.bracket_and_commutator_check(D, x, y).equal
    return failures


BRACKET_GROUPS = [
    "SL(2, W(p=2,r=1,n=3))",
    "GL(3, W(p=2,r=1,n=3))",
    "Sp(4, W(p=2,r=1,n=3))",
    "GSp(6, W(p=2,r=1,n=3))",
    "SL(2, W(p=2,r=2,n=3))",
]


@pytest.mark.parametrize("text", BRACKET_GROUPS)
def test_commutator_bracket_identity(text):
    assert _bracket_sweep(text, 20, seed=1) == 0


@pytest.mark.slow
@pytest.mark.parametrize("text", BRACKET_GROUPS)
def test_commutator_bracket_identity_full(text):
    assert _bracket_sweep(text, 500, seed=2) == 0


def _lifting_sweep(text, sets, seed):
    D = mg.parse_descriptor(text)
    rng = np.random.default_rng(seed)
    full_order = mg.group_order(D)
    for _ in range(sets):
        gens = _random_generators(D, rng)
        verdict = se.decide_surjectivity(se.generated_subgroup(D, gens), se.FULL)
        assert verdict.outcome in ("FullGroup", "NotSurjective"), verdict.reason
        truth = oracle.enumerate_closure(D, gens).order == full_order
        assert (verdict.outcome == "FullGroup") == truth


def test_lifting_criterion_against_enumeration():
    _lifting_sweep("SL(2, W(p=3,r=1,n=3))", 10, seed=3)


@pytest.mark.slow
def test_lifting_criterion_against_enumeration_mod81():
    _lifting_sweep("SL(2, W(p=3,r=1,n=4))", 150, seed=4)


@pytest.mark.slow
def test_section_exists_for_pgl2_over_w2_f4():
    res = oracle.find_section(mg.parse_descriptor("PGL(2, W(p=2,r=2,n=2))"),
                              mg.parse_descriptor("PGL(2, W(p=2,r=2,n=1))"))
    assert res.found
    assert res.base_order == 60


def test_section_exists_for_sl2_mod9():
    res = oracle.find_section(mg.parse_descriptor("SL(2, W(p=3,r=1,n=2))"),
                              mg.parse_descriptor("SL(2, W(p=3,r=1,n=1))"))
    assert res.found
    assert (res.base_order, res.kernel_order) == (24, 27)


@pytest.mark.slow
def test_no_section_for_sp4_mod4():
    res = oracle.find_section(mg.parse_descriptor("Sp(4, W(p=2,r=1,n=2))"),
                              mg.parse_descriptor("Sp(4, W(p=2,r=1,n=1))"))
    assert not res.found


def _index_sweep(text, count, seed):
    D = mg.parse_descriptor(text)
    rng = np.random.default_rng(seed)
    for _ in range(count):
        out = se.index_decomposition(se.generated_subgroup(D, _random_generators(D, rng)))
        assert out.total_index * out.order == out.group_order
        assert out.total_index == out.center_split[0] * out.center_split[1]
        assert out.total_index == out.derived_split[0] * out.derived_split[1]


def test_index_splits():
    _index_sweep("GL(2, W(p=3,r=1,n=2))", 5, seed=5)


@pytest.mark.slow
def test_index_splits_full():
    _index_sweep("GL(2, W(p=3,r=1,n=2))", 50, seed=6)
    _index_sweep("GSp(4, W(p=2,r=1,n=2))", 20, seed=7)


def _shape_sweep(count, seed, attempts=400):
    D = mg.parse_descriptor("PGL(2, W(p=3,r=1,n=3))")
    rng = np.random.default_rng(seed)
    seen = 0
    for _ in range(attempts):
        if seen == count:
            break
        K = se.generated_subgroup(D, _random_generators(D, rng))
        if not se.residue_image(K).full:
            continue
        filtration = se.layer_filtration(K)
        assert filtration.exact
        shape = se.check_3_3_2_shape(filtration)
        assert shape["holds"], shape
        seen += 1
    assert seen == count


def test_layer_shape_for_pgl2_mod27():
    _shape_sweep(5, seed=8)


@pytest.mark.slow
def test_layer_shape_for_pgl2_mod27_full():
    _shape_sweep(100, seed=9, attempts=4000)


@pytest.mark.slow
def test_symplectic_criterion_matches_enumeration():
    D = mg.parse_descriptor("GSp(4, W(p=3,r=1,n=1))")
    P = D.with_family("PGSp")
    similitudes = mg.standard_generators(D)
    isometries = mg.standard_generators(D.with_family("Sp"))
    for gens in (similitudes, isometries):
        verdict = se.decide_surjectivity(se.generated_subgroup(D, gens, [se.HYP_DISJOINT]), se.THM_4_1)
        image = oracle.enumerate_closure(P, list(P.canon(np.array(gens))))
        assert (verdict.outcome == "FullGroup") == (image.order == mg.group_order(P))
        assert verdict.hypotheses == (se.HYP_DISJOINT,)


def test_verdict_classes_include_unknown():
    verdict = cv.verdict_4_2_1(cv.make_input([1, 0, 0, 0, 0, -1, -1]), prime_budget=0)
    assert verdict.outcome == cv.UNKNOWN
    assert verdict.exit_code == 30


def _mod2_sweep(coeffs, primes):
    f = cv.make_input(coeffs)
    for ell in primes:
        check = cv.mod2_consistency(f, ell)
        assert check.equal, check.to_dict()


def _good_primes(coeffs, count):
    f = cv.make_input(coeffs)
    gen = cv.good_primes(f, start=3)
    return [next(gen) for _ in range(count)]


def test_mod2_consistency_sweep():
    _mod2_sweep([1, 0, 0, -2], _good_primes([1, 0, 0, -2], 8))
    _mod2_sweep([1, 0, 0, 0, 0, -1, -1], _good_primes([1, 0, 0, 0, 0, -1, -1], 4))


@pytest.mark.slow
def test_mod2_consistency_sweep_full():
    _mod2_sweep([1, 0, 0, -2], _good_primes([1, 0, 0, -2], 25))
    _mod2_sweep([1, 0, 0, 0, 0, -1, -1], _good_primes([1, 0, 0, 0, 0, -1, -1], 25))


@pytest.mark.slow
def test_weil_bounds_genus_two():
    f = cv.make_input([1, 0, 0, 0, -1, 1])
    primes = [ell for ell in sympy.primerange(3, 51) if cv.disc(f) % ell]
    for data in cv.frobenius_table(f, primes):
        assert data.weil_ok and data.functional_equation_ok
        assert data.extra_count_ok is not False
