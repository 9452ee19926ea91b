import random
from fractions import Fraction

import pytest

from chiralbv.algebra import Generator, Scalar, System
from chiralbv.vertex import (
    ContractionTable,
    ModeElement,
    bracket_zero_modes,
    make_bcov,
    make_heisenberg,
    mode_bracket,
    mode_normal_form,
    nth_product,
    wick_ope,
)
from chiralbv.properties import make_mixed_system
from chiralbv.sampling import random_diffpoly, random_mode_element


def test_table_graded_symmetry_autofill():
    sys_, tbl = make_mixed_system()
    # c(z)d(w) ~ lam/(z-w)  =>  d(z)c(w) ~ (-1)^{1*1}(-1)^1 lam/(z-w) = +lam/(z-w)
    assert tbl.entry(("d", 0), ("c", 0)) == {1: Scalar(Fraction(1), 1)}
    # a-a double pole symmetric: (+1)(-1)^2 = +
    assert tbl.entry(("a", 0), ("a", 0)) == {2: Scalar(Fraction(1), 1)}


def test_table_rejects_odd_self_pole_of_wrong_parity():
    gens = [Generator("a", 0, 0, 0, Fraction(1))]
    sys_ = System("vertex", gens)
    with pytest.raises(ValueError):
        # even self-pair at odd pole order contradicts graded symmetry
        ContractionTable(sys_, {(("a", 0), ("a", 0)): {1: Scalar.of(1)}})


def test_table_json_roundtrip():
    sys_, tbl = make_mixed_system()
    obj = tbl.to_obj()
    tbl2 = ContractionTable.from_obj(sys_, obj)
    assert tbl2.to_obj() == obj


def test_wick_heisenberg_double_pole():
    sys_, tbl = make_heisenberg(lam_power=1)
    b0 = sys_.monomial([sys_.gen("b", 0)])
    assert wick_ope(b0, b0, tbl) == {1: sys_.one(lam=1)}


def test_wick_b0_squared_oracle():
    """Hand Wick oracle: two double- and four single-contraction pairings."""
    sys_, tbl = make_heisenberg(0)
    b0 = sys_.gen("b", 0)
    B2 = sys_.monomial([b0, b0])
    w = wick_ope(B2, B2, tbl)
    assert w[3] == sys_.one(coef=2)
    assert w[1] == sys_.monomial([b0, b0], coef=4)
    assert w[0] == sys_.monomial([b0, sys_.gen("b", 0, dz=1)], coef=4)
    assert set(w) == {0, 1, 3}


def test_wick_eta_eta_empty_in_bcov():
    sys_, tbl = make_bcov(1)
    eta = sys_.monomial([sys_.gen("eta", 0)])
    assert wick_ope(eta, eta, tbl) == {}


def test_wick_rejects_non_monomial():
    sys_, tbl = make_heisenberg(0)
    b0 = sys_.monomial([sys_.gen("b", 0)])
    with pytest.raises(ValueError):
        wick_ope(b0 + b0.dz(), b0, tbl)


def test_nth_products():
    sys_, tbl = make_heisenberg(1)
    b0 = sys_.monomial([sys_.gen("b", 0)])
    assert nth_product(b0, 1, b0, tbl) == sys_.one(lam=1)
    assert nth_product(b0, 0, b0, tbl).is_zero()
    sys0, tbl0 = make_heisenberg(0)
    B2 = sys0.monomial([sys0.gen("b", 0)] * 2)
    assert nth_product(B2, 0, B2, tbl0) == sys0.monomial(
        [sys0.gen("b", 0), sys0.gen("b", 0, dz=1)], coef=4
    )


def test_virasoro_central_charge_one():
    """T = (1/2):b0^2: reproduces the Virasoro OPE with c = 1."""
    sys_, tbl = make_heisenberg(0)
    T = sys_.monomial([sys_.gen("b", 0)] * 2, coef=Fraction(1, 2))
    w = wick_ope(T, T, tbl)
    assert w[3] == sys_.one(coef=Fraction(1, 2))
    assert w[1] == T.scale(2)
    assert w[0] == T.dz()
    assert set(w) == {0, 1, 3}


def test_mode_bracket_examples():
    sys_, tbl = make_heisenberg(1)
    b0 = sys_.monomial([sys_.gen("b", 0)])
    z0 = ModeElement.zero_mode(b0)
    assert mode_bracket(z0, z0, tbl).is_zero()
    # [b z^1, b z^0] = lam z^0, a total-derivative mode
    z1 = ModeElement(sys_, {1: b0})
    br = mode_bracket(z1, z0, tbl)
    assert br.part(0) == sys_.one(lam=1)
    assert mode_normal_form(br).is_zero()


def test_heisenberg_central_term():
    """[alpha_m, alpha_n] = m delta_{m+n} lam, read from the z^{-1} mode."""
    sys_, tbl = make_heisenberg(1)
    b0 = sys_.monomial([sys_.gen("b", 0)])
    for m in (1, 2):
        br = mode_bracket(ModeElement(sys_, {m: b0}), ModeElement(sys_, {-m: b0}), tbl)
        nf = mode_normal_form(br)
        assert nf.central_part() == {1: Fraction(m)}
        # and mismatched modes vanish
        br2 = mode_bracket(ModeElement(sys_, {m: b0}), ModeElement(sys_, {-m + 1: b0}), tbl)
        assert mode_normal_form(br2).is_zero()


def test_bracket_b0sq_with_b0_is_total_derivative():
    sys_, tbl = make_heisenberg(1)
    b0 = sys_.monomial([sys_.gen("b", 0)])
    B2 = sys_.monomial([sys_.gen("b", 0)] * 2)
    br = mode_bracket(ModeElement.zero_mode(B2), ModeElement.zero_mode(b0), tbl)
    assert br.part(0) == sys_.monomial([sys_.gen("b", 0, dz=1)], coef=2, lam=1)
    assert mode_normal_form(br).is_zero()


def test_zero_mode_fast_path_matches_general():
    sys_, tbl = make_mixed_system()
    rng = random.Random(31)
    for _ in range(25):
        A = random_diffpoly(rng, sys_, max_terms=2, max_degree=3, max_dz=2)
        B = random_diffpoly(rng, sys_, max_terms=2, max_degree=3, max_dz=2)
        fast = bracket_zero_modes(A, B, tbl)
        general = mode_bracket(ModeElement.zero_mode(A), ModeElement.zero_mode(B), tbl)
        assert mode_normal_form(fast - general).is_zero()
        assert fast.part(0) == general.part(0)


def test_mode_normal_form_examples():
    sys_, tbl = make_heisenberg(0)
    b0 = sys_.gen("b", 0)
    db0 = sys_.gen("b", 0, dz=1)
    assert mode_normal_form(ModeElement(sys_, {0: sys_.monomial([db0, b0])})).is_zero()
    nf = mode_normal_form(ModeElement(sys_, {1: sys_.monomial([db0])}))
    assert nf.parts == {0: sys_.monomial([b0], coef=-1)}
    p = sys_.monomial([b0, b0])
    nf = mode_normal_form(ModeElement(sys_, {0: p}))
    assert nf.parts == {0: p}


def test_mode_normal_form_drops_constants_except_central():
    sys_, _ = make_heisenberg(0)
    x = ModeElement(sys_, {2: sys_.one(coef=7), 0: sys_.one(coef=3)})
    assert mode_normal_form(x).is_zero()
    c = ModeElement(sys_, {-1: sys_.one(coef=5)})
    assert mode_normal_form(c).central_part() == {0: Fraction(5)}


def test_mode_normal_form_is_linear_zero_test():
    sys_, tbl = make_mixed_system()
    rng = random.Random(37)
    for _ in range(20):
        X = random_mode_element(rng, sys_, max_terms=2, max_degree=3, max_dz=2)
        # add a random total-derivative mode: d(A z^k) = TA z^k + k A z^{k-1}
        A = random_diffpoly(rng, sys_, max_terms=2, max_degree=3, max_dz=1)
        k = rng.randint(0, 2)
        im = ModeElement(sys_, {k: A.dz()}) + ModeElement(sys_, {k - 1: A.scale(k)})
        assert mode_normal_form(X + im).parts == mode_normal_form(X).parts


def test_mode_element_json_roundtrip():
    sys_, _ = make_mixed_system()
    rng = random.Random(41)
    X = random_mode_element(rng, sys_, zpow_range=(-1, 2), max_terms=3, max_degree=3, max_dz=2)
    assert ModeElement.from_obj(sys_, X.to_obj()).to_obj() == X.to_obj()


def test_energy_momentum_self_ope_invariant():
    """Spec invariant: wick(T,T) = {3: 1/2, 1: 2T, 0: dT} at lam = 1."""
    sys_, tbl = make_heisenberg(0)
    T = sys_.monomial([sys_.gen("b", 0)] * 2, coef=Fraction(1, 2))
    got = wick_ope(T, T, tbl)
    assert got == {3: sys_.one(coef=Fraction(1, 2)), 1: T.scale(2), 0: T.dz()}


def test_mc_residual_of_zero_interaction():
    from chiralbv.vertex import mc_residual, delta_bcov
    sys_, tbl = make_bcov(1)
    assert mc_residual(sys_.zero(), delta_bcov(sys_), tbl).is_zero()
