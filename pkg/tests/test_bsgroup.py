import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bsstab.bsgroup import (
    IDENTITY,
    AffineElement,
    BSGroup,
    ConjExponents,
    Word,
    britton_soundness,
    epsilon,
    index2_iso_check,
    insert_relators,
    is_in_kernel,
    random_word,
    t_exponent_sum,
)

from tests.strategies import words

GROUPS = [(1, 2, 2), (2, 3, 1), (3, 5, 2)]


groups = st.sampled_from(GROUPS).map(lambda c: BSGroup.from_pqr(*c))


def test_word_parsing_and_merging():
    # adjacent a-powers merge and zero powers vanish; free cancellation of t is left to reduce
    assert str(Word.parse("a^2 a^-2 t t^-1 a")) == "t t^-1 a"
    assert str(Word.parse("t a^3 t^-1")) == "t a^3 t^-1"
    assert str(Word()) == "e"
    with pytest.raises(ValueError):
        Word.parse("b")


def test_defining_relation_collapses():
    g = BSGroup.from_pqr(2, 3, 1)
    assert g.reduce(Word.parse("t a^2 t^-1")) == g.reduce(Word.a(3))
    assert g.reduce(Word()).is_identity()
    assert g.reduce(g.relator()).is_identity()


def test_normal_form_digits_are_canonical():
    g = BSGroup(2, 3)
    f = g.reduce(Word.parse("a^7 t a^5 t^-1 a^4 t^-1 a"))
    for k, e in zip(f.exps, f.ts):
        assert 0 <= k < (abs(g.n) if e == 1 else abs(g.m))


def test_negative_exponent_group():
    lam = BSGroup(2, -3)
    assert lam.reduce(Word.parse("t a^2 t^-1 a^3")).is_identity()
    assert not lam.reduce(Word.parse("t a^2 t^-1 a^-3")).is_identity()


def test_epsilon_examples():
    p, q = 2, 3
    assert epsilon(Word.a(), p, q) == AffineElement(p, q, Fraction(1), 0)
    assert epsilon(Word(), p, q).is_identity()
    assert epsilon(Word.parse("t a t^-1"), p, q) == AffineElement(p, q, Fraction(q, p), 0)
    assert not is_in_kernel(Word.a(), p, q)


def test_t_exponent_sum_examples():
    assert t_exponent_sum(Word.parse("t t a t^-1")) == 1
    assert t_exponent_sum(Word.a(9)) == 0
    assert t_exponent_sum(BSGroup.from_pqr(2, 3, 1).relator()) == 0


def test_transfer_examples():
    g = BSGroup.from_pqr(2, 3, 1)
    beta, b = g.transfer(Word.a(), IDENTITY)
    assert beta.is_identity() and b == -1
    alpha = g.coset_rep(Word.parse("t a"))
    assert g.transfer(Word(), alpha) == (alpha, 0)
    beta, b = g.transfer(Word.t(), IDENTITY)
    assert beta == g.coset_rep(Word.t(-1)) and b == 0


def test_conj_exponents_examples():
    g = BSGroup.from_pqr(2, 3, 1)
    assert g.conj_exponents(Word.t(), 2, 3, 1) == ConjExponents(K=1, K_prime=0, L=0, L_prime=1)
    assert g.conj_exponents(Word(), 2, 3, 1) == ConjExponents(0, 0, 0, 0)
    assert g.conj_exponents(Word.t(-1), 2, 3, 1) == ConjExponents(K=0, K_prime=1, L=1, L_prime=0)


@pytest.mark.parametrize("text", ["t", "t^-1", "t a t^-1", "a t^-1 a^2", "t t a"])
@pytest.mark.parametrize("pqr", GROUPS)
def test_conj_exponents_identity_holds_for_small_offsets(text, pqr):
    p, q, r = pqr
    grp = BSGroup.from_pqr(p, q, r)
    h = Word.parse(text)
    ce = grp.conj_exponents(h, p, q, r)
    for k in range(3):
        for l in range(3):
            lhs = h * Word.a(r * p ** (ce.K + k) * q ** (ce.L + l)) * h.inverse()
            rhs = Word.a(r * p ** (ce.K_prime + k) * q ** (ce.L_prime + l))
            assert grp.equal(lhs, rhs)


def test_index2_presentation_maps_to_identity():
    rep = index2_iso_check(2, 3, n_random=100, seed=0)
    assert rep.passed, rep.detail
    assert rep.params["relators"] == 103


def test_britton_soundness_report():
    rep = britton_soundness(BSGroup.from_pqr(2, 3, 1), pairs=200, seed=3)
    assert rep.passed and rep.value == 0


def test_relators_of_another_group_are_detected():
    rng = random.Random(5)
    src, other = BSGroup(2, 3), BSGroup(2, 5)
    moved = 0
    for _ in range(50):
        w = random_word(rng, 6)
        w2 = insert_relators(rng, w, src, 2)
        if other.reduce(w) != other.reduce(w2):
            moved += 1
    assert moved > 0


@settings(max_examples=100)
@given(groups, words())
def test_word_times_inverse_is_identity(grp, w):
    assert grp.mul(w, w.inverse()).is_identity()
    assert grp.mul(grp.inverse(w), w).is_identity()


@settings(max_examples=100)
@given(groups, words(), words(), words())
def test_multiplication_is_associative_on_forms(grp, u, v, w):
    left = grp.mul(grp.mul(u, v), w)
    right = grp.mul(u, grp.mul(v, w))
    assert left == right == grp.reduce(u * v * w)


@settings(max_examples=100)
@given(groups, words(), st.randoms(use_true_random=False))
def test_relator_insertion_preserves_normal_form(grp, w, rng):
    w2 = insert_relators(rng, w, grp, 3)
    assert grp.reduce(w) == grp.reduce(w2)
    assert grp.reduce(w) != grp.reduce(w2 * Word.a(rng.choice([-2, -1, 1, 3])))


@settings(max_examples=100)
@given(st.sampled_from(GROUPS), words(), words())
def test_epsilon_is_a_homomorphism(pqr, u, v):
    p, q, r = pqr
    assert epsilon(u * v, p, q) == epsilon(u, p, q) * epsilon(v, p, q)
    grp = BSGroup.from_pqr(p, q, r)
    assert is_in_kernel(grp.relator(), p, q)
    assert epsilon(grp.reduce(u).word(), p, q) == epsilon(u, p, q)


@given(st.sampled_from(GROUPS), words())
def test_affine_inverse(pqr, w):
    p, q, _ = pqr
    e = epsilon(w, p, q)
    assert (e * e.inverse()).is_identity() and (e.inverse() * e).is_identity()


@settings(max_examples=100)
@given(groups, words(), words(), words())
def test_transfer_is_a_left_action(grp, g, h, a):
    alpha = grp.coset_rep(a)
    assert grp.transfer(Word(), alpha) == (alpha, 0)
    beta1, b1 = grp.transfer(g, alpha)
    beta2, b2 = grp.transfer(h, beta1)
    beta, b = grp.transfer(g * h, alpha)
    assert (beta, b) == (beta2, b1 + b2)
    # the transfer identity itself: s(beta) a^b = (gh)^-1 s(alpha)
    assert grp.mul(beta, Word.a(b)) == grp.mul((g * h).inverse(), alpha)
