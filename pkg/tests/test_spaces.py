import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bsstab.actions import act_Z, z_point
from bsstab.bsgroup import BSGroup, Word
from bsstab.montecarlo import chi_square_uniform
from bsstab.spaces import (
    BLOCK,
    CylinderSet,
    Empty,
    SpecMismatch,
    Tape,
    intersect,
    measure,
    member,
    prf_block,
    sample_point,
    x_cylinder,
    x_spec,
    y_spec,
)

from tests.strategies import words

N_MC = 100_000


def test_prf_block_is_deterministic_and_in_range():
    a = prf_block(7, "y0", 3, 6)
    assert (a == prf_block(7, "y0", 3, 6)).all()
    assert len(a) == BLOCK and a.min() >= 0 and a.max() < 6
    assert not (a == prf_block(8, "y0", 3, 6)).all()
    assert (prf_block(1, "y+", 0, 1) == 0).all()


def test_same_seed_gives_same_point():
    spec = y_spec(2, 3)
    u, v = sample_point(spec, 11), sample_point(spec, 11)
    for fam, idx in [("y0", 0), ("y0", 200), ("y-", -1), ("y-", -130), ("y+", 5)]:
        assert u.digit(fam, idx) == v.digit(fam, idx)


def test_x0_frequency_is_one_half():
    ones = sum(sample_point(x_spec(), s).digit("x", 0) for s in range(N_MC))
    sigma = math.sqrt(0.25 / N_MC)
    assert abs(ones / N_MC - 0.5) <= 3 * sigma


def test_y0_digit_is_uniform_on_six_cells():
    counts = [0] * 6
    for s in range(N_MC):
        counts[sample_point(y_spec(2, 3), s).digit("y0", 3)] += 1
    assert chi_square_uniform(counts) > 0.01


def test_measure_examples():
    assert measure(x_cylinder([0])) == Fraction(1, 2)
    assert measure(CylinderSet.make(x_spec(), {})) == 1
    assert measure(CylinderSet.make(y_spec(2, 3), {("y0", 0): {0}})) == Fraction(1, 6)


def test_intersection_examples():
    assert intersect(x_cylinder([0]), x_cylinder([1])) is Empty
    assert intersect(x_cylinder([0]), x_cylinder([0, 1])) == x_cylinder([0, 1])
    spec = y_spec(2, 3)
    a = CylinderSet.make(spec, {("y0", 0): {1, 2}})
    b = CylinderSet.make(spec, {("y-", -1): {0}, ("y+", 2): {1}})
    both = intersect(a, b)
    assert measure(both) == measure(a) * measure(b)


def test_member_examples():
    pt = sample_point(x_spec(), 4, overrides={("x", 0): 1})
    assert member(pt, CylinderSet.make(x_spec(), {}))
    assert not member(pt, x_cylinder([0]))
    assert member(pt, x_cylinder([1]))


def test_member_frequency_matches_measure():
    spec = y_spec(2, 3)
    c = CylinderSet.make(spec, {("y0", 1): {0, 5}, ("y-", -2): {1}, ("y+", 1): {0}})
    m = float(measure(c))
    n = 20_000
    hits = sum(member(sample_point(spec, s), c) for s in range(n))
    assert abs(hits / n - m) <= 3 * math.sqrt(m * (1 - m) / n)


@pytest.mark.parametrize("j", range(5))
def test_binary_partition_has_measure_one(j):
    cyls = [x_cylinder(bits) for bits in itertools.product((0, 1), repeat=j + 1)]
    assert sum(measure(c) for c in cyls) == 1
    for a, b in itertools.combinations(cyls, 2):
        assert intersect(a, b) is Empty


def test_invalid_cylinders_and_specs():
    with pytest.raises(IndexError):
        CylinderSet.make(y_spec(2, 3), {("y-", 0): {0}})
    with pytest.raises(ValueError):
        CylinderSet.make(y_spec(2, 3), {("y+", 1): {2}})
    with pytest.raises(SpecMismatch):
        CylinderSet.make(y_spec(2, 3), {("w", 1): {0}})
    with pytest.raises(SpecMismatch):
        intersect(x_cylinder([0]), CylinderSet.make(y_spec(2, 3), {}))


@settings(max_examples=50)
@given(st.integers(0, 10**6), st.integers(0, 300), st.integers(1, 150), st.booleans())
def test_tape_value_and_window_match_digits(seed, start, count, with_override):
    overrides = {("y0", start): 5} if with_override else None
    tape = Tape(y_spec(2, 3), seed, overrides)
    digits = [tape.digit("y0", start + k) for k in range(count)]
    assert tape.window("y0", start, count) == sum(d * 6**k for k, d in enumerate(digits))
    n = start + count
    assert tape.value("y0", n) == sum(tape.digit("y0", i) * 6**i for i in range(n))


def test_z_cosets_are_isolated_and_offsets_exact():
    group = BSGroup.from_pqr(2, 3, 1)
    z = z_point(group, 2, 3, seed=9)
    cosets = [group.coset_rep(Word.parse(w)) for w in ["", "t", "t^-1", "a t", "t t", "t^-1 a^2 t^-1"]]
    moved = act_Z(Word.a(4), z)
    sources = [moved.state(c)[0] for c in cosets]
    assert len(set(sources)) == len(cosets)
    # a^4 at the identity coset adds 4 to its own tape and to nothing else
    src, off = moved.state(cosets[0])
    assert (src, off) == (cosets[0].key(), 4)
    base = sum(z.digit(cosets[0], k) * 6**k for k in range(12))
    assert sum(moved.digit(cosets[0], k) * 6**k for k in range(12)) == (base + 4) % 6**12
    for c in cosets[1:]:
        assert moved.state(c)[0] != cosets[0].key()
    assert moved.materialized() == len(cosets)


@settings(max_examples=100)
@given(st.sampled_from([(1, 2, 2), (2, 3, 1)]), st.integers(0, 99), st.data())
def test_z_action_law(pqr, seed, data):
    p, q, r = pqr
    group = BSGroup.from_pqr(p, q, r)
    g = data.draw(words(6))
    h = data.draw(words(6))
    z = z_point(group, p, q, seed)
    cosets = [group.coset_rep(data.draw(words(4))) for _ in range(8)]
    step = act_Z(h, act_Z(g, z))
    once = act_Z(h * g, z)
    back = act_Z(g.inverse(), act_Z(g, z))
    for c in cosets:
        assert step.state(c) == once.state(c)
        assert back.state(c) == z.state(c)
        assert step.digits(c, 16) == once.digits(c, 16)
