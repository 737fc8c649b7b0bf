import itertools
import random
from fractions import Fraction

import pytest

from bsstab.actions import apply_steps, base_window, w_point, x_point, y_point
from bsstab.bsgroup import Word
from bsstab.stability import (
    ConfigError,
    StabilityConfig,
    ac_apply,
    b_set,
    carry_identity_instance,
    check_commutation,
    check_disjoint_exact,
    check_relations,
    chi_square_pi,
    chi_square_tau,
    estimate_a_decay,
    estimate_sym_diff,
    estimate_sym_diff_multi,
    pi_map,
    pi_preimage_measure,
    piece_member,
    relation_pairs,
    sample_lambda,
    t_measure_check,
    t_measure_cylinders,
    tau_map,
    v_suite,
)
from bsstab.spaces import Empty, intersect, x_cylinder

P1 = StabilityConfig(1, 2, 2)
P2 = StabilityConfig(2, 3, 1)
P3 = StabilityConfig(3, 5, 2)


@pytest.mark.parametrize(
    "args,msg",
    [((2, 4, 1), "not coprime"), ((1, 2, 1), "rp >= 2"), ((3, 2, 1), "p < q"), ((2, 3, 0), "r >= 1")],
)
def test_config_validation(args, msg):
    with pytest.raises(ConfigError, match=msg):
        StabilityConfig(*args)


@pytest.mark.parametrize("cfg,M", [(P1, 2), (P2, 1), (P3, 1), (StabilityConfig(2, 3, 7), 2)])
def test_window_length_exceeds_r(cfg, M):
    assert cfg.M == M
    assert cfg.base**cfg.M > cfg.r


def test_pi_with_zero_x_reads_the_unshifted_window():
    zeros = {("x", i): 0 for i in range(12)}
    for s in range(20):
        x = x_point(s, zeros)
        y1 = y_point(1, 2, s)
        y2 = y_point(2, 3, s)
        for j in range(4):
            assert pi_map(P1, x, y1, j) == tau_map(P1, y1, j)
            assert pi_map(P2, x, y2, j) == y2.digit("y0", P2.window_start(j))


def test_pi_reads_the_shifted_window():
    x = x_point(1, {("x", 0): 1})
    y = y_point(1, 2, 5)
    assert pi_map(P1, x, y, 0) == y.digit("y0", 1) + 2 * y.digit("y0", 2)


def test_tau_examples():
    y = y_point(2, 3, 3, {("y0", 4): 0})
    assert tau_map(P2, y, 4) == 0
    y = y_point(2, 3, 8)
    assert [tau_map(P2, y, j) for j in range(10)] == [y.digit("y0", j) for j in range(10)]


def test_b_set_measures():
    assert sum(pc.measure() for pc in b_set(P2, 0)) == Fraction(1, 6)
    assert sum(pc.measure() for pc in b_set(P1, 0)) == Fraction(1, 4)
    for j in range(4):
        assert sum(pc.measure() for pc in b_set(P2, j)) == Fraction(1, 6)
    for cfg in (P1, P2):
        for a, b in itertools.combinations(b_set(cfg, 0), 2):
            assert intersect(x_cylinder(a.bits), x_cylinder(b.bits)) is Empty


def test_u_exponent_example():
    assert P1.u_exponent(0, 0) == 2
    assert P1.u_exponent(1, 3) == 2 * 2 ** (2 + 3)
    d = P2.window_start(1)
    assert P2.u_exponent(1, 2) == 2 ** (d - 2) * 3 ** (d + 2)


@pytest.mark.parametrize("cfg", [P1, P2])
def test_u_flips_membership_and_inverts(cfg):
    group = cfg.group
    j = 1
    pieces = b_set(cfg, j)
    inside = 0
    for s in range(400):
        w = w_point(group, cfg.p, cfg.q, s, with_z=False)
        back = ac_apply(cfg, j, ac_apply(cfg, j, w), inverse=True)
        assert back.y.query(4, 20, 4) == w.y.query(4, 20, 4)
        if any(piece_member(cfg, pc, w.x, w.y) for pc in pieces):
            inside += 1
            moved = ac_apply(cfg, j, w)
            assert not any(piece_member(cfg, pc, moved.x, moved.y) for pc in pieces)
            assert pi_map(cfg, w.x, moved.y, j) != 0
    assert inside > 20


@pytest.mark.parametrize("cfg,gap", [(P1, Fraction(1, 2)), (P2, Fraction(1, 3)), (P3, Fraction(2, 15))])
def test_exact_gap_small_levels(cfg, gap):
    for j in range(4):
        rep = check_disjoint_exact(cfg, j)
        assert rep.passed, rep.detail
        assert rep.value == gap


def test_pi_preimage_measure_is_uniform():
    for d in range(2):
        for targets in itertools.product(range(4), repeat=d + 1):
            assert pi_preimage_measure(P1, targets) == Fraction(1, 2 ** (2 * (d + 1)))
    with pytest.raises(ValueError):
        pi_preimage_measure(P2, (0,))


def test_sym_diff_of_identity_is_zero():
    est, lo, hi = estimate_sym_diff(P2, Word(), 3, 500)[:3]
    assert est == 0


@pytest.mark.parametrize("cfg", [P1, P2])
def test_t_sym_diff_under_two_to_minus_j(cfg):
    res = estimate_sym_diff_multi(cfg, Word.t(), range(6), 3000, seed=2)
    for j, (est, lo, hi, _) in res.items():
        assert est <= 2.0**-j + (hi - lo) / 2


def test_transported_sampling_agrees_with_direct_sampling():
    for g in (Word.t(), Word.a(), "U"):
        a = estimate_sym_diff(P1, g, 2, 4000, seed=1, transported=True)
        b = estimate_sym_diff(P1, g, 2, 4000, seed=1, transported=False)
        # both unbiased; overlapping 99% intervals
        assert a[1] <= b[2] and b[1] <= a[2]


def test_u_sym_diff_estimate_brackets_the_gap():
    est, lo, hi, _ = estimate_sym_diff(P2, "U", 3, 3000)
    assert lo <= 1 / 3 <= hi


@pytest.mark.parametrize("cfg", [P1, P2])
def test_commutation_small(cfg):
    rep_a = check_commutation(cfg, 2, "a", 300)
    rep_t = check_commutation(cfg, 2, "t", 300)
    assert rep_a.passed and rep_a.value == 0
    assert rep_t.passed, rep_t.detail


@pytest.mark.parametrize("cfg", [P1, P2])
def test_v_suite_small_levels(cfg):
    for j in range(3):
        rep = v_suite(cfg, j, samples=10)
        assert rep.passed, rep.detail
        assert rep.value == 2 * Fraction(1, cfg.base**cfg.M)


def test_a_decay_on_tau_sets():
    near = estimate_a_decay(P1, Word.a(), 0, 2000)[0]
    far = estimate_a_decay(P1, Word.a(), 4, 2000)[0]
    assert far < near


def test_relations_report():
    rep = check_relations(2, 3, points=5)
    assert rep.passed, rep.detail


@pytest.mark.parametrize("p,q", [(2, 3), (1, 2)])
def test_a_wrong_relation_fails_digitwise(p, q):
    y = y_point(p, q, 0)
    e = base_window(y.tape, p, q, 8, 40, 8 if p > 1 else 0)
    conj = [("t", 1), ("a", 0, 1), ("t", -1)]
    assert apply_steps(e, conj).integer.value % (p * q) ** 30 != apply_steps(e, [("a", 2, 1)]).integer.value % (p * q) ** 30
    names = [name for name, _, _ in relation_pairs(1)(p, q)]
    assert len(names) == 3 + 3 + 9


@pytest.mark.parametrize("p,q", [(1, 2), (2, 3), (3, 5)])
def test_carry_identity(p, q):
    rng = random.Random(p + q)
    for _ in range(200):
        ok, msg = carry_identity_instance(rng, p, q)
        assert ok, msg


def test_t_measure_on_sample_of_cylinders():
    for ks, d, ls in t_measure_cylinders(2, 3, limit=40, seed=4):
        ok, msg = t_measure_check(2, 3, ks, d, ls)
        assert ok, msg
    assert len(list(t_measure_cylinders(2, 3))) == sum(3**N * 2**M * 6 for N in (1, 2, 3) for M in (1, 2, 3))


@pytest.mark.parametrize("cfg", [P1, P2])
def test_chi_square_small_runs(cfg):
    assert chi_square_pi(cfg, 2, 3000) > 0.001
    assert chi_square_tau(cfg, 2, 3000) > 0.001


def test_transported_point_has_expected_law():
    x, y = sample_lambda(P2, 3, j=2)
    assert y.transform.n == x.low_value(3)
