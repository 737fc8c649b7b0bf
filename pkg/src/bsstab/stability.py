"""Factor maps, the sets B_j and A_j, the piecewise elements U_j and V_j, and their checks.

Exact checks work on cylinder pieces. For p > 1 a piece of B_j is
X(bits) x t^l(A) with A a cylinder on the Y0 window: it is kept as the pair
(l, A) and never expanded, since membership and intersections of pieces that
share the same l reduce to those of A, and t^l preserves the measure.
Monte Carlo checks report exact binomial 99% intervals.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import gcd

from .actions import (
    WPoint,
    XPoint,
    YPoint,
    act_W,
    w_point,
    x_point,
    y_point,
)
from .bsgroup import AffineElement, BSGroup, Word, epsilon
from .exactnum import MixedRadixExpansion, AdicWindow, add_at
from .montecarlo import binomial_ci, chi_square_uniform
from .report import VerificationReport
from .spaces import CylinderSet, Empty, intersect, measure, y_spec


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class StabilityConfig:
    p: int
    q: int
    r: int
    jmax: int = 8
    samples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.p < self.q:
            raise ConfigError(f"need 1 <= p < q, got p={self.p}, q={self.q}")
        if gcd(self.p, self.q) != 1:
            raise ConfigError(f"p={self.p} and q={self.q} are not coprime")
        if self.r < 1 or self.r * self.p < 2:
            raise ConfigError(f"need r >= 1 and rp >= 2, got r={self.r}, p={self.p}")

    @property
    def base(self) -> int:
        return self.p * self.q

    @cached_property
    def M(self) -> int:
        m = 1
        while self.base**m <= self.r:
            m += 1
        return m

    @property
    def group(self) -> BSGroup:
        return BSGroup.from_pqr(self.p, self.q, self.r)

    def window_start(self, j: int) -> int:
        return j * self.M if self.p == 1 else j + 2 ** (j + 1)

    def u_exponent(self, j: int, l: int) -> int:
        """The a-power applied by U_j on the piece where x_0 + 2x_1 + ... + 2^j x_j = l."""
        if self.p == 1:
            return self.r * self.q ** (j * self.M + l)
        d = self.window_start(j)
        return self.r * self.p ** (d - l) * self.q ** (d + l)

    def v_exponent(self, j: int) -> int:
        return self.r * self.base ** (j * self.M)


# ---------------------------------------------------------------------------
# factor maps


def shift_of(x: XPoint, j: int) -> int:
    return x.low_value(j + 1)


def pi_map(cfg: StabilityConfig, x: XPoint, y: YPoint, j: int) -> int:
    l = shift_of(x, j)
    moved = y.moved(AffineElement(cfg.p, cfg.q, Fraction(0), -l))
    return moved.y0_value(cfg.window_start(j), cfg.M)


def tau_map(cfg: StabilityConfig, y: YPoint, j: int) -> int:
    return y.y0_value(j * cfg.M, cfg.M)


# ---------------------------------------------------------------------------
# exact pieces


@dataclass(frozen=True)
class Piece:
    """X(bits) x t^shift(ycyl)."""

    bits: tuple[int, ...]
    shift: int
    ycyl: CylinderSet

    def measure(self) -> Fraction:
        return Fraction(1, 2 ** len(self.bits)) * measure(self.ycyl)


def window_cylinder(cfg: StabilityConfig, start: int, value: int) -> CylinderSet:
    b = cfg.base
    return CylinderSet.make(
        y_spec(cfg.p, cfg.q), {("y0", start + k): {value // b**k % b} for k in range(cfg.M)}
    )


def bits_of(l: int, n: int) -> tuple[int, ...]:
    return tuple((l >> i) & 1 for i in range(n))


def shifted_cylinder(c: CylinderSet, l: int) -> CylinderSet:
    """t^l of a cylinder on the bi-infinite base-q tape (p = 1), a plain shift."""
    out = {}
    for (family, idx), allowed in c.constraints:
        if family != "y0":
            raise ValueError("only Y0 constraints can be shifted here")
        out[("y0", idx + l)] = allowed
    return CylinderSet.make(c.spec, out)


def b_set(cfg: StabilityConfig, j: int, value: int = 0) -> list[Piece]:
    """B_j (window value 0) or, with ``value``, the set where pi_j equals it.

    For p = 1 every piece is a plain cylinder (shift 0).
    """
    pieces = []
    for l in range(2 ** (j + 1)):
        base = window_cylinder(cfg, cfg.window_start(j), value)
        if cfg.p == 1:
            pieces.append(Piece(bits_of(l, j + 1), 0, shifted_cylinder(base, l)))
        else:
            pieces.append(Piece(bits_of(l, j + 1), l, base))
    return pieces


def piece_member(cfg: StabilityConfig, piece: Piece, x: XPoint, y: YPoint) -> bool:
    if any(x.bit(i) != b for i, b in enumerate(piece.bits)):
        return False
    moved = y.moved(AffineElement(cfg.p, cfg.q, Fraction(0), -piece.shift)) if piece.shift else y
    return all(moved.digit(f, i) in allowed for (f, i), allowed in piece.ycyl.constraints)


def translate_cylinder(cfg: StabilityConfig, c: CylinderSet, k: int) -> list[CylinderSet]:
    """The image of a cylinder constraining a contiguous Y0 window under y -> y + k.

    ``k`` must be divisible by (pq)^start so that lower digits are untouched;
    carries out of the top of the window land on unconstrained digits.
    """
    b = cfg.base
    cons = c.as_dict()
    if not cons:
        return [c]
    if any(f != "y0" for f, _ in cons):
        raise ValueError("only Y0 windows are supported")
    idxs = sorted(i for _, i in cons)
    lo, hi = idxs[0], idxs[-1]
    if idxs != list(range(lo, hi + 1)):
        raise ValueError("window must be contiguous")
    if k % b**lo:
        raise ValueError("translation would touch digits below the window")
    shift = k // b**lo
    width = hi - lo + 1
    out = []
    for digits in itertools.product(*(sorted(cons[("y0", i)]) for i in idxs)):
        v = sum(d * b**n for n, d in enumerate(digits))
        w = (v + shift) % b**width
        out.append(CylinderSet.make(c.spec, {("y0", lo + n): {w // b**n % b} for n in range(width)}))
    return out


def _piece_intersect(a: Piece, b: Piece):
    if len(a.bits) == len(b.bits) and a.bits != b.bits:
        return Empty
    if a.bits[: len(b.bits)] != b.bits[: len(a.bits)]:
        return Empty
    if a.shift != b.shift:
        raise ValueError("pieces with overlapping X parts and different shifts")
    y = intersect(a.ycyl, b.ycyl)
    if y is Empty:
        return Empty
    bits = a.bits if len(a.bits) >= len(b.bits) else b.bits
    return Piece(bits, a.shift, y)


def apply_u_to_pieces(cfg: StabilityConfig, j: int, pieces: list[Piece]) -> list[Piece]:
    """U_j applied piece by piece.

    On X(bits) the element a^e acts on t^l(A) as t^l (t^-l a^e t^l)(A); the
    conjugate is computed in the affine group and must be an integer
    translation of Y0.
    """
    out = []
    for pc in pieces:
        l = sum(b << i for i, b in enumerate(pc.bits))
        e = cfg.u_exponent(j, l)
        shift = pc.shift
        conj = (
            AffineElement(cfg.p, cfg.q, Fraction(0), -shift)
            * AffineElement(cfg.p, cfg.q, Fraction(e), 0)
            * AffineElement(cfg.p, cfg.q, Fraction(0), shift)
        )
        if conj.n != 0 or conj.x.denominator != 1:
            raise ValueError(f"conjugated exponent on piece {l} is not an integer translation")
        for cyl in translate_cylinder(cfg, pc.ycyl, int(conj.x)):
            out.append(Piece(pc.bits, shift, cyl))
    return out


def u_pieces_in_group(cfg: StabilityConfig, j: int) -> bool:
    """t^l a^{r b^s} t^-l = a^{e(l)} in the group itself, for every piece."""
    g = cfg.group
    s = cfg.window_start(j)
    for l in range(2 ** (j + 1)):
        shift_base = cfg.r * cfg.base**s if cfg.p > 1 else cfg.r * cfg.q**s
        w = Word.t(l) * Word.a(shift_base) * Word.t(-l)
        if g.reduce(w) != g.reduce(Word.a(cfg.u_exponent(j, l))):
            return False
    return True


def check_disjoint_exact(cfg: StabilityConfig, j: int, group_check: bool = True) -> VerificationReport:
    pieces = b_set(cfg, j)
    images = apply_u_to_pieces(cfg, j, pieces)
    mb = sum((p.measure() for p in pieces), Fraction(0))
    mu = sum((p.measure() for p in images), Fraction(0))
    overlaps = 0
    inner = Fraction(0)
    for a in images:
        for b in pieces:
            both = _piece_intersect(a, b)
            if both is not Empty:
                overlaps += 1
                inner += both.measure()
    self_overlap = 0
    for i, a in enumerate(pieces):
        for b in pieces[i + 1 :]:
            if _piece_intersect(a, b) is not Empty:
                self_overlap += 1
    sym = mu + mb - 2 * inner
    expected = 2 * Fraction(1, cfg.base**cfg.M)
    in_group = u_pieces_in_group(cfg, j) if group_check else True
    ok = overlaps == 0 and self_overlap == 0 and sym == expected and mb == expected / 2 and in_group
    claim = "lem-1-ac.ii" if cfg.p == 1 else "lem-2-ac.ii"
    return VerificationReport(
        claim=claim,
        mode="exact",
        params={"p": cfg.p, "q": cfg.q, "r": cfg.r, "M": cfg.M, "j": j},
        value=sym,
        bound=expected,
        passed=ok,
        detail=f"pieces={len(pieces)} overlaps={overlaps} piece_overlaps={self_overlap} "
        f"measure(B)={mb} group_identity={in_group}",
    )


def pi_preimage_measure(cfg: StabilityConfig, targets: tuple[int, ...]) -> Fraction:
    """(mu x nu) of {pi_j = targets[j] for j <= d} from explicit cylinders (p = 1)."""
    if cfg.p != 1:
        raise ValueError("explicit cylinders are only available for p = 1")
    d = len(targets) - 1
    total = Fraction(0)
    for l in range(2 ** (d + 1)):
        cyl = CylinderSet.make(y_spec(cfg.p, cfg.q), {})
        for j, value in enumerate(targets):
            lj = l % 2 ** (j + 1)
            part = shifted_cylinder(window_cylinder(cfg, cfg.window_start(j), value), lj)
            cyl = intersect(cyl, part)
            if cyl is Empty:
                break
        if cyl is not Empty:
            total += Fraction(1, 2 ** (d + 1)) * measure(cyl)
    return total


# ---------------------------------------------------------------------------
# full-group elements on points


def ac_apply(cfg: StabilityConfig, j: int, w: WPoint, inverse: bool = False) -> WPoint:
    """U_j: the a-power chosen by x_0..x_j, applied to Y and Z; X is unchanged."""
    e = cfg.u_exponent(j, shift_of(w.x, j))
    g = Word.a(-e if inverse else e)
    moved = act_W(g, WPoint(None, w.y, w.z))
    return WPoint(w.x, moved.y, moved.z)


def v_apply(cfg: StabilityConfig, j: int, w: WPoint) -> WPoint:
    return act_W(Word.a(cfg.v_exponent(j)), w)


def sample_lambda(cfg: StabilityConfig, seed: int, j: int | None = None) -> tuple[XPoint, YPoint]:
    """A point of X x Y.

    With ``j`` given the point is returned in transported form: y = t^l y' with
    l = x_0 + ... + 2^j x_j and y' a fresh tape. The map (x, y') -> (x, t^l y')
    preserves mu x nu, so the law is unchanged, and pi_j needs no deep shift.
    """
    x = x_point(seed * 2)
    y = y_point(cfg.p, cfg.q, seed * 2 + 1)
    if j is not None:
        y = y.moved(AffineElement(cfg.p, cfg.q, Fraction(0), shift_of(x, j)))
    return x, y


def estimate_sym_diff_table(
    cfg: StabilityConfig, jobs, samples: int, seed: int = 0, transported: bool = True
) -> list[tuple[float, float, float, int]]:
    """Monte Carlo estimates of omega(g B_j symmetric-difference B_j) for (g, j) in ``jobs``.

    ``g`` is a word or "U" for U_j. Membership of g^-1 w in B_j decides
    membership of w in g B_j. Each sample draws one (x, y') and reuses it for
    every job, so the estimates are correlated but each one is unbiased.

    pi_j reads the Y0 window of t^-l' g^-1 t^l y'. The composite transform is
    formed first; when it equals the one for w itself the two windows are the
    same and no digits are read.
    Returns (estimate, ci_low, ci_high, hits) per job.
    """
    from .bsgroup import t_exponent_sum

    p, q = cfg.p, cfg.q

    zero = Fraction(0)

    def shift(n: int) -> AffineElement:
        return AffineElement(p, q, zero, n)

    prepared = []
    for g, j in jobs:
        if g == "U":
            prepared.append((None, j, 0, None))
        else:
            ginv = g.inverse()
            prepared.append((g, j, t_exponent_sum(ginv), epsilon(ginv, p, q)))
    hits = [0] * len(prepared)
    for s in range(samples):
        x = x_point((seed * 10_000_019 + s) * 2)
        y0 = y_point(p, q, (seed * 10_000_019 + s) * 2 + 1)
        values: dict[tuple[AffineElement, int], int] = {}

        def window(T: AffineElement, j: int) -> int:
            key = (T, j)
            v = values.get(key)
            if v is None:
                v = y0.moved(T).y0_value(cfg.window_start(j), cfg.M)
                values[key] = v
            return v

        levels: dict[int, tuple] = {}
        for i, (g, j, tsum, eps) in enumerate(prepared):
            if j not in levels:
                l = shift_of(x, j)
                lift = shift(l) if transported else AffineElement(p, q)
                T_in = shift(-l) * lift
                levels[j] = (l, lift, T_in, window(T_in, j) == 0)
            l, lift, T_in, inside = levels[j]
            if g is None:
                e = cfg.u_exponent(j, l)
                T = shift(-l) * (AffineElement(p, q, Fraction(-e), 0) * lift)
            else:
                l2 = (x.low_value(j + 1) + tsum) % (1 << (j + 1)) if tsum else l
                T = shift(-l2) * (eps * lift)
            if T == T_in:
                continue
            if inside != (window(T, j) == 0):
                hits[i] += 1
    out = []
    for h in hits:
        lo, hi = binomial_ci(h, samples)
        out.append((h / samples, lo, hi, h))
    return out


def estimate_sym_diff_multi(
    cfg: StabilityConfig, g: Word | str, js, samples: int, seed: int = 0, transported: bool = True
) -> dict:
    """{j: (estimate, ci_low, ci_high, hits)} for one g over several j."""
    js = list(js)
    res = estimate_sym_diff_table(cfg, [(g, j) for j in js], samples, seed, transported)
    return dict(zip(js, res))


def estimate_sym_diff(
    cfg: StabilityConfig, g: Word | str, j: int, samples: int, seed: int = 0, transported: bool = True
):
    """Single-j form of :func:`estimate_sym_diff_multi`."""
    return estimate_sym_diff_multi(cfg, g, [j], samples, seed, transported)[j]


def chi_square_pi(cfg: StabilityConfig, j: int, samples: int, seed: int = 0) -> float:
    counts = [0] * cfg.base**cfg.M
    for s in range(samples):
        x, y = sample_lambda(cfg, seed * 10_000_019 + s)
        counts[pi_map(cfg, x, y, j)] += 1
    return chi_square_uniform(counts)


def chi_square_tau(cfg: StabilityConfig, j: int, samples: int, seed: int = 0) -> float:
    counts = [0] * cfg.base**cfg.M
    for s in range(samples):
        counts[tau_map(cfg, y_point(cfg.p, cfg.q, seed * 10_000_019 + s), j)] += 1
    return chi_square_uniform(counts)


def probe_cosets(group: BSGroup) -> list:
    words = ["", "t", "t^-1", "t a", "t^-1 a", "t t", "t^-1 t^-1", "a t^-1 a"]
    return [group.coset_rep(Word.parse(w)) for w in words]


def w_signature(cfg: StabilityConfig, w: WPoint, j: int, cosets) -> tuple:
    """Digits of every component compared by the commutation checks."""
    depth = cfg.window_start(j) + cfg.M + 8
    xs = tuple(w.x.bit(i) for i in range(j + 4)) if w.x is not None else ()
    ys = w.y.query(8, depth, 8)
    zs = tuple(w.z.state(c) for c in cosets) if w.z is not None else ()
    return xs, ys, zs


def check_commutation(cfg: StabilityConfig, j: int, g: str, samples: int, seed: int = 0) -> VerificationReport:
    """Disagreements of U_j g and g U_j on sampled points of W."""
    group = cfg.group
    cosets = probe_cosets(group)
    word = Word.a() if g == "a" else Word.t()
    bad = 0
    bad_outside = 0
    ones = (1 << (j + 1)) - 1
    for s in range(samples):
        w = w_point(group, cfg.p, cfg.q, seed * 10_000_019 + s)
        left = ac_apply(cfg, j, act_W(word, w))
        right = act_W(word, ac_apply(cfg, j, w))
        if w_signature(cfg, left, j, cosets) != w_signature(cfg, right, j, cosets):
            bad += 1
            if shift_of(w.x, j) != ones:
                bad_outside += 1
    lo, hi = binomial_ci(bad, samples)
    claim = "lem-1-ac.i" if cfg.p == 1 else "lem-2-ac.i"
    params = {"p": cfg.p, "q": cfg.q, "r": cfg.r, "j": j, "g": g, "samples": samples}
    if g == "a":
        return VerificationReport(claim, "mc", params, bad, 0, lo, hi, bad == 0, "U_j a vs a U_j")
    bound = 2.0 ** -(j + 1)
    ok = bad / samples <= bound + (hi - lo) / 2 and bad_outside == 0
    return VerificationReport(
        claim, "mc", params, bad / samples, bound, lo, hi, ok, f"disagreements outside X(1..1): {bad_outside}"
    )


# ---------------------------------------------------------------------------
# the A_j / V_j certificate on Y x Z


def a_set(cfg: StabilityConfig, j: int, value: int = 0) -> CylinderSet:
    return window_cylinder(cfg, j * cfg.M, value)


def v_threshold(cfg: StabilityConfig, h: Word) -> int:
    """Least jM past which a^{r b^{jM}} is guaranteed to commute with h."""
    ce = cfg.group.conj_exponents(h, cfg.p, cfg.q, cfg.r)
    if (ce.K, ce.L) != (ce.K_prime, ce.L_prime):
        raise ValueError(f"{h} does not centralize large powers: {ce}")
    return ce.L if cfg.p == 1 else max(ce.K, ce.L)


def v_suite(cfg: StabilityConfig, j: int, samples: int = 200, seed: int = 0) -> VerificationReport:
    a_j = a_set(cfg, j)
    images = translate_cylinder(cfg, a_j, cfg.v_exponent(j))
    overlaps = sum(1 for im in images if intersect(im, a_j) is not Empty)
    sym = sum((measure(c) for c in images), Fraction(0)) + measure(a_j)
    expected = 2 * Fraction(1, cfg.base**cfg.M)
    group = cfg.group
    hs = [Word.a(), Word.parse("t a t^-1")]
    comm_fail = []
    point_fail = 0
    cosets = probe_cosets(group)
    for h in hs:
        thr = v_threshold(cfg, h)
        if j * cfg.M < thr:
            continue
        v = Word.a(cfg.v_exponent(j))
        if not group.reduce(v * h * v.inverse() * h.inverse()).is_identity():
            comm_fail.append(str(h))
        for s in range(samples):
            w = w_point(group, cfg.p, cfg.q, seed * 1_000_003 + s, with_x=False)
            left = act_W(v, act_W(h, w))
            right = act_W(h, act_W(v, w))
            if w_signature(cfg, left, j, cosets) != w_signature(cfg, right, j, cosets):
                point_fail += 1
    ok = overlaps == 0 and sym == expected and not comm_fail and point_fail == 0
    return VerificationReport(
        claim="thm-h-stable",
        mode="exact",
        params={"p": cfg.p, "q": cfg.q, "r": cfg.r, "M": cfg.M, "j": j},
        value=sym,
        bound=expected,
        passed=ok,
        detail=f"overlaps={overlaps} group_commutator_failures={comm_fail} pointwise_disagreements={point_fail}",
    )


def estimate_a_decay(cfg: StabilityConfig, h: Word, j: int, samples: int, seed: int = 0):
    """omega_1(h A_j symmetric-difference A_j) on Y."""
    hits = 0
    hinv = epsilon(h.inverse(), cfg.p, cfg.q)
    for s in range(samples):
        y = y_point(cfg.p, cfg.q, seed * 10_000_019 + s)
        if (tau_map(cfg, y, j) == 0) != (tau_map(cfg, y.moved(hinv), j) == 0):
            hits += 1
    lo, hi = binomial_ci(hits, samples)
    return hits / samples, lo, hi


# ---------------------------------------------------------------------------
# defining relations on Y, digit by digit


def _a_i(i: int, k: int = 1) -> list:
    return [("a", i, k)]


def relation_pairs(span: int = 3):
    """(name, lhs steps, rhs steps) for a_{i+1}^p = a_i^q, t a_i t^-1 = a_{i+1}, [a_i, a_j] = 1.

    a_i adds (q/p)^i directly, so each side runs different digit operations.
    """

    def pairs(p, q):
        for i in range(-span, span + 1):
            yield f"a_{i + 1}^p=a_{i}^q", _a_i(i + 1) * p, _a_i(i) * q
            yield f"t a_{i} t^-1=a_{i + 1}", [("t", 1)] + _a_i(i) + [("t", -1)], _a_i(i + 1)
            for j in range(-span, span + 1):
                yield f"[a_{i},a_{j}]=1", _a_i(i) + _a_i(j) + _a_i(i, -1) + _a_i(j, -1), []

    return pairs


def check_relations(p: int, q: int, points: int = 100, digits: int = 64, span: int = 3, seed: int = 0) -> VerificationReport:
    """Both sides of every relation applied by the step engine to sampled windows;
    the results must agree on all shared digits, at least ``digits`` of them in Y0."""
    from .actions import apply_steps, base_window, y_point

    pad = span + 4
    bad = []
    checked = 0
    for s in range(points):
        y = y_point(p, q, seed * 1_000_003 + s)
        e = base_window(y.tape, p, q, pad, digits + 4, pad if p > 1 else 0)
        for name, lhs, rhs in relation_pairs(span)(p, q):
            u, v = apply_steps(e, lhs), apply_steps(e, rhs)
            D = min(u.integer.precision, v.integer.precision)
            b = p * q
            same = (
                D >= digits
                and u.neg == v.neg
                and (u.pos == v.pos if p > 1 else not any(u.pos + v.pos))
                and u.integer.value % b**D == v.integer.value % b**D
            )
            checked += 1
            if not same:
                bad.append(f"{name}@{s}")
    return VerificationReport(
        claim="sec-sol.relations",
        mode="exact",
        params={"p": p, "q": q, "points": points, "digits": digits, "span": span, "seed": seed},
        value=len(bad),
        bound=0,
        passed=not bad,
        detail=f"checked={checked} failures={bad[:5]}",
    )


# ---------------------------------------------------------------------------
# carry identity and measure preservation of t


def carry_identity_instance(rng: random.Random, p: int, q: int) -> tuple[bool, str]:
    """Add q at position -n-m below a block z_{-n-m+1..-n} with z_{-n} <= q-p-1."""
    n = rng.randint(1, 6)
    m = rng.randint(1, 6)
    block = [rng.randrange(q) for _ in range(m)]  # positions -n-m+1 .. -n
    block[-1] = rng.randrange(q - p)
    neg = [0] + block + [0] * (n - 1)  # positions -n-m .. -1
    e = MixedRadixExpansion(p, q, tuple(neg), AdicWindow(p * q, 0, 4), ())
    out = add_at(e, -n - m, q)
    r = Fraction(q, p)
    expected = q * r ** (-n - m) + sum(z * r ** (-n - m + 1 + i) for i, z in enumerate(block))
    got = out.value()
    stays = out.integer.value == 0 and all(d == 0 for d in out.neg[m + 1 :]) and out.neg[0] == 0
    return got == expected and stays and out.in_range(), f"n={n} m={m} block={block}"


def t_image_of_cylinder(p: int, q: int, ks: tuple, d: int, ls: tuple) -> list[CylinderSet]:
    """t applied to {y_n = ks (n = -N..-1), Y0 digit 0 = d, y_m = ls (m = 1..M)}.

    Follows y_n -> y_{n-1}, Y0 -> y_{-1} + (q/p)(Y0 - i), y_1 = i with i = d mod p:
    Y0 ranges over a residue class modulo q^2, refined into digit cylinders.
    """
    spec = y_spec(p, q)
    N = len(ks)
    i = d % p
    cons = {}
    for n in range(-N + 1, 0):
        cons[("y-", n)] = {ks[n - 1 + N]}
    cons[("y+", 1)] = {i}
    for m, lv in enumerate(ls, start=2):
        cons[("y+", m)] = {lv}
    k_last = ks[-1]
    target = (k_last + q * (d - i) // p) % q**2
    b = p * q
    out = []
    for v in range(b**2):
        if v % q**2 == target:
            c = dict(cons)
            c[("y0", 0)] = {v % b}
            c[("y0", 1)] = {v // b}
            out.append(CylinderSet.make(spec, c))
    return out


def source_cylinder(p: int, q: int, ks: tuple, d: int, ls: tuple) -> CylinderSet:
    cons = {("y-", n): {ks[n + len(ks)]} for n in range(-len(ks), 0)}
    cons[("y0", 0)] = {d}
    for m, lv in enumerate(ls, start=1):
        cons[("y+", m)] = {lv}
    return CylinderSet.make(y_spec(p, q), cons)


def forced_point(p: int, q: int, c: CylinderSet, seed: int) -> YPoint:
    rng = random.Random(seed)
    overrides = {key: rng.choice(sorted(allowed)) for key, allowed in c.constraints}
    return y_point(p, q, seed, overrides)


def t_measure_check(p: int, q: int, ks: tuple, d: int, ls: tuple, probes: int = 2, seed: int = 0) -> tuple[bool, str]:
    """measure(tB) = measure(B) exactly, and the engine maps B into the symbolic image."""
    from .actions import act_Y_t, act_Y_t_inv
    from .spaces import member

    src = source_cylinder(p, q, ks, d, ls)
    image = t_image_of_cylinder(p, q, ks, d, ls)
    m_img = sum((measure(c) for c in image), Fraction(0))
    ok = m_img == measure(src)
    for k in range(probes):
        y = forced_point(p, q, src, seed + k)
        if not member(y, src) or not any(member(act_Y_t(y), c) for c in image):
            ok = False
        img_c = image[k % len(image)]
        z = forced_point(p, q, img_c, seed + 1000 + k)
        if not member(act_Y_t_inv(z), src):
            ok = False
    return ok, f"measure(B)={measure(src)} measure(tB)={m_img}"


def t_measure_cylinders(p: int, q: int, limit: int | None = None, seed: int = 0):
    """All (ks, d, ls) with 1 <= N, M <= 3, or a random subset of ``limit`` of them."""
    shapes = []
    for N in range(1, 4):
        for M in range(1, 4):
            shapes.append((N, M))
    if limit is None:
        for N, M in shapes:
            for ks in itertools.product(range(q), repeat=N):
                for ls in itertools.product(range(p), repeat=M):
                    for d in range(p * q):
                        yield ks, d, ls
        return
    rng = random.Random(seed)
    for _ in range(limit):
        N, M = rng.choice(shapes)
        yield (
            tuple(rng.randrange(q) for _ in range(N)),
            rng.randrange(p * q),
            tuple(rng.randrange(p) for _ in range(M)),
        )


def theta_report(cfg: StabilityConfig, s: AffineElement, seeds: int = 100, cap: int = 64) -> VerificationReport:
    from .actions import theta_stabilization

    found = []
    for k in range(seeds):
        K = theta_stabilization(s, y_point(cfg.p, cfg.q, 7_000_000 + k), cap)
        found.append(K)
    n_ok = sum(1 for K in found if K is not None and K <= cap)
    return VerificationReport(
        claim="lem-theta",
        mode="mc",
        params={"p": cfg.p, "q": cfg.q, "s": str(s.x), "seeds": seeds, "cap": cap},
        value=n_ok,
        bound=99 * seeds // 100,
        passed=n_ok >= 99 * seeds // 100,
        detail=f"max K={max((K for K in found if K is not None), default=None)}",
    )
