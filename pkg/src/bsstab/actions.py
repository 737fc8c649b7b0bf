"""Group actions on X (odometer), Y (affine group on mixed-radix tapes), Z (co-induced) and W.

Two independent Y engines are provided. The step engine applies the
generator formulas digit by digit on a finite window; the normal-form engine
composes affine transforms and evaluates t^m in closed form, reading the tape
lazily. Tests cross-check one against the other.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .bsgroup import AffineElement, BSGroup, Word, epsilon, t_exponent_sum
from .exactnum import (
    AdicWindow,
    LazySum,
    MixedRadixExpansion,
    PrecisionExhausted,
    add_at,
    div_p_mul_q,
    div_q_mul_p,
    eta,
    lazy_add_digit,
    mixed_radix_digits,
    mixed_radix_value,
    odometer_add,
    split_pq_number,
    zeta,
)
from .spaces import Tape, TapePoint, ZPoint, x_spec, y_spec

YTransform = AffineElement


# ---------------------------------------------------------------------------
# step engine on finite windows


def y_t(e: MixedRadixExpansion) -> MixedRadixExpansion:
    """t y = (shifted Y_-, y_-1 + (q/p)(y_0 - eta(y_0)), (eta(y_0), y_1, ...))."""
    if not e.neg:
        raise PrecisionExhausted("t needs the digit at position -1")
    h = eta(e.integer, e.p)
    w = div_p_mul_q(odometer_add(e.integer, -h), e.p, e.q)
    w = odometer_add(w, e.neg[-1])
    return MixedRadixExpansion(e.p, e.q, e.neg[:-1], w, (h,) + e.pos)


def y_t_inv(e: MixedRadixExpansion) -> MixedRadixExpansion:
    """t^-1 y = ((..., y_-1, zeta(y_0)), (p/q)(y_0 - zeta(y_0)) + y_1, (y_2, ...))."""
    if e.pos:
        y1, rest = e.pos[0], e.pos[1:]
    elif e.p == 1:
        y1, rest = 0, ()
    else:
        raise PrecisionExhausted("t^-1 needs the digit at position 1")
    z = zeta(e.integer, e.q)
    w = div_q_mul_p(odometer_add(e.integer, -z), e.p, e.q)
    w = odometer_add(w, y1)
    return MixedRadixExpansion(e.p, e.q, e.neg + (z,), w, rest)


def apply_steps(e: MixedRadixExpansion, steps) -> MixedRadixExpansion:
    """Apply generator steps right to left as written: the last step acts first.

    A step is ("t", +1 / -1) or ("a", i, k) meaning add k (q/p)^i.
    """
    for st in reversed(steps):
        if st[0] == "t":
            for _ in range(abs(st[1])):
                e = y_t(e) if st[1] > 0 else y_t_inv(e)
        else:
            e = add_at(e, st[1], st[2])
    return e


def steps_to_affine(steps, p: int, q: int) -> AffineElement:
    out = AffineElement(p, q)
    for st in steps:
        if st[0] == "t":
            out = out * AffineElement(p, q, Fraction(0), st[1])
        else:
            out = out * AffineElement(p, q, st[2] * Fraction(q, p) ** st[1], 0)
    return out


def word_to_steps(w: Word) -> list:
    return [("a", 0, e) if g == "a" else ("t", e) for g, e in w.syllables]


# ---------------------------------------------------------------------------
# closed-form shifts used by the normal-form engine


def y_shift(e: MixedRadixExpansion, m: int) -> MixedRadixExpansion:
    """t^m applied to a window in one pass; loses |m| digits of integer precision."""
    if m == 0:
        return e
    p, q = e.p, e.q
    base = p * q
    v, D = e.integer.value, e.integer.precision
    l = abs(m)
    if D <= l:
        raise PrecisionExhausted(f"shift by {m} needs more than {l} integer digits, have {D}")
    if m < 0:
        pos = e.pos
        if len(pos) < l:
            if p != 1:
                raise PrecisionExhausted(f"shift by {m} needs {l} positive digits")
            pos = pos + (0,) * (l - len(pos))
        big = p**l * v + q * mixed_radix_value(pos[:l], q, p)
        ql = q**l
        u = big * pow(p, -l, ql) % ql
        zs = mixed_radix_digits(u, l, q, p)
        low = p * mixed_radix_value(zs, q, p)
        w = AdicWindow(base, (big - low) // ql, D - l)
        return MixedRadixExpansion(p, q, e.neg + tuple(zs), w, pos[l:])
    if len(e.neg) < l:
        raise PrecisionExhausted(f"shift by {m} needs {l} negative digits")
    big = q**l * v + p * mixed_radix_value(e.neg[-l:], q, p)
    pl = p**l
    if p == 1:
        es = [0] * l
        low = 0
    else:
        u = big * pow(q, -l, pl) % pl
        es = mixed_radix_digits(u, l, p, q)
        low = q * mixed_radix_value(es, p, q)
    w = AdicWindow(base, (big - low) // pl, D - l)
    return MixedRadixExpansion(p, q, e.neg[:-l], w, tuple(reversed(es)) + e.pos)


def base_window(tape: Tape, p: int, q: int, n_neg: int, depth: int, n_pos: int) -> MixedRadixExpansion:
    neg = tuple(tape.digit("y-", n) for n in range(-n_neg, 0))
    pos = tuple(tape.digit("y+", m) for m in range(1, n_pos + 1)) if p > 1 else ()
    return MixedRadixExpansion(p, q, neg, AdicWindow(p * q, tape.value("y0", depth), depth), pos)


# ---------------------------------------------------------------------------
# points


class XPoint(TapePoint):
    """A point of X = binary sequences; t acts by adding ``offset`` with carry."""

    def __init__(self, tape: Tape, offset: int = 0):
        super().__init__(tape.spec, tape.seed, tape=tape)
        self.offset = offset

    def digit(self, family: str, index: int) -> int:
        return self.bit(index)

    def bit(self, i: int) -> int:
        if self.offset == 0:
            return self.tape.digit("x", i)
        return lazy_add_digit(lambda k: self.tape.digit("x", k), 2, self.offset, i)

    def low_value(self, nbits: int) -> int:
        """x_0 + 2 x_1 + ... + 2^(nbits-1) x_{nbits-1}."""
        raw = self.tape.value("x", nbits)
        if self.offset == 0:
            return raw
        return (raw + self.offset) % (1 << nbits)


def act_X(k: int, x: XPoint) -> XPoint:
    return XPoint(x.tape, x.offset + k)


class YPoint(TapePoint):
    """The image of a tape point of Y under an affine transform (x, n).

    With n = 0 digits are read lazily, following carries only as far as they
    go. Otherwise a finite window of the tape is materialized, shifted in
    closed form and the translation added; extents grow on demand.
    """

    def __init__(self, tape: Tape, p: int, q: int, transform: AffineElement | None = None):
        super().__init__(tape.spec, tape.seed, tape=tape)
        self.p = p
        self.q = q
        self.transform = transform if transform is not None else AffineElement(p, q)
        self._lazy = None
        self._window: MixedRadixExpansion | None = None
        self._extent = (0, 0, 0)

    def moved(self, g: AffineElement) -> YPoint:
        return YPoint(self.tape, self.p, self.q, g * self.transform)

    # lazy path -----------------------------------------------------------
    def _lazy_state(self):
        if self._lazy is None:
            p, q = self.p, self.q
            neg: dict[int, int] = {}
            pos: dict[int, int] = {}
            carry = 0
            for i, c in sorted(split_pq_number(self.transform.x, p, q).items()):
                if i < 0:
                    j = i
                    while c and j < 0:
                        d = neg[j] if j in neg else self.tape.digit("y-", j)
                        f, neg[j] = divmod(d + c, q)
                        c = f * p
                        j += 1
                    carry += c
                elif i > 0:
                    j = i
                    while c and j > 0:
                        d = pos[j] if j in pos else (self.tape.digit("y+", j) if p > 1 else 0)
                        f, pos[j] = divmod(d + c, p)
                        c = f * q
                        j -= 1
                    carry += c
                else:
                    carry += c
            self._lazy = (neg, pos, LazySum(p * q, carry))
        return self._lazy

    # materialized path ---------------------------------------------------
    def _materialize(self, n_neg: int, depth: int, n_pos: int) -> MixedRadixExpansion:
        cn, cd, cp = self._extent
        if self._window is not None and n_neg <= cn and depth <= cd and n_pos <= cp:
            return self._window
        n_neg = max(n_neg, cn, 8)
        depth = max(depth, cd, 8)
        n_pos = max(n_pos, cp, 8)
        if self._window is not None:
            n_neg, depth, n_pos = max(n_neg, 2 * cn), max(depth, 2 * cd), max(n_pos, 2 * cp)
        parts = split_pq_number(self.transform.x, self.p, self.q)
        n_neg = max([n_neg] + [-i for i in parts if i < 0])
        n_pos = max([n_pos] + [i for i in parts if i > 0])
        m = self.transform.n
        l = abs(m)
        if m < 0:
            bn, bd, bp = max(0, n_neg - l), depth + l, n_pos + l
        else:
            bn, bd, bp = n_neg + l, depth + l, max(0, n_pos - l)
        e = base_window(self.tape, self.p, self.q, bn, bd, bp)
        e = y_shift(e, m)
        for i, c in sorted(parts.items()):
            e = add_at(e, i, c)
        self._window = e
        self._extent = (n_neg, depth, n_pos)
        return e

    # queries -------------------------------------------------------------
    def digit(self, family: str, index: int) -> int:
        p = self.p
        if family == "y+" and p == 1:
            return 0
        if self.transform.n == 0:
            neg, pos, carry = self._lazy_state()
            if family == "y-":
                return neg[index] if index in neg else self.tape.digit("y-", index)
            if family == "y+":
                return pos[index] if index in pos else self.tape.digit("y+", index)
            return carry.digit(lambda k: self.tape.digit("y0", k), index)
        if family == "y-":
            return self._materialize(-index, 1, 0).digit(index)
        if family == "y+":
            return self._materialize(0, 1, index).digit(index)
        return self._materialize(0, index + 1, 0).integer.digit(index)

    def y0_value(self, start: int, count: int) -> int:
        """sum_{k<count} Y0-digit(start+k) * (pq)^k."""
        b = self.p * self.q
        if self.transform.n != 0:
            w = self._materialize(0, start + count, 0).integer
            return w.value // b**start % b**count
        if not self.transform.x:
            digit = self.tape.digit
            return sum(digit("y0", start + k) * b**k for k in range(count))
        return sum(self.digit("y0", start + k) * b**k for k in range(count))

    def query(self, n_neg: int, depth: int, n_pos: int) -> tuple:
        """Digits at positions -n_neg..-1, Y0 digits 0..depth-1, positions 1..n_pos."""
        return (
            tuple(self.digit("y-", n) for n in range(-n_neg, 0)),
            tuple(self.digit("y0", k) for k in range(depth)),
            tuple(self.digit("y+", m) for m in range(1, n_pos + 1)),
        )


def y_point(p: int, q: int, seed: int, overrides: dict | None = None) -> YPoint:
    return YPoint(Tape(y_spec(p, q), seed, overrides), p, q)


def x_point(seed: int, overrides: dict | None = None) -> XPoint:
    return XPoint(Tape(x_spec(), seed, overrides))


def act_Y_a(i: int, k: int, y: YPoint) -> YPoint:
    return y.moved(AffineElement(y.p, y.q, k * Fraction(y.q, y.p) ** i, 0))


def act_Y_t(y: YPoint) -> YPoint:
    return y.moved(AffineElement(y.p, y.q, Fraction(0), 1))


def act_Y_t_inv(y: YPoint) -> YPoint:
    return y.moved(AffineElement(y.p, y.q, Fraction(0), -1))


def act_Z(g: Word, z: ZPoint) -> ZPoint:
    return ZPoint(z.seed, z.p, z.q, z.group, parent=z, g=g)


def z_point(group: BSGroup, p: int, q: int, seed: int) -> ZPoint:
    return ZPoint(seed, p, q, group)


@dataclass
class WPoint:
    x: XPoint | None
    y: YPoint
    z: ZPoint | None


def w_point(group: BSGroup, p: int, q: int, seed: int, with_x: bool = True, with_z: bool = True) -> WPoint:
    """Components are keyed by sub-seeds derived from one master seed."""
    x = x_point(_subseed(seed, 0)) if with_x else None
    y = y_point(p, q, _subseed(seed, 1))
    z = z_point(group, p, q, _subseed(seed, 2)) if with_z else None
    return WPoint(x, y, z)


def _subseed(seed: int, k: int) -> int:
    return seed * 4 + k


def act_W(g: Word, w: WPoint) -> WPoint:
    p, q = w.y.p, w.y.q
    x = act_X(t_exponent_sum(g), w.x) if w.x is not None else None
    y = w.y.moved(epsilon(g, p, q))
    z = act_Z(g, w.z) if w.z is not None else None
    return WPoint(x, y, z)


def act_W1(g: Word, w: WPoint) -> WPoint:
    return act_W(g, WPoint(None, w.y, w.z))


# ---------------------------------------------------------------------------
# stabilization under t^-k and the tail sets A_k


def theta_stabilization(s: AffineElement, y: YPoint, depth_cap: int = 64, probe: int = 16):
    """Smallest K with Y0(t^-k s y) = Y0(t^-k y) on ``probe`` digits for K <= k <= cap.

    Returns None when even k = cap disagrees. Evaluation walks t^-1 once per k
    on a window of the untransformed tape and adds (p/q)^k s.x to it.
    """
    if s.n != 0:
        raise ValueError("s must lie in the translation subgroup")
    p, q = y.p, y.q
    parts0 = split_pq_number(s.x, p, q)
    reach = max([-i for i in parts0 if i < 0], default=0)
    top = max([i for i in parts0 if i > 0], default=0)
    e = base_window(y.tape, p, q, reach + 2, probe + depth_cap + top + 4, depth_cap + top + 2)
    agree = []
    ratio = Fraction(p, q)
    for k in range(depth_cap + 1):
        shifted = e
        for i, c in sorted(split_pq_number(ratio**k * s.x, p, q).items()):
            shifted = add_at(shifted, i, c)
        b = p * q
        agree.append(shifted.integer.value % b**probe == e.integer.value % b**probe)
        if k < depth_cap:
            e = y_t_inv(e)
    if not agree[-1]:
        return None
    K = depth_cap
    while K > 0 and agree[K - 1]:
        K -= 1
    return K


def tau_digits(y: YPoint, k: int) -> list[int]:
    """tau_m(y) = digit -1 of t^-(m+1) y for m = 0..k, by repeated t^-1 steps."""
    p, q = y.p, y.q
    e = base_window(y.tape, p, q, 1, k + 3, k + 1)
    out = []
    for _ in range(k + 1):
        e = y_t_inv(e)
        out.append(e.neg[-1])
    return out


def tail_set_estimate(p: int, q: int, k: int, samples: int, seed: int = 0):
    """Frequency of A_k = {tau_m >= q - p for all m <= k} with a 99% binomial interval."""
    from .montecarlo import binomial_ci

    hits = 0
    for s in range(samples):
        y = y_point(p, q, seed * 1_000_003 + s)
        if all(d >= q - p for d in tau_digits(y, k)):
            hits += 1
    lo, hi = binomial_ci(hits, samples)
    return hits / samples, lo, hi


def random_steps(rng: random.Random, length: int, max_pos: int = 3, max_k: int = 4) -> list:
    out = []
    for _ in range(length):
        if rng.random() < 0.5:
            out.append(("t", rng.choice((-1, 1))))
        else:
            out.append(("a", rng.randint(-max_pos, max_pos), rng.randint(-max_k, max_k)))
    return out


def step_extents(steps, n_neg: int, depth: int, n_pos: int) -> tuple[int, int, int]:
    """Window extents large enough for ``steps`` followed by the given query."""
    shifts = sum(1 for st in steps if st[0] == "t")
    reach = max([abs(st[1]) for st in steps if st[0] == "a"], default=0)
    pad = shifts + reach + 2
    return n_neg + pad, depth + shifts + 2, n_pos + pad
