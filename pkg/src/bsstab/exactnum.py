"""Exact digit arithmetic on l-adic windows and (q/p)-expansions.

Windows carry value-mod-l^D semantics: the big integer is the reference
representation and the digit list is only a view of it.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd


class PrecisionExhausted(ArithmeticError):
    pass


class NotDivisible(ArithmeticError):
    pass


class DepthInsufficient(ArithmeticError):
    pass


@dataclass(frozen=True)
class AdicWindow:
    """The low ``precision`` digits of an element of E_l."""

    base: int
    value: int
    precision: int

    def __post_init__(self):
        if self.base < 1:
            raise ValueError("base must be positive")
        if self.precision < 0:
            raise ValueError("precision must be non-negative")
        object.__setattr__(self, "value", self.value % self.modulus)

    @classmethod
    def from_digits(cls, base: int, digits) -> AdicWindow:
        value = 0
        for d in reversed(digits):
            if not 0 <= d < base:
                raise ValueError(f"digit {d} out of range for base {base}")
            value = value * base + d
        return cls(base, value, len(digits))

    @property
    def modulus(self) -> int:
        return self.base**self.precision

    @property
    def digits(self) -> tuple[int, ...]:
        out = []
        v = self.value
        for _ in range(self.precision):
            v, d = divmod(v, self.base)
            out.append(d)
        return tuple(out)

    def digit(self, k: int) -> int:
        if not 0 <= k < self.precision:
            raise PrecisionExhausted(f"digit {k} outside precision {self.precision}")
        return self.value // self.base**k % self.base

    def truncate(self, precision: int) -> AdicWindow:
        if precision > self.precision:
            raise PrecisionExhausted(f"cannot extend precision {self.precision} to {precision}")
        return AdicWindow(self.base, self.value, precision)

    def __str__(self):
        return f"[{','.join(map(str, self.digits))}]_{self.base}"


def odometer_add(w: AdicWindow, k: int) -> AdicWindow:
    """Add the integer ``k`` with carries running toward higher digits."""
    return AdicWindow(w.base, w.value + k, w.precision)


def eta(w: AdicWindow, p: int) -> int:
    """The residue of ``w`` in {0..p-1}; ``w - eta`` lies in p*E_pq."""
    if w.precision < 1:
        raise PrecisionExhausted("eta needs at least one digit")
    return w.value % p


def zeta(w: AdicWindow, q: int) -> int:
    if w.precision < 1:
        raise PrecisionExhausted("zeta needs at least one digit")
    return w.value % q


def div_p_mul_q(w: AdicWindow, p: int, q: int) -> AdicWindow:
    """(q/p) * w for w in p*E_pq; one digit of precision is lost."""
    if w.base != p * q:
        raise ValueError("window base must be pq")
    if w.value % p:
        raise NotDivisible(f"{w.value} is not divisible by {p}")
    if w.precision < 2:
        raise PrecisionExhausted("division needs at least two digits")
    return AdicWindow(w.base, w.value // p * q, w.precision - 1)


def div_q_mul_p(w: AdicWindow, p: int, q: int) -> AdicWindow:
    """(p/q) * w for w in q*E_pq; mirror image of :func:`div_p_mul_q`."""
    if w.base != p * q:
        raise ValueError("window base must be pq")
    if w.value % q:
        raise NotDivisible(f"{w.value} is not divisible by {q}")
    if w.precision < 2:
        raise PrecisionExhausted("division needs at least two digits")
    return AdicWindow(w.base, w.value // q * p, w.precision - 1)


def adic_valuation(c: int, base: int) -> int:
    """Largest s with base^s dividing c (c != 0), by repeated squaring."""
    if c == 0:
        raise ValueError("zero has infinite valuation")
    powers = [base]
    while c % powers[-1] == 0:
        powers.append(powers[-1] * powers[-1])
    v = 0
    for i in range(len(powers) - 2, -1, -1):
        if c % powers[i] == 0:
            c //= powers[i]
            v += 1 << i
    return v


class LazySum:
    """Digits of (stream + c) in base ``base`` read from a lazy digit stream.

    The valuation of c is stripped once, so digits below it are read straight
    from the stream and a carry walk starts where c actually begins.
    """

    def __init__(self, base: int, c: int):
        self.base = base
        if c == 0:
            self.low, self.c, self.width = 0, 0, 0
            return
        self.low = adic_valuation(c, base)
        self.c = c // base**self.low
        width = max(1, int(abs(self.c).bit_length() / base.bit_length()))
        while base**width <= abs(self.c):
            width += 1
        self.width = width

    def digit(self, digit, k: int) -> int:
        c = self.c
        if c == 0 or k < self.low:
            return digit(k)
        s = self.low
        base = self.base
        k -= s
        width = self.width
        if k < width + 1:
            low = 0
            for i in range(k, -1, -1):
                low = low * base + digit(i + s)
            return (low + c) // base**k % base
        low = 0
        for i in range(width - 1, -1, -1):
            low = low * base + digit(i + s)
        carry = (low + c) // base**width  # -1, 0 or 1
        if carry == 0:
            return digit(k + s)
        absorbing = base - 1 if carry > 0 else 0
        for i in range(width, k):
            if digit(i + s) != absorbing:
                return digit(k + s)
        return (digit(k + s) + carry) % base


def lazy_add_digit(digit, base: int, c: int, k: int) -> int:
    """Digit ``k`` of (stream + c) where ``digit(i)`` reads the stream lazily.

    Only as many digits are read as the carry actually reaches.
    """
    return LazySum(base, c).digit(digit, k)


def _valuation(n: int, f: int) -> int:
    if f == 1 or n % f:
        return 0
    return adic_valuation(n, f)


def is_pq_number(x: Fraction, p: int, q: int) -> bool:
    d = x.denominator
    for f in (p, q):
        if f > 1:
            d //= f ** _valuation(d, f)
    return d == 1


def split_pq_number(x: Fraction, p: int, q: int) -> dict[int, int]:
    """Integers c_i with x = sum c_i (q/p)^i, supported on at most three positions.

    Positions used are -beta, 0 and alpha where x has denominator p^alpha q^beta.
    """
    if x.denominator == 1:
        return {0: x.numerator} if x.numerator else {}
    if not is_pq_number(x, p, q):
        raise ValueError(f"{x} is not in Z[1/{p},1/{q}]")
    alpha = _valuation(x.denominator, p)
    beta = _valuation(x.denominator, q)
    if alpha == 0 and beta == 0:
        return {0: x.numerator} if x.numerator else {}
    # N = c_lo p^(alpha+beta) + c_hi q^(alpha+beta)
    n = x.numerator
    s = alpha + beta
    mod = q**s
    c_lo = n * pow(p**s, -1, mod) % mod
    if 2 * c_lo > mod:
        # balanced residue keeps small inputs small, so carries stay short
        c_lo -= mod
    c_hi = (n - c_lo * p**s) // mod
    out: dict[int, int] = {}
    for pos, c in ((-beta, c_lo), (alpha, c_hi)):
        if c:
            out[pos] = out.get(pos, 0) + c
    return out


def carry_neg(digits: list[int], start: int, c: int, p: int, q: int) -> int:
    """Add ``c`` at list index ``start`` of a negative block (index -1 is position -1).

    ``digits`` is ordered from lowest position to position -1 and is modified in
    place. Returns the carry into the integer part.
    """
    i = start
    n = len(digits)
    while c and i < n:
        f, digits[i] = divmod(digits[i] + c, q)
        c = f * p
        i += 1
    return c


def carry_pos(digits: list[int], start: int, c: int, p: int, q: int) -> int:
    """Add ``c`` at list index ``start`` of a positive block (index 0 is position 1)."""
    i = start
    while c and i >= 0:
        f, digits[i] = divmod(digits[i] + c, p)
        c = f * q
        i -= 1
    return c


@dataclass(frozen=True)
class MixedRadixExpansion:
    """A finite window of sum y_n (q/p)^n + sum y_j (pq)^j.

    ``neg`` holds digits at positions -len(neg) .. -1 (lowest first), each in
    {0..q-1}; ``pos`` holds digits at positions 1 .. len(pos), each in {0..p-1}.
    With p and q swapped the same type covers R_{l,p}.
    """

    p: int
    q: int
    neg: tuple[int, ...]
    integer: AdicWindow
    pos: tuple[int, ...] = ()

    def __post_init__(self):
        if self.p < 1 or self.q < 2 or gcd(self.p, self.q) != 1:
            raise ValueError(f"need coprime p >= 1, q >= 2, got {self.p}, {self.q}")
        if self.integer.base != self.p * self.q:
            raise ValueError("integer part must have base pq")
        object.__setattr__(self, "neg", tuple(self.neg))
        object.__setattr__(self, "pos", tuple(self.pos))

    @property
    def low_position(self) -> int:
        return -len(self.neg)

    def in_range(self) -> bool:
        return all(0 <= d < self.q for d in self.neg) and all(0 <= d < self.p for d in self.pos)

    def digit(self, position: int) -> int:
        if position < 0:
            if -position > len(self.neg):
                raise PrecisionExhausted(f"negative position {position} not known")
            return self.neg[len(self.neg) + position]
        if position > 0:
            if position > len(self.pos):
                if self.p == 1:
                    return 0
                raise PrecisionExhausted(f"positive position {position} not known")
            return self.pos[position - 1]
        raise ValueError("position 0 is the integer part; use .integer")

    def fraction_part(self) -> Fraction:
        r = Fraction(self.q, self.p)
        total = Fraction(0)
        for i, d in enumerate(self.neg):
            total += d * r ** (i - len(self.neg))
        for m, d in enumerate(self.pos, start=1):
            total += d * r**m
        return total

    def value(self) -> Fraction:
        """Exact rational value with the integer part truncated at its precision."""
        return self.fraction_part() + self.integer.value

    def __str__(self):
        neg = " ".join(map(str, self.neg))
        pos = " ".join(map(str, self.pos))
        return f"({neg} | {self.integer} | {pos})"


def carry_normalize(e: MixedRadixExpansion) -> MixedRadixExpansion:
    """Bring every digit back in range.

    q units at a negative position l become p units at l+1, and p units at a
    positive position m become q units at m-1; whatever leaves the blocks is
    added to the integer part by odometer addition.
    """
    neg = list(e.neg)
    pos = list(e.pos)
    carry = 0
    c = 0
    for i in range(len(neg)):
        f, neg[i] = divmod(neg[i] + c, e.q)
        c = f * e.p
    carry += c
    c = 0
    for i in range(len(pos) - 1, -1, -1):
        f, pos[i] = divmod(pos[i] + c, e.p)
        c = f * e.q
    carry += c
    return MixedRadixExpansion(e.p, e.q, tuple(neg), odometer_add(e.integer, carry), tuple(pos))


def add_at(e: MixedRadixExpansion, position: int, k: int) -> MixedRadixExpansion:
    """Add k (q/p)^position and renormalize."""
    neg = list(e.neg)
    pos = list(e.pos)
    if position < 0:
        if -position > len(neg):
            raise PrecisionExhausted(f"negative position {position} not known")
        carry = carry_neg(neg, len(neg) + position, k, e.p, e.q)
    elif position > 0:
        if position > len(pos):
            if e.p != 1:
                raise PrecisionExhausted(f"positive position {position} not known")
            pos.extend([0] * (position - len(pos)))
        carry = carry_pos(pos, position - 1, k, e.p, e.q)
    else:
        carry = k
    return MixedRadixExpansion(e.p, e.q, tuple(neg), odometer_add(e.integer, carry), tuple(pos))


def requantize(x: Fraction, p: int, q: int, depth: int, max_neg: int | None = None) -> MixedRadixExpansion:
    """The canonical expansion of x in Z[1/p, 1/q].

    Digits are fixed lowest position first: x is split into at most three
    integer multiples of powers of q/p and the carries are then normalized.
    """
    x = Fraction(x)
    parts = split_pq_number(x, p, q)
    n_neg = max([-i for i in parts if i < 0], default=0)
    n_pos = max([i for i in parts if i > 0], default=0)
    if p == 1:
        n_pos = 0
    if max_neg is not None and n_neg > max_neg:
        raise DepthInsufficient(f"{x} needs {n_neg} negative positions, only {max_neg} allowed")
    e = MixedRadixExpansion(p, q, (0,) * n_neg, AdicWindow(p * q, 0, depth), (0,) * n_pos)
    for position, c in sorted(parts.items()):
        e = add_at(e, position, c)
    neg = e.neg
    while neg and neg[0] == 0:
        neg = neg[1:]
    pos = e.pos
    while pos and pos[-1] == 0:
        pos = pos[:-1]
    return MixedRadixExpansion(p, q, neg, e.integer, pos)


def mixed_radix_digits(u: int, n: int, big: int, small: int) -> list[int]:
    """Digits z_0..z_{n-1} in {0..big-1} with u = sum z_k (big/small)^k mod big^n.

    ``small`` must be a unit modulo ``big``.
    """
    out = []
    for _ in range(n):
        z = u % big
        out.append(z)
        u = (u - z) // big * small
    return out


def mixed_radix_value(digits, big: int, small: int) -> int:
    """sum z_k big^k small^(n-1-k) for digits z_0..z_{n-1}."""
    acc = 0
    bk = 1
    for z in digits:
        acc = acc * small + z * bk
        bk *= big
    return acc
