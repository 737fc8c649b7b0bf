"""SL(3,Z) acting on prime-level modules (Z/p)^3: coset spaces, the factor map pi,
greedy flip sets and the commuting sequence U_n.

Matrices are flat row-major 9-tuples. An element of Lambda = SL(3,Z) is kept
modulo P = p_0 * ... * p_nMax, which is all any level can see.
"""
from __future__ import annotations

import itertools
import math
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .montecarlo import binomial_ci, chi_square_uniform
from .report import VerificationReport
from .spaces import SpaceSpec, Tape
from .stability import ConfigError

IDENTITY3 = (1, 0, 0, 0, 1, 0, 0, 0, 1)


def mat_mul(a, b, m: int | None = None) -> tuple:
    out = tuple(
        a[3 * i] * b[j] + a[3 * i + 1] * b[3 + j] + a[3 * i + 2] * b[6 + j] for i in range(3) for j in range(3)
    )
    return out if m is None else tuple(v % m for v in out)


def mat_vec(a, v, m: int) -> tuple:
    return tuple((a[3 * i] * v[0] + a[3 * i + 1] * v[1] + a[3 * i + 2] * v[2]) % m for i in range(3))


def det3(a) -> int:
    return (
        a[0] * (a[4] * a[8] - a[5] * a[7])
        - a[1] * (a[3] * a[8] - a[5] * a[6])
        + a[2] * (a[3] * a[7] - a[4] * a[6])
    )


def adjugate(a) -> tuple:
    c = lambda r0, r1, c0, c1: a[3 * r0 + c0] * a[3 * r1 + c1] - a[3 * r0 + c1] * a[3 * r1 + c0]  # noqa: E731
    return (
        c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2),
        -c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2),
        c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1),
    )


def mat_inv(a, m: int) -> tuple:
    """Inverse modulo m of a matrix whose determinant is a unit mod m."""
    d = pow(det3(a) % m, -1, m)
    return tuple(v * d % m for v in adjugate(a))


def elementary(i: int, j: int, s: int = 1) -> tuple:
    """I + s e_ij."""
    if i == j:
        raise ValueError("elementary matrices need i != j")
    out = list(IDENTITY3)
    out[3 * i + j] = s
    return tuple(out)


GENERATORS = tuple((i, j, s) for i in range(3) for j in range(3) if i != j for s in (1, -1))


def word_matrix(word, m: int) -> tuple:
    """Product of the elementary matrices of ``word`` (a sequence of (i, j, s)) mod m."""
    out = IDENTITY3
    for i, j, s in word:
        out = mat_mul(out, elementary(i, j, s), m)
    return out


def random_lambda_word(rng: random.Random, max_len: int = 12) -> tuple:
    return tuple(rng.choice(GENERATORS) for _ in range(rng.randint(1, max_len)))


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, math.isqrt(n) + 1))


def sl3_order(p: int) -> int:
    return p**3 * (p**3 - 1) * (p**2 - 1)


def generated_group_size(p: int, limit: int = 10**5) -> int:
    """Size of the subgroup of SL(3, Z/p) generated by the elementary matrices (BFS)."""
    gens = [elementary(i, j, s % p) for i, j, s in GENERATORS]
    seen = {IDENTITY3}
    todo = deque([IDENTITY3])
    while todo and len(seen) <= limit:
        g = todo.popleft()
        for e in gens:
            h = mat_mul(g, e, p)
            if h not in seen:
                seen.add(h)
                todo.append(h)
    return len(seen)


def enumerate_sl3(p: int) -> list[tuple]:
    return [
        m for m in itertools.product(range(p), repeat=9) if det3(m) % p == 1
    ]


# ---------------------------------------------------------------------------
# configuration and the modules H_n


@dataclass(frozen=True)
class VaesConfig:
    primes: tuple[int, ...] = (2, 3, 5, 7, 11)
    nmax: int | None = None
    samples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        primes = tuple(int(p) for p in self.primes)
        object.__setattr__(self, "primes", primes)
        if not primes:
            raise ConfigError("need at least one prime")
        bad = [p for p in primes if not is_prime(p)]
        if bad:
            raise ConfigError(f"not prime: {bad}")
        if len(set(primes)) != len(primes):
            raise ConfigError(f"primes must be mutually distinct, got {list(primes)}")
        if list(primes) != sorted(primes):
            raise ConfigError(f"primes must be increasing, got {list(primes)}")
        nmax = len(primes) - 1 if self.nmax is None else self.nmax
        if not 0 <= nmax < len(primes):
            raise ConfigError(f"nmax={nmax} needs 0 <= nmax < number of primes ({len(primes)})")
        object.__setattr__(self, "nmax", nmax)

    @property
    def levels(self) -> range:
        return range(self.nmax + 1)

    @property
    def modulus(self) -> int:
        return math.prod(self.primes[: self.nmax + 1])

    def order(self, n: int) -> int:
        return self.primes[n] ** 3

    def h(self, n: int) -> tuple[int, int, int]:
        """The fixed non-neutral element of H_n: first nonzero triple in lexicographic order."""
        return (0, 0, 1)


def elements(p: int, dim: int = 3):
    return itertools.product(range(p), repeat=dim)


def vadd(u, v, m: int) -> tuple:
    return tuple((a + b) % m for a, b in zip(u, v))


def build_I_n(p: int, h) -> frozenset:
    """A greedy subset I of (Z/p)^dim with (h + I) disjoint from I and |I| = ceil(|H|/3).

    Elements are taken in lexicographic order; a candidate is admissible when
    it avoids L - h, L and L + h for the set L chosen so far.
    """
    h = tuple(v % p for v in h)
    dim = len(h)
    if not any(h):
        raise ValueError("h must be non-neutral")
    size = -(-(p**dim) // 3)
    neg = tuple(-v % p for v in h)
    chosen: list[tuple] = []
    blocked: set[tuple] = set()
    for e in elements(p, dim):
        if len(chosen) == size:
            break
        if e in blocked:
            continue
        chosen.append(e)
        blocked.update((e, vadd(e, h, p), vadd(e, neg, p)))
    if len(chosen) < size:
        raise AssertionError("greedy selection ran out of candidates")
    return frozenset(chosen)


def flip_gap(p: int, h, I: frozenset) -> Fraction:
    """|(h + I) symmetric-difference I| / |H|."""
    h = tuple(v % p for v in h)
    moved = {vadd(e, h, p) for e in I}
    return Fraction(len(moved ^ set(I)), p ** len(h))


# ---------------------------------------------------------------------------
# G_0 = K x| Lambda


@dataclass(frozen=True)
class G0Element:
    """(k, lam) acting on Y by y -> k + lam . y; k is {level: triple}, lam a matrix mod P."""

    k: tuple[tuple[int, tuple[int, int, int]], ...]
    lam: tuple

    @classmethod
    def make(cls, cfg: VaesConfig, k: dict | None = None, lam=IDENTITY3) -> G0Element:
        clean = {}
        for n, v in (k or {}).items():
            p = cfg.primes[n]
            v = tuple(x % p for x in v)
            if any(v):
                clean[n] = v
        return cls(tuple(sorted(clean.items())), tuple(x % cfg.modulus for x in lam))

    @classmethod
    def from_word(cls, cfg: VaesConfig, word) -> G0Element:
        return cls.make(cfg, lam=word_matrix(word, cfg.modulus))

    @classmethod
    def from_h(cls, cfg: VaesConfig, n: int, v) -> G0Element:
        return cls.make(cfg, {n: v})

    def kdict(self) -> dict:
        return dict(self.k)

    def mul(self, cfg: VaesConfig, other: G0Element) -> G0Element:
        k = self.kdict()
        for n, v in other.k:
            p = cfg.primes[n]
            k[n] = vadd(k.get(n, (0, 0, 0)), mat_vec(self.lam, v, p), p)
        return G0Element.make(cfg, k, mat_mul(self.lam, other.lam, cfg.modulus))

    def inverse(self, cfg: VaesConfig) -> G0Element:
        inv = mat_inv(self.lam, cfg.modulus)
        k = {n: tuple(-x for x in mat_vec(inv, v, cfg.primes[n])) for n, v in self.k}
        return G0Element.make(cfg, k, inv)

    def is_identity(self) -> bool:
        return not self.k and self.lam == IDENTITY3


# ---------------------------------------------------------------------------
# points of X and Y


def _x_spec(cfg: VaesConfig) -> SpaceSpec:
    return SpaceSpec(tuple((f"x{n}", "N", p) for n, p in enumerate(cfg.primes)))


def _y_spec(cfg: VaesConfig) -> SpaceSpec:
    return SpaceSpec(tuple((f"y{n}", "N", p) for n, p in enumerate(cfg.primes)))


def sample_sl3(digit, p: int) -> tuple:
    """A uniform element of SL(3, Z/p) from a stream of uniform digits mod p.

    Uniform invertible matrices come from rejection; scaling row 0 by det^-1
    then hits every element of SL(3) from exactly p - 1 preimages.
    """
    k = 0
    while True:
        m = tuple(digit(9 * k + i) for i in range(9))
        k += 1
        d = det3(m) % p
        if d:
            s = pow(d, -1, p)
            return tuple(v * s % p for v in m[:3]) + m[3:]


class LambdaCosetPoint:
    """A point of X truncated at nMax: an element of SL(3, Z/p_n) at every level.

    The base point samples each level from its own tape family; derived
    points carry lam (mod P) and read lam . base.
    """

    def __init__(self, cfg: VaesConfig, tape: Tape, lam=IDENTITY3):
        self.cfg = cfg
        self.tape = tape
        self.lam = lam
        self._base: dict[int, tuple] = {}

    def base(self, n: int) -> tuple:
        hit = self._base.get(n)
        if hit is None:
            p = self.cfg.primes[n]
            hit = sample_sl3(lambda i: self.tape.digit(f"x{n}", i), p)
            self._base[n] = hit
        return hit

    def matrix(self, n: int) -> tuple:
        return mat_mul(self.lam, self.base(n), self.cfg.primes[n])

    def matrices(self) -> tuple:
        return tuple(self.matrix(n) for n in self.cfg.levels)

    def moved(self, g: G0Element) -> LambdaCosetPoint:
        out = LambdaCosetPoint(self.cfg, self.tape, mat_mul(g.lam, self.lam, self.cfg.modulus))
        out._base = self._base
        return out


class VaesYPoint:
    """A point of Y = prod H_n: coordinate n is k_n + lam . base_n, with base_n read from a tape."""

    def __init__(self, cfg: VaesConfig, tape: Tape, g: G0Element | None = None):
        self.cfg = cfg
        self.tape = tape
        self.g = g if g is not None else G0Element.make(cfg)

    def base(self, n: int) -> tuple:
        return tuple(self.tape.digit(f"y{n}", i) for i in range(3))

    def coord(self, n: int) -> tuple:
        p = self.cfg.primes[n]
        v = mat_vec(self.g.lam, self.base(n), p)
        return vadd(v, self.g.kdict().get(n, (0, 0, 0)), p)

    def coords(self) -> tuple:
        return tuple(self.coord(n) for n in self.cfg.levels)

    def moved(self, g: G0Element) -> VaesYPoint:
        return VaesYPoint(self.cfg, self.tape, g.mul(self.cfg, self.g))


def vaes_point(cfg: VaesConfig, seed: int) -> tuple[LambdaCosetPoint, VaesYPoint]:
    x = LambdaCosetPoint(cfg, Tape(_x_spec(cfg), 2 * seed))
    y = VaesYPoint(cfg, Tape(_y_spec(cfg), 2 * seed + 1))
    return x, y


def act_vaes_X(g: G0Element, x: LambdaCosetPoint) -> LambdaCosetPoint:
    """Left multiplication by the Lambda part; K acts trivially."""
    return x.moved(g)


def act_vaes_Y(g: G0Element, y: VaesYPoint) -> VaesYPoint:
    return y.moved(g)


def act_vaes(g: G0Element, x: LambdaCosetPoint, y: VaesYPoint):
    return act_vaes_X(g, x), act_vaes_Y(g, y)


def pi_vaes(x: LambdaCosetPoint, y: VaesYPoint, n: int) -> tuple:
    """lam^-1 . y_n where lam is any lift of the level-n coordinate of x.

    Only the matrix mod p_n is read, so the choice of lift cannot matter.
    """
    p = x.cfg.primes[n]
    return mat_vec(mat_inv(x.matrix(n), p), y.coord(n), p)


def u_element(cfg: VaesConfig, n: int, x: LambdaCosetPoint) -> G0Element:
    """The K-element lam h_n lam^-1 = lam . h_n used by U_n on the piece of x."""
    p = cfg.primes[n]
    return G0Element.from_h(cfg, n, mat_vec(x.matrix(n), cfg.h(n), p))


def u_n_apply(cfg: VaesConfig, n: int, x: LambdaCosetPoint, y: VaesYPoint):
    return x, y.moved(u_element(cfg, n, x))


@dataclass
class YCylinder:
    """Constraints {level: allowed triples} on Y."""

    constraints: dict = field(default_factory=dict)

    def measure(self, cfg: VaesConfig) -> Fraction:
        m = Fraction(1)
        for n, allowed in self.constraints.items():
            m *= Fraction(len(allowed), cfg.order(n))
        return m

    def member(self, y: VaesYPoint) -> bool:
        return all(y.coord(n) in allowed for n, allowed in self.constraints.items())


def u_cylinder_sym_diff(cfg: VaesConfig, n: int, cyl: YCylinder) -> Fraction:
    """Exact measure of U_n C symmetric-difference C for a Y-cylinder C (times X).

    U_n only moves coordinate n, adding lam . h_n with lam uniform on
    SL(3, Z/p_n); that vector is uniform on the nonzero triples.
    """
    if n not in cyl.constraints:
        return Fraction(0)
    p = cfg.primes[n]
    allowed = set(cyl.constraints[n])
    others = cyl.measure(cfg) / Fraction(len(allowed), cfg.order(n)) if allowed else Fraction(0)
    nonzero = [v for v in elements(p) if any(v)]
    stay = sum(sum(1 for e in allowed if vadd(e, v, p) in allowed) for v in nonzero)
    inner = Fraction(stay, len(nonzero) * cfg.order(n))
    return 2 * others * (Fraction(len(allowed), cfg.order(n)) - inner)


# ---------------------------------------------------------------------------
# the suite


def check_gap(cfg: VaesConfig, n: int) -> VerificationReport:
    p = cfg.primes[n]
    h = cfg.h(n)
    I = build_I_n(p, h)
    order = cfg.order(n)
    disjoint = not ({vadd(e, h, p) for e in I} & I)
    gap = flip_gap(p, h, I)
    expected = Fraction(2 * -(-order // 3), order)
    ok = disjoint and len(I) == -(-order // 3) and gap == expected and gap >= Fraction(2, 3)
    return VerificationReport(
        claim="thm-s-v.3",
        mode="exact",
        params={"n": n, "p": p, "h": list(h)},
        value=gap,
        bound=Fraction(2, 3),
        passed=ok,
        detail=f"|I|={len(I)} disjoint={disjoint} expected={expected}",
    )


def estimate_flip(cfg: VaesConfig, n: int, samples: int, seed: int = 0):
    """Monte Carlo omega(U_n B_n symmetric-difference B_n), B_n = {pi_n in I_n}."""
    I = build_I_n(cfg.primes[n], cfg.h(n))
    hits = 0
    for s in range(samples):
        x, y = vaes_point(cfg, seed * 1_000_003 + s)
        _, y2 = u_n_apply(cfg, n, x, y)
        if (pi_vaes(x, y, n) in I) != (pi_vaes(x, y2, n) in I):
            hits += 1
    lo, hi = binomial_ci(hits, samples)
    return hits / samples, lo, hi


def estimate_decay(cfg: VaesConfig, g: G0Element, n: int, samples: int, seed: int = 0):
    """Monte Carlo omega(g B_n symmetric-difference B_n); g^-1 w in B_n decides w in g B_n."""
    I = build_I_n(cfg.primes[n], cfg.h(n))
    ginv = g.inverse(cfg)
    hits = 0
    for s in range(samples):
        x, y = vaes_point(cfg, seed * 1_000_003 + s)
        x2, y2 = act_vaes(ginv, x, y)
        if (pi_vaes(x, y, n) in I) != (pi_vaes(x2, y2, n) in I):
            hits += 1
    lo, hi = binomial_ci(hits, samples)
    return hits / samples, lo, hi


def check_commutation(cfg: VaesConfig, n: int, words: int = 100, seed: int = 0) -> VerificationReport:
    """U_n against random Lambda-words and H_m generators (m < n), exactly on sampled points,
    plus the conjugation identity (k, lam) h_n (k, lam)^-1 = lam . h_n in G_0."""
    rng = random.Random(seed * 7919 + n)
    point_fail = 0
    group_fail = 0
    gens = [G0Element.from_word(cfg, random_lambda_word(rng)) for _ in range(words)]
    for m in range(n):
        for i in range(3):
            v = [0, 0, 0]
            v[i] = 1
            gens.append(G0Element.from_h(cfg, m, v))
    hn = G0Element.from_h(cfg, n, cfg.h(n))
    for s, g in enumerate(gens):
        x, y = vaes_point(cfg, seed * 1_000_003 + s)
        # U_n then g versus g then U_n
        x1, y1 = u_n_apply(cfg, n, x, y)
        left = act_vaes(g, x1, y1)
        gx, gy = act_vaes(g, x, y)
        right = u_n_apply(cfg, n, gx, gy)
        if left[0].matrices() != right[0].matrices() or left[1].coords() != right[1].coords():
            point_fail += 1
        k = {m: tuple(rng.randrange(cfg.primes[m]) for _ in range(3)) for m in cfg.levels}
        lam = word_matrix(random_lambda_word(rng), cfg.modulus)
        c = G0Element.make(cfg, k, lam)
        conj = c.mul(cfg, hn).mul(cfg, c.inverse(cfg))
        want = G0Element.from_h(cfg, n, mat_vec(lam, cfg.h(n), cfg.primes[n]))
        if conj != want:
            group_fail += 1
    return VerificationReport(
        claim="thm-s-v.2",
        mode="exact",
        params={"n": n, "p": cfg.primes[n], "words": words, "seed": seed},
        value=point_fail + group_fail,
        bound=0,
        passed=point_fail == 0 and group_fail == 0,
        detail=f"elements={len(gens)} pointwise_disagreements={point_fail} conjugation_failures={group_fail}",
    )


def check_pi_invariance(cfg: VaesConfig, n: int, words: int = 100, seed: int = 0) -> VerificationReport:
    rng = random.Random(seed * 104729 + n)
    bad = 0
    for s in range(words):
        g = G0Element.from_word(cfg, random_lambda_word(rng))
        x, y = vaes_point(cfg, seed * 1_000_003 + s)
        x2, y2 = act_vaes(g, x, y)
        if pi_vaes(x, y, n) != pi_vaes(x2, y2, n):
            bad += 1
    return VerificationReport(
        claim="thm-s-v.3",
        mode="exact",
        params={"n": n, "p": cfg.primes[n], "words": words, "check": "pi-invariance"},
        value=bad,
        bound=0,
        passed=bad == 0,
        detail=f"pi changed on {bad} of {words} random Lambda-words",
    )


def check_fixes_cylinders(cfg: VaesConfig, n: int, count: int = 20, seed: int = 0) -> VerificationReport:
    """U_n fixes every Y-cylinder on coordinates below n exactly; it moves one on coordinate n."""
    rng = random.Random(seed * 31337 + n)
    worst = Fraction(0)
    for _ in range(count):
        cons = {}
        for m in range(n):
            p = cfg.primes[m]
            pool = list(elements(p))
            cons[m] = frozenset(rng.sample(pool, rng.randint(1, len(pool))))
        worst = max(worst, u_cylinder_sym_diff(cfg, n, YCylinder(cons)))
    p = cfg.primes[n]
    own = u_cylinder_sym_diff(cfg, n, YCylinder({n: build_I_n(p, cfg.h(n))}))
    return VerificationReport(
        claim="thm-s-v.1",
        mode="exact",
        params={"n": n, "p": p, "cylinders": count},
        value=worst,
        bound=0,
        passed=worst == 0 and own > 0,
        detail=f"largest sym-diff below level n={worst}; on own level={own}",
    )


def check_decay(cfg: VaesConfig, samples: int, seed: int = 0) -> VerificationReport:
    """Estimates of omega(g B_n symmetric-difference B_n) for g a basis vector of H_0:
    positive at n = 0, and below that at the last level."""
    g = G0Element.from_h(cfg, 0, (0, 0, 1))
    first = estimate_decay(cfg, g, 0, samples, seed)
    last = estimate_decay(cfg, g, cfg.nmax, samples, seed)
    lam = estimate_decay(cfg, G0Element.from_word(cfg, ((0, 1, 1),)), cfg.nmax, samples, seed)
    ok = last[0] < first[0] if cfg.nmax > 0 else True
    return VerificationReport(
        claim="thm-s-v.3",
        mode="mc",
        params={"nmax": cfg.nmax, "samples": samples, "seed": seed, "check": "decay"},
        value=last[0],
        bound=first[0],
        ci_low=last[1],
        ci_high=last[2],
        passed=ok and lam[0] == 0,
        detail=f"n=0 estimate={first[0]} ci=[{first[1]:.4g},{first[2]:.4g}]; "
        f"Lambda generator at n={cfg.nmax}: {lam[0]}",
    )


def check_flip_estimate(cfg: VaesConfig, n: int, samples: int, seed: int = 0) -> VerificationReport:
    est, lo, hi = estimate_flip(cfg, n, samples, seed)
    order = cfg.order(n)
    exact = Fraction(2 * -(-order // 3), order)
    return VerificationReport(
        claim="thm-s-v.3",
        mode="mc",
        params={"n": n, "p": cfg.primes[n], "samples": samples, "seed": seed, "check": "flip"},
        value=est,
        bound=exact,
        ci_low=lo,
        ci_high=hi,
        passed=lo <= float(exact) <= hi,
        detail="estimate of omega(U_n B_n sym-diff B_n) against the exact gap",
    )


def chi_square_pi(cfg: VaesConfig, n: int, samples: int, seed: int = 0) -> float:
    p = cfg.primes[n]
    index = {e: i for i, e in enumerate(elements(p))}
    counts = [0] * len(index)
    for s in range(samples):
        x, y = vaes_point(cfg, seed * 1_000_003 + s)
        counts[index[pi_vaes(x, y, n)]] += 1
    return chi_square_uniform(counts)


def surjectivity_note(primes=(2, 3)) -> dict:
    """Sizes of the groups generated by elementary matrices mod p versus |SL(3, Z/p)|."""
    return {p: (generated_group_size(p), sl3_order(p)) for p in primes}


def vaes_suite(cfg: VaesConfig, words: int = 100) -> list[VerificationReport]:
    reports = []
    for n in cfg.levels:
        reports.append(check_gap(cfg, n))
        reports.append(check_fixes_cylinders(cfg, n, seed=cfg.seed))
        reports.append(check_commutation(cfg, n, words, cfg.seed))
        reports.append(check_pi_invariance(cfg, n, words, cfg.seed))
    reports.append(check_flip_estimate(cfg, 0, min(cfg.samples, 2000), cfg.seed))
    reports.append(check_decay(cfg, cfg.samples, cfg.seed))
    return reports
