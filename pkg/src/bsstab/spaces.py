"""Lazily sampled digit tapes, cylinder sets with exact measure, and Z points."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .exactnum import LazySum

BLOCK = 64
_WORD = 2**64


class SpecMismatch(ValueError):
    pass


def prf_block(seed: int, family: str, block: int, alphabet: int) -> np.ndarray:
    """BLOCK uniform digits of ``family`` for indices block*BLOCK .. block*BLOCK+BLOCK-1.

    Words come from SHAKE-256 keyed by (seed, family, block); rejection on the
    top of the 64-bit range keeps every digit exactly uniform.
    """
    if alphabet == 1:
        return np.zeros(BLOCK, dtype=np.int64)
    limit = _WORD - _WORD % alphabet
    out = np.empty(0, dtype=np.uint64)
    counter = 0
    while out.size < BLOCK:
        raw = hashlib.shake_256(f"{seed}|{family}|{block}|{counter}".encode()).digest(8 * (BLOCK + 8))
        words = np.frombuffer(raw, dtype="<u8")
        if limit < _WORD:
            words = words[words < np.uint64(limit)]
        out = np.concatenate([out, words])
        counter += 1
    return (out[:BLOCK] % np.uint64(alphabet)).astype(np.int64)


@dataclass(frozen=True)
class SpaceSpec:
    """Coordinate families: name -> (index range, alphabet size).

    Index ranges are "N" (>= 0), "Z-" (<= -1), "Z+" (>= 1) or "Z". A family
    name ending in "@" is a pattern: "z0@" covers "z0@<anything>".
    """

    families: tuple[tuple[str, str, int], ...]

    def _lookup(self, family: str) -> tuple[str, int]:
        for name, rng, size in self.families:
            if name == family or (name.endswith("@") and family.startswith(name)):
                return rng, size
        raise SpecMismatch(f"unknown family {family!r}")

    def alphabet(self, family: str) -> int:
        return self._lookup(family)[1]

    def check_index(self, family: str, index: int) -> None:
        rng, _ = self._lookup(family)
        ok = {"N": index >= 0, "Z-": index <= -1, "Z+": index >= 1, "Z": True}[rng]
        if not ok:
            raise IndexError(f"index {index} outside range {rng} of {family}")

    def __add__(self, other: SpaceSpec) -> SpaceSpec:
        return SpaceSpec(self.families + other.families)


def x_spec() -> SpaceSpec:
    return SpaceSpec((("x", "N", 2),))


def y_spec(p: int, q: int) -> SpaceSpec:
    return SpaceSpec((("y-", "Z-", q), ("y0", "N", p * q), ("y+", "Z+", p)))


def z_spec(p: int, q: int) -> SpaceSpec:
    return SpaceSpec((("z0@", "N", p * q),))


class Tape:
    """Deterministic uniform digits for every coordinate of a spec."""

    def __init__(self, spec: SpaceSpec, seed: int, overrides: dict | None = None):
        self.spec = spec
        self.seed = seed
        self.overrides = dict(overrides or {})
        self._blocks: dict[tuple[str, int], list[int]] = {}
        self._values: dict[tuple[str, int], int] = {}

    def _block(self, family: str, b: int) -> list[int]:
        key = (family, b)
        blk = self._blocks.get(key)
        if blk is None:
            blk = prf_block(self.seed, family, b, self.spec.alphabet(family)).tolist()
            self._blocks[key] = blk
        return blk

    def digit(self, family: str, index: int) -> int:
        if self.overrides:
            ov = self.overrides.get((family, index))
            if ov is not None:
                return ov
        # negative families are addressed by |index| - 1 so that block 0 holds -1 .. -64
        i = -index - 1 if index < 0 else index
        blk = self._blocks.get((family, i // BLOCK))
        if blk is None:
            blk = self._block(family, i // BLOCK)
        return blk[i % BLOCK]

    def digits(self, family: str, indices) -> list[int]:
        return [self.digit(family, i) for i in indices]

    def value(self, family: str, n: int) -> int:
        """sum_{i<n} digit_i * base^i for a non-negative family (mod base^n)."""
        base = self.spec.alphabet(family)
        if n <= BLOCK and not self.overrides:
            return self._block_value(family, 0, base) % base**n
        total = 0
        full, rest = divmod(n, BLOCK)
        bb = base**BLOCK
        scale = 1
        for b in range(full):
            total += self._block_value(family, b, base) * scale
            scale *= bb
        if rest:
            v = 0
            for d in reversed(self._block(family, full)[:rest]):
                v = v * base + d
            total += v * scale
        for (fam, idx), d in self.overrides.items():
            if fam == family and 0 <= idx < n:
                total += (d - self._raw(family, idx)) * base**idx
        return total

    def window(self, family: str, start: int, count: int) -> int:
        """sum_{k<count} digit_{start+k} * base^k for a non-negative family."""
        base = self.spec.alphabet(family)
        if self.overrides:
            return sum(self.digit(family, start + k) * base**k for k in range(count))
        b0, b1 = start // BLOCK, (start + count - 1) // BLOCK
        v = 0
        for b in range(b1, b0 - 1, -1):
            v = v * base**BLOCK + self._block_value(family, b, base)
        return v // base ** (start - b0 * BLOCK) % base**count

    def _block_value(self, family: str, b: int, base: int) -> int:
        key = (family, b)
        v = self._values.get(key)
        if v is None:
            v = 0
            for d in reversed(self._block(family, b)):
                v = v * base + d
            self._values[key] = v
        return v

    def _raw(self, family: str, index: int) -> int:
        return self._block(family, index // BLOCK)[index % BLOCK]


class TapePoint:
    """A point of a product space; digits are read through an optional derivation.

    The base point is the tape itself. Derived points in the actions module
    override :meth:`digit`.
    """

    def __init__(self, spec: SpaceSpec, seed: int, overrides: dict | None = None, tape: Tape | None = None):
        self.spec = spec
        self.seed = seed
        self.tape = tape if tape is not None else Tape(spec, seed, overrides)

    def digit(self, family: str, index: int) -> int:
        return self.tape.digit(family, index)


def sample_point(spec: SpaceSpec, seed: int, overrides: dict | None = None) -> TapePoint:
    return TapePoint(spec, seed, overrides)


class _Empty:
    def __repr__(self):
        return "Empty"

    def __bool__(self):
        return False


Empty = _Empty()


@dataclass(frozen=True)
class CylinderSet:
    """Finitely many coordinate constraints; unconstrained coordinates are free."""

    spec: SpaceSpec
    constraints: tuple[tuple[tuple[str, int], frozenset], ...] = ()

    @classmethod
    def make(cls, spec: SpaceSpec, constraints: dict) -> CylinderSet:
        clean = {}
        for (family, index), allowed in constraints.items():
            spec.check_index(family, index)
            size = spec.alphabet(family)
            allowed = frozenset(int(d) for d in allowed)
            if any(not 0 <= d < size for d in allowed):
                raise ValueError(f"digit outside alphabet of {family}")
            if len(allowed) < size:
                clean[(family, index)] = allowed
            if not allowed:
                clean[(family, index)] = allowed
        return cls(spec, tuple(sorted(clean.items())))

    def as_dict(self) -> dict:
        return dict(self.constraints)

    def __str__(self):
        if not self.constraints:
            return "full"
        return " ".join(
            f"{fam}[{idx}]∈{{{','.join(map(str, sorted(s)))}}}" for (fam, idx), s in self.constraints
        )


def measure(c: CylinderSet) -> Fraction:
    m = Fraction(1)
    for (family, _), allowed in c.constraints:
        m *= Fraction(len(allowed), c.spec.alphabet(family))
    return m


def intersect(c1: CylinderSet, c2: CylinderSet):
    if c1.spec != c2.spec:
        raise SpecMismatch("cylinders live on different spaces")
    out = c1.as_dict()
    for key, allowed in c2.constraints:
        both = out[key] & allowed if key in out else allowed
        if not both:
            return Empty
        out[key] = both
    return CylinderSet(c1.spec, tuple(sorted(out.items())))


def member(pt, c: CylinderSet) -> bool:
    for (family, index), allowed in c.constraints:
        if pt.digit(family, index) not in allowed:
            return False
    return True


def x_cylinder(bits) -> CylinderSet:
    """X(l_0, ..., l_j)."""
    return CylinderSet.make(x_spec(), {("x", i): {b} for i, b in enumerate(bits)})


class ZPoint:
    """A point of the product over cosets of <a> of copies of Z_0.

    The base point reads a fresh tape per coset. A derived point records the
    group element g applied to its parent; the value at a coset alpha is the
    parent's value at beta shifted by -b, with (beta, b) the transfer of g.
    Values are (source coset key, integer offset), so equality is exact.
    """

    def __init__(self, seed: int, p: int, q: int, group=None, parent: ZPoint | None = None, g=None):
        self.seed = seed
        self.p = p
        self.q = q
        self.group = group
        self.parent = parent
        self.g = g
        self._cache: dict = {}
        self._tape = Tape(z_spec(p, q), seed) if parent is None else parent._tape

    def state(self, alpha) -> tuple[str, int]:
        key = alpha.key()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if self.parent is None:
            out = (key, 0)
        else:
            beta, b = self.group.transfer(self.g, alpha)
            src, off = self.parent.state(beta)
            out = (src, off - b)
        self._cache[key] = out
        return out

    def digit(self, alpha, k: int) -> int:
        src, off = self.state(alpha)
        family = f"z0@{src}"
        return LazySum(self.p * self.q, off).digit(lambda i: self._tape.digit(family, i), k)

    def digits(self, alpha, n: int) -> list[int]:
        return [self.digit(alpha, k) for k in range(n)]

    def materialized(self) -> int:
        return len(self._cache)


@dataclass
class CosetCylinder:
    """Constraints on Z: (coset, digit index) -> allowed digits, base pq."""

    base: int
    constraints: dict = field(default_factory=dict)

    def measure(self) -> Fraction:
        m = Fraction(1)
        for allowed in self.constraints.values():
            m *= Fraction(len(allowed), self.base)
        return m

    def member(self, z: ZPoint, coset_of: Callable[[str], object]) -> bool:
        for (ckey, k), allowed in self.constraints.items():
            if z.digit(coset_of(ckey), k) not in allowed:
                return False
        return True
