"""Local sumset theorem over Z_m for odd squarefree m.

Residue sets are dense bit-vectors held in a Python ``int`` (bit ``a`` set
iff residue ``a`` is a member), so a sumset is a handful of cyclic shifts
and ORs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Literal

import numpy as np

from .errors import InfeasibleError

EXHAUSTIVE_PHI_CAP = 10


def _factor_squarefree(m: int) -> tuple[int, ...]:
    primes = []
    rest = m
    d = 3
    while d * d <= rest:
        if rest % d == 0:
            rest //= d
            if rest % d == 0:
                raise ValueError(f"{m} is not squarefree (divisible by {d}^2)")
            primes.append(d)
        d += 2
    if rest > 1:
        primes.append(rest)
    return tuple(primes)


@dataclass(frozen=True)
class SquarefreeModulus:
    """An odd squarefree modulus with its factorization."""

    m: int
    primes: tuple[int, ...]
    phi: int

    @classmethod
    def from_int(cls, m: int) -> "SquarefreeModulus":
        if isinstance(m, bool) or not isinstance(m, (int, np.integer)):
            raise TypeError(f"modulus must be an integer, got {type(m).__name__}")
        m = int(m)
        if m < 1:
            raise ValueError(f"modulus must be positive, got {m}")
        if m % 2 == 0:
            raise ValueError(f"modulus must be odd, got {m}")
        primes = _factor_squarefree(m)
        phi = math.prod(p - 1 for p in primes)
        return cls(m, primes, phi)

    def __post_init__(self) -> None:
        if math.prod(self.primes) != self.m:
            raise ValueError("primes do not multiply to m")
        if list(self.primes) != sorted(set(self.primes)) or any(p % 2 == 0 for p in self.primes):
            raise ValueError("primes must be distinct, sorted and odd")
        if self.phi != math.prod(p - 1 for p in self.primes):
            raise ValueError("phi inconsistent with factorization")

    @property
    def largest_prime(self) -> int:
        if not self.primes:
            raise ValueError("m = 1 has no prime factors")
        return self.primes[-1]

    @property
    def full_mask(self) -> int:
        return (1 << self.m) - 1

    def is_unit(self, a: int) -> bool:
        return math.gcd(a % self.m, self.m) == 1

    def unit_list(self) -> list[int]:
        return [a for a in range(self.m) if math.gcd(a, self.m) == 1]


@dataclass(frozen=True)
class ResidueSet:
    """A subset of Z_m stored as a bit-vector."""

    modulus: SquarefreeModulus
    bits: int
    units_only: bool = False

    def __post_init__(self) -> None:
        if self.bits < 0 or self.bits >> self.modulus.m:
            raise ValueError("bit-vector has bits outside [0, m)")
        if self.units_only and self.bits & ~units_mask(self.modulus):
            raise ValueError("units_only set contains a non-unit")

    @classmethod
    def from_iterable(
        cls, modulus: SquarefreeModulus, members: Iterable[int], units_only: bool = False
    ) -> "ResidueSet":
        bits = 0
        for a in members:
            bits |= 1 << (int(a) % modulus.m)
        return cls(modulus, bits, units_only)

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __contains__(self, a: object) -> bool:
        if not isinstance(a, (int, np.integer)):
            return False
        return bool(self.bits >> (int(a) % self.modulus.m) & 1)

    def __iter__(self) -> Iterator[int]:
        bits = self.bits
        while bits:
            low = bits & -bits
            yield low.bit_length() - 1
            bits ^= low

    def elements(self) -> list[int]:
        return list(self)

    def is_full(self) -> bool:
        return self.bits == self.modulus.full_mask

    def issubset(self, other: "ResidueSet") -> bool:
        return self.bits & ~other.bits == 0


def units_mask(modulus: SquarefreeModulus) -> int:
    bits = 0
    for a in modulus.unit_list():
        bits |= 1 << a
    return bits


def reduced_residues(modulus: SquarefreeModulus) -> ResidueSet:
    return ResidueSet(modulus, units_mask(modulus), units_only=True)


def _rotate(bits: int, shift: int, m: int, mask: int) -> int:
    # cyclic left shift by `shift` within m bits, i.e. translation by +shift in Z_m
    if shift == 0:
        return bits
    return ((bits << shift) | (bits >> (m - shift))) & mask


def _sumset_bits(a_bits: int, b_bits: int, m: int, mask: int) -> int:
    if a_bits.bit_count() > b_bits.bit_count():
        a_bits, b_bits = b_bits, a_bits
    acc = 0
    while a_bits:
        low = a_bits & -a_bits
        acc |= _rotate(b_bits, low.bit_length() - 1, m, mask)
        if acc == mask:
            break
        a_bits ^= low
    return acc


def sumset(A: ResidueSet, B: ResidueSet) -> ResidueSet:
    """Return ``{a + b mod m}`` as a ResidueSet with ``units_only=False``."""
    if A.modulus.m != B.modulus.m:
        raise ValueError(f"modulus mismatch: {A.modulus.m} vs {B.modulus.m}")
    mod = A.modulus
    return ResidueSet(mod, _sumset_bits(A.bits, B.bits, mod.m, mod.full_mask))


def unit_product_ratio(modulus: SquarefreeModulus, primes: Iterable[int] | None = None) -> Fraction:
    """Exact value of the product of (p - 2)/(p - 1) over the given primes (default: all p | m)."""
    ps = modulus.primes if primes is None else primes
    out = Fraction(1)
    for p in ps:
        out *= Fraction(p - 2, p - 1)
    return out


def goldbach_threshold(modulus: SquarefreeModulus) -> Fraction:
    """phi(m) * (2 - prod (p-2)/(p-1)); |A| + |B| strictly above it forces A + B = Z_m."""
    return modulus.phi * (2 - unit_product_ratio(modulus))


def unit_shift_count(modulus: SquarefreeModulus, n: int) -> int:
    """Number of units x with n - x also a unit."""
    m = modulus.m
    n %= m
    return sum(1 for x in range(m) if math.gcd(x, m) == 1 and math.gcd((n - x) % m, m) == 1)


def unit_shift_lower_bound(modulus: SquarefreeModulus) -> int:
    return math.prod(p - 2 for p in modulus.primes)


@dataclass(frozen=True)
class SharpConstructionParams:
    modulus: SquarefreeModulus
    x: int
    y: int

    def __post_init__(self) -> None:
        ps = self.modulus.largest_prime
        for name, v in (("x", self.x), ("y", self.y)):
            if not 1 <= v < ps:
                raise ValueError(f"{name}={v} outside [1, {ps - 1}]")


def _union_of_classes(modulus: SquarefreeModulus, last_classes: range) -> ResidueSet:
    *head, ps = modulus.primes
    bits = 0
    for a in modulus.unit_list():
        if any(a % p == 1 for p in head) or a % ps in last_classes:
            bits |= 1 << a
    return ResidueSet(modulus, bits, units_only=True)


def sharp_construction(params: SharpConstructionParams) -> tuple[ResidueSet, ResidueSet]:
    """Extremal pair: units that are 1 mod some p_i (i < s), or in [1, x] (resp. [1, y]) mod p_s."""
    A = _union_of_classes(params.modulus, range(1, params.x + 1))
    B = _union_of_classes(params.modulus, range(1, params.y + 1))
    return A, B


def sharp_cardinality(modulus: SquarefreeModulus, x: int) -> int:
    """Closed form phi(m) * (1 - (p_s - 1 - x)/(p_s - 1) * prod_{i<s} (p_i - 2)/(p_i - 1))."""
    ps = modulus.largest_prime
    value = modulus.phi * (
        1 - Fraction(ps - 1 - x, ps - 1) * unit_product_ratio(modulus, modulus.primes[:-1])
    )
    if value.denominator != 1:
        raise ArithmeticError(f"closed form is not an integer: {value}")
    return int(value)


@dataclass
class LocalCheckReport:
    modulus: int
    threshold: Fraction
    mode: str
    pairs_enumerated: int = 0
    pairs_checked: int = 0
    violations: list[tuple[list[int], list[int]]] = field(default_factory=list)
    sharp_witnesses: list[tuple[list[int], list[int]]] = field(default_factory=list)
    samples: int | None = None
    seed: int | None = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        out = {
            "modulus": self.modulus,
            "threshold_numerator": self.threshold.numerator,
            "threshold_denominator": self.threshold.denominator,
            "mode": self.mode,
            "pairs_enumerated": self.pairs_enumerated,
            "pairs_checked": self.pairs_checked,
            "violations": [{"A": a, "B": b} for a, b in self.violations],
            "sharp_witnesses": [{"A": a, "B": b} for a, b in self.sharp_witnesses],
        }
        if self.mode == "sampled":
            out["samples"] = self.samples
            out["seed"] = self.seed
        return out


def _bits_to_list(bits: int) -> list[int]:
    return [i for i in range(bits.bit_length()) if bits >> i & 1]


def _subset_masks(units: list[int]) -> list[int]:
    # masks[k] = bit-vector of {units[j] : bit j of k set}
    masks = [0] * (1 << len(units))
    for k in range(1, len(masks)):
        low = k & -k
        masks[k] = masks[k ^ low] | (1 << units[low.bit_length() - 1])
    return masks


def verify_local_theorem(
    modulus: SquarefreeModulus,
    mode: Literal["exhaustive", "sampled"] = "exhaustive",
    *,
    samples: int = 100_000,
    seed: int | None = None,
    witnesses: bool = True,
) -> LocalCheckReport:
    """Search for pairs of unit sets above the threshold whose sumset misses a residue.

    Exhaustive mode enumerates every pair of subsets of Z_m^* (refused when
    phi(m) exceeds 10) and, with ``witnesses``, records every pair sitting
    exactly at the threshold whose sumset is proper.  Sampled mode draws
    ``samples`` pairs uniformly among those with |A| + |B| above the threshold.
    """
    threshold = goldbach_threshold(modulus)
    # 2 phi(m) - prod (p - 2) is always an integer
    t = int(threshold)
    m, mask = modulus.m, modulus.full_mask
    units = modulus.unit_list()
    phi = modulus.phi

    if mode == "exhaustive":
        if phi > EXHAUSTIVE_PHI_CAP:
            raise InfeasibleError(
                f"exhaustive check needs 4^phi(m) = 4^{phi} pairs; refused above phi(m) = {EXHAUSTIVE_PHI_CAP}"
            )
        report = LocalCheckReport(m, threshold, mode, pairs_enumerated=4**phi)
        masks = _subset_masks(units)
        by_size: list[list[int]] = [[] for _ in range(phi + 1)]
        for bits in masks:
            by_size[bits.bit_count()].append(bits)
        for a in range(phi + 1):
            for b in range(max(0, t - a), phi + 1):
                at_threshold = a + b == t
                if at_threshold and not witnesses:
                    continue
                for a_bits in by_size[a]:
                    for b_bits in by_size[b]:
                        report.pairs_checked += 1
                        if _sumset_bits(a_bits, b_bits, m, mask) == mask:
                            continue
                        pair = (_bits_to_list(a_bits), _bits_to_list(b_bits))
                        if at_threshold:
                            report.sharp_witnesses.append(pair)
                        else:
                            report.violations.append(pair)
        return report

    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    if seed is None:
        raise ValueError("sampled mode requires a seed")
    report = LocalCheckReport(m, threshold, mode, samples=samples, seed=seed)
    rng = np.random.default_rng(seed)
    # cardinality pairs above the threshold, weighted by the number of subset pairs of those sizes
    size_pairs = [(a, b) for a in range(phi + 1) for b in range(phi + 1) if a + b > t]
    if size_pairs and samples > 0:
        weights = np.array([math.comb(phi, a) * math.comb(phi, b) for a, b in size_pairs], dtype=float)
        picks = rng.choice(len(size_pairs), size=samples, p=weights / weights.sum())
        unit_arr = np.array(units)
        chunk = 4096
        for start in range(0, samples, chunk):
            idx = picks[start : start + chunk]
            perm_a = np.argsort(rng.random((len(idx), phi)), axis=1)
            perm_b = np.argsort(rng.random((len(idx), phi)), axis=1)
            for row, k in enumerate(idx):
                a, b = size_pairs[k]
                a_bits = sum(1 << int(u) for u in unit_arr[perm_a[row, :a]])
                b_bits = sum(1 << int(u) for u in unit_arr[perm_b[row, :b]])
                report.pairs_checked += 1
                if _sumset_bits(a_bits, b_bits, m, mask) != mask:
                    report.violations.append((_bits_to_list(a_bits), _bits_to_list(b_bits)))
    if witnesses and modulus.primes:
        ps = modulus.largest_prime
        x = (ps - 1) // 2
        A, B = sharp_construction(SharpConstructionParams(modulus, x, ps - x))
        if len(A) + len(B) == threshold and not sumset(A, B).is_full():
            report.sharp_witnesses.append((A.elements(), B.elements()))
    return report
