"""Exact representability of even integers as sums of two primes from a subset."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError
from .primes import PrimeSubset

MEMORY_BUDGET = 2 << 30


def scan_memory_estimate(limit: int) -> int:
    """Bytes held by the two bit-vectors of ``limit`` bits each."""
    return 2 * ((limit + 7) // 8)


def _bits_to_int(mask: np.ndarray) -> int:
    return int.from_bytes(np.packbits(mask, bitorder="little").tobytes(), "little")


def _int_to_bits(value: int, length: int) -> np.ndarray:
    raw = np.frombuffer(value.to_bytes((length + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, count=length, bitorder="little").astype(bool)


def representable_evens(subset: PrimeSubset, limit: int) -> np.ndarray:
    """Boolean array ``rep`` with ``rep[k]`` true iff 2k = p + q for p, q in the subset.

    Odd subset primes 2i + 1 are bits i of one big integer S; for each odd p = 2i + 1
    with p <= limit/2, OR-ing ``(S >> i) << 2i`` marks every p + q with q >= p
    (bit i + j stands for 2(i + j + 1)).  The pair 2 + 2 is added separately.
    """
    if limit < 4:
        raise ValueError(f"limit must be >= 4, got {limit}")
    if scan_memory_estimate(limit) > MEMORY_BUDGET:
        raise InfeasibleError(
            f"limit {limit} needs about {scan_memory_estimate(limit) / 2**30:.2f} GiB, over the 2 GiB budget"
        )
    subset.base.require(limit)
    half = limit // 2
    odd_members = subset.members[1 : 2 * half : 2]  # index i <-> 2i + 1 < 2 half + 1
    S = _bits_to_int(odd_members)
    reach = 0
    for i in np.flatnonzero(odd_members[: (half + 1) // 2]).tolist():
        if 2 * i + 1 > half:
            break
        reach |= (S >> i) << (2 * i)
    reach &= (1 << half) - 1  # bits k <= half - 1, i.e. n = 2(k + 1) <= limit
    rep = np.zeros(half + 1, dtype=bool)
    rep[1:] = _int_to_bits(reach, half)
    if subset.members[2]:
        rep[2] = True
    return rep


@dataclass(eq=False)
class GoldbachScanReport:
    limit: int
    descriptor: dict
    exceptional: np.ndarray
    modulus: int | None = None

    @property
    def count(self) -> int:
        return int(self.exceptional.size)

    @property
    def evens_in_range(self) -> int:
        return self.limit // 2 - 1

    @property
    def density_among_evens(self) -> float:
        return self.count / self.evens_in_range

    @property
    def by_residue(self) -> dict[int, int] | None:
        if self.modulus is None:
            return None
        counts = np.bincount(self.exceptional % self.modulus, minlength=self.modulus)
        return {r: int(c) for r, c in enumerate(counts) if c}

    def to_dict(self, full: bool = False) -> dict:
        from .reports import summarize_indices

        out = {
            "limit": self.limit,
            "subset": self.descriptor,
            "exceptional_evens": summarize_indices(self.exceptional, full=full),
            "evens_in_range": self.evens_in_range,
            "density_among_evens": self.density_among_evens,
        }
        if self.modulus is not None:
            out["modulus"] = self.modulus
            out["by_residue"] = {str(k): v for k, v in self.by_residue.items()}
        return out


def goldbach_scan(subset: PrimeSubset, limit: int, modulus: int | None = None) -> GoldbachScanReport:
    """Every even n in [4, limit] with no representation n = p + q, p, q in the subset."""
    rep = representable_evens(subset, limit)
    k = np.flatnonzero(~rep[2:]) + 2
    return GoldbachScanReport(limit, subset.descriptor, 2 * k, modulus)


def exceptional_evens_naive(subset: PrimeSubset, limit: int) -> list[int]:
    """Double-loop oracle for :func:`goldbach_scan`."""
    ps = [int(p) for p in subset.primes(limit)]
    hit = set()
    for a, p in enumerate(ps):
        for q in ps[a:]:
            s = p + q
            if s > limit:
                break
            hit.add(s)
    return [n for n in range(4, limit + 1, 2) if n not in hit]
