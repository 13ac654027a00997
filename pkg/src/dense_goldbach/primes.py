"""Prime tables, prime subsets, and W-trick weights on Z_N."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .spectral import CyclicFunction
from .sumset import SharpConstructionParams, SquarefreeModulus, sharp_construction

SIEVE_CAP = 10**8
_SEGMENT = 1 << 22

_MAGIC = b"DGBP"
_VERSION = 1
_HEADER = struct.Struct("<4sH2xQ")


def _small_sieve(n: int) -> np.ndarray:
    s = np.ones(n + 1, dtype=bool)
    s[: min(2, n + 1)] = False
    for i in range(2, math.isqrt(n) + 1):
        if s[i]:
            s[i * i :: i] = False
    return s


@dataclass(frozen=True, eq=False)
class PrimeTable:
    """Primality of every integer in [0, limit]."""

    limit: int
    is_prime: np.ndarray

    def __post_init__(self) -> None:
        if self.is_prime.shape != (self.limit + 1,):
            raise ValueError("table length does not match limit")
        self.is_prime.setflags(write=False)

    def primes(self, upto: int | None = None) -> np.ndarray:
        hi = self.limit if upto is None else min(upto, self.limit)
        return np.flatnonzero(self.is_prime[: hi + 1])

    def count(self, upto: int | None = None) -> int:
        hi = self.limit if upto is None else min(upto, self.limit)
        return int(np.count_nonzero(self.is_prime[: hi + 1]))

    def require(self, n: int) -> None:
        if n > self.limit:
            raise ValueError(f"prime table limit {self.limit} is below the required {n}")

    def to_bytes(self) -> bytes:
        return _HEADER.pack(_MAGIC, _VERSION, self.limit) + np.packbits(self.is_prime, bitorder="little").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "PrimeTable":
        magic, version, limit = _HEADER.unpack_from(data)
        if magic != _MAGIC or version != _VERSION:
            raise ValueError("not a prime table cache (bad magic or version)")
        bits = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
        return cls(limit, np.unpackbits(bits, count=limit + 1, bitorder="little").astype(bool))

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "PrimeTable":
        return cls.from_bytes(Path(path).read_bytes())


def sieve(limit: int) -> PrimeTable:
    """Segmented sieve of Eratosthenes over [0, limit]."""
    if limit < 2:
        raise ValueError(f"limit must be >= 2, got {limit}")
    if limit > SIEVE_CAP:
        raise ValueError(f"limit {limit} exceeds the sieve cap {SIEVE_CAP}")
    root = math.isqrt(limit)
    base = np.flatnonzero(_small_sieve(root))
    out = np.ones(limit + 1, dtype=bool)
    out[:2] = False
    for lo in range(0, limit + 1, _SEGMENT):
        hi = min(lo + _SEGMENT, limit + 1)
        seg = out[lo:hi]
        for p in base:
            start = max(p * p, -(-lo // p) * p)
            if start >= hi:
                continue
            seg[start - lo :: p] = False
    return PrimeTable(limit, out)


def totient(n: int) -> int:
    result, rest, d = n, n, 2
    while d * d <= rest:
        if rest % d == 0:
            while rest % d == 0:
                rest //= d
            result -= result // d
        d += 1
    if rest > 1:
        result -= result // rest
    return result


def primorial(z: int) -> int:
    """Product of the primes p <= z (1 when z < 2)."""
    return math.prod(int(p) for p in np.flatnonzero(_small_sieve(max(z, 1))))


@dataclass(frozen=True, eq=False)
class PrimeSubset:
    base: PrimeTable
    members: np.ndarray
    descriptor: dict = field(default_factory=lambda: {"kind": "explicit"})

    def __post_init__(self) -> None:
        if self.members.shape != self.base.is_prime.shape:
            raise ValueError("membership vector does not match the prime table")
        if (self.members & ~self.base.is_prime).any():
            raise ValueError("subset contains non-primes")
        self.members.setflags(write=False)

    def __contains__(self, n: object) -> bool:
        return isinstance(n, (int, np.integer)) and 0 <= n <= self.base.limit and bool(self.members[n])

    def primes(self, upto: int | None = None) -> np.ndarray:
        hi = self.base.limit if upto is None else min(upto, self.base.limit)
        return np.flatnonzero(self.members[: hi + 1])

    def count(self, upto: int | None = None) -> int:
        hi = self.base.limit if upto is None else min(upto, self.base.limit)
        return int(np.count_nonzero(self.members[: hi + 1]))


def all_primes(table: PrimeTable) -> PrimeSubset:
    return PrimeSubset(table, table.is_prime.copy(), {"kind": "all"})


def explicit_subset(table: PrimeTable, primes: Iterable[int]) -> PrimeSubset:
    members = np.zeros(table.limit + 1, dtype=bool)
    ps = sorted(int(p) for p in primes)
    if ps:
        table.require(ps[-1])
    members[ps] = True
    return PrimeSubset(table, members, {"kind": "explicit", "primes": ps})


def random_subset(table: PrimeTable, density: float, seed: int) -> PrimeSubset:
    """Each prime kept independently with probability ``density``."""
    rng = np.random.default_rng(seed)
    keep = rng.random(table.limit + 1) < density
    return PrimeSubset(table, table.is_prime & keep, {"kind": "random", "density": density, "seed": seed})


def counterexample_subset(m: SquarefreeModulus, table: PrimeTable) -> PrimeSubset:
    """Primes p not dividing m whose residue lies in the symmetric extremal set A (x = y = (p_s - 1)/2).

    Since A + A misses 1 mod m, no integer congruent to 1 mod m is a sum of two members.
    """
    if not m.primes:
        raise ValueError("modulus must have at least one prime factor")
    x = (m.largest_prime - 1) // 2
    A, _ = sharp_construction(SharpConstructionParams(m, x, x))
    classes = A.elements()
    n = np.arange(table.limit + 1)
    in_local = np.isin(n % m.m, classes)
    members = table.is_prime & in_local
    return PrimeSubset(table, members, {"kind": "residue-construction", "m": m.m, "classes": classes})


def interval_union_subset(alpha: float, cutoffs: list[int], table: PrimeTable) -> PrimeSubset:
    """Primes in [1, N_1] u [alpha N_1, N_2] u ... u [alpha N_{k-1}, N_k]."""
    if not alpha > 2:
        raise ValueError(f"alpha must exceed 2, got {alpha}")
    cutoffs = [int(c) for c in cutoffs]
    if not cutoffs or cutoffs[0] < 1:
        raise ValueError("cutoffs must be a nonempty list of positive integers")
    for lo, hi in zip(cutoffs, cutoffs[1:]):
        if hi < alpha * lo:
            raise ValueError(f"cutoffs must grow by a factor alpha: {hi} < {alpha} * {lo}")
    table.require(cutoffs[-1])
    keep = np.zeros(table.limit + 1, dtype=bool)
    keep[1 : cutoffs[0] + 1] = True
    for lo, hi in zip(cutoffs, cutoffs[1:]):
        keep[math.ceil(alpha * lo) : hi + 1] = True
    return PrimeSubset(
        table, table.is_prime & keep, {"kind": "interval-union", "alpha": alpha, "cutoffs": cutoffs}
    )


def trough_heights(subset: PrimeSubset) -> list[int]:
    """Heights alpha N_i at which the running density of an interval union bottoms out."""
    d = subset.descriptor
    if d.get("kind") != "interval-union":
        raise ValueError("not an interval-union subset")
    return [math.floor(d["alpha"] * c) for c in d["cutoffs"]]


@dataclass(frozen=True)
class WTrickContext:
    """Slice of the primes in the class b mod W, identified with Z_N, N = M // W.

    The point n in {1, ..., N} stands for the integer W n + b and is stored at
    index ``n % N``, so index 0 holds n = N.
    """

    W: int
    b: int
    M: int
    cap: float = 1.0
    z: int | None = None

    def __post_init__(self) -> None:
        if self.W < 1:
            raise ValueError(f"W must be positive, got {self.W}")
        if math.gcd(self.b, self.W) != 1:
            raise ValueError(f"b = {self.b} is not a unit mod W = {self.W}")
        if self.M < self.W:
            raise ValueError(f"M = {self.M} must be at least W = {self.W}")
        if not 0 < self.cap <= 1:
            raise ValueError(f"cap must lie in (0, 1], got {self.cap}")

    @classmethod
    def from_z(cls, z: int, b: int, M: int, cap: float = 1.0) -> "WTrickContext":
        return cls(primorial(z), b, M, cap, z)

    @property
    def N(self) -> int:
        return self.M // self.W

    @property
    def weight_scale(self) -> float:
        return totient(self.W) / self.W

    @property
    def cap_limit(self) -> int:
        """Largest integer allowed by the truncation W n + b <= cap M."""
        return math.floor(self.cap * self.M)

    def lifts(self) -> np.ndarray:
        """W n + b for n = 1..N, laid out by index n mod N."""
        n = np.arange(1, self.N + 1, dtype=np.int64)
        return np.roll(self.W * n + self.b, 1)

    def to_dict(self) -> dict:
        return {"W": self.W, "b": self.b, "M": self.M, "N": self.N, "cap": self.cap, "z": self.z}


def _weights(ctx: WTrickContext, keep: np.ndarray, table: PrimeTable) -> CyclicFunction:
    table.require(ctx.W * ctx.N + ctx.b)
    v = ctx.lifts()
    hit = keep[v]
    out = np.zeros(ctx.N)
    out[hit] = ctx.weight_scale * np.log(v[hit].astype(np.float64))
    return CyclicFunction(out)


def majorant(ctx: WTrickContext, table: PrimeTable) -> CyclicFunction:
    """nu(n) = (phi(W)/W) log(W n + b) when W n + b is prime, else 0."""
    return _weights(ctx, table.is_prime, table)


def weighted_subset(ctx: WTrickContext, A: PrimeSubset) -> CyclicFunction:
    """As :func:`majorant`, restricted to W n + b in A with W n + b <= cap M."""
    keep = A.members.copy()
    keep[ctx.cap_limit + 1 :] = False
    return _weights(ctx, keep, A.base)


def relative_density(A: PrimeSubset, W: int, b: int, M: int) -> float:
    """|A cap {p <= M, p = b mod W}| / |P cap {p <= M, p = b mod W}|."""
    if math.gcd(b, W) != 1:
        raise ValueError(f"b = {b} is not a unit mod W = {W}")
    A.base.require(M)
    n = np.arange(M + 1)
    cls = n % W == b % W
    total = np.count_nonzero(A.base.is_prime[: M + 1] & cls)
    if total == 0:
        raise ValueError(f"no primes = {b} mod {W} up to {M}")
    return np.count_nonzero(A.members[: M + 1] & cls) / total


def class_density_table(A: PrimeSubset, W: int, heights: Iterable[int]) -> dict[int, list[float]]:
    """relative_density for every unit b mod W at each height, sharing one pass over the primes."""
    heights = sorted(int(h) for h in heights)
    A.base.require(heights[-1])
    ps = A.base.primes(heights[-1])
    in_a = A.members[ps]
    res = ps % W
    out = {}
    for b in (b for b in range(W) if math.gcd(b, W) == 1):
        sel = res == b
        cls_ps, cls_a = ps[sel], np.cumsum(in_a[sel])
        row = []
        for h in heights:
            k = int(np.searchsorted(cls_ps, h, side="right"))
            if k == 0:
                raise ValueError(f"no primes = {b} mod {W} up to {h}")
            row.append(float(cls_a[k - 1]) / k)
        out[b] = row
    return out
