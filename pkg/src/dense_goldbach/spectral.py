"""Fourier analysis on Z_N.

Normalization: expectation on the physical side, counting measure on the
frequency side, so that

    fhat(r) = (1/N) sum_n f(n) e(-r n / N),      f(n) = sum_r fhat(r) e(r n / N),

and ``(f1 * f2)(n) = (1/N) sum_k f1(k) f2(n - k)`` has transform ``fhat1 * fhat2``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import HypothesisError

# Coefficients within this distance below the cutoff still count as large.
SPECTRUM_TIE_TOL = 1e-12

_MAGIC = b"DGBF"
_VERSION = 1
_HEADER = struct.Struct("<4sHBxQ")
_KIND_REAL, _KIND_COMPLEX = 0, 1


@dataclass(frozen=True, eq=False)
class CyclicFunction:
    """A real function on Z_N; ``values[n]`` is the value at residue n.

    Nonnegativity is not enforced here since differences such as ``f - g``
    are signed; use :meth:`require_nonnegative` where an operation demands it.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a nonempty 1-d array")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return self.values.size

    def mean(self) -> float:
        return float(self.values.mean())

    def sup(self) -> float:
        return float(np.abs(self.values).max())

    def is_nonnegative(self) -> bool:
        return bool((self.values >= 0).all())

    def require_nonnegative(self, name: str = "f") -> None:
        if not self.is_nonnegative():
            bad = np.flatnonzero(self.values < 0)
            raise HypothesisError(f"{name} takes negative values at {bad[:10].tolist()}")

    def __sub__(self, other: "CyclicFunction") -> "CyclicFunction":
        _same_length(self, other)
        return CyclicFunction(self.values - other.values)

    @classmethod
    def constant(cls, N: int, c: float = 1.0) -> "CyclicFunction":
        return cls(np.full(N, float(c)))

    @classmethod
    def point_mass(cls, N: int, at: int = 0) -> "CyclicFunction":
        """N * 1_{n = at}, whose transform has modulus 1 everywhere."""
        v = np.zeros(N)
        v[at % N] = N
        return cls(v)

    def to_bytes(self) -> bytes:
        return _pack(_KIND_REAL, self.values)

    @classmethod
    def from_bytes(cls, data: bytes) -> "CyclicFunction":
        kind, payload = _unpack(data)
        if kind != _KIND_REAL:
            raise ValueError("payload is not a real function")
        return cls(payload)

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "CyclicFunction":
        return cls.from_bytes(Path(path).read_bytes())


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fourier coefficients ``coeffs[r]`` for r in Z_N."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.ascontiguousarray(self.coeffs, dtype=np.complex128)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coeffs must be a nonempty 1-d array")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return self.coeffs.size

    def __sub__(self, other: "Spectrum") -> "Spectrum":
        if self.N != other.N:
            raise ValueError(f"length mismatch: {self.N} vs {other.N}")
        return Spectrum(self.coeffs - other.coeffs)

    def to_bytes(self) -> bytes:
        return _pack(_KIND_COMPLEX, self.coeffs.view(np.float64))

    @classmethod
    def from_bytes(cls, data: bytes) -> "Spectrum":
        kind, payload = _unpack(data)
        if kind != _KIND_COMPLEX:
            raise ValueError("payload is not a spectrum")
        return cls(payload.view(np.complex128))


def _pack(kind: int, payload: np.ndarray) -> bytes:
    n = payload.size if kind == _KIND_REAL else payload.size // 2
    return _HEADER.pack(_MAGIC, _VERSION, kind, n) + payload.astype("<f8").tobytes()


def _unpack(data: bytes) -> tuple[int, np.ndarray]:
    magic, version, kind, n = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise ValueError("bad magic")
    if version != _VERSION:
        raise ValueError(f"unsupported version {version}")
    width = n if kind == _KIND_REAL else 2 * n
    payload = np.frombuffer(data, dtype="<f8", count=width, offset=_HEADER.size)
    return kind, payload.astype(np.float64)


def _same_length(*fs: CyclicFunction) -> int:
    sizes = {f.N for f in fs}
    if len(sizes) != 1:
        raise ValueError(f"length mismatch: {sorted(sizes)}")
    return sizes.pop()


def dft(f: CyclicFunction) -> Spectrum:
    """Normalized transform, fhat(r) = E_n f(n) e(-rn/N); O(N log N) for every N."""
    return Spectrum(np.fft.fft(f.values) / f.N)


def idft(s: Spectrum) -> CyclicFunction:
    """Inverse of :func:`dft`; the imaginary part (rounding noise for real inputs) is dropped."""
    return CyclicFunction((np.fft.ifft(s.coeffs) * s.N).real)


def dft_direct(f: CyclicFunction) -> Spectrum:
    """O(N^2) evaluation of the same sum, kept as an oracle for :func:`dft`."""
    N = f.N
    n = np.arange(N)
    # reduce r*n mod N in integers before scaling, so angles stay accurate
    phase = np.outer(n, n) % N
    kernel = np.exp(-2j * np.pi * phase / N)
    return Spectrum(kernel @ f.values / N)


def lp_spectral_norm(s: Spectrum, p: float) -> float:
    """Counting-measure l^p norm of the coefficients; ``p = inf`` gives the max modulus."""
    if p == math.inf:
        return float(np.abs(s.coeffs).max())
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    a = np.abs(s.coeffs)
    top = a.max()
    if top == 0:
        return 0.0
    return float(top * ((a / top) ** p).sum() ** (1.0 / p))


def convolve(f1: CyclicFunction, f2: CyclicFunction) -> CyclicFunction:
    """(f1 * f2)(n) = E_k f1(k) f2(n - k), computed through the transform."""
    N = _same_length(f1, f2)
    out = np.fft.ifft(np.fft.fft(f1.values) * np.fft.fft(f2.values)).real / N
    return CyclicFunction(out)


def convolve_direct(f1: CyclicFunction, f2: CyclicFunction) -> CyclicFunction:
    """O(N^2) convolution oracle."""
    N = _same_length(f1, f2)
    k = np.arange(N)
    a, b = f1.values, f2.values
    return CyclicFunction(np.array([a @ b[(n - k) % N] for n in range(N)]) / N)


@dataclass(frozen=True)
class FrequencySet:
    N: int
    members: tuple[int, ...]

    def __post_init__(self) -> None:
        ms = tuple(sorted(int(r) for r in self.members))
        if len(set(ms)) != len(ms) or (ms and not (0 <= ms[0] and ms[-1] < self.N)):
            raise ValueError("frequencies must be distinct and lie in [0, N)")
        object.__setattr__(self, "members", ms)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def large_spectrum(f: CyclicFunction, eps: float) -> FrequencySet:
    """Frequencies with |fhat(r)| >= eps (ties within 1e-12 included)."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    a = np.abs(dft(f).coeffs)
    return FrequencySet(f.N, tuple(np.flatnonzero(a >= eps - SPECTRUM_TIE_TOL).tolist()))


@dataclass(frozen=True, eq=False)
class BohrSet:
    N: int
    frequencies: FrequencySet
    radius: float
    members: np.ndarray

    def __len__(self) -> int:
        return int(self.members.size)

    def density(self) -> float:
        return len(self) / self.N

    def indicator(self) -> np.ndarray:
        out = np.zeros(self.N)
        out[self.members] = 1.0
        return out


def bohr_set(N: int, R: FrequencySet, eps: float) -> BohrSet:
    """{x : |e(xr/N) - 1| <= eps for all r in R}, by direct evaluation of 2|sin(pi x r / N)|."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if R.N != N:
        raise ValueError(f"frequency set lives in Z_{R.N}, not Z_{N}")
    cand = np.arange(N, dtype=np.int64)
    for r in R:
        if cand.size == 1:
            break
        t = (cand * r) % N
        # fold t and N - t together so membership is exactly symmetric under x -> -x
        t = np.minimum(t, N - t)
        cand = cand[2.0 * np.abs(np.sin(np.pi * t / N)) <= eps]
    return BohrSet(N, R, float(eps), cand)


def smoothing_multiplier(B: BohrSet) -> np.ndarray:
    """|E_{b in B} e(rb/N)|^2 for every r, clipped to [0, 1]."""
    if len(B) == 0:
        raise ValueError("Bohr set is empty")
    avg = np.fft.fft(B.indicator()) / len(B)
    mult = np.clip(np.abs(avg) ** 2, 0.0, 1.0)
    mult[0] = 1.0
    return mult


def approximant(f: CyclicFunction, B: BohrSet) -> CyclicFunction:
    """g(n) = E_{b1, b2 in B} f(n + b1 - b2), via ghat = fhat * |E_b e(rb/N)|^2."""
    if B.N != f.N:
        raise ValueError(f"Bohr set lives in Z_{B.N}, not Z_{f.N}")
    if len(B) == 0:
        raise ValueError("Bohr set is empty")
    if len(B) == 1:
        return f
    if len(B) == f.N:
        return CyclicFunction.constant(f.N, f.mean())
    g = np.fft.ifft(np.fft.fft(f.values) * smoothing_multiplier(B)).real
    if f.is_nonnegative():
        # g is an average of values of f; clear sub-ulp negatives left by rounding
        np.maximum(g, 0.0, out=g)
    return CyclicFunction(g)
