"""Almost-all transference on Z_N: decompose f = g + h, lower-bound g1*g2,
and measure the exceptional set of f1*f2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisError, TransferenceFailure
from .spectral import (
    BohrSet,
    CyclicFunction,
    approximant,
    bohr_set,
    convolve,
    dft,
    large_spectrum,
    lp_spectral_norm,
)

DEFAULT_C = 1e-2


@dataclass(frozen=True)
class TransferenceParams:
    """delta: mean surplus; eta: allowed exceptional density; p, M: mean-value
    exponent and bound; c: the small-constant dial used both for the default
    spectral cutoff and as the Fourier-decay budget for the majorants."""

    delta: float
    eta: float
    p: float = 3.0
    M: float = 10.0
    c: float = DEFAULT_C
    eps: float | None = None

    def __post_init__(self) -> None:
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0 < self.eta < 1:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if not 2 < self.p < 4:
            raise ValueError(f"p must lie strictly inside (2, 4), got {self.p}")
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.c <= 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if self.eps is None:
            object.__setattr__(self, "eps", default_eps(self.delta, self.eta, self.p, self.c))
        elif self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")

    @property
    def conclusion_threshold(self) -> float:
        return self.delta**3 / 1000

    @property
    def lower_bound_threshold(self) -> float:
        return self.delta**3 / 200

    @property
    def decay_budget(self) -> float:
        return self.c

    @property
    def sup_bound(self) -> float:
        return 1 + self.delta / 10

    def to_dict(self) -> dict:
        return {"delta": self.delta, "eta": self.eta, "p": self.p, "M": self.M, "c": self.c, "eps": self.eps}


def default_eps(delta: float, eta: float, p: float, c: float = DEFAULT_C) -> float:
    """(c delta^6 eta)^(2/(4-p))."""
    return (c * delta**6 * eta) ** (2 / (4 - p))


def fourier_decay(nu: CyclicFunction) -> float:
    """||(nu - 1)^||_inf, i.e. max(|nuhat(0) - 1|, max_{r != 0} |nuhat(r)|)."""
    c = dft(nu).coeffs.copy()
    c[0] -= 1.0
    return float(np.abs(c).max())


def _check_inputs(*fs: CyclicFunction) -> int:
    sizes = {f.N for f in fs}
    if len(sizes) != 1:
        raise HypothesisError(f"length mismatch: {sorted(sizes)}")
    for i, f in enumerate(fs):
        f.require_nonnegative(f"input {i + 1}")
    return sizes.pop()


@dataclass
class HypothesisReport:
    delta1: float
    delta2: float
    mean_ok: bool
    mv1: float
    mv2: float
    mv_ok: bool
    decay1: float
    decay2: float
    decay_ok: bool
    majorization_violations: dict[int, list[int]]

    @property
    def majorization_ok(self) -> bool:
        return not any(self.majorization_violations.values())

    @property
    def passed(self) -> bool:
        return self.mean_ok and self.mv_ok and self.decay_ok and self.majorization_ok

    def failures(self) -> list[str]:
        out = []
        if not self.majorization_ok:
            out.append("majorization f_i <= nu_i")
        if not self.mean_ok:
            out.append("mean condition delta1 + delta2 >= 1 + delta")
        if not self.mv_ok:
            out.append("mean-value estimate ||fhat_i||_p <= M")
        if not self.decay_ok:
            out.append("Fourier decay ||(nu_i - 1)^||_inf <= c")
        return out

    def to_dict(self) -> dict:
        return {
            "delta1": self.delta1,
            "delta2": self.delta2,
            "mean_ok": self.mean_ok,
            "mv1": self.mv1,
            "mv2": self.mv2,
            "mv_ok": self.mv_ok,
            "decay1": self.decay1,
            "decay2": self.decay2,
            "decay_ok": self.decay_ok,
            "majorization_violations": {str(k): v[:100] for k, v in self.majorization_violations.items()},
            "majorization_violation_counts": {str(k): len(v) for k, v in self.majorization_violations.items()},
            "passed": self.passed,
        }


def check_hypotheses(
    f1: CyclicFunction,
    f2: CyclicFunction,
    nu1: CyclicFunction,
    nu2: CyclicFunction,
    params: TransferenceParams,
) -> HypothesisReport:
    _check_inputs(f1, f2, nu1, nu2)
    d1, d2 = f1.mean(), f2.mean()
    mv1 = lp_spectral_norm(dft(f1), params.p)
    mv2 = lp_spectral_norm(dft(f2), params.p)
    dec1, dec2 = fourier_decay(nu1), fourier_decay(nu2)
    violations = {
        1: np.flatnonzero(f1.values > nu1.values).tolist(),
        2: np.flatnonzero(f2.values > nu2.values).tolist(),
    }
    return HypothesisReport(
        delta1=d1,
        delta2=d2,
        mean_ok=d1 + d2 >= 1 + params.delta,
        mv1=mv1,
        mv2=mv2,
        mv_ok=max(mv1, mv2) <= params.M,
        decay1=dec1,
        decay2=dec2,
        decay_ok=max(dec1, dec2) <= params.decay_budget,
        majorization_violations=violations,
    )


@dataclass(eq=False)
class Decomposition:
    """f = g + h with g the Bohr-set approximant; iterates as (g, h)."""

    f: CyclicFunction
    g: CyclicFunction
    h: CyclicFunction
    eps: float
    p: float
    spectrum_size: int
    bohr: BohrSet
    mean_gap: float
    spectral_gap: float
    ghat_p_norm: float
    fhat_p_norm: float

    def __iter__(self):
        return iter((self.g, self.h))

    @property
    def g_sup(self) -> float:
        return self.g.sup()

    @property
    def spectral_gap_ok(self) -> bool:
        return self.spectral_gap <= 4 * self.eps

    @property
    def norm_ok(self) -> bool:
        return self.ghat_p_norm <= self.fhat_p_norm * (1 + 1e-12)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "large_spectrum_size": self.spectrum_size,
            "bohr_size": len(self.bohr),
            "bohr_density": self.bohr.density(),
            "mean_gap": self.mean_gap,
            "spectral_gap": self.spectral_gap,
            "spectral_gap_bound": 4 * self.eps,
            "ghat_p_norm": self.ghat_p_norm,
            "fhat_p_norm": self.fhat_p_norm,
            "g_sup": self.g_sup,
        }


def decompose(f: CyclicFunction, params: TransferenceParams) -> Decomposition:
    eps = params.eps
    R = large_spectrum(f, eps)
    B = bohr_set(f.N, R, eps)
    g = approximant(f, B)
    fh, gh = dft(f), dft(g)
    return Decomposition(
        f=f,
        g=g,
        h=f - g,
        eps=eps,
        p=params.p,
        spectrum_size=len(R),
        bohr=B,
        mean_gap=abs(g.mean() - f.mean()),
        spectral_gap=lp_spectral_norm(fh - gh, math.inf),
        ghat_p_norm=lp_spectral_norm(gh, params.p),
        fhat_p_norm=lp_spectral_norm(fh, params.p),
    )


@dataclass
class LowerBoundReport:
    min_convolution: float
    bound: float
    support_densities: tuple[float, float]
    support_bounds: tuple[float, float]
    precondition_failures: list[str] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.min_convolution >= self.bound

    @property
    def preconditions_ok(self) -> bool:
        return not self.precondition_failures

    def to_dict(self) -> dict:
        return {
            "min_convolution": self.min_convolution,
            "bound": self.bound,
            "holds": self.holds,
            "support_densities": list(self.support_densities),
            "support_bounds": list(self.support_bounds),
            "precondition_failures": self.precondition_failures,
        }


def lower_bound_check(g1: CyclicFunction, g2: CyclicFunction, params: TransferenceParams) -> LowerBoundReport:
    """Minimum of g1*g2 against delta^3/200, with essential supports {g_i >= delta/10}."""
    if g1.N != g2.N:
        raise HypothesisError(f"length mismatch: {g1.N} vs {g2.N}")
    delta = params.delta
    failures = []
    for i, g in enumerate((g1, g2), 1):
        if not g.is_nonnegative():
            failures.append(f"g{i} takes negative values")
        if g.sup() > params.sup_bound:
            failures.append(f"||g{i}||_inf = {g.sup():.6g} exceeds 1 + delta/10 = {params.sup_bound:.6g}")
    d1, d2 = g1.mean(), g2.mean()
    if d1 + d2 < 1 + delta:
        failures.append(f"delta1 + delta2 = {d1 + d2:.6g} < 1 + delta = {1 + delta:.6g}")
    dens = tuple(float((g.values >= delta / 10).mean()) for g in (g1, g2))
    return LowerBoundReport(
        min_convolution=float(convolve(g1, g2).values.min()),
        bound=params.lower_bound_threshold,
        support_densities=dens,
        support_bounds=(d1 - delta / 5, d2 - delta / 5),
        precondition_failures=failures,
    )


@dataclass(eq=False)
class TransferenceReport:
    N: int
    params: TransferenceParams
    hypotheses: HypothesisReport
    forced: bool
    decompositions: tuple[Decomposition, Decomposition]
    lower_bound: LowerBoundReport
    convolution: CyclicFunction
    exceptional: np.ndarray
    min_outside: float | None
    product_gap: float
    product_l2: float

    @property
    def delta1(self) -> float:
        return self.hypotheses.delta1

    @property
    def delta2(self) -> float:
        return self.hypotheses.delta2

    @property
    def decay1(self) -> float:
        return self.hypotheses.decay1

    @property
    def decay2(self) -> float:
        return self.hypotheses.decay2

    @property
    def mv1(self) -> float:
        return self.hypotheses.mv1

    @property
    def mv2(self) -> float:
        return self.hypotheses.mv2

    @property
    def alpha(self) -> float:
        return self.exceptional.size / self.N

    @property
    def product_gap_bound(self) -> float:
        # |g1^ g2^ - f1^ f2^| <= 4 eps' with eps' = 4 eps the bound on ||f^ - g^||_inf
        return 16 * self.params.eps

    @property
    def alpha_bound(self) -> float | None:
        """alpha <= (250/delta^3)^2 ||g1^g2^ - f1^f2^||_2^2, valid once g1*g2 >= delta^3/200 everywhere."""
        if not self.lower_bound.holds:
            return None
        return (250 / self.params.delta**3) ** 2 * self.product_l2**2

    def to_dict(self) -> dict:
        from .reports import summarize_indices

        d1, d2 = self.decompositions
        return {
            "N": self.N,
            "params": self.params.to_dict(),
            "forced": self.forced,
            "hypotheses": self.hypotheses.to_dict(),
            "delta1": self.delta1,
            "delta2": self.delta2,
            "decay1": self.decay1,
            "decay2": self.decay2,
            "mv1": self.mv1,
            "mv2": self.mv2,
            "decomposition1": d1.to_dict(),
            "decomposition2": d2.to_dict(),
            "lower_bound": self.lower_bound.to_dict(),
            "product_gap": self.product_gap,
            "product_gap_bound": self.product_gap_bound,
            "product_l2": self.product_l2,
            "alpha_bound": self.alpha_bound,
            "threshold": self.params.conclusion_threshold,
            "min_convolution": float(self.convolution.values.min()),
            "min_outside": self.min_outside,
            "alpha": self.alpha,
            "exceptional": summarize_indices(self.exceptional),
        }


def exceptional_set(conv: CyclicFunction, delta: float) -> np.ndarray:
    """Sorted n with conv(n) <= delta^3/1000."""
    return np.flatnonzero(conv.values <= delta**3 / 1000)


def run_transference(
    f1: CyclicFunction,
    f2: CyclicFunction,
    nu1: CyclicFunction,
    nu2: CyclicFunction,
    params: TransferenceParams,
    *,
    force: bool = False,
) -> TransferenceReport:
    """Run the full pipeline and measure E = {n : f1*f2(n) <= delta^3/1000}.

    Raises HypothesisError when a hypothesis fails and ``force`` is not set,
    and TransferenceFailure when every hypothesis passed yet |E| > eta N.
    """
    hyp = check_hypotheses(f1, f2, nu1, nu2, params)
    if not hyp.passed and not force:
        raise HypothesisError("hypotheses failed: " + "; ".join(hyp.failures()))
    dec1, dec2 = decompose(f1, params), decompose(f2, params)
    lb = lower_bound_check(dec1.g, dec2.g, params)
    conv = convolve(f1, f2)
    E = exceptional_set(conv, params.delta)
    outside = np.ones(conv.N, dtype=bool)
    outside[E] = False
    min_outside = float(conv.values[outside].min()) if outside.any() else None

    fh1, fh2 = dft(f1).coeffs, dft(f2).coeffs
    gh1, gh2 = dft(dec1.g).coeffs, dft(dec2.g).coeffs
    diff = np.abs(gh1 * gh2 - fh1 * fh2)

    report = TransferenceReport(
        N=conv.N,
        params=params,
        hypotheses=hyp,
        forced=force and not hyp.passed,
        decompositions=(dec1, dec2),
        lower_bound=lb,
        convolution=conv,
        exceptional=E,
        min_outside=min_outside,
        product_gap=float(diff.max()),
        product_l2=float(np.sqrt((diff**2).sum())),
    )
    if hyp.passed and report.alpha > params.eta:
        raise TransferenceFailure(
            f"alpha = {report.alpha:.6g} exceeds eta = {params.eta} although all hypotheses passed"
        )
    return report
