"""Special functions and Erlang-mixture machinery.

The density of a sum of independent Erlang variables with distinct scales is
a finite weighted sum of Erlang densities. The weights come from the partial
fraction expansion of the product of Laplace transforms
``prod_j (1 + scale_j * s) ** -shape_j`` around each pole.
"""

import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from mpmath.ctx_mp import MPContext
from scipy import special, stats

from .config import config

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

# Above this ratio x/z, exp(mu) * E_n(mu) is taken from its asymptotic series.
_ASYMPTOTIC_MU = 500.0

# Float weights are kept only when they barely cancel and sum to 1 this tightly.
_FLOAT_CONDITION = 1e4
_FLOAT_DRIFT = 1e-12

# Extended-precision weights must sum to 1 within 10**-_EXACT_DIGITS.
_BASE_DPS = 30
_MAX_DPS = 1000
_EXACT_DIGITS = 20

_local = threading.local()


def _mp(dps: int) -> MPContext:
    """Per-thread mpmath context set to ``dps`` digits; sweeps run in threads."""
    ctx = getattr(_local, "ctx", None)
    if ctx is None:
        ctx = _local.ctx = MPContext()
    ctx.dps = dps
    return ctx


class DomainError(Exception):
    """Argument outside the domain of a special function."""
    pass


class EmptyMixture(Exception):
    """No Erlang component with positive shape remains."""
    pass


class IllConditionedMixture(Exception):
    """Mixture weights could not be resolved at any supported precision."""
    pass


@dataclass(frozen=True)
class ErlangComponent:
    """Erlang law with integer shape and scale (mean of each exponential).

    Shape 0 is accepted here and means the point mass at zero; mixtures never
    store such components.
    """
    shape: int
    scale: float

    def __post_init__(self):
        if int(self.shape) != self.shape or self.shape < 0:
            raise DomainError(f"Erlang shape must be a nonnegative integer, got {self.shape}")
        if not self.scale > 0 or not math.isfinite(self.scale):
            raise DomainError(f"Erlang scale must be positive and finite, got {self.scale}")


@dataclass(frozen=True)
class ErlangMixture:
    """Weighted sum of Erlang densities.

    ``weights[i][t - 1]`` is the coefficient of the shape-``t`` density with
    scale ``components[i].scale``. When the float weights cancel too badly to
    be summed in double precision, ``exact`` holds the same weights as mpmath
    numbers computed at ``dps`` decimal digits, and every expectation below is
    evaluated from them.
    """
    components: Tuple[ErlangComponent, ...]
    weights: Tuple[Tuple[float, ...], ...]
    perturbed: bool = field(default=False, compare=False)
    exact: Optional[Tuple[Tuple[Any, ...], ...]] = field(default=None, compare=False, repr=False)
    dps: int = field(default=0, compare=False)

    def terms(self) -> Iterator[Tuple[int, float, float]]:
        """Yield (order t, scale, weight) for every nonzero-order term."""
        for comp, row in zip(self.components, self.weights):
            for t, w in enumerate(row, start=1):
                yield t, comp.scale, w

    def exact_terms(self) -> Iterator[Tuple[int, float, Any]]:
        """Like ``terms`` but with the extended-precision weights."""
        if self.exact is None:
            raise ValueError("mixture carries no extended-precision weights")
        for comp, row in zip(self.components, self.exact):
            for t, w in enumerate(row, start=1):
                yield t, comp.scale, w

    @property
    def extended(self) -> bool:
        return self.exact is not None

    @property
    def condition(self) -> float:
        """Sum of absolute weights; 1 for a mixture without cancellation."""
        return math.fsum(abs(w) for _, _, w in self.terms())

    @property
    def total_weight(self) -> float:
        return _expectation(self, lambda t, s: 1.0, lambda ctx, t, s: 1)

    @property
    def mean(self) -> float:
        return _expectation(self, lambda t, s: t * s, lambda ctx, t, s: t * ctx.mpf(s))


def exp_integral_ei(x: float) -> float:
    """Exponential integral Ei(x) for negative real x."""
    if x >= 0:
        raise DomainError(f"Ei is only evaluated for x < 0, got {x}")
    if abs(x) < 1e-300:
        raise DomainError(f"Ei diverges at 0, got {x}")
    return float(special.expi(x))


def digamma_int(t: int) -> float:
    """Euler psi function at a positive integer."""
    if int(t) != t or t < 1:
        raise DomainError(f"digamma_int needs a positive integer, got {t}")
    return float(special.digamma(int(t)))


def scaled_expn(n: int, mu: float) -> float:
    """exp(mu) * E_n(mu) for mu > 0."""
    if mu <= _ASYMPTOTIC_MU:
        return float(math.exp(mu) * special.expn(n, mu))
    # (1/mu) * sum_k (-1)^k (n)_k / mu^k
    total = 0.0
    term = 1.0
    for k in range(40):
        total += term
        term *= -(n + k) / mu
        if abs(term) < 1e-17 * abs(total):
            break
    return total / mu


def z_integral(x: float, t: int, z: float) -> float:
    """E[ln(X + x)] for X ~ Erlang(shape t, scale z)."""
    if not x > 0:
        raise DomainError(f"z_integral needs x > 0, got {x}")
    if not z > 0:
        raise DomainError(f"z_integral needs z > 0, got {z}")
    if int(t) != t or t < 1:
        raise DomainError(f"z_integral needs a positive integer shape, got {t}")
    mu = x / z
    return math.log(x) + math.fsum(scaled_expn(n, mu) for n in range(1, int(t) + 1))


def z_integral_closed_form(x: float, t: int, z: float) -> float:
    """Alternating-sign closed form of ``z_integral`` built on Ei.

    Overflows for large x/z; ``z_integral`` is the evaluator used elsewhere.
    """
    if not x > 0 or not z > 0:
        raise DomainError(f"closed form needs x, z > 0, got x={x}, z={z}")
    mu = x / z
    ei_term = math.exp(mu) * exp_integral_ei(-mu)
    total = math.log(x)
    for theta in range(int(t)):
        n = int(t) - theta
        inner = (-1.0) ** (n - 2) * mu ** (n - 1) * ei_term
        inner += sum(math.gamma(nu) * (-mu) ** (n - nu - 1) for nu in range(1, n))
        total += inner / math.gamma(n)
    return total


def _relative_gap(a: float, b: float) -> float:
    return abs(a - b) / max(a, b)


def _merge_and_separate(
    components: Iterable[ErlangComponent],
) -> Tuple[List[ErlangComponent], bool]:
    """Drop shape 0, merge coincident scales, pull near-coincident ones apart."""
    kept = [c for c in components if c.shape > 0]
    if not kept:
        raise EmptyMixture("every component has shape 0")

    merged: List[List[float]] = []
    for comp in kept:
        for group in merged:
            if _relative_gap(group[1], comp.scale) < config.merge_rtol:
                group[0] += comp.shape
                break
        else:
            merged.append([comp.shape, comp.scale])

    merged.sort(key=lambda g: g[1])
    perturbed = False
    for a, b in zip(merged, merged[1:]):
        if _relative_gap(a[1], b[1]) < config.perturb_rtol:
            mid = 0.5 * (a[1] + b[1])
            a[1] = mid * (1.0 - 0.5 * config.perturb_rtol)
            b[1] = mid * (1.0 + 0.5 * config.perturb_rtol)
            perturbed = True
    if perturbed:
        logger.warning(
            "Near-coincident Erlang scales separated to relative gap %.1e",
            config.perturb_rtol,
        )

    return [ErlangComponent(int(s), float(r)) for s, r in merged], perturbed

def _float_weights(comps: Sequence[ErlangComponent]) -> Tuple[Tuple[float, ...], ...]:
    rows = []
    for i, ci in enumerate(comps):
        prefactor = 1.0
        series = np.array([1.0])
        order = ci.shape
        for j, cj in enumerate(comps):
            if j == i:
                continue
            gap = ci.scale - cj.scale
            prefactor *= (ci.scale / gap) ** cj.shape
            ratio = -cj.scale / gap
            m = np.arange(order)
            coeffs = special.comb(cj.shape + m - 1, m) * ratio ** m
            series = np.convolve(series, coeffs)[:order]
        # weight of order t is the coefficient of u^(shape - t)
        rows.append(tuple(float(prefactor * series[order - t]) for t in range(1, order + 1)))
    return tuple(rows)


def _exact_weights(ctx: MPContext, comps: Sequence[ErlangComponent]) -> Tuple[Tuple[Any, ...], ...]:
    rows = []
    for i, ci in enumerate(comps):
        si = ctx.mpf(ci.scale)
        prefactor = ctx.mpf(1)
        series = [ctx.mpf(1)] + [ctx.mpf(0)] * (ci.shape - 1)
        for j, cj in enumerate(comps):
            if j == i:
                continue
            sj = ctx.mpf(cj.scale)
            gap = si - sj
            prefactor *= (si / gap) ** cj.shape
            ratio = -sj / gap
            coeffs = [ctx.binomial(cj.shape + m - 1, m) * ratio ** m for m in range(ci.shape)]
            series = [
                ctx.fsum(series[a] * coeffs[n - a] for a in range(n + 1)) for n in range(ci.shape)
            ]
        rows.append(tuple(prefactor * series[ci.shape - t] for t in range(1, ci.shape + 1)))
    return tuple(rows)


def _digits_at_risk(comps: Sequence[ErlangComponent]) -> float:
    """Rough count of decimal digits the partial fractions cancel away."""
    worst = 0.0
    for i, ci in enumerate(comps):
        lost = 0.0
        for j, cj in enumerate(comps):
            if j != i:
                spread = max(ci.scale, cj.scale) / abs(ci.scale - cj.scale)
                lost += cj.shape * math.log10(max(spread, 1.0))
        worst = max(worst, lost)
    return worst


def _extended_mixture(comps: List[ErlangComponent], perturbed: bool) -> ErlangMixture:
    dps = _BASE_DPS + int(math.ceil(_digits_at_risk(comps)))
    while dps <= _MAX_DPS:
        ctx = _mp(dps)
        exact = _exact_weights(ctx, comps)
        drift = abs(ctx.fsum(w for row in exact for w in row) - 1)
        if drift < ctx.mpf(10) ** -_EXACT_DIGITS:
            logger.debug("Erlang mixture of %d scales resolved at %d digits", len(comps), dps)
            return ErlangMixture(
                components=tuple(comps),
                weights=tuple(tuple(float(w) for w in row) for row in exact),
                perturbed=perturbed,
                exact=exact,
                dps=dps,
            )
        dps *= 2
    raise IllConditionedMixture(
        f"Erlang mixture weights do not sum to 1 even at {_MAX_DPS} digits "
        f"(scales {[c.scale for c in comps]})"
    )


def mixture_weights(components: Sequence[ErlangComponent]) -> ErlangMixture:
    """Compute the mixture weights of the density of a sum of independent Erlangs.

    Double precision is tried first. If the weights cancel so much that their
    sum drifts from 1, they are recomputed with mpmath at growing precision.

    Raises:
        EmptyMixture: Every component has shape 0
        IllConditionedMixture: No precision up to the cap resolves the weights
    """
    comps, perturbed = _merge_and_separate(components)
    if len(comps) == 1:
        only = comps[0]
        row = (0.0,) * (only.shape - 1) + (1.0,)
        return ErlangMixture(components=(only,), weights=(row,), perturbed=perturbed)

    mixture = ErlangMixture(components=tuple(comps), weights=_float_weights(comps), perturbed=perturbed)
    drift = abs(mixture.total_weight - 1.0)
    if mixture.condition <= _FLOAT_CONDITION and drift <= _FLOAT_DRIFT:
        return mixture
    logger.debug(
        "Float mixture weights cancel (sum |w| = %.2e, drift %.2e), switching to mpmath",
        mixture.condition,
        drift,
    )
    return _extended_mixture(comps, perturbed)


def _expectation(
    m: ErlangMixture,
    term: Callable[[int, float], float],
    exact_term: Callable[[MPContext, int, float], Any],
    extra_dps: int = 0,
) -> float:
    """Weighted sum of a per-term quantity, in extended precision when the mixture has it."""
    if not m.extended:
        return math.fsum(w * term(t, s) for t, s, w in m.terms())
    ctx = _mp(m.dps + extra_dps)
    return float(ctx.fsum(w * exact_term(ctx, t, s) for t, s, w in m.exact_terms()))


def _scaled_expn_ladder(ctx: MPContext, mu: Any, top: int) -> List[Any]:
    """exp(mu) * E_n(mu) for n = 1..top at the context precision."""
    ladder = [ctx.exp(mu) * ctx.e1(mu)]
    for n in range(1, top):
        ladder.append((1 - mu * ladder[-1]) / n)
    return ladder


def mixture_log_moment(m: ErlangMixture, x: float) -> float:
    """E[ln(X + x)] for X distributed as the mixture, x > 0."""
    if not x > 0:
        raise DomainError(f"mixture_log_moment needs x > 0, got {x}")
    if not m.extended:
        return math.fsum(w * z_integral(x, t, s) for t, s, w in m.terms())

    # upward recurrence loses about log10(mu) digits per order
    top = max(len(row) for row in m.weights)
    widest = max(x / c.scale for c in m.components)
    ctx = _mp(m.dps + 10 + int(top * math.log10(max(widest, 10.0))))
    log_x = ctx.log(ctx.mpf(x))
    total = ctx.mpf(0)
    for comp, row in zip(m.components, m.exact):
        ladder = _scaled_expn_ladder(ctx, ctx.mpf(x) / ctx.mpf(comp.scale), len(row))
        partial = ctx.mpf(0)
        for w, rung in zip(row, ladder):
            partial += rung
            total += w * (log_x + partial)
    return float(total)


def mixture_log_mean(m: ErlangMixture) -> float:
    """E[ln X] for X distributed as the mixture."""
    return _expectation(
        m,
        lambda t, s: digamma_int(t) + math.log(s),
        lambda ctx, t, s: ctx.digamma(t) + ctx.log(ctx.mpf(s)),
    )


def mixture_log_scale(m: ErlangMixture) -> float:
    """Sum of weight times log scale over every term."""
    return _expectation(m, lambda t, s: math.log(s), lambda ctx, t, s: ctx.log(ctx.mpf(s)))


def mixture_pdf(m: ErlangMixture, x: ArrayLike) -> Union[float, np.ndarray]:
    """Evaluate the mixture density at x >= 0 (scalar or array)."""
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise DomainError("mixture_pdf is defined for x >= 0")
    if m.extended:
        total = np.array([_exact_pdf(m, float(v)) for v in xs.ravel()]).reshape(xs.shape)
    else:
        total = np.zeros_like(xs)
        for t, scale, w in m.terms():
            if w != 0.0:
                total = total + w * stats.gamma.pdf(xs, a=t, scale=scale)
    if total.ndim == 0:
        return float(total)
    return total


def _exact_pdf(m: ErlangMixture, x: float) -> float:
    ctx = _mp(m.dps)
    u = ctx.mpf(x)
    total = ctx.mpf(0)
    for t, s, w in m.exact_terms():
        scale = ctx.mpf(s)
        total += w * u ** (t - 1) * ctx.exp(-u / scale) / (ctx.factorial(t - 1) * scale**t)
    return float(total)


def sample_mixture_sum(
    components: Sequence[ErlangComponent], n: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw n samples of the sum of independent Erlang variables."""
    total = np.zeros(n)
    for comp in components:
        if comp.shape > 0:
            total += rng.gamma(shape=comp.shape, scale=comp.scale, size=n)
    return total
