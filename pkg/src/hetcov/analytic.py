"""Exact coverage-probability series, truncation bounds and special cases.

The coverage probability of the typical user under conditional interference
thinning is a fully-loaded head term minus an alternating correction series.
Term m scales like (A/eta)^m / Gamma(1 + 2m/alpha), where A/eta is the ratio
of the idle-candidate weight to the active-field interference scale: below
one the terms decay immediately, above one their envelope rises over a hump
before the factorial-type decay wins.  The stopping rule and the majorant
reported in traces both use the provable Gamma-form envelope.

All results are exact when every target SIR exceeds 0 dB; lower targets are
computed as-is and flagged with AssumptionWarning (the idle-only variant
needs no such assumption).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

from .model import (
    AssumptionWarning,
    CoverageResult,
    ModelValidationError,
    Network,
    SeriesControl,
    Tier,
    derived_constants,
    effective_load,
    hypergeometric_sum,
)
from .specfun import SeriesConvergenceError, gauss_2f1, interference_constant

__all__ = [
    "SeriesTermTrace",
    "laplace_interference",
    "correction_term",
    "correction_trace",
    "closed_form_first_terms",
    "full_load_coverage",
    "coverage",
    "coverage_bounds",
    "truncation_terms",
    "convergence_threshold",
    "coverage_single_tier",
    "coverage_equal_targets",
    "tier_addition_effect",
    "coverage_idle_only",
]

_DEFAULT_CONTROL = SeriesControl()

# Terms whose envelope exceeds exp(690) would overflow doubles, and long
# before that the alternating cancellation has exhausted double precision;
# the series driver aborts there and reports non-convergence.
_LOG_TERM_LIMIT = 690.0


def _warn_low_targets(network: Network) -> None:
    low = [i for i, t in enumerate(network.tiers, start=1) if t.target_sir <= 1.0]
    if low:
        warnings.warn(
            f"tiers {low} have target SIR at or below 0 dB; the series result "
            "is exact only above 0 dB and is returned unclamped",
            AssumptionWarning,
            stacklevel=3,
        )


def laplace_interference(network: Network, s: float) -> float:
    """Laplace transform of the aggregate active-field interference at s."""
    if s < 0.0:
        raise ValueError(f"Laplace argument must be non-negative, got {s}")
    scale = derived_constants(network).interference_scale
    return math.exp(-scale * s ** (2.0 / network.alpha))


@dataclass(frozen=True)
class _SeriesView:
    """Everything the series driver needs: the head term, the envelope ratio
    and a closure producing the hypergeometric-to-scale ratio per index."""

    alpha: float
    a_over_eta: float
    base: float
    hyper_over_eta: Callable[[int], float]


def _term_from_view(view: _SeriesView, m: int) -> float:
    two_over = 2.0 / view.alpha
    head = math.exp(-math.lgamma(1.0 + two_over * m))
    tail = (
        view.hyper_over_eta(m)
        * math.pi
        * math.gamma(1.0 + two_over)
        * math.exp(-math.lgamma(1.0 + (m + 1) * two_over))
    )
    return (-view.a_over_eta) ** m * (head - tail)


def _network_view(network: Network, eta_over_access: bool) -> _SeriesView:
    dc = derived_constants(network, eta_over_access=eta_over_access)
    scale = dc.interference_scale

    def hyper_over_eta(m: int) -> float:
        return hypergeometric_sum(network, m) / scale

    return _SeriesView(
        alpha=network.alpha,
        a_over_eta=dc.a_over_eta,
        base=full_load_coverage(network).value,
        hyper_over_eta=hyper_over_eta,
    )


def _run_series(
    term_of: Callable[[int], float],
    ratio: float,
    alpha: float,
    control: SeriesControl,
) -> tuple[list[float], bool]:
    """Accumulate series terms under the stopping rule.

    Stops at the first index where the term magnitude drops below epsilon
    AND the envelope ratio^m / Gamma(1 + 2m/alpha) has started to decrease,
    so a small term inside the rising part of the envelope (possible when
    ratio > 1) cannot end the summation early.
    """
    log_ratio = math.log(ratio)
    terms: list[float] = []
    prev_log_env = 0.0
    converged = False
    for m in range(1, control.max_terms + 1):
        log_env = m * log_ratio - math.lgamma(1.0 + 2.0 * m / alpha)
        if log_env > _LOG_TERM_LIMIT:
            break
        term = term_of(m)
        terms.append(term)
        if abs(term) < control.epsilon and log_env < prev_log_env:
            converged = True
            break
        prev_log_env = log_env
    return terms, converged


def _assemble(
    base: float,
    ratio: float,
    alpha: float,
    term_of: Callable[[int], float],
    control: SeriesControl,
) -> CoverageResult:
    if ratio == 0.0:
        # Every correction term vanishes; the head term is exact.
        return CoverageResult(base, base, base, 0, 0.0, True)
    terms, converged = _run_series(term_of, ratio, alpha, control)
    value = base - math.fsum(terms)
    if not terms:
        return CoverageResult(value, value, value, 0, ratio, converged)
    previous = base - math.fsum(terms[:-1])
    if len(terms) % 2 == 0:
        lower, upper = value, previous
    else:
        lower, upper = previous, value
    return CoverageResult(value, lower, upper, len(terms), ratio, converged)


def correction_term(
    network: Network, m: int, *, eta_over_access: bool = False
) -> float:
    """Signed term m of the coverage correction series.

    Closed access restricts the idle weight and the hypergeometric sum to
    the access tiers while the interference scale keeps all tiers.
    """
    if m < 1:
        raise ValueError(f"term index must be >= 1, got {m}")
    return _term_from_view(_network_view(network, eta_over_access), m)


@dataclass(frozen=True)
class SeriesTermTrace:
    """One step of the correction series.

    majorant is the provable envelope (A/eta)^m / Gamma(1 + 2m/alpha), which
    dominates the term magnitude for every index; partial_sum accumulates
    the terms up to this index.
    """

    index: int
    term: float
    majorant: float
    partial_sum: float


def correction_trace(
    network: Network,
    control: SeriesControl | None = None,
    *,
    count: int | None = None,
    eta_over_access: bool = False,
) -> list[SeriesTermTrace]:
    """Term-by-term trace of the correction series.

    With count given, exactly that many terms are emitted regardless of the
    stopping rule; otherwise the trace ends where the rule fires.
    """
    control = control or _DEFAULT_CONTROL
    view = _network_view(network, eta_over_access)
    ratio = view.a_over_eta
    if count is not None:
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count}")
        terms = [_term_from_view(view, m) for m in range(1, count + 1)]
    else:
        if ratio == 0.0:
            return []
        terms, _ = _run_series(
            lambda m: _term_from_view(view, m), ratio, network.alpha, control
        )
    trace = []
    for m, term in enumerate(terms, start=1):
        if ratio == 0.0:
            env = 0.0
        else:
            env = math.exp(
                m * math.log(ratio) - math.lgamma(1.0 + 2.0 * m / network.alpha)
            )
        trace.append(
            SeriesTermTrace(
                index=m,
                term=term,
                majorant=env,
                partial_sum=math.fsum(terms[:m]),
            )
        )
    return trace


def closed_form_first_terms(network: Network) -> tuple[float, float]:
    """First two correction terms in closed form for path-loss exponent 4.

    At alpha = 4 the hypergeometric sums collapse to elementary functions:
    term one via sqrt(1+beta) - sqrt(beta) written as a stable reciprocal
    sum, term two via the principal inverse cosecant, whose argument
    sqrt(1+beta) > 1 keeps the value in (0, pi/2).  Must agree with the
    general series terms to near machine precision.
    """
    if network.alpha != 4.0:
        raise ValueError(
            f"closed forms require alpha = 4 exactly, got {network.alpha}"
        )
    dc = derived_constants(network)
    ratio = dc.a_over_eta
    scale = dc.interference_scale
    sum_one = 0.0
    sum_two = 0.0
    for _, t in network.access_tiers():
        beta = t.target_sir
        weight = t.density * t.activity * math.sqrt(t.power)
        sum_one += weight / (math.sqrt(beta) * (math.sqrt(beta) + math.sqrt(1.0 + beta)))
        sum_two += weight * (
            1.0 / math.sqrt(beta) - math.asin(1.0 / math.sqrt(1.0 + beta))
        )
    g1 = -ratio * (2.0 / math.sqrt(math.pi) - math.pi**1.5 / scale * sum_one)
    g2 = ratio**2 * (1.0 - 2.0 * math.pi / scale * sum_two)
    return g1, g2


def full_load_coverage(network: Network) -> CoverageResult:
    """Head term of the series: the fully loaded network whose tier densities
    are thinned by their activity factors.

    Equals the whole coverage probability when every activity factor is one.
    The connectable numerator runs over the access tiers; the denominator
    keeps every tier because all tiers interfere.
    """
    alpha = network.alpha
    two_over = 2.0 / alpha
    c_alpha = interference_constant(alpha)
    numerator = sum(
        t.activity * t.density * t.power**two_over * t.target_sir**-two_over
        for _, t in network.access_tiers()
    )
    denominator = sum(
        t.activity * t.density * t.power**two_over for t in network.tiers
    )
    value = math.pi / c_alpha * numerator / denominator
    ratio = derived_constants(network).a_over_eta
    return CoverageResult(value, value, value, 0, ratio, True)


def coverage(
    network: Network,
    control: SeriesControl | None = None,
    *,
    eta_over_access: bool = False,
) -> CoverageResult:
    """Coverage probability of the typical user under conditional thinning.

    The mobile connects to the strongest accessible candidate; conditioned
    on that connection each tier-i interferer transmits independently with
    its activity factor.  Exact when every target SIR exceeds 0 dB (lower
    targets warn); converged is False when the term cap was hit while the
    envelope still exceeded epsilon.
    """
    control = control or _DEFAULT_CONTROL
    _warn_low_targets(network)
    view = _network_view(network, eta_over_access)
    return _assemble(
        view.base,
        view.a_over_eta,
        network.alpha,
        lambda m: _term_from_view(view, m),
        control,
    )


def coverage_bounds(
    network: Network, m: int, *, eta_over_access: bool = False
) -> tuple[float, float]:
    """Sandwich bounds from truncating the series after 2m and 2m-1 terms.

    Both bracket the exact coverage for every m; the bracket width equals
    the magnitude of term 2m (up to one floating-point rounding of the
    endpoints), so the bounds tighten at the series decay rate once past
    the envelope hump.
    """
    if m < 1:
        raise ValueError(f"bound order must be >= 1, got {m}")
    view = _network_view(network, eta_over_access)
    if view.a_over_eta == 0.0:
        return view.base, view.base
    terms = [_term_from_view(view, i) for i in range(1, 2 * m + 1)]
    lower = view.base - math.fsum(terms)
    upper = view.base - math.fsum(terms[:-1])
    return lower, upper


def truncation_terms(
    network: Network,
    epsilon: float,
    max_terms: int = 10_000,
    *,
    eta_over_access: bool = False,
) -> int:
    """Smallest series index whose term magnitude falls below epsilon on the
    decreasing side of the envelope."""
    control = SeriesControl(epsilon=epsilon, max_terms=max_terms)
    view = _network_view(network, eta_over_access)
    if view.a_over_eta == 0.0:
        return 1  # the first term is already zero
    terms, converged = _run_series(
        lambda m: _term_from_view(view, m), view.a_over_eta, network.alpha, control
    )
    if not converged:
        raise SeriesConvergenceError(
            f"series did not reach epsilon={epsilon} within {max_terms} terms "
            f"(A/eta = {view.a_over_eta:.4g})"
        )
    return len(terms)


def convergence_threshold(target_sir: float, alpha: float) -> float:
    """Activity level above which the series ratio stays below one.

    If every tier's activity exceeds the threshold of its own target, the
    envelope decays from the first term for any densities and powers.
    """
    if not target_sir > 0.0:
        raise ValueError(f"target_sir must be positive, got {target_sir}")
    c_alpha = interference_constant(alpha)
    return 1.0 / (
        1.0
        + c_alpha
        * target_sir ** (2.0 / alpha)
        / (math.pi * math.gamma(1.0 + 2.0 / alpha))
    )


def coverage_single_tier(
    power: float,
    density: float,
    target_sir: float,
    activity: float,
    alpha: float,
    control: SeriesControl | None = None,
) -> CoverageResult:
    """Single-tier coverage from the ratio forms of the series.

    Density and power cancel exactly in every ratio, which is the
    scale-invariance property of a single-tier network; the arguments are
    kept for interface symmetry and validation only.  Must agree with the
    general series on the equivalent one-tier network to near machine
    precision.
    """
    tier = Tier(power=power, density=density, target_sir=target_sir, activity=activity)
    if tier.activity == 0.0:
        raise ModelValidationError(
            "single-tier activity of zero leaves no interference field"
        )
    network = Network(alpha=alpha, tiers=(tier,))
    _warn_low_targets(network)
    control = control or _DEFAULT_CONTROL
    two_over = 2.0 / alpha
    c_alpha = interference_constant(alpha)
    beta = target_sir
    ratio = (
        math.pi
        * math.gamma(1.0 + two_over)
        * (1.0 - activity)
        / (c_alpha * activity * beta**two_over)
    )
    base = math.pi * beta**-two_over / c_alpha

    def hyper_over_eta(m: int) -> float:
        b = two_over * m
        c = 1.0 + (m + 1) * two_over
        z = 1.0 / (1.0 + beta)
        return gauss_2f1(1.0, b, c, z) / (c_alpha * beta**two_over * (1.0 + beta) ** b)

    view = _SeriesView(alpha, ratio, base, hyper_over_eta)
    return _assemble(
        base, ratio, alpha, lambda m: _term_from_view(view, m), control
    )


def coverage_equal_targets(
    network: Network,
    control: SeriesControl | None = None,
    *,
    eta_over_access: bool = False,
) -> CoverageResult:
    """K-tier coverage when all tiers share one target SIR.

    Uses the reduced ratio forms, where only the weighted activity mix
    enters; equals the general series to near machine precision, and
    collapses to the single-tier result when all activity factors agree.
    """
    targets = {t.target_sir for t in network.tiers}
    if len(targets) != 1:
        raise ModelValidationError(
            f"equal-target coverage requires one common target SIR, got {sorted(targets)}"
        )
    _warn_low_targets(network)
    control = control or _DEFAULT_CONTROL
    alpha = network.alpha
    two_over = 2.0 / alpha
    c_alpha = interference_constant(alpha)
    beta = network.tiers[0].target_sir
    weights = [t.density * t.power**two_over for t in network.tiers]
    active_all = sum(t.activity * w for t, w in zip(network.tiers, weights))
    active_acc = sum(
        t.activity * weights[i - 1] for i, t in network.access_tiers()
    )
    idle_acc = sum(
        (1.0 - t.activity) * weights[i - 1] for i, t in network.access_tiers()
    )
    active_scale = active_acc if eta_over_access else active_all
    if not active_scale > 0.0:
        raise ModelValidationError(
            "interference scale is zero for the requested tier scope"
        )
    ratio = (
        math.pi
        * math.gamma(1.0 + two_over)
        * idle_acc
        / (c_alpha * beta**two_over * active_scale)
    )
    base = math.pi / c_alpha * beta**-two_over * active_acc / active_all

    def hyper_over_eta(m: int) -> float:
        b = two_over * m
        c = 1.0 + (m + 1) * two_over
        z = 1.0 / (1.0 + beta)
        return (
            gauss_2f1(1.0, b, c, z)
            * active_acc
            / (c_alpha * beta**two_over * (1.0 + beta) ** b * active_scale)
        )

    view = _SeriesView(alpha, ratio, base, hyper_over_eta)
    return _assemble(
        base, ratio, alpha, lambda m: _term_from_view(view, m), control
    )


def tier_addition_effect(network: Network, new_tier: Tier) -> str:
    """Predict whether appending new_tier raises, lowers or preserves the
    equal-target coverage.

    Coverage strictly decreases in the effective load, so the comparison of
    the new tier's activity against the current effective load decides the
    direction; equality within 1e-12 counts as unchanged.
    """
    targets = {t.target_sir for t in network.tiers} | {new_tier.target_sir}
    if len(targets) != 1:
        raise ModelValidationError(
            "tier-addition comparison requires a common target SIR across "
            "the existing tiers and the new tier"
        )
    p_eff = effective_load(network)
    if abs(new_tier.activity - p_eff) <= 1e-12:
        return "unchanged"
    return "increases" if new_tier.activity < p_eff else "decreases"


def coverage_idle_only(
    network: Network, control: SeriesControl | None = None
) -> CoverageResult:
    """Coverage when only idle base stations may serve.

    Models a predefined active set the mobile cannot join: the connection
    succeeds when some accessible idle candidate beats its target against
    the whole active field.  Exact for every positive target (the single
    candidate assumption is never needed here).
    """
    control = control or _DEFAULT_CONTROL
    # ratio == 0 means no idle candidates exist at all, so the mobile can
    # never connect and _assemble degenerates to the correct value of 0.
    ratio = derived_constants(network).a_over_eta
    two_over = 2.0 / network.alpha

    def term_of(m: int) -> float:
        return (-ratio) ** m * math.exp(-math.lgamma(1.0 + two_over * m))

    return _assemble(0.0, ratio, network.alpha, term_of, control)
