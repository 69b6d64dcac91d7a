"""Outage CDFs, SIR thresholds, and average goodput.

Goodput is the expected number of bits delivered per frame-subband when the
rate is pinned at the epsilon-outage SIR threshold T:

    g = (1 - eps) * L * log2(1 + T)

For downlink users the inverse SIR is approximated as Gaussian with the
aggregated interference moments; for D2D receivers the signal power is
exponential and the interference is treated as its mean, so the outage CDF
is the exponential CDF evaluated at tau times the aggregated denominator
mean.  (The CDF direction is the only reading under which outage increases
with tau and the quantile inverts consistently.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, NumericalError, StatisticalError


@dataclass(frozen=True)
class GoodputResult:
    """SIR threshold and average goodput for one entity type."""

    entity: str                  # "downlink" or "d2d"
    threshold_linear: float
    avg_goodput_bits: float
    epsilon: float
    method: str                  # "analytic" or "empirical"
    sample_count: int | None = None


def _scalar_or_array(result, reference):
    return float(result) if np.ndim(reference) == 0 else result


def q_function(x):
    """Standard normal tail probability Pr[N(0,1) > x]."""
    out = 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return _scalar_or_array(out, x)


def q_inverse(p: float) -> float:
    """Inverse of :func:`q_function` on (0, 1)."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    return float(math.sqrt(2.0) * special.erfcinv(2.0 * p))


def exp_quantile(p: float, lambda_mean: float) -> float:
    """p-quantile of an exponential distribution with mean ``lambda_mean``."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    if lambda_mean <= 0:
        raise DomainError(f"mean must be positive, got {lambda_mean}")
    return float(-lambda_mean * math.log1p(-p))


def gaussian_outage_cdf(tau, mean: float, std: float):
    """Pr[SIR <= tau] when 1/SIR is Gaussian with the given moments.

    Degenerates to a step at 1/mean when ``std`` is zero.
    """
    arr = np.asarray(tau, dtype=float)
    if np.any(arr <= 0):
        raise DomainError("tau must be positive")
    if std == 0.0:
        return _scalar_or_array((1.0 / arr <= mean).astype(float), tau)
    return _scalar_or_array(q_function((1.0 / arr - mean) / std), tau)


def exponential_outage_cdf(tau, denominator_mean: float, rho_signal: float):
    """Pr[SIR <= tau] when the signal power is exponential with mean
    ``rho_signal`` and the denominator is held at its mean."""
    arr = np.asarray(tau, dtype=float)
    if np.any(arr <= 0):
        raise DomainError("tau must be positive")
    if rho_signal <= 0:
        raise DomainError(f"rho_signal must be positive, got {rho_signal}")
    return _scalar_or_array(-np.expm1(-arr * denominator_mean / rho_signal), tau)


def downlink_outage_cdf(tau, moments) -> float:
    """Downlink outage probability at threshold ``tau`` from aggregated
    moments (``moments`` must expose ``inv_sir_mean`` / ``inv_sir_std``)."""
    return gaussian_outage_cdf(tau, moments.inv_sir_mean, moments.inv_sir_std)


def d2d_outage_cdf(tau, moments, rho_signal: float) -> float:
    """D2D outage probability at threshold ``tau`` (``moments`` must expose
    ``d2d_denominator_mean``)."""
    return exponential_outage_cdf(tau, moments.d2d_denominator_mean, rho_signal)


def downlink_threshold(mean: float, std: float, epsilon: float) -> float:
    """epsilon-outage SIR threshold under the Gaussian inverse-SIR model."""
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    denom = q_inverse(epsilon) * std + mean
    if denom <= 0:
        raise NumericalError(
            f"analytic breakdown: threshold denominator {denom:.3e} is not positive "
            f"(epsilon={epsilon}, mean={mean:.3e}, std={std:.3e})"
        )
    return 1.0 / denom


def _goodput_bits(threshold: float, epsilon: float, symbols: int) -> float:
    return (1.0 - epsilon) * symbols * math.log2(1.0 + threshold)


def downlink_goodput(moments, epsilon: float, symbols_per_frame: int) -> GoodputResult:
    """Analytic average goodput of a downlink user."""
    t = downlink_threshold(moments.inv_sir_mean, moments.inv_sir_std, epsilon)
    return GoodputResult("downlink", t, _goodput_bits(t, epsilon, symbols_per_frame), epsilon, "analytic")


def d2d_goodput(moments, rho_signal: float, epsilon: float, symbols_per_frame: int) -> GoodputResult:
    """Analytic average goodput of a D2D receiver."""
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    mu = moments.d2d_denominator_mean
    if mu is None or not mu > 0:
        raise DomainError(f"d2d denominator mean must be positive, got {mu}")
    t = exp_quantile(epsilon, rho_signal) / mu
    return GoodputResult("d2d", t, _goodput_bits(t, epsilon, symbols_per_frame), epsilon, "analytic")


def cell_overall_goodput(per_user, per_d2d, users_per_cell: int, d2d_per_cell: int) -> float:
    """Sample estimate of the cell's total goodput: K * mean(user goodputs)
    + D * mean(D2D goodputs) over location-sampled entities."""
    total = 0.0
    if users_per_cell:
        if not len(per_user):
            raise DomainError("per_user list is empty but users_per_cell > 0")
        total += users_per_cell * float(np.mean([g.avg_goodput_bits for g in per_user]))
    if d2d_per_cell:
        if not len(per_d2d):
            raise DomainError("per_d2d list is empty but d2d_per_cell > 0")
        total += d2d_per_cell * float(np.mean([g.avg_goodput_bits for g in per_d2d]))
    return total


#: Minimum sample count accepted by :func:`empirical_goodput`.
MIN_EMPIRICAL_SAMPLES = 100


def empirical_goodput(
    sir_values, epsilon: float, symbols_per_frame: int, entity: str = "downlink"
) -> GoodputResult:
    """Goodput at the empirical epsilon-quantile threshold.

    ``sir_values`` may be an array of linear SIRs or a list of SirSample.
    The quantile uses linear interpolation between order statistics (the
    convention is frozen by the test suite).
    """
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    values = np.asarray(
        [s.sir_linear for s in sir_values] if len(sir_values) and hasattr(sir_values[0], "sir_linear") else sir_values,
        dtype=float,
    )
    n = values.size
    if n < MIN_EMPIRICAL_SAMPLES:
        raise StatisticalError(
            f"need at least {MIN_EMPIRICAL_SAMPLES} samples for an empirical quantile, got {n}",
            required=MIN_EMPIRICAL_SAMPLES,
            got=n,
        )
    t = float(np.quantile(values, epsilon, method="linear"))
    return GoodputResult(entity, t, _goodput_bits(t, epsilon, symbols_per_frame), epsilon, "empirical", sample_count=n)
