"""Means and variances of the per-interferer SIR denominator terms.

Interference terms, conditioned on positions, have closed-form fading
statistics built from complex-Gaussian moments (E|h_t h_j^H|^2 =
M rho_t rho_j and E|h_t h_j^H|^4 = 2 rho_t^2 rho_j^2 (M^2 + M)):

* beam term (interfering BS serving a user that does not share the
  target's pilot index), with r = rho_t / rho_j:
      mean r/M,    second moment  2 (1 + 1/M) r^2 / M^2
* pilot-sharing composite term (beam plus the deterministic contamination
  replica of the equal-index user):
      mean r/M + r^2/L_p,
      second moment 2(1+1/M) r^2/M^2 + 2 r^3/(M L_p) + r^4/L_p^2
* D2D transmitter term with power weight w: mean w d^-kappa, second
  moment 2 w^2 d^-2kappa (exponential fading)
* BS term at a D2D receiver: mean (P_b/P_d) rho_v / (M rho_j)

Position averaging over the interferer's hexagon is exact for the BS
kernels (they separate into inverse-pathloss moments of the interferer's
own-cell distance, computed by 1-D radial quadrature) and Monte Carlo
with a canonical fixed point set for the D2D kernels.  D2D position
kernels d^-kappa are not integrable across the target's own location for
kappa > 2, so those integrals truncate a small disk around the target
(``exclusion_radius_m``); at the default powers the excluded mass is many
orders of magnitude below the BS terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from .channel import PathlossParams, pathloss_bs
from .errors import DomainError, NumericalError
from .geometry import SQRT3, HexLayout, NetworkRealization, sample_uniform_hexagon

#: Derivation tag for the canonical moment-integration point set.
_POSITION_STREAM_TAG = 0x4D4F4D

DEFAULT_POSITION_SAMPLES = 100_000
DEFAULT_EXCLUSION_RADIUS_M = 10.0


# ---------------------------------------------------------------------------
# fading-folded kernels (scalar or array in the pathloss arguments)

def bs_beam_mean_kernel(rho_target, rho_own, m: int):
    """Conditional mean of a beam-only BS interference term."""
    return np.asarray(rho_target) / np.asarray(rho_own) / m


def bs_beam_sqmean_kernel(rho_target, rho_own, m: int):
    """Conditional second moment of a beam-only BS interference term."""
    ratio = np.asarray(rho_target) / np.asarray(rho_own)
    return 2.0 * (1.0 + 1.0 / m) / m**2 * ratio**2


def bs_term_mean_kernel(rho_target, rho_own, m: int, pilot_length: int):
    """Conditional mean of the pilot-sharing composite BS term."""
    ratio = np.asarray(rho_target) / np.asarray(rho_own)
    return ratio / m + ratio**2 / pilot_length


def bs_term_sqmean_kernel(rho_target, rho_own, m: int, pilot_length: int):
    """Conditional second moment of the pilot-sharing composite BS term."""
    ratio = np.asarray(rho_target) / np.asarray(rho_own)
    return (
        2.0 * (1.0 + 1.0 / m) / m**2 * ratio**2
        + 2.0 / (m * pilot_length) * ratio**3
        + ratio**4 / pilot_length**2
    )


def d2d_term_mean_kernel(dist, kappa: float, power_ratio: float):
    """Conditional mean of a D2D interference term at link distance ``dist``."""
    return power_ratio * np.asarray(dist, dtype=float) ** (-kappa)


def d2d_term_sqmean_kernel(dist, kappa: float, power_ratio: float):
    """Conditional second moment (exponential fading: twice the squared mean)."""
    return 2.0 * (power_ratio * np.asarray(dist, dtype=float) ** (-kappa)) ** 2


def bs_to_d2d_mean_kernel(rho_rx, rho_own, m: int, power_ratio_bs: float):
    """Conditional mean of the BS term seen by a D2D receiver."""
    return power_ratio_bs * np.asarray(rho_rx) / (m * np.asarray(rho_own))


# ---------------------------------------------------------------------------
# hexagon position integrals

def hexagon_radial_moment(exponent: float, circumradius_m: float, min_distance_m: float = 0.0) -> float:
    """E[s**exponent] for s = distance from the hexagon center to a point
    uniform in the hexagon, conditioned on s >= min_distance_m.

    Uses the polar reduction of the hexagon integral: twelve congruent
    wedges with boundary radius r_in / cos(theta), theta in [0, pi/6].
    """
    r = circumradius_m
    r_in = SQRT3 / 2.0 * r
    if not 0.0 <= min_distance_m < r_in:
        raise DomainError(
            f"min_distance_m must lie in [0, inradius), got {min_distance_m} vs {r_in}"
        )
    area = 1.5 * SQRT3 * r * r
    a = exponent

    def wedge(theta):
        return (r_in / np.cos(theta)) ** (a + 2.0)

    val, _ = integrate.quad(wedge, 0.0, math.pi / 6.0, epsabs=0.0, epsrel=1e-12, limit=200)
    if not np.isfinite(val):
        raise NumericalError(f"hexagon moment quadrature failed for exponent {a}")
    full = 12.0 / (area * (a + 2.0)) * val
    if min_distance_m == 0.0:
        return full
    disk = 2.0 * math.pi / (area * (a + 2.0)) * min_distance_m ** (a + 2.0)
    keep = 1.0 - math.pi * min_distance_m**2 / area
    return (full - disk) / keep


@dataclass(frozen=True)
class _InversePathlossMoments:
    """Cached E[s**(k sigma)] for k = 1..4 over one hexagon."""

    c1: float
    c2: float
    c3: float
    c4: float


def _inverse_pathloss_moments(
    circumradius_m: float, sigma_bs: float, min_distance_m: float
) -> _InversePathlossMoments:
    return _InversePathlossMoments(
        *(hexagon_radial_moment(k * sigma_bs, circumradius_m, min_distance_m) for k in (1, 2, 3, 4))
    )


def _beam_folded(rho_target, cm: _InversePathlossMoments, m: int):
    """(mean, second moment) of the beam-only term, interferer position
    integrated out; ``rho_target`` may be an array."""
    r = np.asarray(rho_target, dtype=float)
    mean = r * cm.c1 / m
    sqmean = 2.0 * (1.0 + 1.0 / m) / m**2 * r**2 * cm.c2
    return mean, sqmean


def _composite_folded(rho_target, cm: _InversePathlossMoments, m: int, pilot_length: int):
    """(mean, second moment) of the pilot-sharing composite term."""
    r = np.asarray(rho_target, dtype=float)
    mean = r * cm.c1 / m + r**2 * cm.c2 / pilot_length
    sqmean = (
        2.0 * (1.0 + 1.0 / m) / m**2 * r**2 * cm.c2
        + 2.0 / (m * pilot_length) * r**3 * cm.c3
        + r**4 * cm.c4 / pilot_length**2
    )
    return mean, sqmean


def conditional_term_moments(
    target_pos,
    interferer_cell: int,
    layout: HexLayout,
    params: PathlossParams,
    m: int,
    pilot_length: int,
    min_bs_distance_m: float = 0.0,
    pilot_shared: bool = True,
) -> tuple[float, float]:
    """Mean and variance of the BS-interference term from one user of
    ``interferer_cell``, conditioned on the target position and averaged
    over the interferer's uniform position in its hexagon.

    ``pilot_shared`` selects the composite term (beam plus contamination
    replica, the bracketed form of the asymptotic SIR) versus the
    beam-only term of a user on a different pilot.  The hexagon integral
    is deterministic quadrature: the kernels separate into radial moments
    of the interferer's own-cell distance.
    """
    if interferer_cell == 0:
        raise DomainError("BS interference terms are defined for interfering cells only")
    rho_t = pathloss_bs(
        float(np.linalg.norm(np.asarray(target_pos, dtype=float) - layout.centers[interferer_cell])),
        params.sigma_bs,
    )
    cm = _inverse_pathloss_moments(layout.circumradius_m, params.sigma_bs, min_bs_distance_m)
    if pilot_shared:
        mean, sqmean = _composite_folded(rho_t, cm, m, pilot_length)
    else:
        mean, sqmean = _beam_folded(rho_t, cm, m)
    return float(mean), float(sqmean - mean**2)


def _canonical_offsets(
    circumradius_m: float,
    min_bs_distance_m: float,
    n_samples: int,
    seed: int,
) -> np.ndarray:
    """Fixed pseudo-random position set in the canonical centered hexagon,
    respecting the minimum own-BS distance."""
    rng = np.random.default_rng(np.random.SeedSequence([_POSITION_STREAM_TAG, seed]))
    pts = sample_uniform_hexagon(np.zeros(2), circumradius_m, rng, size=n_samples)
    if min_bs_distance_m > 0.0:
        while True:
            bad = np.hypot(pts[:, 0], pts[:, 1]) < min_bs_distance_m
            if not bad.any():
                break
            pts[bad] = sample_uniform_hexagon(np.zeros(2), circumradius_m, rng, size=int(bad.sum()))
    return pts


def d2d_term_moments(
    target_pos,
    interferer_cell: int,
    layout: HexLayout,
    params: PathlossParams,
    power_ratio: float,
    exclusion_radius_m: float = DEFAULT_EXCLUSION_RADIUS_M,
    n_samples: int = DEFAULT_POSITION_SAMPLES,
    min_bs_distance_m: float = 0.0,
    position_seed: int = 0,
    offsets: np.ndarray | None = None,
) -> tuple[float, float]:
    """Mean and variance of a D2D interference term from a transmitter
    uniform in ``interferer_cell``'s hexagon, fading folded analytically.

    ``power_ratio`` is P_d/P_b for terms toward a downlink user and 1 for
    terms toward a D2D receiver.  Contributions inside
    ``exclusion_radius_m`` of the target are truncated to keep the
    position integral finite for kappa > 2.
    """
    target = np.asarray(target_pos, dtype=float)
    if offsets is None:
        offsets = _canonical_offsets(layout.circumradius_m, min_bs_distance_m, n_samples, position_seed)
    pts = offsets + layout.centers[interferer_cell]
    d = np.hypot(pts[:, 0] - target[0], pts[:, 1] - target[1])
    keep = d >= exclusion_radius_m
    mean_terms = np.zeros_like(d)
    sq_terms = np.zeros_like(d)
    mean_terms[keep] = d2d_term_mean_kernel(d[keep], params.kappa_ue, power_ratio)
    sq_terms[keep] = d2d_term_sqmean_kernel(d[keep], params.kappa_ue, power_ratio)
    mean = float(mean_terms.mean())
    sqmean = float(sq_terms.mean())
    return mean, sqmean - mean**2


def bs_to_d2d_term_mean(
    target_pos,
    interferer_cell: int,
    layout: HexLayout,
    params: PathlossParams,
    m: int,
    power_ratio_bs: float,
    min_bs_distance_m: float = 0.0,
) -> float:
    """Mean BS term at a D2D receiver from one served user of
    ``interferer_cell`` (own cell allowed)."""
    rho_rx = pathloss_bs(
        float(np.linalg.norm(np.asarray(target_pos, dtype=float) - layout.centers[interferer_cell])),
        params.sigma_bs,
    )
    cm = _inverse_pathloss_moments(layout.circumradius_m, params.sigma_bs, min_bs_distance_m)
    return float(power_ratio_bs * rho_rx * cm.c1 / m)


def annulus_moments(
    params: PathlossParams,
    m: int,
    pilot_length: int,
    zeta: float,
    circumradius_m: float,
    min_bs_distance_m: float = 0.0,
    kernel: str = "bs",
    power_ratio: float = 1.0,
) -> tuple[float, float]:
    """Plane-approximation aggregate of the per-interferer moments.

    The target sits at its cell center and one interferer per hexagon
    area is spread radially: a hexagon-corner band from the inradius to R
    weighted by the arc fraction outside the hexagon, then full annuli
    out to zeta * R.  Returns (sum of means, sum of variances) per
    interfering entity class at finite truncation zeta; multiply by K or
    D externally.  The ``bs`` kernel is the pilot-sharing composite.
    """
    if zeta <= 1.0:
        raise DomainError(f"zeta must exceed 1, got {zeta}")
    r = circumradius_m
    r_in = SQRT3 / 2.0 * r
    area = 1.5 * SQRT3 * r * r

    if kernel == "bs":
        cm = _inverse_pathloss_moments(r, params.sigma_bs, min_bs_distance_m)

        def mean_k(x):
            return _composite_folded(x ** (-params.sigma_bs), cm, m, pilot_length)[0]

        def sq_k(x):
            return _composite_folded(x ** (-params.sigma_bs), cm, m, pilot_length)[1]

    elif kernel == "d2d":

        def mean_k(x):
            return d2d_term_mean_kernel(x, params.kappa_ue, power_ratio)

        def sq_k(x):
            return d2d_term_sqmean_kernel(x, params.kappa_ue, power_ratio)

    else:
        raise DomainError(f"unknown kernel {kernel!r}")

    def corner_weight(x):
        return 12.0 * x * np.arccos(np.clip(r_in / x, -1.0, 1.0)) / area

    def ring_weight(x):
        return 2.0 * math.pi * x / area

    def integrate_piece(fn):
        band, _ = integrate.quad(
            lambda x: corner_weight(x) * fn(x), r_in, r, epsabs=0.0, epsrel=1e-10, limit=200
        )
        rings, _ = integrate.quad(
            lambda x: ring_weight(x) * fn(x), r, zeta * r, epsabs=0.0, epsrel=1e-10, limit=200
        )
        if not (np.isfinite(band) and np.isfinite(rings)):
            raise NumericalError("annulus quadrature failed to converge")
        return band + rings

    mean_sum = integrate_piece(mean_k)
    var_sum = integrate_piece(lambda x: sq_k(x) - mean_k(x) ** 2)
    return mean_sum, var_sum


# ---------------------------------------------------------------------------
# moment sets and aggregates

@dataclass(frozen=True)
class MomentSet:
    """Per-interfering-cell denominator moments for one target position.

    BS interference toward the target user splits per interfering cell i
    into K-1 beam-only users (``bs_beam_mean`` / ``bs_beam_var``) and one
    pilot-sharing user (``bs_pilot_mean`` / ``bs_pilot_var``); own-cell
    entries are zero.  ``d2d_pos_mean`` / ``d2d_pos_sqmean`` are raw
    positional moments E[d^-kappa], E[d^-2kappa] of one D2D transmitter
    of cell i (the power ratio is applied by the accessors).
    ``bs_to_d2d_mean[i]`` is the mean BS term at the target treated as a
    D2D receiver, own cell included.

    Aggregates:
      inv_sir_mean = sum_{i != own} [(K-1) bs_beam_mean_i + bs_pilot_mean_i]
                     + D sum_i d2d_term_mean_i
      inv_sir_std  = sqrt of the same combination over the variances
      d2d_denominator_mean = K sum_i bs_to_d2d_mean_i
                     + sum_i n_i d2d_pos_mean_i
    with n_i = D except D-1 in the own cell (the desired link does not
    interfere with itself) and the D2D-to-D2D means entering unweighted
    because the desired link uses the same transmit power.
    """

    target_position: np.ndarray
    bs_beam_mean: np.ndarray
    bs_beam_var: np.ndarray
    bs_pilot_mean: np.ndarray
    bs_pilot_var: np.ndarray
    d2d_pos_mean: np.ndarray
    d2d_pos_sqmean: np.ndarray
    bs_to_d2d_mean: np.ndarray
    d2d_power_ratio: float       # P_d / P_b
    users_per_cell: int | None = None
    d2d_per_cell: int | None = None
    inv_sir_mean: float | None = None
    inv_sir_std: float | None = None
    d2d_denominator_mean: float | None = None

    @property
    def d2d_term_mean(self) -> np.ndarray:
        """Mean D2D term toward a downlink user (power ratio applied)."""
        return self.d2d_power_ratio * self.d2d_pos_mean

    @property
    def d2d_term_var(self) -> np.ndarray:
        """Variance of the D2D term toward a downlink user."""
        w = self.d2d_power_ratio
        return 2.0 * w**2 * self.d2d_pos_sqmean - (w * self.d2d_pos_mean) ** 2


def aggregate_moments(per_cell: MomentSet, users_per_cell: int, d2d_per_cell: int) -> MomentSet:
    """Fill the scalar aggregates from the per-cell arrays."""
    k, d = int(users_per_cell), int(d2d_per_cell)
    if k < 0 or d < 0:
        raise DomainError("entity counts must be nonnegative")
    mean = d * float(per_cell.d2d_term_mean.sum())
    var = d * float(per_cell.d2d_term_var.sum())
    if k >= 1:
        mean += float(((k - 1) * per_cell.bs_beam_mean + per_cell.bs_pilot_mean)[1:].sum())
        var += float(((k - 1) * per_cell.bs_beam_var + per_cell.bs_pilot_var)[1:].sum())
    if d >= 1:
        counts = np.full(per_cell.d2d_pos_mean.shape, float(d))
        counts[0] = d - 1
        d2d_mean = k * float(per_cell.bs_to_d2d_mean.sum()) + float(
            (counts * per_cell.d2d_pos_mean).sum()
        )
    else:
        d2d_mean = None
    return replace(
        per_cell,
        users_per_cell=k,
        d2d_per_cell=d,
        inv_sir_mean=mean,
        inv_sir_std=math.sqrt(var),
        d2d_denominator_mean=d2d_mean,
    )


def compute_moment_set(
    target_pos,
    layout: HexLayout,
    params: PathlossParams,
    m: int,
    pilot_length: int,
    pd_over_pb: float,
    users_per_cell: int,
    d2d_per_cell: int,
    min_bs_distance_m: float = 0.0,
    exclusion_radius_m: float = DEFAULT_EXCLUSION_RADIUS_M,
    n_position_samples: int = DEFAULT_POSITION_SAMPLES,
    position_seed: int = 0,
) -> MomentSet:
    """Build and aggregate the full moment set for one target position."""
    target = np.asarray(target_pos, dtype=float)
    c = layout.num_cells
    cm = _inverse_pathloss_moments(layout.circumradius_m, params.sigma_bs, min_bs_distance_m)
    dist = np.linalg.norm(target - layout.centers, axis=1)
    rho_t = pathloss_bs(dist, params.sigma_bs)

    beam_mean_all, beam_sq_all = _beam_folded(rho_t, cm, m)
    comp_mean_all, comp_sq_all = _composite_folded(rho_t, cm, m, pilot_length)
    zero_own = np.ones(c)
    zero_own[0] = 0.0
    bs_beam_mean = beam_mean_all * zero_own
    bs_beam_var = (beam_sq_all - beam_mean_all**2) * zero_own
    bs_pilot_mean = comp_mean_all * zero_own
    bs_pilot_var = (comp_sq_all - comp_mean_all**2) * zero_own

    # rho_own folded analytically: mean = (P_b/P_d) rho_rx E[s^sigma] / M
    bs_to_d2d = (1.0 / pd_over_pb) * rho_t * cm.c1 / m

    offsets = _canonical_offsets(layout.circumradius_m, min_bs_distance_m, n_position_samples, position_seed)
    d2d_pos_mean = np.zeros(c)
    d2d_pos_sq = np.zeros(c)
    for i in range(c):
        pts = offsets + layout.centers[i]
        d = np.hypot(pts[:, 0] - target[0], pts[:, 1] - target[1])
        keep = d >= exclusion_radius_m
        dk = d[keep] ** (-params.kappa_ue)
        d2d_pos_mean[i] = dk.sum() / len(d)
        d2d_pos_sq[i] = (dk**2).sum() / len(d)

    per_cell = MomentSet(
        target_position=target,
        bs_beam_mean=bs_beam_mean,
        bs_beam_var=bs_beam_var,
        bs_pilot_mean=bs_pilot_mean,
        bs_pilot_var=bs_pilot_var,
        d2d_pos_mean=d2d_pos_mean,
        d2d_pos_sqmean=d2d_pos_sq,
        bs_to_d2d_mean=np.asarray(bs_to_d2d, dtype=float),
        d2d_power_ratio=pd_over_pb,
    )
    return aggregate_moments(per_cell, users_per_cell, d2d_per_cell)


# ---------------------------------------------------------------------------
# geometry-conditioned aggregates (fading statistics at realized positions)

@dataclass(frozen=True)
class ConditionedAggregates:
    """Denominator moments conditioned on one realized drop geometry."""

    inv_sir_mean: float
    inv_sir_std: float
    d2d_denominator_mean: float | None


def conditioned_downlink_aggregates(
    realization: NetworkRealization,
    params: PathlossParams,
    m: int,
    pilot_length: int,
    pd_over_pb: float,
    user_index: int,
) -> ConditionedAggregates:
    """Fading-only moments of the target user's inverse SIR given the
    realized interferer positions (the CLT reference for a fixed drop).

    The contamination replicas are deterministic once positions are fixed,
    so they shift the mean without contributing variance.
    """
    layout = realization.layout
    target = realization.user_pos[0, user_index]
    rho_t = pathloss_bs(np.linalg.norm(target - layout.centers, axis=1), params.sigma_bs)

    mean = 0.0
    var = 0.0
    for i in range(1, layout.num_cells):
        rho_own = pathloss_bs(
            np.linalg.norm(realization.user_pos[i] - layout.centers[i], axis=1), params.sigma_bs
        )
        bm = bs_beam_mean_kernel(rho_t[i], rho_own, m)
        bs = bs_beam_sqmean_kernel(rho_t[i], rho_own, m)
        mean += float(bm.sum())
        var += float((bs - bm**2).sum())
        mean += float((rho_t[i] / rho_own[user_index]) ** 2 / pilot_length)

    if realization.d2d_tx_pos.shape[1]:
        d = np.linalg.norm(realization.d2d_tx_pos - target, axis=-1).ravel()
        mk = d2d_term_mean_kernel(d, params.kappa_ue, pd_over_pb)
        mean += float(mk.sum())
        var += float((mk**2).sum())  # exponential fading: Var = mean^2

    return ConditionedAggregates(mean, math.sqrt(var), None)


def conditioned_d2d_aggregates(
    realization: NetworkRealization,
    params: PathlossParams,
    m: int,
    pd_over_pb: float,
    link_index: int,
) -> ConditionedAggregates:
    """Mean D2D denominator given the realized drop geometry."""
    layout = realization.layout
    target = realization.d2d_rx_pos[0, link_index]
    rho_rx = pathloss_bs(np.linalg.norm(target - layout.centers, axis=1), params.sigma_bs)

    total = 0.0
    for i in range(layout.num_cells):
        rho_own = pathloss_bs(
            np.linalg.norm(realization.user_pos[i] - layout.centers[i], axis=1), params.sigma_bs
        )
        total += float(bs_to_d2d_mean_kernel(rho_rx[i], rho_own, m, 1.0 / pd_over_pb).sum())

    d = np.linalg.norm(realization.d2d_tx_pos - target, axis=-1)
    mask = np.ones_like(d, dtype=bool)
    mask[0, link_index] = False  # the desired link is not an interferer
    total += float((d[mask] ** (-params.kappa_ue)).sum())
    return ConditionedAggregates(math.nan, math.nan, total)


# ---------------------------------------------------------------------------
# vectorized provider for sweeps

class MomentProvider:
    """Vectorized closed-form moment evaluation for many target positions.

    The BS kernels separate into target pathlosses times cached hexagon
    moments, so they are exact and cheap per position.  The D2D positional
    kernels are integrated over a shared canonical point set; they vary
    slowly with the target and may be evaluated at a single reference
    point (e.g. a bin center) and reused for nearby targets.
    """

    def __init__(
        self,
        layout: HexLayout,
        params: PathlossParams,
        m: int,
        pilot_length: int,
        pd_over_pb: float,
        min_bs_distance_m: float = 0.0,
        exclusion_radius_m: float = DEFAULT_EXCLUSION_RADIUS_M,
        n_position_samples: int = 20_000,
        position_seed: int = 0,
    ):
        self.layout = layout
        self.params = params
        self.m = int(m)
        self.pilot_length = int(pilot_length)
        self.pd_over_pb = float(pd_over_pb)
        self.min_bs_distance_m = float(min_bs_distance_m)
        self.exclusion_radius_m = float(exclusion_radius_m)
        self.n_position_samples = int(n_position_samples)
        self.position_seed = int(position_seed)
        self._cm = _inverse_pathloss_moments(layout.circumradius_m, params.sigma_bs, min_bs_distance_m)
        self._offsets = _canonical_offsets(
            layout.circumradius_m, min_bs_distance_m, self.n_position_samples, position_seed
        )
        # pooled points of every cell, (C * n, 2)
        self._pooled = (self._offsets[None, :, :] + layout.centers[:, None, :]).reshape(-1, 2)

    # -- separable BS-side sums ------------------------------------------

    def _rho_targets(self, positions: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(np.asarray(positions, dtype=float))
        diff = p[:, None, :] - self.layout.centers[None, :, :]
        return pathloss_bs(np.sqrt((diff**2).sum(axis=-1)), self.params.sigma_bs)

    def bs_sums(self, positions) -> dict:
        """Per-position sums over interfering cells of the beam and
        pilot-composite moments."""
        rho = self._rho_targets(positions)
        beam_mean, beam_sq = _beam_folded(rho, self._cm, self.m)
        comp_mean, comp_sq = _composite_folded(rho, self._cm, self.m, self.pilot_length)
        sl = slice(1, None)
        return {
            "beam_mean": beam_mean[:, sl].sum(axis=1),
            "beam_var": (beam_sq - beam_mean**2)[:, sl].sum(axis=1),
            "pilot_mean": comp_mean[:, sl].sum(axis=1),
            "pilot_var": (comp_sq - comp_mean**2)[:, sl].sum(axis=1),
        }

    def bs_to_d2d_sums(self, positions) -> np.ndarray:
        """Sum over all cells of the mean BS term at a D2D receiver."""
        rho = self._rho_targets(positions)
        return (1.0 / self.pd_over_pb) * rho.sum(axis=1) * self._cm.c1 / self.m

    # -- D2D positional sums ----------------------------------------------

    def d2d_positional_moments(self, positions) -> tuple[np.ndarray, np.ndarray]:
        """Truncated positional moments E[d^-kappa], E[d^-2kappa] of one
        D2D transmitter per cell -> two (N, C) arrays.

        Chunked over positions to bound memory against the pooled set.
        """
        p = np.atleast_2d(np.asarray(positions, dtype=float))
        n = len(p)
        npts = len(self._offsets)
        c = self.layout.num_cells
        kappa = self.params.kappa_ue
        mean_c = np.empty((n, c))
        sq_c = np.empty((n, c))
        chunk = max(1, int(4e7) // max(self._pooled.shape[0], 1))
        for lo in range(0, n, chunk):
            sel = p[lo : lo + chunk]
            d = np.sqrt(((sel[:, None, :] - self._pooled[None, :, :]) ** 2).sum(axis=-1))
            kern = np.where(d >= self.exclusion_radius_m, np.maximum(d, 1e-12) ** (-kappa), 0.0)
            kern = kern.reshape(len(sel), c, npts)
            mean_c[lo : lo + chunk] = kern.mean(axis=2)
            sq_c[lo : lo + chunk] = (kern**2).mean(axis=2)
        return mean_c, sq_c

    # -- aggregated parameters for the outage models -----------------------

    def downlink_params(
        self, positions, users_per_cell: int, d2d_per_cell: int, d2d_reference=None
    ) -> tuple[np.ndarray, np.ndarray]:
        """(mean, std) of the inverse SIR for each target position.

        The slowly-varying D2D part may be evaluated at a single
        ``d2d_reference`` point and shared across the positions.
        """
        k, d = int(users_per_cell), int(d2d_per_cell)
        sums = self.bs_sums(positions)
        if k >= 1:
            mean = (k - 1) * sums["beam_mean"] + sums["pilot_mean"]
            var = (k - 1) * sums["beam_var"] + sums["pilot_var"]
        else:
            mean = np.zeros_like(sums["beam_mean"])
            var = np.zeros_like(sums["beam_var"])
        if d > 0:
            ref = positions if d2d_reference is None else d2d_reference
            mean_c, sq_c = self.d2d_positional_moments(ref)
            w = self.pd_over_pb
            term_mean = w * mean_c.sum(axis=1)
            term_var = (2.0 * w**2 * sq_c - (w * mean_c) ** 2).sum(axis=1)
            mean = mean + d * term_mean
            var = var + d * term_var
        return mean, np.sqrt(var)

    def d2d_denominator_means(
        self, positions, users_per_cell: int, d2d_per_cell: int, d2d_reference=None
    ) -> np.ndarray:
        """Mean D2D SIR denominator for each target receiver position."""
        k, d = int(users_per_cell), int(d2d_per_cell)
        if d < 1:
            raise DomainError("the D2D denominator is undefined without D2D links")
        total = k * self.bs_to_d2d_sums(positions)
        ref = positions if d2d_reference is None else d2d_reference
        mean_c, _ = self.d2d_positional_moments(ref)
        counts = np.full(self.layout.num_cells, float(d))
        counts[0] = d - 1
        g_part = (mean_c * counts).sum(axis=1)
        return total + g_part

    def moment_set(self, target_pos, users_per_cell: int, d2d_per_cell: int) -> MomentSet:
        """Full per-cell moment set for one target position."""
        return compute_moment_set(
            target_pos,
            self.layout,
            self.params,
            self.m,
            self.pilot_length,
            self.pd_over_pb,
            users_per_cell,
            d2d_per_cell,
            min_bs_distance_m=self.min_bs_distance_m,
            exclusion_radius_m=self.exclusion_radius_m,
            n_position_samples=self.n_position_samples,
            position_seed=self.position_seed,
        )
