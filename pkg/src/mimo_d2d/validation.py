"""Property suites behind the ``validate`` subcommand and the acceptance
tests: zero-forcing residuals, distribution fits, and asymptotic-SIR
convergence studies.

The distribution checks resample fading at one fixed drop geometry, so
they use a reduced sampler that only draws the sub-tensors entering the
asymptotic SIR expressions instead of a full channel set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import channel as ch
from . import geometry as geo
from . import moments as mo
from .montecarlo import ScenarioConfig, _drop_realization
from .precoding import zf_precoder
from .sir import (
    asymptotic_d2d_sir_all,
    asymptotic_downlink_sir_all,
    exact_d2d_sir_all,
    exact_downlink_sir_all,
)

_VALIDATION_TAG = 0x56414C


@dataclass
class PropertyResult:
    name: str
    passed: bool
    statistic: float
    threshold: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.detail or f'{self.statistic:.4g} vs {self.threshold:.4g}'}"


@dataclass
class ValidationReport:
    results: list[PropertyResult] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {
            "all_passed": self.all_passed,
            "properties": [
                {
                    "name": r.name,
                    "passed": r.passed,
                    "statistic": r.statistic,
                    "threshold": r.threshold,
                    "detail": r.detail,
                }
                for r in self.results
            ],
        }


# ---------------------------------------------------------------------------
# fast fixed-geometry fading resampler

class FixedGeometrySampler:
    """Redraws fading for one realized drop, limited to the target-cell
    asymptotic SIR inputs (cross channels to the target entities and each
    BS's own-user channels)."""

    def __init__(self, config: ScenarioConfig, drop: int = 0):
        self.config = config
        layout = geo.build_layout(config.cells, config.radius_m)
        self.realization = _drop_realization(config, layout, drop)
        params = config.pathloss_params()
        lay = layout
        real = self.realization
        self.rho_to_users = ch.pathloss_bs(
            np.linalg.norm(real.user_pos[0][None, :, :] - lay.centers[:, None, :], axis=-1),
            params.sigma_bs,
        )  # (C, K): BS i -> target user k
        self.rho_own = ch.pathloss_bs(
            np.linalg.norm(real.user_pos - lay.centers[:, None, :], axis=-1), params.sigma_bs
        )  # (C, K): BS i -> its own user j
        if config.d2d_per_cell:
            self.rho_to_rx = ch.pathloss_bs(
                np.linalg.norm(real.d2d_rx_pos[0][None, :, :] - lay.centers[:, None, :], axis=-1),
                params.sigma_bs,
            )  # (C, D)
            d_uk = np.linalg.norm(
                real.d2d_tx_pos[:, :, None, :] - real.user_pos[0][None, None, :, :], axis=-1
            )
            self.rho_u = ch.pathloss_ue(d_uk, params.kappa_ue)  # (C, D, K)
            d_gj = np.linalg.norm(
                real.d2d_tx_pos[:, :, None, :] - real.d2d_rx_pos[0][None, None, :, :], axis=-1
            )
            self.rho_g = ch.pathloss_ue(d_gj, params.kappa_ue)  # (C, D, D)

    def _cn(self, rng, shape, variance):
        z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        return np.sqrt(np.asarray(variance) / 2.0) * z

    def draw_inverse_downlink_sir(self, fading_index: int, user: int) -> float:
        """1 / (asymptotic downlink SIR) for one fading redraw."""
        cfg = self.config
        m = cfg.antennas
        rng = np.random.default_rng(
            np.random.SeedSequence([cfg.master_seed, _VALIDATION_TAG, fading_index])
        )
        h_t = self._cn(rng, (cfg.cells, m), self.rho_to_users[:, user, None])
        h_own = self._cn(rng, (cfg.cells, cfg.users_per_cell, m), self.rho_own[:, :, None])
        inner = np.einsum("im,ijm->ij", h_t, h_own.conj())
        beam = np.abs(inner) ** 2 / (m * self.rho_own) ** 2
        contamination = (self.rho_to_users[:, user] / self.rho_own[:, user]) ** 2 / cfg.pilot_length
        per_cell = beam.sum(axis=1) + contamination
        total = float(per_cell[1:].sum())
        if cfg.d2d_per_cell:
            u2 = rng.exponential(self.rho_u[:, :, user])
            total += cfg.pd_over_pb * float(u2.sum())
        return total

    def draw_d2d_signal_power(self, fading_index: int, link: int) -> float:
        """|g|^2 of the desired D2D link for one fading redraw."""
        cfg = self.config
        rng = np.random.default_rng(
            np.random.SeedSequence([cfg.master_seed, _VALIDATION_TAG + 1, fading_index])
        )
        return float(rng.exponential(self.rho_g[0, link, link]))

    def draw_inverse_d2d_sir_scaled(self, fading_index: int, link: int) -> float:
        """Denominator / signal of the asymptotic D2D SIR for one redraw."""
        cfg = self.config
        m = cfg.antennas
        rng = np.random.default_rng(
            np.random.SeedSequence([cfg.master_seed, _VALIDATION_TAG + 2, fading_index])
        )
        v = self._cn(rng, (cfg.cells, m), self.rho_to_rx[:, link, None])
        h_own = self._cn(rng, (cfg.cells, cfg.users_per_cell, m), self.rho_own[:, :, None])
        inner = np.einsum("im,ijm->ij", v, h_own.conj())
        beam = np.abs(inner) ** 2 / (m * self.rho_own) ** 2
        total = float(beam.sum()) / cfg.pd_over_pb
        g2 = rng.exponential(self.rho_g[:, :, link])
        sig = float(rng.exponential(self.rho_g[0, link, link]))
        total += float(g2.sum()) - float(g2[0, link])
        return total / sig


# ---------------------------------------------------------------------------
# property checks

def check_zf_residual(
    users: int = 10, antennas: int = 250, n_instances: int = 100, seed: int = 3
) -> PropertyResult:
    """Frobenius residual of the zero-forcing identity on random
    well-conditioned instances."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        h = (rng.standard_normal((users, antennas)) + 1j * rng.standard_normal((users, antennas)))
        p = zf_precoder(h)
        worst = max(worst, float(np.linalg.norm(h @ p.matrix - np.eye(users), "fro")))
    return PropertyResult(
        name="zf_residual",
        passed=worst < 1e-8,
        statistic=worst,
        threshold=1e-8,
        detail=f"worst ||HP - I||_F = {worst:.3e} over {n_instances} instances at (K, M) = ({users}, {antennas})",
    )


def check_downlink_gaussian_fit(
    config: ScenarioConfig, n_draws: int = 10_000, drop: int = 0, user: int = 0
) -> PropertyResult:
    """KS distance of the inverse asymptotic downlink SIR (fixed geometry,
    fading resampled) to the Gaussian with geometry-conditioned moments."""
    sampler = FixedGeometrySampler(config, drop)
    inv = np.fromiter(
        (sampler.draw_inverse_downlink_sir(f, user) for f in range(n_draws)),
        dtype=float,
        count=n_draws,
    )
    cond = mo.conditioned_downlink_aggregates(
        sampler.realization,
        config.pathloss_params(),
        config.antennas,
        config.pilot_length,
        config.pd_over_pb,
        user,
    )
    ks = stats.kstest(inv, "norm", args=(cond.inv_sir_mean, cond.inv_sir_std)).statistic
    return PropertyResult(
        name="downlink_gaussian_fit",
        passed=ks < 0.05,
        statistic=float(ks),
        threshold=0.05,
        detail=f"KS distance {ks:.4f} over {n_draws} fading draws (threshold 0.05)",
    )


def check_d2d_exponential_fit(
    config: ScenarioConfig, n_draws: int = 10_000, drop: int = 0, link: int = 0,
    significance: float = 0.01,
) -> PropertyResult:
    """KS test of the desired D2D link power against the exponential law
    with mean equal to its pathloss."""
    sampler = FixedGeometrySampler(config, drop)
    sig = np.fromiter(
        (sampler.draw_d2d_signal_power(f, link) for f in range(n_draws)),
        dtype=float,
        count=n_draws,
    )
    rho = sampler.rho_g[0, link, link]
    p_value = stats.kstest(sig, "expon", args=(0.0, rho)).pvalue
    return PropertyResult(
        name="d2d_exponential_fit",
        passed=p_value > significance,
        statistic=float(p_value),
        threshold=significance,
        detail=f"KS p-value {p_value:.4f} vs significance {significance}",
    )


def convergence_study(
    config: ScenarioConfig,
    antenna_counts=(32, 64, 256),
    n_realizations: int = 500,
    drop: int = 0,
) -> dict:
    """Median relative gap between exact and asymptotic SIR at fixed
    geometry, per antenna count and entity type."""
    layout = geo.build_layout(config.cells, config.radius_m)
    realization = _drop_realization(config, layout, drop)
    params = config.pathloss_params()
    pilot = config.pilot_config()
    pb, pd = config.pb_watts, config.pd_watts
    medians = {"downlink": [], "d2d": []}
    for m in antenna_counts:
        gaps_dl, gaps_d2d = [], []
        for f in range(n_realizations):
            ss = np.random.SeedSequence([config.master_seed, _VALIDATION_TAG + 3, m, f])
            cs = ch.generate_channels(realization, params, m, ss)
            cs = ch.estimate_channels(cs, pilot)
            precoders = [zf_precoder(cs.h_hat[i], i) for i in range(config.cells)]
            de = exact_downlink_sir_all(cs, precoders, pb, pd)
            da = asymptotic_downlink_sir_all(cs, pb, pd, config.pilot_length, m)
            gaps_dl.append(np.abs(de - da) / de)
            if config.d2d_per_cell:
                ge = exact_d2d_sir_all(cs, precoders, pb, pd)
                ga = asymptotic_d2d_sir_all(cs, pb, pd, m)
                gaps_d2d.append(np.abs(ge - ga) / ge)
        medians["downlink"].append(float(np.median(np.stack(gaps_dl))))
        if gaps_d2d:
            medians["d2d"].append(float(np.median(np.stack(gaps_d2d))))
    return {"antenna_counts": list(antenna_counts), "median_rel_gap": medians}


def check_asymptotic_convergence(
    config: ScenarioConfig, antenna_counts=(32, 64, 256), n_realizations: int = 500
) -> PropertyResult:
    study = convergence_study(config, antenna_counts, n_realizations)
    gaps = study["median_rel_gap"]
    ok = all(
        all(a > b for a, b in zip(seq, seq[1:]))
        for seq in gaps.values()
        if seq
    )
    detail = "; ".join(
        f"{name}: " + " > ".join(f"{g:.3f}" for g in seq) for name, seq in gaps.items() if seq
    )
    worst = max((seq[-1] for seq in gaps.values() if seq), default=math.nan)
    return PropertyResult(
        name="asymptotic_convergence",
        passed=ok,
        statistic=float(worst),
        threshold=0.0,
        detail=f"median |exact-asym|/exact over M={list(antenna_counts)}: {detail}",
    )


def run_validation(
    config: ScenarioConfig,
    n_distribution_draws: int = 10_000,
    n_convergence_realizations: int = 500,
    n_zf_instances: int = 100,
) -> ValidationReport:
    """Run every property suite at the configured scenario."""
    report = ValidationReport()
    report.results.append(
        check_zf_residual(config.users_per_cell, config.antennas, n_zf_instances)
    )
    report.results.append(check_downlink_gaussian_fit(config, n_distribution_draws))
    if config.d2d_per_cell:
        report.results.append(check_d2d_exponential_fit(config, n_distribution_draws))
    report.results.append(
        check_asymptotic_convergence(config, n_realizations=n_convergence_realizations)
    )
    return report
