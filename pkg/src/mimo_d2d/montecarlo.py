"""Seeded trial harness: drops, fading rounds, SIR collection, comparison.

Randomness is two-level: geometry drops times fading realizations per
drop.  Every stream is derived from the master seed and the (drop,
fading) indices alone, so results are bit-identical for any worker count
and independent of execution order.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import channel as ch
from . import geometry as geo
from .errors import ConfigurationError, DomainError, SingularMatrixError
from .goodput import (
    MIN_EMPIRICAL_SAMPLES,
    empirical_goodput,
    exp_quantile,
    q_function,
    q_inverse,
)
from .moments import MomentProvider
from .precoding import zf_precoder
from .sir import (
    asymptotic_d2d_sir_all,
    asymptotic_downlink_sir_all,
    exact_d2d_sir_all,
    exact_downlink_sir_all,
)

_GEOMETRY_TAG = 0x47454F  # "GEO"
_FADING_TAG = 0x464144    # "FAD"

RECORD_DTYPE = np.dtype(
    [
        ("entity", "U8"),
        ("drop", "i4"),
        ("fading", "i4"),
        ("index", "i4"),
        ("x", "f8"),
        ("y", "f8"),
        ("distance_m", "f8"),
        ("sir_exact", "f8"),
        ("sir_asym", "f8"),
    ]
)


@dataclass(frozen=True)
class ScenarioConfig:
    """All physical and numerical parameters of one scenario.

    Defaults: 19 cells of radius 300 m,
    250 BS antennas, 10 users and 10 D2D pairs per cell, pilot length 31,
    50 downlink symbols per frame-subband, pathloss exponents 3.76 / 4.37,
    46 dBm BS and 23 dBm D2D transmit power, 10 m D2D links, outage
    target 0.1.
    """

    cells: int = 19
    radius_m: float = 300.0
    antennas: int = 250
    users_per_cell: int = 10
    d2d_per_cell: int = 10
    pilot_length: int = 31
    symbols_per_frame: int = 50
    sigma_bs: float = 3.76
    kappa_ue: float = 4.37
    pb_dbm: float = 46.0
    pd_dbm: float = 23.0
    epsilon: float = 0.1
    d2d_link_distance_m: float = 10.0
    min_bs_distance_m: float = 10.0
    zeta: float = 4.0
    n_drops: int = 200
    n_fading_per_drop: int = 20
    n_distance_bins: int = 10
    n_position_samples: int = 20_000
    n_location_samples: int = 400
    moment_exclusion_radius_m: float = 10.0
    n_workers: int = 1
    master_seed: int = 20260809

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.cells not in geo.RING_COMPLETE_CELL_COUNTS:
            raise ConfigurationError(
                f"cells must be one of {geo.RING_COMPLETE_CELL_COUNTS}, got {self.cells}"
            )
        if self.radius_m <= 0:
            raise ConfigurationError("radius_m must be positive")
        if self.antennas < self.users_per_cell:
            raise ConfigurationError(
                f"need antennas >= users_per_cell for zero forcing, got "
                f"M={self.antennas} < K={self.users_per_cell}"
            )
        if self.users_per_cell < 0 or self.d2d_per_cell < 0:
            raise ConfigurationError("entity counts must be nonnegative")
        if self.pilot_length < 1:
            raise ConfigurationError("pilot_length must be >= 1")
        if self.symbols_per_frame < 1:
            raise ConfigurationError("symbols_per_frame must be >= 1")
        if self.sigma_bs <= 2 or self.kappa_ue <= 2:
            raise ConfigurationError("pathloss exponents must exceed 2")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigurationError(f"epsilon must lie in the open interval (0, 1), got {self.epsilon}")
        if self.d2d_link_distance_m <= 0:
            raise ConfigurationError("d2d_link_distance_m must be positive")
        if not 0.0 <= self.min_bs_distance_m < math.sqrt(3.0) / 2.0 * self.radius_m:
            raise ConfigurationError("min_bs_distance_m must lie in [0, inradius)")
        if self.zeta <= 1.0:
            raise ConfigurationError("zeta must exceed 1")
        if self.n_drops < 0 or self.n_fading_per_drop < 0:
            raise ConfigurationError("trial counts must be nonnegative")
        if self.n_drops > 0 and self.n_fading_per_drop < 1:
            raise ConfigurationError("n_fading_per_drop must be >= 1 when n_drops > 0")
        if self.n_distance_bins < 1:
            raise ConfigurationError("n_distance_bins must be >= 1")
        if self.n_workers < 1:
            raise ConfigurationError("n_workers must be >= 1")

    # -- derived quantities -------------------------------------------------

    @property
    def pb_watts(self) -> float:
        return dbm_to_watts(self.pb_dbm)

    @property
    def pd_watts(self) -> float:
        return dbm_to_watts(self.pd_dbm)

    @property
    def pd_over_pb(self) -> float:
        return 10.0 ** ((self.pd_dbm - self.pb_dbm) / 10.0)

    @property
    def d2d_signal_gain(self) -> float:
        """Mean desired D2D link power gain at the configured link distance."""
        return self.d2d_link_distance_m ** (-self.kappa_ue)

    def pathloss_params(self) -> ch.PathlossParams:
        return ch.PathlossParams(sigma_bs=self.sigma_bs, kappa_ue=self.kappa_ue)

    def pilot_config(self) -> ch.PilotConfig:
        return ch.PilotConfig(pilot_length=self.pilot_length)

    def bin_edges(self) -> np.ndarray:
        return np.linspace(self.min_bs_distance_m, self.radius_m, self.n_distance_bins + 1)

    def replace(self, **kwargs) -> "ScenarioConfig":
        return replace(self, **kwargs)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json_file(cls, path) -> "ScenarioConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(data)


def dbm_to_watts(p_dbm: float) -> float:
    """Convert a dBm power figure to watts."""
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


@dataclass
class TrialBatch:
    """All SIR samples of one seeded run, with exact sample accounting.

    ``records`` carries one row per (drop, fading, entity) with the exact
    and asymptotic SIRs side by side; ``n_excluded`` counts samples lost
    to numerically singular realizations (never silently dropped).
    """

    config: ScenarioConfig
    records: np.ndarray
    n_excluded: int = 0

    def select(self, entity: str, variant: str = "exact") -> np.ndarray:
        rows = self.records[self.records["entity"] == entity]
        col = "sir_exact" if variant == "exact" else "sir_asym"
        return rows[col]

    def rows(self, entity: str) -> np.ndarray:
        return self.records[self.records["entity"] == entity]


def _drop_realization(config: ScenarioConfig, layout: geo.HexLayout, drop: int) -> geo.NetworkRealization:
    rng = np.random.default_rng(np.random.SeedSequence([config.master_seed, _GEOMETRY_TAG, drop]))
    return geo.drop_network(config, layout, rng)


def _fading_seed(config: ScenarioConfig, drop: int, fading: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([config.master_seed, _FADING_TAG, drop, fading])


def _run_drop(config: ScenarioConfig, layout: geo.HexLayout, drop: int) -> tuple[np.ndarray, int]:
    """All fading rounds of one drop -> (records, n_excluded)."""
    realization = _drop_realization(config, layout, drop)
    params = config.pathloss_params()
    pilot = config.pilot_config()
    k, d = config.users_per_cell, config.d2d_per_cell
    pb, pd = config.pb_watts, config.pd_watts

    user_dist = np.linalg.norm(realization.user_pos[0], axis=1)
    rx_dist = np.linalg.norm(realization.d2d_rx_pos[0], axis=1)

    out = []
    excluded = 0
    for fading in range(config.n_fading_per_drop):
        cs = ch.generate_channels(realization, params, config.antennas, _fading_seed(config, drop, fading))
        cs = ch.estimate_channels(cs, pilot)
        try:
            precoders = [zf_precoder(cs.h_hat[i], cell_index=i) for i in range(config.cells)]
        except SingularMatrixError:
            excluded += k + d
            continue
        dl_exact = exact_downlink_sir_all(cs, precoders, pb, pd, cell=0)
        dl_asym = asymptotic_downlink_sir_all(cs, pb, pd, config.pilot_length, config.antennas)
        rec = np.zeros(k + d, dtype=RECORD_DTYPE)
        rec["drop"] = drop
        rec["fading"] = fading
        rec[:k]["entity"] = "downlink"
        rec[:k]["index"] = np.arange(k)
        rec[:k]["x"] = realization.user_pos[0, :, 0]
        rec[:k]["y"] = realization.user_pos[0, :, 1]
        rec[:k]["distance_m"] = user_dist
        rec[:k]["sir_exact"] = dl_exact
        rec[:k]["sir_asym"] = dl_asym
        if d:
            d2d_exact = exact_d2d_sir_all(cs, precoders, pb, pd, cell=0)
            d2d_asym = asymptotic_d2d_sir_all(cs, pb, pd, config.antennas)
            rec[k:]["entity"] = "d2d"
            rec[k:]["index"] = np.arange(d)
            rec[k:]["x"] = realization.d2d_rx_pos[0, :, 0]
            rec[k:]["y"] = realization.d2d_rx_pos[0, :, 1]
            rec[k:]["distance_m"] = rx_dist
            rec[k:]["sir_exact"] = d2d_exact
            rec[k:]["sir_asym"] = d2d_asym
        out.append(rec)
    if not out:
        return np.zeros(0, dtype=RECORD_DTYPE), excluded
    return np.concatenate(out), excluded


def _run_drop_task(args) -> tuple[np.ndarray, int]:
    config_dict, drop = args
    config = ScenarioConfig.from_dict(config_dict)
    layout = geo.build_layout(config.cells, config.radius_m)
    return _run_drop(config, layout, drop)


def run_batch(config: ScenarioConfig) -> TrialBatch:
    """Run every (drop, fading) trial of the configured scenario.

    Deterministic for a fixed master seed regardless of ``n_workers``:
    each drop derives its own streams and results are merged in drop
    order.
    """
    layout = geo.build_layout(config.cells, config.radius_m)
    pieces = []
    excluded = 0
    if config.n_workers == 1 or config.n_drops <= 1:
        for drop in range(config.n_drops):
            rec, exc = _run_drop(config, layout, drop)
            pieces.append(rec)
            excluded += exc
    else:
        tasks = [(config.to_dict(), drop) for drop in range(config.n_drops)]
        with ProcessPoolExecutor(max_workers=config.n_workers) as pool:
            for rec, exc in pool.map(_run_drop_task, tasks, chunksize=1):
                pieces.append(rec)
                excluded += exc
    records = np.concatenate(pieces) if pieces else np.zeros(0, dtype=RECORD_DTYPE)
    return TrialBatch(config=config, records=records, n_excluded=excluded)


def moment_provider(config: ScenarioConfig) -> MomentProvider:
    """Analytic moment provider matched to the scenario's position law."""
    return MomentProvider(
        layout=geo.build_layout(config.cells, config.radius_m),
        params=config.pathloss_params(),
        m=config.antennas,
        pilot_length=config.pilot_length,
        pd_over_pb=config.pd_over_pb,
        min_bs_distance_m=config.min_bs_distance_m,
        exclusion_radius_m=config.moment_exclusion_radius_m,
        n_position_samples=config.n_position_samples,
        position_seed=config.master_seed,
    )


@dataclass(frozen=True)
class ComparisonRow:
    entity: str
    bin_center_m: float
    analytic_goodput_bits: float
    empirical_goodput_bits: float
    n_samples: int
    abs_gap_bits: float
    rel_gap: float


@dataclass
class ComparisonTable:
    rows: list[ComparisonRow] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


def _mixture_threshold(cdf_at, epsilon: float, bracket: tuple[float, float]) -> float:
    """Solve mean_i CDF(t | params_i) = epsilon for t by bisection."""
    lo, hi = bracket
    f_lo = cdf_at(lo) - epsilon
    f_hi = cdf_at(hi) - epsilon
    expand = 0
    while f_lo > 0 and expand < 60:
        lo *= 0.5
        f_lo = cdf_at(lo) - epsilon
        expand += 1
    expand = 0
    while f_hi < 0 and expand < 60:
        hi *= 2.0
        f_hi = cdf_at(hi) - epsilon
        expand += 1
    if f_lo > 0 or f_hi < 0:
        raise DomainError("mixture threshold bracket failed")
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if cdf_at(mid) < epsilon:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-12:
            break
    return math.sqrt(lo * hi)


def analytic_bin_threshold(
    provider: MomentProvider,
    entity: str,
    positions: np.ndarray,
    bin_center: np.ndarray,
    config: ScenarioConfig,
) -> float:
    """Analytic epsilon-threshold for a bin's sampled target population.

    The closed-form outage CDF is evaluated per sampled position and mixed
    uniformly, which matches the pooling of the empirical quantile; the
    slowly-varying D2D positional terms are taken at the bin center.
    """
    eps = config.epsilon
    k, d = config.users_per_cell, config.d2d_per_cell
    ref = np.atleast_2d(bin_center)
    if entity == "downlink":
        mean, std = provider.downlink_params(positions, k, d, d2d_reference=ref)
        t0 = 1.0 / (q_inverse(eps) * std + mean)
        t0 = t0[np.isfinite(t0) & (t0 > 0)]
        bracket = (float(t0.min()) / 4.0, float(t0.max()) * 4.0) if t0.size else (1e-9, 1e9)

        def cdf_at(t):
            return float(np.mean(_gaussian_cdf_mixture(t, mean, std)))

    else:
        mu = provider.d2d_denominator_means(positions, k, d, d2d_reference=ref)
        rho = config.d2d_signal_gain
        t0 = exp_quantile(eps, rho) / mu
        bracket = (float(t0.min()) / 4.0, float(t0.max()) * 4.0)

        def cdf_at(t):
            return float(np.mean(-np.expm1(-t * mu / rho)))

    return _mixture_threshold(cdf_at, eps, bracket)


def _gaussian_cdf_mixture(t: float, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    """Per-position downlink outage CDF values at one threshold."""
    out = np.empty_like(mean)
    degenerate = std == 0.0
    if degenerate.any():
        out[degenerate] = (1.0 / t <= mean[degenerate]).astype(float)
    ok = ~degenerate
    if ok.any():
        out[ok] = q_function((1.0 / t - mean[ok]) / std[ok])
    return out


def compare(batch: TrialBatch, provider: MomentProvider) -> ComparisonTable:
    """Per-distance-bin comparison of empirical and analytic goodput."""
    config = batch.config
    edges = config.bin_edges()
    centers = 0.5 * (edges[:-1] + edges[1:])
    table = ComparisonTable()
    symbols = config.symbols_per_frame
    eps = config.epsilon
    for entity in ("downlink", "d2d"):
        rows = batch.rows(entity)
        if rows.size == 0:
            table.diagnostics.append(f"{entity}: no samples")
            continue
        which = np.digitize(rows["distance_m"], edges) - 1
        out_of_range = int(((which < 0) | (which >= len(centers))).sum())
        if out_of_range:
            table.diagnostics.append(
                f"{entity}: {out_of_range} samples outside [{edges[0]:.1f}, {edges[-1]:.1f}] m"
            )
        for b, center in enumerate(centers):
            sel = rows[which == b]
            if sel.size == 0:
                table.diagnostics.append(f"{entity} bin {center:.1f} m: empty, skipped")
                continue
            if sel.size < MIN_EMPIRICAL_SAMPLES:
                table.diagnostics.append(
                    f"{entity} bin {center:.1f} m: only {sel.size} samples, skipped"
                )
                continue
            emp = empirical_goodput(sel["sir_exact"], eps, symbols, entity=entity)
            positions = np.column_stack([sel["x"], sel["y"]])
            center_xy = np.array([center, 0.0])
            t_analytic = analytic_bin_threshold(provider, entity, positions, center_xy, config)
            g_analytic = (1.0 - eps) * symbols * math.log2(1.0 + t_analytic)
            gap = g_analytic - emp.avg_goodput_bits
            rel = abs(gap) / emp.avg_goodput_bits if emp.avg_goodput_bits else math.inf
            table.rows.append(
                ComparisonRow(
                    entity=entity,
                    bin_center_m=float(center),
                    analytic_goodput_bits=float(g_analytic),
                    empirical_goodput_bits=float(emp.avg_goodput_bits),
                    n_samples=int(sel.size),
                    abs_gap_bits=float(gap),
                    rel_gap=float(rel),
                )
            )
    return table
