"""Per-drop SIR evaluation: exact expressions and large-antenna asymptotics.

Exact downlink SIR (unit numerator, per-stream power P_b):

    1 / ( ||dh P_i||^2 + sum_{l != i} ||h P_l||^2 + (P_d/P_b) sum |u|^2 )

where dh is the row of the pilot-contamination error feeding the own-cell
precoder.  The exact D2D SIR divides the desired link power by BS
interference scaled with P_b/P_d plus all other D2D link powers.  The
asymptotic variants replace the precoded inter-cell terms by the
cross-correlation of the raw channel vectors plus a deterministic
contamination floor, and are defined for target-cell entities only.

Only the power ratio enters any SIR; scaling P_b and P_d together changes
nothing.  A denominator of exactly zero yields an infinite SIR sentinel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .geometry import NetworkRealization


@dataclass(frozen=True)
class SirSample:
    """One SIR evaluation for a downlink user or a D2D receiver."""

    entity: str                  # "downlink" or "d2d"
    cell: int
    index: int
    sir_linear: float
    distance_to_bs_m: float
    variant: str                 # "exact" or "asymptotic"


def _stack_precoders(precoders) -> np.ndarray:
    return np.stack([p.matrix for p in precoders])  # (C, M, K)


def _safe_ratio(num, denom: np.ndarray) -> np.ndarray:
    """num / denom with the +inf sentinel where the denominator is exactly zero."""
    num = np.broadcast_to(np.asarray(num, dtype=float), denom.shape)
    out = np.empty_like(denom)
    zero = denom == 0.0
    out[zero] = np.inf
    out[~zero] = num[~zero] / denom[~zero]
    return out


def exact_downlink_sir_all(
    channels: ChannelSet, precoders, pb: float, pd: float, cell: int = 0
) -> np.ndarray:
    """Exact SIR of every downlink user in ``cell`` -> shape (K,)."""
    if channels.h_hat is None:
        raise ValueError("channel estimates missing; run estimate_channels first")
    p = _stack_precoders(precoders)
    delta = channels.h_hat[cell] - channels.h[cell, cell]          # (K, M)
    own = np.sum(np.abs(delta @ p[cell]) ** 2, axis=1)             # (K,)
    cross = np.einsum("lkm,lmj->lkj", channels.h[:, cell], p)      # (C, K, K)
    inter = np.sum(np.abs(cross) ** 2, axis=2)                     # (C, K)
    inter = inter.sum(axis=0) - inter[cell]
    d2d = np.sum(np.abs(channels.u[cell]) ** 2, axis=(0, 1))       # (K,)
    denom = own + inter
    if d2d.any():
        denom = denom + (pd / pb) * d2d
    return _safe_ratio(1.0, denom)


def exact_d2d_sir_all(
    channels: ChannelSet, precoders, pb: float, pd: float, cell: int = 0
) -> np.ndarray:
    """Exact SIR of every D2D receiver in ``cell`` -> shape (D,)."""
    p = _stack_precoders(precoders)
    g2 = np.abs(channels.g[cell]) ** 2                             # (C, D, D)
    d = g2.shape[1]
    if d == 0:
        return np.empty(0)
    sig = g2[cell, np.arange(d), np.arange(d)]                     # (D,)
    cross = np.einsum("ljm,lmq->ljq", channels.v[cell], p)         # (C, D, K)
    bs = np.sum(np.abs(cross) ** 2, axis=(0, 2))                   # (D,)
    masked = g2.copy()
    masked[cell, np.arange(d), np.arange(d)] = 0.0                 # drop the desired link
    other = masked.sum(axis=(0, 1))                                # (D,)
    denom = (pb / pd) * bs + other
    return _safe_ratio(sig, denom)


def asymptotic_downlink_sir_all(
    channels: ChannelSet, pb: float, pd: float, pilot_length: int, m: int
) -> np.ndarray:
    """Large-antenna SIR approximation for every target-cell user -> (K,).

    Each interfering BS contributes K random beam-gain terms plus one
    deterministic contamination floor from the user sharing the target's
    pilot index (pilot reuse couples equal indices across cells).
    """
    c = channels.h.shape[0]
    idx = np.arange(c)
    h_own = channels.h[idx, idx]                                   # (C, K, M)
    rho_own = channels.rho_h[idx, idx]                             # (C, K)
    inner = np.einsum("ikm,ijm->ijk", channels.h[:, 0], h_own.conj())
    beam = np.abs(inner) ** 2 / (m * rho_own[:, :, None]) ** 2     # (C, K_j, K_k)
    contamination = (channels.rho_h[:, 0, :] / rho_own) ** 2 / float(pilot_length)  # (C, K)
    per_cell = beam.sum(axis=1) + contamination                    # (C, K_k)
    bs = per_cell.sum(axis=0) - per_cell[0]
    d2d = np.sum(np.abs(channels.u[0]) ** 2, axis=(0, 1))
    denom = bs.copy()
    if d2d.any():
        denom = denom + (pd / pb) * d2d
    return _safe_ratio(1.0, denom)


def asymptotic_d2d_sir_all(
    channels: ChannelSet, pb: float, pd: float, m: int
) -> np.ndarray:
    """Large-antenna SIR approximation for every target-cell D2D link -> (D,)."""
    c = channels.h.shape[0]
    idx = np.arange(c)
    h_own = channels.h[idx, idx]
    rho_own = channels.rho_h[idx, idx]
    g2 = np.abs(channels.g[0]) ** 2
    d = g2.shape[1]
    if d == 0:
        return np.empty(0)
    sig = g2[0, np.arange(d), np.arange(d)]
    inner = np.einsum("idm,ijm->ijd", channels.v[0], h_own.conj())  # (C, K, D)
    beam = np.abs(inner) ** 2 / (m * rho_own[:, :, None]) ** 2
    bs = beam.sum(axis=(0, 1))                                      # (D,)
    masked = g2.copy()
    masked[0, np.arange(d), np.arange(d)] = 0.0
    other = masked.sum(axis=(0, 1))
    denom = (pb / pd) * bs + other
    return _safe_ratio(sig, denom)


def _user_distance(realization: NetworkRealization, cell: int, k: int) -> float:
    return float(np.linalg.norm(realization.user_pos[cell, k] - realization.layout.centers[cell]))


def _rx_distance(realization: NetworkRealization, cell: int, j: int) -> float:
    return float(np.linalg.norm(realization.d2d_rx_pos[cell, j] - realization.layout.centers[cell]))


def exact_downlink_sir(
    realization: NetworkRealization,
    channels: ChannelSet,
    precoders,
    pb: float,
    pd: float,
    user: tuple[int, int],
) -> SirSample:
    """Exact SIR of downlink user ``(cell, k)``."""
    cell, k = user
    value = exact_downlink_sir_all(channels, precoders, pb, pd, cell=cell)[k]
    return SirSample("downlink", cell, k, float(value), _user_distance(realization, cell, k), "exact")


def exact_d2d_sir(
    realization: NetworkRealization,
    channels: ChannelSet,
    precoders,
    pb: float,
    pd: float,
    link: tuple[int, int],
) -> SirSample:
    """Exact SIR of D2D receiver ``(cell, j)``."""
    cell, j = link
    value = exact_d2d_sir_all(channels, precoders, pb, pd, cell=cell)[j]
    return SirSample("d2d", cell, j, float(value), _rx_distance(realization, cell, j), "exact")


def asymptotic_downlink_sir(
    realization: NetworkRealization,
    channels: ChannelSet,
    pb: float,
    pd: float,
    pilot_length: int,
    m: int,
    k: int,
) -> SirSample:
    """Asymptotic SIR of target-cell downlink user ``k``."""
    value = asymptotic_downlink_sir_all(channels, pb, pd, pilot_length, m)[k]
    return SirSample("downlink", 0, k, float(value), _user_distance(realization, 0, k), "asymptotic")


def asymptotic_d2d_sir(
    realization: NetworkRealization,
    channels: ChannelSet,
    pb: float,
    pd: float,
    m: int,
    j: int,
) -> SirSample:
    """Asymptotic SIR of target-cell D2D link ``j``."""
    value = asymptotic_d2d_sir_all(channels, pb, pd, m)[j]
    return SirSample("d2d", 0, j, float(value), _rx_distance(realization, 0, j), "asymptotic")
