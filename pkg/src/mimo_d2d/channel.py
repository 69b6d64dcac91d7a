"""Power-law pathloss, Rayleigh fading generation, and contaminated CSI.

All fading coefficients are circularly-symmetric complex Gaussians whose
per-component variance equals the link pathloss.  Channel estimation at each
BS uses the closed form of the match-filter output under full pilot reuse:
the estimate equals the true matrix plus the sum of the co-pilot cells'
matrices scaled by 1/sqrt(pilot_length).  No pilot symbols are materialized
and thermal noise is neglected throughout (interference-limited regime).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DomainError
from .geometry import NetworkRealization, distances_to_centers


@dataclass(frozen=True)
class PathlossParams:
    """Pathloss exponents: ``sigma_bs`` for BS links, ``kappa_ue`` for
    device-to-device links.  Both must exceed 2 so far-field interference
    stays integrable."""

    sigma_bs: float
    kappa_ue: float

    def __post_init__(self):
        if self.sigma_bs <= 2 or self.kappa_ue <= 2:
            raise ConfigurationError(
                f"pathloss exponents must be > 2, got sigma_bs={self.sigma_bs}, "
                f"kappa_ue={self.kappa_ue}"
            )


@dataclass(frozen=True)
class PilotConfig:
    """Uplink pilot parameters.

    ``uplink_power`` cancels out of the match-filter estimate and never
    affects any SIR; it is carried only for completeness.
    """

    pilot_length: int
    uplink_power: float = 1.0

    def __post_init__(self):
        if self.pilot_length < 1:
            raise ConfigurationError(f"pilot_length must be >= 1, got {self.pilot_length}")


def pathloss_bs(dist, sigma_bs: float):
    """BS-to-device power gain ``dist**-sigma_bs``.  ``dist`` may be an array."""
    d = np.asarray(dist, dtype=float)
    if np.any(d <= 0):
        raise DomainError(f"distance must be positive, got {dist}")
    out = d ** (-sigma_bs)
    return float(out) if np.isscalar(dist) or out.ndim == 0 else out


def pathloss_ue(dist, kappa_ue: float):
    """Device-to-device power gain ``dist**-kappa_ue``."""
    return pathloss_bs(dist, kappa_ue)


def draw_vector_channel(m: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    """One M-component fading vector, per-component variance ``rho``
    (real and imaginary parts each carry rho/2)."""
    if m < 1:
        raise DomainError(f"antenna count must be >= 1, got {m}")
    if rho <= 0:
        raise DomainError(f"variance must be positive, got {rho}")
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return math.sqrt(rho / 2.0) * z


def _complex_gaussian(rng: np.random.Generator, shape, variance: np.ndarray) -> np.ndarray:
    """Array of independent CN(0, variance) entries; ``variance`` broadcasts
    over the trailing axes of ``shape``."""
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return np.sqrt(np.asarray(variance) / 2.0) * z


@dataclass(frozen=True)
class ChannelSet:
    """Fading draws for one network realization.

    ``h[i, l, k, :]`` is the vector channel from BS ``i`` to downlink user
    ``(l, k)``; ``rho_h[i, l, k]`` its per-component variance.  The scalar
    user-side coefficients are keyed by receiving cell: ``u[l][i, m, k]``
    runs from D2D transmitter ``(i, m)`` to user ``(l, k)``, and
    ``g[l][i, m, j]`` to D2D receiver ``(l, j)``; ``v[l][i, j, :]`` is the
    vector channel from BS ``i`` to D2D receiver ``(l, j)``.  ``h_hat[i]``
    is BS ``i``'s contaminated estimate of its own K x M user matrix
    (filled by :func:`estimate_channels`).

    Instances are treated as immutable after construction.
    """

    m: int
    h: np.ndarray                 # (C, C, K, M)
    rho_h: np.ndarray             # (C, C, K)
    v: dict                        # {cell: (C, D, M)}
    rho_v: dict                    # {cell: (C, D)}
    u: dict                        # {cell: (C, D, K)}
    rho_u: dict                    # {cell: (C, D, K)}
    g: dict                        # {cell: (C, D, D)}
    rho_g: dict                    # {cell: (C, D, D)}
    h_hat: np.ndarray | None = None  # (C, K, M)


def generate_channels(
    realization: NetworkRealization,
    params: PathlossParams,
    m: int,
    seed_seq: np.random.SeedSequence,
    rx_cells=None,
) -> ChannelSet:
    """Draw every fading coefficient for one realization.

    ``rx_cells`` limits the user-side tensors (v, u, g) to the listed
    receiving cells (default: target cell only).  Each logical block gets
    its own child stream of ``seed_seq``, so restricting ``rx_cells`` never
    changes the values drawn for the cells that are generated.
    """
    layout = realization.layout
    c = layout.num_cells
    k = realization.user_pos.shape[1]
    d = realization.d2d_tx_pos.shape[1]
    if rx_cells is None:
        rx_cells = [0]
    rx_cells = sorted(set(int(x) for x in rx_cells))

    ss_h, ss_v, ss_u, ss_g = seed_seq.spawn(4)
    h_children = ss_h.spawn(c)
    v_children = ss_v.spawn(c)
    u_children = ss_u.spawn(c)
    g_children = ss_g.spawn(c)

    # BS -> user pathlosses: rho_h[i, l, k] = |center_i - user_{l,k}|^-sigma.
    dist_bs_user = np.transpose(distances_to_centers(realization.user_pos, layout), (2, 0, 1))
    rho_h = pathloss_bs(dist_bs_user, params.sigma_bs)

    h = np.empty((c, c, k, m), dtype=complex)
    for l in range(c):
        rng = np.random.default_rng(h_children[l])
        # block l: channels from every BS to the users of cell l
        h[:, l] = _complex_gaussian(rng, (c, k, m), rho_h[:, l, :, None])

    v, rho_v, u, rho_u, g, rho_g = {}, {}, {}, {}, {}, {}
    for l in rx_cells:
        rng_v = np.random.default_rng(v_children[l])
        rho_v_l = pathloss_bs(distances_to_centers(realization.d2d_rx_pos[l], layout).T, params.sigma_bs)
        v[l] = _complex_gaussian(rng_v, (c, d, m), rho_v_l[:, :, None]) if d else np.zeros((c, 0, m), dtype=complex)
        rho_v[l] = rho_v_l

        rng_u = np.random.default_rng(u_children[l])
        if d and k:
            # distances from every D2D transmitter (i, mm) to user (l, k)
            diff = realization.d2d_tx_pos[:, :, None, :] - realization.user_pos[l][None, None, :, :]
            dist_u = np.sqrt(np.sum(diff * diff, axis=-1))  # (C, D, K)
            rho_u_l = pathloss_ue(dist_u, params.kappa_ue)
            u[l] = _complex_gaussian(rng_u, (c, d, k), rho_u_l)
        else:
            rho_u_l = np.zeros((c, d, k))
            u[l] = np.zeros((c, d, k), dtype=complex)
        rho_u[l] = rho_u_l

        rng_g = np.random.default_rng(g_children[l])
        if d:
            diff = realization.d2d_tx_pos[:, :, None, :] - realization.d2d_rx_pos[l][None, None, :, :]
            dist_g = np.sqrt(np.sum(diff * diff, axis=-1))  # (C, D, D)
            rho_g_l = pathloss_ue(dist_g, params.kappa_ue)
            g[l] = _complex_gaussian(rng_g, (c, d, d), rho_g_l)
        else:
            rho_g_l = np.zeros((c, d, d))
            g[l] = np.zeros((c, d, d), dtype=complex)
        rho_g[l] = rho_g_l

    return ChannelSet(m=m, h=h, rho_h=rho_h, v=v, rho_v=rho_v, u=u, rho_u=rho_u, g=g, rho_g=rho_g)


def estimate_channels(channels: ChannelSet, pilot: PilotConfig) -> ChannelSet:
    """Fill ``h_hat`` with the contaminated match-filter estimates.

    For every cell i the estimate is the true own-cell matrix plus the sum
    over co-pilot cells of their matrices toward BS i, scaled by
    1/sqrt(pilot_length).
    """
    h = channels.h
    c = h.shape[0]
    scale = 1.0 / math.sqrt(float(pilot.pilot_length))
    own = h[np.arange(c), np.arange(c)]             # (C, K, M)
    total = h.sum(axis=1)                            # sum over user cells
    h_hat = own + (total - own) * scale
    return replace(channels, h_hat=h_hat)
