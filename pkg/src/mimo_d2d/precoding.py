"""Zero-forcing precoding from (imperfect) channel estimates.

The precoder is the unnormalized right pseudo-inverse of the estimated
K x M channel matrix, P = H^H (H H^H)^-1, so that H P = I_K.  Column norms
are used as-is; per-stream symbol power is applied outside the precoder,
which keeps the unit signal coefficient at every served user.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import SingularMatrixError

#: Condition-number ceiling for the Gram matrix.
MAX_GRAM_CONDITION = 1e12

#: Frobenius tolerance on ||H P - I||.
ZF_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class Precoder:
    """M x K zero-forcing precoder for one cell."""

    matrix: np.ndarray
    cell_index: int


def zf_precoder(h_hat_i: np.ndarray, cell_index: int = 0) -> Precoder:
    """Zero-forcing precoder from a K x M estimated channel matrix.

    Requires M >= K and a well-conditioned Gram matrix; raises
    SingularMatrixError (carrying the condition estimate) otherwise.
    The residual ||H P - I||_F is checked post-hoc against
    ``ZF_RESIDUAL_TOL`` regardless of the factorization used.
    """
    h = np.asarray(h_hat_i)
    k, m = h.shape
    if m < k:
        raise SingularMatrixError(f"need at least as many antennas as users, got K={k} > M={m}")
    gram = h @ h.conj().T
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond > MAX_GRAM_CONDITION:
        raise SingularMatrixError(
            f"Gram matrix condition estimate {cond:.3e} exceeds {MAX_GRAM_CONDITION:.0e}",
            condition_estimate=cond,
        )
    try:
        factor = cho_factor(gram, lower=False, check_finite=False)
        inv_times_h = cho_solve(factor, h, check_finite=False)  # (H H^H)^-1 H
    except np.linalg.LinAlgError as exc:  # pragma: no cover - cond check catches first
        raise SingularMatrixError(str(exc), condition_estimate=cond) from exc
    p = inv_times_h.conj().T
    residual = float(np.linalg.norm(h @ p - np.eye(k), "fro"))
    if residual > ZF_RESIDUAL_TOL:
        raise SingularMatrixError(
            f"zero-forcing residual {residual:.3e} exceeds {ZF_RESIDUAL_TOL:.0e}",
            condition_estimate=cond,
        )
    return Precoder(matrix=p, cell_index=cell_index)
