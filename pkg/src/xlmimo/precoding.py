"""Zero-forcing and matched-filter transmit precoders."""

from dataclasses import dataclass

import numpy as np

from .arrays import ChannelMatrix

RCOND_FLOOR = 1e-12
"""Reciprocal-condition threshold below which a channel set is treated as dependent."""


class RankDeficientChannelError(ValueError):
    """Raised when the selected channels are too close to linearly dependent."""


@dataclass(frozen=True)
class PrecoderSet:
    """Unit-norm precoder columns aligned with the user ids they serve."""

    columns: np.ndarray  # shape (num_elements, num_users), complex
    user_ids: tuple

    def __post_init__(self) -> None:
        if self.columns.ndim != 2 or self.columns.shape[1] != len(self.user_ids):
            raise ValueError("columns shape does not match user_ids")
        if self.columns.shape[1]:
            norms = np.linalg.norm(self.columns, axis=0)
            if np.max(np.abs(norms - 1.0)) > 1e-12:
                raise ValueError("precoder columns must have unit norm")

    @property
    def num_users(self) -> int:
        return len(self.user_ids)


def _gram_cholesky(channels: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of the Gram matrix, rejecting near-singular sets.

    Cost is O(M n^2 + n^3) with n columns; n is far below M in every intended
    scenario, so the Gram route beats an M x n decomposition.
    """
    gram = channels.conj().T @ channels
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise RankDeficientChannelError("channel Gram matrix is not positive definite") from exc
    diag = np.abs(np.diagonal(chol))
    # Diagonal ratio squared is the cheap standard estimate of the Gram rcond.
    if (diag.min() / diag.max()) ** 2 < RCOND_FLOOR:
        raise RankDeficientChannelError(
            f"channel Gram matrix reciprocal condition below {RCOND_FLOOR:g}"
        )
    return chol


def zf_precoders(channels: ChannelMatrix) -> PrecoderSet:
    """Column-normalized zero-forcing precoders for the given channel set.

    Built from the Gram system so that before normalization F^H A = I; after
    normalization f_j^H a_k = 0 exactly in exact arithmetic for j != k.

    Raises RankDeficientChannelError when the channels are (numerically)
    linearly dependent, which callers treat as an infeasible candidate set.
    """
    a = channels.matrix
    chol = _gram_cholesky(a)
    n = a.shape[1]
    # Solve gram @ X = I via the two triangular systems.
    inv_gram = _cho_solve_identity(chol, n)
    raw = a @ inv_gram
    norms = np.linalg.norm(raw, axis=0)
    return PrecoderSet(raw / norms, channels.user_ids)


def _cho_solve_identity(chol: np.ndarray, n: int) -> np.ndarray:
    from scipy.linalg import solve_triangular

    eye = np.eye(n, dtype=complex)
    half = solve_triangular(chol, eye, lower=True)
    return solve_triangular(chol.conj().T, half, lower=False)


def mrt_precoder(channel: np.ndarray) -> np.ndarray:
    """Matched-filter direction: the unit vector maximizing |f^H a| = ||a||."""
    norm = np.linalg.norm(channel)
    if norm == 0.0:
        raise ValueError("zero channel vector has no matched-filter direction")
    return channel / norm


def effective_gains(precoders: PrecoderSet, channels: ChannelMatrix) -> np.ndarray:
    """Per-user effective channel gains |f_k^H a_k|^2.

    The precoder and channel orderings must agree; a mismatch is a caller bug
    and is rejected rather than silently realigned.
    """
    if precoders.user_ids != channels.user_ids:
        raise ValueError("precoder/channel user orderings differ")
    inner = np.einsum("ij,ij->j", precoders.columns.conj(), channels.matrix)
    return np.abs(inner) ** 2
