r"""Rayleigh MAC channel sampling and the cyclic-delay-diversity structure.

A cyclic delay diversity (CDD) transmitter sends, from each of its n_tx
antennas, a cyclically shifted copy of the same length-T symbol block with
T = n_tx (one extra sample of delay per antenna).  Over one block the link
from user k to receive antenna i then acts as a T x T circulant built from
the channel taps, and the stacked multi-user matrix is diagonalized bin by
bin by the unitary DFT.

Conventions frozen here (tests pin all of them):

* ``dft_matrix(T)`` is D[m, k] = exp(-2j*pi*m*k/T)/sqrt(T); D is symmetric.
* The codeword matrix shifts rows right; it is a standard circulant and is
  diagonalized by the similarity D G D^H = sqrt(T) diag(D^H x).
* Each effective-channel block shifts rows left, which makes it complex
  symmetric; it satisfies the congruence D A D = sqrt(T) diag(D h) (both
  sides D, not a similarity).  This is the identity that makes the per-bin
  reduction below exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import dft_matrix


@dataclass(frozen=True)
class SystemConfig:
    """Scenario parameters for one Monte-Carlo experiment.

    snr is a linear power ratio; dB conversion happens only at the CLI
    boundary.  The CDD block length always equals n_tx.
    """

    users: int
    n_tx: int
    n_rx: int
    snr: float
    trials: int
    seed: int

    def __post_init__(self):
        if min(self.users, self.n_tx, self.n_rx) < 1:
            raise ValueError("users, n_tx and n_rx must all be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not np.isfinite(self.snr) or self.snr < 0:
            raise ValueError("snr must be finite and >= 0 (linear scale)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    @property
    def block_length(self) -> int:
        return self.n_tx


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    # Counter-based Philox keyed by (seed, trial): any worker can reproduce
    # any trial without coordination, so results never depend on scheduling.
    key = np.array([seed, trial], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_channels(cfg: SystemConfig, trial_index: int) -> np.ndarray:
    """One realization of all user channels, shape (users, n_rx, n_tx).

    Entries are i.i.d. circularly-symmetric complex Gaussian with unit
    power (real/imag parts each variance 1/2).  Deterministic function of
    (cfg.seed, trial_index) alone.
    """
    if not 0 <= trial_index < cfg.trials:
        raise ValueError(
            f"trial_index {trial_index} outside range [0, {cfg.trials})")
    rng = _trial_rng(cfg.seed, trial_index)
    z = rng.standard_normal((cfg.users, cfg.n_rx, cfg.n_tx, 2))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def sample_channel_block(cfg: SystemConfig, start: int, stop: int) -> np.ndarray:
    """Stack trials [start, stop) into shape (stop-start, users, n_rx, n_tx).

    block[j] is bit-identical to sample_channels(cfg, start + j).
    """
    out = np.empty((stop - start, cfg.users, cfg.n_rx, cfg.n_tx),
                   dtype=np.complex128)
    for j in range(stop - start):
        out[j] = sample_channels(cfg, start + j)
    return out


def cdd_codeword(symbols) -> np.ndarray:
    """T x T CDD codeword matrix for one symbol block.

    Row 1 is the symbol vector; each later row is the previous one shifted
    cyclically right by one (antenna r transmits the block delayed by r-1).
    """
    x = np.asarray(symbols)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("symbols must be a nonempty 1-D vector")
    n = x.size
    shift = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return x[shift]


def _left_circulant(taps: np.ndarray) -> np.ndarray:
    # Row r = (h_r, h_{r+1}, ..., h_{r-1}): complex symmetric, diagonalized
    # by the congruence D A D rather than a similarity.
    n = taps.size
    idx = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    return taps[idx]


def effective_channel(channels) -> np.ndarray:
    """Stacked block-circulant CDD channel, shape (n_rx*T, T*users).

    Row-block i / column-block k is the left-shift circulant built from the
    taps between user k and receive antenna i, so y_block = H_eff @ x_stack
    reproduces the codeword view cdd_codeword(x_k) @ h for every antenna.
    """
    ch = np.asarray(channels)
    if ch.ndim != 3:
        raise ValueError("channels must have shape (users, n_rx, n_tx)")
    users, n_rx, n_tx = ch.shape
    out = np.empty((n_rx * n_tx, n_tx * users), dtype=np.complex128)
    for k in range(users):
        for i in range(n_rx):
            out[i * n_tx:(i + 1) * n_tx, k * n_tx:(k + 1) * n_tx] = \
                _left_circulant(ch[k, i])
    return out


def shuffle_permutation(n_tx: int, n_rx: int) -> np.ndarray:
    """Stride permutation regrouping antenna-major rows into bin-major rows.

    Position i*n_tx + t (receive antenna i, DFT bin t, both 0-based) maps to
    t*n_rx + i.  Conjugating the DFT-rotated Gram of the effective channel
    with this matrix leaves exactly one n_rx x n_rx block per bin.
    """
    if n_tx < 1 or n_rx < 1:
        raise ValueError("n_tx and n_rx must be >= 1")
    size = n_tx * n_rx
    perm = np.zeros((size, size))
    for i in range(n_rx):
        for t in range(n_tx):
            perm[i * n_tx + t, t * n_rx + i] = 1.0
    return perm


def reduce_to_parallel(channels) -> np.ndarray:
    """Per-bin parallel subchannels, shape (n_tx, n_rx, users).

    Entry [t, i, k] is the t-th unitary-DFT coefficient of the tap vector
    between user k and receive antenna i; the unitary scaling keeps entries
    unit-variance complex Gaussian when the inputs are.  The stack satisfies

        P^T (I kron D) Heff Heff^H (I kron D)^H P
            = blockdiag(n_tx * Hp_t Hp_t^H),

    with P from shuffle_permutation, which is what makes the reduced rate
    path exact.
    """
    ch = np.asarray(channels)
    if ch.ndim != 3:
        raise ValueError("channels must have shape (users, n_rx, n_tx)")
    bins = ch @ dft_matrix(ch.shape[-1])  # D is symmetric: rows go through D
    return bins.transpose(2, 1, 0)
