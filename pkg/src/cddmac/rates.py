"""Instantaneous mutual-information rates and Monte-Carlo ergodic estimates.

All rates are bits per channel use.  Determinants are evaluated through the
Gram matrix of the smaller side (same nonzero spectrum), with natural logs
converted to bits once at the end.

The Monte-Carlo helpers share one chunking scheme: trials are processed in
fixed-size chunks and the per-chunk (sum, sum-of-squares) pairs are reduced
in chunk-index order.  Because channel draws are keyed by (seed, trial) and
the reduction schedule never depends on the worker count, estimates are
bit-identical for any --workers setting.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import repeat

import numpy as np

from .channel import SystemConfig, effective_channel, sample_channel_block
from .linalg import dft_matrix, logdet_hermitian_psd

LN2 = float(np.log(2.0))

# Fixed Monte-Carlo chunk size.  Changing it changes the summation order and
# therefore the last few bits of every estimate; it is part of the contract.
CHUNK = 4096


@dataclass(frozen=True)
class RateEstimate:
    """Monte-Carlo mean rate with standard error, in bits per channel use."""

    mean: float
    stderr: float
    trials: int


def _gram_logdet(mat: np.ndarray, scale: float) -> float:
    """ln det(I + scale * mat @ mat^H), via the Gram of the smaller side."""
    rows, cols = mat.shape
    if rows <= cols:
        gram = mat @ mat.conj().T
    else:
        gram = mat.conj().T @ mat
    return logdet_hermitian_psd(np.eye(gram.shape[0]) + scale * gram)


def rate_cdd(channels, snr: float) -> float:
    """Instantaneous CDD sum rate (1/T) log2 det(I + (snr/T) Heff Heff^H).

    Built from the full stacked effective channel; the reduced per-bin path
    in rate_cdd_reduced must agree to 1e-9 (tested), which is the whole
    point of the block-diagonal reduction.
    """
    if snr < 0:
        raise ValueError("snr must be >= 0")
    ch = np.asarray(channels)
    n_tx = ch.shape[-1]
    eff = effective_channel(ch)
    return _gram_logdet(eff, snr / n_tx) / LN2 / n_tx


def rate_cdd_reduced(blocks, snr: float) -> float:
    """CDD sum rate from the DFT-bin blocks of reduce_to_parallel.

    (1/T) sum_t log2 det(I + snr * Hp_t Hp_t^H); the 1/n_tx power split is
    already absorbed by the reduction, so snr appears undivided.
    """
    if snr < 0:
        raise ValueError("snr must be >= 0")
    blk = np.asarray(blocks)
    if blk.ndim != 3 or blk.shape[0] < 1:
        raise ValueError("blocks must be a nonempty (n_tx, n_rx, users) stack")
    n_tx = blk.shape[0]
    total = sum(_gram_logdet(b, snr) for b in blk)
    return total / LN2 / n_tx


def sum_capacity(channels, snr: float) -> float:
    """No-CSIT equal-power sum capacity log2 det(I + (snr/n_tx) sum_k Hk Hk^H)."""
    if snr < 0:
        raise ValueError("snr must be >= 0")
    ch = np.asarray(channels)
    users, n_rx, n_tx = ch.shape
    # sum_k Hk Hk^H equals the Gram of the users horizontally concatenated
    flat = ch.transpose(1, 0, 2).reshape(n_rx, users * n_tx)
    return _gram_logdet(flat, snr / n_tx) / LN2


def _spans(trials: int):
    return [(s, min(s + CHUNK, trials)) for s in range(0, trials, CHUNK)]


def _estimate(total: float, total_sq: float, n: int) -> RateEstimate:
    mean = float(total) / n
    var = max(float(total_sq) - n * mean * mean, 0.0) / (n - 1)
    return RateEstimate(mean=mean, stderr=float(np.sqrt(var / n)), trials=n)


def _ergodic_chunk(metric, cfg: SystemConfig, start: int, stop: int):
    block = sample_channel_block(cfg, start, stop)
    vals = np.array([metric(ch, cfg.snr) for ch in block])
    return float(vals.sum()), float(np.square(vals).sum())


def ergodic(metric, cfg: SystemConfig, workers: int = 1) -> RateEstimate:
    """Monte-Carlo mean/stderr of metric(channels, cfg.snr) over cfg.trials.

    metric must be a picklable (module-level) callable when workers > 1.
    """
    if cfg.trials < 2:
        raise ValueError("need trials >= 2 for a standard error")
    spans = _spans(cfg.trials)
    if workers > 1:
        starts, stops = zip(*spans)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_ergodic_chunk, repeat(metric), repeat(cfg),
                                  starts, stops))
    else:
        parts = [_ergodic_chunk(metric, cfg, a, b) for a, b in spans]
    total = 0.0
    total_sq = 0.0
    for part_sum, part_sq in parts:  # chunk order, never completion order
        total += part_sum
        total_sq += part_sq
    return _estimate(total, total_sq, cfg.trials)


# ---------------------------------------------------------------------------
# Vectorized sweep engine: one pass over the trials serves every metric and
# every SNR grid point (eigenvalues are computed once per realization), so
# cross-metric differences like capacity-minus-CDD are tightly coupled.

SWEEP_METRICS = ("cdd", "cap", "diff")


def _gram_eigvals(x: np.ndarray) -> np.ndarray:
    """Eigenvalues of x @ x^H via the smaller-side Gram, batched, clipped >= 0."""
    rows, cols = x.shape[-2], x.shape[-1]
    if rows <= cols:
        gram = x @ np.conj(np.swapaxes(x, -1, -2))
    else:
        gram = np.conj(np.swapaxes(x, -1, -2)) @ x
    if gram.shape[-1] == 1:
        return gram[..., 0].real
    return np.clip(np.linalg.eigvalsh(gram), 0.0, None)


def _sweep_values(block: np.ndarray, snr: np.ndarray, metrics) -> np.ndarray:
    """Per-trial metric values, shape (len(metrics), len(snr), trials)."""
    n_trials, users, n_rx, n_tx = block.shape
    need_cdd = any(m in ("cdd", "diff") for m in metrics)
    need_cap = any(m in ("cap", "diff") for m in metrics)
    cdd = cap = None
    if need_cdd:
        par = (block @ dft_matrix(n_tx)).transpose(0, 3, 2, 1)  # (B,T,n_rx,K)
        mu = _gram_eigvals(par)                                 # (B,T,L)
        cdd = np.log2(1.0 + snr[:, None, None, None] * mu).sum(axis=(2, 3))
        cdd /= n_tx                                             # (S,B)
    if need_cap:
        flat = block.transpose(0, 2, 1, 3).reshape(n_trials, n_rx, users * n_tx)
        nu = _gram_eigvals(flat)                                # (B,Lcap)
        cap = np.log2(1.0 + (snr[:, None, None] / n_tx) * nu).sum(axis=2)
    picks = {"cdd": cdd, "cap": cap}
    if "diff" in metrics:
        picks["diff"] = cap - cdd
    return np.stack([picks[m] for m in metrics])


def _sweep_chunk(cfg: SystemConfig, snr: np.ndarray, metrics, start: int,
                 stop: int):
    block = sample_channel_block(cfg, start, stop)
    vals = _sweep_values(block, snr, metrics)
    return vals.sum(axis=-1), np.square(vals).sum(axis=-1)


def monte_carlo_sweep(cfg: SystemConfig, snr=None, metrics=("cdd", "cap"),
                      workers: int = 1) -> dict:
    """Ergodic estimates for several metrics over a shared linear-SNR grid.

    Returns {metric: RateEstimate} for scalar snr input, or
    {metric: (means, stderrs)} arrays matching the grid otherwise.  Results
    are bit-identical for any workers value (fixed chunk schedule).
    """
    if cfg.trials < 2:
        raise ValueError("need trials >= 2 for a standard error")
    unknown = [m for m in metrics if m not in SWEEP_METRICS]
    if unknown:
        raise ValueError(f"unknown sweep metrics {unknown}")
    grid = np.atleast_1d(np.asarray(cfg.snr if snr is None else snr,
                                    dtype=float))
    if grid.size == 0 or np.any(grid < 0) or not np.all(np.isfinite(grid)):
        raise ValueError("snr grid must be nonempty, finite and >= 0")
    scalar = np.ndim(cfg.snr if snr is None else snr) == 0

    spans = _spans(cfg.trials)
    if workers > 1:
        starts, stops = zip(*spans)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sweep_chunk, repeat(cfg), repeat(grid),
                                  repeat(tuple(metrics)), starts, stops))
    else:
        parts = [_sweep_chunk(cfg, grid, tuple(metrics), a, b) for a, b in spans]

    totals = np.zeros((len(metrics), grid.size))
    totals_sq = np.zeros_like(totals)
    for part_sum, part_sq in parts:  # chunk order, never completion order
        totals += part_sum
        totals_sq += part_sq

    n = cfg.trials
    means = totals / n
    var = np.maximum(totals_sq - n * means * means, 0.0) / (n - 1)
    stderrs = np.sqrt(var / n)
    out = {}
    for row, name in enumerate(metrics):
        if scalar:
            out[name] = RateEstimate(mean=float(means[row, 0]),
                                     stderr=float(stderrs[row, 0]), trials=n)
        else:
            out[name] = (means[row], stderrs[row])
    return out
