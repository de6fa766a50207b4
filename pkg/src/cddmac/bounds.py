r"""Closed-form lower/upper bounds and high-SNR gap formulas.

Everything here is deterministic arithmetic on (users, n_tx, n_rx, snr).
The Jensen-type lower bounds replace chi-square variates inside
E log2(1 + snr*X) by exp(E ln X) = exp(harmonic(dof-1) - gamma); the upper
bound takes log2 of the exact moment E det(I + snr * H H^H), a short
binomial/falling-factorial polynomial in snr.

snr arguments are linear power ratios and may be scalars or arrays (the
return matches); all outputs are bits per channel use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EULER_GAMMA = 0.577215664901532861
LN2 = float(np.log(2.0))


def harmonic(n: int) -> float:
    """n-th harmonic number sum_{k=1}^{n} 1/k, with harmonic(0) = 0."""
    if n < 0:
        raise ValueError("harmonic is defined for n >= 0")
    return float(np.sum(1.0 / np.arange(1, n + 1))) if n else 0.0


def _check_args(users, n_tx, n_rx, snr):
    if min(users, n_tx, n_rx) < 1:
        raise ValueError("users, n_tx and n_rx must all be >= 1")
    s = np.asarray(snr, dtype=float)
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise ValueError("snr must be finite and >= 0")
    return s


def _match(value: np.ndarray, snr):
    return float(value) if np.ndim(snr) == 0 else value


def rc_lower_bound(users: int, n_tx: int, n_rx: int, snr) -> float:
    """CDD ergodic sum-rate lower bound.

    sum_{l=1}^{L} log2(1 + snr * exp(harmonic(M-l) - gamma)) with
    L = min(n_rx, users), M = max(n_rx, users).  The transmit antenna count
    drops out of the bound entirely; n_tx stays in the signature only so the
    bound family shares one calling convention.
    """
    s = _check_args(users, n_tx, n_rx, snr)
    lo, hi = min(n_rx, users), max(n_rx, users)
    total = np.zeros_like(s)
    for l in range(1, lo + 1):
        total = total + np.log2(1.0 + s * math.exp(harmonic(hi - l) - EULER_GAMMA))
    return _match(total, snr)


def cap_lower_bound(users: int, n_tx: int, n_rx: int, snr) -> float:
    """Sum-capacity lower bound: same construction with the full antenna pool.

    L~ = min(n_rx, n_tx*users), M~ = max(n_rx, n_tx*users), and the per-bin
    power split snr/n_tx.
    """
    s = _check_args(users, n_tx, n_rx, snr)
    lo, hi = min(n_rx, n_tx * users), max(n_rx, n_tx * users)
    total = np.zeros_like(s)
    for l in range(1, lo + 1):
        total = total + np.log2(1.0 + (s / n_tx) * math.exp(harmonic(hi - l) - EULER_GAMMA))
    return _match(total, snr)


def jensen_collapsed_bounds(users: int, n_tx: int, n_rx: int, snr):
    """Single-logarithm variants of both lower bounds (exponents averaged).

    Returns (rc_lower_jensen, cap_lower_jensen).  Averaging the exponents
    before the log can only lose tightness, so these sit at or below the
    term-by-term bounds; they share the same high-SNR slope and intercept.
    """
    s = _check_args(users, n_tx, n_rx, snr)
    lo, hi = min(n_rx, users), max(n_rx, users)
    mean_h = sum(harmonic(hi - l) for l in range(1, lo + 1)) / lo
    rc = lo * np.log2(1.0 + s * math.exp(mean_h - EULER_GAMMA))
    lo_c, hi_c = min(n_rx, n_tx * users), max(n_rx, n_tx * users)
    mean_hc = sum(harmonic(hi_c - l) for l in range(1, lo_c + 1)) / lo_c
    cap = lo_c * np.log2(1.0 + (s / n_tx) * math.exp(mean_hc - EULER_GAMMA))
    return _match(rc, snr), _match(cap, snr)


def rc_upper_bound(users: int, n_rx: int, snr) -> float:
    """CDD ergodic sum-rate upper bound via the exact determinant moment.

    log2( sum_{i=0}^{L} C(L,i) * M!/(M-i)! * snr^i ), L = min(n_rx, users),
    M = max(n_rx, users).  Evaluated in log space (log-sum-exp) so large snr
    and factorials cannot overflow.
    """
    s = _check_args(users, 1, n_rx, snr)
    lo, hi = min(n_rx, users), max(n_rx, users)
    if lo > 20:
        raise ValueError("min(users, n_rx) > 20: factorial sum not evaluated")
    with np.errstate(divide="ignore"):  # log(0) -> -inf kills i>=1 terms at snr=0
        log_s = np.log(s)
    log_terms = [np.zeros_like(s)]  # i = 0 term is exactly 1
    for i in range(1, lo + 1):
        const = math.lgamma(lo + 1) - math.lgamma(i + 1) - math.lgamma(lo - i + 1)
        const += math.lgamma(hi + 1) - math.lgamma(hi - i + 1)
        log_terms.append(const + i * log_s)
    stack = np.stack(log_terms)
    peak = np.max(stack, axis=0)
    out = (peak + np.log(np.sum(np.exp(stack - peak), axis=0))) / LN2
    return _match(out, snr)


def gap_high_snr(users: int, n_tx: int, n_rx: int):
    """High-SNR capacity-minus-CDD gap, returned as (gap, gap_upper) in bits.

    n_rx = 1: gap is the exact limit of the lower-bound difference,
    (1/ln2) * (sum_{k=users}^{n_tx*users - 1} 1/k - ln n_tx), and gap_upper
    is the universal ceiling 1/(users*ln2).

    n_rx > 1 (valid for n_rx <= users): both values are the gap upper-bound
    sum (1/ln2) * sum_{l=1}^{n_rx} (1/(users-l+1)) *
    (1 + (users-l+1) * ln(1/n_tx + (n_tx-1)*users/(n_tx*(users-l+1)))).

    Raises ValueError for n_rx > users with n_rx > 1: the formula's stated
    validity ends there and no number is reported.
    """
    if min(users, n_tx, n_rx) < 1:
        raise ValueError("users, n_tx and n_rx must all be >= 1")
    if n_rx == 1:
        gap = (harmonic(n_tx * users - 1) - harmonic(users - 1)
               - math.log(n_tx)) / LN2
        return gap, 1.0 / (users * LN2)
    if n_rx > users:
        raise ValueError(
            "gap formula is only stated for n_rx <= users; "
            f"got n_rx={n_rx} > users={users}")
    total = 0.0
    for l in range(1, n_rx + 1):
        m = users - l + 1
        total += (1.0 / m) * (1.0 + m * math.log(
            1.0 / n_tx + (n_tx - 1) * users / (n_tx * m)))
    total /= LN2
    return total, total


def psi_limit_check(n_tx: int, k_max: int) -> np.ndarray:
    """Residuals |sum_{k=K+1}^{n_tx*K-1} 1/k - ln n_tx| for K = 1..k_max.

    The sum telescopes two digamma values, so the residual decays like
    O(1/K); callers assert it is monotone and small at large K.
    """
    if n_tx < 1:
        raise ValueError("n_tx must be >= 1")
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    top = n_tx * k_max
    # prefix[i] = H_i for i = 0..top; both where() branches are evaluated
    # eagerly, so the table must cover prefix[ks] even when n_tx = 1
    prefix = np.concatenate(([0.0], np.cumsum(1.0 / np.arange(1, top + 1))))
    ks = np.arange(1, k_max + 1)
    upper = n_tx * ks - 1
    partial = np.where(upper >= ks + 1, prefix[upper] - prefix[ks], 0.0)
    return np.abs(partial - math.log(n_tx))


@dataclass(frozen=True)
class BoundReport:
    """All closed-form bounds for one (users, n_tx, n_rx, snr) point, in bits.

    gap fields are None when the general gap formula is outside its stated
    validity (n_rx > users with n_rx > 1).
    """

    rc_lower: float
    rc_lower_jensen: float
    rc_upper: float
    cap_lower: float
    cap_lower_jensen: float
    gap_high_snr: float | None
    gap_upper: float | None


def bound_report(users: int, n_tx: int, n_rx: int, snr: float) -> BoundReport:
    """Evaluate every bound at one scalar SNR point."""
    rc_j, cap_j = jensen_collapsed_bounds(users, n_tx, n_rx, snr)
    try:
        gap, gap_up = gap_high_snr(users, n_tx, n_rx)
    except ValueError:
        gap, gap_up = None, None
    return BoundReport(
        rc_lower=rc_lower_bound(users, n_tx, n_rx, snr),
        rc_lower_jensen=rc_j,
        rc_upper=rc_upper_bound(users, n_rx, snr),
        cap_lower=cap_lower_bound(users, n_tx, n_rx, snr),
        cap_lower_jensen=cap_j,
        gap_high_snr=gap,
        gap_upper=gap_up,
    )
