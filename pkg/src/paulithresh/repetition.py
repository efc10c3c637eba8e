"""Closed-form logical channels of n-qubit bit-flip and phase-flip codes.

Syndromes of a repetition code are grouped into distance classes ``k``: the
flip patterns of weight ``k`` and their complements of weight ``n - k``.
Within a class every syndrome leaves the same conditional logical channel,
so the average logical entropy is a sum over ``floor(n/2) + 1`` classes.

Logical operators follow the "X stays X" convention: for the bit-flip code
logical X is ``X^n`` and logical Z is a single ``Z``; the phase-flip code is
its Hadamard dual, with logical Z ``Z^n`` and logical X a single ``X``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from ._combinatorics import iter_compositions, log_binom
from .channel import (
    DomainError,
    IDENTITY,
    PauliChannel,
    dualize,
    shannon_entropy,
)

__all__ = [
    "BIT",
    "PHASE",
    "RepCodeSpec",
    "DistanceClassOutcome",
    "logical_outcomes_iid",
    "average_entropy_rep",
    "average_entropy_rep_margin",
    "average_entropy_rep_log_margin",
    "generalized_block_outcome",
    "independent_noise_entropy",
    "independent_noise_margin",
    "infinite_bitflip_margin",
    "independent_infinite_threshold",
    "suggest_n1",
]

BIT = "bit"
PHASE = "phase"
LOG_SPACE_ABOVE = 50


def _check_orientation(orientation: str) -> str:
    o = orientation.lower()
    if o in ("bit", "bitflip", "x"):
        return BIT
    if o in ("phase", "phaseflip", "z"):
        return PHASE
    raise DomainError(f"unknown orientation {orientation!r}")


@dataclass(frozen=True)
class RepCodeSpec:
    n: int
    orientation: str = BIT

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"repetition code length must be >= 1, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "orientation", _check_orientation(self.orientation))


@dataclass(frozen=True)
class DistanceClassOutcome:
    """One distance class of a repetition code.

    ``l`` holds the joint probabilities ``(l_I, l_X, l_Y, l_Z)`` of the class
    and each logical error; they sum to ``class_prob``.
    """

    k: int
    a_k: float
    b_k: float
    a_nk: float
    b_nk: float
    l: tuple[float, float, float, float]
    class_prob: float

    @property
    def conditional(self) -> PauliChannel:
        # normalise by the parts: subnormal class probabilities lose digits when halved
        tot = math.fsum(self.l)
        if self.class_prob <= 0.0 or tot <= 0.0:
            return IDENTITY
        return PauliChannel(*[v / tot for v in self.l])

    @property
    def entropy_contribution(self) -> float:
        """``l(k) * H(l_sigma(k) / l(k))``."""
        tot = math.fsum(self.l)
        if self.class_prob <= 0.0 or tot <= 0.0:
            return 0.0
        return self.class_prob * shannon_entropy([v / tot for v in self.l])


def _signed_log(x: float) -> tuple[float, int]:
    if x == 0.0:
        return -math.inf, 0
    return math.log(abs(x)), (1 if x > 0 else -1)


def _ab_terms(n: int, c: PauliChannel) -> tuple[list[float], list[float]]:
    """``a_k`` and ``b_k`` for ``k = 0..n`` (bit-flip orientation)."""
    q = c.q_x
    q0 = c.p_i + c.p_z  # 1 - q without cancellation
    u = c.p_x - c.p_y
    w = c.p_i - c.p_z
    a = [0.0] * (n + 1)
    b = [0.0] * (n + 1)
    if n <= LOG_SPACE_ABOVE:
        for k in range(n + 1):
            cnk = math.comb(n, k)
            a[k] = cnk * q**k * q0 ** (n - k)
            b[k] = cnk * u**k * w ** (n - k)
        return a, b
    lq, l1q = (math.log(q) if q > 0 else -math.inf), (math.log(q0) if q0 > 0 else -math.inf)
    lu, su = _signed_log(u)
    lw, sw = _signed_log(w)
    for k in range(n + 1):
        lc = log_binom(n, k)
        la = lc + (k * lq if k else 0.0) + ((n - k) * l1q if n - k else 0.0)
        a[k] = math.exp(la) if la > -math.inf else 0.0
        if (k and su == 0) or (n - k and sw == 0):
            b[k] = 0.0
            continue
        lb = lc + (k * lu if k else 0.0) + ((n - k) * lw if n - k else 0.0)
        sign = (su if k % 2 else 1) * (sw if (n - k) % 2 else 1)
        b[k] = sign * math.exp(lb)
    return a, b


def _clamp(v: float) -> float:
    return 0.0 if -1e-15 <= v < 0.0 else v


def logical_outcomes_iid(spec: RepCodeSpec, c: PauliChannel) -> list[DistanceClassOutcome]:
    """Distance-class outcomes for identical independent noise on every qubit.

    For the phase-flip orientation the channel is dualized, the bit-flip
    formulas applied, and each conditional channel dualized back.
    """
    n = spec.n
    cb = dualize(c) if spec.orientation == PHASE else c
    a, b = _ab_terms(n, cb)
    out = []
    for k in range(n // 2 + 1):
        ak, bk, ank, bnk = a[k], b[k], a[n - k], b[n - k]
        if 2 * k == n:
            li = lx = (ak + bk) / 4.0
            ly = lz = (ak - bk) / 4.0
            prob = ak
        else:
            li, lx = (ak + bk) / 2.0, (ank + bnk) / 2.0
            ly, lz = (ank - bnk) / 2.0, (ak - bk) / 2.0
            prob = ak + ank
        l = tuple(_clamp(v) for v in (li, lx, ly, lz))
        if spec.orientation == PHASE:
            l = (l[0], l[3], l[2], l[1])
        out.append(DistanceClassOutcome(k, ak, bk, ank, bnk, l, prob))
    return out


def average_entropy_rep(spec: RepCodeSpec, c: PauliChannel) -> float:
    """Average logical entropy over syndromes, in bits."""
    return math.fsum(o.entropy_contribution for o in logical_outcomes_iid(spec, c))


# --------------------------------------------------------------------------
# Non-identical channels
# --------------------------------------------------------------------------


def _block_factors(c: PauliChannel, flagged: bool) -> tuple[float, float]:
    # bit-flip orientation: (a factor, b factor)
    if flagged:
        return c.q_x, c.p_x - c.p_y
    return c.p_i + c.p_z, c.p_i - c.p_z


def generalized_block_outcome(
    channels: Sequence[PauliChannel],
    flagged: Iterable[int],
    orientation: str = BIT,
) -> tuple[float, PauliChannel]:
    """Probability of one repetition-code syndrome and its conditional channel.

    ``channels`` are the per-qubit channels and ``flagged`` the flip pattern
    ``T`` (0-based qubit indices) the recovery assumes. The syndrome is the
    pair ``{T, complement(T)}``; its probability is ``a_T + a_Tbar``. A
    syndrome of probability zero is returned with the identity channel.
    """
    if len(channels) == 0:
        raise DomainError("generalized_block_outcome needs at least one channel")
    orientation = _check_orientation(orientation)
    chans = [dualize(c) for c in channels] if orientation == PHASE else list(channels)
    n = len(chans)
    tset = set(int(i) for i in flagged)
    if any(i < 0 or i >= n for i in tset):
        raise DomainError(f"flagged indices {sorted(tset)} out of range for n={n}")

    log_a = [0.0, 0.0]  # T, Tbar
    log_b = [0.0, 0.0]
    sign_b = [1, 1]
    for i, c in enumerate(chans):
        for side, flag in enumerate(((i in tset), (i not in tset))):
            fa, fb = _block_factors(c, flag)
            log_a[side] += math.log(fa) if fa > 0 else -math.inf
            if fb == 0.0:
                log_b[side] = -math.inf
            else:
                log_b[side] += math.log(abs(fb))
                if fb < 0:
                    sign_b[side] = -sign_b[side]
    a_t, a_tb = (math.exp(v) if v > -math.inf else 0.0 for v in log_a)
    b_t, b_tb = (s * math.exp(v) if v > -math.inf else 0.0 for s, v in zip(sign_b, log_b))
    prob = a_t + a_tb
    if prob <= 0.0:
        return 0.0, IDENTITY
    l = [(a_t + b_t) / 2.0, (a_tb + b_tb) / 2.0, (a_tb - b_tb) / 2.0, (a_t - b_t) / 2.0]
    cond = PauliChannel(*[max(v, 0.0) / prob for v in l])
    if orientation == PHASE:
        cond = dualize(cond)
    return prob, cond


# --------------------------------------------------------------------------
# Independent bit and phase flips
# --------------------------------------------------------------------------


def _hb(x: np.ndarray) -> np.ndarray:
    """Binary entropy in bits of probabilities ``x``."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -(x * np.log(x) + (1.0 - x) * np.log1p(-x)) / math.log(2.0)
    return np.where((x > 0) & (x < 1), out, 0.0)


_SERIES_K = np.arange(1, 9)


def _hb_deficit(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``1 - h(x)`` for ``x = (1 - y) / 2``, accurate when ``|y|`` is tiny."""
    y = np.abs(np.asarray(y, dtype=float))
    y2 = y[..., None] ** (2 * _SERIES_K)
    series = (y2 / (_SERIES_K * (2 * _SERIES_K - 1))).sum(axis=-1) / (2.0 * math.log(2.0))
    return np.where(y < 1e-2, series, 1.0 - _hb(x))


def _flip_classes(n: int, q: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distance classes of an n-qubit repetition code under flips of rate
    ``q``: class probabilities, conditional logical-flip probabilities and
    the matching biases ``1 - 2 * flip``."""
    ks = np.arange(n // 2 + 1)
    log_c = np.array([log_binom(n, int(k)) for k in range(n + 1)])
    with np.errstate(divide="ignore"):
        lq = np.log(q) if q > 0 else -np.inf
        l1 = np.log1p(-q) if q < 1 else -np.inf
    kk = np.arange(n + 1)
    with np.errstate(invalid="ignore"):
        la = log_c + np.where(kk > 0, kk * lq, 0.0) + np.where(n - kk > 0, (n - kk) * l1, 0.0)
    lo, hi = la[ks], la[n - ks]
    with np.errstate(invalid="ignore"):
        prob = np.exp(np.logaddexp(lo, hi))
        d = np.where(np.isfinite(lo) | np.isfinite(hi), lo - hi, 0.0)
    d = np.nan_to_num(d, posinf=np.inf, neginf=-np.inf)
    with np.errstate(over="ignore"):
        flip = 1.0 / (1.0 + np.exp(d))
    bias = np.tanh(d / 2.0)
    if n % 2 == 0:
        prob[-1] = np.exp(la[n // 2])
        flip[-1], bias[-1] = 0.5, 0.0
    return prob, flip, bias


def _parity_parts(n2: int, prob: np.ndarray, bias: np.ndarray) -> tuple[float, float]:
    """Entropy and ``1 - entropy`` of the parity of ``n2`` blocks, each block
    drawing a class with probabilities ``prob`` and flipping with bias ``bias``."""
    m = len(prob)
    logf = gammaln(np.arange(n2 + 1) + 1.0)
    with np.errstate(divide="ignore"):
        lp = np.log(prob)
        ly = np.log(np.abs(bias))
    ent, deficit = [], []
    for comp in iter_compositions(n2, m):
        active = comp > 0
        with np.errstate(invalid="ignore"):
            lw = logf[n2] - logf[comp].sum(axis=1) + np.where(active, comp * lp, 0.0).sum(axis=1)
            lyy = np.where(active, comp * ly, 0.0).sum(axis=1)
        w = np.exp(lw)
        x = -np.expm1(lyy) / 2.0
        ent.append(math.fsum((w * _hb(x)).tolist()))
        deficit.append(math.fsum((w * _hb_deficit(x, np.exp(lyy))).tolist()))
    return math.fsum(ent), math.fsum(deficit)


def _check_independent(n1: int, n2: int, q_x: float, q_z: float) -> None:
    if n1 < 1 or n2 < 1:
        raise DomainError("n1 and n2 must be >= 1")
    for q in (q_x, q_z):
        if not 0.0 <= q <= 0.5:
            raise DomainError(f"flip rate {q!r} outside [0, 1/2]")


def _independent_parts(n1: int, n2: int, q_x: float, q_z: float) -> tuple[float, float, float, float]:
    _check_independent(n1, n2, q_x, q_z)
    prob, _, bias = _flip_classes(n1, q_x)
    x_e, x_d = _parity_parts(n2, prob, bias)
    lz = n1 * math.log1p(-2.0 * q_z) if q_z < 0.5 else -math.inf
    qz1 = -math.expm1(lz) / 2.0
    zprob, zflip, zbias = _flip_classes(n2, qz1)
    if n2 == 1:
        zbias = np.array([math.exp(lz)])
    z_e = math.fsum((zprob * _hb(zflip)).tolist())
    z_d = math.fsum((zprob * _hb_deficit(zflip, zbias)).tolist())
    return x_e, x_d, z_e, z_d


def independent_noise_entropy(n1: int, n2: int, q_x: float, q_z: float) -> float:
    """Average logical entropy of the n1-in-n2 code under independent bit
    flips (rate ``q_x``) and phase flips (rate ``q_z``).

    Bit and phase information separate, so the entropy is the sum of the
    bit-flip part, averaged over the inner syndromes of all ``n2`` blocks,
    and the phase-flip part of the outer code acting on blocks whose phase
    flip rate is the parity rate ``(1 - (1 - 2 q_z)^n1) / 2``.
    """
    x_e, _, z_e, _ = _independent_parts(n1, n2, q_x, q_z)
    return x_e + z_e


def independent_noise_margin(n1: int, n2: int, q_x: float, q_z: float) -> float:
    """``entropy - 1`` for the n1-in-n2 code under independent noise,
    accurate even when the entropy sits within round-off of 1 (long codes,
    where one part is nearly 1 bit and the other nearly 0)."""
    x_e, x_d, z_e, z_d = _independent_parts(n1, n2, q_x, q_z)
    return x_e - z_d if x_e <= z_e else z_e - x_d


def _log_hb(lt: np.ndarray) -> np.ndarray:
    """Natural log of the binary entropy (bits) at ``t = exp(lt) <= 1/2``."""
    t = np.exp(lt)
    with np.errstate(divide="ignore"):
        exact = np.log(_hb(t))
    # h(t) ~ t (1 - ln t) / ln 2 with relative error O(t)
    with np.errstate(invalid="ignore"):
        tiny = lt + np.log1p(-lt) - math.log(math.log(2.0))
    return np.where(np.isneginf(lt), -np.inf, np.where(lt < -30.0, tiny, exact))


def _log_deficit(lr: np.ndarray) -> np.ndarray:
    """Natural log of ``1 - h((1 - y) / 2)`` at bias ``y = exp(lr)``."""
    y = np.exp(lr)
    with np.errstate(divide="ignore"):
        exact = np.log(_hb_deficit((1.0 - y) / 2.0, y))
        y2 = y * y
        series = 2.0 * lr - math.log(2.0 * math.log(2.0)) + np.log1p(y2 / 6.0 + y2 * y2 / 15.0)
    return np.where(lr < math.log(1e-3), series, exact)


def average_entropy_rep_log_margin(spec: RepCodeSpec, c: PauliChannel) -> tuple[int, float]:
    """Sign and natural log of ``|average_entropy_rep - 1|``.

    Per class ``H - 1 = h(s) - s D(r) - t D(rbar)`` with ``s, t`` the weights
    of the flip pattern and its complement and ``D`` the information carried
    by the phase bias ``r``. The positive and negative parts are summed in
    log space, so the sign survives even when the margin underflows.
    """
    n = spec.n
    cb = dualize(c) if spec.orientation == PHASE else c
    q = cb.q_x
    kk = np.arange(n + 1)
    log_c = np.array([log_binom(n, int(k)) for k in kk])
    with np.errstate(divide="ignore", invalid="ignore"):
        lq = math.log(q) if q > 0 else -math.inf
        l1 = math.log(cb.p_i + cb.p_z) if cb.p_i + cb.p_z > 0 else -math.inf
        lu = math.log(abs(cb.p_x - cb.p_y)) if cb.p_x != cb.p_y else -math.inf
        lw = math.log(abs(cb.p_i - cb.p_z)) if cb.p_i != cb.p_z else -math.inf
        la = log_c + np.where(kk > 0, kk * lq, 0.0) + np.where(n - kk > 0, (n - kk) * l1, 0.0)
        lr = np.where(kk > 0, kk * (lu - lq), 0.0) + np.where(n - kk > 0, (n - kk) * (lw - l1), 0.0)
    lr = np.where(np.isnan(lr), -np.inf, np.minimum(lr, 0.0))
    ld = _log_deficit(lr)
    ks = np.arange((n + 1) // 2)
    lo, hi = la[ks], la[n - ks]
    live = np.isfinite(lo) | np.isfinite(hi)
    lo, hi = lo[live], hi[live]
    ks = ks[live]
    lp = np.logaddexp(lo, hi)
    lt, ls = hi - lp, lo - lp
    pos = [lp + _log_hb(np.minimum(lt, ls))]
    neg = [lp + ls + ld[ks], lp + lt + ld[n - ks]]
    if n % 2 == 0 and np.isfinite(la[n // 2]):
        dtie = math.exp(ld[n // 2])
        if dtie < 1.0:
            pos.append(np.array([la[n // 2] + math.log1p(-dtie)]))
    with np.errstate(divide="ignore"):
        lpos = logsumexp(np.concatenate(pos)) if sum(len(v) for v in pos) else -math.inf
        lneg = logsumexp(np.concatenate(neg)) if len(ks) else -math.inf
    if lpos == lneg:
        return 0, -math.inf
    big, small = max(lpos, lneg), min(lpos, lneg)
    return (1 if lpos > lneg else -1), big + math.log(-math.expm1(small - big))


def average_entropy_rep_margin(spec: RepCodeSpec, c: PauliChannel) -> float:
    """``average_entropy_rep - 1`` without cancellation near 1."""
    sign, lm = average_entropy_rep_log_margin(spec, c)
    return sign * math.exp(lm) if sign else 0.0


# --------------------------------------------------------------------------
# Infinite-length bit-flip code
# --------------------------------------------------------------------------


def infinite_bitflip_margin(c: PauliChannel) -> float:
    """Margin of the infinite-length bit-flip criterion.

    Positive means the logical entropy tends to a value below 1 as the code
    length grows; negative means above 1.
    """
    q = c.q_x
    if not 0.0 < q < 1.0:
        raise DomainError(f"q_x = {q!r} must lie strictly inside (0, 1)")
    u = c.p_x - c.p_y
    w = c.p_i - c.p_z
    if u == 0.0 and w == 0.0:
        warnings.warn("both phase-information terms vanish; margin is degenerate", RuntimeWarning)
    return u * u * (1.0 - q) + w * w * q - 2.0 * (q * (1.0 - q)) ** 1.5


def independent_infinite_threshold(q_z: float) -> float:
    """Bit-flip rate at which the infinite bit-flip criterion is marginal for
    independent noise with phase-flip rate ``q_z``."""
    if not 0.0 <= q_z <= 0.5:
        raise DomainError(f"q_z = {q_z!r} outside [0, 1/2]")
    return (1.0 - math.sqrt(1.0 - (1.0 - 2.0 * q_z) ** 4)) / 2.0


def suggest_n1(kind: str, rate: float) -> int:
    """Starting guess for the best bit-flip length at small noise.

    ``kind='independent'`` uses ``1 / (2 q_z)``; ``kind='two-pauli'`` uses
    ``2 / p_1``. Only a heuristic for seeding sweeps.
    """
    if rate <= 0:
        raise DomainError("rate must be positive")
    if kind == "independent":
        guess = 1.0 / (2.0 * rate)
    elif kind == "two-pauli":
        guess = 2.0 / rate
    else:
        raise DomainError(f"unknown heuristic {kind!r}")
    return max(1, int(round(guess)))
