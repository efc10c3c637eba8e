"""Pure numpy implementations of the hot loops (fallback for ``_ckernels``)."""
from __future__ import annotations

import math

import numpy as np

LN2 = math.log(2.0)
_CHUNK = 1 << 20


def _hb_from_logrho(lr: np.ndarray) -> np.ndarray:
    # binary entropy of (1 +- |rho|) / 2 given log|rho|
    small = np.clip(-np.expm1(lr), 0.0, 1.0) * 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -(small * np.log(small) + (1.0 - small) * np.log1p(-small)) / LN2
    return np.where(small > 0.0, out, 0.0)


def grid_entropy(uA, uAb, uR, uRb, uL, fA, fAb, fR, fRb, fL, lconst: float) -> float:
    """Sum of ``count * P(syndrome) * H(conditional)`` over the grid of
    unflagged (``u*``) by flagged (``f*``) composition features.

    ``*A``/``*Ab``: log of the T / complement probability products.
    ``*R``/``*Rb``: log of ``|b/a|`` for T / complement.
    ``*L``: minus the log-factorial sums of the counts.
    """
    uA, uAb, uR, uRb, uL = (np.asarray(v, dtype=float) for v in (uA, uAb, uR, uRb, uL))
    fA, fAb, fR, fRb, fL = (np.asarray(v, dtype=float) for v in (fA, fAb, fR, fRb, fL))
    nf = fA.shape[0]
    if nf == 0 or uA.shape[0] == 0:
        return 0.0
    rows = max(1, _CHUNK // nf)
    partial = []
    for start in range(0, uA.shape[0], rows):
        sl = slice(start, start + rows)
        lA = uA[sl, None] + fA[None, :]
        lAb = uAb[sl, None] + fAb[None, :]
        with np.errstate(invalid="ignore"):
            lL = np.logaddexp(lA, lAb)
        live = lL > -np.inf
        if not live.any():
            continue
        with np.errstate(invalid="ignore"):
            ls = np.where(live, lA - lL, -np.inf)
            lt = np.where(live, lAb - lL, -np.inf)
        s = np.exp(ls)
        t = np.exp(lt)
        with np.errstate(invalid="ignore"):
            h = -(np.where(s > 0, s * ls, 0.0) + np.where(t > 0, t * lt, 0.0)) / LN2
        h += np.where(s > 0, s * _hb_from_logrho(uR[sl, None] + fR[None, :]), 0.0)
        h += np.where(t > 0, t * _hb_from_logrho(uRb[sl, None] + fRb[None, :]), 0.0)
        w = np.exp(np.where(live, lconst + uL[sl, None] + fL[None, :] + lL, -np.inf))
        partial.append(float(np.sum(w * h)))
    return math.fsum(partial)


def coset_entropy_sum(joint: np.ndarray, weights: np.ndarray) -> float:
    """``sum_t weights[t] * sum_s P_t(s) H(P_t(.|s))`` for a batch of joint tables."""
    joint = np.clip(joint, 0.0, None)
    tot = joint.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(tot > 0, joint / tot, 0.0)
        terms = np.where(cond > 0, -cond * np.log2(cond), 0.0).sum(axis=-1)
    per = (tot[..., 0] * terms).sum(axis=-1)
    return float(np.dot(weights, per))
