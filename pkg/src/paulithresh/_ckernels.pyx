# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``_kernels_py``."""
import numpy as np

from libc.math cimport log, log1p, INFINITY

cdef double LN2 = 0.6931471805599453


cdef inline double hb_from_em(double em) nogil:
    # binary entropy of (1 +- |rho|) / 2 given expm1(log|rho|)
    cdef double small = -em
    if small <= 0.0:
        return 0.0
    if small > 1.0:
        small = 1.0
    small *= 0.5
    return -(small * log(small) + (1.0 - small) * log1p(-small)) / LN2


def _split_exp(row, col, double lconst):
    # exp(lconst + row[i] + col[j]) == r[i] * c[j] with c <= 1; every cell is a
    # probability, so r <= 1 as well and the product cannot overflow
    cmax = col.max() if col.size else 0.0
    if not np.isfinite(cmax):
        cmax = 0.0
    with np.errstate(over="ignore", under="ignore"):
        return np.exp(lconst + row + cmax), np.exp(col - cmax)


def grid_entropy(const double[::1] uA, const double[::1] uAb, const double[::1] uR,
                 const double[::1] uRb, const double[::1] uL,
                 const double[::1] fA, const double[::1] fAb, const double[::1] fR,
                 const double[::1] fRb, const double[::1] fL, double lconst):
    cdef Py_ssize_t i, j, nu = uA.shape[0], nf = fA.shape[0]
    if nu == 0 or nf == 0:
        return 0.0
    uL_, fL_ = np.asarray(uL), np.asarray(fL)
    rA, cA = _split_exp(uL_ + np.asarray(uA), fL_ + np.asarray(fA), lconst)
    rAb, cAb = _split_exp(uL_ + np.asarray(uAb), fL_ + np.asarray(fAb), lconst)
    cdef const double[::1] WrA = rA, WcA = cA, WrAb = rAb, WcAb = cAb
    # expm1(a + b) == ea + eb + ea * eb
    cdef const double[::1] eR = np.expm1(np.asarray(uR))
    cdef const double[::1] eRb = np.expm1(np.asarray(uRb))
    cdef const double[::1] gR = np.expm1(np.asarray(fR))
    cdef const double[::1] gRb = np.expm1(np.asarray(fRb))
    cdef double lA, lAb, hi, wA, wAb, e, l1p, ea, eb, term
    cdef double acc = 0.0, comp = 0.0, y, tmp
    with nogil:
        for i in range(nu):
            for j in range(nf):
                wA = WrA[i] * WcA[j]
                wAb = WrAb[i] * WcAb[j]
                if wA == 0.0 and wAb == 0.0:
                    continue
                lA = uA[i] + fA[j]
                lAb = uAb[i] + fAb[j]
                if lA >= lAb:
                    hi = lA
                    e = wAb / wA if wA > 0.0 else 0.0
                else:
                    hi = lAb
                    e = wA / wAb if wAb > 0.0 else 0.0
                l1p = log1p(e)
                term = 0.0
                if wA > 0.0:
                    ea = eR[i]
                    eb = gR[j]
                    term += wA * (hb_from_em(ea + eb + ea * eb) - (lA - hi - l1p) / LN2)
                if wAb > 0.0:
                    ea = eRb[i]
                    eb = gRb[j]
                    term += wAb * (hb_from_em(ea + eb + ea * eb) - (lAb - hi - l1p) / LN2)
                # Kahan summation
                y = term - comp
                tmp = acc + y
                comp = (tmp - acc) - y
                acc = tmp
    return acc
