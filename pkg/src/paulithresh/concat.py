"""Concatenated code stacks: exact level-by-level enumeration and Monte Carlo.

A stack is read bottom-up. Level 1 sees the physical channel on every qubit;
level ``L`` sees, on each of its qubits, the conditional logical channel left
by one block of level ``L - 1`` after that block's syndrome was measured.

Outcome lists are carried between levels as *types*: a weight vector
``w[m]`` (probability of the child syndrome class) and a channel array
``chans[m, 4]`` (its conditional logical channel, order I, X, Y, Z).
"""
from __future__ import annotations

import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from . import kernels
from ._combinatorics import compositions, composition_count, log_factorials
from .channel import DomainError, PauliChannel, shannon_entropy
from .errors import BudgetError
from .repetition import BIT, PHASE, RepCodeSpec, _check_orientation, logical_outcomes_iid
from .stabilizer import (
    StabilizerCode,
    build_five_qubit_code,
    coset_probabilities,
    entropy_of_joint,
    joint_table,
    pauli_product,
    xor_step,
)

__all__ = [
    "Level",
    "Repetition",
    "FiveQubit",
    "Stabilizer",
    "CodeStack",
    "McEstimate",
    "BudgetError",
    "level_outcomes_iid",
    "rep_level_entropy",
    "rep_level_outcomes",
    "rep_level_total_probability",
    "stab_level_entropy",
    "stab_level_outcomes",
    "merge_types",
    "exact_n1_in_n2_entropy",
    "n1_in_n2_work",
    "exact_stack_entropy",
    "mc_stack_entropy",
    "combine_recovery",
]

DEFAULT_KERNEL_BUDGET = 10**9
DEFAULT_TREE_BUDGET = 10**8
DEFAULT_OUTCOME_BUDGET = 10**7  # rows held in memory between levels
LN2 = math.log(2.0)


# --------------------------------------------------------------------------
# Stack description
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Level:
    """One level of a stack: ``kind`` is ``"rep"``, ``"five513"`` or ``"stab"``."""

    kind: str
    n: int
    orientation: str | None = None
    code: StabilizerCode | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.kind == "rep":
            RepCodeSpec(self.n, self.orientation or BIT)
            object.__setattr__(self, "orientation", _check_orientation(self.orientation or BIT))
        elif self.kind == "five513":
            object.__setattr__(self, "code", _FIVE)
        elif self.kind == "stab":
            if self.code is None:
                raise DomainError("custom stabilizer level needs a code")
            object.__setattr__(self, "n", self.code.n)
        else:
            raise DomainError(f"unknown level kind {self.kind!r}")

    @property
    def is_rep(self) -> bool:
        return self.kind == "rep"

    def label(self) -> str:
        if self.kind == "rep":
            return f"rep {self.n} {self.orientation}"
        if self.kind == "five513":
            return "five513"
        return f"stab {self.code.name or self.n}"


_FIVE = build_five_qubit_code()


def Repetition(n: int, orientation: str = BIT) -> Level:
    return Level("rep", int(n), orientation)


def FiveQubit() -> Level:
    return Level("five513", 5)


def Stabilizer(code: StabilizerCode) -> Level:
    return Level("stab", code.n, None, code)


_TOKEN = re.compile(r"^(?:rep(\d+)(bit|phase)|five513|(\d+)in(\d+))(?:x(\d+))?$")


@dataclass(frozen=True)
class CodeStack:
    levels: tuple[Level, ...]

    def __post_init__(self) -> None:
        levels = tuple(self.levels)
        if not levels:
            raise DomainError("a code stack needs at least one level")
        object.__setattr__(self, "levels", levels)

    def __len__(self) -> int:
        return len(self.levels)

    @property
    def qubits(self) -> int:
        """Physical qubits per logical qubit."""
        return math.prod(lv.n for lv in self.levels)

    @property
    def j(self) -> int:
        """Number of trailing [[5,1,3]] levels."""
        k = 0
        for lv in reversed(self.levels):
            if lv.kind != "five513":
                break
            k += 1
        return k

    def prefix(self, depth: int) -> "CodeStack":
        return CodeStack(self.levels[:depth])

    def flattened(self) -> "CodeStack":
        """Merge consecutive repetition levels of the same orientation.

        ``rep(a) phase`` under ``rep(b) phase`` decodes identically in
        entropy to ``rep(a*b) phase``; the merged stack is much cheaper.
        """
        out: list[Level] = []
        for lv in self.levels:
            if out and lv.is_rep and out[-1].is_rep and out[-1].orientation == lv.orientation:
                out[-1] = Repetition(out[-1].n * lv.n, lv.orientation)
            else:
                out.append(lv)
        return CodeStack(tuple(out))

    def describe(self) -> str:
        parts: list[str] = []
        for lv in self.levels:
            tag = lv.label().replace(" ", "")
            if parts and parts[-1].split("x")[0] == tag:
                base, _, cnt = parts[-1].partition("x")
                parts[-1] = f"{base}x{int(cnt or 1) + 1}"
            else:
                parts.append(tag)
        return ",".join(parts)

    @classmethod
    def composite(cls, n1: int, n2: int) -> "CodeStack":
        """The ``n1`` bit-flip code inside an ``n2`` phase-flip code."""
        levels = [Repetition(n1, BIT)]
        if n2 > 1:
            levels.append(Repetition(n2, PHASE))
        return cls(tuple(levels))

    @classmethod
    def parse(cls, text: str) -> "CodeStack":
        """Parse the one-level-per-line format (``rep 5 bit``, ``five513``)."""
        levels: list[Level] = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip().lower()
            if not line:
                continue
            tok = line.split()
            if tok[0] == "rep" and len(tok) == 3:
                try:
                    levels.append(Repetition(int(tok[1]), tok[2]))
                except ValueError as exc:
                    raise DomainError(f"bad stack line {raw!r}") from exc
            elif tok == ["five513"]:
                levels.append(FiveQubit())
            elif tok[0] == "stab" and len(tok) == 2:
                from .stabilizer import load_code

                levels.append(Stabilizer(load_code(tok[1])))
            else:
                raise DomainError(f"bad stack line {raw!r}")
        return cls(tuple(levels))

    @classmethod
    def from_string(cls, spec: str) -> "CodeStack":
        """Inline form: comma-separated tokens such as ``rep5bit``,
        ``rep2phasex6``, ``five513x2`` or ``5in64``; a path to a stack file
        is also accepted."""
        p = Path(spec)
        if "\n" in spec or (p.suffix and p.is_file()):
            return cls.parse(spec if "\n" in spec else p.read_text())
        levels: list[Level] = []
        for tok in (t.strip().lower() for t in re.split(r"[,+]", spec)):
            m = _TOKEN.match(tok.replace(" ", ""))
            if not m:
                raise DomainError(f"bad stack token {tok!r}")
            rep_n, orient, n1, n2, times = m.groups()
            times = int(times) if times else 1
            if times < 1:
                raise DomainError(f"bad repeat count in {tok!r}")
            if rep_n:
                unit = [Repetition(int(rep_n), orient)]
            elif n1:
                unit = list(cls.composite(int(n1), int(n2)).levels)
            else:
                unit = [FiveQubit()]
            levels.extend(unit * times)
        return cls(tuple(levels))


# --------------------------------------------------------------------------
# Types (weighted outcome lists)
# --------------------------------------------------------------------------


def level_outcomes_iid(level: Level, c: PauliChannel) -> tuple[np.ndarray, np.ndarray]:
    """Outcome types of one block under identical physical noise."""
    if level.is_rep:
        outs = logical_outcomes_iid(RepCodeSpec(level.n, level.orientation), c)
        w = np.array([o.class_prob for o in outs])
        ch = np.array([o.conditional.as_tuple() for o in outs])
    else:
        joint = joint_table(level.code, [c] * level.n)
        w = joint.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            ch = np.where(w[:, None] > 0, joint / w[:, None], 0.0)
    keep = w > 0
    return w[keep], ch[keep]


def merge_types(w: np.ndarray, chans: np.ndarray, decimals: int = 14) -> tuple[np.ndarray, np.ndarray]:
    """Relabel each channel by a logical Pauli so ``p_I`` is largest, then
    merge equal channels. A known logical Pauli on a child is a Pauli frame
    for the parent code, so average entropies are unchanged."""
    w = np.asarray(w, dtype=float)
    chans = np.asarray(chans, dtype=float)
    keep = w > 0
    w, chans = w[keep], chans[keep]
    g = np.argmax(chans, axis=1)
    # with I, X, Y, Z = 0..3, Pauli multiplication up to phase is XOR
    perm = np.arange(4)[None, :] ^ g[:, None]
    canon = np.take_along_axis(chans, perm, axis=1)
    key = np.round(canon, decimals)
    uniq, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    return np.bincount(inv, weights=w), canon[first]


def _to_bit(chans: np.ndarray, orientation: str) -> np.ndarray:
    return chans[..., [0, 3, 2, 1]] if orientation == PHASE else chans


def _safe_log(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), -np.inf)


def _log_ratio(d: np.ndarray, s: np.ndarray) -> np.ndarray:
    # log(|d| / s) for |d| <= s, accurate when |d| is close to s
    with np.errstate(divide="ignore", invalid="ignore"):
        small = np.where(s > 0, (s - np.abs(d)) / np.where(s > 0, s, 1.0), 0.0)
        out = np.log1p(-np.clip(small, 0.0, 1.0))
    return np.where(s > 0, out, 0.0)


def _type_logs(w: np.ndarray, chans: np.ndarray, orientation: str) -> dict[str, np.ndarray]:
    """Per-type logs of the unflipped / flipped factors in bit orientation."""
    c = _to_bit(np.asarray(chans, dtype=float), orientation)
    ci, cx, cy, cz = c[:, 0], c[:, 1], c[:, 2], c[:, 3]
    s0, s1 = ci + cz, cx + cy
    lw = _safe_log(np.asarray(w, dtype=float))
    return {
        "a0": lw + _safe_log(s0),
        "a1": lw + _safe_log(s1),
        "r0": _log_ratio(ci - cz, s0),
        "r1": _log_ratio(cx - cy, s1),
        "n0": (ci - cz < 0).astype(np.int64),
        "n1": (cx - cy < 0).astype(np.int64),
    }


def _dot_logs(counts: np.ndarray, logs: np.ndarray) -> np.ndarray:
    finite = np.isfinite(logs)
    val = counts @ np.where(finite, logs, 0.0)
    if not finite.all():
        dead = counts @ (~finite).astype(np.int64) > 0
        val = np.where(dead, -np.inf, val)
    return val


def _features(counts: np.ndarray, tl: dict[str, np.ndarray], flagged: bool) -> tuple[np.ndarray, ...]:
    lf = log_factorials(int(counts.max()) if counts.size else 0)
    cl = -lf[counts].sum(axis=1)
    if flagged:
        return (
            _dot_logs(counts, tl["a1"]),
            _dot_logs(counts, tl["a0"]),
            _dot_logs(counts, tl["r1"]),
            _dot_logs(counts, tl["r0"]),
            cl,
        )
    return (
        _dot_logs(counts, tl["a0"]),
        _dot_logs(counts, tl["a1"]),
        _dot_logs(counts, tl["r0"]),
        _dot_logs(counts, tl["r1"]),
        cl,
    )


def rep_level_work(m: int, n: int) -> int:
    """Grid cells visited by the composition sum for ``m`` types and length ``n``."""
    return sum(composition_count(n - f, m) * composition_count(f, m) for f in range(n // 2 + 1))


def _lconst(n: int, f: int) -> float:
    return math.lgamma(n + 1) - (LN2 if 2 * f == n else 0.0)


def _rep_f_task(args) -> float:
    f, n, w, chans, orientation, backend = args
    tl = _type_logs(w, chans, orientation)
    m = len(w)
    u = _features(compositions(n - f, m), tl, False)
    fl = _features(compositions(f, m), tl, True)
    kern = kernels.backend(backend) if backend else kernels
    arrs = [np.ascontiguousarray(a, dtype=float) for a in (*u, *fl)]
    return kern.grid_entropy(*arrs, _lconst(n, f))


def rep_level_entropy(
    w: np.ndarray,
    chans: np.ndarray,
    n: int,
    orientation: str,
    *,
    budget: float = DEFAULT_KERNEL_BUDGET,
    workers: int = 1,
    backend: str | None = None,
) -> float:
    """Average logical entropy of a length-``n`` repetition code whose qubits
    carry independently drawn types.

    Each syndrome class is a pair (unflagged type counts, flagged type
    counts) with at most ``n/2`` flagged qubits; the sum runs over all such
    pairs in a compiled double loop.
    """
    w = np.asarray(w, dtype=float)
    chans = np.asarray(chans, dtype=float)
    orientation = _check_orientation(orientation)
    work = rep_level_work(len(w), n)
    if work > budget:
        raise BudgetError(f"repetition level needs {work:.3g} grid cells, budget {budget:.3g}")
    tasks = [(f, n, w, chans, orientation, backend) for f in range(n // 2 + 1)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_rep_f_task, tasks))
    else:
        parts = [_rep_f_task(t) for t in tasks]
    return math.fsum(parts)


def rep_level_total_probability(w: np.ndarray, chans: np.ndarray, n: int, orientation: str) -> float:
    """Sum of all syndrome-class probabilities of a repetition level; equal
    to ``sum(w) ** n`` when the enumeration is complete. Streams over the
    flagged count, so it needs no more memory than one grid."""
    w = np.asarray(w, dtype=float)
    tl = _type_logs(w, np.asarray(chans, dtype=float), _check_orientation(orientation))
    m = len(w)
    parts = []
    for f in range(n // 2 + 1):
        uA, uAb, _, _, uL = _features(compositions(n - f, m), tl, False)
        fA, fAb, _, _, fL = _features(compositions(f, m), tl, True)
        with np.errstate(invalid="ignore"):
            lL = np.logaddexp(uA[:, None] + fA[None, :], uAb[:, None] + fAb[None, :])
        lp = np.where(np.isfinite(lL), _lconst(n, f) + uL[:, None] + fL[None, :] + lL, -np.inf)
        parts.append(float(np.exp(lp).sum()))
    return math.fsum(parts)


def rep_level_outcomes(
    w: np.ndarray,
    chans: np.ndarray,
    n: int,
    orientation: str,
    *,
    budget: float = DEFAULT_OUTCOME_BUDGET,
) -> tuple[np.ndarray, np.ndarray]:
    """All syndrome classes of a repetition level as output types."""
    w = np.asarray(w, dtype=float)
    chans = np.asarray(chans, dtype=float)
    orientation = _check_orientation(orientation)
    m = len(w)
    work = rep_level_work(m, n)
    if work > budget:
        raise BudgetError(f"repetition level has {work:.3g} outcome classes, budget {budget:.3g}")
    tl = _type_logs(w, chans, orientation)
    out_w, out_c = [], []
    for f in range(n // 2 + 1):
        cu, cf = compositions(n - f, m), compositions(f, m)
        uA, uAb, uR, uRb, uL = _features(cu, tl, False)
        fA, fAb, fR, fRb, fL = _features(cf, tl, True)
        su = (cu @ tl["n0"])[:, None] + (cf @ tl["n1"])[None, :]
        sub = (cu @ tl["n1"])[:, None] + (cf @ tl["n0"])[None, :]
        lA = uA[:, None] + fA[None, :]
        lAb = uAb[:, None] + fAb[None, :]
        with np.errstate(invalid="ignore"):
            lL = np.logaddexp(lA, lAb)
        live = np.isfinite(lL)
        s = np.exp(np.where(live, lA - lL, -np.inf))
        t = np.exp(np.where(live, lAb - lL, -np.inf))
        rho = np.where(su % 2, -1.0, 1.0) * np.exp(uR[:, None] + fR[None, :])
        rhob = np.where(sub % 2, -1.0, 1.0) * np.exp(uRb[:, None] + fRb[None, :])
        cond = np.stack(
            [s * (1 + rho) / 2, t * (1 + rhob) / 2, t * (1 - rhob) / 2, s * (1 - rho) / 2], axis=-1
        )
        prob = np.exp(np.where(live, _lconst(n, f) + uL[:, None] + fL[None, :] + lL, -np.inf))
        out_w.append(prob[live])
        out_c.append(np.clip(cond[live], 0.0, None))
    ow = np.concatenate(out_w)
    oc = _to_bit(np.concatenate(out_c), orientation)
    return ow, oc / oc.sum(axis=1, keepdims=True)


def _stab_blocks(code: StabilizerCode, w: np.ndarray, chans: np.ndarray, budget: float, chunk: int = 1 << 16):
    """Yield ``(tuple weights, joint tables)`` over all ordered type tuples."""
    m, n = len(w), code.n
    if float(m) ** n > budget:
        raise BudgetError(f"stabilizer level has {m}^{n} input tuples, budget {budget:.3g}")
    pats = code._xor_patterns
    order = code._joint_order
    # split qubits into a leading part iterated in Python and a vectorized tail
    tail = n
    while tail > 1 and m**tail > chunk:
        tail -= 1
    lead = n - tail
    g = np.zeros((1, 2 ** (n + 1)))
    g[0, 0] = 1.0
    gw = np.ones(1)
    for i in range(lead, n):
        g = xor_step(g[:, None, :], chans[None, :, :], pats[i]).reshape(-1, g.shape[1])
        gw = (gw[:, None] * w[None, :]).reshape(-1)
    for head in product(range(m), repeat=lead):
        f = g
        hw = 1.0
        for i, k in enumerate(head):
            f = xor_step(f, chans[k], pats[i])
            hw *= w[k]
        joint = np.empty_like(f)
        joint[:, order] = f
        yield hw * gw, joint.reshape(len(gw), -1, 4)


def stab_level_entropy(code, w, chans, *, budget: float = DEFAULT_TREE_BUDGET) -> float:
    parts = []
    for tw, joint in _stab_blocks(code, np.asarray(w, float), np.asarray(chans, float), budget):
        parts.append(float(np.dot(tw, entropy_of_joint(joint).sum(axis=1))))
    return math.fsum(parts)


def stab_level_outcomes(code, w, chans, *, budget: float = DEFAULT_OUTCOME_BUDGET):
    rows = float(len(w)) ** code.n * code.num_syndromes
    if rows > budget:
        raise BudgetError(f"stabilizer level has {rows:.3g} outcome rows, budget {budget:.3g}")
    ws, cs = [], []
    for tw, joint in _stab_blocks(code, np.asarray(w, float), np.asarray(chans, float), budget):
        marg = joint.sum(axis=2)
        keep = marg > 0
        ws.append((tw[:, None] * marg)[keep])
        cs.append(joint[keep] / marg[keep][:, None])
    return merge_types(np.concatenate(ws), np.concatenate(cs))


# --------------------------------------------------------------------------
# Exact entropies
# --------------------------------------------------------------------------


def n1_in_n2_work(n1: int, n2: int) -> int:
    return rep_level_work(n1 // 2 + 1, n2)


def exact_n1_in_n2_entropy(
    n1: int,
    n2: int,
    c: PauliChannel,
    *,
    budget: float = DEFAULT_KERNEL_BUDGET,
    workers: int = 1,
    backend: str | None = None,
) -> float:
    """Average entropy of the ``n1`` bit-flip code inside an ``n2`` phase-flip code.

    The inner distance classes, each split into flagged / unflagged by the
    outer decoder, give ``2 * (n1 // 2 + 1)`` cases; all compositions of
    ``n2`` over the cases are summed. Even ``n1`` works the same way since
    the inner tie class is just another type.
    """
    if int(n1) != n1 or not 1 <= n1:
        raise DomainError(f"n1 must be a positive integer, got {n1!r}")
    if int(n2) != n2 or n2 < 1:
        raise DomainError(f"n2 must be a positive integer, got {n2!r}")
    w, ch = level_outcomes_iid(Repetition(n1, BIT), c)
    if n2 == 1:
        return math.fsum((w * np.array([shannon_entropy(r) for r in ch])).tolist())
    return rep_level_entropy(w, ch, int(n2), PHASE, budget=budget, workers=workers, backend=backend)


def exact_stack_entropy(
    stack: CodeStack,
    c: PauliChannel,
    *,
    budget: float = DEFAULT_TREE_BUDGET,
    kernel_budget: float = DEFAULT_KERNEL_BUDGET,
    outcome_budget: float = DEFAULT_OUTCOME_BUDGET,
    flatten: bool = True,
    merge: bool = True,
    workers: int = 1,
) -> float:
    """Exact average entropy at the top of ``stack``.

    Lower levels produce merged outcome types; the top level is summed
    directly. ``budget`` bounds the tuples of a top stabilizer level,
    ``kernel_budget`` a top repetition level and ``outcome_budget`` the
    rows passed between levels.
    """
    levels = (stack.flattened() if flatten else stack).levels
    w, ch = level_outcomes_iid(levels[0], c)
    if len(levels) == 1:
        return math.fsum((w * np.array([shannon_entropy(r) for r in ch])).tolist())
    for depth, lv in enumerate(levels[1:], start=2):
        if merge:
            w, ch = merge_types(w, ch)
        top = depth == len(levels)
        if lv.is_rep:
            if top:
                return rep_level_entropy(w, ch, lv.n, lv.orientation, budget=kernel_budget, workers=workers)
            w, ch = rep_level_outcomes(w, ch, lv.n, lv.orientation, budget=outcome_budget)
        else:
            if top:
                return stab_level_entropy(lv.code, w, ch, budget=budget)
            w, ch = stab_level_outcomes(lv.code, w, ch, budget=outcome_budget)
    raise AssertionError("unreachable")


# --------------------------------------------------------------------------
# Monte Carlo
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class McEstimate:
    """Sample mean of the top-level entropy with its standard error.

    ``levels`` holds ``(mean, std_error)`` of the block-averaged entropy
    after every level; ``values`` the per-sample top-level entropies.
    """

    mean: float
    std_error: float
    samples: int
    seed: int
    levels: tuple[tuple[float, float], ...] = ()
    values: np.ndarray | None = field(default=None, repr=False, compare=False)


def _entropy_rows(chans: np.ndarray) -> np.ndarray:
    c = np.clip(chans, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(c > 0, -c * np.log2(c), 0.0).sum(axis=-1)


def _sample_rep(chans: np.ndarray, orientation: str, u: np.ndarray) -> np.ndarray:
    """One syndrome per row of ``chans[N, n, 4]``; returns conditionals ``[N, 4]``."""
    c = _to_bit(chans, orientation)
    n = c.shape[1]
    ci, cx, cy, cz = (c[..., k] for k in range(4))
    q = cx + cy
    flips = u < q
    cnt = flips.sum(axis=1)
    invert = (2 * cnt > n) | ((2 * cnt == n) & flips[:, -1])
    flips ^= invert[:, None]
    log_q, log_nq = _safe_log(q), _safe_log(ci + cz)
    r1 = _log_ratio(cx - cy, q)
    r0 = _log_ratio(ci - cz, ci + cz)
    neg1, neg0 = cx - cy < 0, ci - cz < 0
    lA = np.where(flips, log_q, log_nq).sum(axis=1)
    lAb = np.where(flips, log_nq, log_q).sum(axis=1)
    lr = np.where(flips, r1, r0).sum(axis=1)
    lrb = np.where(flips, r0, r1).sum(axis=1)
    sg = np.where(np.where(flips, neg1, neg0).sum(axis=1) % 2, -1.0, 1.0)
    sgb = np.where(np.where(flips, neg0, neg1).sum(axis=1) % 2, -1.0, 1.0)
    with np.errstate(invalid="ignore"):
        lL = np.logaddexp(lA, lAb)
    s = np.exp(lA - lL)
    t = np.exp(lAb - lL)
    rho, rhob = sg * np.exp(lr), sgb * np.exp(lrb)
    out = np.stack([s * (1 + rho) / 2, t * (1 + rhob) / 2, t * (1 - rhob) / 2, s * (1 - rho) / 2], axis=-1)
    out = np.clip(out, 0.0, None)
    return _to_bit(out / out.sum(axis=1, keepdims=True), orientation)


def _sample_stab(code: StabilizerCode, chans: np.ndarray, u: np.ndarray) -> np.ndarray:
    joint = coset_probabilities(code, chans)  # (N, S, 4)
    marg = joint.sum(axis=2)
    cdf = np.cumsum(marg, axis=1)
    target = u * cdf[:, -1]
    s = (cdf <= target[:, None]).sum(axis=1)
    s = np.minimum(s, marg.shape[1] - 1)
    # never land on a zero-probability syndrome through round-off
    bad = marg[np.arange(len(s)), s] <= 0
    if bad.any():
        s[bad] = np.argmax(marg[bad], axis=1)
    row = joint[np.arange(len(s)), s]
    return row / row.sum(axis=1, keepdims=True)


def _mc_chunk(args) -> np.ndarray:
    """Per-sample block-averaged entropies after every level, shape ``(S, L)``."""
    levels, c_tuple, nsamp, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    w, ch = level_outcomes_iid(levels[0], PauliChannel(*c_tuple))
    cdf = np.cumsum(w)
    blocks = math.prod(lv.n for lv in levels[1:])
    idx = np.searchsorted(cdf, rng.random((nsamp, blocks)) * cdf[-1], side="right")
    idx = np.minimum(idx, len(w) - 1)
    cur = ch[idx]  # (S, B, 4)
    rec = [_entropy_rows(cur).mean(axis=1)]
    for lv in levels[1:]:
        b = cur.shape[1] // lv.n
        grouped = cur.reshape(nsamp * b, lv.n, 4)
        if lv.is_rep:
            nxt = _sample_rep(grouped, lv.orientation, rng.random((nsamp * b, lv.n)))
        else:
            nxt = _sample_stab(lv.code, grouped, rng.random(nsamp * b))
        cur = nxt.reshape(nsamp, b, 4)
        rec.append(_entropy_rows(cur).mean(axis=1))
    return np.stack(rec, axis=1)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    mean = math.fsum(x.tolist()) / len(x)
    se = float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
    return mean, se


def mc_stack_entropy(
    stack: CodeStack,
    c: PauliChannel,
    samples: int,
    seed: int = 0,
    *,
    workers: int = 1,
    chunk: int = 256,
    flatten: bool = True,
) -> McEstimate:
    """Monte Carlo estimate of the top-level average entropy.

    Every sample draws one syndrome per block per level, passing the
    conditional channels upward. Samples are split into fixed chunks with
    seeds spawned from ``seed``, so results do not depend on ``workers``
    and reuse the same random numbers across channels.
    """
    if int(samples) != samples or samples < 100:
        raise DomainError(f"samples must be an integer >= 100, got {samples!r}")
    samples = int(samples)
    levels = (stack.flattened() if flatten else stack).levels
    sizes = [min(chunk, samples - s) for s in range(0, samples, chunk)]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    tasks = [(levels, c.as_tuple(), k, ss) for k, ss in zip(sizes, seeds)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_mc_chunk, tasks))
    else:
        parts = [_mc_chunk(t) for t in tasks]
    allv = np.concatenate(parts, axis=0)
    per_level = tuple(_mean_se(allv[:, i]) for i in range(allv.shape[1]))
    mean, se = per_level[-1]
    return McEstimate(mean, se, samples, seed, per_level, allv[:, -1].copy())


# --------------------------------------------------------------------------
# Recovery bookkeeping
# --------------------------------------------------------------------------


def _clean(p: str) -> str:
    s = re.sub(r"[\s⊗*]", "", p).upper()
    if any(ch not in "IXYZ" for ch in s):
        raise DomainError(f"not a Pauli string: {p!r}")
    return s


def combine_recovery(inner: str, outer: str, encoded_x: str, encoded_z: str) -> str:
    """Physical recovery for two levels, up to phase.

    ``outer`` acts on the logical qubits of the inner blocks; each of its
    letters is expanded through the inner code's encoded operators
    ``encoded_x`` / ``encoded_z`` and multiplied onto ``inner``.
    """
    inner, outer = _clean(inner), _clean(outer)
    ex, ez = _clean(encoded_x), _clean(encoded_z)
    if len(ex) != len(ez):
        raise DomainError("encoded operators differ in length")
    if len(outer) * len(ex) != len(inner):
        raise DomainError(
            f"outer recovery of length {len(outer)} with blocks of {len(ex)} "
            f"does not match inner recovery of length {len(inner)}"
        )
    enc = {"I": "I" * len(ex), "X": ex, "Z": ez, "Y": pauli_product(ex, ez)}
    expanded = "".join(enc[ch] for ch in outer)
    return pauli_product(inner, expanded)
