"""[[n,1]] stabilizer codes over the binary symplectic representation.

Paulis are held as a pair of integer bit masks ``(x, z)``; bit ``i`` refers to
qubit ``i``. The letters map as I=(0,0), X=(1,0), Y=(1,1), Z=(0,1).
Single-qubit channels and logical classes use the index order I, X, Y, Z.

Errors are enumerated as base-4 integers ``e = sum_i sigma_i 4**i``.
Syndrome ids are little-endian: bit ``j`` is the outcome of generator ``j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .channel import DomainError, PauliChannel
from .repetition import BIT, RepCodeSpec, _check_orientation, generalized_block_outcome

__all__ = [
    "StabilizerCode",
    "SyndromeOutcome",
    "pauli_to_masks",
    "masks_to_pauli",
    "symplectic_inner",
    "pauli_product",
    "build_five_qubit_code",
    "build_repetition_stabilizer",
    "parse_code",
    "load_code",
    "enumerate_outcomes",
    "average_entropy_stab",
    "sample_outcome",
    "coset_probabilities",
    "xor_step",
    "joint_table",
    "entropy_of_joint",
]

ENUMERATION_MAX_N = 12
_LETTER = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_FROM_BITS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
# sigma index -> (x bit, z bit), order I, X, Y, Z
_SX = np.array([0, 1, 1, 0], dtype=np.int64)
_SZ = np.array([0, 0, 1, 1], dtype=np.int64)


def pauli_to_masks(s: str) -> tuple[int, int]:
    x = z = 0
    for i, ch in enumerate(s.strip().upper()):
        if ch not in _LETTER:
            raise DomainError(f"bad Pauli letter {ch!r} in {s!r}")
        bx, bz = _LETTER[ch]
        x |= bx << i
        z |= bz << i
    return x, z


def masks_to_pauli(x: int, z: int, n: int) -> str:
    return "".join(_FROM_BITS[((x >> i) & 1, (z >> i) & 1)] for i in range(n))


def symplectic_inner(a: tuple[int, int], b: tuple[int, int]) -> int:
    """1 if the two Paulis anticommute, else 0."""
    return (bin(a[0] & b[1]).count("1") + bin(a[1] & b[0]).count("1")) & 1


def pauli_product(p: str, q: str) -> str:
    """Letterwise product of two Pauli strings, ignoring phase."""
    if len(p) != len(q):
        raise DomainError(f"length mismatch: {len(p)} vs {len(q)}")
    n = len(p)
    a, b = pauli_to_masks(p), pauli_to_masks(q)
    return masks_to_pauli(a[0] ^ b[0], a[1] ^ b[1], n)


@dataclass(frozen=True)
class SyndromeOutcome:
    syndrome: int
    probability: float
    conditional: PauliChannel


@dataclass(eq=False)
class StabilizerCode:
    """An [[n,1]] stabilizer code with a fixed syndrome -> recovery table."""

    n: int
    generators: list[str]
    logical_x: str
    logical_z: str
    recovery_table: list[str] = field(default_factory=list)
    name: str = ""

    def __post_init__(self) -> None:
        if self.n < 1 or self.n > 16:
            raise DomainError(f"unsupported code length {self.n}")
        if len(self.generators) != self.n - 1:
            raise DomainError(f"need {self.n - 1} generators, got {len(self.generators)}")
        for g in [*self.generators, self.logical_x, self.logical_z]:
            if len(g) != self.n:
                raise DomainError(f"Pauli {g!r} has wrong length for n={self.n}")
        gens = [pauli_to_masks(g) for g in self.generators]
        lx, lz = pauli_to_masks(self.logical_x), pauli_to_masks(self.logical_z)
        for i, a in enumerate(gens):
            for b in gens[i + 1:]:
                if symplectic_inner(a, b):
                    raise DomainError("generators do not commute")
            if symplectic_inner(a, lx) or symplectic_inner(a, lz):
                raise DomainError("logical operators must commute with every generator")
        if not symplectic_inner(lx, lz):
            raise DomainError("logical X and Z must anticommute")
        if _rank_gf2([(x | (z << self.n)) for x, z in gens]) != self.n - 1:
            raise DomainError("generators are not independent")
        if not self.recovery_table:
            self.recovery_table = self._min_weight_table()
        if len(self.recovery_table) != 2 ** (self.n - 1):
            raise DomainError("recovery table must have 2^(n-1) entries")
        for s, r in enumerate(self.recovery_table):
            if self.syndrome(r) != s:
                raise DomainError(f"recovery {r!r} does not have syndrome {s}")

    # -- basic queries ----------------------------------------------------

    @cached_property
    def _gen_masks(self) -> list[tuple[int, int]]:
        return [pauli_to_masks(g) for g in self.generators]

    def syndrome(self, error: str | tuple[int, int]) -> int:
        e = pauli_to_masks(error) if isinstance(error, str) else error
        s = 0
        for j, g in enumerate(self._gen_masks):
            s |= symplectic_inner(e, g) << j
        return s

    def logical_class(self, residual: str | tuple[int, int]) -> int:
        """Logical class 0..3 (I, X, Y, Z) of an operator commuting with the stabilizer."""
        r = pauli_to_masks(residual) if isinstance(residual, str) else residual
        xb = symplectic_inner(r, pauli_to_masks(self.logical_z))
        zb = symplectic_inner(r, pauli_to_masks(self.logical_x))
        return {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}[(xb, zb)]

    @property
    def num_syndromes(self) -> int:
        return 2 ** (self.n - 1)

    def with_recovery(self, table: Sequence[str]) -> "StabilizerCode":
        return StabilizerCode(self.n, list(self.generators), self.logical_x,
                              self.logical_z, list(table), self.name)

    # -- error-space tables -------------------------------------------------

    def _check_enumerable(self) -> None:
        if self.n > ENUMERATION_MAX_N:
            raise DomainError(
                f"4^{self.n} error enumeration exceeds the bound n <= {ENUMERATION_MAX_N}"
            )

    @cached_property
    def _error_masks(self) -> tuple[np.ndarray, np.ndarray]:
        self._check_enumerable()
        e = np.arange(4**self.n, dtype=np.int64)
        x = np.zeros_like(e)
        z = np.zeros_like(e)
        for i in range(self.n):
            d = (e >> (2 * i)) & 3
            x |= _SX[d] << i
            z |= _SZ[d] << i
        return x, z

    def _anticommutes(self, x: np.ndarray, z: np.ndarray, p: tuple[int, int]) -> np.ndarray:
        return (np.bitwise_count(x & p[1]) + np.bitwise_count(z & p[0])) & 1

    @cached_property
    def error_syndromes(self) -> np.ndarray:
        x, z = self._error_masks
        s = np.zeros(x.shape, dtype=np.int64)
        for j, g in enumerate(self._gen_masks):
            s |= self._anticommutes(x, z, g).astype(np.int64) << j
        return s

    def _min_weight_table(self) -> list[str]:
        self._check_enumerable()
        x, z = self._error_masks
        weight = np.bitwise_count(x | z)
        syn = self.error_syndromes
        # stable sort: lowest weight first, ties to the smallest error index
        order = np.lexsort((np.arange(len(syn)), weight, syn))
        first = np.ones(len(order), dtype=bool)
        first[1:] = syn[order][1:] != syn[order][:-1]
        chosen = order[first]
        table = [""] * self.num_syndromes
        for idx in chosen:
            table[int(syn[idx])] = masks_to_pauli(int(x[idx]), int(z[idx]), self.n)
        return table

    @cached_property
    def error_classes(self) -> np.ndarray:
        """Logical class (0..3) of every error after its syndrome's recovery."""
        x, z = self._error_masks
        lx, lz = pauli_to_masks(self.logical_x), pauli_to_masks(self.logical_z)
        xb = self._anticommutes(x, z, lz)
        zb = self._anticommutes(x, z, lx)
        rec = [pauli_to_masks(r) for r in self.recovery_table]
        rx = np.array([symplectic_inner(r, lz) for r in rec], dtype=np.int64)
        rz = np.array([symplectic_inner(r, lx) for r in rec], dtype=np.int64)
        syn = self.error_syndromes
        xb = xb ^ rx[syn]
        zb = zb ^ rz[syn]
        return np.array([0, 3, 1, 2], dtype=np.int64)[xb * 2 + zb]

    # -- XOR convolution over syndrome and logical bits ---------------------

    @cached_property
    def _xor_patterns(self) -> np.ndarray:
        """``(n, 4)`` bit patterns: syndrome bits, then the X and Z logical
        bits, flipped by each single-qubit Pauli."""
        n = self.n
        lx, lz = pauli_to_masks(self.logical_x), pauli_to_masks(self.logical_z)
        pats = np.zeros((n, 4), dtype=np.int64)
        for i in range(n):
            for d in range(1, 4):
                e = (int(_SX[d]) << i, int(_SZ[d]) << i)
                bits = 0
                for j, g in enumerate(self._gen_masks):
                    bits |= symplectic_inner(e, g) << j
                bits |= symplectic_inner(e, lz) << (n - 1)
                bits |= symplectic_inner(e, lx) << n
                pats[i, d] = bits
        return pats

    @cached_property
    def _joint_order(self) -> np.ndarray:
        """Position ``4 * syndrome + class`` of every raw bit pattern, with the
        class taken relative to that syndrome's recovery."""
        n = self.n
        raw = np.arange(2 ** (n + 1))
        syn = raw & (2 ** (n - 1) - 1)
        lx, lz = pauli_to_masks(self.logical_x), pauli_to_masks(self.logical_z)
        rec = [pauli_to_masks(r) for r in self.recovery_table]
        rx = np.array([symplectic_inner(r, lz) for r in rec], dtype=np.int64)
        rz = np.array([symplectic_inner(r, lx) for r in rec], dtype=np.int64)
        xb = ((raw >> (n - 1)) & 1) ^ rx[syn]
        zb = ((raw >> n) & 1) ^ rz[syn]
        return syn * 4 + np.array([0, 3, 1, 2], dtype=np.int64)[xb * 2 + zb]

    def __repr__(self) -> str:
        label = self.name or "StabilizerCode"
        return f"<{label} n={self.n} gens={self.generators}>"


def _rank_gf2(rows: list[int]) -> int:
    rows = list(rows)
    rank = 0
    while rows:
        pivot = rows.pop()
        if pivot == 0:
            continue
        rank += 1
        low = pivot & -pivot
        rows = [r ^ pivot if r & low else r for r in rows]
    return rank


# --------------------------------------------------------------------------
# Constructors and the text format
# --------------------------------------------------------------------------


def build_five_qubit_code() -> StabilizerCode:
    """The cyclic [[5,1,3]] code: XZZXI and its cyclic shifts."""
    base = "XZZXI"
    gens = [base[-i:] + base[:-i] if i else base for i in range(4)]
    return StabilizerCode(5, gens, "XXXXX", "ZZZZZ", name="five513")


def build_repetition_stabilizer(n: int, orientation: str = BIT) -> StabilizerCode:
    """Repetition code as a stabilizer code with majority-vote recovery.

    Bit-flip: generators ``Z_i Z_{i+1}``, logical X ``X^n``, logical Z ``Z_0``.
    Phase-flip is the Hadamard dual. Ties (``n`` even, half the qubits
    flipped) resolve to the flip set that leaves the last qubit untouched.
    """
    if not 2 <= n <= 9:
        raise DomainError(f"repetition stabilizer supports 2 <= n <= 9, got {n}")
    orientation = _check_orientation(orientation)
    flip, check = ("X", "Z") if orientation == BIT else ("Z", "X")
    gens = []
    for i in range(n - 1):
        g = ["I"] * n
        g[i] = g[i + 1] = check
        gens.append("".join(g))
    if orientation == BIT:
        lx, lz = "X" * n, "Z" + "I" * (n - 1)
    else:
        lx, lz = "X" + "I" * (n - 1), "Z" * n
    table = [""] * (2 ** (n - 1))
    for pattern in range(2**n):
        w = bin(pattern).count("1")
        if 2 * w > n or (2 * w == n and pattern >> (n - 1) & 1):
            continue
        err = "".join(flip if pattern >> i & 1 else "I" for i in range(n))
        s = 0
        for j in range(n - 1):
            s |= (((pattern >> j) ^ (pattern >> (j + 1))) & 1) << j
        table[s] = err
    return StabilizerCode(n, gens, lx, lz, table, name=f"rep{n}{orientation}")


def parse_code(text: str) -> StabilizerCode:
    """Parse a code definition.

    Blank lines and ``#`` comments are ignored. ``X: <pauli>`` and
    ``Z: <pauli>`` give the logical operators, ``R <syndrome>: <pauli>``
    optional recovery entries; every other line is a generator.
    Missing recovery entries are filled with minimum-weight errors.
    """
    gens: list[str] = []
    lx = lz = None
    rec: dict[int, str] = {}
    name = ""
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" in line:
            key, val = (t.strip() for t in line.split(":", 1))
            ku = key.upper()
            if ku in ("X", "LX", "LOGICAL_X"):
                lx = val.upper()
            elif ku in ("Z", "LZ", "LOGICAL_Z"):
                lz = val.upper()
            elif ku.startswith("R"):
                rec[int(key[1:].strip())] = val.upper()
            elif ku == "NAME":
                name = val
            else:
                raise DomainError(f"unknown key {key!r} in code definition")
        else:
            gens.append(line.upper())
    if lx is None or lz is None:
        raise DomainError("code definition needs 'X:' and 'Z:' logical operators")
    n = len(lx)
    code = StabilizerCode(n, gens, lx, lz, name=name)
    if rec:
        table = list(code.recovery_table)
        for s, r in rec.items():
            table[s] = r
        code = code.with_recovery(table)
    return code


def load_code(path: str | Path) -> StabilizerCode:
    return parse_code(Path(path).read_text())


# --------------------------------------------------------------------------
# Outcomes
# --------------------------------------------------------------------------


def _channels_array(channels: Sequence[PauliChannel] | np.ndarray, n: int) -> np.ndarray:
    arr = np.asarray(
        [c.as_tuple() if isinstance(c, PauliChannel) else tuple(c) for c in channels],
        dtype=float,
    )
    if arr.shape != (n, 4):
        raise DomainError(f"expected {n} channels, got array of shape {arr.shape}")
    return arr


def joint_table(code: StabilizerCode, channels) -> np.ndarray:
    """Exact ``P(syndrome, logical class)`` by enumerating all ``4^n`` errors."""
    arr = _channels_array(channels, code.n)
    prob = arr[0]
    for i in range(1, code.n):
        prob = np.outer(arr[i], prob).ravel()
    idx = code.error_syndromes * 4 + code.error_classes
    return np.bincount(idx, weights=prob, minlength=4 * code.num_syndromes).reshape(-1, 4)


def entropy_of_joint(joint: np.ndarray) -> np.ndarray:
    """Row-wise ``P(s) * H(P(.|s))`` for an array of joint probabilities ``(..., 4)``."""
    joint = np.clip(joint, 0.0, None)
    tot = joint.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(tot > 0, joint / tot, 0.0)
        terms = np.where(cond > 0, -cond * np.log2(cond), 0.0)
    return tot[..., 0] * terms.sum(axis=-1)


def enumerate_outcomes(code: StabilizerCode, channels) -> list[SyndromeOutcome]:
    """All syndromes of positive probability with their conditional logical channels."""
    joint = joint_table(code, channels)
    out = []
    for s, row in enumerate(joint):
        p = float(row.sum())
        if p <= 0.0:
            continue
        out.append(SyndromeOutcome(s, p, PauliChannel(*(row / p))))
    return out


def average_entropy_stab(code: StabilizerCode, channels) -> float:
    return math.fsum(entropy_of_joint(joint_table(code, channels)).tolist())


_XOR_ROWS = 512


def xor_step(state: np.ndarray, probs: np.ndarray, pats: np.ndarray) -> np.ndarray:
    """Add one qubit: ``sum_d probs[..., d] * state[..., idx ^ pats[d]]``."""
    idx = np.arange(state.shape[-1])
    out = probs[..., 0, None] * state
    for d in range(1, 4):
        out = out + probs[..., d, None] * state[..., idx ^ pats[d]]
    return out


def coset_probabilities(code: StabilizerCode, chans: np.ndarray) -> np.ndarray:
    """Batched ``P(syndrome, logical)`` for channels of shape ``(..., n, 4)``.

    Qubits are folded in one at a time by XOR convolution over the
    syndrome and logical bits; every term is non-negative, so small
    syndrome probabilities keep full relative precision.
    """
    chans = np.asarray(chans, dtype=float)
    batch = chans.shape[:-2]
    flat = chans.reshape(-1, code.n, 4)
    pats = code._xor_patterns
    width = 2 ** (code.n + 1)
    joint = np.empty((flat.shape[0], width))
    # small row blocks keep the gathers in cache
    for start in range(0, flat.shape[0], _XOR_ROWS):
        f = flat[start : start + _XOR_ROWS]
        state = np.zeros((f.shape[0], width))
        for d in range(4):
            state[:, pats[0, d]] += f[:, 0, d]
        for i in range(1, code.n):
            state = xor_step(state, f[:, i, :], pats[i])
        joint[start : start + _XOR_ROWS, code._joint_order] = state
    return joint.reshape(batch + (code.num_syndromes, 4))


def sample_outcome(code, channels, rng: np.random.Generator) -> SyndromeOutcome:
    """Draw one syndrome outcome with its exact probability weighting.

    ``code`` is a :class:`StabilizerCode` (enumerated, n <= 12) or a
    :class:`RepCodeSpec` of any length, which is sampled by drawing the
    qubit flips and conditioning on the resulting syndrome.
    """
    if isinstance(code, RepCodeSpec):
        chans = list(channels)
        if len(chans) != code.n:
            raise DomainError(f"expected {code.n} channels, got {len(chans)}")
        flip_rate = np.array([c.q_x if code.orientation == BIT else c.q_z for c in chans])
        flips = rng.random(code.n) < flip_rate
        if 2 * int(flips.sum()) > code.n:
            flips = ~flips
        t = np.flatnonzero(flips)
        prob, cond = generalized_block_outcome(chans, t, code.orientation)
        syndrome = 0
        for j in range(code.n - 1):
            syndrome |= int(flips[j] ^ flips[j + 1]) << j
        return SyndromeOutcome(syndrome, prob, cond)
    joint = joint_table(code, channels)
    marg = joint.sum(axis=1)
    cdf = np.cumsum(marg)
    s = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    s = min(s, len(marg) - 1)
    while marg[s] <= 0.0:
        s -= 1
    return SyndromeOutcome(s, float(marg[s]), PauliChannel(*(joint[s] / marg[s])))
