"""Single-qubit Pauli channels, their entropies and the noise families used
throughout the package.

A channel is stored as the probability vector ``(p_i, p_x, p_y, p_z)``.
Entropies are in bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "DomainError",
    "PauliChannel",
    "NoiseFamily",
    "h_term",
    "shannon_entropy",
    "binary_entropy",
    "dualize",
    "q1_rate",
    "cerf_margin",
    "family_at",
    "IDENTITY",
]

NORMALIZE_TOL = 1e-9
NEG_CLAMP = 1e-15
DOMINATED_FLOOR = 1e-6


def h_term(x: float) -> float:
    """Return ``-x log2 x`` with the convention ``h(0) = 0``."""
    if x < 0.0:
        if x >= -NEG_CLAMP:
            return 0.0
        raise DomainError(f"h_term argument {x!r} is negative")
    if x > 1.0 + NEG_CLAMP:
        raise DomainError(f"h_term argument {x!r} exceeds 1")
    if x == 0.0:
        return 0.0
    return -x * math.log2(x)


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"binary_entropy argument {p!r} outside [0, 1]")
    return h_term(p) + h_term(1.0 - p)


@dataclass(frozen=True)
class PauliChannel:
    """Probabilities of the identity and the three Pauli errors on one qubit.

    Inputs summing to within ``1e-9`` of one are renormalised; round-off
    negatives down to ``-1e-15`` are clamped to zero.
    """

    p_i: float
    p_x: float
    p_y: float
    p_z: float

    def __post_init__(self) -> None:
        vals = [float(v) for v in (self.p_i, self.p_x, self.p_y, self.p_z)]
        for v in vals:
            if not math.isfinite(v):
                raise DomainError(f"non-finite channel component in {vals}")
            if v < -NEG_CLAMP:
                raise DomainError(f"negative channel component in {vals}")
        vals = [max(v, 0.0) for v in vals]
        total = math.fsum(vals)
        if abs(total - 1.0) > NORMALIZE_TOL:
            raise DomainError(f"channel components sum to {total!r}, not 1")
        # leave sums within a few ulps alone so that permutations are exact
        if abs(total - 1.0) > 2.0**-50:
            vals = [v / total for v in vals]
        for name, v in zip(("p_i", "p_x", "p_y", "p_z"), vals):
            object.__setattr__(self, name, v)

    @classmethod
    def from_errors(cls, p_x: float, p_y: float, p_z: float) -> "PauliChannel":
        """Build from the three error probabilities; ``p_i`` is the remainder."""
        return cls(1.0 - (p_x + p_y + p_z), p_x, p_y, p_z)

    @classmethod
    def from_array(cls, arr: Iterable[float]) -> "PauliChannel":
        return cls(*[float(v) for v in arr])

    @classmethod
    def independent(cls, q_x: float, q_z: float) -> "PauliChannel":
        """Bit flips with rate ``q_x`` and phase flips with rate ``q_z``, uncorrelated."""
        return cls(
            (1.0 - q_x) * (1.0 - q_z),
            q_x * (1.0 - q_z),
            q_x * q_z,
            q_z * (1.0 - q_x),
        )

    @property
    def q_x(self) -> float:
        """Total probability of a bit flip (X or Y)."""
        return self.p_x + self.p_y

    @property
    def q_z(self) -> float:
        """Total probability of a phase flip (Y or Z)."""
        return self.p_y + self.p_z

    @property
    def fidelity(self) -> float:
        return self.p_i

    def as_array(self) -> np.ndarray:
        return np.array([self.p_i, self.p_x, self.p_y, self.p_z])

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p_i, self.p_x, self.p_y, self.p_z)

    def isclose(self, other: "PauliChannel", tol: float = 1e-12) -> bool:
        return all(abs(a - b) <= tol for a, b in zip(self.as_tuple(), other.as_tuple()))


IDENTITY = PauliChannel(1.0, 0.0, 0.0, 0.0)


def shannon_entropy(c: PauliChannel | Sequence[float]) -> float:
    """Shannon entropy of the error distribution, in ``[0, 2]`` bits."""
    vals = c.as_tuple() if isinstance(c, PauliChannel) else tuple(c)
    return math.fsum(h_term(v) for v in vals)


def dualize(c: PauliChannel) -> PauliChannel:
    """Hadamard conjugation: exchanges the roles of X and Z."""
    return PauliChannel(c.p_i, c.p_z, c.p_y, c.p_x)


def q1_rate(c: PauliChannel) -> float:
    """Hashing rate ``1 - S``; negative values mean no hashing rate."""
    return 1.0 - shannon_entropy(c)


def cerf_margin(c: PauliChannel) -> float:
    """Distance below the known upper bound on correctable Pauli noise.

    Positive means the channel is strictly inside the bound.
    """
    px, py, pz = c.p_x, c.p_y, c.p_z
    lhs = math.fsum(
        [px, py, pz, math.sqrt(px * py), math.sqrt(py * pz), math.sqrt(pz * px)]
    )
    return 0.5 - lhs


# --------------------------------------------------------------------------
# Noise families
# --------------------------------------------------------------------------

FAMILY_KINDS = (
    "depolarizing",
    "independent-sym",
    "independent-xz",
    "two-pauli",
    "dominated",
    "custom",
)


@dataclass(frozen=True)
class NoiseFamily:
    """A one-parameter curve ``p -> PauliChannel``.

    ``value`` carries the kind-specific constant: the fixed ``q_z`` for
    ``independent-xz``, the ratio ``p_y / p_x`` for ``two-pauli``, the floor
    for ``dominated``. ``direction`` is the ``(d_x, d_y, d_z)`` ray for
    ``custom``: the channel is ``(1 - p*sum(d), p*d_x, p*d_y, p*d_z)``.
    """

    kind: str
    value: float = 0.0
    direction: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        if self.kind not in FAMILY_KINDS:
            raise DomainError(f"unknown noise family {self.kind!r}")
        if self.kind == "custom":
            if self.direction is None or len(self.direction) != 3:
                raise DomainError("custom family needs a 3-component direction")
            if any(d < 0 for d in self.direction):
                raise DomainError("custom direction must be non-negative")
        if self.kind == "dominated" and self.value == 0.0:
            object.__setattr__(self, "value", DOMINATED_FLOOR)

    @classmethod
    def depolarizing(cls) -> "NoiseFamily":
        return cls("depolarizing")

    @classmethod
    def independent_sym(cls) -> "NoiseFamily":
        return cls("independent-sym")

    @classmethod
    def independent_xz(cls, q_z: float) -> "NoiseFamily":
        return cls("independent-xz", value=q_z)

    @classmethod
    def two_pauli(cls, ratio: float = 0.0) -> "NoiseFamily":
        return cls("two-pauli", value=ratio)

    @classmethod
    def dominated(cls, floor: float = DOMINATED_FLOOR) -> "NoiseFamily":
        return cls("dominated", value=floor)

    @classmethod
    def custom(cls, direction: Sequence[float]) -> "NoiseFamily":
        return cls("custom", direction=tuple(float(d) for d in direction))

    @classmethod
    def parse(cls, text: str) -> "NoiseFamily":
        """Parse ``depolarizing``, ``two-pauli[:r]``, ``dominated[:floor]``,
        ``independent-xz:qz``, ``custom:dx,dy,dz`` and friends."""
        name, _, arg = text.strip().partition(":")
        name = name.lower()
        aliases = {"depol": "depolarizing", "independent": "independent-sym", "ind": "independent-sym"}
        name = aliases.get(name, name)
        if name == "custom":
            parts = [float(v) for v in arg.split(",")]
            if len(parts) == 4:
                # a target channel t: the mixture (1 - p) * identity + p * t
                parts = parts[1:]
            return cls.custom(parts)
        if name not in FAMILY_KINDS:
            raise DomainError(f"unknown noise family {text!r}")
        if arg:
            return cls(name, value=float(arg))
        return cls(name)

    @property
    def label(self) -> str:
        if self.kind == "custom":
            return "custom:" + ",".join(repr(d) for d in self.direction)
        if self.kind in ("independent-xz", "dominated") or (self.kind == "two-pauli" and self.value):
            return f"{self.kind}:{self.value!r}"
        return self.kind

    def interval(self) -> tuple[float, float]:
        """Valid parameter interval (closed)."""
        k = self.kind
        if k == "depolarizing":
            return (0.0, 1.0 / 3.0)
        if k in ("independent-sym", "independent-xz"):
            return (0.0, 1.0)
        if k == "two-pauli":
            return (0.0, 1.0 / (2.0 + self.value))
        if k == "dominated":
            return (0.0, 1.0 - 2.0 * self.value)
        total = sum(self.direction)
        return (0.0, 1.0 / total if total > 0 else 1.0)

    def __call__(self, p: float) -> PauliChannel:
        return family_at(self, p)


def family_at(f: NoiseFamily, p: float) -> PauliChannel:
    lo, hi = f.interval()
    if not (lo - 1e-15 <= p <= hi + 1e-15):
        raise DomainError(f"parameter {p!r} outside [{lo}, {hi}] for {f.kind}")
    k = f.kind
    if k == "depolarizing":
        return PauliChannel(1.0 - 3.0 * p, p, p, p)
    if k == "independent-sym":
        return PauliChannel.independent(p, p)
    if k == "independent-xz":
        return PauliChannel.independent(p, f.value)
    if k == "two-pauli":
        r = f.value
        return PauliChannel(1.0 - (2.0 + r) * p, p, r * p, p)
    if k == "dominated":
        e = f.value
        return PauliChannel(1.0 - p - 2.0 * e, p, e, e)
    dx, dy, dz = f.direction
    return PauliChannel(1.0 - p * (dx + dy + dz), p * dx, p * dy, p * dz)
