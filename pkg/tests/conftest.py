"""Shared oracles for the test suite.

The brute-force oracle below is written from scratch on purpose: it does
not use the stabilizer module, only bit masks and commutation, so it can
serve as an independent check of every exact code path.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import strategies as st

from paulithresh.channel import PauliChannel


def _masks(p: str) -> tuple[int, int]:
    x = z = 0
    for i, ch in enumerate(p):
        if ch in "XY":
            x |= 1 << i
        if ch in "ZY":
            z |= 1 << i
    return x, z


def brute_joint(gens, lx, lz, channels) -> np.ndarray:
    """``P(syndrome, logical class)`` by enumerating every Pauli error.

    The logical class of an error is read off its commutation with the
    logical operators. Any fixed recovery only relabels classes within a
    syndrome, so the average entropy does not depend on it.
    """
    n = len(lx)
    arr = np.asarray([c.as_tuple() if isinstance(c, PauliChannel) else c for c in channels], float)
    # digit k of every error index is the Pauli (I, X, Y, Z) on qubit k
    digits = np.array(list(itertools.product(range(4), repeat=n)), dtype=np.int64)
    xbits = np.isin(digits, (1, 2)).astype(np.int64)
    zbits = np.isin(digits, (2, 3)).astype(np.int64)
    prob = np.prod(arr[np.arange(n), digits], axis=1)

    def anti(p):
        x, z = _masks(p)
        px = np.array([(x >> i) & 1 for i in range(n)])
        pz = np.array([(z >> i) & 1 for i in range(n)])
        return (xbits @ pz + zbits @ px) & 1

    syn = np.zeros(len(prob), dtype=np.int64)
    for j, g in enumerate(gens):
        syn |= anti(g) << j
    cls = (anti(lz) << 1) | anti(lx)
    joint = np.zeros((2 ** len(gens), 4))
    np.add.at(joint, (syn, cls), prob)
    return joint


def joint_entropy(joint: np.ndarray) -> float:
    total = 0.0
    for row in joint:
        p = row.sum()
        if p <= 0:
            continue
        total += -sum(v * math.log2(v / p) for v in row if v > 0)
    return total


def brute_entropy(gens, lx, lz, channels) -> float:
    return joint_entropy(brute_joint(gens, lx, lz, channels))


def rep_code(n: int, orientation: str = "bit"):
    """Generators and logicals of a repetition code."""
    flip, check = ("X", "Z") if orientation == "bit" else ("Z", "X")
    gens = []
    for i in range(n - 1):
        g = ["I"] * n
        g[i] = g[i + 1] = check
        gens.append("".join(g))
    if orientation == "bit":
        return gens, flip * n, "Z" + "I" * (n - 1)
    return gens, "X" + "I" * (n - 1), flip * n


def composite_code(n1: int, n2: int):
    """``n1`` bit-flip blocks joined by an ``n2`` phase-flip code."""
    n = n1 * n2
    gens = []
    for b in range(n2):
        for i in range(n1 - 1):
            g = ["I"] * n
            g[b * n1 + i] = g[b * n1 + i + 1] = "Z"
            gens.append("".join(g))
    for b in range(n2 - 1):
        g = ["I"] * n
        for i in range(2 * n1):
            g[b * n1 + i] = "X"
        gens.append("".join(g))
    lx = "X" * n1 + "I" * (n - n1)
    lz = "".join("Z" + "I" * (n1 - 1) for _ in range(n2))
    return gens, lx, lz


FIVE_GENS = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"]


def random_channel(rng: np.random.Generator, alpha=(1.0, 1.0, 1.0, 1.0)) -> PauliChannel:
    return PauliChannel(*rng.dirichlet(alpha))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@st.composite
def channels(draw, min_fidelity: float = 0.0):
    """Hypothesis strategy for valid Pauli channels."""
    w = [draw(st.floats(0.0, 1.0, allow_nan=False)) for _ in range(4)]
    w[0] += min_fidelity * 4 + 1e-9
    tot = sum(w)
    return PauliChannel(*[v / tot for v in w])


# --------------------------------------------------------------------------
# Acceptance reporting: one PASS/FAIL line per criterion
# --------------------------------------------------------------------------

_CRITERIA: dict[int, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion the test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.skipped and not hasattr(rep, "wasxfail"):
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        if hasattr(rep, "wasxfail"):
            status = "xfail" if rep.skipped else "xpass"
        else:
            status = rep.outcome
        _CRITERIA.setdefault(mark.args[0], []).append(f"{item.name}:{status}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        parts = _CRITERIA[n]
        bad = [p for p in parts if not p.endswith(":passed")]
        if not bad:
            status = "PASS"
        elif all(p.endswith(":xfail") for p in bad):
            status = "FAIL (expected; printed value conflict, see ledger)"
        else:
            status = "FAIL"
        tr.write_line(f"criterion {n:2d}: {status}  [{len(parts) - len(bad)}/{len(parts)} checks passed] "
                      + " ".join(bad))
