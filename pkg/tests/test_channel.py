import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paulithresh.channel import (
    DomainError,
    NoiseFamily,
    PauliChannel,
    binary_entropy,
    cerf_margin,
    dualize,
    h_term,
    q1_rate,
    shannon_entropy,
)

from conftest import channels

TRUE_DEPOL_HASHING = 0.06309654163841059  # mpmath root, 40 digits
PRINTED_DEPOL_HASHING = 0.0630965616


class TestHTerm:
    @pytest.mark.parametrize("x, want", [(0.0, 0.0), (0.5, 0.5), (0.25, 0.5), (1.0, 0.0)])
    def test_values(self, x, want):
        assert h_term(x) == pytest.approx(want, abs=1e-15)

    def test_round_off_negative_clamped(self):
        assert h_term(-1e-16) == 0.0

    @pytest.mark.parametrize("x", [-1e-6, 1.1])
    def test_out_of_range(self, x):
        with pytest.raises(DomainError):
            h_term(x)


class TestBinaryEntropy:
    def test_endpoints(self):
        assert binary_entropy(0.5) == 1.0
        assert binary_entropy(0.0) == 0.0

    def test_matches_direct_sum(self):
        p = 0.11
        assert binary_entropy(p) == pytest.approx(-p * math.log2(p) - (1 - p) * math.log2(1 - p), rel=1e-15)


class TestChannel:
    def test_identity_and_uniform(self):
        assert shannon_entropy(PauliChannel(1, 0, 0, 0)) == 0.0
        assert shannon_entropy(PauliChannel(0.25, 0.25, 0.25, 0.25)) == pytest.approx(2.0, abs=1e-15)

    def test_renormalises_small_drift(self):
        c = PauliChannel(0.5 + 5e-10, 0.25, 0.25, 0.0)
        assert math.fsum(c.as_tuple()) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("vals", [(0.5, 0.5, 0.5, 0.0), (1.1, -0.1, 0, 0), (math.nan, 0, 0, 1)])
    def test_rejects_invalid(self, vals):
        with pytest.raises(DomainError):
            PauliChannel(*vals)

    def test_q_rates(self):
        c = PauliChannel(0.7, 0.1, 0.05, 0.15)
        assert c.q_x == pytest.approx(0.15)
        assert c.q_z == pytest.approx(0.2)

    def test_dualize(self):
        c = PauliChannel(0.9, 0.06, 0.01, 0.03)
        assert dualize(c).isclose(PauliChannel(0.9, 0.03, 0.01, 0.06))
        d = PauliChannel(1 - 3 * 0.05, 0.05, 0.05, 0.05)
        assert dualize(d).isclose(d)

    def test_q1_rate(self):
        assert q1_rate(PauliChannel(1, 0, 0, 0)) == 1.0
        assert q1_rate(PauliChannel(0.25, 0.25, 0.25, 0.25)) == pytest.approx(-1.0)

    def test_true_hashing_root(self):
        c = NoiseFamily.depolarizing()(TRUE_DEPOL_HASHING)
        assert shannon_entropy(c) == pytest.approx(1.0, abs=1e-14)
        assert q1_rate(c) == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.xfail(strict=True, reason="printed depolarizing hashing value is off in the 8th digit; see ledger")
    def test_printed_hashing_value(self):
        c = NoiseFamily.depolarizing()(PRINTED_DEPOL_HASHING)
        assert abs(shannon_entropy(c) - 1.0) <= 1e-8


class TestCerf:
    @pytest.mark.parametrize("p", np.linspace(0.0, 1 / 3, 20))
    def test_depolarizing_identity(self, p):
        assert cerf_margin(NoiseFamily.depolarizing()(p)) == pytest.approx(0.5 - 6 * p, abs=1e-14)

    def test_upper_bound_points(self):
        assert abs(cerf_margin(NoiseFamily.depolarizing()(1 / 12))) <= 1e-12
        assert abs(cerf_margin(NoiseFamily.two_pauli()(1 / 6))) <= 1e-12
        assert abs(cerf_margin(NoiseFamily.independent_sym()(0.146447))) <= 1e-5


class TestFamilies:
    def test_depolarizing(self):
        assert NoiseFamily.depolarizing()(0.062).isclose(PauliChannel(0.814, 0.062, 0.062, 0.062))

    def test_independent(self):
        assert NoiseFamily.independent_sym()(0.11).isclose(PauliChannel(0.7921, 0.0979, 0.0121, 0.0979))

    def test_two_pauli_ratio(self):
        c = NoiseFamily.two_pauli(0.5)(0.1)
        assert c.isclose(PauliChannel(0.75, 0.1, 0.05, 0.1))

    def test_dominated_level_zero(self):
        c = NoiseFamily.dominated()(0.4962410483)
        assert abs(shannon_entropy(c) - 1.0) <= 1e-8

    def test_independent_xz(self):
        c = NoiseFamily.independent_xz(0.2)(0.1)
        assert c.q_x == pytest.approx(0.1) and c.q_z == pytest.approx(0.2)

    def test_out_of_interval(self):
        with pytest.raises(DomainError):
            NoiseFamily.depolarizing()(0.4)

    @pytest.mark.parametrize(
        "text, kind",
        [("depolarizing", "depolarizing"), ("independent", "independent-sym"), ("two-pauli:0.5", "two-pauli"),
         ("dominated", "dominated"), ("custom:1,0,1", "custom"), ("independent-xz:0.1", "independent-xz")],
    )
    def test_parse(self, text, kind):
        f = NoiseFamily.parse(text)
        assert f.kind == kind
        assert NoiseFamily.parse(f.label) == f

    def test_custom_four_vector(self):
        f = NoiseFamily.parse("custom:0,0.5,0,0.5")
        assert f.direction == (0.5, 0.0, 0.5)
        assert NoiseFamily.parse("custom:1,0,0,0")(0.0).isclose(PauliChannel(1, 0, 0, 0))

    def test_parse_unknown(self):
        with pytest.raises(DomainError):
            NoiseFamily.parse("amplitude-damping")

    def test_depolarizing_entropy_increasing(self):
        ps = np.linspace(1e-6, 0.25, 100)
        s = [shannon_entropy(NoiseFamily.depolarizing()(p)) for p in ps]
        assert all(b > a for a, b in zip(s, s[1:]))

    def test_families_normalised(self):
        rng = np.random.default_rng(0)
        fams = [NoiseFamily.depolarizing(), NoiseFamily.independent_sym(), NoiseFamily.two_pauli(0.3),
                NoiseFamily.dominated(), NoiseFamily.custom((0.2, 0.5, 1.0)), NoiseFamily.independent_xz(0.3)]
        for _ in range(1000):
            f = fams[rng.integers(len(fams))]
            lo, hi = f.interval()
            c = f(rng.uniform(lo, hi))
            assert abs(math.fsum(c.as_tuple()) - 1.0) <= 1e-12


@given(channels())
def test_entropy_permutation_invariant(c):
    s = shannon_entropy(c)
    assert 0.0 <= s <= 2.0 + 1e-12
    for perm in ((1, 2, 3), (3, 2, 1), (2, 1, 3), (2, 3, 1)):
        t = c.as_tuple()
        q = PauliChannel(t[0], *(t[i] for i in perm))
        assert shannon_entropy(q) == pytest.approx(s, abs=1e-13)


@given(channels())
def test_dualize_involution(c):
    assert dualize(dualize(c)).isclose(c, 1e-15)
    assert shannon_entropy(dualize(c)) == pytest.approx(shannon_entropy(c), abs=1e-14)


@settings(max_examples=50)
@given(st.floats(0.0, 0.25))
def test_depolarizing_family_components(p):
    c = NoiseFamily.depolarizing()(p)
    assert c.isclose(PauliChannel(1 - 3 * p, p, p, p), 1e-15)
    assert c.p_x == c.p_y == c.p_z
