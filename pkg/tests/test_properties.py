"""Property-based checks of the exact identities."""

import math
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import phi_enum
from primerun.bias import (
    brute_bias_vector,
    crt_residue,
    least_positive_residue,
    r_bias_brute,
    radical,
    radical_transfer,
    recursion_bias_vector,
)
from primerun.primes import ResidueClass, pi_ap, prime_pi, totient
from primerun.running import race, running_table

SMALL_PRIMES = [2, 3, 5, 7, 11, 13]


@st.composite
def modulus_pair(draw, max_q=4000):
    """(d, Q) with d | Q and Q small enough for brute force."""
    d = draw(st.integers(2, 30))
    extra = draw(st.lists(st.sampled_from(SMALL_PRIMES), max_size=3))
    Q = d * math.prod(extra)
    if Q > max_q:
        Q = d
    return d, Q


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10**5), st.integers(2, 30))
def test_conservation(x, d):
    t = running_table(x, d, [x], segment_size=1 << 14)
    assert int(t.phi.sum()) == x


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3000), st.integers(2, 30))
def test_running_table_matches_enumeration(x, d):
    assert running_table(x, d, [x]).phi[0].tolist() == phi_enum(x, d)


@settings(max_examples=40, deadline=None)
@given(modulus_pair())
def test_antisymmetry_and_zero_sum(pair):
    d, Q = pair
    vec = brute_bias_vector(Q, d)
    assert sum(vec.entries.values()) == 0
    for a, v in vec.entries.items():
        assert v + vec[-a] == 0


@settings(max_examples=40, deadline=None)
@given(modulus_pair())
def test_recursion_equals_brute_force(pair):
    d, Q = pair
    assert recursion_bias_vector(Q, d).entries == brute_bias_vector(Q, d).entries


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([4, 8, 9, 25]), st.lists(st.sampled_from(SMALL_PRIMES), max_size=2), st.data())
def test_radical_equivalence(d, extra, data):
    Q = d * math.prod(extra)
    a = data.draw(st.sampled_from([k for k in range(1, d) if math.gcd(k, d) == 1]))
    d_sf = radical(d)
    expected = Fraction(totient(d_sf), totient(d)) * r_bias_brute(Q, d_sf, a % d_sf)
    assert r_bias_brute(Q, d, a) == expected == radical_transfer(Q, d, a)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.sampled_from(SMALL_PRIMES), max_size=4))
def test_modulus_two_has_no_bias(extra):
    Q = 2 * math.prod(extra)
    assert r_bias_brute(Q, 2, 1) == 0


@settings(max_examples=100)
@given(st.integers(-10**12, 10**12), st.sampled_from([(3, 5), (4, 9), (7, 10), (8, 15), (11, 13)]))
def test_crt_of_equal_residues(n, moduli):
    q1, q2 = moduli
    assert crt_residue([(n, q1), (n, q2)]) == least_positive_residue(n, q1 * q2)


@settings(max_examples=100)
@given(st.integers(-10**6, 10**6), st.integers(1, 10**4))
def test_least_positive_residue_range(n, Q):
    r = least_positive_residue(n, Q)
    assert 1 <= r <= Q and (r - n) % Q == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 20000), st.integers(2, 20))
def test_pi_ap_partition(x, d):
    assert sum(pi_ap(x, ResidueClass(d, a)) for a in range(d)) == prime_pi(x)


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 20000), st.sampled_from([3, 4, 5, 7, 8]), st.data())
def test_race_antisymmetry(x, d, data):
    reduced = [k for k in range(1, d) if math.gcd(k, d) == 1]
    a = data.draw(st.sampled_from(reduced))
    b = data.draw(st.sampled_from(reduced))
    assert race(x, d, a, b) == -race(x, d, b, a)
