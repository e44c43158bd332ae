from fractions import Fraction
from math import gcd

import numpy as np
import pytest

import classify
from biresidue import conjugate, smoothing_diagram, validate
from catalog import FamilyTag, catalog_for_n, make, parse_tag
from classify import components, corank_one_catalog, has_full_cycle, identify, is_holonomic
from exact_core import QMatrix, in_row_span
from utils import OracleViolation

# one smoothable edge (0,1), nothing else
CHAIN_ONLY = [[0, 1, 2, -3], [-1, 0, 4, -3], [-2, -4, 0, 6], [3, 3, -6, 0]]

# principal block on {0,1,2} has (1,1,1) in its row span
NOT_HOLONOMIC = [[0, 1, 2, -3], [-1, 0, 1, 0], [-2, -1, 0, 3], [3, 0, -3, 0]]


def test_components_of_x4():
    comps = components(smoothing_diagram(make(parse_tag("X4"))))
    assert comps.cycles == ((0, 1, 2, 3),)
    assert comps.chains == ()


def test_components_of_a_chain():
    comps = components(smoothing_diagram(validate(CHAIN_ONLY)))
    assert comps.chains == ((0, 1),)
    assert comps.cycles == ()
    assert has_full_cycle(validate(CHAIN_ONLY)) is None


def test_identify_scaled_conjugate_of_x4():
    x4 = make(parse_tag("X4"))
    tag, sigma, lam = identify(conjugate(x4, (2, 1, 0, 3), 7))
    assert tag == FamilyTag("X4", 4)
    assert sigma == (2, 1, 0, 3)
    assert lam == 7


@pytest.mark.parametrize("text", ["Y:6", "C:9,3,I=011", "C:7,2"])
def test_identify_recovers_witness(text):
    source = make(parse_tag(text))
    n = source.n
    sigma = tuple((3 * i + 1) % n if gcd(3, n) == 1 else (n - 1 - i) for i in range(n))
    B = conjugate(source, sigma, "-3/2")
    tag, found_sigma, lam = identify(B)
    assert tag == parse_tag(text)
    assert conjugate(make(tag), found_sigma, lam) == B


def test_identify_without_full_cycle():
    assert identify(validate(CHAIN_ONLY)) is None


def test_identify_raises_when_catalog_misses(monkeypatch):
    monkeypatch.setattr(classify, "catalog_for_n", lambda n: [])
    with pytest.raises(OracleViolation, match="classification violated"):
        identify(make(parse_tag("X4")))


@pytest.mark.parametrize(
    "n, expected",
    [
        (4, []),
        (5, [FamilyTag("C", 5, 1), FamilyTag("C", 5, 2)]),
        (7, [FamilyTag("C", 7, 1), FamilyTag("C", 7, 2), FamilyTag("C", 7, 3)]),
    ],
)
def test_corank_one_catalog(n, expected):
    assert corank_one_catalog(n) == expected


def test_c41_has_rank_two():
    assert make(parse_tag("C:4,1")).rank() == 2


def test_is_holonomic():
    assert is_holonomic(make(parse_tag("X4"))) == (True, None)
    assert is_holonomic(validate(NOT_HOLONOMIC)) == (False, (0, 1, 2))


def test_x4_block_does_not_span_ones():
    block = QMatrix([[0, 2, -1], [-2, 0, 3], [1, -3, 0]])
    assert not in_row_span(block, [1, 1, 1])


@pytest.mark.slow
def test_corank_one_members_up_to_15():
    for n in range(3, 16):
        corank_one_catalog(n)


@pytest.mark.slow
def test_holonomicity_of_catalog_members():
    for n in range(3, 13):
        for tag, B in catalog_for_n(n):
            holonomic, witness = is_holonomic(B)
            assert holonomic, (tag, witness)


@pytest.mark.parametrize("seed", range(12))
def test_random_matrices_have_no_full_cycle(seed, random_biresidue):
    B = random_biresidue(seed, 6 + seed % 4, spread=5)
    assert has_full_cycle(B) is None
    assert identify(B) is None


@pytest.mark.slow
@pytest.mark.parametrize("n", range(3, 11))
def test_identify_round_trips_every_catalog_member(n):
    rng = np.random.default_rng(n)
    for tag, B in catalog_for_n(n):
        assert identify(B) == (tag, tuple(range(n)), Fraction(1))
        moved = conjugate(B, tuple(rng.permutation(n).tolist()), "3/4")
        found_tag, sigma, lam = identify(moved)
        assert found_tag == tag
        assert conjugate(B, sigma, lam) == moved
