from fractions import Fraction

import numpy as np
import pytest

from deform import preset
from poisson_symbolic import (
    DerivationTable,
    Frame,
    coeff,
    coeff_derivative,
    coeff_sum,
    embed,
    euler_field,
    evaluate_coeff,
    format_coeff,
    format_multivector,
    function,
    hamiltonian_field,
    homogeneous_frame,
    log_vector,
    numeric_pfaffian,
    pfaffian,
    schouten,
    substitute,
    to_affine_chart,
    vector,
    wedge,
    zero,
)
from utils import ValidationError


@pytest.fixture
def plane():
    return homogeneous_frame(2, 0)


@pytest.fixture
def space():
    return homogeneous_frame(4, 0)


def test_homogeneous_frame_names():
    assert homogeneous_frame(3, 1).coordinate_names() == ("y0", "y1", "y2", "x")
    assert homogeneous_frame(3, 2).exp_names == ("x1", "x2")
    frame = homogeneous_frame(2, 1).extend(("xi",), invertible=("xi",))
    assert frame.symbols == ("xi",)
    assert frame.index("x") == 2
    with pytest.raises(ValidationError):
        frame.index("w")


def test_coeff_rejects_inverting_plain_symbols():
    frame = homogeneous_frame(2, 1, symbols=("a",))
    with pytest.raises(ValidationError, match="invertible"):
        coeff(frame, 1, fn={"a": -1})
    with pytest.raises(ValidationError, match="polydisc"):
        coeff(frame, 1, lin={"y0": 1})


def test_coeff_arithmetic(plane):
    a = coeff(plane, 2, z={"y0": 1})
    b = coeff(plane, -2, z={"y0": 1})
    assert coeff_sum(a, b) == {}
    assert coeff(plane, 0) == {}


def test_coeff_derivative_with_table():
    frame = homogeneous_frame(1, 1, symbols=("f",))
    table = DerivationTable(frame, {("f", "x"): coeff(frame, 3, fn={"f": 2})})
    c = coeff(frame, 1, lin={"x": 2}, fn={"f": 1})
    expected = coeff_sum(coeff(frame, 2, lin={"x": 2}, fn={"f": 1}), coeff(frame, 3, lin={"x": 2}, fn={"f": 2}))
    assert coeff_derivative(c, frame, frame.index("x"), table) == expected
    assert coeff_derivative(c, frame, frame.index("y0"), table) == {}


def test_vector_sign_and_repeats(space):
    assert vector(space, ["y1", "y0"]) == -vector(space, ["y0", "y1"])
    assert vector(space, ["y2", "y2"]).is_zero()


def test_wedge(space):
    d01 = vector(space, ["y0", "y1"])
    d23 = vector(space, ["y2", "y3"])
    assert wedge(d01, d23) == vector(space, ["y0", "y1", "y2", "y3"])
    assert wedge(vector(space, ["y0"]), vector(space, ["y0"])).is_zero()
    assert wedge(d01, d23) == wedge(d23, d01)


def test_schouten_of_vector_fields_is_the_lie_bracket(plane):
    X = log_vector(plane, "y0")
    Y = vector(plane, ["y1"], coeff(plane, 1, z={"y0": 2}))
    assert schouten(X, Y) == vector(plane, ["y1"], coeff(plane, 2, z={"y0": 2}))
    f = function(plane, coeff(plane, 1, z={"y0": 1, "y1": 1}))
    assert schouten(X, f) == f


def test_schouten_graded_antisymmetry(space):
    a = vector(space, ["y0", "y1"], coeff(space, 1, z={"y0": 1, "y1": 1}))
    b = vector(space, ["y1", "y2"], coeff(space, 1, z={"y2": 2}))
    v = vector(space, ["y2"], coeff(space, 1, z={"y1": 1, "y3": 1}))
    assert schouten(a, b) == schouten(b, a)
    assert schouten(v, b) == -schouten(b, v)
    assert not schouten(v, b).is_zero()


def test_schouten_jacobi_for_vector_fields(space):
    X = vector(space, ["y1"], coeff(space, 1, z={"y0": 2}))
    Y = vector(space, ["y0"], coeff(space, 1, z={"y1": 1, "y2": 1}))
    Z = vector(space, ["y2"], coeff(space, 3, z={"y0": 1}))
    left = schouten(X, schouten(Y, Z))
    right = schouten(schouten(X, Y), Z) + schouten(Y, schouten(X, Z))
    assert left == right


def test_diagonal_bivector_is_poisson(space):
    pi = zero(space, 2)
    for a, b, value in ((0, 1, 3), (1, 2, -1), (0, 3, 2)):
        pi = pi + wedge(log_vector(space, f"y{a}"), log_vector(space, f"y{b}")).scale(value)
    assert schouten(pi, pi).is_zero()


def test_pfaffian_of_x4_preset():
    r = preset("X4")
    frame = r.frame
    pf = pfaffian(r.pi0, frame.dim - 1)
    assert pf == function(frame, coeff(frame, -96, z={f"y{a}": 1 for a in range(4)}))


def test_pfaffian_argument_checks():
    r = preset("X4")
    with pytest.raises(ValidationError, match="bivector"):
        pfaffian(euler_field(r.frame), 4)
    with pytest.raises(ValidationError, match="even dim"):
        pfaffian(r.pi0, 3)


def test_numeric_pfaffian_matches_symbolic():
    r = preset("X4")
    values = {"y0": 1.0, "y1": 2.0, "y2": 0.5, "y3": 1.5, "x": 0.3}
    symbolic = evaluate_coeff(pfaffian(r.pi0, 4).coefficient(), r.frame, values)
    assert numeric_pfaffian(r.pi0, values) == pytest.approx(symbolic, rel=1e-12)
    assert symbolic == pytest.approx(-96 * 1.0 * 2.0 * 0.5 * 1.5)


def test_numeric_pfaffian_on_grid():
    r = preset("C41")
    grid = np.linspace(-0.5, 0.5, 5)
    values = {"y0": 1.0, "y1": 1.0, "y2": 1.0, "y3": 1.0, "x": grid}
    np.testing.assert_allclose(numeric_pfaffian(r.pi0, values) * np.ones(5), np.full(5, -32.0))


def test_hamiltonian_field():
    r = preset("X4")
    frame = r.frame
    expected = zero(frame, 1)
    for a, q in enumerate((-6, 2, -2, 6)):
        expected = expected + log_vector(frame, f"y{a}").scale(q)
    assert hamiltonian_field(r.pi0, "x") == expected


def test_hamiltonian_field_of_an_absent_coordinate_is_zero():
    frame = preset("X4").frame
    pi = wedge(log_vector(frame, "y0"), log_vector(frame, "y1"))
    assert hamiltonian_field(pi, "x").is_zero()


def test_hamiltonian_field_rejects_unknown_names():
    r = preset("X4")
    with pytest.raises(ValidationError, match="unknown coordinate"):
        hamiltonian_field(r.pi0, "x7")


def test_substitute():
    frame = homogeneous_frame(1, 1, symbols=("a", "b"), invertible=("b",))
    mv = function(frame, coeff_sum(coeff(frame, 2, fn={"a": 2, "b": -1}), coeff(frame, 1, fn={"b": 1})))
    out = substitute(mv, {"a": "1/2", "b": 2})
    assert out == function(frame, coeff(frame, Fraction(9, 4)))
    with pytest.raises(ValidationError, match="inverted"):
        substitute(mv, {"b": 0})


def test_embed_requires_extension():
    frame = homogeneous_frame(2, 1)
    mv = log_vector(frame, "y0")
    wider = frame.extend(("s",))
    assert embed(mv, wider).frame == wider
    with pytest.raises(ValidationError):
        embed(mv, homogeneous_frame(3, 1))


def test_affine_chart_of_c41():
    r = preset("C41")
    chart = Frame(("z1", "z2", "z3"), ("x",))
    expected = zero(chart, 2)
    for a, b in ((1, 2), (1, 3), (2, 3)):
        expected = expected + vector(chart, [f"z{a}", f"z{b}"], coeff(chart, -2, z={f"z{a}": 1, f"z{b}": 1}))
    for a in (1, 3):
        expected = expected + vector(chart, [f"z{a}", "x"], coeff(chart, 4, z={f"z{a}": 1}))
    assert to_affine_chart(r.pi0, 0) == expected


def test_affine_chart_of_x4():
    r = preset("X4")
    chart = Frame(("z1", "z2", "z3"), ("x",))
    expected = zero(chart, 2)
    for (a, b), value in {(1, 2): -2, (1, 3): -6, (2, 3): -6}.items():
        expected = expected + vector(chart, [f"z{a}", f"z{b}"], coeff(chart, value, z={f"z{a}": 1, f"z{b}": 1}))
    for a, value in {1: 8, 2: 4, 3: 12}.items():
        expected = expected + vector(chart, [f"z{a}", "x"], coeff(chart, value, z={f"z{a}": 1}))
    assert to_affine_chart(r.pi0, 0) == expected


def test_affine_chart_rejects_inhomogeneous_terms(space):
    mv = vector(space, ["y0", "y1"], coeff(space, 1, z={"y0": 1}))
    with pytest.raises(ValidationError, match="not homogeneous"):
        to_affine_chart(mv, 0)
    with pytest.raises(ValidationError, match="out of range"):
        to_affine_chart(mv, 9)


def test_format_coeff():
    frame = homogeneous_frame(4, 1, symbols=("xi1", "xi3"))
    c = coeff(frame, Fraction(-1, 8), lin={"x": 2}, fn={"xi1": 1, "xi3": 1})
    assert format_coeff(c, frame) == "-1/8*exp(2*x)*xi1*xi3"
    two = coeff_sum(coeff(frame, 3), coeff(frame, -1, z={"y2": 2}, lin={"x": -1}))
    assert format_coeff(two, frame) == "3 - exp(-x)*y2^2"
    assert format_coeff({}, frame) == "0"


def test_format_multivector():
    r = preset("X4")
    frame = r.frame
    rho = vector(frame, ["y0", "y1"], coeff(frame, 1, z={"y2": 2}, lin={"x": -1}))
    assert format_multivector(rho) == "d_y0^d_y1: exp(-x)*y2^2"
    assert str(zero(frame, 2)) == "0"


def test_evaluate_coeff_requires_values(plane):
    c = coeff(plane, 1, z={"y1": 1})
    assert evaluate_coeff(c, plane, {"y1": 2.0}) == 2.0
    with pytest.raises(ValidationError, match="y1"):
        evaluate_coeff(c, plane, {"y0": 1.0})


def _random_multivector(rng, frame, degree, terms=3):
    names = frame.coordinate_names()
    total = zero(frame, degree)
    for _ in range(terms):
        basis = sorted(rng.choice(len(names), size=degree, replace=False).tolist())
        exponents = {name: int(e) for name, e in zip(frame.monomial_names, rng.integers(0, 3, size=frame.n))}
        value = int(rng.integers(-3, 4)) or 1
        total = total + vector(frame, [names[i] for i in basis], coeff(frame, value, z=exponents))
    return total


@pytest.mark.parametrize("degrees", [(2, 2, 2), (1, 2, 2), (2, 1, 2), (2, 2, 1)])
@pytest.mark.parametrize("seed", range(4))
def test_schouten_graded_jacobi(space, seed, degrees):
    rng = np.random.default_rng(seed)
    a, b, c = (_random_multivector(rng, space, d) for d in degrees)
    p, q = degrees[0], degrees[1]
    left = schouten(a, schouten(b, c))
    right = schouten(schouten(a, b), c) + schouten(b, schouten(a, c)).scale((-1) ** ((p - 1) * (q - 1)))
    assert left == right


@pytest.mark.parametrize("seed", range(6))
def test_schouten_graded_antisymmetry_on_random_inputs(space, seed):
    rng = np.random.default_rng(seed)
    p, q = 1 + seed % 2, 1 + (seed // 2) % 2
    a = _random_multivector(rng, space, p)
    b = _random_multivector(rng, space, q)
    assert schouten(a, b) == schouten(b, a).scale(-((-1) ** ((p - 1) * (q - 1))))


@pytest.mark.parametrize("seed", range(6))
def test_wedge_is_associative_and_graded_commutative(space, seed):
    rng = np.random.default_rng(seed)
    a = _random_multivector(rng, space, 1)
    b = _random_multivector(rng, space, 2)
    c = _random_multivector(rng, space, 1)
    assert wedge(a, wedge(b, c)) == wedge(wedge(a, b), c)
    assert wedge(a, b) == wedge(b, a)
    assert wedge(a, c) == wedge(c, a).scale(-1)
