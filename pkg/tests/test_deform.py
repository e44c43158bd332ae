from fractions import Fraction

import numpy as np
import pandas as pd
import pytest

from biresidue import min_polydisc_dim, smoothing_diagram
from catalog import catalog_for_n, make, parse_tag
from deform import (
    build_rho,
    compatibility_residual,
    example,
    format_table,
    integrate,
    lambda_for_edge,
    preset,
    realization_rhos,
    realize,
)
from exact_core import QMatrix
from poisson_symbolic import (
    DerivationTable,
    coeff,
    coeff_sum,
    function,
    hamiltonian_field,
    log_vector,
    pfaffian,
    schouten,
    vector,
    zero,
)
from utils import ValidationError

X4_TABLE = """\
d(xi0)/dx = 1/2*xi0*eta
d(xi1)/dx = -1/3*xi1*eta
d(xi2)/dx = 1/2*xi2*eta
d(xi3)/dx = exp(-3*x)*xi0*xi2 - xi3*eta
d(eta)/dx = -1/8*exp(2*x)*xi1*xi3"""

C41_TABLE = """\
d(xi)/dx = xi*eta
d(eta)/dx = 1/4*exp(-2*x)*eps^2*xi^2 - 1/4*exp(2*x)*eps^2*xi^-2"""

X5_TABLE = """\
d(xi0)/dx1 = 1/2*exp(-15*x1+15*x2)*xi1*xi4 - xi0*eta
d(xi0)/dx2 = -1/2*exp(-15*x1+15*x2)*xi1*xi4 + 1/3*xi0*eta
d(xi1)/dx1 = 0
d(xi1)/dx2 = 0
d(xi2)/dx1 = 0
d(xi2)/dx2 = 0
d(xi3)/dx1 = xi3*eta - 1/2*exp(15*x1+15*x2)*xi2*xi4
d(xi3)/dx2 = 1/3*xi3*eta - 1/2*exp(15*x1+15*x2)*xi2*xi4
d(xi4)/dx1 = 0
d(xi4)/dx2 = 1/3*exp(-20*x2)*xi0*xi3 - 2/3*xi4*eta
d(eta)/dx1 = 1/4*exp(-15*x1-5*x2)*xi1*xi3 - 1/4*exp(15*x1-5*x2)*xi0*xi2
d(eta)/dx2 = 1/12*exp(-15*x1-5*x2)*xi1*xi3 + 1/12*exp(15*x1-5*x2)*xi0*xi2"""


def _y(*indices):
    z = {}
    for a in indices:
        z[f"y{a}"] = z.get(f"y{a}", 0) + 1
    return z


def _rho(frame, i, j, z, lin):
    return vector(frame, [f"y{i}", f"y{j}"], coeff(frame, 1, z=z, lin=lin))


def test_realize_corank_one():
    B = make(parse_tag("C:5,1"))
    r = realize(B, 0)
    assert r.J == (1, 2, 3, 4)
    assert r.Omega == B.b.submatrix([1, 2, 3, 4])
    assert r.Omega @ r.Pi == QMatrix.identity(4)
    assert r.frame.m == 0
    pf = pfaffian(r.pi0, 4).coefficient()
    assert len(pf) == 1
    assert next(iter(pf))[0] == (1, 1, 1, 1, 1)


def test_realize_with_polydisc():
    r = realize(make(parse_tag("X4")), 1)
    assert r.J == (1, 2)
    assert r.Omega @ r.Pi == QMatrix.identity(4)
    assert r.homogeneous_omega().is_skew()
    edges = [rho.edge for rho in realization_rhos(r)]
    assert edges == [(0, 1), (0, 3), (1, 2), (2, 3)]


@pytest.mark.parametrize(
    "tag, m, message",
    [("X4", 0, "must be even"), ("X5", 0, "increase m"), ("X4", 5, "0..3")],
)
def test_realize_errors(tag, m, message):
    with pytest.raises(ValidationError, match=message):
        realize(make(parse_tag(tag)), m)


def test_lambda_for_edge():
    assert lambda_for_edge(preset("X4"), 0, 1) == (Fraction(-1),)
    assert lambda_for_edge(preset("X4"), 1, 2) == (Fraction(1),)
    assert lambda_for_edge(preset("C41"), 0, 1) == (Fraction(-1),)
    assert lambda_for_edge(preset("X5"), 4, 0) == (Fraction(0), Fraction(8))
    with pytest.raises(ValidationError, match="not smoothable"):
        lambda_for_edge(preset("X4"), 0, 2)


def test_x4_rhos():
    r = preset("X4")
    f = r.frame
    expected = {
        (0, 1): _rho(f, 0, 1, _y(2, 2), {"x": -1}),
        (1, 2): _rho(f, 1, 2, _y(3, 0), {"x": 1}),
        (2, 3): _rho(f, 2, 3, _y(1, 1), {"x": -1}),
        (3, 0): _rho(f, 3, 0, _y(1, 2), {"x": 1}),
    }
    for (i, j), bivector in expected.items():
        assert build_rho(r, i, j).bivector == bivector


def test_c41_rhos():
    r = preset("C41")
    f = r.frame
    expected = {
        (0, 1): _rho(f, 0, 1, _y(2, 3), {"x": -1}),
        (1, 2): _rho(f, 1, 2, _y(3, 0), {"x": 1}),
        (2, 3): _rho(f, 2, 3, _y(0, 1), {"x": -1}),
        (3, 0): _rho(f, 3, 0, _y(1, 2), {"x": 1}),
    }
    for (i, j), bivector in expected.items():
        assert build_rho(r, i, j).bivector == bivector


def test_x5_rhos():
    r = preset("X5")
    f = r.frame
    expected = {
        (0, 1): _rho(f, 0, 1, _y(2, 3), {"x1": 10, "x2": -6}),
        (1, 2): _rho(f, 1, 2, _y(3, 4), {"x1": -5, "x2": 1}),
        (2, 3): _rho(f, 2, 3, _y(0, 1), {"x1": 5, "x2": 1}),
        (3, 4): _rho(f, 3, 4, _y(1, 2), {"x1": -10, "x2": -6}),
        (4, 0): _rho(f, 4, 0, _y(2, 2), {"x2": 8}),
    }
    for (i, j), bivector in expected.items():
        assert build_rho(r, i, j).bivector == bivector


def test_presets_are_not_built_from_a_block():
    assert preset("x4").J is None
    assert preset("X5").m == 2
    with pytest.raises(ValidationError, match="unknown example"):
        preset("Y6")


@pytest.mark.parametrize("name, table", [("X4", X4_TABLE), ("C41", C41_TABLE), ("X5", X5_TABLE)])
def test_derivation_tables(name, table):
    assert format_table(example(name).derivations) == table


@pytest.mark.parametrize("name", ["X4", "C41", "X5"])
def test_master_equation(name):
    ex = example(name)
    assert schouten(ex.ansatz, ex.ansatz, ex.derivations).is_zero()
    assert compatibility_residual(ex) == {}


def test_master_equation_needs_the_table():
    ex = example("C41")
    assert not schouten(ex.ansatz, ex.ansatz, DerivationTable(ex.frame)).is_zero()


def test_example_unknowns_and_initial_values():
    assert example("C41").unknowns == ("xi", "eta")
    assert example("C41").initial_values(0.01) == {"eps": 0.01, "xi": 1.0, "eta": 0.0}
    assert example("X5").unknowns == ("xi0", "xi1", "xi2", "xi3", "xi4", "eta")


def test_pfaffian_of_c41():
    ex = example("C41")
    f = ex.frame
    Y = _y(0, 1, 2, 3)
    expected = coeff_sum(
        coeff(f, -32, z=Y),
        coeff(f, 32, z=Y, fn={"eta": 1}),
        coeff(f, 8, z=_y(2, 2, 3, 3), lin={"x": -1}, fn={"eps": 1, "xi": 1}),
        coeff(f, 8, z=_y(3, 3, 0, 0), lin={"x": 1}, fn={"eps": 1, "xi": -1}),
        coeff(f, 8, z=_y(0, 0, 1, 1), lin={"x": -1}, fn={"eps": 1, "xi": 1}),
        coeff(f, 8, z=_y(1, 1, 2, 2), lin={"x": 1}, fn={"eps": 1, "xi": -1}),
    )
    assert pfaffian(ex.ansatz, 4) == function(f, expected)


def test_pfaffian_of_x4():
    ex = example("X4")
    f = ex.frame
    Y = _y(0, 1, 2, 3)
    displayed = coeff_sum(
        coeff(f, -96, z=Y, lin={"x": 1}),
        coeff(f, 64, z=Y, lin={"x": 1}, fn={"eta": 1}),
        coeff(f, 16, z=_y(2, 2, 2, 3), fn={"xi0": 1}),
        coeff(f, 24, z=_y(0, 0, 3, 3), lin={"x": 2}, fn={"xi1": 1}),
        coeff(f, 16, z=_y(0, 1, 1, 1), fn={"xi2": 1}),
        coeff(f, 8, z=_y(1, 1, 2, 2), lin={"x": 2}, fn={"xi3": 1}),
    )
    pf = pfaffian(ex.ansatz, 4)
    assert pf.times(coeff(f, 1, lin={"x": 1})) == function(f, displayed)


def test_pfaffian_of_x5():
    ex = example("X5")
    f = ex.frame
    Y = _y(0, 1, 2, 3, 4)
    expected = coeff_sum(
        coeff(f, -15 * 720, z=Y),
        coeff(f, 720, z=Y, fn={"eta": 1}),
        coeff(f, 180, z=_y(2, 2, 3, 3, 4), lin={"x1": 10, "x2": -6}, fn={"xi0": 1}),
        coeff(f, 360, z=_y(0, 3, 3, 4, 4), lin={"x1": -5, "x2": 1}, fn={"xi1": 1}),
        coeff(f, 360, z=_y(0, 0, 1, 1, 4), lin={"x1": 5, "x2": 1}, fn={"xi2": 1}),
        coeff(f, 180, z=_y(0, 1, 1, 2, 2), lin={"x1": -10, "x2": -6}, fn={"xi3": 1}),
        coeff(f, 180, z=_y(1, 2, 2, 2, 3), lin={"x2": 8}, fn={"xi4": 1}),
    )
    assert pfaffian(ex.ansatz, 6) == function(f, expected)


@pytest.mark.parametrize(
    "name, coord, weights",
    [
        ("C41", "x", (-2, 2, -2, 2)),
        ("X4", "x", (-6, 2, -2, 6)),
        ("X5", "x1", (2, -3, 2, -3, 2)),
        ("X5", "x2", (-6, 3, 0, -3, 6)),
    ],
)
def test_hamiltonian_fields(name, coord, weights):
    ex = example(name)
    expected = zero(ex.frame, 1)
    for a, w in enumerate(weights):
        if w:
            expected = expected + log_vector(ex.frame, f"y{a}").scale(w)
    assert hamiltonian_field(ex.ansatz, coord) == expected


def test_integrate_c41():
    result = integrate("C41", 1e-2, xmax=0.5, step=1e-3)
    assert list(result.samples.columns) == ["x", "xi", "eta", "residual", "pfaffian", "pfaffian_symbolic"]
    assert len(result.samples) == 1001
    assert result.max_residual < 1e-8
    assert result.max_pfaffian_gap < 1e-8
    center = result.samples.iloc[500]
    assert center["x"] == 0.0
    assert center["xi"] == 1.0
    # eta' is odd in x to leading order
    assert result.samples["eta"].iloc[0] == pytest.approx(result.samples["eta"].iloc[-1], rel=1e-3)


def test_integrate_without_deformation_is_stationary():
    result = integrate("C41", 0.0, xmax=0.1, step=1e-2)
    np.testing.assert_array_equal(result.samples["xi"], np.ones(21))
    np.testing.assert_array_equal(result.samples["eta"], np.zeros(21))


def test_integrate_x4(tmp_path):
    result = integrate("X4", 1e-2, xmax=0.5, step=1e-2)
    assert result.max_pfaffian_gap < 1e-8
    assert result.max_residual < 1e-6
    path = tmp_path / "x4.csv"
    result.to_csv(path)
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["x", "xi0", "xi1", "xi2", "xi3", "eta", "residual", "pfaffian", "pfaffian_symbolic"]


@pytest.mark.slow
def test_integrate_x5_on_a_grid():
    result = integrate("X5", 1e-2, xmax=0.1, step=1e-2)
    samples = result.samples
    assert len(samples) == 21 * 21
    center = samples.iloc[10 * 21 + 10]
    assert (center["x1"], center["x2"]) == (0.0, 0.0)
    assert center["xi0"] == 1e-2
    assert result.max_pfaffian_gap < 1e-8
    assert result.max_residual < 1e-4
    # second-order differences: halving the step cuts the residual about fourfold
    coarse = integrate("X5", 1e-2, xmax=0.1, step=2e-2)
    assert result.max_residual < 0.5 * coarse.max_residual


@pytest.mark.parametrize(
    "kwargs, message",
    [
        ({"step": 0.0}, "positive"),
        ({"xmax": 0.01, "step": 0.01}, "two steps"),
    ],
)
def test_integrate_argument_errors(kwargs, message):
    with pytest.raises(ValidationError, match=message):
        integrate("C41", 1e-2, **kwargs)


@pytest.mark.slow
def test_first_order_flatness_of_catalog_members():
    for n in range(3, 11):
        for tag, B in catalog_for_n(n):
            r = realize(B, min_polydisc_dim(B))
            rhos = realization_rhos(r)
            assert [rho.edge for rho in rhos] == list(smoothing_diagram(B).smoothable_edges), tag


@pytest.mark.slow
@pytest.mark.parametrize("n", range(3, 9))
def test_realized_pfaffian_is_a_multiple_of_the_coordinate_product(n):
    for tag, B in catalog_for_n(n):
        r = realize(B, min_polydisc_dim(B))
        pf = pfaffian(r.pi0, r.frame.dim - 1).coefficient()
        assert len(pf) == 1, tag
        (z_exp, lin_exp, fn_exp), value = next(iter(pf.items()))
        assert value != 0, tag
        assert z_exp == (1,) * n, tag
        assert lin_exp == (0,) * r.m
        assert fn_exp == ()
