"""
Semi-toric log symplectic realizations on P^{n-1} x D^m, the first-order
deformations rho_ij of their smoothable edges, and the three worked
deformation families X4, C41 and X5.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np
import pandas as pd

from biresidue import is_smoothable, theta
from catalog import FamilyTag, make
from exact_core import QMatrix, invert, rank
from poisson_symbolic import (
    DerivationTable,
    coeff,
    coeff_derivative,
    coeff_sum,
    embed,
    evaluate_coeff,
    format_coeff,
    format_multivector,
    homogeneous_frame,
    log_vector,
    numeric_pfaffian,
    pfaffian,
    schouten,
    vector,
    wedge,
    zero,
)
from utils import OracleViolation, ValidationError, get_logger, get_worker_count

logger = get_logger(__name__)

BLOW_UP = 1e8


@dataclass(frozen=True, eq=False)
class SemiToricRealization:
    B: object
    m: int
    J: tuple
    Omega: QMatrix
    Pi: QMatrix
    pi0: object

    @property
    def n(self):
        return self.B.n

    @property
    def frame(self):
        return self.pi0.frame

    def homogeneous_omega(self):
        """[[B, Gamma], [-Gamma^T, Omega_xx]] with Gamma's columns summing to zero."""
        n, m = self.n, self.m
        gamma = [[Fraction(0)] * m for _ in range(n)]
        for i in range(1, n):
            for l in range(m):
                gamma[i][l] = self.Omega[i - 1][n - 1 + l]
        for l in range(m):
            gamma[0][l] = -sum((gamma[i][l] for i in range(1, n)), Fraction(0))
        rows = []
        for i in range(n):
            rows.append(list(self.B[i]) + gamma[i])
        for l in range(m):
            rows.append([-gamma[i][l] for i in range(n)] + list(self.Omega[n - 1 + l][n - 1:]))
        return QMatrix(rows, n + m)


@dataclass(frozen=True, eq=False)
class RhoBivector:
    edge: tuple
    theta: object
    lam: tuple
    bivector: object


@dataclass(frozen=True, eq=False)
class ExampleDeformation:
    name: str
    realization: SemiToricRealization
    rhos: tuple
    ansatz: object
    derivations: DerivationTable
    initial_conditions: dict = field(default_factory=dict)

    @property
    def frame(self):
        return self.ansatz.frame

    @property
    def unknowns(self):
        """Symbols with a derivation rule, in frame order."""
        ruled = {symbol for (symbol, _), _ in self.derivations.items()}
        return tuple(s for s in self.frame.symbols if s in ruled)

    def initial_values(self, eps):
        return {s: eps if v == "eps" else float(v) for s, v in self.initial_conditions.items()}


def _lift(Pi, n, m):
    """
    Homogeneous P, Q and x-x blocks from the chart-0 matrix Pi.

    P has zero row sums and Q zero column sums.
    """
    R = [sum(Pi[i][: n - 1], Fraction(0)) for i in range(n - 1)]
    a = [Fraction(0)] + [-r / n for r in R]
    P = [[Fraction(0)] * n for _ in range(n)]
    for i in range(1, n):
        P[i][0] = a[i]
        P[0][i] = -a[i]
        for j in range(1, n):
            if i != j:
                P[i][j] = Pi[i - 1][j - 1] + a[i] - a[j]
    Q = [[Fraction(0)] * m for _ in range(n)]
    for l in range(m):
        mixed = [Pi[i][n - 1 + l] for i in range(n - 1)]
        Q[0][l] = -sum(mixed, Fraction(0)) / n
        for i in range(1, n):
            Q[i][l] = Q[0][l] + mixed[i - 1]
    XX = [list(Pi[n - 1 + l][n - 1:]) for l in range(m)]
    return P, Q, XX


def _homogeneous_pi(frame, P, Q, XX):
    n, m = frame.n, frame.m
    y, x = frame.monomial_names, frame.exp_names
    pi = zero(frame, 2)
    for a in range(n):
        for b in range(a + 1, n):
            if P[a][b]:
                pi = pi + vector(frame, [y[a], y[b]], coeff(frame, P[a][b], z={y[a]: 1, y[b]: 1}))
        for l in range(m):
            if Q[a][l]:
                pi = pi + vector(frame, [y[a], x[l]], coeff(frame, Q[a][l], z={y[a]: 1}))
    for l in range(m):
        for l2 in range(l + 1, m):
            if XX[l][l2]:
                pi = pi + vector(frame, [x[l], x[l2]], coeff(frame, XX[l][l2]))
    return pi


def _choose_J(B_hat, size):
    for J in combinations(range(1, B_hat.rows + 1), size):
        idx = [j - 1 for j in J]
        if rank(B_hat.submatrix(idx)) == size:
            return J
    return None


def realize(B, m):
    """
    The semi-toric log symplectic form built from B on P^{n-1} x D^m.

    Omega's upper-left block is (b_ij) over 1..n-1 and each polydisc
    coordinate x_k is paired with the k-th vertex outside J, where J is the
    lexicographically least index set of size n-1-m with a nonsingular
    principal block.

    Args:
        B (BiresidueMatrix): biresidue matrix
        m (int): polydisc dimension

    Returns:
        SemiToricRealization: with Omega * Pi = I
    """
    n = B.n
    if n < 3:
        raise ValidationError(f"realization needs n >= 3, got n={n}")
    if m < 0 or m > n - 1:
        raise ValidationError(f"polydisc dimension must lie in 0..{n - 1}, got m={m}")
    if (n - 1 + m) % 2:
        raise ValidationError(f"n-1+m must be even for a log symplectic realization, got n={n}, m={m}")
    size = n - 1 - m
    if B.rank() < size:
        raise ValidationError(f"rank(B) = {B.rank()} is below n-1-m = {size}; increase m")
    B_hat = B.b.submatrix(list(range(1, n)))
    J = _choose_J(B_hat, size)
    if J is None:
        raise ValidationError(f"no principal block of size {size} is nonsingular")
    paired = [i for i in range(1, n) if i not in J]

    dim = n - 1 + m
    rows = [[Fraction(0)] * dim for _ in range(dim)]
    for i in range(n - 1):
        for j in range(n - 1):
            rows[i][j] = B_hat[i][j]
    for k, i in enumerate(paired):
        rows[i - 1][n - 1 + k] = Fraction(1)
        rows[n - 1 + k][i - 1] = Fraction(-1)
    Omega = QMatrix(rows, dim)
    try:
        Pi = invert(Omega)
    except ValidationError:
        raise OracleViolation(f"lemma violated: Omega is singular for J={J}")
    frame = homogeneous_frame(n, m)
    pi0 = _homogeneous_pi(frame, *_lift(Pi, n, m))
    logger.debug("realized n=%d m=%d with J=%s", n, m, J)
    return SemiToricRealization(B, m, J, Omega, Pi, pi0)


def lambda_for_edge(r, i, j):
    """
    The exponents lambda of rho_ij, solving (theta; lambda) = Omega v.

    v carries 1/b_ij at i and -1/b_ij at j in the chart at the least vertex
    off the edge.

    Returns:
        tuple: lambda as Fractions, one per polydisc coordinate
    """
    B = r.B
    if not is_smoothable(B, i, j):
        raise ValidationError(f"edge ({i},{j}) is not smoothable")
    n, m = r.n, r.m
    th = theta(B, i, j).theta
    c = min(v for v in range(n) if v not in (i, j))
    keep = [a for a in range(n + m) if a != c]
    chart = r.homogeneous_omega().submatrix(keep)
    b_ij = B[i][j]
    v = [Fraction(0)] * len(keep)
    v[keep.index(i)] = 1 / b_ij
    v[keep.index(j)] = -1 / b_ij
    image = chart @ v
    for pos, a in enumerate(keep[: n - 1]):
        expected = Fraction(-1) if a in (i, j) else th[a]
        if image[pos] != expected:
            raise OracleViolation(
                f"proposition violated: (Omega v)_{a} = {image[pos]} for edge ({i},{j}), expected {expected}"
            )
    return tuple(image[n - 1:])


def build_rho(r, i, j):
    """
    exp(<lambda, x>) * prod_k y_k^theta_ijk d_{y_i} ^ d_{y_j}.

    Checks [pi0, rho] = 0 and [rho, rho] = 0.
    """
    lam = lambda_for_edge(r, i, j)
    th = theta(r.B, i, j)
    frame = r.frame
    c = coeff(
        frame, 1,
        z={frame.monomial_names[k]: int(t) for k, t in enumerate(th.theta) if t},
        lin={name: value for name, value in zip(frame.exp_names, lam) if value},
    )
    bivector = vector(frame, [frame.monomial_names[i], frame.monomial_names[j]], c)
    for label, bracket in (("[pi0, rho]", schouten(r.pi0, bivector)), ("[rho, rho]", schouten(bivector, bivector))):
        if not bracket.is_zero():
            raise OracleViolation(
                f"proposition violated: {label} != 0 for edge ({i},{j}):\n{format_multivector(bracket)}"
            )
    return RhoBivector((i, j), th, lam, bivector)


def realization_rhos(r):
    """rho for every smoothable edge of the realization, edges in lexicographic order."""
    edges = [(i, j) for i in range(r.n) for j in range(i + 1, r.n) if is_smoothable(r.B, i, j)]
    with ThreadPoolExecutor(max_workers=get_worker_count()) as executor:
        return list(executor.map(lambda e: build_rho(r, *e), edges))


_PRESETS = {
    "C41": {
        "tag": FamilyTag("C", 4, 1),
        "scale": Fraction(1, 4),
        "gamma": [[Fraction(-1, 8), Fraction(1, 8), Fraction(-1, 8)]],
        "P": {(0, 1): -1, (1, 2): -1, (2, 3): -1, (0, 3): 1},
        "Q": [[-2, 2, -2, 2]],
    },
    "X4": {
        "tag": FamilyTag("X4", 4),
        "scale": Fraction(1, 12),
        "gamma": [[Fraction(-3, 24), Fraction(3, 24), Fraction(-1, 24)]],
        "P": {(0, 1): -2, (0, 2): -1, (0, 3): 3, (1, 2): -1, (1, 3): -1, (2, 3): -2},
        "Q": [[-6, 2, -2, 6]],
    },
    "X5": {
        "tag": FamilyTag("X5", 5),
        "scale": Fraction(1, 60),
        "gamma": [
            [Fraction(3, 30), Fraction(-2, 30), Fraction(3, 30), Fraction(-2, 30)],
            [Fraction(-1, 30), Fraction(0), Fraction(1, 30), Fraction(-2, 30)],
        ],
        "P": None,
        "Q": [[2, -3, 2, -3, 2], [-6, 3, 0, -3, 6]],
    },
}

PRESET_NAMES = tuple(_PRESETS)


def _preset_data(name):
    key = name.upper()
    if key not in _PRESETS:
        raise ValidationError(f"unknown example {name!r}; expected one of {', '.join(PRESET_NAMES)}")
    return key, _PRESETS[key]


@lru_cache(maxsize=None)
def preset(name):
    """
    The hand-chosen realization of a worked example.

    Omega = [[B_hat, Gamma], [-Gamma^T, 0]] is inverted exactly and the
    lifted pi0 is checked against the stored homogeneous form.
    """
    key, data = _preset_data(name)
    tag = data["tag"]
    B = make(tag).scale(data["scale"])
    n = B.n
    gamma = data["gamma"]
    m = len(gamma)
    dim = n - 1 + m
    rows = [[Fraction(0)] * dim for _ in range(dim)]
    for i in range(n - 1):
        for j in range(n - 1):
            rows[i][j] = B[i + 1][j + 1]
        for l in range(m):
            rows[i][n - 1 + l] = gamma[l][i]
            rows[n - 1 + l][i] = -gamma[l][i]
    Omega = QMatrix(rows, dim)
    Pi = invert(Omega)
    if Omega @ Pi != QMatrix.identity(dim):
        raise OracleViolation(f"{key}: Omega * Pi != I")

    frame = homogeneous_frame(n, m)
    pi0 = _homogeneous_pi(frame, *_lift(Pi, n, m))
    if data["P"] is None:
        P = [[-4 * x for x in row] for row in make(tag).b]
    else:
        P = [[0] * n for _ in range(n)]
        for (a, b), value in data["P"].items():
            P[a][b], P[b][a] = value, -value
    Q = [[data["Q"][l][a] for l in range(m)] for a in range(n)]
    displayed = _homogeneous_pi(frame, P, Q, [[0] * m for _ in range(m)])
    if pi0 != displayed:
        raise OracleViolation(f"{key}: lifted pi0 differs from the stored form:\n{format_multivector(pi0 - displayed)}")
    return SemiToricRealization(B, m, None, Omega, Pi, pi0)


def _cycle_rhos(r):
    n = r.n
    return tuple(build_rho(r, i, (i + 1) % n) for i in range(n))


def _c41(r, rhos):
    frame = r.frame.extend(("eps", "xi", "eta"), invertible=("xi",))
    ansatz = embed(r.pi0, frame)
    for i, rho in enumerate(rhos):
        power = 1 if i % 2 == 0 else -1
        ansatz = ansatz + embed(rho.bivector, frame).times(coeff(frame, 1, fn={"eps": 1, "xi": power}))
    ansatz = ansatz + _ring(frame, range(4)).times(coeff(frame, 1, fn={"eta": 1}))
    table = DerivationTable(frame, {
        ("xi", "x"): coeff(frame, 1, fn={"xi": 1, "eta": 1}),
        ("eta", "x"): coeff_sum(
            coeff(frame, Fraction(1, 4), lin={"x": -2}, fn={"eps": 2, "xi": 2}),
            coeff(frame, Fraction(-1, 4), lin={"x": 2}, fn={"eps": 2, "xi": -2}),
        ),
    })
    return ansatz, table, {"eps": "eps", "xi": 1, "eta": 0}


def _x4(r, rhos):
    names = ("xi0", "xi1", "xi2", "xi3", "eta")
    frame = r.frame.extend(names)
    ansatz = embed(r.pi0, frame)
    for i, rho in enumerate(rhos):
        ansatz = ansatz + embed(rho.bivector, frame).times(coeff(frame, 1, fn={f"xi{i}": 1}))
    ansatz = ansatz + _ring(frame, range(4)).times(coeff(frame, 1, fn={"eta": 1}))

    def c(value, lin=None, **fn):
        return coeff(frame, value, lin=lin, fn=fn)

    table = DerivationTable(frame, {
        ("xi0", "x"): c(Fraction(1, 2), xi0=1, eta=1),
        ("xi1", "x"): c(Fraction(-1, 3), xi1=1, eta=1),
        ("xi2", "x"): c(Fraction(1, 2), xi2=1, eta=1),
        ("xi3", "x"): coeff_sum(c(-1, xi3=1, eta=1), c(1, {"x": -3}, xi0=1, xi2=1)),
        ("eta", "x"): c(Fraction(-1, 8), {"x": 2}, xi1=1, xi3=1),
    })
    return ansatz, table, {**{f"xi{i}": "eps" for i in range(4)}, "eta": 0}


def _x5(r, rhos):
    names = ("xi0", "xi1", "xi2", "xi3", "xi4", "eta")
    frame = r.frame.extend(names)
    ansatz = embed(r.pi0, frame)
    for i, rho in enumerate(rhos):
        ansatz = ansatz + embed(rho.bivector, frame).times(coeff(frame, 1, fn={f"xi{i}": 1}))
    triangle = zero(frame, 2)
    for a, b in ((1, 2), (2, 3), (3, 1)):
        triangle = triangle + wedge(log_vector(frame, f"y{a}"), log_vector(frame, f"y{b}"))
    ansatz = ansatz + triangle.times(coeff(frame, 1, fn={"eta": 1}))

    def c(value, lin=None, **fn):
        return coeff(frame, value, lin=lin, fn=fn)

    half = Fraction(1, 2)
    table = DerivationTable(frame, {
        ("xi0", "x1"): coeff_sum(c(-1, xi0=1, eta=1), c(half, {"x1": -15, "x2": 15}, xi1=1, xi4=1)),
        ("xi1", "x1"): {},
        ("xi2", "x1"): {},
        ("xi3", "x1"): coeff_sum(c(1, xi3=1, eta=1), c(-half, {"x1": 15, "x2": 15}, xi2=1, xi4=1)),
        ("xi4", "x1"): {},
        ("eta", "x1"): coeff_sum(
            c(Fraction(1, 4), {"x1": -15, "x2": -5}, xi1=1, xi3=1),
            c(Fraction(-1, 4), {"x1": 15, "x2": -5}, xi0=1, xi2=1),
        ),
        ("xi0", "x2"): coeff_sum(c(Fraction(1, 3), xi0=1, eta=1), c(-half, {"x1": -15, "x2": 15}, xi1=1, xi4=1)),
        ("xi1", "x2"): {},
        ("xi2", "x2"): {},
        ("xi3", "x2"): coeff_sum(c(Fraction(1, 3), xi3=1, eta=1), c(-half, {"x1": 15, "x2": 15}, xi2=1, xi4=1)),
        ("xi4", "x2"): coeff_sum(c(Fraction(-2, 3), xi4=1, eta=1), c(Fraction(1, 3), {"x2": -20}, xi0=1, xi3=1)),
        ("eta", "x2"): coeff_sum(
            c(Fraction(1, 12), {"x1": -15, "x2": -5}, xi1=1, xi3=1),
            c(Fraction(1, 12), {"x1": 15, "x2": -5}, xi0=1, xi2=1),
        ),
    })
    return ansatz, table, {**{f"xi{i}": "eps" for i in range(5)}, "eta": 0}


def _ring(frame, vertices):
    """sum_i y_i d_i ^ y_{i+1} d_{i+1} around the given cycle."""
    vertices = list(vertices)
    total = zero(frame, 2)
    for a, b in zip(vertices, vertices[1:] + vertices[:1]):
        total = total + wedge(log_vector(frame, f"y{a}"), log_vector(frame, f"y{b}"))
    return total


_BUILDERS = {"C41": _c41, "X4": _x4, "X5": _x5}


def compatibility_residual(ex):
    """
    D_2(rule along x1) - D_1(rule along x2) for every unknown.

    Returns:
        dict: symbol -> nonzero coefficient sum; empty when m < 2 or the system is compatible
    """
    frame = ex.frame
    if frame.m < 2:
        return {}
    out = {}
    for s, symbol in enumerate(frame.symbols):
        first = ex.derivations.rule(s, 0)
        second = ex.derivations.rule(s, 1)
        diff = coeff_sum(
            coeff_derivative(first, frame, frame.n + 1, ex.derivations),
            {k: -v for k, v in coeff_derivative(second, frame, frame.n, ex.derivations).items()},
        )
        if diff:
            out[symbol] = diff
    return out


@lru_cache(maxsize=None)
def example(name):
    """
    One of the worked deformations, with its ansatz and derivation table.

    Checks [pi, pi] = 0 modulo the table and, for two polydisc
    coordinates, that the mixed second derivatives agree.
    """
    key, _ = _preset_data(name)
    r = preset(key)
    rhos = _cycle_rhos(r)
    ansatz, table, initial = _BUILDERS[key](r, rhos)
    residue = schouten(ansatz, ansatz, table)
    if not residue.is_zero():
        raise OracleViolation(f"{key}: master equation fails, [pi, pi] =\n{format_multivector(residue)}")
    ex = ExampleDeformation(key, r, rhos, ansatz, table, initial)
    incompatible = compatibility_residual(ex)
    if incompatible:
        symbol, diff = next(iter(incompatible.items()))
        raise OracleViolation(f"{key}: mixed derivatives of {symbol} disagree by {format_coeff(diff, ex.frame)}")
    logger.debug("example %s verified", key)
    return ex


def format_table(table):
    """`d(xi)/dx = ...` lines in symbol-then-coordinate order."""
    return "\n".join(
        f"d({symbol})/d{coord} = {format_coeff(rhs, table.frame)}" for (symbol, coord), rhs in table.items()
    )


@dataclass(frozen=True, eq=False)
class IntegrationResult:
    name: str
    eps: float
    samples: pd.DataFrame
    max_residual: float
    max_pfaffian_gap: float

    def to_csv(self, path):
        self.samples.to_csv(path, index=False, float_format="%.12e")


def _check_finite(state, where):
    state = np.asarray(state)
    if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > BLOW_UP:
        raise ValidationError(f"integration blew up at {where}; reduce eps or the polydisc radius")


def _rk4(rhs, start, h, steps):
    path = [start]
    y = start
    x = 0.0
    for _ in range(steps):
        k1 = rhs(x, y)
        k2 = rhs(x + h / 2, y + h / 2 * k1)
        k3 = rhs(x + h / 2, y + h / 2 * k2)
        k4 = rhs(x + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        x += h
        _check_finite(y, f"x={x:.6g}")
        path.append(y)
    return path


def _two_sided(rhs, start, step, steps):
    """States at -steps*step .. steps*step, integrated outward from 0."""
    forward = _rk4(rhs, start, step, steps)
    backward = _rk4(rhs, start, -step, steps)
    return np.array(backward[:0:-1] + forward)


def _make_rhs(ex, coord_index, unknowns, fixed):
    frame = ex.frame
    rules = [ex.derivations.rule(frame.symbol_index(s), coord_index) for s in unknowns]
    coord = frame.exp_names[coord_index]

    def rhs(x, state):
        values = dict(fixed)
        values[coord] = x
        values.update(zip(unknowns, state))
        return np.array([
            evaluate_coeff(rule, frame, values) * np.ones_like(np.asarray(state[0], dtype=float)) if rule
            else np.zeros_like(np.asarray(state[0], dtype=float))
            for rule in rules
        ])

    return rhs


def _jet_bracket(ex):
    """[pi, pi] with every derivative of an unknown replaced by a jet symbol `f_x`."""
    frame = ex.frame
    jets = [f"{s}_{x}" for s in ex.unknowns for x in frame.exp_names]
    jet_frame = frame.extend(jets)
    table = DerivationTable(jet_frame, {
        (s, x): coeff(jet_frame, 1, fn={f"{s}_{x}": 1}) for s in ex.unknowns for x in frame.exp_names
    })
    pi = embed(ex.ansatz, jet_frame)
    bracket = schouten(pi, pi, table)
    groups = {}
    for basis, c in bracket.terms.items():
        for key, value in c.items():
            groups.setdefault((basis, key[0]), {})[key] = value
    return jet_frame, list(groups.values())


def integrate(name, eps, xmax=0.5, step=1e-3):
    """
    Solve the example's derivation table by fixed-step RK4 and sample it.

    For two polydisc coordinates the x1 axis is integrated first at x2 = 0,
    then every x2 column at once. The residual is [pi, pi] evaluated with
    central-difference derivatives of the sampled unknowns; the Pfaffian is
    sampled at y = (1, ..., 1) through the bordered Pfaffian and through
    the symbolic one.

    Args:
        name (str): X4, C41 or X5
        eps (float): deformation parameter
        xmax (float): half-width of the grid on each polydisc axis
        step (float): RK4 step and grid spacing

    Returns:
        IntegrationResult: samples and the worst residual and Pfaffian gap
    """
    if step <= 0 or xmax <= 0:
        raise ValidationError(f"need positive step and xmax, got step={step}, xmax={xmax}")
    steps = int(round(xmax / step))
    if steps < 2:
        raise ValidationError(f"grid needs at least two steps per side, got xmax={xmax}, step={step}")
    ex = example(name)
    frame = ex.frame
    unknowns = ex.unknowns
    init = ex.initial_values(float(eps))
    constants = {s: v for s, v in init.items() if s not in unknowns}
    axis = np.arange(-steps, steps + 1) * step

    start = np.array([init[s] for s in unknowns], dtype=float)
    if frame.m == 1:
        path = _two_sided(_make_rhs(ex, 0, unknowns, constants), start, step, steps)
        coords = {frame.exp_names[0]: axis}
        solution = {s: path[:, k] for k, s in enumerate(unknowns)}
    else:
        along_x1 = _two_sided(_make_rhs(ex, 0, unknowns, {**constants, "x2": 0.0}), start, step, steps)
        columns = _two_sided(
            _make_rhs(ex, 1, unknowns, {**constants, "x1": axis}), along_x1.T, step, steps
        )
        # columns[i2, k, i1]
        grid1, grid2 = np.meshgrid(axis, axis, indexing="ij")
        coords = {"x1": grid1, "x2": grid2}
        solution = {s: columns[:, k, :].T for k, s in enumerate(unknowns)}

    values = {**constants, **coords, **solution}
    for y in frame.monomial_names:
        values[y] = 1.0
    for s in unknowns:
        grads = np.gradient(solution[s], *([step] * frame.m), edge_order=2)
        if frame.m == 1:
            grads = [grads]
        for x, g in zip(frame.exp_names, grads):
            values[f"{s}_{x}"] = g

    jet_frame, groups = _jet_bracket(ex)
    shape = np.shape(solution[unknowns[0]])
    residual = np.zeros(shape)
    for group in groups:
        residual = np.maximum(residual, np.abs(evaluate_coeff(group, jet_frame, values) * np.ones(shape)))

    symbolic = pfaffian(ex.ansatz, frame.dim - 1).coefficient()
    pf_symbolic = evaluate_coeff(symbolic, frame, values) * np.ones(shape)
    pf_numeric = numeric_pfaffian(ex.ansatz, values) * np.ones(shape)
    scale = max(float(np.max(np.abs(pf_symbolic))), np.finfo(float).tiny)
    gap = float(np.max(np.abs(pf_numeric - pf_symbolic))) / scale

    columns_out = {label: np.ravel(arr) for label, arr in coords.items()}
    columns_out.update({s: np.ravel(solution[s]) for s in unknowns})
    columns_out["residual"] = np.ravel(residual)
    columns_out["pfaffian"] = np.ravel(pf_numeric)
    columns_out["pfaffian_symbolic"] = np.ravel(pf_symbolic)
    samples = pd.DataFrame(columns_out)
    logger.info("integrated %s eps=%g: max residual %.3e, Pfaffian gap %.3e", ex.name, eps, residual.max(), gap)
    return IntegrationResult(ex.name, float(eps), samples, float(residual.max()), gap)
