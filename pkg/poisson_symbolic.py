"""
Exact multivector calculus with exponential-monomial coefficients.

A coefficient sum is a dict mapping (zExp, linExp, fnExp) to a nonzero
Fraction, standing for c * z^zExp * exp(<linExp, x>) * f^fnExp. zExp runs
over the monomial coordinates of a Frame, linExp over its exponential
(polydisc) coordinates, fnExp over its function symbols.

Basis index i < len(monomial_names) is d/d(monomial_names[i]); the
remaining indices are the polydisc coordinates in order.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np

from utils import ValidationError, format_rational, get_logger, get_worker_count, to_fraction

logger = get_logger(__name__)


@dataclass(frozen=True)
class Frame:
    monomial_names: tuple
    exp_names: tuple = ()
    symbols: tuple = ()
    invertible: frozenset = field(default_factory=frozenset)

    @property
    def n(self):
        return len(self.monomial_names)

    @property
    def m(self):
        return len(self.exp_names)

    @property
    def dim(self):
        return self.n + self.m

    def coordinate_names(self):
        return self.monomial_names + self.exp_names

    def index(self, name):
        """Basis index of a coordinate name."""
        try:
            return self.coordinate_names().index(name)
        except ValueError:
            raise ValidationError(f"unknown coordinate {name!r}")

    def symbol_index(self, name):
        try:
            return self.symbols.index(name)
        except ValueError:
            raise ValidationError(f"unknown function symbol {name!r}")

    def extend(self, symbols, invertible=()):
        """The same frame with more function symbols appended."""
        return Frame(
            self.monomial_names,
            self.exp_names,
            self.symbols + tuple(symbols),
            frozenset(self.invertible) | frozenset(invertible),
        )

    def zero_key(self):
        return (0,) * self.n, (Fraction(0),) * self.m, (0,) * len(self.symbols)


def homogeneous_frame(n, m, symbols=(), invertible=()):
    """Coordinates y0..y{n-1} and x (m = 1) or x1..xm."""
    exp_names = ("x",) if m == 1 else tuple(f"x{l}" for l in range(1, m + 1))
    return Frame(tuple(f"y{i}" for i in range(n)), exp_names, tuple(symbols), frozenset(invertible))


def _add_keys(a, b):
    return (
        tuple(x + y for x, y in zip(a[0], b[0])),
        tuple(x + y for x, y in zip(a[1], b[1])),
        tuple(x + y for x, y in zip(a[2], b[2])),
    )


def _accumulate(target, coeff, scale=1):
    for key, c in coeff.items():
        value = target.get(key, 0) + scale * c
        if value:
            target[key] = value
        else:
            target.pop(key, None)


def coeff_sum(*parts):
    out = {}
    for c in parts:
        _accumulate(out, c)
    return out


def coeff_mul(a, b):
    out = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            key = _add_keys(ka, kb)
            value = out.get(key, 0) + ca * cb
            if value:
                out[key] = value
            else:
                out.pop(key, None)
    return out


def coeff(frame, c=1, z=None, lin=None, fn=None):
    """
    A single-term coefficient sum.

    Args:
        frame (Frame): coordinate system
        c: rational factor
        z (dict): monomial coordinate name -> integer exponent
        lin (dict): polydisc coordinate name -> rational lambda in exp(lambda x)
        fn (dict): function symbol name -> integer exponent

    Returns:
        dict: the coefficient sum (empty when c = 0)
    """
    c = to_fraction(c)
    if c == 0:
        return {}
    z_exp = [0] * frame.n
    for name, e in (z or {}).items():
        idx = frame.index(name)
        if idx >= frame.n:
            raise ValidationError(f"{name!r} is not a monomial coordinate")
        z_exp[idx] += e
    lin_exp = [Fraction(0)] * frame.m
    for name, value in (lin or {}).items():
        idx = frame.index(name) - frame.n
        if idx < 0:
            raise ValidationError(f"{name!r} is not a polydisc coordinate")
        lin_exp[idx] += to_fraction(value)
    fn_exp = [0] * len(frame.symbols)
    for name, e in (fn or {}).items():
        if e < 0 and name not in frame.invertible:
            raise ValidationError(f"symbol {name!r} is not declared invertible")
        fn_exp[frame.symbol_index(name)] += e
    return {(tuple(z_exp), tuple(lin_exp), tuple(fn_exp)): c}


class DerivationTable:
    """
    Derivatives of function symbols along polydisc coordinates.

    `rules` maps (symbol name, polydisc coordinate name) to a coefficient
    sum. Missing entries are zero, which is how constants such as eps are
    declared.
    """

    def __init__(self, frame, rules=None):
        self.frame = frame
        self._rules = {}
        for (symbol, coord), rhs in (rules or {}).items():
            s = frame.symbol_index(symbol)
            l = frame.index(coord) - frame.n
            if l < 0:
                raise ValidationError(f"derivation along {coord!r} which is not a polydisc coordinate")
            for key in rhs:
                if len(key[0]) != frame.n or len(key[1]) != frame.m or len(key[2]) != len(frame.symbols):
                    raise ValidationError(f"right-hand side for d{symbol}/d{coord} uses another frame")
            self._rules[(s, l)] = dict(rhs)

    def rule(self, symbol_index, exp_index):
        return self._rules.get((symbol_index, exp_index), {})

    def items(self):
        """((symbol name, coordinate name), rhs) in symbol-then-coordinate order."""
        for (s, l) in sorted(self._rules):
            yield (self.frame.symbols[s], self.frame.exp_names[l]), self._rules[(s, l)]


def coeff_derivative(c, frame, index, table=None):
    """
    Partial derivative of a coefficient sum along basis index `index`.

    Monomial coordinates lower the exponent. Along a polydisc coordinate
    the exponential contributes lambda and each function symbol its
    derivation rule.
    """
    out = {}
    if index < frame.n:
        for (z, lin, fn), value in c.items():
            e = z[index]
            if e == 0:
                continue
            key = (z[:index] + (e - 1,) + z[index + 1:], lin, fn)
            _accumulate(out, {key: value * e})
        return out

    l = index - frame.n
    for (z, lin, fn), value in c.items():
        if lin[l]:
            _accumulate(out, {(z, lin, fn): value * lin[l]})
        if table is None:
            continue
        for s, e in enumerate(fn):
            if e == 0:
                continue
            rhs = table.rule(s, l)
            if not rhs:
                continue
            lowered = fn[:s] + (e - 1,) + fn[s + 1:]
            _accumulate(out, coeff_mul({(z, lin, lowered): value * e}, rhs))
    return out


def _wedge_basis(a, b):
    """Sign and sorted union of two increasing index tuples, or None if they overlap."""
    if set(a) & set(b):
        return None
    inversions = sum(1 for x in a for y in b if x > y)
    return (-1 if inversions % 2 else 1), tuple(sorted(a + b))


class Multivector:
    """Homogeneous-degree multivector: basis tuple -> coefficient sum."""

    __slots__ = ("frame", "degree", "terms")

    def __init__(self, frame, degree, terms=None):
        self.frame = frame
        self.degree = degree
        self.terms = {}
        for basis, c in (terms or {}).items():
            if len(basis) != degree:
                raise ValidationError(f"basis {basis} does not have degree {degree}")
            if list(basis) != sorted(set(basis)):
                raise ValidationError(f"basis {basis} is not strictly increasing")
            cleaned = {k: v for k, v in c.items() if v}
            if cleaned:
                self.terms[basis] = cleaned

    def is_zero(self):
        return not self.terms

    def _check(self, other):
        if self.frame != other.frame:
            raise ValidationError("multivectors live in different frames")

    def __add__(self, other):
        self._check(other)
        if self.degree != other.degree and self.terms and other.terms:
            raise ValidationError(f"cannot add degree {self.degree} and degree {other.degree}")
        terms = {b: dict(c) for b, c in self.terms.items()}
        for basis, c in other.terms.items():
            _accumulate(terms.setdefault(basis, {}), c)
        return Multivector(self.frame, self.degree if self.terms else other.degree, terms)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __eq__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        return self.frame == other.frame and (self - other).is_zero()

    __hash__ = None

    def scale(self, value):
        value = to_fraction(value)
        return Multivector(
            self.frame, self.degree,
            {b: {k: v * value for k, v in c.items()} for b, c in self.terms.items()},
        )

    def times(self, c):
        """Multiply every coefficient by the coefficient sum `c`."""
        return Multivector(self.frame, self.degree, {b: coeff_mul(c, v) for b, v in self.terms.items()})

    def coefficient(self, basis=()):
        return dict(self.terms.get(tuple(basis), {}))

    def __repr__(self):
        return f"Multivector(degree={self.degree}, terms={len(self.terms)})"

    def __str__(self):
        return format_multivector(self)


def zero(frame, degree):
    return Multivector(frame, degree)


def function(frame, c):
    """Degree-0 multivector with coefficient sum `c`."""
    return Multivector(frame, 0, {(): c})


def vector(frame, names, c=None):
    """
    c * d_{names[0]} ^ d_{names[1]} ^ ... with the sign of sorting absorbed.
    """
    indices = [frame.index(name) for name in names]
    if len(set(indices)) != len(indices):
        return zero(frame, len(indices))
    if c is None:
        c = {frame.zero_key(): Fraction(1)}
    sign = 1
    for i in range(len(indices)):
        for j in range(i + 1, len(indices)):
            if indices[i] > indices[j]:
                sign = -sign
    return Multivector(frame, len(indices), {tuple(sorted(indices)): c}).scale(sign)


def log_vector(frame, name):
    """y d/dy for a monomial coordinate y."""
    return vector(frame, [name], coeff(frame, 1, z={name: 1}))


def euler_field(frame):
    """sum over monomial coordinates of y d/dy."""
    total = zero(frame, 1)
    for name in frame.monomial_names:
        total = total + log_vector(frame, name)
    return total


def wedge(a, b):
    a._check(b)
    terms = {}
    for ba, ca in a.terms.items():
        for bb, cb in b.terms.items():
            merged = _wedge_basis(ba, bb)
            if merged is None:
                continue
            sign, basis = merged
            _accumulate(terms.setdefault(basis, {}), coeff_mul(ca, cb), sign)
    return Multivector(a.frame, a.degree + b.degree, terms)


def _bracket_term(I, f, b, p, q, frame, table, cache_f, cache_g):
    out = {}
    for J, g in b.terms.items():
        for s, i_s in enumerate(I):
            key = (J, i_s)
            if key not in cache_g:
                cache_g[key] = coeff_derivative(g, frame, i_s, table)
            dg = cache_g[key]
            if not dg:
                continue
            merged = _wedge_basis(I[:s] + I[s + 1:], J)
            if merged is None:
                continue
            sign, basis = merged
            _accumulate(out.setdefault(basis, {}), coeff_mul(f, dg), sign * (-1) ** (p - 1 - s))
        outer = -((-1) ** ((p - 1) * (q - 1)))
        for t, j_t in enumerate(J):
            key = (I, j_t)
            if key not in cache_f:
                cache_f[key] = coeff_derivative(f, frame, j_t, table)
            df = cache_f[key]
            if not df:
                continue
            merged = _wedge_basis(J[:t] + J[t + 1:], I)
            if merged is None:
                continue
            sign, basis = merged
            _accumulate(out.setdefault(basis, {}), coeff_mul(g, df), outer * sign * (-1) ** (q - 1 - t))
    return out


def schouten(a, b, table=None):
    """
    Schouten-Nijenhuis bracket [a, b].

    For decomposable terms,
    [f d_I, g d_J] = sum_s (-1)^(p-s) f d_{i_s}(g) d_{I - i_s} ^ d_J
                     - (-1)^((p-1)(q-1)) sum_t (-1)^(q-t) g d_{j_t}(f) d_{J - j_t} ^ d_I
    with s, t counted from 1. Derivatives of function symbols come from `table`.

    Args:
        a (Multivector): degree p
        b (Multivector): degree q
        table (DerivationTable): derivatives of the function symbols

    Returns:
        Multivector: degree p + q - 1
    """
    a._check(b)
    if table is not None and table.frame != a.frame:
        raise ValidationError("derivation table uses a different frame")
    p, q = a.degree, b.degree
    frame = a.frame
    cache_g = {}
    items = list(a.terms.items())

    def expand(item):
        I, f = item
        return _bracket_term(I, f, b, p, q, frame, table, {}, cache_g)

    with ThreadPoolExecutor(max_workers=get_worker_count()) as executor:
        partials = list(executor.map(expand, items))
    terms = {}
    for part in partials:
        for basis, c in part.items():
            _accumulate(terms.setdefault(basis, {}), c)
    return Multivector(frame, max(p + q - 1, 0), terms)


def pfaffian(pi, dim):
    """
    Pf(pi): the coefficient of d_0 ^ ... ^ d_{N-1} in pi^(dim/2) ^ Euler.

    Args:
        pi (Multivector): bivector in homogeneous coordinates
        dim (int): n - 1 + m, must be even

    Returns:
        Multivector: degree 0, the Pfaffian coefficient sum
    """
    if pi.degree != 2:
        raise ValidationError(f"Pfaffian needs a bivector, got degree {pi.degree}")
    if dim % 2 or dim != pi.frame.dim - 1:
        raise ValidationError(f"Pfaffian needs even dim = n-1+m = {pi.frame.dim - 1}, got {dim}")
    power = function(pi.frame, {pi.frame.zero_key(): Fraction(1)})
    for _ in range(dim // 2):
        power = wedge(power, pi)
    top = wedge(power, euler_field(pi.frame))
    return function(pi.frame, top.coefficient(tuple(range(pi.frame.dim))))


def hamiltonian_field(pi, coord):
    """
    [pi, coord] for a coordinate function, by contraction.

    Raises ValidationError for a name that is not a frame coordinate.
    """
    frame = pi.frame
    idx = frame.index(coord)
    p = pi.degree
    terms = {}
    for basis, c in pi.terms.items():
        if idx not in basis:
            continue
        s = basis.index(idx)
        rest = basis[:s] + basis[s + 1:]
        _accumulate(terms.setdefault(rest, {}), c, (-1) ** (p - 1 - s))
    return Multivector(frame, p - 1, terms)


def substitute(mv, values):
    """
    Replace function symbols by rational constants.

    Args:
        mv (Multivector): any multivector
        values (dict): symbol name -> rational

    Returns:
        Multivector: same frame, substituted symbols have exponent 0
    """
    frame = mv.frame
    subs = {frame.symbol_index(name): to_fraction(v) for name, v in values.items()}
    terms = {}
    for basis, c in mv.terms.items():
        out = {}
        for (z, lin, fn), value in c.items():
            factor = Fraction(1)
            new_fn = list(fn)
            for s, v in subs.items():
                if fn[s]:
                    if v == 0 and fn[s] < 0:
                        raise ValidationError(f"cannot set {frame.symbols[s]} = 0 where it is inverted")
                    factor *= v ** fn[s]
                    new_fn[s] = 0
            if factor:
                _accumulate(out, {(z, lin, tuple(new_fn)): value * factor})
        terms[basis] = out
    return Multivector(frame, mv.degree, terms)


def embed(mv, frame):
    """Move a multivector into a frame with extra function symbols appended."""
    old = mv.frame
    if frame.coordinate_names() != old.coordinate_names() or frame.symbols[:len(old.symbols)] != old.symbols:
        raise ValidationError("target frame does not extend the source frame")
    pad = (0,) * (len(frame.symbols) - len(old.symbols))
    return Multivector(
        frame, mv.degree,
        {b: {(z, lin, fn + pad): v for (z, lin, fn), v in c.items()} for b, c in mv.terms.items()},
    )


def to_affine_chart(mv, chart):
    """
    Push a homogeneous multivector to the affine chart y_chart = 1.

    Each term must have total monomial degree equal to its number of d_y
    factors. d_{y_a} becomes d_{z_a} and d_{y_chart} becomes
    -sum_{a != chart} z_a d_{z_a}; the chart coordinates keep the labels z_a.
    """
    frame = mv.frame
    if not 0 <= chart < frame.n:
        raise ValidationError(f"chart {chart} out of range 0..{frame.n - 1}")
    keep = [a for a in range(frame.n) if a != chart]
    new_frame = Frame(
        tuple(f"z{a}" for a in keep), frame.exp_names, frame.symbols, frame.invertible
    )
    new_index = {a: i for i, a in enumerate(keep)}
    for l in range(frame.m):
        new_index[frame.n + l] = len(keep) + l

    def image(k):
        if k == chart:
            total = zero(new_frame, 1)
            for a in keep:
                total = total + log_vector(new_frame, f"z{a}")
            return -total
        return Multivector(new_frame, 1, {(new_index[k],): {new_frame.zero_key(): Fraction(1)}})

    result = zero(new_frame, mv.degree)
    for basis, c in mv.terms.items():
        n_dy = sum(1 for k in basis if k < frame.n)
        new_c = {}
        for (z, lin, fn), value in c.items():
            if sum(z) != n_dy:
                raise ValidationError(
                    f"term at {basis} has monomial degree {sum(z)} but {n_dy} d_y factors; not homogeneous of degree 0"
                )
            _accumulate(new_c, {(tuple(z[a] for a in keep), lin, fn): value})
        piece = function(new_frame, new_c)
        for k in basis:
            piece = wedge(piece, image(k))
        result = result + piece
    return result


def _format_lin(lin, names):
    parts = []
    for value, name in zip(lin, names):
        if not value:
            continue
        if value == 1:
            text = name
        elif value == -1:
            text = f"-{name}"
        else:
            text = f"{format_rational(value)}*{name}"
        if parts and not text.startswith("-"):
            text = "+" + text
        parts.append(text)
    return "".join(parts)


def _power(name, e):
    return name if e == 1 else f"{name}^{e}"


def format_coeff(c, frame):
    """
    Canonical text of a coefficient sum: terms sorted by (zExp, linExp, fnExp),
    rationals as p/q, e.g. `-1/8*exp(2*x)*xi1*xi3`.
    """
    if not c:
        return "0"
    pieces = []
    for key in sorted(c):
        z, lin, fn = key
        value = c[key]
        factors = []
        if any(lin):
            factors.append(f"exp({_format_lin(lin, frame.exp_names)})")
        factors += [_power(name, e) for name, e in zip(frame.monomial_names, z) if e]
        factors += [_power(name, e) for name, e in zip(frame.symbols, fn) if e]
        body = "*".join(factors)
        if not factors:
            text = format_rational(value)
        elif value == 1:
            text = body
        elif value == -1:
            text = "-" + body
        else:
            text = f"{format_rational(value)}*{body}"
        pieces.append(text)
    out = pieces[0]
    for text in pieces[1:]:
        out += f" - {text[1:]}" if text.startswith("-") else f" + {text}"
    return out


def format_multivector(mv):
    """One line per basis element, `d_y0^d_y1: <coefficient>`, in basis order."""
    if mv.is_zero():
        return "0"
    names = mv.frame.coordinate_names()
    lines = []
    for basis in sorted(mv.terms):
        label = "^".join(f"d_{names[k]}" for k in basis) if basis else "1"
        lines.append(f"{label}: {format_coeff(mv.terms[basis], mv.frame)}")
    return "\n".join(lines)


def evaluate_coeff(c, frame, values):
    """
    Numeric value of a coefficient sum.

    Args:
        c (dict): coefficient sum
        frame (Frame): its frame
        values (dict): coordinate and symbol name -> float or numpy array

    Returns:
        float or np.ndarray
    """
    def value_of(name):
        if name not in values:
            raise ValidationError(f"no value for {name!r}")
        return np.asarray(values[name], dtype=float)

    total = 0.0
    for (z, lin, fn), value in c.items():
        term = float(value)
        for name, e in zip(frame.monomial_names, z):
            if e:
                term = term * value_of(name) ** e
        if any(lin):
            exponent = sum(float(lam) * value_of(name) for name, lam in zip(frame.exp_names, lin) if lam)
            term = term * np.exp(exponent)
        for name, e in zip(frame.symbols, fn):
            if e:
                term = term * value_of(name) ** float(e)
        total = total + term
    return total


def _pfaffian_matrix(m, idx):
    if not idx:
        return 1.0
    first = idx[0]
    total = 0.0
    for pos in range(1, len(idx)):
        entry = m[first][idx[pos]]
        if np.all(np.asarray(entry) == 0):
            continue
        rest = idx[1:pos] + idx[pos + 1:]
        sign = 1.0 if pos % 2 == 1 else -1.0
        total = total + sign * entry * _pfaffian_matrix(m, rest)
    return total


def numeric_pfaffian(pi, values):
    """
    Pf(pi) evaluated numerically through a bordered Pfaffian.

    With A the matrix of pi in the d-basis and E the Euler vector,
    Pf(pi) = r! * Pf([[A, E], [-E^T, 0]]) where r = (N - 1) / 2.
    """
    frame = pi.frame
    N = frame.dim
    if pi.degree != 2 or N % 2 == 0:
        raise ValidationError(f"numeric Pfaffian needs a bivector on an odd number of coordinates, got N={N}")
    m = [[0.0] * (N + 1) for _ in range(N + 1)]
    for (a, b), c in pi.terms.items():
        value = evaluate_coeff(c, frame, values)
        m[a][b] = value
        m[b][a] = -value
    for a, name in enumerate(frame.monomial_names):
        m[a][N] = np.asarray(values[name], dtype=float)
        m[N][a] = -m[a][N]
    r = (N - 1) // 2
    return factorial(r) * _pfaffian_matrix(m, list(range(N + 1)))
