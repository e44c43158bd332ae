"""
Exact rational linear algebra.

Scalars are `fractions.Fraction` (always reduced, hashable). Matrices are
immutable `QMatrix` values; vectors are plain tuples of Fractions.
"""
from fractions import Fraction
from math import gcd, lcm

from utils import ValidationError, to_fraction


def qvector(values):
    """
    Build an exact vector.

    Args:
        values (iterable): ints, Fractions or `p/q` strings

    Returns:
        tuple: the entries as Fractions
    """
    return tuple(to_fraction(v) for v in values)


class QMatrix:
    """Dense immutable matrix over the rationals, indexed `m[i][j]`."""

    __slots__ = ("_data", "rows", "cols")

    def __init__(self, data, cols=None):
        rows = tuple(tuple(to_fraction(x) for x in row) for row in data)
        if cols is None:
            cols = len(rows[0]) if rows else 0
        for i, row in enumerate(rows):
            if len(row) != cols:
                raise ValidationError(f"row {i} has {len(row)} entries, expected {cols}")
        self._data = rows
        self.rows = len(rows)
        self.cols = cols

    @classmethod
    def identity(cls, n):
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], n)

    @classmethod
    def zeros(cls, rows, cols):
        return cls([[0] * cols for _ in range(rows)], cols)

    @property
    def entries(self):
        """Row-major entries."""
        return tuple(x for row in self._data for x in row)

    @property
    def is_square(self):
        return self.rows == self.cols

    def __getitem__(self, i):
        return self._data[i]

    def __iter__(self):
        return iter(self._data)

    def __len__(self):
        return self.rows

    def __eq__(self, other):
        if not isinstance(other, QMatrix):
            return NotImplemented
        return self.cols == other.cols and self._data == other._data

    def __hash__(self):
        return hash((self.cols, self._data))

    def __repr__(self):
        return f"QMatrix({[[str(x) for x in row] for row in self._data]})"

    def tolist(self):
        return [list(row) for row in self._data]

    def transpose(self):
        return QMatrix([[self._data[i][j] for i in range(self.rows)] for j in range(self.cols)], self.rows)

    def scale(self, c):
        c = to_fraction(c)
        return QMatrix([[c * x for x in row] for row in self._data], self.cols)

    def __add__(self, other):
        self._check_same_shape(other)
        return QMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self._data, other._data)], self.cols)

    def __sub__(self, other):
        self._check_same_shape(other)
        return QMatrix([[a - b for a, b in zip(r, s)] for r, s in zip(self._data, other._data)], self.cols)

    def __neg__(self):
        return self.scale(-1)

    def __matmul__(self, other):
        if isinstance(other, QMatrix):
            if self.cols != other.rows:
                raise ValidationError(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
            other_cols = [other.column(j) for j in range(other.cols)]
            return QMatrix(
                [[sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in other_cols] for row in self._data],
                other.cols,
            )
        vec = tuple(other)
        if self.cols != len(vec):
            raise ValidationError(f"cannot multiply {self.rows}x{self.cols} by a vector of length {len(vec)}")
        return tuple(sum((a * b for a, b in zip(row, vec)), Fraction(0)) for row in self._data)

    def column(self, j):
        return tuple(row[j] for row in self._data)

    def submatrix(self, row_indices, col_indices=None):
        """Rows `row_indices` and columns `col_indices` (defaults to the same indices)."""
        if col_indices is None:
            col_indices = row_indices
        return QMatrix([[self._data[i][j] for j in col_indices] for i in row_indices], len(col_indices))

    def with_row(self, v):
        """A copy with `v` appended as a last row."""
        return QMatrix(list(self._data) + [tuple(v)], self.cols)

    def is_skew(self):
        return self.is_square and all(
            self._data[i][j] == -self._data[j][i] for i in range(self.rows) for j in range(i, self.rows)
        )

    def _check_same_shape(self, other):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValidationError(f"shape mismatch: {self.rows}x{self.cols} vs {other.rows}x{other.cols}")


def _integer_row(row):
    """Clear denominators and divide out the content of a rational row."""
    denom = lcm(*(x.denominator for x in row)) if row else 1
    ints = [x.numerator * (denom // x.denominator) for x in row]
    content = gcd(*ints) if ints else 0
    if content > 1:
        ints = [v // content for v in ints]
    return ints


def rank(m):
    """
    Rank over the rationals by fraction-free elimination.

    Rows are scaled to primitive integer vectors, then eliminated with
    cross-multiplication, re-normalizing by the row content after each step.

    Args:
        m (QMatrix): any matrix

    Returns:
        int: the rank
    """
    rows = [r for r in (_integer_row(row) for row in m) if any(r)]
    r = 0
    for col in range(m.cols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][col]), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        p_row = rows[r]
        p = p_row[col]
        for i in range(r + 1, len(rows)):
            f = rows[i][col]
            if not f:
                continue
            new = [p * a - f * b for a, b in zip(rows[i], p_row)]
            content = gcd(*new)
            if content > 1:
                new = [v // content for v in new]
            rows[i] = new
        r += 1
        if r == len(rows):
            break
    return r


def _row_reduce(aug, ncols):
    """
    In-place Gauss-Jordan reduction of the first `ncols` columns of `aug`.

    Pivots are taken leftmost column first, topmost row first.

    Returns:
        list: pivot columns, in pivot-row order
    """
    pivots = []
    r = 0
    for col in range(ncols):
        pivot = next((i for i in range(r, len(aug)) if aug[i][col] != 0), None)
        if pivot is None:
            continue
        aug[r], aug[pivot] = aug[pivot], aug[r]
        inv = 1 / aug[r][col]
        aug[r] = [x * inv for x in aug[r]]
        for i in range(len(aug)):
            if i != r and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[r])]
        pivots.append(col)
        r += 1
        if r == len(aug):
            break
    return pivots


def solve_linear(a, b):
    """
    Solve a·x = b exactly.

    Args:
        a (QMatrix): coefficient matrix
        b (sequence): right-hand side, length a.rows

    Returns:
        tuple or None: one solution with free variables set to 0, or None
        when the system is inconsistent
    """
    b = qvector(b)
    if len(b) != a.rows:
        raise ValidationError(f"right-hand side has length {len(b)}, expected {a.rows}")
    aug = [list(row) + [rhs] for row, rhs in zip(a, b)]
    pivots = _row_reduce(aug, a.cols)
    for row in aug[len(pivots):]:
        if row[-1] != 0:
            return None
    x = [Fraction(0)] * a.cols
    for r, col in enumerate(pivots):
        x[col] = aug[r][-1]
    return tuple(x)


def invert(m):
    """
    Exact inverse by Gauss-Jordan elimination.

    Raises:
        ValidationError: if `m` is not square or is singular
    """
    if not m.is_square:
        raise ValidationError(f"cannot invert a {m.rows}x{m.cols} matrix")
    n = m.rows
    aug = [list(row) + [Fraction(1) if i == j else Fraction(0) for j in range(n)] for i, row in enumerate(m)]
    pivots = _row_reduce(aug, n)
    if len(pivots) < n:
        raise ValidationError(f"matrix is singular (rank {len(pivots)} < {n})")
    return QMatrix([row[n:] for row in aug], n)


def in_row_span(m, v):
    """True iff `v` lies in the rational span of the rows of `m`."""
    v = qvector(v)
    if len(v) != m.cols:
        raise ValidationError(f"vector has length {len(v)}, expected {m.cols}")
    return rank(m) == rank(m.with_row(v))
