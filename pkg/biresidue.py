import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from exact_core import QMatrix, rank
from utils import OracleViolation, ValidationError, format_rational, get_logger, to_fraction

logger = get_logger(__name__)


class BiresidueMatrix:
    """Skew-symmetric rational matrix with zero row sums. Build it with `validate`."""

    __slots__ = ("n", "b")

    def __init__(self, b):
        self.b = b
        self.n = b.rows

    def __getitem__(self, i):
        return self.b[i]

    def __eq__(self, other):
        if not isinstance(other, BiresidueMatrix):
            return NotImplemented
        return self.b == other.b

    def __hash__(self):
        return hash(self.b)

    def __repr__(self):
        return f"BiresidueMatrix(n={self.n})"

    def scale(self, c):
        return BiresidueMatrix(self.b.scale(c))

    def rank(self):
        return rank(self.b)


@dataclass(frozen=True)
class EdgeTheta:
    i: int
    j: int
    theta: tuple


@dataclass(frozen=True)
class SmoothingDiagram:
    n: int
    smoothable_edges: tuple
    angles: dict = field(hash=False)

    def angles_at_edge(self, edge):
        """Mapping vertex -> weight for one smoothable edge."""
        return {k: w for (e, k), w in sorted(self.angles.items()) if e == edge}

    def neighbors(self, v):
        return sorted({a if b == v else b for a, b in self.smoothable_edges if v in (a, b)})


def validate(b):
    """
    Check that a square matrix is a biresidue matrix.

    Args:
        b (QMatrix or list): the candidate matrix

    Returns:
        BiresidueMatrix: the wrapped matrix

    Raises:
        ValidationError: naming the first offending entry or row
    """
    if not isinstance(b, QMatrix):
        try:
            b = QMatrix(b)
        except ValidationError as e:
            raise ValidationError(f"matrix is not rectangular: {e}")
    if not b.is_square:
        raise ValidationError(f"biresidue matrix must be square, got {b.rows}x{b.cols}")
    if b.rows < 2:
        raise ValidationError(f"biresidue matrix needs n >= 2, got n={b.rows}")
    n = b.rows
    for i in range(n):
        if b[i][i] != 0:
            raise ValidationError(f"diagonal entry ({i},{i}) is {format_rational(b[i][i])}, expected 0")
        for j in range(i + 1, n):
            if b[i][j] != -b[j][i]:
                raise ValidationError(
                    f"not skew-symmetric at ({i},{j}): {format_rational(b[i][j])} vs {format_rational(b[j][i])}"
                )
    for i in range(n):
        total = sum(b[i], Fraction(0))
        if total != 0:
            raise ValidationError(f"row {i} sums to {format_rational(total)}, expected 0")
    return BiresidueMatrix(b)


def _check_vertex(B, v):
    if not 0 <= v < B.n:
        raise ValidationError(f"vertex {v} out of range 0..{B.n - 1}")


def theta(B, i, j):
    """
    The numbers theta_ijk = (b_jk + b_ki) / b_ij for k not in {i, j}.

    Returns:
        EdgeTheta: entries at i and j are 0
    """
    _check_vertex(B, i)
    _check_vertex(B, j)
    if i == j:
        raise ValidationError(f"edge needs two distinct vertices, got ({i},{j})")
    b_ij = B[i][j]
    if b_ij == 0:
        raise ValidationError(f"edge ({i},{j}) has zero biresidue")
    values = tuple(
        Fraction(0) if k in (i, j) else (B[j][k] + B[k][i]) / b_ij
        for k in range(B.n)
    )
    return EdgeTheta(i, j, values)


def is_smoothable(B, i, j):
    """True iff b_ij != 0 and every theta_ijk is a non-negative integer."""
    if i == j:
        raise ValidationError(f"edge needs two distinct vertices, got ({i},{j})")
    _check_vertex(B, i)
    _check_vertex(B, j)
    if B[i][j] == 0:
        return False
    t = theta(B, i, j).theta
    return all(x.denominator == 1 and x >= 0 for x in t)


def smoothing_diagram(B):
    """
    The smoothable edges of B and their colored angles.

    Angle weight 1 is a light angle, 2 a dark one. Edges are stored as
    sorted pairs.
    """
    edges = []
    angles = {}
    for i, j in combinations(range(B.n), 2):
        if not is_smoothable(B, i, j):
            continue
        edges.append((i, j))
        t = theta(B, i, j).theta
        for k, value in enumerate(t):
            if value:
                angles[((i, j), k)] = int(value)
        total = sum(t)
        if total != 2:
            raise OracleViolation(f"angle weights of edge ({i},{j}) sum to {total}, expected 2")
    return SmoothingDiagram(B.n, tuple(edges), angles)


def valency_violations(B):
    """Vertices lying on more than two smoothable edges."""
    degree = Counter()
    for i, j in smoothing_diagram(B).smoothable_edges:
        degree[i] += 1
        degree[j] += 1
    return sorted(v for v, d in degree.items() if d > 2)


def conjugate(B, sigma, lam=1):
    """
    The matrix lam * P_sigma^-1 B P_sigma, i.e. entry (sigma(a), sigma(b)) = lam * b_ab.
    """
    sigma = tuple(sigma)
    if sorted(sigma) != list(range(B.n)):
        raise ValidationError(f"{sigma} is not a permutation of 0..{B.n - 1}")
    lam = to_fraction(lam)
    if lam == 0:
        raise ValidationError("scale factor must be nonzero")
    out = [[Fraction(0)] * B.n for _ in range(B.n)]
    for a in range(B.n):
        for b in range(B.n):
            out[sigma[a]][sigma[b]] = lam * B[a][b]
    return BiresidueMatrix(QMatrix(out, B.n))


def _vertex_invariant(row):
    """Zero count and sorted multiplicities of the nonzero absolute values; unchanged by scaling."""
    counts = Counter(abs(x) for x in row if x != 0)
    zeros = sum(1 for x in row if x == 0)
    return zeros, tuple(sorted(counts.values()))


def projectively_equivalent(B1, B2):
    """
    Search for (sigma, lam) with B2 = lam * P_sigma^-1 B1 P_sigma.

    Vertices of B1 are assigned in order 0, 1, ... and candidate images are
    tried in increasing order, so the witness returned is the
    lexicographically least sigma. Candidates are pruned by the scale-free
    row invariant and, once lam is known, by the sorted scaled row.

    Returns:
        tuple or None: (sigma, lam) with sigma a tuple, or None
    """
    if B1.n != B2.n:
        raise ValidationError(f"matrices have different sizes {B1.n} and {B2.n}")
    n = B1.n
    inv1 = [_vertex_invariant(B1[a]) for a in range(n)]
    inv2 = [_vertex_invariant(B2[c]) for c in range(n)]
    if sorted(inv1) != sorted(inv2):
        return None
    sorted2 = [sorted(B2[c]) for c in range(n)]

    sigma = [None] * n
    used = [False] * n
    mismatch = object()

    def fits(a, c, lam):
        # the scale after placing a -> c, or `mismatch`
        for b in range(a):
            x = B1[a][b]
            y = B2[c][sigma[b]]
            if x == 0 or y == 0:
                if x != y:
                    return mismatch
                continue
            if lam is None:
                lam = y / x
            elif y != lam * x:
                return mismatch
        if lam is not None and sorted(lam * x for x in B1[a]) != sorted2[c]:
            return mismatch
        return lam

    def search(a, lam):
        if a == n:
            return lam if lam is not None else Fraction(1)
        for c in range(n):
            if used[c] or inv1[a] != inv2[c]:
                continue
            new_lam = fits(a, c, lam)
            if new_lam is mismatch:
                continue
            sigma[a] = c
            used[c] = True
            found = search(a + 1, new_lam)
            if found is not None:
                return found
            used[c] = False
            sigma[a] = None
        return None

    lam = search(0, None)
    if lam is None:
        return None
    logger.debug("equivalence witness sigma=%s lambda=%s", sigma, lam)
    return tuple(sigma), lam


def min_polydisc_dim(B):
    """Smallest m >= 0 with n-1+m even and rank(B) >= n-1-m."""
    if B.n < 3:
        raise ValidationError(f"polydisc realization needs n >= 3, got n={B.n}")
    r = B.rank()
    m = (B.n - 1) % 2
    while r < B.n - 1 - m:
        m += 2
    return m


def parse_matrix_text(text):
    """
    Parse the text form: a line `n`, then n rows of n rationals `p` or `p/q`.

    Lines starting with `#` and blank lines are ignored.
    """
    lines = [
        (num, line.strip())
        for num, line in enumerate(text.splitlines(), start=1)
        if line.strip() and not line.strip().startswith("#")
    ]
    if not lines:
        raise ValidationError("empty matrix file")
    num, first = lines[0]
    try:
        n = int(first)
    except ValueError:
        raise ValidationError(f"line {num}: expected the size n, got {first!r}")
    if n < 2:
        raise ValidationError(f"line {num}: n must be at least 2, got {n}")
    body = lines[1:]
    if len(body) != n:
        raise ValidationError(f"expected {n} matrix rows, got {len(body)}")
    rows = []
    for num, line in body:
        parts = line.split()
        if len(parts) != n:
            raise ValidationError(f"line {num}: expected {n} entries, got {len(parts)}")
        try:
            rows.append([to_fraction(p) for p in parts])
        except ValidationError as e:
            raise ValidationError(f"line {num}: {e}")
    return validate(QMatrix(rows, n))


def format_matrix_text(B):
    lines = [str(B.n)]
    for row in B.b:
        lines.append(" ".join(format_rational(x) for x in row))
    return "\n".join(lines) + "\n"


def parse_matrix_json(text):
    """Parse `{"n": 4, "b": [["0", "2", ...], ...]}` with rationals as strings."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"invalid JSON: {e}")
    if not isinstance(data, dict) or "n" not in data or "b" not in data:
        raise ValidationError('JSON matrix needs the keys "n" and "b"')
    n = data["n"]
    rows = data["b"]
    if not isinstance(n, int) or not isinstance(rows, list) or len(rows) != n:
        raise ValidationError(f'"b" must hold n={n} rows')
    parsed = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise ValidationError(f"row {i} must hold {n} entries")
        parsed.append([to_fraction(x) for x in row])
    return validate(QMatrix(parsed, n))


def matrix_to_dict(B):
    return {"n": B.n, "b": [[format_rational(x) for x in row] for row in B.b]}


def format_matrix_json(B):
    return json.dumps(matrix_to_dict(B))
