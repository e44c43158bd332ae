"""
Toric limits of the Feigin-Odesskii brackets q_{n,k}.

Every exact matrix here is stored divided by 2*pi*i: `fo_toric(n, k).m`
holds integers m_ij with q0 = sum 2*pi*i * m_ij y_i y_j d_i ^ d_j.
"""
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from biresidue import validate
from catalog import FamilyTag, make
from exact_core import QMatrix, invert
from utils import OracleViolation, ValidationError, get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class ToricCoeffMatrix:
    n: int
    k: int
    m: QMatrix


@dataclass(frozen=True)
class Q1Term:
    i: int
    monomial: tuple
    bivector: tuple


@dataclass(frozen=True)
class Codim2Split:
    n1: int
    n2: int
    k1: int
    k2: int
    cf: tuple


def _require_coprime(n, k, what="gcd(n,k) = 1"):
    if n < 2:
        raise ValidationError(f"n must be at least 2, got {n}")
    if gcd(n, k) != 1:
        raise ValidationError(f"{what} is required, got n={n}, k={k}")


def _require_log_symplectic(n, k):
    if n < 3 or not 1 <= k < n:
        raise ValidationError(f"need n >= 3 and 1 <= k < n, got n={n}, k={k}")
    if gcd(n, k) != 1 or gcd(n, k + 1) != 1:
        raise ValidationError(f"gcd(n,k) = gcd(n,k+1) = 1 is required, got n={n}, k={k}")


def mod_inverse(k, n):
    """The k' in [1, n) with k*k' = 1 mod n."""
    _require_coprime(n, k, "gcd(k,n) = 1")
    return pow(k, -1, n)


def g_fn(n, alpha):
    a = alpha % n
    return Fraction(a * (n - a), 2)


def h_fn(n, alpha, beta):
    """
    h(alpha, beta) = g(alpha) + g(beta) - g(alpha + beta).

    Returns:
        int: the value, which is always integral
    """
    value = g_fn(n, alpha) + g_fn(n, beta) - g_fn(n, alpha + beta)
    if value.denominator != 1:
        raise OracleViolation(f"h({alpha},{beta}) = {value} is not an integer for n={n}")
    return int(value)


def fo_toric(n, k):
    """
    The toric limit q0 divided by 2*pi*i.

    m_ij = (j-i mod n) + (k(j-i) mod n) - n off the diagonal.
    """
    if not 1 <= k < n:
        raise ValidationError(f"need 1 <= k < n, got n={n}, k={k}")
    _require_coprime(n, k)
    rows = [
        [0 if i == j else ((j - i) % n) + ((k * (j - i)) % n) - n for j in range(n)]
        for i in range(n)
    ]
    return ToricCoeffMatrix(n, k, QMatrix(rows, n))


def fo_q1(n, k):
    """The n first-order terms y_{i+1} y_{i+k'} d_i ^ d_{i+k'+1}, indices mod n."""
    if not 1 <= k < n:
        raise ValidationError(f"need 1 <= k < n, got n={n}, k={k}")
    kp = mod_inverse(k, n)
    return [
        Q1Term(i, ((i + 1) % n, (i + kp) % n), (i, (i + kp + 1) % n))
        for i in range(n)
    ]


def fo_permutation(n, k):
    """The permutation matrix with P_ij = 1 iff j = (k'+1) i mod n."""
    step = mod_inverse(k, n) + 1
    return QMatrix([[1 if j == (step * i) % n else 0 for j in range(n)] for i in range(n)], n)


def affine_part(m):
    """Chart-0 matrix m_ij - m_i0 - m_0j over indices 1..n-1."""
    n = m.rows
    return QMatrix(
        [[m[i][j] - m[i][0] - m[0][j] for j in range(1, n)] for i in range(1, n)],
        n - 1,
    )


def _proportionality(a, b):
    """The lam with a = lam * b, or None."""
    pairs = [(x, y) for x, y in zip(a.entries, b.entries) if y != 0]
    if not pairs:
        return None
    lam = Fraction(pairs[0][0]) / pairs[0][1]
    return lam if lam != 0 and a == b.scale(lam) else None


def fo_biresidue(n, k):
    """
    The biresidue matrix of the toric limit of q_{n,k}, in the 2*pi*i-free convention.

    Inverts the chart matrix, restores the zeroth row and column from the
    zero row sums, and checks B * m = I - U/n and that B is a multiple of
    P^-1 C_{n,k~} P.

    Returns:
        tuple: (BiresidueMatrix, permutation QMatrix)
    """
    _require_log_symplectic(n, k)
    toric = fo_toric(n, k)
    b_hat = invert(affine_part(toric.m))
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(1, n):
        for j in range(1, n):
            rows[i][j] = b_hat[i - 1][j - 1]
        rows[i][0] = -sum(b_hat[i - 1], Fraction(0))
        rows[0][i] = -rows[i][0]
    try:
        B = validate(QMatrix(rows, n))
    except ValidationError as e:
        raise OracleViolation(f"proposition violated: reassembled matrix is not a biresidue matrix ({e})")

    expected = QMatrix(
        [[Fraction(1 if i == j else 0) - Fraction(1, n) for j in range(n)] for i in range(n)],
        n,
    )
    if B.b @ toric.m != expected:
        raise OracleViolation(f"proposition violated: B * q0 != I - U/n for n={n}, k={k}")

    kt = k_tilde(n, k)
    P = fo_permutation(n, k)
    conjugated = P.transpose() @ make(FamilyTag("C", n, kt)).b @ P
    if _proportionality(B.b, conjugated) is None:
        raise OracleViolation(
            f"proposition violated: B is not proportional to P^-1 C:{n},{kt} P for n={n}, k={k}"
        )
    logger.debug("fo_biresidue n=%d k=%d verified", n, k)
    return B, P


def k_tilde(n, k):
    """min((1+k)^-1 mod n, (1+k^-1)^-1 mod n) - 1."""
    _require_log_symplectic(n, k)
    first = mod_inverse((1 + k) % n, n)
    second = mod_inverse((1 + mod_inverse(k, n)) % n, n)
    return min(first, second) - 1


def k_from_k_tilde(n, kt):
    """The inverse map k = ((1 + k~)^-1 - 1) mod n."""
    return (mod_inverse((1 + kt) % n, n) - 1) % n


def minus_continued_fraction(a, b):
    """
    Digits q_1, ..., q_g >= 2 with a/b = q_1 - 1/(q_2 - 1/(... - 1/q_g)).
    """
    if b <= 0 or a <= b:
        raise ValidationError(f"need a > b > 0, got {a}/{b}")
    digits = []
    while True:
        q = -(-a // b)
        digits.append(q)
        if a % b == 0:
            return tuple(digits)
        a, b = b, q * b - a


def _mat_mul(x, y):
    return (
        (x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]),
        (x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]),
    )


_S = ((0, -1), (1, 0))
_T_INV = ((1, -1), (0, 1))


def _t_power(q):
    return ((1, q), (0, 1))


def codim2_split(n, k):
    """
    The unique positive (n1, n2, k1, k2) with n1+n2 = n, k1+k2 = k+1, n1*k2 - n2*k1 = 1.

    Built from the minus continued fraction of n/(k+1): A = T^q1 S T^q2 ... S T^qg,
    B = A T^-1 = [[n1, n2], [k1, k2]].
    """
    if not 1 <= k < n:
        raise ValidationError(f"need 1 <= k < n, got n={n}, k={k}")
    if gcd(n, k + 1) != 1:
        raise ValidationError(f"gcd(n,k+1) = 1 is required, got n={n}, k={k}")
    cf = minus_continued_fraction(n, k + 1)
    a = _t_power(cf[0])
    for q in cf[1:]:
        a = _mat_mul(_mat_mul(a, _S), _t_power(q))
    b = _mat_mul(a, _T_INV)
    (n1, n2), (k1, k2) = b
    split = Codim2Split(n1, n2, k1, k2, cf)
    if min(n1, n2, k1, k2) < 1 or n1 + n2 != n or k1 + k2 != k + 1 or n1 * k2 - n2 * k1 != 1:
        raise OracleViolation(f"codimension-2 split {split} fails its defining identities for n={n}, k={k}")
    return split


def q1_rho_agreement(n, k):
    """
    Compare the q1 terms with the rho bivectors of the unscaled realization of fo_biresidue(n, k).

    Returns:
        list: dicts with the q1 term, the edge and whether monomial and orientation agree
    """
    from deform import build_rho, realize

    B, _ = fo_biresidue(n, k)
    realization = realize(B, 0)
    report = []
    for term in fo_q1(n, k):
        i, j = term.bivector
        rho = build_rho(realization, i, j)
        exponents = [0] * n
        for v in term.monomial:
            exponents[v] += 1
        report.append({
            "i": term.i,
            "edge": (i, j),
            "monomial": term.monomial,
            "matches": tuple(int(t) for t in rho.theta.theta) == tuple(exponents) and not any(rho.lam),
        })
    return report
