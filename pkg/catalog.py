"""
Constructors for the families of biresidue matrices with a full smoothable
cycle, and the per-n catalog.

Tags use the command-line syntax `C:n,k`, `C:n,k,I=0110`, `X4`, `X5`,
`Y:n` and `Z:n`.
"""
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import gcd

import pandas as pd

from biresidue import projectively_equivalent, validate
from exact_core import QMatrix, rank
from utils import ValidationError, get_logger, get_worker_count

logger = get_logger(__name__)

X4_ROWS = [
    [0, 2, -1, -1],
    [-2, 0, 3, -1],
    [1, -3, 0, 2],
    [1, 1, -2, 0],
]

X5_ROWS = [
    [0, 1, 1, -1, -1],
    [-1, 0, 2, 0, -1],
    [-1, -2, 0, 2, 1],
    [1, 0, -2, 0, 1],
    [1, 1, -1, -1, 0],
]


@dataclass(frozen=True, order=True)
class FamilyTag:
    family: str
    n: int
    k: int = 0
    I: tuple = ()

    def __str__(self):
        return format_tag(self)


def _check_tag(tag):
    n, k = tag.n, tag.k
    if tag.family == "C":
        if n < 3:
            raise ValidationError(f"C family needs n >= 3, got n={n}")
        if not 1 <= k or not 2 * k < n:
            raise ValidationError(f"C family needs 1 <= k < n/2, got n={n}, k={k}")
        if tag.I:
            d = gcd(n, k)
            if len(tag.I) != d:
                raise ValidationError(f"I must have length gcd(n,k)={d}, got {len(tag.I)}")
            if any(bit not in (0, 1) for bit in tag.I):
                raise ValidationError(f"I must consist of 0s and 1s, got {tag.I}")
    elif tag.family == "X4":
        if n != 4:
            raise ValidationError("X4 has n=4")
    elif tag.family == "X5":
        if n != 5:
            raise ValidationError("X5 has n=5")
    elif tag.family == "Y":
        if n < 6 or n % 4 != 2:
            raise ValidationError(f"Y family needs n = 2(2k+1) >= 6, got n={n}")
    elif tag.family == "Z":
        if n < 15 or n % 5 != 0 or (n // 5) % 2 != 1:
            raise ValidationError(f"Z family needs n = 5(2k+1) >= 15, got n={n}")
    else:
        raise ValidationError(f"unknown family {tag.family!r}")


_TAG_PATTERNS = [
    (re.compile(r"^C:(\d+),(\d+),I=([01]+)$"), "CI"),
    (re.compile(r"^C:(\d+),(\d+)$"), "C"),
    (re.compile(r"^(Y|Z):(\d+)$"), "YZ"),
    (re.compile(r"^(X4|X5)$"), "X"),
]


def parse_tag(text):
    """
    Parse a tag written `C:n,k`, `C:n,k,I=0110`, `X4`, `X5`, `Y:n` or `Z:n`.

    Returns:
        FamilyTag: the validated tag
    """
    text = text.strip()
    for pattern, kind in _TAG_PATTERNS:
        match = pattern.match(text)
        if not match:
            continue
        if kind == "CI":
            tag = FamilyTag("C", int(match[1]), int(match[2]), tuple(int(c) for c in match[3]))
        elif kind == "C":
            tag = FamilyTag("C", int(match[1]), int(match[2]))
        elif kind == "YZ":
            tag = FamilyTag(match[1], int(match[2]))
        else:
            tag = FamilyTag(match[1], int(match[1][1]))
        _check_tag(tag)
        return tag
    raise ValidationError(f"invalid tag {text!r}; expected C:n,k  C:n,k,I=0110  X4  X5  Y:n  Z:n")


def format_tag(tag):
    if tag.family == "C":
        if tag.I:
            return f"C:{tag.n},{tag.k},I={''.join(str(b) for b in tag.I)}"
        return f"C:{tag.n},{tag.k}"
    if tag.family in ("X4", "X5"):
        return tag.family
    return f"{tag.family}:{tag.n}"


def row_basic(n, k):
    """The row (0, 1 x k, 0 x (n-1-2k), -1 x k)."""
    if k < 0 or 2 * k >= n:
        raise ValidationError(f"row needs 0 <= k < n/2, got n={n}, k={k}")
    return tuple(Fraction(x) for x in [0] + [1] * k + [0] * (n - 1 - 2 * k) + [-1] * k)


def cyclic_shift(v, s):
    """T^s: shift `v` right by s positions, cyclically."""
    v = tuple(v)
    if not v:
        return v
    s %= len(v)
    return v[-s:] + v[:-s] if s else v


def _periodic_rows(first_rows, n):
    """Extend the first p rows by r_i = T^p r_{i-p}."""
    p = len(first_rows)
    rows = list(first_rows)
    for i in range(p, n):
        rows.append(cyclic_shift(rows[i - p], p))
    return rows


def _y_rows(n):
    half = n // 2
    r0 = [0, 2] + [1] * (half - 2) + [-1] * half
    r1 = [-2, 0] + [1] * half + [-1] * (n - half - 2)
    return [tuple(Fraction(x) for x in r) for r in (r0, r1)]


def _z_rows(n):
    h = (n - 1) // 2

    def row(head, ones_to):
        # head covers columns 0..len(head)-1; ones run up to ones_to inclusive, then -1
        tail_start = len(head)
        values = list(head)
        values += [1] * (ones_to - tail_start + 1)
        values += [-1] * (n - len(values))
        return tuple(Fraction(x) for x in values)

    return [
        row([0], h),
        row([-1, 0, 2, 2], h),
        row([-1, -2, 0, 2], h + 2),
        row([-1, -2, -2, 0], h + 4),
        row([-1, -1, -1, -1, 0], h + 4),
    ]


@lru_cache(maxsize=None)
def make(tag):
    """
    Build the biresidue matrix of a family member.

    The result passes `validate`, so a transcription error in a row
    template surfaces as a ValidationError.
    """
    _check_tag(tag)
    n = tag.n
    if tag.family == "C":
        if tag.I:
            d = len(tag.I)
            first = [cyclic_shift(row_basic(n, tag.k - tag.I[i]), i) for i in range(d)]
        else:
            first = [row_basic(n, tag.k)]
        rows = _periodic_rows(first, n)
    elif tag.family == "X4":
        rows = X4_ROWS
    elif tag.family == "X5":
        rows = X5_ROWS
    elif tag.family == "Y":
        rows = _periodic_rows(_y_rows(n), n)
    else:
        rows = _periodic_rows(_z_rows(n), n)
    return validate(QMatrix(rows, n))


def _i_sequences(d):
    """Non-constant 0/1 sequences of length d, least in their rotation orbit."""
    out = []
    for bits in product((0, 1), repeat=d):
        if len(set(bits)) == 1:
            continue
        if bits == min(bits[s:] + bits[:s] for s in range(d)):
            out.append(bits)
    return out


def _raw_tags(n, all_rotations=False):
    tags = []
    for k in range(1, (n - 1) // 2 + 1):
        tags.append(FamilyTag("C", n, k))
        d = gcd(n, k)
        if d > 1:
            if all_rotations:
                sequences = [bits for bits in product((0, 1), repeat=d) if len(set(bits)) > 1]
            else:
                sequences = _i_sequences(d)
            tags.extend(FamilyTag("C", n, k, bits) for bits in sequences)
    if n == 4:
        tags.append(FamilyTag("X4", 4))
    if n == 5:
        tags.append(FamilyTag("X5", 5))
    if n >= 6 and n % 4 == 2:
        tags.append(FamilyTag("Y", n))
    if n >= 15 and n % 5 == 0 and (n // 5) % 2 == 1:
        tags.append(FamilyTag("Z", n))
    return tags


def _build_all(tags):
    with ThreadPoolExecutor(max_workers=get_worker_count()) as executor:
        return list(executor.map(make, tags))


def fingerprint(B):
    """Cheap projective invariant used to skip hopeless equivalence searches."""
    row_shapes = []
    for row in B.b:
        counts = {}
        for x in row:
            if x != 0:
                counts[abs(x)] = counts.get(abs(x), 0) + 1
        row_shapes.append((sum(1 for x in row if x == 0), tuple(sorted(counts.values()))))
    return rank(B.b), tuple(sorted(row_shapes))


def _group_equivalent(tags, matrices):
    groups = []
    for tag, B in zip(tags, matrices):
        fp = fingerprint(B)
        for group in groups:
            if group["fingerprint"] == fp and projectively_equivalent(group["matrix"], B) is not None:
                group["tags"].append(tag)
                break
        else:
            groups.append({"fingerprint": fp, "matrix": B, "tags": [tag]})
    return groups


def catalog_for_n(n):
    """
    All family members of size n, one per projective-equivalence class.

    Returns:
        list: (FamilyTag, BiresidueMatrix) pairs in tag order
    """
    if n < 3:
        raise ValidationError(f"catalog needs n >= 3, got n={n}")
    tags = _raw_tags(n)
    matrices = _build_all(tags)
    groups = _group_equivalent(tags, matrices)
    for group in groups:
        if len(group["tags"]) > 1:
            logger.debug("merged equivalent tags %s", [format_tag(t) for t in group["tags"]])
    return [(group["tags"][0], group["matrix"]) for group in groups]


def equivalence_orbits(n):
    """
    Group every raw tag of size n, all I-sequence rotations included, into
    projective-equivalence classes.
    """
    if n < 3:
        raise ValidationError(f"catalog needs n >= 3, got n={n}")
    tags = _raw_tags(n, all_rotations=True)
    groups = _group_equivalent(tags, _build_all(tags))
    return [group["tags"] for group in groups]


def rank_formula(n, k):
    """#{0 <= j < n : n does not divide jk nor j(k+1)}."""
    return sum(1 for j in range(n) if (j * k) % n and (j * (k + 1)) % n)


def catalog_summary(n_max, n_min=3):
    """
    One row per catalog member with 3 <= n <= n_max.

    Returns:
        pd.DataFrame: tag, n, rank, corank, min_polydisc_dim, holonomic, full_cycle_length
    """
    from biresidue import min_polydisc_dim
    from classify import has_full_cycle, is_holonomic

    records = []
    for n in range(max(3, n_min), n_max + 1):
        for tag, B in catalog_for_n(n):
            r = B.rank()
            holonomic, _ = is_holonomic(B)
            cycle = has_full_cycle(B)
            records.append({
                "tag": format_tag(tag),
                "n": n,
                "rank": r,
                "corank": n - r,
                "min_polydisc_dim": min_polydisc_dim(B),
                "holonomic": holonomic,
                "full_cycle_length": len(cycle) if cycle else 0,
            })
    return pd.DataFrame.from_records(
        records,
        columns=["tag", "n", "rank", "corank", "min_polydisc_dim", "holonomic", "full_cycle_length"],
    )

