from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from math import gcd

from biresidue import projectively_equivalent, smoothing_diagram
from catalog import FamilyTag, catalog_for_n, fingerprint, format_tag
from exact_core import in_row_span
from utils import OracleViolation, ValidationError, get_logger, get_worker_count

logger = get_logger(__name__)


@dataclass(frozen=True)
class SmoothableComponents:
    chains: tuple
    cycles: tuple


def components(d):
    """
    Split the smoothable subgraph of a diagram into maximal chains and cycles.

    Chains start at their smaller endpoint. Cycles start at their least
    vertex and continue toward its smaller neighbor.

    Args:
        d (SmoothingDiagram): diagram to decompose

    Returns:
        SmoothableComponents: chains and cycles, each sorted by first vertex
    """
    adjacency = {v: d.neighbors(v) for v in range(d.n)}
    for v, nbrs in adjacency.items():
        if len(nbrs) > 2:
            raise ValidationError(f"vertex {v} lies on {len(nbrs)} smoothable edges, at most 2 are possible")

    seen = set()
    chains = []
    cycles = []

    def walk(start, first):
        path = [start, first]
        while True:
            nxt = [w for w in adjacency[path[-1]] if w != path[-2]]
            if not nxt or nxt[0] == start:
                return path, bool(nxt)
            path.append(nxt[0])

    for v in range(d.n):
        if v in seen or len(adjacency[v]) != 1:
            continue
        path, _ = walk(v, adjacency[v][0])
        seen.update(path)
        chains.append(tuple(path))

    for v in range(d.n):
        if v in seen or not adjacency[v]:
            continue
        path, closed = walk(v, adjacency[v][0])
        if not closed:
            raise OracleViolation(f"open path {path} left after removing chains")
        seen.update(path)
        cycles.append(tuple(path))

    return SmoothableComponents(tuple(sorted(chains)), tuple(sorted(cycles)))


def has_full_cycle(B):
    """The smoothable cycle through all n vertices, or None."""
    comps = components(smoothing_diagram(B))
    for cycle in comps.cycles:
        if len(cycle) == B.n:
            return cycle
    return None


def identify(B):
    """
    Name the catalog family of a matrix with a full smoothable cycle.

    Returns:
        tuple or None: (FamilyTag, sigma, lam) with B = lam * P_sigma^-1 make(tag) P_sigma,
        or None when B has no full smoothable cycle

    Raises:
        OracleViolation: B has a full cycle but matches no catalog member
    """
    cycle = has_full_cycle(B)
    if cycle is None:
        return None
    target = fingerprint(B)
    for tag, candidate in catalog_for_n(B.n):
        if fingerprint(candidate) != target:
            continue
        witness = projectively_equivalent(candidate, B)
        if witness is not None:
            sigma, lam = witness
            logger.debug("identified %s with sigma=%s lambda=%s", format_tag(tag), sigma, lam)
            return tag, sigma, lam
    raise OracleViolation(f"classification violated: full smoothable cycle {cycle} matches no catalog member")


def corank_one_catalog(n):
    """
    Catalog members of size n with rank n-1.

    The result is checked against {C:n,k : gcd(n,k) = gcd(n,k+1) = 1}.
    """
    found = [tag for tag, B in catalog_for_n(n) if B.rank() == n - 1]
    expected = [FamilyTag("C", n, k) for k in range(1, (n - 1) // 2 + 1) if gcd(n, k) == 1 and gcd(n, k + 1) == 1]
    if sorted(found) != sorted(expected):
        raise OracleViolation(
            f"corank-one members at n={n} are {[format_tag(t) for t in found]}, "
            f"expected {[format_tag(t) for t in expected]}"
        )
    return found


def _odd_subsets(n):
    # singletons have a zero principal block and never witness
    for size in range(3, n + 1, 2):
        yield from combinations(range(n), size)


def is_holonomic(B):
    """
    Check that no odd principal submatrix has (1, ..., 1) in its row span.

    Subsets are visited by increasing size, lexicographically within a size.

    Returns:
        tuple: (True, None) or (False, J) with J the first witness
    """
    subsets = list(_odd_subsets(B.n))

    def spans_ones(J):
        return in_row_span(B.b.submatrix(J), [1] * len(J))

    with ThreadPoolExecutor(max_workers=get_worker_count()) as executor:
        results = list(executor.map(spans_ones, subsets))
    for J, hit in zip(subsets, results):
        if hit:
            logger.debug("holonomicity fails at J=%s", J)
            return False, J
    return True, None
