"""Exact construction and structural analysis of coupled quadric systems.

An interaction matrix is an N x N skew-symmetric matrix over {-1, 0, 1}
without zero rows or columns.  It induces N quadratic forms on (K^d)^N,

    w_j(z) = z_j . sum_i a[j][i] z_i ,

whose common zero set fibers, after fixing the first block z_1 and the
aggregate v = sum_i a[1][i] z_i, into a system of at-most-quadratic
polynomials q_j in the middle blocks.  Everything in this module is exact
(ints / Fractions); no floating point enters any rank or membership
decision.

Indices are 1-based in the public API (j runs over 2..N-1 for the fiber
system); internal storage is 0-based and not exposed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AnchorNotAdmissible,
    BadEntryValue,
    ChainNotFound,
    DimensionMismatch,
    NoNonzeroInFirstRow,
    NotIrreducible,
    NotSkewSymmetric,
    TooSmall,
    WitnessDegenerate,
    ZeroRowOrColumn,
)
from .intmath import dot, rational_rank

Block = tuple  # one d-dimensional block of exact scalars


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InteractionMatrix:
    """Validated N x N skew-symmetric matrix over {-1, 0, 1}."""

    n: int
    entries: tuple  # tuple of N tuples of N ints

    def entry(self, i: int, j: int) -> int:
        """1-based access a[i][j]."""
        return self.entries[i - 1][j - 1]

    def support_edges(self) -> list[tuple[int, int]]:
        """1-based undirected edges of the support graph."""
        return [
            (i, j)
            for i in range(1, self.n + 1)
            for j in range(i + 1, self.n + 1)
            if self.entry(i, j) != 0
        ]

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)


@dataclass(frozen=True)
class NormalizedMatrix:
    """Interaction matrix brought to a[1][N] = 1 by conjugation.

    ``matrix`` holds the normalized entries; ``permutation[i]`` is the
    original (1-based) index now sitting at position i+1, and
    ``sign_flips[i]`` the sign applied to that index.  ``restore()``
    inverts the records exactly.
    """

    base: InteractionMatrix
    matrix: InteractionMatrix
    permutation: tuple  # length N, 1-based original indices
    sign_flips: tuple   # length N, each +1 or -1

    @property
    def n(self) -> int:
        return self.matrix.n

    def restore(self) -> InteractionMatrix:
        n = self.n
        orig = [[0] * n for _ in range(n)]
        for a in range(n):
            for b in range(n):
                orig[self.permutation[a] - 1][self.permutation[b] - 1] = (
                    self.sign_flips[a] * self.sign_flips[b] * self.matrix.entries[a][b]
                )
        return InteractionMatrix(n, tuple(tuple(r) for r in orig))

    def point_to_original(self, blocks: Sequence[Block]) -> tuple:
        """Map a point of the normalized system to original coordinates."""
        out = [None] * self.n
        for i, blk in enumerate(blocks):
            s = self.sign_flips[i]
            out[self.permutation[i] - 1] = tuple(s * x for x in blk)
        return tuple(out)


@dataclass(frozen=True)
class AnchorPair:
    """Pair (z1, v) with z1 . v = 0 and both nonzero.

    ``domain`` is "rational" for exact rationals, or ("fp", p) when the
    coordinates are residues and orthogonality holds mod p.
    """

    z1: Block
    v: Block
    domain: object = "rational"

    def __post_init__(self):
        if len(self.z1) != len(self.v):
            raise DimensionMismatch("z1 and v must have equal length")
        if self.domain == "rational":
            if all(x == 0 for x in self.z1) or all(x == 0 for x in self.v):
                raise AnchorNotAdmissible("z1 and v must both be nonzero")
            if dot(self.z1, self.v) != 0:
                raise AnchorNotAdmissible("z1 . v != 0")
        else:
            _, p = self.domain
            if all(x % p == 0 for x in self.z1) or all(x % p == 0 for x in self.v):
                raise AnchorNotAdmissible("z1 or v vanishes mod p")
            if dot(self.z1, self.v) % p != 0:
                raise AnchorNotAdmissible("z1 . v != 0 mod p")

    @property
    def d(self) -> int:
        return len(self.z1)


@dataclass(frozen=True)
class LayerPartition:
    """Breadth-first layers E_0 = {1, N}, E_i = indices at graph distance i."""

    layers: tuple  # tuple of frozensets of 1-based indices

    @property
    def depth(self) -> int:
        """M, the largest layer index."""
        return len(self.layers) - 1

    def layer_of(self, j: int) -> int:
        for i, layer in enumerate(self.layers):
            if j in layer:
                return i
        raise KeyError(j)


@dataclass(frozen=True)
class ReducedSystem:
    """Fiber polynomials q_j(z_2..z_{N-1}; z1, v), 1 < j < N.

    q_j = z_j . ( a[j][1] z1 + a[j][N] v + sum_i a'[j][i] z_i )
    with a'[j][i] = a[j][i] - a[j][N] a[1][i].
    """

    matrix: NormalizedMatrix
    d: int
    linear: dict    # j -> (a_j1, a_jN)
    bilinear: dict  # (j, i) -> a'_ji, both in 2..N-1

    @property
    def n(self) -> int:
        return self.matrix.n

    @property
    def middle(self) -> range:
        return range(2, self.n)

    @property
    def num_vars(self) -> int:
        return (self.n - 2) * self.d

    @property
    def num_eqs(self) -> int:
        return self.n - 2

    def linear_block(self, j: int, z1: Block, v: Block) -> Block:
        a1, aN = self.linear[j]
        return tuple(a1 * x + aN * y for x, y in zip(z1, v))

    def eval_fiber(self, middle_blocks: dict, z1: Block, v: Block) -> dict:
        """Exact values q_j for all middle j; missing blocks are zero."""
        zero = (0,) * self.d
        vals = {}
        for j in self.middle:
            zj = middle_blocks.get(j, zero)
            acc = list(self.linear_block(j, z1, v))
            for i in self.middle:
                c = self.bilinear[(j, i)]
                if c:
                    zi = middle_blocks.get(i, zero)
                    for t in range(self.d):
                        acc[t] += c * zi[t]
            vals[j] = dot(zj, acc)
        return vals


@dataclass(frozen=True)
class FiberPolynomial:
    """One q_j with the anchor substituted: x^T A x + b^T x, no constant.

    Stored exactly as ``two_a`` (= 2A, integer entries) and ``b`` over the
    flattened middle variables.
    """

    j: int
    two_a: tuple  # m x m, ints
    b: tuple      # length m, exact scalars


@dataclass(frozen=True)
class IntersectionCertificate:
    """Witnesses that the first n+1 fiber quadrics cut each other properly.

    ``witness_in`` lies on quadric n+1 but not on the intersection of the
    first n; ``witness_out`` lies on every quadric except n+1.  Both are
    verified by exact evaluation (``evals_in`` / ``evals_out``).
    """

    n: int
    ordered_indices: tuple  # original 1-based labels in layer order
    chain: tuple            # positions j_1..j_{i-1} (reordered labels)
    witness_in: dict        # position -> block
    witness_out: dict
    evals_in: dict          # position -> exact value of q_j
    evals_out: dict
    verified: bool


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def validate_matrix(raw) -> InteractionMatrix:
    rows = [tuple(int(x) for x in row) for row in raw]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise BadEntryValue("matrix must be square")
    if n < 2:
        raise TooSmall(f"N={n} < 2")
    for r in rows:
        for x in r:
            if x not in (-1, 0, 1):
                raise BadEntryValue(f"entry {x} not in {{-1,0,1}}")
    for i in range(n):
        for j in range(n):
            if rows[i][j] != -rows[j][i]:
                raise NotSkewSymmetric(f"a[{i+1}][{j+1}] != -a[{j+1}][{i+1}]")
    for i in range(n):
        if all(x == 0 for x in rows[i]):
            raise ZeroRowOrColumn(f"row {i+1} is zero")
    return InteractionMatrix(n, tuple(rows))


def irreducible_blocks(alpha: InteractionMatrix):
    """Connected components of the support graph as validated submatrices.

    Returns a list of (block, index_map) where index_map holds the
    original 1-based indices of the block's rows.
    """
    n = alpha.n
    adj = {i: set() for i in range(1, n + 1)}
    for i, j in alpha.support_edges():
        adj[i].add(j)
        adj[j].add(i)
    seen: set[int] = set()
    comps = []
    for start in range(1, n + 1):
        if start in seen:
            continue
        stack, comp = [start], []
        seen.add(start)
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        comps.append(sorted(comp))
    out = []
    for comp in comps:
        sub = [[alpha.entry(i, j) for j in comp] for i in comp]
        out.append((validate_matrix(sub), tuple(comp)))
    return out


def is_irreducible(alpha: InteractionMatrix) -> bool:
    return len(irreducible_blocks(alpha)) == 1


def normalize_first_row(alpha: InteractionMatrix) -> NormalizedMatrix:
    """Permute indices / flip block signs so that a[1][N] = 1."""
    if not is_irreducible(alpha):
        raise NotIrreducible("normalize_first_row expects a single block")
    n = alpha.n
    perm = list(range(1, n + 1))
    if alpha.entry(1, n) == 0:
        j = max((k for k in range(2, n + 1) if alpha.entry(1, k) != 0), default=None)
        if j is None:
            raise NoNonzeroInFirstRow("validated matrix cannot have a zero first row")
        perm[j - 1], perm[n - 1] = perm[n - 1], perm[j - 1]
    permuted = [[alpha.entry(perm[a], perm[b]) for b in range(n)] for a in range(n)]
    signs = [1] * n
    if permuted[0][n - 1] == -1:
        signs[0] = -1
        for b in range(n):
            permuted[0][b] *= -1
            permuted[b][0] *= -1
    norm = validate_matrix(permuted)
    assert norm.entry(1, n) == 1
    nm = NormalizedMatrix(alpha, norm, tuple(perm), tuple(signs))
    assert nm.restore() == alpha
    return nm


def eval_omega(alpha: InteractionMatrix, blocks: Sequence[Block]) -> tuple:
    """(w_1(z), ..., w_N(z)) for z given as N blocks of equal length."""
    n = alpha.n
    if len(blocks) != n:
        raise DimensionMismatch(f"expected {n} blocks, got {len(blocks)}")
    d = len(blocks[0])
    if any(len(b) != d for b in blocks):
        raise DimensionMismatch("ragged blocks")
    out = []
    for j in range(1, n + 1):
        acc = [0] * d
        for i in range(1, n + 1):
            a = alpha.entry(j, i)
            if a:
                bi = blocks[i - 1]
                for t in range(d):
                    acc[t] += a * bi[t]
        out.append(dot(blocks[j - 1], acc))
    return tuple(out)


def eval_omega_batch(alpha: InteractionMatrix, z: np.ndarray) -> np.ndarray:
    """Vectorized w values for integer samples z of shape (batch, N, d)."""
    a = alpha.as_array()
    mixed = np.einsum("ji,bid->bjd", a, z)
    return np.einsum("bjd,bjd->bj", z, mixed)


def reduce_system(norm: NormalizedMatrix, d: int) -> ReducedSystem:
    if d < 1:
        raise DimensionMismatch("d must be >= 1")
    a = norm.matrix
    n = a.n
    linear = {j: (a.entry(j, 1), a.entry(j, n)) for j in range(2, n)}
    bilinear = {}
    for j in range(2, n):
        for i in range(2, n):
            c = a.entry(j, i) - a.entry(j, n) * a.entry(1, i)
            assert -2 <= c <= 2
            bilinear[(j, i)] = c
    return ReducedSystem(norm, d, linear, bilinear)


def build_layers(norm: NormalizedMatrix) -> LayerPartition:
    """BFS layers of the support graph, rooted at {1, N}."""
    a = norm.matrix
    n = a.n
    if not is_irreducible(a):
        raise NotIrreducible("layers are defined for irreducible matrices")
    dist = {1: 0, n: 0}
    frontier = [1, n]
    layers = [frozenset({1, n})]
    while frontier:
        nxt = []
        for u in frontier:
            for w in range(1, n + 1):
                if w not in dist and a.entry(u, w) != 0:
                    dist[w] = dist[u] + 1
                    nxt.append(w)
        if nxt:
            layers.append(frozenset(nxt))
        frontier = nxt
    assert len(dist) == n
    part = LayerPartition(tuple(layers))
    if n > 2:
        assert 1 <= part.depth <= n - 2
    return part


def random_admissible_anchor(d: int, rng: np.random.Generator, bound: int = 9) -> AnchorPair:
    """Exact integer anchor: z1 random nonzero, v in the orthogonal lattice."""
    from .intmath import integer_kernel_basis

    while True:
        z1 = tuple(int(x) for x in rng.integers(-bound, bound + 1, size=d))
        if any(z1):
            break
    basis = integer_kernel_basis(z1)
    while True:
        coeffs = rng.integers(-bound, bound + 1, size=d - 1)
        v = tuple(sum(int(c) * b[t] for c, b in zip(coeffs, basis)) for t in range(d))
        if any(v):
            return AnchorPair(z1, v)


def fiber_polynomial(sys: ReducedSystem, j: int, anchor: AnchorPair) -> FiberPolynomial:
    """q_j with the anchor substituted, as an exact scalar quadratic."""
    d, mids = sys.d, list(sys.middle)
    m = len(mids) * d
    pos = {jj: k for k, jj in enumerate(mids)}
    two_a = [[0] * m for _ in range(m)]
    for i in mids:
        c = sys.bilinear[(j, i)]
        if c == 0:
            continue
        for t in range(d):
            u, w = pos[j] * d + t, pos[i] * d + t
            if u == w:
                two_a[u][u] += 2 * c
            else:
                two_a[u][w] += c
                two_a[w][u] += c
    b = [0] * m
    cj = sys.linear_block(j, anchor.z1, anchor.v)
    for t in range(d):
        b[pos[j] * d + t] = cj[t]
    return FiberPolynomial(j, tuple(tuple(r) for r in two_a), tuple(b))


def classify_quadratic(two_a: Sequence[Sequence], b: Sequence) -> str:
    """Classify x^T A x + b^T x (2A and b exact, no constant term).

    Uses the bordered symmetric matrix [[2A, b], [b^T, 0]]: a quadric with
    nonzero quadratic part splits into affine-linear factors over an
    algebraically closed field iff that matrix has rank <= 2.
    """
    m = len(b)
    a_zero = all(all(x == 0 for x in row) for row in two_a)
    b_zero = all(x == 0 for x in b)
    if a_zero and b_zero:
        return "zero"
    if a_zero:
        return "linear"
    bordered = [list(two_a[i]) + [b[i]] for i in range(m)]
    bordered.append(list(b) + [0])
    rank = rational_rank(bordered)
    return "product_of_affine_linear" if rank <= 2 else "irreducible_quadric"


def reducibility_test(q: FiberPolynomial) -> str:
    return classify_quadratic(q.two_a, q.b)


def linear_independence_rank(sys: ReducedSystem, anchor: AnchorPair) -> int:
    """Rank of {q_j} in the monomial basis (linear blocks + pair products)."""
    if anchor.domain != "rational":
        raise AnchorNotAdmissible("rank is computed over exact rationals")
    if len(anchor.z1) != sys.d:
        raise DimensionMismatch("anchor dimension != system dimension")
    mids = list(sys.middle)
    d = len(anchor.z1)
    lin_cols = [(j, t) for j in mids for t in range(d)]
    pair_cols = [(a, b) for a in mids for b in mids if a <= b]
    rows = []
    for j in mids:
        cj = sys.linear_block(j, anchor.z1, anchor.v)
        row = []
        for (jj, t) in lin_cols:
            row.append(cj[t] if jj == j else 0)
        for (a, b) in pair_cols:
            if a == b:
                row.append(sys.bilinear[(a, a)] if j == a else 0)
            elif j == a:
                row.append(sys.bilinear[(a, b)])
            elif j == b:
                row.append(sys.bilinear[(b, a)])
            else:
                row.append(0)
        rows.append(row)
    return rational_rank(rows)


# deterministic scan order for free witness blocks
def _candidate_blocks(d: int) -> Iterable[Block]:
    for t in range(d):
        for s in (1, -1, 2, -2):
            yield tuple(s if c == t else 0 for c in range(d))
    for t1 in range(d):
        for t2 in range(t1 + 1, d):
            for s in (1, -1):
                yield tuple(1 if c == t1 else (s if c == t2 else 0) for c in range(d))


def _reorder_by_layers(sys: ReducedSystem):
    """Reordered normalized matrix with middle indices sorted by layer."""
    norm = sys.matrix
    n = norm.n
    part = build_layers(norm)
    order = sorted(range(2, n), key=lambda j: (part.layer_of(j), j))
    perm = [1] + order + [n]  # new position -> old label, 1-based
    entries = [[norm.matrix.entry(perm[a], perm[b]) for b in range(n)] for a in range(n)]
    reord = validate_matrix(entries)
    nm = NormalizedMatrix(norm.matrix, reord, tuple(perm), tuple([1] * n))
    rsys = reduce_system(nm, sys.d)
    rpart = build_layers(nm)
    return rsys, rpart, tuple(perm)


def proper_intersection_certificates(
    sys: ReducedSystem, anchor: AnchorPair, n: int
) -> IntersectionCertificate:
    """Exact witnesses separating the chain of partial intersections at step n.

    After reordering the middle indices so layer indices are nondecreasing
    (lexicographic within a layer), produce a point on quadric n+1 missing
    the intersection of the first n, and a point on every quadric except
    n+1 built on the layer chain with the +-1 propagation rule.
    """
    N = sys.n
    if not (1 < n < N - 1):
        raise ValueError(f"n={n} outside (1, {N-1})")
    if anchor.domain != "rational":
        raise AnchorNotAdmissible("certificates need exact rational anchors")
    rsys, rpart, perm = _reorder_by_layers(sys)
    d = sys.d
    z1, v = anchor.z1, anchor.v

    def evaluate(blocks: dict) -> dict:
        return rsys.eval_fiber(blocks, z1, v)

    # (a) on quadric n+1, off the first-n intersection: only block 2 nonzero
    witness_in = None
    for cand in _candidate_blocks(d):
        blocks = {2: cand}
        vals = evaluate(blocks)
        if vals[2] != 0:
            witness_in, evals_in = blocks, vals
            break
    if witness_in is None:
        raise WitnessDegenerate("no small block makes q_2 nonzero")
    assert evals_in[n + 1] == 0

    # (b) on every quadric except n+1: layer chain construction
    layer = rpart.layer_of(n + 1)  # rpart is indexed by reordered labels
    chain: list[int] = []
    if layer > 1:
        cur = n + 1
        for lev in range(layer - 1, 0, -1):
            prev = next(
                (
                    j
                    for j in sorted(rpart.layers[lev])
                    if 1 < j < N and rsys.matrix.matrix.entry(j, cur) != 0
                ),
                None,
            )
            if prev is None:
                raise ChainNotFound(f"no layer-{lev} neighbor below index {cur}")
            chain.append(prev)
            cur = prev
        chain.reverse()  # chain[k] sits in layer k+1

    witness_out = None
    for cand in _candidate_blocks(d):
        blocks: dict = {}
        if not chain:  # n+1 itself in layer 1
            blocks[n + 1] = cand
        else:
            j1 = chain[0]
            blocks[j1] = cand
            a11, a1N = rsys.linear[j1]
            self_c = rsys.bilinear[(j1, j1)]
            j2 = chain[1] if len(chain) > 1 else n + 1
            c12 = rsys.matrix.matrix.entry(j1, j2)
            assert c12 in (-1, 1)
            blocks[j2] = tuple(
                -c12 * (a11 * z1[t] + a1N * v[t] + self_c * cand[t]) for t in range(d)
            )
            for k in range(1, len(chain)):
                jk = chain[k]
                jprev = chain[k - 1]
                jnext = chain[k + 1] if k + 1 < len(chain) else n + 1
                cb = rsys.matrix.matrix.entry(jk, jprev)
                cf = rsys.matrix.matrix.entry(jk, jnext)
                assert cb in (-1, 1) and cf in (-1, 1)
                blocks[jnext] = tuple(-cb * cf * x for x in blocks[jprev])
        vals = evaluate(blocks)
        if all(vals[j] == 0 for j in rsys.middle if j != n + 1) and vals[n + 1] != 0:
            witness_out, evals_out = blocks, vals
            break
    if witness_out is None:
        raise WitnessDegenerate(
            f"chain witness for n={n} admits no nonzero evaluation"
        )

    return IntersectionCertificate(
        n=n,
        ordered_indices=tuple(perm[1:-1]),
        chain=tuple(chain),
        witness_in=witness_in,
        witness_out=witness_out,
        evals_in=evals_in,
        evals_out=evals_out,
        verified=True,
    )


def all_certificates(sys: ReducedSystem, anchor: AnchorPair) -> list[IntersectionCertificate]:
    """Certificates for every n in range; empty when N <= 3."""
    return [
        proper_intersection_certificates(sys, anchor, n)
        for n in range(2, sys.n - 1)
    ]
