"""Point counting for fiber quadric systems over prime fields.

The fiber system (anchor substituted) reduces mod p to s = N-2 polynomials
in m = (N-2)d variables with no constant term.  Two exact counters are
provided: a chunked brute-force scan and a blockwise counter that
enumerates all variable blocks but the last and disposes of the last block
with linear algebra plus a closed-form count of quadratic-polynomial zeros.
Multi-prime counts feed a log-log dimension fit; the finite-field Bezout
bound |X(F_p)| <= p^r * prod(deg) acts as the one-sided certificate for an
assumed dimension r.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AnchorNotAdmissibleModP,
    BudgetExceeded,
    DegenerateCounts,
    InsufficientPrimes,
    NotPrime,
    PrimeTooSmall,
)
from .intmath import is_prime, legendre_symbol
from .quadric_core import AnchorPair, ReducedSystem

DEFAULT_BUDGET = 10**9


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FpSystem:
    """Fiber system reduced mod p: q_j(x) = x_j . c_j + sum_i b_ji (x_j . x_i).

    Blocks are indexed 0..s-1 internally (block k is the original middle
    index k+2); all coefficients lie in [0, p).
    """

    p: int
    n: int
    d: int
    lin: tuple      # s blocks: c_j in [0,p)^d
    bil: tuple      # s x s matrix of ints in [0,p)
    degrees: tuple  # actual degree of each q_j mod p (0, 1 or 2)

    @property
    def s(self) -> int:
        return self.n - 2

    @property
    def m(self) -> int:
        return self.s * self.d

    @property
    def degenerate(self) -> bool:
        return any(deg == 0 for deg in self.degrees)


@dataclass
class DimensionEstimate:
    r_hat: int
    slope: float
    residuals: list
    primes: list
    counts: list
    expected: int

    @property
    def agrees(self) -> bool:
        return self.r_hat == self.expected


@dataclass
class PointCountReport:
    m: int
    s: int
    per_prime: list = field(default_factory=list)  # (p, count, bezout_bound, ok)
    dim_estimate: DimensionEstimate | None = None
    warnings: list = field(default_factory=list)


@dataclass
class InjectionReport:
    p: int
    box_m: int          # M: coordinates satisfy |x_i| < M
    n_points: int
    injective: bool
    collisions: list
    on_variety_mod_p: bool | None
    count_bound: int | None
    count_bound_ok: bool | None


# ---------------------------------------------------------------------------
# primes
# ---------------------------------------------------------------------------

def next_prime_above(x: int) -> int:
    """Smallest prime strictly greater than x (deterministic for 64 bit)."""
    if x < 1:
        raise ValueError("x must be >= 1")
    n = x + 1
    if n <= 2:
        return 2
    if n % 2 == 0:
        n += 1
    while not is_prime(n):
        n += 2
    return n


# ---------------------------------------------------------------------------
# reduction mod p
# ---------------------------------------------------------------------------

def reduce_mod_p(sys: ReducedSystem, anchor: AnchorPair, p: int) -> FpSystem:
    """Exact modular reduction of the anchored fiber system.

    The anchor must be integral; admissibility mod p means z1 and v are
    nonzero residue vectors with z1 . v = 0 (mod p).
    """
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    z1 = [int(x) % p for x in anchor.z1]
    v = [int(x) % p for x in anchor.v]
    if all(x == 0 for x in z1) or all(x == 0 for x in v):
        raise AnchorNotAdmissibleModP(f"anchor vanishes mod {p}")
    if sum(a * b for a, b in zip(anchor.z1, anchor.v)) % p != 0:
        raise AnchorNotAdmissibleModP(f"z1 . v != 0 mod {p}")
    mids = list(sys.middle)
    lin = []
    for j in mids:
        a1, aN = sys.linear[j]
        lin.append(tuple((a1 * a + aN * b) % p for a, b in zip(z1, v)))
    s = len(mids)
    bil = tuple(
        tuple(sys.bilinear[(mids[r], mids[c])] % p for c in range(s)) for r in range(s)
    )
    degrees = []
    for r in range(s):
        if any(bil[r][c] for c in range(s)):
            degrees.append(2)
        elif any(lin[r]):
            degrees.append(1)
        else:
            degrees.append(0)
    return FpSystem(p, sys.n, sys.d, tuple(lin), bil, tuple(degrees))


# ---------------------------------------------------------------------------
# brute-force counter
# ---------------------------------------------------------------------------

def count_points_bruteforce(fp: FpSystem, budget: int = DEFAULT_BUDGET,
                            chunk: int = 1 << 20) -> int:
    """Exact count of common zeros in F_p^m by scanning all p^m points."""
    p, m, s, d = fp.p, fp.m, fp.s, fp.d
    if m == 0:
        return 1
    total_pts = p**m
    if total_pts > budget:
        raise BudgetExceeded(f"p^m = {total_pts} > budget {budget}")
    lin = np.array(fp.lin, dtype=np.int64)
    bil = np.array(fp.bil, dtype=np.int64)
    count = 0
    for start in range(0, total_pts, chunk):
        idx = np.arange(start, min(start + chunk, total_pts), dtype=np.int64)
        digits = np.empty((len(idx), m), dtype=np.int64)
        rem = idx.copy()
        for c in range(m):
            digits[:, c] = rem % p
            rem //= p
        blocks = digits.reshape(len(idx), s, d)
        ok = np.ones(len(idx), dtype=bool)
        for j in range(s):
            acc = blocks[:, j, :] @ lin[j]
            for i in range(s):
                if bil[j][i]:
                    acc = acc + bil[j][i] * np.einsum(
                        "kd,kd->k", blocks[:, j, :], blocks[:, i, :]
                    )
            ok &= acc % p == 0
        count += int(ok.sum())
    return count


# ---------------------------------------------------------------------------
# quadratic zero counts over F_p (closed form, p odd)
# ---------------------------------------------------------------------------

def _diagonalize_congruence(a, p):
    """Return (diag, c_mat) with c^T a c = diag(diag) over F_p, p odd."""
    k = len(a)
    b = [[a[i][j] % p for j in range(k)] for i in range(k)]
    c = [[int(i == j) for j in range(k)] for i in range(k)]

    def col_swap(i, j):
        for row in (b, c):
            for r in row:
                r[i], r[j] = r[j], r[i]
        b[i], b[j] = b[j], b[i]

    def col_addmul(dst, src, f):
        # column op x_dst stays, basis vector e_dst += f e_src on the right
        for r in range(k):
            b[r][dst] = (b[r][dst] + f * b[r][src]) % p
        for rr in range(k):
            b[dst][rr] = (b[dst][rr] + f * b[src][rr]) % p
        for r in range(k):
            c[r][dst] = (c[r][dst] + f * c[r][src]) % p

    for i in range(k):
        if b[i][i] % p == 0:
            piv = next((j for j in range(i + 1, k) if b[j][j] % p), None)
            if piv is not None:
                col_swap(i, piv)
            else:
                off = next((j for j in range(i + 1, k) if b[i][j] % p), None)
                if off is None:
                    continue
                col_addmul(i, off, 1)  # makes b[i][i] = 2 b[i][off] != 0
        if b[i][i] % p == 0:
            continue
        inv = pow(b[i][i], p - 2, p)
        for j in range(i + 1, k):
            f = (b[i][j] * inv) % p
            if f:
                col_addmul(j, i, p - f)
    return [b[i][i] % p for i in range(k)], c


def _count_diagonal_form(diag, rhs, p):
    """#{u in F_p^r : sum diag_i u_i^2 = rhs}, all diag_i nonzero, p odd."""
    r = len(diag)
    if r == 0:
        return 1 if rhs % p == 0 else 0
    delta = 1
    for dcoef in diag:
        delta = delta * dcoef % p
    rhs %= p
    if r % 2 == 1:
        if rhs == 0:
            return p ** (r - 1)
        eta = legendre_symbol(pow(-1, (r - 1) // 2, p) * rhs * delta, p)
        return p ** (r - 1) + eta * p ** ((r - 1) // 2)
    eta = legendre_symbol(pow(-1, r // 2, p) * delta, p)
    v = (p - 1) if rhs == 0 else -1
    return p ** (r - 1) + v * eta * p ** (r // 2 - 1)


def count_quadratic_zeros(a, b, c0, p) -> int:
    """#{t in F_p^k : t^T a t + b . t + c0 = 0}; a symmetric integer matrix.

    Closed form via congruence diagonalization for odd p; direct scan for
    p = 2 (k is a block dimension, so tiny).
    """
    k = len(b)
    if k == 0:
        return 1 if c0 % p == 0 else 0
    if p == 2:
        cnt = 0
        for mask in range(1 << k):
            t = [(mask >> i) & 1 for i in range(k)]
            val = c0
            for i in range(k):
                val += b[i] * t[i]
                for j in range(k):
                    val += a[i][j] * t[i] * t[j]
            cnt += val % 2 == 0
        return cnt
    diag, cm = _diagonalize_congruence(a, p)
    # substitution t = cm u: new linear part cm^T b
    bu = [sum(cm[r][i] * b[r] for r in range(k)) % p for i in range(k)]
    const = c0 % p
    nz = [i for i in range(k) if diag[i]]
    zero_idx = [i for i in range(k) if not diag[i]]
    # complete squares on the nondegenerate part
    inv2 = pow(2, p - 2, p)
    for i in nz:
        if bu[i]:
            shift = bu[i] * inv2 % p * pow(diag[i], p - 2, p) % p
            const = (const - diag[i] * shift * shift) % p
            bu[i] = 0
    if any(bu[i] for i in zero_idx):
        return p ** (k - 1)
    r = len(nz)
    return p ** (k - r) * _count_diagonal_form([diag[i] for i in nz], (-const) % p, p)


# ---------------------------------------------------------------------------
# blockwise counter
# ---------------------------------------------------------------------------

def count_points_blockwise(fp: FpSystem, budget: int = DEFAULT_BUDGET) -> int:
    """Exact count equal to the brute-force one, at p^{(N-3)d} outer cost.

    All blocks but the last are enumerated; for each assignment the last
    block satisfies s-1 linear equations plus one quadratic, counted by
    Gaussian elimination over F_p and the closed-form quadratic count.
    """
    p, s, d = fp.p, fp.s, fp.d
    if fp.m == 0:
        return 1
    outer_blocks = s - 1
    outer_pts = p ** (outer_blocks * d)
    if outer_pts > budget:
        raise BudgetExceeded(f"outer grid {outer_pts} > budget {budget}")
    lin = np.array(fp.lin, dtype=np.int64)
    bil = np.array(fp.bil, dtype=np.int64)
    last = s - 1
    e_last = int(bil[last][last])

    if outer_blocks == 0:
        a_q = [[(e_last if i == j else 0) % p for j in range(d)] for i in range(d)]
        return count_quadratic_zeros(a_q, [int(x) for x in lin[last]], 0, p)

    # outer grid: digits of 0..p^{(s-1)d}-1
    mo = outer_blocks * d
    idx = np.arange(outer_pts, dtype=np.int64)
    digits = np.empty((outer_pts, mo), dtype=np.int64)
    rem = idx.copy()
    for c in range(mo):
        digits[:, c] = rem % p
        rem //= p
    xb = digits.reshape(outer_pts, outer_blocks, d)

    # per-row data for the linear-in-y equations (j < last):
    #   (bil[j][last] * x_j) . y = -(x_j . c_j + sum_{i<last} bil[j][i] x_j.x_i)
    a_rows = np.empty((outer_pts, outer_blocks, d), dtype=np.int64)
    rhs = np.empty((outer_pts, outer_blocks), dtype=np.int64)
    for j in range(outer_blocks):
        a_rows[:, j, :] = (bil[j][last] * xb[:, j, :]) % p
        acc = xb[:, j, :] @ lin[j]
        for i in range(outer_blocks):
            if bil[j][i]:
                acc = acc + bil[j][i] * np.einsum("kd,kd->k", xb[:, j, :], xb[:, i, :])
        rhs[:, j] = (-acc) % p
    # quadratic data: w = c_last + sum_{i<last} bil[last][i] x_i
    w = np.broadcast_to(lin[last], (outer_pts, d)).copy()
    for i in range(outer_blocks):
        if bil[last][i]:
            w = w + bil[last][i] * xb[:, i, :]
    w %= p

    a_list = a_rows.reshape(outer_pts, -1).tolist()
    rhs_list = rhs.tolist()
    w_list = w.tolist()
    total = 0
    for row_a, row_rhs, row_w in zip(a_list, rhs_list, w_list):
        total += _count_last_block(row_a, row_rhs, row_w, e_last, outer_blocks, d, p)
    return total


def _count_last_block(flat_a, rhs, w, e, n_eq, d, p) -> int:
    """Count y in F_p^d with A y = rhs and y.w + e|y|^2 = 0."""
    # row-reduce [A | rhs]
    rows = [flat_a[j * d:(j + 1) * d] + [rhs[j]] for j in range(n_eq)]
    piv_cols = []
    rank = 0
    for col in range(d):
        piv = next((r for r in range(rank, n_eq) if rows[r][col] % p), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = pow(rows[rank][col], p - 2, p)
        rows[rank] = [(x * inv) % p for x in rows[rank]]
        for r in range(n_eq):
            if r != rank and rows[r][col] % p:
                f = rows[r][col]
                rows[r] = [(x - f * y) % p for x, y in zip(rows[r], rows[rank])]
        piv_cols.append(col)
        rank += 1
    for r in range(rank, n_eq):
        if rows[r][d] % p:
            return 0  # inconsistent
    free_cols = [c for c in range(d) if c not in piv_cols]
    k = len(free_cols)
    # particular solution y0 (free vars = 0) and basis B of the null space
    y0 = [0] * d
    for r, col in enumerate(piv_cols):
        y0[col] = rows[r][d] % p
    basis = []
    for fc in free_cols:
        vec = [0] * d
        vec[fc] = 1
        for r, col in enumerate(piv_cols):
            vec[col] = (-rows[r][fc]) % p
        basis.append(vec)
    # substitute y = y0 + B t into y.w + e|y|^2
    aq = [[0] * k for _ in range(k)]
    bq = [0] * k
    cq = sum(y0[t] * w[t] for t in range(d)) + e * sum(y0[t] * y0[t] for t in range(d))
    for i in range(k):
        bi = basis[i]
        bq[i] = sum(bi[t] * w[t] for t in range(d)) + 2 * e * sum(
            bi[t] * y0[t] for t in range(d)
        )
        for j in range(k):
            aq[i][j] = e * sum(bi[t] * basis[j][t] for t in range(d))
    return count_quadratic_zeros(aq, bq, cq, p)


# ---------------------------------------------------------------------------
# dimension estimation and certificates
# ---------------------------------------------------------------------------

def bezout_bound(p: int, r: int, degrees) -> int:
    prod = 1
    for deg in degrees:
        if deg < 1:
            raise DegenerateCounts("an equation vanished mod p; bound undefined")
        prod *= deg
    return p**r * prod


def bezout_certify(count: int, p: int, r: int, degrees) -> bool:
    """True iff count <= p^r * prod(deg): consistency with dimension r."""
    return count <= bezout_bound(p, r, degrees)


def estimate_dimension(
    sys: ReducedSystem,
    anchor: AnchorPair,
    primes,
    budget: int = DEFAULT_BUDGET,
    counter=count_points_blockwise,
) -> tuple[DimensionEstimate, PointCountReport]:
    """Fit log(count) against log(p) over several primes.

    The rounded slope is the dimension estimate; the report carries exact
    counts, Bezout bounds at the expected dimension m-s, and a soft
    monotonicity warning.
    """
    primes = sorted(primes)
    if len(primes) < 3:
        raise InsufficientPrimes(f"need >= 3 primes, got {primes}")
    expected = (sys.n - 2) * (sys.d - 1)
    report = PointCountReport(m=sys.num_vars, s=sys.num_eqs)
    counts = []
    for p in primes:
        fp = reduce_mod_p(sys, anchor, p)
        if fp.degenerate:
            raise DegenerateCounts(f"equation vanished mod {p}")
        cnt = counter(fp, budget=budget)
        bound = bezout_bound(p, expected, fp.degrees)
        report.per_prime.append((p, cnt, bound, cnt <= bound))
        counts.append(cnt)
    if any(c <= 1 for c in counts):
        raise DegenerateCounts(f"count collapsed: {list(zip(primes, counts))}")
    if any(c2 < c1 for c1, c2 in zip(counts, counts[1:])):
        report.warnings.append("count(p) not monotone over tested primes")
    x = np.log(np.array(primes, dtype=float))
    y = np.log(np.array(counts, dtype=float))
    xc = x - x.mean()
    slope = float((xc * (y - y.mean())).sum() / (xc * xc).sum())
    fit = y.mean() + slope * xc
    est = DimensionEstimate(
        r_hat=int(round(slope)),
        slope=slope,
        residuals=list(y - fit),
        primes=list(primes),
        counts=counts,
        expected=expected,
    )
    report.dim_estimate = est
    return est, report


# ---------------------------------------------------------------------------
# box embedding mod p
# ---------------------------------------------------------------------------

def _eval_fp_at(fp: FpSystem, x) -> bool:
    """Does the residue vector x satisfy every q_j mod p?"""
    p, s, d = fp.p, fp.s, fp.d
    for j in range(s):
        xj = x[j * d:(j + 1) * d]
        acc = sum(a * t for a, t in zip(xj, fp.lin[j]))
        for i in range(s):
            cji = fp.bil[j][i]
            if cji:
                xi = x[i * d:(i + 1) * d]
                acc += cji * sum(a * t for a, t in zip(xj, xi))
        if acc % p != 0:
            return False
    return True


def mod_p_injection_check(
    points, box_m: int, p: int, fp_system: FpSystem | None = None
) -> InjectionReport:
    """Verify the coordinate-wise mod-p embedding of box points.

    Points must have |x_i| < box_m and p must exceed 2*box_m; then the map
    is injective and, when the points solve the integer system, the images
    land on the reduced variety, whose F_p count obeys 2^s p^{m-s}.
    """
    if p <= 2 * box_m:
        raise PrimeTooSmall(f"p={p} <= 2M={2*box_m}")
    pts = [tuple(int(x) for x in q) for q in points]
    for q in pts:
        if any(abs(x) >= box_m for x in q):
            raise ValueError(f"point {q} outside the open box |x| < {box_m}")
    images = {}
    collisions = []
    for q in pts:
        img = tuple(x % p for x in q)
        if img in images and images[img] != q:
            collisions.append((images[img], q))
        images[img] = q
    on_variety = None
    bound = None
    bound_ok = None
    if fp_system is not None:
        on_variety = all(_eval_fp_at(fp_system, [x % p for x in q]) for q in pts)
        bound = 2**fp_system.s * p ** (fp_system.m - fp_system.s)
        bound_ok = len(pts) <= bound
    return InjectionReport(
        p=p,
        box_m=box_m,
        n_points=len(pts),
        injective=not collisions,
        collisions=collisions,
        on_variety_mod_p=on_variety,
        count_bound=bound,
        count_bound_ok=bound_ok,
    )
