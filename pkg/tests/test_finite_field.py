import itertools

import numpy as np
import pytest

from quadriclab import catalog as cat
from quadriclab import finite_field as ff
from quadriclab import quadric_core as qc
from quadriclab.errors import (
    AnchorNotAdmissibleModP,
    BudgetExceeded,
    DegenerateCounts,
    InsufficientPrimes,
    NotPrime,
    PrimeTooSmall,
)


def reduced(n, d, family="cycle"):
    nm = qc.normalize_first_row(cat.family_matrix(family, n))
    return qc.reduce_system(nm, d)


def int_anchor(d, seed=0, bound=9):
    rng = np.random.default_rng(seed)
    return qc.random_admissible_anchor(d, rng, bound)


# ------------------------------------------------------------------- primes

def test_next_prime_above():
    assert ff.next_prime_above(20) == 23
    assert ff.next_prime_above(2) == 3
    assert ff.next_prime_above(1) == 2
    assert ff.next_prime_above(2 * 10**6) == 2000003


def test_reduce_mod_p_rejects_nonprime():
    with pytest.raises(NotPrime):
        ff.reduce_mod_p(reduced(3, 2), int_anchor(2), 9)


# --------------------------------------------------------- modular reduction

def test_reduction_coefficients():
    sys = reduced(3, 2)
    anc = qc.AnchorPair((1, 0), (0, 1))
    fp = ff.reduce_mod_p(sys, anc, 5)
    assert all(0 <= x < 5 for blk in fp.lin for x in blk)
    assert all(0 <= x < 5 for row in fp.bil for x in row)
    # -1 reduces to p-1
    assert (-1) % 5 == 4


def test_reduction_anchor_admissibility():
    sys = reduced(3, 2)
    with pytest.raises(AnchorNotAdmissibleModP):
        ff.reduce_mod_p(sys, qc.AnchorPair((5, 0), (0, 5)), 5)


def test_reduction_no_constant_term():
    # q_j(0) = 0 by construction: evaluating at the origin must succeed
    sys = reduced(4, 3)
    fp = ff.reduce_mod_p(sys, int_anchor(3, seed=1), 7)
    assert ff._eval_fp_at(fp, [0] * fp.m)


def test_degeneration_mod_2():
    # a bilinear coefficient of +-2 dies mod 2 and is recorded in degrees
    found = False
    for _, a in cat.load_catalog():
        if a.n < 4:
            continue
        sys = qc.reduce_system(qc.normalize_first_row(a), 2)
        if any(abs(c) == 2 for c in sys.bilinear.values()):
            fp = ff.reduce_mod_p(sys, int_anchor(2, seed=3, bound=4), 2)
            found = True
            break
    assert found  # catalog contains such a matrix; degrees recorded exactly
    assert all(d in (0, 1, 2) for d in fp.degrees)


# ------------------------------------------- quadratic zero counts (oracle)

def _scan_quad_zeros(a, b, c0, p):
    k = len(b)
    cnt = 0
    for t in itertools.product(range(p), repeat=k):
        val = c0
        for i in range(k):
            val += b[i] * t[i]
            for j in range(k):
                val += a[i][j] * t[i] * t[j]
        cnt += val % p == 0
    return cnt


@pytest.mark.parametrize("p", [2, 3, 5, 7, 13])
def test_quadratic_count_matches_scan(p):
    rng = np.random.default_rng(p)
    for _ in range(60):
        k = int(rng.integers(0, 4))
        a = rng.integers(0, p, size=(k, k))
        a = ((a + a.T) % p).tolist()
        b = [int(x) for x in rng.integers(0, p, size=k)]
        c0 = int(rng.integers(0, p))
        assert ff.count_quadratic_zeros(a, b, c0, p) == _scan_quad_zeros(a, b, c0, p)


def test_quadratic_count_known_values():
    # x*y = 0 over F_p^2: 2p - 1
    for p in (3, 5, 11):
        assert ff.count_quadratic_zeros([[0, 1], [1, 0]], [0, 0], 0, p) == 2 * p - 1


# --------------------------------------------------------------- counters

def test_bruteforce_single_equation_example():
    # x . y = 0 in F_3^4 (d=2): 33 solutions
    sys = reduced(2, 2)  # empty; build N=3-style single equation manually
    fp = ff.FpSystem(
        p=3, n=4, d=2,
        lin=((0, 0), (0, 0)),
        bil=((0, 1), (0, 0)),
        degrees=(2, 1),
    )
    assert ff.count_points_bruteforce(fp) == 33


def test_empty_system_counts_one():
    sys = reduced(2, 3)
    fp = ff.reduce_mod_p(sys, int_anchor(3), 5)
    assert fp.m == 0
    assert ff.count_points_bruteforce(fp) == 1
    assert ff.count_points_blockwise(fp) == 1


def test_bruteforce_budget():
    fp = ff.reduce_mod_p(reduced(4, 3), int_anchor(3), 13)
    with pytest.raises(BudgetExceeded):
        ff.count_points_bruteforce(fp, budget=10**4)


def test_n3_count_sanity_window():
    # one quadric in F_p^3: count within p^2 +- 2 p^(3/2)
    sys = reduced(3, 3)
    for seed in range(3):
        fp = ff.reduce_mod_p(sys, int_anchor(3, seed=seed), 7)
        cnt = ff.count_points_bruteforce(fp)
        assert 49 - 2 * 7**1.5 <= cnt <= 49 + 2 * 7**1.5


def _anchor_mod_p(d, p, rng):
    for _ in range(32):
        anc = qc.random_admissible_anchor(d, rng)
        if not (
            all(x % p == 0 for x in anc.z1) or all(x % p == 0 for x in anc.v)
        ):
            return anc
    raise RuntimeError("no admissible anchor found")


def test_blockwise_equals_bruteforce_families():
    rng = np.random.default_rng(23)
    cases = [(3, 2, 13), (3, 3, 7), (4, 2, 5), (4, 3, 3), (5, 2, 3)]
    for n, d, p in cases:
        for fam in ("cycle", "path_closed"):
            sys = reduced(n, d, fam)
            fp = ff.reduce_mod_p(sys, _anchor_mod_p(d, p, rng), p)
            assert ff.count_points_blockwise(fp) == ff.count_points_bruteforce(fp)


def test_blockwise_equals_bruteforce_randomized():
    # randomized oracle equivalence on moderate instances
    rng = np.random.default_rng(29)
    entries = cat.load_catalog()
    done = 0
    while done < 40:
        mid, a = entries[int(rng.integers(0, len(entries)))]
        if a.n < 3:
            continue
        d = int(rng.integers(2, 4))
        p = int(rng.choice([2, 3, 5, 7]))
        if p ** ((a.n - 2) * d) > 10**6:
            continue
        sys = qc.reduce_system(qc.normalize_first_row(a), d)
        try:
            fp = ff.reduce_mod_p(sys, qc.random_admissible_anchor(d, rng), p)
        except AnchorNotAdmissibleModP:
            continue
        assert ff.count_points_blockwise(fp) == ff.count_points_bruteforce(fp), mid
        done += 1


# ----------------------------------------------------------- dimension fits

def test_dimension_n3():
    sys = reduced(3, 3)
    est, report = ff.estimate_dimension(sys, int_anchor(3, seed=5), [5, 7, 11, 13])
    assert est.r_hat == 2 == est.expected
    assert all(ok for (_, _, _, ok) in report.per_prime)


def test_dimension_n4():
    sys = reduced(4, 3)
    est, _ = ff.estimate_dimension(sys, int_anchor(3, seed=6), [3, 5, 7])
    assert est.r_hat == 4 == est.expected


def test_dimension_needs_three_primes():
    with pytest.raises(InsufficientPrimes):
        ff.estimate_dimension(reduced(3, 3), int_anchor(3), [5, 7])


def test_degenerate_counts_detected():
    # a collapsed count (<= 1) at any prime aborts the fit
    sys = reduced(3, 2)
    anc = qc.AnchorPair((1, 2), (2, -1))
    with pytest.raises(DegenerateCounts):
        ff.estimate_dimension(
            sys, anc, [5, 7, 11], counter=lambda fp, budget: 1
        )


def test_vanished_equation_rejected():
    # a q_j that dies mod p (degree 0) makes the Bezout product undefined
    fp = ff.FpSystem(p=5, n=3, d=2, lin=((0, 0),), bil=((0,),), degrees=(0,))
    assert fp.degenerate
    with pytest.raises(DegenerateCounts):
        ff.bezout_bound(5, 2, fp.degrees)


# ---------------------------------------------------------------- Bezout

def test_bezout_bound_value():
    assert ff.bezout_bound(5, 4, (2, 2)) == 2500


def test_bezout_full_space_fails():
    # count = p^m cannot satisfy the bound at r = m-s for s >= 1, p >= 3
    p, m, s = 5, 4, 2
    assert not ff.bezout_certify(p**m, p, m - s, (2,) * s)


def test_bezout_n4_enumerated():
    sys = reduced(4, 3)
    fp = ff.reduce_mod_p(sys, int_anchor(3, seed=8), 5)
    cnt = ff.count_points_bruteforce(fp)
    assert cnt <= 2500
    assert ff.bezout_certify(cnt, 5, 4, fp.degrees)


# ---------------------------------------------------------------- injection

def _box_solutions_x1x2_x3x4(box_m):
    pts = []
    rng = range(-box_m + 1, box_m)
    for x in itertools.product(rng, repeat=4):
        if x[0] * x[1] + x[2] * x[3] == 0:
            pts.append(x)
    return pts


def test_injection_example_m10():
    pts = _box_solutions_x1x2_x3x4(10)
    rep = ff.mod_p_injection_check(pts, 10, 23)
    assert rep.injective and rep.n_points == len(pts)


def test_injection_prime_too_small():
    with pytest.raises(PrimeTooSmall):
        ff.mod_p_injection_check([(0, 0, 0, 0)], 10, 20)


def test_injection_empty():
    rep = ff.mod_p_injection_check([], 5, 11)
    assert rep.injective


def test_injection_with_system_bound():
    # real fiber system with m = 4: N=4, d=2
    sys = reduced(4, 2)
    anc = int_anchor(2, seed=9, bound=3)
    box_m = 6
    p = ff.next_prime_above(2 * box_m)
    pts = []
    rng = range(-box_m + 1, box_m)
    for x in itertools.product(rng, repeat=4):
        mids = {2: x[0:2], 3: x[2:4]}
        vals = sys.eval_fiber(mids, anc.z1, anc.v)
        if all(v == 0 for v in vals.values()):
            pts.append(x)
    fp = ff.reduce_mod_p(sys, anc, p)
    rep = ff.mod_p_injection_check(pts, box_m, p, fp)
    assert rep.injective
    assert rep.on_variety_mod_p
    assert rep.count_bound_ok
