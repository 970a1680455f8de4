import numpy as np
import pytest
from fractions import Fraction

from quadriclab import quadric_core as qc
from quadriclab import catalog as cat
from quadriclab.errors import (
    AnchorNotAdmissible,
    BadEntryValue,
    NotIrreducible,
    NotSkewSymmetric,
    TooSmall,
    ZeroRowOrColumn,
)


def anchors(d, count, seed=0):
    rng = np.random.default_rng(seed)
    return [qc.random_admissible_anchor(d, rng) for _ in range(count)]


# ---------------------------------------------------------------- validation

def test_validate_smallest():
    a = qc.validate_matrix([[0, 1], [-1, 0]])
    assert a.n == 2


def test_validate_rejections():
    with pytest.raises(ZeroRowOrColumn):
        qc.validate_matrix([[0, 0], [0, 0]])
    with pytest.raises(NotSkewSymmetric):
        qc.validate_matrix([[0, 1], [1, 0]])
    with pytest.raises(NotSkewSymmetric):
        qc.validate_matrix([[1, 1], [-1, 0]])
    with pytest.raises(BadEntryValue):
        qc.validate_matrix([[0, 2], [-2, 0]])
    with pytest.raises(TooSmall):
        qc.validate_matrix([[0]])


def test_validate_cycle4():
    a = cat.cycle_matrix(4)
    assert a.entry(1, 2) == a.entry(2, 3) == a.entry(3, 4) == a.entry(4, 1) == 1
    assert qc.is_irreducible(a)


# ---------------------------------------------------------------- blocks

def test_blocks_direct_sum():
    two = [[0, 1], [-1, 0]]
    m = [[0] * 4 for _ in range(4)]
    for i in range(2):
        for j in range(2):
            m[i][j] = two[i][j]
            m[i + 2][j + 2] = two[i][j]
    blocks = qc.irreducible_blocks(qc.validate_matrix(m))
    assert len(blocks) == 2
    assert all(b.n == 2 for b, _ in blocks)
    assert [idx for _, idx in blocks] == [(1, 2), (3, 4)]


def test_blocks_cycle_connected():
    assert len(qc.irreducible_blocks(cat.cycle_matrix(4))) == 1


def test_block_count_bound():
    # any valid matrix decomposes into at most floor(N/2) blocks
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(2, 7))
        m = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                v = int(rng.integers(-1, 2))
                m[i][j] = v
                m[j][i] = -v
        try:
            a = qc.validate_matrix(m)
        except ZeroRowOrColumn:
            continue
        blocks = qc.irreducible_blocks(a)
        assert len(blocks) <= n // 2
        assert sum(b.n for b, _ in blocks) == n
        assert all(b.n >= 2 for b, _ in blocks)


# ---------------------------------------------------------------- normalize

def test_normalize_identity():
    nm = qc.normalize_first_row(qc.validate_matrix([[0, 1], [-1, 0]]))
    assert nm.permutation == (1, 2) and nm.sign_flips == (1, 1)


def test_normalize_sign_flip():
    nm = qc.normalize_first_row(qc.validate_matrix([[0, -1], [1, 0]]))
    assert nm.matrix.entry(1, 2) == 1
    assert nm.sign_flips[0] == -1


def test_normalize_cycle4_single_flip():
    a = cat.cycle_matrix(4)
    assert a.entry(1, 4) == -1
    nm = qc.normalize_first_row(a)
    assert nm.matrix.entry(1, 4) == 1
    assert sum(1 for s in nm.sign_flips if s == -1) == 1


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_normalize_roundtrip(n):
    for name in ("cycle", "path", "path_closed"):
        if name != "cycle" and n < 3:
            continue
        a = cat.family_matrix(name, n)
        nm = qc.normalize_first_row(a)
        assert nm.matrix.entry(1, n) == 1
        assert nm.restore() == a


def test_normalize_roundtrip_catalog():
    for _, a in cat.load_catalog():
        nm = qc.normalize_first_row(a)
        assert nm.matrix.entry(1, a.n) == 1
        assert nm.restore() == a


# ---------------------------------------------------------------- omega

def test_omega_orthogonal_vectors():
    a = qc.validate_matrix([[0, 1], [-1, 0]])
    assert qc.eval_omega(a, [(1, 0), (0, 1)]) == (0, 0)


def test_omega_simple_arithmetic():
    a = qc.validate_matrix([[0, 1], [-1, 0]])
    assert qc.eval_omega(a, [(2,), (3,)]) == (6, -6)


def test_omega_sum_zero_random_exact():
    # 1e5 exact samples per matrix for a handful of matrices
    rng = np.random.default_rng(7)
    for alpha in [cat.cycle_matrix(3), cat.cycle_matrix(5), cat.path_matrix(4)]:
        z = rng.integers(-50, 51, size=(100_000, alpha.n, 3))
        om = qc.eval_omega_batch(alpha, z)
        assert np.all(om.sum(axis=1) == 0)


def test_omega_batch_matches_scalar():
    rng = np.random.default_rng(11)
    alpha = cat.path_closed_matrix(4)
    z = rng.integers(-9, 10, size=(50, 4, 2))
    om = qc.eval_omega_batch(alpha, z)
    for k in range(50):
        blocks = [tuple(int(x) for x in z[k, i]) for i in range(4)]
        assert tuple(om[k]) == qc.eval_omega(alpha, blocks)


# ---------------------------------------------------------------- reduction

def test_reduce_n3_structure():
    # single polynomial q_2 = z2 . (a21 z1 + a23 v + (a22 - a23 a12) z2)
    a = cat.cycle_matrix(3)
    nm = qc.normalize_first_row(a)
    sys = qc.reduce_system(nm, 2)
    na = nm.matrix
    assert sys.linear == {2: (na.entry(2, 1), na.entry(2, 3))}
    assert sys.bilinear == {(2, 2): -na.entry(2, 3) * na.entry(1, 2)}


def test_reduce_n2_empty():
    nm = qc.normalize_first_row(qc.validate_matrix([[0, 1], [-1, 0]]))
    sys = qc.reduce_system(nm, 3)
    assert sys.linear == {} and sys.bilinear == {}
    assert sys.num_eqs == 0 and sys.num_vars == 0


def test_reduce_cycle4_coefficients():
    nm = qc.normalize_first_row(cat.cycle_matrix(4))
    sys = qc.reduce_system(nm, 2)
    na = nm.matrix
    assert sys.bilinear[(2, 3)] == na.entry(2, 3) - na.entry(2, 4) * na.entry(1, 3)
    assert set(sys.linear) == {2, 3}


def substitution_identity_holds(alpha, d, rng, samples=200):
    nm = qc.normalize_first_row(alpha)
    sys = qc.reduce_system(nm, d)
    n = alpha.n
    na = nm.matrix
    for _ in range(samples):
        blocks = [tuple(int(x) for x in rng.integers(-20, 21, size=d)) for _ in range(n)]
        v = tuple(
            sum(na.entry(1, i) * blocks[i - 1][t] for i in range(1, n + 1))
            for t in range(d)
        )
        om = qc.eval_omega(na, blocks)
        mids = {j: blocks[j - 1] for j in range(2, n)}
        qvals = sys.eval_fiber(mids, blocks[0], v)
        for j in range(2, n):
            if qvals[j] != om[j - 1]:
                return False
    return True


@pytest.mark.parametrize("n,d", [(3, 2), (4, 3), (5, 2), (6, 3)])
def test_substitution_identity(n, d):
    rng = np.random.default_rng(n * 10 + d)
    assert substitution_identity_holds(cat.cycle_matrix(n), d, rng)
    if n >= 3:
        assert substitution_identity_holds(cat.path_matrix(n), d, rng)


def test_substitution_identity_catalog():
    rng = np.random.default_rng(5)
    for _, a in cat.load_catalog():
        if a.n <= 4:
            assert substitution_identity_holds(a, 2, rng, samples=40)


# ---------------------------------------------------------------- layers

def test_layers_n3():
    nm = qc.normalize_first_row(cat.cycle_matrix(3))
    part = qc.build_layers(nm)
    assert part.layers == (frozenset({1, 3}), frozenset({2}))
    assert part.depth == 1


def test_layers_cycle4():
    nm = qc.normalize_first_row(cat.cycle_matrix(4))
    part = qc.build_layers(nm)
    assert part.layers[0] == frozenset({1, 4})
    assert part.layers[1] == frozenset({2, 3})


def test_layers_path_after_normalization():
    # open path has a[1][N] = 0; normalization permutes before layering
    nm = qc.normalize_first_row(cat.path_matrix(4))
    part = qc.build_layers(nm)
    assert part.layers[0] == frozenset({1, 4})
    assert 1 <= part.depth <= 2


def test_layers_invariants_catalog():
    for _, a in cat.load_catalog():
        if a.n < 3:
            continue
        nm = qc.normalize_first_row(a)
        part = qc.build_layers(nm)
        na = nm.matrix
        assert part.layers[0] == frozenset({1, a.n})
        assert 1 <= part.depth <= a.n - 2
        for i in range(1, part.depth + 1):
            for j in part.layers[i]:
                assert any(na.entry(j, l) != 0 for l in part.layers[i - 1])
                for ii in range(0, i - 1):
                    assert all(na.entry(j, l) == 0 for l in part.layers[ii])


# ---------------------------------------------------------------- rank

def test_rank_n3():
    nm = qc.normalize_first_row(cat.cycle_matrix(3))
    sys = qc.reduce_system(nm, 3)
    for anc in anchors(3, 5):
        assert qc.linear_independence_rank(sys, anc) == 1


def test_rank_cycle5():
    nm = qc.normalize_first_row(cat.cycle_matrix(5))
    sys = qc.reduce_system(nm, 3)
    for anc in anchors(3, 10, seed=2):
        assert qc.linear_independence_rank(sys, anc) == 3


def test_rank_blockwise_direct_sum():
    # reducible matrix handled blockwise: per-block ranks N_i - 2
    two = cat.cycle_matrix(2)
    m = [[0] * 6 for _ in range(6)]
    c3 = cat.cycle_matrix(3)
    for i in range(3):
        for j in range(3):
            m[i][j] = c3.entries[i][j]
    for i in range(2):
        for j in range(2):
            m[3 + i][3 + j] = two.entries[i][j]
    m[5][5] = 0
    # pad to valid 6x6: last block is 3-cycle again
    m = [[0] * 6 for _ in range(6)]
    for i in range(3):
        for j in range(3):
            m[i][j] = c3.entries[i][j]
            m[3 + i][3 + j] = c3.entries[i][j]
    a = qc.validate_matrix(m)
    blocks = qc.irreducible_blocks(a)
    assert len(blocks) == 2
    for b, _ in blocks:
        nm = qc.normalize_first_row(b)
        sys = qc.reduce_system(nm, 2)
        for anc in anchors(2, 3, seed=b.n):
            assert qc.linear_independence_rank(sys, anc) == b.n - 2


def test_rank_rejects_bad_anchor():
    nm = qc.normalize_first_row(cat.cycle_matrix(3))
    sys = qc.reduce_system(nm, 3)
    with pytest.raises(AnchorNotAdmissible):
        qc.AnchorPair((1, 0, 0), (1, 0, 0))  # z1 . v != 0


# ---------------------------------------------------------------- reducibility

def test_classify_xy():
    # q = x*y in 2 variables -> bordered rank 2
    two_a = ((0, 1), (1, 0))
    assert qc.classify_quadratic(two_a, (0, 0)) == "product_of_affine_linear"


def test_classify_x1y1_x2y2():
    two_a = (
        (0, 0, 1, 0),
        (0, 0, 0, 1),
        (1, 0, 0, 0),
        (0, 1, 0, 0),
    )
    assert qc.classify_quadratic(two_a, (0, 0, 0, 0)) == "irreducible_quadric"


def test_classify_zero_and_linear():
    assert qc.classify_quadratic(((0,),), (0,)) == "zero"
    assert qc.classify_quadratic(((0,),), (3,)) == "linear"


def test_fiber_polynomials_never_split():
    # Lemma-level invariant: irreducible matrices yield fiber polynomials
    # that are never products of affine-linear factors (d >= 2)
    rng = np.random.default_rng(13)
    for _, a in cat.load_catalog():
        if a.n < 3:
            continue
        nm = qc.normalize_first_row(a)
        for d in (2, 3):
            sys = qc.reduce_system(nm, d)
            for anc in [qc.random_admissible_anchor(d, rng) for _ in range(3)]:
                for j in sys.middle:
                    cls = qc.reducibility_test(qc.fiber_polynomial(sys, j, anc))
                    assert cls in ("linear", "irreducible_quadric"), (a, j, cls)


# ---------------------------------------------------------------- certificates

def test_certificates_n3_vacuous():
    nm = qc.normalize_first_row(cat.cycle_matrix(3))
    sys = qc.reduce_system(nm, 2)
    anc = anchors(2, 1)[0]
    assert qc.all_certificates(sys, anc) == []


def test_certificate_cycle4_explicit_anchor():
    nm = qc.normalize_first_row(cat.cycle_matrix(4))
    sys = qc.reduce_system(nm, 2)
    anc = qc.AnchorPair((1, 0), (0, 1))
    cert = qc.proper_intersection_certificates(sys, anc, 2)
    assert cert.verified
    assert cert.evals_in[3] == 0 and cert.evals_in[2] != 0
    assert cert.evals_out[3] != 0 and cert.evals_out[2] == 0


def certificate_suite(alpha, d, anchor):
    nm = qc.normalize_first_row(alpha)
    sys = qc.reduce_system(nm, d)
    for cert in qc.all_certificates(sys, anchor):
        n = cert.n
        # witness_in: on quadric n+1, off the intersection of the first n
        assert cert.evals_in[n + 1] == 0
        assert any(cert.evals_in[j] != 0 for j in range(2, n + 1))
        # witness_out: on every quadric except n+1
        assert all(v == 0 for j, v in cert.evals_out.items() if j != n + 1)
        assert cert.evals_out[n + 1] != 0


def test_certificates_catalog():
    rng = np.random.default_rng(17)
    for _, a in cat.load_catalog():
        if a.n < 4:
            continue
        for d in (2, 3):
            certificate_suite(a, d, qc.random_admissible_anchor(d, rng))


def test_certificates_deep_chain():
    # long cycles have middle indices several layers away from {1, N}
    rng = np.random.default_rng(19)
    for n in (6, 7, 8):
        a = cat.cycle_matrix(n)
        nm = qc.normalize_first_row(a)
        part = qc.build_layers(nm)
        assert part.depth >= 2
        certificate_suite(a, 2, qc.random_admissible_anchor(2, rng))


# ---------------------------------------------------------------- catalog

def test_catalog_counts():
    from quadriclab.catalog import enumerate_irreducible

    assert len(enumerate_irreducible(2)) == 1
    assert len(enumerate_irreducible(3)) == 2
    assert len(enumerate_irreducible(4)) == 9


def test_catalog_file_matches_generator():
    loaded = cat.load_catalog()
    by_n = {}
    for mid, a in loaded:
        by_n.setdefault(a.n, []).append(a)
    assert sorted(by_n) == [2, 3, 4, 5]
    for n in (2, 3, 4):
        assert by_n[n] == cat.enumerate_irreducible(n)
    assert len(by_n[5]) == 44


def test_catalog_members_valid_irreducible():
    for mid, a in cat.load_catalog():
        assert qc.is_irreducible(a)


def test_catalog_no_duplicates():
    loaded = cat.load_catalog()
    n4 = [a for _, a in loaded if a.n == 4]
    forms = {cat.canonical_form(a) for a in n4}
    assert len(forms) == len(n4)


def test_family_inequivalence_even_cycle():
    assert not cat.equivalent(cat.cycle_matrix(4), cat.path_closed_matrix(4))
    assert cat.equivalent(cat.cycle_matrix(3), cat.path_closed_matrix(3))
