"""Catalog of admissible interaction matrices.

Ships a versioned list of all irreducible matrices up to N=5, deduplicated
under simultaneous index permutation and per-index sign conjugation
(a -> D P a P^T D), plus named families (cycles and closed paths) for
arbitrary N.  Enumeration is deterministic, so ids are stable.

Catalog file format (line oriented):
    # quadriclab-catalog v1
    N=<n> id=<string>
    <N rows of space-separated -1/0/1>
"""

from __future__ import annotations

import itertools
from importlib import resources

import numpy as np

from .quadric_core import InteractionMatrix, is_irreducible, validate_matrix

CATALOG_VERSION = "quadriclab-catalog v1"
DEFAULT_CATALOG = "catalog_upto5.txt"


# ---------------------------------------------------------------------------
# named families
# ---------------------------------------------------------------------------

def cycle_matrix(n: int) -> InteractionMatrix:
    """Directed n-cycle: a[i][i+1] = 1 cyclically (a[n][1] = 1)."""
    m = [[0] * n for _ in range(n)]
    for i in range(n):
        j = (i + 1) % n
        m[i][j] = 1
        m[j][i] = -1
    return validate_matrix(m)


def path_matrix(n: int) -> InteractionMatrix:
    """Open path 1-2-...-n with a[i][i+1] = 1."""
    if n < 3:
        raise ValueError("path family needs N >= 3 (N=2 path equals the 2-cycle)")
    m = [[0] * n for _ in range(n)]
    for i in range(n - 1):
        m[i][i + 1] = 1
        m[i + 1][i] = -1
    return validate_matrix(m)


def path_closed_matrix(n: int) -> InteractionMatrix:
    """Path 1-...-n plus the closing edge with a[1][n] = +1.

    Differs from the cycle by the sign of the closing edge; for even n the
    two are inequivalent (the product of entries around the loop is a
    conjugation invariant up to orientation).
    """
    if n < 3:
        raise ValueError("closed path needs N >= 3")
    m = [[0] * n for _ in range(n)]
    for i in range(n - 1):
        m[i][i + 1] = 1
        m[i + 1][i] = -1
    m[0][n - 1] = 1
    m[n - 1][0] = -1
    return validate_matrix(m)


FAMILIES = {
    "cycle": cycle_matrix,
    "path": path_matrix,
    "path_closed": path_closed_matrix,
}


def family_matrix(name: str, n: int) -> InteractionMatrix:
    if name not in FAMILIES:
        raise KeyError(f"unknown family {name!r}; have {sorted(FAMILIES)}")
    return FAMILIES[name](n)


# ---------------------------------------------------------------------------
# canonical forms and enumeration
# ---------------------------------------------------------------------------

def _transforms(n: int):
    """All (perm, signs) with signs[0] fixed to +1 (global flip is trivial)."""
    perms = list(itertools.permutations(range(n)))
    signs = [(1,) + s for s in itertools.product((1, -1), repeat=n - 1)]
    return perms, signs


def _orbit_flats(a: np.ndarray) -> set:
    """Flattened tuples of every conjugate D P a P^T D of a."""
    n = a.shape[0]
    perms, signs = _transforms(n)
    sign_vecs = np.array(signs, dtype=np.int64)  # (S, n)
    orbit = set()
    for p in perms:
        ap = a[np.ix_(p, p)]
        cand = sign_vecs[:, :, None] * ap[None, :, :] * sign_vecs[:, None, :]
        orbit.update(map(tuple, cand.reshape(len(signs), -1).tolist()))
    return orbit


def canonical_form(alpha: InteractionMatrix) -> tuple:
    """Lexicographically minimal flattening over the conjugation group."""
    return min(_orbit_flats(alpha.as_array()))


def equivalent(a: InteractionMatrix, b: InteractionMatrix) -> bool:
    return a.n == b.n and canonical_form(a) == canonical_form(b)


def enumerate_irreducible(n: int) -> list[InteractionMatrix]:
    """One representative per equivalence class of irreducible matrices.

    Candidates are visited in lexicographic upper-triangle order; the first
    member of each orbit is kept, so ids are deterministic.
    """
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    seen: set[tuple] = set()
    out = []
    for combo in itertools.product((-1, 0, 1), repeat=len(pairs)):
        m = [[0] * n for _ in range(n)]
        for (i, j), v in zip(pairs, combo):
            m[i][j] = v
            m[j][i] = -v
        flat = tuple(x for row in m for x in row)
        if flat in seen:
            continue
        if any(all(x == 0 for x in row) for row in m):
            continue
        alpha = InteractionMatrix(n, tuple(tuple(r) for r in m))
        if not is_irreducible(alpha):
            continue
        seen.update(_orbit_flats(alpha.as_array()))
        out.append(alpha)
    return out


# ---------------------------------------------------------------------------
# catalog I/O
# ---------------------------------------------------------------------------

def write_catalog(entries: list[tuple[str, InteractionMatrix]], path) -> None:
    lines = [f"# {CATALOG_VERSION}"]
    for mid, alpha in entries:
        lines.append(f"N={alpha.n} id={mid}")
        for row in alpha.entries:
            lines.append(" ".join(str(x) for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_catalog(text: str) -> list[tuple[str, InteractionMatrix]]:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing catalog version header")
    if lines[0].lstrip("# ") != CATALOG_VERSION:
        raise ValueError(f"unsupported catalog version: {lines[0]!r}")
    out = []
    k = 1
    while k < len(lines):
        head = lines[k]
        if not head.startswith("N="):
            raise ValueError(f"bad record header: {head!r}")
        fields = dict(part.split("=", 1) for part in head.split())
        n = int(fields["N"])
        rows = [[int(x) for x in lines[k + 1 + r].split()] for r in range(n)]
        out.append((fields["id"], validate_matrix(rows)))
        k += 1 + n
    return out


def load_catalog(path=None) -> list[tuple[str, InteractionMatrix]]:
    if path is not None:
        with open(path) as fh:
            return parse_catalog(fh.read())
    text = resources.files("quadriclab.data").joinpath(DEFAULT_CATALOG).read_text()
    return parse_catalog(text)


def build_default_entries(n_max: int = 5) -> list[tuple[str, InteractionMatrix]]:
    entries = []
    for n in range(2, n_max + 1):
        for k, alpha in enumerate(enumerate_irreducible(n)):
            entries.append((f"n{n}_{k:03d}", alpha))
    return entries


def matrices_for_request(spec: str, n: int | None = None):
    """Resolve a CLI-style catalog request into (id, matrix) pairs.

    ``spec`` is "all" (whole shipped catalog, optionally filtered by N),
    a family name ("cycle", "path", "path_closed"; needs N), or a catalog id.
    """
    if spec in FAMILIES:
        if n is None:
            raise ValueError(f"family {spec!r} needs --N")
        return [(f"{spec}{n}", family_matrix(spec, n))]
    cat = load_catalog()
    if spec == "all":
        return [(mid, a) for mid, a in cat if n is None or a.n == n]
    hits = [(mid, a) for mid, a in cat if mid == spec]
    if not hits:
        raise KeyError(f"no catalog entry {spec!r}")
    return hits
