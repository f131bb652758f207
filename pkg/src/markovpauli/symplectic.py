"""Symplectic linear algebra over prime fields F_d.

Vectors of F_d^{2n} use the interleaved coordinate order
(u1, v1, ..., un, vn).  Position i of a vector corresponds to the
generalized Pauli error X^{u_i} Z^{v_i} on subsystem i, so a vector maps
to a length-n word over the d^2-letter error alphabet via
``symbol_sequence``.  The pairing of interest is the symplectic form

    <x, y> = sum_i (u_i v'_i - v_i u'_i)  mod d,

and a stabilizer code corresponds to a subspace L with L contained in
its dual L^perp.

Subspaces are stored in reduced row-echelon form, so equal subspaces
have identical (and hashable) basis tuples.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ResourceLimitError

ENUMERATION_GUARD = 2**20  # largest d^(2n) we are willing to exhaust

_SMALL_PRIMES = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31}


def is_prime(d: int) -> bool:
    if d in _SMALL_PRIMES:
        return True
    if d < 2:
        return False
    return all(d % p for p in range(2, int(d**0.5) + 1))


def check_prime(d: int) -> None:
    if not is_prime(d):
        raise ValueError(f"field order d={d} is not prime")


def symbol_index(i: int, j: int, d: int) -> int:
    """Index of the error X^i Z^j in the alphabet ordering.

    The X power varies fastest, so for d=2 the alphabet reads
    I, X, Z, XZ (indices 0, 1, 2, 3).
    """
    return i + d * j


def symbol_pair(s: int, d: int) -> tuple[int, int]:
    """Inverse of ``symbol_index``: symbol -> (X power, Z power)."""
    return s % d, s // d


@dataclass(frozen=True)
class SympVector:
    """Element of F_d^{2n} in interleaved (u1, v1, ..., un, vn) order."""

    coords: tuple[int, ...]
    d: int

    def __post_init__(self):
        check_prime(self.d)
        if len(self.coords) == 0 or len(self.coords) % 2:
            raise ValueError("coordinate length must be a positive even number")
        if any(not 0 <= c < self.d for c in self.coords):
            object.__setattr__(self, "coords",
                               tuple(c % self.d for c in self.coords))

    @property
    def n(self) -> int:
        return len(self.coords) // 2

    def __len__(self) -> int:
        return len(self.coords)

    def symbols(self) -> tuple[int, ...]:
        return symbol_sequence(self.coords, self.d)

    def index(self) -> int:
        return vector_index(self.coords, self.d)


def vector_index(coords, d: int) -> int:
    """Pack coordinates into an integer, big-endian in the base-d digits.

    Numeric order of indices equals lexicographic order of coordinate
    tuples, which is what the coset tie-break relies on.
    """
    idx = 0
    for c in coords:
        idx = idx * d + c
    return idx


def index_to_coords(idx: int, n: int, d: int) -> tuple[int, ...]:
    coords = [0] * (2 * n)
    for j in range(2 * n - 1, -1, -1):
        idx, coords[j] = divmod(idx, d)
    return tuple(coords)


def symbol_sequence(coords, d: int) -> tuple[int, ...]:
    """Map an interleaved vector to its error-alphabet word."""
    return tuple(coords[2 * i] + d * coords[2 * i + 1]
                 for i in range(len(coords) // 2))


def _check_pair(x: SympVector, y: SympVector) -> None:
    if x.d != y.d:
        raise ValueError(f"modulus mismatch: {x.d} vs {y.d}")
    if len(x.coords) != len(y.coords):
        raise ValueError(
            f"dimension mismatch: {len(x.coords)} vs {len(y.coords)}")


def symplectic_form(x: SympVector, y: SympVector) -> int:
    """<x, y> = sum_i (u_i v'_i - v_i u'_i)  mod d."""
    _check_pair(x, y)
    a, b, d = x.coords, y.coords, x.d
    acc = 0
    for i in range(0, len(a), 2):
        acc += a[i] * b[i + 1] - a[i + 1] * b[i]
    return acc % d


def twist(coords, d: int) -> tuple[int, ...]:
    """Return w with <x, y> = x . w, i.e. w = (v'_1, -u'_1, v'_2, ...)."""
    out = []
    for i in range(0, len(coords), 2):
        out.append(coords[i + 1])
        out.append((-coords[i]) % d)
    return tuple(out)


# ---------------------------------------------------------------------------
# dense GF(d) row reduction on small matrices (lists of lists of ints)

def rref(rows, d: int):
    """Reduced row-echelon form over F_d.

    Returns (reduced nonzero rows, pivot column list).  Canonical: two
    row sets spanning the same space reduce to identical rows.
    """
    mat = [list(r) for r in rows]
    nrows = len(mat)
    ncols = len(mat[0]) if nrows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, nrows) if mat[i][c] % d), None)
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        inv = pow(mat[r][c] % d, d - 2, d)
        mat[r] = [(v * inv) % d for v in mat[r]]
        for i in range(nrows):
            if i != r and mat[i][c] % d:
                f = mat[i][c] % d
                mat[i] = [(a - f * b) % d for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return [tuple(row) for row in mat[:r]], pivots


def nullspace(rows, width: int, d: int):
    """Basis (RREF rows) of {x : M x = 0} for the row matrix M over F_d."""
    reduced, pivots = rref(rows, d) if rows else ([], [])
    free = [c for c in range(width) if c not in pivots]
    basis = []
    for fc in free:
        vec = [0] * width
        vec[fc] = 1
        for r, pc in enumerate(pivots):
            vec[pc] = (-reduced[r][fc]) % d
        basis.append(vec)
    return rref(basis, d)[0] if basis else []


@dataclass(frozen=True)
class Subspace:
    """Subspace of F_d^{2n}, basis in canonical reduced row-echelon form."""

    basis: tuple[tuple[int, ...], ...]
    n: int
    d: int

    @classmethod
    def from_vectors(cls, vectors, n: int, d: int) -> "Subspace":
        check_prime(d)
        rows = []
        for v in vectors:
            coords = v.coords if isinstance(v, SympVector) else tuple(v)
            if len(coords) != 2 * n:
                raise ValueError(f"vector length {len(coords)} != 2n = {2 * n}")
            rows.append([c % d for c in coords])
        reduced, _ = rref(rows, d) if rows else ([], [])
        return cls(tuple(reduced), n, d)

    @classmethod
    def zero(cls, n: int, d: int) -> "Subspace":
        check_prime(d)
        return cls((), n, d)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def basis_vectors(self) -> list[SympVector]:
        return [SympVector(b, self.d) for b in self.basis]

    def contains(self, v) -> bool:
        coords = list(v.coords if isinstance(v, SympVector) else v)
        d = self.d
        for row in self.basis:
            lead = next(c for c in range(len(row)) if row[c])
            if coords[lead]:
                f = coords[lead]
                coords = [(a - f * b) % d for a, b in zip(coords, row)]
        return not any(coords)

    def vectors(self):
        """Iterate over all d^dim elements (as coordinate tuples)."""
        width = 2 * self.n
        for coeffs in itertools.product(range(self.d), repeat=self.dim):
            vec = [0] * width
            for c, row in zip(coeffs, self.basis):
                if c:
                    for j in range(width):
                        vec[j] = (vec[j] + c * row[j]) % self.d
            yield tuple(vec)

    def dual(self) -> "Subspace":
        """L^perp = {x : <x, y> = 0 for all y in L}."""
        width = 2 * self.n
        twisted = [twist(b, self.d) for b in self.basis]
        return Subspace(tuple(nullspace(twisted, width, self.d)), self.n, self.d)

    def is_self_orthogonal(self) -> bool:
        vecs = self.basis_vectors()
        return all(symplectic_form(x, y) == 0
                   for i, x in enumerate(vecs) for y in vecs[i:])

    def syndrome(self, v) -> tuple[int, ...]:
        """Symplectic products of v against the canonical basis of L.

        Constant on cosets of L^perp; the zero tuple picks out L^perp.
        """
        coords = v.coords if isinstance(v, SympVector) else tuple(v)
        if len(coords) != 2 * self.n:
            raise ValueError("dimension mismatch")
        d = self.d
        out = []
        for row in self.basis:
            acc = 0
            for i in range(0, len(coords), 2):
                acc += coords[i] * row[i + 1] - coords[i + 1] * row[i]
            out.append(acc % d)
        return tuple(out)


def dual(L: Subspace) -> Subspace:
    return L.dual()


def is_self_orthogonal(L: Subspace) -> bool:
    return L.is_self_orthogonal()


def syndrome(v, L: Subspace) -> tuple[int, ...]:
    return L.syndrome(v)


def _check_nk(n: int, k: int) -> None:
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")


def sample_isotropic(n: int, k: int, d: int, rng) -> Subspace:
    """Draw a uniform self-orthogonal subspace of dimension n-k.

    Builds an ordered basis, at each step picking a uniform vector from
    (span so far)^perp minus the span.  The number of admissible choices
    at each step does not depend on the history, and each subspace is
    generated by equally many ordered bases, so the law over subspaces
    is uniform; tests check this against the exhaustive enumeration.
    """
    check_prime(d)
    _check_nk(n, k)
    width = 2 * n
    span: list[tuple[int, ...]] = []  # RREF rows of the span so far
    chosen = []
    for _ in range(n - k):
        perp = nullspace([twist(b, d) for b in span], width, d)
        while True:
            coeffs = rng.integers(0, d, size=len(perp))
            vec = [0] * width
            for c, row in zip(coeffs, perp):
                if c:
                    for j in range(width):
                        vec[j] = (vec[j] + int(c) * row[j]) % d
            reduced = list(vec)
            for row in span:
                lead = next(c for c in range(width) if row[c])
                if reduced[lead]:
                    f = reduced[lead]
                    reduced = [(a - f * b) % d for a, b in zip(reduced, row)]
            if any(reduced):
                break
        chosen.append(tuple(vec))
        span, _ = rref(span + [list(vec)], d)
    return Subspace.from_vectors(chosen, n, d)


def enumerate_isotropic(n: int, k: int, d: int) -> list[Subspace]:
    """All self-orthogonal subspaces of dimension n-k, canonical order.

    Exhaustive oracle for the sampler and for the dual-counting
    identity; guarded by ``ENUMERATION_GUARD`` on d^(2n).
    """
    check_prime(d)
    _check_nk(n, k)
    if d ** (2 * n) > ENUMERATION_GUARD:
        raise ResourceLimitError(
            f"d^(2n) = {d ** (2 * n)} exceeds the enumeration guard")
    layer = {Subspace.zero(n, d)}
    for _ in range(n - k):
        nxt = set()
        for S in layer:
            for vec in S.dual().vectors():
                if S.contains(vec):
                    continue
                nxt.add(Subspace.from_vectors(list(S.basis) + [vec], n, d))
        layer = nxt
    return sorted(layer, key=lambda s: s.basis)
