"""Exact linear algebra over the chain rings Z/p^f and Z/p^(2f), p an odd prime.

Matrices are small dense numpy int64 arrays with entries canonically reduced
to [0, modulus).  Submodules are represented by their Howell canonical form,
which is unique per row span, so submodule equality is array equality.  All
operations are pure; every value is immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

ANTISYMMETRIC = "antisymmetric"
SYMMETRIC = "symmetric"
NO_SYMMETRY = "none"

# Exhaustive search guards for the isotropic-submodule oracle.
ORACLE_MAX_DIM = 6
ORACLE_MAX_MOD = 9


def _is_odd_prime(n: int) -> bool:
    if n < 3 or n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class Modulus:
    """The modulus pair q = p^f (and q2 = p^2f) used throughout, p odd."""

    p: int
    f: int

    def __post_init__(self):
        if not _is_odd_prime(self.p):
            raise ValueError(f"p must be an odd prime, got {self.p}")
        if self.f < 1:
            raise ValueError(f"f must be a positive integer, got {self.f}")

    @property
    def q(self) -> int:
        return self.p ** self.f

    @property
    def q2(self) -> int:
        return self.p ** (2 * self.f)

    def __repr__(self):
        return f"Modulus(p={self.p}, f={self.f})"


@lru_cache(maxsize=None)
def _prime_power_base(m: int) -> tuple[int, int]:
    """Decompose m = p^e; raises if m is not a prime power."""
    if m < 2:
        raise ValueError(f"modulus must be >= 2, got {m}")
    n = m
    for p in range(2, m + 1):
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            if n != 1:
                raise ValueError(f"modulus {m} is not a prime power")
            return p, e
    raise ValueError(f"modulus {m} is not a prime power")


def _valuation(x: int, p: int, cap: int) -> int:
    if x == 0:
        return cap
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


class ZqMatrix:
    """Integer matrix with entries reduced mod `modulus` (a prime power)."""

    __slots__ = ("modulus", "array")

    def __init__(self, entries, modulus: int):
        a = np.asarray(entries, dtype=np.int64)
        if a.ndim == 1:
            a = a.reshape(1, -1)
        if a.ndim != 2:
            raise ValueError("matrix entries must form a 2-dimensional array")
        self.modulus = int(modulus)
        _prime_power_base(self.modulus)
        arr = np.mod(a, self.modulus)
        arr.setflags(write=False)
        self.array = arr

    @classmethod
    def identity(cls, n: int, modulus: int) -> "ZqMatrix":
        return cls(np.eye(n, dtype=np.int64), modulus)

    @classmethod
    def zeros(cls, rows: int, cols: int, modulus: int) -> "ZqMatrix":
        return cls(np.zeros((rows, cols), dtype=np.int64), modulus)

    @property
    def rows(self) -> int:
        return self.array.shape[0]

    @property
    def cols(self) -> int:
        return self.array.shape[1]

    def __eq__(self, other):
        return (
            isinstance(other, ZqMatrix)
            and self.modulus == other.modulus
            and self.array.shape == other.array.shape
            and np.array_equal(self.array, other.array)
        )

    def __hash__(self):
        return hash((self.modulus, self.array.shape, self.array.tobytes()))

    def __repr__(self):
        return f"ZqMatrix({self.array.tolist()}, mod {self.modulus})"

    def to_json(self) -> dict:
        return {
            "modulus": self.modulus,
            "rows": self.rows,
            "cols": self.cols,
            "entries": [int(x) for x in self.array.reshape(-1)],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ZqMatrix":
        rows, cols = int(data["rows"]), int(data["cols"])
        entries = np.array(data["entries"], dtype=np.int64).reshape(rows, cols)
        return cls(entries, int(data["modulus"]))


def _howell_rows(rows_in, ncols: int, m: int) -> np.ndarray:
    """Howell canonical form of the given rows, as a (k x ncols) array.

    Pivot columns increase left to right, each pivot is normalized to a power
    of p, entries above a pivot are reduced below it, and annihilator rows are
    folded back in so the span property holds: any span element supported on
    the last columns is a combination of the rows supported there.
    """
    p, e = _prime_power_base(m)
    work = [np.mod(np.asarray(r, dtype=np.int64), m) for r in rows_in]
    done: list[np.ndarray] = []
    for c in range(ncols):
        best = None
        for idx, row in enumerate(work):
            x = int(row[c])
            if x == 0:
                continue
            v = _valuation(x, p, e)
            if best is None or v < best[0]:
                best = (v, idx)
                if v == 0:
                    break
        if best is None:
            continue
        v, idx = best
        piv = work.pop(idx)
        unit = int(piv[c]) // p ** v
        piv = (piv * pow(unit, -1, m)) % m  # pivot entry becomes p^v
        pk = p ** v
        for j, row in enumerate(work):
            x = int(row[c])
            if x:
                work[j] = (row - (x // pk) * piv) % m
        for j, row in enumerate(done):
            x = int(row[c])
            if x >= pk:
                done[j] = (row - (x // pk) * piv) % m
        if v > 0:
            ann = (piv * (m // pk)) % m  # keeps the span property on later columns
            if ann.any():
                work.append(ann)
        done.append(piv)
    if not done:
        return np.zeros((0, ncols), dtype=np.int64)
    return np.array(done, dtype=np.int64)


def howell_form(mat: ZqMatrix) -> ZqMatrix:
    """Canonical row form: equal row spans give identical results."""
    return ZqMatrix(_howell_rows(mat.array, mat.cols, mat.modulus), mat.modulus)


class Submodule:
    """Row span of a matrix over Z/m, held in Howell canonical form."""

    __slots__ = ("modulus", "ambient", "basis", "_pivots")

    def __init__(self, rows, ambient: int, modulus: int):
        self.modulus = int(modulus)
        self.ambient = int(ambient)
        arr = np.asarray(rows, dtype=np.int64)
        if arr.size == 0:
            arr = np.zeros((0, self.ambient), dtype=np.int64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.shape[1] != self.ambient:
            raise ValueError(
                f"rows have length {arr.shape[1]}, ambient rank is {self.ambient}"
            )
        basis = _howell_rows(arr, self.ambient, self.modulus)
        basis.setflags(write=False)
        self.basis = basis
        self._pivots = tuple(
            (int(np.nonzero(row)[0][0]), int(row[np.nonzero(row)[0][0]]))
            for row in self.basis
        )

    @classmethod
    def zero(cls, ambient: int, modulus: int) -> "Submodule":
        return cls(np.zeros((0, ambient), dtype=np.int64), ambient, modulus)

    @classmethod
    def full(cls, ambient: int, modulus: int) -> "Submodule":
        return cls(np.eye(ambient, dtype=np.int64), ambient, modulus)

    @property
    def ngens(self) -> int:
        """Number of Howell basis rows (can exceed the free rank)."""
        return self.basis.shape[0]

    @property
    def is_free(self) -> bool:
        """True iff the submodule is a free Z/m-module.

        A free submodule of (Z/m)^d is automatically a direct summand, and
        its size determines the rank; the test compares log_p of the size
        (read off the Howell pivots) with e times the mod-p rank of the
        basis.  Unit pivots are sufficient but not necessary: the span of
        (3,6,0,2) over Z/9 is free on one generator, yet its Howell form
        pivots on the 3 in the first column.
        """
        p, e = _prime_power_base(self.modulus)
        size_log = sum(e - _valuation(val, p, e) for _, val in self._pivots)
        return size_log == e * _rank_mod_p(self.basis, p)

    @property
    def rank(self) -> int:
        """Free rank; raises for non-free submodules."""
        if not self.is_free:
            raise ValueError("rank is only defined for free submodules")
        p, _ = _prime_power_base(self.modulus)
        return _rank_mod_p(self.basis, p)

    def reduce(self, vec) -> np.ndarray:
        """Residue of `vec` after clearing every pivot; zero iff contained."""
        v = np.mod(np.asarray(vec, dtype=np.int64), self.modulus)
        if v.shape != (self.ambient,):
            raise ValueError("vector has wrong length")
        for row, (c, pk) in zip(self.basis, self._pivots):
            x = int(v[c])
            if x:
                v = (v - (x // pk) * row) % self.modulus
        return v

    def contains(self, vec) -> bool:
        return not self.reduce(vec).any()

    def contains_submodule(self, other: "Submodule") -> bool:
        self._check_compatible(other)
        return all(self.contains(row) for row in other.basis)

    def __le__(self, other: "Submodule") -> bool:
        return other.contains_submodule(self)

    def _check_compatible(self, other: "Submodule"):
        if self.ambient != other.ambient or self.modulus != other.modulus:
            raise ValueError("submodules live in different ambient modules")

    def sum(self, other: "Submodule") -> "Submodule":
        self._check_compatible(other)
        return Submodule(
            np.vstack([self.basis, other.basis]), self.ambient, self.modulus
        )

    def intersect(self, other: "Submodule") -> "Submodule":
        self._check_compatible(other)
        if self.ngens == 0 or other.ngens == 0:
            return Submodule.zero(self.ambient, self.modulus)
        stacked = np.vstack([self.basis, other.basis])
        rel = kernel(ZqMatrix(stacked.T, self.modulus))
        rows = [
            (x[: self.ngens] @ self.basis) % self.modulus for x in rel.basis
        ]
        return Submodule(np.array(rows or np.zeros((0, self.ambient))), self.ambient, self.modulus)

    def image_under(self, matrix) -> "Submodule":
        """Span of basis @ matrix, for a right action on row vectors."""
        mat = matrix.array if isinstance(matrix, ZqMatrix) else np.asarray(matrix)
        if self.ngens == 0:
            return Submodule.zero(mat.shape[1], self.modulus)
        return Submodule((self.basis @ mat) % self.modulus, mat.shape[1], self.modulus)

    def vectors(self) -> list[np.ndarray]:
        """All elements of the span (m^rank combinations, deduplicated)."""
        out = {}
        coeffs = [np.zeros(self.ambient, dtype=np.int64)]
        for row in self.basis:
            coeffs = [
                (v + k * row) % self.modulus
                for v in coeffs
                for k in range(self.modulus)
            ]
        for v in coeffs:
            out[v.tobytes()] = v
        return list(out.values())

    def __eq__(self, other):
        return (
            isinstance(other, Submodule)
            and self.modulus == other.modulus
            and self.ambient == other.ambient
            and self.basis.shape == other.basis.shape
            and np.array_equal(self.basis, other.basis)
        )

    def __hash__(self):
        return hash((self.modulus, self.ambient, self.basis.tobytes()))

    def __repr__(self):
        return (
            f"Submodule({self.ngens} generators in (Z/{self.modulus})^{self.ambient}, "
            f"basis {self.basis.tolist()})"
        )

    def to_json(self) -> dict:
        return {
            "modulus": self.modulus,
            "rows": self.ngens,
            "cols": self.ambient,
            "entries": [int(x) for x in self.basis.reshape(-1)],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Submodule":
        mat = ZqMatrix.from_json(data)
        return cls(mat.array, mat.cols, mat.modulus)


def kernel(mat: ZqMatrix) -> Submodule:
    """The row-vector kernel {v : v . mat^T = 0} over Z/m."""
    a = mat.array
    r, c = a.shape
    aug = np.hstack([a.T, np.eye(c, dtype=np.int64)])
    h = _howell_rows(aug, r + c, mat.modulus)
    rows = [row[r:] for row in h if not row[:r].any()]
    if not rows:
        return Submodule.zero(c, mat.modulus)
    return Submodule(np.array(rows), c, mat.modulus)


def inv_mod(mat: ZqMatrix) -> ZqMatrix:
    """Inverse over Z/m; exists iff the reduction mod p is invertible."""
    a = mat.array
    n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError("only square matrices can be inverted")
    m = mat.modulus
    p, _ = _prime_power_base(m)
    aug = np.hstack([a, np.eye(n, dtype=np.int64)]) % m
    for col in range(n):
        piv = None
        for r in range(col, n):
            if aug[r, col] % p != 0:
                piv = r
                break
        if piv is None:
            raise ValueError("matrix is not invertible (no unit pivot)")
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] = (aug[col] * pow(int(aug[col, col]), -1, m)) % m
        for r in range(n):
            if r != col and aug[r, col]:
                aug[r] = (aug[r] - aug[r, col] * aug[col]) % m
    return ZqMatrix(aug[:, n:], m)


class BilinearForm:
    """A bilinear pairing <u, v> = u . gram . v on (Z/m)^d."""

    __slots__ = ("gram", "symmetry")

    def __init__(self, gram: ZqMatrix, symmetry: str = NO_SYMMETRY):
        if gram.rows != gram.cols:
            raise ValueError("gram matrix must be square")
        if symmetry not in (ANTISYMMETRIC, SYMMETRIC, NO_SYMMETRY):
            raise ValueError(f"unknown symmetry tag {symmetry!r}")
        a = gram.array
        m = gram.modulus
        if symmetry == ANTISYMMETRIC:
            if not np.array_equal(a.T % m, (-a) % m) or a.diagonal().any():
                raise ValueError("form is not antisymmetric with zero diagonal")
        if symmetry == SYMMETRIC and not np.array_equal(a.T, a):
            raise ValueError("form is not symmetric")
        self.gram = gram
        self.symmetry = symmetry

    @property
    def dim(self) -> int:
        return self.gram.rows

    @property
    def modulus(self) -> int:
        return self.gram.modulus

    def pair(self, u, v) -> int:
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        return int((u @ self.gram.array @ v) % self.modulus)

    def is_nondegenerate(self) -> bool:
        p, _ = _prime_power_base(self.modulus)
        return _rank_mod_p(self.gram.array, p) == self.dim

    def __repr__(self):
        return f"BilinearForm({self.gram!r}, {self.symmetry})"


def _rank_mod_p(a: np.ndarray, p: int) -> int:
    m = (a % p).astype(np.int64).copy()
    rows, cols = m.shape
    rank = 0
    for c in range(cols):
        piv = None
        for r in range(rank, rows):
            if m[r, c] % p:
                piv = r
                break
        if piv is None:
            continue
        if piv != rank:
            m[[rank, piv]] = m[[piv, rank]]
        m[rank] = (m[rank] * pow(int(m[rank, c]), p - 2, p)) % p
        for r in range(rows):
            if r != rank and m[r, c]:
                m[r] = (m[r] - m[r, c] * m[rank]) % p
        rank += 1
    return rank


def orthogonal_complement(form: BilinearForm, s: Submodule) -> Submodule:
    """{v : <v, w> = 0 for every w in s}."""
    if form.dim != s.ambient or form.modulus != s.modulus:
        raise ValueError("form and submodule have mismatched dimensions")
    if s.ngens == 0:
        return Submodule.full(s.ambient, s.modulus)
    mat = ZqMatrix((s.basis @ form.gram.array.T) % s.modulus, s.modulus)
    return kernel(mat)


def is_totally_isotropic(form: BilinearForm, s: Submodule) -> bool:
    """True iff the form vanishes on s x s (checked on basis rows)."""
    if form.dim != s.ambient or form.modulus != s.modulus:
        raise ValueError("form and submodule have mismatched dimensions")
    if s.ngens == 0:
        return True
    vals = (s.basis @ form.gram.array @ s.basis.T) % s.modulus
    return not vals.any()


def eigen_split(action: ZqMatrix) -> tuple[Submodule, Submodule]:
    """(M+, M-) for an involution acting on row vectors by v -> v @ action.

    Uses the projectors (1 +- action)/2, so 2 must be invertible (odd modulus).
    """
    m = action.modulus
    a = action.array
    d = a.shape[0]
    if a.shape[1] != d:
        raise ValueError("action matrix must be square")
    if m % 2 == 0:
        raise ValueError("modulus must be odd so that 2 is invertible")
    if not np.array_equal((a @ a) % m, np.eye(d, dtype=np.int64)):
        raise ValueError("action matrix is not an involution")
    inv2 = pow(2, -1, m)
    eye = np.eye(d, dtype=np.int64)
    plus = Submodule((inv2 * (eye + a)) % m, d, m)
    minus = Submodule((inv2 * (eye - a)) % m, d, m)
    return plus, minus


def _oracle_guard(form: BilinearForm):
    if form.dim > ORACLE_MAX_DIM or form.modulus > ORACLE_MAX_MOD:
        raise ValueError(
            "exhaustive search limited to ambient rank <= "
            f"{ORACLE_MAX_DIM} and modulus <= {ORACLE_MAX_MOD}; "
            f"got rank {form.dim}, modulus {form.modulus}"
        )


def isotropic_free_submodules(
    form: BilinearForm, constraint: Submodule, rank: int | None = None
) -> list[Submodule]:
    """Every free totally isotropic submodule of `constraint`, by brute force.

    Exhaustive (each submodule visited once via its canonical form), so it is
    guarded to small instances.
    """
    _oracle_guard(form)
    if form.dim != constraint.ambient or form.modulus != constraint.modulus:
        raise ValueError("form and constraint have mismatched dimensions")
    m = form.modulus
    d = form.dim
    gram = form.gram.array
    vecs = [v for v in constraint.vectors() if v.any()]
    zero = Submodule.zero(d, m)
    seen = {zero.basis.tobytes()}
    found = [zero]
    stack = [zero]
    while stack:
        sub = stack.pop()
        for v in vecs:
            if int((v @ gram @ v) % m):
                continue
            if sub.ngens and ((sub.basis @ gram @ v) % m).any():
                continue
            if sub.ngens and ((v @ gram @ sub.basis.T) % m).any():
                continue
            if sub.contains(v):
                continue
            bigger = Submodule(
                np.vstack([sub.basis, v.reshape(1, -1)]), d, m
            )
            if not bigger.is_free or bigger.rank != sub.rank + 1:
                continue
            key = bigger.basis.tobytes()
            if key in seen:
                continue
            seen.add(key)
            found.append(bigger)
            stack.append(bigger)
    if rank is not None:
        return [s for s in found if s.rank == rank]
    return found


def max_isotropic_oracle(form: BilinearForm, constraint: Submodule) -> int:
    """Maximum rank of a free totally isotropic submodule inside `constraint`.

    Exhaustive enumeration; raises when the instance exceeds the guard.
    """
    return max(s.rank for s in isotropic_free_submodules(form, constraint))
