"""Small-dimension complex Hermitian linear algebra with two backends.

Hermitian operators, canonical projectors, density matrices, spectral
decomposition, functional calculus and Born probabilities. The float backend
delegates eigenproblems to numpy; the exact backend works over Q(sqrt(2))
and verifies every decomposition by exact reconstruction.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .scalars import (
    EC_ONE,
    EC_ZERO,
    ExactComplex,
    QSqrt2,
    exact_entry,
    get_eps,
    recognize_qsqrt2,
)


class BackendError(ValueError):
    """Raised when an operation is unsupported on the requested backend."""


class ValidationError(ValueError):
    """Raised when an input violates a structural precondition."""


# ---------------------------------------------------------------------------
# internal matrix helpers (exact backend stores tuple-of-tuples of
# ExactComplex; float backend stores numpy complex128 arrays)
# ---------------------------------------------------------------------------


def _exact_matmul(a, b, dim):
    return tuple(
        tuple(
            sum((a[i][k] * b[k][j] for k in range(dim)), EC_ZERO)
            for j in range(dim)
        )
        for i in range(dim)
    )


def _exact_add(a, b, dim):
    return tuple(tuple(a[i][j] + b[i][j] for j in range(dim)) for i in range(dim))


def _exact_sub(a, b, dim):
    return tuple(tuple(a[i][j] - b[i][j] for j in range(dim)) for i in range(dim))


def _exact_scale(a, s, dim):
    s = s if isinstance(s, ExactComplex) else ExactComplex(s)
    return tuple(tuple(a[i][j] * s for j in range(dim)) for i in range(dim))


def _exact_eye(dim):
    return tuple(
        tuple(EC_ONE if i == j else EC_ZERO for j in range(dim)) for i in range(dim)
    )


def _exact_zero(dim):
    return tuple(tuple(EC_ZERO for _ in range(dim)) for _ in range(dim))


def _exact_to_complex(a, dim):
    return np.array([[complex(a[i][j]) for j in range(dim)] for i in range(dim)])


class HermitianOperator:
    """A dim x dim Hermitian matrix on one of the two scalar backends."""

    __slots__ = ("dim", "backend", "data")

    def __init__(self, dim: int, data, backend: str, validate: bool = True):
        if dim <= 0:
            raise ValidationError("dimension must be positive")
        if backend not in ("exact", "float"):
            raise ValidationError(f"unknown backend {backend!r}")
        self.dim = dim
        self.backend = backend
        self.data = data
        if validate and not self._is_hermitian():
            raise ValidationError("matrix is not Hermitian")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_entries(cls, rows, backend: str = "float", validate: bool = True):
        dim = len(rows)
        if any(len(r) != dim for r in rows):
            raise ValidationError("matrix must be square")
        if backend == "float":
            data = np.array(rows, dtype=complex)
        else:
            data = tuple(tuple(exact_entry(x) for x in r) for r in rows)
        return cls(dim, data, backend, validate=validate)

    @classmethod
    def diag(cls, values: Sequence, backend: str = "float"):
        dim = len(values)
        if backend == "float":
            return cls(dim, np.diag(np.array(values, dtype=float)).astype(complex), backend)
        rows = [
            [exact_entry(values[i]) if i == j else EC_ZERO for j in range(dim)]
            for i in range(dim)
        ]
        return cls(dim, tuple(tuple(r) for r in rows), backend)

    @classmethod
    def identity(cls, dim: int, backend: str = "float"):
        if backend == "float":
            return cls(dim, np.eye(dim, dtype=complex), backend, validate=False)
        return cls(dim, _exact_eye(dim), backend, validate=False)

    @classmethod
    def zero(cls, dim: int, backend: str = "float"):
        if backend == "float":
            return cls(dim, np.zeros((dim, dim), dtype=complex), backend, validate=False)
        return cls(dim, _exact_zero(dim), backend, validate=False)

    # -- structure ---------------------------------------------------------

    def _is_hermitian(self) -> bool:
        if self.backend == "float":
            return bool(np.all(np.abs(self.data - self.data.conj().T) <= get_eps()))
        d = self.dim
        return all(
            self.data[i][j] == self.data[j][i].conj()
            for i in range(d)
            for j in range(i, d)
        )

    def to_complex_array(self) -> np.ndarray:
        if self.backend == "float":
            return np.array(self.data, copy=True)
        return _exact_to_complex(self.data, self.dim)

    def trace(self):
        if self.backend == "float":
            return complex(np.trace(self.data))
        return sum((self.data[i][i] for i in range(self.dim)), EC_ZERO)

    def real_trace(self):
        t = self.trace()
        if self.backend == "float":
            return t.real
        return t.re

    # -- arithmetic (results are not re-validated as Hermitian) -------------

    def _check(self, other):
        if self.dim != other.dim:
            raise ValidationError("dimension mismatch")
        if self.backend != other.backend:
            raise BackendError("mixed scalar backends")

    def __matmul__(self, other: "HermitianOperator") -> "HermitianOperator":
        self._check(other)
        if self.backend == "float":
            return HermitianOperator(self.dim, self.data @ other.data, "float", validate=False)
        return HermitianOperator(
            self.dim, _exact_matmul(self.data, other.data, self.dim), "exact", validate=False
        )

    def __add__(self, other):
        self._check(other)
        if self.backend == "float":
            return HermitianOperator(self.dim, self.data + other.data, "float", validate=False)
        return HermitianOperator(
            self.dim, _exact_add(self.data, other.data, self.dim), "exact", validate=False
        )

    def __sub__(self, other):
        self._check(other)
        if self.backend == "float":
            return HermitianOperator(self.dim, self.data - other.data, "float", validate=False)
        return HermitianOperator(
            self.dim, _exact_sub(self.data, other.data, self.dim), "exact", validate=False
        )

    def scale(self, s):
        if self.backend == "float":
            return HermitianOperator(self.dim, self.data * complex(s), "float", validate=False)
        return HermitianOperator(
            self.dim, _exact_scale(self.data, s, self.dim), "exact", validate=False
        )

    def close_to(self, other: "HermitianOperator") -> bool:
        self._check(other)
        if self.backend == "float":
            return bool(np.all(np.abs(self.data - other.data) <= 10 * get_eps()))
        d = self.dim
        return all(self.data[i][j] == other.data[i][j] for i in range(d) for j in range(d))

    def is_zero(self) -> bool:
        if self.backend == "float":
            return bool(np.all(np.abs(self.data) <= 10 * get_eps()))
        return all(x.is_zero() for row in self.data for x in row)

    def commutes_with(self, other: "HermitianOperator") -> bool:
        return (self @ other).close_to(other @ self)

    # -- serialization (row-major complex arrays) ---------------------------

    def to_json(self) -> dict:
        arr = self.to_complex_array()
        return {
            "dim": self.dim,
            "re": [[float(x) for x in row] for row in arr.real],
            "im": [[float(x) for x in row] for row in arr.imag],
        }

    @classmethod
    def from_json(cls, obj: dict, backend: str = "float"):
        dim = int(obj["dim"])
        re = np.array(obj["re"], dtype=float)
        im = np.array(obj["im"], dtype=float)
        if re.shape != (dim, dim) or im.shape != (dim, dim):
            raise ValidationError("operator JSON has wrong shape")
        if backend != "float":
            raise BackendError("operator JSON deserializes to the float backend")
        return cls(dim, re + 1j * im, "float")

    def __repr__(self):
        return f"HermitianOperator(dim={self.dim}, backend={self.backend!r})"


# ---------------------------------------------------------------------------
# projectors
# ---------------------------------------------------------------------------


def _float_canonical_key(arr: np.ndarray):
    # the projection matrix is a canonical invariant of its range; round so
    # that subspace equality gives key equality at desk scale
    r = np.round(arr, 6) + 0.0  # normalize -0.0
    return tuple((float(x.real), float(x.imag)) for x in r.flatten())


class Projector:
    """A finite-dimensional orthogonal projection in canonical form.

    The stored matrix P itself is the canonical representation: P is uniquely
    determined by its range, so two projectors agree as subspaces iff their
    matrices agree entrywise (exactly, or within the float tolerance).
    """

    __slots__ = ("matrix", "rank", "_key")

    def __init__(self, matrix: HermitianOperator, validate: bool = True):
        self.matrix = matrix
        if validate:
            if not (matrix @ matrix).close_to(matrix):
                raise ValidationError("matrix is not idempotent")
        t = matrix.real_trace()
        if matrix.backend == "float":
            r = round(float(t))
            if abs(float(t) - r) > 1e-6:
                raise ValidationError("projector trace is not an integer")
        else:
            if not isinstance(t, QSqrt2) or t.b != 0 or t.a.denominator != 1:
                raise ValidationError("projector trace is not an integer")
            r = int(t.a)
        self.rank = r
        if matrix.backend == "float":
            self._key = _float_canonical_key(matrix.data)
        else:
            self._key = tuple(x.key() for row in matrix.data for x in row)

    @property
    def dim(self) -> int:
        return self.matrix.dim

    @property
    def backend(self) -> str:
        return self.matrix.backend

    @property
    def canonical_key(self):
        return self._key

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, dim: int, backend: str = "float"):
        return cls(HermitianOperator.zero(dim, backend), validate=False)

    @classmethod
    def identity(cls, dim: int, backend: str = "float"):
        return cls(HermitianOperator.identity(dim, backend), validate=False)

    @classmethod
    def from_ray(cls, vec, backend: str = "float"):
        """Rank-1 projector v v* / <v, v>; the ray need not be normalized."""
        if backend == "float":
            v = np.array(vec, dtype=complex)
            n = float(np.vdot(v, v).real)
            if n <= get_eps():
                raise ValidationError("zero ray")
            return cls(HermitianOperator(len(v), np.outer(v, v.conj()) / n, "float", validate=False))
        v = [exact_entry(x) for x in vec]
        n = sum((x.conj() * x for x in v), EC_ZERO)
        if n.is_zero():
            raise ValidationError("zero ray")
        dim = len(v)
        data = tuple(tuple(v[i] * v[j].conj() / n for j in range(dim)) for i in range(dim))
        return cls(HermitianOperator(dim, data, "exact", validate=False))

    @classmethod
    def from_span(cls, vecs, backend: str = "float"):
        """Projector onto the span of the given vectors (Gram-Schmidt)."""
        if backend == "float":
            v = np.array(vecs, dtype=complex).T
            q, r = np.linalg.qr(v)
            keep = np.abs(np.diag(r)) > 1e-10
            q = q[:, keep]
            return cls(HermitianOperator(v.shape[0], q @ q.conj().T, "float", validate=False))
        basis = _exact_gram_schmidt([[exact_entry(x) for x in v] for v in vecs])
        dim = len(vecs[0])
        acc = _exact_zero(dim)
        for v in basis:
            n = sum((x.conj() * x for x in v), EC_ZERO)
            p = tuple(tuple(v[i] * v[j].conj() / n for j in range(dim)) for i in range(dim))
            acc = _exact_add(acc, p, dim)
        return cls(HermitianOperator(dim, acc, "exact", validate=False))

    @classmethod
    def from_matrix(cls, op: HermitianOperator):
        return cls(op, validate=True)

    # -- algebra ------------------------------------------------------------

    def complement(self) -> "Projector":
        eye = HermitianOperator.identity(self.dim, self.backend)
        return Projector(eye - self.matrix, validate=False)

    def product(self, other: "Projector") -> HermitianOperator:
        return self.matrix @ other.matrix

    def plus(self, other: "Projector") -> "Projector":
        """Sum of orthogonal projectors."""
        if not self.orthogonal_to(other):
            raise ValidationError("projectors are not orthogonal")
        return Projector(self.matrix + other.matrix, validate=False)

    def orthogonal_to(self, other: "Projector") -> bool:
        """PQ = 0, decided via tr(PQ) = 0 (equivalent for projectors)."""
        k = (self._key, other._key) if self._key <= other._key else (other._key, self._key)
        hit = _ORTH_MEMO.get(k)
        if hit is None:
            t = _product_trace(self.matrix, other.matrix)
            if self.backend == "float":
                hit = abs(t) <= 10 * get_eps()
            else:
                hit = t.is_zero()
            _ORTH_MEMO[k] = hit
        return hit

    def leq(self, other: "Projector") -> bool:
        """Subspace order: P <= Q, decided via tr(PQ) = tr(P)."""
        k = (self._key, other._key)
        hit = _LEQ_MEMO.get(k)
        if hit is None:
            t = _product_trace(self.matrix, other.matrix)
            if self.backend == "float":
                hit = abs(t - self.rank) <= 10 * get_eps()
            else:
                hit = t == ExactComplex(QSqrt2(self.rank))
            _LEQ_MEMO[k] = hit
        return hit

    def is_zero(self) -> bool:
        return self.rank == 0

    def __eq__(self, other):
        if not isinstance(other, Projector):
            return NotImplemented
        if self.backend == "float" or other.backend == "float":
            return self.dim == other.dim and self.matrix.close_to(other.matrix)
        return self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"Projector(dim={self.dim}, rank={self.rank}, backend={self.backend!r})"

    def to_json(self) -> dict:
        return self.matrix.to_json()


# projector-pair predicates recur heavily during poset construction; both
# are pure functions of the canonical keys, so memoize process-wide
_ORTH_MEMO: dict = {}
_LEQ_MEMO: dict = {}


def _product_trace(a: HermitianOperator, b: HermitianOperator):
    """tr(AB) without forming the product."""
    if a.backend == "float":
        return complex(np.sum(a.data * b.data.T))
    d = a.dim
    return sum(
        (a.data[i][j] * b.data[j][i] for i in range(d) for j in range(d)), EC_ZERO
    )


def _exact_gram_schmidt(vecs):
    """Orthogonalize (no normalization) over Q(sqrt(2)); drops dependents."""
    basis = []
    for v in vecs:
        w = list(v)
        for u in basis:
            nu = sum((x.conj() * x for x in u), EC_ZERO)
            c = sum((u[i].conj() * w[i] for i in range(len(w))), EC_ZERO) / nu
            w = [w[i] - c * u[i] for i in range(len(w))]
        if any(not x.is_zero() for x in w):
            basis.append(w)
    return basis


# ---------------------------------------------------------------------------
# density matrices
# ---------------------------------------------------------------------------


class DensityMatrix:
    """A positive semidefinite, trace-one Hermitian operator."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: HermitianOperator, validate: bool = True):
        self.matrix = matrix
        if validate:
            t = matrix.real_trace()
            if abs(float(t) - 1.0) > 1e-7:
                raise ValidationError("density matrix trace is not 1")
            # PSD is checked on the float shadow; adequate at desk scale
            w = np.linalg.eigvalsh(matrix.to_complex_array())
            if w.min() < -1e-7:
                raise ValidationError("density matrix is not positive semidefinite")

    @property
    def dim(self) -> int:
        return self.matrix.dim

    @property
    def backend(self) -> str:
        return self.matrix.backend

    @classmethod
    def from_diag(cls, weights: Sequence, backend: str = "float"):
        return cls(HermitianOperator.diag(list(weights), backend))

    @classmethod
    def pure(cls, vec, backend: str = "float"):
        """|v><v| / <v, v> for a nonzero vector v."""
        p = Projector.from_ray(vec, backend)
        return cls(p.matrix, validate=False)

    @classmethod
    def maximally_mixed(cls, dim: int, backend: str = "float"):
        if backend == "float":
            return cls(HermitianOperator(dim, np.eye(dim, dtype=complex) / dim, "float", validate=False), validate=False)
        s = ExactComplex(Fraction(1, dim))
        return cls(
            HermitianOperator(dim, _exact_scale(_exact_eye(dim), s, dim), "exact", validate=False),
            validate=False,
        )

    def to_json(self) -> dict:
        return self.matrix.to_json()

    @classmethod
    def from_json(cls, obj: dict):
        return cls(HermitianOperator.from_json(obj))


# ---------------------------------------------------------------------------
# spectral decomposition and functional calculus
# ---------------------------------------------------------------------------


def spectral_decompose(a: HermitianOperator):
    """Eigenvalues (strictly increasing) with their spectral projectors.

    Float backend: eigenvalues closer than the global tolerance are merged
    into one eigenprojector. Exact backend: eigenvalues must lie in
    Q(sqrt(2)); the decomposition is verified by exact reconstruction.
    """
    if not a._is_hermitian():
        raise ValidationError("operator is not Hermitian")
    if a.backend == "float":
        return _spectral_float(a)
    return _spectral_exact(a)


def _spectral_float(a: HermitianOperator):
    eps = get_eps()
    w, u = np.linalg.eigh(a.data)
    out = []
    i = 0
    n = a.dim
    while i < n:
        j = i
        while j + 1 < n and w[j + 1] - w[i] <= eps:
            j += 1
        cols = u[:, i : j + 1]
        p = Projector(HermitianOperator(n, cols @ cols.conj().T, "float", validate=False))
        out.append((float(np.mean(w[i : j + 1])), p))
        i = j + 1
    return out


def _spectral_exact(a: HermitianOperator):
    shadow = _exact_to_complex(a.data, a.dim)
    w = np.linalg.eigvalsh(shadow)
    # cluster the numeric hints
    hints = []
    for x in w:
        if not hints or x - hints[-1] > 1e-7:
            hints.append(float(x))
    eigs = []
    for x in hints:
        lam = recognize_qsqrt2(x)
        if lam is None:
            raise BackendError(
                f"eigenvalue near {x} is not a small element of Q(sqrt(2)); "
                "use the float backend for this operator"
            )
        eigs.append(lam)
    eye = _exact_eye(a.dim)
    out = []
    for lam in sorted(set(eigs)):
        shifted = _exact_sub(a.data, _exact_scale(eye, ExactComplex(lam), a.dim), a.dim)
        kernel = _exact_nullspace(shifted, a.dim)
        if not kernel:
            raise BackendError("numeric eigenvalue hint failed exact verification")
        basis = _exact_gram_schmidt(kernel)
        acc = _exact_zero(a.dim)
        for v in basis:
            n = sum((x.conj() * x for x in v), EC_ZERO)
            p = tuple(tuple(v[i] * v[j].conj() / n for j in range(a.dim)) for i in range(a.dim))
            acc = _exact_add(acc, p, a.dim)
        out.append((lam, Projector(HermitianOperator(a.dim, acc, "exact", validate=False), validate=False)))
    # exact verification: completeness and reconstruction
    total = _exact_zero(a.dim)
    recon = _exact_zero(a.dim)
    for lam, p in out:
        total = _exact_add(total, p.matrix.data, a.dim)
        recon = _exact_add(recon, _exact_scale(p.matrix.data, ExactComplex(lam), a.dim), a.dim)
    if total != eye or recon != a.data:
        raise BackendError("exact spectral decomposition failed verification")
    return out


def _exact_rref(rows, ncols):
    """Reduced row echelon form over the exact complex field; returns (rows, pivots)."""
    rows = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = None
        for i in range(r, len(rows)):
            if not rows[i][c].is_zero():
                pivot = i
                break
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        pv = rows[r][c]
        rows[r] = [x / pv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and not rows[i][c].is_zero():
                f = rows[i][c]
                rows[i] = [rows[i][j] - f * rows[r][j] for j in range(ncols)]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def _exact_nullspace(mat, dim):
    rows, pivots = _exact_rref([list(r) for r in mat], dim)
    free = [c for c in range(dim) if c not in pivots]
    basis = []
    for fc in free:
        v = [EC_ZERO] * dim
        v[fc] = EC_ONE
        for r, pc in enumerate(pivots):
            v[pc] = -rows[r][fc]
        basis.append(v)
    return basis


class EigenvalueFunction:
    """A finite map from eigenvalues to values, total on a given spectrum."""

    def __init__(self, mapping: dict):
        self.mapping = dict(mapping)

    @classmethod
    def identity_on(cls, values: Iterable):
        return cls({v: v for v in values})

    def at(self, lam, backend: str):
        if backend == "exact":
            lam_q = lam if isinstance(lam, QSqrt2) else QSqrt2(lam)
            for k, v in self.mapping.items():
                k_q = k if isinstance(k, QSqrt2) else QSqrt2(k)
                if k_q == lam_q:
                    return v
            raise ValidationError(f"function undefined at eigenvalue {lam}")
        eps = get_eps()
        best = None
        for k, v in self.mapping.items():
            if abs(float(k) - float(lam)) <= 10 * eps:
                best = v
        if best is None:
            raise ValidationError(f"function undefined at eigenvalue {lam}")
        return best


def apply_function(a: HermitianOperator, f: EigenvalueFunction) -> HermitianOperator:
    """Functional calculus: sum of f(eigenvalue) times eigenprojector."""
    decomp = spectral_decompose(a)
    if a.backend == "float":
        acc = np.zeros((a.dim, a.dim), dtype=complex)
        for lam, p in decomp:
            acc = acc + float(f.at(lam, "float")) * p.matrix.data
        return HermitianOperator(a.dim, acc, "float", validate=False)
    acc = _exact_zero(a.dim)
    for lam, p in decomp:
        val = f.at(lam, "exact")
        val_q = val if isinstance(val, QSqrt2) else QSqrt2(as_int_or_fraction(val))
        acc = _exact_add(acc, _exact_scale(p.matrix.data, ExactComplex(val_q), a.dim), a.dim)
    return HermitianOperator(a.dim, acc, "exact", validate=False)


def as_int_or_fraction(x):
    if isinstance(x, (int, Fraction)):
        return x
    if isinstance(x, float) and x == int(x):
        return int(x)
    raise ValidationError(f"value {x!r} is not exact")


def born_probability(rho: DensityMatrix, p: Projector):
    """tr(rho P), clamped into [0,1] when the excursion is within tolerance.

    Returns a float on the float backend and a QSqrt2 on the exact backend.
    """
    if rho.dim != p.dim:
        raise ValidationError("dimension mismatch")
    if rho.backend != p.backend:
        raise BackendError("mixed scalar backends")
    t = (rho.matrix @ p.matrix).real_trace()
    if rho.backend == "exact":
        return t
    v = float(t)
    eps = get_eps()
    if v < 0:
        if v < -100 * eps:
            raise ValidationError(f"Born probability {v} far outside [0,1]")
        v = 0.0
    if v > 1:
        if v > 1 + 100 * eps:
            raise ValidationError(f"Born probability {v} far outside [0,1]")
        v = 1.0
    return v


def prob_is_one(p, eps: float | None = None) -> bool:
    if isinstance(p, QSqrt2):
        return p == 1
    return float(p) >= 1.0 - (get_eps() if eps is None else eps)


def prob_at_least(p, r, eps: float | None = None) -> bool:
    if isinstance(p, QSqrt2):
        return p >= QSqrt2(Fraction(r).limit_denominator(10**9) if isinstance(r, float) else r)
    return float(p) >= float(r) - (get_eps() if eps is None else eps)
