"""Dense complex tensor-leg calculus on ``H^(x)k``.

Conventions used throughout the package:

* operators are ``numpy`` complex arrays;
* tensor legs are ordered row-major, the leftmost factor being the most
  significant index, so ``kron(a, b)`` acts as ``a`` on leg 1 and ``b`` on
  leg 2;
* a functional ``w`` on ``L(H)`` is stored through trace duality,
  ``w(X) = Tr(F X)``;
* operator equalities are decided with a relative Frobenius tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import NotPositiveError, WeakHopfError


@dataclass(frozen=True)
class Tolerance:
    eq_tol: float = 1e-9
    rank_tol: float = 1e-9

    def __post_init__(self):
        for name in ("eq_tol", "rank_tol"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {value!r}")


DEFAULT_TOL = Tolerance()


def fro(m) -> float:
    return float(np.linalg.norm(np.asarray(m).ravel()))


def residual(lhs, rhs) -> float:
    """Frobenius norm of ``lhs - rhs``."""
    return fro(np.asarray(lhs) - np.asarray(rhs))


def close(lhs, rhs, tol: Tolerance = DEFAULT_TOL, scale: float | None = None) -> bool:
    """Relative equality test ``|lhs - rhs| <= eq_tol * max(|lhs|, |rhs|, scale)``."""
    ref = max(fro(lhs), fro(rhs), 0.0 if scale is None else scale)
    return residual(lhs, rhs) <= tol.eq_tol * ref


def adj(m):
    return np.conj(np.swapaxes(m, -1, -2))


@dataclass(frozen=True)
class Functional:
    """Linear functional ``w(X) = Tr(dual @ X)`` on ``L(C^d)``."""

    dual: np.ndarray

    def __post_init__(self):
        dual = np.asarray(self.dual, dtype=complex)
        if dual.ndim != 2 or dual.shape[0] != dual.shape[1]:
            raise WeakHopfError("functional dual must be a square matrix")
        object.__setattr__(self, "dual", dual)

    @property
    def dim(self) -> int:
        return self.dual.shape[0]

    def __call__(self, x) -> complex:
        return complex(np.einsum("ji,ij->", self.dual, np.asarray(x)))

    def star(self) -> "Functional":
        """The involution ``w_*(X) = conj(w(X^*))``."""
        return Functional(adj(self.dual))

    @classmethod
    def matrix_unit(cls, i: int, j: int, d: int) -> "Functional":
        """The coordinate functional ``X -> X[i, j]``."""
        f = np.zeros((d, d), dtype=complex)
        f[j, i] = 1.0
        return cls(f)

    @classmethod
    def basis(cls, d: int) -> list["Functional"]:
        return [cls.matrix_unit(i, j, d) for i in range(d) for j in range(d)]


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def flip(d: int, d2: int | None = None) -> np.ndarray:
    """The flip ``xi (x) eta -> eta (x) xi`` from ``C^d (x) C^d2`` to ``C^d2 (x) C^d``."""
    d2 = d if d2 is None else d2
    s = np.zeros((d2 * d, d * d2), dtype=complex)
    for i in range(d):
        for j in range(d2):
            s[j * d + i, i * d2 + j] = 1.0
    return s


def permutation_operator(perm: Sequence[int], d: int) -> np.ndarray:
    """Operator sending the content of leg ``k`` to leg ``perm[k]`` (0-based legs).

    For example ``perm = (1, 2, 0)`` maps ``xi (x) eta (x) zeta`` to
    ``zeta (x) xi (x) eta``.
    """
    k = len(perm)
    if sorted(perm) != list(range(k)):
        raise WeakHopfError(f"not a permutation: {perm!r}")
    n = d**k
    idx = np.arange(n).reshape((d,) * k)
    # output axis perm[s] carries input axis s
    src = [0] * k
    for s, t in enumerate(perm):
        src[t] = s
    out_index = np.transpose(idx, src).ravel()
    p = np.zeros((n, n), dtype=complex)
    p[np.arange(n), out_index] = 1.0
    return p


def leg_embed(op, legs: Sequence[int], d: int, arity: int = 3) -> np.ndarray:
    """Place ``op`` on the given ordered legs (1-based) of ``H^(x)arity``.

    ``legs[0]`` receives the first tensor factor of ``op``; the remaining
    legs carry the identity. ``leg_embed(V, (1, 3), d)`` is ``V_13``.
    """
    op = np.asarray(op, dtype=complex)
    m = len(legs)
    if (
        len(set(legs)) != m
        or any(not 1 <= leg <= arity for leg in legs)
        or op.shape != (d**m, d**m)
    ):
        raise WeakHopfError(f"invalid leg selection {tuple(legs)!r} for arity {arity}")
    rest = [leg for leg in range(1, arity + 1) if leg not in legs]
    order = list(legs) + rest
    big = kron(op, np.eye(d ** (arity - m))).reshape((d,) * (2 * arity))
    # axis a of ``big`` belongs to leg order[a]; bring legs back to 1..arity
    src = [order.index(leg) for leg in range(1, arity + 1)]
    big = np.transpose(big, src + [s + arity for s in src])
    return big.reshape(d**arity, d**arity)


def leg_apply(op, legs: Sequence[int], x, d: int, arity: int = 3) -> np.ndarray:
    """``leg_embed(op, legs, d, arity) @ x`` without forming the embedded operator."""
    op = np.asarray(op, dtype=complex)
    x = np.asarray(x, dtype=complex)
    m = len(legs)
    if op.shape != (d**m, d**m) or x.shape[0] != d**arity:
        raise WeakHopfError("operator and vector shapes do not match the leg selection")
    cols = x.shape[1]
    axes = [leg - 1 for leg in legs]
    t = np.tensordot(op.reshape((d,) * (2 * m)), x.reshape((d,) * arity + (cols,)),
                     axes=(list(range(m, 2 * m)), axes))
    # result axes: output legs of op, untouched legs in order, columns
    cur = axes + [a for a in range(arity) if a not in axes]
    t = np.transpose(t, [cur.index(a) for a in range(arity)] + [arity])
    return t.reshape(d**arity, cols)


def leg_word(factors: Sequence[tuple], d: int, arity: int = 3) -> np.ndarray:
    """Product ``op_1 op_2 ... op_k`` of leg-embedded operators ``(op, legs)``."""
    op, legs = factors[-1]
    out = leg_embed(op, legs, d, arity)
    for op, legs in reversed(factors[:-1]):
        out = leg_apply(op, legs, out, d, arity)
    return out


def partial_contract(m, leg: int, f: Functional) -> np.ndarray:
    """``(f (x) id)(m)`` for ``leg == 1`` and ``(id (x) f)(m)`` for ``leg == 2``."""
    m = np.asarray(m)
    d = f.dim
    if m.shape != (d * d, d * d):
        raise WeakHopfError(f"cannot contract a {m.shape} operator with a {d}x{d} functional")
    m4 = m.reshape(d, d, d, d)
    if leg == 1:
        return np.einsum("ji,ikjl->kl", f.dual, m4)
    if leg == 2:
        return np.einsum("lk,ikjl->ij", f.dual, m4)
    raise WeakHopfError(f"leg must be 1 or 2, got {leg!r}")


def leg_blocks(m, leg: int, d: int) -> np.ndarray:
    """All contractions of ``m`` against the coordinate functionals.

    Returns an array of shape ``(d*d, d, d)`` whose entry ``i*d + j`` is the
    contraction with ``X -> X[i, j]``.
    """
    m4 = np.asarray(m).reshape(d, d, d, d)
    if leg == 1:
        return np.transpose(m4, (0, 2, 1, 3)).reshape(d * d, d, d)
    if leg == 2:
        return np.transpose(m4, (1, 3, 0, 2)).reshape(d * d, d, d)
    raise WeakHopfError(f"leg must be 1 or 2, got {leg!r}")


def _fix_phase(vectors: np.ndarray, eps: float) -> np.ndarray:
    """Rotate each row so its first significant entry is real positive."""
    out = vectors.copy()
    for k, row in enumerate(out):
        mags = np.abs(row)
        big = np.nonzero(mags > eps * max(mags.max(), 1e-300))[0]
        if big.size:
            z = row[big[0]]
            out[k] = row * (np.conj(z) / abs(z))
    return out


def numerical_rank(s: np.ndarray, shape: tuple[int, int], tol: Tolerance,
                   scale: float | None = None) -> int:
    """Singular values above ``rank_tol`` relative to ``scale`` (default: the largest one)."""
    ref = (s[0] if s.size else 0.0) if scale is None else scale
    if s.size == 0 or ref == 0.0:
        return 0
    return int(np.sum(s > tol.rank_tol * ref * max(shape)))


def null_space(m: np.ndarray, tol: Tolerance, scale: float | None = None) -> np.ndarray:
    """Orthonormal rows spanning the kernel of ``m`` (columns = unknowns).

    ``scale`` sets the size below which singular values count as zero;
    it matters when ``m`` itself is numerically zero.
    """
    n = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = np.linalg.svd(m)
    r = numerical_rank(s, m.shape, tol, scale)
    # m @ x = 0 for x = conj(vh[k]), k >= r
    return np.conj(vh[r:])


class OpSubspace:
    """Frobenius-orthonormal basis of a linear subspace of ``L(C^d)``."""

    def __init__(self, d: int, basis, tol: Tolerance = DEFAULT_TOL):
        self.d = int(d)
        basis = np.asarray(basis, dtype=complex).reshape(-1, self.d, self.d)
        self.basis = basis
        self.tol = tol

    def __len__(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return len(self)

    def __iter__(self):
        return iter(self.basis)

    def __repr__(self):
        return f"OpSubspace(d={self.d}, dim={len(self)})"

    @property
    def flat(self) -> np.ndarray:
        return self.basis.reshape(len(self), self.d * self.d)

    def coeffs(self, x) -> np.ndarray:
        """Coordinates of the orthogonal projection of ``x`` on the basis."""
        return np.conj(self.flat) @ np.asarray(x).reshape(-1)

    def project(self, x) -> np.ndarray:
        return (self.coeffs(x) @ self.flat).reshape(self.d, self.d)

    def element(self, coeffs) -> np.ndarray:
        return (np.asarray(coeffs) @ self.flat).reshape(self.d, self.d)

    def distance(self, x) -> float:
        return residual(self.project(x), x)

    def contains(self, x, scale: float | None = None) -> bool:
        ref = fro(x) if scale is None else max(fro(x), scale)
        return self.distance(x) <= self.tol.eq_tol * max(ref, 1e-300)

    def gram(self) -> np.ndarray:
        return np.conj(self.flat) @ self.flat.T

    def issubspace(self, other: "OpSubspace") -> bool:
        return all(other.contains(b) for b in self.basis)

    def equals(self, other: "OpSubspace") -> bool:
        return len(self) == len(other) and self.issubspace(other) and other.issubspace(self)

    def products(self) -> np.ndarray:
        """All products ``b_i @ b_j`` as an array of shape ``(n, n, d, d)``."""
        return np.einsum("iab,jbc->ijac", self.basis, self.basis)

    def closure_residual(self) -> float:
        """Largest distance of a basis product from the span."""
        if len(self) == 0:
            return 0.0
        prods = self.products().reshape(-1, self.d * self.d)
        proj = (prods @ np.conj(self.flat).T) @ self.flat
        return float(np.max(np.linalg.norm(prods - proj, axis=1)))

    def is_closed(self) -> bool:
        return self.closure_residual() <= self.tol.eq_tol * max(
            1.0, max((fro(b) for b in self.basis), default=1.0) ** 2
        )

    def adjoint(self) -> "OpSubspace":
        return span_basis(adj(self.basis), self.tol, d=self.d)

    def conjugate_by(self, u) -> "OpSubspace":
        return span_basis(u @ self.basis @ adj(u), self.tol, d=self.d)


def span_basis(elements: Iterable, tol: Tolerance = DEFAULT_TOL, d: int | None = None) -> OpSubspace:
    """Orthonormal Frobenius basis of the span of ``elements``.

    The rank is decided from singular values against
    ``rank_tol * s_max * max(rows, cols)``. An empty input gives the zero
    subspace (``d`` must then be supplied).
    """
    mats = [np.asarray(e, dtype=complex) for e in elements]
    if not mats:
        if d is None:
            raise WeakHopfError("dimension required for an empty span")
        return OpSubspace(d, np.zeros((0, d, d)), tol)
    dd = mats[0].shape[0]
    if any(m.shape != (dd, dd) for m in mats):
        raise WeakHopfError("span_basis needs square matrices of one size")
    stack = np.stack(mats).reshape(len(mats), dd * dd).T
    u, s, _ = np.linalg.svd(stack, full_matrices=False)
    r = numerical_rank(s, stack.shape, tol)
    rows = _fix_phase(u[:, :r].T, 1e-8)
    return OpSubspace(dd, rows, tol)


def full_algebra(d: int, tol: Tolerance = DEFAULT_TOL) -> OpSubspace:
    return OpSubspace(d, np.eye(d * d, dtype=complex), tol)


def commutant(s: OpSubspace, within: OpSubspace | None = None, tol: Tolerance | None = None) -> OpSubspace:
    """All ``X`` in ``within`` (default: ``L(C^d)``) commuting with every element of ``s``."""
    tol = s.tol if tol is None else tol
    d = s.d
    ambient = full_algebra(d, tol) if within is None else within
    if len(ambient) == 0:
        return ambient
    w = ambient.basis
    blocks = []
    for a in s.basis:
        comm = np.einsum("ab,mbc->mac", a, w) - np.einsum("mab,bc->mac", w, a)
        blocks.append(comm.reshape(len(ambient), d * d).T)
    if not blocks:
        return OpSubspace(d, ambient.basis, tol)
    scale = max(fro(a) for a in s.basis) * max(1.0, max(fro(x) for x in w))
    ker = null_space(np.vstack(blocks), tol, scale)
    return span_basis(np.einsum("km,mab->kab", ker, w), tol, d=d)


def psd_sqrt(m, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Positive square root of a Hermitean positive semidefinite matrix."""
    m = np.asarray(m, dtype=complex)
    scale = max(fro(m), 1e-300)
    if residual(m, adj(m)) > tol.eq_tol * scale:
        raise NotPositiveError("not positive: matrix is not Hermitean")
    w, u = np.linalg.eigh((m + adj(m)) / 2)
    if w.size and w.min() < -tol.eq_tol * max(np.abs(w).max(), 1e-300):
        raise NotPositiveError(f"not positive: eigenvalue {w.min():.3g}")
    w = np.clip(w, 0.0, None)
    return (u * np.sqrt(w)) @ adj(u)


def psd_power(m, p: float, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """``m**p`` on the support of a PSD matrix (pseudo-inverse for ``p < 0``)."""
    m = np.asarray(m, dtype=complex)
    psd_sqrt(m, tol)  # validation only
    w, u = np.linalg.eigh((m + adj(m)) / 2)
    cut = tol.rank_tol * max(np.abs(w).max(), 1e-300) * len(w)
    keep = w > cut
    wp = np.zeros_like(w)
    wp[keep] = w[keep] ** p
    return (u * wp) @ adj(u)


@dataclass(frozen=True)
class PartialIsometryCheck:
    ok: bool
    residual: float
    left_projection: bool
    right_projection: bool


def is_partial_isometry(v, tol: Tolerance = DEFAULT_TOL) -> PartialIsometryCheck:
    """``V V^* V = V`` within ``eq_tol * |V|``; also reports whether VV* and V*V are projections."""
    v = np.asarray(v, dtype=complex)
    vv = v @ adj(v)
    vhv = adj(v) @ v
    res = residual(vv @ v, v)
    scale = fro(v)
    return PartialIsometryCheck(
        ok=res <= tol.eq_tol * scale,
        residual=res,
        left_projection=close(vv @ vv, vv, tol) and close(vv, adj(vv), tol),
        right_projection=close(vhv @ vhv, vhv, tol) and close(vhv, adj(vhv), tol),
    )


def isometry_onto(p, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Columns forming an orthonormal basis of the range of ``p``.

    Uses the SVD with a deterministic phase: the first significant component
    of every column is made real positive.
    """
    p = np.asarray(p, dtype=complex)
    u, s, _ = np.linalg.svd(p)
    r = numerical_rank(s, p.shape, tol)
    return _fix_phase(u[:, :r].T, 1e-8).T
