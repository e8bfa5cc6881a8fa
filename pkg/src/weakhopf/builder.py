"""Concrete multiplicative partial isometries from weak Hopf algebra data.

A :class:`WhaPresentation` stores structure constants on a basis
``b_0, ..., b_{n-1}``:

* ``mult[i, j, k]``: coefficient of ``b_k`` in ``b_i b_j``;
* ``delta[i, p, q]``: coefficient of ``b_p (x) b_q`` in ``Delta(b_i)``;
* ``counit[i]``, ``unit[k]``, ``haar[i]`` (the functional ``h``);
* ``antipode[l, i]``: coefficient of ``b_l`` in ``S(b_i)``;
* ``star[k, i]``: coefficient of ``b_k`` in ``b_i^*`` (the map is extended
  antilinearly).

The Hilbert space is ``H = A`` with ``(x, y) = h(x^* y)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidPresentationError, RepresentationError, WeakHopfError
from .mpi import MPI, MpiCandidate, NOT_MPI, WHA
from .tensor import DEFAULT_TOL, Tolerance, adj, fro, kron, numerical_rank


@dataclass(eq=False)
class WhaPresentation:
    n: int
    labels: list
    mult: np.ndarray
    delta: np.ndarray
    counit: np.ndarray
    antipode: np.ndarray
    star: np.ndarray
    unit: np.ndarray
    haar: np.ndarray

    def __post_init__(self):
        n = self.n
        shapes = {
            "mult": (n, n, n), "delta": (n, n, n), "counit": (n,), "antipode": (n, n),
            "star": (n, n), "unit": (n,), "haar": (n,),
        }
        for name, shape in shapes.items():
            arr = np.asarray(getattr(self, name), dtype=complex)
            if arr.shape != shape:
                raise WeakHopfError(f"{name} must have shape {shape}, got {arr.shape}")
            setattr(self, name, arr)
        if len(self.labels) != n:
            raise WeakHopfError("one label per basis element required")
        self.labels = [str(x) for x in self.labels]

    # coefficient-level operations
    def product(self, x, y):
        return np.einsum("i,j,ijk->k", x, y, self.mult)

    def adjoint(self, x):
        return self.star @ np.conj(x)

    def left_mult(self, i: int) -> np.ndarray:
        """Matrix of ``y -> b_i y`` on coefficients."""
        return self.mult[i].T

    def gram(self) -> np.ndarray:
        """``G[i, j] = h(b_i^* b_j)``."""
        return np.einsum("ki,kjl,l->ij", self.star, self.mult, self.haar)

    def star_hat(self) -> np.ndarray:
        """Antilinear star of the dual algebra on the dual basis.

        ``<phi^*, x> = conj(<phi, S(x)^*>)``, so ``beta^i* = sum_j M[j, i] beta^j``.
        """
        return (np.conj(self.star) @ self.antipode).T

    def orthonormalizer(self) -> np.ndarray:
        """``T`` with ``T^* T = G``: coefficients ``c`` become orthonormal coordinates ``T c``."""
        g = self.gram()
        g = (g + adj(g)) / 2
        return adj(np.linalg.cholesky(g))


@dataclass
class ValidationReport:
    residuals: dict
    failures: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


def validate(p: WhaPresentation, tol: Tolerance = DEFAULT_TOL) -> ValidationReport:
    """Check the structure-constant identities, Gram positivity and the *-representation law."""
    m, D, n = p.mult, p.delta, p.n
    # scale for relative comparisons: typical size of a structure tensor
    scale = max(1.0, fro(m), fro(D))
    res = {}
    res["associativity"] = fro(np.einsum("ijl,lkm->ijkm", m, m) - np.einsum("jkl,ilm->ijkm", m, m))
    res["unit"] = fro(np.einsum("i,ijk->jk", p.unit, m) - np.eye(n)) + fro(
        np.einsum("j,ijk->ik", p.unit, m) - np.eye(n))
    res["coassociativity"] = fro(np.einsum("ipq,prs->irsq", D, D) - np.einsum("ipq,qrs->iprs", D, D))
    res["counit"] = fro(np.einsum("ipq,p->iq", D, p.counit) - np.eye(n)) + fro(
        np.einsum("ipq,q->ip", D, p.counit) - np.eye(n))
    # Delta(b_i b_j) = Delta(b_i) Delta(b_j)
    lhs = np.einsum("ijk,kpq->ijpq", m, D)
    rhs = np.einsum("iab,jcd,acp,bdq->ijpq", D, D, m, m)
    res["comultiplicativity"] = fro(lhs - rhs)
    res["star_involution"] = fro(p.star @ np.conj(p.star) - np.eye(n))
    # (b_i b_j)^* = b_j^* b_i^*
    lhs = np.einsum("ijl,kl->ijk", np.conj(m), p.star)
    rhs = np.einsum("aj,bi,abk->ijk", p.star, p.star, m)
    res["star_antimultiplicative"] = fro(lhs - rhs)

    g = p.gram()
    res["gram_hermitean"] = fro(g - adj(g))
    eig = np.linalg.eigvalsh((g + adj(g)) / 2)
    res["gram_min_eigenvalue"] = float(eig.min()) if eig.size else 0.0
    # (b_i b_j, b_k) = (b_j, b_i^* b_k)
    lhs = np.einsum("ijl,lk->ijk", np.conj(m), g)
    rhs = np.einsum("si,skl,jl->ijk", p.star, m, g)
    res["star_representation"] = fro(lhs - rhs)

    failures = {}
    for name, value in res.items():
        if name == "gram_min_eigenvalue":
            if value <= tol.rank_tol * max(1.0, float(np.abs(eig).max())) * n:
                failures[name] = value
        elif value > tol.eq_tol * scale:
            failures[name] = value
    return ValidationReport(res, failures)


def _require_valid(p: WhaPresentation, tol: Tolerance) -> None:
    rep = validate(p, tol)
    if not rep.ok:
        raise InvalidPresentationError(rep.failures)


def regular_representation(p: WhaPresentation, tol: Tolerance = DEFAULT_TOL):
    """Left multiplication by ``b_i`` and the action of ``beta^i``, in orthonormal coordinates.

    ``pi(beta^i) x = x_(1) <x_(2), beta^i>``.
    """
    _require_valid(p, tol)
    t = p.orthonormalizer()
    ti = np.linalg.inv(t)
    rep_a = np.stack([t @ p.left_mult(i) @ ti for i in range(p.n)])
    rep_ahat = np.stack([t @ p.delta[:, :, i].T @ ti for i in range(p.n)])
    return rep_a, rep_ahat


def build_v_regular(p: WhaPresentation, tol: Tolerance = DEFAULT_TOL) -> MpiCandidate:
    """``V(x (x) y) = x_(1) (x) x_(2) y`` on ``H = A`` with the ``h``-inner product."""
    _require_valid(p, tol)
    n = p.n
    # M[(p, k), (i, j)] = sum_q delta[i, p, q] mult[q, j, k]
    m = np.einsum("ipq,qjk->pkij", p.delta, p.mult).reshape(n * n, n * n)
    t = p.orthonormalizer()
    tt = kron(t, t)
    v = tt @ m @ np.linalg.inv(tt)
    return MpiCandidate(n, v, tol)


def _check_rep(mats, mult, star, name, tol):
    n = mats.shape[0]
    flat = mats.reshape(n, -1)
    s = np.linalg.svd(flat, compute_uv=False)
    if numerical_rank(s, flat.shape, tol) < n:
        raise RepresentationError(f"{name}: not faithful")
    scale = max(1.0, float(np.max(np.linalg.norm(flat, axis=1))) ** 2)
    prods = np.einsum("iab,jbc->ijac", mats, mats)
    expect = np.einsum("ijk,kac->ijac", mult, mats)
    if fro(prods - expect) > tol.eq_tol * scale * n:
        raise RepresentationError(f"{name}: not multiplicative")
    stars = np.einsum("ki,kab->iab", star, mats)
    if fro(adj(mats) - stars) > tol.eq_tol * scale * n:
        raise RepresentationError(f"{name}: not a *-representation")


def build_v_from_rep(p: WhaPresentation, rep_a, rep_ahat, tol: Tolerance = DEFAULT_TOL) -> MpiCandidate:
    """``V = sum_i pi(beta^i) (x) pi(b_i)`` with ``beta^i`` dual to ``b_i``.

    ``rep_a[i]`` represents ``b_i`` and ``rep_ahat[i]`` represents ``beta^i``;
    the product of the dual basis is the transpose of ``delta``, so both
    inputs are checked against ``p`` rather than trusted.
    """
    _require_valid(p, tol)
    rep_a = np.asarray(rep_a, dtype=complex)
    rep_ahat = np.asarray(rep_ahat, dtype=complex)
    if rep_a.shape != rep_ahat.shape or rep_a.shape[0] != p.n or rep_a.shape[1] != rep_a.shape[2]:
        raise RepresentationError("representations must be n matrices on one common space")
    _check_rep(rep_a, p.mult, p.star, "A", tol)
    # beta^i beta^j = sum_k delta[k, i, j] beta^k
    _check_rep(rep_ahat, np.transpose(p.delta, (1, 2, 0)), p.star_hat(), "Ahat", tol)
    d = rep_a.shape[1]
    v = np.einsum("iab,icd->acbd", rep_ahat, rep_a).reshape(d * d, d * d)
    return MpiCandidate(d, v, tol)


# --------------------------------------------------------------------------
# example battery


def group_algebra(table: Sequence[Sequence[int]], labels=None) -> WhaPresentation:
    """Group algebra ``C[G]`` from a multiplication table ``table[g][h] = gh``."""
    table = np.asarray(table, dtype=int)
    n = table.shape[0]
    if table.shape != (n, n) or table.min() < 0 or table.max() >= n:
        raise WeakHopfError("multiplication table must be n x n with entries in range(n)")
    ident = [e for e in range(n) if all(table[e, g] == g and table[g, e] == g for g in range(n))]
    if len(ident) != 1:
        raise WeakHopfError("multiplication table has no identity")
    e = ident[0]
    inv = np.full(n, -1)
    for g in range(n):
        hs = [h for h in range(n) if table[g, h] == e and table[h, g] == e]
        if len(hs) != 1:
            raise WeakHopfError("multiplication table is not a group")
        inv[g] = hs[0]
    for g in range(n):
        if sorted(table[g]) != list(range(n)):
            raise WeakHopfError("multiplication table is not a group")
    mult = np.zeros((n, n, n))
    delta = np.zeros((n, n, n))
    anti = np.zeros((n, n))
    for g in range(n):
        delta[g, g, g] = 1.0
        anti[inv[g], g] = 1.0
        for h in range(n):
            mult[g, h, table[g, h]] = 1.0
    unit = np.zeros(n)
    unit[e] = 1.0
    return WhaPresentation(
        n=n,
        labels=list(labels) if labels is not None else [f"g{g}" for g in range(n)],
        mult=mult, delta=delta, counit=np.ones(n), antipode=anti, star=anti.copy(),
        unit=unit, haar=unit.copy(),
    )


def cyclic_group_algebra(n: int) -> WhaPresentation:
    if n < 1:
        raise WeakHopfError("cyclic group order must be positive")
    table = [[(g + h) % n for h in range(n)] for g in range(n)]
    return group_algebra(table, labels=[f"z{g}" for g in range(n)])


def pair_groupoid(n: int, haar=None) -> WhaPresentation:
    """Algebra of the pair groupoid on ``n`` points: matrix units ``e_ij`` with ``Delta(e_ij) = e_ij (x) e_ij``."""
    if n < 1:
        raise WeakHopfError("pair groupoid needs n >= 1")
    N = n * n

    def ix(i, j):
        return i * n + j

    mult = np.zeros((N, N, N))
    delta = np.zeros((N, N, N))
    anti = np.zeros((N, N))
    unit = np.zeros(N)
    h = np.zeros(N)
    for i in range(n):
        unit[ix(i, i)] = 1.0
        h[ix(i, i)] = 1.0
        for j in range(n):
            delta[ix(i, j), ix(i, j), ix(i, j)] = 1.0
            anti[ix(j, i), ix(i, j)] = 1.0
            for l in range(n):
                mult[ix(i, j), ix(j, l), ix(i, l)] = 1.0
    return WhaPresentation(
        n=N, labels=[f"e{i}{j}" for i in range(n) for j in range(n)],
        mult=mult, delta=delta, counit=np.ones(N), antipode=anti, star=anti.copy(),
        unit=unit, haar=h if haar is None else np.asarray(haar),
    )


def nonunital_counterexample(tol: Tolerance = DEFAULT_TOL) -> MpiCandidate:
    """``V = e11 (x) e12 + e22 (x) e22`` on ``C^2 (x) C^2``."""
    e = np.zeros((2, 2, 2, 2))
    e[0, 0, 0, 0] = e[0, 1, 0, 1] = e[1, 0, 1, 0] = e[1, 1, 1, 1] = 1.0
    v = kron(e[0, 0], e[0, 1]) + kron(e[1, 1], e[1, 1])
    return MpiCandidate(2, v, tol)


KINDS = ("nonunital_counterexample", "group_algebra", "pair_groupoid")


@dataclass(frozen=True)
class ExampleSpec:
    kind: str
    n: int | None = None
    table: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise WeakHopfError(f"unknown example kind {self.kind!r}")
        if self.kind == "group_algebra" and (self.n is None) == (self.table is None):
            raise WeakHopfError("group_algebra needs exactly one of n (cyclic) or table")
        if self.kind == "pair_groupoid" and (self.n is None or self.n < 1):
            raise WeakHopfError("pair_groupoid needs n >= 1")
        if self.kind == "group_algebra" and self.n is not None and self.n < 1:
            raise WeakHopfError("cyclic group order must be positive")

    def presentation(self) -> WhaPresentation | None:
        if self.kind == "group_algebra":
            return cyclic_group_algebra(self.n) if self.table is None else group_algebra(self.table)
        if self.kind == "pair_groupoid":
            return pair_groupoid(self.n)
        return None


def generate(e: ExampleSpec, tol: Tolerance = DEFAULT_TOL) -> tuple[MpiCandidate, dict]:
    """The concrete ``V`` for an example together with the classification it should get."""
    if e.kind == "nonunital_counterexample":
        c = nonunital_counterexample(tol)
        return c, {
            "verdict": MPI, "is_unital": False, "is_unitary": False, "dim_A": 2, "dim_Ahat": 2,
            "Ahat_contains_identity": True, "A_has_unit": False, "rank_V": 2,
        }
    p = e.presentation()
    c = build_v_regular(p, tol)
    if e.kind == "group_algebra":
        return c, {
            "verdict": WHA, "is_unital": True, "is_unitary": True, "is_regular": True,
            "dim_A": p.n, "dim_Ahat": p.n, "dim_AL": 1, "dim_AR": 1, "rank_V": p.n**2,
        }
    n = e.n
    return c, {
        "verdict": WHA, "is_unital": True, "is_unitary": n == 1, "is_regular": True,
        "dim_A": n * n, "dim_Ahat": n * n, "dim_AL": n, "dim_AR": n, "rank_V": n**3,
    }


__all__ = [
    "ExampleSpec", "KINDS", "NOT_MPI", "ValidationReport", "WhaPresentation", "build_v_from_rep",
    "build_v_regular", "cyclic_group_algebra", "generate", "group_algebra",
    "nonunital_counterexample", "pair_groupoid", "regular_representation", "validate",
]
