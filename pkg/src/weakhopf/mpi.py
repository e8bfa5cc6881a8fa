"""Classification of an operator ``V`` on ``H (x) H``.

The chain is: partial isometry and the four defining identities (MPI), then
units in both legs (unital MPI, weak bialgebras in duality), then
regularity and star-closure (C*-weak Hopf algebras with antipodes read off
from ``V^*``). Every stage is recomputed from ``V`` alone.

Naming: ``A`` is the right leg ``{(w (x) id)(V)}``, ``Ahat`` the left leg
``{(id (x) w)(V)}``; ``E = V V^*`` and ``Ehat = V^* V``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import (
    NoAntipodeError,
    NotClosedError,
    NotInLegError,
    NotUnitalError,
    NotWhaError,
    WeakHopfError,
)
from .tensor import (
    DEFAULT_TOL,
    Functional,
    OpSubspace,
    PartialIsometryCheck,
    Tolerance,
    adj,
    close,
    commutant,
    flip,
    fro,
    is_partial_isometry,
    kron,
    leg_blocks,
    leg_word,
    numerical_rank,
    partial_contract,
    residual,
    span_basis,
)

NOT_MPI = "not-MPI"
MPI = "MPI"
UNITAL = "unital-MPI/WBA"
WHA = "regular-unital-MPI/C*-WHA"
VERDICT_ORDER = (NOT_MPI, MPI, UNITAL, WHA)

AXIOMS = ("pentagon", "hexa1", "hexa2", "hexa3")
DERIVED = ("first", "second", "third", "fourth", "fifth", "sixth")


@dataclass(frozen=True, eq=False)
class MpiCandidate:
    d: int
    v: np.ndarray
    tol: Tolerance = DEFAULT_TOL

    def __post_init__(self):
        v = np.asarray(self.v, dtype=complex)
        if v.shape != (self.d**2, self.d**2):
            raise WeakHopfError(f"V must be {self.d**2}x{self.d**2}, got {v.shape}")
        object.__setattr__(self, "v", v)

    @cached_property
    def vstar(self):
        return adj(self.v)

    @cached_property
    def E(self):
        return self.v @ self.vstar

    @cached_property
    def Ehat(self):
        return self.vstar @ self.v

    @cached_property
    def norm(self) -> float:
        return fro(self.v)

    def word3(self, *keys: str) -> np.ndarray:
        """Product of ``V_ij`` (key ``"ij"``) and ``V_ij^*`` (key ``"ij*"``) on ``H^(x)3``."""
        factors = []
        for key in keys:
            op = self.vstar if key.endswith("*") else self.v
            factors.append((op, (int(key[0]), int(key[1]))))
        return leg_word(factors, self.d)

    @cached_property
    def analysis(self) -> "Analysis":
        return analyze(self)

    def conjugated(self, u) -> "MpiCandidate":
        """``(u (x) u) V (u (x) u)^*`` for a unitary ``u`` on ``H``."""
        uu = kron(u, u)
        return MpiCandidate(self.d, uu @ self.v @ adj(uu), self.tol)

    def lam(self, f: Functional) -> np.ndarray:
        return partial_contract(self.v, 1, f)

    def rho(self, f: Functional) -> np.ndarray:
        return partial_contract(self.v, 2, f)


# --------------------------------------------------------------------------
# Eqs. on H (x) H (x) H


@dataclass
class MpiCheck:
    partial_isometry: PartialIsometryCheck
    residuals: dict
    scales: dict
    eq_tol: float

    @property
    def failed(self) -> list[str]:
        out = [] if self.partial_isometry.ok else ["partial_isometry"]
        return out + [k for k in AXIOMS if self.residuals[k] > self.eq_tol * self.scales[k]]

    @property
    def ok(self) -> bool:
        return not self.failed


IDENTITIES = {
    "pentagon": (("23", "12"), ("12", "13", "23")),
    "hexa1": (("13", "23", "23*"), ("12*", "12", "13")),
    "hexa2": (("12", "12*", "23"), ("23", "12", "12*")),
    "hexa3": (("12", "23*", "23"), ("23*", "23", "12")),
}

DERIVED_IDENTITIES = {
    "first": (("12*", "23", "12"), ("13", "23")),
    "second": (("23", "12", "23*"), ("12", "13")),
    "third": (("12", "23*"), ("23*", "12", "13")),
    "fourth": (("12*", "23"), ("13", "23", "12*")),
    "fifth": (("12", "13", "13*"), ("23", "23*", "12")),
    "sixth": (("13*", "13", "23"), ("23", "12*", "12")),
}


def _sides(c: MpiCandidate, table: dict) -> dict:
    return {name: (c.word3(*lhs), c.word3(*rhs)) for name, (lhs, rhs) in table.items()}


def _identity_sides(c: MpiCandidate) -> dict:
    return _sides(c, IDENTITIES)


def _derived_sides(c: MpiCandidate) -> dict:
    return _sides(c, DERIVED_IDENTITIES)


def _scale(c: MpiCandidate, lhs, rhs) -> float:
    # |V_ij|_F = sqrt(d) |V|_F sets the natural size of both sides
    return max(fro(lhs), fro(rhs), np.sqrt(c.d) * c.norm)


def check_mpi(c: MpiCandidate) -> MpiCheck:
    """Residuals of the pentagon and the three hexagon-type identities."""
    pi = is_partial_isometry(c.v, c.tol)
    res, scales = {}, {}
    for name, (lhs, rhs) in _identity_sides(c).items():
        res[name] = residual(lhs, rhs)
        scales[name] = _scale(c, lhs, rhs)
    return MpiCheck(pi, res, scales, c.tol.eq_tol)


def check_derived(c: MpiCandidate) -> dict:
    """Residuals of the six consequences of the defining identities."""
    return {name: residual(lhs, rhs) for name, (lhs, rhs) in _derived_sides(c).items()}


# --------------------------------------------------------------------------
# legs and pairing


@dataclass
class LegPair:
    right_leg: OpSubspace  # A
    left_leg: OpSubspace  # Ahat
    coeffs: np.ndarray  # V = sum_mk coeffs[m, k] ahat_m (x) a_k
    pairing: np.ndarray  # pairing[m, k] = <a_k, ahat_m>
    reconstruction_residual: float

    @property
    def A(self) -> OpSubspace:
        return self.right_leg

    @property
    def Ahat(self) -> OpSubspace:
        return self.left_leg

    def pair(self, x, phi) -> complex:
        """``<x, phi>`` for ``x`` in ``A`` and ``phi`` in ``Ahat``."""
        return complex(self.Ahat.coeffs(phi) @ self.pairing @ self.A.coeffs(x))

    def dual_basis(self) -> np.ndarray:
        """Elements ``beta^k`` of ``Ahat`` with ``<a_j, beta^k> = delta_jk``."""
        return np.einsum("mk,mab->kab", self.coeffs, self.Ahat.basis)


def legs(c: MpiCandidate) -> LegPair:
    d, tol = c.d, c.tol
    A = span_basis(leg_blocks(c.v, 1, d), tol)
    Ahat = span_basis(leg_blocks(c.v, 2, d), tol)
    if len(A) != len(Ahat):
        raise WeakHopfError("leg dimensions differ; pairing would be degenerate")
    v4 = c.v.reshape(d, d, d, d)
    coeffs = np.einsum("mab,kcd,acbd->mk", np.conj(Ahat.basis), np.conj(A.basis), v4,
                       optimize=True)
    recon = np.einsum("mk,mab,kcd->acbd", coeffs, Ahat.basis, A.basis,
                      optimize=True).reshape(d * d, d * d)
    if len(A):
        s = np.linalg.svd(coeffs, compute_uv=False)
        if numerical_rank(s, coeffs.shape, tol) != len(A):
            raise WeakHopfError("pairing between the legs is degenerate")
        pairing = np.linalg.inv(coeffs).T
    else:
        pairing = np.zeros((0, 0), dtype=complex)
    return LegPair(A, Ahat, coeffs, pairing, residual(recon, c.v))


def preimage(c: MpiCandidate, x, leg: int) -> Functional:
    """Minimum-norm functional ``w`` with ``lam(w) = x`` (leg 1) or ``rho(w) = x`` (leg 2)."""
    d = c.d
    blocks = leg_blocks(c.v, leg, d).reshape(d * d, d * d).T
    sol, *_ = np.linalg.lstsq(blocks, np.asarray(x, dtype=complex).reshape(-1), rcond=None)
    f = Functional(sol.reshape(d, d).T)
    got = partial_contract(c.v, leg, f)
    if not close(got, x, c.tol, scale=1.0):
        raise NotInLegError(f"not a leg element (residual {residual(got, x):.3g})")
    return f


def convolve(c: MpiCandidate, f: Functional, g: Functional, which: str) -> Functional:
    """``star``: ``(f*g)(X) = (f (x) g)(V^*(1 (x) X)V)``; ``diamond``: ``(f (x) g)(V(X (x) 1)V^*)``."""
    d = c.d
    fg = kron(f.dual, g.dual)
    if which == "star":
        m = (c.v @ fg @ c.vstar).reshape(d, d, d, d)
        return Functional(np.einsum("ikil->kl", m))
    if which == "diamond":
        m = (c.vstar @ fg @ c.v).reshape(d, d, d, d)
        return Functional(np.einsum("ikjk->ij", m))
    raise WeakHopfError(f"unknown convolution {which!r}")


def coproduct(c: MpiCandidate, x, which: str = "A", lp: LegPair | None = None) -> np.ndarray:
    """``Delta(x) = V(x (x) 1)V^*`` on ``A`` or ``Deltahat(x) = V^*(1 (x) x)V`` on ``Ahat``."""
    lp = legs(c) if lp is None else lp
    eye = np.eye(c.d)
    if which == "A":
        if not lp.A.contains(x, scale=1.0):
            raise NotInLegError("not a leg element of A")
        return c.v @ kron(x, eye) @ c.vstar
    if which == "Ahat":
        if not lp.Ahat.contains(x, scale=1.0):
            raise NotInLegError("not a leg element of Ahat")
        return c.vstar @ kron(eye, x) @ c.v
    raise WeakHopfError(f"which must be 'A' or 'Ahat', got {which!r}")


def structure_tensor(c: MpiCandidate, s: OpSubspace, which: str) -> tuple[np.ndarray, float]:
    """Coefficients ``D[k, p, q]`` of the coproduct of ``s_k`` on ``s_p (x) s_q``.

    Also returns the largest distance of a coproduct from ``s (x) s``.
    """
    d, n = c.d, len(s)
    eye = np.eye(d)
    if which == "A":
        deltas = np.stack([c.v @ kron(x, eye) @ c.vstar for x in s.basis])
    else:
        deltas = np.stack([c.vstar @ kron(eye, x) @ c.v for x in s.basis])
    deltas = deltas.reshape(n, d, d, d, d)
    cb = np.conj(s.basis)
    out = np.einsum("pab,qce,kacbe->kpq", cb, cb, deltas, optimize=True)
    recon = np.einsum("kpq,pab,qce->kacbe", out, s.basis, s.basis, optimize=True)
    worst = float(np.max(np.linalg.norm((recon - deltas).reshape(n, -1), axis=1))) if n else 0.0
    return out, worst


# --------------------------------------------------------------------------
# units, counits, corners


def find_unit(s: OpSubspace, tol: Tolerance | None = None) -> Optional[np.ndarray]:
    """The two-sided unit of the algebra ``s``, or ``None`` if it has none."""
    tol = s.tol if tol is None else tol
    if len(s) == 0:
        return None
    if not s.is_closed():
        raise NotClosedError("subspace is not closed under multiplication")
    n, d = len(s), s.d
    prods = s.products()  # prods[i, j] = s_i s_j
    # unknown e = sum_i c_i s_i; need e s_j = s_j and s_j e = s_j for all j
    left = np.transpose(prods, (1, 2, 3, 0)).reshape(n * d * d, n)
    right = np.transpose(prods, (0, 2, 3, 1)).reshape(n * d * d, n)
    system = np.vstack([left, right])
    rhs = np.concatenate([s.flat.reshape(-1), s.flat.reshape(-1)])
    sol, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    if fro(system @ sol - rhs) > tol.eq_tol * max(fro(rhs), 1.0) * 10:
        return None
    return s.element(sol)


@dataclass
class Corners:
    AL: OpSubspace
    AR: OpSubspace
    AhatL: OpSubspace
    AhatR: OpSubspace
    checks: dict


def corners(c: MpiCandidate, lp: LegPair | None = None) -> Corners:
    """Left and right subalgebras of both legs, read off from VV* and V*V."""
    lp = legs(c) if lp is None else lp
    d, tol = c.d, c.tol
    AL = span_basis(leg_blocks(c.E, 1, d), tol)
    AR = span_basis(leg_blocks(c.E, 2, d), tol)
    AhatL = span_basis(leg_blocks(c.Ehat, 1, d), tol)
    AhatR = span_basis(leg_blocks(c.Ehat, 2, d), tol)
    AR_alt = span_basis(leg_blocks(c.Ehat, 1, d), tol)
    am2 = 0.0
    for x in AR.basis:
        try:
            f = preimage(c, x, 1)
        except NotInLegError:
            am2 = np.inf
            break
        am2 = max(am2, residual(partial_contract(c.Ehat, 1, f), x))
    checks = {
        "AL_star_closed": star_closed(AL),
        "AR_star_closed": star_closed(AR),
        "AhatL_star_closed": star_closed(AhatL),
        "AhatR_star_closed": star_closed(AhatR),
        "AL_in_A": AL.issubspace(lp.A),
        "AR_in_A": AR.issubspace(lp.A),
        "AhatL_in_Ahat": AhatL.issubspace(lp.Ahat),
        "AhatR_in_Ahat": AhatR.issubspace(lp.Ahat),
        "AR_equals_AhatL": AR.equals(AhatL) and AR.equals(AR_alt),
        "amalgamation_residual": am2,
    }
    return Corners(AL, AR, AhatL, AhatR, checks)


def star_closed(s: OpSubspace) -> bool:
    return all(s.contains(b.conj().T, scale=1.0) for b in s.basis)


@dataclass
class WbaStructure:
    unit_A: np.ndarray
    unit_Ahat: np.ndarray
    counit_functional_A: Functional  # eps with rho(eps) = unit_Ahat
    counit_functional_Ahat: Functional  # epshat with lam(epshat) = unit_A
    counit_A: np.ndarray  # eps on the basis of A
    counit_Ahat: np.ndarray  # epshat on the basis of Ahat
    delta_A: np.ndarray
    delta_Ahat: np.ndarray
    corners: Corners
    residuals: dict = field(default_factory=dict)


def find_counit(c: MpiCandidate, which: str = "A", lp: LegPair | None = None,
                units: tuple | None = None) -> Functional:
    """A functional restricting to the counit of ``A`` (``rho(eps) = 1hat``) or ``Ahat``.

    The minimum-norm solution is returned; only its restriction to the leg
    is canonical.
    """
    lp = legs(c) if lp is None else lp
    if units is None:
        units = (find_unit(lp.A), find_unit(lp.Ahat))
    one, onehat = units
    if one is None or onehat is None:
        raise NotUnitalError("not unital")
    try:
        if which == "A":
            return preimage(c, onehat, 2)
        if which == "Ahat":
            return preimage(c, one, 1)
    except NotInLegError as exc:
        raise NotUnitalError("not unital") from exc
    raise WeakHopfError(f"which must be 'A' or 'Ahat', got {which!r}")


def weak_bialgebra(c: MpiCandidate, lp: LegPair | None = None) -> WbaStructure:
    lp = legs(c) if lp is None else lp
    one, onehat = find_unit(lp.A), find_unit(lp.Ahat)
    if one is None or onehat is None:
        raise NotUnitalError("not unital")
    eps = find_counit(c, "A", lp, (one, onehat))
    epshat = find_counit(c, "Ahat", lp, (one, onehat))
    dA, memA = structure_tensor(c, lp.A, "A")
    dAh, memAh = structure_tensor(c, lp.Ahat, "Ahat")
    d = c.d
    eye = np.eye(d)

    counit_A = np.array([eps(a) for a in lp.A.basis])
    counit_Ahat = np.array([epshat(a) for a in lp.Ahat.basis])
    # same restriction through the pairing with the other unit
    counit_A_pair = lp.Ahat.coeffs(onehat) @ lp.pairing
    counit_Ahat_pair = lp.pairing @ lp.A.coeffs(one)

    counit_law = 0.0
    for x in lp.A.basis:
        dx = c.v @ kron(x, eye) @ c.vstar
        counit_law = max(counit_law, residual(partial_contract(dx, 1, eps), x),
                         residual(partial_contract(dx, 2, eps), x))
    for x in lp.Ahat.basis:
        dx = c.vstar @ kron(eye, x) @ c.v
        counit_law = max(counit_law, residual(partial_contract(dx, 1, epshat), x),
                         residual(partial_contract(dx, 2, epshat), x))

    def coassoc(D):
        worst = 0.0
        for k in range(D.shape[0]):
            lhs = np.einsum("pq,prs->rsq", D[k], D)
            rhs = np.einsum("pq,qrs->prs", D[k], D)
            worst = max(worst, residual(lhs, rhs))
        return worst

    # (Delta(1) (x) 1)(1 (x) Delta(1)) and the same in the opposite order
    E3a, E3b = [(c.E, (1, 2)), (one, (3,))], [(one, (1,)), (c.E, (2, 3))]
    weak_lhs = leg_word(E3a + E3b, d)
    weak_rhs = c.word3("12", "13", "13*", "12*")
    Eh3a, Eh3b = [(c.Ehat, (1, 2)), (onehat, (3,))], [(onehat, (1,)), (c.Ehat, (2, 3))]
    weakh_lhs = leg_word(Eh3a + Eh3b, d)
    weakh_rhs = c.word3("23*", "13*", "13", "23")

    res = {
        "unit_weyl": residual(one, onehat),
        "delta_unit": residual(c.v @ kron(one, eye) @ c.vstar, c.E),
        "deltahat_unit": residual(c.vstar @ kron(eye, onehat) @ c.v, c.Ehat),
        "delta_membership": memA,
        "deltahat_membership": memAh,
        "counit_restriction": max(residual(counit_A, counit_A_pair),
                                  residual(counit_Ahat, counit_Ahat_pair)),
        "counit_laws": counit_law,
        "coassociativity": max(coassoc(dA), coassoc(dAh)),
        "weak_comult_unit": residual(weak_lhs, weak_rhs),
        "weak_comult_unit_commute": residual(weak_lhs, leg_word(E3b + E3a, d)),
        "weak_comult_unithat": residual(weakh_lhs, weakh_rhs),
        "weak_comult_unithat_commute": residual(weakh_lhs, leg_word(Eh3b + Eh3a, d)),
    }
    return WbaStructure(one, onehat, eps, epshat, counit_A, counit_Ahat, dA, dAh,
                        corners(c, lp), res)


def weyl_check(c: MpiCandidate, w: WbaStructure, lp: LegPair | None = None) -> dict:
    """Heisenberg-double commutation relation and ``1 = 1hat``.

    ``phi x = x_(1) <x_(2), phi_(1)> phi_(2)`` is evaluated on the leg bases
    with the right side built from the structure tensors and the pairing.
    """
    lp = legs(c) if lp is None else lp
    A, Ah = lp.A, lp.Ahat
    lhs = np.einsum("mab,kbc->mkac", Ah.basis, A.basis)
    rhs = np.einsum("kpq,mrs,rq,pab,sbc->mkac", w.delta_A, w.delta_Ahat, lp.pairing,
                    A.basis, Ah.basis, optimize=True)
    return {"weyl_relation": residual(lhs, rhs), "unit_weyl": residual(w.unit_A, w.unit_Ahat)}


# --------------------------------------------------------------------------
# regularity and antipode


@dataclass
class CvResult:
    space: OpSubspace
    closure_residual: float
    commutation_residual: float


def c_of_v(c: MpiCandidate) -> CvResult:
    """``C(V) = span{(id (x) w)(Sigma V)}``, the span of ``V_2 X V_1``."""
    d = c.d
    cv = span_basis(leg_blocks(flip(d) @ c.v, 2, d), c.tol)
    ar = span_basis(leg_blocks(c.Ehat, 1, d), c.tol)
    comm = 0.0
    for x in cv.basis:
        for a in ar.basis:
            comm = max(comm, residual(x @ a, a @ x))
    return CvResult(cv, cv.closure_residual(), comm)


@dataclass
class RegularityCheck:
    regular: bool
    dim_cv: int
    dim_target: int
    target: OpSubspace


def check_regular(c: MpiCandidate, w: WbaStructure, cv: CvResult | None = None) -> RegularityCheck:
    """``C(V) = (A^R)' cap 1 L(H) 1`` as subspaces."""
    cv = c_of_v(c) if cv is None else cv
    d = c.d
    one = w.unit_A
    units = np.eye(d * d, dtype=complex).reshape(d * d, d, d)
    corner = span_basis(one @ units @ one, c.tol, d=d)
    target = commutant(w.corners.AR, within=corner)
    return RegularityCheck(cv.space.equals(target), len(cv.space), len(target), target)


@dataclass
class Antipode:
    S: np.ndarray  # matrix on coefficients of A
    Shat: np.ndarray  # matrix on coefficients of Ahat
    lp: LegPair
    residuals: dict

    def apply(self, x) -> np.ndarray:
        return self.lp.A.element(self.S @ self.lp.A.coeffs(x))

    def apply_inverse(self, x) -> np.ndarray:
        return self.lp.A.element(np.linalg.solve(self.S, self.lp.A.coeffs(x)))

    def apply_hat(self, x) -> np.ndarray:
        return self.lp.Ahat.element(self.Shat @ self.lp.Ahat.coeffs(x))


def antipode(c: MpiCandidate, w: WbaStructure, lp: LegPair | None = None) -> Antipode:
    """``S(lam(w)) = (w (x) id)(V^*)`` and ``Shat(rho(w)) = (id (x) w)(V^*)``."""
    lp = legs(c) if lp is None else lp
    A, Ah = lp.A, lp.Ahat
    if not (star_closed(A) and star_closed(Ah)):
        raise NoAntipodeError("no antipode in scope: legs are not star-closed")
    n = len(A)
    S = np.zeros((n, n), dtype=complex)
    Shat = np.zeros((n, n), dtype=complex)
    membership = involution = 0.0
    for k, a in enumerate(A.basis):
        f = preimage(c, a, 1)
        sa = partial_contract(c.vstar, 1, f)
        membership = max(membership, A.distance(sa))
        involution = max(involution, residual(sa, adj(c.lam(f.star()))))
        S[:, k] = A.coeffs(sa)
    for m, a in enumerate(Ah.basis):
        f = preimage(c, a, 2)
        sa = partial_contract(c.vstar, 2, f)
        membership = max(membership, Ah.distance(sa))
        involution = max(involution, residual(sa, adj(c.rho(f.star()))))
        Shat[:, m] = Ah.coeffs(sa)

    def anti_mult(sub, M):
        prods = sub.products()
        worst = 0.0
        for i in range(n):
            for j in range(n):
                s_ij = sub.element(M @ sub.coeffs(prods[i, j]))
                si, sj = sub.element(M[:, i]), sub.element(M[:, j])
                worst = max(worst, residual(s_ij, sj @ si))
        return worst

    # x_(1) (x) x_(2) S(x_(3)) = Delta(1)(x (x) 1), and its dual
    d = c.d
    eye = np.eye(d)
    SA = np.einsum("lq,lab->qab", S, A.basis)  # S(a_q)
    SAh = np.einsum("lq,lab->qab", Shat, Ah.basis)
    axiom = 0.0
    for k in range(n):
        t = np.einsum("pq,prs->rsq", w.delta_A[k], w.delta_A)
        lhs = np.einsum("rsq,rab,sce,qed->acbd", t, A.basis, A.basis, SA,
                        optimize=True).reshape(d * d, d * d)
        axiom = max(axiom, residual(lhs, c.E @ kron(A.basis[k], eye)))
        t = np.einsum("pq,prs->rsq", w.delta_Ahat[k], w.delta_Ahat)
        lhs = np.einsum("rsq,rab,sce,qed->acbd", t, Ah.basis, Ah.basis, SAh,
                        optimize=True).reshape(d * d, d * d)
        axiom = max(axiom, residual(lhs, c.Ehat @ kron(Ah.basis[k], eye)))

    beta = lp.dual_basis()
    v_from_shat = sum(kron(Ah.element(Shat @ Ah.coeffs(beta[k])), A.basis[k]) for k in range(n))
    v_from_s = sum(kron(beta[k], SA[k]) for k in range(n))
    if n == 0:
        v_from_s = v_from_shat = np.zeros_like(c.v)
    res = {
        "membership": membership,
        "involution_route": involution,
        "anti_multiplicative": max(anti_mult(A, S), anti_mult(Ah, Shat)) if n else 0.0,
        "transpose": residual(Shat.T @ lp.pairing, lp.pairing @ S),
        "antipode_axiom": axiom,
        "vstar_from_shat": residual(v_from_shat, c.vstar),
        "vstar_from_s": residual(v_from_s, c.vstar),
        "vvprime": residual(c.v @ v_from_s, c.E),
        "vprimev": residual(v_from_s @ c.v, c.Ehat),
    }
    return Antipode(S, Shat, lp, res)


# --------------------------------------------------------------------------
# full pipeline


@dataclass
class ClassificationReport:
    is_partial_isometry: bool
    partial_isometry_residual: float
    mpi_axioms: dict
    derived_identities: dict
    is_mpi: bool
    is_unital: bool
    star_closed_A: bool
    star_closed_Ahat: bool
    is_regular: bool
    theorem_consistent: bool
    is_unitary: bool
    verdict: str
    label: str
    dimensions: dict
    residuals: dict

    def summary(self) -> dict:
        """Discrete fields only (flags, dimensions, verdict); residuals excluded."""
        return {
            "is_partial_isometry": self.is_partial_isometry,
            "is_mpi": self.is_mpi,
            "is_unital": self.is_unital,
            "star_closed_A": self.star_closed_A,
            "star_closed_Ahat": self.star_closed_Ahat,
            "is_regular": self.is_regular,
            "theorem_consistent": self.theorem_consistent,
            "is_unitary": self.is_unitary,
            "verdict": self.verdict,
            "label": self.label,
            "dimensions": dict(self.dimensions),
        }


@dataclass
class Analysis:
    candidate: MpiCandidate
    mpi: MpiCheck
    derived: dict
    legs: Optional[LegPair] = None
    wba: Optional[WbaStructure] = None
    cv: Optional[CvResult] = None
    regularity: Optional[RegularityCheck] = None
    antipode: Optional[Antipode] = None
    weyl: dict = field(default_factory=dict)
    report: Optional[ClassificationReport] = None

    def require_wha(self):
        if self.report.verdict != WHA:
            raise NotWhaError(f"not a C*-WHA (verdict: {self.report.label})")
        return self


def _label(verdict: str, unitary: bool) -> str:
    if verdict == NOT_MPI:
        return "not-MPI"
    if verdict == MPI:
        return "MPI, non-unital"
    if verdict == UNITAL:
        return "unital MPI (weak bialgebras), not regular"
    if unitary:
        return "C*-Hopf (multiplicative unitary)"
    return "C*-WHA, regular unital MPI"


def analyze(c: MpiCandidate) -> Analysis:
    """Run the whole classification chain and keep every intermediate structure."""
    tol = c.tol
    chk = check_mpi(c)
    out = Analysis(c, chk, check_derived(c))
    dims = {"rank_V": int(np.linalg.matrix_rank(c.v, tol=tol.rank_tol * max(c.norm, 1e-300)))}
    unitary = c.norm > 0 and close(c.E, np.eye(c.d**2), tol) and close(c.Ehat, np.eye(c.d**2), tol)
    residuals = {}
    unital = regular = sc_A = sc_Ah = False
    verdict = NOT_MPI
    if chk.ok:
        verdict = MPI
        lp = out.legs = legs(c)
        dims.update(dim_A=len(lp.A), dim_Ahat=len(lp.Ahat))
        residuals["leg_reconstruction"] = lp.reconstruction_residual
        sc_A, sc_Ah = star_closed(lp.A), star_closed(lp.Ahat)
        out.cv = c_of_v(c)
        dims["dim_CV"] = len(out.cv.space)
        try:
            w = out.wba = weak_bialgebra(c, lp)
        except NotUnitalError:
            w = None
        if w is not None:
            unital = True
            verdict = UNITAL
            residuals.update(w.residuals)
            residuals["amalgamation"] = w.corners.checks["amalgamation_residual"]
            dims.update(dim_AL=len(w.corners.AL), dim_AR=len(w.corners.AR),
                        dim_AhatL=len(w.corners.AhatL), dim_AhatR=len(w.corners.AhatR))
            out.weyl = weyl_check(c, w, lp)
            residuals["weyl_relation"] = out.weyl["weyl_relation"]
            out.regularity = check_regular(c, w, out.cv)
            regular = out.regularity.regular
            dims["dim_commutant_target"] = out.regularity.dim_target
            if sc_A and sc_Ah:
                out.antipode = antipode(c, w, lp)
                residuals.update({f"antipode_{k}": v for k, v in out.antipode.residuals.items()})
            if regular and sc_A and sc_Ah:
                verdict = WHA
    # V = 0 has zero legs: trivially star-closed yet without unit, outside the equivalence
    applicable = chk.ok and dims["rank_V"] > 0
    consistent = (sc_A and sc_Ah) == (unital and regular) if applicable else True
    out.report = ClassificationReport(
        is_partial_isometry=chk.partial_isometry.ok,
        partial_isometry_residual=chk.partial_isometry.residual,
        mpi_axioms=dict(chk.residuals),
        derived_identities=dict(out.derived),
        is_mpi=chk.ok,
        is_unital=unital,
        star_closed_A=sc_A,
        star_closed_Ahat=sc_Ah,
        is_regular=regular,
        theorem_consistent=consistent,
        is_unitary=bool(unitary),
        verdict=verdict,
        label=_label(verdict, bool(unitary)),
        dimensions=dims,
        residuals=residuals,
    )
    return out


def classify(c: MpiCandidate) -> ClassificationReport:
    return c.analysis.report
