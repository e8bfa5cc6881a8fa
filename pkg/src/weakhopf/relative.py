"""Relative tensor products over finite-dimensional C*-algebras and the
pseudo-multiplicative unitary of a regular unital MPI.

A relative tensor product ``H (x)_psi K`` is realised as the range of the
projection ``E_psi = (beta (x) gamma)(e_psi)`` inside ``H (x) K``, where
``e_psi = sum_i index^-1 a_i (x) theta^{1/2}(b_i)`` is built from a
quasibasis ``{a_i, b_i}`` of the faithful positive functional ``psi``.
Elements of ``B^o (x) B`` are stored as ordinary Kronecker matrices; their
product in ``B^o (x) B`` is checked through the faithful representation
``x (x) y -> x^T (x) y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ActionError, NotPositiveError, WeakHopfError
from .mpi import Analysis, MpiCandidate, find_unit, preimage
from .tensor import (
    DEFAULT_TOL,
    Functional,
    OpSubspace,
    Tolerance,
    adj,
    close,
    commutant,
    flip,
    fro,
    isometry_onto,
    kron,
    leg_apply,
    leg_word,
    partial_contract,
    psd_power,
    residual,
    span_basis,
)


class FdCStarAlgebra:
    """A *-closed, multiplicatively closed, unital matrix algebra."""

    def __init__(self, space: OpSubspace):
        self.space = space
        self.tol = space.tol
        if not space.is_closed():
            raise WeakHopfError("algebra is not closed under multiplication")
        if not all(space.contains(adj(b), scale=1.0) for b in space.basis):
            raise WeakHopfError("algebra is not *-closed")
        unit = find_unit(space)
        if unit is None:
            raise WeakHopfError("algebra has no unit")
        self.unit = unit

    @classmethod
    def from_elements(cls, mats: Sequence, tol: Tolerance = DEFAULT_TOL) -> "FdCStarAlgebra":
        return cls(span_basis(mats, tol))

    @property
    def basis(self) -> np.ndarray:
        return self.space.basis

    @property
    def d(self) -> int:
        return self.space.d

    def __len__(self):
        return len(self.space)

    def coeffs(self, x):
        return self.space.coeffs(x)

    def opposite(self) -> "FdCStarAlgebra":
        """``B^o`` realised as the transposed matrices."""
        return FdCStarAlgebra(span_basis(np.transpose(self.basis, (0, 2, 1)), self.tol))

    def center(self) -> OpSubspace:
        return commutant(self.space, within=self.space)


@dataclass
class QuasibasisData:
    algebra: FdCStarAlgebra
    psi: Functional
    a: np.ndarray
    b: np.ndarray
    index_elt: np.ndarray
    theta: np.ndarray  # theta(a_k) = sum_j theta[j, k] a_j
    g: np.ndarray
    g_half: np.ndarray
    g_mhalf: np.ndarray
    u: np.ndarray
    v: np.ndarray
    e_psi: np.ndarray  # sum_i u_i (x) v_i as a Kronecker matrix
    residuals: dict = field(default_factory=dict)

    def apply_theta(self, x):
        return self.algebra.space.element(self.theta @ self.algebra.coeffs(x))

    def theta_power(self, x, p: float):
        """``theta^p(x) = g^p x g^-p``, only ``p = +-1/2, +-1`` are needed."""
        if p == 0.5:
            return self.g_half @ x @ self.g_mhalf
        if p == -0.5:
            return self.g_mhalf @ x @ self.g_half
        gp, gm = psd_power(self.g, p, self.algebra.tol), psd_power(self.g, -p, self.algebra.tol)
        return gp @ x @ gm


def _support_eigenvalues(x, unit, tol):
    w = isometry_onto(unit, tol)
    return np.linalg.eigvalsh(adj(w) @ ((x + adj(x)) / 2) @ w)


def quasibasis(B: FdCStarAlgebra, psi: Functional, tol: Tolerance | None = None,
               g: np.ndarray | None = None) -> QuasibasisData:
    """Quasibasis, index, modular automorphism and ``e_psi`` of a faithful positive ``psi``.

    ``g`` defaults to the density of ``psi`` with respect to the trace
    inside ``B``; any positive invertible implementer of the modular
    automorphism may be passed instead.
    """
    tol = B.tol if tol is None else tol
    a = B.basis
    n = len(a)
    gram = np.array([[psi(adj(x) @ y) for y in a] for x in a])
    if fro(gram - adj(gram)) > tol.eq_tol * max(fro(gram), 1e-300):
        raise NotPositiveError("psi is not positive on B")
    eig = np.linalg.eigvalsh((gram + adj(gram)) / 2)
    if eig.min() <= tol.rank_tol * max(eig.max(), 1e-300) * n:
        raise NotPositiveError("psi is not faithful and positive on B")

    prods = B.space.products()
    M = np.array([[psi(prods[k, j]) for j in range(n)] for k in range(n)])
    coef = np.linalg.inv(M)
    b = np.einsum("ik,kab->iab", coef, a)
    index = np.einsum("iab,ibc->ac", a, b)
    theta = np.array([[psi(a[k] @ b[j]) for k in range(n)] for j in range(n)])

    if g is None:
        traces = np.einsum("kab,lba->kl", a, a)
        rhs = np.array([psi(x) for x in a])
        g = B.space.element(np.linalg.solve(traces, rhs))
    g_half = psd_power(g, 0.5, tol)
    g_mhalf = psd_power(g, -0.5, tol)
    index_inv = psd_power(index, -1.0, tol)
    u = np.einsum("ab,ibc->iac", index_inv, a)
    v = np.einsum("ab,ibc,cd->iad", g_half, b, g_mhalf)
    e_psi = sum(kron(u[i], v[i]) for i in range(n))

    res = {}
    res["dual_basis"] = fro(np.array([[psi(b[i] @ a[j]) for j in range(n)] for i in range(n)])
                            - np.eye(n))
    rep1 = rep2 = 0.0
    for x in a:
        rep1 = max(rep1, residual(sum(a[i] * psi(b[i] @ x) for i in range(n)), x))
        rep2 = max(rep2, residual(sum(psi(x @ a[i]) * b[i] for i in range(n)), x))
    res["reproducing"] = max(rep1, rep2)
    res["index_central"] = max((residual(index @ x, x @ index) for x in a), default=0.0)
    res["index_hermitean"] = residual(index, adj(index))
    sup = _support_eigenvalues(index, B.unit, tol)
    res["index_min_eigenvalue"] = float(sup.min()) if sup.size else 0.0
    res["index_inverse"] = residual(index @ index_inv, B.unit)
    mod = 0.0
    theta_mats = np.einsum("jk,jab->kab", theta, a)
    for i in range(n):
        for j in range(n):
            mod = max(mod, abs(psi(a[i] @ a[j]) - psi(a[j] @ theta_mats[i])))
    res["modular"] = mod
    g_inv = psd_power(g, -1.0, tol)
    res["g_implements_theta"] = max(
        (residual(g @ a[k] @ g_inv, theta_mats[k]) for k in range(n)), default=0.0)
    res["g_hermitean"] = residual(g, adj(g))
    res["g_min_eigenvalue"] = float(_support_eigenvalues(g, B.unit, tol).min())
    op_rep = sum(kron(u[i].T, v[i]) for i in range(n))
    res["e_idempotent"] = residual(op_rep @ op_rep, op_rep)
    res["e_hermitean"] = max(residual(op_rep, adj(op_rep)), residual(e_psi, adj(e_psi)))
    sw = flip(B.d)
    res["e_flip_symmetric"] = residual(sw @ e_psi @ sw, e_psi)
    return QuasibasisData(B, psi, a, b, index, theta, g, g_half, g_mhalf, u, v, e_psi, res)


class Action:
    """A left (homomorphic) or right (anti-homomorphic) *-action of ``B`` on ``C^dim``."""

    def __init__(self, algebra: FdCStarAlgebra, images, side: str):
        if side not in ("left", "right"):
            raise ActionError(f"side must be 'left' or 'right', got {side!r}")
        images = np.asarray(images, dtype=complex)
        if images.shape[0] != len(algebra) or images.shape[1] != images.shape[2]:
            raise ActionError("one square image per basis element of the algebra")
        self.algebra = algebra
        self.images = images
        self.side = side

    @classmethod
    def from_map(cls, algebra: FdCStarAlgebra, fn: Callable, side: str) -> "Action":
        return cls(algebra, np.stack([fn(x) for x in algebra.basis]), side)

    @property
    def dim(self) -> int:
        return self.images.shape[1]

    def __call__(self, x) -> np.ndarray:
        return np.einsum("k,kab->ab", self.algebra.coeffs(x), self.images)

    def residuals(self) -> dict:
        B = self.algebra
        prods = B.space.products()
        n = len(B)
        hom = 0.0
        for i in range(n):
            for j in range(n):
                img = self(prods[i, j])
                expect = (self.images[i] @ self.images[j] if self.side == "left"
                          else self.images[j] @ self.images[i])
                hom = max(hom, residual(img, expect))
        star = max((residual(self(adj(x)), adj(self.images[k])) for k, x in enumerate(B.basis)),
                   default=0.0)
        return {"homomorphism": hom, "star": star}

    def check(self, tol: Tolerance | None = None) -> None:
        tol = self.algebra.tol if tol is None else tol
        scale = max(1.0, float(max((fro(m) for m in self.images), default=1.0)) ** 2)
        for name, value in self.residuals().items():
            if value > tol.eq_tol * scale:
                raise ActionError(f"{self.side} action fails {name} ({value:.3g})")


@dataclass
class RelTensor:
    E: np.ndarray  # on H (x) K
    E_op: np.ndarray  # on K (x) H
    residuals: dict


def rel_tensor_projection(beta: Action, gamma: Action, q: QuasibasisData) -> RelTensor:
    """``E_psi = (beta (x) gamma)(e_psi)`` and ``E_psi^o = (gamma (x) beta)(e_psi)``."""
    if beta.side != "right" or gamma.side != "left":
        raise ActionError("need a right action on H and a left action on K")
    beta.check()
    gamma.check()
    n = len(q.a)
    E = sum(kron(beta(q.u[i]), gamma(q.v[i])) for i in range(n))
    E_op = sum(kron(gamma(q.u[i]), beta(q.v[i])) for i in range(n))
    dh, dk = beta.dim, gamma.dim
    sw = flip(dh, dk)
    ih, ik = np.eye(dh), np.eye(dk)
    heart1 = heart2 = 0.0
    for x in q.a:
        lhs = E @ kron(ih, gamma(x))
        rhs = E @ kron(beta(q.theta_power(x, -0.5)), ik)
        heart1 = max(heart1, residual(lhs, rhs))
        lhs = E_op @ kron(ik, beta(x))
        rhs = E_op @ kron(gamma(q.theta_power(x, 0.5)), ih)
        heart2 = max(heart2, residual(lhs, rhs))
    res = {
        "projection": max(residual(E @ E, E), residual(E, adj(E))),
        "projection_op": max(residual(E_op @ E_op, E_op), residual(E_op, adj(E_op))),
        "flip_intertwines": residual(sw @ E, E_op @ sw),
        "amalgamation_heart1": heart1,
        "amalgamation_heart2": heart2,
    }
    return RelTensor(E, E_op, res)


def threefold_projections(beta_h: Action, gamma_m: Action, q_phi: QuasibasisData,
                          beta_m: Action, gamma_k: Action, q_psi: QuasibasisData) -> dict:
    """Both bracketings of ``H (x)_phi M (x)_psi K`` as projections on ``H (x) M (x) K``.

    ``gamma_m`` (left action of the first algebra) and ``beta_m`` (right
    action of the second) act on the same bimodule ``M``.
    """
    dh, dm, dk = beta_h.dim, gamma_m.dim, gamma_k.dim
    if beta_m.dim != dm:
        raise ActionError("bimodule actions must act on one space")
    bimodule = max((residual(x @ y, y @ x) for x in gamma_m.images for y in beta_m.images),
                   default=0.0)
    e_phi = rel_tensor_projection(beta_h, gamma_m, q_phi).E
    e_psi = rel_tensor_projection(beta_m, gamma_k, q_psi).E
    left_first = kron(e_phi, np.eye(dk))
    right_first = kron(np.eye(dh), e_psi)
    inner_right = left_first @ right_first  # H (x)_phi (M (x)_psi K)
    inner_left = right_first @ left_first  # (H (x)_phi M) (x)_psi K
    return {
        "H(MK)": inner_right,
        "(HM)K": inner_left,
        "bimodule_commutation": bimodule,
        "bracketings_agree": residual(inner_right, inner_left),
        "idempotent": residual(inner_right @ inner_right, inner_right),
    }


# --------------------------------------------------------------------------
# the pseudo-multiplicative unitary of a regular unital MPI


def hit_unit(c: MpiCandidate, x) -> np.ndarray:
    """``x -> 1hat``: ``1hat_(1) <x, 1hat_(2)>`` for ``x`` in ``A``."""
    return partial_contract(c.Ehat, 2, preimage(c, x, 1))


def unit_hit(c: MpiCandidate, x) -> np.ndarray:
    """``1hat <- x``: ``<x, 1hat_(1)> 1hat_(2)`` for ``x`` in ``A``."""
    return partial_contract(c.Ehat, 1, preimage(c, x, 1))


@dataclass
class ActionTriple:
    algebra: FdCStarAlgebra  # A^L
    quasibasis: QuasibasisData  # of the counit restricted to A^L
    alpha01: Action
    alpha02: Action
    alpha12: Action
    g_L: np.ndarray
    s_o: Callable
    residuals: dict

    def actions(self):
        return {"alpha01": self.alpha01, "alpha02": self.alpha02, "alpha12": self.alpha12}


def _wha(c: MpiCandidate) -> Analysis:
    return c.analysis.require_wha()


def action_triple(c: MpiCandidate, seed: int = 0) -> ActionTriple:
    """The three commuting actions of ``A^L`` on ``H`` and the unitary antipode.

    ``seed`` drives the random central rescaling used to confirm that
    ``theta^{1/2}`` and ``S_o`` do not depend on the choice of ``g_L``.
    """
    an = _wha(c)
    w, S, tol = an.wba, an.antipode, c.tol
    AL = FdCStarAlgebra(w.corners.AL)
    q = quasibasis(AL, w.counit_functional_A, tol)

    sg_half = psd_power(S.apply(q.g), 0.5, tol)
    sg_mhalf = psd_power(S.apply(q.g), -0.5, tol)

    def s_o(x):
        """Unitary antipode: ``S o theta^{-1/2}`` on ``A^L``; the matching map on ``A^R``."""
        if AL.space.contains(x, scale=1.0):
            return S.apply(q.g_mhalf @ x @ q.g_half)
        return S.apply(sg_half @ x @ sg_mhalf)

    alpha01 = Action(AL, AL.basis.copy(), "left")
    alpha02 = Action.from_map(AL, s_o, "right")
    alpha12 = Action.from_map(AL, lambda x: hit_unit(c, x), "left")

    res = {}
    for name, act in (("alpha01", alpha01), ("alpha02", alpha02), ("alpha12", alpha12)):
        for key, value in act.residuals().items():
            res[f"{name}_{key}"] = value
    comm = 0.0
    for p_, q_ in ((alpha01, alpha02), (alpha01, alpha12), (alpha02, alpha12)):
        for x in p_.images:
            for y in q_.images:
                comm = max(comm, residual(x @ y, y @ x))
    res["actions_commute"] = comm
    res["theta_is_S_squared"] = max(
        (residual(S.apply(S.apply(x)), q.apply_theta(x)) for x in AL.basis), default=0.0)
    res["s_o_involutive"] = max((residual(s_o(s_o(x)), x) for x in AL.basis), default=0.0)
    res["s_o_star"] = max((residual(s_o(adj(x)), adj(s_o(x))) for x in AL.basis), default=0.0)
    res["counit_index_is_unit"] = residual(q.index_elt, w.unit_A)

    # e_eps from Delta(1) = 1_(1) (x) 1_(2): 1_(2) (x) theta^{1/2}(S^-1(1_(1)))
    AR = w.corners.AR
    d = c.d
    coef = np.einsum("pab,qcd,acbd->pq", np.conj(AR.basis), np.conj(AL.basis),
                     c.E.reshape(d, d, d, d), optimize=True)
    e_eps = sum(coef[p_, q_] * kron(AL.basis[q_], q.theta_power(S.apply_inverse(AR.basis[p_]), 0.5))
                for p_ in range(len(AR)) for q_ in range(len(AL)))
    res["e_eps_formula"] = residual(e_eps, q.e_psi)

    # independence of theta^{1/2} and S_o from the implementer
    rng = np.random.default_rng(seed)
    centre = AL.center()
    h = centre.element(rng.normal(size=len(centre)) + 0j)
    h = (h + adj(h)) / 2
    z = h @ h + AL.unit
    q2 = quasibasis(AL, w.counit_functional_A, tol, g=q.g @ z)
    res["g_independence"] = max(
        max((residual(q2.theta_power(x, 0.5), q.theta_power(x, 0.5)) for x in AL.basis), default=0.0),
        residual(q2.e_psi, q.e_psi),
    )
    return ActionTriple(AL, q, alpha01, alpha02, alpha12, q.g, s_o, res)


@dataclass
class PmuData:
    E: np.ndarray
    Ehat: np.ndarray
    dom_iso: np.ndarray
    ran_iso: np.ndarray
    U: np.ndarray
    residuals: dict

    @property
    def rank(self) -> int:
        return self.U.shape[0]

    @property
    def u_ext(self) -> np.ndarray:
        """``U`` extended by zero off its support, as an operator on ``H (x) H``."""
        return self.ran_iso @ self.U @ adj(self.dom_iso)


def source_target_projections(q: QuasibasisData, alpha01: Action, alpha02: Action,
                              alpha12: Action) -> tuple[np.ndarray, np.ndarray]:
    """``(alpha02 (x) alpha01)(e)`` and ``(alpha12 (x) alpha02)(e)``."""
    n = len(q.a)
    E = sum(kron(alpha02(q.u[i]), alpha01(q.v[i])) for i in range(n))
    Ehat = sum(kron(alpha12(q.u[i]), alpha02(q.v[i])) for i in range(n))
    return E, Ehat


def build_u(c: MpiCandidate, t: ActionTriple | None = None) -> PmuData:
    """Restrict ``V`` to an isometry from ``range(V^*V)`` onto ``range(VV^*)``."""
    _wha(c)
    t = action_triple(c) if t is None else t
    tol = c.tol
    E, Ehat = source_target_projections(t.quasibasis, t.alpha01, t.alpha02, t.alpha12)
    target, source = residual(E, c.E), residual(Ehat, c.Ehat)
    scale = max(fro(c.E), 1.0)
    if max(target, source) > tol.eq_tol * scale:
        raise WeakHopfError(
            f"relative tensor products do not match the supports of V "
            f"(target {target:.3g}, source {source:.3g})")
    dom = isometry_onto(c.Ehat, tol)
    ran = isometry_onto(c.E, tol)
    if dom.shape[1] != ran.shape[1]:
        raise WeakHopfError("initial and final supports of V have different ranks")
    U = adj(ran) @ c.v @ dom
    r = U.shape[0]
    res = {
        "target_identification": target,
        "source_identification": source,
        "unitary_left": residual(adj(U) @ U, np.eye(r)),
        "unitary_right": residual(U @ adj(U), np.eye(r)),
    }
    return PmuData(c.E, c.Ehat, dom, ran, U, res)


def intertwiner_residuals(op, beta: Action, alpha: Action, betahat: Action) -> dict:
    """The four intertwiner relations of ``op`` for actions of one algebra ``N``.

    ``beta``, ``alpha``, ``betahat`` play the roles of ``alpha01``,
    ``alpha02`` and ``alpha12``:
    ``op(beta(x) (x) 1) = (beta(x) (x) 1)op``,
    ``op(1 (x) beta(x)) = (betahat(x) (x) 1)op``,
    ``op(1 (x) betahat(x)) = (1 (x) betahat(x))op``,
    ``op(alpha(x) (x) 1) = (1 (x) alpha(x))op``.
    """
    d = beta.dim
    one = np.eye(d)
    out = dict.fromkeys(("01", "12", "23", "03"), 0.0)
    for x in beta.algebra.basis:
        b, a, bh = beta(x), alpha(x), betahat(x)
        out["01"] = max(out["01"], residual(op @ kron(b, one), kron(b, one) @ op))
        out["12"] = max(out["12"], residual(op @ kron(one, b), kron(bh, one) @ op))
        out["23"] = max(out["23"], residual(op @ kron(one, bh), kron(one, bh) @ op))
        out["03"] = max(out["03"], residual(op @ kron(a, one), kron(one, a) @ op))
    return out


def check_intertwiners(c: MpiCandidate, t: ActionTriple | None = None, op=None) -> dict:
    """Intertwiner relations of ``V`` (or ``op``) plus the two amalgamation identities."""
    an = _wha(c)
    t = action_triple(c) if t is None else t
    op = c.v if op is None else op
    d = c.d
    one = np.eye(d)
    cor = an.wba.corners
    res = {f"inter_{k}": v for k, v in intertwiner_residuals(op, t.alpha01, t.alpha02, t.alpha12).items()}
    # the same relations over bases of the corners themselves
    direct = dict.fromkeys(("01", "12", "23", "03"), 0.0)
    for x in cor.AL.basis:
        direct["01"] = max(direct["01"], residual(op @ kron(x, one), kron(x, one) @ op))
        direct["12"] = max(direct["12"], residual(op @ kron(one, x), kron(hit_unit(c, x), one) @ op))
    for phi in cor.AhatR.basis:
        direct["23"] = max(direct["23"], residual(op @ kron(one, phi), kron(one, phi) @ op))
    for y in cor.AR.basis:
        direct["03"] = max(direct["03"], residual(op @ kron(y, one), kron(one, y) @ op))
    res.update({f"corner_{k}": v for k, v in direct.items()})
    am_s = max((residual(op @ kron(hit_unit(c, y), one), op @ kron(one, y)) for y in cor.AR.basis),
               default=0.0)
    am_t = max((residual(kron(unit_hit(c, x), one) @ op, kron(one, x) @ op) for x in cor.AL.basis),
               default=0.0)
    res["amalgamation_source"] = am_s
    res["amalgamation_target"] = am_t
    return res


CORNERS = (
    "Eh12 Eh23", "E12 Eh23", "E12 E23", "Eh13 E23",
    "Eh12 E32", "E13 Eh23", "Eh21 E23", "Eh12 E13",
)


@dataclass
class PentagonCheck:
    residual: float
    corner_residuals: dict
    map_residuals: dict

    @property
    def worst_corner(self) -> float:
        return max(self.corner_residuals.values())

    @property
    def worst_map(self) -> float:
        return max(v for k, v in self.map_residuals.items() if k.endswith("preserves"))


def check_u_pentagon(c: MpiCandidate, pmu: PmuData | None = None) -> PentagonCheck:
    """Projection-sandwiched pentagon for the zero-extended ``U`` on ``H^(x)3``.

    Both sides of
    ``(E12E23) U23 (Eh23E12) U12 (Eh12Eh23) =
    (E12E23) U12 (Eh12E13) S12 (Eh21E23) U23 (Eh23E13) S12,3 (Eh12E32) S23 (Eh13E23) U23 (Eh12Eh23)``
    are evaluated, where ``S12,3`` sends ``xi (x) eta (x) zeta`` to
    ``zeta (x) xi (x) eta``.
    """
    _wha(c)
    pmu = build_u(c) if pmu is None else pmu
    d = c.d
    W, sw = pmu.u_ext, flip(d)
    ops = {"E": pmu.E, "Eh": pmu.Ehat}

    def proj(name):
        head = name.rstrip("0123456789")
        return (ops[head], (int(name[-2]), int(name[-1])))

    def corner(name):
        return [proj(p) for p in name.split()]

    maps = {
        "U12": [(W, (1, 2))], "U23": [(W, (2, 3))],
        "S12": [(sw, (1, 2))], "S23": [(sw, (2, 3))],
        "S12,3": [(sw, (1, 2)), (sw, (2, 3))],
    }
    lhs_word = (corner("E12 E23") + maps["U23"] + corner("E12 Eh23") + maps["U12"]
                + corner("Eh12 Eh23"))
    rhs_word = (corner("E12 E23") + maps["U12"] + corner("Eh12 E13") + maps["S12"]
                + corner("Eh21 E23") + maps["U23"] + corner("E13 Eh23") + maps["S12,3"]
                + corner("Eh12 E32") + maps["S23"] + corner("Eh13 E23") + maps["U23"]
                + corner("Eh12 Eh23"))
    lhs, rhs = leg_word(lhs_word, d), leg_word(rhs_word, d)

    dense = {name: leg_word(corner(name), d) for name in CORNERS}
    corner_res = {}
    for name, p in dense.items():
        pp = p
        for op, legs in reversed(corner(name)):
            pp = leg_apply(op, legs, pp, d)
        corner_res[name] = max(residual(pp, p), residual(p, adj(p)))
    steps = (
        ("U12", "Eh12 Eh23", "E12 Eh23"),
        ("U23", "E12 Eh23", "E12 E23"),
        ("U23", "Eh12 Eh23", "Eh13 E23"),
        ("S23", "Eh13 E23", "Eh12 E32"),
        ("S12,3", "Eh12 E32", "E13 Eh23"),
        ("U23", "E13 Eh23", "Eh21 E23"),
        ("S12", "Eh21 E23", "Eh12 E13"),
        ("U12", "Eh12 E13", "E12 E23"),
    )
    map_res = {}
    for k, (label, src, dst) in enumerate(steps):
        mp = dense[src]
        for op, legs in reversed(maps[label]):
            mp = leg_apply(op, legs, mp, d)
        out = mp
        for op, legs in reversed(corner(dst)):
            out = leg_apply(op, legs, out, d)
        key = f"{k}:{label}:[{src}]->[{dst}]"
        map_res[key + ":preserves"] = residual(out, mp)
        map_res[key + ":isometric"] = residual(adj(mp) @ mp, dense[src])
    return PentagonCheck(residual(lhs, rhs), corner_res, map_res)


def u_to_v(N: FdCStarAlgebra, nu: Functional, beta: Action, alpha: Action, betahat: Action,
           u_ext, tol: Tolerance = DEFAULT_TOL) -> MpiCandidate:
    """``V = E U Ehat`` with ``E = (alpha (x) beta)(e_nu)`` and ``Ehat = (betahat (x) alpha)(e_nu)``.

    ``u_ext`` is the pseudo-multiplicative unitary extended by zero to
    ``H (x) H``. Unitality or regularity of the result is not claimed.
    """
    q = quasibasis(N, nu, tol)
    if not close(q.index_elt, N.unit, tol, scale=1.0):
        raise WeakHopfError(f"nu must have index 1 (residual {residual(q.index_elt, N.unit):.3g})")
    if (beta.side, alpha.side, betahat.side) != ("left", "right", "left"):
        raise ActionError("need left, right and left actions (beta, alpha, betahat)")
    for act in (beta, alpha, betahat):
        if act.algebra is not N and len(act.algebra) != len(N):
            raise ActionError("actions must be actions of N")
        act.check(tol)
    for p_, q_ in ((beta, alpha), (beta, betahat), (alpha, betahat)):
        for x in p_.images:
            for y in q_.images:
                if not close(x @ y, y @ x, tol, scale=1.0):
                    raise ActionError("actions do not commute")
    u_ext = np.asarray(u_ext, dtype=complex)
    E, Ehat = source_target_projections(q, beta, alpha, betahat)
    scale = max(fro(E), 1.0)
    support = max(residual(E @ u_ext @ Ehat, u_ext), residual(adj(u_ext) @ u_ext, Ehat),
                  residual(u_ext @ adj(u_ext), E))
    if support > tol.eq_tol * scale:
        raise WeakHopfError(f"U support mismatch (residual {support:.3g})")
    inter = intertwiner_residuals(u_ext, beta, alpha, betahat)
    bad = {k: v for k, v in inter.items() if v > tol.eq_tol * scale}
    if bad:
        raise WeakHopfError(f"U fails intertwiner relations {sorted(bad)}")
    d = beta.dim
    return MpiCandidate(d, E @ u_ext @ Ehat, tol)


@dataclass
class Roundtrip:
    original: MpiCandidate
    rebuilt: MpiCandidate
    pmu: PmuData
    residual: float


def roundtrip(c: MpiCandidate) -> Roundtrip:
    """``V -> U -> E U Ehat`` with ``N = A^L`` and ``nu`` the counit on ``A^L``."""
    an = _wha(c)
    t = action_triple(c)
    pmu = build_u(c, t)
    rebuilt = u_to_v(t.algebra, an.wba.counit_functional_A, t.alpha01, t.alpha02, t.alpha12,
                     pmu.u_ext, c.tol)
    return Roundtrip(c, rebuilt, pmu, residual(rebuilt.v, c.v))
