import numpy as np
import pytest
from numpy.testing import assert_allclose

from weakhopf.errors import ActionError, NotPositiveError, NotWhaError, WeakHopfError
from weakhopf.mpi import MpiCandidate, classify
from weakhopf.relative import (
    CORNERS,
    Action,
    FdCStarAlgebra,
    PmuData,
    action_triple,
    build_u,
    check_intertwiners,
    check_u_pentagon,
    intertwiner_residuals,
    quasibasis,
    rel_tensor_projection,
    roundtrip,
    threefold_projections,
    u_to_v,
)
from weakhopf.tensor import Functional, adj, kron, residual

from conftest import ALGEBRAS, WHA_NAMES, random_density, random_unitary, units

# residual keys that are not expected to vanish
POSITIVE_KEYS = ("index_min_eigenvalue", "g_min_eigenvalue")


def worst(res):
    return max(v for k, v in res.items() if k not in POSITIVE_KEYS)


def canonical_element(q):
    """``sum_i a_i (x) b_i``, which does not depend on the basis ``a``."""
    return sum(kron(x, y) for x, y in zip(q.a, q.b))


def transpose_action(B):
    return Action.from_map(B, lambda x: x.T, "right")


def identity_action(B):
    return Action.from_map(B, lambda x: x, "left")


@pytest.mark.parametrize("name", list(ALGEBRAS))
@pytest.mark.parametrize("seed", range(3))
def test_quasibasis_properties(name, seed):
    rng = np.random.default_rng(seed)
    B = FdCStarAlgebra.from_elements(ALGEBRAS[name])
    q = quasibasis(B, Functional(random_density(B.d, rng)))
    assert worst(q.residuals) < 1e-9, q.residuals
    assert q.residuals["index_min_eigenvalue"] > 0
    assert q.residuals["g_min_eigenvalue"] > 0
    assert B.center().contains(q.index_elt)


def test_trivial_algebra():
    B = FdCStarAlgebra.from_elements([np.eye(1)])
    q = quasibasis(B, Functional(np.eye(1)))
    assert_allclose(q.a, [[[1.0]]])
    assert_allclose(q.b, [[[1.0]]])
    assert_allclose(q.index_elt, np.eye(1))
    assert_allclose(q.e_psi, np.eye(1))
    beta, gamma = transpose_action(B), identity_action(B)
    assert_allclose(rel_tensor_projection(beta, gamma, q).E, np.eye(1))


def test_diagonal_algebra_gram_solve():
    p, r = 0.3, 1.7
    B = FdCStarAlgebra.from_elements(ALGEBRAS["C2"])
    q = quasibasis(B, Functional(np.diag([p, r])))
    e11, e22 = ALGEBRAS["C2"]
    assert_allclose(q.index_elt, np.diag([1 / p, 1 / r]), atol=1e-12)
    expect = kron(e11, e11) / p + kron(e22, e22) / r
    assert_allclose(canonical_element(q), expect, atol=1e-12)


def test_matrix_algebra_with_twice_the_trace():
    B = FdCStarAlgebra.from_elements(units(2))
    q = quasibasis(B, Functional(2 * np.eye(2)))
    assert_allclose(q.index_elt, np.eye(2), atol=1e-12)
    mats = units(2)
    # the dual of e_ij is e_ji / 2
    expect = sum(kron(mats[2 * i + j], mats[2 * j + i]) / 2 for i in range(2) for j in range(2))
    assert_allclose(canonical_element(q), expect, atol=1e-12)
    for x in B.basis:
        assert_allclose(q.apply_theta(x), x, atol=1e-12)


def test_index_of_trace_multiple_is_scalar(rng):
    # for psi = c Tr on M_n the index is (n / c) 1
    n, c = 3, 0.7
    B = FdCStarAlgebra.from_elements(units(n))
    q = quasibasis(B, Functional(c * np.eye(n)))
    assert_allclose(q.index_elt, (n / c) * np.eye(n), atol=1e-12)


def test_nontracial_functional_has_nontrivial_modular_map():
    B = FdCStarAlgebra.from_elements(units(2))
    rho = np.diag([0.2, 0.8])
    q = quasibasis(B, Functional(rho))
    # Tr(rho x y) = Tr(y rho x) forces theta(x) = rho x rho^-1
    mats = units(2)
    e12 = mats[1]
    expect = rho @ e12 @ np.linalg.inv(rho)
    assert_allclose(q.apply_theta(e12), expect, atol=1e-12)
    assert residual(q.apply_theta(e12), e12) > 0.1
    assert_allclose(q.theta_power(q.theta_power(e12, 0.5), 0.5), expect, atol=1e-12)
    assert_allclose(q.theta_power(e12, -1.0), np.linalg.inv(rho) @ e12 @ rho,
                    atol=1e-12)
    assert worst(q.residuals) < 1e-12


@pytest.mark.parametrize("name", ["M2", "M2+C"])
def test_opposite_functional_duality(name, rng):
    B = FdCStarAlgebra.from_elements(ALGEBRAS[name])
    F = random_density(B.d, rng)
    q = quasibasis(B, Functional(F))
    Bo = B.opposite()
    psi_o = Functional(F.T)  # psi_o(x^T) = psi(x)
    qo = quasibasis(Bo, psi_o)
    assert worst(qo.residuals) < 1e-9
    # {b_i^T, a_i^T} is a quasibasis of psi_o
    n = len(q.a)
    pairing = np.array([[psi_o(q.a[i].T @ q.b[j].T) for j in range(n)] for i in range(n)])
    assert_allclose(pairing, np.eye(n), atol=1e-10)
    # theta of psi_o is the inverse of theta
    for x in B.basis:
        assert_allclose(qo.apply_theta(x.T), q.theta_power(x, -1.0).T, atol=1e-10)
    # both indices are transposes of one another
    assert_allclose(qo.index_elt, q.index_elt.T, atol=1e-10)


@pytest.mark.parametrize("name", list(ALGEBRAS))
def test_functional_scaling(name, rng):
    B = FdCStarAlgebra.from_elements(ALGEBRAS[name])
    F = random_density(B.d, rng)
    c = 3.5
    q1 = quasibasis(B, Functional(F))
    q2 = quasibasis(B, Functional(c * F))
    assert_allclose(q2.b, q1.b / c, atol=1e-10)
    assert_allclose(q2.index_elt, q1.index_elt / c, atol=1e-10)
    assert_allclose(q2.e_psi, q1.e_psi, atol=1e-10)
    beta, gamma = transpose_action(B), identity_action(B)
    e1 = rel_tensor_projection(beta, gamma, q1).E
    e2 = rel_tensor_projection(beta, gamma, q2).E
    assert residual(e1, e2) < 1e-9


def test_implementer_choice_does_not_matter(rng):
    B = FdCStarAlgebra.from_elements(ALGEBRAS["M2+C"])
    psi = Functional(random_density(3, rng))
    q1 = quasibasis(B, psi)
    z = np.diag([2.0, 2.0, 0.25])  # positive and central in M2 + C
    q2 = quasibasis(B, psi, g=q1.g @ z)
    assert worst(q2.residuals) < 1e-9
    for x in B.basis:
        assert_allclose(q2.theta_power(x, 0.5), q1.theta_power(x, 0.5), atol=1e-10)
    assert_allclose(q2.e_psi, q1.e_psi, atol=1e-10)


def test_non_faithful_or_non_positive_functionals_rejected():
    B = FdCStarAlgebra.from_elements(ALGEBRAS["C2"])
    with pytest.raises(NotPositiveError):
        quasibasis(B, Functional(np.diag([1.0, 0.0])))
    with pytest.raises(NotPositiveError):
        quasibasis(B, Functional(np.diag([1.0, -1.0])))
    M = FdCStarAlgebra.from_elements(units(2))
    with pytest.raises(NotPositiveError):
        quasibasis(M, Functional(np.array([[1.0, 1.0], [0.0, 1.0]])))


def test_algebra_validation():
    mats = units(2)
    with pytest.raises(WeakHopfError, match="not closed"):
        FdCStarAlgebra.from_elements([mats[1], mats[2]])
    with pytest.raises(WeakHopfError, match="\\*-closed"):
        FdCStarAlgebra.from_elements([mats[0], mats[1], mats[3]])
    B = FdCStarAlgebra.from_elements(ALGEBRAS["M2+C"])
    assert len(B.center()) == 2
    assert_allclose(B.unit, np.eye(3), atol=1e-12)


def test_action_validation():
    B = FdCStarAlgebra.from_elements(units(2))
    with pytest.raises(ActionError):
        Action(B, B.basis, "up")
    with pytest.raises(ActionError):
        Action(B, B.basis[:2], "left")
    doubled = Action.from_map(B, lambda x: 2 * x, "left")
    with pytest.raises(ActionError, match="homomorphism"):
        doubled.check()
    # x -> x is a homomorphism, hence not a right action
    with pytest.raises(ActionError, match="homomorphism"):
        Action.from_map(B, lambda x: x, "right").check()
    s = np.diag([1.0, 3.0])
    skewed = Action.from_map(B, lambda x: s @ x @ np.linalg.inv(s), "left")
    with pytest.raises(ActionError, match="star"):
        skewed.check()
    q = quasibasis(B, Functional(np.eye(2)))
    with pytest.raises(ActionError):
        rel_tensor_projection(identity_action(B), transpose_action(B), q)
    with pytest.raises(ActionError):
        rel_tensor_projection(transpose_action(B), skewed, q)


@pytest.mark.parametrize("name", list(ALGEBRAS))
def test_relative_tensor_projection(name, rng):
    B = FdCStarAlgebra.from_elements(ALGEBRAS[name])
    q = quasibasis(B, Functional(random_density(B.d, rng)))
    # beta on H = C^d (x) C^2 and gamma on K = C^d with multiplicity 1
    beta = Action.from_map(B, lambda x: np.kron(x.T, np.eye(2)), "right")
    gamma = identity_action(B)
    rt = rel_tensor_projection(beta, gamma, q)
    assert max(rt.residuals.values()) < 1e-9, rt.residuals
    # the amalgamated relation also holds sandwiched between projections
    ih, ik = np.eye(beta.dim), np.eye(gamma.dim)
    for x in B.basis:
        lhs = rt.E @ kron(ih, gamma(x)) @ rt.E
        rhs = rt.E @ kron(beta(q.theta_power(x, -0.5)), ik) @ rt.E
        assert residual(lhs, rhs) < 1e-9
    # the rank of E_psi is dim(H) dim(K) / dim(B) for a full matrix algebra
    if name == "M2":
        assert np.linalg.matrix_rank(rt.E, tol=1e-8) == 2


def test_relative_tensor_over_scalars_is_plain_tensor():
    B = FdCStarAlgebra.from_elements([np.eye(3)])
    q = quasibasis(B, Functional(np.eye(3) / 3))
    beta = Action.from_map(B, lambda x: x[0, 0] * np.eye(2), "right")
    gamma = Action.from_map(B, lambda x: x[0, 0] * np.eye(5), "left")
    assert_allclose(rel_tensor_projection(beta, gamma, q).E, np.eye(10), atol=1e-12)


def test_threefold_bracketings_agree(rng):
    B1 = FdCStarAlgebra.from_elements(units(2))
    B2 = FdCStarAlgebra.from_elements(ALGEBRAS["C2"])
    q1 = quasibasis(B1, Functional(random_density(2, rng)))
    q2 = quasibasis(B2, Functional(random_density(2, rng)))
    beta_h = transpose_action(B1)
    gamma_m = Action.from_map(B1, lambda x: np.kron(x, np.eye(2)), "left")
    beta_m = Action.from_map(B2, lambda y: np.kron(np.eye(2), y.T), "right")
    gamma_k = identity_action(B2)
    out = threefold_projections(beta_h, gamma_m, q1, beta_m, gamma_k, q2)
    assert out["bimodule_commutation"] < 1e-12
    assert out["bracketings_agree"] < 1e-9
    assert out["idempotent"] < 1e-9
    with pytest.raises(ActionError):
        threefold_projections(beta_h, gamma_m, q1, transpose_action(B2), gamma_k, q2)


def test_pair_groupoid_relative_tensor_is_support_of_v(battery):
    for name, n in (("pair2", 2), ("pair3", 3)):
        c = battery[name][0]
        t = action_triple(c)
        rt = rel_tensor_projection(t.alpha02, t.alpha01, t.quasibasis)
        assert residual(rt.E, c.E) < 1e-10
        assert np.linalg.matrix_rank(rt.E, tol=1e-8) == n**3


def test_action_triple_hopf_case_is_scalar(battery):
    c = battery["Z3"][0]
    t = action_triple(c)
    assert len(t.algebra) == 1
    assert_allclose(t.quasibasis.e_psi, np.eye(c.d**2), atol=1e-12)
    for act in t.actions().values():
        x = act.images[0]
        assert residual(x, x[0, 0] * np.eye(c.d)) < 1e-10
    assert max(t.residuals.values()) < 1e-10


@pytest.mark.parametrize("name", ["pair2", "pair3"])
def test_action_triple_pair_groupoid(battery, name):
    c = battery[name][0]
    t = action_triple(c)
    assert max(t.residuals.values()) < 1e-10, t.residuals
    assert t.residuals["actions_commute"] < 1e-10
    for x in t.algebra.basis:
        assert residual(t.s_o(t.s_o(x)), x) < 1e-10
        assert residual(t.s_o(adj(x)), adj(t.s_o(x))) < 1e-10


def test_action_triple_requires_wha(battery):
    with pytest.raises(NotWhaError):
        action_triple(battery["counterexample"][0])
    with pytest.raises(NotWhaError):
        build_u(battery["counterexample"][0])
    with pytest.raises(NotWhaError):
        roundtrip(MpiCandidate(2, np.zeros((4, 4))))


@pytest.mark.parametrize("name", WHA_NAMES)
def test_build_u_is_unitary(battery, name):
    c, expected = battery[name]
    pmu = build_u(c)
    assert pmu.rank == expected["rank_V"]
    assert max(pmu.residuals.values()) < 1e-10, pmu.residuals
    assert residual(pmu.u_ext, c.v) < 1e-12


def test_build_u_hopf_case_is_v(battery):
    c = battery["Z2"][0]
    pmu = build_u(c)
    assert pmu.rank == 4
    assert_allclose(pmu.dom_iso @ pmu.U @ adj(pmu.dom_iso), c.v, atol=1e-12)
    assert_allclose(pmu.dom_iso, pmu.ran_iso, atol=1e-12)


def test_build_u_deterministic(battery):
    c = battery["pair2"][0]
    a, b = build_u(c), build_u(c)
    assert np.array_equal(a.U, b.U) and np.array_equal(a.dom_iso, b.dom_iso)


@pytest.mark.parametrize("name", WHA_NAMES)
def test_intertwiners(battery, name):
    c = battery[name][0]
    res = check_intertwiners(c)
    assert max(res.values()) < 1e-10, res
    pmu = build_u(c)
    res_u = check_intertwiners(c, op=pmu.u_ext)
    assert max(res_u.values()) < 1e-10


def test_intertwiners_detect_foreign_operator(battery, rng):
    c = battery["pair2"][0]
    pmu = build_u(c)
    w = random_unitary(pmu.rank, rng)
    res = check_intertwiners(c, op=pmu.ran_iso @ w @ adj(pmu.dom_iso))
    assert max(res.values()) > 1e-3


def test_intertwiner_residuals_of_conjugated_wha(battery, rng):
    c = battery["pair2"][0].conjugated(random_unitary(4, rng))
    t = action_triple(c)
    assert max(intertwiner_residuals(c.v, t.alpha01, t.alpha02, t.alpha12).values()) < 1e-10


@pytest.mark.parametrize("name,bound", [("Z2", 1e-10), ("Z3", 1e-10), ("pair2", 1e-9),
                                        ("pair3", 1e-8)])
def test_u_pentagon(battery, name, bound):
    c = battery[name][0]
    chk = check_u_pentagon(c)
    assert chk.residual <= bound
    assert set(chk.corner_residuals) == set(CORNERS)
    assert chk.worst_corner < 1e-10
    assert chk.worst_map < 1e-10
    assert max(v for k, v in chk.map_residuals.items() if k.endswith("isometric")) < 1e-10


def test_u_pentagon_detects_wrong_u(battery, rng):
    c = battery["pair2"][0]
    pmu = build_u(c)
    fake = PmuData(pmu.E, pmu.Ehat, pmu.dom_iso, pmu.ran_iso, random_unitary(pmu.rank, rng), {})
    assert check_u_pentagon(c, fake).residual > 1e-3


@pytest.mark.parametrize("name", WHA_NAMES)
def test_roundtrip(battery, name):
    c = battery[name][0]
    rt = roundtrip(c)
    assert rt.residual <= 1e-12
    assert classify(rt.rebuilt).summary() == classify(c).summary()


def test_roundtrip_of_conjugated_pair_groupoid(battery, rng):
    c = battery["pair2"][0].conjugated(random_unitary(4, rng))
    rt = roundtrip(c)
    assert rt.residual <= 1e-12
    assert classify(rt.rebuilt).verdict == classify(c).verdict


def test_u_to_v_rejects_bad_input(battery, rng):
    c = battery["pair2"][0]
    t = action_triple(c)
    pmu = build_u(c, t)
    N = t.algebra
    nu = c.analysis.wba.counit_functional_A
    args = (t.alpha01, t.alpha02, t.alpha12)
    with pytest.raises(WeakHopfError, match="index 1"):
        u_to_v(N, Functional(2 * nu.dual), *args, pmu.u_ext)
    with pytest.raises(ActionError):
        u_to_v(N, nu, t.alpha02, t.alpha01, t.alpha12, pmu.u_ext)
    u = random_unitary(4, rng)
    conj = Action(N, np.stack([u @ x @ adj(u) for x in t.alpha12.images]), "left")
    with pytest.raises(ActionError):
        u_to_v(N, nu, t.alpha01, t.alpha02, conj, pmu.u_ext)
    with pytest.raises(WeakHopfError, match="support"):
        u_to_v(N, nu, *args, np.eye(16))
    w = random_unitary(pmu.rank, rng)
    with pytest.raises(WeakHopfError, match="intertwiner"):
        u_to_v(N, nu, *args, pmu.ran_iso @ w @ adj(pmu.dom_iso))
