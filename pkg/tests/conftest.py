import json

import numpy as np
import pytest
from scipy.stats import unitary_group

from weakhopf.builder import ExampleSpec, WhaPresentation, generate
from weakhopf.io import canonical_dumps, matrix_doc, operator2_doc, presentation_doc
from weakhopf.tensor import adj, flip

BATTERY_SPECS = {
    "counterexample": ExampleSpec("nonunital_counterexample"),
    "Z2": ExampleSpec("group_algebra", n=2),
    "Z3": ExampleSpec("group_algebra", n=3),
    "Z4": ExampleSpec("group_algebra", n=4),
    "Z5": ExampleSpec("group_algebra", n=5),
    "pair2": ExampleSpec("pair_groupoid", n=2),
    "pair3": ExampleSpec("pair_groupoid", n=3),
}

WHA_NAMES = ["Z2", "Z3", "Z4", "Z5", "pair2", "pair3"]


@pytest.fixture(scope="session")
def battery():
    """name -> (candidate, expected fields); analyses are cached on the candidates."""
    return {name: generate(spec) for name, spec in BATTERY_SPECS.items()}


def random_unitary(d, rng):
    return unitary_group.rvs(d, random_state=rng)


def random_matrix(shape, rng):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def units(d):
    out = []
    for i in range(d):
        for j in range(d):
            m = np.zeros((d, d))
            m[i, j] = 1.0
            out.append(m)
    return out


def m2_plus_c():
    mats = []
    for m in units(2):
        z = np.zeros((3, 3))
        z[:2, :2] = m
        mats.append(z)
    z = np.zeros((3, 3))
    z[2, 2] = 1.0
    return mats + [z]


ALGEBRAS = {
    "C": [np.eye(1)],
    "C2": [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])],
    "M2": units(2),
    "M2+C": m2_plus_c(),
}


def random_density(d, rng):
    a = random_matrix((d, d), rng)
    return a @ adj(a) + 0.1 * np.eye(d)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


COMMANDS = ("check-mpi", "classify", "build-u", "check-u-pentagon", "roundtrip")

# fixture name -> expected exit code of each command in COMMANDS
FIXTURE_EXITS = {
    "counterexample": (0, 0, 1, 1, 1),
    "z3": (0, 0, 0, 0, 0),
    "pair2": (0, 0, 0, 0, 0),
    "pair2_presentation": (0, 0, 0, 0, 0),
    "flip": (1, 1, 1, 1, 1),
    "zero": (0, 0, 1, 1, 1),
    "twice_identity": (1, 1, 1, 1, 1),
    "tampered_presentation": (1, 1, 1, 1, 1),
    "truncated": (2, 2, 2, 2, 2),
    "shape_mismatch": (2, 2, 2, 2, 2),
    "non_finite": (2, 2, 2, 2, 2),
    "wrong_kind": (2, 2, 2, 2, 2),
    "missing": (2, 2, 2, 2, 2),
}


def write_fixtures(directory):
    """Write the CLI fixture set; returns name -> path."""
    paths = {}

    def put(name, text):
        path = directory / f"{name}.json"
        path.write_text(text, encoding="utf-8")
        paths[name] = str(path)

    for name, spec in (("counterexample", BATTERY_SPECS["counterexample"]),
                       ("z3", BATTERY_SPECS["Z3"]), ("pair2", BATTERY_SPECS["pair2"])):
        c, _ = generate(spec)
        put(name, canonical_dumps(operator2_doc(c.v, c.d)))
    p = BATTERY_SPECS["pair2"].presentation()
    put("pair2_presentation", canonical_dumps(presentation_doc(p)))
    bad = WhaPresentation(p.n, p.labels, p.mult * 1.1, p.delta, p.counit, p.antipode, p.star,
                          p.unit, p.haar)
    put("tampered_presentation", canonical_dumps(presentation_doc(bad)))
    put("flip", canonical_dumps(operator2_doc(flip(2), 2)))
    put("zero", canonical_dumps(operator2_doc(np.zeros((4, 4)), 2)))
    put("twice_identity", canonical_dumps(operator2_doc(2 * np.eye(4), 2)))
    full = canonical_dumps(operator2_doc(flip(2), 2))
    put("truncated", full[: len(full) // 2])
    doc = operator2_doc(flip(2), 2)
    doc["data"] = doc["data"][:9]
    put("shape_mismatch", canonical_dumps(doc))
    doc = operator2_doc(flip(2), 2)
    doc["data"][0] = [float("nan"), 0.0]
    put("non_finite", json.dumps(doc))
    put("wrong_kind", canonical_dumps(matrix_doc(np.eye(4))))
    paths["missing"] = str(directory / "does_not_exist.json")
    return paths



# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
