"""Command-line interface.

Exit codes: 0 when the strongest verdict the command claims is reached,
1 for well-formed input that fails the checks, 2 for I/O and parse errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .builder import ExampleSpec, build_v_regular, generate, validate
from .errors import InvalidPresentationError, WeakHopfError
from .io import (
    FormatError,
    canonical_dumps,
    matrix_doc,
    operator2_doc,
    presentation_doc,
    read_document,
    text_dumps,
)
from .mpi import NOT_MPI, WHA, MpiCandidate, check_derived, check_mpi
from .relative import (
    action_triple,
    build_u,
    check_intertwiners,
    check_u_pentagon,
    roundtrip,
)
from .tensor import Tolerance

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class _Timer:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.marks = {}
        self._t = time.perf_counter()

    def mark(self, name: str) -> None:
        now = time.perf_counter()
        self.marks[name] = now - self._t
        self._t = now


def _tolerance(args) -> Tolerance:
    try:
        return Tolerance(eq_tol=args.tol, rank_tol=args.tol)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def _load_candidate(path: str, tol: Tolerance) -> tuple[MpiCandidate, str, str]:
    kind, payload, digest = read_document(path)
    if kind == "operator2":
        d, v = payload
        try:
            return MpiCandidate(d, v, tol), digest, kind
        except WeakHopfError as exc:
            raise FormatError(f"{path}: {exc}") from exc
    if kind == "presentation":
        report = validate(payload, tol)
        if not report.ok:
            raise InvalidPresentationError(report.failures)
        return build_v_regular(payload, tol), digest, kind
    raise FormatError(f"{path}: expected an operator2 or presentation document, got {kind!r}")


def _header(command: str, digest: str, kind: str, tol: Tolerance) -> dict:
    return {
        "tool": "weakhopf",
        "version": __version__,
        "command": command,
        "input": {"sha256": digest, "kind": kind},
        "tolerance": {"eq_tol": tol.eq_tol, "rank_tol": tol.rank_tol},
    }


def _failure_message(check) -> str:
    parts = []
    for name in check.failed:
        if name == "partial_isometry":
            parts.append(f"not a partial isometry, residual {check.partial_isometry.residual:.3e}")
        else:
            parts.append(f"{name} residual {check.residuals[name]:.3e}")
    return f"not-MPI ({'; '.join(parts)})"


def _scale(c: MpiCandidate) -> float:
    return max(1.0, np.sqrt(c.d) * c.norm)


# --------------------------------------------------------------------------
# commands


def cmd_check_mpi(args, tol, timer):
    c, digest, kind = _load_candidate(args.path, tol)
    check = check_mpi(c)
    timer.mark("check_mpi")
    report = _header("check-mpi", digest, kind, tol)
    report["residuals"] = {
        "partial_isometry": check.partial_isometry.residual,
        "axioms": dict(check.residuals),
    }
    if check.ok:
        report["derived_identities"] = check_derived(c)
        timer.mark("check_derived")
        report["verdict"] = "MPI"
        report["message"] = "MPI"
        return report, EXIT_OK
    report["verdict"] = NOT_MPI
    report["message"] = _failure_message(check)
    return report, EXIT_FAIL


def cmd_classify(args, tol, timer):
    c, digest, kind = _load_candidate(args.path, tol)
    r = c.analysis.report
    timer.mark("classify")
    report = _header("classify", digest, kind, tol)
    report["classification"] = r.summary()
    report["residuals"] = {
        "partial_isometry": r.partial_isometry_residual,
        "axioms": dict(r.mpi_axioms),
        "derived_identities": dict(r.derived_identities),
        "structure": dict(r.residuals),
    }
    report["verdict"] = r.verdict
    report["label"] = r.label
    report["message"] = r.label if r.is_mpi else _failure_message(c.analysis.mpi)
    ok = r.is_mpi and r.theorem_consistent
    return report, EXIT_OK if ok else EXIT_FAIL


def _pmu_report(c: MpiCandidate, timer):
    t = action_triple(c)
    pmu = build_u(c, t)
    timer.mark("build_u")
    inter = check_intertwiners(c, t)
    timer.mark("intertwiners")
    pent = check_u_pentagon(c, pmu)
    timer.mark("pentagon")
    residuals = {
        "action_triple": dict(t.residuals),
        "quasibasis": dict(t.quasibasis.residuals),
        "unitarity": dict(pmu.residuals),
        "intertwiners": inter,
        "pentagon": pent.residual,
        "pentagon_corners": dict(pent.corner_residuals),
        "pentagon_maps": dict(pent.map_residuals),
    }
    scale = _scale(c)
    worst = max([*t.residuals.values(), *pmu.residuals.values(), *inter.values(), pent.residual,
                 pent.worst_corner, pent.worst_map])
    return pmu, residuals, worst <= c.tol.eq_tol * scale


def cmd_build_u(args, tol, timer):
    c, digest, kind = _load_candidate(args.path, tol)
    r = c.analysis.report
    timer.mark("classify")
    report = _header(args.command, digest, kind, tol)
    report["classification"] = r.summary()
    if r.verdict != WHA:
        report["verdict"] = r.verdict
        report["message"] = f"not a C*-WHA (verdict: {r.label})"
        return report, EXIT_FAIL
    pmu, residuals, ok = _pmu_report(c, timer)
    report["pmu"] = {"rank": pmu.rank, "dim": c.d, "support_rank_source": pmu.dom_iso.shape[1],
                     "support_rank_target": pmu.ran_iso.shape[1]}
    report["residuals"] = residuals
    report["verdict"] = r.verdict
    report["message"] = "pseudo-multiplicative unitary checks passed" if ok else \
        "pseudo-multiplicative unitary checks failed"
    if args.u_out:
        doc = {"kind": "matrix-set", "items": {
            "U": matrix_doc(pmu.U), "dom_iso": matrix_doc(pmu.dom_iso),
            "ran_iso": matrix_doc(pmu.ran_iso)}}
        _write(args.u_out, canonical_dumps(doc) + "\n")
    return report, EXIT_OK if ok else EXIT_FAIL


def cmd_roundtrip(args, tol, timer):
    c, digest, kind = _load_candidate(args.path, tol)
    r = c.analysis.report
    timer.mark("classify")
    report = _header("roundtrip", digest, kind, tol)
    report["classification"] = r.summary()
    if r.verdict != WHA:
        report["verdict"] = r.verdict
        report["message"] = f"not a C*-WHA (verdict: {r.label})"
        return report, EXIT_FAIL
    rt = roundtrip(c)
    timer.mark("roundtrip")
    r2 = rt.rebuilt.analysis.report
    timer.mark("reclassify")
    identical = r.summary() == r2.summary()
    report["reclassification"] = r2.summary()
    report["residuals"] = {"roundtrip": rt.residual, "relative_roundtrip": rt.residual / max(c.norm, 1e-300)}
    report["summary_identical"] = identical
    ok = identical and rt.residual <= tol.eq_tol * max(1.0, c.norm)
    report["verdict"] = r.verdict
    report["message"] = "roundtrip reproduces V" if ok else "roundtrip does not reproduce V"
    return report, EXIT_OK if ok else EXIT_FAIL


def _parse_generate(params: list[str]) -> ExampleSpec:
    kind, rest = params[0], params[1:]
    if kind in ("nonunital", "nonunital_counterexample"):
        if rest:
            raise FormatError("nonunital takes no parameters")
        return ExampleSpec("nonunital_counterexample")
    if kind == "group_algebra":
        if len(rest) == 2 and rest[0] == "cyclic":
            return ExampleSpec("group_algebra", n=_posint(rest[1]))
        if len(rest) == 2 and rest[0] == "table":
            try:
                with open(rest[1], encoding="utf-8") as fh:
                    table = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise FormatError(f"cannot read multiplication table: {exc}") from exc
            if not (isinstance(table, list) and all(isinstance(row, list) for row in table)):
                raise FormatError("multiplication table must be a list of lists")
            return ExampleSpec("group_algebra", table=tuple(tuple(row) for row in table))
        raise FormatError("usage: group_algebra cyclic N | group_algebra table FILE")
    if kind == "pair_groupoid":
        if len(rest) != 1:
            raise FormatError("usage: pair_groupoid N")
        return ExampleSpec("pair_groupoid", n=_posint(rest[0]))
    raise FormatError(f"unknown example kind {kind!r}")


def _posint(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise FormatError(f"expected a positive integer, got {text!r}") from exc
    if value < 1:
        raise FormatError(f"expected a positive integer, got {value}")
    return value


def cmd_generate(args, tol, timer):
    try:
        spec = _parse_generate(args.params)
        if args.presentation:
            p = spec.presentation()
            if p is None:
                raise FormatError("the non-unital example has no presentation")
            doc = presentation_doc(p)
        else:
            c, _ = generate(spec, tol)
            doc = operator2_doc(c.v, c.d)
    except InvalidPresentationError:
        raise
    except WeakHopfError as exc:
        raise FormatError(str(exc)) from exc
    timer.mark("generate")
    return doc, EXIT_OK


# --------------------------------------------------------------------------
# driver


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise FormatError(f"cannot write {path}: {exc.strerror}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weakhopf",
        description="Multiplicative partial isometries and weak C*-Hopf algebras.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-9,
                        help="relative equality and rank tolerance (default 1e-9)")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--timings", action="store_true",
                        help="include wall-clock timings (makes output non-reproducible)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-mpi", parents=[common], help="partial isometry and MPI identities")
    p.add_argument("path")
    p.set_defaults(func=cmd_check_mpi)
    p = sub.add_parser("classify", parents=[common], help="full classification")
    p.add_argument("path")
    p.set_defaults(func=cmd_classify)
    for name, helptext in (("build-u", "pseudo-multiplicative unitary and its checks"),
                           ("check-u-pentagon", "alias of build-u")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("path")
        p.add_argument("--u-out", help="write U and the support isometries here")
        p.set_defaults(func=cmd_build_u)
    p = sub.add_parser("roundtrip", parents=[common], help="V -> U -> V")
    p.add_argument("path")
    p.set_defaults(func=cmd_roundtrip)
    p = sub.add_parser(
        "generate", parents=[common], help="write an example operator",
        description="KIND is nonunital | group_algebra cyclic N | group_algebra table FILE "
                    "| pair_groupoid N")
    p.add_argument("params", nargs="+", metavar="KIND")
    p.add_argument("--presentation", action="store_true",
                   help="write the structure constants instead of V")
    p.set_defaults(func=cmd_generate)
    return parser


def _render(report: dict, fmt: str) -> str:
    return (canonical_dumps(report) if fmt == "json" else text_dumps(report)) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tol = _tolerance(args)
        timer = _Timer(args.timings)
        report, code = args.func(args, tol, timer)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except WeakHopfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.command != "generate":
        report["exit_code"] = code
        if timer.enabled:
            report["timings"] = dict(timer.marks)
    text = canonical_dumps(report) + "\n" if args.command == "generate" else _render(report, args.format)
    try:
        if args.out:
            _write(args.out, text)
        else:
            sys.stdout.write(text)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return code


if __name__ == "__main__":
    raise SystemExit(main())
