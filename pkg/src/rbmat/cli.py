"""Command-line front end: ``rbmat verify|fingerprint|claims|derive|conjugate``.

Exit status is 0 when every verdict passed, 1 on a verification failure and
2 on a usage error.  JSON output is deterministic; timings only appear in the
human-readable table when ``--timings`` is given.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

from . import __version__
from .catalog import (DEFAULT_GRID, block_projections, build_automorphism,
                      build_operator, entry, lift_descriptor, lift_operator, mapping_claims,
                      nilindex_partition, param_label, parse_ref, sample_params, select,
                      verify_entry)
from .exactscalar import QQ, ScalarDomain, parse_domain
from .matop import LinearOperator, conjugate
from .rbsolver import NoFit, fit_template, generate_system, substitute_solution, template

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunReport:
    command: str
    items: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    passed: bool = True

    @property
    def exit_status(self) -> int:
        return EXIT_OK if self.passed else EXIT_FAIL

    def to_json(self) -> dict:
        return {"command": self.command, "passed": self.passed, "exit": self.exit_status,
                "items": self.items, **self.extra}


def thread_cap() -> int:
    raw = os.environ.get("RBMAT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"RBMAT_THREADS must be an integer, got {raw!r}") from None


def _pmap(fn, jobs: list) -> list:
    """Map over jobs, in a process pool when RBMAT_THREADS > 1; order is preserved."""
    workers = min(thread_cap(), len(jobs))
    if workers <= 1:
        return [fn(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


# -- argument helpers -----------------------------------------------------------------

def _parse_params(text: str | None, domain: ScalarDomain = QQ) -> dict:
    if not text:
        return {}
    out = {}
    for part in text.split(","):
        k, sep, v = part.partition("=")
        if not sep or not k.strip():
            raise UsageError(f"bad --params item {part!r}, expected k=v")
        out[k.strip()] = domain.parse(v.strip()) if k.strip() != "n" else int(v)
    return out


def _domain(text: str) -> ScalarDomain:
    try:
        return parse_domain(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _jobs(selector: str, fixed: dict) -> list[tuple[str, dict]]:
    """Expand comma-separated id globs into (id, params) pairs over the sampling grid."""
    ids = []
    try:
        for pattern in selector.split(","):
            ids += [i for i in select(pattern.strip()) if i not in ids]
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    jobs = []
    for i in ids:
        names = entry(i).params
        unknown = set(fixed) - set(names)
        if unknown and len(ids) == 1:
            raise UsageError(f"{i} takes no parameter(s) {sorted(unknown)}")
        for p in sample_params(i, DEFAULT_GRID):
            p.update({k: v for k, v in fixed.items() if k in names})
            if p not in [q for j, q in jobs if j == i]:
                jobs.append((i, p))
    return jobs


def _emit(args, report: RunReport, human: list[str]) -> None:
    text = json.dumps(report.to_json(), indent=2, sort_keys=False) + "\n" if args.json \
        else "\n".join(human) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _table(header: list[str], rows: list[list]) -> list[str]:
    cells = [header] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[k]) for r in cells) for k in range(len(header))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*header), fmt.format(*("-" * w for w in widths))]
    return lines + [fmt.format(*r) for r in cells[1:]]


def _flag(x) -> str:
    return "-" if x is None else ("yes" if x is True else "no" if x is False else str(x))


# -- verbs ---------------------------------------------------------------------------------

def _verify_one(i: str, p: dict, domain_text: str) -> dict:
    return verify_entry(i, p, domain=parse_domain(domain_text))


def cmd_verify(args) -> tuple[RunReport, list[str]]:
    domain = _domain(args.domain)
    fixed = _parse_params(args.params, domain)
    if args.n is not None:
        fixed["n"] = args.n
    jobs = _jobs(args.selector, fixed)
    t0 = time.perf_counter()
    try:
        items = _pmap(_verify_one, [(i, p, domain.label) for i, p in jobs])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep = RunReport("verify", items, timings={"total_s": time.perf_counter() - t0})
    rep.passed = all(r["passed"] for r in items)
    rows = []
    for r in items:
        note = "R(1)=0" if r["unit_image_zero"] else ""
        rows.append([r["id"], param_label(r["params"]) or "-", _flag(r["rb_ok"]),
                     _flag(r["nilpotency_index"]), _flag(r["unit_image_nilindex"]),
                     _flag(r["skew_symmetric"]), _flag(r["factorial_unit"]), note,
                     "PASS" if r["passed"] else "FAIL"])
    human = _table(["id", "params", "rb", "nil", "R(1)nil", "skew", "k!", "note", "verdict"], rows)
    human.append(f"{sum(r['passed'] for r in items)}/{len(items)} passed (domain {domain.label})")
    if args.timings:
        human.append(f"time {rep.timings['total_s']:.2f}s")
    return rep, human


def _fingerprint_one(i: str, p: dict) -> dict:
    from .structure import fingerprint
    return fingerprint(build_operator(i, p)).to_json()


def cmd_fingerprint(args) -> tuple[RunReport, list[str]]:
    domain = _domain(args.domain)
    if domain.characteristic:
        raise UsageError("fingerprints need a characteristic-zero domain")
    fixed = _parse_params(args.params, domain)
    if args.n is not None:
        fixed["n"] = args.n
    jobs = _jobs(args.selector, fixed)
    fps = _pmap(_fingerprint_one, jobs)
    labels = [f"{i}[{param_label(p)}]" if p else i for i, p in jobs]
    items = [{"id": i, "params": param_label(p), "label": lab, "fingerprint": fp}
             for (i, p), lab, fp in zip(jobs, labels, fps)]
    collisions = [[labels[a], labels[b]] for a, b in combinations(range(len(jobs)), 2)
                  if fps[a] == fps[b]]
    matrix = ["".join("." if a == b else ("=" if fps[a] == fps[b] else "x")
                      for b in range(len(jobs))) for a in range(len(jobs))]
    rep = RunReport("fingerprint", items, {"collisions": collisions, "matrix": matrix})
    rep.passed = not (args.distinct and collisions)
    rows = []
    for lab, fp in zip(labels, fps):
        ranks = fp["idempotent_ranks"]
        rows.append([lab, fp["dim_im"], fp["dim_ker"], fp["dim_im_cap_ker"], fp["radical_dim"],
                     "{" + ",".join(map(str, ranks)) + "}" if isinstance(ranks, list) else ranks,
                     _flag(fp["nil_index"]), fp["unit_image_rank"],
                     _flag(fp["unit_image_square_zero"]), _flag(fp["ker_contains_nondegenerate"]),
                     _flag(fp["r_squared_zero"])])
    human = _table(["operator", "dimIm", "dimKer", "im&ker", "rad", "idem", "nil", "rkR(1)",
                    "R(1)^2=0", "kerNondeg", "R^2=0"], rows)
    human += ["", "pairwise distinctness (x distinct, = equal fingerprints):"]
    human += [f"{lab:<24} {row}" for lab, row in zip(labels, matrix)]
    human.append(f"{len(collisions)} colliding pair(s)")
    human += [f"  {a} == {b}" for a, b in collisions]
    return rep, human


def cmd_claims(args) -> tuple[RunReport, list[str]]:
    claims = mapping_claims()
    partition = nilindex_partition()
    projections = block_projections()
    rep = RunReport("claims", claims, {"nilindex_partition": partition,
                                       "block_projections": projections})
    rep.passed = all(c["verdict"] for c in claims) and partition["ok"] \
        and all(p["ok"] for p in projections)
    human = _table(["claim", "chain", "domain", "verdict", "first difference"],
                   [[c["claim"], " > ".join(filter(None, c["chain"])), c["domain"],
                     "PASS" if c["verdict"] else "FAIL", c["first_difference"] or "-"]
                    for c in claims])
    human += ["", "nilpotency index classes: " + ("PASS" if partition["ok"] else "FAIL")]
    human += [f"  {m['id']}[{m['params']}]: index {m['index']}, stated {m['stated']}"
              for m in partition["mismatches"]]
    if partition["index_four"]:
        human.append("  index 4 realized by " + ", ".join(r["id"] for r in partition["index_four"]))
    human += ["", "block projections:"]
    human += [f"  {p['source']} -> {p['target']}" + (f" via {p['via']}" if p["via"] else "")
              + (": PASS" if p["ok"] else f": FAIL {p['differences']}") for p in projections]
    return rep, human


def _load_assignments(path: str, domain: ScalarDomain) -> dict[str, dict]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read assignments: {exc}") from None
    if isinstance(data, list):
        data = {str(k): v for k, v in enumerate(data)}
    elif data and all(not isinstance(v, dict) for v in data.values()):
        data = {"assignment": data}
    try:
        return {lab: {k: domain.parse(str(v)) for k, v in a.items()} for lab, a in data.items()}
    except (ValueError, AttributeError) as exc:
        raise UsageError(f"bad assignment file: {exc}") from None


def cmd_derive(args) -> tuple[RunReport, list[str]]:
    try:
        T = template(args.template)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    domain = _domain(args.domain)
    system = generate_system(T)
    if args.fit:
        fits, failed = {}, []
        for i, p in _jobs(args.fit, {}):
            lab = f"{i}[{param_label(p)}]" if p else i
            try:
                fit = fit_template(build_operator(i, p), T)
            except NoFit:
                failed.append(lab)
                continue
            fits[lab] = {k: str(v) for k, v in fit.assignment.items()}
        rep = RunReport("derive", [{"label": k, "assignment": v} for k, v in fits.items()],
                        {"template": T.name, "no_fit": failed})
        rep.passed = not failed
        text = json.dumps(fits, indent=2) + "\n"
        if args.out:
            Path(args.out).write_text(text)
            args.out = None  # the report goes to stdout
        human = [f"{len(fits)} fitted, {len(failed)} without fit"] + [f"  NoFit {x}" for x in failed]
        return rep, human
    if args.check:
        items = []
        for lab, a in _load_assignments(args.check, domain).items():
            if args.default_zero:
                a = {v: a.get(v, domain.zero()) for v in system.ring.names}
            try:
                sub = substitute_solution(system, a)
            except KeyError as exc:
                raise UsageError(f"{lab}: {exc.args[0]}") from None
            items.append({"label": lab, **sub.to_json()})
        rep = RunReport("derive", items, {"template": T.name, "equations": len(system)})
        rep.passed = all(x["allZero"] for x in items)
        human = _table(["assignment", "allZero", "first nonzero equation"],
                       [[x["label"], _flag(x["allZero"]), x["firstNonzero"] or "-"] for x in items])
        return rep, human
    payload = system.to_json()
    rep = RunReport("derive", [], {"template": T.name, "equations": len(system)})
    written = args.out
    if written:
        Path(written).write_text(json.dumps(payload, indent=2) + "\n")
        args.out = None
    human = [f"template {T.name}: {len(T.variables)} variables, {len(system)} distinct equations"]
    if not written:
        human += [f"  {e['poly']}    <- {e['pair'][0]}*{e['pair'][1]} entry {tuple(e['entry'])}"
                  for e in payload["equations"]]
    return rep, human


def _load_operator(ref: str) -> LinearOperator:
    path = Path(ref)
    try:
        if ref == "-":
            return LinearOperator.from_json(json.load(sys.stdin))
        if path.suffix == ".json" or path.exists():
            return LinearOperator.from_json(json.loads(path.read_text()))
        return build_operator(*parse_ref(ref))
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot load operator {ref!r}: {exc}") from None


def cmd_conjugate(args) -> tuple[RunReport, list[str]]:
    domain = _domain(args.domain)
    L = _load_operator(args.operator)
    raw = [] if not args.args else [x.strip() for x in args.args.split(",")]
    try:
        if args.descriptor == "inner":
            rows = [[domain.parse(x) for x in r.split()] for r in args.args.split(";")]
            psi = build_automorphism("inner", rows, n=L.n, domain=domain)
        else:
            vals = [domain.parse(x) for x in raw]
            psi = build_automorphism(args.descriptor, *vals, n=L.n, domain=domain)
    except (KeyError, ValueError, TypeError, AttributeError) as exc:
        raise UsageError(f"bad descriptor: {exc}") from None
    if domain != QQ:
        L = lift_operator(L, domain) if L.domain == QQ else L
        psi = lift_descriptor(psi, domain)
    result = conjugate(L, psi)
    rep = RunReport("conjugate", [], {"descriptor": psi.to_json(), "operator": result.to_json()})
    human = [json.dumps(result.to_json(), indent=2)]
    return rep, human


# -- entry point ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--domain", default="Q", help="Q | Qi | Qsqrt:d | Fp:p")
    common.add_argument("--params", help="k=v,... overriding the sampling grid")
    common.add_argument("--json", action="store_true", help="print the JSON report")
    common.add_argument("--out", help="write output to a file")
    common.add_argument("--n", type=int, help="matrix size for Example1")
    common.add_argument("--timings", action="store_true")

    ap = argparse.ArgumentParser(prog="rbmat", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"rbmat {__version__}")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("verify", parents=[common], help="run the verification battery")
    p.add_argument("selector", help="catalog id or glob, e.g. Q* or R1")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fingerprint", parents=[common], help="fingerprint table")
    p.add_argument("selector")
    p.add_argument("--distinct", action="store_true", help="fail on colliding fingerprints")
    p.set_defaults(func=cmd_fingerprint)

    p = sub.add_parser("claims", parents=[common], help="conjugacy claims and index classes")
    p.set_defaults(func=cmd_claims)

    p = sub.add_parser("derive", parents=[common], help="dump or check a quadratic system")
    p.add_argument("template", help="section3 | section4-stage1 | section4-21par")
    p.add_argument("--check", metavar="ASSIGNMENTS", help="substitute assignments from JSON")
    p.add_argument("--default-zero", action="store_true",
                   help="treat variables missing from an assignment as 0")
    p.add_argument("--fit", metavar="SELECTOR", help="fit catalog samples and emit assignments")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("conjugate", parents=[common], help="apply a named (anti)automorphism")
    p.add_argument("descriptor", help="psi | phi | Theta12 | Theta13 | Theta23 | ThetaXYT | T | "
                                      "identity | inner")
    p.add_argument("operator", help="operator JSON file, '-' for stdin, or a ref like Q5:kappa=0,beta=2")
    p.add_argument("--args", help="descriptor arguments, comma separated (inner: rows split by ';')")
    p.set_defaults(func=cmd_conjugate)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        report, human = args.func(args)
    except UsageError as exc:
        print(f"rbmat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(args, report, human)
    return report.exit_status


if __name__ == "__main__":
    sys.exit(main())
