"""Command-line front end.

Exit status: 0 on success or a passing verification, 1 when a verification
fails, 2 on usage, input or output errors.  Set ``TSPEF_LOG`` (e.g. ``DEBUG``)
for log output on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass

from . import consys, lp, projection, verify
from .errors import InstanceFormatError, TspefError
from .instances import TspInstance, brute_force_lap, parse_rational

POLYTOPES = ("a_n", "q1bar", "q0", "q2bar")
PROBLEMS = ("lap", "lp0", "lp1", "lp2")
SUITES = ("lemma1", "lemma2", "equiv-lap-lp1", "equiv-lp0-lp2", "applied-costs",
          "bound-study", "nonintegral")


@dataclass
class RunConfig:
    command: str
    target: str
    instance: str | None = None
    m: int | None = None
    n: int | None = None
    seed: int = 0
    trials: int | None = None
    out: str | None = None
    json: bool = False
    max_bases: int = lp.DEFAULT_MAX_BASES
    max_fm_rows: int = projection.DEFAULT_MAX_FM_ROWS
    method: str = "bases"
    onto: str = "w"
    dump_tableau: str | None = None
    lp_redundancy: bool = False

    def __post_init__(self):
        if self.max_bases <= 0 or self.max_fm_rows <= 0:
            raise InstanceFormatError("guards must be positive")


def _read_json(path: str):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InstanceFormatError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text, parse_float=_refuse_float)
    except InstanceFormatError as exc:
        raise InstanceFormatError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def _refuse_float(text):
    raise InstanceFormatError(
        f"float literal {text} rejected: exact arithmetic only, use integers or \"p/q\" strings"
    )


def _parse_matrix(rows, name: str, size: int | None = None):
    if not isinstance(rows, list) or any(not isinstance(r, list) for r in rows):
        raise InstanceFormatError(f'"{name}" must be a list of rows')
    size = len(rows) if size is None else size
    if len(rows) != size or any(len(r) != size for r in rows):
        raise InstanceFormatError(f'"{name}" must be {size}x{size}')
    out = []
    for i, row in enumerate(rows):
        parsed = []
        for j, v in enumerate(row):
            try:
                parsed.append(parse_rational(v))
            except InstanceFormatError as exc:
                raise InstanceFormatError(f"{name}[{i}][{j}]: {exc}") from exc
        out.append(parsed)
    return out


def load_instance(path: str) -> TspInstance:
    """Read ``{"n": int, "d": [[int | "p/q", ...], ...]}`` exactly; floats are rejected."""
    data = _read_json(path)
    if not isinstance(data, dict) or "n" not in data or "d" not in data:
        raise InstanceFormatError(f'{path}: expected an object with "n" and "d"')
    n = data["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise InstanceFormatError(f'{path}: "n" must be an integer >= 2')
    return TspInstance(n, _parse_matrix(data["d"], "d", n))


def load_lap_costs(path: str):
    """The ``m x m`` assignment cost matrix stored under ``"c"``."""
    data = _read_json(path)
    if not isinstance(data, dict) or "c" not in data:
        raise InstanceFormatError(
            f'{path}: assignment problems need a "c" cost matrix (m x m) in the file'
        )
    return _parse_matrix(data["c"], "c")


def _sizes(cfg: RunConfig):
    """(n, instance) from --instance, --n or --m, in that order of preference."""
    inst = load_instance(cfg.instance) if cfg.instance and cfg.target not in ("lap", "lp1") else None
    if inst is not None:
        return inst.n, inst
    if cfg.n is not None:
        return cfg.n, None
    if cfg.m is not None:
        return cfg.m + 1, None
    raise InstanceFormatError("give --instance, --n or --m")


def _build(name: str, n: int):
    if name == "a_n":
        return consys.build_lap_polytope(n - 1)
    if name == "q1bar":
        return consys.build_q1bar(n)
    if name == "q0":
        return consys.build_q0_triplet(n)
    return consys.build_q2bar(n)


def _emit(cfg: RunConfig, payload: dict, table: str):
    text = json.dumps(payload, indent=1)
    if cfg.out:
        try:
            with open(cfg.out, "w") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            raise InstanceFormatError(f"cannot write {cfg.out}: {exc.strerror}") from exc
    if cfg.json:
        print(text)
    elif table:
        print(table)


def cmd_build(cfg: RunConfig) -> int:
    n, _ = _sizes(cfg)
    system = _build(cfg.target, n)
    text = system.dumps()
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text + "\n")
    if cfg.json or not cfg.out:
        print(text)
    else:
        print(f"{system.name}: {system.n_vars} variables, {system.n_rows} rows "
              f"({system.count(consys.EQ)} equalities) -> {cfg.out}")
    return 0


def cmd_solve(cfg: RunConfig) -> int:
    if cfg.target in ("lap", "lp1"):
        if not cfg.instance:
            raise InstanceFormatError("solve lap/lp1 needs --instance with a \"c\" matrix")
        c = load_lap_costs(cfg.instance)
        m = len(c)
        system = consys.build_lap_polytope(m) if cfg.target == "lap" else consys.build_q1bar(m + 1)
        obj = consys.objective_on_w(c)
        oracle = brute_force_lap(c)[1] if m <= 8 else None
    else:
        n, inst = _sizes(cfg)
        if inst is None:
            inst = TspInstance.uniform(n)
        system = _build("q0" if cfg.target == "lp0" else "q2bar", inst.n)
        obj = consys.triplet_cost_vector(inst)
        oracle = None
    sol = lp.solve(system, obj, dump=cfg.dump_tableau)
    payload = {"problem": cfg.target, "system": system.name, **sol.to_json()}
    if oracle is not None:
        payload["oracle"] = str(oracle)
    lines = [f"{cfg.target} over {system.name}: {sol.status}"]
    if sol.optimal:
        lines.append(f"objective  {sol.objective_value}")
        if oracle is not None:
            lines.append(f"oracle     {oracle}")
        lines += [f"  {k:<16} {v}" for k, v in payload["point"].items()]
    _emit(cfg, payload, "\n".join(lines))
    return 0


def _run_suite(cfg: RunConfig) -> verify.TheoremReport:
    s = cfg.target
    if s == "lemma1":
        return verify.verify_lemma1((cfg.m,) if cfg.m else (3, 4, 5))
    if s == "lemma2":
        return verify.verify_lemma2_counterexample()
    if s == "equiv-lap-lp1":
        return verify.verify_equivalence_lap_lp1(cfg.m or 4, cfg.trials or 50, cfg.seed)
    if s == "equiv-lp0-lp2":
        n = cfg.n or (cfg.m + 1 if cfg.m else 5)
        return verify.verify_equivalence_lp0_lp2(n, cfg.trials or 20, cfg.seed)
    if s == "applied-costs":
        if cfg.instance:
            return verify.verify_applied_costs(load_instance(cfg.instance))
        ms = (cfg.m,) if cfg.m else (4, 5)
        return verify.verify_applied_costs_batch(ms, cfg.trials or 5, cfg.seed)
    if s == "bound-study":
        if cfg.instance:
            return verify.lp0_bound_study(load_instance(cfg.instance))
        return verify.bound_study_batch(cfg.n or 5, cfg.trials or 20, cfg.seed)
    return verify.verify_nonintegrality(cfg.n or 4, 5, guard=cfg.max_bases)


def cmd_verify(cfg: RunConfig) -> int:
    report = _run_suite(cfg)
    lines = [report.summary()]
    if report.counterexample:
        lines.append("counterexample: " + json.dumps(report.counterexample))
    for row in report.details:
        lines.append("  " + "  ".join(f"{k}={v}" for k, v in row.items()))
    _emit(cfg, report.to_json(), "\n".join(lines))
    return 0 if report.ok else 1


def cmd_vertices(cfg: RunConfig) -> int:
    n, _ = _sizes(cfg)
    system = _build(cfg.target, n)
    vs = lp.enumerate_vertices(system, guard=cfg.max_bases, method=cfg.method)
    payload = {"system": system.name, "method": cfg.method, **vs.to_json()}
    table = (f"{system.name}: {len(vs)} vertices, {len(vs.fractional)} fractional "
             f"({vs.bases_examined} bases examined, method {cfg.method})")
    _emit(cfg, payload, table)
    return 0


def cmd_project(cfg: RunConfig) -> int:
    n, _ = _sizes(cfg)
    system = _build(cfg.target, n)
    onto = cfg.onto.upper()
    eliminate = [v for v in system.variables if v.family != onto]
    proj = projection.fourier_motzkin(system, eliminate, max_rows=cfg.max_fm_rows,
                                      lp_redundancy=cfg.lp_redundancy)
    payload = proj.to_json()
    table = "\n".join([f"projection of {system.name} onto {cfg.onto}: "
                       f"{proj.n_vars} variables, {proj.n_rows} rows"]
                      + [f"  {row}" for row in proj.rows])
    _emit(cfg, payload, table)
    return 0


COMMANDS = {"build": cmd_build, "solve": cmd_solve, "verify": cmd_verify,
            "vertices": cmd_vertices, "project": cmd_project}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tspef",
        description="Exact constructions and checks for assignment-based TSP formulations.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sizes=True):
        if sizes:
            p.add_argument("--instance", help="instance JSON file")
            p.add_argument("--m", type=int, help="number of non-depot cities")
            p.add_argument("--n", type=int, help="number of cities")
        p.add_argument("--out", help="also write the JSON result to this file")
        p.add_argument("--json", action="store_true", help="print JSON instead of a table")

    p = sub.add_parser("build", help="emit the H-representation of a polytope as JSON")
    p.add_argument("target", choices=POLYTOPES)
    common(p)

    p = sub.add_parser("solve", help="solve one of the LPs exactly")
    p.add_argument("target", choices=PROBLEMS)
    common(p)
    p.add_argument("--dump-tableau", help="write the final tableau and basis to this JSON file")

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("target", choices=SUITES)
    common(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int)
    p.add_argument("--max-bases", type=int, default=100_000)

    p = sub.add_parser("vertices", help="enumerate the vertices of a polytope")
    p.add_argument("target", choices=POLYTOPES)
    common(p)
    p.add_argument("--max-bases", type=int, default=lp.DEFAULT_MAX_BASES)
    p.add_argument("--method", choices=("bases", "lex"), default="bases")

    p = sub.add_parser("project", help="Fourier-Motzkin projection onto one variable family")
    p.add_argument("target", choices=POLYTOPES)
    common(p)
    p.add_argument("--onto", choices=("w",), default="w")
    p.add_argument("--max-rows", dest="max_fm_rows", type=int,
                   default=projection.DEFAULT_MAX_FM_ROWS)
    p.add_argument("--lp-redundancy", action="store_true",
                   help="also drop rows implied by the others (one LP per row)")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("TSPEF_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    fields = {k: v for k, v in vars(args).items() if v is not None}
    try:
        cfg = RunConfig(**fields)
        return COMMANDS[cfg.command](cfg)
    except (TspefError, OSError) as exc:
        print(f"tspef: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
