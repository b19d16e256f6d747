"""Command-line front end: ``orgnet <command> ...``.

Exit codes: 0 optimal or pass, 1 input error, 2 infeasible, 3 unbounded,
4 verification failure, 5 iteration limit reached.  ``ORGNET_ITER_CAP``
overrides the simplex iteration cap.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import contingency, lpcore, multicast, netcode, oracle
from .documents import (DocumentError, dump_solution, dumps, number, parse_problem, parse_solution)
from .dot import to_dot
from .lpcore import IterationLimitError, Status
from .model import FirmCosts, FirmSpec, Replication, ValidationError

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_UNBOUNDED = 3
EXIT_VERIFY = 4
EXIT_LIMIT = 5
OUTPUT_VERSION = 1

_STATUS_EXIT = {Status.OPTIMAL: EXIT_OK, Status.INFEASIBLE: EXIT_INFEASIBLE, Status.UNBOUNDED: EXIT_UNBOUNDED}


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: Path | None = None
    solution: Path | None = None
    output: Path | None = None
    mode: Replication | None = None
    tol_feas: float = lpcore.TOL_FEAS
    tol_gap: float = lpcore.TOL_GAP
    rate_ceiling: float | None = None
    seed: int = lpcore.DEFAULT_SEED
    format: str = "table"
    quiet: bool = False
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.tol_feas > 0 and self.tol_gap > 0):
            raise InputError("tolerances must be positive")
        if self.rate_ceiling is not None and not self.rate_ceiling >= 0:
            raise InputError("--rate-ceiling must be >= 0")

    @property
    def solver_kw(self) -> dict:
        return {"tol_feas": self.tol_feas, "tol_gap": self.tol_gap, "seed": self.seed}


# --------------------------------------------------------------------------- #
# helpers


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors, never confused with the infeasible code
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _emit(cfg: RunConfig, text: str):
    if cfg.quiet:
        return
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _write(cfg: RunConfig, text: str) -> bool:
    """Write to --output when given; returns whether it did."""
    if cfg.output is None:
        return False
    try:
        cfg.output.write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {cfg.output}: {exc.strerror}") from None
    return True


def _load_problem(cfg: RunConfig):
    try:
        text = cfg.input.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {cfg.input}: {exc.strerror}") from None
    try:
        doc = parse_problem(text)
    except DocumentError as exc:
        raise InputError(f"{cfg.input}: {exc}") from None
    p = doc.problem
    if cfg.mode is not None and cfg.mode is not p.sender_replication:
        import dataclasses

        p = dataclasses.replace(p, sender_replication=cfg.mode)
    return p, doc.capacities


def _human(x) -> str:
    if isinstance(x, str):
        return x
    v = number(x) if x is not None else None
    return "n/a" if v is None else f"{v:.12g}"


def _json(obj) -> str:
    return dumps({"version": OUTPUT_VERSION, **obj})


def _first_message(p):
    m = p.broadcasts[0].messages[0]
    return m


def _receivers_option(cfg: RunConfig, p) -> list[str]:
    raw = cfg.options.get("receivers")
    if raw:
        return [r for r in raw.split(",") if r]
    return list(_first_message(p).receivers)


def _need_caps(caps, what: str):
    if caps is None:
        raise InputError(f"{what} needs edge capacities: add a 'capacity' field to every edge")
    return caps


# --------------------------------------------------------------------------- #
# commands


def cmd_solve_contingency(cfg: RunConfig) -> int:
    p, _ = _load_problem(cfg)
    if p.importance is not None:
        res = contingency.solve_weighted_delivery(p, **cfg.solver_kw)
    else:
        res = contingency.solve_contingency(p, **cfg.solver_kw)
    document = dump_solution(p, res)
    wrote = _write(cfg, document)
    if cfg.format == "json":
        if not wrote:
            _emit(cfg, document)
    elif cfg.format == "dot":
        _emit(cfg, to_dot(p.graph, res.topology.weights if res.optimal else None, name="contingency"))
    else:
        lines = [f"status: {res.status.value}"]
        if res.optimal:
            lines.append(f"objective: {_human(res.objective)}")
            if res.delivered is not None:
                lines.append(f"net benefit: {_human(res.net_benefit)}")
            lines.append(contingency.extract_report(res.topology, res.flows).to_table())
        elif res.status is Status.INFEASIBLE:
            lines.append("infeasible: Farkas certificate included in the solution document")
        _emit(cfg, "\n".join(lines))
    return _STATUS_EXIT[res.status]


def cmd_solve_multicast(cfg: RunConfig) -> int:
    p, caps = _load_problem(cfg)
    m = _first_message(p)
    source = cfg.options.get("source") or m.source
    receivers = _receivers_option(cfg, p)
    benefit = cfg.options.get("benefit")
    try:
        if benefit is None:
            rate = cfg.options.get("rate")
            rate = m.size if rate is None else rate
            res = multicast.min_cost_coded_multicast(p.graph, source, receivers, rate, caps=caps, **cfg.solver_kw)
            out = {"command": "solve-multicast", "status": res.status.value, "rate": number(rate),
                   "objective": number(res.objective)}
            weights = res.topology.weights if res.optimal else None
        else:
            res = multicast.optimize_welfare(p.graph, source, receivers, benefit, caps=caps,
                                             rate_ceiling=cfg.rate_ceiling, **cfg.solver_kw)
            out = {"command": "solve-multicast", "status": res.status.value, "rate": number(res.rate),
                   "cost": number(res.cost), "welfare": number(res.welfare)}
            if res.message:
                out["message"] = res.message
            weights = res.topology.weights if res.optimal else None
    except multicast.MulticastInputError as exc:
        raise InputError(str(exc)) from None
    if weights is not None:
        out["weights"] = [{"from": a, "to": b, "weight": number(w)} for (a, b), w in weights.items()]
    text = _json(out)
    wrote = _write(cfg, text)
    if cfg.format == "json":
        if not wrote:
            _emit(cfg, text)
    elif cfg.format == "dot":
        _emit(cfg, to_dot(p.graph, weights, name="multicast"))
    else:
        lines = [f"{k}: {_human(v)}" for k, v in out.items() if k not in ("weights", "command", "version")]
        lines += [f"{w['from']}->{w['to']}: {_human(w['weight'])}" for w in out.get("weights", []) if w["weight"]]
        _emit(cfg, "\n".join(lines))
    return _STATUS_EXIT[res.status]


def cmd_maxflow(cfg: RunConfig) -> int:
    p, caps = _load_problem(cfg)
    m = _first_message(p)
    s = cfg.options.get("source") or m.source
    t = cfg.options.get("sink") or m.receivers[0]
    try:
        res = multicast.max_flow(p.graph, _need_caps(caps, "maxflow"), s, t)
    except multicast.MulticastInputError as exc:
        raise InputError(str(exc)) from None
    out = {"command": "maxflow", "source": s, "sink": t, "value": number(res.value),
           "cut": sorted(res.cut), "cut_edges": [[a, b] for a, b in res.cut_edges(p.graph)],
           "flow": [{"from": a, "to": b, "value": number(v)} for (a, b), v in res.flow.items()]}
    text = _json(out)
    wrote = _write(cfg, text)
    if cfg.format == "json":
        if not wrote:
            _emit(cfg, text)
    elif cfg.format == "dot":
        _emit(cfg, to_dot(p.graph, res.flow, name="maxflow"))
    else:
        _emit(cfg, _human(res.value))
    return EXIT_OK


def cmd_capacity(cfg: RunConfig) -> int:
    p, caps = _load_problem(cfg)
    source = cfg.options.get("source") or _first_message(p).source
    receivers = _receivers_option(cfg, p)
    try:
        rate = multicast.multicast_capacity(p.graph, _need_caps(caps, "capacity"), source, receivers)
    except multicast.MulticastInputError as exc:
        raise InputError(str(exc)) from None
    text = _json({"command": "capacity", "source": source, "receivers": receivers, "capacity": number(rate)})
    wrote = _write(cfg, text)
    if cfg.format == "json" and not wrote:
        _emit(cfg, text)
    elif cfg.format != "json":
        _emit(cfg, _human(rate))
    return EXIT_OK


def cmd_manager_value(cfg: RunConfig) -> int:
    o = cfg.options
    costs = FirmCosts(o["source_observer_cost"], o["observer_receiver_cost"],
                      o["observer_manager_cost"], o["manager_receiver_cost"])
    try:
        spec = FirmSpec(o["observers"], o["receivers_n"], True, costs)
        ceiling = 1.0 if cfg.rate_ceiling is None else cfg.rate_ceiling
        mv = multicast.manager_value(spec, o["benefit"], ceiling, **cfg.solver_kw)
    except (ValueError, ValidationError) as exc:
        raise InputError(str(exc)) from None
    out = {"command": "manager-value", "welfare_without": number(mv.welfare_without),
           "welfare_with": number(mv.welfare_with), "delta": number(mv.delta)}
    text = _json(out)
    wrote = _write(cfg, text)
    if cfg.format == "json" and not wrote:
        _emit(cfg, text)
    elif cfg.format != "json":
        _emit(cfg, "\n".join(f"{k}: {_human(v)}" for k, v in out.items() if k != "command"))
    return EXIT_OK


def _bits(v) -> str:
    return "(" + ",".join(str(int(x)) for x in v) + ")"


def cmd_demo(cfg: RunConfig) -> int:
    code = netcode.butterfly_code("xor")
    vectors = netcode.propagate(code)
    g = code.graph
    if cfg.format == "dot":
        _emit(cfg, to_dot(g, labels={k: _bits(v) for k, v in vectors.items()}, name="butterfly"))
        return EXIT_OK
    decoders = {t: netcode.decodable(code, t) for t in ("R1", "R2")}
    table = netcode.truth_table(code)
    copy_forward = oracle.copy_forward_outcomes(code, "V")
    check = oracle.exhaustive_gf2_check(code, decoders)
    if cfg.format == "json":
        out = {
            "command": "demo", "example": "butterfly",
            "coding_vectors": [{"from": a, "to": b, "vector": [int(x) for x in v]} for (a, b), v in vectors.items()],
            "truth_table": [{"a": bits[0], "b": bits[1], "edges": [{"from": a, "to": b, "bit": bit}
                                                                   for (a, b), bit in edge_bits.items()]}
                            for bits, edge_bits in table],
            "decoders": {t: {"in_edges": [list(k) for k in d.in_edges], "matrix": d.matrix.tolist()}
                         for t, d in decoders.items()},
            "exhaustive_check": check.verdict,
            "copy_forward": [{"rule": [int(x) for x in rule[("V", "W")]], "decodable": ok}
                             for rule, ok in copy_forward],
        }
        _emit(cfg, _json(out))
        return EXIT_OK
    lines = ["coding vectors over (a, b):"]
    lines += [f"  {a}->{b}: {_bits(v)}" for (a, b), v in vectors.items()]
    keys = [e.key for e in g.edges]
    lines.append("truth table:")
    lines.append("  a b | " + " ".join(f"{a}{b}" for a, b in keys))
    for bits, edge_bits in table:
        lines.append(f"  {bits[0]} {bits[1]} | " + " ".join(f"{edge_bits[k]:>{len(k[0]) + len(k[1])}}" for k in keys))
    for t, d in decoders.items():
        rows = ["[" + " ".join(str(int(x)) for x in row) + "]" for row in d.matrix]
        edges = ", ".join(f"{a}->{b}" for a, b in d.in_edges)
        lines.append(f"decoder {t} over ({edges}): " + " ".join(rows))
    lines.append(f"exhaustive decoding check: {check.verdict}")
    lines.append("copy-and-forward at V:")
    for rule, ok in copy_forward:
        lines.append(f"  V->W rule {_bits(rule[('V', 'W')])}: decodable at {', '.join(ok) if ok else 'none'}")
    best = max(len(ok) for _, ok in copy_forward)
    lines.append(f"most receivers decodable without coding: {best} of 2")
    _emit(cfg, "\n".join(lines))
    return EXIT_OK


def _row_index(model) -> dict[str, int]:
    from .documents import _label

    return {_label(lab): i for i, lab in enumerate(model.row_labels)}


def cmd_verify(cfg: RunConfig) -> int:
    p, _ = _load_problem(cfg)
    try:
        text = cfg.solution.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {cfg.solution}: {exc.strerror}") from None
    try:
        sd = parse_solution(text, p)
        raw = json.loads(text)
    except DocumentError as exc:
        raise InputError(f"{cfg.solution}: {exc}") from None
    if sd.status == Status.INFEASIBLE.value:
        report = _verify_farkas(p, raw)
    elif sd.status == Status.OPTIMAL.value:
        report = oracle.recheck_appendix_constraints(p, contingency.Topology(sd.weights),
                                                     contingency.FlowSet(sd.message_flows, sd.pair_flows),
                                                     sd.delivered, tol=cfg.tol_feas)
        report = _check_objective(p, sd, report, cfg.tol_gap)
    else:
        raise InputError(f"solution status {sd.status!r} has nothing to verify")
    _emit(cfg, str(report))
    return EXIT_OK if report.passed else EXIT_VERIFY


def _check_objective(p, sd, report, tol_gap):
    if not report.passed or sd.objective is None:
        return report
    cost = sum(e.cost * sd.weights.get(e.key, 0.0) for e in p.graph.edges)
    if sd.delivered is not None:
        cost -= sum((p.importance or {}).get(k, 0.0) * v for k, v in sd.delivered.items())
    gap = abs(cost - sd.objective)
    if gap > tol_gap * (1.0 + abs(sd.objective)):
        return oracle.OracleReport(report.subject, report.method, False, gap,
                                   {"family": "objective", "stated": sd.objective, "recomputed": cost})
    return report


def _verify_farkas(p, raw) -> oracle.OracleReport:
    import numpy as np

    if p.importance is not None:
        model = contingency.build_weighted_lp(p)[0]
    else:
        model = contingency.build_lp(p)[0]
    rows = _row_index(model)
    from .documents import _label

    cols = {_label(lab): j for j, lab in enumerate(model.col_labels)}
    cert = raw.get("certificates", {}).get("farkas")
    if not isinstance(cert, dict):
        raise InputError("infeasible solution has no Farkas certificate")
    y = np.zeros(model.n_constraints)
    v = np.zeros(model.n_vars)
    try:
        for item in cert["rows"]:
            y[rows[item["row"]]] = item["value"]
        for item in cert.get("bounds", []):
            v[cols[item["column"]]] = item["value"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"Farkas certificate does not match the problem: {exc}") from None
    ok = lpcore.check_farkas(model, y, v)
    return oracle.OracleReport("Farkas certificate", oracle.Method.CONSTRAINT_RECHECK, ok, 0.0 if ok else math.inf,
                               None if ok else {"family": "farkas", "reason": "certificate does not prove infeasibility"})


def cmd_export_lp(cfg: RunConfig) -> int:
    p, _ = _load_problem(cfg)
    model = contingency.build_weighted_lp(p)[0] if p.importance is not None else contingency.build_lp(p)[0]
    text = lpcore.to_lp_format(model, name="contingency")
    if not _write(cfg, text):
        _emit(cfg, text)
    return EXIT_OK


COMMANDS = {
    "solve-contingency": cmd_solve_contingency,
    "solve-multicast": cmd_solve_multicast,
    "maxflow": cmd_maxflow,
    "capacity": cmd_capacity,
    "manager-value": cmd_manager_value,
    "demo": cmd_demo,
    "verify": cmd_verify,
    "export-lp": cmd_export_lp,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--mode", choices=[r.value for r in Replication],
                        help="sender replication; overrides the problem file")
    common.add_argument("--tol-feas", type=float, default=lpcore.TOL_FEAS)
    common.add_argument("--tol-gap", type=float, default=lpcore.TOL_GAP)
    common.add_argument("--rate-ceiling", type=float)
    common.add_argument("--format", choices=("json", "table", "dot"), default="table")
    common.add_argument("--output", type=Path, help="write the structured result here")
    common.add_argument("--seed", type=int, default=lpcore.DEFAULT_SEED,
                        help="seed for the simplex degeneracy perturbations")
    common.add_argument("--quiet", action="store_true", help="print nothing; rely on the exit code")

    ap = _Parser(prog="orgnet", description="Optimal communication structures for organisations.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def problem_cmd(name, help_text):
        sp_ = sub.add_parser(name, parents=[common], help=help_text)
        sp_.add_argument("input", type=Path, help="problem document (JSON)")
        return sp_

    problem_cmd("solve-contingency", "cheapest standing weights for every broadcast")
    sp_ = problem_cmd("solve-multicast", "minimum-cost coded multicast or welfare optimum")
    sp_.add_argument("--source")
    sp_.add_argument("--receivers", help="comma-separated receiver ids")
    sp_.add_argument("--rate", type=float, help="multicast rate (default: first message size)")
    sp_.add_argument("--benefit", type=float, help="benefit per unit rate; switches to welfare maximisation")
    sp_ = problem_cmd("maxflow", "maximum flow with a min-cut certificate")
    sp_.add_argument("--source")
    sp_.add_argument("--sink")
    sp_ = problem_cmd("capacity", "multicast capacity from a source to its receivers")
    sp_.add_argument("--source")
    sp_.add_argument("--receivers", help="comma-separated receiver ids")
    sp_ = sub.add_parser("manager-value", parents=[common], help="welfare with and without a middle manager")
    sp_.add_argument("--observers", type=int, default=3)
    sp_.add_argument("--receivers", dest="receivers_n", type=int, default=3)
    sp_.add_argument("--source-observer-cost", type=float, default=1.0)
    sp_.add_argument("--observer-receiver-cost", type=float, default=4.0)
    sp_.add_argument("--observer-manager-cost", type=float, default=1.0)
    sp_.add_argument("--manager-receiver-cost", type=float, default=1.0)
    sp_.add_argument("--benefit", type=float, default=10.0)
    sp_ = sub.add_parser("demo", parents=[common], help="the butterfly network-coding example")
    sp_.add_argument("example", nargs="?", choices=("butterfly",), default="butterfly")
    sp_ = problem_cmd("verify", "recheck a solution document against its problem")
    sp_.add_argument("solution", type=Path)
    problem_cmd("export-lp", "write the contingency LP in CPLEX LP format")
    return ap


_CONFIG_KEYS = {"command", "input", "solution", "output", "mode", "tol_feas", "tol_gap", "rate_ceiling",
                "seed", "format", "quiet"}


def parse_config(argv) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    base = {k: args.pop(k) for k in list(args) if k in _CONFIG_KEYS}
    if base.get("mode") is not None:
        base["mode"] = Replication(base["mode"])
    return RunConfig(**base, options=args)


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.command](cfg)
    except InputError as exc:
        print(f"orgnet: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except IterationLimitError as exc:
        print(f"orgnet: {exc}", file=sys.stderr)
        return EXIT_LIMIT


if __name__ == "__main__":
    raise SystemExit(main())
