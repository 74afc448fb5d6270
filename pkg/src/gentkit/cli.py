"""Command-line front end.

Every subcommand builds a report dictionary, prints it as text, JSON or CSV and optionally
writes it to ``--output``.  Exit codes: 0 success, 2 invalid input, 3 numerical
non-convergence (or a failed campaign bound) under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import coherence, cones, jsonio, maps, measures, registry
from .algebra import h_purity
from .opspace import DimensionError, random_unitary
from .states import InvalidStateError, PureState, random_density

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED = 0, 2, 3
INPUT_ERRORS = (jsonio.InputError, registry.SpecError, InvalidStateError, DimensionError,
                json.JSONDecodeError, KeyError, TypeError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for all randomness (default 0)")
    p.add_argument("--restarts", type=int, default=None, help="optimizer restarts")
    p.add_argument("--tol", type=float, default=None, help="decision tolerance")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--output", default=None, help="also write the report to this file")
    p.add_argument("--strict", action="store_true", help="exit 3 on non-convergence")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gentkit", description="Generalized entanglement toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("purity", help="h-purity and coherence verdict")
    p.add_argument("--algebra", required=True)
    p.add_argument("--state", required=True)
    _common(p)

    p = sub.add_parser("measure", help="entanglement measure of a state")
    p.add_argument("--algebra", required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--outer-algebra", default=None, help="outer algebra for roof measures (default: full)")
    p.add_argument("--measure", default="auto",
                   choices=("auto", "pure", "cartan", "roof", "purity", "amplitude", "rank"))
    p.add_argument("--fn", default="shannon", choices=("shannon", "renyi2", "rank"))
    _common(p)

    p = sub.add_parser("maps", help="liftability and separability of an explicit map")
    p.add_argument("--algebra", required=True)
    p.add_argument("--map", required=True)
    p.add_argument("--state", default=None)
    _common(p)

    p = sub.add_parser("protocol", help="communication complexity of a protocol tree")
    p.add_argument("--map", required=True, help="protocol tree (a plain map is one round)")
    p.add_argument("--state", required=True)
    p.add_argument("--mode", choices=("entropy", "log_count"), default="entropy")
    p.add_argument("--omit-last-round", action="store_true")
    _common(p)

    p = sub.add_parser("cones", help="cone-relative measure of a two-qubit state")
    p.add_argument("--state", required=True)
    p.add_argument("--fn", default="shannon", choices=("shannon", "renyi2", "rank"))
    p.add_argument("--samples", type=int, default=40, help="random generators per family")
    _common(p)

    p = sub.add_parser("campaign", help="monotonicity campaign under random liftable maps")
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--mixed", type=int, default=4, help="mixed-state samples checked with the roof")
    p.add_argument("--fn", default="shannon", choices=("shannon", "renyi2"))
    p.add_argument("--bound", type=float, default=5e-4)
    _common(p)
    return parser


# ------------------------------------------------------------------ commands


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def cmd_purity(args):
    alg = jsonio.decode_algebra(jsonio.load(args.algebra))
    state = jsonio.decode_state(jsonio.load(args.state))
    restarts = args.restarts or coherence.DEFAULT_RESTARTS
    tol = args.tol or coherence.COHERENCE_TOL
    rho = state.density().matrix if isinstance(state, PureState) else state.matrix
    pur = h_purity(alg, rho)
    mp = coherence.max_purity(alg, restarts=restarts, seed=args.seed)
    report = {"command": "purity", "purity": pur, "max_purity": mp.value, "converged": mp.converged}
    if isinstance(state, PureState):
        rep = coherence.is_coherent(alg, state, tol=tol, restarts=restarts, seed=args.seed)
        report["coherent"] = rep.is_coherent
        report["component_weights"] = rep.component_weights
        if rep.witness is not None:
            report["witness_spectrum"] = np.linalg.eigvalsh(rep.witness)
    else:
        report["coherent"] = False
    lines = [f"purity {_fmt(pur)}, coherent: {'yes' if report['coherent'] else 'no'}",
             f"max purity {_fmt(mp.value)}"]
    if "witness_spectrum" in report:
        w = report["witness_spectrum"]
        lines.append(f"witness spectrum: min {w[0]:.6f}, gap {w[1] - w[0]:.6f}, max {w[-1]:.6f}")
    return report, lines, mp.converged


def _fn_name(name: str) -> str:
    return {"renyi2": "renyi2_neg_purity", "rank": "support_rank_limit"}.get(name, name)


def cmd_measure(args):
    h = jsonio.decode_algebra(jsonio.load(args.algebra))
    state = jsonio.decode_state(jsonio.load(args.state))
    fn = _fn_name(args.fn)
    kind = args.measure
    if kind == "auto":
        kind = "pure" if isinstance(state, PureState) else "roof"
    if kind in ("pure", "cartan", "amplitude", "rank") and not isinstance(state, PureState):
        raise jsonio.InputError(f"measure '{kind}' needs a pure state")
    report = {"command": "measure", "measure": kind, "fn": fn}
    converged = True
    if kind == "pure":
        report["value"] = measures.s_pure(h, state, fn)
    elif kind == "cartan":
        det = measures.s_cartan_detail(h, state, fn)
        report.update(value=det.value, per_seed=list(det.per_seed), distribution=det.distribution)
    elif kind in ("roof", "purity"):
        g = (jsonio.decode_algebra(jsonio.load(args.outer_algebra)) if args.outer_algebra
             else registry.full_matrix(h.hilbert_dim))
        opts = measures.RoofOptions(seed=args.seed)
        if args.restarts:
            opts = measures.RoofOptions(seed=args.seed, restarts=args.restarts)
        res = (measures.s_roof(g, h, state, fn, opts) if kind == "roof"
               else measures.purity_measure(g, h, state, opts))
        converged = res.converged
        report.update(value=res.value, converged=res.converged, iterations=res.iterations,
                      decomposition=[{"weight": w, "state": jsonio.encode_state(s)} for w, s in res.decomposition])
    else:
        opts = measures.ExpansionOptions(seed=args.seed, restarts=args.restarts or 12)
        if kind == "rank":
            report["value"] = measures.h_rank(h, state, opts)
        else:
            report["value"] = measures.s_amplitude(h, state, fn, opts)
    lines = [f"{kind} {fn}: {report['value']:.6f}" if kind != "rank" else f"h-rank: {report['value']}"]
    if kind in ("roof", "purity"):
        lines.append(f"decomposition terms: {len(report['decomposition'])}, converged: {'yes' if converged else 'no'}")
    return report, lines, converged


def cmd_maps(args):
    alg = jsonio.decode_algebra(jsonio.load(args.algebra))
    m = jsonio.decode_map(jsonio.load(args.map))
    tol = args.tol or maps.LIFT_TOL
    lift = maps.lifts_to(m, alg, tol=tol)
    verdicts = maps.separable_certificate(m, alg)
    report = {"command": "maps", "quantum_map": maps.is_quantum_map(m), "liftable": lift.liftable,
              "residual": lift.residual, "separability": verdicts}
    lines = [f"liftable: {'yes' if lift.liftable else 'no'}, residual {lift.residual:.6g}",
             f"quantum map: {'yes' if report['quantum_map'] else 'no'}",
             "separability: " + ", ".join(verdicts)]
    if lift.liftable:
        report["diagram_residual"] = maps.diagram_residual(m, alg, lift.lifted_action)
    if args.state is not None:
        state = jsonio.decode_state(jsonio.load(args.state))
        probs = maps.outcome_probabilities(m, state)
        report["outcome_probabilities"] = probs
        lines.append("outcome probabilities: " + " ".join(f"{p:.6f}" for p in probs))
    return report, lines, True


def cmd_protocol(args):
    proto = jsonio.decode_protocol(jsonio.load(args.map))
    state = jsonio.decode_state(jsonio.load(args.state))
    rep = maps.communication_complexity(proto, state, mode=args.mode, omit_last_round=args.omit_last_round)
    report = {"command": "protocol", "per_round": list(rep.per_round), "total": rep.total}
    parts = [f"round {i + 1}: {c:.3f} bits" for i, c in enumerate(rep.per_round)]
    return report, ["; ".join(parts + [f"total: {rep.total:.3f}"])], True


def cmd_cones(args):
    state = jsonio.decode_state(jsonio.load(args.state))
    rho = state.density().matrix if isinstance(state, PureState) else state.matrix
    if rho.shape != (4, 4):
        raise jsonio.InputError("the cones command handles two-qubit states")
    fn = _fn_name(args.fn)
    g, h = registry.full_matrix(4), registry.bipartite_local(2, 2)
    opts = measures.RoofOptions(seed=args.seed, restarts=args.restarts or 16)
    roof = measures.s_roof(g, h, rho, fn, opts)
    extra = [s.amplitudes for _, s in roof.decomposition]
    lc = cones.lie_cones(samples=args.samples, seed=args.seed, extra_states=extra, fn=fn)
    pv = np.array([lc.pure_value(x) for x in lc.D.generators])
    rel = cones.cone_S_relative_detail(lc.D, lc.C, lc.pi, lc.to_vec(rho), fn, pure_values=pv)
    pi_rep = cones.check_pi(lc.pi, lc.D, lc.C)
    report = {"command": "cones", "value": rel.value, "roof": roof.value, "support": rel.support,
              "pi_trace_defect": pi_rep.trace_defect, "generators": lc.D.generators.shape[0]}
    lines = [f"S(x;C) {rel.value:.6f} (roof {roof.value:.6f})",
             f"generators: {report['generators']}, pi trace defect {pi_rep.trace_defect:.2e}"]
    return report, lines, roof.converged


def _campaign_maps(lc, rng):
    """Two-outcome liftable C-separable map: weighted local unitaries, one followed by swap."""
    swap = np.eye(4)[[0, 2, 1, 3]]
    p = rng.uniform(0.2, 0.8)
    u1 = np.kron(random_unitary(2, rng), random_unitary(2, rng))
    u2 = swap @ np.kron(random_unitary(2, rng), random_unitary(2, rng))
    return [lc.cone_map(lambda x, u=u1: p * u @ x @ u.conj().T),
            lc.cone_map(lambda x, u=u2: (1 - p) * u @ x @ u.conj().T)]


def run_campaign(samples: int = 500, seed: int = 0, fn="shannon", mixed: int = 4,
                 restarts: int = 4) -> dict:
    """Monotonicity campaign on the two-qubit cone instance.

    A random explicit map and a conditional composition of two such rounds are checked on
    ``samples`` random pure states; ``mixed`` random rank-2 states are checked with
    roof-estimated values on both sides.
    """
    rng = np.random.default_rng(seed)
    lc = cones.lie_cones(samples=20, seed=seed, fn=fn)
    first = _campaign_maps(lc, rng)
    composed = cones.compose_explicit(first, [_campaign_maps(lc, rng) for _ in first])
    out = {}
    for name, ms in (("single", first), ("composed", composed)):
        rep = cones.monotonicity_trial(ms, lc.D, lc.C, lc.pi, fn, samples=samples, seed=seed,
                                       pure_value=lc.pure_value, sampler=lc.sample_pure, Dsep=lc.Dsep)
        out[name] = {"max_violation": rep.max_violation, "precondition_ok": rep.precondition_ok,
                     "failures": [list(f) for f in rep.precondition_failures],
                     "worst_sample": int(np.argmax(rep.violations))}
    g, h = lc.g, lc.h
    opts = measures.RoofOptions(seed=seed, restarts=restarts)
    worst = 0.0
    for i in range(mixed):
        rho = random_density(4, rank=2, seed=int(rng.integers(2**31))).matrix
        before = measures.s_roof(g, h, rho, fn, opts).value
        after = 0.0
        for m in first:
            y = lc.to_op(m(lc.to_vec(rho)))
            q = float(np.real(np.trace(y)))
            after += q * measures.s_roof(g, h, y / q, fn, opts).value
        worst = max(worst, after - before)
    out["mixed"] = {"samples": mixed, "max_violation": worst}
    out["max_violation"] = max(out["single"]["max_violation"], out["composed"]["max_violation"], worst)
    return out


def cmd_campaign(args):
    res = run_campaign(args.samples, args.seed, _fn_name(args.fn), args.mixed, args.restarts or 4)
    ok = res["max_violation"] <= args.bound
    report = {"command": "campaign", "samples": args.samples, "bound": args.bound, "passed": ok, **res}
    lines = [f"single round: {args.samples} samples, max violation {res['single']['max_violation']:.1e}",
             f"composed rounds: {args.samples} samples, max violation {res['composed']['max_violation']:.1e}",
             f"mixed states: {args.mixed} samples, max violation {res['mixed']['max_violation']:.1e}",
             f"max violation <= {args.bound:.0e}: {'yes' if ok else 'no'}"]
    return report, lines, ok


COMMANDS = {"purity": cmd_purity, "measure": cmd_measure, "maps": cmd_maps, "protocol": cmd_protocol,
            "cones": cmd_cones, "campaign": cmd_campaign}


def _csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["key", "value"])
    for k, v in jsonio.to_jsonable(report).items():
        w.writerow([k, v if not isinstance(v, (list, dict)) else json.dumps(v)])
    return buf.getvalue()


def render(report: dict, lines: list[str], fmt: str) -> str:
    if fmt == "json":
        return jsonio.dumps(report) + "\n"
    if fmt == "csv":
        return _csv(report)
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, lines, converged = COMMANDS[args.command](args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = render(report, lines, args.format)
    sys.stdout.write(text)
    if args.output:
        jsonio.write_atomic(args.output, text)
    if args.strict and not converged:
        print("error: computation did not converge", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
