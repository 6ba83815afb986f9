"""Command-line front end: ``ewfs run | lf | bb | deutsch | bet``.

Exit codes: 0 success, 1 usage, 2 numerical failure or size guard,
3 invalid input, 4 LP failure. ``EWFS_TOL`` overrides the default
no-signalling tolerance.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import betting, dd, jsonio, polytope, prescriptions, scenario, violation
from .jsonio import InvalidInput

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_INPUT, EXIT_LP = 0, 1, 2, 3, 4
DEFAULT_TOL = 1e-10
BUNDLED = ("chsh.json", "bell_scenario.json")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("ewfs") / "data" / name))


def _resolve(path: str) -> Path:
    """Paths of the form ``bundled:NAME`` point at the package's data files."""
    if path.startswith("bundled:"):
        name = path.split(":", 1)[1]
        if name not in BUNDLED:
            raise UsageError(f"unknown bundled file {name!r}; choose from {', '.join(BUNDLED)}")
        return bundled_path(name)
    return Path(path)


def _tolerance(args) -> float:
    if getattr(args, "tol", None) is not None:
        tol = args.tol
    else:
        raw = os.environ.get("EWFS_TOL")
        if raw is None:
            return DEFAULT_TOL
        try:
            tol = float(raw)
        except ValueError:
            raise UsageError(f"EWFS_TOL={raw!r} is not a number") from None
    if not (math.isfinite(tol) and tol > 0):
        raise UsageError(f"tolerance must be a positive number, got {tol!r}")
    return tol


def _seed(v: str) -> int:
    n = int(v)
    if not 0 <= n < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return n


def _emit(args, report: dict, text: str | None = None) -> None:
    out = text if getattr(args, "format", "json") == "text" and text is not None else jsonio.dumps(report)
    if getattr(args, "output", None):
        Path(args.output).write_text(out)
    else:
        sys.stdout.write(out if out.endswith("\n") else out + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_run(args) -> int:
    tol = _tolerance(args)
    sc = jsonio.scenario_from_dict(jsonio.load_json(_resolve(args.scenario)))
    models = ["unitary", "collapse"] if args.model == "both" else [args.model]
    report = {"note": jsonio.SETTING_NOTE}
    for m in models:
        t = scenario.run_correlations(sc) if m == "unitary" else scenario.run_collapse_correlations(sc)
        ns = polytope.check_no_signalling(t, tol)
        report[m] = {
            **{k: v for k, v in jsonio.table_to_dict(t).items() if k != "note"},
            "normalization_error": t.normalization_error(),
            "no_signalling": {"alice_deviation": ns.alice_deviation, "bob_deviation": ns.bob_deviation,
                              "tol": tol, "passed": ns.passed},
        }
    _emit(args, report)
    return EXIT_OK


def _membership(t, model: str, tol: float) -> dict:
    fn = polytope.bell_membership if model == "bell" else polytope.lf_membership
    cert = fn(t, ns_tol=tol)
    return jsonio.certificate_to_dict(cert)


def cmd_lf_membership(args) -> int:
    tables = jsonio.tables_from_any(jsonio.load_json(_resolve(args.table)))
    models = ["bell", "lf"] if args.model == "both" else [args.model]
    tol = _tolerance(args)
    results = []
    for i, t in enumerate(tables):
        if not t.is_normalized(tol):
            raise InvalidInput(f"table {i}", f"not normalized (error {t.normalization_error():.3g})")
        ns = polytope.check_no_signalling(t, tol)
        if not ns.passed:
            raise InvalidInput(f"table {i}", f"signalling table (deviation {ns.deviation:.3g})")
        results.append({m: _membership(t, m, tol) for m in models})
    _emit(args, {"results": results} if len(results) > 1 else results[0])
    return EXIT_OK


def cmd_lf_vertices(args) -> int:
    fn = {"bell": polytope.bell_vertices, "ns": polytope.ns_vertices, "lf": polytope.lf_vertices}[args.model]
    vs = fn(args.nx, args.ny, args.ka, args.kb)
    _emit(args, jsonio.vertices_to_dict(vs))
    return EXIT_OK


def cmd_lf_optimize(args) -> int:
    cfg = {}
    if args.config:
        raw = jsonio.load_json(_resolve(args.config))
        if not isinstance(raw, dict):
            raise InvalidInput(args.config, "expected an object")
        cfg = dict(raw)
    cfg["seed"] = args.seed
    if args.restarts is not None:
        cfg["restarts"] = args.restarts
    try:
        config = violation.OptimizerConfig.from_dict(cfg)
    except (TypeError, ValueError) as e:
        raise InvalidInput(args.config or "config", str(e)) from None
    if args.search_lf:
        iq, res = violation.search_lf_violation(args.nx, args.ny, config)
        report = {"inequality": jsonio.inequality_to_dict(iq), "result": res.to_dict(),
                  "table": jsonio.table_to_dict(res.table),
                  "lf_certificate": jsonio.certificate_to_dict(polytope.lf_membership(res.table))}
        _emit(args, report)
        return EXIT_OK
    if not args.inequality:
        raise UsageError("lf optimize: an inequality file is required unless --search-lf is given")
    iq = jsonio.inequality_from_dict(jsonio.load_json(_resolve(args.inequality)))
    nx, ny, ka, kb = iq.dims
    if (ka, kb) != (2, 2):
        raise InvalidInput(args.inequality, "only binary outcomes (ka = kb = 2) can be optimized")
    template = violation.ViolationTemplate(nx, ny, optimize_state=config.optimize_state)
    res = violation.optimize(iq, template, config)
    _emit(args, {"inequality": jsonio.inequality_to_dict(iq), "result": res.to_dict(),
                 "table": jsonio.table_to_dict(res.table)})
    return EXIT_OK


def _bb_text(rep: prescriptions.RetroReport) -> str:
    lines = ["c    P(c|x=1)      P(c|x=2)"]
    lines += [f"{c:<4d} {a:.10f}  {b:.10f}" for c, (a, b) in enumerate(zip(rep.marginal_x1, rep.marginal_x2))]
    lines.append(f"L1 distance {rep.l1_distance:.10f}  flagged={rep.flagged}")
    return "\n".join(lines)


def cmd_bb(args) -> int:
    if args.d < 1 or args.d > 64:
        raise UsageError("bb demo: --d must be between 1 and 64")
    rep = prescriptions.bb_retro_demo(args.d)
    _emit(args, rep.to_dict(), _bb_text(rep))
    return EXIT_OK


def _normalized_pair(u: complex, v: complex, what: str) -> None:
    n = abs(u) ** 2 + abs(v) ** 2
    if abs(n - 1.0) > 1e-12:
        raise UsageError(f"{what}: squared moduli sum to {n!r}, must be 1")


def cmd_deutsch(args) -> int:
    _normalized_pair(args.alpha, args.beta, "deutsch --alpha/--beta")
    rep = prescriptions.deutsch_report(prescriptions.DeutschScenario(args.alpha, args.beta))
    text = "\n".join(f"{k:<16s} {v:.12f}" for k, v in rep.items())
    _emit(args, rep, text)
    return EXIT_OK


def _lab(d: dict, where: str) -> betting.BettingLab:
    vals = {k: jsonio.parse_complex(d[k], f"{where}.{k}") if k in d else None for k in ("alpha", "beta", "gamma", "delta")}
    missing = [k for k, v in vals.items() if v is None]
    if missing:
        raise InvalidInput(where, f"missing {', '.join(missing)}")
    try:
        return betting.BettingLab(**vals)
    except betting.BettingError as e:
        raise InvalidInput(where, str(e)) from None


def _lab_from_flags(args) -> betting.BettingLab:
    _normalized_pair(args.alpha, args.beta, "bet --alpha/--beta")
    _normalized_pair(args.gamma, args.delta, "bet --gamma/--delta")
    return betting.BettingLab(args.alpha, args.beta, args.gamma, args.delta)


def _ticket(name: str) -> betting.Ticket:
    if name not in betting.TICKETS or betting.TICKETS[name].setting is None:
        raise UsageError(f"unknown or unsettleable ticket {name!r}; choose G1, G2 or G01")
    return betting.TICKETS[name]


def cmd_bet_price(args) -> int:
    lab = _lab_from_flags(args)
    t = _ticket(args.ticket)
    if args.perspective == "external":
        prices = {"external": betting.price_ticket(t, betting.EXTERNAL, lab)}
    else:
        p0, p1 = betting.internal_prices(t, lab)
        prices = {"internal": {"c=0": p0, "c=1": p1}}
    _emit(args, {"ticket": t.id, **prices})
    return EXIT_OK


def cmd_bet_settle(args) -> int:
    if args.config:
        raw = jsonio.load_json(_resolve(args.config))
        if not isinstance(raw, dict):
            raise InvalidInput(args.config, "expected an object")
        lab = _lab(raw, args.config)
        tname = raw.get("ticket", "G1")
        persp = raw.get("perspective", "external")
        order = raw.get("order", "wallet-first")
        x = raw.get("x")
        if tname not in betting.TICKETS or betting.TICKETS[tname].setting is None:
            raise InvalidInput(f"{args.config}.ticket", f"unknown ticket {tname!r}")
        if persp not in ("external", "internal"):
            raise InvalidInput(f"{args.config}.perspective", f"expected external or internal, got {persp!r}")
        if order not in betting.ORDERS:
            raise InvalidInput(f"{args.config}.order", f"expected one of {betting.ORDERS}, got {order!r}")
        t = betting.TICKETS[tname]
    else:
        lab, t, persp, order, x = _lab_from_flags(args), _ticket(args.ticket), args.perspective, args.order, args.x
    try:
        out = betting.run_bet(lab, t, persp, x, order)
    except betting.BettingError as e:
        if args.config:
            raise InvalidInput(args.config, str(e)) from None
        raise UsageError(str(e)) from None
    report = {"ticket": t.id, "perspective": persp, "order": order, "prices": list(out.prices),
              "wallet_labels": list(out.wallet.labels), **out.report.to_dict()}
    _emit(args, report, out.report.text())
    return EXIT_OK


def cmd_bet_audit(args) -> int:
    lab = _lab_from_flags(args)
    audit = betting.total_probability_audit(lab)
    gains = {}
    for t in (betting.G1, betting.G2):
        for kind in ("external", "internal"):
            gains[f"{t.id}{'e' if kind == 'external' else 'i'}"] = betting.run_bet(lab, t, kind).report.expected_gain
    audit["expected_gains"] = gains
    text = "\n".join([
        f"x=1  external {audit['x1']['external']:.10f}  internal {audit['x1']['internal_marginal']:.10f}"
        f"  gap {audit['x1']['gap']:.10f}",
        f"x=2  external {audit['x2']['external']:.10f}  internal {audit['x2']['internal_marginal']:.10f}"
        f"  gap {audit['x2']['gap']:.10f}",
        "expected gains: " + ", ".join(f"{k} {v:+.1e}" for k, v in gains.items()),
    ])
    _emit(args, audit, text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _common(p, text: bool = False):
    p.add_argument("-o", "--output", help="write the report here instead of stdout")
    p.add_argument("--tol", type=float, help="tolerance override (default: $EWFS_TOL or 1e-10)")
    if text:
        p.add_argument("--format", choices=("json", "text"), default="json")


def _lab_flags(p):
    for name in ("alpha", "beta", "gamma", "delta"):
        p.add_argument(f"--{name}", type=complex, required=True)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ewfs", description="Extended Wigner's friend scenario toolkit")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="correlation table of a scenario file")
    p.add_argument("scenario", help="scenario JSON (or bundled:bell_scenario.json)")
    p.add_argument("--model", choices=("unitary", "collapse", "both"), default="unitary")
    _common(p)
    p.set_defaults(func=cmd_run)

    lf = sub.add_parser("lf", help="polytope queries").add_subparsers(dest="lf_command", required=True,
                                                                       parser_class=_Parser)
    p = lf.add_parser("membership", help="Bell / LF membership certificate")
    p.add_argument("table", help="correlation JSON or vertex export")
    p.add_argument("--model", choices=("bell", "lf", "both"), default="both")
    _common(p)
    p.set_defaults(func=cmd_lf_membership)

    p = lf.add_parser("vertices", help="enumerate polytope vertices")
    p.add_argument("--model", choices=("bell", "ns", "lf"), default="lf")
    for k in ("nx", "ny", "ka", "kb"):
        p.add_argument(f"--{k}", type=int, default=2)
    _common(p)
    p.set_defaults(func=cmd_lf_vertices)

    p = lf.add_parser("optimize", help="maximize an inequality over EWFS measurements")
    p.add_argument("inequality", nargs="?", help="inequality JSON (or bundled:chsh.json)")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--config", help="optimizer config JSON")
    p.add_argument("--restarts", type=int)
    p.add_argument("--search-lf", action="store_true", help="search the nontrivial LF facets instead")
    p.add_argument("--nx", type=int, default=3)
    p.add_argument("--ny", type=int, default=2)
    _common(p)
    p.set_defaults(func=cmd_lf_optimize)

    bb = sub.add_parser("bb", help="B-B prescription demos").add_subparsers(dest="bb_command", required=True,
                                                                          parser_class=_Parser)
    p = bb.add_parser("demo", help="eigenstate + Fourier retrocausality demo")
    p.add_argument("--d", type=int, default=3)
    _common(p, text=True)
    p.set_defaults(func=cmd_bb)

    p = sub.add_parser("deutsch", help="Deutsch reversal experiment")
    p.add_argument("--alpha", type=complex, default=complex(0.6))
    p.add_argument("--beta", type=complex, default=complex(0.8))
    _common(p, text=True)
    p.set_defaults(func=cmd_deutsch)

    bet = sub.add_parser("bet", help="quantum wallet betting").add_subparsers(dest="bet_command", required=True,
                                                                            parser_class=_Parser)
    p = bet.add_parser("price", help="ticket price from a perspective")
    _lab_flags(p)
    p.add_argument("--ticket", default="G1")
    p.add_argument("--perspective", choices=("external", "internal"), default="external")
    _common(p)
    p.set_defaults(func=cmd_bet_price)

    p = bet.add_parser("settle", help="settle a bet (flags or --config JSON)")
    p.add_argument("--config", help="bet config JSON {alpha, beta, gamma, delta, ticket, perspective, order}")
    for name in ("alpha", "beta", "gamma", "delta"):
        p.add_argument(f"--{name}", type=complex)
    p.add_argument("--ticket", default="G1")
    p.add_argument("--perspective", choices=("external", "internal"), default="external")
    p.add_argument("--order", choices=betting.ORDERS, default="wallet-first")
    p.add_argument("--x", type=int, choices=(1, 2), help="setting Eugene performs (default: the ticket's)")
    _common(p, text=True)
    p.set_defaults(func=cmd_bet_settle)

    p = bet.add_parser("audit", help="total-probability audit and expected gains")
    _lab_flags(p)
    _common(p, text=True)
    p.set_defaults(func=cmd_bet_audit)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "func", None) is cmd_bet_settle and not args.config:
            if any(getattr(args, k) is None for k in ("alpha", "beta", "gamma", "delta")):
                raise UsageError("bet settle: give --config or all of --alpha --beta --gamma --delta")
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (polytope.SizeGuardError, dd.SizeGuardError) as e:
        print(f"size guard: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except polytope.LPFailure as e:
        print(f"LP failure: {e}", file=sys.stderr)
        return EXIT_LP
    except (InvalidInput, scenario.ScenarioError, polytope.PolytopeError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        for v in getattr(e, "violations", []):
            print(f"  {v.location}: {v.message}", file=sys.stderr)
        return EXIT_INPUT
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INPUT


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
