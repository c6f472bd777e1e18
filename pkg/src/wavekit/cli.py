"""wavekit command line: kernel, construct, asymptotics, continue, field.

Exit codes: 0 success, 2 input or domain error, 3 verification failure, 4 solver divergence.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (A_coefficient, B_coefficient, curve_jet, determinant_C, pairing_dalpha,
                          pairing_dlambda, sheet_gradients)
from .continuation import (Discretization, continue_curve_1d, continue_sheet_2d)
from .diophantine import DEFAULT_LAMBDA, construct_kernel, construct_kernel_from_H
from .errors import DivergenceError, DomainError, SolvabilityError, VerificationError
from .io import (jsonable, read_branch, state_from_branch, write_branch, write_field_csv, write_json)
from .kernel import kernel_set, transversality_ok, transversality_value
from .physical import detect_stagnation, reconstruct_field
from .presets import PRESET_NAMES, load_preset
from .trivial import TrivialParameters, make_trivial_flow

EXIT_OK, EXIT_INPUT, EXIT_VERIFY, EXIT_DIVERGE = 0, 2, 3, 4
# typed decimals such as 1.5707963 carry about 8 digits, so the CLI default is looser than the library's
CLI_TOL = 1e-7


@dataclass
class RunConfig:
    command: str
    out: Path | None
    tol: float
    json: bool
    args: argparse.Namespace = field(repr=False)

    def validate(self) -> "RunConfig":
        if not self.tol > 0:
            raise DomainError("--tol must be strictly positive")
        if self.out is not None:
            parent = self.out.resolve().parent
            if not parent.is_dir() or not os.access(parent, os.W_OK):
                raise DomainError(f"output directory {parent} is not writable")
        return self


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _common(p, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--out", type=Path, default=d, help="output file")
    p.add_argument("--tol", type=float, default=d, help=f"kernel membership tolerance (default {CLI_TOL})")
    p.add_argument("--json", action="store_true", default=argparse.SUPPRESS if suppress else False,
                   help="machine-readable JSON on stdout")


def _param_flags(p):
    p.add_argument("--preset", choices=PRESET_NAMES)
    p.add_argument("--mu", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--lambda", dest="lam", type=float, help="phase in radians")
    p.add_argument("--kappa", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wavekit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"wavekit {__version__}")
    _common(ap, suppress=False)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    k = sub.add_parser("kernel", help="kernel set M(Lambda) and transversality")
    _param_flags(k)
    _common(k, True)

    c = sub.add_parser("construct", help="kernel of prescribed dimension from sums of two squares")
    c.add_argument("--dim", type=int)
    c.add_argument("--prime", type=int)
    c.add_argument("--H", dest="H", type=int, help="use this odd H directly")
    c.add_argument("--knum", type=int, default=1)
    c.add_argument("--kden", type=int, default=1)
    c.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    _common(c, True)

    a = sub.add_parser("asymptotics", help="pairings, second-order curve data, determinant C")
    _param_flags(a)
    a.add_argument("--pair", type=int, nargs=2, metavar=("N1", "N2"))
    a.add_argument("--check-transversality", action="store_true")
    a.add_argument("--n-points", type=int, default=48, help="collocation points for the mode BVPs")
    _common(a, True)

    q = sub.add_parser("continue", help="continuation of a bifurcating curve or a two-mode sheet")
    _param_flags(q)
    q.add_argument("--mode", type=int, help="kernel mode for explicit parameters")
    q.add_argument("--tmax", type=float, default=0.05)
    q.add_argument("--steps", type=int, default=10)
    q.add_argument("--sheet", action="store_true")
    q.add_argument("--pair", type=int, nargs=2, metavar=("N1", "N2"))
    q.add_argument("--r", type=float, action="append", help="sheet radius (repeatable, paired with --v)")
    q.add_argument("--v", type=float, action="append", help="sheet angle in radians")
    q.add_argument("--rv-grid", help="sheet grid as 'r1,v1;r2,v2;...'")
    q.add_argument("--ray-steps", type=int, default=1)
    q.add_argument("--delta", type=float, default=0.1, help="excluded band |sin v| <= delta when n1 | n2")
    q.add_argument("--nx", type=int, default=16)
    q.add_argument("--ns", type=int, default=48)
    q.add_argument("--full-state", action="store_true", help="also write the phi_hat sidecar CSV")
    _common(q, True)

    f = sub.add_parser("field", help="physical stream function and stagnation report for a branch point")
    f.add_argument("--branch", type=Path, required=True)
    f.add_argument("--index", type=int, default=-1)
    f.add_argument("--res", type=int, nargs=2, metavar=("NX", "NY"), default=(64, 33))
    f.add_argument("--stag-tol", type=float, default=1e-8)
    _common(f, True)
    return ap


# ---------------------------------------------------------------------------------------------


def _params(args) -> tuple[TrivialParameters, str | None]:
    if args.preset:
        pre = load_preset(args.preset)
        return pre.params, pre.name
    missing = [n for n, v in (("--mu", args.mu), ("--alpha", args.alpha), ("--lambda", args.lam)) if v is None]
    if missing:
        raise DomainError(f"give --preset or all of --mu --alpha --lambda (missing {' '.join(missing)})")
    kappa = 1.0 if args.kappa is None else args.kappa
    return TrivialParameters(args.mu, args.alpha, args.lam, kappa).validate(), None


def _emit(cfg: RunConfig, payload: dict, human: str | None = None):
    payload = jsonable(payload)
    if cfg.out is not None and cfg.command in ("kernel", "construct", "asymptotics"):
        write_json(cfg.out, payload)
    if cfg.json:
        print(json.dumps(payload))
    elif human is not None:
        print(human)
    elif cfg.out is None:
        print(json.dumps(payload, indent=1))


def cmd_kernel(cfg: RunConfig) -> int:
    params, name = _params(cfg.args)
    ks = kernel_set(params, tol=cfg.tol)
    payload = {
        "preset": name, "params": params.as_dict(), "kappa": params.kappa,
        "M": list(ks.modes), "dimension": ks.dimension, "r": ks.r,
        "l_values": {str(n): v for n, v in ks.l_values.items()},
        "transversality": transversality_ok(params), "transversality_value": transversality_value(params),
        "undefined_l_modes": list(ks.undefined_modes), "contains_zero": ks.contains_zero, "tol": cfg.tol,
    }
    human = (f"M = {list(ks.modes)}  (dimension {ks.dimension})\nr = {ks.r!r}\n"
             f"transversality: {payload['transversality']}  (cot(lambda) + mu^2|alpha|^(3/2)/2 = "
             f"{payload['transversality_value']!r})")
    _emit(cfg, payload, human)
    return EXIT_OK


def cmd_construct(cfg: RunConfig) -> int:
    a = cfg.args
    if a.H is not None:
        ck = construct_kernel_from_H(a.H, a.knum, a.kden, a.lam, tol=cfg.tol)
    else:
        if a.dim is None or a.prime is None:
            raise DomainError("give --H, or both --dim and --prime")
        ck = construct_kernel(a.dim, a.prime, a.knum, a.kden, a.lam, tol=cfg.tol)
    rep = ck.report()
    human = f"H = {rep['H']}\nM = {rep['M']}  (verified: {rep['verification']['matches']})"
    _emit(cfg, rep, human)
    return EXIT_OK


def cmd_asymptotics(cfg: RunConfig) -> int:
    a = cfg.args
    params, name = _params(a)
    flow = make_trivial_flow(params)
    ks = kernel_set(params, tol=cfg.tol)
    payload = {"preset": name, "params": params.as_dict(), "kappa": params.kappa, "M": list(ks.modes)}
    if a.pair is not None or ks.dimension == 2:
        n1, n2 = a.pair if a.pair is not None else ks.modes
        det = determinant_C(flow, n1, n2, ks)
        g = sheet_gradients(flow, n1, n2)
        payload.update({
            "pair": [n1, n2], "C": det.value, "C_simplified": det.simplified, "C_branch": det.branch,
            "C_vanishes": det.vanishes,
            "pairings": [[det.matrix[0][0], det.matrix[0][1]], [det.matrix[1][0], det.matrix[1][1]]],
            "pairings_rows": ["lambda", "alpha"],
            "A": A_coefficient(flow), "B": B_coefficient(flow),
            "second_derivative_projections": {f"P{l}_{i}{j}": v for (l, i, j), v in g.P.items() if i <= j},
        })
        human = (f"modes ({n1}, {n2})  C = {det.value!r}  (simplified {det.simplified!r}, {det.branch})\n"
                 f"pairings [lambda; alpha] = {payload['pairings']}")
    elif ks.dimension == 1:
        n = ks.modes[0]
        payload["A_pairing"] = pairing_dlambda(flow, n, ks)
        payload["B_pairing"] = pairing_dalpha(flow, n, ks)
        payload["transversality"] = transversality_ok(params)
        if a.check_transversality and not payload["transversality"]:
            payload["note"] = "transversality fails; second-order data not computed"
            _emit(cfg, payload, f"A-pairing = {payload['A_pairing']!r} (transversality fails)")
            return EXIT_OK
        jet = curve_jet(flow, n, a.n_points)
        payload.update({
            "mode": n, "lambda_dot": jet.lambda_dot, "lambda_ddot": jet.lambda_ddot, "mu_ddot": jet.mu_ddot,
            "a0_at_1": float(jet.a0.a(1.0)), "a2_at_1": float(jet.a2.a(1.0)),
            "c0": jet.harmonics.c0, "c2": jet.harmonics.c2,
            "numerator": jet.numerator_terms, "denominator": jet.denominator,
            "ratio_check": jet.ratio_residual,
            "bvp_residuals": {"a0": [jet.a0.boundary_residual, jet.a0.interior_residual],
                              "a2": [jet.a2.boundary_residual, jet.a2.interior_residual]},
        })
        human = (f"mode {n}: A-pairing = {payload['A_pairing']!r}\nlambda_dot = 0\n"
                 f"lambda_ddot = {jet.lambda_ddot!r}\nmu_ddot = {jet.mu_ddot!r}\n"
                 f"a0(1) = {payload['a0_at_1']!r}  a2(1) = {payload['a2_at_1']!r}  c0 = {jet.harmonics.c0!r}  "
                 f"c2 = {jet.harmonics.c2!r}\nratio identity residual = {jet.ratio_residual:.3e}")
    else:
        raise DomainError(f"kernel dimension {ks.dimension} is not supported here; pass --pair N1 N2")
    _emit(cfg, payload, human)
    return EXIT_OK


def _sheet_points(a) -> list:
    pts = []
    if a.rv_grid:
        for item in a.rv_grid.split(";"):
            if item.strip():
                r, v = (float(x) for x in item.split(","))
                pts.append((r, v))
    rs, vs = a.r or [], a.v or []
    if len(rs) != len(vs):
        raise DomainError("--r and --v must be given the same number of times")
    pts.extend(zip(rs, vs))
    if not pts:
        raise DomainError("sheet continuation needs --r/--v or --rv-grid")
    return pts


def _summary(branch) -> str:
    lines = []
    if branch.kind == "curve":
        lines.append(f"{'t':>12} {'lambda':>22} {'residual':>10}")
        for p in branch.points:
            lines.append(f"{p.amplitude[0]:12.6g} {p.parameters['lambda']:22.17g} {p.residual_norm:10.2e}")
    else:
        lines.append(f"{'r':>10} {'v':>10} {'alpha':>22} {'lambda':>22} {'residual':>10}")
        for p in branch.points:
            lines.append(f"{p.polar[0]:10.4g} {p.polar[1]:10.4g} {p.parameters['alpha']:22.17g} "
                         f"{p.parameters['lambda']:22.17g} {p.residual_norm:10.2e}")
    if branch.stopped:
        lines.append(f"stopped early: {branch.stopped}")
    return "\n".join(lines)


def cmd_continue(cfg: RunConfig) -> int:
    a = cfg.args
    params, name = _params(a)
    ks = kernel_set(params, tol=cfg.tol)
    disc = Discretization(a.nx, a.ns, params.kappa)
    if a.sheet:
        n1, n2 = a.pair if a.pair is not None else (ks.modes if ks.dimension == 2 else (None, None))
        if n1 is None:
            raise DomainError(f"sheet continuation needs a two-dimensional kernel, found {list(ks.modes)}")
        branches = continue_sheet_2d(params, n1, n2, _sheet_points(a), disc, delta=a.delta,
                                     ray_steps=a.ray_steps)
    else:
        n = a.mode if a.mode is not None else (ks.modes[0] if ks.dimension == 1 else None)
        if n is None:
            raise DomainError(f"curve continuation needs a one-dimensional kernel, found {list(ks.modes)}")
        branches = [continue_curve_1d(params, n, a.tmax, a.steps, disc)]
    written = []
    if cfg.out is not None:
        for k, br in enumerate(branches):
            path = cfg.out if len(branches) == 1 else cfg.out.with_name(f"{cfg.out.stem}.{k}{cfg.out.suffix}")
            written += [str(p) for p in write_branch(path, br, full_state=a.full_state)]
    if cfg.json:
        from .io import branch_to_dict
        print(json.dumps({"branches": [branch_to_dict(b) for b in branches], "written": written}))
    else:
        for br in branches:
            print(_summary(br))
        for p in written:
            print(f"wrote {p}")
    return EXIT_OK


def cmd_field(cfg: RunConfig) -> int:
    a = cfg.args
    doc = read_branch(a.branch)
    state, disc = state_from_branch(doc, a.index, a.branch)
    fld = reconstruct_field(state, disc, tuple(a.res))
    rep = detect_stagnation(fld, a.stag_tol)
    out = cfg.out if cfg.out is not None else Path("field.csv")
    write_field_csv(out, fld)
    stag_path = out.with_name(out.name + ".stagnation.json")
    write_json(stag_path, jsonable(rep.as_dict()))
    bcheck = {"m0_error": float(np.max(np.abs(fld.psi[:, 0] - fld.m0))),
              "m1_error": float(np.max(np.abs(fld.psi[:, -1] - fld.m1)))}
    payload = {"field": str(out), "stagnation": str(stag_path), "points": rep.points,
               "critical_layers": rep.critical_layers, "boundary_check": bcheck}
    human = (f"wrote {out} ({fld.x.size} x {fld.s.size} samples) and {stag_path}\n"
             f"stagnation points: {len(rep.points)}; closed-streamline levels: {len(rep.critical_layers)}")
    _emit(cfg, payload, human)
    return EXIT_OK


COMMANDS = {"kernel": cmd_kernel, "construct": cmd_construct, "asymptotics": cmd_asymptotics,
            "continue": cmd_continue, "field": cmd_field}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    tol = args.tol if args.tol is not None else CLI_TOL
    cfg = RunConfig(args.command, args.out, tol, bool(args.json), args)
    try:
        cfg.validate()
        return COMMANDS[args.command](cfg)
    except (DomainError, SolvabilityError) as exc:
        print(f"wavekit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except VerificationError as exc:
        print(f"wavekit {args.command}: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except DivergenceError as exc:
        dump = {"error": type(exc).__name__, "message": str(exc),
                "residual_norm": exc.residual_norm, "history": exc.history}
        print(f"wavekit {args.command}: solver diverged: {exc}", file=sys.stderr)
        print(json.dumps(jsonable(dump)), file=sys.stderr)
        return EXIT_DIVERGE


if __name__ == "__main__":
    sys.exit(main())
