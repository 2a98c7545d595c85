"""Command-line interface.

Exit codes: 0 property holds / success, 1 property fails, 2 invalid input,
3 numerical failure.  The default verdict tolerance can be overridden with the
``QSUPERMAPS_TOL`` environment variable.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import io
from .certify import (
    VERDICT_TOL,
    build_instrument,
    complete_cptni_value,
    complete_to_superchannel,
    cptni_seesaw_value,
)
from .comb import CombRealization, decompose_super_instrument, decompose_superchannel, recompose
from .errors import (
    DimensionMismatchError,
    NotCompletelyCPTNIError,
    NumericalFailureError,
    ParseError,
    ShapeMismatchError,
    SolverFailureError,
    SupermapError,
)
from .maps import apply_map, classify_map
from .sdp import DEFAULT_TOL
from .supermap import apply_supermap, counterexample_supermap, is_cpp, is_superchannel, pairing
from .tensor import hermitian_eigh

ENV_TOL = "QSUPERMAPS_TOL"

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class _InputError(Exception):
    pass


def _default_tol() -> float:
    raw = os.environ.get(ENV_TOL)
    if raw is None:
        return VERDICT_TOL
    try:
        return float(raw)
    except ValueError:
        raise _InputError(f"{ENV_TOL}={raw!r} is not a number") from None


def _matrix_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _load_kind(path: str, kind: str, state_label: str = "B0"):
    cf = io.load(path)
    if cf.kind != kind:
        raise ParseError(f"{path}: expected a {kind} file, found {cf.kind}")
    return cf, cf.to_object(state_label)


class _Out:
    """Collects report fields; prints text lines as they come unless in JSON mode."""

    def __init__(self, as_json: bool):
        self.as_json = as_json
        self.report: dict[str, Any] = {}

    def line(self, text: str) -> None:
        if not self.as_json:
            print(text)

    def put(self, **fields) -> None:
        self.report.update(fields)

    def finish(self, code: int) -> int:
        if self.as_json:
            self.report.setdefault("exit_code", code)
            print(json.dumps(self.report, indent=2, sort_keys=True))
        return code


# ---------------------------------------------------------------------------
# commands

def cmd_verify(args, out: _Out) -> int:
    _, theta = _load_kind(args.path, "supermap")
    tol = args.tol
    lam = float(hermitian_eigh(theta.data)[0][0])
    cpp = is_cpp(theta)
    out.put(check=args.check, dims=list(theta.dims), tol=tol, cpp=cpp, min_eigenvalue=lam)
    if args.check == "cpp":
        out.line(f"min eigenvalue of Choi matrix: {lam:.9g}")
        out.line(f"CPP: {'holds' if cpp else 'fails'}")
        return out.finish(EXIT_OK if cpp else EXIT_FAIL)

    if args.check == "superchannel":
        rep = is_superchannel(theta, tol=tol)
        out.put(holds=rep.holds, psd_residual=rep.psd_residual,
                marginal_residual=rep.marginal_residual, a1b0_residual=rep.a1b0_residual)
        out.line(f"PSD residual:            {rep.psd_residual:.3e}")
        out.line(f"AB0 marginal residual:   {rep.marginal_residual:.3e}")
        out.line(f"A1B0 marginal residual:  {rep.a1b0_residual:.3e}")
        out.line(f"superchannel: {'holds' if rep.holds else 'fails'}")
        return out.finish(EXIT_OK if rep.holds else EXIT_FAIL)

    if not cpp:
        out.put(holds=False, reason="not CPP")
        out.line(f"not CPP (min eigenvalue {lam:.3e}); {args.check} fails")
        return out.finish(EXIT_FAIL)

    val = complete_cptni_value(theta, tol=args.sdp_tol)
    out.put(alpha=val.alpha, beta=val.beta, duality_gap=val.gap, witness=_matrix_json(val.witness.data))
    out.line(f"complete CPTNI value alpha = {val.alpha:.9f} (dual {val.beta:.9f})")
    if args.check == "complete":
        holds = val.alpha <= 1 + tol
        out.put(holds=holds)
        out.line(f"completely CPTNI-preserving: {'holds' if holds else 'fails'}")
        return out.finish(EXIT_OK if holds else EXIT_FAIL)

    # cptni: alpha <= 1 settles it; otherwise the seesaw search decides
    if val.alpha <= 1 + tol:
        out.put(holds=True, evidence="alpha <= 1 implies CPTNI preservation")
        out.line("CPTNI-preserving: holds (implied by alpha <= 1)")
        return out.finish(EXIT_OK)
    see = cptni_seesaw_value(theta, restarts=args.restarts, seed=args.seed)
    holds = see.value <= 1 + tol
    out.put(holds=holds, seesaw_value=see.value,
            witness_channel=_matrix_json(see.channel.data), witness_state=_matrix_json(see.state.data),
            evidence=("no product witness above 1 found (search, not proof)" if holds
                      else "explicit product witness above 1"))
    out.line(f"best product pairing (seesaw, {see.restarts} restarts) = {see.value:.9f}")
    out.line(f"CPTNI-preserving: {'holds (no violation found)' if holds else 'fails'}")
    return out.finish(EXIT_OK if holds else EXIT_FAIL)


def cmd_complete(args, out: _Out) -> int:
    _, theta = _load_kind(args.path, "supermap")
    try:
        prime = complete_to_superchannel(theta, tol=args.tol, sdp_tol=args.sdp_tol)
    except NotCompletelyCPTNIError as exc:
        out.put(alpha=exc.alpha, error=str(exc))
        out.line(f"no completion: alpha = {exc.alpha:.9f} > 1")
        return out.finish(EXIT_FAIL)
    io.store(args.out, prime, meta={"completes": str(args.path)})
    total = is_superchannel(theta + prime, tol=args.tol)
    lam = float(hermitian_eigh(prime.data)[0][0])
    alpha_p = complete_cptni_value(prime, tol=args.sdp_tol).alpha
    out.put(out=str(args.out), completion_min_eigenvalue=lam, completion_alpha=alpha_p,
            sum_psd_residual=total.psd_residual, sum_marginal_residual=total.marginal_residual,
            sum_a1b0_residual=total.a1b0_residual, completion_norm=float(np.linalg.norm(prime.data)))
    out.line(f"wrote {args.out}")
    out.line(f"completion min eigenvalue:        {lam:.3e}")
    out.line(f"completion alpha:                 {alpha_p:.9f}")
    out.line(f"sum superchannel residuals:       psd {total.psd_residual:.3e}, "
             f"AB0 {total.marginal_residual:.3e}, A1B0 {total.a1b0_residual:.3e}")
    ok = total.holds and alpha_p <= 1 + args.tol and lam >= -args.tol
    return out.finish(EXIT_OK if ok else EXIT_NUMERIC)


def cmd_decompose(args, out: _Out) -> int:
    branches = [_load_kind(p, "supermap")[1] for p in args.paths]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if len(branches) == 1:
        comb = decompose_superchannel(branches[0], tol=args.tol)
    else:
        comb = decompose_super_instrument(build_instrument(branches, tol=args.tol), tol=args.tol)
    residuals = [float(np.linalg.norm(recompose(comb, x).data - b.data)) for x, b in enumerate(branches)]
    io.store(out_dir / "pre.json", comb.pre, meta={"e0_dim": comb.e0_dim, "role": "pre"})
    names = []
    for x, post in enumerate(comb.posts):
        name = f"post_{x}.json"
        io.store(out_dir / name, post, meta={"e0_dim": comb.e0_dim, "role": "post", "branch": x})
        names.append(name)
    manifest = {"dims": list(comb.dims), "e0_dim": comb.e0_dim, "pre": "pre.json", "posts": names,
                "roundtrip_residuals": residuals}
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    out.put(**manifest)
    out.line(f"memory dimension e0 = {comb.e0_dim}")
    for x, r in enumerate(residuals):
        out.line(f"roundtrip residual branch {x}: {r:.3e}")
    ok = max(residuals) <= 1e-6
    return out.finish(EXIT_OK if ok else EXIT_NUMERIC)


def cmd_recompose(args, out: _Out) -> int:
    pre_cf, pre = _load_kind(args.pre, "map")
    posts = [_load_kind(p, "map")[1] for p in args.posts]
    e0 = args.e0 if args.e0 is not None else pre_cf.meta.get("e0_dim")
    if e0 is None:
        raise ParseError("memory dimension unknown: pass --e0 or store e0_dim in the pre file's meta")
    comb = CombRealization(pre, tuple(posts), int(e0))
    theta = recompose(comb, args.branch)
    io.store(args.out, theta, meta={"branch": args.branch})
    rep = is_superchannel(theta, tol=args.tol)
    out.put(out=str(args.out), dims=list(theta.dims), superchannel=rep.holds)
    out.line(f"wrote {args.out} (dims {theta.dims}, superchannel: {rep.holds})")
    return out.finish(EXIT_OK)


def cmd_apply(args, out: _Out) -> int:
    _, theta = _load_kind(args.supermap, "supermap")
    _, chan = _load_kind(args.channel, "map")
    _, rho = _load_kind(args.state, "state")
    result = apply_supermap(theta, chan)
    state = apply_map(result, rho)
    prob = pairing(theta, chan, rho)
    if args.out:
        io.store(args.out, result)
    out.put(trace=prob, output_state=_matrix_json(state.data), output_map_cp=classify_map(result).cp)
    out.line(f"Tr[Theta[N](rho)] = {prob:.12g}")
    out.line("output state:")
    with np.printoptions(precision=6, suppress=True):
        out.line(str(state.data))
    return out.finish(EXIT_OK)


def cmd_demo(args, out: _Out) -> int:
    theta = counterexample_supermap()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    io.store(out_dir / "counterexample.json", theta, meta={"name": "counterexample"})
    see = cptni_seesaw_value(theta, restarts=args.restarts, seed=args.seed)
    val = complete_cptni_value(theta, tol=args.sdp_tol)
    rep = is_superchannel(theta)
    out.put(seesaw=see.value, sdp=val.alpha, dual=val.beta, witness=_matrix_json(val.witness.data),
            file=str(out_dir / "counterexample.json"))
    out.line(f"wrote {out_dir / 'counterexample.json'}: J = I (x) singlet (x) I/2 on qubits")
    out.line(f"CPP: {is_cpp(theta)}; superchannel: {rep.holds}")
    out.line(f"best product pairing over channels and states ({see.restarts} restarts): {see.value:.6f}")
    out.line(f"SDP value over all admissible M: {val.alpha:.6f} (dual {val.beta:.6f})")
    with np.printoptions(precision=4, suppress=True):
        out.line("optimal M:")
        out.line(str(val.witness.data.real))
    out.line(f"seesaw ≤ {see.value:.6f}, sdp = {val.alpha:.6f}")
    return out.finish(EXIT_OK)


# ---------------------------------------------------------------------------

def build_parser(default_tol: float) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=default_tol,
                        help=f"verdict tolerance (default {default_tol:g}; env {ENV_TOL})")
    common.add_argument("--sdp-tol", type=float, default=DEFAULT_TOL, help="SDP solver tolerance")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized searches")
    common.add_argument("--restarts", type=int, default=32, help="seesaw restarts")
    common.add_argument("--json", action="store_true", help="print a JSON report")

    p = argparse.ArgumentParser(prog="qsupermaps", description="Verify, complete and decompose supermaps.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="check a property of a supermap")
    v.add_argument("path")
    v.add_argument("--check", choices=["cpp", "cptni", "complete", "superchannel"], required=True)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("complete", parents=[common], help="complete a supermap to a superchannel")
    c.add_argument("path")
    c.add_argument("-o", "--out", required=True)
    c.set_defaults(func=cmd_complete)

    d = sub.add_parser("decompose", parents=[common],
                       help="realize a superchannel (or instrument branches) as pre/post processing")
    d.add_argument("paths", nargs="+", help="one superchannel, or all branches of an instrument")
    d.add_argument("-o", "--out-dir", required=True)
    d.set_defaults(func=cmd_decompose)

    r = sub.add_parser("recompose", parents=[common], help="supermap Choi matrix from pre/post maps")
    r.add_argument("--pre", required=True)
    r.add_argument("--post", dest="posts", nargs="+", required=True)
    r.add_argument("--branch", type=int, default=0)
    r.add_argument("--e0", type=int, default=None, help="memory dimension (default: pre file meta)")
    r.add_argument("-o", "--out", required=True)
    r.set_defaults(func=cmd_recompose)

    a = sub.add_parser("apply", parents=[common], help="apply a supermap to a channel and a state")
    a.add_argument("supermap")
    a.add_argument("channel")
    a.add_argument("state")
    a.add_argument("-o", "--out", default=None, help="write the output map")
    a.set_defaults(func=cmd_apply)

    m = sub.add_parser("demo", parents=[common], help="counterexample walkthrough")
    m.add_argument("-o", "--out-dir", default=".")
    m.set_defaults(func=cmd_demo)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        default_tol = _default_tol()
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    parser = build_parser(default_tol)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    out = _Out(args.json)
    try:
        return args.func(args, out)
    except (ParseError, DimensionMismatchError, ShapeMismatchError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalFailureError, SolverFailureError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SupermapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
