"""``noff`` command line front end.

Every subcommand prints a JSON report on stdout; ``--out`` additionally
writes the primary result document.  Exit status is 0 on success, 1 on a
domain error (the error class name goes to stderr) and 2 on usage or input
format errors.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np

from . import correlation, frames, random_frames, synthesis
from .errors import NoffError
from .io import (
    DocumentError,
    dumps,
    family_document,
    frame_document,
    load_document,
    matrix_document,
    parse_family,
    parse_frame,
    parse_generators,
    parse_operator,
    parse_projection,
    parse_sampler,
)
from .frames import WeightedProjectionFrame
from .spectral import Tolerance

MODES = ("single", "high-rank", "weighted", "two", "two-weighted", "three", "indefinite")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")

    def exit(self, status=0, message=None):
        if message:
            self._print_message(message, sys.stderr)
        raise SystemExit(status)


def _tolerance(args) -> Tolerance:
    base = Tolerance.from_env()
    return Tolerance(
        rank_rel=args.tol_rank if getattr(args, "tol_rank", None) is not None else base.rank_rel,
        residual_rel=args.tol_residual if getattr(args, "tol_residual", None) is not None else base.residual_rel,
    )


def _write(path: str | None, doc) -> None:
    if path:
        Path(path).write_text(dumps(doc), encoding="utf-8")


def _projection_doc(p) -> dict:
    return matrix_document(p.matrix, "projection")


def _residual(recon, t) -> float:
    return float(np.linalg.norm(np.asarray(recon) - np.asarray(t)))


# -- subcommands --------------------------------------------------------------

def cmd_synthesize(args, tol):
    t = parse_operator(load_document(args.input))
    mode = args.mode
    if mode in ("single", "high-rank"):
        fn = synthesis.synthesize_projection if mode == "single" else synthesis.synthesize_single_high_rank
        p = fn(t, tol)
        _write(args.out, _projection_doc(p))
        return {"mode": mode, "rank": p.rank, "residual": _residual(p.gram, t)}
    if mode == "weighted":
        v, p = synthesis.synthesize_weighted(t, tol)
        frame = WeightedProjectionFrame(t.dim, ((v, p),))
    elif mode == "two":
        frame = WeightedProjectionFrame.unweighted(t.dim, synthesis.synthesize_two_projections(t, tol))
    elif mode == "two-weighted":
        v, p1, p2 = synthesis.synthesize_two_weighted(t, tol)
        frame = WeightedProjectionFrame(t.dim, ((v, p1), (v, p2)))
    elif mode == "three":
        frame = WeightedProjectionFrame.unweighted(t.dim, synthesis.synthesize_three_projections(t, tol))
    else:
        d = synthesis.decompose_indefinite(t, tol)
        _write(args.out, {
            "n": t.dim,
            "positive": {"weight": d.v1, "items": [_projection_doc(d.p1), _projection_doc(d.p2)]},
            "negative": {"weight": d.v2, "items": [_projection_doc(d.p3), _projection_doc(d.p4)]},
        })
        return {"mode": mode, "v1": d.v1, "v2": d.v2, "residual": _residual(d.reconstruct(), t)}
    _write(args.out, frame_document(frame))
    return {
        "mode": mode,
        "weights": frame.weights,
        "ranks": [p.rank for p in frame.projections],
        "residual": _residual(frames.frame_operator(frame).entries, t),
    }


def cmd_omega_sample(args, tol):
    t = parse_operator(load_document(args.input))
    members = [synthesis.sample_omega_member(t, args.seed + i, tol) for i in range(args.count)]
    docs = [_projection_doc(p) for p in members]
    _write(args.out, docs[0] if args.count == 1 else {"n": t.dim, "items": docs})
    return {
        "seed": args.seed,
        "count": args.count,
        "members": [synthesis.omega_membership(p, t, tol) for p in members],
    }


def cmd_feasibility(args, tol):
    r = synthesis.feasibility_high_rank(parse_operator(load_document(args.input)), tol)
    greater, unit, zero = r.counts
    return {"feasible": r.feasible, "reason": r.reason.value,
            "greater_than_one": greater, "equal_one": unit, "zero": zero, "below_one": r.below_one}


def cmd_split_unit(args, tol):
    p = parse_projection(load_document(args.input), tol)
    p_prime, pi = synthesis.split_unit_eigenspace(p, tol)
    _write(args.out, {"p_prime": _projection_doc(p_prime), "pi_unit": _projection_doc(pi)})
    return {"rank_p_prime": p_prime.rank, "rank_pi_unit": pi.rank,
            "recompose_residual": _residual(p_prime.matrix + pi.matrix, p.matrix)}


def _tight_output(args, result, tol):
    _write(args.out, frame_document(result.frame))
    rep = frames.frame_bounds(result.frame, tol)
    return {"lambda": result.bound, "count": len(result.frame),
            "ranks": [p.rank for p in result.frame.projections],
            "tightness_ratio": rep.tightness_ratio, "tight": rep.is_tight}


def cmd_tight_ranks(args, tol):
    ranks = [int(r) for r in args.ranks.split(",") if r.strip()]
    return _tight_output(args, frames.construct_tight_with_ranks(args.n, ranks, tol), tol)


def cmd_complete(args, tol):
    frame = parse_frame(load_document(args.frame), tol)
    if args.low_rank is None:
        result = frames.complete_to_tight(frame, tol)
    else:
        result = frames.complete_to_tight_low_rank(frame, args.low_rank, tol)
    out = _tight_output(args, result, tol)
    out["added"] = len(result.frame) - len(frame)
    return out


def cmd_classify_pair(args, tol):
    if args.frame:
        frame = parse_frame(load_document(args.frame), tol)
        if len(frame) != 2:
            raise DocumentError("classify-pair expects a frame with exactly two items")
        p1, p2 = frame.projections
    elif args.first and args.second:
        p1 = parse_projection(load_document(args.first), tol)
        p2 = parse_projection(load_document(args.second), tol)
    else:
        raise _UsageError("classify-pair needs --frame or both --first and --second")
    c = frames.classify_two_projection_tight(p1, p2, tol)
    return {"case": c.case_tag.value, "lambda": c.lam, "ranks": list(c.ranks), "shared_core_dim": c.shared_core_dim}


def cmd_verify(args, tol):
    rep = frames.frame_bounds(parse_frame(load_document(args.frame), tol), tol)
    return {"A": rep.lower, "B": rep.upper, "is_frame": rep.is_frame, "tight": rep.is_tight,
            "tightness_ratio": rep.tightness_ratio, "operator": rep.operator.entries}


def cmd_povm(args, tol):
    if args.frame:
        family = correlation.povm_from_frame(parse_frame(load_document(args.frame), tol), tol)
    elif args.family:
        family = parse_family(load_document(args.family), tol)
    else:
        raise _UsageError("povm needs --frame or --family")
    family = correlation.scale_trace(family)
    _write(args.out, family_document(family))
    out = {"m": len(family), "n": family.dim,
           "count_bound_real": correlation.equiangular_count_bound(family.dim, "real"),
           "linearly_independent": correlation.linear_independence_check(family, tol)}
    if len(family) >= 2:
        s = correlation.simplex_bound(family, tol)
        _, pair = correlation.max_correlation(family)
        _, common = correlation.equiangularity_check(family, tol)
        out.update({"max_corr": s.max_corr, "argpair": list(pair), "bound": s.bound, "equality": s.equality,
                    "equiangular": s.equiangular, "common_value": common,
                    "resolves_identity": s.resolves_identity})
    return out


def cmd_count_bound(args, tol):
    return {"n": args.n, "field": args.field, "bound": correlation.equiangular_count_bound(args.n, args.field)}


def cmd_random(args, tol):
    doc = load_document(args.config)
    specs = doc["samplers"] if isinstance(doc, dict) and "samplers" in doc else [doc]
    samplers = [parse_sampler(s, [args.seed, i], tol) for i, s in enumerate(specs)]
    if args.action == "variance":
        r = random_frames.variance_experiment(samplers, args.trials, seed=args.seed,
                                              estimate_samples=args.samples, tol=tol)
        return {"action": "variance", "m": len(samplers), "trials": args.trials, "empirical": r.empirical,
                "predicted": r.predicted, "stderr": r.stderr, "bounds": list(r.bounds)}
    if len(samplers) != 1:
        raise DocumentError(f"action {args.action!r} takes a single sampler")
    s = samplers[0]
    if args.action == "estimate":
        rep = random_frames.exact_or_estimated_frame_operator(s, args.samples, tol)
        out = {"action": "estimate", "exact": rep.exact, "A": rep.lower, "B": rep.upper, "tight": rep.tight,
               "samples_used": rep.samples_used, "standard_error": rep.standard_error,
               "mean_operator": rep.mean_operator.entries}
        if rep.tight:
            ident = random_frames.tight_bound_trace_identity(rep)
            out["trace_identity"] = {"lhs": ident.lhs, "rhs": ident.rhs, "holds": ident.holds}
        return out
    p = random_frames.random_potential(s, args.samples, tol)
    return {"action": "potential", "R": p.potential, "M": p.mean_hs, "bound": p.bound, "equality": p.equality,
            "mean_rank": p.mean_rank, "rank_bound": p.rank_bound, "rank_equality": p.rank_equality,
            "orthogonal_ae": p.orthogonal_ae, "standard_error": p.standard_error}


def cmd_group_orbit(args, tol):
    p = parse_projection(load_document(args.projection), tol)
    group = random_frames.FiniteGroup.generated_by(parse_generators(load_document(args.generators)))
    frame, rep = random_frames.group_orbit_tighten(p, group, tol)
    _write(args.out, frame_document(frame))
    return {"group_order": len(group), "tight": rep.tight, "A": rep.lower, "B": rep.upper,
            "mean_operator": rep.mean_operator.entries,
            "max_commutator": group.max_commutator(rep.mean_operator.entries),
            "warnings": list(rep.warnings)}


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol-rank", type=float, default=argparse.SUPPRESS, help="relative rank threshold")
    common.add_argument("--tol-residual", type=float, default=argparse.SUPPRESS, help="relative residual tolerance")

    parser = _Parser(prog="noff", description="Oblique projections and tight nonorthogonal fusion frames.",
                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, parents=[common])
        p.set_defaults(func=func)
        return p

    p = add("synthesize", cmd_synthesize, "factor T as P^T P (or sums of such)")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=MODES, default="single")
    p.add_argument("--out")

    p = add("omega-sample", cmd_omega_sample, "random members of Omega(T)")
    p.add_argument("--input", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out")

    p = add("feasibility", cmd_feasibility, "can T be written as P^T P?")
    p.add_argument("--input", required=True)

    p = add("split-unit", cmd_split_unit, "split P into P' + orthogonal projection onto W cap W*")
    p.add_argument("--input", required=True)
    p.add_argument("--out")

    p = add("tight-ranks", cmd_tight_ranks, "tight frame with prescribed ranks")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--ranks", required=True, help="comma separated ranks")
    p.add_argument("--out")

    p = add("complete", cmd_complete, "complete a frame to a tight one")
    p.add_argument("--frame", required=True)
    p.add_argument("--low-rank", type=int, help="use ceil(n/k) projections of rank <= k")
    p.add_argument("--out")

    p = add("classify-pair", cmd_classify_pair, "classify a pair of projections")
    p.add_argument("--frame")
    p.add_argument("--first")
    p.add_argument("--second")

    p = add("verify", cmd_verify, "frame bounds of a weighted frame")
    p.add_argument("--frame", required=True)

    p = add("povm", cmd_povm, "normalize and report simplex / equiangular statistics")
    p.add_argument("--frame")
    p.add_argument("--family")
    p.add_argument("--out")

    p = add("count-bound", cmd_count_bound, "maximal size of an equiangular POVM")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--field", choices=("real", "complex"), default="real")

    p = add("random", cmd_random, "random frame estimation, potential and variance experiments")
    p.add_argument("--config", required=True)
    p.add_argument("--action", choices=("estimate", "potential", "variance"), default="estimate")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, required=True)

    p = add("group-orbit", cmd_group_orbit, "tighten a projection by averaging over a finite group")
    p.add_argument("--projection", required=True)
    p.add_argument("--generators", required=True)
    p.add_argument("--out")
    return parser


def run(argv: Sequence[str] | None = None, stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
        tol = _tolerance(args)
        report = args.func(args, tol)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except _UsageError as exc:
        print(str(exc), file=stderr)
        return 2
    except (DocumentError, ValueError) as exc:
        if isinstance(exc, NoffError):
            print(f"error: {type(exc).__name__}: {exc}", file=stderr)
            return 1
        print(f"error: DocumentError: {exc}", file=stderr)
        return 2
    except NoffError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=stderr)
        return 1
    stdout.write(dumps(report))
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
