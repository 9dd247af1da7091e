"""Command-line harness: build a pencil, solve, write a JSON report.

Exit status is 0 on convergence, 2 when the restart budget runs out and 1
on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

import numpy as np

from .mmio import MatrixMarketError, read_matrix_market, write_vectors
from .pencil import (
    NotPositiveDefiniteError,
    SparsePencil,
    gen_kron_sum_pencil,
    gen_skew_tridiag,
    gen_toeplitz_spd,
    split_pencil,
)
from .solver import SolverConfig, solve

__all__ = ["run_cli", "build_parser", "main"]

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="skewpencil",
        description="Extreme conjugate eigenpairs of a skew-symmetric/SPD pencil (A, B).",
    )
    src = p.add_argument_group("pencil source")
    src.add_argument("--matrix-a", metavar="PATH", help="skew-symmetric A (Matrix Market)")
    src.add_argument("--matrix-b", metavar="PATH", help="SPD B (Matrix Market)")
    src.add_argument("--gen", choices=["toeplitz", "kron", "split"], help="build a test pencil")
    src.add_argument("--n", type=int, help="toeplitz: dimension")
    src.add_argument("--upsilon", type=float, default=1.0, help="toeplitz: skew off-diagonal value")
    src.add_argument("--rho", type=float, help="toeplitz/kron: diagonal of B")
    src.add_argument("--delta", type=float, help="toeplitz/kron: off-diagonal of B")
    src.add_argument("--j", type=int, help="kron: size of each factor (n = j**3)")
    src.add_argument("--upsilons", help="kron: three comma-separated skew values")
    src.add_argument("--matrix-c", metavar="PATH", help="split: C = A + B (Matrix Market)")

    s = p.add_argument_group("solver")
    s.add_argument("--k", type=int, required=True, help="number of conjugate pairs")
    s.add_argument("--m", type=int, default=30, help="maximum subspace dimension")
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--which", choices=["largest", "smallest"], default="largest")
    s.add_argument("--max-restarts", type=int, default=2000)
    s.add_argument("--reorth", choices=["partial", "full", "none"], default="partial")
    s.add_argument("--ml", type=int, default=30, help="Lanczos steps for norm estimation")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--q1", metavar="PATH", help="start vector (Matrix Market array or text)")

    o = p.add_argument_group("output")
    o.add_argument("--out", metavar="PATH", help="JSON report path (default: stdout)")
    o.add_argument("--vectors", metavar="PATH", help="write [u1, v1, u2, v2, ...] as a Matrix Market array")
    o.add_argument("--verbose", action="store_true")
    return p


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"--gen {args.gen} requires {', '.join(missing)}")


def _build_pencil(args) -> SparsePencil:
    files = args.matrix_a is not None or args.matrix_b is not None
    if files and args.gen:
        raise UsageError("--matrix-a/--matrix-b and --gen are mutually exclusive")
    if files:
        if args.matrix_a is None or args.matrix_b is None:
            raise UsageError("--matrix-a and --matrix-b must be given together")
        return SparsePencil(read_matrix_market(args.matrix_a), read_matrix_market(args.matrix_b))
    if args.gen == "toeplitz":
        _need(args, "n", "rho", "delta")
        return SparsePencil(
            gen_skew_tridiag(args.n, args.upsilon), gen_toeplitz_spd(args.n, args.rho, args.delta)
        )
    if args.gen == "kron":
        _need(args, "j", "rho", "delta", "upsilons")
        try:
            ups = [float(x) for x in args.upsilons.split(",")]
        except ValueError:
            raise UsageError(f"--upsilons must be three numbers, got {args.upsilons!r}") from None
        if len(ups) != 3:
            raise UsageError(f"--upsilons must be three numbers, got {args.upsilons!r}")
        return gen_kron_sum_pencil(args.j, ups, args.rho, args.delta)
    if args.gen == "split":
        _need(args, "matrix_c")
        return split_pencil(read_matrix_market(args.matrix_c))
    raise UsageError("give either --matrix-a and --matrix-b, or --gen")


def _read_q1(path, n):
    try:
        q1 = read_matrix_market(path).toarray().ravel()
    except MatrixMarketError:
        q1 = np.loadtxt(path, dtype=float).ravel()
    if q1.shape != (n,):
        raise UsageError(f"--q1 has {q1.size} entries, pencil dimension is {n}")
    return q1


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line; returns the process exit status."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        pencil = _build_pencil(args)
        config = SolverConfig(
            k=args.k,
            m=args.m,
            tol=args.tol,
            i_max=args.max_restarts,
            which=args.which,
            q1=_read_q1(args.q1, pencil.n) if args.q1 else None,
            reorth_policy=args.reorth,
            m_l=args.ml,
            seed=args.seed,
        )
        config.validate(pencil.n)
    except (UsageError, ValueError, OSError) as exc:
        kind = "input error" if isinstance(exc, (OSError, MatrixMarketError, NotPositiveDefiniteError)) else "usage error"
        print(f"{kind}: {exc}", file=sys.stderr)
        return EXIT_USAGE

    report = solve(pencil, config)
    try:
        if args.vectors:
            write_vectors(args.vectors, report.vectors(), comment="columns: u1 v1 u2 v2 ...")
        text = json.dumps(report.to_dict(vectors_file=args.vectors), indent=2)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def main():
    sys.exit(run_cli())
