"""
File-level entry points and the command-line interface.

Every subcommand reads its inputs from files (matrices as CSV, vectors one value per line,
configurations as JSON), runs one toolkit operation and prints key-sorted JSON, or CSV
for the campaign records. Errors of the toolkit are reported as `Error: <message>` on
stderr and mapped to exit codes: 2 for domain errors, 3 for budget refusals, 4 for
numerical failures.
"""

import argparse
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from .data_files import PathLike, read_matrix, read_vector
from .errors import DomainError, LqRecoveryError, NumericalFailure
from .guarantee import GuaranteeCertificate, certify, error_bound
from .harness import AuditReport, PhaseResult, run_bound_audit, run_phase
from .options import ExperimentConfig, NoiseModel, RicMode, SolverOptions, load_json_object
from .polytope import check_decomposition, decompose
from .ric import RicEstimate, RicOracle, exact_ric, mc_ric_lower
from .solver import SolverResult, irls_lq, irls_lq_denoise

JSON_INDENT = 2


def ric_from_file(
    matrix_file: PathLike,
    order: int,
    trials: Optional[int] = None,
    seed: int = 0,
    threads: int = 1,
) -> RicEstimate:
    """
    delta_order of the matrix stored in `matrix_file`.

    Args:
        matrix_file (PathLike): CSV matrix.
        order (int): The RIC order.
        trials (Optional[int], optional): Sampled supports; None asks for the exact value.
        seed (int, optional): Seed of the sampled supports. Defaults to 0.
        threads (int, optional): Worker threads. Defaults to 1.

    Returns:
        RicEstimate: Exact, or a lower bound when `trials` is given.
    """
    A = read_matrix(matrix_file)
    if trials is None:
        return exact_ric(A, order, threads=threads)
    return mc_ric_lower(A, order, trials, seed, threads=threads)


def certify_from_file(
    matrix_file: PathLike,
    k: int,
    q: float,
    max_order: Optional[int] = None,
    trials: Optional[int] = None,
    seed: int = 0,
    threads: int = 1,
) -> GuaranteeCertificate:
    A = read_matrix(matrix_file)
    if trials is None:
        oracle = RicOracle(A, mode=RicMode.EXACT, threads=threads)
    else:
        oracle = RicOracle(A, mode=RicMode.LOWER_BOUND, trials=trials, seed=seed, threads=threads)
    return certify(oracle, k, q, max_order or min(A.shape[1], 4 * k))


def recover_from_files(
    matrix_file: PathLike,
    measurements_file: PathLike,
    q: float,
    eta: Optional[float] = None,
    opts_file: Optional[PathLike] = None,
    seed: Optional[int] = None,
) -> SolverResult:
    """
    Solve the l_q program for the system stored in two files.

    Args:
        matrix_file (PathLike): CSV matrix A.
        measurements_file (PathLike): The measurements y, one per line.
        q (float): Exponent in (0, 1].
        eta (Optional[float], optional): Noise radius; None or 0 solves Ax = y exactly.
        opts_file (Optional[PathLike], optional): JSON file with SolverOptions fields.
        seed (Optional[int], optional): Overrides the jitter seed of the options.

    Returns:
        SolverResult: The solver output.
    """
    A = read_matrix(matrix_file)
    y = read_vector(measurements_file)
    opts = SolverOptions.from_file(str(opts_file)) if opts_file else SolverOptions()
    if seed is not None:
        opts = SolverOptions.from_dict({**opts.to_dict(), "seed": seed})
    if eta:
        return irls_lq_denoise(A, y, q, eta, opts)
    return irls_lq(A, y, q, opts)


def decompose_from_file(vector_file: PathLike, alpha: float, t: int) -> Dict[str, Any]:
    decomposition = decompose(read_vector(vector_file), alpha, t)
    return {
        "lambdas": decomposition.lambdas,
        "terms": [u.tolist() for _, u in decomposition.terms],
        "checks": check_decomposition(decomposition),
    }


def _dump_json(data: Any) -> str:
    return json.dumps(data, indent=JSON_INDENT, sort_keys=True)


def _campaign_output(result: Any, output_format: str) -> str:
    if output_format == "csv":
        return result.to_csv()
    return result.to_json()


def _load_config(filename: str, seed: Optional[int]) -> ExperimentConfig:
    data = load_json_object(filename)
    if seed is not None:
        data["master_seed"] = seed
    return ExperimentConfig.from_dict(data)


def _run_command(args: argparse.Namespace) -> str:
    if args.format == "csv" and args.command not in ("phase", "audit"):
        raise DomainError("--format csv is only available for phase and audit")
    seed = 0 if args.seed is None else args.seed

    if args.command == "ric":
        return _dump_json(
            ric_from_file(args.matrix, args.order, args.mc, seed, args.threads).to_dict()
        )
    if args.command == "certify":
        certificate = certify_from_file(
            args.matrix, args.k, args.q, args.max_order, args.mc, seed, args.threads
        )
        return _dump_json(certificate.to_dict())
    if args.command == "bound":
        report = error_bound(
            NoiseModel.L2_BALL if args.model == "l2" else NoiseModel.DANTZIG,
            args.delta,
            args.s,
            args.q,
            args.eps,
            args.eta,
            args.sigma,
            args.tail,
            k=args.k,
        )
        return _dump_json(report.to_dict())
    if args.command == "recover":
        result = recover_from_files(
            args.matrix, args.measurements, args.q, args.eta, args.opts, args.seed
        )
        return _dump_json(result.to_dict())
    if args.command == "decompose":
        return _dump_json(decompose_from_file(args.vector, args.alpha, args.t))
    if args.command == "phase":
        phase: PhaseResult = run_phase(_load_config(args.config, args.seed), threads=args.threads)
        return _campaign_output(phase, args.format)
    audit: AuditReport = run_bound_audit(
        _load_config(args.config, args.seed),
        max_order=args.max_order,
        dump_dir=args.dump_dir,
        threads=args.threads,
    )
    return _campaign_output(audit, args.format)


def _seed(value: str) -> int:
    seed = int(value)
    if seed < 0:
        raise argparse.ArgumentTypeError(f"seeds are non-negative integers, got {value}")
    return seed


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, help="Seed of every random draw (overrides config files)")
    common.add_argument(
        "--out",
        metavar="DIR",
        help="If specified, the output is written to DIR/<command>.<format> instead of stdout",
    )
    common.add_argument(
        "--format", choices=["csv", "json"], default="json", help="Output format (Default json)"
    )
    common.add_argument(
        "--threads", type=int, default=1, help="Worker threads, never changes the output (Default 1)"
    )
    common.add_argument("--verbose", action="store_true", help="Log diagnostics on stderr")

    parser = argparse.ArgumentParser(
        description="Restricted isometry certificates and l_q sparse recovery."
    )
    commands = parser.add_subparsers(dest="command", required=True)

    ric = commands.add_parser("ric", parents=[common], help="Restricted isometry constant of a matrix")
    ric.add_argument("--matrix", required=True, help="CSV matrix file")
    ric.add_argument("--order", type=int, required=True, help="The RIC order")
    ric_mode = ric.add_mutually_exclusive_group()
    ric_mode.add_argument("--exact", action="store_true", help="Enumerate every support (Default)")
    ric_mode.add_argument("--mc", type=int, metavar="TRIALS", help="Lower bound from TRIALS sampled supports")

    cert = commands.add_parser("certify", parents=[common], help="Check the l_q recovery condition")
    cert.add_argument("--matrix", required=True, help="CSV matrix file")
    cert.add_argument("-k", type=int, required=True, help="Sparsity level")
    cert.add_argument("-q", type=float, required=True, help="Exponent in (0, 1]")
    cert.add_argument("--max-order", type=int, help="Largest RIC order (Default min(p, 4k))")
    cert.add_argument("--mc", type=int, metavar="TRIALS", help="Use sampled lower bounds")

    bound = commands.add_parser("bound", parents=[common], help="Evaluate a stability bound")
    bound.add_argument("--model", choices=["l2", "dantzig"], required=True)
    bound.add_argument("--delta", type=float, required=True)
    bound.add_argument("--s", type=float, required=True)
    bound.add_argument("--q", type=float, required=True)
    bound.add_argument("-k", type=int, help="Sparsity level, needed by the dantzig model")
    bound.add_argument("--eps", type=float, required=True, help="Noise level")
    bound.add_argument("--eta", type=float, required=True, help="Constraint radius")
    bound.add_argument("--sigma", type=float, required=True, help="Spectral norm of A")
    bound.add_argument("--tail", type=float, required=True, help="l2 norm of the best k-term tail")

    recover = commands.add_parser("recover", parents=[common], help="Solve the l_q program")
    recover.add_argument("--matrix", required=True, help="CSV matrix file")
    recover.add_argument("--measurements", required=True, help="Measurement vector file")
    recover.add_argument("--q", type=float, required=True)
    recover.add_argument("--eta", type=float, help="Noise radius, omit for Ax = y")
    recover.add_argument("--opts", help="JSON file with solver options")

    dec = commands.add_parser("decompose", parents=[common], help="Sparse decomposition of a polytope point")
    dec.add_argument("--vector", required=True, help="Vector file")
    dec.add_argument("--alpha", type=float, required=True)
    dec.add_argument("--t", type=int, required=True)

    phase = commands.add_parser("phase", parents=[common], help="Phase-transition campaign")
    phase.add_argument("--config", required=True, help="JSON experiment configuration")

    audit = commands.add_parser("audit", parents=[common], help="Error bound audit campaign")
    audit.add_argument("--config", required=True, help="JSON experiment configuration")
    audit.add_argument("--max-order", type=int, help="Largest RIC order")
    audit.add_argument("--dump-dir", help="Where instances violating the bound are written")
    return parser


def cli(inline_args: Optional[List[str]] = None) -> int:
    """
    Command-line interface of the toolkit.

    Args:
        inline_args (Optional[List[str]]): List of command-line arguments for testing purposes. Defaults to None.

    Returns:
        int: Exit code: 0 on success, else the exit code of the toolkit error.

    Example:
        >>> cli(["bound", "--model", "l2", "--delta", "0.2", "--s", "1", "--q", "0.5",
        ...      "--eps", "0.1", "--eta", "0.1", "--sigma", "1", "--tail", "0"])
    """
    parser = _build_parser()
    if inline_args is None:  # pragma: no cover
        args = parser.parse_args()
    else:
        args = parser.parse_args(inline_args)

    if args.verbose:
        logging.basicConfig(level=logging.DEBUG, stream=sys.stderr)
    if args.threads < 1:
        print("Error: --threads must be positive", file=sys.stderr)
        return DomainError.exit_code

    try:
        output = _run_command(args)
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            target = os.path.join(args.out, f"{args.command}.{args.format}")
            with open(target, mode="w") as fd:
                fd.write(output if output.endswith("\n") else output + "\n")
        else:
            print(output, end="" if output.endswith("\n") else "\n")
    except LqRecoveryError as e:
        print(f"Error: {str(e)}", file=sys.stderr)
        return e.exit_code
    except np.linalg.LinAlgError as e:
        print(f"Error: numerical failure ({str(e)})", file=sys.stderr)
        return NumericalFailure.exit_code
    except OSError as e:
        print(f"Error: {str(e)}", file=sys.stderr)
        return 1

    return 0  # Success


if __name__ == "__main__":  # pragma: no cover
    sys.exit(cli())
