"""
Command-line interface argument parsing for smoothcheck.

Handles all CLI argument definitions and parsing.
"""

import argparse
import json
import sys
from typing import List, Optional

from .mesh import KIND_DIMENSION
from .smoothness import SAMPLE_RULES

COMMANDS = ("check-mesh", "indicator", "cp-table", "verify-lemmas", "lower-bound", "study")
NORM_CHOICES = ["1", "2", "inf"]
DEFAULT_KIND = {1: "interval", 2: "triangle", 3: "tetrahedron"}


class SmoothCheckArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that exits with status 1 on usage errors."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _json_object(text: str) -> dict:
    try:
        value = json.loads(text)
    except json.JSONDecodeError as e:
        raise argparse.ArgumentTypeError(f"invalid JSON: {e}") from e
    if not isinstance(value, dict):
        raise argparse.ArgumentTypeError("expected a JSON object")
    return value


def _non_negative_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _add_common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        default=argparse.SUPPRESS,
        help="Path to a JSON or YAML config file (default: built-in defaults)",
    )
    parser.add_argument(
        "--threads",
        dest="threads",
        type=_positive_int,
        default=argparse.SUPPRESS,
        help="Worker threads for studies and per-interface work (default: 1)",
    )
    parser.add_argument(
        "--seed",
        dest="seed",
        type=int,
        default=argparse.SUPPRESS,
        help="Seed for random configurations and fields (default: 0)",
    )
    parser.add_argument(
        "--log-level",
        dest="log_level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=argparse.SUPPRESS,
        help="Logging level (default: WARNING)",
    )
    parser.add_argument(
        "--gamma",
        dest="gamma",
        type=float,
        default=argparse.SUPPRESS,
        help="Angle-ratio constant of the 3D safe radius formula (default: 1.0)",
    )


def _add_target_options(parser: argparse.ArgumentParser, required: bool) -> None:
    parser.add_argument(
        "--target",
        required=required,
        default=None,
        help="Target function name, e.g. sin_pi_x, step, abs_kink, poly",
    )
    parser.add_argument(
        "--target-params",
        dest="target_params",
        type=_json_object,
        default={},
        help='Target parameters as a JSON object, e.g. \'{"location": 0.6}\'',
    )


def _add_smoothness_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--sample-rule",
        dest="sample_rule",
        choices=[r for r in SAMPLE_RULES if r != "points"],
        default=argparse.SUPPRESS,
        help="Interior sample point per element (default: centroid)",
    )
    parser.add_argument(
        "--median-factor",
        dest="median_factor",
        type=float,
        default=argparse.SUPPRESS,
        help="Flag interfaces with ||D|| above this multiple of the median (default: 10)",
    )
    parser.add_argument(
        "--jump-threshold",
        dest="jump_threshold",
        type=_non_negative_float,
        default=argparse.SUPPRESS,
        help="Absolute ||D|| threshold; replaces the median rule",
    )
    parser.add_argument(
        "--magnitude-threshold",
        dest="magnitude_threshold",
        type=_non_negative_float,
        default=argparse.SUPPRESS,
        help="Flag elements with a derivative magnitude M above this value",
    )


def create_argument_parser() -> argparse.ArgumentParser:
    """
    Create and configure the argument parser for smoothcheck.

    Returns:
        Configured ArgumentParser instance
    """
    parser = SmoothCheckArgumentParser(
        prog="smoothcheck",
        description="smoothcheck - numerical smoothness indicators and error lower bounds",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Positivity constants of the jump quadratic form
  %(prog)s cp-table --n 1 2 --p 0 1 2 --r-hat 0.25

  # Indicators of a piecewise polynomial field
  %(prog)s indicator --mesh mesh.json --field field.json --s inf

  # Refinement study with a verdict (exit 0 PASS, 2 FAIL, 3 inconclusive)
  %(prog)s study --target sin_pi_x --p 1 --levels 5 --method interpolant

  # Override settings from a config file and the environment
  SMOOTHCHECK_THREADS=4 %(prog)s --config config.json study --target step --p 0 --method l2_fit
        """,
    )
    _add_common_options(parser)
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True

    # check-mesh
    sub = subparsers.add_parser("check-mesh", help="Validate a mesh and report its quality")
    _add_common_options(sub)
    sub.add_argument("--mesh", required=True, help="Mesh JSON file")
    sub.add_argument("--output", default=None, help="Write the JSON report here (default: stdout)")

    # indicator
    sub = subparsers.add_parser("indicator", help="Type A / Type I smoothness indicators")
    _add_common_options(sub)
    sub.add_argument("--mesh", required=True, help="Mesh JSON file")
    sub.add_argument("--field", required=True, help="Field JSON file on that mesh")
    _add_target_options(sub, required=False)
    _add_smoothness_options(sub)
    sub.add_argument(
        "--s",
        dest="s",
        choices=NORM_CHOICES,
        default=None,
        help="Report only this norm in the console summary (default: all)",
    )
    sub.add_argument("--output", default=None, help="Write the JSON report here (default: stdout)")
    sub.add_argument("--csv", default=None, help="Also write one CSV row per interface here")
    sub.add_argument(
        "--fail-on-flag",
        dest="fail_on_flag",
        action="store_true",
        help="Exit with status 2 when any interface or element is flagged",
    )

    # cp-table
    sub = subparsers.add_parser("cp-table", help="Tabulate the positivity constant C_p")
    _add_common_options(sub)
    sub.add_argument("--n", dest="n", type=int, nargs="+", default=[1], choices=[1, 2, 3])
    sub.add_argument("--p", dest="p", type=int, nargs="+", default=[0, 1, 2])
    sub.add_argument(
        "--r-hat",
        dest="r_hat",
        type=float,
        nargs="+",
        default=None,
        help="Scaled radii in (0, 1) (default: qform.r_hat from the config)",
    )
    sub.add_argument("--output", default=None, help="Write the CSV here (default: stdout)")

    # verify-lemmas
    sub = subparsers.add_parser(
        "verify-lemmas", help="Check the tetrahedron angle relations on random configurations"
    )
    _add_common_options(sub)
    sub.add_argument("--samples", type=_positive_int, default=1000)
    sub.add_argument("--output", default=None, help="Write the JSON report here (default: stdout)")

    # lower-bound
    sub = subparsers.add_parser(
        "lower-bound", help="Local and global lower-bound checks for a field"
    )
    _add_common_options(sub)
    sub.add_argument("--mesh", required=True, help="Mesh JSON file")
    sub.add_argument("--field", required=True, help="Field JSON file on that mesh")
    _add_target_options(sub, required=False)
    sub.add_argument(
        "--radius",
        type=float,
        default=None,
        help="Ball radius at the interface points (default: the mesh's safe radius)",
    )
    sub.add_argument("--s", dest="s", choices=NORM_CHOICES, default="2")
    sub.add_argument("--scaling", choices=["D", "D_tilde"], default="D")
    sub.add_argument("--output", default=None, help="Write the JSON report here (default: stdout)")

    # study
    sub = subparsers.add_parser("study", help="Refinement study with a necessary-condition verdict")
    _add_common_options(sub)
    _add_target_options(sub, required=True)
    sub.add_argument("--p", dest="p", type=int, required=True)
    sub.add_argument(
        "--levels",
        dest="levels",
        type=int,
        default=argparse.SUPPRESS,
        help="Refinement levels, at least 3 (default: 5)",
    )
    sub.add_argument(
        "--divisions",
        dest="divisions",
        type=_positive_int,
        default=argparse.SUPPRESS,
        help="Cells per axis of the coarsest mesh (default: 4)",
    )
    sub.add_argument(
        "--method", choices=["interpolant", "l2_fit", "files"], default="interpolant"
    )
    sub.add_argument("--kind", choices=sorted(KIND_DIMENSION), default=None)
    sub.add_argument(
        "--dimension",
        type=int,
        choices=[1, 2, 3],
        default=None,
        help="Space dimension when --kind is omitted (simplices are used)",
    )
    sub.add_argument("--s", dest="s", choices=NORM_CHOICES, nargs="+", default=["2"])
    sub.add_argument("--field-files", dest="field_files", nargs="+", default=[])
    sub.add_argument(
        "--corrupt-amplitude",
        dest="corrupt_amplitude",
        type=float,
        default=0.0,
        help="Add this constant to one element per level",
    )
    sub.add_argument(
        "--sample-rule",
        dest="sample_rule",
        choices=[r for r in SAMPLE_RULES if r != "points"],
        default=argparse.SUPPRESS,
    )
    sub.add_argument("--output-dir", dest="output_dir", default=".")

    return parser


def resolve_kind(args: argparse.Namespace) -> str:
    """Element kind of a study from --kind, else the simplex of --dimension."""
    if getattr(args, "kind", None):
        if args.dimension is not None and KIND_DIMENSION[args.kind] != args.dimension:
            raise ValueError(
                f"--kind {args.kind} does not match --dimension {args.dimension}"
            )
        return args.kind
    return DEFAULT_KIND[args.dimension or 1]


def parse_arguments(args: Optional[List[str]] = None) -> argparse.Namespace:
    """
    Parse command-line arguments.

    Args:
        args: Optional list of arguments to parse. If None, uses sys.argv.

    Returns:
        Parsed arguments namespace

    Example:
        >>> args = parse_arguments(['cp-table', '--n', '1', '--p', '0'])
        >>> args.n, args.p
        ([1], [0])
    """
    parser = create_argument_parser()
    return parser.parse_args(args)
