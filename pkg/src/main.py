#!/usr/bin/env python3
"""
smoothcheck - Main Entry Point

Dispatches the command-line commands and maps failures to exit codes:
0 success / PASS, 1 usage error, 2 verdict FAIL, 3 inconclusive,
4 I/O, mesh or numeric failure.
"""

import json
import logging
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent))

from smoothcheck import __version__  # noqa: E402
from smoothcheck import geometry, reports  # noqa: E402
from smoothcheck.bounds import (  # noqa: E402
    StudyConfig,
    convergence_study,
    global_lower_bound_report,
    local_lower_bound_survey,
    necessary_condition_verdict,
)
from smoothcheck.cli import parse_arguments, resolve_kind  # noqa: E402
from smoothcheck.config import CLI_OVERRIDE_PATHS, build_config  # noqa: E402
from smoothcheck.dual import build_dual_covolume, covolume_clearance  # noqa: E402
from smoothcheck.errors import (  # noqa: E402
    ConfigError,
    FieldError,
    MeshError,
    NumericError,
    RadiusFormulaError,
    StudyError,
)
from smoothcheck.mesh import load_mesh, quality_metrics, safe_disk_radius  # noqa: E402
from smoothcheck.polynomial import load_field  # noqa: E402
from smoothcheck.projection import local_l2_project_dual  # noqa: E402
from smoothcheck.qform import QFormSpec, assemble_qform, cp_table  # noqa: E402
from smoothcheck.smoothness import Thresholds, smoothness_report  # noqa: E402
from smoothcheck.targets import make_target  # noqa: E402

logger = logging.getLogger("smoothcheck")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAIL = 2
EXIT_INCONCLUSIVE = 3
EXIT_FAILURE = 4

VERDICT_EXIT = {"PASS": EXIT_OK, "FAIL": EXIT_FAIL, "INCONCLUSIVE": EXIT_INCONCLUSIVE}
CLEARANCE_FRACTION = 0.99


def configure_logging(level: str = "WARNING") -> None:
    """Send smoothcheck log records to stderr at the given level."""
    root = logging.getLogger("smoothcheck")
    root.handlers.clear()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(level)
    root.propagate = False


def banner(title: str) -> None:
    print("=" * 60)
    print(f"smoothcheck v{__version__} - {title}")
    print("=" * 60)


def _options(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "config")}


class SmoothCheckApp:
    """Runs one parsed command against a layered configuration."""

    def __init__(self, config: dict, argv=None):
        self.config = config
        self.argv = list(sys.argv[1:] if argv is None else argv)

    def run(self, args) -> int:
        handler = {
            "check-mesh": self.check_mesh,
            "indicator": self.indicator,
            "cp-table": self.cp_table,
            "verify-lemmas": self.verify_lemmas,
            "lower-bound": self.lower_bound,
            "study": self.study,
        }[args.command]
        return handler(args)

    def _info(self, args, inputs=()):
        options = _options(args)
        options["threads"] = self.config["runtime"]["threads"]
        options["seed"] = self.config["runtime"]["seed"]
        options["gamma"] = self.config["safe_radius"]["gamma"]
        return reports.provenance(args.command, self.argv, options, inputs)

    def _emit_json(self, args, data: dict, inputs=()) -> None:
        info = self._info(args, inputs)
        if args.output:
            reports.write_json(args.output, data, info)
            print(f"Report written to {args.output}")
        else:
            reports.write_json(sys.stdout, data, info)

    def _thresholds(self) -> Thresholds:
        cfg = self.config["smoothness"]
        return Thresholds(
            median_factor=cfg["median_factor"],
            jump_threshold=cfg["jump_threshold"],
            magnitude_threshold=cfg["magnitude_threshold"],
        )

    def check_mesh(self, args) -> int:
        mesh = load_mesh(args.mesh, self.config["mesh"]["tolerance_factor"])
        quality = quality_metrics(mesh, gamma=self.config["safe_radius"]["gamma"])
        data = {
            "dimension": mesh.dimension,
            "kind": mesh.kind,
            "elements": len(mesh),
            "interfaces": len(mesh.interfaces),
            "boundary_facets": mesh.boundary_facet_count,
            "quality": quality.to_dict(),
        }
        self._emit_json(args, data, [args.mesh])
        return EXIT_OK

    def indicator(self, args) -> int:
        mesh = load_mesh(args.mesh, self.config["mesh"]["tolerance_factor"])
        field = load_field(args.field, mesh=mesh)
        u = make_target(args.target, **args.target_params) if args.target else None
        report = smoothness_report(
            field,
            u=u,
            thresholds=self._thresholds(),
            sample_rule=self.config["smoothness"]["sample_rule"],
            threads=self.config["runtime"]["threads"],
        )
        data = report.to_dict()
        if args.s is not None:
            data["summary"]["selected_s"] = args.s
        self._emit_json(args, data, [args.mesh, args.field])
        if args.csv:
            reports.write_csv(
                args.csv,
                report.csv_header(),
                report.csv_rows(),
                self._info(args, [args.mesh, args.field]),
            )
        if args.output:
            banner("indicator")
            labels = [args.s] if args.s else list(report.type_a)
            for label in labels:
                print(f"Type A (s={label}): {report.type_a[label]:.6g}")
                if report.type_i is not None:
                    print(f"Type I (s={label}): {report.type_i[label]:.6g}")
            print(f"Verdict: {report.verdict}")
        if args.fail_on_flag and report.verdict == "flagged":
            return EXIT_FAIL
        return EXIT_OK

    def cp_table(self, args) -> int:
        r_hats = args.r_hat if args.r_hat else [self.config["qform"]["r_hat"]]
        rows = cp_table(args.n, args.p, r_hats)
        header = ["n", "p", "r_hat", "C_p", "matrix_dim", "cond"]
        info = self._info(args)
        body = [[row[k] for k in header] for row in rows]
        if args.output:
            reports.write_csv(args.output, header, body, info)
            print(f"C_p table written to {args.output}")
        else:
            reports.write_csv(sys.stdout, header, body, info)
        return EXIT_OK

    def verify_lemmas(self, args) -> int:
        rng = np.random.default_rng(self.config["runtime"]["seed"])
        identity = [
            geometry.verify_angle_identity(*c)
            for c in geometry.random_identity_configs(rng, args.samples)
        ]
        inequality = [
            geometry.verify_angle_inequality(*c)
            for c in geometry.random_inequality_configs(rng, args.samples)
        ]
        gamma = geometry.empirical_gamma(inequality)
        max_equal = max(r.residual_equal for r in identity)
        min_ratio = gamma.min_ratio
        holds = max_equal <= 1e-10 and min_ratio is not None and min_ratio > 1
        status = "PASS" if holds else "FAIL"
        data = {
            "samples": args.samples,
            "identity": {
                "max_residual_third": max(r.residual for r in identity),
                "max_residual_equal": max_equal,
                "cos_ratio_range": [
                    min((r.cos_ratio for r in identity if r.cos_ratio is not None), default=None),
                    max((r.cos_ratio for r in identity if r.cos_ratio is not None), default=None),
                ],
            },
            "inequality": {
                "count": gamma.count,
                "min_ratio": gamma.min_ratio,
                "max_ratio": gamma.max_ratio,
                "median_ratio": gamma.median_ratio,
            },
            "verdict": status,
        }
        self._emit_json(args, data)
        return VERDICT_EXIT[status]

    def _default_radius(self, mesh) -> float:
        try:
            return safe_disk_radius(mesh, gamma=self.config["safe_radius"]["gamma"])
        except RadiusFormulaError as e:
            clearance = float(covolume_clearance(build_dual_covolume(mesh)).min())
            logger.warning("%s; using %.2f of the measured clearance", e, CLEARANCE_FRACTION)
            return CLEARANCE_FRACTION * clearance

    def lower_bound(self, args) -> int:
        mesh = load_mesh(args.mesh, self.config["mesh"]["tolerance_factor"])
        field = load_field(args.field, mesh=mesh)
        u = make_target(args.target, **args.target_params) if args.target else None
        radius = args.radius if args.radius is not None else self._default_radius(mesh)
        qf = assemble_qform(QFormSpec(mesh.dimension, field.degree, radius / mesh.h_min))
        dual_field = None
        if u is not None:
            dual_field = local_l2_project_dual(u, build_dual_covolume(mesh), field.degree)
        survey = local_lower_bound_survey(field, dual_field, radius, qf)
        status = "PASS" if survey.all_hold() else "FAIL"
        data = {
            "radius": radius,
            "r_hat": qf.spec.r_hat,
            "checked": len(survey.results),
            "skipped": survey.skipped,
            "max_identity_gap": survey.max_identity_gap,
            "local": [
                {
                    "interface": r.interface_id,
                    "lhs": r.lhs,
                    "min_residual": r.min_residual,
                    "q_value": r.q_value,
                    "ratio": r.ratio,
                }
                for r in survey.results
            ],
            "global": None,
            "verdict": status,
        }
        if u is not None:
            data["global"] = global_lower_bound_report(
                u, field, args.s, qf, scaling=args.scaling
            ).to_dict()
        self._emit_json(args, data, [args.mesh, args.field])
        return VERDICT_EXIT[status]

    def study(self, args) -> int:
        study_cfg = self.config["study"]
        cfg = StudyConfig(
            target=args.target,
            target_params=args.target_params,
            p=args.p,
            kind=resolve_kind(args),
            method=args.method,
            levels=study_cfg["levels"],
            base_divisions=study_cfg["base_divisions"],
            norms=args.s,
            field_files=args.field_files,
            corrupt_amplitude=args.corrupt_amplitude,
            sample_rule=self.config["smoothness"]["sample_rule"],
            rate_floor=study_cfg["rate_floor"],
            rate_tolerance=study_cfg["rate_tolerance"],
            bounded_ratio=study_cfg["bounded_ratio"],
            threads=self.config["runtime"]["threads"],
        )
        result = convergence_study(cfg)
        verdict = necessary_condition_verdict(result)

        out_dir = Path(args.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        info = self._info(args, args.field_files)
        info["options"]["study"] = cfg.to_dict()
        reports.write_csv(out_dir / "study.csv", result.header(), result.rows(), info)
        reports.write_json(out_dir / "verdict.json", verdict.to_dict(), info)

        banner(f"study {cfg.target} p={cfg.p} {cfg.kind} {cfg.method}")
        for level in result.levels:
            errors = ", ".join(f"L{k}={v:.4e}" for k, v in level.errors.items())
            print(
                f"level {level.level}: h={level.h:.4e} {errors} "
                f"max||D||={level.max_norm_d:.4e}"
            )
        orders = {f"jump_k{o['k']}": o for o in verdict.checks["jump_orders"]}
        for name, fit in result.rates.items():
            rate = "n/a" if fit.rate is None else f"{fit.rate:+.3f}"
            if name in orders:
                # faster decay than p + 1 - k is consistent with optimal convergence
                note = f" (expected >= {orders[name]['expected']}, {orders[name]['status']})"
            else:
                note = " (vanishing)" if fit.vanishing else ""
            print(f"  rate {name}: {rate}{note}")
        print(f"Verdict: {verdict.status}")
        print(f"Results written to {out_dir}")
        return VERDICT_EXIT[verdict.status]


def main(argv=None) -> int:
    """Main entry point."""
    args = parse_arguments(argv)
    cli_args = {k: v for k, v in vars(args).items() if k in CLI_OVERRIDE_PATHS}
    try:
        config = build_config(getattr(args, "config", None), cli_args, verbose=False)
    except ConfigError as e:
        print(f"smoothcheck: {e}", file=sys.stderr)
        return EXIT_USAGE
    configure_logging(config["logging"]["level"])

    app = SmoothCheckApp(config, argv)
    try:
        return app.run(args)
    except (MeshError, FieldError, NumericError, OSError, json.JSONDecodeError) as e:
        print(f"smoothcheck: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except (StudyError, ValueError) as e:
        print(f"smoothcheck: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
