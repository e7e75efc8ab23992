"""Configuration-driven experiment runner.

Configs are flat key = value text with section headers ([problem], [run],
[checks], optional [check.<name>] override sections and [output]); see the
bundled *.cfg files and the schema walk-through in the README.  A run
validates the coefficients, assembles the generator, executes the requested
checks and writes a reproducible report bundle (bundle.json, report.txt,
report.csv and a manifest of content hashes).

Exit-code contract: 0 all checks passed, 1 at least one check failed,
2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from vschro.evolve import SolverError, SplitConfig, trotter_evolve
from vschro.fields import FieldError, RULE_NAMES
from vschro.mesh import GridError, VectorField, write_field_csv, write_field_pgm
from vschro.operators import AssemblyError, export_matrix_market
from vschro.problems import Problem, build_problem
from vschro.spectral import SpectralProximityError, eigenpairs, kernel_column, resolvent_norm
from vschro.verify import (
    PropertyCheckResult,
    run_commutator_rate_check,
    run_compactness_contrast,
    run_consistency_check,
    run_contraction_check,
    run_degenerate_kernel_check,
    run_domination_check,
    run_nongeneration_demo,
    run_positivity_check,
    run_shift_invariance_check,
    run_trotter_order_check,
    run_ultracontractivity_fit,
    ultracontractive_sweep,
)

__all__ = [
    "ExperimentConfig",
    "ReportBundle",
    "ConfigError",
    "load_config",
    "run_experiment",
    "list_experiments",
    "emit_report",
    "main",
]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_HARD_CAP_UNKNOWNS = 4_000_000
_NUMERICAL_ERRORS = (SolverError, SpectralProximityError, np.linalg.LinAlgError, FloatingPointError)


class ConfigError(Exception):
    pass


def _parse_scalar(text: str):
    text = text.strip()
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def _parse_value(text: str):
    if "," in text:
        return [_parse_scalar(t) for t in text.split(",") if t.strip()]
    return _parse_scalar(text)


def _parse_params(text: str) -> dict:
    """'r=1.5, m=2' -> {'r': 1.5, 'm': 2}."""
    out = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ConfigError(f"malformed parameter {part!r}; expected key=value")
        key, val = part.split("=", 1)
        out[key.strip()] = _parse_scalar(val)
    return out


@dataclass
class ExperimentConfig:
    dim: int = 1
    m: int = 2
    extent: float = 8.0
    n_per_axis: int = 64
    q_rule: str = "identity_Q"
    q_params: dict = field(default_factory=dict)
    v_rule: str = "diag_V"
    v_params: dict = field(default_factory=dict)
    shift: str = "none"
    alpha: float = 0.0
    run: SplitConfig = field(default_factory=SplitConfig)
    checks: list = field(default_factory=list)
    overrides: dict = field(default_factory=dict)
    output_dir: str = "vschro_out"
    seed: int = 1

    def validate(self):
        if self.q_rule not in RULE_NAMES or self.v_rule not in RULE_NAMES:
            raise ConfigError(
                f"unknown rule {self.q_rule!r} or {self.v_rule!r}; known: {', '.join(RULE_NAMES)}"
            )
        unknowns = self.n_per_axis**self.dim * self.m
        if unknowns > _HARD_CAP_UNKNOWNS:
            raise ConfigError(f"{unknowns} unknowns exceed the hard cap {_HARD_CAP_UNKNOWNS}")
        for name in self.checks:
            if name not in CHECKS:
                raise ConfigError(
                    f"unknown check {name!r}; known: {', '.join(sorted(CHECKS))}"
                )


def load_config(path) -> ExperimentConfig:
    """Parse a config file; bare bundled names (e.g. 'rotation_r15') resolve
    to the packaged example configs."""
    path = str(path)
    if not os.path.exists(path) and "/" not in path:
        name = path[:-4] if path.endswith(".cfg") else path
        if name in list_experiments():
            path = str(bundled_config_path(name))
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config {path}")
    try:
        prob = parser["problem"] if parser.has_section("problem") else {}
        cfg = ExperimentConfig(
            dim=int(prob.get("dim", 1)),
            m=int(prob.get("m", 2)),
            extent=float(prob.get("extent", 8.0)),
            n_per_axis=int(prob.get("n_per_axis", 64)),
            q_rule=prob.get("q_rule", "identity_Q"),
            q_params=_parse_params(prob.get("q_params", "")),
            v_rule=prob.get("v_rule", "diag_V"),
            v_params=_parse_params(prob.get("v_params", "")),
            shift=prob.get("shift", "none"),
            alpha=float(prob.get("alpha", 0.0)),
        )
        if parser.has_section("run"):
            run = parser["run"]
            cfg.run = SplitConfig(
                scheme=run.get("scheme", "lie"),
                diffusion_substep=run.get("substep", "backward_euler"),
                n_steps=int(run.get("n_steps", 100)),
                t_final=float(run.get("t_final", 1.0)),
                linear_solver_tol=float(run.get("solver_tol", 1e-10)),
                max_solver_iters=int(run.get("max_iters", 20000)),
            )
        if parser.has_section("checks"):
            names = parser["checks"].get("names", "")
            cfg.checks = [n.strip() for n in names.split(",") if n.strip()]
        for section in parser.sections():
            if section.startswith("check."):
                name = section[len("check."):]
                cfg.overrides[name] = {
                    k: _parse_value(v) for k, v in parser[section].items()
                }
        if parser.has_section("output"):
            out = parser["output"]
            cfg.output_dir = out.get("dir", cfg.output_dir)
            cfg.seed = int(out.get("seed", cfg.seed))
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    cfg.validate()
    return cfg


@dataclass
class ReportBundle:
    config: dict
    hypothesis_report: dict
    results: list
    manifest: dict = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)


# ---------------------------------------------------------------------------
# Check registry.  Each entry takes (problem, run_cfg, seed, **overrides).

def _random_field(problem: Problem, seed: int) -> VectorField:
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal((problem.grid.n_cells, problem.m)) + 1j * rng.standard_normal(
        (problem.grid.n_cells, problem.m)
    )
    return VectorField(problem.grid, vals)


def _check_contraction(problem, run_cfg, seed, slack=1e-8, **_):
    cfg = replace(run_cfg, scheme="lie", diffusion_substep="backward_euler")
    traj = trotter_evolve(problem.diffusion, problem.V, _random_field(problem, seed), cfg)
    return run_contraction_check(traj, slack=slack)


def _check_consistency(problem, run_cfg, seed, **ov):
    return run_consistency_check(
        problem,
        lam=ov.get("lam", 2.0),
        horizon=ov.get("horizon", 6.0),
        n_steps=int(ov.get("n_steps", 300)),
        tol=ov.get("tol", 0.01),
    )


def _check_positivity(problem, run_cfg, seed, **ov):
    return run_positivity_check(
        problem,
        n_random=int(ov.get("n_random", 50)),
        t_forward=ov.get("t_forward", 0.1),
        seed=seed,
        floor=ov.get("floor", 1e-10),
    )


def _check_domination(problem, run_cfg, seed, **ov):
    ts = ov.get("ts", [0.1, 0.5, 1.0])
    if not isinstance(ts, list):
        ts = [ts]
    return run_domination_check(problem, ts=tuple(float(t) for t in ts),
                                slack=ov.get("slack", 1e-8))


def _check_ultracontractivity(problem, run_cfg, seed, **ov):
    kernels = ultracontractive_sweep(problem, n_points=int(ov.get("n_points", 5)))
    return run_ultracontractivity_fit(kernels, problem.grid.dim, tol=ov.get("tol", 0.1))


def _check_trotter_order(problem, run_cfg, seed, **ov):
    schedule = ov.get("n_schedule", [8, 16, 32, 64])
    return run_trotter_order_check(problem, t=ov.get("t", 0.5),
                                   n_schedule=tuple(int(n) for n in schedule))


def _check_nongeneration(problem, run_cfg, seed, **ov):
    extents = ov.get("extents", [50.0, 100.0, 200.0])
    return run_nongeneration_demo(
        lam=ov.get("lam", 1.0),
        extents=tuple(float(r) for r in extents),
        h_target=ov.get("h_target", 0.125),
    )


def _check_shift_invariance(problem, run_cfg, seed, **ov):
    sigmas = ov.get("sigmas", [1.0, 2.0, 5.0])
    return run_shift_invariance_check(
        mu=ov.get("mu", 1.0),
        sigmas=tuple(float(s) for s in sigmas),
        extent=ov.get("extent", 40.0),
        n_per_axis=int(ov.get("n_per_axis", 1600)),
        tol=ov.get("tol", 0.02),
    )


def _check_degenerate_kernel(problem, run_cfg, seed, **ov):
    return run_degenerate_kernel_check(
        extent=ov.get("extent", 10.0),
        n_per_axis=int(ov.get("n_per_axis", 400)),
        t=ov.get("t", 0.2),
        n_steps=int(ov.get("n_steps", 200)),
    )


def _check_commutator(problem, run_cfg, seed, **ov):
    schedule = ov.get("n_schedule", [200, 400])
    return run_commutator_rate_check(
        extent=ov.get("extent", 10.0),
        n_schedule=tuple(int(n) for n in schedule),
    )


def _check_compactness(problem, run_cfg, seed, **ov):
    return run_compactness_contrast(
        h_target=ov.get("h_target", 0.05),
        extent=ov.get("extent", 10.0),
        k=int(ov.get("k", 20)),
    )


CHECKS = {
    "contraction": _check_contraction,
    "consistency": _check_consistency,
    "positivity": _check_positivity,
    "domination": _check_domination,
    "ultracontractivity": _check_ultracontractivity,
    "trotter_order": _check_trotter_order,
    "nongeneration": _check_nongeneration,
    "shift_invariance": _check_shift_invariance,
    "degenerate_kernel": _check_degenerate_kernel,
    "commutator": _check_commutator,
    "compactness": _check_compactness,
}


def _config_echo(cfg: ExperimentConfig) -> dict:
    return {
        "dim": cfg.dim,
        "m": cfg.m,
        "extent": cfg.extent,
        "n_per_axis": cfg.n_per_axis,
        "q_rule": cfg.q_rule,
        "q_params": cfg.q_params,
        "v_rule": cfg.v_rule,
        "v_params": cfg.v_params,
        "shift": cfg.shift,
        "alpha": cfg.alpha,
        "run": {
            "scheme": cfg.run.scheme,
            "substep": cfg.run.diffusion_substep,
            "n_steps": cfg.run.n_steps,
            "t_final": cfg.run.t_final,
            "solver_tol": cfg.run.linear_solver_tol,
            "max_iters": cfg.run.max_solver_iters,
        },
        "checks": list(cfg.checks),
        "overrides": cfg.overrides,
        "seed": cfg.seed,
    }


def _report_echo(problem: Problem) -> dict:
    rep = problem.report
    return {
        "eta1": rep.eta1,
        "eta2": rep.eta2,
        "dissipativity_margin": rep.dissipativity_margin,
        "alpha": rep.alpha,
        "growth_sup": rep.growth_sup,
        "offdiag_min": rep.offdiag_min,
        "shift_beta": rep.shift_beta,
        "applied_shift": problem.V.shift,
        "kappa_min": float(rep.kappa_profile.min()),
        "kappa_max": float(rep.kappa_profile.max()),
    }


def build_problem_from_config(cfg: ExperimentConfig) -> Problem:
    try:
        return build_problem(
            cfg.dim,
            cfg.extent,
            cfg.n_per_axis,
            cfg.m,
            q_rule=cfg.q_rule,
            q_params=cfg.q_params,
            v_rule=cfg.v_rule,
            v_params=cfg.v_params,
            shift=cfg.shift,
            alpha=cfg.alpha,
        )
    except (FieldError, GridError, AssemblyError, ValueError) as exc:
        raise ConfigError(f"problem construction failed: {exc}") from exc


def run_experiment(config_path, out_dir=None, seed=None) -> tuple:
    """Execute a config end to end; returns (bundle, exit_code).

    Writes bundle.json, report.txt, report.csv and manifest.json into the
    output directory.
    """
    cfg = load_config(config_path)
    if out_dir is not None:
        cfg.output_dir = str(out_dir)
    if seed is not None:
        cfg.seed = int(seed)
    problem = build_problem_from_config(cfg)
    results = []
    for name in cfg.checks:
        overrides = cfg.overrides.get(name, {})
        try:
            results.append(CHECKS[name](problem, cfg.run, cfg.seed, **overrides))
        except ValueError as exc:
            raise ConfigError(f"check {name!r} rejected its configuration: {exc}") from exc
    bundle = ReportBundle(
        config=_config_echo(cfg),
        hypothesis_report=_report_echo(problem),
        results=results,
    )
    emit_report(bundle, cfg.output_dir, formats=("text", "csv"))
    return bundle, (EXIT_OK if bundle.all_passed else EXIT_CHECK_FAILED)


def list_experiments(include_bundled: bool = True) -> list:
    """Names of the bundled example configs."""
    if not include_bundled:
        return []
    root = resources.files("vschro") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def bundled_config_path(name: str) -> Path:
    path = resources.files("vschro") / "configs" / f"{name}.cfg"
    if not path.is_file():
        raise ConfigError(f"no bundled config {name!r}; known: {', '.join(list_experiments())}")
    return Path(str(path))


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _result_dict(r: PropertyCheckResult) -> dict:
    return {
        "name": r.name,
        "passed": r.passed,
        "tolerance": r.tolerance,
        "measured": r.measured,
        "notes": r.notes,
    }


def emit_report(bundle: ReportBundle, out_dir, formats=("text", "csv")) -> dict:
    """Write the bundle deterministically; returns the manifest.

    Field ordering is fixed and floats are rendered at 12 significant
    digits, so identical bundles produce identical bytes.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    payload = {
        "config": bundle.config,
        "hypothesis_report": bundle.hypothesis_report,
        "results": [_result_dict(r) for r in bundle.results],
    }
    bundle_path = out / "bundle.json"
    bundle_path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
    written.append(bundle_path)

    if "text" in formats:
        lines = ["property-check report", "====================="]
        rep = bundle.hypothesis_report
        lines.append("coefficient check: " + ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(rep.items())))
        lines.append("")
        for r in bundle.results:
            lines.append(f"[{'PASS' if r.passed else 'FAIL'}] {r.name} (tolerance {_fmt(r.tolerance)})")
            lines.append(f"    claim: {r.notes}")
            for key in sorted(r.measured):
                lines.append(f"    {key} = {_fmt(r.measured[key])}")
        text_path = out / "report.txt"
        text_path.write_text("\n".join(lines) + "\n")
        written.append(text_path)

    if "csv" in formats:
        rows = ["check,passed,tolerance,measure,value"]
        for r in bundle.results:
            for key in sorted(r.measured):
                rows.append(
                    f"{r.name},{int(r.passed)},{_fmt(r.tolerance)},{key},{_fmt(r.measured[key])}"
                )
        csv_path = out / "report.csv"
        csv_path.write_text("\n".join(rows) + "\n")
        written.append(csv_path)

    manifest = {
        p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in written
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    bundle.manifest = manifest
    return manifest


def _apply_threads(value: int | None):
    if value is None or value == 0:
        env = os.environ.get("VSCHRO_THREADS", "")
        value = int(env) if env.isdigit() and int(env) > 0 else 0
    if value <= 0:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(value)
    try:
        import threadpoolctl

        global _THREAD_LIMITS
        _THREAD_LIMITS = threadpoolctl.threadpool_limits(limits=value)
    except ImportError:
        pass


# ---------------------------------------------------------------------------
# Subcommands.

def _cmd_validate(args):
    cfg = load_config(args.config)
    problem = build_problem_from_config(cfg)
    for key, val in sorted(_report_echo(problem).items()):
        print(f"{key} = {_fmt(val)}")
    return EXIT_OK


def _cmd_evolve(args):
    cfg = load_config(args.config)
    problem = build_problem_from_config(cfg)
    rng = np.random.default_rng(args.seed if args.seed is not None else cfg.seed)
    vals = rng.standard_normal((problem.grid.n_cells, problem.m)) + 0j
    f = VectorField(problem.grid, vals)
    traj = trotter_evolve(
        problem.diffusion, problem.V, f, cfg.run, snapshot_stride=args.dump_snapshots
    )
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["time,p,norm"]
    for p, norms in traj.norm_log.items():
        for t, v in zip(traj.times, norms):
            rows.append(f"{t:.12g},{p:g},{v:.12g}")
    (out / "norms.csv").write_text("\n".join(rows) + "\n")
    if args.dump_snapshots:
        for t, snap in zip(traj.snapshot_times, traj.snapshots):
            write_field_csv(snap, out / f"field_t{t:.6f}.csv")
    write_field_csv(traj.final, out / "final_field.csv")
    for comp in range(problem.m):
        write_field_pgm(traj.final, comp, out / f"final_component{comp}.pgm")
    print(f"trajectory written to {out}")
    return EXIT_OK


def _cmd_resolvent(args):
    cfg = load_config(args.config)
    problem = build_problem_from_config(cfg)
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["re_lambda,im_lambda,norm_estimate"]
    for re in args.lam_re:
        for im in args.lam_im:
            nrm = resolvent_norm(problem.generator, complex(re, im))
            rows.append(f"{re:.12g},{im:.12g},{nrm:.12g}")
            print(f"lambda = {re:g}{im:+g}i : ||(lambda - L)^-1|| = {nrm:.6g}")
    (out / "resolvent_scan.csv").write_text("\n".join(rows) + "\n")
    return EXIT_OK


def _cmd_spectrum(args):
    cfg = load_config(args.config)
    problem = build_problem_from_config(cfg)
    res = eigenpairs(problem.generator, k=args.k, shift=complex(args.shift_re, args.shift_im))
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["re_lambda,im_lambda,residual"]
    for lam, r in zip(res.eigenvalues, res.residuals):
        rows.append(f"{lam.real:.12g},{lam.imag:.12g},{r:.12g}")
        print(f"lambda = {lam.real:.8g}{lam.imag:+.8g}i  residual {r:.2e}")
    (out / "eigenvalues.csv").write_text("\n".join(rows) + "\n")
    return EXIT_OK


def _cmd_kernel(args):
    cfg = load_config(args.config)
    problem = build_problem_from_config(cfg)
    cell = args.cell if args.cell is not None else problem.grid.center_cell()
    est = kernel_column(
        problem.diffusion, problem.V, args.t, cell, args.component, cfg.run
    )
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_field_csv(est.column, out / "kernel_column.csv")
    for comp in range(problem.m):
        write_field_pgm(est.column, comp, out / f"kernel_component{comp}.pgm")
    print(f"kernel column at t={args.t:g}, sup |K| = {est.sup_abs:.6g}")
    return EXIT_OK


def _cmd_verify(args):
    bundle, code = run_experiment(args.config, out_dir=args.out, seed=args.seed)
    for r in bundle.results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}")
    return code


def _cmd_report(args):
    data = json.loads(Path(args.bundle).read_text())
    results = [
        PropertyCheckResult(
            name=d["name"],
            passed=d["passed"],
            measured=d["measured"],
            tolerance=d["tolerance"],
            notes=d.get("notes", ""),
        )
        for d in data["results"]
    ]
    bundle = ReportBundle(
        config=data["config"],
        hypothesis_report=data["hypothesis_report"],
        results=results,
    )
    emit_report(bundle, args.out or ".", formats=(args.format,))
    return EXIT_OK


def _cmd_list(args):
    for name in list_experiments():
        print(name)
    return EXIT_OK


def _cmd_export_operator(args):
    cfg = load_config(args.config)
    problem = build_problem_from_config(cfg)
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    export_matrix_market(problem.generator, out / "generator.mtx")
    print(f"generator written to {out / 'generator.mtx'}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vschro",
        description="coupled-Schrodinger semigroup toolbox and property-check harness",
    )
    parser.add_argument("--threads", type=int, default=None, help="worker threads (0 = auto)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="experiment config path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="seed override")

    p = sub.add_parser("validate", help="run the coefficient validator")
    common(p)
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("evolve", help="run one trajectory and export norms")
    common(p)
    p.add_argument(
        "--dump-snapshots", type=int, default=0, metavar="STRIDE",
        help="also dump every STRIDE-th snapshot field as CSV (0 = final only)",
    )
    p.set_defaults(fn=_cmd_evolve)

    p = sub.add_parser("resolvent", help="resolvent-norm scan")
    common(p)
    p.add_argument("--lam-re", type=float, nargs="+", default=[2.0])
    p.add_argument("--lam-im", type=float, nargs="+", default=[0.0])
    p.set_defaults(fn=_cmd_resolvent)

    p = sub.add_parser("spectrum", help="eigenvalues near a shift")
    common(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--shift-re", type=float, default=0.0)
    p.add_argument("--shift-im", type=float, default=0.0)
    p.set_defaults(fn=_cmd_spectrum)

    p = sub.add_parser("kernel", help="extract one kernel column")
    common(p)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--cell", type=int, default=None)
    p.add_argument("--component", type=int, default=0)
    p.set_defaults(fn=_cmd_kernel)

    p = sub.add_parser("verify", help="run the configured checks, write a bundle")
    common(p)
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("report", help="re-emit reports from a bundle.json")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.set_defaults(fn=_cmd_report)

    p = sub.add_parser("list", help="list bundled example configs")
    p.set_defaults(fn=_cmd_list)

    p = sub.add_parser("export-operator", help="dump the generator in matrix-market format")
    common(p)
    p.set_defaults(fn=_cmd_export_operator)

    args = parser.parse_args(argv)
    _apply_threads(args.threads)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
