"""Command-line driver.

    kaczmarz-tanabe generate --problem mp1 --out data/
    kaczmarz-tanabe solve    --problem mp1 --method tanabe --kmax 100 --delta 0.1 --out trace.csv
    kaczmarz-tanabe analyze  --problem mp3 --n 20 --angles 18 --rays 29 --out report.txt
    kaczmarz-tanabe check    --problem mp1 --delta 0.3 --out bounds.csv
    kaczmarz-tanabe render   --problem mp3 --out phantom.pgm

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 bound violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import fileio, problems
from .linalg import SvdConvergenceError, as_vector
from .row_action import (
    IterationTrace,
    ZeroRowError,
    build_sweep_operator,
    kaczmarz_iterate,
    reference_solution,
    residual_map_norm,
    sweep_identity_residual,
    tanabe_iterate,
)
from .spectral import (
    antisymmetric_identity_check,
    check_exact_bounds,
    check_perturbed_bounds,
    nullspace_equivalence_check,
    spectral_report,
    verify_asm_norm_bound,
    verify_pinv_identity,
)

log = logging.getLogger("kaczmarz_tanabe")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_BOUND = 0, 1, 2, 3

TRACE_HEADER = ("k", "err_norm", "res_norm", "bound_step", "bound_envelope")


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    problem: str = "mp1"
    n: int | None = None
    angles: int = 36
    rays: int = 75
    method: str = "tanabe"
    kmax: int | None = None
    delta: float = 0.0
    eta: float = 0.0
    seed: int = 0
    matrix: str | None = None
    rhs: str | None = None
    solution: str | None = None
    vector: str | None = None
    trace: str | None = None
    cache: str | None = None
    out: str | None = None
    per_step: bool = False
    drop_zero_rows: bool = False

    def validate(self) -> None:
        if self.problem not in ("mp1", "mp2", "mp3", "file"):
            raise UsageError(f"unknown problem {self.problem!r}")
        if self.method not in ("kaczmarz", "tanabe"):
            raise UsageError(f"unknown method {self.method!r}")
        if self.kmax is not None and self.kmax < 0:
            raise UsageError("--kmax must be >= 0")
        if self.delta < 0 or self.eta < 0:
            raise UsageError("--delta and --eta must be >= 0")
        if self.delta > 0 and self.eta > 0:
            raise UsageError("choose either --delta or --eta, not both")
        if self.problem == "file":
            if not self.matrix or not self.rhs:
                raise UsageError("--problem file needs --matrix and --rhs")
        for p in (self.matrix, self.rhs, self.solution, self.vector, self.trace):
            if p and not Path(p).exists():
                raise UsageError(f"input file {p} does not exist")

    @property
    def default_kmax(self) -> int:
        # sweep budgets used for the three model problems
        return {"mp1": 100, "mp2": 200, "mp3": 30}.get(self.problem, 100)


def _coerce(name: str, value: str):
    kinds = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in kinds:
        raise UsageError(f"unknown config key {name!r}")
    kind = str(kinds[name])
    if "bool" in kind:
        return value.strip().lower() in ("1", "true", "yes", "on")
    if "int" in kind:
        return int(value)
    if "float" in kind:
        return float(value)
    return value.strip()


def read_config_file(path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        out[key] = _coerce(key, value)
    return out


# --- problem loading ----------------------------------------------------------


def load_problem(cfg: ExperimentConfig) -> problems.ProblemSpec:
    if cfg.problem == "mp1":
        return problems.model_problem_1()
    if cfg.problem == "mp2":
        return problems.model_problem_2(cfg.n or 32)
    if cfg.problem == "mp3":
        return problems.model_problem_3(cfg.n or 50, cfg.angles, cfg.rays)
    a = fileio.read_matrix(cfg.matrix)
    b = fileio.read_vector(cfg.rhs)
    if a.shape[0] != b.size:
        raise ValueError(f"dimension mismatch: matrix has {a.shape[0]} rows, rhs has {b.size} entries")
    x = fileio.read_vector(cfg.solution) if cfg.solution else None
    meta = {}
    if cfg.drop_zero_rows:
        a, keep = problems.drop_zero_rows(a)
        b = b[keep]
        meta["kept_rows"] = keep
    return problems.ProblemSpec(a, b, x, Path(cfg.matrix).stem, meta)


def perturb(cfg: ExperimentConfig, b: np.ndarray) -> tuple[np.ndarray, float]:
    if cfg.eta > 0:
        return problems.perturb_gaussian(b, cfg.eta, cfg.seed)
    return problems.perturb_uniform(b, cfg.delta)


def get_operator(cfg: ExperimentConfig, a: np.ndarray):
    if cfg.cache and Path(cfg.cache).exists():
        log.info("loading operator from %s", cfg.cache)
        return fileio.load_operator(cfg.cache, a)
    op = build_sweep_operator(a)
    if cfg.cache:
        fileio.save_operator(op, cfg.cache)
    return op


def run_trace(cfg: ExperimentConfig, prob: problems.ProblemSpec, op=None) -> IterationTrace:
    a = prob.a
    y0 = np.zeros(a.shape[1])
    ref = reference_solution(a, prob.b, y0)
    b_used, pnorm = perturb(cfg, prob.b)
    kmax = cfg.default_kmax if cfg.kmax is None else cfg.kmax
    if cfg.method == "kaczmarz":
        return kaczmarz_iterate(a, b_used, kmax, y0, ref, pnorm, per_step=cfg.per_step)
    if op is None:
        op = get_operator(cfg, a)
    return tanabe_iterate(op, a, b_used, kmax, y0, ref, pnorm)


def bound_check(trace: IterationTrace, report):
    if trace.perturbation_norm > 0:
        return check_perturbed_bounds(trace, report)
    return check_exact_bounds(trace, report)


# --- subcommands ----------------------------------------------------------------


def _out_dir(cfg: ExperimentConfig) -> Path:
    if not cfg.out:
        raise UsageError("--out is required")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    if cfg.problem == "mp3":
        n = cfg.n or 50
        a = problems.parallel_projector(n, cfg.angles, cfg.rays)
        x = problems.shepp_logan_phantom(n)
        prob = problems.ProblemSpec(a, a @ x, x, "mp3")
    else:
        prob = load_problem(cfg)
    fileio.write_matrix(out / "A.mtx", prob.a)
    fileio.write_vector(out / "b.vec", prob.b)
    if prob.true_solution is not None:
        fileio.write_vector(out / "x_true.vec", prob.true_solution)
    log.info("wrote %dx%d system to %s", *prob.a.shape, out)
    return EXIT_OK


def trace_rows(trace: IterationTrace, check) -> list:
    rows = []
    for k in range(len(trace)):
        step = env = None
        if check is not None:
            step = None if k == 0 else float(check.bound_values[k])
            env = float(check.envelope_values[k])
        rows.append((k, float(trace.err_norms[k]), float(trace.res_norms[k]), step, env))
    return rows


def cmd_solve(cfg: ExperimentConfig) -> int:
    if not cfg.out:
        raise UsageError("--out is required")
    prob = load_problem(cfg)
    op = None if cfg.method == "kaczmarz" else get_operator(cfg, prob.a)
    trace = run_trace(cfg, prob, op)
    check = None
    if not (cfg.method == "kaczmarz" and cfg.per_step):
        op = op if op is not None else get_operator(cfg, prob.a)
        check = bound_check(trace, spectral_report(prob.a, op))
    fileio.atomic_write(cfg.out, fileio.csv_text(TRACE_HEADER, trace_rows(trace, check)))
    final = Path(cfg.out).with_suffix(".solution.vec")
    fileio.write_vector(final, trace.final)
    log.info("final err_norm %.6e, res_norm %.6e", trace.err_norms[-1], trace.res_norms[-1])
    return EXIT_OK


def analysis_lines(a: np.ndarray, op) -> tuple[list[str], bool]:
    rep = spectral_report(a, op)
    asm_norm, two_pinv = verify_asm_norm_bound(a, op)
    asm_full, _ = verify_asm_norm_bound(a, op, restrict_to_range=False)
    prop = sweep_identity_residual(op, a)
    pinv_defect = verify_pinv_identity(a, op)
    quad, ident = antisymmetric_identity_check(op, 16, a)
    null_gap = nullspace_equivalence_check(a, op)
    m, n = a.shape
    checks = [
        ("sweep identity I - A_S^T M A = Q", prop, 1e-10 * n),
        ("pseudoinverse identity on R(A)", pinv_defect, 1e-8),
        ("|A_S^T M P_R(A)| <= 2|A^+|", asm_norm - two_pinv, 1e-10),
        ("antisymmetric quadratic form", quad, 1e-10),
        ("B^T(2I - B) identity", ident, 1e-9),
        ("N(A) = N(I - Q^T Q)", null_gap, 1e-7),
        ("Kbar < 1", rep.k_bar_factor - 1.0, -1e-300),
    ]
    lines = [
        f"matrix                    {m} x {n}",
        f"sigma_max(Q)              {rep.sigma_max_q:.6f}",
        f"sigma_second(Q)           {rep.sigma_second_q:.6f}",
        f"sigma_min_pos(A)          {rep.sigma_min_pos_a:.6g}",
        f"K                         {rep.k_factor:.6f}",
        f"Kbar                      {rep.k_bar_factor:.6f}",
        f"unit multiplicity         {rep.unit_multiplicity}",
        f"|A^+|_2                   {rep.pinv_norm_a:.6g}",
        f"|A_S^T M|_2               {asm_full:.6g}",
        f"|A_S^T M P_R(A)|_2        {asm_norm:.6g}",
        f"2|A^+|_2                  {two_pinv:.6g}",
        f"residual map norm |L|_2   {residual_map_norm(op, a):.6g}",
    ]
    ok = True
    for name, value, tol in checks:
        passed = value <= tol
        ok &= passed
        lines.append(f"{'PASS' if passed else 'FAIL'}  {name}  ({value:.3e})")
    return lines, ok


def cmd_analyze(cfg: ExperimentConfig) -> int:
    prob = load_problem(cfg)
    op = get_operator(cfg, prob.a)
    lines, ok = analysis_lines(prob.a, op)
    text = "\n".join(lines) + "\n"
    if cfg.out:
        fileio.atomic_write(cfg.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_BOUND


def trace_from_csv(path, perturbation_norm: float) -> IterationTrace:
    cols = fileio.read_csv_columns(path)
    err = np.array([float(v) for v in cols["err_norm"]])
    res = np.array([float(v) for v in cols["res_norm"]])
    return IterationTrace(np.zeros((err.size, 0)), err, res, np.zeros(0), perturbation_norm)


def cmd_check(cfg: ExperimentConfig) -> int:
    prob = load_problem(cfg)
    op = get_operator(cfg, prob.a)
    if cfg.trace:
        _, pnorm = perturb(cfg, prob.b)
        trace = trace_from_csv(cfg.trace, pnorm)
    else:
        trace = run_trace(cfg, prob, op)
    result = bound_check(trace, spectral_report(prob.a, op))
    rows = [
        (k, int(result.per_step_ok[k]), float(trace.err_norms[k]), float(result.bound_values[k]), float(result.envelope_values[k]))
        for k in range(len(trace))
    ]
    if cfg.out:
        fileio.atomic_write(cfg.out, fileio.csv_text(("k", "ok", "err_norm", "bound_step", "bound_envelope"), rows))
    if result.ok:
        log.info("all %d bound checks passed (max violation %.3e)", len(trace), result.max_violation)
        return EXIT_OK
    log.error("bound violated first at k=%d (max violation %.3e)", result.first_failure, result.max_violation)
    return EXIT_BOUND


def cmd_render(cfg: ExperimentConfig) -> int:
    if not cfg.out:
        raise UsageError("--out is required")
    if cfg.vector:
        v = fileio.read_vector(cfg.vector)
        n = cfg.n or int(round(np.sqrt(v.size)))
    elif cfg.problem == "mp3":
        n = cfg.n or 50
        v = problems.shepp_logan_phantom(n)
    elif cfg.problem == "mp2":
        n = cfg.n or 32
        v = problems.model_problem_2(n).true_solution
    else:
        raise UsageError("render needs --vector or --problem mp2/mp3")
    fileio.write_image_pgm(as_vector(v), n, cfg.out)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "analyze": cmd_analyze,
    "check": cmd_check,
    "render": cmd_render,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kaczmarz-tanabe", description="Kaczmarz / Kaczmarz-Tanabe experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value file; command-line flags take precedence")
        p.add_argument("--problem", choices=["mp1", "mp2", "mp3", "file"])
        p.add_argument("--n", type=int)
        p.add_argument("--angles", type=int)
        p.add_argument("--rays", type=int)
        p.add_argument("--method", choices=["kaczmarz", "tanabe"])
        p.add_argument("--kmax", type=int)
        p.add_argument("--delta", type=float)
        p.add_argument("--eta", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--matrix")
        p.add_argument("--rhs")
        p.add_argument("--solution", help="true solution vector for --problem file")
        p.add_argument("--vector", help="image vector to render")
        p.add_argument("--trace", help="check an existing trace CSV instead of running one")
        p.add_argument("--cache", help="operator cache file (read if present, else written)")
        p.add_argument("--out")
        p.add_argument("--per-step", action="store_const", const=True, dest="per_step")
        p.add_argument("--drop-zero-rows", action="store_const", const=True, dest="drop_zero_rows")
    return parser


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    values = read_config_file(ns.config) if ns.config else {}
    for f in fields(ExperimentConfig):
        flag = getattr(ns, f.name, None)
        if flag is not None:
            values[f.name] = flag
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if ns.config and not Path(ns.config).exists():
            raise UsageError(f"config file {ns.config} does not exist")
        cfg = config_from_args(ns)
        return COMMANDS[ns.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ZeroRowError, SvdConvergenceError, ArithmeticError, fileio.CacheError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
