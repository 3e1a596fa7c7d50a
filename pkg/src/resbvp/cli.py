"""Command-line front end: ingestion, orchestration, report/CSV emission.

Commands
    analyze            resonance decomposition + structural identity checks
    solve              damped fixed-point solve, solution.csv + report.txt
    check-hypotheses   growth margins and sampling probes
    verify-example     golden-value verification of a builtin problem

Problems come from ``--builtin NAME`` (with ``--k``) or ``--config PATH``
pointing at a sectioned key = value file:

    [problem]
    alpha = 1.5
    xi = 0.25
    grid_n = 256

    [operator]
    builtin = section4     # or:  csv = matrix.csv
    k = 1

    [rhs]
    builtin = section4     # or affine "f = C u + D v + g(t)":
    # c_matrix = C.csv
    # d_matrix = D.csv
    # g_profile = zero | one | t | sqrt

Exit codes: 0 success; 1 non-resonant problem or failed smallness
margins; 2 solver non-convergence; 3 input error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .conditions import (
    ConditionsReport,
    GrowthSpec,
    check_all,
    check_growth_margins,
    constant_growth,
)
from .fracops import Order
from .linops import load_matrix_csv, operator_norm
from .problems import BUILTINS, Section4Report, verify_section4
from .resonance import (
    NonResonantError,
    ProblemSpec,
    ResonanceData,
    build_resonance,
    derivative_trace,
    evaluate,
    verify_structure,
)
from .solver import RhsEvaluationError, SolveOptions, SolveReport, solve

__all__ = ["RunConfig", "parse_config", "run", "main"]

_COMMANDS = ("analyze", "solve", "check-hypotheses", "verify-example")

_G_PROFILES: dict[str, Callable[[float], float]] = {
    "zero": lambda t: 0.0,
    "one": lambda t: 1.0,
    "t": lambda t: t,
    "sqrt": lambda t: math.sqrt(t),
}


class ConfigError(ValueError):
    """Malformed or invalid configuration input."""


@dataclass
class RunConfig:
    command: str
    builtin: str | None = None
    k: int = 1
    config_path: str | None = None
    grid_n: int | None = None
    damping: float = 0.5
    max_iter: int = 200
    seed: int = 0
    out_dir: str = "."

    def __post_init__(self) -> None:
        if self.command not in _COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; choose from {_COMMANDS}")


def _smallest_valid_grid(xi: float, minimum: int = 8) -> int:
    q = Fraction(xi).limit_denominator(10**6).denominator
    n = q
    while n < minimum:
        n += q
    return n


def _validate_grid(xi: float, grid_n: int) -> None:
    if grid_n < 8:
        raise ConfigError(f"grid_n must be at least 8, got {grid_n}")
    if abs(xi * grid_n - round(xi * grid_n)) > 1e-9:
        raise ConfigError(
            f"xi = {xi} must land on a grid node: grid_n = {grid_n} is invalid, "
            f"smallest valid grid_n is {_smallest_valid_grid(xi)}"
        )


def _parse_sections(path: str) -> dict[str, dict[str, tuple[str, int]]]:
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current: str | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip()
                if current not in ("problem", "operator", "rhs"):
                    raise ConfigError(f"{path}:{lineno}: unknown section [{current}]")
                sections.setdefault(current, {})
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            if current is None:
                raise ConfigError(f"{path}:{lineno}: key outside of any section")
            key, _, value = line.partition("=")
            sections[current][key.strip()] = (value.strip(), lineno)
    return sections


_KNOWN_KEYS = {
    "problem": {"alpha", "xi", "grid_n"},
    "operator": {"builtin", "k", "csv"},
    "rhs": {"builtin", "c_matrix", "d_matrix", "g_profile"},
}


def parse_config(path: str) -> tuple[ProblemSpec, GrowthSpec | None, dict]:
    """Parse a problem file into a spec, a growth envelope when one is
    derivable, and a metadata dict for the report."""
    sections = _parse_sections(path)
    base = str(Path(path).parent)
    for sec, keys in sections.items():
        for key, (_, lineno) in keys.items():
            if key not in _KNOWN_KEYS[sec]:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r} in section [{sec}]")

    problem = sections.get("problem", {})
    operator = sections.get("operator", {})
    rhs_sec = sections.get("rhs", {})

    def fval(sec: dict, key: str, default: float | None = None) -> float | None:
        if key not in sec:
            return default
        text, lineno = sec[key]
        try:
            return float(text)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {key} must be a number, got {text!r}") from exc

    def ival(sec: dict, key: str, default: int | None = None) -> int | None:
        if key not in sec:
            return default
        text, lineno = sec[key]
        try:
            return int(text)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {key} must be an integer, got {text!r}") from exc

    meta: dict = {"source": path}
    growth: GrowthSpec | None = None

    op_builtin = operator.get("builtin", (None, 0))[0]
    if op_builtin is not None:
        if op_builtin not in BUILTINS:
            lineno = operator["builtin"][1]
            raise ConfigError(f"{path}:{lineno}: unknown builtin {op_builtin!r}")
        k = ival(operator, "k", 1)
        grid_n = ival(problem, "grid_n", 256)
        alpha = fval(problem, "alpha", 1.5)
        xi = fval(problem, "xi", 0.25)
        if abs(alpha - 1.5) > 1e-12 or abs(xi - 0.25) > 1e-12:
            raise ConfigError(
                f"{path}: builtin {op_builtin!r} fixes alpha = 1.5 and xi = 0.25"
            )
        _validate_grid(xi, grid_n)
        spec = BUILTINS[op_builtin].build(k, grid_n)
        growth = BUILTINS[op_builtin].growth()
        meta.update(problem="builtin:" + op_builtin, k=k)
        return spec, growth, meta

    if "csv" not in operator:
        raise ConfigError(f"{path}: section [operator] needs 'builtin' or 'csv'")
    a_op = load_matrix_csv(Path(base) / operator["csv"][0])
    alpha = fval(problem, "alpha")
    xi = fval(problem, "xi")
    grid_n = ival(problem, "grid_n", 256)
    if alpha is None or xi is None:
        raise ConfigError(f"{path}: section [problem] needs alpha and xi for a csv operator")
    if not (1.0 < alpha <= 2.0):
        raise ConfigError(f"{path}: alpha must lie in (1, 2], got {alpha}")
    if not (0.0 < xi < 1.0):
        raise ConfigError(f"{path}: xi must lie in (0, 1), got {xi}")
    _validate_grid(xi, grid_n)
    n = a_op.shape[0]

    rhs_builtin = rhs_sec.get("builtin", (None, 0))[0]
    if rhs_builtin is not None:
        if rhs_builtin not in BUILTINS:
            lineno = rhs_sec["builtin"][1]
            raise ConfigError(f"{path}:{lineno}: unknown rhs builtin {rhs_builtin!r}")
        rhs = BUILTINS[rhs_builtin].rhs_factory(n)
        growth = BUILTINS[rhs_builtin].growth()
        meta.update(problem="csv+builtin-rhs")
    else:
        c_mat = (
            load_matrix_csv(Path(base) / rhs_sec["c_matrix"][0])
            if "c_matrix" in rhs_sec
            else np.zeros((n, n))
        )
        d_mat = (
            load_matrix_csv(Path(base) / rhs_sec["d_matrix"][0])
            if "d_matrix" in rhs_sec
            else np.zeros((n, n))
        )
        if c_mat.shape != (n, n) or d_mat.shape != (n, n):
            raise ConfigError(f"{path}: affine rhs matrices must be {n}x{n}")
        profile_name = rhs_sec.get("g_profile", ("zero", 0))[0]
        if profile_name not in _G_PROFILES:
            raise ConfigError(
                f"{path}: unknown g_profile {profile_name!r}; choose from {sorted(_G_PROFILES)}"
            )
        g = _G_PROFILES[profile_name]
        ones = np.ones(n)

        def rhs(t: float, u: np.ndarray, v: np.ndarray, _c=c_mat, _d=d_mat, _g=g) -> np.ndarray:
            return _c @ u + _d @ v + _g(t) * ones

        # Exact envelope for the affine form: spectral norms and the
        # profile sup (every named profile is bounded by 1 on [0, 1]).
        growth = constant_growth(
            lin_u=operator_norm(c_mat),
            lin_v=operator_norm(d_mat),
            offset=math.sqrt(n),
        )
        meta.update(problem=f"csv+affine(g={profile_name})")

    spec = ProblemSpec(ord=Order(alpha), xi=xi, a_op=a_op, rhs=rhs, grid_n=grid_n)
    return spec, growth, meta


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _write_solution_csv(path: Path, spec: ProblemSpec, report: SolveReport) -> None:
    x = evaluate(report.element, spec.ord).values
    d = derivative_trace(report.element, spec.ord).values
    t = report.element.source.nodes
    n = spec.dim
    header = ["t"] + [f"x_{i + 1}" for i in range(n)] + [f"dtrace_{i + 1}" for i in range(n)]
    lines = [",".join(header)]
    for j in range(t.shape[0]):
        row = [t[j], *x[j], *d[j]]
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _resonance_lines(rdata: ResonanceData) -> list[str]:
    return [
        "== resonance decomposition ==",
        f"dimension                : {rdata.dim}",
        f"rank                     : {rdata.rank}",
        f"kernel dimension         : {rdata.dim_ker}",
        f"ep defect                : {_fmt(rdata.ep_defect)}",
        f"obstruction scale        : {_fmt(rdata.proj_scale)}",
        f"||pinv||                 : {_fmt(operator_norm(rdata.pinv))}",
        f"rank tolerance ambiguous : {rdata.rank_ambiguous}",
        "",
    ]


def _margins_lines(report: ConditionsReport | None, margins=None) -> list[str]:
    m = margins if margins is not None else (report.margins if report else None)
    if m is None:
        return ["== smallness margins ==", "no growth data supplied", ""]
    return [
        "== smallness margins ==",
        f"gamma(alpha)  (lhs)      : {_fmt(m.lhs)}",
        f"rhs for |u| coefficient  : {_fmt(m.rhs_u)}",
        f"rhs for |v| coefficient  : {_fmt(m.rhs_v)}",
        f"product quotient         : {_fmt(m.quotient)}",
        f"margins satisfied        : {m.ok}",
        "",
    ]


def _solve_lines(report: SolveReport) -> list[str]:
    r = report.residuals
    return [
        "== solver ==",
        f"converged                : {report.converged}",
        f"diverged                 : {report.diverged}",
        f"iterations               : {report.iterations}",
        f"final iterate difference : {_fmt(report.diff_history[-1]) if report.diff_history else 'n/a'}",
        f"pde residual (interior)  : {_fmt(r.pde_residual)}",
        f"left bc defect           : {_fmt(r.left_bc_defect)}",
        f"right bc defect          : {_fmt(r.right_bc_defect)}",
        f"bc consistency           : {_fmt(r.bc_consistency)}",
        f"solvability defect       : {_fmt(r.solvability_defect)}",
        "",
    ]


def _conditions_lines(report: ConditionsReport) -> list[str]:
    lines = _margins_lines(report)
    lines += ["== sampling probes (evidence, not proof) =="]
    g = report.growth_samples
    if g is not None:
        lines += [
            f"growth envelope samples  : {g.samples}",
            f"violations               : {g.violations}",
            f"worst slack              : {_fmt(g.worst_slack)}",
        ]
    tp = report.trace_probe
    if tp is not None:
        lines += [
            f"trace level              : {_fmt(tp.trace_level)}",
            f"min range-escape defect  : {_fmt(tp.min_defect)}",
            f"max range-escape defect  : {_fmt(tp.max_defect)}",
        ]
    kp = report.kernel_probe
    if kp is not None:
        lines += [
            f"kernel level             : {_fmt(kp.kernel_level)}",
            f"kernel feedback min      : {_fmt(kp.min_inner)}",
            f"kernel feedback max      : {_fmt(kp.max_inner)}",
            f"strict sign              : {kp.strict_sign}",
        ]
    lines.append("")
    return lines


def _golden_lines(report: Section4Report) -> list[str]:
    lines = ["== golden checks =="]
    for c in report.checks:
        status = "pass" if c.passed else "FAIL"
        lines.append(
            f"[{status}] {c.name}: computed {_fmt(c.computed)} vs expected "
            f"{_fmt(c.expected)} (residual {_fmt(c.residual)}, tol {_fmt(c.tol)})"
        )
    lines.append("")
    lines += _margins_lines(None, margins=report.margins)
    lines += [
        "== kernel feedback sign (sampled) ==",
        f"min inner product        : {_fmt(report.sign_min)}",
        f"max inner product        : {_fmt(report.sign_max)}",
        "",
    ]
    lines += _solve_lines(report.solve)
    lines += ["== notes =="] + [f"- {note}" for note in report.notes] + [""]
    return lines


def _build_problem(cfg: RunConfig) -> tuple[ProblemSpec, GrowthSpec | None, dict]:
    if cfg.config_path:
        spec, growth, meta = parse_config(cfg.config_path)
        if cfg.grid_n is not None and cfg.grid_n != spec.grid_n:
            _validate_grid(spec.xi, cfg.grid_n)
            spec = ProblemSpec(
                ord=spec.ord, xi=spec.xi, a_op=spec.a_op, rhs=spec.rhs, grid_n=cfg.grid_n
            )
        return spec, growth, meta
    if cfg.builtin:
        if cfg.builtin not in BUILTINS:
            raise ConfigError(f"unknown builtin {cfg.builtin!r}; available: {sorted(BUILTINS)}")
        grid_n = cfg.grid_n if cfg.grid_n is not None else 256
        _validate_grid(0.25, grid_n)
        b = BUILTINS[cfg.builtin]
        return b.build(cfg.k, grid_n), b.growth(), {"problem": f"builtin:{cfg.builtin}", "k": cfg.k}
    raise ConfigError("no problem source: pass --builtin NAME or --config PATH")


def run(cfg: RunConfig) -> int:
    """Execute one flow; writes report.txt (and solution.csv for solve
    flows) into the output directory.  Never raises on valid input."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines: list[str] = [f"resbvp report: command = {cfg.command}"]
    exit_code = 0
    try:
        if cfg.command == "verify-example":
            if cfg.config_path and not cfg.builtin:
                raise ConfigError("verify-example runs on a builtin; pass --builtin NAME")
            name = cfg.builtin or "section4"
            if name not in BUILTINS:
                raise ConfigError(f"unknown builtin {name!r}; available: {sorted(BUILTINS)}")
            grid_n = cfg.grid_n if cfg.grid_n is not None else 4096
            _validate_grid(0.25, grid_n)
            report = verify_section4(cfg.k, grid_n, seed=cfg.seed)
            lines += [f"problem: builtin:{name} k={cfg.k} grid_n={grid_n}", ""]
            lines += _golden_lines(report)
            solve_grid = report.solve.element.source.n_intervals
            _write_solution_csv(
                out / "solution.csv", BUILTINS[name].build(cfg.k, solve_grid), report.solve
            )
            if not report.margins.ok:
                exit_code = 1
            elif not report.solve.converged:
                exit_code = 2
        else:
            spec, growth, meta = _build_problem(cfg)
            lines += [f"problem: {meta.get('problem', 'custom')} grid_n={spec.grid_n}", ""]
            lines += [
                "== problem ==",
                f"alpha                    : {_fmt(spec.ord.alpha)}",
                f"xi                       : {_fmt(spec.xi)}",
                f"dimension                : {spec.dim}",
                f"||A||                    : {_fmt(operator_norm(spec.a_op))}",
                "",
            ]
            rdata = build_resonance(spec)
            lines += _resonance_lines(rdata)
            # The margin triple appears whenever growth data exists, on
            # every flow and every outcome.
            if growth is not None and cfg.command != "check-hypotheses":
                lines += _margins_lines(None, margins=check_growth_margins(spec.ord, rdata, growth))
            if cfg.command == "analyze":
                sr = verify_structure(spec, rdata, samples=5, seed=cfg.seed)
                lines += [
                    "== structural identities ==",
                    f"projector identity        : {_fmt(sr.identity_residual)}",
                    f"obstruction idempotency   : {_fmt(sr.obstruction_idem_residual)}",
                    f"obstruction on solvables  : {_fmt(sr.obstruction_on_image_residual)}",
                    f"kernel elements fixed     : {_fmt(sr.kernel_fix_residual)}",
                    f"derivative round trip     : {_fmt(sr.left_inverse_residual)}",
                    f"round trip (t in [.1,.9]) : {_fmt(sr.left_inverse_window)}",
                    "",
                ]
            elif cfg.command == "solve":
                opts = SolveOptions(relax=cfg.damping, max_iter=cfg.max_iter, seed=cfg.seed)
                report = solve(spec, rdata, opts)
                lines += _solve_lines(report)
                _write_solution_csv(out / "solution.csv", spec, report)
                if not report.converged:
                    exit_code = 2
            elif cfg.command == "check-hypotheses":
                creport = check_all(spec, rdata, growth, seed=cfg.seed) if growth else None
                if creport is None:
                    lines += _margins_lines(None)
                else:
                    lines += _conditions_lines(creport)
                    if not creport.margins.ok:
                        exit_code = 1
    except NonResonantError as exc:
        lines += ["", f"error: {exc}"]
        exit_code = 1
    except (ConfigError, RhsEvaluationError, ValueError, OSError) as exc:
        lines += ["", f"error: {exc}"]
        exit_code = 3

    text = "\n".join(lines) + "\n"
    (out / "report.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return exit_code


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="resbvp",
        description="Resonant fractional three-point boundary value problem toolkit",
    )
    parser.add_argument("command", choices=_COMMANDS)
    parser.add_argument("--config", dest="config_path", default=None, help="problem file path")
    parser.add_argument("--builtin", default=None, help="builtin problem name (e.g. section4)")
    parser.add_argument("--k", type=int, default=1, help="block count for builtin problems")
    parser.add_argument("--grid", dest="grid_n", type=int, default=None, help="grid subintervals")
    parser.add_argument("--damping", type=float, default=0.5, help="relaxation factor in (0, 1]")
    parser.add_argument("--max-iter", dest="max_iter", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", dest="out_dir", default=".", help="output directory")
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(
            command=args.command,
            builtin=args.builtin,
            k=args.k,
            config_path=args.config_path,
            grid_n=args.grid_n,
            damping=args.damping,
            max_iter=args.max_iter,
            seed=args.seed,
            out_dir=args.out_dir,
        )
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
