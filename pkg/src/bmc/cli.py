"""Command-line front end.

Subcommands:
  sweep     capacity/fidelity parameter sweeps written as deterministic CSV,
            with ready-made presets fig1/fig2/fig3 and optional plot script
  validate  closed-form output states cross-checked against the numerical
            integrator over a grid of inputs and times
  optimal   search for the signal strength that maximizes the
            fidelity-capacity product

Exit codes: 0 success, 1 usage or configuration error, 2 validation failed
(including insufficient truncation), 3 no interior optimum.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import analytic, capacity, fock, lindblad
from .capacity import OptimalSignalResult, capacity_point, theta_at_nbar
from .errors import (
    ConfigError,
    InvalidDimensionError,
    InvalidParameterError,
    InvalidTimeError,
    TruncationError,
)
from .lindblad import ChannelParams

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION_FAILED = 2
EXIT_NO_OPTIMUM = 3

DEFAULT_DIM = 50
DEFAULT_T_GRID = (0.5, 1.0, 2.0, 5.0)
DEFAULT_ETAS = (0j, 0.5 + 0j, 1.0 + 0j, 1.0 + 1.0j)
DEFAULT_TIMES = (0.1, 0.5, 1.0, 5.0, 20.0)
TRACE_DISTANCE_THRESHOLD = 1e-6
ENTROPY_GAP_THRESHOLD = 1e-6

CSV_HEADER = "swept_value,t,chi_bits,avg_fidelity,theta"

_SWEPT_CHOICES = ("n_bar", "beta_rate", "gamma", "t")

# Reference parameter values used when neither flags nor config supply them.
_DEFAULT_GAMMA = 0.1
_DEFAULT_BETA = 0.01
_DEFAULT_NBAR = 5.0


def default_dim() -> int:
    """Truncation dimension, overridable through BMC_DEFAULT_DIM."""
    raw = os.environ.get("BMC_DEFAULT_DIM")
    if raw is None:
        return DEFAULT_DIM
    try:
        dim = int(raw)
    except ValueError:
        raise ConfigError(f"BMC_DEFAULT_DIM must be an integer, got {raw!r}") from None
    if dim < 2:
        raise ConfigError(f"BMC_DEFAULT_DIM must be >= 2, got {dim}")
    return dim


@dataclass(frozen=True)
class SweepSpec:
    """One swept parameter with its range plus fixed values for the rest."""

    swept: str
    lo: float
    hi: float
    steps: int
    fixed: ChannelParams
    t_grid: tuple[float, ...] = DEFAULT_T_GRID

    def __post_init__(self):
        if self.swept not in _SWEPT_CHOICES:
            raise InvalidParameterError(
                f"swept must be one of {_SWEPT_CHOICES}, got {self.swept!r}"
            )
        if not self.lo < self.hi:
            raise InvalidParameterError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.steps < 2:
            raise InvalidParameterError(f"steps must be >= 2, got {self.steps}")
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))
        for t in self.t_grid:
            if not math.isfinite(t) or t < 0.0:
                raise InvalidTimeError(f"t_grid values must be >= 0, got {t}")
        if self.swept == "t":
            if self.lo < 0.0:
                raise InvalidTimeError("swept times must be >= 0")
        else:
            # Endpoint construction exercises the full parameter validation.
            replace(self.fixed, **{self.swept: float(self.lo)})
            replace(self.fixed, **{self.swept: float(self.hi)})


def preset_spec(name: str) -> SweepSpec:
    """Shipped figure presets over the reference channel parameters."""
    base = ChannelParams(gamma=_DEFAULT_GAMMA, beta_rate=_DEFAULT_BETA, n_bar=_DEFAULT_NBAR)
    if name == "fig1":
        return SweepSpec("n_bar", 1.0, 10.0, 10, base)
    if name == "fig2":
        return SweepSpec("beta_rate", 0.01, 0.1, 10, base)
    if name == "fig3":
        return SweepSpec("gamma", 0.1, 0.5, 5, base)
    raise ConfigError(f"unknown preset {name!r}")


def sweep_rows(spec: SweepSpec) -> list[tuple[float, capacity.CapacityPoint]]:
    """Evaluate the sweep, ordered by (swept value, t)."""
    values = np.linspace(spec.lo, spec.hi, spec.steps)
    rows = []
    if spec.swept == "t":
        for v in values:
            rows.append((float(v), capacity_point(spec.fixed, float(v))))
    else:
        for v in values:
            params = replace(spec.fixed, **{spec.swept: float(v)})
            for t in spec.t_grid:
                rows.append((float(v), capacity_point(params, t)))
    return rows


def write_sweep_csv(rows, out_path) -> Path:
    out_path = Path(out_path)
    with open(out_path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for value, point in rows:
            fh.write(
                f"{value:.12e},{point.t:.12e},{point.chi:.12e},"
                f"{point.avg_fidelity:.12e},{point.theta:.12e}\n"
            )
    return out_path


_PLOT_TEMPLATE = '''#!/usr/bin/env python3
"""Plot the capacity sweep stored in {csv_name} (self-contained)."""
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

csv_path = Path(__file__).resolve().parent / "{csv_name}"
by_t = defaultdict(list)
with open(csv_path) as fh:
    for row in csv.DictReader(fh):
        by_t[float(row["t"])].append(
            (float(row["swept_value"]), float(row["chi_bits"]),
             float(row["avg_fidelity"]), float(row["theta"]))
        )

fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 9))
labels = ("capacity [bits]", "average fidelity", "fidelity x capacity")
for t in sorted(by_t):
    rows = sorted(by_t[t])
    xs = [r[0] for r in rows]
    for ax, col in zip(axes, (1, 2, 3)):
        ax.plot(xs, [r[col] for r in rows], marker="o", label=f"t = {{t:g}} s")
for ax, label in zip(axes, labels):
    ax.set_ylabel(label)
    ax.grid(True, alpha=0.3)
axes[0].legend()
axes[-1].set_xlabel("swept value")
out = csv_path.with_suffix(".png")
fig.savefig(out, dpi=150, bbox_inches="tight")
print(f"wrote {{out}}")
'''


def write_plot_script(csv_path) -> Path:
    csv_path = Path(csv_path)
    script_path = csv_path.with_name(csv_path.stem + "_plot.py")
    script_path.write_text(_PLOT_TEMPLATE.format(csv_name=csv_path.name))
    return script_path


def cmd_sweep(spec: SweepSpec, out_path, plot: bool = False) -> Path:
    """Run a sweep and write the CSV (plus a sibling plot script if asked)."""
    path = write_sweep_csv(sweep_rows(spec), out_path)
    if plot:
        write_plot_script(path)
    return path


@dataclass(frozen=True)
class WorstCase:
    """Largest deviations seen in a validation run and where they occurred."""

    max_trace_distance: float
    trace_point: tuple[complex, float]
    max_entropy_gap: float
    entropy_point: tuple[complex, float]


@dataclass(frozen=True)
class ValidationReport:
    """Analytic-vs-integrator comparison over a grid of (eta, t) points."""

    grid: tuple[tuple[complex, float], ...]
    trace_distances: tuple[float, ...]
    entropy_gaps: tuple[float, ...]
    worst_case: WorstCase
    passed: bool


def run_validation(
    params: ChannelParams,
    etas=DEFAULT_ETAS,
    times=DEFAULT_TIMES,
    dim: int | None = None,
    trace_tol: float = TRACE_DISTANCE_THRESHOLD,
    entropy_tol: float = ENTROPY_GAP_THRESHOLD,
    opts: lindblad.IntegratorOptions | None = None,
) -> ValidationReport:
    """Compare integrated against closed-form output states on a grid.

    For every input amplitude the trajectory is integrated once and sampled
    at all requested times; each sample is compared by trace distance to the
    closed-form displaced thermal state, and its eigenvalue entropy to the
    closed-form entropy of the thermal occupation.
    """
    if params.m_squeeze != 0:
        raise InvalidParameterError(
            "validation compares against closed forms derived for m_squeeze = 0; "
            "rerun with --m-re 0 --m-im 0"
        )
    dim = default_dim() if dim is None else int(dim)
    etas = tuple(complex(e) for e in etas)
    times = tuple(float(t) for t in times)
    for eta in etas:
        loss = fock.coherent_truncation_loss(eta, dim)
        if loss > fock.COHERENT_LOSS_TOL:
            raise TruncationError(
                f"input |{eta}> loses weight {loss:.3e} at dim={dim}; "
                f"suggest dim >= {fock.suggested_dim(abs(eta) ** 2, abs(eta) ** 2)}"
            )

    ordered_times = sorted(set(times))
    grid: list[tuple[complex, float]] = []
    tds: list[float] = []
    gaps: list[float] = []
    for eta in etas:
        rho0 = fock.projector(fock.coherent_state(eta, dim))
        trajectory = dict(lindblad.evolve_trajectory(rho0, params, ordered_times, opts))
        for t in times:
            numeric = trajectory[t]
            exact = analytic.to_density_matrix(
                analytic.evolve_coherent_analytic(eta, params, t), dim
            )
            grid.append((eta, t))
            tds.append(fock.trace_distance(numeric, exact))
            gaps.append(
                abs(
                    fock.von_neumann_entropy(numeric)
                    - capacity.g_entropy(analytic.beta_t(params, t))
                )
            )

    i_td = max(range(len(tds)), key=tds.__getitem__)
    i_gap = max(range(len(gaps)), key=gaps.__getitem__)
    worst = WorstCase(
        max_trace_distance=tds[i_td],
        trace_point=grid[i_td],
        max_entropy_gap=gaps[i_gap],
        entropy_point=grid[i_gap],
    )
    passed = all(d <= trace_tol for d in tds) and all(g <= entropy_tol for g in gaps)
    return ValidationReport(
        grid=tuple(grid),
        trace_distances=tuple(tds),
        entropy_gaps=tuple(gaps),
        worst_case=worst,
        passed=passed,
    )


def print_validation_table(
    report: ValidationReport,
    trace_tol: float = TRACE_DISTANCE_THRESHOLD,
    entropy_tol: float = ENTROPY_GAP_THRESHOLD,
    file=None,
) -> None:
    file = file if file is not None else sys.stdout
    print(f"{'eta':>12}  {'t [s]':>8}  {'trace_dist':>12}  {'entropy_gap':>12}  status", file=file)
    for (eta, t), td, gap in zip(report.grid, report.trace_distances, report.entropy_gaps):
        ok = td <= trace_tol and gap <= entropy_tol
        print(
            f"{_format_complex(eta):>12}  {t:>8g}  {td:>12.3e}  {gap:>12.3e}  "
            f"{'ok' if ok else 'FAIL'}",
            file=file,
        )
    worst = report.worst_case
    print(
        f"worst trace distance {worst.max_trace_distance:.3e} at "
        f"(eta={_format_complex(worst.trace_point[0])}, t={worst.trace_point[1]:g}); "
        f"worst entropy gap {worst.max_entropy_gap:.3e} at "
        f"(eta={_format_complex(worst.entropy_point[0])}, t={worst.entropy_point[1]:g})",
        file=file,
    )
    print("validation PASSED" if report.passed else "validation FAILED", file=file)


def _format_complex(z: complex) -> str:
    if z.imag == 0:
        return f"{z.real:g}"
    return f"{z.real:g}{z.imag:+g}j"


def cmd_validate(
    params: ChannelParams,
    etas=DEFAULT_ETAS,
    times=DEFAULT_TIMES,
    dim: int | None = None,
    trace_tol: float = TRACE_DISTANCE_THRESHOLD,
    entropy_tol: float = ENTROPY_GAP_THRESHOLD,
) -> ValidationReport:
    """Run the oracle grid and print the comparison table."""
    report = run_validation(
        params, etas=etas, times=times, dim=dim,
        trace_tol=trace_tol, entropy_tol=entropy_tol,
    )
    print_validation_table(report, trace_tol, entropy_tol)
    return report


def write_theta_curve(
    params: ChannelParams, t: float, search_max: float, out_path, points: int = 200
) -> Path:
    """Emit a log-spaced n_bar,theta curve as CSV."""
    out_path = Path(out_path)
    grid = np.geomspace(1e-2, search_max, points)
    with open(out_path, "w", newline="\n") as fh:
        fh.write("n_bar,theta\n")
        for n in grid:
            fh.write(f"{n:.12e},{theta_at_nbar(params, t, float(n)):.12e}\n")
    return out_path


def cmd_optimal(
    params: ChannelParams,
    t: float,
    search_max: float = 1000.0,
    curve_path=None,
    file=None,
) -> OptimalSignalResult:
    """Run the optimal-signal search, print the result, optionally emit a curve."""
    file = file if file is not None else sys.stdout
    result = capacity.optimal_nbar(params, t, search_max)
    if not result.interior_optimum:
        print(
            f"no interior optimum: theta is monotone in n_bar over (0, {search_max:g}] "
            f"at t={t:g} (it keeps growing with the signal)",
            file=file,
        )
        return result
    print(f"n_bar_opt          = {result.n_bar_opt:.9g}", file=file)
    print(f"theta(n_bar_opt)   = {result.theta_at_opt:.9g} bits", file=file)
    print(f"criterion residual = {result.criterion_residual:.9g}", file=file)
    print(
        "second-order check =",
        "maximum confirmed" if result.second_order_ok else "NOT confirmed",
        file=file,
    )
    if curve_path is not None:
        path = write_theta_curve(params, t, search_max, curve_path)
        print(f"theta curve written to {path}", file=file)
    return result


# --- configuration files -----------------------------------------------------

_PARAM_KEYS = ("gamma", "beta", "n_bar", "m_re", "m_im")
_RUN_KEYS = ("t", "dim")
_SWEEP_KEYS = ("swept", "lo", "hi", "steps", "t_grid")
_ALL_KEYS = _PARAM_KEYS + _RUN_KEYS + _SWEEP_KEYS


def _convert_key(key: str, raw: str, where: str):
    try:
        if key == "swept":
            if raw not in _SWEPT_CHOICES:
                raise ValueError(f"must be one of {', '.join(_SWEPT_CHOICES)}")
            return raw
        if key == "steps" or key == "dim":
            return int(raw)
        if key == "t_grid":
            return tuple(float(tok) for tok in raw.split(",") if tok.strip())
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from None


def load_config(path) -> dict:
    """Parse a `key = value` config file into a typed mapping."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        where = f"{path}:{lineno}"
        if "=" not in stripped:
            raise ConfigError(f"{where}: expected 'key = value', got {line.strip()!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _ALL_KEYS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        values[key] = _convert_key(key, raw, where)
    return values


def _params_from_mapping(values: dict) -> ChannelParams:
    m = complex(values.get("m_re", 0.0), values.get("m_im", 0.0))
    try:
        return ChannelParams(
            gamma=values.get("gamma", _DEFAULT_GAMMA),
            beta_rate=values.get("beta", _DEFAULT_BETA),
            m_squeeze=m,
            n_bar=values.get("n_bar", _DEFAULT_NBAR),
        )
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from None


def _sweep_from_mapping(values: dict) -> SweepSpec:
    missing = [k for k in ("swept", "lo", "hi", "steps") if k not in values]
    if missing:
        raise ConfigError(f"sweep definition missing keys: {', '.join(missing)}")
    try:
        return SweepSpec(
            swept=values["swept"],
            lo=values["lo"],
            hi=values["hi"],
            steps=values["steps"],
            fixed=_params_from_mapping(values),
            t_grid=values.get("t_grid", DEFAULT_T_GRID),
        )
    except (InvalidParameterError, InvalidTimeError) as exc:
        raise ConfigError(str(exc)) from None


def parse_config(path):
    """Read a config file as either a SweepSpec or plain ChannelParams.

    Files containing any of the sweep keys build a SweepSpec; otherwise the
    parameter keys (with reference defaults for the absent ones) build a
    ChannelParams. CLI flags take precedence over file values.
    """
    values = load_config(path)
    if any(k in values for k in _SWEEP_KEYS):
        return _sweep_from_mapping(values)
    return _params_from_mapping(values)


# --- argument parsing ---------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # Usage problems must exit with code 1, not argparse's default 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_param_flags(parser):
    parser.add_argument("--gamma", type=float, help="decay rate in 1/s")
    parser.add_argument("--beta", type=float, help="thermal noise rate in 1/s")
    parser.add_argument("--nbar", type=float, help="mean input photon number")
    parser.add_argument("--m-re", type=float, help="Re of the reservoir squeezing")
    parser.add_argument("--m-im", type=float, help="Im of the reservoir squeezing")
    parser.add_argument("--config", type=Path, help="key = value configuration file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="bmc",
        description="Capacity and fidelity of a lossy bosonic Markov channel.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="parameter sweep to CSV")
    p_sweep.add_argument("--preset", choices=("fig1", "fig2", "fig3"))
    p_sweep.add_argument("--swept", choices=_SWEPT_CHOICES)
    p_sweep.add_argument("--lo", type=float)
    p_sweep.add_argument("--hi", type=float)
    p_sweep.add_argument("--steps", type=int)
    p_sweep.add_argument("--t-grid", help="comma-separated times in s")
    p_sweep.add_argument("--out", type=Path, required=True, help="output CSV path")
    p_sweep.add_argument("--plot", action="store_true", help="emit a sibling plot script")
    _add_param_flags(p_sweep)

    p_val = sub.add_parser("validate", help="integrator-vs-closed-form check")
    p_val.add_argument("--etas", help="comma-separated complex input amplitudes")
    p_val.add_argument("--times", help="comma-separated times in s")
    p_val.add_argument("--dim", type=int, help="Fock truncation dimension")
    p_val.add_argument("--trace-tol", type=float, default=TRACE_DISTANCE_THRESHOLD)
    p_val.add_argument("--entropy-tol", type=float, default=ENTROPY_GAP_THRESHOLD)
    _add_param_flags(p_val)

    p_opt = sub.add_parser("optimal", help="signal strength maximizing theta")
    p_opt.add_argument("--t", type=float, help="channel time in s (required, > 0)")
    p_opt.add_argument("--search-max", type=float, default=1000.0)
    p_opt.add_argument("--curve", action="store_true", help="emit n_bar,theta CSV to --out")
    p_opt.add_argument("--out", type=Path, help="curve CSV path (with --curve)")
    _add_param_flags(p_opt)

    return parser


def _merged_mapping(args) -> dict:
    values = load_config(args.config) if args.config else {}
    overrides = {
        "gamma": args.gamma,
        "beta": args.beta,
        "n_bar": args.nbar,
        "m_re": getattr(args, "m_re", None),
        "m_im": getattr(args, "m_im", None),
    }
    for key, val in overrides.items():
        if val is not None:
            values[key] = val
    return values


def _params_from_args(args) -> ChannelParams:
    return _params_from_mapping(_merged_mapping(args))


def _parse_float_list(raw: str, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in raw.split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"cannot parse {what} list {raw!r}") from None


def _parse_complex_list(raw: str, what: str) -> tuple[complex, ...]:
    try:
        return tuple(complex(tok.strip()) for tok in raw.split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"cannot parse {what} list {raw!r}") from None


def _run_sweep(args) -> int:
    # Precedence: preset < config file < flags, field by field.
    base = preset_spec(args.preset) if args.preset else None
    values = _merged_mapping(args)
    if args.t_grid is not None:
        values["t_grid"] = _parse_float_list(args.t_grid, "t_grid")
    for key, val in (("swept", args.swept), ("lo", args.lo), ("hi", args.hi), ("steps", args.steps)):
        if val is not None:
            values[key] = val
    if base is not None:
        defaults = {
            "swept": base.swept,
            "lo": base.lo,
            "hi": base.hi,
            "steps": base.steps,
            "t_grid": base.t_grid,
            "gamma": base.fixed.gamma,
            "beta": base.fixed.beta_rate,
            "n_bar": base.fixed.n_bar,
        }
        values = {**defaults, **values}
    if not any(k in values for k in _SWEEP_KEYS):
        raise ConfigError(
            "sweep needs --preset, a config sweep definition, or --swept/--lo/--hi/--steps"
        )
    spec = _sweep_from_mapping(values)
    path = cmd_sweep(spec, args.out, plot=args.plot)
    print(f"wrote {path}")
    return EXIT_OK


def _run_validate(args) -> int:
    params = _params_from_args(args)
    values = _merged_mapping(args)
    dim = args.dim if args.dim is not None else values.get("dim")
    etas = _parse_complex_list(args.etas, "eta") if args.etas else DEFAULT_ETAS
    times = _parse_float_list(args.times, "times") if args.times else DEFAULT_TIMES
    try:
        report = cmd_validate(
            params,
            etas=etas,
            times=times,
            dim=dim,
            trace_tol=args.trace_tol,
            entropy_tol=args.entropy_tol,
        )
    except TruncationError as exc:
        print(f"truncation insufficient: {exc}", file=sys.stderr)
        return EXIT_VALIDATION_FAILED
    return EXIT_OK if report.passed else EXIT_VALIDATION_FAILED


def _run_optimal(args) -> int:
    values = _merged_mapping(args)
    t = args.t if args.t is not None else values.get("t")
    if t is None:
        raise ConfigError("optimal needs --t (or a config t value)")
    if args.curve and args.out is None:
        raise ConfigError("--curve needs --out for the CSV path")
    params = _params_from_args(args)
    result = cmd_optimal(
        params,
        float(t),
        search_max=args.search_max,
        curve_path=args.out if args.curve else None,
    )
    return EXIT_OK if result.interior_optimum else EXIT_NO_OPTIMUM


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"sweep": _run_sweep, "validate": _run_validate, "optimal": _run_optimal}
    try:
        return handlers[args.command](args)
    except (
        ConfigError,
        InvalidParameterError,
        InvalidTimeError,
        InvalidDimensionError,
    ) as exc:
        print(f"bmc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"bmc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
