"""Command line driver: every checker and construction as a CSV-emitting subcommand.

Usage::

    besselcmo [--config FILE] [--out DIR] [--seed N] SUBCOMMAND [options]

Configuration precedence is built-in defaults, then the config file, then
command line flags.  The config file is flat ``key = value`` text; ``#``
starts a comment.  Recognized keys::

    lambda           comma-separated list of positive reals   (1)
    p                exponent in (1, inf)                      (2)
    n                number of grid cells                      (256)
    xmax             grid bound                                (16)
    seed             integer seed for random sweeps            (0)
    output_dir       directory for CSV files                   (.)
    symbol           bump | log | step | path to a function CSV (bump)
    samples          random samples per lambda                 (1000)
    k                number of singular values to report       (100)
    quad_rel_tol, quad_max_subdiv, K1, K2, K2_tilde   kernel settings

Every CSV starts with one ``# provenance`` comment line (package and
dependency versions, subcommand, seed and a hash of the resolved
configuration) followed by a header row.  Output is a deterministic
function of the resolved configuration.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .compactness import FamilyProbe, compactness_probe, image_family, unit_probes
from .constructions import (
    ApproximationParams,
    TestFunctionParams,
    adapted_test_function,
    build_g_eps,
    choose_m_eps,
    lemma52_profile,
    mollify,
)
from .errors import BesselError, ConfigurationError
from .funcspace import GridFunction, bmo_norm_estimate, cmo_conditions, dyadic_intervals
from .kernel import (
    KernelConfig,
    bound_holder_check,
    bound_lower_check,
    bound_upper_check,
    kernel_eval,
    near_diagonal_check,
)
from .measure import Interval, doubling_check, sharpness_lower_witness, sharpness_upper_witness
from .operators import (
    TruncationSpec,
    commutator_apply,
    discretize_commutator,
    geometric_grid,
    riesz_truncated,
    singular_values,
)
from .symbols import SYMBOLS, rasterize_symbol

__all__ = ["RunConfig", "load_config", "main", "read_grid_function", "write_grid_function"]

USAGE_EXIT = 2


@dataclass(frozen=True)
class RunConfig:
    lambda_list: tuple = (1.0,)
    p: float = 2.0
    n: int = 256
    X_max: float = 16.0
    kernel: KernelConfig = field(default_factory=KernelConfig)
    seed: int = 0
    output_dir: str = "."
    symbol: str = "bump"
    samples: int = 1000
    k: int = 100

    def __post_init__(self):
        if not self.lambda_list or any(not (lam > 0 and math.isfinite(lam)) for lam in self.lambda_list):
            raise ConfigurationError("lambda must be a nonempty list of positive reals")
        if not 1 < self.p < math.inf:
            raise ConfigurationError("p must lie in (1, inf)")
        if self.n < 2 or not self.X_max > 0:
            raise ConfigurationError("need n >= 2 and xmax > 0")
        if self.samples < 1 or self.k < 1:
            raise ConfigurationError("samples and k must be positive")

    def digest(self) -> str:
        """Hash of every setting that can change the numbers (not the output directory)."""
        settings = asdict(self)
        del settings["output_dir"]
        payload = json.dumps(settings, sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


_KERNEL_KEYS = {"quad_rel_tol": float, "quad_max_subdiv": int, "K1": float, "K2": float, "K2_tilde": float}
_RUN_KEYS = {
    "lambda": ("lambda_list", lambda s: tuple(float(v) for v in s.split(",") if v.strip())),
    "p": ("p", float),
    "n": ("n", int),
    "xmax": ("X_max", float),
    "seed": ("seed", int),
    "output_dir": ("output_dir", str),
    "symbol": ("symbol", str),
    "samples": ("samples", int),
    "k": ("k", int),
}


def load_config(path: str | None) -> dict:
    """Parse a flat ``key = value`` file into ``RunConfig`` keyword overrides."""
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path!r}: {exc}") from exc
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config file {path!r}: {exc}") from exc
    out, kernel = {}, {}
    for key, raw in parser["run"].items():
        if key not in _KERNEL_KEYS and key not in _RUN_KEYS:
            raise ConfigurationError(f"unknown config key {key!r}")
        try:
            if key in _KERNEL_KEYS:
                kernel[key] = _KERNEL_KEYS[key](raw)
            else:
                name, conv = _RUN_KEYS[key]
                out[name] = conv(raw)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key!r}: {raw!r}") from exc
    if kernel:
        out["kernel"] = kernel
    return out


def _resolve(args) -> RunConfig:
    over = load_config(args.config)
    kernel_over = over.pop("kernel", {})
    flags = {
        "lambda_list": tuple(args.lam) if args.lam else None,
        "p": args.p,
        "n": args.n,
        "X_max": args.xmax,
        "seed": args.seed,
        "output_dir": args.out,
        "symbol": args.symbol,
        "samples": args.samples,
        "k": args.k,
    }
    over.update({k: v for k, v in flags.items() if v is not None})
    try:
        kcfg = KernelConfig(**kernel_over)
    except BesselError as exc:
        raise ConfigurationError(str(exc)) from exc
    return RunConfig(kernel=kcfg, **over)


# CSV helpers


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17e}"
    return str(v)


class _Writer:
    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.dir = Path(cfg.output_dir)
        self.written = []

    def provenance(self) -> str:
        return (
            f"# provenance: besselcmo={__version__} numpy={np.__version__} scipy={scipy.__version__} "
            f"command={self.command} seed={self.cfg.seed} config_sha256={self.cfg.digest()}"
        )

    def write(self, name: str, header, rows):
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / name
        with open(path, "w", newline="") as fh:
            fh.write(self.provenance() + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        self.written.append(path)
        return path


def write_grid_function(writer: _Writer, name: str, f: GridFunction):
    """``(breakpoint, value)`` rows; the last row carries the tail value."""
    rows = list(zip(f.breakpoints[:-1], f.values)) + [(f.breakpoints[-1], f.tail_value)]
    return writer.write(name, ["breakpoint", "value"], rows)


def read_grid_function(path) -> GridFunction:
    """Inverse of :func:`write_grid_function`; comment lines are skipped."""
    try:
        with open(path) as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
    except OSError as exc:
        raise ConfigurationError(f"cannot read function file {path!r}: {exc}") from exc
    rows = list(csv.reader(lines))
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    except (ValueError, IndexError) as exc:
        raise ConfigurationError(f"malformed function file {path!r}") from exc
    if len(data) < 2:
        raise ConfigurationError(f"function file {path!r} needs at least two rows")
    return GridFunction(data[:, 0], data[:-1, 1], tail_value=data[-1, 1])


def _symbol(cfg: RunConfig, breakpoints) -> GridFunction:
    if cfg.symbol in SYMBOLS:
        return rasterize_symbol(cfg.symbol, breakpoints)
    return read_grid_function(cfg.symbol)


def _symbol_tag(cfg: RunConfig) -> str:
    return cfg.symbol if cfg.symbol in SYMBOLS else Path(cfg.symbol).stem


# subcommands


def cmd_measure_check(cfg: RunConfig, out: _Writer):
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for lam in cfg.lambda_list:
        xs = np.exp(rng.uniform(-5, 5, cfg.samples))
        ts = np.exp(rng.uniform(-5, 5, cfg.samples))
        for x, t in zip(xs, ts):
            ratio, lo_ok, hi_ok = doubling_check(x, x * t, lam)
            rows.append((x, x * t, lam, ratio, lo_ok, hi_ok))
    out.write("measure_check.csv", ["x", "r", "lambda", "ratio", "lower_ok", "upper_ok"], rows)
    wit = [(0.5, "upper_ratio_r_eq_x", sharpness_upper_witness(0.5), 2.0)]
    for lam in sorted(set(cfg.lambda_list) | {0.1, 0.3, 0.5}):
        if lam <= 0.5:
            wit.append((lam, "lower_gap_r_eq_half_x", sharpness_lower_witness(lam), 0.0))
    out.write("measure_witnesses.csv", ["lambda", "witness", "value", "threshold"], wit)
    return 0


def cmd_kernel_table(cfg: RunConfig, out: _Writer):
    rows = []
    s_grid = np.geomspace(1e-3, 0.999, 25)
    for lam in cfg.lambda_list:
        for y in (0.5, 1.0, 2.0):
            for s in s_grid:
                z = y * s
                kv = kernel_eval(y, z, lam, cfg.kernel)
                upper = bound_upper_check(y, z, lam, cfg.kernel)
                lower = bound_lower_check(y, z, lam, cfg.kernel)
                holder = bound_holder_check(y, z, z + 0.25 * (y - z), lam, cfg.kernel)
                near = near_diagonal_check(y, z, lam, cfg.kernel) if s > cfg.kernel.K2 else ""
                rows.append((y, z, lam, kv.value, kv.est_error, upper, lower, holder, near))
    out.write(
        "kernel_table.csv",
        ["y", "z", "lambda", "kernel", "est_error", "upper_ratio", "lower_ratio", "holder_ratio", "near_defect"],
        rows,
    )
    return 0


def cmd_commutator_apply(cfg: RunConfig, out: _Writer):
    bp = geometric_grid(cfg.n, cfg.X_max)
    b = _symbol(cfg, bp)
    f = GridFunction.indicator(0.0, 1.0)
    eps = 0.5 * float(np.min(np.diff(bp)))
    spec = TruncationSpec(eps, cfg.X_max)
    rows = []
    points = 0.5 * (bp[:-1] + bp[1:])
    for lam in cfg.lambda_list:
        for x in points:
            fused = commutator_apply(b, f, x, spec, lam, cfg.kernel)
            tf = riesz_truncated(f, x, spec, lam, cfg.kernel)
            tbf = riesz_truncated(b * f, x, spec, lam, cfg.kernel)
            rows.append((lam, x, fused, b(x) * tf, tbf))
    out.write(f"commutator_{_symbol_tag(cfg)}.csv", ["lambda", "x", "commutator", "b_x_Tf", "T_bf"], rows)
    return 0


def cmd_spectrum(cfg: RunConfig, out: _Writer):
    bp = geometric_grid(cfg.n, cfg.X_max)
    b = _symbol(cfg, bp)
    rows = []
    for lam in cfg.lambda_list:
        M = discretize_commutator(b, cfg.n, cfg.X_max, None, lam, cfg.kernel)
        s = singular_values(M, min(cfg.k, cfg.n))
        rows += [(lam, i + 1, v, v / s[0] if s[0] > 0 else 0.0) for i, v in enumerate(s)]
    out.write(f"spectrum_{_symbol_tag(cfg)}.csv", ["lambda", "index", "sigma", "sigma_over_sigma1"], rows)
    return 0


def cmd_fk_report(cfg: RunConfig, out: _Writer):
    bp = geometric_grid(cfg.n, cfg.X_max)
    b = _symbol(cfg, bp)
    rows = []
    for lam in cfg.lambda_list:
        M = discretize_commutator(b, cfg.n, cfg.X_max, None, lam, cfg.kernel)
        probes = unit_probes(bp, lam, cfg.p, 16, seed=cfg.seed)
        fam = FamilyProbe(image_family(M, probes), cfg.p, lam)
        M_list = cfg.X_max * 2.0 ** -np.arange(6, 0, -1)
        rho_list = 2.0 ** -np.arange(0, 7)
        rep = compactness_probe(fam, M_list, rho_list, M, min(cfg.k, cfg.n))
        rows.append((lam, "bound", "", rep.uniform_bound))
        rows += [(lam, "tail", m, v) for m, v in rep.tail_profile]
        rows += [(lam, "modulus", r, v) for r, v in rep.modulus_profile]
        rows += [(lam, "sigma", i + 1, v) for i, v in enumerate(rep.sv_profile)]
    out.write(f"fk_report_{_symbol_tag(cfg)}.csv", ["lambda", "section", "parameter", "value"], rows)
    return 0


def cmd_cmo_check(cfg: RunConfig, out: _Writer):
    bp = geometric_grid(cfg.n, cfg.X_max)
    f = _symbol(cfg, bp)
    rows = []
    scales = 2.0 ** np.arange(-12, 1, 2)
    R_list = cfg.X_max * 2.0 ** -np.arange(8, 1, -1)
    for lam in cfg.lambda_list:
        res = cmo_conditions(f, lam, scales, R_list, depth=8)
        rows += [(lam, "i", a, v) for a, v in zip(res.small_scales, res.cond_i)]
        rows += [(lam, "ii", a, v) for a, v in zip(res.large_scales, res.cond_ii)]
        rows += [(lam, "iii", R, v) for R, v in zip(res.R_list, res.cond_iii)]
    out.write(f"cmo_{_symbol_tag(cfg)}.csv", ["lambda", "condition", "parameter", "value"], rows)
    return 0


APPROX_LEVELS = ((1, 2), (2, 3), (3, 4))
APPROX_RASTER = 3 * 2 ** 14


def cmd_approximate(cfg: RunConfig, out: _Writer):
    # a fine grid whose cells are not dyadic, so the family cells never align with it
    f = _symbol(cfg, np.linspace(0.0, cfg.X_max, APPROX_RASTER + 1))
    rows = []
    for lam in cfg.lambda_list:
        for i, j in APPROX_LEVELS:
            base = ApproximationParams(i, j, j - 1, j + 1)
            m = max(choose_m_eps(f, base, lam, 1e-3), math.ceil(math.log2(cfg.X_max)) + 1)
            params = replace(base, m_eps=m, depth=m)
            g, h = build_g_eps(f, params, lam)
            lo, hi = dyadic_intervals(0.0, 2.0 ** (m + 1), 10)
            fam = [Interval.from_endpoints(a, c) for a, c in zip(lo, hi)]
            dist = bmo_norm_estimate(f - g, fam, lam)
            try:
                smooth = mollify(h, params.mollifier_width) + g.tail_value
                dist_smooth = bmo_norm_estimate(f - smooth, fam, lam)
            except ConfigurationError:
                # too many jumps per mollifier window at this resolution
                dist_smooth = ""
            rows.append((lam, i, j, m, g.n_cells, dist, dist_smooth))
    out.write(
        f"approximate_{_symbol_tag(cfg)}.csv",
        ["lambda", "i_eps", "j_eps", "m_eps", "cells", "bmo_distance", "bmo_distance_mollified"],
        rows,
    )
    return 0


def cmd_testfn(cfg: RunConfig, out: _Writer):
    # the two-level symbol -1 / +1 on the halves of (4, 6) unless a CSV symbol is given
    I = Interval.from_endpoints(4.0, 6.0)
    if cfg.symbol in SYMBOLS:
        b = GridFunction([0.0, 4.0, 5.0, 6.0], [0.0, -1.0, 1.0])
    else:
        b = read_grid_function(cfg.symbol)
    rows, fn_rows = [], []
    for lam in cfg.lambda_list:
        params = TestFunctionParams(I, cfg.p, lam)
        parts = adapted_test_function(b, params)
        prof = lemma52_profile(b, params, TruncationSpec(1e-3, I.hi), cfg.kernel)
        rows += [(lam, k, lo, up, parts.alpha, parts.a) for k, lo, up in prof]
        fn_rows += [(lam, t, v) for t, v in zip(parts.f.breakpoints[:-1], parts.f.values)]
    out.write("testfn_profile.csv", ["lambda", "k", "lower_ratio", "upper_ratio", "alpha", "a_j"], rows)
    out.write("testfn_function.csv", ["lambda", "breakpoint", "value"], fn_rows)
    return 0


COMMANDS = {
    "measure-check": (cmd_measure_check, "doubling sweep and sharpness witnesses"),
    "kernel-table": (cmd_kernel_table, "kernel values and all four bound ratios on a grid"),
    "commutator-apply": (cmd_commutator_apply, "pointwise commutator of a symbol with chi_(0,1)"),
    "spectrum": (cmd_spectrum, "singular values of the discretized commutator"),
    "fk-report": (cmd_fk_report, "compactness profiles of a commutator image family"),
    "cmo-check": (cmd_cmo_check, "vanishing-oscillation functionals of a symbol"),
    "approximate": (cmd_approximate, "dyadic approximant and its BMO distance table"),
    "testfn": (cmd_testfn, "commutator test function and its annular profile"),
}


def _add_common(parser, default):
    parser.add_argument("--config", default=default, help="flat key = value configuration file")
    parser.add_argument("--out", default=default, help="output directory")
    parser.add_argument("--seed", type=int, default=default)
    parser.add_argument("--symbol", default=default, help="bump, log, step or a function CSV path")
    parser.add_argument("--lambda", dest="lam", type=float, action="append", default=default)
    parser.add_argument("--p", type=float, default=default)
    parser.add_argument("--n", type=int, default=default)
    parser.add_argument("--xmax", type=float, default=default)
    parser.add_argument("--samples", type=int, default=default)
    parser.add_argument("--k", type=int, default=default)


def build_parser() -> argparse.ArgumentParser:
    """Options are accepted before or after the subcommand name."""
    parser = argparse.ArgumentParser(prog="besselcmo", description=__doc__.splitlines()[0])
    _add_common(parser, None)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")
    sub.required = True
    for name, (_, helptext) in COMMANDS.items():
        _add_common(sub.add_parser(name, help=helptext), argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_EXIT if exc.code not in (0, None) else 0
    try:
        cfg = _resolve(args)
        func, _ = COMMANDS[args.command]
        writer = _Writer(cfg, args.command)
        status = func(cfg, writer)
        for path in writer.written:
            print(path)
        return status
    except BesselError as exc:
        print(f"besselcmo: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
