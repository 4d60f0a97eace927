"""Config-driven command line for the chain, field, flow, scaling, and
rate experiments.

Configuration is a flat key=value file; command-line flags override file
values.  Every randomized subcommand requires an explicit --seed.  All
artifacts embed the tool version, a hash of the effective configuration,
and the seed, and reruns with identical configuration produce identical
bytes.  Exit codes: 0 success, 2 configuration error, 3 numeric error,
4 budget or coverage error, each with a single machine-parsable line on
standard error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .chain import ChainConfig, simulate
from .densities import DENSITY_KEYS, make_density
from .drift import FIELD_GRID_COLUMNS, field_grid, make_h_field
from .errors import (BudgetError, ConfigError, CoverageError, FluidchainError,
                     InvalidArgumentError, NumericError)
from .flow import branch_flow, integrate_flow, stability_sweep
from .proposals import PROPOSAL_KEYS, make_proposal
from .rates import (DRIFT_ROW_COLUMNS, KAPPA_ROW_COLUMNS, drift_check,
                    kappa_diagnostics, parse_rate_profile, rate_sequence)
from .scaling import (SCALE_ROW_COLUMNS, ScalingExperiment,
                      ensemble_experiment, scaled_path)
from .seeding import mix64


def _parse_point(text):
    parts = [float(t) for t in str(text).split(",")]
    if len(parts) != 2:
        raise ConfigError(f"expected x,y pair, got {text!r}")
    return (parts[0], parts[1])


def _parse_float_list(text):
    vals = tuple(float(t) for t in str(text).split(",") if t.strip())
    if not vals:
        raise ConfigError(f"expected comma-separated reals, got {text!r}")
    return vals


def _parse_sigma(text):
    vals = [float(t) for t in str(text).split(",")]
    if len(vals) == 1:
        return vals[0]
    if len(vals) == 3:
        return tuple(vals)
    raise ConfigError("sigma must be a scalar s or s11,s12,s22")


def _parse_bool(text):
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected boolean, got {text!r}")


# name, type, default, required, help. Defaults live here, not in argparse,
# so a config file can fill any flag the user leaves unset.
_DENSITY_OPTS = [
    ("density", str, None, True, f"target key, one of {', '.join(DENSITY_KEYS)}"),
    ("delta", float, None, False, "tail exponent of the Weibull-like targets"),
    ("a", float, None, False, "anisotropy of the mixture targets"),
    ("mix_alpha", float, None, False, "weight of the first mixture component"),
]
_PROPOSAL_OPTS = [
    ("proposal", str, "gauss", False, f"increment family, one of {', '.join(PROPOSAL_KEYS)}"),
    ("sigma", _parse_sigma, None, False, "shape: scalar s or s11,s12,s22"),
    ("radius", float, 1.0, False, "support radius for the ball family"),
]
_OUT = ("out", str, None, False, "output path (stdout when omitted)")
_SEED = ("seed", int, None, False, "base seed (required, no wall-clock fallback)")
_THREADS = ("threads", int, None, False, "worker cap (default: FLUIDCHAIN_THREADS or 1)")

_SUBCOMMANDS = {
    "simulate": _DENSITY_OPTS + _PROPOSAL_OPTS + [
        ("x0", _parse_point, None, True, "start point x,y"),
        ("n_steps", int, None, True, "number of proposals"),
        _SEED, _OUT,
    ],
    "field": _DENSITY_OPTS + _PROPOSAL_OPTS + [
        ("xmin", float, None, True, ""), ("xmax", float, None, True, ""),
        ("ymin", float, None, True, ""), ("ymax", float, None, True, ""),
        ("nx", int, None, True, "grid points along x"),
        ("ny", int, None, True, "grid points along y"),
        ("mc_samples", int, 100000, False, "proposals per grid point"),
        ("estimator", str, "rejection-integrand", False,
         "rejection-integrand or one-step-mean"),
        _SEED, _THREADS, _OUT,
    ],
    "flow": _DENSITY_OPTS + _PROPOSAL_OPTS + [
        ("x0", _parse_point, None, True, "start point x,y"),
        ("dt", float, 1e-3, False, "base step of the integrator"),
        ("t_max", float, 10.0, False, "time horizon"),
        ("branch", _parse_bool, False, False,
         "integrate both branches from a mixture-diagonal start"),
        _OUT,
    ],
    "sweep": _DENSITY_OPTS + _PROPOSAL_OPTS + [
        ("n_directions", int, 64, False, "equally spaced unit starts"),
        ("rho", float, 0.5, False, "passage level"),
        ("t_max", float, 20.0, False, "time horizon"),
        ("dt", float, 1e-3, False, "base step of the integrator"),
        _THREADS, _OUT,
    ],
    "scale": _DENSITY_OPTS + _PROPOSAL_OPTS + [
        ("x0", _parse_point, None, True, "initial direction x,y"),
        ("r_values", _parse_float_list, None, True, "comma list of radii"),
        ("alpha", float, None, False, "clock exponent (default: density beta)"),
        ("t_max", float, None, True, "fluid time horizon"),
        ("eps", float, 0.1, False, "distance threshold"),
        ("rho", float, 0.5, False, "stability level"),
        ("replicas", int, 1, False, ""),
        ("mode", str, "step", False, "step or polygonal"),
        ("dt", float, 1e-3, False, "flow integrator step"),
        _SEED, _THREADS,
        ("json_out", str, None, False, "aggregate report path"),
        ("csv_out", str, None, False, "per-replica rows path"),
        ("paths_out", str, None, False, "scaled-path samples path"),
        ("paths_per_r", int, 10, False, "replicas exported per radius"),
    ],
    "drift-check": _DENSITY_OPTS + _PROPOSAL_OPTS + [
        ("p", float, 2.0, False, "moment exponent of the norm-like function"),
        ("p_moment", float, None, False, "path-sum exponent (default: p)"),
        ("rho", float, 0.5, False, "inward level"),
        ("t_horizon", float, 4.0, False, "budget horizon T"),
        ("x_norms", _parse_float_list, None, True, "increasing radii"),
        ("replicas", int, 400, False, ""),
        _SEED, _THREADS,
        ("json_out", str, None, False, ""), ("csv_out", str, None, False, ""),
    ],
    "kappa": _DENSITY_OPTS + _PROPOSAL_OPTS + [
        ("delta", float, 0.1, False, "separation scale of the first clock"),
        ("x_norms", _parse_float_list, None, True, "increasing radii"),
        ("inner_radius", float, None, False, "third-clock level (default: min radius / 2)"),
        ("replicas", int, 200, False, ""),
        _SEED, _THREADS,
        ("json_out", str, None, False, ""), ("csv_out", str, None, False, ""),
    ],
    "rates": [
        ("phi", str, None, True, "rate profile: poly:a or table:v:p,v:p,..."),
        ("n", int, None, True, "sequence length"),
        ("method", str, "auto", False, "auto, closed, or numeric"),
        _OUT,
    ],
    "contour": _DENSITY_OPTS + [
        ("xmin", float, None, True, ""), ("xmax", float, None, True, ""),
        ("ymin", float, None, True, ""), ("ymax", float, None, True, ""),
        ("nx", int, None, True, ""), ("ny", int, None, True, ""),
        _OUT,
    ],
}

# kappa reuses the density option named delta for the clock scale, so the
# mixture tail exponent keeps its default there
_RANDOMIZED = {"simulate", "field", "scale", "drift-check", "kappa"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="fluidchain", description=__doc__)
    parser.add_argument("--version", action="version",
                        version=f"fluidchain {__version__}")
    subs = parser.add_subparsers(dest="command", metavar="command")
    for name, opts in _SUBCOMMANDS.items():
        sp = subs.add_parser(name, add_help=True)
        sp.add_argument("--config", type=str, default=None,
                        help="flat key=value config file; flags win")
        seen = set()
        for key, typ, _default, _required, help_text in opts:
            if key in seen:
                continue
            seen.add(key)
            flag = "--" + key.replace("_", "-")
            if typ is _parse_bool:
                sp.add_argument(flag, dest=key, nargs="?", const=True,
                                type=_parse_bool, default=None, help=help_text)
            else:
                sp.add_argument(flag, dest=key, type=typ, default=None,
                                help=help_text)
    return parser


def load_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value")
                key, _, value = line.partition("=")
                key = key.strip().replace("-", "_")
                if key in values:
                    raise ConfigError(f"{path}:{lineno}: duplicate key {key}")
                values[key] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    return values


def resolve_options(command: str, args: argparse.Namespace) -> dict:
    """Merge flag values over config-file values over table defaults."""
    opts = _SUBCOMMANDS[command]
    known = {key for key, *_ in opts}
    file_values = {}
    if getattr(args, "config", None):
        file_values = load_config_file(args.config)
        unknown = sorted(set(file_values) - known)
        if unknown:
            raise ConfigError(
                f"unknown config key{'s' if len(unknown) > 1 else ''}: "
                + ", ".join(unknown))
    resolved = {}
    for key, typ, default, required, _help in opts:
        value = getattr(args, key, None)
        if value is None and key in file_values:
            raw = file_values[key]
            try:
                value = typ(raw)
            except ConfigError:
                raise
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key}: {exc}")
        if value is None:
            value = default
        if value is None and required:
            raise ConfigError(f"missing required option --{key.replace('_', '-')}")
        resolved[key] = value
    if command in _RANDOMIZED and resolved.get("seed") is None:
        raise ConfigError("randomized command needs an explicit --seed")
    return resolved


# Keys that never change the numbers: identical experiments keep identical
# hashes regardless of where the artifacts go or how many workers ran.
_NONSEMANTIC_KEYS = {"out", "json_out", "csv_out", "paths_out", "threads"}


def _config_hash(command: str, resolved: dict) -> str:
    items = [f"{k}={resolved[k]!r}" for k in sorted(resolved)
             if k not in _NONSEMANTIC_KEYS]
    digest = hashlib.sha256(
        (command + "\n" + "\n".join(items)).encode("utf-8")).hexdigest()
    return digest[:16]


# The target-density option block, hashed separately so artifacts from
# different subcommands can be checked for same-target compatibility before
# being joined (the full config hash never matches across commands).
_TARGET_KEYS = ("a", "delta", "density", "mix_alpha")


def _target_hash(resolved: dict):
    if "density" not in resolved:
        return None
    items = [f"{k}={resolved.get(k)!r}" for k in _TARGET_KEYS]
    return hashlib.sha256("\n".join(items).encode("utf-8")).hexdigest()[:16]


def _cell(v):
    if v is None or v == "":
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        # NaN marks "not applicable" (e.g. limiting field on the diagonal)
        return "" if math.isnan(v) else repr(float(v))
    return str(v)


def _render_csv(command, resolved, columns, rows, extra_comments=()):
    buf = io.StringIO()
    seed = resolved.get("seed")
    buf.write(f"# fluidchain {__version__}\n")
    buf.write(f"# command={command}\n")
    buf.write(f"# config_hash={_config_hash(command, resolved)}\n")
    target = _target_hash(resolved)
    if target is not None:
        buf.write(f"# target_hash={target}\n")
    buf.write(f"# seed={seed if seed is not None else 'none'}\n")
    for line in extra_comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if isinstance(row, dict):
            writer.writerow([_cell(row[c]) for c in columns])
        else:
            writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _wrap_json(command, resolved, body_json: str) -> str:
    # stitch provenance into the report's own JSON deterministically
    import json as _json
    payload = _json.loads(body_json)
    payload["tool_version"] = __version__
    payload["command"] = command
    payload["config_hash"] = _config_hash(command, resolved)
    target = _target_hash(resolved)
    if target is not None:
        payload["target_hash"] = target
    return _json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _write_artifacts(artifacts):
    for path, content in artifacts:
        directory = os.path.dirname(os.path.abspath(path)) or "."
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".fluidchain-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(content)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def _emit(text, resolved, artifacts):
    out = resolved.get("out")
    if out:
        artifacts.append((out, text))
    else:
        sys.stdout.write(text)


def _density_from(resolved):
    params = {}
    if resolved.get("delta") is not None:
        params["delta"] = resolved["delta"]
    if resolved.get("a") is not None:
        params["a"] = resolved["a"]
    if resolved.get("mix_alpha") is not None:
        params["alpha"] = resolved["mix_alpha"]
    return make_density(resolved["density"], **params)


def _proposal_from(resolved):
    return make_proposal(resolved["proposal"], sigma=resolved.get("sigma"),
                         radius=resolved.get("radius", 1.0))


def _cmd_simulate(resolved, artifacts):
    density = _density_from(resolved)
    proposal = _proposal_from(resolved)
    cfg = ChainConfig(density=density, proposal=proposal,
                      x0=resolved["x0"], seed=resolved["seed"],
                      n_steps=resolved["n_steps"])
    traj = simulate(cfg)
    rows = [(0, traj.states[0, 0], traj.states[0, 1], "")]
    for k in range(traj.n_steps):
        rows.append((k + 1, traj.states[k + 1, 0], traj.states[k + 1, 1],
                     bool(traj.accepted[k])))
    text = _render_csv("simulate", resolved, ("step", "x1", "x2", "accepted"),
                       rows, [f"numeric_warnings={traj.numeric_warnings}"])
    _emit(text, resolved, artifacts)
    return 0


def _cmd_field(resolved, artifacts):
    density = _density_from(resolved)
    proposal = _proposal_from(resolved)
    region = (resolved["xmin"], resolved["xmax"], resolved["ymin"], resolved["ymax"])
    rows = field_grid(density, proposal, region, resolved["nx"], resolved["ny"],
                      n_mc=resolved["mc_samples"], seed=resolved["seed"],
                      estimator=resolved["estimator"], threads=resolved["threads"])
    text = _render_csv("field", resolved, FIELD_GRID_COLUMNS, rows)
    _emit(text, resolved, artifacts)
    return 0


def _flow_rows(path, tag):
    rows = []
    for t, pt in zip(path.times, path.points):
        if path.absorbed_at is not None and t > path.absorbed_at:
            continue
        absorbed = path.absorbed_at is not None and t >= path.absorbed_at
        rows.append((t, pt[0], pt[1], absorbed, tag))
    return rows


def _cmd_flow(resolved, artifacts):
    density = _density_from(resolved)
    proposal = _proposal_from(resolved)
    field = make_h_field(density, proposal)
    rows = []
    if resolved["branch"]:
        plus, minus = branch_flow(field, resolved["x0"], resolved["dt"],
                                  resolved["t_max"])
        rows.extend(_flow_rows(plus, "+"))
        rows.extend(_flow_rows(minus, "-"))
    else:
        path = integrate_flow(field, resolved["x0"], resolved["dt"],
                              resolved["t_max"])
        rows.extend(_flow_rows(path, "."))
    text = _render_csv("flow", resolved,
                       ("t", "mu1", "mu2", "absorbed", "branch"), rows)
    _emit(text, resolved, artifacts)
    return 0


def _cmd_sweep(resolved, artifacts):
    density = _density_from(resolved)
    proposal = _proposal_from(resolved)
    field = make_h_field(density, proposal)
    result = stability_sweep(field, resolved["n_directions"], resolved["rho"],
                             resolved["t_max"], dt=resolved["dt"],
                             threads=resolved["threads"])
    comments = [f"all_hit={int(result.all_hit)}",
                f"worst_time={_cell(result.worst_time)}"]
    text = _render_csv("sweep", resolved, ("angle", "hit", "time", "branch"),
                       result.rows, comments)
    _emit(text, resolved, artifacts)
    if resolved.get("out"):
        sys.stdout.write(
            f"all_hit={int(result.all_hit)} worst_time={_cell(result.worst_time)}\n")
    return 0


def _cmd_scale(resolved, artifacts):
    density = _density_from(resolved)
    proposal = _proposal_from(resolved)
    alpha = resolved["alpha"]
    if alpha is None:
        alpha = density.beta
    exp = ScalingExperiment(density=density, proposal=proposal,
                            x=resolved["x0"], r_values=resolved["r_values"],
                            alpha=alpha, t_max=resolved["t_max"],
                            eps=resolved["eps"], rho=resolved["rho"],
                            replicas=resolved["replicas"],
                            base_seed=resolved["seed"], mode=resolved["mode"],
                            dt=resolved["dt"])
    report = ensemble_experiment(exp, threads=resolved["threads"])
    wrote = False
    if resolved.get("json_out"):
        artifacts.append((resolved["json_out"],
                          _wrap_json("scale", resolved, report.to_json())))
        wrote = True
    if resolved.get("csv_out"):
        text = _render_csv("scale", resolved, SCALE_ROW_COLUMNS,
                           list(report.row_records()))
        artifacts.append((resolved["csv_out"], text))
        wrote = True
    if resolved.get("paths_out"):
        rows = []
        for i, r in enumerate(exp.r_values):
            n_steps = int(math.ceil(exp.t_max * r ** (1.0 + exp.alpha)))
            if n_steps > exp.step_cap:
                continue
            for j in range(min(resolved["paths_per_r"], exp.replicas)):
                seed = mix64(exp.base_seed, i * exp.replicas + j)
                cfg = ChainConfig(density=density, proposal=proposal,
                                  x0=(r * exp.x[0], r * exp.x[1]),
                                  seed=seed, n_steps=n_steps)
                path = scaled_path(simulate(cfg), r, exp.alpha, exp.mode)
                for t, pt in zip(path.times, path.points):
                    rows.append((r, j, t, pt[0], pt[1]))
        text = _render_csv("scale", resolved,
                           ("r", "replica", "t", "eta1", "eta2"), rows)
        artifacts.append((resolved["paths_out"], text))
        wrote = True
    if not wrote:
        sys.stdout.write(_wrap_json("scale", resolved, report.to_json()))
    return 0


def _cmd_drift_check(resolved, artifacts):
    density = _density_from(resolved)
    proposal = _proposal_from(resolved)
    report = drift_check(density, resolved["p"], proposal, resolved["rho"],
                         resolved["t_horizon"], resolved["x_norms"],
                         resolved["replicas"], resolved["seed"],
                         p_moment=resolved["p_moment"],
                         threads=resolved["threads"])
    wrote = False
    if resolved.get("json_out"):
        artifacts.append((resolved["json_out"],
                          _wrap_json("drift-check", resolved, report.to_json())))
        wrote = True
    if resolved.get("csv_out"):
        text = _render_csv("drift-check", resolved, DRIFT_ROW_COLUMNS,
                           list(report.row_records()))
        artifacts.append((resolved["csv_out"], text))
        wrote = True
    if not wrote:
        sys.stdout.write(_wrap_json("drift-check", resolved, report.to_json()))
    return 0


def _cmd_kappa(resolved, artifacts):
    # here delta names the clock scale, not the tail exponent (which keeps
    # its built-in default for this command)
    density = _density_from({**resolved, "delta": None})
    proposal = _proposal_from(resolved)
    report = kappa_diagnostics(density, proposal, resolved["delta"],
                               resolved["x_norms"], resolved["replicas"],
                               resolved["seed"], R=resolved["inner_radius"],
                               threads=resolved["threads"])
    wrote = False
    if resolved.get("json_out"):
        artifacts.append((resolved["json_out"],
                          _wrap_json("kappa", resolved, report.to_json())))
        wrote = True
    if resolved.get("csv_out"):
        text = _render_csv("kappa", resolved, KAPPA_ROW_COLUMNS,
                           list(report.row_records()))
        artifacts.append((resolved["csv_out"], text))
        wrote = True
    if not wrote:
        sys.stdout.write(_wrap_json("kappa", resolved, report.to_json()))
    return 0


def _num_str(v: float) -> str:
    if math.isfinite(v) and v == int(v):
        return str(int(v))
    return repr(float(v))


def _cmd_rates(resolved, artifacts):
    rf = parse_rate_profile(resolved["phi"])
    seq = rate_sequence(rf, resolved["n"], method=resolved["method"])
    if resolved.get("out"):
        rows = [(k, v) for k, v in enumerate(seq)]
        text = _render_csv("rates", resolved, ("k", "r"), rows)
        artifacts.append((resolved["out"], text))
    sys.stdout.write(",".join(_num_str(v) for v in seq) + "\n")
    return 0


def _cmd_contour(resolved, artifacts):
    density = _density_from(resolved)
    xs = np.linspace(resolved["xmin"], resolved["xmax"], resolved["nx"])
    ys = np.linspace(resolved["ymin"], resolved["ymax"], resolved["ny"])
    rows = []
    for y in ys:
        pts = np.column_stack([xs, np.full_like(xs, y)])
        vals = density.log_density_batch(pts)
        for x, v in zip(xs, vals):
            rows.append((x, y, v))
    text = _render_csv("contour", resolved, ("x1", "x2", "logpi"), rows)
    _emit(text, resolved, artifacts)
    return 0


_HANDLERS = {
    "simulate": _cmd_simulate,
    "field": _cmd_field,
    "flow": _cmd_flow,
    "sweep": _cmd_sweep,
    "scale": _cmd_scale,
    "drift-check": _cmd_drift_check,
    "kappa": _cmd_kappa,
    "rates": _cmd_rates,
    "contour": _cmd_contour,
}


def _fail(code: int, kind: str, exc: BaseException) -> int:
    reason = " ".join(str(exc).split()).replace('"', "'")
    sys.stderr.write(f'fluidchain-error code={code} kind={kind} reason="{reason}"\n')
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise ConfigError("no subcommand given (see --help)")
        resolved = resolve_options(args.command, args)
        artifacts = []
        status = _HANDLERS[args.command](resolved, artifacts)
        _write_artifacts(artifacts)
        return status
    except (ConfigError, InvalidArgumentError) as exc:
        return _fail(2, "config", exc)
    except (BudgetError, CoverageError) as exc:
        return _fail(4, "budget", exc)
    except (NumericError, FluidchainError) as exc:
        return _fail(3, "numeric", exc)
    except OSError as exc:
        return _fail(3, "io", exc)


if __name__ == "__main__":
    sys.exit(main())
