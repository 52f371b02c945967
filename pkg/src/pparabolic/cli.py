"""Command-line entry point: certify, scan, identity-check, solve, estimate."""
from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .certifier.algebra import select_weights_general_s, thm11_params
from .certifier.certify import METHODS, certify
from .certifier.scan import (certify_gamma_minus_one_slice, certify_gamma_one_slice, landscape,
                             locate_negative_det, scan_region, write_gnuplot_matrix)
from .estimator import (TIME_MODES, default_cylinder, hessian_estimate_report, nonlinear_gradient_estimate_report,
                        required_t_end, time_derivative_check, write_ratio_csv)
from .params import ParamSet, ParamsError, WeightRecipe, validate_params
from .presets import PRESET_NAMES
from .solver import Problem, load_trajectory, solve
from .structure import IDENTITIES, identity_convergence

log = logging.getLogger("pparabolic")

EXIT_USAGE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- output handling ---------------------------------------------------------

class Outputs:
    """Files are written to a staging directory and moved into place only when the command succeeds."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.stage: Path | None = None

    def __enter__(self) -> Outputs:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.stage = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.out_dir))
        return self

    def path(self, name: str) -> Path:
        return self.stage / name

    def json(self, name: str, obj) -> None:
        self.path(name).write_text(json.dumps(obj, indent=1, sort_keys=True, default=_jsonable) + "\n")

    def __exit__(self, exc_type, exc, tb):
        try:
            if exc_type is None:
                for f in sorted(self.stage.iterdir()):
                    os.replace(f, self.out_dir / f.name)
        finally:
            shutil.rmtree(self.stage, ignore_errors=True)
        return False


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config {path}: {e}") from e
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg


def _merge(cfg: dict, args, keys) -> dict:
    out = dict(cfg)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    return out


def _require(cfg: dict, *keys):
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise UsageError(f"missing config keys: {', '.join(missing)}")


def _meta(args, cfg: dict, command: str) -> dict:
    return {"command": command, "config": cfg, "seed": args.seed, "override_range": args.override_range,
            "version": __version__}


# --- commands ------------------------------------------------------------------

def cmd_certify(args, cfg: dict) -> int:
    cfg = _merge(cfg, args, ("recipe", "p", "gamma", "s", "target_margin", "method"))
    cfg.setdefault("recipe", "thm11")
    cfg.setdefault("target_margin", 1e-4)
    cfg.setdefault("method", "lipschitz_sweep")
    _require(cfg, "p", "gamma")
    p, g = float(cfg["p"]), float(cfg["gamma"])
    if cfg["method"] not in METHODS:
        raise UsageError(f"unknown method {cfg['method']!r}")
    if cfg["recipe"] == "thm11":
        params = thm11_params(p, g)
        if not args.override_range:
            validate_params(params, "thm11")
        w = WeightRecipe.from_dict(cfg["weights"]) if "weights" in cfg else WeightRecipe.thm11(p, g)
    elif cfg["recipe"] == "general_s":
        _require(cfg, "s")
        params = ParamSet(p=p, gamma=g, s=float(cfg["s"]))
        if not args.override_range:
            validate_params(params, "general_s")
        w = WeightRecipe.from_dict(cfg["weights"]) if "weights" in cfg else select_weights_general_s(p, g, params.s)
    else:
        raise UsageError(f"unknown recipe {cfg['recipe']!r}; expected thm11 or general_s")
    cert = certify(w, params, float(cfg["target_margin"]), method=cfg["method"])
    cert.metadata = _meta(args, cfg, "certify")
    with Outputs(args.out) as out:
        out.path("certificate.json").write_text(cert.to_json() + "\n")
    print(f"{cert.verdict} margin_c={cert.margin_c:.6g}" + (f" witness={cert.witness}" if cert.witness else ""))
    return cert.exit_code


def cmd_scan(args, cfg: dict) -> int:
    cfg = dict(cfg)
    cfg.setdefault("p_range", [3.0, 40.0])
    cfg.setdefault("gamma_range", [-0.95, 0.95])
    cfg.setdefault("resolution", [75, 39])
    cfg.setdefault("s_policy", "thm11")
    cfg.setdefault("target_margin", 1e-4)
    cfg.setdefault("method", "lipschitz_sweep")
    cfg.setdefault("landscape_resolution", [75, 101])
    cfg.setdefault("slices", True)
    cfg.setdefault("large_p", False)
    if args.resolution is not None:
        cfg["resolution"] = args.resolution
        cfg["landscape_resolution"] = args.resolution
    res = cfg["resolution"]
    res = [res, res] if np.isscalar(res) else list(res)
    lres = cfg["landscape_resolution"]
    lres = [lres, lres] if np.isscalar(lres) else list(lres)
    if len(res) != 2 or len(lres) != 2 or min(int(x) for x in res + lres) <= 0:
        raise UsageError("resolution must be positive")
    p0, p1 = (float(x) for x in cfg["p_range"])
    g0, g1 = (float(x) for x in cfg["gamma_range"])
    if p0 > p1 or g0 > g1:
        raise UsageError("empty p or gamma range")
    if cfg["s_policy"] == "thm11" and not args.override_range and not (3.0 <= p0 and p1 <= 40.0 and g1 < 1.0):
        raise UsageError("scan range leaves 3 <= p <= 40, gamma < 1; pass --override-range to probe it")
    if cfg["method"] not in METHODS:
        raise UsageError(f"unknown method {cfg['method']!r}")

    region = scan_region((p0, p1), (g0, g1), cfg["s_policy"], tuple(int(x) for x in res),
                         float(cfg["target_margin"]), cfg["method"], args.workers)
    ps = np.linspace(p0, p1, int(lres[0])) if int(lres[0]) > 1 else np.array([p0])
    ks = np.linspace(0.0, 1.0, int(lres[1])) if int(lres[1]) > 1 else np.array([0.0])
    f1 = landscape("f", 1.0, ps, ks)
    fg = landscape("f_gamma", -1.0, ps, ks)
    summary = {
        "n_points": int(region.verdict.size),
        "counts": {v: int(np.sum(region.verdict == v)) for v in sorted(set(region.verdict.ravel()))},
        "all_accept": region.all_accept(),
        "min_margin": float(np.nanmin(region.min_value)) if region.verdict.size else None,
        "landscape_f_gamma1_min": float(f1.min()),
        "landscape_f_gamma_gamma_minus1_max": float(fg.max()),
        "metadata": _meta(args, cfg, "scan"),
    }
    ok = region.all_accept()
    if cfg["slices"]:
        prange = (max(p0, 3.0), p1)
        certs = [certify_gamma_one_slice(prange), certify_gamma_minus_one_slice(prange)]
        summary["slice_certificates"] = [c.to_dict() for c in certs]
        ok = ok and all(c.verdict == "accept" for c in certs)
    if cfg["large_p"]:
        summary["negative_det"] = locate_negative_det()
    with Outputs(args.out) as out:
        region.write_csv(out.path("region.csv"))
        write_gnuplot_matrix(out.path("landscape_f_gamma1.dat"), ks, ps, f1)
        write_gnuplot_matrix(out.path("landscape_fgamma_gamma-1.dat"), ks, ps, fg)
        out.json("scan.json", summary)
    print(f"points={summary['n_points']} counts={summary['counts']} "
          f"min f(gamma=1)={summary['landscape_f_gamma1_min']:.6g} "
          f"max f_gamma(gamma=-1)={summary['landscape_f_gamma_gamma_minus1_max']:.6g}")
    return 0 if ok else 1


def cmd_identity_check(args, cfg: dict) -> int:
    cfg = _merge(cfg, args, ("identity", "preset"))
    cfg.setdefault("identity", "fundamental")
    cfg.setdefault("preset", "saddle")
    cfg.setdefault("levels", [32, 64, 128])
    cfg.setdefault("epsilon", 1e-2)
    cfg.setdefault("exponent", 1.0)
    if cfg["identity"] not in IDENTITIES:
        raise UsageError(f"unknown identity {cfg['identity']!r}; expected one of {IDENTITIES}")
    if cfg["preset"] not in PRESET_NAMES:
        raise UsageError(f"unknown preset {cfg['preset']!r}; expected one of {PRESET_NAMES}")
    rep = identity_convergence(cfg["identity"], cfg["preset"], tuple(int(n) for n in cfg["levels"]),
                               float(cfg["epsilon"]), float(cfg["exponent"]), args.seed)
    body = {**rep.to_dict(), "metadata": _meta(args, cfg, "identity-check")}
    with Outputs(args.out) as out:
        out.json(f"identity_{cfg['identity']}_{cfg['preset']}.json", body)
    print(f"{cfg['identity']} on {cfg['preset']}: max residual {rep.max_residual}, min order {rep.min_order:.3f}")
    return 0


def _problem(cfg: dict, args) -> Problem:
    _require(cfg, "preset", "n", "params")
    if cfg["preset"] not in PRESET_NAMES:
        raise UsageError(f"unknown preset {cfg['preset']!r}; expected one of {PRESET_NAMES}")
    cfg = dict(cfg)
    cfg.setdefault("seed", args.seed)
    if "t_end" not in cfg:
        pre = Problem.from_preset(cfg["preset"], int(cfg["n"]), ParamSet.from_dict(cfg["params"]), 1.0,
                                  int(cfg["seed"]), amplitude=float(cfg.get("amplitude", 1.0)))
        xa, xb, ya, yb = pre.grid.extent
        cfg["t_end"] = required_t_end(min(xb - xa, yb - ya) / 8.0)
    return Problem.from_config(cfg)


def cmd_solve(args, cfg: dict) -> int:
    prob = _problem(cfg, args)
    traj = solve(prob, safety=float(cfg.get("safety", 0.9)), store_dt=cfg.get("store_dt"))
    with Outputs(args.out) as out:
        traj.save(out.stage)
        out.json("solve.json", {"problem": prob.to_config(), "summary": traj.summary(),
                                "metadata": _meta(args, cfg, "solve")})
    print(f"steps={traj.n_steps} slices={len(traj.times)} max_principle_ok={traj.max_principle_ok}")
    return 0


def cmd_estimate(args, cfg: dict) -> int:
    if "trajectory" in cfg:
        try:
            traj = load_trajectory(cfg["trajectory"])
        except OSError as e:
            raise UsageError(f"cannot read trajectory: {e}") from e
    elif "solve" in cfg:
        traj = solve(_problem(cfg["solve"], args))
    else:
        raise UsageError("estimate needs a 'trajectory' directory or a 'solve' block")
    params = traj.params
    cyl = default_cylinder(traj, cfg.get("r"))
    s_values = cfg.get("s_values", [2.0 - params.p, 0.0])
    modes = cfg.get("time_modes", [])
    if any(m not in TIME_MODES for m in modes):
        raise UsageError(f"unknown time mode; expected a subset of {TIME_MODES}")
    reports = []
    for s in s_values:
        s = float(s)
        if s == 2.0 - params.p:
            reports.append(hessian_estimate_report(traj, cyl, params, override=args.override_range))
        reports.append(nonlinear_gradient_estimate_report(traj, cyl, params, s, override=args.override_range))
    times = [time_derivative_check(traj, params, m, cyl, override=args.override_range) for m in modes]
    body = {"estimates": [r.to_dict() for r in reports], "time_derivative": [t.to_dict() for t in times],
            "metadata": _meta(args, cfg, "estimate")}
    with Outputs(args.out) as out:
        out.json("estimate.json", body)
        write_ratio_csv(out.path("ratios.csv"), reports)
    for r in reports:
        print(f"{r.kind} s={r.metadata['s']:g}: ratio={r.ratio:.6g} log_share={r.log_share:.3g}")
    for t in times:
        print(f"{t.mode}: pass_fraction={t.pass_fraction:.6f} int|u_t|^2={t.ut_sq_integral:.6g}")
    return 0


COMMANDS = {"certify": cmd_certify, "scan": cmd_scan, "identity-check": cmd_identity_check,
            "solve": cmd_solve, "estimate": cmd_estimate}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    common.add_argument("--override-range", action="store_true",
                        help="allow parameters outside the proven ranges (recorded in the output)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    ap = _Parser(prog="pparabolic", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("certify", parents=[common], help="certify positive definiteness over kappa in [0, 1]")
    c.add_argument("--recipe", choices=("thm11", "general_s"))
    c.add_argument("--p", type=float)
    c.add_argument("--gamma", type=float)
    c.add_argument("--s", type=float)
    c.add_argument("--target-margin", dest="target_margin", type=float)
    c.add_argument("--method", choices=sorted(METHODS))

    s = sub.add_parser("scan", parents=[common], help="certify a (p, gamma) grid and emit landscapes")
    s.add_argument("--resolution", type=int, help="points per axis for the grid and the landscapes")

    i = sub.add_parser("identity-check", parents=[common], help="convergence of a structural identity")
    i.add_argument("--identity", choices=IDENTITIES)
    i.add_argument("--preset", choices=PRESET_NAMES)

    sub.add_parser("solve", parents=[common], help="solve the regularized equation")
    sub.add_parser("estimate", parents=[common], help="cylinder estimates on a trajectory")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    log.debug("kernel backend: %s", kernels.BACKEND)
    if args.workers < 1:
        ap.error("--workers must be at least 1")
    try:
        cfg = _load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, ParamsError, KeyError, TypeError, ValueError) as e:
        print(f"pparabolic {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
