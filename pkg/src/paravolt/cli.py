"""The ``paravolt`` command.

Subcommands: decompose, lift, solve, model, probe, accept, plus replay for
rerunning a manifest.  Exit codes: 0 on success, 1 on domain errors (any
``ParavoltError``, or a failing acceptance criterion), 2 on usage errors.

Seeds resolve as ``--seed`` over ``PARAVOLT_SEED`` over the config's ``seed``.
Every command that writes files also writes ``<out>.manifest.json``; running
``paravolt replay`` on it repeats the run with the recorded seed and
configuration.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._core import BACKEND
from .errors import ConfigError, ParameterError, ParavoltError, SupportError
from .gridfn import GridFunction, GridSpec, read_csv
from .kernels import KernelSpec, halfline_window, parse_kernel
from .models import MODELS, parse_field, run_fractional_sde, run_model
from .models import sample_bm, sample_fbm, sample_levy
from .roughpath import bm_coefficients, fbm_coefficients, lift_smooth, stochastic_resonant
from .solver import (VolterraProblem, regime_violations, resolve_exponents, scale_localize,
                     solve_paracontrolled, solve_young, solve_young_jumps, check_supports)
from .spectral import block_norms, build_partition, besov, fit_regularity

log = logging.getLogger("paravolt")

MODES = ("young", "jumps", "rough", "fractional")
REQUIRED = {"young": ("kernels", "sigma", "noise", "u0"), "jumps": ("kernels", "sigma", "noise", "u0"),
            "rough": ("kernels", "sigma", "noise", "u0"), "fractional": ("r_exp", "sigma", "u0")}
DEFAULTS = {"grid": {"N": 4096, "L": 2.0}, "delays": [0.0, 0.0], "exponents": {}, "tol": 1e-10,
            "max_iter": 200, "lambda_grid": None, "seed": 0, "levels": 6, "window": None}
EXPONENT_KEYS = {"beta1", "beta2", "gamma1", "gamma2", "p"}
KNOWN = set(DEFAULTS) | {"mode", "kernels", "sigma", "noise", "u0", "r_exp"}


# ---------------------------------------------------------------------------
# configuration


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _norm_sigma(item, problems, where):
    if isinstance(item, str):
        kind, _, eps = item.partition(":")
        item = {"kind": kind, "epsilon": eps or 1.0}
    if not isinstance(item, dict) or "kind" not in item:
        problems.append(f"{where}: expected {{kind, epsilon}} or 'kind:epsilon'")
        return None
    try:
        out = {"kind": str(item["kind"]), "epsilon": float(item.get("epsilon", 1.0))}
    except (TypeError, ValueError):
        problems.append(f"{where}: epsilon must be a number")
        return None
    try:
        parse_field(f"{out['kind']}:{out['epsilon']!r}")
    except ParavoltError as exc:
        problems.append(f"{where}: {exc}")
    return out


def _resolve_file(text, base: Path):
    if isinstance(text, str) and text.startswith("file:"):
        return "file:" + str((base / text[5:]).resolve())
    return text


def config_from_dict(raw, base: Path | None = None) -> dict:
    """Normalise and validate a problem description; every problem is reported at once."""
    base = Path.cwd() if base is None else base
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a JSON object"])
    problems = []
    mode = raw.get("mode")
    if mode is None:
        problems.append("missing required field 'mode' (one of " + ", ".join(MODES) + ")")
        required = REQUIRED["young"]
    elif mode not in MODES:
        problems.append(f"mode: unknown value {mode!r}; expected one of {', '.join(MODES)}")
        required = REQUIRED["young"]
    else:
        required = REQUIRED[mode]
    for key in required:
        if key not in raw:
            problems.append(f"missing required field {key!r}")
    for key in sorted(set(raw) - KNOWN):
        problems.append(f"unknown field {key!r}")
    if problems and len(raw) == 0:
        raise ConfigError(problems)

    cfg = copy.deepcopy(DEFAULTS)
    cfg.update({k: copy.deepcopy(v) for k, v in raw.items() if k in KNOWN})
    cfg["mode"] = mode
    grid = cfg["grid"]
    try:
        cfg["grid"] = {"N": int(grid["N"]), "L": float(grid["L"])}
        GridSpec(cfg["grid"]["N"], cfg["grid"]["L"])
    except (KeyError, TypeError, ValueError, ParavoltError) as exc:
        problems.append(f"grid: expected {{N, L}} with N a power of two ({exc})")
    if "kernels" in cfg:
        cfg["kernels"] = [_resolve_file(k, base) for k in _as_list(cfg["kernels"])]
        if not 1 <= len(cfg["kernels"]) <= 2:
            problems.append("kernels: give one or two kernel spec strings")
        for i, k in enumerate(cfg["kernels"]):
            if not isinstance(k, str):
                problems.append(f"kernels[{i}]: expected a spec string like 'frac:r=0.9,T=0.25'")
                continue
            try:
                if not k.startswith("file:"):
                    parse_kernel(k)
            except ParavoltError as exc:
                problems.append(f"kernels[{i}]: {exc}")
    if "sigma" in cfg:
        cfg["sigma"] = [_norm_sigma(s, problems, f"sigma[{i}]") for i, s in enumerate(_as_list(cfg["sigma"]))]
    if "noise" in cfg:
        cfg["noise"] = [_resolve_file(n, base) for n in _as_list(cfg["noise"])]
        for i, n in enumerate(cfg["noise"]):
            try:
                _parse_noise(n)
            except ParavoltError as exc:
                problems.append(f"noise[{i}]: {exc}")
    if mode in ("young", "jumps", "rough"):
        counts = {k: len(cfg[k]) for k in ("kernels", "sigma", "noise") if k in cfg}
        if len(set(counts.values())) > 1:
            problems.append(f"kernels, sigma and noise must have the same length, got {counts}")
    u0 = cfg.get("u0")
    if isinstance(u0, dict) and "triple" in u0:
        cfg["u0"] = {"triple": [_resolve_file(t, base) for t in u0["triple"]]}
        if len(cfg["u0"]["triple"]) != 3:
            problems.append("u0.triple: expected three file specs")
    elif isinstance(u0, str):
        cfg["u0"] = _resolve_file(u0, base)
        if not cfg["u0"].startswith("file:"):
            problems.append("u0: expected a number, 'file:<path>' or {triple: [...]}")
    elif u0 is not None and not isinstance(u0, (int, float)):
        problems.append("u0: expected a number, 'file:<path>' or {triple: [...]}")
    delays = cfg["delays"]
    if not (isinstance(delays, list) and len(delays) == 2 and all(isinstance(d, (int, float)) for d in delays)):
        problems.append("delays: expected [r1, r2]")
    else:
        cfg["delays"] = [float(d) for d in delays]
        if any(d < 0 for d in delays):
            problems.append("delays: must be non-negative")
    ex = cfg["exponents"]
    if not isinstance(ex, dict) or set(ex) - EXPONENT_KEYS:
        problems.append("exponents: expected an object with keys among " + ", ".join(sorted(EXPONENT_KEYS)))
    for key in ("tol",):
        if not (isinstance(cfg[key], (int, float)) and cfg[key] > 0):
            problems.append(f"{key}: expected a positive number")
    for key in ("max_iter", "levels", "seed"):
        if not isinstance(cfg[key], int) or cfg[key] < (0 if key == "seed" else 1):
            problems.append(f"{key}: expected a {'non-negative' if key == 'seed' else 'positive'} integer")
    lg = cfg["lambda_grid"]
    if lg is not None:
        if not (isinstance(lg, list) and lg and all(isinstance(v, (int, float)) and 0 < v <= 1 for v in lg)):
            problems.append("lambda_grid: expected a list of values in (0, 1]")
        elif any(b >= a for a, b in zip(lg, lg[1:])):
            problems.append("lambda_grid: must be strictly decreasing")
    if mode == "fractional" and "r_exp" in cfg:
        r = cfg["r_exp"]
        if not isinstance(r, (int, float)) or not 0 < r < 1:
            problems.append(f"r_exp: expected a number in (0, 1), got {r!r}")
        elif not r > 5 / 6:
            problems.append(f"r_exp: fractional order must satisfy r > 5/6, got r = {r:g}")
    if problems:
        raise ConfigError(problems)
    _check_regime(cfg)
    return cfg


def _check_regime(cfg: dict) -> None:
    """Build the problem with the config seed and check the regime's exponent constraints."""
    if cfg["mode"] == "fractional":
        return
    regime = cfg["mode"]
    try:
        prob, _ = build_problem(cfg, cfg["seed"])
        check_supports(prob)
    except SupportError as exc:
        raise ConfigError([f"supports: {exc}"]) from exc
    bad = regime_violations(resolve_exponents(prob, regime), regime)
    if bad:
        raise ConfigError(bad)


def load_config(path) -> dict:
    """Read, normalise and validate a JSON problem description."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})"]) from exc
    return config_from_dict(raw, path.parent)


def dump_config(cfg: dict, path) -> None:
    Path(path).write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# building problems


def _kv(text: str) -> dict:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ParameterError(f"{item!r} is not key=value")
        try:
            out[key.strip()] = float(val)
        except ValueError as exc:
            raise ParameterError(f"{item!r} is not numeric") from exc
    return out


NOISES = ("bm", "fbm", "levy", "window", "file")


def _parse_noise(text) -> tuple[str, dict]:
    """``bm``, ``fbm:H=0.7``, ``levy:rate=5,scale=0.1,diffusion=0``, ``window:T=0.5`` or ``file:<path>``."""
    if not isinstance(text, str):
        raise ParameterError(f"noise spec must be a string, got {text!r}")
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind == "file":
        if not rest:
            raise ParameterError("file noise needs a path")
        return kind, {"path": rest}
    if kind not in NOISES:
        raise ParameterError(f"unknown noise {kind!r}; expected one of {', '.join(NOISES)}")
    params = _kv(rest)
    allowed = {"bm": set(), "fbm": {"H"}, "levy": {"rate", "scale", "diffusion"}, "window": {"T"}}[kind]
    if set(params) - allowed:
        raise ParameterError(f"unknown {kind} parameters {sorted(set(params) - allowed)}")
    if kind == "fbm" and not 0 < params.get("H", 0.5) < 1:
        raise ParameterError("fbm needs H in (0, 1)")
    return kind, params


def _spec(cfg) -> GridSpec:
    return GridSpec(cfg["grid"]["N"], cfg["grid"]["L"])


def _window(cfg, spec) -> float:
    return spec.L / 8 if cfg.get("window") is None else float(cfg["window"])


def _term_seeds(seed: int, k: int):
    # the first term uses the seed itself so single-term runs match the library drivers
    return [seed] + list(np.random.SeedSequence(seed).spawn(k - 1))


def _build_noise(text, spec, T, seed):
    kind, params = _parse_noise(text)
    if kind == "file":
        return read_csv(params["path"], spec), kind, params
    if kind == "window":
        return halfline_window(spec, params.get("T", T)), kind, params
    if kind == "bm":
        return sample_bm(spec, seed, T).noise, kind, params
    if kind == "fbm":
        return sample_fbm(spec, params.get("H", 0.5), seed, T).noise, kind, params
    return sample_levy(spec, params.get("rate", 5.0), params.get("scale", 0.1), params.get("diffusion", 0.0),
                       seed, T=T).noise, kind, params


def _build_kernel(text, spec) -> GridFunction:
    k = parse_kernel(text, spec)
    return k.build(spec) if isinstance(k, KernelSpec) else k


def _build_u0(u0, spec):
    if isinstance(u0, (int, float)):
        return GridFunction.constant(spec, float(u0)), None
    if isinstance(u0, str):
        return read_csv(u0[5:], spec), None
    return None, tuple(read_csv(t[5:], spec) for t in u0["triple"])


def build_problem(cfg: dict, seed: int):
    """``(VolterraProblem, rough_path_or_None)`` for a young, jumps or rough config."""
    spec = _spec(cfg)
    T = _window(cfg, spec)
    kernels = [_build_kernel(k, spec) for k in cfg["kernels"]]
    sigmas = [parse_field(f"{s['kind']}:{s['epsilon']!r}") for s in cfg["sigma"]]
    seeds = _term_seeds(seed, len(kernels))
    ex = cfg["exponents"]
    p = float(ex.get("p", 4.0))
    rp = None
    noises = []
    for i, text in enumerate(cfg["noise"]):
        kind, params = _parse_noise(text)
        if i == 0 and cfg["mode"] == "rough" and kind in ("bm", "fbm"):
            beta = min(float(ex.get("beta1", 0.45)), 0.45)
            chi = halfline_window(spec, T)
            if kind == "bm":
                series = bm_coefficients(spec, chi=chi, beta=beta, p=p)
            else:
                series = fbm_coefficients(spec, params.get("H", 0.5), chi=chi, p=p)
            lift = stochastic_resonant(series, kernels[0], seed, cfg["levels"])
            rp = lift.path
            noises.append(rp.xi)
        else:
            noises.append(_build_noise(text, spec, T, seeds[i])[0])
    u0, triple = _build_u0(cfg["u0"], spec)
    kw = dict(phi1=kernels[0], sigma1=sigmas[0], xi1=noises[0], u0=u0, u0_triple=triple,
              r1=cfg["delays"][0], r2=cfg["delays"][1], p=p, **{k: ex.get(k) for k in ("beta1", "beta2", "gamma1", "gamma2")})
    if len(kernels) > 1:
        kw.update(phi2=kernels[1], sigma2=sigmas[1], xi2=noises[1])
    prob = VolterraProblem(**kw)
    if cfg["mode"] == "rough" and rp is None:
        rp = lift_smooth(prob.phi1, prob.xi1, build_partition(spec))
    return prob, rp


def solve_config(cfg: dict, seed: int, mode: str | None = None):
    """Solve a config; returns ``(u, report, window)``."""
    mode = cfg["mode"] if mode is None else mode
    if mode == "fractional" or cfg["mode"] == "fractional":
        if cfg["mode"] != "fractional":
            raise ParameterError("mode fractional needs a fractional config (r_exp, sigma, u0)")
        spec = _spec(cfg)
        s = cfg["sigma"][0]
        run = run_fractional_sde(cfg["r_exp"], f"{s['kind']}:{s['epsilon']!r}", seed, float(cfg["u0"]), spec,
                                 cfg.get("window"), cfg["levels"], None, cfg["tol"], cfg["max_iter"])
        return run.u, run.report, run.window
    run_cfg = dict(cfg, mode=mode)
    prob, rp = build_problem(run_cfg, seed)
    tol, max_iter = cfg["tol"], cfg["max_iter"]
    if cfg["lambda_grid"] is not None:
        u, _, rep = scale_localize(prob, cfg["lambda_grid"], inner=mode, rp=rp, tol=tol, max_iter=max_iter)
    elif mode == "rough":
        u, _, rep = solve_paracontrolled(prob, rp, tol, max_iter)
    elif mode == "jumps":
        u, rep = solve_young_jumps(prob, tol, max_iter)
    else:
        u, rep = solve_young(prob, tol, max_iter)
    return u, rep, _window(cfg, prob.spec)


# ---------------------------------------------------------------------------
# output helpers


def jsonable(obj):
    """Recursively convert numpy values and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    return repr(obj)


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8",
                          newline="\n")


def write_table(path, header, rows) -> None:
    """CSV with dot decimals and LF endings regardless of locale."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else format(v, ".17g") for v in row) + "\n")


def _columns(u: GridFunction, name: str):
    return [name] if u.channels == 1 else [f"{name}{i + 1}" for i in range(u.channels)]


def write_solution(path, u: GridFunction, upto: float | None = None) -> None:
    x = u.spec.x
    n = len(x) if upto is None else int(round(upto / u.spec.dx)) + 1
    write_table(path, ["t"] + _columns(u, "u"), np.column_stack([x[:n], u.values[:n]]).tolist())


def versions() -> dict:
    import scipy

    return {"paravolt": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version(), "backend": BACKEND}


def write_manifest(out, args, seed, config=None, grid=None, outputs=()) -> Path:
    path = Path(str(out) + ".manifest.json")
    params = {k: v for k, v in vars(args).items() if k not in ("func",)}
    write_json(path, {"command": args.command, "args": params, "seed": seed, "config": config, "grid": grid,
                      "outputs": [str(o) for o in outputs], "versions": versions()})
    return path


def resolve_seed(flag, config_seed=None) -> int:
    if flag is not None:
        return int(flag)
    env = os.environ.get("PARAVOLT_SEED")
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError as exc:
            raise ParameterError(f"PARAVOLT_SEED must be an integer, got {env!r}") from exc
    return 0 if config_seed is None else int(config_seed)


# ---------------------------------------------------------------------------
# subcommands


def cmd_decompose(args) -> int:
    f = read_csv(args.input)
    part = build_partition(f.spec)
    norms = block_norms(f, part, args.p)
    rows = [[j, float(n), float(2.0 ** (j * args.alpha) * n)] for j, n in zip(part.indices, norms)]
    out = sys.stdout
    out.write("j,block_lp_norm,weighted\n")
    for j, n, w in rows:
        out.write(f"{j},{n:.17g},{w:.17g}\n")
    out.write(f"total,{besov(f, part, args.alpha, args.p, args.q):.17g}\n")
    if args.fit:
        fit = fit_regularity(f, part, args.p)
        out.write(f"alpha_hat,{fit.alpha:.17g}\n")
    return 0


def _lift_series(noise: str, spec: GridSpec, beta: float | None, p: float):
    kind, params = _parse_noise(noise)
    if kind == "bm":
        return bm_coefficients(spec, beta=0.45 if beta is None else beta, p=p)
    if kind == "fbm":
        return fbm_coefficients(spec, params.get("H", 0.5), beta=beta, p=p)
    raise ParameterError(f"lift needs a series noise (bm or fbm:H=..), got {noise!r}")


def cmd_lift(args) -> int:
    spec = GridSpec(args.N, args.L)
    seed = resolve_seed(args.seed)
    series = _lift_series(args.noise, spec, args.beta, args.p)
    phi = _build_kernel(args.kernel, spec)
    lift = stochastic_resonant(series, phi, seed, args.levels)
    x = spec.x
    write_table(args.out, ["t", "xi", "mu"], np.column_stack([x, lift.path.xi.scalar, lift.path.mu.scalar]).tolist())
    diag = Path(args.diagnostics) if args.diagnostics else Path(args.out).with_name("diagnostics.csv")
    levels = lift.schedule.levels
    write_table(diag, ["n", "m_n", "cauchy_norm"],
                [[n, int(levels[n - 1]), float(d)] for n, d in enumerate(lift.diagnostics, start=1)])
    write_manifest(args.out, args, seed, grid={"N": spec.N, "L": spec.L}, outputs=(args.out, diag))
    return 0


def cmd_solve(args, cfg=None) -> int:
    cfg = load_config(args.config) if cfg is None else config_from_dict(cfg)
    seed = resolve_seed(args.seed, cfg["seed"])
    mode = args.mode or cfg["mode"]
    if mode == "fractional" and cfg["mode"] != "fractional":
        raise ParameterError("--mode fractional needs a fractional config (r_exp, sigma, u0)")
    if cfg["mode"] == "fractional" and mode not in ("fractional", "rough"):
        raise ParameterError(f"a fractional config is solved in rough mode, not {mode}")
    if cfg["mode"] != "fractional" and mode != cfg["mode"]:
        _check_regime(dict(cfg, mode=mode))
    u, rep, T = solve_config(cfg, seed, None if cfg["mode"] == "fractional" else mode)
    write_solution(args.out, u, None if args.full else T)
    outputs = [args.out]
    if args.report:
        write_json(args.report, dict(rep.as_dict(), seed=seed, window=T))
        outputs.append(args.report)
    write_manifest(args.out, args, seed, config=cfg, grid=cfg["grid"], outputs=outputs)
    print(f"{rep.mode}: {rep.iterations} iterations, residual {rep.residual:.3e}, wrote {args.out}")
    return 0


def _parse_params(text: str | None) -> dict:
    out = {}
    for item in filter(None, (s.strip() for s in (text or "").split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ParameterError(f"model parameter {item!r} is not key=value")
        key, val = key.strip().replace("-", "_"), val.strip()
        try:
            out[key] = int(val) if val.lstrip("-").isdigit() else float(val)
        except ValueError:
            out[key] = val
    return out


def cmd_model(args) -> int:
    seed = resolve_seed(args.seed)
    params = _parse_params(args.params)
    spec = GridSpec(args.N, args.L)
    run = run_model(args.name, params, seed, spec)
    t, u = run.window_values()
    write_table(args.out, ["t", "u"], np.column_stack([t, u]).tolist())
    outputs = [args.out]
    if args.report:
        info = run.as_dict()
        info["extra"] = {k: v for k, v in info["extra"].items() if k not in ("rough_path", "triple")}
        write_json(args.report, dict(info, seed=seed))
        outputs.append(args.report)
    write_manifest(args.out, args, seed, config={"name": args.name, "params": params},
                   grid={"N": spec.N, "L": spec.L}, outputs=outputs)
    print(f"{run.name}: {run.report.iterations} iterations, residual {run.report.residual:.3e}, wrote {args.out}")
    return 0


def cmd_probe(args) -> int:
    from . import acceptance

    seed = resolve_seed(args.seed)
    if args.experiment == "bony":
        res = acceptance.bony_identity(pairs=args.seeds, seed=seed)
        info = res.values
    elif args.experiment == "commutator":
        res = acceptance.operator_slopes(draws=args.seeds, seed=seed)
        info = res.values
    elif args.experiment == "counterexample":
        from .roughpath import illposedness_probe

        rep = illposedness_probe(args.H, args.r, seeds=args.seeds, master_seed=seed, jobs=args.jobs)
        info = rep.as_dict()
        print("level,singular_norm,step_norm")
        sing = np.median(rep.singular_norms, axis=0)
        step = np.median(rep.step_norms, axis=0)
        for lv, a, b in zip(rep.levels, sing, step):
            print(f"{lv},{a:.6g},{b:.6g}")
        print(f"singular_slope,{rep.singular_slope:.6g}")
        print(f"step_slope,{rep.step_slope:.6g}")
    else:
        from .solver import lipschitz_probe

        run = run_fractional_sde(args.r if args.r is not None else 0.9, args.sigma, seed)
        rep = lipschitz_probe(run.problem, run.extra["rough_path"], jobs=args.jobs)
        info = rep.as_dict()
        print("radius,ratio")
        for eps, ratio in zip(rep.radii, rep.ratios):
            print(f"{eps:g},{ratio:.6g}")
        print(f"variation,{rep.variation:.6g}")
    if args.experiment in ("bony", "commutator"):
        print(res.detail)
    if args.out:
        write_json(args.out, dict(info, experiment=args.experiment, seed=seed))
        write_manifest(args.out, args, seed, outputs=(args.out,))
    return 0


def cmd_accept(args) -> int:
    from .acceptance import format_table, run_suite

    only = None if not args.only else [int(v) for v in args.only.split(",")]
    results = run_suite(args.suite, only, jobs=args.jobs, echo=print)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    if args.json:
        write_json(args.json, [r.as_dict() for r in results])
    return 0 if passed == len(results) else 1


def cmd_replay(args) -> int:
    man = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    ns = argparse.Namespace(**man["args"])
    ns.seed = man["seed"]
    ns.command = man["command"]
    if args.out:
        ns.out = args.out
        for key in ("report", "diagnostics"):
            if getattr(ns, key, None):
                setattr(ns, key, str(Path(args.out).with_name(Path(getattr(ns, key)).name)))
    if ns.command == "solve":
        return cmd_solve(ns, cfg=man["config"])
    return COMMANDS[ns.command](ns)


COMMANDS = {"decompose": cmd_decompose, "lift": cmd_lift, "solve": cmd_solve, "model": cmd_model,
            "probe": cmd_probe, "accept": cmd_accept, "replay": cmd_replay}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="paravolt", description="Paracontrolled Volterra equations on a periodic grid.")
    ap.add_argument("--version", action="version", version=f"paravolt {__version__} ({BACKEND} backend)")
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="Littlewood-Paley block norms of a CSV grid function")
    p.add_argument("--input", required=True)
    p.add_argument("--p", type=float, default=math.inf)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--q", type=float, default=math.inf)
    p.add_argument("--fit", action="store_true", help="also print the fitted regularity")

    def grid(p):
        p.add_argument("--N", type=int, default=4096)
        p.add_argument("--L", type=float, default=2.0)

    p = sub.add_parser("lift", help="stochastic resonant lift of a series noise")
    p.add_argument("--noise", required=True, help="bm or fbm:H=0.4")
    p.add_argument("--kernel", required=True, help="e.g. frac:r=0.9,T=0.25")
    p.add_argument("--seed", type=int)
    p.add_argument("--levels", type=int, default=6)
    p.add_argument("--beta", type=float)
    p.add_argument("--p", type=float, default=4.0)
    p.add_argument("--out", required=True)
    p.add_argument("--diagnostics", help="defaults to diagnostics.csv next to --out")
    grid(p)

    p = sub.add_parser("solve", help="solve a problem described by a JSON config")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="solution.csv")
    p.add_argument("--report")
    p.add_argument("--seed", type=int)
    p.add_argument("--full", action="store_true", help="write the whole grid, not just the solution window")

    p = sub.add_parser("model", help="run one of the application drivers")
    p.add_argument("--name", required=True, choices=MODELS)
    p.add_argument("--params", help="k=v,... passed to the driver")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="run.csv")
    p.add_argument("--report")
    grid(p)

    p = sub.add_parser("probe", help="numerical experiments")
    p.add_argument("--experiment", required=True, choices=("bony", "commutator", "counterexample", "lipschitz"))
    p.add_argument("--H", type=float, default=0.6)
    p.add_argument("--r", type=float)
    p.add_argument("--sigma", default="sin:0.5")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="JSON report")

    p = sub.add_parser("accept", help="run the acceptance suite")
    p.add_argument("--suite", default="core", choices=("core", "quick"))
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--json")

    p = sub.add_parser("replay", help="rerun a recorded manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="write to this path instead of the recorded one")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "probe" and args.experiment == "counterexample" and args.r is None:
        args.r = 0.75
    if getattr(args, "jobs", 1) < 1:
        parser.print_usage(sys.stderr)
        print("paravolt: error: --jobs must be at least 1", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print("paravolt: invalid config:", file=sys.stderr)
        for prob in exc.problems:
            print(f"  - {prob}", file=sys.stderr)
        return 1
    except ParavoltError as exc:
        print(f"paravolt: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"paravolt: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
