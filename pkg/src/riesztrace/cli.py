"""Batch front end: ``riesztrace <command> [config] [key=value ...]``.

A config file holds ``key = value`` lines; command-line ``key=value`` pairs
override it.  Every run writes its CSV/text outputs plus ``manifest.txt``
(resolved parameters, seed, version) into the output directory.

Exit codes: 0 success, 1 usage or input error, 2 tolerance not met,
3 precondition violated.
"""

from __future__ import annotations

import argparse
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import formats
from .content import GridField, choquet_integral, maximal_function
from .corpus import default_corpus, grid_flow_loops
from .counterexample import CounterexampleConfig, blowup_table, default_t_ladder, verify_lower_bound
from .errors import FormatError, PreconditionError, SingularPointError, ToleranceNotMet
from .harness import (HomogeneousKernel, conjecture_segment_test, gradient_kernel, rotation_kernel,
                      trace_ratio_sweep, verify_proposition_bounds, zero_kernel)
from .measures import TestMeasure, total_variation
from .morrey import morrey_norm
from .quadrature import QuadratureBudget
from .riesz import RieszContext, potential
from .smirnov import decompose, diameter_tv_ratio, loops_to_measures, random_grid_flow

EXIT_OK, EXIT_USAGE, EXIT_TOLERANCE, EXIT_PRECONDITION = 0, 1, 2, 3


def _floatlist(s):
    return tuple(float(v) for v in s.replace(",", " ").split())


def _intlist(s):
    return tuple(int(v) for v in s.replace(",", " ").split())


def _bool(s):
    low = s.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


COMMON = {
    "out": (str, "out"),
    "seed": (int, 0),
    "rel_tol": (float, 1e-10),
    "abs_tol": (float, 1e-14),
    "max_depth": (int, 40),
}

COMMANDS = {
    "potential": {
        "measure": (str, None), "alpha": (float, None), "origin": (_floatlist, None),
        "spacing": (float, None), "extents": (_intlist, None), "normalize": (_bool, False),
    },
    "morrey": {
        "measure": (str, None), "segments": (str, None), "beta": (float, None),
        "r_min": (float, 0.0), "refinement": (int, 4),
    },
    "choquet": {
        "field": (str, None), "beta": (float, None), "levels": (int, 64), "radii": (_floatlist, ()),
    },
    "decompose": {
        "flow": (str, None), "shape": (_intlist, (16, 16)), "max_value": (int, 3), "density": (float, 0.5),
    },
    "verify-prop21": {
        "measure": (str, None), "loops": (int, 20), "alphas": (_floatlist, (1.2, 1.5, 1.8)),
        "n_inner": (int, 400), "n_directions": (int, 360),
    },
    "trace-sweep": {
        "corpus": (str, None), "alphas": (_floatlist, (1.5,)), "loops": (int, 50), "d": (int, 2),
        "r_min": (float, 0.0),
    },
    "counterexample": {
        "d": (int, 2), "s_values": (_floatlist, (1e-2, 1e-4, 1e-6, 1e-8)), "x1_samples": (int, 999),
        "t_values": (_floatlist, None),
    },
    "conjecture": {
        "kernel": (str, "gradient"), "d": (int, 2), "resolution": (int, 1024), "n_sphere": (int, 720),
    },
}


def parse_config_text(text: str, schema: dict, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines against ``schema``; errors carry the line number."""
    out = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise FormatError(f"expected 'key = value', got {line!r}", source, no)
        out[key] = _convert(key, value.strip(), schema, source, no)
    return out


def _convert(key, value, schema, source, no):
    if key not in schema:
        raise FormatError(f"unknown key {key!r} (allowed: {', '.join(sorted(schema))})", source, no)
    conv = schema[key][0]
    try:
        return conv(value)
    except ValueError as exc:
        raise FormatError(f"bad value for {key!r}: {exc}", source, no) from exc


def resolve(command: str, config_path=None, overrides=()) -> dict:
    schema = {**COMMON, **COMMANDS[command]}
    params = {k: v[1] for k, v in schema.items()}
    base = Path(".")
    if config_path is not None:
        p = Path(config_path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise FormatError(f"cannot read config: {exc.strerror}", str(p)) from exc
        params.update(parse_config_text(text, schema, str(p)))
        base = p.parent
    for i, item in enumerate(overrides, start=1):
        key, sep, value = item.partition("=")
        if not sep:
            raise FormatError(f"override {item!r} is not key=value", "<command line>", i)
        params[key.strip()] = _convert(key.strip(), value.strip(), schema, "<command line>", i)
    params["_base"] = base
    return params


def _path(params, key):
    val = params.get(key)
    if val is None:
        return None
    p = Path(val)
    return p if p.is_absolute() else params["_base"] / p


def _require(params, *keys):
    for k in keys:
        if params.get(k) is None:
            raise FormatError(f"missing required parameter {k!r}")


def _budget(params) -> QuadratureBudget:
    return QuadratureBudget(params["rel_tol"], params["abs_tol"], params["max_depth"])


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def write_manifest(out: Path, command: str, params: dict, outputs: list) -> Path:
    lines = [f"command = {command}", f"version = {version()}"]
    for k in sorted(params):
        if k.startswith("_"):
            continue
        v = params[k]
        if isinstance(v, tuple):
            v = " ".join(formats.fmt(x) for x in v)
        elif v is None:
            v = ""
        else:
            v = formats.fmt(v)
        lines.append(f"{k} = {v}")
    lines.append("outputs = " + " ".join(sorted(outputs)))
    path = out / "manifest.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


def run_potential(p, out, rng):
    _require(p, "measure", "alpha", "origin", "spacing", "extents")
    F = formats.read_segments(_path(p, "measure"))
    ctx = RieszContext(F.dim, p["alpha"], p["normalize"])
    ctx.require_evaluable()
    g = GridField(F.dim, np.array(p["origin"]), p["spacing"], p["extents"],
                  np.zeros(tuple(p["extents"]) + (F.dim,)))
    vals = potential(ctx, F, g.centers(), _budget(p))
    formats.write_text(out / "potential.grid", formats.dumps_grid_field(g.with_values(
        vals.reshape(tuple(p["extents"]) + (F.dim,)))))
    return ["potential.grid"]


def run_morrey(p, out, rng):
    _require(p, "beta")
    if p["measure"] is not None:
        nu = formats.read_test_measure(_path(p, "measure"))
    elif p["segments"] is not None:
        nu = TestMeasure.arclength_of(formats.read_segments(_path(p, "segments")))
    else:
        raise FormatError("morrey needs 'measure' (test measure file) or 'segments'")
    r = morrey_norm(nu, p["beta"], p["r_min"], p["refinement"])
    header = ["beta", "value", "lower_bound", "upper_bound", "certified", "witness_radius"]
    header += [f"witness_x{i + 1}" for i in range(nu.dim)]
    formats.write_csv(out / "morrey.csv", header,
                      [[p["beta"], r.value, r.lower_bound, r.upper_bound, r.certified, r.witness_radius,
                        *r.witness_center]])
    return ["morrey.csv"]


def run_choquet(p, out, rng):
    _require(p, "field", "beta")
    g = formats.read_grid_field(_path(p, "field"))
    if p["radii"]:
        g = maximal_function(g, p["radii"])
    vals = g.magnitude()
    pos = vals[vals > 0]
    t_grid = np.geomspace(pos.min(), pos.max(), p["levels"]) if len(pos) and pos.max() > pos.min() else None
    upper, lower = choquet_integral(g, p["beta"], t_grid)
    formats.write_csv(out / "choquet.csv", ["beta", "levels", "upper", "lower"],
                      [[p["beta"], p["levels"], upper, lower]])
    return ["choquet.csv"]


def run_decompose(p, out, rng):
    if p["flow"] is not None:
        G = formats.read_grid_flow(_path(p, "flow"))
    else:
        G = random_grid_flow(p["shape"], rng, p["max_value"], p["density"])
    L = decompose(G)
    measures = loops_to_measures(G, L)
    rows = []
    for k, (loop, mu) in enumerate(zip(L, measures)):
        rows.append([k, loop.weight, len(loop.edges), total_variation(mu), diameter_tv_ratio(mu)])
    formats.write_csv(out / "loops.csv", ["loop", "weight", "edges", "total_variation", "diameter_over_tv"], rows)
    if measures:
        soup = measures[0]
        for mu in measures[1:]:
            soup = soup.concat(mu)
        formats.write_text(out / "loops.txt", formats.dumps_segments(soup, [len(m) for m in measures]))
    else:
        formats.write_text(out / "loops.txt", f"dim={G.dim}\n")
    tv_loops = sum(r[3] for r in rows)
    formats.write_csv(out / "decompose_summary.csv", ["loops", "flow_total_variation", "loops_total_variation"],
                      [[len(L), G.total_variation(), tv_loops]])
    return ["loops.csv", "loops.txt", "decompose_summary.csv"]


def run_prop21(p, out, rng):
    if p["measure"] is not None:
        loops = [formats.read_segments(_path(p, "measure"))]
    else:
        loops = grid_flow_loops(rng, p["loops"])
    rows = []
    for k, mu in enumerate(loops):
        for a in p["alphas"]:
            fit = verify_proposition_bounds(mu, a, p["n_inner"], p["n_directions"], seed=p["seed"],
                                            budget=_budget(p))
            rows.append([k, a, fit.inner, fit.outer, fit.outer_variation(), fit.morrey_norm, fit.radius])
    formats.write_csv(out / "prop21.csv",
                      ["loop", "alpha", "inner", "outer", "outer_variation", "morrey_norm", "radius"], rows)
    return ["prop21.csv"]


def read_corpus(path):
    """Corpus file lines: ``loop <file>``, ``measure <file>``, ``alpha <a> ...``."""
    text = Path(path).read_text() if Path(path).exists() else None
    if text is None:
        raise FormatError("cannot read corpus file", str(path))
    base = Path(path).parent
    Fs, nus, alphas = [], [], []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kind, _, rest = line.partition(" ")
        rest = rest.strip()
        if kind == "loop":
            Fs.append(formats.read_segments(base / rest))
        elif kind == "measure":
            nus.append(formats.read_test_measure(base / rest))
        elif kind == "alpha":
            try:
                alphas.extend(_floatlist(rest))
            except ValueError as exc:
                raise FormatError(str(exc), str(path), no) from exc
        else:
            raise FormatError(f"expected 'loop', 'measure' or 'alpha', got {kind!r}", str(path), no)
    return Fs, nus, alphas


def run_trace_sweep(p, out, rng):
    alphas = p["alphas"]
    d = p["d"]
    for a in alphas:
        RieszContext(d, a).require_trace_range()
    if p["corpus"] is not None:
        Fs, nus, extra = read_corpus(_path(p, "corpus"))
        alphas = tuple(extra) or alphas
    else:
        if d != 2:
            raise PreconditionError("the built-in corpus is planar; pass a corpus file for d > 2")
        Fs, nus = default_corpus(rng, p["loops"])
    reports = trace_ratio_sweep(Fs, nus, alphas, _budget(p), p["r_min"])
    rows, summary = [], []
    for r in reports:
        rows += [[r.alpha, pid, v] for pid, v in zip(r.pair_ids, r.ratios)]
        summary.append([r.alpha, len(r.ratios), r.sup, r.mean, r.argmax])
    formats.write_csv(out / "trace_ratios.csv", ["alpha", "pair", "ratio"], rows)
    formats.write_csv(out / "trace_summary.csv", ["alpha", "pairs", "sup", "mean", "argmax"], summary)
    return ["trace_ratios.csv", "trace_summary.csv"]


def run_counterexample(p, out, rng):
    cfg = CounterexampleConfig(p["d"], p["s_values"], p["x1_samples"], p["t_values"])
    lb = verify_lower_bound(cfg)
    formats.write_csv(out / "lower_bound.csv",
                      ["s", "min_value", "bound", "intermediate", "pass", "min_margin"],
                      [[r.s, r.min_value, r.bound, r.intermediate, r.pass_flag, r.min_margin] for r in lb])
    rows = blowup_table(cfg, cfg.t_values or default_t_ladder())
    formats.write_csv(out / "blowup.csv",
                      ["t", "s", "potential_bound", "min_sampled", "morrey_norm", "superlevel_mass",
                       "dual_lower_bound"],
                      [[r.t, r.s, r.potential_bound, r.min_sampled, r.morrey_norm, r.superlevel_mass,
                        r.dual_lower_bound] for r in rows])
    return ["lower_bound.csv", "blowup.csv"]


def _kernel(name: str, d: int) -> HomogeneousKernel:
    named = {"gradient": lambda: gradient_kernel(d), "zero": lambda: zero_kernel(d)}
    if name == "rotation":
        if d != 2:
            raise PreconditionError("the rotation kernel is planar")
        return rotation_kernel()
    if name in named:
        return named[name]()
    return HomogeneousKernel(d, [c.strip() for c in name.split(";")])


def run_conjecture(p, out, rng):
    try:
        K = _kernel(p["kernel"], p["d"])
    except (SyntaxError, TypeError, ValueError) as exc:
        if isinstance(exc, PreconditionError):
            raise
        raise FormatError(f"cannot parse kernel {p['kernel']!r}: {exc}") from exc
    rep = conjecture_segment_test(K, p["resolution"], p["n_sphere"], p["seed"])
    rows = [[n, v, rep.residual, rep.verdict] for n, v in zip(rep.resolutions, rep.pairings)]
    formats.write_csv(out / "conjecture.csv", ["resolution", "pairing", "residual", "verdict"], rows)
    return ["conjecture.csv"]


RUNNERS = {
    "potential": run_potential,
    "morrey": run_morrey,
    "choquet": run_choquet,
    "decompose": run_decompose,
    "verify-prop21": run_prop21,
    "trace-sweep": run_trace_sweep,
    "counterexample": run_counterexample,
    "conjecture": run_conjecture,
}


def run(command: str, config_path=None, overrides=()) -> int:
    """Resolve parameters, run one command, write outputs and manifest; return the exit code."""
    try:
        params = resolve(command, config_path, overrides)
        out = Path(params["out"])
        out.mkdir(parents=True, exist_ok=True)
        rng = np.random.default_rng(params["seed"])
        outputs = RUNNERS[command](params, out, rng)
        write_manifest(out, command, params, outputs)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ToleranceNotMet as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except (PreconditionError, SingularPointError) as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="riesztrace", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=sorted(RUNNERS))
    parser.add_argument("config", nargs="?", help="key = value config file")
    parser.add_argument("overrides", nargs="*", help="key=value overrides")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    config, overrides = args.config, list(args.overrides)
    if config is not None and "=" in config:
        overrides.insert(0, config)
        config = None
    return run(args.command, config, overrides)


if __name__ == "__main__":
    sys.exit(main())
