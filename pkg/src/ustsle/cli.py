"""Command-line runner.

Every subcommand reads an optional JSON config (``--config``) whose keys can
be overridden by flags.  A seed is required wherever randomness is used.
Exit status: 0 success, 1 a check failed, 2 usage or configuration error
(with a JSON error object on stderr).
"""

from __future__ import annotations

import argparse
import hashlib
import inspect
import json
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, experiments as ex
from .graph import GraphError, build_square_domain, load_graph, p3_probe, save_graph
from .harmonic import kernels, square_boundary_edge, unit_square
from .linkpat import CoefficientError, LinkPattern, continuum_Z, default_table, discrete_Z
from .loewner import BatchPartition, extract_driving, simulate_partition_sle, write_manifest
from .oracle import enumerate_trees, pairing_probabilities
from .sampler import RngStream, estimate_link_pattern_probs


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Preset:
    driver: object
    description: str
    defaults: dict = field(default_factory=dict)


PRESETS: dict[str, Preset] = {
    "exact-pairing": Preset(ex.exact_pairing_check, "coefficient recovery and exact pairing probabilities on fresh instances"),
    "prop3.4-exact": Preset(ex.branch_martingale_suite, "five branch martingales checked exactly on the bundled 3x3 instance"),
    "bdry-visit-bijection": Preset(ex.boundary_visit_suite, "boundary-visit probabilities and the cutting bijection, tree by tree"),
    "thm2.2-N2-square": Preset(ex.pairing_convergence, "pairing frequencies on unit squares against continuum values"),
    "pde-thm2.3": Preset(ex.pde_scan, "second-order equation residuals and step-halving ratios"),
    "sde-identities": Preset(ex.sde_identities, "quadratic variation and noise-free drift of the driving process"),
    "sle-martingale": Preset(ex.sle_martingale, "stopped Poisson-kernel observable under the partition-function SLE"),
    "loewner-numerics": Preset(ex.loewner_numerics, "closed-form maps, slit-map round trips, normalization"),
    "kernel-suite": Preset(ex.kernel_suite, "Green function identities, probe values, walk exits, kernel ratios"),
    "driving-shadow": Preset(ex.driving_shadow, "driving-function moments of sampled branches against the SDE"),
}

# generic config keys and the driver parameters they feed
GENERIC_KEYS = {"samples": ("samples", "n_paths", "walks"), "meshes": ("sizes",)}


@dataclass
class ExperimentConfig:
    experiment: str | None = None
    graph: dict | None = None
    marked: list | dict | None = None
    N: int | None = None
    condition: str | None = None
    samples: int | None = None
    meshes: list[int] | None = None
    seed: int | None = None
    out_dir: str = "."
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        if cfg.seed is not None and (not isinstance(cfg.seed, int) or cfg.seed < 0):
            raise ConfigError("seed must be a non-negative integer")
        if not isinstance(cfg.params, dict):
            raise ConfigError("params must be an object")
        return cfg

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True, default=str).encode()).hexdigest()

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("a seed is required (--seed or 'seed' in the config)")
        return self.seed


# ---------------------------------------------------------------- config resolution


def resolve_graph(cfg: ExperimentConfig):
    source = cfg.graph or {"unit_square": 8}
    if not isinstance(source, dict) or len(source) != 1:
        raise ConfigError("graph must be an object with exactly one of: square, unit_square, file, probe")
    (kind, arg), = source.items()
    if kind == "square":
        cols, rows, *mesh = arg
        return build_square_domain(int(cols), int(rows), float(mesh[0]) if mesh else 1.0)
    if kind == "unit_square":
        return unit_square(int(arg))
    if kind == "file":
        if not Path(arg).exists():
            raise ConfigError(f"graph file {arg} does not exist")
        return load_graph(arg)
    if kind == "probe":
        return p3_probe()
    raise ConfigError(f"unknown graph kind {kind!r}")


def resolve_marked(cfg: ExperimentConfig, graph) -> list[int]:
    m = cfg.marked
    if m is None:
        raise ConfigError("marked edges are required")
    if isinstance(m, list):
        edges = [int(e) for e in m]
    elif isinstance(m, dict) and "positions" in m:
        order = graph.boundary_edge_order
        edges = [int(order[i]) for i in m["positions"]]
    elif isinstance(m, dict) and "points" in m:
        source = cfg.graph or {}
        if "unit_square" not in source:
            raise ConfigError("marked points need a unit_square graph")
        edges = [square_boundary_edge(int(source["unit_square"]), tuple(p)) for p in m["points"]]
    else:
        raise ConfigError("marked must be a list of edge ids or an object with 'positions' or 'points'")
    if len(edges) % 2 or not edges:
        raise ConfigError("an even, positive number of marked edges is required")
    if cfg.N is not None and len(edges) != 2 * cfg.N:
        raise ConfigError(f"N={cfg.N} needs {2 * cfg.N} marked edges, got {len(edges)}")
    return edges


def _condition(cfg: ExperimentConfig) -> LinkPattern | None:
    if cfg.condition in (None, "all", "total"):
        return None
    try:
        return LinkPattern.parse(cfg.condition)
    except ValueError as exc:
        raise ConfigError(f"bad condition {cfg.condition!r}: {exc}") from exc


def preset_kwargs(name: str, cfg: ExperimentConfig) -> dict:
    preset = PRESETS[name]
    sig = inspect.signature(preset.driver.__wrapped__)
    kwargs = dict(preset.defaults)
    for key, targets in GENERIC_KEYS.items():
        val = getattr(cfg, key)
        if val is None:
            continue
        hit = [t for t in targets if t in sig.parameters]
        if not hit:
            raise ConfigError(f"preset {name!r} does not take {key!r}")
        kwargs[hit[0]] = val
    unknown = set(cfg.params) - set(sig.parameters)
    if unknown:
        raise ConfigError(f"preset {name!r} has no parameters {sorted(unknown)}")
    kwargs.update(cfg.params)
    if "seed" in sig.parameters:
        kwargs["seed"] = cfg.require_seed()
    return kwargs


# ---------------------------------------------------------------- output


def versions() -> dict:
    import numba
    import scipy

    return {"ustsle": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


def emit(rows: list[dict], out_dir: Path, stem: str, fmt: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    res = ex.CheckResult(stem, True, "", rows)
    path = out_dir / f"{stem}.{fmt}"
    if fmt == "csv":
        res.write_csv(path)
    else:
        path.write_text(json.dumps([{k: ex._fmt(v) for k, v in r.items()} for r in rows], indent=1))
    return path


def finish(cfg: ExperimentConfig, command: str, outputs: list[Path], t0: float, passed: bool = True, extra=None) -> int:
    manifest = {
        "command": command,
        "config": asdict(cfg),
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "versions": versions(),
        "runtime_seconds": time.perf_counter() - t0,
        "outputs": [str(p) for p in outputs],
        "passed": passed,
        **(extra or {}),
    }
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    write_manifest(Path(cfg.out_dir) / f"{command}.manifest.json", json.loads(json.dumps(manifest, default=str)))
    return 0 if passed else 1


# ---------------------------------------------------------------- subcommands


def cmd_graph(cfg, args):
    t0 = time.perf_counter()
    g = resolve_graph(cfg)
    g.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "graph.json"
    save_graph(g, path)
    rows = [{"edge": int(e), "position": k, "boundary_vertex": int(g.boundary_endpoint(e)),
             "x": float(g.xy[g.boundary_endpoint(e)][0]), "y": float(g.xy[g.boundary_endpoint(e)][1])}
            for k, e in enumerate(g.boundary_edge_order)]
    table = emit(rows, out, "boundary_edges", args.format)
    return finish(cfg, "graph", [path, table], t0, extra={"vertices": int(g.n_vertices), "interior": int(g.interior.size)})


def cmd_kernels(cfg, args):
    t0 = time.perf_counter()
    g = resolve_graph(cfg)
    marked = resolve_marked(cfg, g)
    ks = kernels(g, exact=args.exact)
    rows = []
    for a in marked:
        for b in marked:
            rows.append({"e1": a, "e2": b, "K": ks.K(a, b) if a != b else "", "kind": "excursion"})
    for v in g.interior:
        for e in marked:
            rows.append({"e1": e, "v": int(v), "P": ks.P(int(v), e), "kind": "poisson"})
    rows = [{k: (str(x) if isinstance(x, Fraction) else x) for k, x in r.items()} for r in rows]
    return finish(cfg, "kernels", [emit(rows, Path(cfg.out_dir), "kernels", args.format)], t0)


def cmd_zfuncs(cfg, args):
    t0 = time.perf_counter()
    N = cfg.N or (len(cfg.marked) // 2 if isinstance(cfg.marked, list) else None)
    rows = []
    if args.x:
        x = [float(v) for v in args.x.split(",")]
        table = default_table(len(x) // 2)
        for a in ("total", *table.patterns):
            rows.append({"alpha": str(a), "continuum_Z": continuum_Z(a, x, table)})
    else:
        g = resolve_graph(cfg)
        marked = resolve_marked(cfg, g)
        table = default_table(N or len(marked) // 2)
        ks = kernels(g, exact=args.exact)
        for a in ("total", *table.patterns):
            z = discrete_Z(g, marked, a, table, ks=ks)
            rows.append({"alpha": str(a), "Z": str(z) if isinstance(z, Fraction) else float(z)})
    return finish(cfg, "zfuncs", [emit(rows, Path(cfg.out_dir), "zfuncs", args.format)], t0)


def _sample_chunk(job):
    g, marked, n, seed, stream_id, method = job
    est = estimate_link_pattern_probs(g, marked, n, RngStream(seed, stream_id), method=method)
    return stream_id, [r.count for r in est.rows], est.proposals


SAMPLE_CHUNK = 1000


def cmd_sample(cfg, args):
    """Pairing frequencies, drawn in fixed-size chunks so the result does not depend on ``--workers``."""
    t0 = time.perf_counter()
    seed = cfg.require_seed()
    g = resolve_graph(cfg)
    marked = resolve_marked(cfg, g)
    total = cfg.samples or 1000
    sizes = [min(SAMPLE_CHUNK, total - s) for s in range(0, total, SAMPLE_CHUNK)]
    jobs = [(g, marked, n, seed, k, args.method) for k, n in enumerate(sizes)]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            parts = sorted(pool.map(_sample_chunk, jobs))
    else:
        parts = [_sample_chunk(j) for j in jobs]
    counts = np.sum([p[1] for p in parts], axis=0)
    proposals = sum(p[2] for p in parts)
    table = default_table(len(marked) // 2)
    rows = []
    for a, c in zip(table.patterns, counts):
        p = c / total
        rows.append({"alpha": str(a), "count": int(c), "p_hat": p, "stderr": float(np.sqrt(p * (1 - p) / total))})
    out = emit(rows, Path(cfg.out_dir), "pattern_estimates", args.format)
    return finish(cfg, "sample", [out], t0, extra={"acceptance_rate": total / proposals, "proposals": int(proposals)})


def cmd_oracle(cfg, args):
    t0 = time.perf_counter()
    g = resolve_graph(cfg)
    marked = resolve_marked(cfg, g)
    ens = enumerate_trees(g)
    probs = pairing_probabilities(ens, marked)
    table = default_table(len(marked) // 2)
    ks = kernels(g, exact=True)
    rows, ok = [], True
    for a, p in probs.items():
        z = discrete_Z(g, marked, a, table, ks=ks)
        ok &= z == p
        rows.append({"alpha": str(a), "enumeration": str(p), "formula": str(z), "exact_match": z == p})
    out = emit(rows, Path(cfg.out_dir), "oracle", args.format)
    return finish(cfg, "oracle", [out], t0, passed=bool(ok), extra={"trees": ens.n_trees})


def cmd_loewner(cfg, args):
    t0 = time.perf_counter()
    out_dir = Path(cfg.out_dir)
    if args.curve:
        if not Path(args.curve).exists():
            raise ConfigError(f"curve file {args.curve} does not exist")
        pts = np.loadtxt(args.curve, delimiter=",", ndmin=2)
        d = extract_driving(pts[:, 0] + 1j * pts[:, 1])
        rows = [{"t": float(t), "W": float(w)} for t, w in zip(d.times, d.values)]
        return finish(cfg, "loewner", [emit(rows, out_dir, "driving", args.format)], t0)
    seed = cfg.require_seed()
    p = cfg.params
    x0 = p.get("x0", [0.0, 1.0])
    ev = BatchPartition(default_table(len(x0) // 2), "total" if cfg.condition in (None, "all", "total") else _condition(cfg))
    ens = simulate_partition_sle(x0, int(p.get("j", 1)), ev, float(p.get("dt", 1e-4)), RngStream(seed).gen,
                                 n_paths=cfg.samples or 100, t_end=float(p.get("t_end", 0.05)), record=False)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "sle_paths.csv"
    ens.write_csv(path)
    return finish(cfg, "loewner", [path], t0, extra={"ensemble": ens.manifest(seed)})


def cmd_experiment(cfg, args):
    name = args.name or cfg.experiment
    if name is None:
        raise ConfigError("experiment name required (positional or 'experiment' in the config)")
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; see list-presets")
    cfg.experiment = name
    t0 = time.perf_counter()
    res = PRESETS[name].driver(**preset_kwargs(name, cfg))
    out = emit(res.rows, Path(cfg.out_dir), name, args.format)
    print(res.line())
    return finish(cfg, name, [out], t0, passed=res.passed, extra={"summary": res.summary})


def cmd_list_presets(cfg, args):
    for name, p in PRESETS.items():
        print(f"{name}\t{p.description}")
    return 0


COMMANDS = {
    "graph": cmd_graph,
    "kernels": cmd_kernels,
    "zfuncs": cmd_zfuncs,
    "sample": cmd_sample,
    "oracle": cmd_oracle,
    "loewner": cmd_loewner,
    "experiment": cmd_experiment,
    "list-presets": cmd_list_presets,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out-dir")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--exact", action="store_true", help="exact rational kernels")
    parser = _Parser(prog="ustsle", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "experiment":
            p.add_argument("name", nargs="?")
        if name == "sample":
            p.add_argument("--method", choices=("sequential", "rejection"), default="sequential")
        if name == "zfuncs":
            p.add_argument("--x", help="comma-separated increasing points for the continuum functions")
        if name == "loewner":
            p.add_argument("--curve", help="CSV of x,y points to unzip")
    return parser


def load_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    cfg = ExperimentConfig.from_dict(data)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative")
        cfg.seed = args.seed
    if args.out_dir:
        cfg.out_dir = args.out_dir
    if args.workers < 1:
        raise ConfigError("--workers must be positive")
    return cfg


def _error(kind: str, exc: Exception) -> int:
    print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
    return 2


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, GraphError, CoefficientError, TypeError, KeyError) as exc:
        return _error(type(exc).__name__, exc)
    except ValueError as exc:
        return _error("ValueError", exc)


if __name__ == "__main__":
    sys.exit(main())
