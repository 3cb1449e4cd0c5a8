"""Command line interface: validate, tree, measure, count, exponent,
bracket, cutsets.

Configs are strict JSON (unknown fields are rejected so typos in experiment
sweeps fail loudly). Scientific outputs are deterministic functions of
(config, seed): JSON is written with sorted keys, CSVs with 17 significant
digits, and wall-clock metadata lives in a separate ``*_meta.json`` sidecar
so the main outputs are hash-comparable across runs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .assembly import DIRICHLET, NEUMANN, assemble, pencil_to_csv, refine_uniform
from .catalog import Catalog, catalog_from_dict, scale_extrema, validate_catalog
from .errors import VVCantorError
from .eigensolve import counting_to_csv, inertia_counts
from .measure import cells_to_csv, decompose, gaps_to_csv
from .rng import Xoshiro256StarStar, stream_seed
from .spectral import (MonteCarloNeckEvaluator, TREE_STREAM, bracketing_check,
                       cutset_stats_check, empirical_exponent,
                       gamma_exact_homogeneous, solve_gamma,
                       solve_gamma_recursive)
from .vtree import build_tree, environments_to_obj, tree_to_jsonl

_TOP_KEYS = {"schema", "catalog", "v", "seed", "depth", "level", "splits",
             "k_range", "x_grid", "mc_blocks", "root_type", "node_cap",
             "env_levels"}


@dataclass
class RunConfig:
    catalog: Catalog
    v: int
    seed: int
    depth: int
    level: int
    splits: int
    k_range: tuple[int, int]
    x_grid: tuple[float, float, int]
    mc_blocks: int
    root_type: int | None
    node_cap: int
    env_levels: int | None
    raw: dict

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        unknown = set(doc) - _TOP_KEYS
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        if doc.get("schema") != 1:
            raise ValueError("config schema must be 1")
        if "catalog" not in doc or "seed" not in doc:
            raise ValueError("config requires 'catalog' and 'seed'")
        catalog = catalog_from_dict(doc["catalog"])
        v = int(doc.get("v", 1))
        if v < 1:
            raise ValueError("v must be >= 1")
        seed = int(doc["seed"])
        if not 0 <= seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        depth = int(doc.get("depth", doc.get("level", 8)))
        level = int(doc.get("level", depth))
        if depth < 0 or level < 0:
            raise ValueError("depth and level must be >= 0")
        splits = int(doc.get("splits", 1))
        if splits < 1:
            raise ValueError("splits must be >= 1")
        k_range = doc.get("k_range", [0, 3])
        if len(k_range) != 2 or k_range[0] > k_range[1] or k_range[0] < 0:
            raise ValueError("k_range must be [lo, hi] with 0 <= lo <= hi")
        grid = doc.get("x_grid", {"lo": 1.0, "hi": 1e4, "count": 16})
        unknown = set(grid) - {"lo", "hi", "count"}
        if unknown:
            raise ValueError(f"unknown x_grid fields: {sorted(unknown)}")
        if grid["count"] < 2:
            raise ValueError("x_grid count must be >= 2")
        if not 0 < grid["lo"] < grid["hi"]:
            raise ValueError("x_grid needs 0 < lo < hi")
        mc_blocks = int(doc.get("mc_blocks", 1000))
        if mc_blocks < 2:
            raise ValueError("mc_blocks must be >= 2")
        root_type = doc.get("root_type")
        if root_type is not None:
            root_type = int(root_type)
            if not 0 <= root_type < v:
                raise ValueError("root_type outside {0..v-1}")
        node_cap = int(doc.get("node_cap", 10_000_000))
        env_levels = doc.get("env_levels")
        return cls(catalog=catalog, v=v, seed=seed, depth=depth, level=level,
                   splits=splits, k_range=(int(k_range[0]), int(k_range[1])),
                   x_grid=(float(grid["lo"]), float(grid["hi"]), int(grid["count"])),
                   mc_blocks=mc_blocks, root_type=root_type, node_cap=node_cap,
                   env_levels=None if env_levels is None else int(env_levels),
                   raw=doc)

    def grid(self) -> np.ndarray:
        lo, hi, count = self.x_grid
        return np.geomspace(lo, hi, count)

    def sha256(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _meta(cfg: RunConfig, subcommand: str) -> dict:
    return {
        "config_sha256": cfg.sha256(),
        "seed": cfg.seed,
        "package_version": __version__,
        "backend": _kernels.current_backend(),
        "subcommand": subcommand,
    }


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _tree_rng(cfg: RunConfig) -> Xoshiro256StarStar:
    return Xoshiro256StarStar(stream_seed(cfg.seed, TREE_STREAM))


def _build(cfg: RunConfig, depth: int, env_levels: int | None = None):
    return build_tree(cfg.catalog, cfg.v, depth, root_type=cfg.root_type,
                      rng=_tree_rng(cfg),
                      env_levels=env_levels if env_levels is not None else cfg.env_levels,
                      node_cap=cfg.node_cap)


# ---------------------------------------------------------------------------
# Subcommands

def _cmd_validate(cfg: RunConfig, out: Path, threads: int) -> int:
    rep = validate_catalog(cfg.catalog)
    obj = {"meta": _meta(cfg, "validate"),
           "valid": rep.ok,
           "violations": [{"system": v.system, "message": v.message}
                          for v in rep.violations]}
    if rep.ok:
        ex = scale_extrema(cfg.catalog)
        obj["extrema"] = {"r_inf": ex.r_inf, "r_sup": ex.r_sup,
                          "m_inf": ex.m_inf, "m_sup": ex.m_sup, "eta": ex.eta}
    print(json.dumps(obj, sort_keys=True, indent=2))
    return 0 if rep.ok else 1


def _cmd_tree(cfg: RunConfig, out: Path, threads: int) -> int:
    tree = _build(cfg, cfg.depth)
    with open(out / "tree.jsonl", "w") as fp:
        tree_to_jsonl(tree, fp)
    _write_json(out / "environments.json",
                {"meta": _meta(cfg, "tree"), "root_type": tree.root_type,
                 "environments": environments_to_obj(tree)})
    _write_json(out / "necks.json",
                {"meta": _meta(cfg, "tree"),
                 "neck_levels": list(tree.neck_levels),
                 "depth": tree.depth, "node_count": tree.node_count})
    return 0


def _cmd_measure(cfg: RunConfig, out: Path, threads: int) -> int:
    tree = _build(cfg, cfg.level)
    dec = decompose(tree, cfg.level)
    meta = _meta(cfg, "measure")
    with open(out / "cells.csv", "w", newline="") as fp:
        cells_to_csv(dec, fp, meta)
    with open(out / "gaps.csv", "w", newline="") as fp:
        gaps_to_csv(dec, fp, meta)
    return 0


def _cmd_count(cfg: RunConfig, out: Path, threads: int) -> int:
    tree = _build(cfg, cfg.level)
    dec = refine_uniform(decompose(tree, cfg.level), cfg.splits)
    xs = cfg.grid()
    counts_d = inertia_counts(assemble(dec, DIRICHLET), xs)
    counts_n = inertia_counts(assemble(dec, NEUMANN), xs)
    with open(out / "counting.csv", "w", newline="") as fp:
        counting_to_csv(fp, xs, counts_d, counts_n, cfg.level, cfg.splits,
                        _meta(cfg, "count"))
    with open(out / "pencil_dirichlet.csv", "w", newline="") as fp:
        pencil_to_csv(assemble(dec, DIRICHLET), fp, _meta(cfg, "count"))
    return 0


def _cmd_exponent(cfg: RunConfig, out: Path, threads: int) -> int:
    exact = gamma_exact_homogeneous(cfg.catalog)
    recursive = solve_gamma_recursive(cfg.catalog)

    evaluator = MonteCarloNeckEvaluator(cfg.catalog, cfg.v, cfg.mc_blocks,
                                        cfg.seed, threads=threads)
    mc = solve_gamma(evaluator)

    tree = _build(cfg, cfg.level)
    dec = refine_uniform(decompose(tree, cfg.level), cfg.splits)
    xs = cfg.grid()
    counts_d = inertia_counts(assemble(dec, DIRICHLET), xs)
    fit = empirical_exponent((xs, counts_d), (cfg.x_grid[0], cfg.x_grid[1]))

    primary = exact if cfg.v == 1 else mc
    obj = {
        "meta": _meta(cfg, "exponent"),
        "gamma": primary.gamma,
        "method": primary.method,
        "exact_homogeneous": exact.to_obj(),
        "monte_carlo": mc.to_obj(),
        "recursive_oracle": recursive,
        "empirical": {
            "slope": fit.slope, "intercept": fit.intercept,
            "residual": fit.residual, "n_points": fit.n_points,
            "window": list(fit.window), "level": cfg.level, "splits": cfg.splits,
        },
        "mean_first_neck": float(evaluator.neck_waits.mean()),
        "f_by_root_type_at_gamma": {
            str(t): v for t, v in evaluator.f_by_root_type(mc.gamma).items()
        },
    }
    _write_json(out / "exponent.json", obj)
    return 0


def _cmd_bracket(cfg: RunConfig, out: Path, threads: int) -> int:
    tree = _build(cfg, cfg.level)
    xs = cfg.grid()
    results = []
    for k in range(cfg.k_range[0], cfg.k_range[1] + 1):
        res = bracketing_check(tree, k, xs, cfg.level, cfg.splits)
        results.append(res.to_obj())
    _write_json(out / "bracketing.json",
                {"meta": _meta(cfg, "bracket"), "results": results})
    return 0


def _cmd_cutsets(cfg: RunConfig, out: Path, threads: int) -> int:
    tree = _build(cfg, cfg.depth)
    ks = range(cfg.k_range[0], cfg.k_range[1] + 1)
    rows = cutset_stats_check(tree, ks, level=min(cfg.level, tree.depth),
                              splits=cfg.splits)
    meta = _meta(cfg, "cutsets")
    with open(out / "cutsets.csv", "w", newline="") as fp:
        for key, value in meta.items():
            fp.write(f"# {key}={value}\n")
        fp.write("k,size,harmonic_scale,max_gap,min_product,max_product,"
                 "chain_lower_ok,chain_upper_ok,scale_lower_ok,"
                 "nd_at_scale,ratio_nd_over_size,nd_at_k_scale,ratio_size_over_nd\n")
        for r in rows:
            fields = [str(r.k), str(r.size), f"{r.harmonic_scale:.17g}",
                      str(r.max_gap), f"{r.min_product:.17g}", f"{r.max_product:.17g}",
                      str(r.chain_lower_ok), str(r.chain_upper_ok), str(r.scale_lower_ok)]
            for v in (r.nd_at_scale, r.ratio_nd_over_size, r.nd_at_k_scale,
                      r.ratio_size_over_nd):
                if v is None:
                    fields.append("")
                elif isinstance(v, float):
                    fields.append(f"{v:.17g}")
                else:
                    fields.append(str(v))
            fp.write(",".join(fields) + "\n")
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "tree": _cmd_tree,
    "measure": _cmd_measure,
    "count": _cmd_count,
    "exponent": _cmd_exponent,
    "bracket": _cmd_bracket,
    "cutsets": _cmd_cutsets,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vvcantor",
        description="Random tree Cantor measures and their spectral asymptotics.")
    parser.add_argument("subcommand", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed (64-bit unsigned)")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker cap; outputs do not depend on it")
    args = parser.parse_args(argv)

    try:
        doc = json.loads(Path(args.config).read_text())
        if args.seed is not None:
            doc = dict(doc, seed=args.seed)
        cfg = RunConfig.from_dict(doc)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.subcommand != "validate":
        rep = validate_catalog(cfg.catalog)
        if not rep.ok:
            print(f"invalid catalog:\n{rep}", file=sys.stderr)
            return 2

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    try:
        code = _COMMANDS[args.subcommand](cfg, out, max(1, args.threads))
    except VVCantorError as exc:
        print(f"{args.subcommand} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    _write_json(out / f"{args.subcommand}_meta.json", {
        "timestamp_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
        "elapsed_seconds": time.time() - started,
    })
    return code


if __name__ == "__main__":
    sys.exit(main())
