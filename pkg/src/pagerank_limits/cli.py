"""Command-line entry points and experiment orchestration.

Subcommands map one-to-one onto module operations (generate, pagerank,
census, limit-sample, compare, verify) plus ``run``, which wires the whole
pipeline: generate graphs over a size ladder, solve exact and truncated
PageRank, check the truncation and lower bounds, build censuses and tails,
sample the configured limit once, and emit all comparisons into an output
directory.  Everything is deterministic given (config, seed): one master
seed feeds named substreams (graph, limits, census) so enlarging the limit
pool never perturbs graph generation.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import generators as gen
from . import limits as limits_mod
from . import pagerank as pr
from .census import (
    TailSample,
    ccdf,
    census,
    census_limit,
    hill_estimator,
    ks_distance,
    read_census_csv,
    tv_distance,
    write_census_csv,
    write_tail_csv,
)
from .errors import (
    ConfigError,
    InputError,
    InvariantViolation,
    PagerankLimitsError,
    ResourceError,
    UsageError,
)
from .graph import DirectedMultigraph, read_edgelist, write_edgelist

__all__ = ["main", "entry", "run_experiment", "load_config"]

STREAM_GRAPH = 0
STREAM_LIMITS = 1
STREAM_CENSUS = 2

EXIT_OK = 0
EXIT_OPERATIONAL = 1
EXIT_INVARIANT = 2


# ---------------------------------------------------------------------------
# config handling


def _require(cond, field, message):
    if not cond:
        raise ConfigError(f"{field}: {message}")


def _parse_law(obj, field):
    _require(isinstance(obj, list) and obj, field, "expected a nonempty [[h,l,p],...] list")
    entries = []
    for row in obj:
        _require(isinstance(row, (list, tuple)) and len(row) == 3, field,
                 f"bad law row {row!r}")
        entries.append((row[0], row[1], row[2]))
    try:
        return gen.BiDegreeLaw(entries)
    except ConfigError as e:
        raise ConfigError(f"{field}: {e}") from None


def make_sampler(spec, field):
    """Distribution spec -> callable (rng, size) -> float array."""
    _require(isinstance(spec, dict) and "dist" in spec, field,
             "expected {'dist': ..., ...}")
    dist = spec["dist"]
    if dist == "constant":
        value = float(spec["value"])
        return lambda rng, size: np.full(size, value)
    if dist == "uniform":
        low, high = float(spec["low"]), float(spec["high"])
        _require(low < high, field, "need low < high")
        return lambda rng, size: rng.uniform(low, high, size)
    if dist == "exponential":
        mean = float(spec["mean"])
        _require(mean > 0, field, "need positive mean")
        return lambda rng, size: rng.exponential(mean, size)
    raise ConfigError(f"{field}: unknown dist {dist!r}")


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return validate_config(raw)


def validate_config(raw):
    _require(isinstance(raw, dict), "config", "top level must be an object")
    cfg = {}
    cfg["seed"] = int(raw.get("seed", 0))

    model = raw.get("model")
    _require(isinstance(model, dict) and "name" in model, "model",
             "expected {'name': dcm|irg|dpa|ctbp, ...}")
    name = model["name"]
    _require(name in ("dcm", "irg", "dpa", "ctbp"), "model.name",
             f"unknown model {name!r}")
    if name == "dcm":
        model = {"name": name, "law": _parse_law(model.get("law"), "model.law")}
    elif name == "irg":
        w_out = model.get("w_out", 1.0)
        w_in = model.get("w_in", 1.0)
        theta = model.get("theta")
        model = {"name": name, "w_out": w_out, "w_in": w_in,
                 "theta": None if theta is None else float(theta)}
    elif name == "dpa":
        model = {"name": name,
                 "params": gen.PamParams(m=int(model.get("m", 1)),
                                         delta=float(model.get("delta", 0.0)))}
    else:
        theta = float(model.get("theta", 1.0))
        _require(theta > 0, "model.theta", "must be positive")
        model = {"name": name, "theta": theta}
    cfg["model"] = model

    sizes = raw.get("sizes")
    _require(isinstance(sizes, list) and sizes, "sizes", "expected a nonempty list")
    sizes = [int(s) for s in sizes]
    _require(all(s >= 1 for s in sizes), "sizes", "sizes must be >= 1")
    _require(sizes == sorted(sizes), "sizes", "sizes must be ascending")
    cfg["sizes"] = sizes

    prk = raw.get("pagerank", {})
    c = float(prk.get("c", 0.85))
    _require(0.0 < c < 1.0, "pagerank.c", f"must be in (0,1), got {c}")
    tol = float(prk.get("tol", 1e-12))
    _require(tol > 0, "pagerank.tol", "must be positive")
    N = int(prk.get("N", 10))
    _require(N >= 0, "pagerank.N", "must be >= 0")
    cfg["pagerank"] = {
        "params": pr.PageRankParams(c=c, tol=tol, max_iter=int(prk.get("max_iter", 10_000))),
        "N": N,
    }
    if "generalized" in prk:
        gspec = prk["generalized"]
        cfg["pagerank"]["generalized"] = {
            "c_law": gspec.get("c_law"),
            "b_law": gspec.get("b_law"),
            "c_sampler": make_sampler(gspec.get("c_law"), "pagerank.generalized.c_law"),
            "b_sampler": make_sampler(gspec.get("b_law"), "pagerank.generalized.b_law"),
        }

    lim = raw.get("limit", {})
    sampler = lim.get("sampler", _default_sampler(name))
    _require(sampler in ("fixed_point", "gw", "ctbp", "polya"), "limit.sampler",
             f"unknown sampler {sampler!r}")
    cfg["limit"] = {
        "sampler": sampler,
        "M": int(lim.get("M", 10_000)),
        "depth": int(lim.get("depth", cfg["pagerank"]["N"])),
    }
    _require(cfg["limit"]["M"] >= 1, "limit.M", "must be >= 1")
    _require(cfg["limit"]["depth"] >= 0, "limit.depth", "must be >= 0")

    comp = raw.get("comparison", {})
    depths = comp.get("census_depths", [1])
    _require(isinstance(depths, list), "comparison.census_depths", "expected a list")
    thresholds = comp.get("thresholds")
    if thresholds is not None:
        _require(isinstance(thresholds, list) and thresholds,
                 "comparison.thresholds", "expected a nonempty list")
        thresholds = [float(t) for t in thresholds]
        _require(thresholds == sorted(thresholds), "comparison.thresholds",
                 "must be sorted ascending")
    cfg["comparison"] = {"census_depths": [int(k) for k in depths],
                         "thresholds": thresholds}

    cfg["threads"] = int(raw.get("threads", 1))
    cfg["_raw"] = raw
    return cfg


def _default_sampler(model_name):
    return {"dcm": "fixed_point", "irg": "fixed_point",
            "dpa": "polya", "ctbp": "ctbp"}[model_name]


# ---------------------------------------------------------------------------
# pipeline pieces


def _irg_weights(spec, n, field):
    if isinstance(spec, (int, float)):
        return np.full(n, float(spec))
    _require(isinstance(spec, list) and len(spec) == n, field,
             f"expected a scalar or a list of length {n}")
    return np.asarray(spec, dtype=np.float64)


def generate_model(model, n, rng):
    """Build one graph instance; returns (graph, metadata dict)."""
    name = model["name"]
    if name == "dcm":
        seq = gen.sample_bidegree_sequence(model["law"], n, rng)
        g = gen.gen_dcm(seq, rng)
        meta = {"model": "dcm", "law": model["law"].entries}
    elif name == "irg":
        w_out = _irg_weights(model["w_out"], n, "model.w_out")
        w_in = _irg_weights(model["w_in"], n, "model.w_in")
        theta = model["theta"] if model["theta"] is not None else float(w_in.mean())
        g = gen.gen_irg(w_out, w_in, theta, rng)
        meta = {"model": "irg", "theta": theta}
    elif name == "dpa":
        g = gen.gen_dpa(n, model["params"], rng)
        meta = {"model": "dpa", "m": model["params"].m, "delta": model["params"].delta}
    else:
        g, births = gen.gen_ctbp_tree(gen.CtbpParams(model["theta"]), n, rng)
        meta = {"model": "ctbp", "theta": model["theta"],
                "last_birth_time": float(births[-1]) if n > 1 else 0.0}
    meta.update(degree_stats(g))
    return g, meta


def degree_stats(g: DirectedMultigraph):
    return {
        "n": g.n,
        "edges": g.total_multiplicity,
        "mean_out_degree": float(g.d_out.mean()) if g.n else 0.0,
        "max_out_degree": int(g.d_out.max()) if g.n else 0,
        "max_in_degree": int(g.d_in.max()) if g.n else 0,
        "dangling": int((g.d_out == 0).sum()),
    }


def limit_pool(cfg, rng):
    """Pool of limit root-rank samples plus metadata for the sidecar."""
    sampler = cfg["limit"]["sampler"]
    M = cfg["limit"]["M"]
    depth = cfg["limit"]["depth"]
    c = cfg["pagerank"]["params"].c
    genspec = cfg["pagerank"].get("generalized")
    c_sampler = genspec["c_sampler"] if genspec else None
    b_sampler = genspec["b_sampler"] if genspec else None
    meta = {"sampler": sampler, "M": M, "depth": depth, "c": c,
            "generalized": bool(genspec)}
    model = cfg["model"]
    if sampler in ("fixed_point", "gw"):
        _require(model["name"] == "dcm", "limit.sampler",
                 f"{sampler} needs the dcm model's bi-degree law")
        law = model["law"]
        meta["law"] = law.entries
        fn = limits_mod.solve_fixed_point_mc if sampler == "fixed_point" else limits_mod.gw_root_rank_pool
        pool = fn(law, c, depth, M, rng, c_sampler=c_sampler, b_sampler=b_sampler)
        return pool, meta
    if sampler == "ctbp":
        _require(model["name"] == "ctbp", "limit.sampler", "ctbp sampler needs the ctbp model")
        alpha = limits_mod.malthusian(model["theta"])
        meta["alpha_star"] = alpha
        vals = np.empty(M)
        for i in range(M):
            tree = _sample_ctbp_retry(model["theta"], alpha, rng)
            if genspec:
                tree = limits_mod.attach_generalized_weights(tree, c_sampler, b_sampler, rng)
                vals[i] = limits_mod.root_pagerank_generalized(tree)
            else:
                vals[i] = limits_mod.root_pagerank(tree, c)
        return vals, meta
    _require(model["name"] == "dpa", "limit.sampler", "polya sampler needs the dpa model")
    params = limits_mod.PolyaParams(m=model["params"].m, delta=model["params"].delta)
    vals = np.empty(M)
    for i in range(M):
        tree = limits_mod.sample_polya_limit(params, depth, rng)
        if genspec:
            tree = limits_mod.attach_generalized_weights(tree, c_sampler, b_sampler, rng)
            vals[i] = limits_mod.root_pagerank_generalized(tree, depth)
        else:
            vals[i] = limits_mod.root_pagerank(tree, c, depth)
    return vals, meta


def _sample_ctbp_retry(theta, alpha, rng, attempts=10):
    for _ in range(attempts):
        try:
            return limits_mod.sample_ctbp_limit(theta, alpha, rng)
        except ResourceError:
            continue
    raise ResourceError("limit population kept exceeding the node cap")


def limit_census_sampler(cfg, k):
    """Per-tree sampler used for the limit-side census at depth k."""
    model = cfg["model"]
    sampler = cfg["limit"]["sampler"]
    if sampler in ("fixed_point", "gw"):
        law = model["law"]
        return lambda rng: limits_mod.sample_gw_limit(law, k, rng)
    if sampler == "ctbp":
        alpha = limits_mod.malthusian(model["theta"])
        return lambda rng: _sample_ctbp_retry(model["theta"], alpha, rng)
    params = limits_mod.PolyaParams(m=model["params"].m, delta=model["params"].delta)
    return lambda rng: limits_mod.sample_polya_limit(params, k, rng)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def _dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_experiment(config_path, output_dir, threads=None):
    """Full pipeline; returns (record, exit_code)."""
    cfg = load_config(config_path)
    if threads:
        cfg["threads"] = threads
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(cfg["_raw"], out / "config.json")

    record = {"config": cfg["_raw"], "per_size": [], "timings": {}, "status": "OK",
              "failures": []}
    seed = cfg["seed"]
    params = cfg["pagerank"]["params"]
    N = cfg["pagerank"]["N"]
    genspec = cfg["pagerank"].get("generalized")
    stage = "limit-pool"
    try:
        t0 = time.perf_counter()
        pool, pool_meta = limit_pool(cfg, gen.RngStream(seed, STREAM_LIMITS).generator())
        limits_mod.write_pool_csv(pool, out / "limit_pool.csv")
        pool_meta["seed"] = seed
        _dump_json(pool_meta, out / "limit_pool.meta.json")
        record["timings"]["limit_pool"] = time.perf_counter() - t0
        pool_tail = TailSample(pool, tag="limit")
        if cfg["comparison"]["thresholds"]:
            write_tail_csv(pool_tail, cfg["comparison"]["thresholds"],
                           out / "limit_tails.csv")

        limit_censuses = {}
        if not genspec:
            t0 = time.perf_counter()
            crng = gen.RngStream(seed, STREAM_LIMITS).substream(1).generator()
            for k in cfg["comparison"]["census_depths"]:
                stage = f"limit-census-k{k}"
                lc = census_limit(limit_census_sampler(cfg, k), k,
                                  cfg["limit"]["M"], crng)
                limit_censuses[k] = lc
                write_census_csv(lc, out / f"limit_census_{k}.csv")
            record["timings"]["limit_census"] = time.perf_counter() - t0

        for i, n in enumerate(cfg["sizes"]):
            stage = f"size-{n}"
            entry = {"n": n}
            t0 = time.perf_counter()
            grng = gen.RngStream(seed, STREAM_GRAPH).substream(i).generator()
            g, gmeta = generate_model(cfg["model"], n, grng)
            write_edgelist(g, out / f"graph_{n}.txt")
            _dump_json({**gmeta, "seed": seed}, out / f"graph_{n}.meta.json")
            entry["graph"] = gmeta

            if genspec:
                wrng = gen.RngStream(seed, STREAM_GRAPH).substream(i).substream(1).generator()
                weights = pr.GeneralizedWeights(
                    C=genspec["c_sampler"](wrng, n), B=genspec["b_sampler"](wrng, n))
                exact = pr.solve_generalized(g, weights, tol=params.tol,
                                             max_iter=params.max_iter)
                truncated = pr.solve_generalized(g, weights, order=N)
                mean_gap = float((exact.values - truncated.values).mean())
                bound = weights.c_max ** (N + 1) * max(float(weights.B.mean()), 1e-300) / max(1.0 - weights.c_max, 1e-300)
                entry["gap_ok"] = bool(-1e-10 <= mean_gap <= bound + 1e-10)
                if not entry["gap_ok"]:
                    raise InvariantViolation(
                        f"generalized truncation gap {mean_gap} outside [0, {bound}]")
            else:
                exact = pr.solve_pagerank(g, params)
                truncated = pr.pagerank_truncated(g, params, N)
                mean_gap, bound = pr.truncation_gap(g, params, N, exact=exact,
                                                    truncated=truncated)
                pr.lower_bound_check(g, params, exact=exact)
                entry["lower_bound_ok"] = True
                entry["gap_ok"] = True
            entry["mean_gap"] = mean_gap
            entry["gap_bound"] = bound
            entry["mean_R"] = exact.mean
            entry["sum_R_over_n"] = float(exact.values.sum()) / n
            total = float(exact.values.sum())
            if genspec:
                entry["mass_ok"] = True
            elif g.has_dangling():
                entry["mass_ok"] = bool(total <= n * (1 + 1e-12))
            else:
                entry["mass_ok"] = bool(abs(total - n) <= 1e-8 * n)
            if not entry["mass_ok"]:
                raise InvariantViolation(f"mass identity failed at n={n}: sum={total}")
            pr.write_scores_csv(exact, out / f"scores_{n}.csv")

            graph_tail = TailSample(exact.values, tag=f"graph-{n}")
            entry["ks_to_limit"] = ks_distance(graph_tail, pool_tail)
            thresholds = cfg["comparison"]["thresholds"]
            if thresholds:
                write_tail_csv(graph_tail, thresholds, out / f"tails_{n}.csv")
                entry["ccdf"] = dict(zip(map(str, thresholds),
                                         ccdf(graph_tail, thresholds).tolist()))

            if not genspec:
                entry["census_tv"] = {}
                for k in cfg["comparison"]["census_depths"]:
                    cen = census(g, k, workers=cfg["threads"])
                    write_census_csv(cen, out / f"census_{n}_{k}.csv")
                    entry["census_tv"][str(k)] = tv_distance(
                        cen, limit_censuses[k])

            top_k = max(2, int(np.sqrt(n)))
            entry["hill_pagerank"] = _try_hill(exact.values, top_k)
            entry["hill_in_degree"] = _try_hill(g.d_in.astype(float), top_k)
            entry["seconds"] = time.perf_counter() - t0
            record["per_size"].append(entry)
    except InvariantViolation as e:
        record["status"] = "FAILED"
        record["failures"].append({"stage": stage, "error": str(e)})
        _dump_json(record, out / "record.json")
        return record, EXIT_INVARIANT
    except PagerankLimitsError as e:
        record["status"] = "FAILED"
        record["failures"].append({"stage": stage, "error": str(e)})
        _dump_json(record, out / "record.json")
        return record, EXIT_OPERATIONAL

    _dump_json(record, out / "record.json")
    return record, EXIT_OK


def _try_hill(values, top_k):
    try:
        return hill_estimator(TailSample(values), top_k)
    except UsageError:
        return None


# ---------------------------------------------------------------------------
# subcommands


def _cmd_generate(args):
    rng = gen.RngStream(args.seed, args.stream).generator()
    model = _model_from_args(args)
    g, meta = generate_model(model, args.n, rng)
    output = args.output or f"{args.model}_{args.n}.txt"
    write_edgelist(g, output)
    meta.update({"seed": args.seed, "stream": args.stream})
    _dump_json(meta, str(output) + ".meta.json")
    print(f"wrote {output} ({meta['edges']} edges)")
    return EXIT_OK


def _model_from_args(args):
    if args.model == "dcm":
        if not args.law:
            raise ConfigError("model.law: --law is required for dcm")
        return {"name": "dcm", "law": _parse_law(_load_inline_json(args.law), "model.law")}
    if args.model == "irg":
        return {"name": "irg", "w_out": _weight_arg(args.w_out), "w_in": _weight_arg(args.w_in),
                "theta": args.theta}
    if args.model == "dpa":
        return {"name": "dpa", "params": gen.PamParams(m=args.m, delta=args.delta)}
    return {"name": "ctbp", "theta": args.theta if args.theta is not None else 1.0}


def _weight_arg(spec):
    if spec is None:
        return 1.0
    if spec.startswith("@"):
        return [float(x) for x in Path(spec[1:]).read_text().split()]
    return float(spec)


def _load_inline_json(text):
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    return json.loads(text)


def _cmd_pagerank(args):
    g = read_edgelist(args.graph)
    params = pr.PageRankParams(c=args.c, tol=args.tol, max_iter=args.max_iter)
    if args.c_values or args.b_values:
        if not (args.c_values and args.b_values):
            raise ConfigError("generalized solve needs both --c-values and --b-values")
        weights = pr.GeneralizedWeights(
            C=np.loadtxt(args.c_values, ndmin=1), B=np.loadtxt(args.b_values, ndmin=1))
        vec = pr.solve_generalized(g, weights, tol=args.tol, max_iter=args.max_iter,
                                   order=args.N)
        pr.write_scores_csv(vec, args.output)
        print(f"wrote {args.output}")
        return EXIT_OK
    if args.N is not None:
        vec = pr.pagerank_truncated(g, params, args.N)
        exact = pr.solve_pagerank(g, params)
        mean_gap, bound = pr.truncation_gap(g, params, args.N, exact=exact, truncated=vec)
        pr.write_scores_csv(vec, args.output)
        meta_path = str(args.output) + ".meta.json"
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        meta.update({"mean_gap": mean_gap, "gap_bound": bound})
        _dump_json(meta, meta_path)
    else:
        vec = pr.solve_pagerank(g, params)
        pr.write_scores_csv(vec, args.output)
    print(f"wrote {args.output}")
    return EXIT_OK


def _cmd_census(args):
    g = read_edgelist(args.graph)
    rng = gen.RngStream(args.seed, STREAM_CENSUS).generator() if args.sample else None
    cen = census(g, args.k, sample_count=args.sample, rng=rng,
                            workers=args.workers)
    write_census_csv(cen, args.output)
    print(f"wrote {args.output} ({len(cen.counts)} classes, total {cen.total})")
    return EXIT_OK


def _cmd_limit_sample(args):
    rng = gen.RngStream(args.seed, args.stream).generator()
    law = _parse_law(_load_inline_json(args.law), "law") if args.law else None
    meta = {"sampler": args.sampler, "M": args.M, "depth": args.depth,
            "seed": args.seed, "c": args.c}
    if args.mode == "tree":
        if args.sampler in ("fixed-point", "gw"):
            if law is None:
                raise ConfigError("law: --law required for this sampler")
            tree = limits_mod.sample_gw_limit(law, args.depth, rng)
        elif args.sampler == "ctbp":
            alpha = limits_mod.malthusian(args.theta)
            tree = _sample_ctbp_retry(args.theta, alpha, rng)
        else:
            tree = limits_mod.sample_polya_limit(
                limits_mod.PolyaParams(m=args.m, delta=args.delta), args.depth, rng)
        limits_mod.write_tree_edgelist(tree, args.output)
        print(f"wrote {args.output}")
        return EXIT_OK
    if args.mode == "pool":
        if args.sampler in ("fixed-point", "gw"):
            if law is None:
                raise ConfigError("law: --law required for this sampler")
            fn = (limits_mod.solve_fixed_point_mc if args.sampler == "fixed-point"
                  else limits_mod.gw_root_rank_pool)
            pool = fn(law, args.c, args.depth, args.M, rng)
            meta["law"] = law.entries
        elif args.sampler == "ctbp":
            alpha = limits_mod.malthusian(args.theta)
            meta.update({"theta": args.theta, "alpha_star": alpha})
            pool = np.array([
                limits_mod.root_pagerank(_sample_ctbp_retry(args.theta, alpha, rng), args.c)
                for _ in range(args.M)
            ])
        else:
            p = limits_mod.PolyaParams(m=args.m, delta=args.delta)
            meta.update({"m": args.m, "delta": args.delta})
            pool = np.array([
                limits_mod.root_pagerank(
                    limits_mod.sample_polya_limit(p, args.depth, rng), args.c, args.depth)
                for _ in range(args.M)
            ])
        limits_mod.write_pool_csv(pool, args.output)
        _dump_json(meta, str(args.output) + ".meta.json")
    else:
        k = args.k if args.k is not None else args.depth
        if args.sampler in ("fixed-point", "gw"):
            if law is None:
                raise ConfigError("law: --law required for this sampler")
            sampler = lambda r: limits_mod.sample_gw_limit(law, k, r)
        elif args.sampler == "ctbp":
            alpha = limits_mod.malthusian(args.theta)
            sampler = lambda r: _sample_ctbp_retry(args.theta, alpha, r)
        else:
            p = limits_mod.PolyaParams(m=args.m, delta=args.delta)
            sampler = lambda r: limits_mod.sample_polya_limit(p, k, r)
        cen = census_limit(sampler, k, args.M, rng)
        write_census_csv(cen, args.output)
    print(f"wrote {args.output}")
    return EXIT_OK


def _load_tails(path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
    if header == "vertex,score":
        return TailSample(pr.read_scores_csv(path), tag=str(path))
    return TailSample(limits_mod.read_pool_csv(path), tag=str(path))


def _cmd_compare(args):
    if args.graph_tails and args.limit_tails:
        ks = ks_distance(_load_tails(args.graph_tails),
                                    _load_tails(args.limit_tails))
        print(f"{ks!r}")
        return EXIT_OK
    if args.census_a and args.census_b:
        a = read_census_csv(args.census_a, depth=args.k)
        b = read_census_csv(args.census_b, depth=args.k)
        print(f"{tv_distance(a, b)!r}")
        return EXIT_OK
    raise ConfigError("compare needs --graph-tails/--limit-tails or --census-a/--census-b")


def _cmd_verify(args):
    g = read_edgelist(args.graph)
    params = pr.PageRankParams(c=args.c)
    failures = 0

    def check(name, fn):
        nonlocal failures
        try:
            fn()
            print(f"PASS {name}")
        except (InvariantViolation, AssertionError) as e:
            failures += 1
            print(f"FAIL {name}: {e}")

    totals = (int(g.d_out.sum()), int(g.d_in.sum()), g.total_multiplicity)
    check("degree-consistency",
          lambda: _assert(totals[0] == totals[1] == totals[2],
                          f"degree sums {totals} disagree"))
    exact = pr.solve_pagerank(g, params)
    check("teleport-floor",
          lambda: _assert(float(exact.values.min()) >= (1 - args.c) - 1e-9,
                          "score below 1-c"))
    if g.has_dangling():
        check("mass-bound",
              lambda: _assert(float(exact.values.sum()) <= g.n * (1 + 1e-12),
                              "sum exceeds n"))
    else:
        check("mass-identity",
              lambda: _assert(abs(float(exact.values.sum()) - g.n) <= 1e-8 * g.n,
                              "sum differs from n"))
    for N in range(args.max_order + 1):
        check(f"truncation-bound-N{N}",
              lambda N=N: pr.truncation_gap(g, params, N, exact=exact))
    check("lower-bound", lambda: pr.lower_bound_check(g, params, exact=exact))
    print(f"{'OK' if failures == 0 else 'FAILED'}: {failures} violations")
    return EXIT_OK if failures == 0 else EXIT_INVARIANT


def _assert(cond, message):
    if not cond:
        raise InvariantViolation(message)


def _cmd_run(args):
    record, code = run_experiment(args.config, args.output_dir, threads=args.threads)
    print(f"status: {record['status']}")
    for failure in record["failures"]:
        print(f"  {failure['stage']}: {failure['error']}")
    return code


# ---------------------------------------------------------------------------
# argument parsing


def build_parser():
    ap = argparse.ArgumentParser(
        prog="pagerank-limits",
        description="PageRank on directed multigraphs and samplers of their local limits",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a random graph instance")
    p.add_argument("--model", required=True, choices=["dcm", "irg", "dpa", "ctbp"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=STREAM_GRAPH)
    p.add_argument("--law", help="bi-degree law as JSON [[h,l,p],...] or @file (dcm)")
    p.add_argument("--w-out", dest="w_out", help="IRG out-weights: scalar or @file")
    p.add_argument("--w-in", dest="w_in", help="IRG in-weights: scalar or @file")
    p.add_argument("--theta", type=float, help="IRG normalizer / ctbp rate base")
    p.add_argument("--m", type=int, default=1, help="out-degree per new vertex (dpa)")
    p.add_argument("--delta", type=float, default=0.0, help="attachment shift (dpa)")
    p.add_argument("--output")
    p.set_defaults(fn=_cmd_generate)

    p = sub.add_parser("pagerank", help="solve exact or truncated PageRank")
    p.add_argument("--graph", required=True)
    p.add_argument("--c", type=float, default=0.85)
    p.add_argument("--N", type=int, default=None, help="truncation order (default: exact)")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=10_000)
    p.add_argument("--c-values", dest="c_values", help="per-vertex C file (generalized)")
    p.add_argument("--b-values", dest="b_values", help="per-vertex B file (generalized)")
    p.add_argument("--output", default="scores.csv")
    p.set_defaults(fn=_cmd_pagerank)

    p = sub.add_parser("census", help="neighborhood census of a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--sample", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", default="census.csv")
    p.set_defaults(fn=_cmd_census)

    p = sub.add_parser("limit-sample", help="sample a limiting object")
    p.add_argument("--sampler", required=True,
                   choices=["fixed-point", "gw", "ctbp", "polya"])
    p.add_argument("--mode", choices=["pool", "census", "tree"], default="pool")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--k", type=int, default=None, help="census depth (census mode)")
    p.add_argument("--c", type=float, default=0.85)
    p.add_argument("--law", help="bi-degree law JSON or @file (fixed-point/gw)")
    p.add_argument("--theta", type=float, default=1.0, help="ctbp rate base")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=STREAM_LIMITS)
    p.add_argument("--output", default="pool.csv")
    p.set_defaults(fn=_cmd_limit_sample)

    p = sub.add_parser("compare", help="KS between tails or TV between censuses")
    p.add_argument("--graph-tails", dest="graph_tails")
    p.add_argument("--limit-tails", dest="limit_tails")
    p.add_argument("--census-a", dest="census_a")
    p.add_argument("--census-b", dest="census_b")
    p.add_argument("--k", type=int, default=0, help="census depth label")
    p.set_defaults(fn=_cmd_compare)

    p = sub.add_parser("verify", help="run the invariant suite on a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--c", type=float, default=0.85)
    p.add_argument("--max-order", dest="max_order", type=int, default=20)
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("run", help="run a full experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir", dest="output_dir", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(fn=_cmd_run)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, InputError, UsageError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_OPERATIONAL
    except InvariantViolation as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except PagerankLimitsError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_OPERATIONAL


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
