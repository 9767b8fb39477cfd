"""The `forge` command-line pipeline.

Subcommands: plan validate|canonicalize, paths, synth, tokenize,
ngram fit|sample, frontiers, infogain, eval. Exit codes: 0 ok, 1 partial
failure, 2 fatal.
"""

import argparse
import json
import os
import pickle
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import dataset, evalstats, infogain, pathgen, seq, sensor
from .floorplan import PlanError, canonicalize, classify_exterior_windows, close_doorways, load_plan, parse_floorplan, plan_to_json

EXIT_OK, EXIT_PARTIAL, EXIT_FATAL = 0, 1, 2


def _threads():
    try:
        return max(1, int(os.environ.get("FORGE_THREADS", "1")))
    except ValueError:
        return 1


def _sensor_config(args):
    return sensor.SensorConfig(
        max_range=args.range,
        n_rays=args.rays,
        step=args.step,
        grid_size=args.grid_size,
        area=args.area,
    )


def _config_dict(args, keys):
    return {k: getattr(args, k) for k in sorted(keys)}


def cmd_plan_validate(args):
    try:
        with open(args.file, "rb") as f:
            parse_floorplan(f.read())
    except (OSError, PlanError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_FATAL
    print("ok")
    return EXIT_OK


def cmd_plan_canonicalize(args):
    try:
        with open(args.infile, "rb") as f:
            raw = parse_floorplan(f.read())
    except (OSError, PlanError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_FATAL
    plan = classify_exterior_windows(canonicalize(close_doorways(raw)))
    with open(args.outfile, "w") as f:
        json.dump(plan_to_json(plan), f, sort_keys=True)
        f.write("\n")
    if plan.dropped:
        print(f"warning: dropped {plan.dropped} zero-length segments", file=sys.stderr)
    return EXIT_OK


def cmd_paths(args):
    plan = load_plan(args.plan)
    grid = pathgen.build_navgrid(plan, resolution=args.resolution)
    paths = pathgen.generate_paths(plan, k_waypoints=args.waypoints, seed=args.seed, grid=grid)
    config = _config_dict(args, ["waypoints", "seed", "resolution"])
    out = {
        "header": "paths",
        "config": config,
        "config_hash": dataset.config_hash(config),
        "paths": [
            {
                "polyline": np.round(p.waypoints, 9).tolist(),
                "length": round(p.length, 9),
                "turns": p.turn_count,
            }
            for p in paths
        ],
    }
    json.dump(out, sys.stdout, sort_keys=True)
    print()
    return EXIT_OK


def _simulate_one(task):
    plan, waypoints, config, traj_index = task
    samples = list(sensor.simulate_trajectory(plan, waypoints, config))
    return traj_index, [dataset.sample_to_record(s, traj_index) for s in samples]


def run_synth(args, plan_files):
    """Synthesize the dataset; per-plan failures skip that plan only."""
    config = _config_dict(
        args, ["range", "step", "grid_size", "area", "rays", "waypoints", "seed", "resolution"]
    )
    scfg = _sensor_config(args)
    failed = 0
    records = []
    for plan_file in plan_files:
        try:
            plan = load_plan(plan_file)
            grid = pathgen.build_navgrid(plan, resolution=args.resolution)
            paths = pathgen.generate_paths(
                plan, k_waypoints=args.waypoints, seed=args.seed, grid=grid
            )
            tasks = [
                (plan, p.waypoints, scfg, ti) for ti, p in enumerate(paths)
            ]
            n_threads = _threads()
            if n_threads > 1 and len(tasks) > 1:
                with ProcessPoolExecutor(max_workers=n_threads) as pool:
                    results = list(pool.map(_simulate_one, tasks))
            else:
                results = [_simulate_one(t) for t in tasks]
            results.sort(key=lambda r: r[0])
            n_plan = 0
            for _ti, recs in results:
                records.extend(recs)
                n_plan += len(recs)
            print(f"{plan.plan_id}: {len(paths)} paths, {n_plan} samples", file=sys.stderr)
        except (OSError, PlanError, ValueError) as exc:
            print(f"error: {plan_file}: {exc}", file=sys.stderr)
            failed += 1
    if failed == len(plan_files):
        return EXIT_FATAL
    dataset.write_jsonl(args.out, dataset.header_record(config, "samples"), records)
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_synth(args):
    return run_synth(args, args.plans)


def cmd_tokenize(args):
    _header, samples = dataset.read_dataset(args.dataset)
    cfg = seq.QuantizerConfig()
    records = []
    for sid, sample in samples:
        records.append(
            {
                "id": sid,
                "target_tokens": seq.tokens_to_json(seq.tokenize(sample.target_segments, cfg)),
                "context_tokens": seq.tokens_to_json(seq.tokenize(sample.visible_segments, cfg)),
            }
        )
    out = open(args.out, "w") if args.out else sys.stdout
    config = {"dataset": os.path.basename(args.dataset)}
    out.write(json.dumps(dataset.header_record(config, "tokens"), sort_keys=True) + "\n")
    for rec in records:
        out.write(json.dumps(rec, sort_keys=True) + "\n")
    if args.out:
        out.close()
    return EXIT_OK


def cmd_ngram_fit(args):
    _header, records = dataset.read_jsonl(args.tokens)
    cfg = seq.QuantizerConfig()
    corpus = [seq.tokens_from_json(r["target_tokens"], cfg) for r in records]
    if not corpus:
        print("error: empty token corpus", file=sys.stderr)
        return EXIT_FATAL
    provider = seq.fit_ngram(corpus, args.order, cfg)
    with open(args.out, "wb") as f:
        pickle.dump(provider, f)
    return EXIT_OK


def cmd_ngram_sample(args):
    with open(args.provider, "rb") as f:
        provider = pickle.load(f)
    cfg = provider.cfg
    tokens, complete = seq.sample_sequence(
        provider, p=args.p, max_len=args.max_len, seed=args.seed, cfg=cfg
    )
    json.dump(
        {"tokens": seq.tokens_to_json(tokens, cfg), "complete": complete},
        sys.stdout,
        sort_keys=True,
    )
    print()
    return EXIT_OK


def cmd_frontiers(args):
    _header, samples = dataset.read_dataset(args.dataset)
    for sid, sample in samples:
        clusters = infogain.eligible_frontiers(sample)
        rec = {
            "id": sid,
            "clusters": [
                {"location": list(cl.location), "size": cl.size, "cells": [list(c) for c in cl.cells]}
                for cl in clusters
            ],
        }
        print(json.dumps(rec, sort_keys=True))
    return EXIT_OK


def _predictions_for(args, samples):
    """Sample id -> predicted segments, from a file and/or an n-gram model."""
    preds = {}
    if args.pred:
        with open(args.pred) as f:
            raw = json.load(f)
        preds.update({k: np.asarray(v, dtype=np.float64).reshape(-1, 4) for k, v in raw.items()})
    if args.provider:
        with open(args.provider, "rb") as f:
            provider = pickle.load(f)
        cfg = provider.cfg
        for i, (sid, _sample) in enumerate(samples):
            if sid in preds:
                continue
            tokens, _ = seq.sample_sequence(
                provider, p=args.p, max_len=args.max_len, seed=args.seed + i, cfg=cfg
            )
            # sanitize: keep vertex tokens only, drop an unpaired trailing one
            interior = [t for t in tokens[1:] if 0 <= t < cfg.vocab_vertices]
            if len(interior) % 2:
                interior = interior[:-1]
            preds[sid] = seq.detokenize(
                [cfg.start_token] + interior + [cfg.end_token], cfg
            )
    return preds


def cmd_infogain(args):
    plan = load_plan(args.plan)
    _header, samples = dataset.read_dataset(args.dataset)
    preds = _predictions_for(args, samples)
    skipped = [sid for sid, _ in samples if preds and sid not in preds]
    for sid in skipped:
        print(f"warning: no prediction for {sid}, skipped", file=sys.stderr)
    config = _config_dict(args, ["range", "seed", "p"])
    records = []
    for sid, sample in samples:
        if preds and sid not in preds:
            continue
        predicted = preds.get(sid, np.empty((0, 4)))
        for est in infogain.estimate_all(sample, predicted, plan, args.range):
            records.append(
                {
                    "id": sid,
                    "frontier": list(est.frontier.location),
                    "estimator": est.estimator,
                    "gain_cells": est.gain_cells,
                    "gain_bits": round(est.gain_bits, 9),
                }
            )
    out = open(args.out, "w") if args.out else sys.stdout
    out.write(json.dumps(dataset.header_record(config, "gains"), sort_keys=True) + "\n")
    for rec in records:
        out.write(json.dumps(rec, sort_keys=True) + "\n")
    if args.out:
        out.close()
    return EXIT_PARTIAL if skipped else EXIT_OK


def errors_from_gain_records(records):
    """Signed per-frontier errors of each estimator against truth."""
    truth = {}
    for rec in records:
        if rec["estimator"] == "truth":
            truth[(rec["id"], tuple(rec["frontier"]))] = rec["gain_cells"]
    errors = []
    for rec in records:
        if rec["estimator"] == "truth":
            continue
        key = (rec["id"], tuple(rec["frontier"]))
        if key not in truth:
            continue
        errors.append(
            evalstats.ErrorSample(
                frontier_id=f"{rec['id']}@{rec['frontier']}",
                estimator=rec["estimator"],
                d=float(rec["gain_cells"] - truth[key]),
            )
        )
    return errors


def cmd_eval(args):
    _header, records = dataset.read_jsonl(args.gains)
    errors = errors_from_gain_records(records)
    if not errors:
        print("error: no evaluable gain records", file=sys.stderr)
        return EXIT_FATAL
    config = _config_dict(args, ["trials", "seed"])
    summaries = evalstats.summarize(errors, trials=args.trials, seed=args.seed)
    groups = {}
    for e in errors:
        groups.setdefault(e.estimator, []).append(e.abs_d)
    names = sorted(groups)
    ks = {
        f"{a}|{b}": evalstats.ks_two_sample(groups[a], groups[b])
        for i, a in enumerate(names)
        for b in names[i + 1 :]
    }
    report = {
        "header": "eval",
        "version": dataset.header_record(config, "eval")["version"],
        "config": config,
        "config_hash": dataset.config_hash(config),
        "estimators": [
            {
                "estimator": s.estimator,
                "n": s.n,
                "mae_cells": s.mae,
                "ci95": [s.ci_low, s.ci_high],
                "under_freq": s.under_freq,
                "over_freq": s.over_freq,
                "tie_freq": s.tie_freq,
            }
            for s in summaries
        ],
        "ks": ks,
    }
    with open(args.out, "w") as f:
        json.dump(report, f, sort_keys=True, indent=2)
        f.write("\n")
    if args.cdf:
        tables = evalstats.export_cdf(errors)
        with open(args.cdf, "w") as f:
            f.write("estimator,abs_error,cdf\n")
            for est in sorted(tables):
                for x, p in tables[est]:
                    f.write(f"{est},{x:.9g},{p:.9g}\n")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="forge", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="validate or canonicalize plan files")
    plan_sub = plan.add_subparsers(dest="plan_command", required=True)
    pv = plan_sub.add_parser("validate")
    pv.add_argument("file")
    pv.set_defaults(func=cmd_plan_validate)
    pc = plan_sub.add_parser("canonicalize")
    pc.add_argument("infile")
    pc.add_argument("outfile")
    pc.set_defaults(func=cmd_plan_canonicalize)

    pp = sub.add_parser("paths", help="generate filtered waypoint paths")
    pp.add_argument("plan")
    pp.add_argument("--waypoints", type=int, default=12)
    pp.add_argument("--seed", type=int, default=0)
    pp.add_argument("--resolution", type=float, default=pathgen.DEFAULT_RESOLUTION)
    pp.set_defaults(func=cmd_paths)

    def sensor_args(p):
        p.add_argument("--range", type=float, default=4.5)
        p.add_argument("--step", type=float, default=0.8)
        p.add_argument("--grid-size", dest="grid_size", type=int, default=121)
        p.add_argument("--area", type=float, default=15.0)
        p.add_argument("--rays", type=int, default=720)

    sy = sub.add_parser("synth", help="synthesize an occupancy-grid dataset")
    sy.add_argument("plans", nargs="+")
    sensor_args(sy)
    sy.add_argument("--waypoints", type=int, default=12)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--resolution", type=float, default=pathgen.DEFAULT_RESOLUTION)
    sy.add_argument("--out", required=True)
    sy.set_defaults(func=cmd_synth)

    tk = sub.add_parser("tokenize", help="encode dataset segments as token sequences")
    tk.add_argument("dataset")
    tk.add_argument("--out")
    tk.set_defaults(func=cmd_tokenize)

    ng = sub.add_parser("ngram", help="fit or sample the n-gram baseline")
    ng_sub = ng.add_subparsers(dest="ngram_command", required=True)
    nf = ng_sub.add_parser("fit")
    nf.add_argument("tokens")
    nf.add_argument("--order", type=int, default=3)
    nf.add_argument("--out", required=True)
    nf.set_defaults(func=cmd_ngram_fit)
    ns = ng_sub.add_parser("sample")
    ns.add_argument("--provider", required=True)
    ns.add_argument("--p", type=float, default=0.8)
    ns.add_argument("--seed", type=int, default=0)
    ns.add_argument("--max-len", dest="max_len", type=int, default=512)
    ns.set_defaults(func=cmd_ngram_sample)

    fr = sub.add_parser("frontiers", help="emit per-sample frontier clusters")
    fr.add_argument("dataset")
    fr.set_defaults(func=cmd_frontiers)

    ig = sub.add_parser("infogain", help="per-frontier gain estimates")
    ig.add_argument("dataset")
    ig.add_argument("--plan", required=True)
    ig.add_argument("--pred")
    ig.add_argument("--provider")
    ig.add_argument("--p", type=float, default=0.8)
    ig.add_argument("--seed", type=int, default=0)
    ig.add_argument("--max-len", dest="max_len", type=int, default=512)
    ig.add_argument("--range", type=float, default=4.5)
    ig.add_argument("--out")
    ig.set_defaults(func=cmd_infogain)

    ev = sub.add_parser("eval", help="statistical report over gain estimates")
    ev.add_argument("gains")
    ev.add_argument("--trials", type=int, default=1000)
    ev.add_argument("--seed", type=int, default=7)
    ev.add_argument("--out", required=True)
    ev.add_argument("--cdf")
    ev.set_defaults(func=cmd_eval)

    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, PlanError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
