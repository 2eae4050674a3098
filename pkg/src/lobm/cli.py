"""Command-line entry point for reproducible experiments.

Subcommands: gen-dataset, train, eval, baseline, check-grad, oracle.  Every
randomized command requires --seed; every command emits a JSON run manifest
(command, config, seed, input hashes, outputs, wall time) sufficient to rerun
it bit-identically.  A plain key=value config file can preseed any flag;
explicit flags win.
"""

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import baselines, bosonsim, dataio, gradients, mmd, training
from .circuits import (
    CircuitSpec,
    MESH_KINDS,
    deserialize_spec,
    initialize_parameters,
    make_input_state,
    serialize_spec,
)
from .rng import substream


def _sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest(args, inputs: list, outputs: list) -> dict:
    man = {
        "command": args.command,
        "config_path": getattr(args, "config", None),
        "seed": getattr(args, "seed", None),
        "args": {
            k: v for k, v in sorted(vars(args).items())
            if k not in ("command", "func", "out", "out_prefix") and not callable(v)
        },
        "inputs": {str(p): _sha256_file(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
    }
    blob = json.dumps(
        {k: man[k] for k in ("command", "config_path", "seed", "args", "inputs")},
        sort_keys=True, default=str,
    )
    man["hash"] = hashlib.sha256(blob.encode()).hexdigest()[:16]
    return man


def _write_manifest(man: dict, path, wall_s: float) -> None:
    man = dict(man)
    man["wall_time_s"] = round(wall_s, 3)
    Path(path).write_text(json.dumps(man, indent=2, sort_keys=True, default=str) + "\n")


def _write_csv(path, header: list[str], rows: list[list], manifest_hash: str) -> None:
    lines = [f"# manifest {manifest_hash}", ",".join(header)]
    for row in rows:
        lines.append(",".join(
            format(v, ".10g") if isinstance(v, float) else str(v) for v in row
        ))
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_schedule(text: str) -> list[tuple[float, int]]:
    sched = []
    for part in text.split(","):
        sigma_s, _, steps_s = part.partition(":")
        sched.append((float(sigma_s), int(steps_s)))
    return sched


def _parse_init(text: str) -> tuple[str, float]:
    if text == "random":
        return "random", 0.0
    if text.startswith("identity"):
        _, _, eps = text.partition(":")
        return "identity_perturbed", float(eps) if eps else 0.0
    raise ValueError(f"unknown init {text!r} (use identity:EPS or random)")


# --- subcommands --------------------------------------------------------------

def _cmd_gen_dataset(args) -> int:
    t0 = time.perf_counter()
    inputs = []
    if args.source == "boson":
        ds = bosonsim.generate_boson_dataset(
            args.m, args.n, args.size, args.seed, collision_free=args.collision_free
        )
    elif args.source == "uniform":
        recs = baselines.uniform_fixed_hw_sample(
            args.m, args.n, args.size, substream(args.seed, "uniform-dataset")
        )
        ds = dataio.Dataset(
            m=args.m, n=args.n, records=[tuple(r) for r in recs],
            provenance=[f"generator uniform-fixed-hw seed={args.seed}"],
        )
    else:  # ingest
        inputs = [args.input]
        if args.format == "preflib":
            ds = dataio.ingest_rankings(
                dataio.read_preflib_rankings(args.input), args.m, args.n
            )
        elif args.format == "rankings":
            ds = dataio.ingest_rankings(
                dataio.read_ranking_csv(args.input), args.m, args.n
            )
        else:
            universe, rows = dataio.read_expression_csv(args.input)
            ds = dataio.ingest_expression_table(
                rows, universe, args.n, signed=args.signed
            )
    dataio.write_dataset(ds, args.out)
    man = _manifest(args, inputs, [args.out])
    _write_manifest(man, str(args.out) + ".manifest.json", time.perf_counter() - t0)
    print(f"wrote {args.out}: {len(ds.records)} records (m={ds.m}, n={ds.n})")
    return 0


def _cmd_train(args) -> int:
    t0 = time.perf_counter()
    ds = dataio.read_dataset(args.dataset)
    if args.test is not None:
        train_ds, test_arr = ds, dataio.read_dataset(args.test).as_array()
    elif args.eval_every:
        train_ds, test_ds = dataio.shuffle_split(ds, seed=args.seed)
        test_arr = test_ds.as_array()
    else:
        train_ds, test_arr = ds, None
    strategy, eps = _parse_init(args.init)
    params = initialize_parameters(
        args.mesh, ds.m, strategy, substream(args.seed, "init"), epsilon=eps
    )
    spec = CircuitSpec(args.mesh, ds.m, params, make_input_state(ds.m, ds.n))
    schedule = _parse_schedule(args.sigma_schedule) if args.sigma_schedule else None
    steps = args.steps if schedule is None else sum(s for _, s in schedule)
    cfg = training.TrainConfig(
        steps=steps,
        mmd=mmd.MMDConfig(
            sigma=args.sigma, mask_batch=args.kbatch,
            glynn_batch=args.zbatch, data_batch=args.xbatch,
        ),
        seed=args.seed, lr=args.lr, sigma_schedule=schedule,
        eval_every=args.eval_every, frozen_batches=args.frozen_batches,
    )
    result = training.train(spec, train_ds, cfg, test_set=test_arr)
    prefix = args.out_prefix
    trace_path = f"{prefix}.trace.csv"
    ckpt_path = f"{prefix}.checkpoint.txt"
    outputs = [trace_path, ckpt_path]
    man = _manifest(args, [args.dataset] + ([args.test] if args.test else []), outputs)
    _write_csv(
        trace_path,
        ["step", "sigma", "mmd", "grad_norm", "wall_ms"],
        [[r.step, r.sigma, r.mmd_estimate, r.grad_norm, r.wall_ms] for r in result.trace],
        man["hash"],
    )
    Path(ckpt_path).write_text(serialize_spec(result.final_spec))
    if result.evals:
        eval_path = f"{prefix}.eval.csv"
        outputs.append(eval_path)
        _write_csv(
            eval_path,
            ["label", "mean", "std", "repeats"],
            [[f"step{e.step}", e.mean, e.std, e.repeats] for e in result.evals],
            man["hash"],
        )
    _write_manifest(man, f"{prefix}.manifest.json", time.perf_counter() - t0)
    first, last = result.trace[0].mmd_estimate, result.trace[-1].mmd_estimate
    print(f"trained {cfg.steps} steps: mmd {first:.6g} -> {last:.6g}; wrote {trace_path}")
    return 0


def _cmd_eval(args) -> int:
    t0 = time.perf_counter()
    spec = deserialize_spec(Path(args.checkpoint).read_text())
    test = dataio.read_dataset(args.dataset).as_array()
    mean, std = training.evaluate_model(
        spec, test, args.sigma, args.repeats, seed=args.seed
    )
    man = _manifest(args, [args.checkpoint, args.dataset], [args.out])
    _write_csv(
        args.out, ["label", "mean", "std", "repeats"],
        [["model", mean, std, args.repeats]], man["hash"],
    )
    _write_manifest(man, str(args.out) + ".manifest.json", time.perf_counter() - t0)
    print(f"model MMD on test set: {mean:.6g} +- {std:.6g} ({args.repeats} repeats)")
    return 0


def _cmd_baseline(args) -> int:
    t0 = time.perf_counter()
    ds = dataio.read_dataset(args.dataset)
    train_ds, test_ds = dataio.shuffle_split(ds, seed=args.seed)
    test = test_ds.as_array()
    kcfg = mmd.KernelConfig(args.sigma, "gaussian")
    if args.model == "test2test":
        mean, std = baselines.test_to_test_mmd(
            test, args.sigma, args.repeats, substream(args.seed, "t2t")
        )
    else:
        vals = []
        for r in range(args.repeats):
            rng = substream(args.seed, "baseline", args.model, r)
            if args.model == "uniform":
                samples = baselines.uniform_fixed_hw_sample(ds.m, ds.n, len(test), rng)
            else:
                # RBM visibles are binary; collision records cannot be encoded
                arr = train_ds.as_array()
                arr = arr[(arr <= 1).all(axis=1)]
                if len(arr) == 0:
                    raise ValueError("no collision-free records to train the RBM on")
                model, _ = baselines.rbm_train(
                    arr, hidden_count=args.hidden or ds.m,
                    epochs=args.epochs, lr=args.lr, rng=rng,
                )
                samples, _ = baselines.rbm_sample(model, len(test), ds.n, rng)
            vals.append(mmd.mmd_unbiased_samples(samples, test, kcfg))
        mean = float(np.mean(vals))
        std = float(np.std(vals, ddof=1)) if args.repeats > 1 else 0.0
    man = _manifest(args, [args.dataset], [args.out])
    _write_csv(
        args.out, ["label", "mean", "std", "repeats"],
        [[args.model, mean, std, args.repeats]], man["hash"],
    )
    _write_manifest(man, str(args.out) + ".manifest.json", time.perf_counter() - t0)
    print(f"{args.model} baseline MMD: {mean:.6g} +- {std:.6g}")
    return 0


def _cmd_check_grad(args) -> int:
    data = baselines.uniform_fixed_hw_sample(
        args.m, args.n, 64, substream(args.seed, "cg-data")
    )
    params = initialize_parameters(
        args.mesh, args.m, "random", substream(args.seed, "cg-init")
    )
    spec = CircuitSpec(args.mesh, args.m, params, make_input_state(args.m, args.n))
    cfg = mmd.MMDConfig(sigma=1.0, mask_batch=64, glynn_batch=64, data_batch=32)
    batches = mmd.draw_batches(args.m, args.n, data, cfg, args.seed, "cg")
    err = gradients.finite_difference_check(spec, batches, h=args.h)
    ok = err < 1e-4
    print(f"max relative gradient error ({args.mesh}, m={args.m}, n={args.n}): "
          f"{err:.3g} [{'PASS' if ok else 'FAIL'}]")
    return 0 if ok else 1


def _cmd_oracle(args) -> int:
    u = bosonsim.haar_unitary(args.m, substream(args.seed, "oracle-u"))
    s = make_input_state(args.m, args.n)
    lo = mmd.mmd_lo_exact(u, s, args.sigma, "mod2")
    dist = bosonsim.output_distribution(u, s).as_dict()
    brute = mmd.mmd_exact(dist, dist, mmd.KernelConfig(args.sigma, "mod2"))
    # model-model term alone: MMD(q, q) = 0, so compare the quadratic form
    xs = np.array(list(dist.keys()), dtype=float)
    pv = np.array(list(dist.values()))
    gram = mmd._gram(xs, xs, mmd.KernelConfig(args.sigma, "mod2"))
    brute = float(pv @ gram @ pv)
    delta = abs(lo.value - brute)
    gcf = mmd.mmd_lo_exact(u, s, args.sigma, "gaussian_collision_free")
    ok = delta < 1e-10
    print(f"mask-observable term {lo.value:.12g}, brute-force term {brute:.12g}, "
          f"|delta| = {delta:.3g} [{'PASS' if ok else 'FAIL'}]")
    print(f"collision-free Gaussian term {gcf.value:.12g}, "
          f"collision mass {gcf.collision_mass:.3g}")
    return 0 if ok else 1


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="lobm", description="Linear-optical Born machine training engine"
    )
    p.add_argument("--config", default=None, help="key=value file preseeding any flag")
    p.add_argument("--threads", type=int, default=None,
                   help="internal parallelism hint; never affects results")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-dataset", help="generate or ingest a dataset")
    g.add_argument("source", choices=["boson", "uniform", "ingest"])
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--size", type=int, default=5000)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--collision-free", action="store_true")
    g.add_argument("--format", choices=["preflib", "rankings", "expression"],
                   default="rankings")
    g.add_argument("--input", default=None)
    g.add_argument("--signed", action="store_true",
                   help="rank expression scores by signed value, not magnitude")
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen_dataset)

    t = sub.add_parser("train", help="train a circuit on a dataset")
    t.add_argument("--dataset", required=True)
    t.add_argument("--test", default=None, help="held-out dataset file")
    t.add_argument("--mesh", choices=list(MESH_KINDS), required=True)
    t.add_argument("--init", default="identity:0.5")
    t.add_argument("--sigma", type=float, default=3.0)
    t.add_argument("--sigma-schedule", default=None, help="e.g. 5:100,3:100,1:300")
    t.add_argument("--kbatch", type=int, default=2000)
    t.add_argument("--zbatch", type=int, default=2000)
    t.add_argument("--xbatch", type=int, default=256)
    t.add_argument("--steps", type=int, default=500)
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--eval-every", type=int, default=0)
    t.add_argument("--frozen-batches", action="store_true")
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("--out-prefix", required=True)
    t.set_defaults(func=_cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint against a test set")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--dataset", required=True)
    e.add_argument("--sigma", type=float, required=True)
    e.add_argument("--repeats", type=int, default=5)
    e.add_argument("--seed", type=int, required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=_cmd_eval)

    b = sub.add_parser("baseline", help="score a classical baseline")
    b.add_argument("model", choices=["rbm", "uniform", "test2test"])
    b.add_argument("--dataset", required=True)
    b.add_argument("--sigma", type=float, required=True)
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--hidden", type=int, default=None)
    b.add_argument("--epochs", type=int, default=200)
    b.add_argument("--lr", type=float, default=0.01)
    b.add_argument("--seed", type=int, required=True)
    b.add_argument("--out", required=True)
    b.set_defaults(func=_cmd_baseline)

    c = sub.add_parser("check-grad", help="verify gradients by finite differences")
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--mesh", choices=list(MESH_KINDS), required=True)
    c.add_argument("--h", type=float, default=1e-6)
    c.add_argument("--seed", type=int, required=True)
    c.set_defaults(func=_cmd_check_grad)

    o = sub.add_parser("oracle", help="exact mask-observable MMD checks")
    o.add_argument("--m", type=int, required=True)
    o.add_argument("--n", type=int, required=True)
    o.add_argument("--sigma", type=float, default=1.0)
    o.add_argument("--seed", type=int, required=True)
    o.set_defaults(func=_cmd_oracle)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Read --config key=value pairs and install them as parser defaults."""
    if "--config" not in argv:
        return argv
    path = argv[argv.index("--config") + 1]
    defaults = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        defaults[key.strip().replace("-", "_")] = value.strip()
    for action in parser._subparsers._group_actions[0].choices.values():
        known = {a.dest: a for a in action._actions}
        sub_defaults = {}
        for k, v in defaults.items():
            if k in known:
                typ = known[k].type
                sub_defaults[k] = typ(v) if typ else v
                known[k].required = False
        action.set_defaults(**sub_defaults)
    return argv


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit:
        raise
    except (ValueError, OSError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
