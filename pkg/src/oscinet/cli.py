"""Command-line front end.

Three subcommands: ``simulate`` writes a synthetic recording to CSV,
``recover`` reconstructs a network from a recording, and ``experiment``
reproduces one of the named result sets from a JSON config.  Failures print
stage-labeled diagnostics on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dynamics, topology
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment
from .recovery import PipelineError, RecoverConfig, recover


def _build_network(args) -> topology.Network:
    if args.network == "star":
        return topology.make_star(args.nodes)
    if args.network == "ring":
        return topology.make_ring(args.nodes)
    if args.network == "twin-stars":
        return topology.make_twin_stars(args.leaves_a, args.leaves_b)
    raise ValueError(f"unknown network {args.network!r}")


def _cmd_simulate(args) -> int:
    net = _build_network(args)
    n = net.n_nodes
    rng = np.random.default_rng(args.seed)
    omega = dynamics.random_frequencies(n, rng)
    ens = dynamics.OscillatorEnsemble(net, args.alpha, omega)
    if args.model == "stuart-landau":
        z0 = dynamics.random_initial_state(n, rng)
        series = dynamics.simulate_stuart_landau(ens, z0, args.t_end, args.dt)
    elif args.model == "phase":
        theta0 = dynamics.random_initial_phases(n, rng)
        series = dynamics.simulate_phase_model(ens, theta0, args.t_end, args.dt)
    else:  # noisy-phase
        theta0 = dynamics.random_initial_phases(n, rng)
        series = dynamics.to_real_observations(
            dynamics.simulate_noisy_phase(
                ens, theta0, args.eta,
                dt_euler=args.dt, t_end=args.t_end, rng_seed=[args.seed, 1],
            )
        )
    dynamics.save_series(series, args.out)
    print(f"wrote {args.out} ({series.n_samples} samples x {n} channels)")
    return 0


def _parse_extensions(text: str) -> tuple:
    if not text:
        return ()
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _cmd_recover(args) -> int:
    base = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    overrides = {
        "sg_window": args.sg_window,
        "sg_order": args.sg_order,
        "smooth": args.smooth,
        "trim_fraction": args.trim_fraction,
        "threshold_ratio": args.threshold_ratio,
        "cv_folds": args.cv_folds,
    }
    for key, val in overrides.items():
        if val is not None:
            base[key] = val
    if args.extensions is not None:
        base["extensions"] = _parse_extensions(args.extensions)
    if "extensions" in base:
        base["extensions"] = tuple(base["extensions"])
    cfg = RecoverConfig(**base)

    series = dynamics.load_series(args.input, channel_meaning=args.channel_meaning)
    truth = topology.load_edgelist(args.truth) if args.truth else None
    report = recover(
        series, truth=truth, method=args.method, config=cfg, alpha=args.alpha
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.save(out / "report.json", out / "recovered.edges")
    line = f"{report.method}: {report.recovered.n_edges} edges"
    if report.score is not None:
        line += (
            f", FP={report.score.false_positives}"
            f", FN={report.score.false_negatives}"
        )
    print(line)
    print(f"wrote {out / 'report.json'} and {out / 'recovered.edges'}")
    return 0


def _cmd_experiment(args) -> int:
    base = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    base["experiment"] = args.name
    if args.out is not None:
        base["out_dir"] = args.out
    if args.seeds is not None:
        base["seeds"] = args.seeds
    elif args.full and "seeds" not in base:
        base["seeds"] = 100
    if args.master_seed is not None:
        base["master_seed"] = args.master_seed
    cfg = ExperimentConfig.from_json_dict(base)
    summary = run_experiment(cfg)
    for failure in summary.get("failures", []):
        print(f"warning: {failure}", file=sys.stderr)
    print(f"wrote results to {summary['out_dir']}")
    return 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="oscinet",
        description="Reconstruct oscillator networks from time series.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate a model and save the recording")
    sim.add_argument(
        "--model", default="stuart-landau",
        choices=["stuart-landau", "phase", "noisy-phase"],
    )
    sim.add_argument("--network", default="star", choices=["star", "ring", "twin-stars"])
    sim.add_argument("--nodes", type=int, default=10)
    sim.add_argument("--leaves-a", type=int, default=4)
    sim.add_argument("--leaves-b", type=int, default=5)
    sim.add_argument("--alpha", type=float, default=0.1)
    sim.add_argument("--t-end", type=float, default=100.0)
    sim.add_argument("--dt", type=float, default=0.1)
    sim.add_argument("--eta", type=float, default=0.0, help="noise intensity")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=_cmd_simulate)

    rec = sub.add_parser("recover", help="reconstruct a network from a recording")
    rec.add_argument("--input", required=True, help="series CSV from `simulate`")
    rec.add_argument(
        "--channel-meaning", default=dynamics.REAL_PART,
        choices=[dynamics.REAL_PART, dynamics.PHASE],
    )
    rec.add_argument("--method", default="lasso", choices=["lasso", "l2"])
    rec.add_argument("--truth", help="edge-list file to score against")
    rec.add_argument("--alpha", type=float, default=None,
                     help="coupling strength for the kappa statistics")
    rec.add_argument("--config", help="JSON file of pipeline settings")
    rec.add_argument("--sg-window", type=int, default=None)
    rec.add_argument("--sg-order", type=int, default=None)
    rec.add_argument("--smooth", choices=["after", "before"], default=None)
    rec.add_argument("--trim-fraction", type=float, default=None)
    rec.add_argument("--threshold-ratio", type=float, default=None)
    rec.add_argument("--cv-folds", type=int, default=None)
    rec.add_argument("--extensions", default=None,
                     help="comma-separated node ids whose harmonics to extend")
    rec.add_argument("--out", default="recovered")
    rec.set_defaults(func=_cmd_recover)

    exp = sub.add_parser("experiment", help="run a named result set")
    exp.add_argument("name", choices=list(EXPERIMENTS))
    exp.add_argument("--config", help="JSON file of experiment settings")
    exp.add_argument("--out", default=None)
    exp.add_argument("--seeds", type=int, default=None)
    exp.add_argument("--master-seed", type=int, default=None)
    exp.add_argument("--full", action="store_true",
                     help="full reproduction scale (100 seeds) unless --seeds given")
    exp.set_defaults(func=_cmd_experiment)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # argparse handles its own errors
        print(f"error: [{args.command}] {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
