"""Command-line interface.

Subcommands: simulate, optimize, experiment, indicators, eaf, sample-size,
make-decks.  Every command is deterministic given its seed; primary outputs
are reproduced byte for byte on re-runs.
"""

from __future__ import annotations

import argparse
import dataclasses
import glob
import json
import sys
from pathlib import Path

import numpy as np

from trumpbench.deck import DeckShape, load_deck, save_deck
from trumpbench.eaf import RunGroup, attainment_surface, eaf_test
from trumpbench.experiments import (
    Approach,
    ExperimentConfig,
    balance_metric_study,
    compare_to_reference_decks,
    derive_seed,
    execute_run,
    run_experiment,
)
from trumpbench.game import Policy, simulate
from trumpbench.indicators import (
    FrontSet,
    eps_indicator,
    hv_indicator,
    normalize_sets,
    r2_indicator,
    read_front_csv,
    simplex_lattice_weights,
    write_front_csv,
)
from trumpbench.moea import VariationParams
from trumpbench.objectives import ObjectiveKind
from trumpbench.ocd import OCDParams
from trumpbench.synth import synthetic_reference_decks

POLICY_PAIRS = {
    "p4p0": (Policy.INFORMED, Policy.RANGE_ONLY),
    "p0p0": (Policy.RANGE_ONLY, Policy.RANGE_ONLY),
}


def _shape_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--cards", type=int, default=32, help="cards per deck (K)")
    parser.add_argument("--categories", type=int, default=4, help="categories per card (L)")
    parser.add_argument("--lo", type=float, default=1.0, help="lower value bound")
    parser.add_argument("--hi", type=float, default=10.0, help="upper value bound")


def _shape_from(args) -> DeckShape:
    return DeckShape(K=args.cards, L=args.categories, lo=args.lo, hi=args.hi)


def cmd_simulate(args) -> int:
    deck = load_deck(args.deck, rescale=args.rescale)
    policies = POLICY_PAIRS[args.policies]
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    summary = simulate(deck, policies, args.games, rng)
    record = {
        "deck": str(args.deck),
        "games": summary.games,
        "policies": args.policies,
        "seed": args.seed,
        "win_rate_p4": summary.win_rate_a,
        "draw_rate": summary.draw_rate,
        "loss_rate_p4": summary.loss_rate_a,
        "mean_announcer_changes": summary.mean_announcer_changes,
        "mean_tightness": summary.mean_tightness,
    }
    print(json.dumps(record, indent=1, sort_keys=True))
    return 0


def cmd_optimize(args) -> int:
    kind = ObjectiveKind(args.objective)
    shape = _shape_from(args)
    job = (
        f"{kind.value}{args.mu}",
        kind.value,
        args.mu,
        args.seed,
        (shape.K, shape.L, shape.lo, shape.hi),
        (args.pc, None, args.eta_c, args.eta_m),
        args.evals,
        (args.ocd_window, args.ocd_var_limit, args.ocd_alpha, ["hv", "eps", "r2"]),
        args.games,
    )
    label, seed, artifact, error = execute_run(job)
    if error is not None:
        print(f"run failed: {error}", file=sys.stderr)
        return 1
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"run_{label}_seed{seed}.json"
    path.write_text(json.dumps(artifact, indent=1), encoding="utf-8")
    print(
        f"{label}: {artifact['n_evals']} evaluations, stop={artifact['stop_reason']}, "
        f"front size {len(artifact['front'])} -> {path}"
    )
    return 0


def parse_config_file(path) -> ExperimentConfig:
    """Flat key=value config; '#' starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}, line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        values[key.strip().lower()] = value.strip()

    def get(key, default=None):
        return values.get(key, default)

    approaches = []
    for token in get("approaches", "S10,D10").replace(" ", "").split(","):
        if not token:
            continue
        kind = ObjectiveKind(token[0].upper())
        approaches.append(Approach(kind, int(token[1:])))
    shape = DeckShape(
        K=int(get("k", 32)),
        L=int(get("l", 4)),
        lo=float(get("lo", 1.0)),
        hi=float(get("hi", 10.0)),
    )
    pm = get("pm")
    return ExperimentConfig(
        approaches=tuple(approaches),
        runs=int(get("runs", 5)),
        games=int(get("games", 500)),
        shape=shape,
        master_seed=int(get("seed", 0)),
        output_dir=get("out"),
        max_evals=int(get("evals", 30000)),
        workers=int(get("workers", 1)),
        variation=VariationParams(
            pc=float(get("pc", 1.0)),
            pm=None if pm in (None, "", "auto") else float(pm),
            eta_c=float(get("eta_c", 20.0)),
            eta_m=float(get("eta_m", 15.0)),
        ),
        ocd=OCDParams(
            window=int(get("ocd_window", 10)),
            var_limit=float(get("ocd_var_limit", 1e-4)),
            alpha=float(get("ocd_alpha", 0.05)),
        ),
        surface_level=float(get("surface_level", 0.5)),
        permutations=int(get("permutations", 2000)),
        alpha=float(get("alpha", 0.05)),
    )


def cmd_experiment(args) -> int:
    config = parse_config_file(args.config)
    if args.out is not None:
        config = dataclasses.replace(config, output_dir=args.out)
    report = run_experiment(config)
    if args.reference_decks:
        decks = []
        for pattern in args.reference_decks:
            for path in sorted(glob.glob(pattern)):
                decks.append((Path(path).stem, load_deck(path, rescale=args.rescale)))
        report = compare_to_reference_decks(
            decks, report, config.games, derive_seed(config.master_seed, "reference-decks")
        )
        if config.output_dir is not None:
            out = Path(config.output_dir) / "report.json"
            out.write_text(
                json.dumps(report.to_json_dict(), indent=1, sort_keys=True), encoding="utf-8"
            )
    incomplete = [l for l, a in report.approaches.items() if not a.complete]
    status = "complete" if not incomplete else f"incomplete: {', '.join(incomplete)}"
    print(f"experiment {report.config.config_hash()} {status}")
    if config.output_dir is not None:
        print(f"artifacts in {config.output_dir}")
    return 0


def cmd_indicators(args) -> int:
    front_paths = sorted(glob.glob(args.fronts))
    if not front_paths:
        print(f"no front files match {args.fronts}", file=sys.stderr)
        return 1
    fronts = [read_front_csv(p) for p in front_paths]
    refset = read_front_csv(args.refset, origin="reference")
    normalized, _ = normalize_sets(fronts + [refset])
    norm_fronts, norm_ref = normalized[:-1], normalized[-1]
    m = norm_ref.m
    ref_point = np.full(m, 2.1)
    weights = simplex_lattice_weights(m, 20)
    ideal = norm_ref.points.min(axis=0) - 0.01
    lines = ["front,hv,eps,r2"]
    for path, fs in zip(front_paths, norm_fronts):
        lines.append(
            ",".join(
                [
                    path,
                    repr(hv_indicator(fs, norm_ref, ref_point)),
                    repr(eps_indicator(fs, norm_ref)),
                    repr(r2_indicator(fs, weights, ideal)),
                ]
            )
        )
    print("\n".join(lines))
    return 0


def _load_group(pattern: str, label: str) -> RunGroup:
    paths = sorted(glob.glob(pattern))
    if not paths:
        raise FileNotFoundError(f"no front files match {pattern}")
    return RunGroup(tuple(read_front_csv(p, origin=p) for p in paths), label)


def cmd_eaf(args) -> int:
    group_a = _load_group(args.group_a, "a")
    group_b = _load_group(args.group_b, "b")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    surface_a = attainment_surface(group_a, args.level)
    surface_b = attainment_surface(group_b, args.level)
    write_front_csv(surface_a, out_dir / "surface_a.csv")
    write_front_csv(surface_b, out_dir / "surface_b.csv")
    result = eaf_test(
        group_a, group_b, permutations=args.permutations, alpha=args.alpha, seed=args.seed
    )
    record = {
        "statistic": result.statistic,
        "critical_value": result.critical_value,
        "p_value": result.p_value,
        "permutations": result.permutations,
        "alpha": result.alpha,
        "reject": result.reject,
        "seed": args.seed,
    }
    (out_dir / "eaf_test.json").write_text(
        json.dumps(record, indent=1, sort_keys=True), encoding="utf-8"
    )
    print(json.dumps(record, indent=1, sort_keys=True))
    return 0


def cmd_sample_size(args) -> int:
    deck = load_deck(args.deck, rescale=args.rescale)
    sizes = [int(s) for s in args.sizes.split(",") if s]
    table = balance_metric_study(deck, sizes, args.repeats, args.alpha, args.seed)
    lines = ["size,metric,halfwidth_q95"]
    for row in table.rows:
        lines.append(f"{row.sample_size},{row.metric},{row.halfwidth_q95!r}")
    output = "\n".join(lines) + "\n"
    if args.out is not None:
        Path(args.out).write_text(output, encoding="utf-8")
    print(output, end="")
    return 0


def cmd_make_decks(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    shape = _shape_from(args)
    for name, deck in synthetic_reference_decks(shape):
        save_deck(deck, out_dir / f"{name}.csv")
    print(f"wrote 8 synthetic reference decks to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trumpbench",
        description="Generate, simulate and multi-objectively balance top-trumps decks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo batch on one deck, JSON to stdout")
    p.add_argument("--deck", required=True)
    p.add_argument("--games", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policies", choices=sorted(POLICY_PAIRS), default="p4p0")
    p.add_argument("--rescale", action="store_true", help="rescale categories onto [lo, hi]")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="one optimizer run, artifact JSON to --out")
    p.add_argument("--objective", choices=["D", "B", "S"], required=True)
    p.add_argument("--mu", type=int, default=10)
    p.add_argument("--evals", type=int, default=30000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--games", type=int, default=2000, help="games per B evaluation")
    p.add_argument("--pc", type=float, default=1.0)
    p.add_argument("--eta-c", type=float, default=20.0)
    p.add_argument("--eta-m", type=float, default=15.0)
    p.add_argument("--ocd-window", type=int, default=10)
    p.add_argument("--ocd-var-limit", type=float, default=1e-4)
    p.add_argument("--ocd-alpha", type=float, default=0.05)
    _shape_args(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("experiment", help="full multi-run pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="override the config's output directory")
    p.add_argument("--reference-decks", nargs="*", default=[], help="deck CSV globs to place")
    p.add_argument("--rescale", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("indicators", help="quality indicators of front files vs a reference")
    p.add_argument("--fronts", required=True, help="glob of front CSV files")
    p.add_argument("--refset", required=True, help="reference front CSV")
    p.set_defaults(func=cmd_indicators)

    p = sub.add_parser("eaf", help="attainment surfaces and two-group permutation test")
    p.add_argument("--group-a", required=True)
    p.add_argument("--group-b", required=True)
    p.add_argument("--level", type=float, default=0.5)
    p.add_argument("--permutations", type=int, default=10000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_eaf)

    p = sub.add_parser("sample-size", help="accuracy study of balance metrics on one deck")
    p.add_argument("--deck", required=True)
    p.add_argument("--sizes", default="100,500,1000,2000,5000,10000")
    p.add_argument("--repeats", type=int, default=500)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--rescale", action="store_true")
    p.set_defaults(func=cmd_sample_size)

    p = sub.add_parser("make-decks", help="write the synthetic reference decks as CSV")
    p.add_argument("--out", required=True)
    _shape_args(p)
    p.set_defaults(func=cmd_make_decks)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
