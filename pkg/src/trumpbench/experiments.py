"""Experiment orchestration: repeated optimizer runs per approach, shared
re-evaluation of every collected deck under the simulation objectives,
joint normalization, indicator tables with confidence intervals,
attainment analysis, pairwise attainment tests and report artifacts."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from trumpbench.deck import Deck, DeckShape, genome_to_deck
from trumpbench.eaf import EAFTestResult, RunGroup, attainment_surface, eaf_test, set_strictly_dominates
from trumpbench.game import Policy, simulate
from trumpbench.indicators import (
    FrontSet,
    NormalizeTransform,
    eps_indicator,
    fit_normalize_transform,
    hv_indicator,
    prune_to_front,
    r2_indicator,
    simplex_lattice_weights,
    write_front_csv,
)
from trumpbench.moea import EAConfig, RunResult, VariationParams, sms_emoa_run, so_ea_run
from trumpbench.objectives import (
    ObjectiveKind,
    balance_objectives,
    dominance_fitness,
    surrogate_objectives,
)
from trumpbench.ocd import OCDParams
from trumpbench.stats import SampleSizeRow, SampleSizeTable, ci_halfwidth

INDICATOR_REF_OFFSET = 0.1  # reference point at 2.1 per objective after [1,2] scaling
R2_SUBDIVISIONS = 20
IDEAL_MARGIN = 0.01


@dataclass(frozen=True)
class Approach:
    """One optimizer configuration: objective kind plus population size."""

    kind: ObjectiveKind
    mu: int

    @property
    def label(self) -> str:
        return f"{self.kind.value}{self.mu}"


@dataclass(frozen=True)
class ExperimentConfig:
    approaches: tuple[Approach, ...]
    runs: int = 5
    games: int = 500
    shape: DeckShape = field(default_factory=DeckShape)
    master_seed: int = 0
    output_dir: str | None = None
    max_evals: int = 30_000
    workers: int = 1
    variation: VariationParams = field(default_factory=VariationParams)
    ocd: OCDParams = field(default_factory=OCDParams)
    surface_level: float = 0.5
    permutations: int = 2_000
    alpha: float = 0.05

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ValueError("need at least one run per approach")
        labels = [a.label for a in self.approaches]
        if len(labels) != len(set(labels)):
            raise ValueError(f"approach labels must be unique, got {labels}")

    def config_hash(self) -> str:
        payload = {
            "approaches": [a.label for a in self.approaches],
            "runs": self.runs,
            "games": self.games,
            "shape": [self.shape.K, self.shape.L, self.shape.lo, self.shape.hi],
            "master_seed": self.master_seed,
            "max_evals": self.max_evals,
            "variation": [
                self.variation.pc,
                self.variation.pm,
                self.variation.eta_c,
                self.variation.eta_m,
            ],
            "ocd": [
                self.ocd.window,
                self.ocd.var_limit,
                self.ocd.alpha,
                list(self.ocd.indicators),
            ],
            "surface_level": self.surface_level,
            "permutations": self.permutations,
            "alpha": self.alpha,
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def derive_seed(master_seed: int, *parts) -> int:
    """Stable 63-bit seed from the master seed and any string/int parts."""
    blob = json.dumps([master_seed, *[str(p) for p in parts]]).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big") >> 1


def make_evaluator(kind: ObjectiveKind, shape: DeckShape, games: int):
    """Objective callable for the optimizers; simulation noise uses the
    per-evaluation generator handed in by the run loop."""
    if kind is ObjectiveKind.DOMINANCE:
        return lambda deck, rng: dominance_fitness(deck).values
    if kind is ObjectiveKind.SURROGATE:
        return lambda deck, rng: surrogate_objectives(deck, shape).values
    if kind is ObjectiveKind.BALANCE:

        def evaluate(deck: Deck, rng: np.random.Generator) -> np.ndarray:
            summary = simulate(deck, (Policy.INFORMED, Policy.RANGE_ONLY), games, rng)
            return balance_objectives(summary, shape).values

        return evaluate
    raise ValueError(f"unsupported objective kind: {kind}")


def run_to_artifact(result: RunResult, approach: Approach, config: EAConfig) -> dict:
    """JSON-ready record of one optimizer run."""
    def individuals(items):
        return [
            {
                "genome": [float(x) for x in ind.genome],
                "objectives": [float(x) for x in ind.objectives],
                "eval_index": ind.eval_index,
            }
            for ind in items
        ]

    return {
        "approach": approach.label,
        "config": {
            "objective": approach.kind.value,
            "mu": approach.mu,
            "max_evals": config.max_evals,
            "games": config.games,
            "shape": {
                "K": config.shape.K,
                "L": config.shape.L,
                "lo": config.shape.lo,
                "hi": config.shape.hi,
            },
            "variation": {
                "pc": config.variation.pc,
                "pm": config.variation.pm,
                "eta_c": config.variation.eta_c,
                "eta_m": config.variation.eta_m,
            },
            "ocd": {
                "window": config.ocd.window,
                "var_limit": config.ocd.var_limit,
                "alpha": config.ocd.alpha,
                "indicators": list(config.ocd.indicators),
            },
        },
        "seed": result.seed,
        "n_evals": result.n_evals,
        "stop_reason": result.stop_reason.value,
        "population": individuals(result.final_population),
        "front": individuals(result.front),
        "indicator_trace": list(result.indicator_trace),
    }


def execute_run(job: tuple) -> tuple[str, int, dict | None, str | None]:
    """Worker entry point: run one optimization; never raises."""
    label, kind_value, mu, seed, shape_tuple, variation_tuple, max_evals, ocd_tuple, games = job
    try:
        approach = Approach(ObjectiveKind(kind_value), mu)
        shape = DeckShape(*shape_tuple)
        config = EAConfig(
            mu=mu,
            objective=approach.kind,
            shape=shape,
            variation=VariationParams(*variation_tuple),
            max_evals=max_evals,
            seed=seed,
            ocd=OCDParams(ocd_tuple[0], ocd_tuple[1], ocd_tuple[2], tuple(ocd_tuple[3])),
            games=games,
        )
        evaluator = make_evaluator(approach.kind, shape, games)
        if approach.kind is ObjectiveKind.DOMINANCE:
            result = so_ea_run(config, evaluator)
        else:
            result = sms_emoa_run(config, evaluator)
        return label, seed, run_to_artifact(result, approach, config), None
    except Exception as exc:  # reported per-run in the report
        return label, seed, None, f"{type(exc).__name__}: {exc}"


@dataclass
class ApproachResult:
    approach: Approach
    complete: bool
    errors: list[str]
    run_artifacts: list[dict]
    collected_genomes: list[list[np.ndarray]]  # per run
    union_points: np.ndarray | None = None  # raw re-evaluated triples
    run_points: list[np.ndarray] | None = None
    front_normalized: FrontSet | None = None
    surface_normalized: FrontSet | None = None
    indicators_front: dict | None = None
    indicators_surface: dict | None = None
    ci_halfwidths: dict | None = None
    rank_front: int | None = None
    rank_surface: int | None = None


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    evaluation_seed: int
    transform: NormalizeTransform | None
    reference_front: np.ndarray | None
    approaches: dict[str, ApproachResult]
    eaf_tests: dict[str, EAFTestResult]
    set_relations: list[dict]
    reference_decks: list[dict] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        out = {
            "config_hash": self.config.config_hash(),
            "master_seed": self.config.master_seed,
            "evaluation_seed": self.evaluation_seed,
            "runs_per_approach": self.config.runs,
            "games_per_evaluation": self.config.games,
            "normalization": None
            if self.transform is None
            else {
                "lo": [float(x) for x in self.transform.lo],
                "span": [float(x) for x in self.transform.span],
            },
            "reference_front": None
            if self.reference_front is None
            else [[float(x) for x in row] for row in self.reference_front],
            "approaches": {},
            "eaf_tests": {
                key: {
                    "statistic": t.statistic,
                    "critical_value": t.critical_value,
                    "p_value": t.p_value,
                    "permutations": t.permutations,
                    "alpha": t.alpha,
                    "reject": t.reject,
                    "seed": t.seed,
                }
                for key, t in sorted(self.eaf_tests.items())
            },
            "set_relations": self.set_relations,
            "reference_decks": self.reference_decks,
        }
        for label in sorted(self.approaches):
            a = self.approaches[label]
            out["approaches"][label] = {
                "complete": a.complete,
                "errors": a.errors,
                "runs": len(a.run_artifacts),
                "seeds": [art["seed"] for art in a.run_artifacts],
                "n_evals": [art["n_evals"] for art in a.run_artifacts],
                "stop_reasons": [art["stop_reason"] for art in a.run_artifacts],
                "union_size": None if a.union_points is None else int(len(a.union_points)),
                "front": None
                if a.front_normalized is None
                else [[float(x) for x in row] for row in a.front_normalized.points],
                "surface50": None
                if a.surface_normalized is None
                else [[float(x) for x in row] for row in a.surface_normalized.points],
                "indicators_front": a.indicators_front,
                "indicators_surface": a.indicators_surface,
                "ci_halfwidths": a.ci_halfwidths,
                "rank_front": a.rank_front,
                "rank_surface": a.rank_surface,
            }
        return out


def _collect_run_genomes(artifact: dict, kind: ObjectiveKind) -> list[np.ndarray]:
    """Decks one run contributes: the front for multi-objective runs, the
    single best individual for the dominance baseline."""
    if kind is ObjectiveKind.DOMINANCE:
        best = min(artifact["front"], key=lambda ind: (ind["objectives"][0], ind["eval_index"]))
        return [np.array(best["genome"])]
    return [np.array(ind["genome"]) for ind in artifact["front"]]


def reevaluate_genomes(
    genomes: list[np.ndarray],
    shape: DeckShape,
    games: int,
    evaluation_seed: int,
) -> np.ndarray:
    """Balance objectives for each deck under one shared game sample."""
    points = np.empty((len(genomes), 3))
    for i, genome in enumerate(genomes):
        deck = genome_to_deck(genome, shape)
        rng = np.random.default_rng(np.random.SeedSequence(evaluation_seed))
        summary = simulate(deck, (Policy.INFORMED, Policy.RANGE_ONLY), games, rng)
        points[i] = balance_objectives(summary, shape).values
    return points


def _indicator_block(front: FrontSet, refset: FrontSet, weights, ideal, ref_point) -> dict:
    return {
        "hv": hv_indicator(front, refset, ref_point),
        "eps": eps_indicator(front, refset),
        "r2": r2_indicator(front, weights, ideal),
    }


def _assign_ranks(blocks: dict[str, dict]) -> dict[str, int]:
    """Non-dominated sorting ranks of (hv, eps, r2) triples, 1 = best."""
    from trumpbench.moea import nondominated_sort

    labels = sorted(blocks)
    pts = np.array([[blocks[l]["hv"], blocks[l]["eps"], blocks[l]["r2"]] for l in labels])
    ranks = nondominated_sort(pts)
    return {l: int(r) for l, r in zip(labels, ranks)}


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Execute the full pipeline and, if configured, write all artifacts."""
    jobs = []
    for approach in config.approaches:
        for run_idx in range(config.runs):
            seed = derive_seed(config.master_seed, approach.label, run_idx)
            jobs.append(
                (
                    approach.label,
                    approach.kind.value,
                    approach.mu,
                    seed,
                    (config.shape.K, config.shape.L, config.shape.lo, config.shape.hi),
                    (
                        config.variation.pc,
                        config.variation.pm,
                        config.variation.eta_c,
                        config.variation.eta_m,
                    ),
                    config.max_evals,
                    (
                        config.ocd.window,
                        config.ocd.var_limit,
                        config.ocd.alpha,
                        list(config.ocd.indicators),
                    ),
                    config.games,
                )
            )

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(execute_run, jobs))
    else:
        outcomes = [execute_run(job) for job in jobs]

    by_label: dict[str, ApproachResult] = {
        a.label: ApproachResult(a, True, [], [], []) for a in config.approaches
    }
    for label, seed, artifact, error in outcomes:
        slot = by_label[label]
        if error is not None:
            slot.errors.append(f"seed {seed}: {error}")
            slot.complete = False
        else:
            slot.run_artifacts.append(artifact)
            slot.collected_genomes.append(
                _collect_run_genomes(artifact, slot.approach.kind)
            )

    evaluation_seed = derive_seed(config.master_seed, "balance-reevaluation")
    for slot in by_label.values():
        if not slot.run_artifacts:
            continue
        run_points = [
            reevaluate_genomes(genomes, config.shape, config.games, evaluation_seed)
            for genomes in slot.collected_genomes
        ]
        slot.run_points = run_points
        slot.union_points = np.vstack(run_points)

    report = ExperimentReport(
        config=config,
        evaluation_seed=evaluation_seed,
        transform=None,
        reference_front=None,
        approaches=by_label,
        eaf_tests={},
        set_relations=[],
    )
    _analyze(report)
    if config.output_dir is not None:
        write_report_artifacts(report, Path(config.output_dir))
    return report


def _analyze(report: ExperimentReport) -> None:
    config = report.config
    usable = {l: s for l, s in report.approaches.items() if s.union_points is not None}
    if not usable:
        return

    all_points = np.vstack([s.union_points for s in usable.values()])
    transform = fit_normalize_transform(all_points)
    report.transform = transform
    reference = FrontSet(prune_to_front(transform.apply(all_points)), "reference")
    report.reference_front = reference.points

    m = all_points.shape[1]
    ref_point = np.full(m, 2.0 + INDICATOR_REF_OFFSET)
    weights = simplex_lattice_weights(m, R2_SUBDIVISIONS)
    ideal = reference.points.min(axis=0) - IDEAL_MARGIN

    front_blocks: dict[str, dict] = {}
    surface_blocks: dict[str, dict] = {}
    groups: dict[str, RunGroup] = {}
    for label, slot in usable.items():
        union_norm = transform.apply(slot.union_points)
        slot.front_normalized = FrontSet(union_norm, f"{label}_p")
        run_fronts = tuple(
            FrontSet(transform.apply(pts), f"{label}_run{idx}")
            for idx, pts in enumerate(slot.run_points)
        )
        groups[label] = RunGroup(run_fronts, label)
        slot.surface_normalized = attainment_surface(groups[label], config.surface_level)
        slot.indicators_front = _indicator_block(
            slot.front_normalized, reference, weights, ideal, ref_point
        )
        slot.indicators_surface = _indicator_block(
            slot.surface_normalized, reference, weights, ideal, ref_point
        )
        per_run = {
            "hv": [], "eps": [], "r2": [],
        }
        for fs in run_fronts:
            block = _indicator_block(fs, reference, weights, ideal, ref_point)
            for key in per_run:
                per_run[key].append(block[key])
        slot.ci_halfwidths = {
            key: (ci_halfwidth(vals, config.alpha).halfwidth if len(vals) >= 2 else None)
            for key, vals in per_run.items()
        }
        front_blocks[label] = slot.indicators_front
        surface_blocks[label] = slot.indicators_surface

    for label, rank in _assign_ranks(front_blocks).items():
        usable[label].rank_front = rank
    for label, rank in _assign_ranks(surface_blocks).items():
        usable[label].rank_surface = rank

    labels = sorted(usable)
    for i, la in enumerate(labels):
        for lb in labels[i + 1 :]:
            if len(groups[la]) < 2 or len(groups[lb]) < 2:
                continue
            test_seed = derive_seed(config.master_seed, "eaf", la, lb)
            report.eaf_tests[f"{la}_vs_{lb}"] = eaf_test(
                groups[la],
                groups[lb],
                permutations=config.permutations,
                alpha=config.alpha,
                seed=test_seed,
            )

    named_sets: dict[str, np.ndarray] = {}
    for label, slot in usable.items():
        named_sets[f"{label}_union"] = transform.apply(slot.union_points)
        named_sets[f"{label}_p"] = slot.front_normalized.points
        named_sets[f"{label}_{config.surface_level:g}"] = slot.surface_normalized.points
    for name_a in sorted(named_sets):
        for name_b in sorted(named_sets):
            if name_a == name_b:
                continue
            if set_strictly_dominates(named_sets[name_a], named_sets[name_b]):
                report.set_relations.append(
                    {"dominator": name_a, "dominated": name_b}
                )


def compare_to_reference_decks(
    decks: list[tuple[str, Deck]],
    report: ExperimentReport,
    games: int,
    seed: int,
) -> ExperimentReport:
    """Evaluate external decks under the shared pipeline and record how they
    relate to each approach's front."""
    entries: list[dict] = []
    for name, deck in decks:
        try:
            rng = np.random.default_rng(np.random.SeedSequence(seed))
            summary = simulate(deck, (Policy.INFORMED, Policy.RANGE_ONLY), games, rng)
            balance = balance_objectives(summary, deck.shape).values
            entry = {
                "name": name,
                "dominance_fitness": float(dominance_fitness(deck).values[0]),
                "balance": [float(x) for x in balance],
            }
            if report.transform is not None:
                norm = report.transform.apply(balance.reshape(1, -1))[0]
                entry["normalized"] = [float(x) for x in norm]
                entry["dominated_by"] = sorted(
                    label
                    for label, slot in report.approaches.items()
                    if slot.front_normalized is not None
                    and bool(np.any(np.all(slot.front_normalized.points < norm, axis=1)))
                )
            entries.append(entry)
        except Exception as exc:
            entries.append({"name": name, "error": f"{type(exc).__name__}: {exc}"})
    return replace_report_decks(report, entries)


def replace_report_decks(report: ExperimentReport, entries: list[dict]) -> ExperimentReport:
    return ExperimentReport(
        config=report.config,
        evaluation_seed=report.evaluation_seed,
        transform=report.transform,
        reference_front=report.reference_front,
        approaches=report.approaches,
        eaf_tests=report.eaf_tests,
        set_relations=report.set_relations,
        reference_decks=report.reference_decks + entries,
    )


def write_report_artifacts(report: ExperimentReport, out_dir: Path) -> None:
    out_dir = Path(out_dir)
    (out_dir / "runs").mkdir(parents=True, exist_ok=True)
    (out_dir / "fronts").mkdir(parents=True, exist_ok=True)
    for label in sorted(report.approaches):
        slot = report.approaches[label]
        run_dir = out_dir / "runs" / label
        run_dir.mkdir(parents=True, exist_ok=True)
        for idx, artifact in enumerate(slot.run_artifacts):
            path = run_dir / f"run_{idx:03d}.json"
            path.write_text(json.dumps(artifact, indent=1), encoding="utf-8")
        if slot.union_points is not None:
            write_front_csv(
                FrontSet(slot.union_points, f"{label}_union"),
                out_dir / "fronts" / f"{label}_union.csv",
            )
        if slot.front_normalized is not None:
            write_front_csv(slot.front_normalized, out_dir / "fronts" / f"{label}_front.csv")
        if slot.surface_normalized is not None:
            write_front_csv(
                slot.surface_normalized, out_dir / "fronts" / f"{label}_surface50.csv"
            )
    _write_indicator_csv(report, out_dir / "indicators.csv")
    (out_dir / "report.json").write_text(
        json.dumps(report.to_json_dict(), indent=1, sort_keys=True), encoding="utf-8"
    )


def _write_indicator_csv(report: ExperimentReport, path: Path) -> None:
    lines = ["set,hv,eps,r2,hv_ci,eps_ci,r2_ci,rank"]
    for label in sorted(report.approaches):
        slot = report.approaches[label]
        if slot.indicators_front is None:
            continue
        ci = slot.ci_halfwidths or {}

        def fmt(value):
            return "" if value is None else repr(float(value))

        for suffix, block, rank in (
            ("_p", slot.indicators_front, slot.rank_front),
            ("_50", slot.indicators_surface, slot.rank_surface),
        ):
            lines.append(
                ",".join(
                    [
                        f"{label}{suffix}",
                        repr(float(block["hv"])),
                        repr(float(block["eps"])),
                        repr(float(block["r2"])),
                        fmt(ci.get("hv")),
                        fmt(ci.get("eps")),
                        fmt(ci.get("r2")),
                        str(rank),
                    ]
                )
            )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def balance_metric_study(
    deck: Deck,
    sizes: list[int],
    repeats: int,
    alpha: float,
    seed: int,
) -> SampleSizeTable:
    """Accuracy study of the three balance metrics on one deck.

    Each repeat simulates a fresh batch per size and computes the t-interval
    halfwidth per metric; rows hold the .95 quantile over repeats.
    """
    if repeats < 2:
        raise ValueError("need at least two repeats")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 99)))
    metrics = ("win_rate", "announcer_changes", "tightness")
    rows = []
    for size in sizes:
        halfwidths = {name: np.empty(repeats) for name in metrics}
        for r in range(repeats):
            summary = simulate(
                deck, (Policy.INFORMED, Policy.RANGE_ONLY), int(size), rng, keep_games=True
            )
            wins = np.array(
                [1.0 if g.tricks_a > g.tricks_b else 0.0 for g in summary.per_game]
            )
            changes = np.array([float(g.announcer_changes) for g in summary.per_game])
            tight = np.array([g.tightness for g in summary.per_game])
            for name, values in (("win_rate", wins), ("announcer_changes", changes), ("tightness", tight)):
                halfwidths[name][r] = ci_halfwidth(values, alpha).halfwidth
        for name in metrics:
            rows.append(
                SampleSizeRow(
                    sample_size=int(size),
                    metric=name,
                    halfwidth_q95=float(np.quantile(halfwidths[name], 0.95)),
                )
            )
    return SampleSizeTable(tuple(rows))
