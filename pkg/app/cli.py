"""
kpalign: simulate -> train -> eval -> filter/batch/diff -> serve -> bench, plus
the experiment suites. Any config field can be overridden with
``--section.key value`` after the subcommand.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from typing import Any, Dict, Optional, Sequence, Tuple

from app.bias_sim.simulation import Simulation, run_simulation
from app.bias_sim.world_dir import load_world, save_world
from app.config import RunConfig, load_run_config, parse_overrides
from app.encoders.bi_encoder import FULL_SCALE_TRAIN as BI_FULL_SCALE
from app.encoders.cross_encoder import FULL_SCALE_TRAIN as CROSS_FULL_SCALE
from app.encoders.cross_encoder import PRESETS
from app.errors import EXIT_ERROR, EXIT_OK, ConfigError, DataError, GateFailure, KpAlignError
from app.evaluation.export_xlsx import write_report_xlsx
from app.evaluation.metrics import format_table, gate, gate_failed
from app.evaluation.render import write_report_html
from app.evaluation.report import EvalReport, write_report_json
from app.experiments.bias_study import run_bias_study
from app.experiments.evaluate import add_to_report, evaluate_scorer
from app.experiments.table import run_table
from app.experiments.training import examples_for, train_bi_scorer, train_cross_scorer, world_vocab
from app.logs import configure_logging
from app.runs.store import RunStore, read_manifest, write_manifest
from app.scoring.base import RelevanceScorer
from app.scoring.jaccard import JaccardScorer
from app.scoring.loader import JACCARD_MODEL, load_scorer
from app.serving.batch import batch_score_full, score_records
from app.serving.bench import bench_throughput
from app.serving.nrt import CategoryEnrichment, NrtProcessor, NrtService, parse_events
from app.serving.pairs import ExplicitPairs, PairSource, SameCategoryPairs
from app.serving.store import ScoreStore
from app.text_core.catalog import Catalog, iter_jsonl_dicts, write_jsonl
from app.text_core.vocab import Vocab

logger = logging.getLogger(__name__)

MODEL_FILE = "model.npz"
VOCAB_FILE = "vocab.json"
CATALOG_DIR = "catalog"
REPORT_JSON = "report.json"


# -----------------------------
# Helpers
# -----------------------------
def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _require_out(args: argparse.Namespace) -> str:
    if not args.out:
        raise ConfigError(f"{args.command} needs --out")
    return args.out


def _world(args: argparse.Namespace, cfg: RunConfig) -> Simulation:
    if getattr(args, "world", None):
        return load_world(args.world)
    return run_simulation(cfg.sim)


def _inputs(args: argparse.Namespace) -> Dict[str, str]:
    """Checksums of the input files a run read, keyed by role."""
    out: Dict[str, str] = {}
    world = getattr(args, "world", None)
    if world and os.path.exists(os.path.join(world, "items.jsonl")):
        out["world_items"] = _sha256(os.path.join(world, "items.jsonl"))
    for ref in getattr(args, "model", None) or []:
        path = os.path.join(ref, MODEL_FILE)
        if os.path.exists(path):
            out[f"model:{ref}"] = _sha256(path)
    events = getattr(args, "events", None)
    if events and os.path.exists(events):
        out["events"] = _sha256(events)
    return out


def _echo_manifest(directory: str, args: argparse.Namespace, cfg: RunConfig, **extra: Any) -> None:
    """Adds the effective run config to a directory manifest, keeping whatever is already there."""
    try:
        payload = read_manifest(directory)
    except DataError:
        payload = {}
    payload["run"] = {
        "command": args.command,
        "seed": cfg.seed,
        "config": cfg.model_dump(mode="json"),
        "inputs": _inputs(args),
        **extra,
    }
    write_manifest(directory, payload)


def load_model(ref: str, cfg: RunConfig) -> RelevanceScorer:
    """``jaccard`` or a directory written by ``train``."""
    if ref == JACCARD_MODEL:
        return JaccardScorer(cfg.jaccard)
    model_path = os.path.join(ref, MODEL_FILE)
    vocab_path = os.path.join(ref, VOCAB_FILE)
    if not (os.path.exists(model_path) and os.path.exists(vocab_path)):
        raise DataError(f"{ref}: expected {MODEL_FILE} and {VOCAB_FILE} (a directory written by `train`)")
    return load_scorer(model_path, Vocab.load(vocab_path), cfg.jaccard)


def _pair_source(args: argparse.Namespace, sim: Optional[Simulation]) -> PairSource:
    if args.pairs == "advertised":
        if sim is None:
            raise ConfigError("--pairs advertised needs a world")
        return ExplicitPairs(sim.advertised)
    return SameCategoryPairs()


def _write_reports(report: EvalReport, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_report_json(report, os.path.join(out_dir, REPORT_JSON))
    write_report_xlsx(report, os.path.join(out_dir, "report.xlsx"))
    write_report_html(report, os.path.join(out_dir, "report.html"))


def _apply_gate(report: EvalReport, cfg: RunConfig) -> None:
    if cfg.eval.min_f1 is not None and not report.gate:
        report.gate = gate(report.rows, cfg.eval.min_f1)


def _raise_on_gate(report: EvalReport) -> None:
    failed = gate_failed(report.gate)
    if failed:
        raise GateFailure(f"F1 below the configured minimum for: {', '.join(failed)}")


def _parse_model_name(name: str) -> Tuple[str, str]:
    family, _, variant = name.partition("-")
    known = {"bi": ("contrastive", "softmax", "irns"), "cross": tuple(PRESETS)}
    if variant not in known.get(family, ()):
        raise ConfigError(f"unknown model {name!r}; use bi-<contrastive|softmax|irns> or cross-<{'|'.join(PRESETS)}>")
    return family, variant


# -----------------------------
# Commands
# -----------------------------
def cmd_simulate(args: argparse.Namespace, cfg: RunConfig) -> int:
    out = _require_out(args)
    sim = run_simulation(cfg.sim)
    save_world(sim, out)
    _echo_manifest(out, args, cfg)
    b = sim.bias
    print(f"world: {len(sim.world.catalog.items)} items, {len(sim.world.catalog.keyphrases)} keyphrases, "
          f"{len(sim.advertised)} advertised pairs")
    print(f"clicks: {len(sim.clicks)} positives; oracle-fail fraction {b.oracle_fail_fraction:.3f}; "
          f"irrelevant coverage {b.irrelevant_coverage:.3f}; relevant pairs never clicked {b.mnar_relevant_unclicked}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace, cfg: RunConfig) -> int:
    out = _require_out(args)
    family, variant = _parse_model_name(args.model_name or (
        f"bi-{cfg.model.objective}" if cfg.model.family == "bi" else f"cross-{cfg.model.preset}"))
    labels = args.labels or cfg.model.labels
    sim = _world(args, cfg)
    catalog = sim.world.catalog
    vocab = world_vocab(catalog, cfg.text.min_freq)
    examples = examples_for(sim, labels, cfg.experiment.negatives_per_positive,
                            cfg.experiment.max_train_pairs, cfg.seed)
    logger.info("train %s-%s on %d %s examples", family, variant, len(examples), labels)
    if family == "bi":
        update: Dict[str, Any] = {"objective": variant}
        if args.full_scale:
            update.update(BI_FULL_SCALE)
        scorer = train_bi_scorer(examples, catalog, vocab, cfg.bi.model_copy(update=update), cfg.text.max_len)
    else:
        update = {"preset": variant}
        if args.full_scale:
            update.update(CROSS_FULL_SCALE)
        scorer = train_cross_scorer(examples, catalog, vocab, cfg.cross.model_copy(update=update), cfg.text.max_len)

    os.makedirs(out, exist_ok=True)
    scorer.model.save(os.path.join(out, MODEL_FILE))
    vocab.save(os.path.join(out, VOCAB_FILE))
    _echo_manifest(out, args, cfg, model_version=scorer.model_version, labels=labels,
                   model=f"{family}-{variant}", threshold=scorer.threshold)
    print(f"{scorer.name} ({scorer.model_version}) threshold={scorer.threshold:.4f} -> {out}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, cfg: RunConfig) -> int:
    sim = _world(args, cfg)
    judgments = sim.eval_judgments if args.split == "eval" else sim.train_judgments
    report = EvalReport(title=f"Offline alignment with Search relevance ({args.split} split)")
    for ref in args.model or [JACCARD_MODEL]:
        scorer = load_model(ref, cfg)
        name = scorer.name if ref == JACCARD_MODEL else f"{scorer.name}:{os.path.basename(os.path.normpath(ref))}"
        add_to_report(report, evaluate_scorer(name, scorer, sim.world, judgments))
    _apply_gate(report, cfg)
    print(format_table(report.rows))
    if args.out:
        _write_reports(report, args.out)
        _echo_manifest(args.out, args, cfg)
    _raise_on_gate(report)
    return EXIT_OK


def cmd_filter(args: argparse.Namespace, cfg: RunConfig) -> int:
    sim = _world(args, cfg)
    scorer = load_model(args.model[0] if args.model else JACCARD_MODEL, cfg)
    records = score_records(scorer, sim.world.catalog, sim.advertised)
    passed = sum(r.passed for r in records)
    print(f"{scorer.name}: {passed} of {len(records)} advertised pairs pass (threshold {scorer.threshold:g})")
    if args.out:
        os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
        write_jsonl(args.out, records)
    return EXIT_OK


def cmd_batch(args: argparse.Namespace, cfg: RunConfig) -> int:
    out = _require_out(args)
    sim = _world(args, cfg)
    scorer = load_model(args.model[0] if args.model else JACCARD_MODEL, cfg)
    catalog = sim.world.catalog
    store = batch_score_full(scorer, catalog, pair_source=_pair_source(args, sim), out_dir=out)
    catalog.save(os.path.join(out, CATALOG_DIR))
    _echo_manifest(out, args, cfg, model_version=scorer.model_version, pairs=args.pairs)
    print(f"{len(store)} scores ({store.model_version}) -> {out}")
    return EXIT_OK


def _read_events(path: str):
    events, rejected = parse_events(iter_jsonl_dicts(path))
    for pos, err in rejected:
        logger.warning("%s: event %d rejected: %s", path, pos, err)
    return events, rejected


def cmd_diff(args: argparse.Namespace, cfg: RunConfig) -> int:
    out = _require_out(args)
    if not args.store or not args.events:
        raise ConfigError("diff needs --store and --events")
    store = ScoreStore.load(args.store)
    catalog = Catalog.load(os.path.join(args.store, CATALOG_DIR))
    scorer = load_model(args.model[0] if args.model else JACCARD_MODEL, cfg)
    events, rejected = _read_events(args.events)
    pair_source = _pair_source(args, _world(args, cfg) if args.pairs == "advertised" else None)
    processor = NrtProcessor(scorer, catalog, store, CategoryEnrichment.from_catalog(catalog), pair_source)
    result = processor.apply_window(events)
    processor.store.save(out)
    processor.catalog.save(os.path.join(out, CATALOG_DIR))
    _echo_manifest(out, args, cfg, model_version=scorer.model_version, base_store=store.checksum,
                   rejected=len(rejected), dead_letters=len(result.dead_letters))
    print(f"diff: {result.events_applied} events applied, {result.records_applied} records rescored, "
          f"{len(result.dead_letters)} dead letters, {len(rejected)} rejected -> {out}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace, cfg: RunConfig) -> int:
    import uvicorn

    from app.main import create_app

    scorer = load_model(args.model[0] if args.model else JACCARD_MODEL, cfg)
    if args.store:
        store = ScoreStore.load(args.store)
        catalog = Catalog.load(os.path.join(args.store, CATALOG_DIR))
        pair_source: PairSource = SameCategoryPairs()
    else:
        sim = _world(args, cfg)
        catalog = sim.world.catalog
        pair_source = _pair_source(args, sim)
        store = batch_score_full(scorer, catalog, pair_source=pair_source)
    processor = NrtProcessor(scorer, catalog, store, CategoryEnrichment.from_catalog(catalog), pair_source)
    service = NrtService(processor, window_ms=cfg.serving.window_ms)
    uvicorn.run(create_app(service), host=cfg.serving.host, port=cfg.serving.port)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, cfg: RunConfig) -> int:
    report = bench_throughput(args.family, args.n_items, args.n_keyphrases, args.n_pairs,
                              repeats=args.repeats, preset=args.preset, seed=cfg.seed)
    print(json.dumps(report.model_dump(), indent=2))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "bench.json"), "w", encoding="utf-8") as f:
            json.dump(report.model_dump(), f, indent=2, sort_keys=True)
            f.write("\n")
        _echo_manifest(args.out, args, cfg)
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace, cfg: RunConfig) -> int:
    sim = _world(args, cfg)
    if args.suite == "bias":
        report = run_bias_study(cfg, sim)
    else:
        rows = [r.strip() for r in args.rows.split(",")] if args.rows else None
        report = run_table(cfg, sim, rows)
    _apply_gate(report, cfg)
    print(format_table(report.rows))
    if "f1_gap" in report.notes:
        print(f"judgment-trained minus click-trained F1: {report.notes['f1_gap']:+.3f}")
    if report.selected:
        print(f"selected for serving: {report.selected}")

    if args.out:
        out = args.out
        _write_reports(report, out)
        _echo_manifest(out, args, cfg, suite=args.suite)
    else:
        runs = RunStore(os.getenv("KPALIGN_RUNS_DIR", "runs"))
        run_id = runs.new_run_id(args.suite)
        out = runs.paths(run_id).run_dir
        _write_reports(report, out)
        runs.save_manifest(run_id, {"run": {"command": args.command, "suite": args.suite, "seed": cfg.seed,
                                            "config": cfg.model_dump(mode="json"), "inputs": _inputs(args)}})
        print(f"run {run_id}")
    print(f"reports -> {out}")
    _raise_on_gate(report)
    return EXIT_OK


# -----------------------------
# Parser
# -----------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--config", default=None, help="YAML or JSON run config")
    common.add_argument("--seed", type=int, default=None, help="run seed (mandatory here or in the config)")
    common.add_argument("--out", default=None)
    common.add_argument("--log-level", default=None)

    world = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    world.add_argument("--world", default=None, help="world directory from `simulate` (default: simulate from config)")

    model = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    model.add_argument("--model", action="append", default=None,
                       help="`jaccard` or a directory written by `train`")

    pairs = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pairs.add_argument("--pairs", choices=["same-category", "advertised"], default="same-category")

    parser = argparse.ArgumentParser(
        prog="kpalign",
        description="Advertiser keyphrase relevance aligned with Search judgments.",
        epilog="Config overrides: --section.key value (e.g. --sim.search-noise 0.1).",
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="generate a world directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", parents=[common, world], help="train a bi- or cross-encoder")
    p.add_argument("--model", dest="model_name", default=None,
                   help="bi-contrastive|bi-softmax|bi-irns|cross-tiny|cross-mini|cross-micro")
    p.add_argument("--labels", choices=["judgments", "clicks"], default=None)
    p.add_argument("--full-scale", action="store_true", help="4 epochs at lr 2e-5")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common, world, model], help="alignment table against Search judgments")
    p.add_argument("--split", choices=["eval", "train"], default="eval")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("filter", parents=[common, world, model], help="score and filter the advertised pairs")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("batch", parents=[common, world, model, pairs], help="full batch scoring into a store")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("diff", parents=[common, world, model, pairs], help="merge a diff of catalog events")
    p.add_argument("--store", default=None, help="store directory from `batch` or `diff`")
    p.add_argument("--events", default=None, help="line-delimited JSON catalog events")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("serve", parents=[common, world, model, pairs], help="NRT scoring HTTP service")
    p.add_argument("--store", default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("bench", parents=[common], help="bi- vs cross-encoder scoring throughput")
    p.add_argument("--family", choices=["bi", "cross"], default="bi")
    p.add_argument("--n-items", type=int, default=200)
    p.add_argument("--n-keyphrases", type=int, default=50)
    p.add_argument("--n-pairs", type=int, default=2000)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--preset", default="tiny")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("experiment", parents=[common, world], help="label-source study or model table")
    p.add_argument("--suite", choices=["bias", "table"], default="bias")
    p.add_argument("--rows", default=None, help="comma-separated table rows (default: all)")
    p.set_defaults(func=cmd_experiment)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as e:
        # argparse prints usage itself; bad subcommands exit with the config code
        return e.code if isinstance(e.code, int) else EXIT_OK
    configure_logging(args.log_level)
    try:
        cfg = load_run_config(args.config, parse_overrides(extra), args.seed)
        logger.info("%s (seed %d)", args.command, cfg.seed)
        return args.func(args, cfg)
    except ConfigError as e:
        parser.print_usage(sys.stderr)
        print(f"kpalign: error: {e}", file=sys.stderr)
        return e.exit_code
    except KpAlignError as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"kpalign: error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception:
        logger.exception("%s failed", args.command)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
