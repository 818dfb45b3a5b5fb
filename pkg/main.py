"""
Command-line entry point: python main.py <subcommand> [flags].

Every subcommand accepts --config (a TOML run file), --seed, --verbose and
--quiet. Flags override the keys of the run file, which override the
[tool.formalrl] defaults in pyproject.toml.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import ValidationError

from autodiff import global_rng, seed_everything
from classifier import ClassifierConfig, train_textcnn
from corpus import (
    DIRECTIONS,
    DOMAIN_DIRS,
    Sentence,
    build_vocabulary,
    generate_synthetic_corpus,
    load_combined,
    style_of_direction,
    subset_fraction,
    write_gyafc_dir,
)
from errors import ConfigError, FormalRLError, IoError
from metrics import evaluate_system
from models import GenerationConfig, MiniCausalLM, MiniSeq2Seq, ModelConfig, PretrainConfig, Transferer
from models import pretrain_causal, pretrain_denoising
from settings import section
from trainer import (
    AblationSpec,
    TrainConfig,
    TrainingState,
    build_generator,
    finetune,
    load_checkpoint,
    load_classifier,
    load_generator,
    load_training_state,
    read_toml,
    run_ablation,
    save_checkpoint,
)
from trainer.config import SIDE_TABLES

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(levelname)s - %(name)s - %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
)
logger = logging.getLogger(__name__)

USAGE_ERRORS = (ConfigError, ValidationError)
CORPUS_DEFAULTS = {"seed": 0, "n_train_pairs": 2000, "n_eval_items": 100, "n_unpaired": 4000}


def _run_file(args) -> dict:
    if not args.config:
        return {}
    run = read_toml(args.config)
    unknown = set(run) - set(TrainConfig.model_fields) - set(SIDE_TABLES)
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in run file {args.config}")
    return run


def _table(run: dict, name: str) -> dict:
    table = run.get(name, {})
    if not isinstance(table, dict):
        raise ConfigError(f"[{name}] in the run file must be a table")
    return table


def _given(**flags) -> Dict[str, object]:
    return {key: value for key, value in flags.items() if value is not None}


def _require(value: Optional[str], flag: str) -> str:
    if not value:
        raise ConfigError(f"{flag} is required (flag or run-file key)")
    return value


def _load_corpus(path: str, domain_tags: bool = False):
    corpus = load_combined(path, domain_tags=domain_tags)
    logger.info("Loaded corpus %s: %s", path, corpus.counts())
    return corpus, build_vocabulary(corpus.sentences())


def _read_sentences(path: Optional[str]) -> List[Sentence]:
    try:
        if path is None or path == "-":
            lines = sys.stdin.read().splitlines()
        else:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e
    return [Sentence.from_text(line) for line in lines]


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def cmd_gen_corpus(args, run: dict) -> int:
    sizes = {**CORPUS_DEFAULTS, **section("corpus"), **_table(run, "corpus")}
    sizes.update(
        _given(seed=args.seed, n_train_pairs=args.train_pairs, n_eval_items=args.eval_items, n_unpaired=args.unpaired)
    )
    unknown = set(sizes) - set(CORPUS_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown [corpus] keys {sorted(unknown)}")
    corpus = generate_synthetic_corpus(domain=args.domain, **sizes)
    out = Path(args.out)
    if args.domain:
        out = out / DOMAIN_DIRS[args.domain]
    write_gyafc_dir(corpus, out)
    print(f"wrote {out}: {corpus.counts()}")
    return 0


def cmd_train_classifier(args, run: dict) -> int:
    corpus, vocab = _load_corpus(_require(args.corpus, "--corpus"))
    config = ClassifierConfig.from_settings(**{**_table(run, "classifier"), **_given(seed=args.seed)})
    result = train_textcnn(corpus.labeled_sentences(), config, vocab)
    metadata = {"held_out_accuracy": result.held_out_accuracy, "best_epoch": result.best_epoch, "seed": config.seed}
    save_checkpoint(result.classifier, _require(args.out, "--out"), metadata=metadata)
    print(f"held-out accuracy {result.held_out_accuracy:.4f}")
    return 0


def cmd_pretrain(args, run: dict) -> int:
    corpus, vocab = _load_corpus(_require(args.corpus, "--corpus"))
    config = PretrainConfig.from_settings(**{**_table(run, "pretrain"), **_given(seed=args.seed)})
    sizes = ModelConfig.from_settings(**_table(run, "sizes"))
    sentences = list(corpus.unpaired_formal + corpus.unpaired_informal)

    seed_everything(config.seed)
    if args.objective == "causal":
        model = MiniCausalLM(len(vocab), sizes, global_rng())
        result = pretrain_causal(sentences, model, vocab, config)
    else:
        model = MiniSeq2Seq(len(vocab), sizes, global_rng())
        result = pretrain_denoising(sentences, model, vocab, config)

    metadata = {"objective": args.objective, "seed": config.seed, "best_epoch": result.best_epoch, **result.metrics}
    save_checkpoint(model, _require(args.out, "--out"), vocab, metadata)
    for key, value in sorted(result.metrics.items()):
        print(f"{key}\t{value:.6f}")
    return 0


def _train_config(args, run: dict) -> TrainConfig:
    overrides = _given(
        model=args.model,
        seed=args.seed,
        lr=args.lr,
        max_epochs=args.max_epochs,
        fraction=args.fraction,
        domain_tags=args.domain_tags,
        directions=args.directions,
    )
    if args.rewards is not None:
        overrides["rewards"] = [r for r in args.rewards.split(",") if r and r != "none"]
    paths = _given(corpus=args.corpus, classifier=args.classifier, init=args.init, output=args.out)
    if args.config:
        config = TrainConfig.from_file(args.config, **overrides)
    else:
        config = TrainConfig.from_settings(**overrides)
    if paths:
        config = config.model_copy(update={"paths": config.paths.model_copy(update=paths)})
    return config


def cmd_finetune(args, run: dict) -> int:
    config = _train_config(args, run)
    corpus, vocab = _load_corpus(_require(config.paths.corpus, "--corpus"), config.domain_tags)
    classifier = load_classifier(_require(config.paths.classifier, "--classifier"))
    out = Path(_require(config.paths.output, "--out"))

    seed_everything(config.seed)
    init = load_checkpoint(config.paths.init) if config.paths.init else None
    model = build_generator(config, vocab, init)
    resume: Optional[TrainingState] = None
    if args.resume:
        resume = load_training_state(args.resume)
        resume.check_config(config.config_hash())
        logger.info("Resuming from %s after epoch %d", args.resume, resume.epoch)

    pairs = subset_fraction(corpus.training_pairs(config.directions), config.fraction, config.seed)
    result = finetune(
        model,
        vocab,
        pairs,
        corpus.valid,
        classifier,
        config,
        global_rng(),
        metrics_path=out / "metrics.tsv",
        state_path=out / "train_state.npz",
        resume=resume,
    )
    metadata = {
        "config_hash": config.config_hash(),
        "model": config.model,
        "seed": config.seed,
        "steps": result.steps,
        "best_epoch": result.best_epoch,
        "domain_tags": config.domain_tags,
    }
    save_checkpoint(model, out / "model.ckpt", vocab, metadata)
    print(f"best epoch {result.best_epoch}, validation HM {result.best_hm:.4f}")
    return 0


def cmd_transfer(args, run: dict) -> int:
    model, vocab, checkpoint = load_generator(_require(args.model, "--model"))
    use_tag = bool(checkpoint.metadata.get("domain_tags", False))
    if args.domain_tag and not use_tag:
        logger.warning("%s was trained without domain tags; ignoring --domain-tag", args.model)
    sources = _read_sentences(args.input)
    generation = GenerationConfig(mode=args.mode, seed=args.seed, temperature=args.temperature)
    transferer = Transferer(model, vocab, use_tag=use_tag)

    # Blank input lines stay blank in the output.
    filled = [i for i, source in enumerate(sources) if source.tokens]
    if len(filled) < len(sources):
        logger.warning("%d blank input lines are passed through", len(sources) - len(filled))
    outputs = [Sentence(()) for _ in sources]
    if filled:
        generated = transferer.transfer([sources[i] for i in filled], generation, [args.domain_tag] * len(filled))
        for i, g in zip(filled, generated):
            outputs[i] = transferer.to_sentence(g)

    lines = [output.text for output in outputs]
    if args.show_confidence:
        classifier = load_classifier(_require(args.classifier, "--classifier"))
        target = int(style_of_direction(args.direction).opposite)
        for i, output in enumerate(outputs):
            score = f"{classifier.confidence(output)[target]:.4f}" if output.tokens else "-"
            lines[i] = f"{lines[i]}\t{score}"
    _write_text(args.output, "".join(f"{line}\n" for line in lines))
    return 0


def cmd_evaluate(args, run: dict) -> int:
    model, vocab, checkpoint = load_generator(_require(args.model, "--model"))
    use_tag = bool(checkpoint.metadata.get("domain_tags", False))
    corpus, _ = _load_corpus(_require(args.corpus, "--corpus"), use_tag)
    classifier = load_classifier(_require(args.classifier, "--classifier"))
    items = corpus.eval_items(args.split, args.direction)
    config = {"model": Path(args.model).name, "split": args.split}
    report, outputs = evaluate_system(model, vocab, items, classifier, use_tag=use_tag, config=config)

    if args.out:
        _write_text(args.out, report.to_tsv())
    if args.outputs:
        _write_text(args.outputs, "".join(f"{o.text}\n" for o in outputs))
    print(report.to_text())
    if args.first_reference:
        print(f"BLEU against the first reference only: {report.bleu_first_ref:.4f}")
    return 0


def cmd_ablate(args, run: dict) -> int:
    spec = AblationSpec.from_file(_require(args.spec, "--spec"))
    corpus, vocab = _load_corpus(_require(args.corpus, "--corpus"), spec.train.domain_tags)
    classifier = load_classifier(_require(args.classifier, "--classifier"))
    init = load_checkpoint(args.init) if args.init else None
    result = run_ablation(spec, corpus, vocab, classifier, _require(args.out, "--out"), init)
    print(f"{len(result.rows)} cells in {result.results_path}, curve in {result.curve_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run file")
    common.add_argument("--seed", type=int)
    common.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    common.add_argument("--quiet", action="store_true", help="log warnings and errors only")

    parser = argparse.ArgumentParser(prog="formalrl", description="Formality style transfer with rewards.")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("gen-corpus", parents=[common], help="write a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--train-pairs", type=int)
    p.add_argument("--eval-items", type=int)
    p.add_argument("--unpaired", type=int)
    p.add_argument("--domain", choices=sorted(DOMAIN_DIRS))
    p.set_defaults(handler=cmd_gen_corpus)

    p = commands.add_parser("train-classifier", parents=[common], help="train the TextCNN style classifier")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_train_classifier)

    p = commands.add_parser("pretrain", parents=[common], help="pretrain a generator on unpaired text")
    p.add_argument("--objective", choices=["causal", "denoise"], default="denoise")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_pretrain)

    p = commands.add_parser("finetune", parents=[common], help="fine-tune on parallel pairs with rewards")
    p.add_argument("--model", choices=["causal", "seq2seq", "seq2seq-scratch"])
    p.add_argument("--rewards", help="comma-separated subset of sc,bleu (or none)")
    p.add_argument("--fraction", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--directions", choices=[*DIRECTIONS, "both"])
    p.add_argument("--domain-tags", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--init")
    p.add_argument("--classifier")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.add_argument("--resume", help="continue from the train_state.npz of an interrupted run with the same config")
    p.set_defaults(handler=cmd_finetune)

    p = commands.add_parser("transfer", parents=[common], help="transfer sentences read from a file or stdin")
    p.add_argument("--model")
    p.add_argument("--input", help="one sentence per line; stdin when omitted")
    p.add_argument("--output", help="stdout when omitted")
    p.add_argument("--direction", choices=list(DIRECTIONS), default="0to1")
    p.add_argument("--domain-tag", choices=sorted(DOMAIN_DIRS))
    p.add_argument("--mode", choices=["greedy", "sample"], default="greedy")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--show-confidence", action="store_true")
    p.add_argument("--classifier")
    p.set_defaults(handler=cmd_transfer)

    p = commands.add_parser("evaluate", parents=[common], help="score a model on a corpus split")
    p.add_argument("--model")
    p.add_argument("--classifier")
    p.add_argument("--corpus")
    p.add_argument("--split", choices=["valid", "test"], default="test")
    p.add_argument("--direction", choices=list(DIRECTIONS))
    p.add_argument("--out", help="write the key<TAB>value report here")
    p.add_argument("--outputs", help="write the transferred sentences here")
    p.add_argument("--first-reference", action="store_true")
    p.set_defaults(handler=cmd_evaluate)

    p = commands.add_parser("ablate", parents=[common], help="run the x%%-data ablation")
    p.add_argument("--spec")
    p.add_argument("--corpus")
    p.add_argument("--classifier")
    p.add_argument("--init")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_ablate)
    return parser


def _one_line(error: Exception) -> str:
    if isinstance(error, ValidationError):
        first = error.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        return f"{location}: {first['msg']}" if location else first["msg"]
    return " ".join(str(error).split())


def cli_main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand and return its exit code: 0 on success, 2 for usage
    and configuration errors, 1 for any other failure.
    """

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 0

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    elif args.quiet:
        logging.getLogger().setLevel(logging.WARNING)

    try:
        run = _run_file(args)
        return args.handler(args, run)
    except USAGE_ERRORS as e:
        print(f"error: {type(e).__name__}: {_one_line(e)}", file=sys.stderr)
        return 2
    except (FormalRLError, OSError) as e:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {type(e).__name__}: {_one_line(e)}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(cli_main())
