"""
The x%-data ablation: fine-tune and evaluate one model per (fraction,
variant, seed) cell.

Each finished cell is appended to results.csv and flushed before the next
cell starts; a rerun over the same output directory skips the cells already
present. curve.csv holds the per-(variant, fraction) means over seeds.
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from autodiff import global_rng, seed_everything
from corpus import Corpus, Vocabulary, subset_fraction
from errors import FormatError, IoError
from metrics import evaluate_system
from trainer.checkpoint import Checkpoint
from trainer.config import AblationSpec
from trainer.finetune import build_generator, finetune

logger = logging.getLogger(__name__)

RESULTS_HEADER = ["fraction", "variant", "seed", "bleu", "acc", "hm"]
CURVE_HEADER = ["variant", "fraction", "runs", "bleu", "acc", "hm"]


@dataclass(frozen=True)
class AblationRow:
    fraction: float
    variant: str
    seed: int
    bleu: float
    acc: float
    hm: float

    @property
    def cell(self) -> Tuple[float, str, int]:
        return self.fraction, self.variant, self.seed

    def to_csv(self) -> List[str]:
        return [
            f"{self.fraction:g}",
            self.variant,
            str(self.seed),
            f"{self.bleu:.6f}",
            f"{self.acc:.6f}",
            f"{self.hm:.6f}",
        ]

    @classmethod
    def from_csv(cls, row: Dict[str, str]) -> "AblationRow":
        try:
            return cls(
                fraction=float(row["fraction"]),
                variant=row["variant"],
                seed=int(row["seed"]),
                bleu=float(row["bleu"]),
                acc=float(row["acc"]),
                hm=float(row["hm"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"malformed ablation row {row}: {e}") from e


@dataclass
class AblationResult:
    rows: List[AblationRow]
    results_path: Path
    curve_path: Path


class AblationRunner:
    """
    Runs the cells of an AblationSpec against one corpus and one frozen
    classifier. init is the pretrained checkpoint for causal and seq2seq
    sweeps; it is ignored for seq2seq-scratch.
    """

    def __init__(
        self,
        spec: AblationSpec,
        corpus: Corpus,
        vocab: Vocabulary,
        classifier,
        init: Optional[Checkpoint] = None,
    ):
        self.logger = logger.getChild(self.__class__.__name__)
        self.spec = spec
        self.corpus = corpus
        self.vocab = vocab
        self.classifier = classifier
        self.init = init

    def run_cell(self, fraction: float, variant: str, seed: int) -> AblationRow:
        config = self.spec.cell_config(fraction, variant, seed)
        seed_everything(seed)
        model = build_generator(config, self.vocab, self.init)
        pairs = subset_fraction(self.corpus.training_pairs(config.directions), fraction, seed)
        finetune(model, self.vocab, pairs, self.corpus.valid, self.classifier, config, global_rng())
        report, _ = evaluate_system(
            model,
            self.vocab,
            self.corpus.test,
            self.classifier,
            use_tag=config.domain_tags,
            batch_size=config.batch_size,
        )
        return AblationRow(fraction, variant, seed, report.bleu, report.acc, report.hm)

    def run(self, out_dir) -> AblationResult:
        out_dir = Path(out_dir)
        results_path = out_dir / "results.csv"
        rows = read_results(results_path) if results_path.is_file() else []
        done = {row.cell for row in rows}
        wanted = list(self.spec.cells())
        self.logger.info("%d of %d ablation cells already done", len(done & set(wanted)), len(wanted))

        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            fresh = not results_path.is_file()
            with open(results_path, "a", newline="", encoding="utf-8") as f:
                writer = csv.writer(f, lineterminator="\n")
                if fresh:
                    writer.writerow(RESULTS_HEADER)
                    f.flush()
                for cell in wanted:
                    if cell in done:
                        continue
                    self.logger.info("Cell fraction=%g variant=%s seed=%d", *cell)
                    row = self.run_cell(*cell)
                    writer.writerow(row.to_csv())
                    f.flush()
                    rows.append(row)
                    done.add(cell)
        except OSError as e:
            raise IoError(f"cannot write ablation results under {out_dir}: {e}") from e

        order = {cell: i for i, cell in enumerate(wanted)}
        rows = sorted((r for r in rows if r.cell in order), key=lambda r: order[r.cell])
        curve_path = write_curve(rows, out_dir / "curve.csv")
        return AblationResult(rows, results_path, curve_path)


def run_ablation(
    spec: AblationSpec,
    corpus: Corpus,
    vocab: Vocabulary,
    classifier,
    out_dir,
    init: Optional[Checkpoint] = None,
) -> AblationResult:
    return AblationRunner(spec, corpus, vocab, classifier, init).run(out_dir)


def read_results(path) -> List[AblationRow]:
    """
    Raises:
        FormatError: If the header is not the fixed results header.
    """

    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != RESULTS_HEADER:
            raise FormatError(f"{path} does not start with {','.join(RESULTS_HEADER)}")
        return [AblationRow.from_csv(row) for row in reader]


def write_curve(rows: List[AblationRow], path) -> Path:
    """
    Mean BLEU, ACC and HM over seeds for each (variant, fraction), in the
    order the cells first appear.
    """

    groups: Dict[Tuple[str, float], List[AblationRow]] = {}
    for row in rows:
        groups.setdefault((row.variant, row.fraction), []).append(row)

    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CURVE_HEADER)
            for (variant, fraction), group in groups.items():
                writer.writerow(
                    [variant, f"{fraction:g}", str(len(group))]
                    + [f"{np.mean([getattr(r, m) for r in group]):.6f}" for m in ("bleu", "acc", "hm")]
                )
    except OSError as e:
        raise IoError(f"cannot write learning curve {path}: {e}") from e
    return path
