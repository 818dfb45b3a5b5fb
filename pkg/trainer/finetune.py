"""
Fine-tuning of a generator on parallel pairs with optional policy-gradient
rewards, early-stopped on validation HM.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from autodiff import AdamState, StopDecision, adam_step, backward, early_stopping_check, global_rng
from corpus import EvalItem, ParallelPair, Vocabulary
from errors import ConfigError, DataError, IoError, NumericsError
from metrics import evaluate_system
from models import MiniSeq2Seq
from rewards import total_objective
from trainer.checkpoint import Checkpoint
from trainer.config import TrainConfig
from trainer.state import TrainingState, save_training_state

logger = logging.getLogger(__name__)

__all__ = ["FinetuneResult", "StopDecision", "build_generator", "early_stopping_check", "finetune"]


@dataclass
class FinetuneResult:
    model: object
    history: List[float]
    best_epoch: int
    best_hm: float
    steps: int
    records: List[Tuple[str, str]] = field(default_factory=list)

    def metrics_tsv(self) -> str:
        return "".join(f"{key}\t{value}\n" for key, value in self.records)


def build_generator(config: TrainConfig, vocab: Vocabulary, init: Optional[Checkpoint] = None):
    """
    The generator a run starts from: the pretrained checkpoint for causal and
    seq2seq, a fresh seq2seq (config.sizes, global generator) for
    seq2seq-scratch.

    Raises:
        ConfigError: If a pretrained model is missing or does not fit the run.
    """

    if config.model == "seq2seq-scratch":
        if init is not None:
            logger.warning("seq2seq-scratch ignores the init checkpoint")
        return MiniSeq2Seq(len(vocab), config.sizes, global_rng())
    if init is None:
        raise ConfigError(f"model {config.model} starts from a pretrained checkpoint (paths.init)")
    if init.kind != config.family:
        raise ConfigError(f"init checkpoint holds a {init.kind} model, the run needs {config.family}")
    if init.vocab != vocab:
        raise ConfigError("init checkpoint vocabulary differs from the corpus vocabulary")
    return init.build()


def _check_frozen(classifier) -> None:
    if any(p.requires_grad for p in classifier.model.parameters()):
        raise ConfigError("the style classifier must be frozen before fine-tuning")


def _number(value: float) -> str:
    return f"{value:.9f}"


def finetune(
    model,
    vocab: Vocabulary,
    train_pairs: Sequence[ParallelPair],
    valid_items: Sequence[EvalItem],
    classifier,
    config: TrainConfig,
    rng: Optional[np.random.Generator] = None,
    metrics_path=None,
    state_path=None,
    resume: Optional[TrainingState] = None,
) -> FinetuneResult:
    """
    Train model in place and leave it at its best-validation-HM epoch.

    Every step computes the total objective on one shuffled batch (rewards
    from the first epoch after warmup_epochs), back-propagates and applies
    Adam. After every epoch the validation split is transferred greedily and
    scored; training stops once HM has not improved for `patience` epochs.

    Args:
        rng: Source of the per-epoch shuffles and reward samples; the global
            generator when None.
        metrics_path: When given, the key<TAB>value metrics log is rewritten
            there after every epoch.
        state_path: When given, a TrainingState is saved there after every
            epoch.
        resume: A saved TrainingState to continue from. Training picks up at
            the epoch after the saved one with the saved parameters, Adam
            moments and generator state, so the run ends as an uninterrupted
            one would.

    Raises:
        DataError: If there are no training pairs or no validation items.
        ConfigError: If the classifier is not frozen, or resume was written
            under another configuration.
        NumericsError: If the loss or an update becomes non-finite (the
            message names the step and epoch).
    """

    if not train_pairs:
        raise DataError("fine-tuning needs at least one training pair")
    if not valid_items:
        raise DataError("fine-tuning needs validation items for early stopping")
    _check_frozen(classifier)

    rng = rng if rng is not None else global_rng()
    rewards = config.reward_config()
    rewards.source_term(model.family)
    params = model.parameters()
    config_hash = config.config_hash()

    records: List[Tuple[str, str]] = []
    history: List[float] = []
    step = 0
    first_epoch = 1
    stopped = False
    if resume is not None:
        resume.check_config(config_hash)
        model.load_state_dict(resume.params)
        state = resume.adam
        records = list(resume.records)
        history = list(resume.history)
        best_state = {k: v.copy() for k, v in resume.best_params.items()}
        step = resume.step
        first_epoch = resume.epoch + 1
        stopped = resume.stopped
        rng.bit_generator.state = resume.rng_state
        logger.info("Resuming after epoch %d (step %d)", resume.epoch, step)
    else:
        state = AdamState(lr=config.effective_lr)
        best_state = model.state_dict()
    logger.info(
        "Fine-tuning %s with %d parameters on %d pairs, lr %g, rewards %s",
        config.model,
        model.num_parameters(),
        len(train_pairs),
        state.lr,
        rewards.label(),
    )

    decision = early_stopping_check(history, config.patience) if history else None
    for epoch in range(first_epoch, config.max_epochs + 1):
        if stopped:
            break
        with_rewards = epoch > rewards.warmup_epochs
        order = rng.permutation(len(train_pairs))
        epoch_stats = []
        for start in range(0, len(train_pairs), config.batch_size):
            batch = [train_pairs[i] for i in order[start : start + config.batch_size]]
            step += 1
            try:
                result = total_objective(
                    batch, model, vocab, classifier, rewards, config.domain_tags, rng, with_rewards
                )
                loss = result.loss.item()
                if not math.isfinite(loss):
                    raise NumericsError(f"non-finite loss {loss}")
                backward(result.loss, params)
                adam_step(params, [p.grad for p in params], state)
            except NumericsError as e:
                raise NumericsError(f"{e} at step {step} (epoch {epoch})") from e
            stats = result.stats()
            epoch_stats.append(stats)
            logger.debug("Step %d: %s", step, ", ".join(f"{k} {v:.4f}" for k, v in stats.items()))

        report, _ = evaluate_system(
            model, vocab, valid_items, classifier, use_tag=config.domain_tags, batch_size=config.batch_size
        )
        history.append(report.hm)
        for key in epoch_stats[0]:
            records.append((f"epoch{epoch}.{key}", _number(float(np.mean([s[key] for s in epoch_stats])))))
        for metric in ("bleu", "acc", "hm"):
            records.append((f"epoch{epoch}.valid_{metric}", _number(getattr(report, metric))))
        logger.info(
            "Epoch %d: loss %.4f, valid BLEU %.4f ACC %.4f HM %.4f",
            epoch,
            float(np.mean([s["loss"] for s in epoch_stats])),
            report.bleu,
            report.acc,
            report.hm,
        )

        decision = early_stopping_check(history, config.patience)
        if decision.best_epoch == epoch:
            best_state = model.state_dict()
        stopped = decision.stop
        if metrics_path is not None:
            _write_records(metrics_path, records)
        if state_path is not None:
            snapshot = TrainingState(
                config_hash=config_hash,
                epoch=epoch,
                step=step,
                history=list(history),
                records=list(records),
                adam=state,
                params=model.state_dict(),
                best_params=best_state,
                rng_state=rng.bit_generator.state,
                stopped=stopped,
            )
            save_training_state(snapshot, state_path)
        if stopped:
            logger.info("Early stopping after epoch %d, best epoch %d", epoch, decision.best_epoch)

    if decision is None:
        raise DataError("fine-tuning ran no epochs")
    model.load_state_dict(best_state)
    records += [
        ("best_epoch", str(decision.best_epoch)),
        ("best_valid_hm", _number(decision.best_value)),
        ("steps", str(step)),
    ]
    if metrics_path is not None:
        _write_records(metrics_path, records)
    return FinetuneResult(model, history, decision.best_epoch, decision.best_value, step, records)


def _write_records(path, records: Sequence[Tuple[str, str]]) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("".join(f"{k}\t{v}\n" for k, v in records), encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot write metrics log {path}: {e}") from e
