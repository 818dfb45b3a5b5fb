"""
Resumable fine-tuning state, written after every epoch.

An .npz archive (numpy's zip of arrays, read back without pickle):

    meta          UTF-8 JSON: config hash, epoch, step, history, metrics
                  records, Adam hyperparameters and step, generator state
    param/<name>  current parameters
    best/<name>   parameters of the best epoch so far
    adam_m/<i>    Adam first moments, in parameter order
    adam_v/<i>    Adam second moments
"""

import json
import logging
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np

from autodiff import AdamState
from errors import ConfigError, FormatError, IoError

logger = logging.getLogger(__name__)


@dataclass
class TrainingState:
    config_hash: str
    epoch: int
    step: int
    history: List[float]
    records: List[Tuple[str, str]]
    adam: AdamState
    params: Dict[str, np.ndarray]
    best_params: Dict[str, np.ndarray]
    rng_state: Dict[str, Any]
    stopped: bool = False

    def check_config(self, config_hash: str) -> None:
        if self.config_hash != config_hash:
            raise ConfigError(
                f"training state was written with config {self.config_hash}, current config is {config_hash}"
            )


def save_training_state(state: TrainingState, path) -> Path:
    path = Path(path)
    meta = {
        "config_hash": state.config_hash,
        "epoch": state.epoch,
        "step": state.step,
        "history": state.history,
        "records": [list(r) for r in state.records],
        "adam": {
            "lr": state.adam.lr,
            "beta1": state.adam.beta1,
            "beta2": state.adam.beta2,
            "eps": state.adam.eps,
            "step": state.adam.step,
        },
        "rng_state": state.rng_state,
        "stopped": state.stopped,
    }
    arrays = {"meta": np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)}
    arrays.update({f"param/{k}": v for k, v in state.params.items()})
    arrays.update({f"best/{k}": v for k, v in state.best_params.items()})
    arrays.update({f"adam_m/{i}": m for i, m in enumerate(state.adam.m)})
    arrays.update({f"adam_v/{i}": v for i, v in enumerate(state.adam.v)})

    # Replaced atomically; readers never see a partial archive.
    partial = path.with_name(path.name + ".partial")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(partial, "wb") as f:
            np.savez(f, **arrays)
        partial.replace(path)
    except OSError as e:
        raise IoError(f"cannot write training state {path}: {e}") from e
    logger.debug("Saved training state after epoch %d to %s", state.epoch, path)
    return path


def load_training_state(path) -> TrainingState:
    """
    Raises:
        IoError: If the file cannot be read.
        FormatError: If it is not a training state archive.
    """

    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as archive:
            arrays = {name: archive[name] for name in archive.files}
    except OSError as e:
        raise IoError(f"cannot read training state {path}: {e}") from e
    except (ValueError, zipfile.BadZipFile) as e:
        raise FormatError(f"{path} is not a training state archive: {e}") from e

    try:
        meta = json.loads(arrays.pop("meta").tobytes().decode("utf-8"))
        n_moments = sum(1 for name in arrays if name.startswith("adam_m/"))
        adam = AdamState(
            **meta["adam"],
            m=[arrays[f"adam_m/{i}"] for i in range(n_moments)],
            v=[arrays[f"adam_v/{i}"] for i in range(n_moments)],
        )
        return TrainingState(
            config_hash=meta["config_hash"],
            epoch=int(meta["epoch"]),
            step=int(meta["step"]),
            history=[float(h) for h in meta["history"]],
            records=[(str(k), str(v)) for k, v in meta["records"]],
            adam=adam,
            params=_prefixed(arrays, "param/"),
            best_params=_prefixed(arrays, "best/"),
            rng_state=meta["rng_state"],
            stopped=bool(meta["stopped"]),
        )
    except (KeyError, TypeError, ValueError, UnicodeDecodeError) as e:
        raise FormatError(f"{path} is not a valid training state: {e}") from e


def _prefixed(arrays: Dict[str, np.ndarray], prefix: str) -> Dict[str, np.ndarray]:
    return {name[len(prefix) :]: value for name, value in arrays.items() if name.startswith(prefix)}
