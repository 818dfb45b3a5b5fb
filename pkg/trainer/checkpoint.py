"""
Binary checkpoints for generators and the style classifier.

Layout, little-endian throughout:

    magic      8 bytes  b"FRLCKPT\\0"
    version    u16
    kind       u8       0 causal, 1 seq2seq, 2 classifier
    vocab      u32 length + newline-joined tokens (UTF-8)
    hyper      u32 length + JSON of the model sizes
    metadata   u32 length + JSON (step, seed, config hash, ...)
    shapes     u32 count, then per parameter: u16 name length, name,
               u8 ndim, ndim * u32
    payload    float64 values of every parameter in shape-table order

JSON is written with sorted keys so save -> load -> save is byte-identical.
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from classifier import ClassifierConfig, StyleClassifier, TextCNN
from corpus import Vocabulary
from errors import ConfigError, FormatError, IoError, ShapeError
from models import MiniCausalLM, MiniSeq2Seq, ModelConfig

logger = logging.getLogger(__name__)

MAGIC = b"FRLCKPT\0"
VERSION = 1
KINDS = ("causal", "seq2seq", "classifier")


@dataclass
class Checkpoint:
    kind: str
    vocab: Vocabulary
    hyper: Dict[str, Any]
    state: Dict[str, np.ndarray]
    metadata: Dict[str, Any] = field(default_factory=dict)
    version: int = VERSION

    def build(self):
        """
        Instantiate the stored model with its parameters. A classifier comes
        back frozen.

        Raises:
            FormatError: If the shape table does not fit the declared kind.
        """

        try:
            if self.kind == "classifier":
                model = TextCNN(len(self.vocab), ClassifierConfig(**self.hyper), np.random.default_rng(0))
            elif self.kind == "causal":
                model = MiniCausalLM(len(self.vocab), ModelConfig(**self.hyper), np.random.default_rng(0))
            else:
                model = MiniSeq2Seq(len(self.vocab), ModelConfig(**self.hyper), np.random.default_rng(0))
            model.load_state_dict(self.state)
        except (ShapeError, ValidationError) as e:
            raise FormatError(f"{self.kind} checkpoint does not match its declared model: {e}") from e
        if self.kind == "classifier":
            return StyleClassifier(model, self.vocab).freeze()
        return model


def _kind_of(model) -> str:
    if isinstance(model, StyleClassifier):
        return "classifier"
    family = getattr(model, "family", None)
    if family not in ("causal", "seq2seq"):
        raise ConfigError(f"cannot checkpoint {type(model).__name__}")
    return family


def _block(data: bytes) -> bytes:
    return struct.pack("<I", len(data)) + data


def _json(value: Dict[str, Any]) -> bytes:
    return json.dumps(value, sort_keys=True, separators=(",", ":")).encode("utf-8")


def encode_checkpoint(
    model,
    vocab: Optional[Vocabulary] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> bytes:
    """
    Serialise a generator (with its vocabulary) or a StyleClassifier.

    Raises:
        ConfigError: If a generator comes without a vocabulary.
    """

    kind = _kind_of(model)
    if kind == "classifier":
        vocab, module, hyper = model.vocab, model.model, model.config.model_dump()
    else:
        if vocab is None:
            raise ConfigError("a generator checkpoint needs its vocabulary")
        module, hyper = model, model.config.model_dump()

    named = list(module.named_parameters())
    parts = [
        MAGIC,
        struct.pack("<HB", VERSION, KINDS.index(kind)),
        _block(vocab.to_bytes()),
        _block(_json(hyper)),
        _block(_json(metadata or {})),
        struct.pack("<I", len(named)),
    ]
    for name, tensor in named:
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)) + encoded)
        parts.append(struct.pack(f"<B{tensor.ndim}I", tensor.ndim, *tensor.shape))
    for _, tensor in named:
        parts.append(np.ascontiguousarray(tensor.data, dtype="<f8").tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise FormatError("checkpoint is truncated")
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str) -> Tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def block(self) -> bytes:
        (size,) = self.unpack("<I")
        return self.take(size)

    def json(self) -> Dict[str, Any]:
        try:
            value = json.loads(self.block().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise FormatError(f"checkpoint holds malformed JSON: {e}") from e
        if not isinstance(value, dict):
            raise FormatError("checkpoint JSON block is not an object")
        return value


def decode_checkpoint(data: bytes) -> Checkpoint:
    """
    Raises:
        FormatError: On a wrong magic, an unknown version or kind, a
            truncated file or trailing bytes.
    """

    reader = _Reader(data)
    if reader.take(len(MAGIC)) != MAGIC:
        raise FormatError("not a checkpoint file (bad magic)")
    version, kind_index = reader.unpack("<HB")
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    if kind_index >= len(KINDS):
        raise FormatError(f"unknown checkpoint kind {kind_index}")

    try:
        vocab = Vocabulary.from_bytes(reader.block())
    except UnicodeDecodeError as e:
        raise FormatError(f"checkpoint vocabulary is not UTF-8: {e}") from e
    hyper = reader.json()
    metadata = reader.json()

    (count,) = reader.unpack("<I")
    table = []
    for _ in range(count):
        (name_length,) = reader.unpack("<H")
        try:
            name = reader.take(name_length).decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError(f"checkpoint parameter name is not UTF-8: {e}") from e
        (ndim,) = reader.unpack("<B")
        table.append((name, reader.unpack(f"<{ndim}I")))

    state = {}
    for name, shape in table:
        size = int(np.prod(shape, dtype=np.int64))
        values = np.frombuffer(reader.take(8 * size), dtype="<f8")
        state[name] = values.astype(np.float64).reshape(shape)
    if reader.offset != len(data):
        raise FormatError(f"{len(data) - reader.offset} trailing bytes after the payload")
    return Checkpoint(KINDS[kind_index], vocab, hyper, state, metadata, version)


def save_checkpoint(
    model,
    path,
    vocab: Optional[Vocabulary] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    path = Path(path)
    data = encode_checkpoint(model, vocab, metadata)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as e:
        raise IoError(f"cannot write checkpoint {path}: {e}") from e
    logger.info("Saved %s checkpoint to %s", _kind_of(model), path)
    return path


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise IoError(f"cannot read checkpoint {path}: {e}") from e
    return decode_checkpoint(data)


def load_generator(path, config_hash: Optional[str] = None):
    """
    Load a causal or seq2seq generator with its vocabulary.

    Args:
        config_hash: When given, the checkpoint must have been written by a
            run with this configuration hash (resuming).

    Raises:
        FormatError: If the file holds a classifier.
        ConfigError: On a configuration hash mismatch.
    """

    checkpoint = load_checkpoint(path)
    if checkpoint.kind == "classifier":
        raise FormatError(f"{path} holds a classifier, not a generator")
    if config_hash is not None:
        check_config_hash(checkpoint, config_hash)
    return checkpoint.build(), checkpoint.vocab, checkpoint


def load_classifier(path) -> StyleClassifier:
    checkpoint = load_checkpoint(path)
    if checkpoint.kind != "classifier":
        raise FormatError(f"{path} holds a {checkpoint.kind} generator, not a classifier")
    return checkpoint.build()


def check_config_hash(checkpoint: Checkpoint, config_hash: str) -> None:
    stored = checkpoint.metadata.get("config_hash")
    if stored != config_hash:
        raise ConfigError(f"checkpoint was written with config {stored}, current config is {config_hash}")
