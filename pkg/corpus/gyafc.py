"""
Reading and writing corpora in the GYAFC directory layout.

    <root>/train/informal, train/formal            line-aligned pairs
    <root>/{valid,test}/informal + formal.ref0..3   informal -> formal items
    <root>/{valid,test}/formal + informal.ref0..3   formal -> informal items
    <root>/unpaired/formal, unpaired/informal       optional pretraining text

Files are UTF-8 with LF line endings, one pretokenized sentence per line,
tokens separated by single spaces. Text is passed through unchanged.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from corpus.types import Corpus, EvalItem, ParallelPair, Sentence, StyleLabel, merge_corpora
from errors import AlignmentError, FormatError, IoError

logger = logging.getLogger(__name__)

DOMAIN_DIRS: Dict[str, str] = {
    "E&M": "Entertainment_Music",
    "F&R": "Family_Relationships",
}
STYLE_NAMES = {StyleLabel.INFORMAL: "informal", StyleLabel.FORMAL: "formal"}
N_REFERENCES = 4


def _read_lines(path: Path) -> List[Sentence]:
    try:
        content = path.read_bytes().decode("utf-8")
    except FileNotFoundError:
        raise FormatError(f"missing file {path}")
    except (OSError, UnicodeDecodeError) as e:
        raise IoError(f"cannot read {path}: {e}")

    if not content:
        return []
    lines = content.split("\n")
    if lines[-1] == "":
        lines.pop()
    sentences = []
    for number, line in enumerate(lines, start=1):
        sentence = Sentence.from_text(line)
        if not sentence.tokens:
            raise FormatError(f"{path}:{number}: empty sentence")
        sentences.append(sentence)
    return sentences


def _write_lines(path: Path, sentences: Sequence[Sentence]) -> None:
    text = "".join(s.text + "\n" for s in sentences)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(text.encode("utf-8"))
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}")


def _aligned(paths: Sequence[Path], columns: Sequence[List[Sentence]]) -> None:
    lengths = {len(c) for c in columns}
    if len(lengths) > 1:
        detail = ", ".join(f"{p.name}={len(c)}" for p, c in zip(paths, columns))
        raise AlignmentError(f"line counts differ in {paths[0].parent}: {detail}")


def _load_eval_split(
    split_dir: Path,
    domain_tag: Optional[str],
) -> Tuple[EvalItem, ...]:
    items = []
    for source_style in (StyleLabel.INFORMAL, StyleLabel.FORMAL):
        source_path = split_dir / STYLE_NAMES[source_style]
        target_name = STYLE_NAMES[source_style.opposite]
        ref_paths = [split_dir / f"{target_name}.ref{k}" for k in range(N_REFERENCES)]
        for ref_path in ref_paths:
            if not ref_path.is_file():
                raise FormatError(f"missing reference file {ref_path}")

        sources = _read_lines(source_path)
        references = [_read_lines(p) for p in ref_paths]
        _aligned([source_path, *ref_paths], [sources, *references])
        for i, source in enumerate(sources):
            items.append(
                EvalItem(
                    source=source,
                    source_style=source_style,
                    references=tuple(refs[i] for refs in references),
                    domain_tag=domain_tag,
                )
            )
    return tuple(items)


def load_gyafc_dir(path, domain_tag: Optional[str] = None) -> Corpus:
    """
    Load one domain directory.

    Args:
        path: Directory in the layout described in the module docstring.
        domain_tag: Tag attached to every pair and item (e.g. "E&M").

    Raises:
        AlignmentError: If line-aligned files differ in length.
        FormatError: If a required file is missing or a line is empty.
    """

    root = Path(path)
    if not root.is_dir():
        raise FormatError(f"{root} is not a directory")

    informal_path, formal_path = root / "train" / "informal", root / "train" / "formal"
    informal, formal = _read_lines(informal_path), _read_lines(formal_path)
    _aligned([informal_path, formal_path], [informal, formal])
    train = tuple(
        ParallelPair(
            source=src,
            target=tgt,
            source_style=StyleLabel.INFORMAL,
            domain_tag=domain_tag,
        )
        for src, tgt in zip(informal, formal)
    )

    unpaired: Dict[str, Tuple[Sentence, ...]] = {"formal": (), "informal": ()}
    for name in unpaired:
        unpaired_path = root / "unpaired" / name
        if unpaired_path.is_file():
            unpaired[name] = tuple(_read_lines(unpaired_path))

    corpus = Corpus(
        train=train,
        valid=_load_eval_split(root / "valid", domain_tag),
        test=_load_eval_split(root / "test", domain_tag),
        unpaired_formal=unpaired["formal"],
        unpaired_informal=unpaired["informal"],
        domain=domain_tag,
    )
    logger.info("Loaded %s: %s", root, corpus.counts())
    return corpus


def write_gyafc_dir(corpus: Corpus, path) -> None:
    """
    Write a corpus in the layout load_gyafc_dir reads. Every file is written,
    empty splits as empty files. Only pairs whose source is informal belong
    in train; reversed pairs are written back in their informal -> formal
    orientation.

    Raises:
        IoError: If a file cannot be written.
    """

    root = Path(path)
    pairs = [p if p.source_style == StyleLabel.INFORMAL else p.reversed() for p in corpus.train]
    _write_lines(root / "train" / "informal", [p.source for p in pairs])
    _write_lines(root / "train" / "formal", [p.target for p in pairs])

    for split in ("valid", "test"):
        split_dir = root / split
        for source_style in (StyleLabel.INFORMAL, StyleLabel.FORMAL):
            items = [i for i in corpus.split(split) if i.source_style == source_style]
            target_name = STYLE_NAMES[source_style.opposite]
            _write_lines(split_dir / STYLE_NAMES[source_style], [i.source for i in items])
            for k in range(N_REFERENCES):
                _write_lines(
                    split_dir / f"{target_name}.ref{k}",
                    [i.references[k] for i in items],
                )

    _write_lines(root / "unpaired" / "formal", corpus.unpaired_formal)
    _write_lines(root / "unpaired" / "informal", corpus.unpaired_informal)
    logger.info("Wrote corpus to %s", root)


def load_combined(path, domain_tags: bool = True) -> Corpus:
    """
    Load every per-domain directory present under path (Entertainment_Music,
    Family_Relationships) and concatenate them. With domain_tags=False the
    items carry no tag.

    A path that is itself a corpus directory is loaded as a single untagged
    domain.
    """

    root = Path(path)
    if (root / "train").is_dir():
        return load_gyafc_dir(root)

    corpora = []
    for tag, dirname in DOMAIN_DIRS.items():
        if (root / dirname).is_dir():
            corpora.append(load_gyafc_dir(root / dirname, tag if domain_tags else None))
    if not corpora:
        raise FormatError(f"{root} holds neither a corpus nor any of {list(DOMAIN_DIRS.values())}")
    return merge_corpora(corpora)
