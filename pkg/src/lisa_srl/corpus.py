"""Annotated sentences, BIO span coding, label spaces and tag transitions.

File format (one token per line, blank line between sentences):

    word <TAB> pos <TAB> head <TAB> predicate-marker <TAB> bio_1 ... bio_k

Heads are 0-based token indices within the sentence; the root points at
itself. The predicate marker is "Y" or "-". There is one BIO column per
predicate, ordered by predicate position. Extra columns that are entirely
"O" are tolerated on input and dropped. Columns may be separated by any
whitespace; the writer emits tabs.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CorpusFormatError, EncodingError, EstimationError

OUTSIDE = "O"
PREDICATE_SUFFIX = ":predicate"


@dataclass(frozen=True)
class RoleSpan:
    """A labeled argument span; start and end are inclusive token indices."""

    start: int
    end: int
    label: str

    def __post_init__(self) -> None:
        if self.start > self.end or self.start < 0:
            raise EncodingError(f"bad span bounds ({self.start}, {self.end})")


@dataclass(frozen=True)
class AnnotatedSentence:
    """One sentence with POS tags, dependency heads, predicates and frames.

    All parallel sequences have length T. `heads[t]` is the parent of token
    t, with the root marked by a self-loop. `frames` maps each predicate's
    token index to that predicate's BIO role sequence over all T tokens.
    """

    tokens: tuple[str, ...]
    pos: tuple[str, ...]
    heads: tuple[int, ...]
    predicates: tuple[bool, ...]
    frames: dict[int, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        t = len(self.tokens)
        if not (len(self.pos) == len(self.heads) == len(self.predicates) == t):
            raise CorpusFormatError("parallel sequences differ in length")
        for h in self.heads:
            if not 0 <= h < t:
                raise CorpusFormatError(f"head index {h} outside [0, {t})")
        for k, tags in self.frames.items():
            if not self.predicates[k]:
                raise CorpusFormatError(f"frame for non-predicate token {k}")
            if len(tags) != t:
                raise CorpusFormatError(f"frame at {k} has length {len(tags)} != {t}")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def predicate_indices(self) -> list[int]:
        return [i for i, p in enumerate(self.predicates) if p]

    def root(self) -> int:
        roots = [i for i, h in enumerate(self.heads) if h == i]
        if len(roots) != 1:
            raise CorpusFormatError(f"expected exactly one self-loop root, found {roots}")
        return roots[0]


class LabelSpace:
    """Bijective label-string <-> dense-index map with contiguous indices."""

    def __init__(self, labels: Iterable[str]) -> None:
        self.labels: tuple[str, ...] = tuple(labels)
        self.index: dict[str, int] = {s: i for i, s in enumerate(self.labels)}
        if len(self.index) != len(self.labels):
            raise CorpusFormatError("duplicate labels in label space")

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: str) -> bool:
        return label in self.index

    def __iter__(self):
        return iter(self.labels)

    def __eq__(self, other) -> bool:
        return isinstance(other, LabelSpace) and self.labels == other.labels

    def of(self, label: str) -> int:
        return self.index[label]

    def name(self, idx: int) -> str:
        return self.labels[idx]


# ---------------------------------------------------------------------------
# BIO coding


def _split_tag(tag: str) -> tuple[str, str]:
    if tag == OUTSIDE:
        return OUTSIDE, ""
    if len(tag) > 2 and tag[1] == "-" and tag[0] in "BI":
        return tag[0], tag[2:]
    raise CorpusFormatError(f"malformed BIO tag {tag!r}")


def is_valid_bio(tags: Sequence[str]) -> bool:
    prev_label = None
    for tag in tags:
        prefix, label = _split_tag(tag)
        if prefix == "I" and label != prev_label:
            return False
        prev_label = label if prefix in ("B", "I") else None
    return True


def spans_to_bio(spans: Sequence[RoleSpan], length: int) -> tuple[str, ...]:
    """Encode non-overlapping spans as a BIO sequence of the given length."""
    tags = [OUTSIDE] * length
    for span in spans:
        if span.end >= length:
            raise EncodingError(f"span {span} exceeds sentence length {length}")
        for t in range(span.start, span.end + 1):
            if tags[t] != OUTSIDE:
                raise EncodingError(f"overlapping spans at token {t}")
            tags[t] = ("B-" if t == span.start else "I-") + span.label
    return tuple(tags)


def bio_to_spans(tags: Sequence[str]) -> list[RoleSpan]:
    spans, _ = bio_to_spans_counted(tags)
    return spans


def bio_to_spans_counted(tags: Sequence[str]) -> tuple[list[RoleSpan], int]:
    """Decode BIO tags to spans, repairing bare I-X as B-X.

    Returns (spans, repair_count); the count is how many I-tags had to be
    promoted because they did not continue a span of the same label.
    Evaluation consumes arbitrary model output, so repair beats rejection.
    """
    spans: list[RoleSpan] = []
    repairs = 0
    start: int | None = None
    cur: str | None = None

    def close(end_exclusive: int) -> None:
        nonlocal start, cur
        if start is not None and cur is not None:
            spans.append(RoleSpan(start, end_exclusive - 1, cur))
        start, cur = None, None

    for i, tag in enumerate(tags):
        prefix, label = _split_tag(tag)
        if prefix == OUTSIDE:
            close(i)
        elif prefix == "B":
            close(i)
            start, cur = i, label
        else:  # I
            if cur != label:
                repairs += 1
                close(i)
                start, cur = i, label
    close(len(tags))
    return spans, repairs


def repair_bio(tags: Sequence[str]) -> tuple[tuple[str, ...], int]:
    """Rewrite an arbitrary BIO sequence into a well-formed one."""
    spans, repairs = bio_to_spans_counted(tags)
    return spans_to_bio(spans, len(tags)), repairs


# ---------------------------------------------------------------------------
# Corpus files

PRED_MARK = "Y"
NO_PRED_MARK = "-"


def read_conll(path, *, repair: bool = False) -> list[AnnotatedSentence]:
    sentences, _ = read_conll_counted(path, repair=repair)
    return sentences


def read_conll_counted(
    path, *, repair: bool = False
) -> tuple[list[AnnotatedSentence], int]:
    """Read a corpus file; with repair=True, ill-formed BIO columns are
    repaired (I-X -> B-X) instead of rejected and the repair count returned.
    """
    sentences: list[AnnotatedSentence] = []
    total_repairs = 0
    rows: list[tuple[int, list[str]]] = []

    def flush() -> None:
        nonlocal total_repairs
        if not rows:
            return
        first_line = rows[0][0]
        width = len(rows[0][1])
        for lineno, cols in rows:
            if len(cols) != width:
                raise CorpusFormatError(
                    f"line {lineno}: ragged columns ({len(cols)} vs {width})"
                )
        t = len(rows)
        tokens, pos, heads, predicates = [], [], [], []
        for lineno, cols in rows:
            tokens.append(cols[0])
            pos.append(cols[1])
            try:
                h = int(cols[2])
            except ValueError:
                raise CorpusFormatError(f"line {lineno}: bad head index {cols[2]!r}")
            if not 0 <= h < t:
                raise CorpusFormatError(
                    f"line {lineno}: head index {h} outside [0, {t})"
                )
            heads.append(h)
            if cols[3] not in (PRED_MARK, NO_PRED_MARK):
                raise CorpusFormatError(
                    f"line {lineno}: predicate marker must be Y or -, got {cols[3]!r}"
                )
            predicates.append(cols[3] == PRED_MARK)
        pred_idx = [i for i, p in enumerate(predicates) if p]
        n_bio = width - 4
        if n_bio < len(pred_idx):
            raise CorpusFormatError(
                f"line {first_line}: {len(pred_idx)} predicates but only "
                f"{n_bio} BIO columns"
            )
        frames: dict[int, tuple[str, ...]] = {}
        for k, pidx in enumerate(pred_idx):
            col = [cols[4 + k] for _, cols in rows]
            for lineno, tag in zip((ln for ln, _ in rows), col):
                _split_tag(tag)  # syntax check, raises with no line info
            if not is_valid_bio(col):
                if repair:
                    fixed, n = repair_bio(col)
                    total_repairs += n
                    frames[pidx] = fixed
                    continue
                raise CorpusFormatError(
                    f"line {first_line}: ill-formed BIO in frame column {k}"
                )
            frames[pidx] = tuple(col)
        # extra columns are tolerated only when entirely O
        for k in range(len(pred_idx), n_bio):
            col = [cols[4 + k] for _, cols in rows]
            if any(tag != OUTSIDE for tag in col):
                raise CorpusFormatError(
                    f"line {first_line}: BIO column {k} has no matching predicate"
                )
        if not repair:
            roots = [i for i, h in enumerate(heads) if h == i]
            if len(roots) != 1:
                raise CorpusFormatError(
                    f"line {first_line}: expected one self-loop root, found {len(roots)}"
                )
        sentences.append(
            AnnotatedSentence(
                tuple(tokens), tuple(pos), tuple(heads), tuple(predicates), frames
            )
        )
        rows.clear()

    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip():
                flush()
                continue
            cols = line.split()
            if len(cols) < 4:
                raise CorpusFormatError(f"line {lineno}: expected >= 4 columns")
            rows.append((lineno, cols))
    flush()
    return sentences, total_repairs


def write_conll(path, sentences: Iterable[AnnotatedSentence]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sent in sentences:
            preds = sent.predicate_indices
            for t in range(len(sent)):
                cols = [
                    sent.tokens[t],
                    sent.pos[t],
                    str(sent.heads[t]),
                    PRED_MARK if sent.predicates[t] else NO_PRED_MARK,
                ]
                cols.extend(sent.frames[p][t] for p in preds)
                fh.write("\t".join(cols) + "\n")
            fh.write("\n")


def read_heads_file(path) -> list[list[int]]:
    """External parses: one sentence per line, space-separated head indices."""
    out: list[list[int]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                out.append([int(x) for x in line.split()])
            except ValueError:
                raise CorpusFormatError(f"line {lineno}: bad head index")
    return out


def write_heads_file(path, heads: Iterable[Sequence[int]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for hs in heads:
            fh.write(" ".join(str(h) for h in hs) + "\n")


# ---------------------------------------------------------------------------
# Label spaces


def build_role_space(corpus: Sequence[AnnotatedSentence]) -> LabelSpace:
    """All BIO tags observed in frames; O is always present at index 0."""
    seen = set()
    for sent in corpus:
        for tags in sent.frames.values():
            seen.update(tags)
    seen.discard(OUTSIDE)
    return LabelSpace([OUTSIDE] + sorted(seen))


def build_joint_pos_pred_space(corpus: Sequence[AnnotatedSentence]) -> LabelSpace:
    """POS tags plus a TAG:predicate twin for each tag seen on a predicate."""
    if not corpus:
        raise EstimationError("cannot build a label space from an empty corpus")
    plain = set()
    composed = set()
    for sent in corpus:
        for tag, is_pred in zip(sent.pos, sent.predicates):
            plain.add(tag)
            if is_pred:
                composed.add(tag + PREDICATE_SUFFIX)
    return LabelSpace(sorted(plain) + sorted(composed))


def joint_label(pos: str, is_predicate: bool) -> str:
    return pos + PREDICATE_SUFFIX if is_predicate else pos


# ---------------------------------------------------------------------------
# Transition table


def valid_successor(prev: str, nxt: str) -> bool:
    """BIO structure: I-X may only follow B-X or I-X."""
    nprefix, nlabel = _split_tag(nxt)
    if nprefix != "I":
        return True
    pprefix, plabel = _split_tag(prev)
    return pprefix in ("B", "I") and plabel == nlabel


def valid_start(tag: str) -> bool:
    return _split_tag(tag)[0] != "I"


@dataclass
class TransitionTable:
    """Log-prob bigram model over BIO tags with structural -inf entries.

    `matrix[i, j]` is log P(next=j | prev=i); structurally invalid moves are
    -inf regardless of counts, and each row's valid entries sum to 1 after
    exponentiation. `start` and `end` are log-prob vectors over which tag
    opens and closes a sequence.
    """

    labels: LabelSpace
    matrix: np.ndarray
    start: np.ndarray
    end: np.ndarray

    def check(self) -> None:
        n = len(self.labels)
        assert self.matrix.shape == (n, n)
        for i, prev in enumerate(self.labels):
            row = np.exp(self.matrix[i])
            assert abs(row.sum() - 1.0) <= 1e-9
            for j, nxt in enumerate(self.labels):
                if not valid_successor(prev, nxt):
                    assert self.matrix[i, j] == -np.inf


def estimate_transitions(
    corpus: Sequence[AnnotatedSentence], role_space: LabelSpace
) -> TransitionTable:
    """Relative-frequency bigrams with add-one smoothing over valid moves.

    Smoothing keeps unseen-but-structurally-valid transitions reachable at
    decode time; invalid transitions stay -inf no matter what the counts say.
    """
    n = len(role_space)
    bigram = np.zeros((n, n))
    start_count = np.zeros(n)
    end_count = np.zeros(n)
    n_frames = 0
    for sent in corpus:
        for tags in sent.frames.values():
            n_frames += 1
            idx = [role_space.of(t) for t in tags]
            start_count[idx[0]] += 1
            end_count[idx[-1]] += 1
            for a, b in zip(idx, idx[1:]):
                bigram[a, b] += 1
    if n_frames == 0:
        raise EstimationError("no frames in corpus; cannot estimate transitions")

    matrix = np.full((n, n), -np.inf)
    for i, prev in enumerate(role_space):
        valid = [j for j, nxt in enumerate(role_space) if valid_successor(prev, nxt)]
        total = bigram[i, valid].sum() + len(valid)
        for j in valid:
            matrix[i, j] = np.log((bigram[i, j] + 1.0) / total)

    start = np.full(n, -np.inf)
    valid_starts = [j for j, tag in enumerate(role_space) if valid_start(tag)]
    total = start_count[valid_starts].sum() + len(valid_starts)
    for j in valid_starts:
        start[j] = np.log((start_count[j] + 1.0) / total)

    # any tag may end a sequence
    end = np.log((end_count + 1.0) / (end_count.sum() + n))
    return TransitionTable(role_space, matrix, start, end)


# ---------------------------------------------------------------------------
# Small shared statistics helpers


def vocabulary(corpus: Sequence[AnnotatedSentence]) -> list[str]:
    return sorted({w for sent in corpus for w in sent.tokens})


def pos_counts(corpus: Sequence[AnnotatedSentence]) -> Counter:
    c: Counter = Counter()
    for sent in corpus:
        c.update(sent.pos)
    return c
