"""Task heads: joint POS/predicate classifier, bilinear SRL scorer, losses.

The POS classifier reads representations from an inner encoder layer and
predicts into the joint space where predicate-bearing tags carry a
":predicate" twin, so one softmax does both tagging and predicate
detection. The SRL scorer projects the final layer into predicate and
role representations and scores every (predicate, token, label) triple
with a rank-3 bilinear operator.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .corpus import PREDICATE_SUFFIX, LabelSpace, joint_label
from .errors import ContractError
from .numerics import Parameter, Tape, Tensor


class PredicateMode(enum.Enum):
    """Whose predicates condition the role scorer."""

    GOLD_TRAIN = "gold-train"
    PREDICTED_TEST = "predicted-test"


@dataclass
class PosPredHead:
    weight: Parameter  # [d_model, |joint|]
    bias: Parameter  # [|joint|]
    labels: LabelSpace

    @classmethod
    def build(cls, d_model: int, labels: LabelSpace) -> "PosPredHead":
        # zero init: the classifier starts uniform and is symmetric-safe
        # because it is a single linear map over non-degenerate inputs
        return cls(
            Parameter("pos.w", np.zeros((d_model, len(labels)))),
            Parameter("pos.b", np.zeros(len(labels))),
            labels,
        )

    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias]


def pos_pred_logits(tape: Tape, s_pos_layer: Tensor, head: PosPredHead) -> Tensor:
    """Per-token logits over the joint POS/predicate space."""
    return tape.add_row(tape.matmul(s_pos_layer, head.weight.value), head.bias.value)


def pos_pred_loss(tape: Tape, logits: Tensor, sentence, head: PosPredHead) -> Tensor:
    """Token-averaged cross-entropy against the joint gold labels."""
    gold = [
        head.labels.of(joint_label(tag, is_pred))
        for tag, is_pred in zip(sentence.pos, sentence.predicates)
    ]
    log_probs = tape.log_softmax_rows(logits)
    return tape.neg(tape.mean_all(tape.take_per_row(log_probs, gold)))


def decode_pos_pred(logits, labels: LabelSpace) -> tuple[list[str], list[bool]]:
    """Argmax decode into plain POS tags plus predicate flags."""
    data = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    tags, flags = [], []
    for row in data:
        name = labels.name(int(np.argmax(row)))
        is_pred = name.endswith(PREDICATE_SUFFIX)
        tags.append(name[: -len(PREDICATE_SUFFIX)] if is_pred else name)
        flags.append(is_pred)
    return tags, flags


def select_predicates(logits, mode: PredicateMode, gold_flags, labels: LabelSpace):
    """Predicate token indices: the gold set in training, argmax at test."""
    if mode is PredicateMode.GOLD_TRAIN:
        return [i for i, flag in enumerate(gold_flags) if flag]
    _, flags = decode_pos_pred(logits, labels)
    return [i for i, flag in enumerate(flags) if flag]


@dataclass
class SrlScorer:
    w_pred: Parameter  # [d_model, d_r]
    w_role: Parameter  # [d_model, d_r]
    u: Parameter  # [d_r, |roles|, d_r]
    labels: LabelSpace

    @classmethod
    def build(
        cls, d_model: int, d_r: int, labels: LabelSpace, rng: np.random.Generator
    ) -> "SrlScorer":
        scale = 1.0 / np.sqrt(d_model)
        return cls(
            Parameter("srl.w_pred", rng.normal(0, scale, (d_model, d_r))),
            Parameter("srl.w_role", rng.normal(0, scale, (d_model, d_r))),
            # zero bilinear operator: role distributions start uniform
            Parameter("srl.u", np.zeros((d_r, len(labels), d_r))),
            labels,
        )

    def parameters(self) -> list[Parameter]:
        return [self.w_pred, self.w_role, self.u]


def srl_scores(
    tape: Tape, s_final: Tensor, predicates, scorer: SrlScorer
) -> dict[int, Tensor]:
    """Bilinear role scores [T, |roles|] for each predicate token index."""
    t_len = s_final.shape[0]
    for f in predicates:
        if not 0 <= f < t_len:
            raise ContractError(f"predicate index {f} outside [0, {t_len})")
    if not predicates:
        return {}
    pred_proj = tape.matmul(s_final, scorer.w_pred.value)
    role_proj = tape.matmul(s_final, scorer.w_role.value)
    out = {}
    for f in predicates:
        s_pred = tape.pick_row(pred_proj, f)
        out[f] = tape.bilinear(s_pred, scorer.u.value, role_proj)
    return out


def srl_loss(
    tape: Tape, scores: dict[int, Tensor], frames, labels: LabelSpace
) -> Tensor:
    """Cross-entropy per (predicate, token), averaged per frame then overall.

    The two-stage mean keeps the loss magnitude independent of how many
    predicates a sentence happens to contain.
    """
    if not scores:
        return Tensor(0.0)
    per_frame = []
    for f in sorted(scores):
        gold = [labels.of(tag) for tag in frames[f]]
        log_probs = tape.log_softmax_rows(scores[f])
        per_frame.append(tape.neg(tape.mean_all(tape.take_per_row(log_probs, gold))))
    total = per_frame[0]
    for term in per_frame[1:]:
        total = tape.add(total, term)
    return tape.scale(total, 1.0 / len(per_frame))


@dataclass
class LossBundle:
    """The three multi-task components and their plain (unweighted) sum."""

    srl: Tensor
    parse: Tensor
    pos_pred: Tensor
    total: Tensor

    def values(self) -> dict[str, float]:
        return {
            "srl": self.srl.item(),
            "parse": self.parse.item(),
            "pos_pred": self.pos_pred.item(),
            "total": self.total.item(),
        }


def total_loss(tape: Tape, srl: Tensor, parse: Tensor, pos_pred: Tensor) -> LossBundle:
    return LossBundle(srl, parse, pos_pred, tape.add(tape.add(srl, parse), pos_pred))
