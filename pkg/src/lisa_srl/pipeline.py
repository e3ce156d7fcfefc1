"""End-to-end runs: training with best-dev checkpointing, prediction,
evaluation, and synthetic corpus generation. Everything here is
deterministic under a fixed seed: data order, parameter updates, log
lines and output files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, require_paths
from .corpus import (
    AnnotatedSentence,
    TransitionTable,
    build_joint_pos_pred_space,
    build_role_space,
    estimate_transitions,
    read_conll,
    read_conll_counted,
    read_heads_file,
    vocabulary,
    write_conll,
    write_heads_file,
)
from .embed import (
    ContextualStore,
    gen_contextual_layers,
    read_contextual,
    read_vec_file,
    write_contextual,
    write_vec_file,
)
from .encoder import ParseSource
from .errors import AlignmentError, ConfigError, NonFiniteError
from .evaluation import MetricsReport, evaluate_corpus, export_metrics, srl_prf
from .model import EMBED_CONTEXTUAL, EMBED_STATIC, LisaModel
from .synth import GrammarParams, full_vocabulary, gen_splits, pretrained_vectors
from .numerics import Tape

LOG_FLOAT = "%.17g"


# ---------------------------------------------------------------------------
# Split loading


@dataclass
class SplitData:
    """One corpus file plus its optional sidecar inputs."""

    corpus: list[AnnotatedSentence]
    heads: list[list[int]] | None = None
    ctx: ContextualStore | None = None

    def forward_kwargs(self, i: int) -> dict:
        kw: dict = {}
        if self.heads is not None:
            kw["external_heads"] = self.heads[i]
        if self.ctx is not None:
            kw["ctx_layers"] = self.ctx.get(str(i))
        return kw


def _check_heads_alignment(
    corpus: list[AnnotatedSentence], heads: list[list[int]], path: str
) -> None:
    if len(heads) != len(corpus):
        raise AlignmentError(
            f"{path}: {len(heads)} head sequences for {len(corpus)} sentences"
        )
    for i, (sent, h) in enumerate(zip(corpus, heads)):
        if len(h) != len(sent):
            raise AlignmentError(
                f"{path}: sentence {i} has {len(sent)} tokens but {len(h)} heads"
            )


def load_split(config: RunConfig, prefix: str) -> SplitData:
    """Read `<prefix>_path` and whichever sidecars the config calls for."""
    corpus = read_conll(getattr(config, f"{prefix}_path"))
    data = SplitData(corpus)
    if config.parse_source == ParseSource.EXTERNAL.value:
        heads_path = getattr(config, f"{prefix}_heads_path")
        require_paths(config, f"{prefix}_heads_path")
        data.heads = read_heads_file(heads_path)
        _check_heads_alignment(corpus, data.heads, heads_path)
    if config.embedding == EMBED_CONTEXTUAL:
        require_paths(config, f"{prefix}_ctxl_path")
        data.ctx = read_contextual(getattr(config, f"{prefix}_ctxl_path"))
    return data


# ---------------------------------------------------------------------------
# Training


@dataclass
class TrainResult:
    model: LisaModel
    transitions: TransitionTable
    log_lines: list[str]
    best_epoch: int
    best_dev_f1: float
    steps: int


def _predict_corpus(
    model: LisaModel,
    data: SplitData,
    transitions: TransitionTable,
    source: ParseSource,
    harden: bool | None = None,
) -> list[AnnotatedSentence]:
    out = []
    for i, sent in enumerate(data.corpus):
        pred = model.predict_sentence(
            sent, transitions, source=source, harden=harden,
            **data.forward_kwargs(i)
        )
        out.append(pred.sentence)
    return out


def train(config: RunConfig, emit: Callable[[str], None] | None = None) -> TrainResult:
    """SGD over single-sentence batches; keeps the best-dev checkpoint.

    A non-finite loss aborts the run; whatever checkpoint was best so far
    stays on disk untouched.
    """
    config.validate()
    require_paths(config, "train_path", "dev_path")
    if config.embedding == EMBED_STATIC:
        require_paths(config, "pretrained_path")

    train_data = load_split(config, "train")
    dev_data = load_split(config, "dev")
    joint = build_joint_pos_pred_space(train_data.corpus)
    roles = build_role_space(train_data.corpus)
    transitions = estimate_transitions(train_data.corpus, roles)
    pretrained = (
        read_vec_file(config.pretrained_path)
        if config.embedding == EMBED_STATIC
        else None
    )
    model = LisaModel.build(
        config.model_config(),
        joint,
        roles,
        vocabulary(train_data.corpus),
        pretrained,
        config.seed,
    )

    source = config.source()
    rng = np.random.default_rng(config.seed)
    n = len(train_data.corpus)
    logs: list[str] = []
    best_f1, best_epoch, steps = -1.0, -1, 0

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        sums = {"total": 0.0, "srl": 0.0, "parse": 0.0, "pos_pred": 0.0}
        for i in order:
            sent_source = source
            if source is ParseSource.GOLD and config.gold_mix < 1.0:
                # mixed injection: downstream layers see both the oracle
                # adjacency and the model's own soft parse attention
                if rng.random() >= config.gold_mix:
                    sent_source = ParseSource.SELF
            tape = Tape()
            bundle = model.loss(
                tape,
                train_data.corpus[i],
                source=sent_source,
                **train_data.forward_kwargs(int(i)),
            )
            total = bundle.total.item()
            if not np.isfinite(total):
                raise NonFiniteError(
                    f"loss diverged at epoch {epoch}, sentence {int(i)}"
                )
            model.reset_gradients()
            tape.backward(bundle.total)
            scale = config.lr
            if config.clip_norm > 0:
                norm = np.sqrt(
                    sum(float((p.gradient ** 2).sum()) for p in model.parameters())
                )
                if norm > config.clip_norm:
                    scale *= config.clip_norm / norm
            for p in model.parameters():
                p.value.data -= scale * p.gradient
            steps += 1
            for key, value in bundle.values().items():
                sums[key] += value

        dev_pred = _predict_corpus(
            model, dev_data, transitions, source, config.harden_self_parse
        )
        dev_f1 = srl_prf(dev_data.corpus, dev_pred)[2]
        means = {k: v / n for k, v in sums.items()}
        line = (
            f"epoch={epoch}"
            f" loss={LOG_FLOAT % means['total']}"
            f" srl={LOG_FLOAT % means['srl']}"
            f" parse={LOG_FLOAT % means['parse']}"
            f" pos={LOG_FLOAT % means['pos_pred']}"
            f" dev_f1={LOG_FLOAT % dev_f1}"
        )
        logs.append(line)
        if emit:
            emit(line)
        if dev_f1 > best_f1:
            best_f1, best_epoch = dev_f1, epoch
            if config.checkpoint_out:
                save_checkpoint(config.checkpoint_out, model, config, steps, transitions)
        if 0.0 <= config.early_stop_f1 <= dev_f1:
            break

    return TrainResult(model, transitions, logs, best_epoch, best_f1, steps)


# ---------------------------------------------------------------------------
# Prediction and evaluation


def predict(config: RunConfig) -> list[AnnotatedSentence]:
    """Decode the test corpus with a saved checkpoint; source may differ
    from the one used in training, with parameters untouched."""
    require_paths(config, "checkpoint_in", "test_path")
    if not config.predictions_path:
        raise ConfigError("predictions_path is required for predict")
    loaded = load_checkpoint(config.checkpoint_in)
    # the checkpoint decides the embedding path; the command decides the source
    config.embedding = loaded.config.embedding
    data = load_split(config, "test")
    predictions = _predict_corpus(
        loaded.model, data, loaded.transitions, config.source(),
        config.harden_self_parse,
    )
    write_conll(config.predictions_path, predictions)
    return predictions


def evaluate(config: RunConfig) -> tuple[MetricsReport, list[str]]:
    """Score a prediction file against gold; returns the report and the
    fixed-format summary lines."""
    require_paths(config, "test_path", "predictions_path")
    gold = read_conll(config.test_path)
    predicted, repairs = read_conll_counted(config.predictions_path, repair=True)
    report = evaluate_corpus(gold, predicted, bio_repairs=repairs)
    if config.metrics_path:
        export_metrics(report, config.metrics_path)
    lines = [
        "srl_precision=%s srl_recall=%s srl_f1=%s"
        % tuple(LOG_FLOAT % v for v in report.srl),
        "predicate_precision=%s predicate_recall=%s predicate_f1=%s"
        % tuple(LOG_FLOAT % v for v in report.predicate),
        f"uas={LOG_FLOAT % report.uas}",
    ]
    for b in report.buckets:
        lines.append(
            f"bucket_{b.label()} f1={LOG_FLOAT % b.f1} support={b.support}"
        )
    lines.append(f"bio_repairs={report.bio_repairs}")
    return report, lines


# ---------------------------------------------------------------------------
# Synthetic data generation


@dataclass
class GenSynthParams:
    out_dir: str
    n_train: int = 200
    n_dev: int = 50
    n_test: int = 50
    seed: int = 0
    dim: int = 64
    heads_error_rate: float | None = None
    with_contextual: bool = False
    n_ctx_layers: int = 3
    grammar: GrammarParams = GrammarParams()


def _corrupt_heads(
    corpus: list[AnnotatedSentence], rate: float, rng: np.random.Generator
) -> list[list[int]]:
    """Copy gold heads, rewriting a `rate` fraction of tokens to wrong heads."""
    out = []
    for sent in corpus:
        heads = list(sent.heads)
        t = len(heads)
        for i in range(t):
            if t > 1 and rng.random() < rate:
                wrong = [h for h in range(t) if h != heads[i]]
                heads[i] = int(wrong[int(rng.integers(len(wrong)))])
        out.append(heads)
    return out


def gen_synth(params: GenSynthParams) -> list[str]:
    """Write the split corpora plus pretrained vectors and optional
    sidecars; returns the written paths in a fixed order."""
    out_dir = Path(params.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    splits = gen_splits(params.n_train, params.n_dev, params.n_test, params.seed,
                        params.grammar)
    written: list[str] = []

    for name, corpus in splits.items():
        path = out_dir / f"{name}.conll"
        write_conll(path, corpus)
        written.append(str(path))

    vec_path = out_dir / "pretrained.vec"
    write_vec_file(vec_path, pretrained_vectors(params.grammar, params.dim, params.seed))
    written.append(str(vec_path))

    if params.heads_error_rate is not None:
        rng = np.random.default_rng([params.seed, 104729])
        for name, corpus in splits.items():
            path = out_dir / f"{name}.heads"
            write_heads_file(path, _corrupt_heads(corpus, params.heads_error_rate, rng))
            written.append(str(path))

    if params.with_contextual:
        for name, corpus in splits.items():
            store = gen_contextual_layers(
                corpus, params.n_ctx_layers, params.dim, params.seed
            )
            path = out_dir / f"{name}.ctxl"
            write_contextual(path, store)
            written.append(str(path))

    return written
