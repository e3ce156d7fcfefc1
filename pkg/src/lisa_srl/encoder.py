"""Multi-head self-attention encoder with one syntactically-supervised head.

Each layer runs H scaled dot-product attention heads whose concatenation
spans the model width (H * d_v == d_model), then applies a width-3
residual convolution as the feed-forward sublayer. One designated head at
one designated layer carries the parse: its attention row for token t is
trained to put its mass on t's syntactic head (root attends to itself),
and at that head an externally supplied parse can be injected as a
one-hot adjacency matrix in place of the predicted distribution.
Injection changes nothing anywhere else, which is what makes gold-parse
oracles possible without retraining.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .embed import ConvLayer, conv3, init_conv_stack
from .errors import ConfigError, InjectionError
from .numerics import Parameter, Tape, Tensor


class ParseSource(enum.Enum):
    """Where the parse head's consumed attention comes from at run time."""

    SELF = "self"
    EXTERNAL = "external"
    GOLD = "gold"


@dataclass(frozen=True)
class EncoderConfig:
    n_layers: int = 2
    n_heads: int = 4
    d_k: int = 16
    d_q: int = 16
    d_v: int = 16
    d_model: int = 64
    parse_layer: int = 2  # 1-based layer whose attention carries the parse
    pos_layer: int = 1  # 1-based layer feeding the POS/predicate classifier
    parse_head: int = 0  # head index within the parse layer

    def __post_init__(self) -> None:
        if self.n_layers < 1 or self.n_heads < 1:
            raise ConfigError("need at least one layer and one head")
        if not 1 <= self.parse_layer <= self.n_layers:
            raise ConfigError(
                f"parse_layer {self.parse_layer} outside [1, {self.n_layers}]"
            )
        if not 1 <= self.pos_layer <= self.n_layers:
            raise ConfigError(
                f"pos_layer {self.pos_layer} outside [1, {self.n_layers}]"
            )
        if not 0 <= self.parse_head < self.n_heads:
            raise ConfigError(
                f"parse_head {self.parse_head} outside [0, {self.n_heads})"
            )
        if self.d_q != self.d_k:
            raise ConfigError(
                f"query/key widths must agree for dot products: {self.d_q} != {self.d_k}"
            )
        for name in ("d_k", "d_v", "d_model"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.n_heads * self.d_v != self.d_model:
            raise ConfigError(
                "concatenated head width must equal the model width: "
                f"{self.n_heads} * {self.d_v} != {self.d_model}"
            )


@dataclass
class HeadParams:
    wq: Parameter
    wk: Parameter
    wv: Parameter

    def parameters(self) -> list[Parameter]:
        return [self.wq, self.wk, self.wv]


@dataclass
class LayerParams:
    heads: list[HeadParams]
    conv: ConvLayer  # post-concat convolutional sublayer

    def parameters(self) -> list[Parameter]:
        out = [p for h in self.heads for p in h.parameters()]
        out.extend(self.conv.parameters())
        return out


@dataclass
class EncoderTrace:
    """Per-run record of attention activity for supervision and extraction.

    `attentions` holds the matrices actually consumed by value attention
    (so the parse head's entry is the injected adjacency when injecting);
    `parse_logits` are always the model's own pre-softmax parse scores.
    """

    attentions: dict[tuple[int, int], Tensor] = field(default_factory=dict)
    layer_outputs: dict[int, Tensor] = field(default_factory=dict)
    parse_logits: Tensor | None = None
    parse_attention: Tensor | None = None

    def consumed_parse_attention(self, config: EncoderConfig) -> Tensor:
        return self.attentions[(config.parse_layer, config.parse_head)]


class Encoder:
    def __init__(self, config: EncoderConfig, layers: list[LayerParams]):
        self.config = config
        self.layers = layers

    @classmethod
    def build(cls, config: EncoderConfig, rng: np.random.Generator) -> "Encoder":
        layers = []
        for j in range(1, config.n_layers + 1):
            heads = []
            for h in range(config.n_heads):
                scale = 1.0 / np.sqrt(config.d_model)
                name = f"enc.l{j}.h{h}"
                heads.append(
                    HeadParams(
                        Parameter(f"{name}.wq", rng.normal(0, scale, (config.d_model, config.d_q))),
                        Parameter(f"{name}.wk", rng.normal(0, scale, (config.d_model, config.d_k))),
                        Parameter(f"{name}.wv", rng.normal(0, scale, (config.d_model, config.d_v))),
                    )
                )
            (conv,) = init_conv_stack(1, config.d_model, f"enc.l{j}")
            layers.append(LayerParams(heads, conv))
        return cls(config, layers)

    def parameters(self) -> list[Parameter]:
        return [p for layer in self.layers for p in layer.parameters()]

    def encode(
        self,
        tape: Tape,
        x: Tensor,
        injected_heads=None,
    ) -> tuple[Tensor, EncoderTrace]:
        """Run all layers; returns final representations and the trace."""
        if x.ndim != 2 or x.shape[1] != self.config.d_model:
            raise ConfigError(
                f"encoder expects [T, {self.config.d_model}] input, got {x.shape}"
            )
        trace = EncoderTrace()
        for j, layer in enumerate(self.layers, start=1):
            x = encode_layer(tape, x, layer, self.config, j, injected_heads, trace)
            trace.layer_outputs[j] = x
        return x, trace


def attention_weights(
    tape: Tape, s_prev: Tensor, head: HeadParams, d_k: int
) -> tuple[Tensor, Tensor]:
    """Row-stochastic attention and its pre-softmax logits for one head."""
    q = tape.matmul(s_prev, head.wq.value)
    k = tape.matmul(s_prev, head.wk.value)
    logits = tape.scale(tape.matmul(q, tape.transpose(k)), d_k ** -0.5)
    return tape.softmax_rows(logits), logits


def attend(tape: Tape, attention: Tensor, values: Tensor) -> Tensor:
    """Row t of the output is the attention-weighted sum of value rows."""
    return tape.matmul(attention, values)


def encode_layer(
    tape: Tape,
    x: Tensor,
    layer: LayerParams,
    config: EncoderConfig,
    layer_index: int,
    injected_heads,
    trace: EncoderTrace,
) -> Tensor:
    """One layer: H attention heads, concat, projection, residual, conv."""
    outputs = []
    for h, head in enumerate(layer.heads):
        attention, logits = attention_weights(tape, x, head, config.d_k)
        is_parse = layer_index == config.parse_layer and h == config.parse_head
        if is_parse:
            trace.parse_logits = logits
            trace.parse_attention = attention
            if injected_heads is not None:
                attention = Tensor(parse_adjacency(injected_heads, x.shape[0]))
        trace.attentions[(layer_index, h)] = attention
        values = tape.matmul(x, head.wv.value)
        outputs.append(attend(tape, attention, values))
    m = tape.concat_cols(outputs)
    return tape.add(m, conv3(tape, tape.relu(m), layer.conv))


def parse_adjacency(heads, t_len: int) -> np.ndarray:
    """One-hot matrix with row t hot at heads[t]; the root is a self-loop."""
    if len(heads) != t_len:
        raise InjectionError(f"{len(heads)} heads for {t_len} tokens")
    adj = np.zeros((t_len, t_len))
    for t, h in enumerate(heads):
        if not 0 <= h < t_len:
            raise InjectionError(f"head index {h} outside [0, {t_len})")
        adj[t, h] = 1.0
    return adj


def extract_parse(attention) -> list[int]:
    """Per-token head = argmax attention weight; ties go to the lowest index."""
    data = attention.data if isinstance(attention, Tensor) else np.asarray(attention)
    return [int(i) for i in np.argmax(data, axis=1)]


def parse_loss(tape: Tape, parse_logits: Tensor, gold_heads) -> Tensor:
    """Mean over tokens of -log of the attention mass on the gold head.

    Always computed on the model's own pre-injection logits, so the head
    keeps receiving parse supervision even while downstream layers consume
    an injected gold or external parse.
    """
    if len(gold_heads) != parse_logits.shape[0]:
        raise InjectionError(
            f"{len(gold_heads)} gold heads for {parse_logits.shape[0]} tokens"
        )
    log_probs = tape.log_softmax_rows(parse_logits)
    picked = tape.take_per_row(log_probs, list(gold_heads))
    return tape.neg(tape.mean_all(picked))
