"""Trainable contextual token encoder with GED and QE heads.

The reference encoder is a small window-mixing network: learned token
embeddings pass through ``depth`` layers, each combining the token vector
with a learned-weighted average over the (i-1, i, i+1) window followed by
tanh. It is deliberately tiny; anything providing ``encode()`` with the
same signature can stand in for it (e.g. an adapter over a large
pretrained model).

All forward passes are deterministic for a fixed checkpoint, and the
module exposes the intermediate state needed for exact analytic gradients.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, ModelError

UNK_TOKEN = "<unk>"

CHECKPOINT_FORMAT = "gecval-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class EncoderConfig:
    vocab: dict  # token -> id, must contain UNK_TOKEN
    dim: int = 64
    depth: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be at least 2")
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if UNK_TOKEN not in self.vocab:
            raise ValueError(f"vocab must contain the {UNK_TOKEN!r} token")
        ids = sorted(self.vocab.values())
        if ids != list(range(len(self.vocab))):
            raise ValueError("vocab ids must be exactly 0..V-1")

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    @property
    def n_params(self) -> int:
        return self.vocab_size * self.dim + 2 * self.depth


def build_vocab(sentences) -> dict:
    """Sorted-token vocabulary with the UNK token at id 0."""
    tokens = set()
    for sent in sentences:
        tokens.update(sent.tokens if hasattr(sent, "tokens") else sent)
    vocab = {UNK_TOKEN: 0}
    for tok in sorted(tokens):
        if tok not in vocab:
            vocab[tok] = len(vocab)
    return vocab


@dataclass
class GedHead:
    weight: np.ndarray  # (dim, n_labels)
    bias: np.ndarray  # (n_labels,)
    taxonomy: str


@dataclass
class QeHead:
    weight: np.ndarray  # (dim,)
    bias: float


@dataclass
class EncoderCheckpoint:
    """Config plus a flat parameter vector and optional heads.

    Training mutates ``params`` in place (single writer); inference only
    reads, so a checkpoint is safe to share across threads once training
    is done.
    """

    config: EncoderConfig
    params: np.ndarray
    ged_head: GedHead | None = None
    qe_head: QeHead | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=np.float64)
        if self.params.shape != (self.config.n_params,):
            raise ModelError(
                f"parameter vector has shape {self.params.shape}, "
                f"expected ({self.config.n_params},)"
            )
        if not np.all(np.isfinite(self.params)):
            raise ModelError("parameter vector contains non-finite values")

    # -- views ------------------------------------------------------------
    @property
    def embeddings(self) -> np.ndarray:
        v, d = self.config.vocab_size, self.config.dim
        return self.params[: v * d].reshape(v, d)

    @property
    def mixing(self) -> np.ndarray:
        return self.params[self.config.vocab_size * self.config.dim :]

    def clone(self) -> "EncoderCheckpoint":
        ged = None
        if self.ged_head is not None:
            ged = GedHead(
                weight=self.ged_head.weight.copy(),
                bias=self.ged_head.bias.copy(),
                taxonomy=self.ged_head.taxonomy,
            )
        qe = None
        if self.qe_head is not None:
            qe = QeHead(weight=self.qe_head.weight.copy(), bias=float(self.qe_head.bias))
        return EncoderCheckpoint(
            config=self.config,
            params=self.params.copy(),
            ged_head=ged,
            qe_head=qe,
            provenance=dict(self.provenance),
        )


@dataclass(frozen=True)
class TokenEmbeddings:
    """Per-token vectors plus their arithmetic mean."""

    vectors: np.ndarray  # (N, dim)
    pooled: np.ndarray  # (dim,)


def new_checkpoint(config: EncoderConfig) -> EncoderCheckpoint:
    """Seeded initialization: uniform(-1/sqrt(dim), 1/sqrt(dim))."""
    rng = np.random.default_rng(config.seed)
    scale = 1.0 / np.sqrt(config.dim)
    params = rng.uniform(-scale, scale, size=config.n_params)
    return EncoderCheckpoint(config=config, params=params)


def with_ged_head(ckpt: EncoderCheckpoint, taxonomy) -> EncoderCheckpoint:
    """Attach a zero-initialized GED classification head."""
    out = ckpt.clone()
    out.ged_head = GedHead(
        weight=np.zeros((ckpt.config.dim, len(taxonomy))),
        bias=np.zeros(len(taxonomy)),
        taxonomy=taxonomy.name,
    )
    return out


def with_qe_head(ckpt: EncoderCheckpoint) -> EncoderCheckpoint:
    """Attach a zero-initialized scalar quality head."""
    out = ckpt.clone()
    out.qe_head = QeHead(weight=np.zeros(ckpt.config.dim), bias=0.0)
    return out


def tokens_to_ids(config: EncoderConfig, sentence) -> list[int]:
    unk = config.vocab[UNK_TOKEN]
    toks = sentence.tokens if hasattr(sentence, "tokens") else sentence
    return [config.vocab.get(t, unk) for t in toks]


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------

@dataclass
class ForwardState:
    """Intermediate activations kept for the backward pass."""

    ids: list[int]
    layers: list[np.ndarray]  # depth+1 arrays of shape (N, dim)
    window_means: list[np.ndarray]  # depth arrays of shape (N, dim)
    pooled: np.ndarray  # (dim,)


def _window_mean(h: np.ndarray) -> np.ndarray:
    n = h.shape[0]
    s = h.copy()
    if n > 1:
        s[1:] += h[:-1]
        s[:-1] += h[1:]
    counts = np.full(n, 3.0)
    counts[0] -= 1.0
    counts[-1] -= 1.0
    return s / counts[:, None]


def _window_mean_backward(g: np.ndarray) -> np.ndarray:
    n = g.shape[0]
    counts = np.full(n, 3.0)
    counts[0] -= 1.0
    counts[-1] -= 1.0
    scaled = g / counts[:, None]
    out = scaled.copy()
    if n > 1:
        out[1:] += scaled[:-1]
        out[:-1] += scaled[1:]
    return out


def forward_states(ckpt: EncoderCheckpoint, sentence) -> ForwardState:
    ids = tokens_to_ids(ckpt.config, sentence)
    d = ckpt.config.dim
    if not ids:
        return ForwardState(ids=[], layers=[np.zeros((0, d))], window_means=[],
                            pooled=np.zeros(d))
    h = ckpt.embeddings[ids]
    layers = [h]
    means = []
    mixing = ckpt.mixing
    for l in range(ckpt.config.depth):
        u, v = mixing[2 * l], mixing[2 * l + 1]
        nm = _window_mean(layers[-1])
        means.append(nm)
        layers.append(np.tanh(u * layers[-1] + v * nm))
    return ForwardState(ids=ids, layers=layers, window_means=means,
                        pooled=layers[-1].mean(axis=0))


def backprop_tokens(ckpt: EncoderCheckpoint, state: ForwardState,
                    d_tokens: np.ndarray | None, d_pooled: np.ndarray | None,
                    out: np.ndarray) -> None:
    """Accumulate d(loss)/d(params) into ``out`` for one sentence.

    ``d_tokens`` is the gradient w.r.t. final token vectors (N, dim) and
    ``d_pooled`` w.r.t. the pooled vector; either may be None.
    """
    n = len(state.ids)
    if n == 0:
        return
    d = ckpt.config.dim
    dh = np.zeros((n, d)) if d_tokens is None else d_tokens.copy()
    if d_pooled is not None:
        dh += d_pooled[None, :] / n
    v_size = ckpt.config.vocab_size
    mixing = ckpt.mixing
    d_mix = out[v_size * d :]
    for l in range(ckpt.config.depth - 1, -1, -1):
        u, v = mixing[2 * l], mixing[2 * l + 1]
        h_in = state.layers[l]
        h_out = state.layers[l + 1]
        nm = state.window_means[l]
        da = dh * (1.0 - h_out * h_out)
        d_mix[2 * l] += float(np.sum(da * h_in))
        d_mix[2 * l + 1] += float(np.sum(da * nm))
        dh = u * da + _window_mean_backward(v * da)
    d_emb = out[: v_size * d].reshape(v_size, d)
    np.add.at(d_emb, state.ids, dh)


# ---------------------------------------------------------------------------
# Public inference operations
# ---------------------------------------------------------------------------

def encode(ckpt: EncoderCheckpoint, sentence) -> TokenEmbeddings:
    """Contextual token embeddings plus their mean-pooled vector."""
    state = forward_states(ckpt, sentence)
    return TokenEmbeddings(vectors=state.layers[-1], pooled=state.pooled)


def qe_score(ckpt: EncoderCheckpoint, sentence) -> float:
    """Scalar quality score: w . pooled + b."""
    if ckpt.qe_head is None:
        raise ModelError("checkpoint has no QE head")
    pooled = forward_states(ckpt, sentence).pooled
    return float(ckpt.qe_head.weight @ pooled + ckpt.qe_head.bias)


def ged_logits(ckpt: EncoderCheckpoint, sentence, taxonomy) -> np.ndarray:
    """Per-token label probability rows (softmax of the GED head)."""
    if ckpt.ged_head is None:
        raise ModelError("checkpoint has no GED head")
    if ckpt.ged_head.taxonomy != taxonomy.name or ckpt.ged_head.weight.shape[1] != len(taxonomy):
        raise ModelError(
            f"GED head was trained for {ckpt.ged_head.taxonomy!r} "
            f"({ckpt.ged_head.weight.shape[1]} labels), got {taxonomy.name!r}"
        )
    h = forward_states(ckpt, sentence).layers[-1]
    return softmax_rows(h @ ckpt.ged_head.weight + ckpt.ged_head.bias)


def softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def similarity(ckpt: EncoderCheckpoint, a, b) -> float:
    """Cosine similarity of mean-pooled embeddings, in [-1, 1].

    Two zero vectors compare as 1.0 (identical by convention); a single
    zero vector compares as 0.0.
    """
    pa = forward_states(ckpt, a).pooled
    pb = forward_states(ckpt, b).pooled
    na = float(np.linalg.norm(pa))
    nb = float(np.linalg.norm(pb))
    if na < 1e-300 and nb < 1e-300:
        return 1.0
    if na < 1e-300 or nb < 1e-300:
        return 0.0
    return float(np.clip(pa @ pb / (na * nb), -1.0, 1.0))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _checkpoint_payload(ckpt: EncoderCheckpoint) -> dict:
    payload = {
        "config": {
            "vocab": ckpt.config.vocab,
            "dim": ckpt.config.dim,
            "depth": ckpt.config.depth,
            "seed": ckpt.config.seed,
        },
        "params": [float(x) for x in ckpt.params],
        "ged_head": None,
        "qe_head": None,
    }
    if ckpt.ged_head is not None:
        payload["ged_head"] = {
            "taxonomy": ckpt.ged_head.taxonomy,
            "weight": [[float(x) for x in row] for row in ckpt.ged_head.weight],
            "bias": [float(x) for x in ckpt.ged_head.bias],
        }
    if ckpt.qe_head is not None:
        payload["qe_head"] = {
            "weight": [float(x) for x in ckpt.qe_head.weight],
            "bias": float(ckpt.qe_head.bias),
        }
    return payload


def content_hash(ckpt: EncoderCheckpoint) -> str:
    """SHA-256 over the canonical payload (provenance excluded)."""
    blob = json.dumps(_checkpoint_payload(ckpt), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def save_checkpoint(ckpt: EncoderCheckpoint, path) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "provenance": ckpt.provenance,
    }
    doc.update(_checkpoint_payload(ckpt))
    with open(Path(path), "w", encoding="utf-8") as fp:
        json.dump(doc, fp, sort_keys=True, separators=(",", ":"))
        fp.write("\n")


def load_checkpoint(path) -> EncoderCheckpoint:
    with open(Path(path), "r", encoding="utf-8") as fp:
        doc = json.load(fp)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {doc.get('version')}")
    cfg = doc["config"]
    config = EncoderConfig(
        vocab={str(k): int(v) for k, v in cfg["vocab"].items()},
        dim=int(cfg["dim"]),
        depth=int(cfg["depth"]),
        seed=int(cfg["seed"]),
    )
    ged = None
    if doc.get("ged_head") is not None:
        g = doc["ged_head"]
        ged = GedHead(
            weight=np.array(g["weight"], dtype=np.float64),
            bias=np.array(g["bias"], dtype=np.float64),
            taxonomy=str(g["taxonomy"]),
        )
    qe = None
    if doc.get("qe_head") is not None:
        q = doc["qe_head"]
        qe = QeHead(weight=np.array(q["weight"], dtype=np.float64), bias=float(q["bias"]))
    return EncoderCheckpoint(
        config=config,
        params=np.array(doc["params"], dtype=np.float64),
        ged_head=ged,
        qe_head=qe,
        provenance=dict(doc.get("provenance", {})),
    )
