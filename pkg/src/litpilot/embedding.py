"""Deterministic hashed n-gram featurizer with a contrastive-trained
linear projection.

The featurizer is frozen (character 2/3-grams, FNV-1a 64-bit hashed into
2^15 buckets); only the projection matrix is trained, with an InfoNCE
objective over (question, positive, negatives) triples.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Chunk
from .errors import (
    BackendFailure,
    DegenerateProjection,
    EmptyInput,
    InsufficientCorpus,
    NonFiniteLoss,
)
from .llm import ChatMessage, ChatRequest, get_template, render

FEATURE_DIM = 2 ** 15

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_WS_RE = re.compile(r"\s+")


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def featurize(text: str) -> dict[int, float]:
    """Character {2,3}-gram counts of the lowercased, whitespace-normalized
    text, hashed into FEATURE_DIM buckets."""
    norm = _WS_RE.sub(" ", text.lower()).strip()
    feats: dict[int, float] = {}
    for n in (2, 3):
        for i in range(len(norm) - n + 1):
            idx = fnv1a_64(norm[i:i + n].encode("utf-8")) % FEATURE_DIM
            feats[idx] = feats.get(idx, 0.0) + 1.0
    return feats


@dataclass
class ProjectionModel:
    W: np.ndarray  # (d_out, FEATURE_DIM)
    tau: float = 0.05
    d_out: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("temperature must be positive")
        if self.W.shape != (self.d_out, FEATURE_DIM):
            raise ValueError(f"W shape {self.W.shape} != ({self.d_out}, {FEATURE_DIM})")

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as f:
            f.write(
                f"LITPILOT-PROJ v1 d_out={self.d_out} tau={self.tau} seed={self.seed}\n"
                .encode("ascii")
            )
            f.write(self.W.astype("<f4").tobytes(order="C"))

    @classmethod
    def load(cls, path: str | Path) -> "ProjectionModel":
        with open(path, "rb") as f:
            header = f.readline().decode("ascii").strip()
            parts = header.split()
            if parts[:2] != ["LITPILOT-PROJ", "v1"]:
                raise ValueError(f"bad model header: {header!r}")
            kv = dict(p.split("=", 1) for p in parts[2:])
            d_out = int(kv["d_out"])
            W = np.frombuffer(f.read(), dtype="<f4").reshape(d_out, FEATURE_DIM)
            return cls(W=W.astype(np.float64), tau=float(kv["tau"]),
                       d_out=d_out, seed=int(kv["seed"]))


def _project(feats: dict[int, float], W: np.ndarray) -> np.ndarray:
    idxs = np.fromiter(feats.keys(), dtype=np.int64, count=len(feats))
    wts = np.fromiter(feats.values(), dtype=np.float64, count=len(feats))
    return W[:, idxs] @ wts


def _unit(u: np.ndarray) -> tuple[np.ndarray, float]:
    norm = float(np.linalg.norm(u))
    if norm < 1e-30:
        raise DegenerateProjection("projection collapsed to the zero vector")
    return u / norm, norm


def embed(text: str, model: ProjectionModel) -> np.ndarray:
    """Unit-norm embedding of text under the projection."""
    feats = featurize(text)
    if not feats:
        raise EmptyInput("text yields no n-grams")
    e, _ = _unit(_project(feats, model.W))
    return e


@dataclass(frozen=True)
class TrainingTriple:
    question: str
    positive_chunk: str
    negative_chunks: tuple[str, ...]

    def __post_init__(self):
        negs = self.negative_chunks
        if not negs:
            raise ValueError("need at least one negative")
        if len(set(negs)) != len(negs):
            raise ValueError("negatives must be pairwise distinct")
        if self.positive_chunk in negs:
            raise ValueError("positive must not appear among negatives")


def mine_triples(corpus: list[Chunk], backend, negatives_per: int,
                 seed: int) -> list[TrainingTriple]:
    """Build training triples: a backend-generated question per chunk, the
    chunk as positive, and seeded uniform negatives from other documents."""
    if negatives_per < 1:
        raise ValueError("negatives_per must be >= 1")
    docs = {c.doc_id for c in corpus}
    if len(corpus) < negatives_per + 1 or len(docs) < 2:
        raise InsufficientCorpus(
            f"need >= {negatives_per + 1} chunks from >= 2 documents"
        )
    template = get_template("triple_question")
    rng = random.Random(seed)
    triples: list[TrainingTriple] = []
    for chunk in corpus:
        pool = sorted(c.chunk_id for c in corpus if c.doc_id != chunk.doc_id)
        if len(pool) < negatives_per:
            raise InsufficientCorpus(
                f"chunk {chunk.chunk_id}: only {len(pool)} cross-document negatives"
            )
        prompt = render(template, {"text": chunk.text})
        result = backend.complete(ChatRequest(
            messages=[ChatMessage(role="user", content=prompt)]
        ))
        question = result.content.strip()
        negatives = tuple(rng.sample(pool, negatives_per))
        if not question:
            continue
        triples.append(TrainingTriple(
            question=question,
            positive_chunk=chunk.chunk_id,
            negative_chunks=negatives,
        ))
    return triples


def _info_nce_sparse(model: ProjectionModel, triple: TrainingTriple,
                     texts) -> tuple[float, dict[int, np.ndarray]]:
    """Loss and gradient as a map feature-column -> d_out vector."""
    fq = featurize(triple.question)
    if not fq:
        raise EmptyInput("question yields no n-grams")
    f_others = []
    for cid in (triple.positive_chunk, *triple.negative_chunks):
        fx = featurize(texts(cid))
        if not fx:
            raise EmptyInput(f"chunk {cid} yields no n-grams")
        f_others.append(fx)

    W = model.W
    e_q, n_q = _unit(_project(fq, W))
    embs = []
    for fx in f_others:
        e_x, n_x = _unit(_project(fx, W))
        embs.append((e_x, n_x))

    sims = np.array([float(e_q @ e_x) for e_x, _ in embs])
    logits = sims / model.tau
    logits -= logits.max()  # stable softmax
    exps = np.exp(logits)
    probs = exps / exps.sum()
    loss = float(-np.log(probs[0]))

    # dloss/ds_i; index 0 is the positive
    coeffs = probs / model.tau
    coeffs[0] -= 1.0 / model.tau

    grad_cols: dict[int, np.ndarray] = {}

    def add(feats: dict[int, float], vec: np.ndarray):
        for idx, w in feats.items():
            col = grad_cols.get(idx)
            if col is None:
                grad_cols[idx] = vec * w
            else:
                col += vec * w

    for coeff, fx, (e_x, n_x), s in zip(coeffs, f_others, embs, sims):
        if coeff == 0.0:
            continue
        add(fq, coeff * (e_x - s * e_q) / n_q)
        add(fx, coeff * (e_q - s * e_x) / n_x)

    return loss, grad_cols


def info_nce(model: ProjectionModel, triple: TrainingTriple,
             texts) -> tuple[float, np.ndarray]:
    """InfoNCE loss and the exact analytic gradient w.r.t. W.

    `texts` resolves a chunk id (or the question string itself) to text.
    """
    loss, cols = _info_nce_sparse(model, triple, texts)
    grad = np.zeros_like(model.W)
    for idx, vec in cols.items():
        grad[:, idx] = vec
    return loss, grad


@dataclass(frozen=True)
class TrainConfig:
    d_out: int = 256
    tau: float = 0.05
    learning_rate: float = 0.1
    epochs: int = 10
    batch: int = 16
    seed: int = 0

    def __post_init__(self):
        if min(self.d_out, self.learning_rate, self.tau, self.batch) <= 0:
            raise ValueError("hyperparameters must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


def init_projection(hp: TrainConfig) -> ProjectionModel:
    rng = np.random.default_rng(hp.seed)
    a = np.sqrt(6.0 / (FEATURE_DIM + hp.d_out))
    W = rng.uniform(-a, a, size=(hp.d_out, FEATURE_DIM))
    return ProjectionModel(W=W, tau=hp.tau, d_out=hp.d_out, seed=hp.seed)


def train_projection(triples: list[TrainingTriple], texts,
                     hp: TrainConfig) -> tuple[ProjectionModel, list[float]]:
    """Mini-batch gradient descent on mean InfoNCE. Bit-reproducible for a
    fixed seed. Returns the trained model and the per-epoch mean loss log."""
    if not triples:
        raise ValueError("no training triples")
    model = init_projection(hp)
    W = model.W
    order_rng = np.random.default_rng(hp.seed + 1)
    loss_log: list[float] = []

    for epoch in range(hp.epochs):
        order = order_rng.permutation(len(triples))
        epoch_losses: list[float] = []
        for start in range(0, len(order), hp.batch):
            batch = [triples[i] for i in order[start:start + hp.batch]]
            acc: dict[int, np.ndarray] = {}
            for triple in batch:
                loss, cols = _info_nce_sparse(model, triple, texts)
                if not np.isfinite(loss):
                    raise NonFiniteLoss(epoch)
                epoch_losses.append(loss)
                for idx, vec in cols.items():
                    if idx in acc:
                        acc[idx] += vec
                    else:
                        acc[idx] = vec.copy()
            scale = hp.learning_rate / len(batch)
            # fixed column order keeps the update bit-reproducible
            for idx in sorted(acc):
                W[:, idx] -= scale * acc[idx]
        loss_log.append(float(np.mean(epoch_losses)))
    return model, loss_log
