"""Pre-layer-norm transformer that aggregates move features into one
unit-norm game embedding.

No classification token is used: the unmasked block outputs are averaged
and projected into the embedding space. Positional encoding is the fixed
sinusoid, indexed by position within the input window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn


@dataclass
class EncoderConfig:
    model_dim: int = 1024
    num_blocks: int = 12
    num_heads: int = 8
    head_dim: int = 64
    ff_dim: int = 2048
    embed_dim: int = 512
    max_positions: int = 500
    feature_dim: int = 320

    def __post_init__(self):
        for name in ("model_dim", "num_blocks", "num_heads", "head_dim",
                     "ff_dim", "embed_dim", "max_positions", "feature_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


def positional_encoding(position: int, model_dim: int,
                        max_positions: int = 500) -> np.ndarray:
    """Sinusoid for one position: dim 2i = sin(pos/10000^(2i/d)), 2i+1 = cos."""
    if not 0 <= position < max_positions:
        raise ValueError(f"position {position} outside [0, {max_positions})")
    out = np.zeros(model_dim)
    i = np.arange(0, model_dim, 2)
    angle = position / np.power(10000.0, i / model_dim)
    out[0::2] = np.sin(angle)
    out[1::2] = np.cos(angle)[: len(out[1::2])]
    return out


def _positional_table(max_positions: int, model_dim: int) -> torch.Tensor:
    pos = np.stack([positional_encoding(p, model_dim, max_positions)
                    for p in range(max_positions)])
    return torch.from_numpy(pos).float()


class MaskedSelfAttention(nn.Module):
    def __init__(self, model_dim: int, num_heads: int, head_dim: int):
        super().__init__()
        inner = num_heads * head_dim
        self.num_heads = num_heads
        self.head_dim = head_dim
        self.qkv = nn.Linear(model_dim, 3 * inner)
        self.out = nn.Linear(inner, model_dim)

    def forward(self, x: torch.Tensor, mask: torch.Tensor,
                need_weights: bool = False):
        B, L, _ = x.shape
        q, k, v = self.qkv(x).chunk(3, dim=-1)
        shape = (B, L, self.num_heads, self.head_dim)
        q = q.view(shape).transpose(1, 2)
        k = k.view(shape).transpose(1, 2)
        v = v.view(shape).transpose(1, 2)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        key_mask = mask[:, None, None, :]  # (B, 1, 1, L)
        scores = scores.masked_fill(~key_mask, float("-inf"))
        weights = torch.softmax(scores, dim=-1)
        out = (weights @ v).transpose(1, 2).reshape(B, L, -1)
        out = self.out(out)
        return (out, weights) if need_weights else (out, None)


class TransformerBlock(nn.Module):
    """Pre-norm: x + attn(ln(x)); x + ff(ln(x))."""

    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(config.model_dim)
        self.attn = MaskedSelfAttention(config.model_dim, config.num_heads,
                                        config.head_dim)
        self.ln2 = nn.LayerNorm(config.model_dim)
        self.ff = nn.Sequential(
            nn.Linear(config.model_dim, config.ff_dim),
            nn.GELU(),
            nn.Linear(config.ff_dim, config.model_dim),
        )

    def forward(self, x, mask, need_weights=False):
        attn_out, weights = self.attn(self.ln1(x), mask, need_weights)
        x = x + attn_out
        x = x + self.ff(self.ln2(x))
        return x, weights


class GameEncoder(nn.Module):
    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.config = config
        self.input_proj = nn.Linear(config.feature_dim, config.model_dim)
        self.blocks = nn.ModuleList(TransformerBlock(config)
                                    for _ in range(config.num_blocks))
        self.final_ln = nn.LayerNorm(config.model_dim)
        self.head = nn.Sequential(
            nn.Linear(config.model_dim, config.model_dim),
            nn.GELU(),
            nn.Linear(config.model_dim, config.embed_dim),
        )
        self.register_buffer(
            "pos_table", _positional_table(config.max_positions, config.model_dim))

    def _run_blocks(self, features: torch.Tensor, mask: torch.Tensor,
                    need_weights: bool = False):
        B, L, _ = features.shape
        if L > self.config.max_positions:
            raise ValueError(
                f"sequence length {L} exceeds max_positions {self.config.max_positions}")
        if not mask.any(dim=1).all():
            raise ValueError("every sequence must have at least one unmasked position")
        x = self.input_proj(features) + self.pos_table[:L].to(features.dtype)
        all_weights = []
        for block in self.blocks:
            x, weights = block(x, mask, need_weights)
            if need_weights:
                all_weights.append(weights)
        x = self.final_ln(x)
        return x, all_weights

    def forward(self, features: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """(B, L, feature_dim) + (B, L) bool mask -> (B, embed_dim) unit vectors."""
        x, _ = self._run_blocks(features, mask)
        fmask = mask.unsqueeze(-1).to(x.dtype)
        pooled = (x * fmask).sum(dim=1) / fmask.sum(dim=1)
        emb = self.head(pooled)
        if not torch.isfinite(emb).all():
            raise FloatingPointError("non-finite activations in game encoder")
        return emb / emb.norm(dim=-1, keepdim=True)

    def attention_weights(self, features: torch.Tensor,
                          mask: torch.Tensor) -> list[torch.Tensor]:
        """Per-block (B, heads, L, L) softmax weights; masked keys get 0."""
        _, weights = self._run_blocks(features, mask, need_weights=True)
        return weights


def init_encoder(config: EncoderConfig, seed: int) -> GameEncoder:
    torch.manual_seed(seed)
    return GameEncoder(config)
