"""Generalized end-to-end metric loss over episodes of N players x M games.

The similarity matrix scores every game embedding against every player
centroid with a scaled cosine w*cos+b. The true player's centroid excludes
the scored game itself.
"""

from __future__ import annotations

import torch
import torch.nn as nn

_EPS = 1e-12


def centroid_excluding(embeddings_j: torch.Tensor, i: int) -> torch.Tensor:
    """Mean of a player's M embeddings with row i left out."""
    M = embeddings_j.shape[0]
    if M < 2:
        raise ValueError("centroid exclusion needs M >= 2")
    return (embeddings_j.sum(dim=0) - embeddings_j[i]) / (M - 1)


def similarity_matrix(embeddings: torch.Tensor, w: torch.Tensor,
                      b: torch.Tensor) -> torch.Tensor:
    """(N, M, d) embeddings -> (N*M, N) scaled-cosine scores.

    Row j*M+i scores game i of player j; column k uses centroid c_k, except
    k == j which uses the centroid excluding the scored game.
    """
    w = torch.as_tensor(w, dtype=embeddings.dtype)
    b = torch.as_tensor(b, dtype=embeddings.dtype)
    if float(w.detach()) <= 0:
        raise ValueError("w must be positive")
    N, M, d = embeddings.shape
    centroids = embeddings.mean(dim=1)                       # (N, d)
    excl = (centroids[:, None, :] * M - embeddings) / (M - 1) if M > 1 else None

    cent_norm = centroids.norm(dim=-1)
    if (cent_norm < _EPS).any():
        raise ValueError("zero-norm centroid: cosine similarity undefined")
    emb_norm = embeddings.norm(dim=-1)
    if (emb_norm < _EPS).any():
        raise ValueError("zero-norm embedding: cosine similarity undefined")

    flat = embeddings.reshape(N * M, d)
    cos = (flat @ centroids.T) / (emb_norm.reshape(-1, 1) * cent_norm[None, :])
    if M > 1:
        excl_norm = excl.norm(dim=-1)
        if (excl_norm < _EPS).any():
            raise ValueError("zero-norm excluded centroid")
        own = (embeddings * excl).sum(dim=-1) / (emb_norm * excl_norm)  # (N, M)
        rows = torch.arange(N * M, device=embeddings.device)
        cos = cos.clone()
        cos[rows, rows // M] = own.reshape(-1)
    return w * cos + b


def ge2e_loss(embeddings: torch.Tensor, w: torch.Tensor,
              b: torch.Tensor) -> torch.Tensor:
    """Mean over all N*M games of -S_true + logsumexp(S_row)."""
    if not torch.isfinite(embeddings).all():
        raise FloatingPointError("non-finite embeddings in GE2E loss")
    N, M, _ = embeddings.shape
    S = similarity_matrix(embeddings, w, b)
    rows = torch.arange(N * M, device=embeddings.device)
    true_scores = S[rows, rows // M]
    return (torch.logsumexp(S, dim=1) - true_scores).mean()


class GE2ECriterion(nn.Module):
    """Holds the learned (w, b) with a reduced gradient scale and w > 0 clamp."""

    W_MIN = 1e-6

    def __init__(self, w0: float = 10.0, b0: float = -5.0,
                 grad_scale: float = 0.01):
        super().__init__()
        self.w = nn.Parameter(torch.tensor(float(w0)))
        self.b = nn.Parameter(torch.tensor(float(b0)))
        if grad_scale != 1.0:
            self.w.register_hook(lambda g: g * grad_scale)
            self.b.register_hook(lambda g: g * grad_scale)

    def forward(self, embeddings: torch.Tensor) -> torch.Tensor:
        return ge2e_loss(embeddings, self.w, self.b)

    def clamp_w(self) -> None:
        with torch.no_grad():
            self.w.clamp_(min=self.W_MIN)
