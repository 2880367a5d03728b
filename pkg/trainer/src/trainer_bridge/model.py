"""Small transformer encoder trained from scratch.

The default "tiny-random" base model is a randomly initialized
word-level encoder: large pretrained checkpoints are an operator
concern, and the bridge's contract (file in, file out) does not depend
on which encoder fills this slot.
"""

from __future__ import annotations


import torch
from torch import nn

PAD = "<pad>"
UNK = "<unk>"


class Vocab:
    def __init__(self, tokens: list[str]):
        seen: dict[str, int] = {}
        for token in tokens:
            key = token.lower()
            if key not in seen:
                seen[key] = len(seen)
        self.index = {PAD: 0, UNK: 1}
        for key in seen:
            self.index[key] = len(self.index)

    def __len__(self) -> int:
        return len(self.index)

    def encode(self, tokens: list[str]) -> list[int]:
        return [self.index.get(t.lower(), 1) for t in tokens]


class TinyEncoder(nn.Module):
    def __init__(self, vocab_size: int, hidden_dim: int = 64, layers: int = 2, max_len: int = 512):
        super().__init__()
        self.embed = nn.Embedding(vocab_size, hidden_dim, padding_idx=0)
        self.position = nn.Embedding(max_len, hidden_dim)
        layer = nn.TransformerEncoderLayer(
            d_model=hidden_dim,
            nhead=4,
            dim_feedforward=hidden_dim * 2,
            dropout=0.1,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=layers)
        self.max_len = max_len

    def forward(self, token_ids: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Returns (hidden states, padding mask); mask is True at padding."""
        token_ids = token_ids[:, : self.max_len]
        positions = torch.arange(token_ids.size(1), device=token_ids.device)
        states = self.embed(token_ids) + self.position(positions)[None, :, :]
        mask = token_ids.eq(0)
        encoded = self.encoder(states, src_key_padding_mask=mask)
        return encoded, mask


class TokenTagger(nn.Module):
    def __init__(self, vocab_size: int, n_tags: int, hidden_dim: int = 64, layers: int = 2):
        super().__init__()
        self.encoder = TinyEncoder(vocab_size, hidden_dim, layers)
        self.head = nn.Linear(hidden_dim, n_tags)

    def forward(self, token_ids: torch.Tensor) -> torch.Tensor:
        encoded, _ = self.encoder(token_ids)
        return self.head(encoded)

    def sentence_embedding(self, token_ids: torch.Tensor) -> torch.Tensor:
        encoded, mask = self.encoder(token_ids)
        keep = (~mask).float().unsqueeze(-1)
        summed = (encoded * keep).sum(dim=1)
        counts = keep.sum(dim=1).clamp(min=1.0)
        return summed / counts


class SentenceClassifier(nn.Module):
    def __init__(self, vocab_size: int, n_classes: int = 2, hidden_dim: int = 64, layers: int = 2):
        super().__init__()
        self.encoder = TinyEncoder(vocab_size, hidden_dim, layers)
        self.head = nn.Linear(hidden_dim, n_classes)

    def pooled(self, token_ids: torch.Tensor) -> torch.Tensor:
        encoded, mask = self.encoder(token_ids)
        keep = (~mask).float().unsqueeze(-1)
        summed = (encoded * keep).sum(dim=1)
        counts = keep.sum(dim=1).clamp(min=1.0)
        return summed / counts

    def forward(self, token_ids: torch.Tensor) -> torch.Tensor:
        return self.head(self.pooled(token_ids))


def pad_batch(sequences: list[list[int]], device: torch.device) -> torch.Tensor:
    width = max(len(s) for s in sequences)
    batch = torch.zeros(len(sequences), width, dtype=torch.long, device=device)
    for i, seq in enumerate(sequences):
        batch[i, : len(seq)] = torch.tensor(seq, dtype=torch.long, device=device)
    return batch
