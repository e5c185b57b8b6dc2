"""Residual-SE convolutional tower mapping move planes to feature vectors."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from .encoding import NUM_CHANNELS

BN_EPS = 1e-5
BN_MOMENTUM = 0.1  # torch convention: running = 0.9*running + 0.1*batch


@dataclass
class ExtractorConfig:
    num_blocks: int = 6
    channels: int = 64
    se_ratio: int = 8
    output_dim: int = 320

    def __post_init__(self):
        for name in ("num_blocks", "channels", "se_ratio", "output_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.channels % self.se_ratio != 0:
            raise ValueError(
                f"channels ({self.channels}) not divisible by se_ratio ({self.se_ratio})")


class SEBlock(nn.Module):
    """Squeeze-and-excitation channel gate."""

    def __init__(self, channels: int, ratio: int):
        super().__init__()
        self.squeeze = nn.Linear(channels, channels // ratio)
        self.excite = nn.Linear(channels // ratio, channels)
        self.force_identity = False  # test hook: bypass the gate

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if self.force_identity:
            return x
        gate = x.mean(dim=(2, 3))
        gate = torch.sigmoid(self.excite(torch.relu(self.squeeze(gate))))
        return x * gate[:, :, None, None]


class ResidualBlock(nn.Module):
    def __init__(self, channels: int, se_ratio: int):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(channels, eps=BN_EPS, momentum=BN_MOMENTUM)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(channels, eps=BN_EPS, momentum=BN_MOMENTUM)
        self.se = SEBlock(channels, se_ratio)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = torch.relu(self.bn1(self.conv1(x)))
        out = self.se(self.bn2(self.conv2(out)))
        return torch.relu(out + x)


class MoveFeatureExtractor(nn.Module):
    """Input conv -> residual-SE blocks -> 1x1 expansion -> global average pool."""

    def __init__(self, config: ExtractorConfig):
        super().__init__()
        self.config = config
        self.conv_in = nn.Conv2d(NUM_CHANNELS, config.channels, 3, padding=1, bias=False)
        self.bn_in = nn.BatchNorm2d(config.channels, eps=BN_EPS, momentum=BN_MOMENTUM)
        self.blocks = nn.ModuleList(
            ResidualBlock(config.channels, config.se_ratio)
            for _ in range(config.num_blocks))
        self.expand = nn.Conv2d(config.channels, config.output_dim, 1)
        self._init_weights()

    def _init_weights(self):
        for module in self.modules():
            if isinstance(module, nn.Conv2d):
                nn.init.kaiming_normal_(module.weight, mode="fan_in", nonlinearity="relu")
                if module.bias is not None:
                    nn.init.zeros_(module.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() != 4 or x.shape[1:] != (NUM_CHANNELS, 8, 8):
            raise ValueError(
                f"expected input of shape (B, {NUM_CHANNELS}, 8, 8), got {tuple(x.shape)}")
        x = torch.relu(self.bn_in(self.conv_in(x)))
        for block in self.blocks:
            x = block(x)
        x = self.expand(x)
        return x.mean(dim=(2, 3))


def init_extractor(config: ExtractorConfig, seed: int) -> MoveFeatureExtractor:
    """Deterministic construction: same config and seed give identical parameters."""
    torch.manual_seed(seed)
    return MoveFeatureExtractor(config)
