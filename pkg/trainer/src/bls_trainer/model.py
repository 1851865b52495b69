"""UNet++ with nested dense skip connections.

Five levels, base width 32 doubling per level, two 3x3 conv + BN + ReLU per
node, 2x2 max pooling down, transposed-convolution up, sigmoid single-channel
output, no dropout. Spatial input dimensions must be multiples of 32 (four
poolings). The published reference of this architecture lists 2,410,468
parameters without the per-level widths; this configuration reports its own
count (see count_parameters) and the delta is documented rather than forced.
"""

from __future__ import annotations

import torch
from torch import nn

BASE_FILTERS = 32
DEPTH = 5


class ConvBlock(nn.Module):
    def __init__(self, in_ch: int, out_ch: int):
        super().__init__()
        self.block = nn.Sequential(
            nn.Conv2d(in_ch, out_ch, kernel_size=3, stride=1, padding=1),
            nn.BatchNorm2d(out_ch),
            nn.ReLU(inplace=True),
            nn.Conv2d(out_ch, out_ch, kernel_size=3, stride=1, padding=1),
            nn.BatchNorm2d(out_ch),
            nn.ReLU(inplace=True),
        )

    def forward(self, x):
        return self.block(x)


class UNetPlusPlus(nn.Module):
    """Nested U-Net: node X[i][j] consumes all X[i][0..j-1] plus upsampled X[i+1][j-1]."""

    def __init__(self, in_channels: int = 2, base: int = BASE_FILTERS, depth: int = DEPTH):
        super().__init__()
        self.in_channels = in_channels
        self.depth = depth
        filters = [base * (2**i) for i in range(depth)]
        self.pool = nn.MaxPool2d(kernel_size=2, stride=2)

        self.blocks = nn.ModuleDict()
        self.ups = nn.ModuleDict()
        for i in range(depth):
            in_ch = in_channels if i == 0 else filters[i - 1]
            self.blocks[f"x_{i}_0"] = ConvBlock(in_ch, filters[i])
        for j in range(1, depth):
            for i in range(depth - j):
                self.ups[f"u_{i}_{j}"] = nn.ConvTranspose2d(
                    filters[i + 1], filters[i], kernel_size=2, stride=2
                )
                self.blocks[f"x_{i}_{j}"] = ConvBlock(filters[i] * (j + 1), filters[i])
        self.head = nn.Conv2d(filters[0], 1, kernel_size=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 4:
            raise ValueError(f"expected NCHW input, got {x.ndim} dims")
        h, w = x.shape[2], x.shape[3]
        if h % 32 != 0 or w % 32 != 0:
            raise ValueError(f"input spatial dims must be multiples of 32, got {(h, w)}")
        nodes: dict[tuple[int, int], torch.Tensor] = {}
        nodes[(0, 0)] = self.blocks["x_0_0"](x)
        for i in range(1, self.depth):
            nodes[(i, 0)] = self.blocks[f"x_{i}_0"](self.pool(nodes[(i - 1, 0)]))
        for j in range(1, self.depth):
            for i in range(self.depth - j):
                up = self.ups[f"u_{i}_{j}"](nodes[(i + 1, j - 1)])
                skip = [nodes[(i, k)] for k in range(j)]
                nodes[(i, j)] = self.blocks[f"x_{i}_{j}"](torch.cat(skip + [up], dim=1))
        return torch.sigmoid(self.head(nodes[(0, self.depth - 1)]))

    def count_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters() if p.requires_grad)
