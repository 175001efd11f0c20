import torch
import torch.nn as nn


class ContractError(ValueError):
    """Input tensors do not match what a model or block was built for."""


def _check_pair(a, b):
    if a.shape != b.shape:
        raise ContractError(f"cannot fuse features of shape {tuple(a.shape)} and {tuple(b.shape)}")


class ConvBlock(nn.Sequential):
    """3x3 convolution, batch norm, ReLU."""

    def __init__(self, in_ch, out_ch, stride=1):
        super().__init__(
            nn.Conv2d(in_ch, out_ch, 3, stride=stride, padding=1, bias=False),
            nn.BatchNorm2d(out_ch),
            nn.ReLU(inplace=True),
        )


class UpBlock(nn.Sequential):
    """3x3 transposed convolution doubling the resolution, batch norm, ReLU."""

    def __init__(self, in_ch, out_ch):
        super().__init__(
            nn.ConvTranspose2d(in_ch, out_ch, 3, stride=2, padding=1, output_padding=1, bias=False),
            nn.BatchNorm2d(out_ch),
            nn.ReLU(inplace=True),
        )


class ResidualUnit(nn.Module):
    """Two-convolution basic block of ResNet-34."""

    def __init__(self, in_ch, out_ch, stride=1):
        super().__init__()
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, stride=stride, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(out_ch)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(out_ch)
        self.relu = nn.ReLU(inplace=True)
        self.shortcut = nn.Identity()
        if stride != 1 or in_ch != out_ch:
            self.shortcut = nn.Sequential(
                nn.Conv2d(in_ch, out_ch, 1, stride=stride, bias=False),
                nn.BatchNorm2d(out_ch),
            )

    def forward(self, x):
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return self.relu(out + self.shortcut(x))


class ResidualBlock(nn.Sequential):
    def __init__(self, in_ch, out_ch, stride=2, units=2):
        layers = [ResidualUnit(in_ch, out_ch, stride)]
        layers += [ResidualUnit(out_ch, out_ch) for _ in range(units - 1)]
        super().__init__(*layers)


class ConcatFuse(nn.Module):
    """Concatenate two C-channel maps and convolve back down to C channels."""

    def __init__(self, channels):
        super().__init__()
        self.conv = nn.Conv2d(2 * channels, channels, 3, padding=1)
        self.bn = nn.BatchNorm2d(channels)
        self.relu = nn.ReLU(inplace=True)

    def forward(self, a, b):
        _check_pair(a, b)
        return self.relu(self.bn(self.conv(torch.cat([a, b], dim=1))))


class AdaptiveFuse(nn.Module):
    """Depthwise-separable fusion: depthwise 3x3 over 2C channels, pointwise 1x1 to C, BN, ReLU.

    The 1x1 convolution learns how much each modality's channels contribute.
    """

    def __init__(self, channels):
        super().__init__()
        both = 2 * channels
        self.depthwise = nn.Conv2d(both, both, 3, padding=1, groups=both, bias=False)
        self.pointwise = nn.Conv2d(both, channels, 1, bias=False)
        self.bn = nn.BatchNorm2d(channels)
        self.relu = nn.ReLU(inplace=True)

    def forward(self, a, b):
        _check_pair(a, b)
        x = torch.cat([a, b], dim=1)
        return self.relu(self.bn(self.pointwise(self.depthwise(x))))


def make_fuse(channels, adaptive):
    return AdaptiveFuse(channels) if adaptive else ConcatFuse(channels)


def concat_fuse(block: ConcatFuse, a, b):
    return block(a, b)


def adaptive_fuse(block: AdaptiveFuse, a, b):
    return block(a, b)
