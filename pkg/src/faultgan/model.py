"""The encoder-decoder-encoder generator, the convolutional discriminator,
their four loss functions, and the anomaly score.

Layer plan: the encoder applies n_down stride-2 convolutions (kernel 4,
padding 1), doubling channels from base_channels, with batch norm and leaky
ReLU after every stage except that the first stage skips batch norm; a final
full-length convolution maps to the latent vector. The decoder mirrors this
with transposed convolutions, batch norm and ReLU, ending in a plain affine
transposed convolution so reconstructions are unbounded (no squashing). The
discriminator reuses the encoder pyramid with a sigmoid head; its flattened
penultimate activation is the feature map used for feature matching.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, UsageError
from .features import FEATURE_NAMES, Standardizer, feature_matrix
from .ndtensor import (
    BatchNormStats,
    Tensor,
    batchnorm1d,
    bce_loss,
    conv1d,
    conv_transpose1d,
    l1_mean,
    l2_mean,
    leaky_relu,
    relu,
    sigmoid,
)

LEAKY_SLOPE = 0.2
KERNEL_SIZE = 4
INIT_STD = 0.02  # convolution weights ~ N(0, 0.02), batch-norm gamma ~ N(1, 0.02)


@dataclass
class LossWeights:
    """Weights of the three generator loss components (fraud, apparent, latent)."""

    w_fraud: float = 1.0
    w_apparent: float = 50.0
    w_latent: float = 1.0

    def __post_init__(self):
        if min(self.w_fraud, self.w_apparent, self.w_latent) < 0:
            raise UsageError("loss weights must be non-negative")
        if max(self.w_fraud, self.w_apparent, self.w_latent) == 0:
            raise UsageError("at least one loss weight must be positive")


class Conv:
    """A convolution layer's parameters; bias is omitted under batch norm."""

    def __init__(self, kernel: Tensor, bias: Tensor | None, stride: int, padding: int):
        self.kernel = kernel
        self.bias = bias
        self.stride = stride
        self.padding = padding

    def __call__(self, x: Tensor) -> Tensor:
        return conv1d(x, self.kernel, self.bias, self.stride, self.padding)

    def params(self) -> list[Tensor]:
        return [self.kernel] + ([self.bias] if self.bias is not None else [])

    def arrays(self) -> list[np.ndarray]:
        return [p.data for p in self.params()]


class ConvT(Conv):
    def __call__(self, x: Tensor) -> Tensor:
        return conv_transpose1d(x, self.kernel, self.bias, self.stride, self.padding)


class BatchNorm:
    def __init__(self, gamma: Tensor, beta: Tensor, momentum: float, eps: float):
        self.gamma = gamma
        self.beta = beta
        self.stats = BatchNormStats.fresh(gamma.size)
        self.momentum = momentum
        self.eps = eps

    def __call__(self, x: Tensor, train: bool) -> Tensor:
        return batchnorm1d(x, self.gamma, self.beta, self.stats, train, self.momentum, self.eps)

    def params(self) -> list[Tensor]:
        return [self.gamma, self.beta]

    def arrays(self) -> list[np.ndarray]:
        return [self.gamma.data, self.beta.data, self.stats.mean, self.stats.var]


def _init_conv(rng, shape, with_bias: bool, stride: int, padding: int, transposed=False) -> Conv:
    kernel = Tensor(rng.normal(0.0, INIT_STD, shape).astype(np.float32), requires_grad=True)
    n_bias = shape[1] if transposed else shape[0]
    bias = Tensor(np.zeros(n_bias, dtype=np.float32), requires_grad=True) if with_bias else None
    cls = ConvT if transposed else Conv
    return cls(kernel, bias, stride, padding)


def _init_bn(rng, channels: int, momentum: float, eps: float) -> BatchNorm:
    gamma = Tensor(rng.normal(1.0, INIT_STD, channels).astype(np.float32), requires_grad=True)
    beta = Tensor(np.zeros(channels, dtype=np.float32), requires_grad=True)
    return BatchNorm(gamma, beta, momentum, eps)


@dataclass
class Arch:
    """Shared architecture hyperparameters for all three sub-networks."""

    input_channels: int
    input_len: int  # padded network length, a multiple of 2**n_down
    latent_dim: int
    base_channels: int = 16
    n_down: int = 4
    bn_momentum: float = 0.1
    bn_eps: float = 1e-5

    def __post_init__(self):
        if self.n_down < 1:
            raise UsageError(f"n_down must be >= 1, got {self.n_down}")
        if self.input_len % (1 << self.n_down) != 0 or self.input_len < (1 << self.n_down):
            raise UsageError(
                f"network input length {self.input_len} must be a positive multiple of 2^{self.n_down}"
            )
        if min(self.input_channels, self.latent_dim, self.base_channels) < 1:
            raise UsageError("channels and latent_dim must be >= 1")

    @property
    def bottom_len(self) -> int:
        return self.input_len >> self.n_down

    @property
    def top_channels(self) -> int:
        return self.base_channels << (self.n_down - 1)

    def stage_channels(self) -> list[int]:
        return [self.base_channels << i for i in range(self.n_down)]


class Encoder:
    """Downscaling pyramid ending in a latent projection."""

    def __init__(self, arch: Arch, rng):
        self.arch = arch
        self.stages = []
        in_ch = arch.input_channels
        for i, out_ch in enumerate(arch.stage_channels()):
            conv = _init_conv(rng, (out_ch, in_ch, KERNEL_SIZE), with_bias=i == 0, stride=2, padding=1)
            bn = None if i == 0 else _init_bn(rng, out_ch, arch.bn_momentum, arch.bn_eps)
            self.stages.append((conv, bn))
            in_ch = out_ch
        self.head = _init_conv(rng, (arch.latent_dim, in_ch, arch.bottom_len), with_bias=True, stride=1, padding=0)

    def forward(self, x: Tensor, train: bool) -> Tensor:
        h = self._body(x, train)
        z = self.head(h)
        return z.reshape((x.shape[0], self.arch.latent_dim))

    def _body(self, x: Tensor, train: bool) -> Tensor:
        h = x
        for conv, bn in self.stages:
            h = conv(h)
            if bn is not None:
                h = bn(h, train)
            h = leaky_relu(h, LEAKY_SLOPE)
        return h

    def params(self) -> list[Tensor]:
        out = []
        for conv, bn in self.stages:
            out += conv.params()
            if bn is not None:
                out += bn.params()
        return out + self.head.params()

    def arrays(self) -> list[np.ndarray]:
        out = []
        for conv, bn in self.stages:
            out += conv.arrays()
            if bn is not None:
                out += bn.arrays()
        return out + self.head.arrays()

    def layer_shapes(self) -> list[tuple]:
        shapes = [(conv.kernel.shape, bn is not None) for conv, bn in self.stages]
        return shapes + [(self.head.kernel.shape, False)]


class Decoder:
    """Mirror of the encoder: latent projection then upscaling pyramid."""

    def __init__(self, arch: Arch, rng):
        self.arch = arch
        self.head = _init_conv(
            rng, (arch.latent_dim, arch.top_channels, arch.bottom_len),
            with_bias=False, stride=1, padding=0, transposed=True,
        )
        self.head_bn = _init_bn(rng, arch.top_channels, arch.bn_momentum, arch.bn_eps)
        self.stages = []
        channels = arch.stage_channels()
        for i in range(arch.n_down - 1, 0, -1):
            conv = _init_conv(
                rng, (channels[i], channels[i - 1], KERNEL_SIZE),
                with_bias=False, stride=2, padding=1, transposed=True,
            )
            bn = _init_bn(rng, channels[i - 1], arch.bn_momentum, arch.bn_eps)
            self.stages.append((conv, bn))
        self.final = _init_conv(
            rng, (arch.base_channels, arch.input_channels, KERNEL_SIZE),
            with_bias=True, stride=2, padding=1, transposed=True,
        )

    def forward(self, z: Tensor, train: bool) -> Tensor:
        h = z.reshape((z.shape[0], self.arch.latent_dim, 1))
        h = relu(self.head_bn(self.head(h), train))
        for conv, bn in self.stages:
            h = relu(bn(conv(h), train))
        return self.final(h)  # plain affine output, deliberately unbounded

    def params(self) -> list[Tensor]:
        out = self.head.params() + self.head_bn.params()
        for conv, bn in self.stages:
            out += conv.params() + bn.params()
        return out + self.final.params()

    def arrays(self) -> list[np.ndarray]:
        out = self.head.arrays() + self.head_bn.arrays()
        for conv, bn in self.stages:
            out += conv.arrays() + bn.arrays()
        return out + self.final.arrays()


class Generator:
    """Encoder-decoder-encoder; both encoders share architecture, not weights."""

    def __init__(self, arch: Arch, rng):
        self.arch = arch
        self.encoder1 = Encoder(arch, rng)
        self.decoder = Decoder(arch, rng)
        self.encoder2 = Encoder(arch, rng)

    @property
    def latent_dim(self) -> int:
        return self.arch.latent_dim

    @property
    def input_len(self) -> int:
        return self.arch.input_len

    @property
    def input_channels(self) -> int:
        return self.arch.input_channels

    def params(self) -> list[Tensor]:
        return self.encoder1.params() + self.decoder.params() + self.encoder2.params()

    def arrays(self) -> list[np.ndarray]:
        return self.encoder1.arrays() + self.decoder.arrays() + self.encoder2.arrays()


class Discriminator:
    """Encoder pyramid with a sigmoid head; exposes its penultimate activation."""

    def __init__(self, arch: Arch, rng):
        self.arch = arch
        self.encoder = Encoder(Arch(
            input_channels=arch.input_channels,
            input_len=arch.input_len,
            latent_dim=1,  # head maps to a single real/fake logit
            base_channels=arch.base_channels,
            n_down=arch.n_down,
            bn_momentum=arch.bn_momentum,
            bn_eps=arch.bn_eps,
        ), rng)
        self.feature_layer_index = arch.n_down - 1  # activation entering the head

    def params(self) -> list[Tensor]:
        return self.encoder.params()

    def arrays(self) -> list[np.ndarray]:
        return self.encoder.arrays()


def _check_input(x: Tensor, arch: Arch, who: str):
    if x.data.ndim != 3 or x.shape[1] != arch.input_channels or x.shape[2] != arch.input_len:
        raise DimensionError(
            f"{who} expects [batch, {arch.input_channels}, {arch.input_len}], got {x.shape}"
        )


def generator_forward(g: Generator, x: Tensor, train: bool = False) -> tuple[Tensor, Tensor, Tensor]:
    """Return (x_hat, z, z_hat) for a [batch, C, L] input."""
    _check_input(x, g.arch, "generator")
    z = g.encoder1.forward(x, train)
    x_hat = g.decoder.forward(z, train)
    z_hat = g.encoder2.forward(x_hat, train)
    return x_hat, z, z_hat


def discriminator_forward(d: Discriminator, x: Tensor, train: bool = False) -> tuple[Tensor, Tensor]:
    """Return (p, f): real/fake probability per sample and flattened features."""
    _check_input(x, d.arch, "discriminator")
    h = d.encoder._body(x, train)
    batch = x.shape[0]
    f = h.reshape((batch, h.size // batch))
    logit = d.encoder.head(h)
    p = sigmoid(logit.reshape((batch,)))
    return p, f


def fraud_loss(d: Discriminator, x_hat: Tensor, train: bool = False) -> Tensor:
    """Binary cross entropy pushing the discriminator to call fakes real."""
    p, _ = discriminator_forward(d, x_hat, train)
    return bce_loss(p, Tensor(np.ones(p.shape, dtype=np.float32)))


def apparent_loss(x: Tensor, x_hat: Tensor) -> Tensor:
    """Mean L1 distance between an input and its reconstruction."""
    return l1_mean(x, x_hat)


def latent_loss(z: Tensor, z_hat: Tensor) -> Tensor:
    """Mean squared distance between the two latent codes."""
    return l2_mean(z, z_hat)


def generator_loss(weights: LossWeights, l_f: Tensor, l_a: Tensor, l_l: Tensor) -> Tensor:
    return weights.w_fraud * l_f + weights.w_apparent * l_a + weights.w_latent * l_l


def feature_matching_loss(d: Discriminator, x_real: Tensor, x_hat: Tensor, train: bool = False) -> Tensor:
    """Mean squared distance of discriminator features of real vs generated."""
    _, f_real = discriminator_forward(d, x_real, train)
    _, f_hat = discriminator_forward(d, x_hat, train)
    return l2_mean(f_real, f_hat)


class AnomalyScore(NamedTuple):
    score: float
    l_apparent: float
    l_latent: float


def anomaly_score(g: Generator, x: Tensor) -> AnomalyScore:
    """Score one prepared sample in eval mode: apparent plus latent loss."""
    x_hat, z, z_hat = generator_forward(g, x, train=False)
    l_a = apparent_loss(x, x_hat).item()
    l_l = latent_loss(z, z_hat).item()
    return AnomalyScore(score=l_a + l_l, l_apparent=l_a, l_latent=l_l)


# -- input pipeline ---------------------------------------------------------


@dataclass
class InputPipeline:
    """Turns raw subsamples into standardized, padded network inputs.

    mode "raw" feeds the subsample as one channel; mode "features" feeds the
    16-channel statistical feature sequence. Standardization statistics come
    from the training set and travel with the checkpoint.
    """

    mode: str
    subsample_len: int
    net_len: int
    standardizer: Standardizer
    window_len: int = 0  # features mode only
    n_windows: int = 0

    def __post_init__(self):
        if self.mode not in ("raw", "features"):
            raise UsageError(f"pipeline mode must be 'raw' or 'features', got {self.mode!r}")

    @property
    def channels(self) -> int:
        return 1 if self.mode == "raw" else len(FEATURE_NAMES)

    @property
    def seq_len(self) -> int:
        return self.subsample_len if self.mode == "raw" else self.n_windows

    def prepare(self, values: np.ndarray) -> np.ndarray:
        """One subsample's values -> standardized [C, net_len] float32 array."""
        if values.size != self.subsample_len:
            raise DimensionError(f"expected subsample of {self.subsample_len} samples, got {values.size}")
        if self.mode == "raw":
            rows = np.asarray(values, dtype=np.float64)[None, :]
        else:
            rows = feature_matrix(values, self.window_len, self.n_windows)
        rows = self.standardizer.transform(rows)
        pad = self.net_len - rows.shape[1]
        if pad:
            rows = np.pad(rows, ((0, 0), (0, pad)), mode="reflect")
        return rows.astype(np.float32)

    def prepare_batch(self, subsamples) -> np.ndarray:
        return np.stack([self.prepare(s.values) for s in subsamples])

    def restore(self, net_output: np.ndarray) -> np.ndarray:
        """Undo standardization and padding of one [C, net_len] network output."""
        return self.standardizer.inverse(net_output.astype(np.float64))[:, : self.seq_len]


def padded_length(seq_len: int, n_down: int) -> int:
    block = 1 << n_down
    return ((seq_len + block - 1) // block) * block


def fit_pipeline(train_subsamples, mode: str, subsample_len: int, window_len: int, n_down: int) -> InputPipeline:
    """Fit train-set standardization stats and fix the padded network length."""
    if not train_subsamples:
        raise UsageError("cannot fit an input pipeline on an empty training set")
    if mode == "raw":
        rows = np.concatenate([np.asarray(s.values, dtype=np.float64) for s in train_subsamples])[None, :]
        seq_len = subsample_len
        n_windows = 0
    elif mode == "features":
        if window_len < 2 or window_len > subsample_len:
            raise UsageError(f"feature window length {window_len} incompatible with subsample {subsample_len}")
        n_windows = subsample_len // window_len
        mats = [feature_matrix(s.values, window_len, n_windows) for s in train_subsamples]
        rows = np.concatenate(mats, axis=1)
        seq_len = n_windows
    else:
        raise UsageError(f"pipeline mode must be 'raw' or 'features', got {mode!r}")

    net_len = padded_length(seq_len, n_down)
    if net_len - seq_len >= seq_len:
        raise UsageError(
            f"sequence length {seq_len} too short to reflect-pad to {net_len}; "
            f"reduce n_down or enlarge the input"
        )
    return InputPipeline(
        mode=mode,
        subsample_len=subsample_len,
        net_len=net_len,
        standardizer=Standardizer.fit(rows),
        window_len=window_len if mode == "features" else 0,
        n_windows=n_windows,
    )


@dataclass
class ModelState:
    """Everything needed to score new data: networks plus input pipeline."""

    generator: Generator
    discriminator: Discriminator
    pipeline: InputPipeline

    def arrays(self) -> list[np.ndarray]:
        return self.generator.arrays() + self.discriminator.arrays()

    def params(self) -> list[Tensor]:
        return self.generator.params() + self.discriminator.params()


def build_model(
    pipeline: InputPipeline,
    latent_dim: int,
    base_channels: int,
    n_down: int,
    seed: int,
    bn_momentum: float = 0.1,
    bn_eps: float = 1e-5,
) -> ModelState:
    """Seeded construction of generator + discriminator behind a pipeline."""
    arch = Arch(
        input_channels=pipeline.channels,
        input_len=pipeline.net_len,
        latent_dim=latent_dim,
        base_channels=base_channels,
        n_down=n_down,
        bn_momentum=bn_momentum,
        bn_eps=bn_eps,
    )
    rng = np.random.default_rng(seed)
    return ModelState(
        generator=Generator(arch, rng),
        discriminator=Discriminator(arch, rng),
        pipeline=pipeline,
    )
