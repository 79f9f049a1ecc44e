"""Model families assembled from the autodiff layers.

All four families share a conv trunk whose channel counts and kernel/stride
pattern are fixed; at the full-scale trace length of 6560 the per-stage
shapes match the reference layouts exactly. For other trace lengths the
pattern is kept and only the tail head stages collapse to shorter kernels
once the running length drops below the nominal kernel size. The signal
reconstructor mirrors the encoder: its upsampling targets replay the
encoder's intermediate lengths in reverse (resolving the published
feature-length inconsistency in favor of the actual encoder output), and
its convolutions are length-preserving (kernel 3, stride 1, padding 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gprda.errors import ShapeError
from gprda.nn import engine
from gprda.nn.engine import Tensor
from gprda.nn.store import ParameterStore, kaiming_uniform

# (channels, kernel, stride) patterns at full scale
EXTRACTOR_STAGES = ((32, 5, 5), (64, 5, 5), (128, 4, 4), (256, 4, 4))
ESTIMATOR_STAGES = ((512, 3, 3), (10240, 3, 3))
DISCRIMINATOR_STAGES = ((512, 3, 3), (1024, 3, 3))
RECONSTRUCTOR_CHANNELS = (128, 64, 32, 1)
EMBEDDING_HIDDEN = 64


@dataclass(frozen=True)
class ConvSpec:
    name: str
    c_in: int
    c_out: int
    kernel: int
    stride: int
    padding: int
    length_in: int
    length_out: int


@dataclass(frozen=True)
class LinearSpec:
    name: str
    f_in: int
    f_out: int


def _plan_chain(prefix: str, c_in: int, length: int, stages, clamp: bool) -> list[ConvSpec]:
    """Resolve a conv chain; with clamp=True short tails shrink the kernel."""
    specs = []
    for i, (c_out, kernel, stride) in enumerate(stages):
        if length < kernel:
            if not clamp:
                raise ShapeError(
                    f"trace too short: stage {prefix}{i} needs length >= {kernel}, got {length}"
                )
            kernel = length
            stride = min(stride, kernel)
        f = (length - kernel) // stride + 1
        specs.append(ConvSpec(f"{prefix}{i}", c_in, c_out, kernel, stride, 0, length, f))
        c_in, length = c_out, f
    return specs


def _init_conv(store: ParameterStore, rng_seq, spec: ConvSpec, slope: float):
    rng = np.random.default_rng(rng_seq.spawn(1)[0])
    w = kaiming_uniform(rng, (spec.c_out, spec.c_in, spec.kernel),
                        fan_in=spec.c_in * spec.kernel, slope=slope)
    store.add(spec.name + ".w", w)
    store.add(spec.name + ".b", np.zeros(spec.c_out))


def _init_linear(store: ParameterStore, rng_seq, spec: LinearSpec, slope: float):
    rng = np.random.default_rng(rng_seq.spawn(1)[0])
    w = kaiming_uniform(rng, (spec.f_out, spec.f_in), fan_in=spec.f_in, slope=slope)
    store.add(spec.name + ".w", w)
    store.add(spec.name + ".b", np.zeros(spec.f_out))


def _run_convs(store: ParameterStore, specs, x: Tensor, slope: float) -> Tensor:
    for spec in specs:
        x = engine.conv1d(x, store[spec.name + ".w"], store[spec.name + ".b"],
                          stride=spec.stride, padding=spec.padding)
        x = engine.leaky_relu(x, slope)
    return x


class Cnn1dRegressor:
    """Six conv stages, flatten, and a linear head to M outputs."""

    def __init__(self, n: int, m: int, seed: int, slope: float = 0.01):
        self.n, self.m, self.slope = n, m, slope
        trunk = _plan_chain("conv", 1, n, EXTRACTOR_STAGES, clamp=False)
        tail_len = trunk[-1].length_out
        tail = _plan_chain("conv_tail", trunk[-1].c_out, tail_len, ESTIMATOR_STAGES,
                           clamp=True)
        self.conv_specs = trunk + tail
        flat = tail[-1].c_out * tail[-1].length_out
        self.head = LinearSpec("head", flat, m)
        self.store = ParameterStore()
        seq = np.random.SeedSequence(seed)
        for spec in self.conv_specs:
            _init_conv(self.store, seq, spec, slope)
        _init_linear(self.store, seq, self.head, slope)

    def forward(self, x: Tensor) -> Tensor:
        h = _run_convs(self.store, self.conv_specs, x, self.slope)
        return engine.linear(engine.flatten(h), self.store["head.w"], self.store["head.b"])

    def stage_shapes(self) -> list[tuple[int, int]]:
        return [(s.c_out, s.length_out) for s in self.conv_specs]

    def hyperparameters(self) -> dict:
        return {"family": "cnn", "n": self.n, "m": self.m, "slope": self.slope}


class DannModel:
    """Feature extractor with estimator and discriminator branches.

    An optional signal reconstructor turns the model into one of the two
    physics-guided variants: variant 1 decodes the latent features alone,
    variant 2 first fuses a parameter embedding into the features.
    """

    def __init__(self, n: int, m: int, seed: int, slope: float = 0.01,
                 reconstructor: int | None = None):
        if reconstructor not in (None, 1, 2):
            raise ShapeError("reconstructor variant must be 1 or 2")
        self.n, self.m, self.slope = n, m, slope
        self.variant = reconstructor

        self.extractor_specs = _plan_chain("extractor", 1, n, EXTRACTOR_STAGES, clamp=False)
        feat_c = self.extractor_specs[-1].c_out
        feat_len = self.extractor_specs[-1].length_out

        self.estimator_specs = _plan_chain("estimator", feat_c, feat_len,
                                           ESTIMATOR_STAGES, clamp=True)
        est_flat = self.estimator_specs[-1].c_out * self.estimator_specs[-1].length_out
        self.estimator_head = LinearSpec("estimator_head", est_flat, m)

        self.discriminator_specs = _plan_chain("discriminator", feat_c, feat_len,
                                               DISCRIMINATOR_STAGES, clamp=True)
        disc_flat = (self.discriminator_specs[-1].c_out
                     * self.discriminator_specs[-1].length_out)
        self.discriminator_head = LinearSpec("discriminator_head", disc_flat, 2)

        self.recon_specs: list[ConvSpec] = []
        self.recon_targets: list[int] = []
        self.embedding: list[LinearSpec] = []
        if reconstructor is not None:
            lengths = [s.length_in for s in reversed(self.extractor_specs)]  # ends at n
            c_in = feat_c
            for i, (target_len, c_out) in enumerate(zip(lengths, RECONSTRUCTOR_CHANNELS)):
                self.recon_targets.append(target_len)
                self.recon_specs.append(
                    ConvSpec(f"reconstructor{i}", c_in, c_out, 3, 1, 1,
                             target_len, target_len))
                c_in = c_out
            if reconstructor == 2:
                self.embedding = [
                    LinearSpec("embedding0", m, EMBEDDING_HIDDEN),
                    LinearSpec("embedding1", EMBEDDING_HIDDEN, feat_c),
                ]

        self.store = ParameterStore()
        seq = np.random.SeedSequence(seed)
        for spec in self.extractor_specs:
            _init_conv(self.store, seq, spec, slope)
        for spec in self.estimator_specs:
            _init_conv(self.store, seq, spec, slope)
        _init_linear(self.store, seq, self.estimator_head, slope)
        for spec in self.discriminator_specs:
            _init_conv(self.store, seq, spec, slope)
        _init_linear(self.store, seq, self.discriminator_head, slope)
        for spec in self.recon_specs:
            _init_conv(self.store, seq, spec, slope)
        for spec in self.embedding:
            _init_linear(self.store, seq, spec, slope)

    # ---------------------------------------------------------- branches

    def features(self, x: Tensor) -> Tensor:
        return _run_convs(self.store, self.extractor_specs, x, self.slope)

    def estimate(self, feats: Tensor) -> Tensor:
        h = _run_convs(self.store, self.estimator_specs, feats, self.slope)
        return engine.linear(engine.flatten(h), self.store["estimator_head.w"],
                             self.store["estimator_head.b"])

    def discriminate(self, feats: Tensor) -> Tensor:
        h = _run_convs(self.store, self.discriminator_specs, feats, self.slope)
        return engine.linear(engine.flatten(h), self.store["discriminator_head.w"],
                             self.store["discriminator_head.b"])

    def reconstruct(self, feats: Tensor, estimates: Tensor | None = None) -> Tensor:
        """Decode features back to a full-length trace.

        Variant 2 requires the estimator output; the embedding is summed
        per channel into the features before decoding.
        """
        if self.variant is None:
            raise ShapeError("model was built without a reconstructor")
        h = feats
        if self.variant == 2:
            if estimates is None:
                raise ShapeError("variant 2 reconstruction needs parameter estimates")
            e = estimates
            e = engine.leaky_relu(
                engine.linear(e, self.store["embedding0.w"], self.store["embedding0.b"]),
                self.slope)
            e = engine.linear(e, self.store["embedding1.w"], self.store["embedding1.b"])
            h = engine.sum_fuse(h, e)
        last = len(self.recon_specs) - 1
        for i, spec in enumerate(self.recon_specs):
            h = engine.upsample_linear(h, self.recon_targets[i])
            h = engine.conv1d(h, self.store[spec.name + ".w"], self.store[spec.name + ".b"],
                              stride=1, padding=1)
            if i != last:
                h = engine.leaky_relu(h, self.slope)
        return h

    # ------------------------------------------------------------- infos

    def feature_shape(self) -> tuple[int, int]:
        last = self.extractor_specs[-1]
        return (last.c_out, last.length_out)

    def stage_shapes(self, which: str) -> list[tuple[int, int]]:
        specs = {"extractor": self.extractor_specs, "estimator": self.estimator_specs,
                 "discriminator": self.discriminator_specs,
                 "reconstructor": self.recon_specs}[which]
        return [(s.c_out, s.length_out) for s in specs]

    def parameter_group(self, which: str) -> list[str]:
        """Parameter names belonging to one branch, in declaration order."""
        prefixes = {
            "extractor": ("extractor",),
            "estimator": ("estimator",),
            "discriminator": ("discriminator",),
            "reconstructor": ("reconstructor", "embedding"),
        }[which]
        return [n for n in self.store.names() if n.startswith(prefixes)]

    def hyperparameters(self) -> dict:
        return {"family": "dann", "n": self.n, "m": self.m, "slope": self.slope,
                "reconstructor": self.variant}


def build_cnn(n: int, m: int, seed: int = 0, slope: float = 0.01) -> Cnn1dRegressor:
    return Cnn1dRegressor(n, m, seed, slope)


def build_dann(n: int, m: int, seed: int = 0, slope: float = 0.01) -> DannModel:
    return DannModel(n, m, seed, slope, reconstructor=None)


def build_phydann(variant: int, n: int, m: int, seed: int = 0,
                  slope: float = 0.01) -> DannModel:
    return DannModel(n, m, seed, slope, reconstructor=variant)
