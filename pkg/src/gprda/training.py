"""Training procedures: supervised conv regression, adversarial domain
adaptation, and the physics-guided reconstruction variants.

Gradient routing follows the standard adversarial wiring: the reversal
layer between the extractor and the discriminator negates gradients, and
the discriminator loss enters the total scaled by the ramped adversary
weight. The extractor therefore sees the regression gradient minus the
weighted discriminator gradient, the estimator sees only the regression
gradient, and the discriminator update is itself scaled by the adversary
weight, so freezing the weight at zero leaves the discriminator untouched
and reduces the run to plain supervised training.

Batch pairing draws one source batch and one equally sized target batch per
iteration; iterations per epoch = floor(n_source / batch). Target batches
sample with replacement whenever the target set is smaller than a batch.
All randomness derives from split seed streams, so runs are bit-reproducible
and a target stream never perturbs the source stream.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from gprda.architectures import Cnn1dRegressor, DannModel
from gprda.errors import ConfigError
from gprda.nn import engine
from gprda.nn.engine import DOMAIN_SOURCE, DOMAIN_TARGET, Tensor
from gprda.nn.optim import lambda_schedule, lr_schedule, make_optimizer


@dataclass
class TrainConfig:
    epochs: int = 60
    batch_size: int = 32
    lr0: float = 1e-3
    lr_decay: float = 0.9
    seed: int = 0
    optimizer: str = "adam"
    leaky_slope: float = 0.01
    reconstruction_weight: float = 1.0
    lambda_override: float | None = None

    def validate(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")
        if not 0.0 < self.lr_decay <= 1.0:
            raise ConfigError("lr decay must lie in (0, 1]")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class TrainReport:
    """Per-epoch loss means plus the adversary-weight trace."""

    regression: list[float] = field(default_factory=list)
    adversarial: list[float] = field(default_factory=list)
    reconstruction: list[float] = field(default_factory=list)
    lambdas: list[float] = field(default_factory=list)
    wall_time: float = 0.0

    def rows(self) -> list[dict]:
        return [
            {
                "epoch": i,
                "regression": self.regression[i],
                "adversarial": self.adversarial[i],
                "reconstruction": self.reconstruction[i],
                "lambda": self.lambdas[i],
            }
            for i in range(len(self.regression))
        ]


def _check_batches(n_source: int, batch: int) -> int:
    if n_source < batch:
        raise ConfigError(
            f"dataset of {n_source} traces is smaller than one batch of {batch}")
    return n_source // batch


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    source_seq, target_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(source_seq), np.random.default_rng(target_seq)


def train_cnn(model: Cnn1dRegressor, x_source: np.ndarray, y_source: np.ndarray,
              cfg: TrainConfig) -> TrainReport:
    """Minimize mean squared error over mini-batches of labeled source data."""
    cfg.validate()
    iters = _check_batches(x_source.shape[0], cfg.batch_size)
    rng, _ = _streams(cfg.seed)
    opt = make_optimizer(cfg.optimizer, model.store)
    report = TrainReport()
    start = time.perf_counter()
    for epoch in range(cfg.epochs):
        lr = lr_schedule(cfg.lr0, epoch, cfg.lr_decay)
        perm = rng.permutation(x_source.shape[0])
        losses = []
        for b in range(iters):
            idx = perm[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            model.store.zero_grad()
            loss = engine.mse_loss(model.forward(Tensor(x_source[idx])), y_source[idx])
            loss.backward()
            opt.step(lr)
            losses.append(float(loss.data))
        report.regression.append(float(np.mean(losses)))
        report.adversarial.append(0.0)
        report.reconstruction.append(0.0)
        report.lambdas.append(0.0)
    report.wall_time = time.perf_counter() - start
    return report


def train_dann(model: DannModel, x_source: np.ndarray, y_source: np.ndarray,
               x_target: np.ndarray, cfg: TrainConfig,
               adversary: bool = True) -> TrainReport:
    """Adversarial adaptation: regression on source, domain confusion on both.

    With adversary=False the discriminator branch is never built and the run
    is plain supervised training of extractor plus estimator over the same
    source batch stream (used to verify the gradient wiring).
    """
    return _train_adversarial(model, x_source, y_source, x_target, cfg,
                              adversary=adversary, reconstruct=False)


def train_phydann(model: DannModel, x_source: np.ndarray, y_source: np.ndarray,
                  x_target: np.ndarray, cfg: TrainConfig) -> TrainReport:
    """Adversarial adaptation plus trace reconstruction on both domains.

    Variant 1 decodes the latent features alone; variant 2 additionally
    fuses the predicted parameters (detached, so the estimator still trains
    on the regression objective only).
    """
    if model.variant is None:
        raise ConfigError("model has no reconstructor; use train_dann")
    return _train_adversarial(model, x_source, y_source, x_target, cfg,
                              adversary=True, reconstruct=True)


def _train_adversarial(model: DannModel, x_source, y_source, x_target, cfg,
                       adversary: bool, reconstruct: bool) -> TrainReport:
    cfg.validate()
    if adversary and x_target.shape[0] == 0:
        raise ConfigError("adversarial training needs a non-empty target set")
    iters = _check_batches(x_source.shape[0], cfg.batch_size)
    total_iters = max(cfg.epochs * iters, 1)
    rng_src, rng_tgt = _streams(cfg.seed)
    opt = make_optimizer(cfg.optimizer, model.store)
    n_src, n_tgt = x_source.shape[0], x_target.shape[0]
    report = TrainReport()
    start = time.perf_counter()
    step = 0
    for epoch in range(cfg.epochs):
        lr = lr_schedule(cfg.lr0, epoch, cfg.lr_decay)
        perm = rng_src.permutation(n_src)
        ep_reg, ep_adv, ep_rec = [], [], []
        epoch_lam = None
        for b in range(iters):
            lam = (cfg.lambda_override if cfg.lambda_override is not None
                   else lambda_schedule(step, total_iters))
            if epoch_lam is None:
                epoch_lam = lam
            idx = perm[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            xs = Tensor(x_source[idx])

            model.store.zero_grad()
            feats_s = model.features(xs)
            est_s = model.estimate(feats_s)
            loss_reg = engine.mse_loss(est_s, y_source[idx])
            total = loss_reg
            loss_adv_val = 0.0
            loss_rec_val = 0.0

            if adversary:
                tidx = rng_tgt.choice(n_tgt, size=cfg.batch_size,
                                      replace=n_tgt < cfg.batch_size)
                feats_t = model.features(Tensor(x_target[tidx]))
                logits_s = model.discriminate(engine.gradient_reversal(feats_s, 1.0))
                logits_t = model.discriminate(engine.gradient_reversal(feats_t, 1.0))
                loss_adv = engine.add(engine.domain_loss(logits_s, DOMAIN_SOURCE),
                                      engine.domain_loss(logits_t, DOMAIN_TARGET))
                loss_adv_val = float(loss_adv.data)
                total = total + lam * loss_adv

                if reconstruct:
                    if model.variant == 2:
                        rec_s = model.reconstruct(feats_s, est_s.detach())
                        rec_t = model.reconstruct(feats_t,
                                                  model.estimate(feats_t).detach())
                    else:
                        rec_s = model.reconstruct(feats_s)
                        rec_t = model.reconstruct(feats_t)
                    loss_rec = 0.5 * (engine.mse_loss(rec_s, x_source[idx])
                                      + engine.mse_loss(rec_t, x_target[tidx]))
                    loss_rec_val = float(loss_rec.data)
                    if cfg.reconstruction_weight != 0.0:
                        total = total + cfg.reconstruction_weight * loss_rec

            total.backward()
            opt.step(lr)
            step += 1
            ep_reg.append(float(loss_reg.data))
            ep_adv.append(loss_adv_val)
            ep_rec.append(loss_rec_val)
        report.regression.append(float(np.mean(ep_reg)))
        report.adversarial.append(float(np.mean(ep_adv)))
        report.reconstruction.append(float(np.mean(ep_rec)))
        report.lambdas.append(0.0 if epoch_lam is None else epoch_lam)
    report.wall_time = time.perf_counter() - start
    return report


def predict(model, x: np.ndarray, batch: int = 64) -> np.ndarray:
    """Batched inference; returns (n, M) outputs in normalized label units."""
    outs = []
    for i in range(0, x.shape[0], batch):
        xb = Tensor(x[i : i + batch])
        if isinstance(model, DannModel):
            outs.append(model.estimate(model.features(xb)).data)
        else:
            outs.append(model.forward(xb).data)
    return np.concatenate(outs, axis=0)


def discriminator_accuracy(model: DannModel, x_source: np.ndarray,
                           x_target: np.ndarray, batch: int = 64) -> float:
    """Fraction of scans whose domain the discriminator gets right."""
    correct = 0
    for x, domain in ((x_source, DOMAIN_SOURCE), (x_target, DOMAIN_TARGET)):
        for i in range(0, x.shape[0], batch):
            logits = model.discriminate(model.features(Tensor(x[i : i + batch])))
            correct += int(np.sum(np.argmax(logits.data, axis=1) == domain))
    return correct / (x_source.shape[0] + x_target.shape[0])
