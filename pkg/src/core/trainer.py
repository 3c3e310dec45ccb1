"""Training loops for f-AAE and the GAN, AAE and BiGAN baselines.

Each step draws one latent batch and runs a fixed sequence of phases. A
phase does its own forward pass, backpropagates one loss into the
networks it updates (the others are frozen), and applies one Adam update
with that phase's own moment state:

    faae   reencode (G, E) -> disc (D) -> gen (G)
    gan    disc (D) -> gen (G)
    aae    recon (G, E) -> latent_disc (D) -> encoder_adv (E)
    bigan  joint_disc (D) -> gen_enc (G, E)
"""
from __future__ import annotations

import math
from contextlib import ExitStack, contextmanager
from typing import Callable, Iterator, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from src.config.run_config import render_config
from src.core import ops
from src.core.builders import (
    build_discriminator,
    build_encoder,
    build_generator,
    build_joint_discriminator,
    build_latent_discriminator,
)
from src.core.checkpoint import Checkpoint
from src.core.datasets import Dataset, make_dataset
from src.core.network import Network
from src.core.objectives import (
    bigan_flipped_loss,
    discriminator_value,
    joint_pair,
    nonsaturating_loss,
    reconstruction_loss,
    reencoding_loss,
)
from src.core.optim import AdamState, adam_update, decayed_lr
from src.core.priors import Rng, sample_unit_sphere_batch
from src.core.tensor import Tensor, as_tensor, no_grad, reset_graph
from src.models.base import DecayMode, Objective
from src.models.config import TrainConfig
from src.models.outputs import EpochRecord, LossReport, StepRecord
from src.models.specs import ModelSpec
from src.utils.errors import ConfigError, DomainError, NumericalError, SpecError
from src.utils.logger import get_logger

PHASES: dict[Objective, tuple[str, ...]] = {
    Objective.FAAE: ("reencode", "disc", "gen"),
    Objective.GAN: ("disc", "gen"),
    Objective.AAE: ("recon", "latent_disc", "encoder_adv"),
    Objective.BIGAN: ("joint_disc", "gen_enc"),
}


class StepRates(NamedTuple):
    """Decayed learning rates in force for one step"""
    lr_g: float
    lr_d: float
    lr_e: float


class TrainResult(BaseModel):
    """Metrics trace of a run"""
    trace: list[StepRecord] = Field(default_factory=list)
    epochs: list[EpochRecord] = Field(default_factory=list)

    @property
    def steps(self) -> int:
        return len(self.trace)


def new_states(objective: Objective) -> dict[str, AdamState]:
    return {phase: AdamState() for phase in PHASES[objective]}


def _apply(
    phase: str,
    loss: Tensor,
    groups: Sequence[tuple[Network, float]],
    state: AdamState,
    step: int,
) -> float:
    """Backpropagate `loss` and apply one Adam update to the grouped networks"""
    value = loss.item()
    if not math.isfinite(value):
        reset_graph()
        raise NumericalError("non-finite loss", step=step, phase=phase)

    params: dict[str, Tensor] = {}
    rates: dict[str, float] = {}
    for net, lr in groups:
        for key, tensor in net.params.items():
            full = f"{net.name}/{key}"
            params[full] = tensor
            rates[full] = lr
            tensor.zero_grad()

    if loss.requires_grad:
        loss.backward()
    reset_graph()
    try:
        adam_update(params, {k: t.grad for k, t in params.items()}, state, rates)
    except NumericalError as e:
        raise NumericalError("non-finite gradient", step=step, phase=phase, parameter=e.parameter) from e
    return value


@contextmanager
def _phase(phase: str, step: int, *frozen: Network) -> Iterator[None]:
    """Run one phase with `frozen` networks excluded from updates.

    Non-finite activations reach a log before the loss exists, so the domain
    failure is reported as the phase's numerical failure.
    """
    with ExitStack() as stack:
        for net in frozen:
            stack.enter_context(net.frozen())
        try:
            yield
        except DomainError as e:
            reset_graph()
            raise NumericalError(f"non-finite activations: {e}", step=step, phase=phase) from e


def _discriminator_phase(
    G: Network, D: Network, x: Tensor, z: Tensor, state: AdamState, lr_d: float, step: int, phase: str = "disc"
) -> float:
    with _phase(phase, step, G):
        adv_d = discriminator_value(D(x), D(G(z)))
        _apply(phase, ops.negate(adv_d), [(D, lr_d)], state, step)
    return adv_d.item()


def _generator_phase(
    G: Network, D: Network, z: Tensor, weight_adv: float, state: AdamState, lr_g: float, step: int
) -> float:
    with _phase("gen", step, D):
        adv_g = nonsaturating_loss(D(G(z)))
        _apply("gen", ops.mul(as_tensor(weight_adv), adv_g), [(G, lr_g)], state, step)
    return adv_g.item()


def faae_step(
    G: Network,
    E: Network,
    D: Network,
    x_batch: np.ndarray | Tensor,
    z_batch: np.ndarray | Tensor,
    cfg: TrainConfig,
    states: dict[str, AdamState],
    alpha: float,
    rates: StepRates,
    step: int = 0,
) -> LossReport:
    """Re-encoding phase on (G, E), then D, then G's adversarial update"""
    x, z = as_tensor(x_batch), as_tensor(z_batch)
    reset_graph()

    with _phase("reencode", step, D):
        reenc = reencoding_loss(z, E(G(z)), cfg.loss_norm)
        _apply("reencode", ops.mul(as_tensor(alpha), reenc), [(G, rates.lr_g), (E, rates.lr_e)], states["reencode"], step)

    adv_d = _discriminator_phase(G, D, x, z, states["disc"], rates.lr_d, step)
    adv_g = _generator_phase(G, D, z, cfg.weight_adv, states["gen"], rates.lr_g, step)
    distance = reenc.item()
    return LossReport(
        adv_d=adv_d,
        adv_g=adv_g,
        recon_or_reenc=distance,
        total_weighted=cfg.weight_adv * adv_g + alpha * distance,
        alpha=alpha,
    )


def gan_step(
    G: Network,
    D: Network,
    x_batch: np.ndarray | Tensor,
    z_batch: np.ndarray | Tensor,
    cfg: TrainConfig,
    states: dict[str, AdamState],
    rates: StepRates,
    step: int = 0,
) -> LossReport:
    """D update then G update; no distance term"""
    x, z = as_tensor(x_batch), as_tensor(z_batch)
    reset_graph()
    adv_d = _discriminator_phase(G, D, x, z, states["disc"], rates.lr_d, step)
    adv_g = _generator_phase(G, D, z, cfg.weight_adv, states["gen"], rates.lr_g, step)
    return LossReport(
        adv_d=adv_d,
        adv_g=adv_g,
        recon_or_reenc=0.0,
        total_weighted=cfg.weight_adv * adv_g,
        alpha=0.0,
    )


def aae_step(
    G: Network,
    E: Network,
    D_latent: Network,
    x_batch: np.ndarray | Tensor,
    z_batch: np.ndarray | Tensor,
    cfg: TrainConfig,
    states: dict[str, AdamState],
    alpha: float,
    rates: StepRates,
    step: int = 0,
) -> LossReport:
    """Reconstruction on (G, E), latent D on prior vs codes, then E fools D"""
    x, z = as_tensor(x_batch), as_tensor(z_batch)
    reset_graph()

    with _phase("recon", step, D_latent):
        recon = reconstruction_loss(x, G(E(x)), cfg.loss_norm)
        _apply("recon", ops.mul(as_tensor(alpha), recon), [(G, rates.lr_g), (E, rates.lr_e)], states["recon"], step)

    with _phase("latent_disc", step, E):
        adv_d_t = discriminator_value(D_latent(z), D_latent(E(x)))
        _apply("latent_disc", ops.negate(adv_d_t), [(D_latent, rates.lr_d)], states["latent_disc"], step)

    with _phase("encoder_adv", step, D_latent):
        adv_g_t = nonsaturating_loss(D_latent(E(x)))
        _apply(
            "encoder_adv",
            ops.mul(as_tensor(cfg.weight_adv), adv_g_t),
            [(E, rates.lr_e)],
            states["encoder_adv"],
            step,
        )

    distance, adv_g = recon.item(), adv_g_t.item()
    return LossReport(
        adv_d=adv_d_t.item(),
        adv_g=adv_g,
        recon_or_reenc=distance,
        total_weighted=cfg.weight_adv * adv_g + alpha * distance,
        alpha=alpha,
    )


def bigan_step(
    G: Network,
    E: Network,
    D_joint: Network,
    x_batch: np.ndarray | Tensor,
    z_batch: np.ndarray | Tensor,
    cfg: TrainConfig,
    states: dict[str, AdamState],
    rates: StepRates,
    step: int = 0,
) -> LossReport:
    """Joint D update, then G and E on flipped labels; re-encoding is reported only"""
    x, z = as_tensor(x_batch), as_tensor(z_batch)
    reset_graph()

    with _phase("joint_disc", step, G, E):
        adv_d_t = discriminator_value(D_joint(joint_pair(E(x), x)), D_joint(joint_pair(z, G(z))))
        _apply("joint_disc", ops.negate(adv_d_t), [(D_joint, rates.lr_d)], states["joint_disc"], step)

    with _phase("gen_enc", step, D_joint):
        flipped = bigan_flipped_loss(D_joint(joint_pair(E(x), x)), D_joint(joint_pair(z, G(z))))
        _apply(
            "gen_enc",
            ops.mul(as_tensor(cfg.weight_adv), flipped),
            [(G, rates.lr_g), (E, rates.lr_e)],
            states["gen_enc"],
            step,
        )

    with no_grad():
        diagnostic = reencoding_loss(z, E(G(z)), cfg.loss_norm).item()
    adv_g = flipped.item()
    return LossReport(
        adv_d=adv_d_t.item(),
        adv_g=adv_g,
        recon_or_reenc=diagnostic,
        total_weighted=cfg.weight_adv * adv_g,
        alpha=0.0,
    )


def build_networks(objective: Objective, spec: ModelSpec, rng: Rng) -> dict[str, Network]:
    """G, E and the objective's discriminator, initialized in that order"""
    G = build_generator(spec, rng)
    E = build_encoder(spec, rng)
    if objective == Objective.AAE:
        D = build_latent_discriminator(spec, rng)
    elif objective == Objective.BIGAN:
        D = build_joint_discriminator(spec, rng)
    else:
        D = build_discriminator(spec, rng)
    return {G.name: G, E.name: E, D.name: D}


class Trainer:
    """One seed-deterministic training run.

    The seed feeds three derived streams: `init` for parameters, `data` for
    synthetic datasets and `run` for shuffling and latent draws. Only the
    `run` stream advances during training and it is stored in checkpoints.
    """

    def __init__(self, cfg: TrainConfig, dataset: Optional[Dataset] = None, config_text: str = ""):
        self.logger = get_logger("trainer")
        self.cfg = cfg
        self.config_text = config_text
        root = Rng(cfg.seed)
        self.rng = root.derive("run")
        self.dataset = dataset if dataset is not None else make_dataset(cfg.dataset, root.derive("data"))

        try:
            self.spec = cfg.model_spec(self.dataset.sample_shape)
            self.networks = build_networks(cfg.objective, self.spec, root.derive("init"))
        except (SpecError, ValidationError) as e:
            raise ConfigError(f"model does not fit dataset of shape {self.dataset.sample_shape}: {e}") from e

        self.G, self.E, self.D = list(self.networks.values())
        self.states = new_states(cfg.objective)
        self.step = 0
        self.result = TrainResult()

    def rates(self, epoch: int) -> StepRates:
        counter = self.step if self.cfg.decay_mode == DecayMode.STEP else epoch
        return StepRates(
            lr_g=decayed_lr(self.cfg.lr_g, self.cfg.decay, counter),
            lr_d=decayed_lr(self.cfg.lr_d, self.cfg.decay, counter),
            lr_e=decayed_lr(self.cfg.effective_lr_e, self.cfg.decay, counter),
        )

    def train_step(self, x_batch: np.ndarray, epoch: int, alpha: float) -> LossReport:
        cfg = self.cfg
        z_batch = sample_unit_sphere_batch(len(x_batch), self.spec.latent_dim, self.rng)
        rates = self.rates(epoch)
        if cfg.objective == Objective.FAAE:
            report = faae_step(self.G, self.E, self.D, x_batch, z_batch, cfg, self.states, alpha, rates, self.step)
        elif cfg.objective == Objective.GAN:
            report = gan_step(self.G, self.D, x_batch, z_batch, cfg, self.states, rates, self.step)
        elif cfg.objective == Objective.AAE:
            report = aae_step(self.G, self.E, self.D, x_batch, z_batch, cfg, self.states, alpha, rates, self.step)
        else:
            report = bigan_step(self.G, self.E, self.D, x_batch, z_batch, cfg, self.states, rates, self.step)

        self.result.trace.append(
            StepRecord(
                step=self.step,
                epoch=epoch,
                adv_d=report.adv_d,
                adv_g=report.adv_g,
                recon_or_reenc=report.recon_or_reenc,
                alpha=report.alpha,
                lr_g_t=rates.lr_g,
                lr_d_t=rates.lr_d,
            )
        )
        self.logger.debug(
            f"step {self.step}: adv_d={report.adv_d:.4f} adv_g={report.adv_g:.4f} "
            f"dist={report.recon_or_reenc:.5f} alpha={report.alpha:g}"
        )
        self.step += 1
        return report

    def run(self, on_epoch: Optional[Callable[[EpochRecord], None]] = None) -> TrainResult:
        cfg = self.cfg
        for net in self.networks.values():
            net.train()
        self.logger.info(
            f"Training {cfg.objective.value} on {cfg.dataset.kind.value} ({len(self.dataset)} samples, "
            f"{self.dataset.num_batches(cfg.batch_size)} batches/epoch) for {cfg.epochs} epochs"
        )

        previous_alpha: Optional[float] = None
        for epoch in range(cfg.epochs):
            alpha = cfg.alpha_at(epoch)
            if previous_alpha is not None and alpha != previous_alpha:
                self.logger.info(f"Epoch {epoch}: alpha {previous_alpha:g} -> {alpha:g}")
            previous_alpha = alpha

            reports = [self.train_step(batch, epoch, alpha) for batch in self.dataset.batches(cfg.batch_size, self.rng)]
            record = EpochRecord(
                epoch=epoch,
                steps=len(reports),
                adv_d=float(np.mean([r.adv_d for r in reports])),
                adv_g=float(np.mean([r.adv_g for r in reports])),
                recon_or_reenc=float(np.mean([r.recon_or_reenc for r in reports])),
                alpha=reports[-1].alpha,
            )
            self.result.epochs.append(record)
            self.logger.info(
                f"Epoch {epoch}: adv_d={record.adv_d:.4f} adv_g={record.adv_g:.4f} "
                f"dist={record.recon_or_reenc:.5f}"
            )
            if on_epoch is not None:
                on_epoch(record)

        for net in self.networks.values():
            net.eval()
        self.logger.info(f"Training finished after {self.step} steps")
        return self.result

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(self.config_text, self.networks, self.states, self.rng)


def train(
    cfg: TrainConfig,
    dataset: Optional[Dataset] = None,
    config_text: Optional[str] = None,
) -> tuple[Checkpoint, TrainResult]:
    """Build, train and checkpoint one run"""
    if config_text is None:
        config_text = render_config(cfg)
    trainer = Trainer(cfg, dataset, config_text)
    result = trainer.run()
    return trainer.checkpoint(), result
