"""Training objectives and distance terms.

Every value function returns a `LossReport` whose floats summarize the
losses and whose `terms` hold the graph-connected tensors. Logs are taken
as log(max(v, 1e-7)).
"""
from __future__ import annotations

from src.core import ops
from src.core.builders import mirror_check
from src.core.network import Network
from src.core.tensor import Tensor, as_tensor, no_grad
from src.models.base import LossNorm
from src.models.outputs import LossReport
from src.utils.errors import ContractError

LOG_FLOOR = 1e-7


def distance(a: Tensor, b: Tensor, norm: LossNorm = LossNorm.L2SQ) -> Tensor:
    """Batch mean distance between matching rows of a and b.

    l2sq: mean squared coordinate difference; l2: mean Euclidean distance
    between flattened samples; l1: mean absolute coordinate difference.
    """
    diff = ops.sub(a, b)
    if norm == LossNorm.L2SQ:
        return ops.reduce_mean(ops.square(diff))
    if norm == LossNorm.L1:
        return ops.reduce_mean(ops.absolute(diff))
    return ops.reduce_mean(ops.row_norm(ops.flatten(diff)))


def reencoding_loss(z: Tensor, z_hat: Tensor, norm: LossNorm = LossNorm.L2SQ) -> Tensor:
    """d(z, E(G(z))); with l2sq, batch mean of ||z - z_hat||^2 / n"""
    if z.shape != z_hat.shape or z.ndim != 2:
        raise ContractError(f"re-encoding needs matching (batch, n) latents, got {z.shape} and {z_hat.shape}")
    return distance(z, z_hat, norm)


def reconstruction_loss(x: Tensor, x_hat: Tensor, norm: LossNorm = LossNorm.L2SQ) -> Tensor:
    """d(x, G(E(x))); with l2sq, the per-pixel mean squared error"""
    if x.shape != x_hat.shape:
        raise ContractError(f"reconstruction needs matching shapes, got {x.shape} and {x_hat.shape}")
    return distance(x, x_hat, norm)


def _check_scores(scores: Tensor) -> None:
    if scores.size == 0:
        raise ContractError("discriminator scores for an empty batch")


def discriminator_value(d_real: Tensor, d_fake: Tensor) -> Tensor:
    """mean log D(real) + mean log(1 - D(fake)), maximized by D"""
    _check_scores(d_real)
    _check_scores(d_fake)
    return ops.add(
        ops.reduce_mean(ops.safe_log(d_real, LOG_FLOOR)),
        ops.reduce_mean(ops.safe_log(ops.sub(as_tensor(1.0), d_fake), LOG_FLOOR)),
    )


def nonsaturating_loss(d_fake: Tensor) -> Tensor:
    """-mean log D(fake), minimized by whatever produced the fakes"""
    _check_scores(d_fake)
    return ops.negate(ops.reduce_mean(ops.safe_log(d_fake, LOG_FLOOR)))


def gan_value(d_real: Tensor, d_fake: Tensor) -> tuple[Tensor, Tensor]:
    """(adv_d, adv_g) of the adversarial game"""
    return discriminator_value(d_real, d_fake), nonsaturating_loss(d_fake)


def _report(adv_d: Tensor, adv_g: Tensor, dist: Tensor, weight_adv: float, alpha: float) -> LossReport:
    total = ops.add(ops.mul(as_tensor(weight_adv), adv_g), ops.mul(as_tensor(alpha), dist))
    return LossReport(
        adv_d=adv_d.item(),
        adv_g=adv_g.item(),
        recon_or_reenc=dist.item(),
        total_weighted=total.item(),
        alpha=alpha,
        terms={"adv_d": adv_d, "adv_g": adv_g, "distance": dist, "total": total},
    )


def faae_value(
    G: Network,
    E: Network,
    D: Network,
    x: Tensor,
    z: Tensor,
    alpha: float,
    weight_adv: float = 0.1,
    norm: LossNorm = LossNorm.L2SQ,
) -> LossReport:
    """x_hat = G(z), z_hat = E(x_hat); D sees x and x_hat"""
    if not mirror_check(G, E):
        raise ContractError("generator and encoder are not mirrors")
    x_hat = G(z)
    z_hat = E(x_hat)
    adv_d, adv_g = gan_value(D(x), D(x_hat))
    return _report(adv_d, adv_g, reencoding_loss(as_tensor(z), z_hat, norm), weight_adv, alpha)


def aae_value(
    G: Network,
    E: Network,
    D_latent: Network,
    x: Tensor,
    z: Tensor,
    alpha: float,
    weight_adv: float = 0.1,
    norm: LossNorm = LossNorm.L2SQ,
) -> LossReport:
    """z_hat = E(x), x_hat = G(z_hat); the latent D separates prior draws from codes"""
    if D_latent.input_shape != E.output_shape:
        raise ContractError(f"latent discriminator expects {D_latent.input_shape}, encoder gives {E.output_shape}")
    z_hat = E(x)
    x_hat = G(z_hat)
    adv_d, adv_g = gan_value(D_latent(z), D_latent(z_hat))
    return _report(adv_d, adv_g, reconstruction_loss(as_tensor(x), x_hat, norm), weight_adv, alpha)


def joint_pair(z: Tensor, x: Tensor) -> Tensor:
    """concat(latent, flattened data) row-wise"""
    return ops.concat([as_tensor(z), ops.flatten(as_tensor(x))], axis=1)


def bigan_flipped_loss(d_real: Tensor, d_fake: Tensor) -> Tensor:
    """-mean log D(z, G(z)) - mean log(1 - D(E(x), x)), minimized by G and E"""
    return ops.add(
        nonsaturating_loss(d_fake),
        ops.negate(ops.reduce_mean(ops.safe_log(ops.sub(as_tensor(1.0), d_real), LOG_FLOOR))),
    )


def bigan_value(
    G: Network,
    E: Network,
    D_joint: Network,
    x: Tensor,
    z: Tensor,
    weight_adv: float = 0.1,
    norm: LossNorm = LossNorm.L2SQ,
) -> LossReport:
    """Joint-space game; the re-encoding term is a detached diagnostic (alpha 0)"""
    d_real = D_joint(joint_pair(E(x), x))
    d_fake = D_joint(joint_pair(z, G(z)))
    adv_d = discriminator_value(d_real, d_fake)
    adv_g = bigan_flipped_loss(d_real, d_fake)
    with no_grad():
        diagnostic = reencoding_loss(as_tensor(z), E(G(z)), norm)
    return _report(adv_d, adv_g, diagnostic, weight_adv, 0.0)
