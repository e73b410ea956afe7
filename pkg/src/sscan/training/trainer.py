import logging
import math
import os
import time
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel
from tqdm import tqdm

from sscan.autodiff import Tensor, mse_loss, zero_grad
from sscan.errors import TrainingDivergedError
from sscan.hsi.cube import HsiCube
from sscan.hsi.noise import NoiseSpec, gaussian_noise
from sscan.hsi.preprocessing import PatchSpec, patch_corners
from sscan.metrics.quality import MetricsReport, evaluate_pair
from sscan.network.checkpoint import save_checkpoint
from sscan.network.inference import denoise_cube
from sscan.network.model import SSCANModel
from sscan.training.adam import AdamState, adam_step, clip_grad_norm
from sscan.training.config import TrainConfig, lr_at
from sscan.utils import derive_seed

# (noisy, clean) batch, both N×B×H×W
PatchPair = Tuple[np.ndarray, np.ndarray]

TRAIN_LOG = "train.log"
BEST_CHECKPOINT = "best.ssck"
LAST_CHECKPOINT = "last.ssck"
_LOG_HEADER = "epoch,lr,mean_loss,mpsnr,mssim,sam,ergas"


class TrainReport(BaseModel):
    """
    What a training run produced.

    Attributes:
        losses (List[float]): mean batch loss of every completed epoch
        lrs (List[float]): learning rate of every completed epoch
        epoch_seconds (List[float]): wall time of every completed epoch
        evaluations (Dict[int, MetricsReport]): test-pair metrics by epoch
        best_epoch (Optional[int]): epoch of the highest test MPSNR
        best_mpsnr (Optional[float]): that MPSNR
    """
    losses: List[float] = []
    lrs: List[float] = []
    epoch_seconds: List[float] = []
    evaluations: Dict[int, MetricsReport] = {}
    best_epoch: Optional[int] = None
    best_mpsnr: Optional[float] = None

    @property
    def epochs(self) -> int:
        return len(self.losses)


def epoch_batches(train: HsiCube, config: TrainConfig, epoch: int) -> Iterator[PatchPair]:
    """
    The patch pairs of one epoch: patches_per_epoch clean patches at positions drawn with a seed
    derived from (patch_seed, epoch), split into batches of batch_size (the last batch may be
    smaller). Batches are cut and noised lazily, each with noise drawn from
    (noise_seed, epoch, batch index), so only one batch is held in memory at a time.

    Args:
        train (HsiCube): the normalized training cube
        config (TrainConfig): sampling settings
        epoch (int): the 1-based epoch

    Yields:
        PatchPair: the (noisy, clean) batches
    """
    corners = patch_corners(train, PatchSpec(patch_size=config.patch_size, count=config.patches_per_epoch,
                                             seed=derive_seed(config.patch_seed, epoch)))
    size = config.patch_size
    for index, start in enumerate(range(0, len(corners), config.batch_size)):
        clean = np.stack([train.data[:, r:r + size, c:c + size].astype(np.float64)
                          for r, c in corners[start:start + config.batch_size]])
        noise = gaussian_noise(clean.shape, NoiseSpec(sigma_8bit=config.sigma,
                                                      seed=derive_seed(config.noise_seed, epoch, index)))
        yield clean + noise, clean


def train_step(model: SSCANModel, noisy: np.ndarray, clean: np.ndarray, state: AdamState, lr: float,
               clip_norm: Optional[float] = None) -> float:
    """
    One optimization step: zero the gradients, forward, the batch loss with N = batch size,
    backward, optional clipping, ADAM.

    Returns:
        float: the loss before the update

    :raises TrainingDivergedError: If the loss is not finite; the parameters are left untouched.
    """
    params = model.parameters()
    zero_grad(params)
    dtype = model.config.dtype
    prediction = model(Tensor(noisy.astype(dtype)))
    loss = mse_loss(prediction, Tensor(clean.astype(dtype)), n_images=noisy.shape[0])
    value = float(loss.data)
    if not math.isfinite(value):
        raise TrainingDivergedError(f"non-finite training loss {value}")
    loss.backward()
    if clip_norm is not None:
        clip_grad_norm(params, clip_norm)
    adam_step(state, params, [p.grad for p in params], lr)
    return value


def train_epoch(model: SSCANModel, batches: Iterable[PatchPair], state: AdamState, lr: float,
                clip_norm: Optional[float] = None, progress: bool = False) -> float:
    """
    Run one pass over the batches.

    Args:
        model (SSCANModel): the model, updated in place
        batches (Iterable[PatchPair]): (noisy, clean) N×B×H×W pairs
        state (AdamState): the optimizer state
        lr (float): the learning rate
        clip_norm (Optional[float]): global gradient-norm limit
        progress (bool): show a progress bar over the batches

    Returns:
        float: the mean batch loss

    :raises TrainingDivergedError: If a batch loss is not finite.
    """
    losses = []
    for noisy, clean in tqdm(batches, desc="batches", disable=not progress, leave=False):
        losses.append(train_step(model, noisy, clean, state, lr, clip_norm))
    if not losses:
        raise ValueError("train_epoch needs at least one batch")
    return float(np.mean(losses))


def _save(model: SSCANModel, path: str) -> bool:
    try:
        save_checkpoint(model, path)
        return True
    except OSError as e:
        logging.error(f"could not write checkpoint {path}: {e}")
        return False


def _append_log(path: str, line: str) -> bool:
    try:
        with open(path, "a") as log:
            log.write(line + "\n")
        return True
    except OSError as e:
        logging.error(f"could not append to training log {path}: {e}")
        return False


def _log_line(epoch: int, lr: float, loss: float, metrics: Optional[MetricsReport]) -> str:
    line = f"{epoch},{lr:.6e},{loss:.10e}"
    if metrics is None:
        return line + ",,,,"
    return line + "," + ",".join(f"{value:.6f}" for value in (metrics.mpsnr, metrics.mssim, metrics.sam, metrics.ergas))


def fit(model: SSCANModel, train: HsiCube, test_clean: HsiCube, test_noisy: HsiCube, config: TrainConfig,
        progress: bool = False) -> TrainReport:
    """
    Train a model: every epoch draws new patches and new noise, runs train_epoch, and every
    eval_every epochs (and after the last one) denoises the fixed noisy test cube and compares it
    with the clean one. The model with the best test MPSNR is kept as best.ssck and the latest
    one as last.ssck in checkpoint_dir, next to a train.log with one line per epoch.

    Args:
        model (SSCANModel): the model, trained in place
        train (HsiCube): the normalized training cube
        test_clean (HsiCube): the normalized clean test crop
        test_noisy (HsiCube): its noisy counterpart
        config (TrainConfig): the run settings
        progress (bool): show progress bars

    Returns:
        TrainReport: losses, evaluations and the best epoch

    :raises TrainingDivergedError: If a loss becomes non-finite; last.ssck keeps the last good epoch.
    """
    for label, cube in (("training", train), ("clean test", test_clean), ("noisy test", test_noisy)):
        if cube.band_scale is None:
            logging.warning(f"the {label} cube carries no band_scale; it is assumed to be normalized")
    report = TrainReport()
    state = AdamState()
    log_path = None
    if config.checkpoint_dir is not None:
        os.makedirs(config.checkpoint_dir, exist_ok=True)
        log_path = os.path.join(config.checkpoint_dir, TRAIN_LOG)
        with open(log_path, "w") as log:
            log.write(_LOG_HEADER + "\n")

    for epoch in tqdm(range(1, config.epochs + 1), desc="epochs", disable=not progress):
        lr = lr_at(config, epoch)
        batches = epoch_batches(train, config, epoch)
        started = time.perf_counter()
        try:
            loss = train_epoch(model, batches, state, lr, config.clip_norm, progress)
        except TrainingDivergedError:
            logging.error(f"training diverged in epoch {epoch}; keeping the checkpoints of epoch {epoch - 1}")
            raise
        report.losses.append(loss)
        report.lrs.append(lr)
        report.epoch_seconds.append(time.perf_counter() - started)
        logging.info(f"epoch {epoch}/{config.epochs}: lr={lr:g} mean_loss={loss:.6e}")

        metrics = None
        if epoch % config.eval_every == 0 or epoch == config.epochs:
            denoised = denoise_cube(model, test_noisy, config.tile, config.margin)
            metrics = evaluate_pair(test_clean, denoised)
            report.evaluations[epoch] = metrics
            logging.info(f"epoch {epoch} evaluation: {metrics.format_line()}")
            if report.best_mpsnr is None or metrics.mpsnr > report.best_mpsnr:
                report.best_epoch, report.best_mpsnr = epoch, metrics.mpsnr
                if config.checkpoint_dir is not None:
                    _save(model, os.path.join(config.checkpoint_dir, BEST_CHECKPOINT))

        if config.checkpoint_dir is not None:
            _save(model, os.path.join(config.checkpoint_dir, LAST_CHECKPOINT))
            _append_log(log_path, _log_line(epoch, lr, loss, metrics))
    return report
