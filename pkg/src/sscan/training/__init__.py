# This is the __init__.py file for the sscan.training package

from .config import TRAIN_FIELDS, TrainConfig, lr_at
from .adam import AdamState, adam_step, clip_grad_norm
from .trainer import (BEST_CHECKPOINT, LAST_CHECKPOINT, TRAIN_LOG, PatchPair, TrainReport, epoch_batches, fit,
                      train_epoch, train_step)

__all__ = ['TrainConfig', 'TRAIN_FIELDS', 'lr_at', 'AdamState', 'adam_step', 'clip_grad_norm',
           'TrainReport', 'PatchPair', 'epoch_batches', 'train_step', 'train_epoch', 'fit',
           'TRAIN_LOG', 'BEST_CHECKPOINT', 'LAST_CHECKPOINT']
