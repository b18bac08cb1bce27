"""Semi-supervised conditional GAN on synthetic tasks.

Configs are plain dicts in the JSON config schema; missing keys take their
defaults. Checkpoints are the bytes of the binary checkpoint format.
"""

import json

from . import _core
from ._core import (
    ConfigError,
    DomainError,
    Error,
    FormatError,
    InvalidArgument,
    IoError,
    NumericError,
    ShapeError,
    UnsupportedTask,
    gradcheck,
    gumbel_softmax_sample,
    mmd_rbf,
    oracle_check,
)

__all__ = [
    "ConfigError", "DomainError", "Error", "FormatError", "InvalidArgument", "IoError",
    "NumericError", "ShapeError", "UnsupportedTask",
    "default_config", "canonical_config", "train", "baseline", "evaluate", "infer",
    "sample_task", "bayes_oracle_label", "mmd_rbf", "gumbel_softmax_sample", "gradcheck",
    "oracle_check",
]


def _text(config):
    return json.dumps(config or {})


def default_config(task="a"):
    return json.loads(_core.default_config(task))


def canonical_config(config=None):
    return json.loads(_core.canonical_config(_text(config)))


def train(config=None, seed=0):
    """Train one seed; returns history (list of dicts), metrics_csv and checkpoint."""
    return _core.train(_text(config), seed)


def baseline(kind, config=None, seed=0):
    return _core.baseline(kind, _text(config), seed)


def evaluate(config, checkpoint, seed=0, passes=1, eval_seed=0):
    return _core.evaluate(_text(config), checkpoint, seed, passes, eval_seed)


def infer(config, checkpoint, labels, passes=1, seed=0, sample_seed=0):
    """One sample per condition; `labels` is a list of per-cell label lists."""
    return _core.infer(_text(config), checkpoint, labels, passes, seed, sample_seed)


def sample_task(config=None, n=1, seed=0):
    return _core.sample_task(_text(config), n, seed)


def bayes_oracle_label(config, x):
    return _core.bayes_oracle_label(_text(config), x)
