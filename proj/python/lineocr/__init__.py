# Copyright (C) 2026 The lineocr Authors
# SPDX-License-Identifier: Apache-2.0

"""Text line recognition with CTC-trained convolutional and recurrent models."""

from ._lineocr import (
    Charset,
    LineocrError,
    Model,
    Recognizer,
    augment,
    cer,
    ctc_loss,
    greedy_decode,
    levenshtein,
    load_checkpoint,
    render_toy_line,
    scenario_preset,
    toy_charset,
    write_toy_assets,
)

__all__ = [
    "Charset",
    "LineocrError",
    "Model",
    "Recognizer",
    "augment",
    "cer",
    "ctc_loss",
    "greedy_decode",
    "levenshtein",
    "load_checkpoint",
    "render_toy_line",
    "scenario_preset",
    "toy_charset",
    "write_toy_assets",
]
