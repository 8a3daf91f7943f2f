"""Gradient attribution toolkit for a self-contained CNN classifier.

Saliency methods (Grad-CAM, Grad-CAM plus, Integrated Gradients,
RSI Grad-CAM) parameterized by the score they differentiate (pre-softmax,
post-softmax, log-softmax), on top of a minimal tape autodiff engine, with
an executable check suite for every gradient identity the score choice
question rests on.
"""

from .attribution import (AttributionConfig, Method, SaliencyMap, attribute,
                          compare_maps, grad_cam, grad_cam_plus,
                          integrated_gradients, rsi_grad_cam, upsample)
from .checks import CheckReport, run_all_checks
from .data import SyntheticSample, gen_dataset, gen_sample
from .engine import Tape, finite_diff
from .model import CAM_LAYER, Model, load_model, toy_cnn
from .scores import (ScoreKind, cross_entropy, log_softmax, loss_grad_logits,
                     loss_grad_wrt_y, score_scalar, softmax, softmax_jacobian)
from .train import TrainingDiverged, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "AttributionConfig", "CAM_LAYER", "CheckReport", "Method", "Model",
    "SaliencyMap", "ScoreKind", "SyntheticSample", "Tape", "TrainingDiverged",
    "attribute", "compare_maps", "cross_entropy", "evaluate", "finite_diff",
    "gen_dataset", "gen_sample", "grad_cam", "grad_cam_plus",
    "integrated_gradients", "load_model", "log_softmax", "loss_grad_logits",
    "loss_grad_wrt_y", "rsi_grad_cam", "run_all_checks", "score_scalar",
    "softmax", "softmax_jacobian", "toy_cnn", "train", "upsample",
]
