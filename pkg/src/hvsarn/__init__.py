"""Graph-memory reasoning over object/frame hierarchies for locating the
video segment a sentence describes. Pure numpy, including the autodiff tape.
"""

from .data import (
    DIFFICULTIES,
    REASONER_KINDS,
    ConfigError,
    GroundTruthSegment,
    ModelConfig,
    QuerySample,
    VideoSample,
    load_dataset,
    load_sample,
    save_sample,
    synth_sample,
    write_dataset,
)
from .encoders import InputDims
from .evaluation import (
    DEFAULT_METRIC_GRID,
    STANDARD_ABLATIONS,
    MetricReport,
    ablation_config,
    ablation_report,
    evaluate_predictions,
    recall_at,
    temporal_iou,
)
from .fileio import FormatError
from .localization import SegmentPrediction
from .model import Model, build_model, predict_dataset
from .tensor import Tensor, no_grad
from .training import (
    GradcheckReport,
    TrainHyper,
    TrainState,
    TrainingDiverged,
    gradcheck,
    load_checkpoint,
    save_checkpoint,
    train,
)

__all__ = [
    "ConfigError",
    "DEFAULT_METRIC_GRID",
    "DIFFICULTIES",
    "FormatError",
    "GradcheckReport",
    "GroundTruthSegment",
    "InputDims",
    "MetricReport",
    "Model",
    "ModelConfig",
    "QuerySample",
    "REASONER_KINDS",
    "STANDARD_ABLATIONS",
    "SegmentPrediction",
    "Tensor",
    "TrainHyper",
    "TrainState",
    "TrainingDiverged",
    "VideoSample",
    "ablation_config",
    "ablation_report",
    "build_model",
    "evaluate_predictions",
    "gradcheck",
    "load_checkpoint",
    "load_dataset",
    "load_sample",
    "no_grad",
    "predict_dataset",
    "recall_at",
    "save_checkpoint",
    "save_sample",
    "synth_sample",
    "temporal_iou",
    "train",
    "write_dataset",
]

__version__ = "0.1.0"
