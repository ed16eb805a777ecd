from app.encoders.bi_encoder import (
    BiEncoderModel,
    LabeledPair,
    PositivePair,
    TrainConfig,
    calibrate_threshold,
)
from app.encoders.cross_encoder import (
    PRESETS,
    CrossEncoderConfig,
    CrossEncoderModel,
    CrossTrainConfig,
    preset_config,
)

__all__ = [
    "BiEncoderModel", "LabeledPair", "PositivePair", "TrainConfig", "calibrate_threshold",
    "PRESETS", "CrossEncoderConfig", "CrossEncoderModel", "CrossTrainConfig", "preset_config",
]
