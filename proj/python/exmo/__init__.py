"""Exceptional-motion scoring for video sickness assessment.

Frames are float32 arrays in [0, 1] shaped (frames, height, width); stacks
for the network are (5, size, size).
"""

from ._exmo import (
    ArgumentError,
    DegenerateInputError,
    FormatError,
    IngestionError,
    Model,
    ShapeError,
    TrainingError,
    ValidationError,
    aggregate,
    build_model,
    classify_total,
    encoder_ladder,
    forward,
    frame_error,
    gradcheck,
    load_frames,
    load_model,
    motion_score,
    plcc,
    resize,
    run_cli,
    save_model,
    score_ssq,
    score_video,
    set_threads,
    ssq_delta,
    ssq_symptoms,
    synth,
    temporal_phases,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
