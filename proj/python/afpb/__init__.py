"""Python bindings for the afpb C++ core.

Images are numpy uint8 arrays shaped (H, W) or (H, W, 3).
"""

from ._afpb import (
    AfpbError,
    ExperimentConfig,
    Model,
    OcclusionConfig,
    binarize,
    cmc_curve,
    crop,
    detection_precision,
    evaluate,
    generate_synthetic_dataset,
    id_loss,
    jittered_center_crop,
    l2_distance,
    load_checkpoint,
    load_image,
    multi_task_loss,
    obc_loss,
    resize,
    run_ablation,
    save_image,
    scan_dataset,
    simulate_occlusion,
    softmax,
    train,
)

__all__ = [
    "AfpbError",
    "ExperimentConfig",
    "Model",
    "OcclusionConfig",
    "binarize",
    "cmc_curve",
    "crop",
    "detection_precision",
    "evaluate",
    "generate_synthetic_dataset",
    "id_loss",
    "jittered_center_crop",
    "l2_distance",
    "load_checkpoint",
    "load_image",
    "multi_task_loss",
    "obc_loss",
    "resize",
    "run_ablation",
    "save_image",
    "scan_dataset",
    "simulate_occlusion",
    "softmax",
    "train",
]
