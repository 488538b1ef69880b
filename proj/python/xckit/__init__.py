"""Explanation concentration toolkit."""

from ._xckit import (
    GridMeta,
    Model,
    XckitError,
    aupr,
    auroc,
    backprop_saliency,
    categorize,
    cross_validate,
    default_scene_spec,
    forward,
    generate_frame,
    integrated_gradients,
    iou_3d,
    iou_bev,
    ks_statistic,
    load_model,
    membership_mask,
    model_from_json,
    read_xcam,
    write_xcam,
    xc_scores,
)

__all__ = [
    "GridMeta",
    "Model",
    "XckitError",
    "aupr",
    "auroc",
    "backprop_saliency",
    "categorize",
    "cross_validate",
    "default_scene_spec",
    "forward",
    "generate_frame",
    "integrated_gradients",
    "iou_3d",
    "iou_bev",
    "ks_statistic",
    "load_model",
    "membership_mask",
    "model_from_json",
    "read_xcam",
    "write_xcam",
    "xc_scores",
]
