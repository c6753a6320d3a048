"""Python bindings for the compaug C++ library."""

from ._core import (
    Error,
    adjust_exposure,
    alpha_composite,
    auto_sigma,
    average_precision,
    canny,
    compose,
    evaluate,
    gaussian_blur,
    gaussian_kernel,
    hflip,
    iou,
    nms,
    parse_yolo_labels,
    rotate_rgba,
    summarize,
    tight_bbox,
    train_toy,
    write_yolo_labels,
)

__all__ = [
    "Error",
    "adjust_exposure",
    "alpha_composite",
    "auto_sigma",
    "average_precision",
    "canny",
    "compose",
    "evaluate",
    "gaussian_blur",
    "gaussian_kernel",
    "hflip",
    "iou",
    "nms",
    "parse_yolo_labels",
    "rotate_rgba",
    "summarize",
    "tight_bbox",
    "train_toy",
    "write_yolo_labels",
]
