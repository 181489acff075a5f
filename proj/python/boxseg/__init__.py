"""Box-supervised segmentation toolkit.

Thin wrapper over the compiled core: the mask-to-box transform and its
gradient, the box-mask BCE+Dice and scale-consistency losses, Dice/IoU
metrics, box utilities, and the synthetic blob dataset generator.
"""

from ._core import (
    back_project,
    bce_loss,
    dice_loss,
    dice_metric,
    generate_synthetic,
    infer_checkpoint,
    iou_metric,
    m2b,
    m2b_backward,
    mask_to_boxes,
    project,
    render_boxes,
    sc_loss,
    sum_loss,
    total_loss,
    total_loss_grads,
)

__all__ = [
    "back_project",
    "bce_loss",
    "dice_loss",
    "dice_metric",
    "generate_synthetic",
    "infer_checkpoint",
    "iou_metric",
    "m2b",
    "m2b_backward",
    "mask_to_boxes",
    "project",
    "render_boxes",
    "sc_loss",
    "sum_loss",
    "total_loss",
    "total_loss_grads",
]
