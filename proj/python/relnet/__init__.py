from ._relnet import (
    RelationModule,
    embed_geom,
    evaluate_scenes,
    flop_count,
    generate_scenes,
    iou,
    nms,
    param_count,
    rel_geom,
    sinusoid_embed,
    soft_nms,
    __version__,
)

__all__ = [
    "RelationModule",
    "embed_geom",
    "evaluate_scenes",
    "flop_count",
    "generate_scenes",
    "iou",
    "nms",
    "param_count",
    "rel_geom",
    "sinusoid_embed",
    "soft_nms",
    "__version__",
]
