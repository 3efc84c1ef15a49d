"""Multi-crop camera geometry for human mesh recovery.

Crop generation, weak-perspective crop and full-image projection, local/full
camera conversion, the pairwise camera-consistency loss, crop-aware fusion
with relative positional encodings, and the multi-positive contrastive loss,
plus a synthetic-scene harness and a camera-refinement solver.
"""

__version__ = "0.1.0"

from .consistency import (
    ConsistencyWeights,
    all_pair_residuals,
    cam_loss,
    cam_loss_grad,
    loss_2d,
    loss_2d_grad,
    loss_3d,
    loss_3d_grad,
    pair_residuals,
)
from .crops import CropSpec, fixed_crops, make_crops, random_crops
from .encoding import encode, encode_bbox, relative
from .errors import (
    BehindCamera,
    DegenerateCamera,
    InvalidBBox,
    InvalidImage,
    InvalidSpec,
    MultiCropError,
    NotEnoughCrops,
    NotEnoughSamples,
    NumericalError,
    SchemaError,
    ShapeError,
    ValidationError,
)
from .features import (
    ContrastNet,
    FeatureSet,
    FusionNet,
    clm_project,
    contrastive_loss,
    contrastive_loss_grad,
    fuse,
    fuse_backward,
    fused_mean,
)
from .geometry import (
    BBox,
    CropIntrinsics,
    FullCamera,
    LocalCamera,
    crop_pixel_map,
    crop_tz,
    full_focal,
    full_to_local,
    local_to_full,
    project_crop,
    project_full,
)
from .gradcheck import GradCheckReport, grad_check, numerical_gradient
from .solver import SolveConfig, SolveReport, fd_validate, refine_cameras
from .synth import Scene, SceneConfig, make_scene, perturb
