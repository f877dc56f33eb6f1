"""Level-set image segmentation with simultaneous bias field correction."""

from . import errors
from .evolve import DT2_MAX, laplacian, regularize, step_four_phase, step_two_phase
from .field import (
    new_field,
    normalize_display,
    read_field_dump,
    read_pgm,
    write_field_dump,
    write_pgm,
)
from .kernel import DiskKernel, area_field, conv_disk, disk_offsets
from .model import (
    SIGMA_FLOOR,
    ModelParams,
    dirac,
    energy,
    force_fields,
    heaviside,
    memberships,
    update_bias,
    update_means,
    update_sigmas,
)
from .pipeline import (
    SegOutcome,
    SolverConfig,
    bias_correct,
    cv_reduction_force,
    cv_segment,
    init_level_set,
    segment,
    stop_check,
)
from .synthlab import (
    RNG_ID,
    Phantom,
    PhantomSpec,
    bias_similarity,
    gen_bias,
    gen_phantom,
    jaccard,
    write_phantom,
)

__all__ = [
    "errors",
    "DT2_MAX",
    "laplacian",
    "regularize",
    "step_four_phase",
    "step_two_phase",
    "new_field",
    "normalize_display",
    "read_field_dump",
    "read_pgm",
    "write_field_dump",
    "write_pgm",
    "DiskKernel",
    "area_field",
    "conv_disk",
    "disk_offsets",
    "SIGMA_FLOOR",
    "ModelParams",
    "dirac",
    "energy",
    "force_fields",
    "heaviside",
    "memberships",
    "update_bias",
    "update_means",
    "update_sigmas",
    "SegOutcome",
    "SolverConfig",
    "bias_correct",
    "cv_reduction_force",
    "cv_segment",
    "init_level_set",
    "segment",
    "stop_check",
    "RNG_ID",
    "Phantom",
    "PhantomSpec",
    "bias_similarity",
    "gen_bias",
    "gen_phantom",
    "jaccard",
    "write_phantom",
]

__version__ = "0.1.0"
