"""Phase-difference motion fields from a complex steerable pyramid.

Also provides a Horn-Schunck optical-flow baseline, the concordance
correlation coefficient, and a gamma-jitter robustness benchmark.
"""
from ._backend import active_name as backend
from .errors import (
    DimensionError,
    FormatError,
    ImageIOError,
    InsufficientSignalError,
    PhaseMotionError,
    SequenceError,
    UndefinedMetricError,
    ValidationError,
)
from .flow import FlowField, flow_magnitude_stats, horn_schunck, read_flo, write_flo
from .image import FrameSequence, read_frames, resize_bilinear, to_grayscale, write_image
from .metrics import ccc, pearson
from .perturb import GammaJitterSpec, gamma_corrupt_frame, gamma_corrupt_sequence, robustness_sweep
from .phase_motion import (
    PhaseDiffField,
    SnippetTensor,
    denoise_phase,
    estimate_translation,
    pack_snippet,
    phase_difference,
    remove_rigid_motion,
    snippet_phase_diffs,
    unpack_snippet,
)
from .pyramid import FilterBank, PyramidSpec, amplitude, build_filter_bank, decompose, phase

__version__ = "0.1.0"
