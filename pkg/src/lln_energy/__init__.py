"""Energy cost of reliable TCP bulk transfer over multi-hop lossy low-power links.

Closed-form expected-bits/energy model, an independent Monte Carlo
simulator for validating it, and sweep/frontier tools for locating
energy-optimal segment sizes and FEC redundancy ratios.
"""

from .framing import (
    FrameLayout,
    LayoutError,
    ResolvedFrames,
    default_fragment_count,
    resolve_frames,
)
from .hopmodel import (
    AttemptProbs,
    HopModel,
    HopParams,
    attempt_probs,
    expected_success_bits,
    frame_error_prob,
    hop_model,
)
from .pathmodel import (
    EnergyParams,
    ModelReport,
    PathScenario,
    fragment_failure_bits,
    fragment_failure_bits_closed,
    fragment_failure_bits_variant,
    path_bits,
    path_success_prob,
    segment_model,
    uniform_path,
)

__version__ = "0.1.0"
