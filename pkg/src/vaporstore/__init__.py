"""Storage of 2D optical images in a diffusing warm atomic vapor.

Forward model, visibility analysis, parameter fitting and phase-mask design
for images stored as a ground-state coherence that diffuses and decays.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    DegenerateInputError,
    DomainError,
    FormatError,
    ShapeError,
    VaporStoreError,
)
from .field import ComplexField, GridSpec, dc_component, field_from_intensity, intensity  # noqa: E402
from .propagation import (  # noqa: E402
    DiffusionKernel,
    MediumParams,
    blur_sigma,
    propagate_storage,
    propagate_storage_direct,
)
from .targets import TargetSpec, apply_region_phases, make_glyph_target, make_lines_target  # noqa: E402
from .sequence import SequenceParams, TimeTrace, group_delay, simulate_traces, stored_fraction  # noqa: E402
from .analysis import (  # noqa: E402
    FitResult,
    LineProfile,
    VisibilityCurve,
    fit_parameters,
    line_profile,
    sweep_visibility,
    visibility,
)
from .design import (  # noqa: E402
    AdjacencyGraph,
    PhaseAssignment,
    assign_phases_two_color,
    build_adjacency,
    refine_phases,
)
