"""sjdbench: a desk-scale benchmark harness for whole-body motion tracking.

Reference choreographies stream through a real-time keyframe interpolator to
simulated players; executions are scored by a single-effector dance scorer
and measured with tracking, smoothness, and reliability statistics.
"""

from .bench import (
    BenchConfig,
    BenchReport,
    BenchRow,
    ValidationReport,
    default_cohort,
    graded_cohort,
    run_bench,
    run_validation_study,
)
from .errors import (
    DegenerateGeometryError,
    DegenerateInputError,
    EmptyWindowError,
    FormatError,
    StaleFrameError,
    ValidationError,
)
from .filters import DynConfig, SmoFilter, SmoFilterConfig, dyn_preprocess, smo_filter_sequence
from .geometry import Quaternion, lerp, slerp
from .metrics import (
    FallCause,
    FallConfig,
    FallRecord,
    FrameMode,
    SimilarityTransform,
    TrialMetrics,
    detect_fall,
    mpjpe,
    pa_mpjpe,
    smoothness,
    success_rate,
    umeyama_align,
)
from .motion import (
    Difficulty,
    MotionSequence,
    PoseFrame,
    Skeleton,
    read_motion_file,
    resample_sequence,
    write_motion_file,
)
from .pipeline import (
    InterpolatorConfig,
    KeyframeBuffer,
    PipelineStats,
    interpolate_span,
    push_keyframe,
    run_pipeline,
)
from .scoring import ScoreBreakdown, ScoreModel, aggregate_scores, score_trial
from .simplayer import CohortResult, PlayerProfile, cohort, simulate_execution
from .songs import make_demo_songs, write_demo_songs
from .stats import (
    ReliabilityReport,
    TrialMatrix,
    cv,
    icc_2_1,
    kendall_w,
    pearson,
)
from .streamio import (
    FrameReceiver,
    FrameSender,
    StreamReassembler,
    StreamStats,
    decode_packet,
    encode_packet,
)

__version__ = "0.1.0"
