"""Macro- and micro-expression spotting with MDMD, plus interval-IoU scoring."""

from .crop import CropBox, FaceCropper, box_from_landmarks, crop_and_resize, refine_box
from .estimator import MDMDSpotter, spot
from .flow import FlowField, ReferenceFlow, get_backend, to_polar
from .ingest import (
    DatasetProfile, FrameSequence, GroundTruthInterval, LandmarkSet, builtin_profiles,
    load_frame_sequence, normalize_ground_truth, parse_annotations, parse_landmarks,
)
from .intervals import SpottedInterval, filter_runs, flags_to_runs, spot_video
from .mdmd import (
    BlockGrid, DirectionBinning, FrameFeatureSeries, compute_dbar_series, frame_feature,
    main_direction, maximal_difference, relative_difference, threshold_and_flag,
)
from .metrics import DatasetEval, VideoEval, aggregate, evaluate, interval_iou, match_video
from .synth import PlantedEvent, SynthSpec, generate

__version__ = "0.1.0"
