"""turbrestore: restore a single sharp image from a turbulence-distorted frame sequence.

The pipeline runs four stages: sharpness-based frame selection, optical-flow
registration against a temporal-mean reference, region-based fusion in the
dual-tree complex wavelet domain, and a final artifact-removal pass. A seeded
turbulence simulator provides ground truth for end-to-end verification.
"""

from turbrestore.frames import Frame, FrameSequence, MetricReport, load_sequence, psnr, save_frame, ssim
from turbrestore.sharpness import SharpnessSeries, select_frames, sharpness, sharpness_series
from turbrestore.flow import FlowField, FlowParams, estimate_flow, reference_frame, register_sequence, warp
from turbrestore.dtcwt import DtcwtPyramid, FilterBank, forward, inverse, load_filter_bank
from turbrestore.fusion import FusionConfig, fuse_frames, fuse_sequence
from turbrestore.deartifact import DeartifactConfig, deartifact, shrinkage_strength
from turbrestore.simulate import TurbulenceParams, degrade, text_card
from turbrestore.pipeline import PipelineConfig, RunReport, analyze, restore, run_batch

__version__ = "0.1.0"

__all__ = [
    "Frame", "FrameSequence", "MetricReport", "load_sequence", "save_frame", "psnr", "ssim",
    "SharpnessSeries", "sharpness", "sharpness_series", "select_frames",
    "FlowField", "FlowParams", "reference_frame", "estimate_flow", "warp", "register_sequence",
    "FilterBank", "DtcwtPyramid", "load_filter_bank", "forward", "inverse",
    "FusionConfig", "fuse_sequence", "fuse_frames",
    "DeartifactConfig", "shrinkage_strength", "deartifact",
    "TurbulenceParams", "degrade", "text_card",
    "PipelineConfig", "RunReport", "analyze", "restore", "run_batch",
]
