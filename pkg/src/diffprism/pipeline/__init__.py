"""End-to-end orchestration: generation, evaluation, studies and reports."""

from .config import BackendConfig, EvalConfig, JobConfig, build_backend, load_job_config, write_config_echo
from .manifest import Manifest, ManifestRecord, ManifestWriter, SampleSeeds, read_manifest
from .generate import generate_dataset, generate_sample, sample_seeds
from .evaluate import evaluate_manifest, evaluate_records
from .studies import (
    AblationReport,
    NoiseStudyReport,
    SweepReport,
    load_report,
    run_ablation,
    run_noise_sweep,
    run_noise_type_study,
    save_report,
)
from .report import emit_report

__all__ = [
    "AblationReport",
    "BackendConfig",
    "EvalConfig",
    "JobConfig",
    "Manifest",
    "ManifestRecord",
    "ManifestWriter",
    "NoiseStudyReport",
    "SampleSeeds",
    "SweepReport",
    "build_backend",
    "emit_report",
    "evaluate_manifest",
    "evaluate_records",
    "generate_dataset",
    "generate_sample",
    "load_job_config",
    "load_report",
    "read_manifest",
    "run_ablation",
    "run_noise_sweep",
    "run_noise_type_study",
    "sample_seeds",
    "save_report",
    "write_config_echo",
]
