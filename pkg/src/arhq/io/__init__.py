"""File formats, configuration, reports, and the synthetic layer generator."""

from arhq.io.config import RunConfig, load_config, parse_config
from arhq.io.reports import report_rows, write_report
from arhq.io.synth import SynthSpec, gen_synthetic
from arhq.io.tensorfile import load_archive, load_tensor, save_archive, save_tensor

__all__ = [
    "RunConfig",
    "load_config",
    "parse_config",
    "report_rows",
    "write_report",
    "SynthSpec",
    "gen_synthetic",
    "load_archive",
    "load_tensor",
    "save_archive",
    "save_tensor",
]
