"""trajeval: marginal and joint evaluation of multi-agent trajectory forecasts.

Marginal metrics (ADE/FDE) score each agent's best sample independently;
joint metrics (JADE/JFDE, collision rate) score whole samples, so one
predicted future must be good for every agent at once.  The package also
provides the corresponding loss terms with analytic subgradients and a
synthetic optimization lab demonstrating why the distinction matters.
"""

from .errors import IngestError, ShapeError, TrajevalError
from .geometry import Segment, agents_collide, sample_collision_flags, segment_distance
from .ingest import (DatasetSpec, RawRecord, downsample, parse_ethucy,
                     parse_predictions, write_predictions)
from .interactions import (CATEGORIES, InteractionLabels, InteractionThresholds,
                           category_stats, classify, cr_by_category, load_thresholds,
                           write_labels_csv)
from .losses import (LossConfig, LossOutput, combined_loss, diversity,
                     general_recon, joint_recon, marginal_recon)
from .metrics import (METRIC_NAMES, AggregateReport, EvalConfig, MetricReport,
                      ade, cr_jade, cr_mean, evaluate, fde, gt_collision_rate,
                      jade, jfde, kde_nll, sequence_report)
from .toylab import (OffsetPredictor, ToyScenario, analytic_params, gen_crossing_pair,
                     gen_two_mode, generate, run_ablation, train_predictor)
from .trajdata import (Position, PredictionSet, Sequence, WindowConfig,
                       density_stats, window_sequences)

__version__ = "0.1.0"

__all__ = [
    "IngestError", "ShapeError", "TrajevalError",
    "Segment", "agents_collide", "sample_collision_flags", "segment_distance",
    "DatasetSpec", "RawRecord", "downsample", "parse_ethucy",
    "parse_predictions", "write_predictions",
    "CATEGORIES", "InteractionLabels", "InteractionThresholds",
    "category_stats", "classify", "cr_by_category", "load_thresholds",
    "write_labels_csv",
    "LossConfig", "LossOutput", "combined_loss", "diversity",
    "general_recon", "joint_recon", "marginal_recon",
    "METRIC_NAMES", "AggregateReport", "EvalConfig", "MetricReport",
    "ade", "cr_jade", "cr_mean", "evaluate", "fde", "gt_collision_rate",
    "jade", "jfde", "kde_nll", "sequence_report",
    "OffsetPredictor", "ToyScenario", "analytic_params", "gen_crossing_pair",
    "gen_two_mode", "generate", "run_ablation", "train_predictor",
    "Position", "PredictionSet", "Sequence", "WindowConfig",
    "density_stats", "window_sequences",
    "__version__",
]
