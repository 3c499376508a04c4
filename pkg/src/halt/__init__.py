"""Post-hoc hallucination verification for retrieval-augmented generation:
dual-NLI + lexical features, calibrated linear meta-classification with
out-of-fold training, precision-constrained thresholding, and
coverage-targeted abstention."""

from .calibration import IsotonicCalibrator, PlattCalibrator, ece, fit_isotonic, fit_platt
from .corpus import (FeatureMatrix, LabeledExample, generate_synthetic,
                     load_features, load_halueval, save_features)
from .features import FeatureMask, build_feature_vector, jaccard, rouge_l, tokenize
from .models import LinearModel, compute_class_weights, decision_score, fit
from .nli import LookupBackend, NliDistribution, SyntheticBackend, load_score_table
from .oof import OofConfig, OofResult, kfold_split, run_oof
from .policy import (DecisionPolicy, confusion, optimize_threshold, pr_curve,
                     risk_coverage_curve, roc_curve, select_with_abstention)

__version__ = "0.1.0"
