"""Label encodings, the two-stage classifier, cross-validated evaluation and paired statistics."""

from .design import (FEATURE_SETS, ROLE_ENCODINGS, FeatureBuilder, WindowTable, role_feature_names, role_features,
                     window_table, with_roles)
from .encoding import (BinaryInterruptPair, BinaryRolePair, decode_interrupt_pair, decode_role_pair,
                       encode_interruptibility, encode_role)
from .evaluate import (EvalSettings, FoldResult, ModelEntry, UnitResult, build_units, evaluate,
                       evaluate_unit, genre_catalog, participant_scores)
from .metrics import EmptyInput, FoldAssignment, TooFewSamples, stratified_kfold, weighted_f1
from .report import Comparison, EvalReport, KeyMismatch, compare_reports, compare_scores, format_comparisons
from .seeds import derive_seed
from .stats import EffectSize, TTestResult, ZeroVariance, cohens_d, cohens_dav, cohens_dz, paired_t_test
from .twostage import (TwoStageModel, fit_two_stage, most_common_role, predict_matrix, predict_roles,
                       predict_two_stage, train_two_stage)
