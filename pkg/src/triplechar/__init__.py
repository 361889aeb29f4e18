"""Symmetrizers, discriminant conditions and energy checks for third-order
hyperbolic operators with triple characteristics."""

__version__ = "0.1.0"

from .bezout import (BezoutSymmetrizer, CFactor, bezout_matrix, c_factor, check_symmetrizer,
                     symmetrizer_residual)
from .cubic import (CubicSymbol, QForm, SampleGrid, check_lemma_setudo, check_miki,
                    check_positivity_B, check_positivity_dtS, check_positivity_tJ,
                    classify_characteristics, condition_E, condition_H, det_S, extend_symbols,
                    from_q_form, to_q_form)
from .energy import (EnergyModel, EnergyRunConfig, EnergyTrace, ModeSystem, canonical_model,
                     example_model, integrate_mode, parameter_scan, verify_estimate_backward,
                     verify_estimate_forward, verify_keiyaku)
from .errors import (CutoffOverlapInvalid, DimensionMismatch, EmptyFilteredSet, ExpressionError,
                     NonConvergence, NotHyperbolic, RootsNotSeparated, StepSizeTooCoarse,
                     TripleCharError)
from .expr import Expression, bracket
from .poly import (MonicPolynomial, RootSet, companion, discriminant, is_hyperbolic,
                   min_root_gap, nuij_smooth, roots)
from .report import ConditionReport
