"""Symbols, evaluators and norm-growth experiments for an oscillatory integral operator."""
from .errors import (DomainError, InfeasibleError, OscillaxError, PreconditionError,
                     ResolutionError)
from .experiment import (BlowupConfig, BlowupReport, BlowupRow, choose_epsilon, emit_report,
                         lower_bound, run_blowup)
from .mollifier import (MOLLIFIERS, MollifierB, Profile, RadialScale, WeightFunction,
                        diagonal_envelope, diagonal_envelope_mollifier, fast_path_log_mollifier,
                        iterated_log, iterated_log_weight, kumano_go_smooth, linear_mollifier,
                        weight_to_mollifier)
from .operator import (BoxTestFunction, GridFunction, apply_fio_direct, apply_reduced,
                       apply_to_box, find_N0, fourier_transform, inverse_fourier_transform,
                       l2_norm)
from .symbol import (CheckReport, CounterexampleSymbol, CutoffK, PhasePair, SymbolClassSpec,
                     build_counterexample_symbol, check_symbol, default_phase, make_cutoff,
                     symbol_class_check)

__version__ = "0.1.0"
