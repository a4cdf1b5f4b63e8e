from .core import as_matrix as as_matrix
from .core import as_vector as as_vector
from .core import best_k_split as best_k_split
from .core import holder_factor as holder_factor
from .core import l0_count as l0_count
from .core import lq_power as lq_power
from .core import lq_quasinorm as lq_quasinorm
from .core import polarization_residual as polarization_residual
from .core import spectral_norm as spectral_norm
from .core import tail_dominance as tail_dominance
from .errors import BudgetExceededError as BudgetExceededError
from .errors import DomainError as DomainError
from .errors import GuaranteeInapplicableError as GuaranteeInapplicableError
from .errors import HypothesisError as HypothesisError
from .errors import LqRecoveryError as LqRecoveryError
from .errors import NumericalFailure as NumericalFailure
from .guarantee import certify as certify
from .guarantee import compare_thresholds as compare_thresholds
from .guarantee import error_bound as error_bound
from .guarantee import error_bound_dantzig as error_bound_dantzig
from .guarantee import error_bound_l2 as error_bound_l2
from .guarantee import l1_threshold as l1_threshold
from .guarantee import lq_threshold as lq_threshold
from .harness import gen_gaussian as gen_gaussian
from .harness import gen_sparse as gen_sparse
from .harness import run_bound_audit as run_bound_audit
from .harness import run_phase as run_phase
from .lq_recovery import cli as cli
from .options import ExperimentConfig as ExperimentConfig
from .options import MatrixEnsemble as MatrixEnsemble
from .options import NoiseModel as NoiseModel
from .options import NoiseSpec as NoiseSpec
from .options import RicMode as RicMode
from .options import SignalDistribution as SignalDistribution
from .options import SolverOptions as SolverOptions
from .polytope import check_decomposition as check_decomposition
from .polytope import decompose as decompose
from .ric import RicOracle as RicOracle
from .ric import exact_ric as exact_ric
from .ric import gram_extremes as gram_extremes
from .ric import mc_ric_lower as mc_ric_lower
from .solver import irls_lq as irls_lq
from .solver import irls_lq_denoise as irls_lq_denoise
from .solver import l0_oracle as l0_oracle
from .solver import null_space_probe as null_space_probe
