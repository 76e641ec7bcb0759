"""Bayesian evidence evaluation of Bell-test event counts.

The package samples the quantum- and LHV-permissible probability sets,
classifies points into the three regions (quantum-only, both, LHV-only),
weighs the prior sample with the multinomial likelihood of observed counts,
runs constrained maximum-likelihood estimation with trigger-probability
self-calibration, and checks the prior for procedural bias.
"""

from .bhattacharyya import bhattacharyya_angle, bhattacharyya_fidelity
from .biascheck import BiasTally, run_bias_check, simulate_data
from .datasets import BUNDLED_DATASETS, DatasetBundle, load_dataset
from .evidence import EvidenceReport, posterior_contents, verdicts
from .lhv import (HiddenWeights, bell_violation, check_bounds, lhv_membership,
                  probabilities_from_weights)
from .likelihood import log_likelihood
from .mle import (GammaEstimate, MleResult, estimate_gamma, lhv_mle,
                  nosignaling_mle, qm_mle, triangle_report)
from .params import PRESETS, ExperimentParams, load_params
from .prior import (LabeledSample, PriorContents, PriorSample, build_prior,
                    content_intervals, lhv_sample, qm_sample)
from .probability import (EventCounts, ProbabilityVector, ReducedProbabilities,
                          read_counts_file, reconstruct_full,
                          reduce_probabilities, write_counts_file)
from .quantum import (DensityMatrix, mix_states, probabilities_from_state,
                      qm_membership, random_pure_state, target_state)

__version__ = "0.1.0"
