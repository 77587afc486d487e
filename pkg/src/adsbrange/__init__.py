"""Joint range and carrier-phase estimation from collided ADS-B packets.

K uncoordinated transmitters broadcast mode-S packets that overlap at the
receiver. The superimposed baseband samples follow a 2^K-component complex
Gaussian mixture whose nonzero component means are subset sums of the
per-transmitter gains; EM recovers the means, combinatorial reordering
identifies each transmitter's gain, and free-space inversion yields range
and carrier-phase estimates. A Monte Carlo harness evaluates outage
metrics over SNR, antenna count and delay-spread configurations.
"""

from .channel import (LAMBDA_C, ConfigurationError, DroneTruth, NoiseParams,
                      ObservationWindow, dump_window, load_window, path_loss,
                      snr_to_sigma2, synthesize)
from .em import (ComponentCollapse, EmConfig, EmResult, EstimationFailure,
                 em_update, kmeanspp_init, responsibilities, run_em)
from .extract import combine_magnitudes, estimate_phase, estimate_range
from .mixture import (GaussianMixtureSpec, bernoulli_p, gm_logpdf,
                      mixture_weights, mode_vector, singleton_index,
                      singleton_indices)
from .reorder import (CapabilityError, ReorderResult, find_zero_mode,
                      remove_zero_mode, reorder_ls_constrained,
                      reorder_ls_unconstrained, reorder_modes,
                      reorder_subset_k4, reorder_weighted_k4, structure_matrix)
from .scenarios import Scenario, load_config, save_config, standard_scenario
from .waveform import (PREAMBLE, DelayedWindow, apply_delay, build_packet,
                       encode_manchester, random_payload, random_window)

__version__ = "0.1.0"
