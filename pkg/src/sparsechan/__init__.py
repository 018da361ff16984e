"""Sparse delay-Doppler channel estimation over Z_N with chirp probes and a sparse FFT."""
from .errors import *  # noqa: F401,F403
from .zn import (Line, Point2, ZMod, are_transversal, line_span, mod_inverse,
                 random_transversal_lines, triple_incidence)
from .signals import (ambiguity_full_oracle, ambiguity_on_line, ambiguity_point,
                      apply_shift, basis_signal, dft, discrete_gaussian, idft)
from .channel import NoiseSpec, TargetSet, add_noise, apply_channel, sample_targets
from .analog import AnalogParams, a_to_d, d_to_a, narrowband_residual, verify_shift_intertwining
from .sfft import (FilterSpec, Sampler, SfftConfig, SpectralPermutation, bit_by_bit,
                   filter_bank_apply, gaussian_filter, sfft, threshold_estimate)
from .estimators import (EstimationReport, ProbeSignal, ambiguity_peaks_via_sfft,
                         incidence_estimate, pseudorandom_estimate, sce_config, sce_estimate)
from .bench import CampaignResult, TrialConfig, complexity_sweep, run_trials

__version__ = "0.1.0"
