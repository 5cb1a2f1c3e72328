"""Spread-coded binary CPM: waveform synthesis, receivers, closed-form error
rates and a reproducible Monte Carlo harness."""

__version__ = "0.1.0"

from .analytics import (bessel_i, bound_set, bounds_joint, bounds_separate, distance_scan,
                        erf_bounds_check, esn0_to_sigma, p_coherent, p_noncoherent,
                        sigma_to_esn0, symbol_distance)
from .channel import ChannelConfig, NbiConfig, add_awgn, add_nbi_qpsk, apply_phase
from .classify import (CandidateSet, ObservationWindow, coherent_classify, envelope_classify,
                       inner_product, joint_codeword_demod, noncoherent_block_demod)
from .cpm import (ComplexSignal, CpmConfig, ShapingPulse, modulate_baseband, modulate_passband,
                  phase_trajectory, shaping_pulse_eval)
from .errors import ConfigurationError, DomainError, SignalRangeError, SpreadCpmError
from .fec import BerEstimate, ConvCode, conv_encode, qpsk_modem, viterbi_decode
from .harness import ExperimentSpec, run_ber_experiment
from .psd import PsdEstimate, estimate_psd
from .spreading import Codebook, build_codebook, encode, majority_decode, majority_error_prob

__all__ = [
    "bessel_i",
    "bound_set",
    "bounds_joint",
    "bounds_separate",
    "distance_scan",
    "erf_bounds_check",
    "esn0_to_sigma",
    "p_coherent",
    "p_noncoherent",
    "sigma_to_esn0",
    "symbol_distance",
    "ChannelConfig",
    "NbiConfig",
    "add_awgn",
    "add_nbi_qpsk",
    "apply_phase",
    "CandidateSet",
    "ObservationWindow",
    "coherent_classify",
    "envelope_classify",
    "inner_product",
    "joint_codeword_demod",
    "noncoherent_block_demod",
    "ComplexSignal",
    "CpmConfig",
    "ShapingPulse",
    "modulate_baseband",
    "modulate_passband",
    "phase_trajectory",
    "shaping_pulse_eval",
    "ConfigurationError",
    "DomainError",
    "SignalRangeError",
    "SpreadCpmError",
    "BerEstimate",
    "ConvCode",
    "conv_encode",
    "qpsk_modem",
    "viterbi_decode",
    "ExperimentSpec",
    "run_ber_experiment",
    "PsdEstimate",
    "estimate_psd",
    "Codebook",
    "build_codebook",
    "encode",
    "majority_decode",
    "majority_error_prob",
]
