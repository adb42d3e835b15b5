"""Line spectral estimation from coprime sub-Nyquist samples.

Samples taken at three pairwise coprime undersampling ratios are cut into
overlapping windows; each window is a partial-Fourier measurement of the
same sparse grid spectrum, and a multitask variational Bayesian solver
recovers the shared support.
"""

__version__ = "0.1.0"

from .signal_model import LineSpectrum, SampleRecord, noise_variance_for_snr, random_spectrum, synthesize
from .sampling import CoprimeScheme, TaskSet, build_tasks, generate_indices, max_valid_window
from .sensing import SensingMatrix, build_phi, normalize_columns
from .rip import RipReport, random_partial_fourier, sample_subgram_eigs
from .vb import Hyperparams, SpectrumEstimate, VbState, extract_frequencies, run
from .baselines import MusicConfig, music_estimate, random_sampling_estimate
from .experiments import ExperimentConfig, SuccessCurve, is_success, run_monte_carlo, run_spectrum_demo

__all__ = [
    "LineSpectrum", "SampleRecord", "synthesize", "noise_variance_for_snr", "random_spectrum",
    "CoprimeScheme", "TaskSet", "generate_indices", "max_valid_window", "build_tasks",
    "SensingMatrix", "build_phi", "normalize_columns",
    "RipReport", "sample_subgram_eigs", "random_partial_fourier",
    "Hyperparams", "VbState", "SpectrumEstimate", "run", "extract_frequencies",
    "MusicConfig", "music_estimate", "random_sampling_estimate",
    "ExperimentConfig", "SuccessCurve", "is_success", "run_monte_carlo", "run_spectrum_demo",
]
