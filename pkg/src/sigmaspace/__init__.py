"""SSIM-aligned sigma-space noise schedules for continuous-time diffusion."""
from .fit import DegradationProfile, profile, r_squared, select_phi
from .imaging import DiffusionTensor, ImageBuffer, from_diffusion, load_png, save_png, synth_corpus, to_diffusion
from .metrics import ChannelPolicy, SsimParams, ms_ssim, psnr, ssim
from .precondition import PhiStar, PreconditionCoeffs, QuarterLog, coeffs, compose_denoiser
from .sampler import GaussianOracleDenoiser, euler_rollout, heun_rollout, score_estimate
from .schedule import SigmaSchedule, corrupt, ddpm_cosine_equivalent_sigmas, edm_rho_schedule, phi_schedule
from .transforms import PHI_STAR, TransformSpec, candidate_set, parse_spec

__version__ = "0.1.0"
