"""Adaptive greedy rejection sampling for channel simulation."""
from .bbq import MessageRegister, RationalWindow, bbq_decode, bbq_encode
from .codec import (CodecConfig, EncodedSample, ReferenceChain, build_reference_chain,
                    choose_offset, decode, dq_candidate, encode)
from .codes import decode_elias_delta, elias_delta
from .discrete import DiscretePair
from .errors import *  # noqa: F401,F403
from .gaussian import (GaussianChannelSpec, GaussianPair, expected_runtime_given_mu,
                       mean_runtime_over_prior, optimal_overdispersion)
from .rng import SharedRandomness
from .sampler import (GRS, SamplerConfig, SamplerTrace, TightBounds, acceptance_prob,
                      agrs_sample, agrs_sample_recursive, enumerate_acceptance, step_levels)
from .specfun import noncentral_chisq_cdf, std_normal_cdf, std_normal_quantile

__version__ = "0.1.0"
