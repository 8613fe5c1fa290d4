"""Rejection-sampled universal quantization toolkit.

Vector quantizers whose error is exactly uniform over a ball (or follows
an arbitrary continuous law via the layered construction), together with
the entropy-coding layer, closed-form redundancy bounds and a Monte-Carlo
verification suite.
"""

from .bounds import (BoundsReport, ConstantsRegistry, excess_info,
                     gaussian_layered_entropy, load_registry,
                     rd_lower_max_error, rsuq_norment_ub, shannon_lb_mse,
                     zador_lb_mse)
from .coding import (FormatError, GolombCode, StreamHeader, decode_stream,
                     encode_stream, golomb_decode, golomb_encode,
                     read_vectors, write_vectors)
from .dither import DitherStream, derive_seed
from .lattices import (Lattice, LatticePoint, builtin_lattice,
                       covering_density, lattice_from_config, load_lattice,
                       nearest_point, packing_density)
from .layered import (GaussianNoise, NoiseModel,
                      acceptance_probability_given_level, lrsuq_decode,
                      lrsuq_decode_batch, lrsuq_encode, lrsuq_encode_batch)
from .mc import TestResult, TrialPlan, estimate_mse, estimate_rate
from .quantizer import (Description, RejectionCapError, RsuqConfig,
                        decode_batch, encode_batch, error_sample, rsuq_decode,
                        rsuq_encode)

__version__ = "0.1.0"

__all__ = [
    "BoundsReport", "ConstantsRegistry", "Description", "DitherStream",
    "FormatError", "GaussianNoise", "GolombCode", "Lattice", "LatticePoint",
    "NoiseModel", "RejectionCapError", "RsuqConfig", "StreamHeader",
    "TestResult", "TrialPlan", "acceptance_probability_given_level",
    "builtin_lattice", "covering_density", "decode_batch", "decode_stream",
    "derive_seed", "encode_batch", "encode_stream", "error_sample",
    "estimate_mse", "estimate_rate", "excess_info",
    "gaussian_layered_entropy", "golomb_decode", "golomb_encode",
    "lattice_from_config", "load_lattice", "load_registry", "lrsuq_decode",
    "lrsuq_decode_batch", "lrsuq_encode", "lrsuq_encode_batch",
    "nearest_point", "packing_density", "rd_lower_max_error", "read_vectors",
    "rsuq_decode", "rsuq_encode", "rsuq_norment_ub", "shannon_lb_mse",
    "write_vectors", "zador_lb_mse",
]
