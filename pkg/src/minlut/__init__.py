"""Design, analysis and simulation of min-LUT decoders for regular LDPC codes."""

from .channel import LlrQuantizer, channel_pmf, design_llr_quantizer, sigma_to_snr, snr_to_sigma
from .decoder import DecodeResult, compile_spec, decode_min_lut, decode_minsum
from .density_evolution import (
    DecoderSpec,
    DesignParams,
    design_decoder,
    find_threshold,
    run_de,
)
from .mi_quantizer import ConditionalPmf, Lut, mutual_information, optimal_quantizer
from .specfile import read_spec, write_spec
from .tanner import TannerGraph, generate_regular, read_alist, write_alist
from .trees import REFERENCE_TREES, LutTree, cumulative_depth, is_refinement, parse_tree

__version__ = "0.1.0"
