"""Progressive-mesh tokenization: half-edge meshes, edge-collapse decimation,
vertex-split token streams and a decoder that masks invalid tokens."""

from .codec import (
    CompressionReport,
    TokenStream,
    Vocabulary,
    compression_report,
    decode_pm,
    encode_pm,
    encode_pm_no_halfedge,
    read_stream,
    write_stream,
)
from .decoder import DecoderState, check_stream, decode_stream, sample_sequence
from .errors import *  # noqa: F401,F403
from .halfedge import (
    GridSpec,
    HalfEdgeMesh,
    canonical_order,
    load_obj,
    normalize_quantize,
    quantize,
    save_obj,
    validate_manifold,
)
from .metrics import chamfer, cov, jsd, mmd, one_nna, sample_points
from .progressive import ProgressiveMesh, VSplitRecord, reconstruct, vsplit_apply
from .simplify import collapse_cost, decimate_to_pm, ecol, is_collapse_valid

__version__ = "0.1.0"
