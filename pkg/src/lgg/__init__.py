"""Latent geometry graphs: similarity graphs over intermediate representations,
graph signal processing on them, and the graph-based losses built on top."""

__version__ = "0.1.0"

from .errors import InvalidInput, InvalidParameter, LggError, NumericalFailure
from .graph import (
    SparseGraph,
    VblParams,
    combinatorial_laplacian,
    cosine_similarity,
    degrees,
    knn_graph,
    normalized_adjacency,
    normalized_laplacian,
    similarity_matrix,
    threshold_topk,
    vbl_adjacency,
)
from .spectral import (
    Diffusion,
    Heat,
    HighPass,
    LaplacianSpectrum,
    Polynomial,
    Simoncelli,
    SpectralResponse,
    SpectralTable,
    apply_filter,
    chebyshev_apply,
    chebyshev_coefficients,
    eigendecompose,
    gft,
    igft,
    sgc_diffuse,
    vbl_lowpass,
)
from .analysis import (
    InfluenceScores,
    SmoothnessReport,
    label_smoothness,
    margin_influence,
    per_class_smoothness,
    smoothness,
    smoothness_edge_sum,
    smoothness_gap,
    smoothness_spectral,
)
from .denoise import (
    PartialLabels,
    PseudoLabelResult,
    label_certainty,
    propagate_labels,
    transfer_sgc,
    weighted_loss_combine,
)
from .losses import (
    PeerBank,
    affinity_loss,
    combined_distill_loss,
    gkd_loss,
    graph_smoothness_loss,
    peer_attention,
    peer_regularize,
    smoothness_gap_regularizer,
)
