"""Resource communities in collaborative tagging data.

Typical use::

    from folksonet import build_corpus, parse_posts, analyse, RunConfig
    posts, _ = parse_posts(open("posts.jsonl", "rb"))
    result = analyse(build_corpus(posts), RunConfig(k=2))
"""
from .clustering import (CommunityAssignment, Embedding, block_contrast, cluster, embed,
                         make_assignment, reorder_matrix, spectral_labels)
from .errors import ConfigError, ConvergenceError, FolksonetError, NumericalError, ParseError
from .ingest import Corpus, Post, TagCloud, build_corpus, parse_posts, serialize_posts
from .pipeline import RunConfig, RunResult, analyse, run
from .report import CommunityTagCloud, community_tagclouds, render_heatmap, render_report
from .similarity import (SimilarityMatrix, build_matrix, pair_similarity, power_transform,
                         strength_histogram)
from .spectral import (LaplacianMatrix, SpectralResult, build_q, count_zero_eigenvalues,
                       eigendecompose, select_k)
from .synth import PlantedSpec, ari, generate

__version__ = "0.1.0"
