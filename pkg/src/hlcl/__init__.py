"""Contrastive node representation learning with low-pass and high-pass graph filters."""

__version__ = "0.1.0"

from .augment import AugKind, AugmentationSpec, augment, two_view_augment
from .encoder import EncoderParams, OutputMode, encode, final_embeddings, init_params, project
from .filters import FilterKind, apply_filter, build_operator, filter_iteration_study, symmetric_eigen
from .graph import CsrGraph, Labels, homophily_ratio, load_features, load_graph, load_labels, per_node_homophily
from .objective import adam_step, backward, cosine_sim, hlcl_loss, infonce_loss
from .probe import SplitSpec, linear_probe, make_split
from .synthgen import SynthSpec, generate, toy_graph
from .trainer import TrainConfig, train
