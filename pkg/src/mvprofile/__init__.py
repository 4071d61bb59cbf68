"""Multiview user representations for lifestyle-activity user profiling."""
from .corpus import Corpus, SplitAssignment, UserRecord, load_corpus, save_corpus, split_corpus
from .evaluation import EvalReport, cohens_kappa, evaluate
from .experiments import ExperimentConfig, builtin_suite, run_experiment, run_suite
from .fusion import FusionConfig, ViewRepresentation, fuse
from .graph import MentionGraph, WalkConfig, build_mention_graph, embed_graph, generate_walks
from .model import EncoderConfig, JointModel, build_joint_model
from .training import OptimizerConfig, TrainingTrace, train

__version__ = "0.1.0"
